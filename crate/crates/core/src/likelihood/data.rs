use crate::error::{HmfmError, Result};

/// One observation: one or more repeated measurements sharing the same
/// covariate row.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub marks: Vec<f64>,
    pub covariates: Option<Vec<f64>>,
}

impl Observation {
    pub fn scalar(y: f64) -> Self {
        Observation {
            marks: vec![y],
            covariates: None,
        }
    }

    pub fn with_covariates(marks: Vec<f64>, covariates: Vec<f64>) -> Self {
        Observation {
            marks,
            covariates: Some(covariates),
        }
    }

    pub fn mean(&self) -> f64 {
        self.marks.iter().sum::<f64>() / self.marks.len() as f64
    }
}

/// Observations split into `d` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    groups: Vec<Vec<Observation>>,
    r: usize,
}

impl GroupedDataset {
    /// Checks that every observation has at least one finite mark and that
    /// covariates are either absent everywhere or of one common length.
    /// Empty groups are allowed here; samplers reject them unless running
    /// without a likelihood.
    pub fn new(groups: Vec<Vec<Observation>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(HmfmError::dimension("dataset has no groups"));
        }
        let mut r: Option<Option<usize>> = None;
        for (j, g) in groups.iter().enumerate() {
            for (i, obs) in g.iter().enumerate() {
                if obs.marks.is_empty() {
                    return Err(HmfmError::data(None, format!("group {} obs {}: no response", j + 1, i + 1)));
                }
                if obs.marks.iter().any(|y| !y.is_finite()) {
                    return Err(HmfmError::data(None, format!("group {} obs {}: non-finite response", j + 1, i + 1)));
                }
                let this = obs.covariates.as_ref().map(|x| x.len());
                match r {
                    None => r = Some(this),
                    Some(prev) if prev != this => {
                        return Err(HmfmError::dimension(format!(
                            "group {} obs {}: covariate length {:?} differs from {:?}",
                            j + 1,
                            i + 1,
                            this,
                            prev
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(GroupedDataset {
            groups,
            r: r.flatten().unwrap_or(0),
        })
    }

    /// One scalar response per observation, no covariates.
    pub fn from_scalars(groups: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            groups
                .into_iter()
                .map(|g| g.into_iter().map(Observation::scalar).collect())
                .collect(),
        )
    }

    /// Groups of the given sizes with no observations attached.
    ///
    /// Only meaningful for prior-only runs, where responses are never read.
    pub fn placeholder(sizes: &[usize]) -> Self {
        GroupedDataset {
            groups: sizes
                .iter()
                .map(|&n| vec![Observation::scalar(0.0); n])
                .collect(),
            r: 0,
        }
    }

    pub fn d(&self) -> usize {
        self.groups.len()
    }

    /// Number of covariates (0 without covariates).
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn has_covariates(&self) -> bool {
        self.r > 0
    }

    pub fn group(&self, j: usize) -> &[Observation] {
        &self.groups[j]
    }

    pub fn groups(&self) -> &[Vec<Observation>] {
        &self.groups
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn n_total(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// All marks of all observations, in group order.
    pub fn pooled_marks(&self) -> Vec<f64> {
        self.groups
            .iter()
            .flatten()
            .flat_map(|o| o.marks.iter().copied())
            .collect()
    }

    pub(crate) fn map_marks<F: Fn(usize, &Observation, f64) -> f64>(&self, f: F) -> Self {
        GroupedDataset {
            groups: self
                .groups
                .iter()
                .enumerate()
                .map(|(j, g)| {
                    g.iter()
                        .map(|o| Observation {
                            marks: o.marks.iter().map(|&y| f(j, o, y)).collect(),
                            covariates: o.covariates.clone(),
                        })
                        .collect()
                })
                .collect(),
            r: self.r,
        }
    }
}
