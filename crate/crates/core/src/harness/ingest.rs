use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{HmfmError, Result};
use crate::likelihood::{GroupedDataset, Observation};

/// Reads a grouped dataset from a CSV file; see [`parse_csv`].
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<GroupedDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_csv(file)
}

/// Parses columns `group` (1-based), `obs`, `y` and optional `x1..xr`.
///
/// Rows sharing `(group, obs)` are repeated measurements of one observation;
/// observations keep the order of their first row. Errors name the line.
pub fn parse_csv<R: Read>(reader: R) -> Result<GroupedDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (g_col, o_col, y_col) = match (col("group"), col("obs"), col("y")) {
        (Some(g), Some(o), Some(y)) => (g, o, y),
        _ => return Err(HmfmError::data(Some(1), "header must contain group, obs and y")),
    };
    let mut x_cols = Vec::new();
    while let Some(c) = col(&format!("x{}", x_cols.len() + 1)) {
        x_cols.push(c);
    }

    struct Pending {
        marks: Vec<f64>,
        x: Option<Vec<f64>>,
    }
    let mut groups: Vec<Vec<Pending>> = Vec::new();
    let mut seen: HashMap<(usize, String), usize> = HashMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| HmfmError::data(Some(line), e.to_string()))?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let group: usize = field(g_col)
            .parse()
            .ok()
            .filter(|g| *g >= 1)
            .ok_or_else(|| HmfmError::data(Some(line), format!("invalid group '{}'", field(g_col))))?;
        let y: f64 = parse_real(field(y_col), "y", line)?;
        let x = if x_cols.is_empty() {
            None
        } else {
            let mut v = Vec::with_capacity(x_cols.len());
            for (k, &c) in x_cols.iter().enumerate() {
                let cell = rec
                    .get(c)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| HmfmError::data(Some(line), format!("missing covariate x{}", k + 1)))?;
                v.push(parse_real(cell, &format!("x{}", k + 1), line)?);
            }
            Some(v)
        };
        if groups.len() < group {
            groups.resize_with(group, Vec::new);
        }
        let key = (group, field(o_col).to_string());
        match seen.get(&key) {
            Some(&i) => {
                let p = &mut groups[group - 1][i];
                if p.x != x {
                    return Err(HmfmError::data(Some(line), "covariates differ between rows of one observation"));
                }
                p.marks.push(y);
            }
            None => {
                seen.insert(key, groups[group - 1].len());
                groups[group - 1].push(Pending { marks: vec![y], x });
            }
        }
    }
    if groups.is_empty() {
        return Err(HmfmError::data(None, "no data rows"));
    }
    if let Some(j) = groups.iter().position(Vec::is_empty) {
        return Err(HmfmError::data(None, format!("group {} has no observations", j + 1)));
    }
    GroupedDataset::new(
        groups
            .into_iter()
            .map(|g| {
                g.into_iter()
                    .map(|p| Observation {
                        marks: p.marks,
                        covariates: p.x,
                    })
                    .collect()
            })
            .collect(),
    )
}

fn parse_real(s: &str, name: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| HmfmError::data(Some(line), format!("invalid {name} '{s}'")))
}

/// Writes `group,obs,y[,x1..]` with one row per mark.
pub fn write_csv<W: std::io::Write>(data: &GroupedDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["group".to_string(), "obs".into(), "y".into()];
    header.extend((1..=data.r()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (j, g) in data.groups().iter().enumerate() {
        for (i, obs) in g.iter().enumerate() {
            for y in &obs.marks {
                let mut row = vec![(j + 1).to_string(), (i + 1).to_string(), y.to_string()];
                if let Some(x) = &obs.covariates {
                    row.extend(x.iter().map(f64::to_string));
                }
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
