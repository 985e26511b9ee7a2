//! Closed-form quantities of the vector of finite Dirichlet processes.

use hmfm::prior::{
    coskewness, correlation, elicit, log_peppf, log_psi_big, prior_k_pmf, ElicitationSpec, GfcTable,
    GroupCounts, VecFdpParams,
};

fn main() -> hmfm::Result<()> {
    let p = VecFdpParams::new(2.0, vec![0.5, 1.5])?;

    println!("log Psi(2, u=(1,1)) = {:.6}", log_psi_big(2, &[1.0, 1.0], &p)?);

    // two groups of three observations, one cluster shared
    let counts = GroupCounts::new(vec![vec![2, 1, 0], vec![1, 0, 2]])?;
    println!("log pEPPF = {:.6}", log_peppf(&counts, &p)?);

    let pmf = prior_k_pmf(&[3, 3], &p)?;
    for (k, q) in pmf.iter().enumerate().skip(1) {
        println!("P(K = {k}) = {q:.5}");
    }

    println!("corr(P1(A), P2(A)) = {:.4}", correlation(&p, 0, 1)?);
    println!("coskewness at P0(A) = 0.3: {:.4}", coskewness(&p, 0.3)?);

    let gfc = GfcTable::new(6, 0.5)?;
    println!("|C(6, 3; -0.5)| = {:.4}", gfc.ln_abs(6, 3).exp());

    let hyper = elicit(&ElicitationSpec { lambda0: 5.0, v_lambda: 5.0, gamma0: 0.5, d: 2 })?;
    println!("elicited hyperprior: {hyper:?}");
    Ok(())
}
