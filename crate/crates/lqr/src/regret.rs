//! Regret against the per-step Riccati optimum.

use crate::{LqrError, Result};

/// Cumulative regret `R_T = sum_t (f_t(theta_t) - f_t(theta*_t))` over stable
/// steps; unstable steps are skipped (their increment is reported as 0).
/// Inputs are noise-free objective values for the queried and oracle gains.
pub fn regret(
    query_costs: &[f64],
    oracle_costs: &[f64],
    stable: &[bool],
) -> Result<(f64, Vec<f64>)> {
    if query_costs.len() != oracle_costs.len() || query_costs.len() != stable.len() {
        return Err(LqrError::Config(format!(
            "regret input lengths differ: {}/{}/{}",
            query_costs.len(),
            oracle_costs.len(),
            stable.len()
        )));
    }
    let mut total = 0.0;
    let mut per_step = Vec::with_capacity(query_costs.len());
    for i in 0..query_costs.len() {
        let inc = if stable[i] { query_costs[i] - oracle_costs[i] } else { 0.0 };
        total += inc;
        per_step.push(inc);
    }
    Ok((total, per_step))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_queries_give_zero_regret() {
        let c = [1.0, 2.0, 3.0];
        let (r, steps) = regret(&c, &c, &[true; 3]).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(steps, vec![0.0; 3]);
    }

    #[test]
    fn unstable_steps_are_skipped() {
        let q = [1.0, 2.0, 3.0];
        let o = [0.0, 0.0, 0.0];
        let (r, steps) = regret(&q, &o, &[true, false, true]).unwrap();
        assert_eq!(r, 4.0);
        assert_eq!(steps, vec![1.0, 0.0, 3.0]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(regret(&[1.0], &[1.0, 2.0], &[true]).is_err());
    }
}
