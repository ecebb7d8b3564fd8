//! Monte-Carlo view of how the normalized collision count `t/m` tightens with `m`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub m: usize,
    pub mean: f64,
    pub std: f64,
    /// `sqrt(P^2 (1 - P^2) / m)`.
    pub expected_std: f64,
}

/// Samples `t ~ Bin(m, P^2)` as `m` independent index pairs, `trials` times
/// per `m`, and reports the mean and sample std of `t/m`.
pub fn variance_vs_m(
    p: f64,
    m_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<VarianceRow>, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::Domain(format!("P = {p} outside [0, 1]")));
    }
    if m_list.is_empty() || trials < 2 || m_list.contains(&0) {
        return Err(AnalysisError::Domain(
            "need a nonempty m list, m >= 1 and trials >= 2".into(),
        ));
    }
    let q = p * p;
    Ok(m_list
        .iter()
        .map(|&m| {
            let fractions: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((m as u64) << 32) | trial as u64);
                    (0..m).filter(|_| rng.random_bool(q)).count() as f64 / m as f64
                })
                .collect();
            let mean = fractions.iter().sum::<f64>() / trials as f64;
            let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>()
                / (trials - 1) as f64;
            VarianceRow {
                m,
                mean,
                std: var.sqrt(),
                expected_std: (q * (1.0 - q) / m as f64).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_halves_per_fourfold_m() {
        let rows = variance_vs_m(0.9, &[256, 512, 1024], 4000, 1).unwrap();
        for r in &rows {
            let se = r.expected_std / (4000f64).sqrt();
            assert!((r.mean - 0.81).abs() < 3.0 * se, "{r:?}");
            assert!((r.std / r.expected_std - 1.0).abs() < 0.1, "{r:?}");
        }
        for w in rows.windows(2) {
            let ratio = w[1].std / w[0].std;
            assert!((ratio - 0.5f64.sqrt()).abs() < 0.15 * 0.5f64.sqrt(), "{ratio}");
        }
    }

    #[test]
    fn certain_collision_has_no_spread() {
        for r in variance_vs_m(1.0, &[8, 64], 10, 0).unwrap() {
            assert_eq!((r.mean, r.std), (1.0, 0.0));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = variance_vs_m(0.7, &[32], 50, 4).unwrap();
        assert_eq!(a, variance_vs_m(0.7, &[32], 50, 4).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(variance_vs_m(1.5, &[4], 10, 0).is_err());
        assert!(variance_vs_m(0.5, &[0], 10, 0).is_err());
        assert!(variance_vs_m(0.5, &[], 10, 0).is_err());
        assert!(variance_vs_m(0.5, &[4], 1, 0).is_err());
    }
}
