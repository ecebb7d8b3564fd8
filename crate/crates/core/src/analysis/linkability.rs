//! Score-based linkability over a shared histogram on `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::{AnalysisError, ScoreSet};

pub const DEFAULT_BINS: usize = 50;

/// Per-bin relative frequencies of `scores` over `n_bins` equal bins on
/// `[0, 1]`; scores outside the interval are clamped into the end bins.
pub fn histogram(scores: &[f64], n_bins: usize) -> Result<Vec<f64>, AnalysisError> {
    if scores.is_empty() {
        return Err(AnalysisError::EmptyScores);
    }
    if n_bins == 0 {
        return Err(AnalysisError::Domain("histogram needs at least one bin".into()));
    }
    let mut counts = vec![0usize; n_bins];
    for &s in scores {
        if !s.is_finite() {
            return Err(AnalysisError::Domain(format!("non-finite score {s}")));
        }
        let b = ((s.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let n = scores.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBin {
    pub lo: f64,
    pub hi: f64,
    pub p_mated: f64,
    pub p_non_mated: f64,
    /// Local linkability in `[0, 1]`.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linkability {
    pub bins: Vec<LinkBin>,
    /// `sum over bins of p_mated * d`.
    pub d_sys: f64,
}

/// Mated scores compare templates of one subject under independent keys,
/// non-mated ones compare different subjects.
///
/// `D(s) = max(0, 2 * LR(s) * omega / (1 + LR(s) * omega) - 1)` where
/// `LR = p_mated / p_non_mated` and `omega` is the prior ratio. Bins with no
/// mated mass contribute zero; an empty non-mated bin with mated mass is
/// perfectly linkable.
pub fn linkability(
    scores: &ScoreSet,
    omega: f64,
    n_bins: usize,
) -> Result<Linkability, AnalysisError> {
    scores.validate()?;
    if !(0.0..=1.0).contains(&omega) {
        return Err(AnalysisError::Domain(format!("omega = {omega} outside [0, 1]")));
    }
    if n_bins < 2 {
        return Err(AnalysisError::Domain("linkability needs at least two bins".into()));
    }
    let pm = histogram(&scores.genuine, n_bins)?;
    let pn = histogram(&scores.imposter, n_bins)?;
    let width = 1.0 / n_bins as f64;
    let mut d_sys = 0.0;
    let bins = pm
        .iter()
        .zip(&pn)
        .enumerate()
        .map(|(b, (&m, &n))| {
            let d = if m == 0.0 || omega == 0.0 {
                0.0
            } else if n == 0.0 {
                1.0
            } else {
                let lr = m / n * omega;
                (2.0 * lr / (1.0 + lr) - 1.0).max(0.0)
            };
            d_sys += m * d;
            LinkBin {
                lo: b as f64 * width,
                hi: (b + 1) as f64 * width,
                p_mated: m,
                p_non_mated: n,
                d,
            }
        })
        .collect();
    Ok(Linkability { bins, d_sys })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(g: Vec<f64>, i: Vec<f64>) -> ScoreSet {
        ScoreSet {
            genuine: g,
            imposter: i,
        }
    }

    #[test]
    fn histogram_edges() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.5, -0.2], 2).unwrap();
        assert_eq!(h, vec![0.4, 0.6]);
        assert!(histogram(&[], 5).is_err());
        assert!(histogram(&[0.1], 0).is_err());
    }

    #[test]
    fn identical_samples_are_unlinkable() {
        let s: Vec<f64> = (0..1000).map(|i| (i % 97) as f64 / 97.0).collect();
        let l = linkability(&set(s.clone(), s), 1.0, DEFAULT_BINS).unwrap();
        assert_eq!(l.d_sys, 0.0);
    }

    #[test]
    fn disjoint_samples_are_fully_linkable() {
        let l = linkability(&set(vec![0.9; 10], vec![0.1; 10]), 1.0, DEFAULT_BINS).unwrap();
        assert_eq!(l.d_sys, 1.0);
        assert!(l.bins.iter().all(|b| (0.0..=1.0).contains(&b.d)));
    }

    #[test]
    fn partial_overlap_is_between() {
        let l = linkability(&set(vec![0.5, 0.9], vec![0.5, 0.1]), 1.0, 10).unwrap();
        // shared bin: LR = 1 so D = 0; the 0.9 bin is mated-only
        assert!((l.d_sys - 0.5).abs() < 1e-12);
    }

    #[test]
    fn same_distribution_large_sample() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut draw = || (0..5000).map(|_| rng.random::<f64>().powi(2)).collect::<Vec<_>>();
        let l = linkability(&set(draw(), draw()), 1.0, DEFAULT_BINS).unwrap();
        assert!(l.d_sys < 0.05, "{}", l.d_sys);
    }

    #[test]
    fn small_prior_lowers_linkability() {
        let s = set(vec![0.5, 0.9], vec![0.5, 0.1]);
        assert_eq!(linkability(&s, 0.0, 10).unwrap().d_sys, 0.0);
        assert!(linkability(&s, 1.5, 10).is_err());
        assert!(linkability(&s, 1.0, 1).is_err());
    }
}
