use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Genuine and imposter comparison scores, higher meaning more similar.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub imposter: Vec<f64>,
}

impl ScoreSet {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.genuine.is_empty() || self.imposter.is_empty() {
            return Err(AnalysisError::EmptyScores);
        }
        if let Some(s) = self
            .genuine
            .iter()
            .chain(&self.imposter)
            .find(|s| !(0.0..=1.0).contains(*s))
        {
            return Err(AnalysisError::Domain(format!("score {s} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub threshold: f64,
    /// Share of imposter scores `>= threshold`.
    pub far: f64,
    /// Share of genuine scores `< threshold`.
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    /// Ascending thresholds; FAR is nonincreasing and FRR nondecreasing.
    pub points: Vec<RatePoint>,
    pub eer: f64,
    pub eer_threshold: f64,
    /// Smallest FRR over thresholds with FAR = 0.
    pub frr_at_far0: f64,
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Number of entries in ascending `s` strictly below `t`.
fn count_below(s: &[f64], t: f64) -> usize {
    s.partition_point(|&x| x < t)
}

/// Sweeps every distinct score plus one threshold above the maximum.
pub fn compute_rates(scores: &ScoreSet) -> Result<RateTable, AnalysisError> {
    scores.validate()?;
    let gen = sorted(&scores.genuine);
    let imp = sorted(&scores.imposter);

    let mut thresholds: Vec<f64> = gen.iter().chain(&imp).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let top = *thresholds.last().expect("non-empty");
    thresholds.push(next_up(top));

    let (ng, ni) = (gen.len() as f64, imp.len() as f64);
    let points: Vec<RatePoint> = thresholds
        .iter()
        .map(|&t| RatePoint {
            threshold: t,
            far: (imp.len() - count_below(&imp, t)) as f64 / ni,
            frr: count_below(&gen, t) as f64 / ng,
        })
        .collect();

    // FAR - FRR starts at 1 and ends at -1, so a sign change exists
    let idx = points
        .iter()
        .position(|p| p.far - p.frr <= 0.0)
        .expect("last threshold rejects everything");
    let (eer, eer_threshold) = if idx == 0 {
        let p = points[0];
        ((p.far + p.frr) / 2.0, p.threshold)
    } else {
        let (a, b) = (points[idx - 1], points[idx]);
        let (da, db) = (a.far - a.frr, b.far - b.frr);
        let w = da / (da - db);
        (
            a.far + w * (b.far - a.far),
            a.threshold + w * (b.threshold - a.threshold),
        )
    };
    let frr_at_far0 = points
        .iter()
        .find(|p| p.far == 0.0)
        .map(|p| p.frr)
        .expect("last threshold has FAR = 0");

    Ok(RateTable {
        points,
        eer,
        eer_threshold,
        frr_at_far0,
    })
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptyScores);
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(g: &[f64], i: &[f64]) -> ScoreSet {
        ScoreSet {
            genuine: g.to_vec(),
            imposter: i.to_vec(),
        }
    }

    #[test]
    fn empty_lists_error() {
        assert_eq!(compute_rates(&set(&[], &[0.1])), Err(AnalysisError::EmptyScores));
        assert_eq!(compute_rates(&set(&[0.1], &[])), Err(AnalysisError::EmptyScores));
        assert!(compute_rates(&set(&[f64::NAN], &[0.1])).is_err());
    }

    #[test]
    fn separable_scores_have_zero_eer() {
        let t = compute_rates(&set(&[0.8, 0.9, 0.95], &[0.1, 0.2, 0.3])).unwrap();
        assert_eq!(t.eer, 0.0);
        assert_eq!(t.frr_at_far0, 0.0);
        assert!(t.eer_threshold > 0.3 && t.eer_threshold <= 0.8);
    }

    #[test]
    fn identical_distributions_give_half() {
        let s: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let t = compute_rates(&set(&s, &s)).unwrap();
        assert!((t.eer - 0.5).abs() < 0.01, "{}", t.eer);
    }

    #[test]
    fn curves_are_monotone_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 0.6 + 0.3 ).collect();
        let i: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 0.5).collect();
        let t = compute_rates(&set(&g, &i)).unwrap();
        let first = t.points[0];
        let last = *t.points.last().unwrap();
        assert_eq!((first.far, first.frr), (1.0, 0.0));
        assert_eq!((last.far, last.frr), (0.0, 1.0));
        for w in t.points.windows(2) {
            assert!(w[1].threshold > w[0].threshold);
            assert!(w[1].far <= w[0].far && w[1].frr >= w[0].frr);
        }
    }

    #[test]
    fn eer_matches_fine_grid_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let g: Vec<f64> = (0..1000).map(|_| 0.35 + 0.5 * rng.random::<f64>()).collect();
            let i: Vec<f64> = (0..1000).map(|_| 0.6 * rng.random::<f64>()).collect();
            let table = compute_rates(&set(&g, &i)).unwrap();
            let steps = 10 * table.points.len();
            let (mut best_gap, mut best_eer) = (f64::INFINITY, 0.0);
            for s in 0..=steps {
                let tau = s as f64 / steps as f64;
                let far = i.iter().filter(|&&x| x >= tau).count() as f64 / 1000.0;
                let frr = g.iter().filter(|&&x| x < tau).count() as f64 / 1000.0;
                if (far - frr).abs() < best_gap {
                    best_gap = (far - frr).abs();
                    best_eer = (far + frr) / 2.0;
                }
            }
            assert!((table.eer - best_eer).abs() <= 0.001, "{} vs {best_eer}", table.eer);
        }
    }

    #[test]
    fn well_separated_binomial_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut draw = |q: f64| -> Vec<f64> {
            (0..1000)
                .map(|_| (0..100).filter(|_| rng.random_bool(q)).count() as f64 / 100.0)
                .collect()
        };
        let g = draw(0.81);
        let i = draw(0.01);
        let t = compute_rates(&set(&g, &i)).unwrap();
        assert!(t.eer < 0.001);
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_distance(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(ks_distance(&[0.0, 0.1], &[0.5, 0.6]).unwrap(), 1.0);
        assert!((ks_distance(&[0.0, 0.5], &[0.5, 1.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!(ks_distance(&[], &[1.0]).is_err());
    }
}
