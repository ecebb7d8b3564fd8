//! Binomial tails in the natural-log domain.

use statrs::function::gamma::ln_gamma;

use super::AnalysisError;

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn check(m: u64, prob: f64, k: u64) -> Result<(), AnalysisError> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(AnalysisError::Domain(format!("probability {prob} outside [0, 1]")));
    }
    if k > m + 1 {
        return Err(AnalysisError::Domain(format!("threshold {k} exceeds m + 1 = {}", m + 1)));
    }
    Ok(())
}

/// `ln P(t = j)` for `t ~ Bin(m, prob)`.
pub fn binom_log_pmf(m: u64, prob: f64, j: u64) -> f64 {
    if j > m {
        return f64::NEG_INFINITY;
    }
    if prob == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if prob == 1.0 {
        return if j == m { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_choose(m, j) + j as f64 * prob.ln() + (m - j) as f64 * (-prob).ln_1p()
}

/// `ln sum_j exp(terms_j)`, tolerant of `-inf` entries.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln(1 - exp(a))` for `a <= 0`.
pub fn log1m_exp(a: f64) -> f64 {
    if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

fn log_range(m: u64, prob: f64, lo: u64, hi_exclusive: u64) -> f64 {
    log_sum_exp((lo..hi_exclusive).map(|j| binom_log_pmf(m, prob, j)))
}

/// `ln P(t >= k)` for `t ~ Bin(m, prob)`, `0 <= k <= m + 1`.
///
/// The smaller of the two tails is summed directly and the other obtained
/// through `log1m_exp`, so values stay accurate whichever side is tiny.
pub fn binom_log_sf(m: u64, prob: f64, k: u64) -> Result<f64, AnalysisError> {
    check(m, prob, k)?;
    if k == 0 {
        return Ok(0.0);
    }
    if k == m + 1 {
        return Ok(f64::NEG_INFINITY);
    }
    let mean = m as f64 * prob;
    if k as f64 > mean {
        Ok(log_range(m, prob, k, m + 1))
    } else {
        Ok(log1m_exp(log_range(m, prob, 0, k)))
    }
}

/// `ln P(t < k)`, the complement of [`binom_log_sf`].
pub fn binom_log_cdf_below(m: u64, prob: f64, k: u64) -> Result<f64, AnalysisError> {
    check(m, prob, k)?;
    if k == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if k == m + 1 {
        return Ok(0.0);
    }
    let mean = m as f64 * prob;
    if k as f64 > mean {
        Ok(log1m_exp(log_range(m, prob, k, m + 1)))
    } else {
        Ok(log_range(m, prob, 0, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sums the probability of every outcome sequence with at least `k` ones.
    fn enumerate_sf(m: u32, prob: f64, k: u32) -> f64 {
        let mut total = 0.0;
        for mask in 0u32..(1 << m) {
            let ones = mask.count_ones();
            if ones >= k {
                total += prob.powi(ones as i32) * (1.0 - prob).powi((m - ones) as i32);
            }
        }
        total
    }

    #[test]
    fn boundaries() {
        assert_eq!(binom_log_sf(10, 0.5, 0).unwrap(), 0.0);
        assert_eq!(binom_log_sf(10, 0.5, 11).unwrap(), f64::NEG_INFINITY);
        assert_eq!(binom_log_sf(10, 0.0, 1).unwrap(), f64::NEG_INFINITY);
        assert_eq!(binom_log_sf(10, 1.0, 10).unwrap(), 0.0);
        assert!(binom_log_sf(10, 1.5, 2).is_err());
        assert!(binom_log_sf(10, -0.1, 2).is_err());
        assert!(binom_log_sf(10, f64::NAN, 2).is_err());
        assert!(binom_log_sf(10, 0.5, 12).is_err());
    }

    #[test]
    fn four_fair_coins() {
        let v = binom_log_sf(4, 0.5, 2).unwrap();
        assert!((v - (11.0f64 / 16.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn matches_enumeration() {
        for m in 0..=12u32 {
            for k in 0..=m + 1 {
                for step in 1..=9 {
                    let prob = step as f64 / 10.0;
                    let exact = enumerate_sf(m, prob, k);
                    let got = binom_log_sf(m as u64, prob, k as u64).unwrap().exp();
                    assert!((got - exact).abs() < 1e-12, "m={m} k={k} p={prob}: {got} vs {exact}");
                    let below = binom_log_cdf_below(m as u64, prob, k as u64).unwrap().exp();
                    assert!((got + below - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deep_tails_stay_finite() {
        let v = binom_log_sf(1024, 1e-4, 1024).unwrap();
        // 1024 * ln(1e-4)
        assert!((v - 1024.0 * 1e-4f64.ln()).abs() < 1e-9);
        assert!(v < -700.0 && v.is_finite());
        let lower = binom_log_cdf_below(1024, 0.5944f64.powi(2), 54).unwrap();
        assert!(lower < -250.0 && lower.is_finite());
        let upper = binom_log_sf(1024, 0.5944f64.powi(2), 54).unwrap();
        assert!(upper < 0.0 && (upper + lower.exp()).abs() < 1e-12 * lower.exp());
    }

    #[test]
    fn log1m_exp_branches() {
        for a in [-1e-5, -0.5, -0.7, -1.0] {
            let direct = (1.0 - f64::exp(a)).ln();
            assert!((log1m_exp(a) - direct).abs() <= 1e-6 * direct.abs());
        }
        // ln(1 - e^a) = -e^a - e^{2a}/2 - ...
        let a = -30.0f64;
        let series = -a.exp() - (2.0 * a).exp() / 2.0;
        assert!((log1m_exp(a) - series).abs() <= 1e-15 * series.abs());
    }
}
