use serde::{Deserialize, Serialize};

use super::{binom_log_sf, ln_to_bits, AnalysisError};

/// Random error model: each index survives with probability `p^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResilienceModel {
    pub m: u64,
    pub k: u64,
    /// Per-RV collision probability.
    pub p: f64,
}

impl ResilienceModel {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(AnalysisError::Domain(format!("P = {} outside [0, 1]", self.p)));
        }
        if self.k < 1 || self.k > self.m {
            return Err(AnalysisError::Domain(format!(
                "k = {} must satisfy 1 <= k <= m = {}",
                self.k, self.m
            )));
        }
        Ok(())
    }
}

/// `P(t >= k)` for `t ~ Bin(m, P^2)`.
pub fn resilience_prob(model: &ResilienceModel) -> Result<f64, AnalysisError> {
    model.validate()?;
    Ok(binom_log_sf(model.m, model.p * model.p, model.k)?.exp())
}

/// Bits of work to guess all `k` coefficients in `GF(p)`.
pub fn brute_force_bits(p: u32, k: u64) -> f64 {
    k as f64 * (p as f64).log2()
}

/// False-accept complexity: `-log2 P(t >= k)` with `t ~ Bin(m, p_max^2)`.
pub fn fa_bits(m: u64, k: u64, p_max: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&p_max) {
        return Err(AnalysisError::Domain(format!("P_max = {p_max} outside [0, 1]")));
    }
    Ok(ln_to_bits(binom_log_sf(m, p_max * p_max, k)?))
}

/// Largest double strictly below one.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Tag-indistinguishability advantage for a `q`-tag game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Advantage {
    pub q: u64,
    /// Per-attempt accept probability `P(t >= k)` at `p_max`.
    pub fap_per_attempt: f64,
    /// `(q - 1) * fap_per_attempt`.
    pub fap: f64,
    /// `P(t < k)` at `p_genuine`, carried through the log domain.
    pub frp: f64,
    pub adv: f64,
    pub adv_bits: f64,
    /// FRP as plain double arithmetic yields it: one minus a survival value
    /// that cannot get closer to one than the largest double below one.
    pub frp_double: f64,
    pub adv_double: f64,
    pub adv_bits_double: f64,
}

pub fn adv_ske_ind(
    m: u64,
    k: u64,
    p_max: f64,
    p_genuine: f64,
    q: u64,
) -> Result<Advantage, AnalysisError> {
    if q < 2 {
        return Err(AnalysisError::Domain(format!("q = {q} must be at least 2")));
    }
    for (name, v) in [("P_max", p_max), ("P_genuine", p_genuine)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(AnalysisError::Domain(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let others = (q - 1) as f64;
    let fap_per_attempt = binom_log_sf(m, p_max * p_max, k)?.exp();
    let fap = others * fap_per_attempt;

    let log_survival = binom_log_sf(m, p_genuine * p_genuine, k)?;
    let frp = -log_survival.exp_m1();
    let adv = (fap - frp).abs() / others;

    let frp_double = 1.0 - log_survival.exp().min(ONE_BELOW);
    let adv_double = (fap - frp_double).abs() / others;

    Ok(Advantage {
        q,
        fap_per_attempt,
        fap,
        frp,
        adv,
        adv_bits: ln_to_bits(adv.ln()),
        frp_double,
        adv_double,
        adv_bits_double: ln_to_bits(adv_double.ln()),
    })
}

pub const DEFAULT_Q_EXPONENTS: [u32; 6] = [6, 10, 20, 30, 40, 50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityInputs {
    pub m: u64,
    pub k: u64,
    pub p: u32,
    pub p_max: f64,
    pub p_genuine: f64,
    /// `log2 q` of the headline advantage figure.
    pub q_log2: u32,
    pub q_sweep_log2: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResiliencePoint {
    pub k: u64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub inputs: SecurityInputs,
    pub bf_bits: f64,
    pub fa_bits: f64,
    pub fap: f64,
    pub frp: f64,
    pub frp_double: f64,
    pub adv: f64,
    pub adv_bits: f64,
    pub adv_bits_double: f64,
    pub q_sweep: Vec<Advantage>,
    /// Retrieval success `P(t >= k)` at `p_genuine` for `k = 1..=m`.
    pub resilience: Vec<ResiliencePoint>,
}

pub fn security_report(inputs: &SecurityInputs) -> Result<SecurityReport, AnalysisError> {
    if inputs.q_log2 == 0 || inputs.q_log2 > 63 || inputs.q_sweep_log2.iter().any(|&e| e == 0 || e > 63) {
        return Err(AnalysisError::Domain("q exponents must lie in [1, 63]".into()));
    }
    let (m, k) = (inputs.m, inputs.k);
    let headline = adv_ske_ind(m, k, inputs.p_max, inputs.p_genuine, 1u64 << inputs.q_log2)?;
    let q_sweep = inputs
        .q_sweep_log2
        .iter()
        .map(|&e| adv_ske_ind(m, k, inputs.p_max, inputs.p_genuine, 1u64 << e))
        .collect::<Result<Vec<_>, _>>()?;
    let resilience = (1..=m)
        .map(|kk| {
            resilience_prob(&ResilienceModel {
                m,
                k: kk,
                p: inputs.p_genuine,
            })
            .map(|prob| ResiliencePoint { k: kk, prob })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SecurityReport {
        inputs: inputs.clone(),
        bf_bits: brute_force_bits(inputs.p, k),
        fa_bits: fa_bits(m, k, inputs.p_max)?,
        fap: headline.fap,
        frp: headline.frp,
        frp_double: headline.frp_double,
        adv: headline.adv,
        adv_bits: headline.adv_bits,
        adv_bits_double: headline.adv_bits_double,
        q_sweep,
        resilience,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub label: String,
    pub p_max: f64,
    pub reported_bits: f64,
    pub computed_bits: f64,
}

/// Comparison of computed false-accept complexities against reported ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaReferenceCheck {
    pub m: u64,
    pub k: u64,
    pub tolerance_bits: f64,
    pub entries: Vec<ReferenceEntry>,
    /// Every entry matches its own reported value.
    pub pairing_matches: bool,
    /// Sorted computed values match sorted reported values.
    pub set_matches: bool,
    /// Reported values decrease as `p_max` increases, as the formula requires.
    pub reported_monotone: bool,
    pub notes: Vec<String>,
}

/// Reference maximum imposter collision rates and false-accept bits for the
/// FVC2002/2004 subsets at `m = 1024`, `k = 54`.
pub fn fvc_reference() -> Vec<(&'static str, f64, f64)> {
    vec![
        ("FVC2002 DB1", 0.1006, 71.0),
        ("FVC2002 DB2", 0.1279, 43.0),
        ("FVC2004 DB1", 0.2047, 10.0),
        ("FVC2004 DB2", 0.1846, 5.0),
    ]
}

pub fn check_fa_reference(
    m: u64,
    k: u64,
    reference: &[(&str, f64, f64)],
    tolerance_bits: f64,
) -> Result<FaReferenceCheck, AnalysisError> {
    let entries = reference
        .iter()
        .map(|&(label, p_max, reported_bits)| {
            Ok(ReferenceEntry {
                label: label.to_string(),
                p_max,
                reported_bits,
                computed_bits: fa_bits(m, k, p_max)?,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    let pairing_matches = entries
        .iter()
        .all(|e| (e.computed_bits - e.reported_bits).abs() <= tolerance_bits);
    let mut computed: Vec<f64> = entries.iter().map(|e| e.computed_bits).collect();
    let mut reported: Vec<f64> = entries.iter().map(|e| e.reported_bits).collect();
    computed.sort_by(f64::total_cmp);
    reported.sort_by(f64::total_cmp);
    let set_matches = computed
        .iter()
        .zip(&reported)
        .all(|(c, r)| (c - r).abs() <= tolerance_bits);

    let mut by_p: Vec<&ReferenceEntry> = entries.iter().collect();
    by_p.sort_by(|a, b| a.p_max.total_cmp(&b.p_max));
    let reported_monotone = by_p.windows(2).all(|w| w[1].reported_bits <= w[0].reported_bits);

    let mut notes = Vec::new();
    for w in by_p.windows(2) {
        if w[1].reported_bits > w[0].reported_bits {
            notes.push(format!(
                "{} (P_max {}) is reported at {} bits, above {} (P_max {}) at {} bits; \
                 false-accept bits cannot increase with P_max, computed values are {:.2} and {:.2}",
                w[1].label,
                w[1].p_max,
                w[1].reported_bits,
                w[0].label,
                w[0].p_max,
                w[0].reported_bits,
                w[1].computed_bits,
                w[0].computed_bits
            ));
        }
    }
    Ok(FaReferenceCheck {
        m,
        k,
        tolerance_bits,
        entries,
        pairing_matches,
        set_matches,
        reported_monotone,
        notes,
    })
}
