//! Evaluation campaigns over populations: matching protocols, revocability,
//! unlinkability and collision-count spread.
//!
//! Every campaign is a pure function of its inputs and a `u64` seed. Nonces
//! and secrets are derived from the seed with [`derive_nonce`] and
//! [`derive_secret`], and parallel work is collected in protocol order, so
//! reruns yield identical results.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, Linkability, RateTable, ScoreSet};
use crate::dataset::{self, Comparison, DatasetError, Population, Protocol, SampleId};
use crate::field::{self, FieldPoly};
use crate::rsv::{collision_count, IomHasher, Nonce};
use crate::ske::{self, HelperData, Keyring, RvPair, SkeError, SkeParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Ske(#[from] SkeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("population dimension {pop} does not match parameter d = {params}")]
    DimensionMismatch { pop: usize, params: usize },
    #[error("invalid experiment setting: {0}")]
    Config(String),
}

/// `SHA-256("ske/derive" || seed || len(label) || label || index)`.
fn derive_bytes(seed: u64, label: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"ske/derive");
    h.update(seed.to_be_bytes());
    h.update((label.len() as u32).to_be_bytes());
    h.update(label.as_bytes());
    h.update(index.to_be_bytes());
    h.finalize().into()
}

/// First 16 bytes of the derivation digest for `(seed, label, index)`.
pub fn derive_nonce(seed: u64, label: &str, index: u64) -> Nonce {
    let digest = derive_bytes(seed, label, index);
    Nonce::from_bytes(digest[..16].try_into().expect("16 bytes"))
}

/// A distinct nonce pair `(N, N̂)` for `(label, index)`.
pub fn derive_nonce_pair(seed: u64, label: &str, index: u64) -> (Nonce, Nonce) {
    let n = derive_nonce(seed, label, 2 * index);
    let mut nhat = derive_nonce(seed, label, 2 * index + 1);
    let mut bump = 0;
    while nhat == n {
        bump += 1;
        nhat = nhat.reseed(bump);
    }
    (n, nhat)
}

/// Uniform `k`-coefficient polynomial over `GF(p)`, returned as secret bytes.
pub fn random_secret<R: Rng + ?Sized>(rng: &mut R, params: &SkeParams) -> Vec<u8> {
    let field = params.field();
    let coeffs = (0..params.k).map(|_| rng.random_range(0..params.p)).collect();
    field::decode_secret(&FieldPoly::new(field, coeffs).expect("coefficients below p"))
}

pub fn derive_secret(seed: u64, label: &str, index: u64, params: &SkeParams) -> Vec<u8> {
    random_secret(&mut ChaCha8Rng::from_seed(derive_bytes(seed, label, index)), params)
}

/// Deterministic decoding cost: one tag per index plus interpolation when
/// enough points were unlocked.
pub fn decode_work(params: &SkeParams, unlocked: usize) -> u64 {
    let tags = params.m as u64;
    if unlocked >= params.k {
        tags + field::interpolation_cost(params.k, unlocked - params.k)
    } else {
        tags
    }
}

/// Outcome of querying `helper` with `query`. Interpolation anomalies count
/// as failed recoveries.
fn attempt(query: &RvPair, helper: &HelperData, secret: &[u8]) -> Result<(usize, bool), SkeError> {
    let set = ske::unlocking_set(query, helper)?;
    let k = helper.params.k;
    if set.len() < k {
        return Ok((set.len(), false));
    }
    let recovered = match field::lagrange_interpolate(helper.params.field(), set.pairs(), k) {
        Ok(poly) => field::decode_secret(&poly) == secret,
        Err(_) => false,
    };
    Ok((set.len(), recovered))
}

fn check_dim(pop: &Population, params: &SkeParams) -> Result<(), ExperimentError> {
    if pop.dim() != params.dim {
        return Err(ExperimentError::DimensionMismatch {
            pop: pop.dim(),
            params: params.dim,
        });
    }
    Ok(())
}

fn collision_fraction(a: &RvPair, b: &RvPair) -> Result<f64, SkeError> {
    Ok(collision_count(&a.phi, &b.phi)? as f64 / a.phi.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub enroll: SampleId,
    pub query: SampleId,
    /// Size of the unlocking set.
    pub unlocked: usize,
    /// `unlocked / m`.
    pub score: f64,
    /// Fraction of indices where the two `φ` vectors agree.
    pub collision: f64,
    pub recovered: bool,
    pub decode_work: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub attempts: usize,
    pub recovered: usize,
    pub mean_score: f64,
    pub max_score: f64,
    pub max_unlocked: usize,
    pub mean_collision: f64,
    pub max_collision: f64,
    pub mean_decode_work: f64,
}

fn summarize(records: &[AttemptRecord]) -> ClassSummary {
    let n = records.len().max(1) as f64;
    let fold_max = |f: fn(&AttemptRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    ClassSummary {
        attempts: records.len(),
        recovered: records.iter().filter(|r| r.recovered).count(),
        mean_score: records.iter().map(|r| r.score).sum::<f64>() / n,
        max_score: fold_max(|r| r.score),
        max_unlocked: records.iter().map(|r| r.unlocked).max().unwrap_or(0),
        mean_collision: records.iter().map(|r| r.collision).sum::<f64>() / n,
        max_collision: fold_max(|r| r.collision),
        mean_decode_work: records.iter().map(|r| r.decode_work as f64).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub params: SkeParams,
    pub protocol: Protocol,
    pub seed: u64,
    /// Campaign nonces in hex.
    pub nonce_n: String,
    pub nonce_nhat: String,
    pub genuine: ClassSummary,
    pub imposter: ClassSummary,
    /// Computed on the `score` column.
    pub eer: f64,
    pub eer_threshold: f64,
    pub frr_at_far0: f64,
}

/// Wall-clock decoding time per attempt class; not reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeTimings {
    pub genuine_mean_secs: f64,
    pub imposter_mean_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub genuine: Vec<AttemptRecord>,
    pub imposter: Vec<AttemptRecord>,
    pub rates: RateTable,
    pub summary: EvalSummary,
    pub timings: DecodeTimings,
}

impl EvalOutcome {
    pub fn scores(&self) -> ScoreSet {
        ScoreSet {
            genuine: self.genuine.iter().map(|r| r.score).collect(),
            imposter: self.imposter.iter().map(|r| r.score).collect(),
        }
    }
}

/// Enrolls every enrollee sample under one campaign keyring and runs all
/// protocol comparisons against it.
pub fn evaluate(
    pop: &Population,
    params: &SkeParams,
    protocol: Protocol,
    seed: u64,
) -> Result<EvalOutcome, ExperimentError> {
    params.validate()?;
    check_dim(pop, params)?;
    let pairs = protocol.pairs(pop);
    let (n, nhat) = derive_nonce_pair(seed, "eval", 0);
    let keyring = Keyring::new(*params, n, nhat)?;

    let refs: Vec<&[f64]> = pop.vectors().iter().map(Vec::as_slice).collect();
    let rvs = keyring.rv_pairs(&refs)?;

    let mut enrollees: Vec<SampleId> = pairs
        .genuine
        .iter()
        .chain(&pairs.imposter)
        .map(|c| c.enroll)
        .collect();
    enrollees.sort_by_key(|id| pop.index(*id));
    enrollees.dedup();
    let helpers: HashMap<SampleId, (HelperData, Vec<u8>)> = enrollees
        .par_iter()
        .map(|&id| {
            let idx = pop.index(id);
            let secret = derive_secret(seed, "eval-secret", idx as u64, params);
            let helper = match ske::bind_rvs(&rvs[idx], &secret, params, n, nhat) {
                Err(SkeError::InsufficientDiversity { .. }) => keyring.enroll(refs[idx], &secret),
                other => other,
            }?;
            Ok((id, (helper, secret)))
        })
        .collect::<Result<_, SkeError>>()?;

    let run = |list: &[Comparison]| -> Result<(Vec<AttemptRecord>, f64), SkeError> {
        let timed = list
            .par_iter()
            .map(|c| {
                let (helper, secret) = &helpers[&c.enroll];
                let q = pop.index(c.query);
                let start = Instant::now();
                // reseeded enrollments need the query hashed under their own nonce
                let query = if helper.nonce_n == n {
                    rvs[q].clone()
                } else {
                    RvPair {
                        phi: IomHasher::new(helper.nonce_n, params.m, params.p, params.dim)?
                            .hash(refs[q])?,
                        phihat: rvs[q].phihat.clone(),
                    }
                };
                let (unlocked, recovered) = attempt(&query, helper, secret)?;
                let secs = start.elapsed().as_secs_f64();
                let record = AttemptRecord {
                    enroll: c.enroll,
                    query: c.query,
                    unlocked,
                    score: unlocked as f64 / params.m as f64,
                    collision: collision_fraction(&rvs[pop.index(c.enroll)], &rvs[q])?,
                    recovered,
                    decode_work: decode_work(params, unlocked),
                };
                Ok((record, secs))
            })
            .collect::<Result<Vec<_>, SkeError>>()?;
        let mean_secs = timed.iter().map(|t| t.1).sum::<f64>() / timed.len().max(1) as f64;
        Ok((timed.into_iter().map(|t| t.0).collect(), mean_secs))
    };
    let (genuine, genuine_secs) = run(&pairs.genuine)?;
    let (imposter, imposter_secs) = run(&pairs.imposter)?;

    let scores = ScoreSet {
        genuine: genuine.iter().map(|r| r.score).collect(),
        imposter: imposter.iter().map(|r| r.score).collect(),
    };
    let rates = analysis::compute_rates(&scores)?;
    let summary = EvalSummary {
        params: *params,
        protocol,
        seed,
        nonce_n: n.to_string(),
        nonce_nhat: nhat.to_string(),
        genuine: summarize(&genuine),
        imposter: summarize(&imposter),
        eer: rates.eer,
        eer_threshold: rates.eer_threshold,
        frr_at_far0: rates.frr_at_far0,
    };
    Ok(EvalOutcome {
        genuine,
        imposter,
        rates,
        summary,
        timings: DecodeTimings {
            genuine_mean_secs: genuine_secs,
            imposter_mean_secs: imposter_secs,
        },
    })
}

/// Scores of re-keyed templates of one sample against true imposters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevocabilityOutcome {
    pub keys: usize,
    /// `|U| / m` of one subject's template queried with the same sample
    /// hashed under a different nonce pair.
    pub pseudo_imposter: Vec<f64>,
    /// `|U| / m` of cross-subject queries under the first nonce pair.
    pub imposter: Vec<f64>,
    pub ks_distance: f64,
    /// The same comparison on raw `φ` collision fractions.
    pub pseudo_imposter_collision: Vec<f64>,
    pub imposter_collision: Vec<f64>,
    pub ks_distance_collision: f64,
}

/// Enrolls the first impression of every subject under `keys` nonce pairs.
pub fn revocability(
    pop: &Population,
    params: &SkeParams,
    keys: usize,
    seed: u64,
) -> Result<RevocabilityOutcome, ExperimentError> {
    params.validate()?;
    check_dim(pop, params)?;
    if keys < 2 {
        return Err(ExperimentError::Config("revocability needs at least 2 keys".into()));
    }
    let subjects = pop.subjects();
    let firsts: Vec<&[f64]> = (0..subjects)
        .map(|s| {
            pop.vector(SampleId {
                subject: s,
                impression: 0,
            })
        })
        .collect();
    let secrets: Vec<Vec<u8>> = (0..subjects)
        .map(|s| derive_secret(seed, "revoke-secret", s as u64, params))
        .collect();

    // rvs[j][s], helpers[j][s]
    let mut rvs: Vec<Vec<RvPair>> = Vec::with_capacity(keys);
    let mut helpers: Vec<Vec<HelperData>> = Vec::with_capacity(keys);
    for j in 0..keys {
        let (n, nhat) = derive_nonce_pair(seed, "revoke", j as u64);
        let keyring = Keyring::new(*params, n, nhat)?;
        let pairs = keyring.rv_pairs(&firsts)?;
        let bound = pairs
            .par_iter()
            .zip(&secrets)
            .map(|(rv, secret)| ske::bind_rvs(rv, secret, params, n, nhat))
            .collect::<Result<Vec<_>, _>>()?;
        rvs.push(pairs);
        helpers.push(bound);
    }
    let m = params.m as f64;

    let mut pseudo_jobs = Vec::new();
    for s in 0..subjects {
        for a in 0..keys {
            for b in a + 1..keys {
                pseudo_jobs.push((s, a, s, b));
            }
        }
    }
    let mut imposter_jobs = Vec::new();
    for s in 0..subjects {
        for t in s + 1..subjects {
            imposter_jobs.push((s, 0, t, 0));
        }
    }
    let score = |jobs: &[(usize, usize, usize, usize)]| -> Result<Vec<(f64, f64)>, SkeError> {
        jobs.par_iter()
            .map(|&(s, a, t, b)| {
                let (unlocked, _) = attempt(&rvs[b][t], &helpers[a][s], &secrets[s])?;
                Ok((unlocked as f64 / m, collision_fraction(&rvs[a][s], &rvs[b][t])?))
            })
            .collect()
    };
    let (pseudo_imposter, pseudo_imposter_collision): (Vec<f64>, Vec<f64>) =
        score(&pseudo_jobs)?.into_iter().unzip();
    let (imposter, imposter_collision): (Vec<f64>, Vec<f64>) =
        score(&imposter_jobs)?.into_iter().unzip();
    Ok(RevocabilityOutcome {
        keys,
        ks_distance: analysis::ks_distance(&pseudo_imposter, &imposter)?,
        ks_distance_collision: analysis::ks_distance(&pseudo_imposter_collision, &imposter_collision)?,
        pseudo_imposter,
        imposter,
        pseudo_imposter_collision,
        imposter_collision,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlinkabilityOutcome {
    /// Same subject, different impressions, each under its own nonce pair.
    pub mated: Vec<f64>,
    /// Different subjects, same impression index.
    pub non_mated: Vec<f64>,
    pub omega: f64,
    pub linkability: Linkability,
}

/// Every sample is enrolled under a fresh nonce pair; a link score is the
/// `|U| / m` of one template queried with the other template's vectors.
pub fn unlinkability(
    pop: &Population,
    params: &SkeParams,
    seed: u64,
    omega: f64,
    n_bins: usize,
) -> Result<UnlinkabilityOutcome, ExperimentError> {
    params.validate()?;
    check_dim(pop, params)?;
    let total = pop.subjects() * pop.impressions();
    let enrolled: Vec<(RvPair, HelperData, Vec<u8>)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let (n, nhat) = derive_nonce_pair(seed, "link", idx as u64);
            let x = &pop.vectors()[idx];
            let rv = RvPair {
                phi: IomHasher::new(n, params.m, params.p, params.dim)?.hash(x)?,
                phihat: IomHasher::new(nhat, params.m, params.p, params.dim)?.hash(x)?,
            };
            let secret = derive_secret(seed, "link-secret", idx as u64, params);
            let helper = match ske::bind_rvs(&rv, &secret, params, n, nhat) {
                Err(SkeError::InsufficientDiversity { .. }) => {
                    let helper = ske::enroll(x, &secret, params, n, nhat)?;
                    let phi = IomHasher::new(helper.nonce_n, params.m, params.p, params.dim)?.hash(x)?;
                    return Ok((RvPair { phi, phihat: rv.phihat }, helper, secret));
                }
                other => other?,
            };
            Ok((rv, helper, secret))
        })
        .collect::<Result<_, SkeError>>()?;

    let (s_count, i_count) = (pop.subjects(), pop.impressions());
    let idx = |s: usize, i: usize| s * i_count + i;
    let mut mated_jobs = Vec::new();
    let mut non_mated_jobs = Vec::new();
    for s in 0..s_count {
        for a in 0..i_count {
            for b in a + 1..i_count {
                mated_jobs.push((idx(s, a), idx(s, b)));
            }
        }
    }
    for i in 0..i_count {
        for s in 0..s_count {
            for t in s + 1..s_count {
                non_mated_jobs.push((idx(s, i), idx(t, i)));
            }
        }
    }
    let m = params.m as f64;
    let score = |jobs: &[(usize, usize)]| -> Result<Vec<f64>, SkeError> {
        jobs.par_iter()
            .map(|&(a, b)| {
                let (_, helper, secret) = &enrolled[a];
                Ok(attempt(&enrolled[b].0, helper, secret)?.0 as f64 / m)
            })
            .collect()
    };
    let mated = score(&mated_jobs)?;
    let non_mated = score(&non_mated_jobs)?;
    let linkability = analysis::linkability(
        &ScoreSet {
            genuine: mated.clone(),
            imposter: non_mated.clone(),
        },
        omega,
        n_bins,
    )?;
    Ok(UnlinkabilityOutcome {
        mated,
        non_mated,
        omega,
        linkability,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub m: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean and std of `t / m`, where `t` counts indices at which both resilient
/// vectors of a pair at cosine `cos` agree, for each prefix length in
/// `m_list` of one keyring.
pub fn match_count_spread(
    params: &SkeParams,
    cos: f64,
    pairs: usize,
    m_list: &[usize],
    seed: u64,
) -> Result<Vec<SpreadRow>, ExperimentError> {
    params.validate()?;
    if pairs < 2 || m_list.iter().any(|&m| m == 0 || m > params.m) {
        return Err(ExperimentError::Config(format!(
            "need >= 2 pairs and prefix lengths in 1..={}",
            params.m
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let (x, xp) = dataset::gen_pair(params.dim, cos, &mut rng)?;
        inputs.push(x);
        inputs.push(xp);
    }
    let (n, nhat) = derive_nonce_pair(seed, "spread", 0);
    let keyring = Keyring::new(*params, n, nhat)?;
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let rvs = keyring.rv_pairs(&refs)?;
    Ok(m_list
        .iter()
        .map(|&m| {
            let fractions: Vec<f64> = rvs
                .chunks_exact(2)
                .map(|pair| {
                    let (a, b) = (&pair[0], &pair[1]);
                    (0..m)
                        .filter(|&i| {
                            a.phi.entries()[i] == b.phi.entries()[i]
                                && a.phihat.entries()[i] == b.phihat.entries()[i]
                        })
                        .count() as f64
                        / m as f64
                })
                .collect();
            let mean = fractions.iter().sum::<f64>() / pairs as f64;
            let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>()
                / (pairs - 1) as f64;
            SpreadRow {
                m,
                mean,
                std: var.sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheck {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Per-index collision rate pooled over `φ` and `φ̂`.
    pub p_hat: f64,
    /// `P(t >= k)` for `t ~ Bin(m, p_hat^2)`.
    pub predicted: f64,
}

/// Enrolls `x` and retrieves with `x'` for fresh pairs at cosine `cos`,
/// spreading the trials over `keyrings` nonce pairs.
pub fn retrieval_model_check(
    params: &SkeParams,
    cos: f64,
    trials: usize,
    keyrings: usize,
    seed: u64,
) -> Result<ModelCheck, ExperimentError> {
    params.validate()?;
    if trials == 0 || keyrings == 0 {
        return Err(ExperimentError::Config("trials and keyrings must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut successes, mut collisions) = (0usize, 0usize);
    for j in 0..keyrings {
        let count = trials / keyrings + usize::from(j < trials % keyrings);
        let (n, nhat) = derive_nonce_pair(seed, "model", j as u64);
        let keyring = Keyring::new(*params, n, nhat)?;
        let mut inputs = Vec::with_capacity(2 * count);
        let mut secrets = Vec::with_capacity(count);
        for _ in 0..count {
            let (x, xp) = dataset::gen_pair(params.dim, cos, &mut rng)?;
            inputs.push(x);
            inputs.push(xp);
            secrets.push(random_secret(&mut rng, params));
        }
        let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
        let rvs = keyring.rv_pairs(&refs)?;
        for (pair, secret) in rvs.chunks_exact(2).zip(&secrets) {
            let (enrolled, query) = (&pair[0], &pair[1]);
            collisions += collision_count(&enrolled.phi, &query.phi).map_err(SkeError::from)?
                + collision_count(&enrolled.phihat, &query.phihat).map_err(SkeError::from)?;
            let helper = ske::bind_rvs(enrolled, secret, params, n, nhat)?;
            if attempt(query, &helper, secret)?.1 {
                successes += 1;
            }
        }
    }
    let p_hat = collisions as f64 / (2 * params.m * trials) as f64;
    let predicted = analysis::binom_log_sf(params.m as u64, p_hat * p_hat, params.k as u64)?.exp();
    Ok(ModelCheck {
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        p_hat,
        predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_population, PopulationSpec};

    fn pop(subjects: usize, impressions: usize, d: usize) -> Population {
        gen_population(&PopulationSpec {
            subjects,
            impressions,
            d,
            seed: 5,
            cos_mean: 0.95,
            cos_std: 0.01,
        })
        .unwrap()
    }

    #[test]
    fn nonce_derivation_is_stable_and_distinct() {
        let a = derive_nonce_pair(1, "eval", 0);
        assert_eq!(a, derive_nonce_pair(1, "eval", 0));
        assert_ne!(a.0, a.1);
        assert_ne!(a, derive_nonce_pair(2, "eval", 0));
        assert_ne!(a, derive_nonce_pair(1, "evam", 0));
        assert_ne!(derive_nonce(1, "ab", 0), derive_nonce(1, "a", 0));
    }

    #[test]
    fn derived_secrets_fit_the_field() {
        let params = SkeParams::new(8, 64, 251, 20, 128).unwrap();
        for i in 0..50 {
            let s = derive_secret(3, "x", i, &params);
            let poly = field::encode_secret(&s, params.k, params.field()).unwrap();
            assert_eq!(field::decode_secret(&poly), s);
        }
    }

    #[test]
    fn decode_work_grows_with_k_only_on_success() {
        let small = SkeParams::new(8, 128, 251, 8, 128).unwrap();
        let big = SkeParams::new(8, 128, 251, 32, 128).unwrap();
        assert_eq!(decode_work(&small, 3), decode_work(&big, 3));
        assert!(decode_work(&big, 40) > decode_work(&small, 40));
    }

    #[test]
    fn evaluation_separates_and_is_deterministic() {
        let p = pop(4, 3, 16);
        let params = SkeParams::new(16, 128, 251, 8, 128).unwrap();
        let a = evaluate(&p, &params, Protocol::Full, 9).unwrap();
        assert_eq!(a.genuine.len(), 12);
        assert_eq!(a.imposter.len(), 6);
        assert_eq!(a.summary.imposter.recovered, 0);
        assert!(a.summary.genuine.recovered > 0);
        assert!(a.genuine.iter().all(|r| r.recovered == (r.unlocked >= 8)));
        let b = evaluate(&p, &params, Protocol::Full, 9).unwrap();
        assert_eq!((&a.genuine, &a.imposter, &a.summary), (&b.genuine, &b.imposter, &b.summary));
        let one = evaluate(&p, &params, Protocol::OneVsOne, 9).unwrap();
        assert_eq!(one.genuine.len(), 4);
    }

    #[test]
    fn evaluation_checks_dimension() {
        let params = SkeParams::new(8, 16, 251, 4, 128).unwrap();
        assert!(matches!(
            evaluate(&pop(2, 2, 16), &params, Protocol::Full, 0),
            Err(ExperimentError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn small_revocability_and_unlinkability_runs() {
        let p = pop(5, 3, 8);
        let params = SkeParams::new(8, 64, 251, 8, 128).unwrap();
        let r = revocability(&p, &params, 3, 1).unwrap();
        assert_eq!(r.pseudo_imposter.len(), 5 * 3);
        assert_eq!(r.imposter.len(), 10);
        assert!(revocability(&p, &params, 1, 1).is_err());
        let u = unlinkability(&p, &params, 1, 1.0, 50).unwrap();
        assert_eq!(u.mated.len(), 15);
        assert_eq!(u.non_mated.len(), 30);
        assert!((0.0..=1.0).contains(&u.linkability.d_sys));
    }

    #[test]
    fn spread_prefixes() {
        let params = SkeParams::new(8, 64, 251, 8, 128).unwrap();
        let rows = match_count_spread(&params, 0.99, 20, &[16, 64], 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.mean > 0.0 && r.mean < 1.0), "{rows:?}");
        let same = match_count_spread(&params, 1.0, 5, &[64], 2).unwrap();
        assert_eq!((same[0].mean, same[0].std), (1.0, 0.0));
        assert!(match_count_spread(&params, 0.9, 20, &[65], 2).is_err());
    }

    #[test]
    fn identical_inputs_always_recover() {
        let params = SkeParams::new(8, 64, 251, 16, 128).unwrap();
        let check = retrieval_model_check(&params, 1.0, 20, 2, 0).unwrap();
        assert_eq!(check.successes, 20);
        assert_eq!(check.p_hat, 1.0);
        assert_eq!(check.predicted, 1.0);
    }
}
