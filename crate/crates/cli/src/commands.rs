use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use ske_core::analysis::{self, SecurityInputs};
use ske_core::dataset::{self, gen_population, Population, PopulationSpec};
use ske_core::experiments::{self, EvalSummary};
use ske_core::field::{self, FieldError};
use ske_core::rsv::IomHasher;
use ske_core::ske::{self, deserialize_helper, serialize_helper, Retrieval, RvPair, SkeError, SkeParams};

use crate::error::{CliError, EXIT_RETRIEVAL};
use crate::output::{ensure_dir, print_json, write_csv, write_histogram, write_json};
use crate::{
    EnrollArgs, EvalArgs, GenArgs, ModelCheckArgs, PopulationArgs, RetrieveArgs, RevocabilityArgs,
    SecurityArgs, SpreadArgs, UnlinkabilityArgs,
};

fn population(
    args: &PopulationArgs,
    dim: usize,
    seed: u64,
) -> Result<(Population, Option<PopulationSpec>), CliError> {
    match &args.vectors {
        Some(path) => {
            let rows = dataset::load_vectors(path)?;
            Ok((Population::from_vectors(rows, args.impressions)?, None))
        }
        None => {
            let spec = PopulationSpec {
                subjects: args.subjects,
                impressions: args.impressions,
                d: dim,
                seed,
                cos_mean: args.cos_mean,
                cos_std: args.cos_std,
            };
            Ok((gen_population(&spec)?, Some(spec)))
        }
    }
}

fn load_row(path: &Path, row: usize, dim: usize) -> Result<Vec<f64>, CliError> {
    let mut rows = dataset::load_vectors(path)?;
    if row >= rows.len() {
        return Err(CliError::Usage(format!(
            "row {row} requested but {} holds {} vectors",
            path.display(),
            rows.len()
        )));
    }
    let x = rows.swap_remove(row);
    if x.len() != dim {
        return Err(CliError::Data(format!(
            "vector has dimension {}, parameters expect d = {dim}",
            x.len()
        )));
    }
    Ok(x)
}

fn parse_secret(text: &str) -> Result<Vec<u8>, CliError> {
    let bytes = hex::decode(text.trim()).map_err(|e| CliError::Usage(format!("secret hex: {e}")))?;
    if bytes.first() == Some(&0) {
        return Err(CliError::Usage(
            "secret must not start with a zero byte; secrets are recovered as minimal big-endian integers".into(),
        ));
    }
    Ok(bytes)
}

fn secret_hash_path(helper: &Path) -> PathBuf {
    let mut name = helper.as_os_str().to_owned();
    name.push(".sha256");
    PathBuf::from(name)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn rv_pair(params: &SkeParams, helper: &ske::HelperData, x: &[f64]) -> Result<RvPair, CliError> {
    let hash = |nonce| -> Result<_, SkeError> {
        Ok(IomHasher::new(nonce, params.m, params.p, params.dim)?.hash(x)?)
    };
    Ok(RvPair {
        phi: hash(helper.nonce_n)?,
        phihat: hash(helper.nonce_nhat)?,
    })
}

pub fn gen(a: &GenArgs, seed: u64) -> Result<i32, CliError> {
    if a.population.vectors.is_some() {
        return Err(CliError::Usage("gen writes vectors; --vectors is not accepted".into()));
    }
    let (pop, spec) = population(&a.population, a.dim, seed)?;
    ensure_dir(&a.out)?;
    dataset::save_vectors(pop.vectors(), &a.out.join("vectors.csv"))?;
    let spec = spec.expect("synthetic population");
    dataset::save_manifest(&spec, &a.out.join("manifest.json"))?;
    print_json(&json!({
        "subjects": pop.subjects(),
        "impressions": pop.impressions(),
        "d": pop.dim(),
        "vectors": pop.vectors().len(),
        "mean_within_cosine": pop.mean_within_cosine(),
        "files": ["vectors.csv", "manifest.json"],
    }))?;
    Ok(0)
}

pub fn enroll(a: &EnrollArgs, seed: u64) -> Result<i32, CliError> {
    let params = a.params.params;
    let (secret, generated) = match &a.secret_hex {
        Some(text) => (parse_secret(text)?, false),
        None => (experiments::derive_secret(seed, "cli-secret", 0, &params), true),
    };
    field::encode_secret(&secret, params.k, params.field()).map_err(SkeError::from)?;
    let x = load_row(&a.vectors, a.row, params.dim)?;

    let (n, nhat) = experiments::derive_nonce_pair(seed, "enroll", 0);
    let helper = ske::enroll(&x, &secret, &params, n, nhat)?;
    fs::write(&a.helper, serialize_helper(&helper))?;
    let unique = rv_pair(&params, &helper, &x)?.phi.unique_count();

    if let Some(path) = &a.secret_out {
        fs::write(path, format!("{}\n", hex::encode(&secret)))?;
    }
    if a.store_secret_hash {
        fs::write(secret_hash_path(&a.helper), format!("{}\n", sha256_hex(&secret)))?;
    }
    print_json(&json!({
        "unique_phi_count": unique,
        "m": params.m,
        "k": params.k,
        "file": a.helper.display().to_string(),
        "nonce_n": helper.nonce_n.to_string(),
        "nonce_nhat": helper.nonce_nhat.to_string(),
        "reseeded": helper.nonce_n != n,
        "secret_generated": generated,
    }))?;
    Ok(0)
}

pub fn retrieve(a: &RetrieveArgs) -> Result<i32, CliError> {
    let helper = deserialize_helper(&fs::read(&a.helper)?)?;
    let params = helper.params;
    let x = load_row(&a.vectors, a.row, params.dim)?;
    let rvs = rv_pair(&params, &helper, &x)?;
    let t = ske::unlocking_set(&rvs, &helper)?.len();
    let failure = |reason: &str| -> Result<i32, CliError> {
        print_json(&json!({ "success": false, "t": t, "k": params.k, "reason": reason }))?;
        Ok(EXIT_RETRIEVAL)
    };
    match ske::unlock_rvs(&rvs, &helper) {
        Ok(Retrieval::Recovered { secret, .. }) => {
            let sidecar = secret_hash_path(&a.helper);
            let verified = if sidecar.exists() {
                let stored = fs::read_to_string(&sidecar)?;
                Some(stored.trim() == sha256_hex(&secret))
            } else {
                None
            };
            if verified == Some(false) {
                return failure("secret hash mismatch");
            }
            let mut out = json!({
                "success": true,
                "t": t,
                "k": params.k,
                "secret_hex": hex::encode(&secret),
            });
            if let Some(v) = verified {
                out["secret_verified"] = json!(v);
            }
            print_json(&out)?;
            Ok(0)
        }
        Ok(Retrieval::Failed { .. }) => failure("too few unlocked points"),
        Err(SkeError::Field(FieldError::InconsistentPoints { .. })) => {
            failure("unlocked points are inconsistent")
        }
        Err(e) => Err(e.into()),
    }
}

/// Contents of `summary.json`; read back by `security-report --from-eval`.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub population: Option<PopulationSpec>,
    pub subjects: usize,
    pub impressions: usize,
    pub summary: EvalSummary,
}

#[derive(Serialize)]
struct ScoreRow {
    enroll_subject: usize,
    enroll_impression: usize,
    query_subject: usize,
    query_impression: usize,
    unlocked: usize,
    score: f64,
    collision: f64,
    recovered: bool,
    decode_work: u64,
}

fn score_rows(records: &[experiments::AttemptRecord]) -> impl Iterator<Item = ScoreRow> + '_ {
    records.iter().map(|r| ScoreRow {
        enroll_subject: r.enroll.subject,
        enroll_impression: r.enroll.impression,
        query_subject: r.query.subject,
        query_impression: r.query.impression,
        unlocked: r.unlocked,
        score: r.score,
        collision: r.collision,
        recovered: r.recovered,
        decode_work: r.decode_work,
    })
}

pub fn eval(a: &EvalArgs, seed: u64) -> Result<i32, CliError> {
    let params = a.params.params;
    let (pop, spec) = population(&a.population, params.dim, seed)?;
    let outcome = experiments::evaluate(&pop, &params, a.protocol, seed)?;
    ensure_dir(&a.out)?;
    write_csv(&a.out.join("genuine_scores.csv"), score_rows(&outcome.genuine))?;
    write_csv(&a.out.join("imposter_scores.csv"), score_rows(&outcome.imposter))?;
    write_csv(&a.out.join("rates.csv"), &outcome.rates.points)?;
    let scores = outcome.scores();
    write_histogram(
        &a.out.join("histogram.csv"),
        ["genuine", "imposter"],
        &scores.genuine,
        &scores.imposter,
        a.bins,
    )?;
    let report = EvalReport {
        population: spec,
        subjects: pop.subjects(),
        impressions: pop.impressions(),
        summary: outcome.summary,
    };
    write_json(&a.out.join("summary.json"), &report)?;
    if a.timings {
        write_json(&a.out.join("timings.json"), &outcome.timings)?;
    }
    print_json(&report)?;
    Ok(0)
}

#[derive(Serialize)]
struct QSweepRow {
    q_log2: u32,
    fap: f64,
    frp: f64,
    adv: f64,
    adv_bits: f64,
    frp_double: f64,
    adv_bits_double: f64,
}

pub fn security_report(a: &SecurityArgs) -> Result<i32, CliError> {
    let inputs = match &a.from_eval {
        Some(path) => {
            let eval: EvalReport = serde_json::from_slice(&fs::read(path)?)?;
            let s = &eval.summary;
            SecurityInputs {
                m: s.params.m as u64,
                k: s.params.k as u64,
                p: s.params.p,
                p_max: s.imposter.max_collision,
                p_genuine: s.genuine.mean_collision,
                q_log2: a.q_log2,
                q_sweep_log2: a.q_sweep.clone(),
            }
        }
        None => SecurityInputs {
            m: a.m,
            k: a.k,
            p: a.p,
            p_max: a.p_max,
            p_genuine: a.p_genuine,
            q_log2: a.q_log2,
            q_sweep_log2: a.q_sweep.clone(),
        },
    };
    if inputs.p < 2 {
        return Err(CliError::Usage(format!("p = {} must be at least 2", inputs.p)));
    }
    let report = analysis::security_report(&inputs)?;
    let reference = analysis::check_fa_reference(1024, 54, &analysis::fvc_reference(), 1.0)?;
    let out = json!({ "report": report, "fa_reference": reference });
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        write_json(&dir.join("security_report.json"), &out)?;
        write_csv(&dir.join("resilience.csv"), &report.resilience)?;
        write_csv(
            &dir.join("q_sweep.csv"),
            report.q_sweep.iter().map(|adv| QSweepRow {
                q_log2: adv.q.trailing_zeros(),
                fap: adv.fap,
                frp: adv.frp,
                adv: adv.adv,
                adv_bits: adv.adv_bits,
                frp_double: adv.frp_double,
                adv_bits_double: adv.adv_bits_double,
            }),
        )?;
    }
    print_json(&out)?;
    Ok(0)
}

#[derive(Serialize)]
struct ClassScore<'a> {
    class: &'a str,
    score: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

pub fn revocability(a: &RevocabilityArgs, seed: u64) -> Result<i32, CliError> {
    let params = a.params.params;
    let (pop, _) = population(&a.population, params.dim, seed)?;
    let r = experiments::revocability(&pop, &params, a.keys, seed)?;
    ensure_dir(&a.out)?;
    let mut w = csv::Writer::from_path(a.out.join("revocability_scores.csv"))?;
    w.write_record(["class", "score", "collision"])?;
    for (class, scores, collisions) in [
        ("pseudo_imposter", &r.pseudo_imposter, &r.pseudo_imposter_collision),
        ("imposter", &r.imposter, &r.imposter_collision),
    ] {
        for (s, c) in scores.iter().zip(collisions) {
            w.write_record([class.to_string(), s.to_string(), c.to_string()])?;
        }
    }
    w.flush()?;
    write_histogram(
        &a.out.join("revocability_histogram.csv"),
        ["pseudo_imposter", "imposter"],
        &r.pseudo_imposter,
        &r.imposter,
        a.bins,
    )?;
    let summary = json!({
        "keys": r.keys,
        "subjects": pop.subjects(),
        "pseudo_imposter_count": r.pseudo_imposter.len(),
        "imposter_count": r.imposter.len(),
        "pseudo_imposter_mean": mean(&r.pseudo_imposter),
        "imposter_mean": mean(&r.imposter),
        "ks_distance": r.ks_distance,
        "ks_distance_collision": r.ks_distance_collision,
    });
    write_json(&a.out.join("revocability.json"), &summary)?;
    print_json(&summary)?;
    Ok(0)
}

pub fn unlinkability(a: &UnlinkabilityArgs, seed: u64) -> Result<i32, CliError> {
    let params = a.params.params;
    let (pop, _) = population(&a.population, params.dim, seed)?;
    let u = experiments::unlinkability(&pop, &params, seed, a.omega, a.bins)?;
    ensure_dir(&a.out)?;
    write_csv(&a.out.join("d_curve.csv"), &u.linkability.bins)?;
    write_csv(
        &a.out.join("link_scores.csv"),
        u.mated
            .iter()
            .map(|&score| ClassScore { class: "mated", score })
            .chain(u.non_mated.iter().map(|&score| ClassScore {
                class: "non_mated",
                score,
            })),
    )?;
    let summary = json!({
        "d_sys": u.linkability.d_sys,
        "omega": u.omega,
        "bins": a.bins,
        "mated_count": u.mated.len(),
        "non_mated_count": u.non_mated.len(),
    });
    write_json(&a.out.join("unlinkability.json"), &summary)?;
    print_json(&summary)?;
    Ok(0)
}

pub fn model_check(a: &ModelCheckArgs, seed: u64) -> Result<i32, CliError> {
    let check =
        experiments::retrieval_model_check(&a.params.params, a.cos, a.trials, a.keyrings, seed)?;
    print_json(&check)?;
    Ok(0)
}

pub fn spread(a: &SpreadArgs, seed: u64) -> Result<i32, CliError> {
    let rows = experiments::match_count_spread(&a.params.params, a.cos, a.trials, &a.m_list, seed)?;
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        write_csv(&dir.join("spread.csv"), &rows)?;
    }
    print_json(&rows)?;
    Ok(0)
}
