//! Synthetic vector populations with controlled similarity, matching
//! protocols and CSV vector files.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },
    #[error("line {line}: expected {expected} values, found {got}")]
    DimensionMismatch {
        line: u64,
        expected: usize,
        got: usize,
    },
    #[error("no vectors in input")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn check_cos(c: f64) -> Result<(), DatasetError> {
    if !(-1.0..=1.0).contains(&c) {
        return Err(DatasetError::Domain(format!("cosine {c} outside [-1, 1]")));
    }
    Ok(())
}

/// Unit vector at cosine `target_cos` to `x`, with the orthogonal part drawn
/// uniformly from the complement of `x`.
pub fn perturb<R: Rng + ?Sized>(
    x: &[f64],
    target_cos: f64,
    rng: &mut R,
) -> Result<Vec<f64>, DatasetError> {
    check_cos(target_cos)?;
    let d = x.len();
    if d < 2 {
        return Err(DatasetError::Domain(format!("dimension {d} must be at least 2")));
    }
    let nx = norm(x);
    if nx == 0.0 || !nx.is_finite() {
        return Err(DatasetError::Domain("base vector must be finite and nonzero".into()));
    }
    let xhat: Vec<f64> = x.iter().map(|v| v / nx).collect();
    let y = loop {
        let mut z = gaussian(rng, d);
        // two Gram-Schmidt passes keep z orthogonal to 1e-16
        for _ in 0..2 {
            let proj = dot(&z, &xhat);
            z.iter_mut().zip(&xhat).for_each(|(zi, xi)| *zi -= proj * xi);
        }
        let nz = norm(&z);
        if nz > 1e-8 {
            break z.into_iter().map(|v| v / nz).collect::<Vec<f64>>();
        }
    };
    let s = (1.0 - target_cos * target_cos).max(0.0).sqrt();
    Ok(xhat.iter().zip(&y).map(|(a, b)| target_cos * a + s * b).collect())
}

/// A standard-normal `x` and a unit `x'` with `cos(x, x') = target_cos`.
pub fn gen_pair<R: Rng + ?Sized>(
    d: usize,
    target_cos: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>), DatasetError> {
    check_cos(target_cos)?;
    if d < 2 {
        return Err(DatasetError::Domain(format!("dimension {d} must be at least 2")));
    }
    let x = loop {
        let x = gaussian(rng, d);
        if norm(&x) > 0.0 {
            break x;
        }
    };
    let xp = perturb(&x, target_cos, rng)?;
    Ok((x, xp))
}

/// Generation parameters, also written as the population manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    #[serde(rename = "S")]
    pub subjects: usize,
    #[serde(rename = "I")]
    pub impressions: usize,
    pub d: usize,
    pub seed: u64,
    pub cos_mean: f64,
    pub cos_std: f64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.subjects < 2 || self.impressions < 2 {
            return Err(DatasetError::Domain(format!(
                "need at least 2 subjects and 2 impressions, got S = {}, I = {}",
                self.subjects, self.impressions
            )));
        }
        if self.d < 2 {
            return Err(DatasetError::Domain(format!("dimension {} must be at least 2", self.d)));
        }
        check_cos(self.cos_mean)?;
        if !(self.cos_std >= 0.0 && self.cos_std.is_finite()) {
            return Err(DatasetError::Domain(format!("cos_std {} must be >= 0", self.cos_std)));
        }
        Ok(())
    }
}

/// `S * I` vectors stored subject-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    subjects: usize,
    impressions: usize,
    dim: usize,
    vectors: Vec<Vec<f64>>,
    spec: Option<PopulationSpec>,
}

/// One latent direction per subject; each impression sits at cosine `c` to
/// it, where `c = sign(g) sqrt(|g|)` and `g` is normal(`cos_mean`,
/// `cos_std`) clipped to `[-1, 1]`. Two impressions of one subject then have
/// expected cosine close to `cos_mean`.
pub fn gen_population(spec: &PopulationSpec) -> Result<Population, DatasetError> {
    spec.validate()?;
    let spread = Normal::new(spec.cos_mean, spec.cos_std)
        .map_err(|e| DatasetError::Domain(e.to_string()))?;
    let mut vectors = Vec::with_capacity(spec.subjects * spec.impressions);
    for s in 0..spec.subjects {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(s as u64);
        let latent = gaussian(&mut rng, spec.d);
        for _ in 0..spec.impressions {
            let g: f64 = spread.sample(&mut rng).clamp(-1.0, 1.0);
            let c = g.signum() * g.abs().sqrt();
            vectors.push(perturb(&latent, c, &mut rng)?);
        }
    }
    Ok(Population {
        subjects: spec.subjects,
        impressions: spec.impressions,
        dim: spec.d,
        vectors,
        spec: Some(*spec),
    })
}

impl Population {
    /// Groups consecutive rows into subjects of `impressions` rows each.
    pub fn from_vectors(vectors: Vec<Vec<f64>>, impressions: usize) -> Result<Self, DatasetError> {
        let dim = vectors.first().ok_or(DatasetError::Empty)?.len();
        if impressions < 2 || !vectors.len().is_multiple_of(impressions) || vectors.len() / impressions < 2 {
            return Err(DatasetError::Domain(format!(
                "{} vectors cannot form at least 2 subjects of {impressions} (>= 2) impressions",
                vectors.len()
            )));
        }
        if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != dim) {
            return Err(DatasetError::DimensionMismatch {
                line: i as u64 + 1,
                expected: dim,
                got: v.len(),
            });
        }
        Ok(Self {
            subjects: vectors.len() / impressions,
            impressions,
            dim,
            vectors,
            spec: None,
        })
    }

    pub fn subjects(&self) -> usize {
        self.subjects
    }

    pub fn impressions(&self) -> usize {
        self.impressions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> Option<&PopulationSpec> {
        self.spec.as_ref()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn index(&self, id: SampleId) -> usize {
        id.subject * self.impressions + id.impression
    }

    pub fn vector(&self, id: SampleId) -> &[f64] {
        &self.vectors[self.index(id)]
    }

    /// Mean cosine over all within-subject impression pairs.
    pub fn mean_within_cosine(&self) -> f64 {
        let pairs = full_protocol(self).genuine;
        let total: f64 = pairs
            .iter()
            .map(|c| cosine(self.vector(c.enroll), self.vector(c.query)))
            .sum();
        total / pairs.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleId {
    pub subject: usize,
    pub impression: usize,
}

/// The first sample is enrolled and the second one queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub enroll: SampleId,
    pub query: SampleId,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairLists {
    pub genuine: Vec<Comparison>,
    pub imposter: Vec<Comparison>,
}

fn sample(subject: usize, impression: usize) -> SampleId {
    SampleId {
        subject,
        impression,
    }
}

fn first_impression_imposters(subjects: usize) -> Vec<Comparison> {
    let mut out = Vec::with_capacity(subjects * (subjects - 1) / 2);
    for a in 0..subjects {
        for b in a + 1..subjects {
            out.push(Comparison {
                enroll: sample(a, 0),
                query: sample(b, 0),
            });
        }
    }
    out
}

/// Every within-subject impression pair, and first impressions across subjects.
pub fn full_protocol(pop: &Population) -> PairLists {
    let mut genuine = Vec::new();
    for s in 0..pop.subjects {
        for i in 0..pop.impressions {
            for j in i + 1..pop.impressions {
                genuine.push(Comparison {
                    enroll: sample(s, i),
                    query: sample(s, j),
                });
            }
        }
    }
    PairLists {
        genuine,
        imposter: first_impression_imposters(pop.subjects),
    }
}

/// Impression 1 enrolls and impression 2 queries for every subject; imposters
/// as in [`full_protocol`].
pub fn one_vs_one_protocol(pop: &Population) -> PairLists {
    PairLists {
        genuine: (0..pop.subjects)
            .map(|s| Comparison {
                enroll: sample(s, 0),
                query: sample(s, 1),
            })
            .collect(),
        imposter: first_impression_imposters(pop.subjects),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "1vs1")]
    OneVsOne,
}

impl Protocol {
    pub fn pairs(&self, pop: &Population) -> PairLists {
        match self {
            Protocol::Full => full_protocol(pop),
            Protocol::OneVsOne => one_vs_one_protocol(pop),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Full => "full",
            Protocol::OneVsOne => "1vs1",
        })
    }
}

impl FromStr for Protocol {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Protocol::Full),
            "1vs1" => Ok(Protocol::OneVsOne),
            other => Err(DatasetError::Domain(format!(
                "unknown protocol {other:?}, expected full or 1vs1"
            ))),
        }
    }
}

/// Parses headerless CSV, one vector per line. Blank lines are skipped.
pub fn read_vectors<R: std::io::Read>(input: R) -> Result<Vec<Vec<f64>>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|e| DatasetError::Parse {
                    line,
                    column: col + 1,
                    message: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = out.first() {
            if row.len() != first.len() {
                return Err(DatasetError::DimensionMismatch {
                    line,
                    expected: first.len(),
                    got: row.len(),
                });
            }
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(out)
}

/// Writes vectors with shortest round-trip float formatting.
pub fn write_vectors<W: std::io::Write>(vectors: &[Vec<f64>], out: W) -> Result<(), DatasetError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for v in vectors {
        writer.write_record(v.iter().map(|x| format!("{x:e}")))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_vectors(path: &Path) -> Result<Vec<Vec<f64>>, DatasetError> {
    read_vectors(std::fs::File::open(path)?)
}

pub fn save_vectors(vectors: &[Vec<f64>], path: &Path) -> Result<(), DatasetError> {
    write_vectors(vectors, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn save_manifest(spec: &PopulationSpec, path: &Path) -> Result<(), DatasetError> {
    let mut text = serde_json::to_string_pretty(spec)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<PopulationSpec, DatasetError> {
    let spec: PopulationSpec = serde_json::from_slice(&std::fs::read(path)?)?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(subjects: usize, impressions: usize) -> PopulationSpec {
        PopulationSpec {
            subjects,
            impressions,
            d: 16,
            seed: 1,
            cos_mean: 0.9,
            cos_std: 0.03,
        }
    }

    #[test]
    fn pair_cosine_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for &c in &[-1.0, -0.5, 0.0, 0.3, 0.77, 0.999, 1.0] {
            for d in [2, 3, 128] {
                let (x, xp) = gen_pair(d, c, &mut rng).unwrap();
                assert!((cosine(&x, &xp) - c).abs() < 1e-10, "c={c} d={d}");
                assert!((norm(&xp) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pair_rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_pair(1, 0.5, &mut rng).is_err());
        assert!(gen_pair(8, 1.01, &mut rng).is_err());
        assert!(perturb(&[0.0, 0.0], 0.5, &mut rng).is_err());
    }

    #[test]
    fn population_is_deterministic() {
        let a = gen_population(&spec(4, 3)).unwrap();
        let b = gen_population(&spec(4, 3)).unwrap();
        assert_eq!(a, b);
        let mut other = spec(4, 3);
        other.seed = 2;
        assert_ne!(a.vectors(), gen_population(&other).unwrap().vectors());
    }

    #[test]
    fn population_rejects_tiny_specs() {
        assert!(gen_population(&spec(1, 8)).is_err());
        assert!(gen_population(&spec(8, 1)).is_err());
        let mut s = spec(4, 4);
        s.cos_std = -1.0;
        assert!(gen_population(&s).is_err());
    }

    #[test]
    fn protocol_counts() {
        for (s, i) in [(2, 2), (3, 5), (10, 4)] {
            let pop = gen_population(&spec(s, i)).unwrap();
            let full = full_protocol(&pop);
            assert_eq!(full.genuine.len(), s * i * (i - 1) / 2);
            assert_eq!(full.imposter.len(), s * (s - 1) / 2);
            let one = one_vs_one_protocol(&pop);
            assert_eq!(one.genuine.len(), s);
            assert_eq!(one.imposter, full.imposter);
        }
    }

    #[test]
    fn protocol_names() {
        assert_eq!("full".parse::<Protocol>().unwrap(), Protocol::Full);
        assert_eq!("1vs1".parse::<Protocol>().unwrap(), Protocol::OneVsOne);
        assert!("2vs2".parse::<Protocol>().is_err());
        assert_eq!(Protocol::OneVsOne.to_string(), "1vs1");
    }

    #[test]
    fn from_vectors_groups_rows() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 1.0]).collect();
        let pop = Population::from_vectors(rows.clone(), 3).unwrap();
        assert_eq!(pop.subjects(), 2);
        assert_eq!(pop.vector(sample(1, 0)), &[3.0, 1.0]);
        assert!(Population::from_vectors(rows.clone(), 4).is_err());
        assert!(Population::from_vectors(rows[..3].to_vec(), 3).is_err());
    }

    #[test]
    fn csv_errors_carry_position() {
        let err = read_vectors("1,2,3\n4,x,6\n".as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 2, column: 2, .. }), "{err:?}");
        let err = read_vectors("1,2,3\n4,5\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::DimensionMismatch {
                line: 2,
                expected: 3,
                got: 2
            }
        ));
        assert!(matches!(read_vectors("".as_bytes()), Err(DatasetError::Empty)));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut vectors: Vec<Vec<f64>> = (0..20).map(|_| gaussian(&mut rng, 7)).collect();
        vectors.push(vec![1e-300, -2.5e300, 0.0, -0.0, 1.0, 0.1, f64::MIN_POSITIVE]);
        let mut buf = Vec::new();
        write_vectors(&vectors, &mut buf).unwrap();
        assert_eq!(read_vectors(buf.as_slice()).unwrap(), vectors);
    }
}
