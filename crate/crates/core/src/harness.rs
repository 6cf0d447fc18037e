//! Seeded random ensembles and the experiment runner that sweeps the catalog
//! over them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{self, InputBundle, ParamsGrid, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::report::{CheckOutcome, InequalityReport, Variant};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    Ginibre,
    HaarUnitary,
    HermitianPsd,
    Normal,
    NilpotentShift,
    RankDeficient,
    /// The base ensemble times one random complex scalar with modulus
    /// log-uniform in `[1e-3, 1e3]`.
    Scaled(Box<EnsembleKind>),
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleKind::Ginibre => f.write_str("ginibre"),
            EnsembleKind::HaarUnitary => f.write_str("haar_unitary"),
            EnsembleKind::HermitianPsd => f.write_str("hermitian_psd"),
            EnsembleKind::Normal => f.write_str("normal"),
            EnsembleKind::NilpotentShift => f.write_str("nilpotent_shift"),
            EnsembleKind::RankDeficient => f.write_str("rank_deficient"),
            EnsembleKind::Scaled(base) => write!(f, "scaled:{base}"),
        }
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ginibre" => EnsembleKind::Ginibre,
            "haar_unitary" => EnsembleKind::HaarUnitary,
            "hermitian_psd" => EnsembleKind::HermitianPsd,
            "normal" => EnsembleKind::Normal,
            "nilpotent_shift" => EnsembleKind::NilpotentShift,
            "rank_deficient" => EnsembleKind::RankDeficient,
            _ => match s.strip_prefix("scaled:") {
                Some(base) => EnsembleKind::Scaled(Box::new(base.parse()?)),
                None => return Err(Error::Spec(format!("unknown ensemble {s:?}"))),
            },
        })
    }
}

impl Serialize for EnsembleKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EnsembleKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEnsemble {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub seed: u64,
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

fn ginibre(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_raw(n, n, (0..n * n).map(|_| gaussian(rng)).collect())
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `diag(R)` moved
/// into `Q`.
fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let qr = ginibre(n, rng).to_faer().qr();
    let (q, r) = (qr.compute_Q(), qr.R());
    let mut out = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            out[(i, j)] = q[(i, j)] * phase;
        }
    }
    out
}

fn unit_vector(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let v: Vec<Complex64> = (0..n).map(|_| gaussian(rng)).collect();
    let norm = crate::linalg::vector_norm(&v);
    ComplexMatrix::from_raw(n, 1, v.into_iter().map(|z| z / norm).collect())
}

fn shift(n: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = Complex64::new(1.0, 0.0);
    }
    a
}

fn draw(kind: &EnsembleKind, n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    match kind {
        EnsembleKind::Ginibre => ginibre(n, rng),
        EnsembleKind::HaarUnitary => haar_unitary(n, rng),
        EnsembleKind::HermitianPsd => {
            let g = ginibre(n, rng);
            (&g.adjoint() * &g).hermitian_part()
        }
        EnsembleKind::Normal => {
            let q = haar_unitary(n, rng);
            let d: Vec<Complex64> = (0..n).map(|_| gaussian(rng)).collect();
            &(&q * &ComplexMatrix::from_diagonal(&d)) * &q.adjoint()
        }
        EnsembleKind::NilpotentShift => shift(n),
        EnsembleKind::RankDeficient => {
            let k = rng.random_range(1..n);
            let mut acc = ComplexMatrix::zeros(n, n);
            for _ in 0..k {
                let u = ComplexMatrix::from_raw(n, 1, (0..n).map(|_| gaussian(rng)).collect());
                let v = ComplexMatrix::from_raw(n, 1, (0..n).map(|_| gaussian(rng)).collect());
                acc = &acc + &(&u * &v.adjoint());
            }
            acc
        }
        EnsembleKind::Scaled(base) => draw(base, n, rng),
    }
}

fn base_kind(kind: &EnsembleKind) -> &EnsembleKind {
    match kind {
        EnsembleKind::Scaled(base) => base_kind(base),
        k => k,
    }
}

/// The common scalar of a scaled draw, from a stream independent of the
/// matrix entries so that scaled and base draws share their matrices.
fn scale_factor(kind: &EnsembleKind, seed: u64) -> Complex64 {
    let mut c = Complex64::new(1.0, 0.0);
    let mut k = kind;
    let mut salt = 0u64;
    while let EnsembleKind::Scaled(base) = k {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1_ab1e_0000_0000 ^ salt);
        let modulus = 10f64.powf(rng.random_range(-3.0..=3.0));
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        c *= Complex64::from_polar(modulus, phase);
        k = base;
        salt += 1;
    }
    c
}

fn check_dim(dim: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(Error::rejected(format!("dimension {dim} is outside {MIN_DIM}..={MAX_DIM}")));
    }
    Ok(())
}

/// One matrix of the ensemble; identical to the `a` slot of
/// [`generate_bundle`] with the same arguments.
pub fn generate(ensemble: &MatrixEnsemble) -> Result<ComplexMatrix> {
    Ok(generate_bundle(&ensemble.kind, ensemble.dim, ensemble.seed)?.a)
}

/// Four matrices and two unit vectors drawn from one seeded stream. For
/// scaled ensembles every matrix carries the same scalar, so homogeneous
/// statements scale uniformly.
pub fn generate_bundle(kind: &EnsembleKind, dim: usize, seed: u64) -> Result<InputBundle> {
    check_dim(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = base_kind(kind);
    let a = draw(base, dim, &mut rng);
    let b = draw(base, dim, &mut rng);
    let c = draw(base, dim, &mut rng);
    let d = draw(base, dim, &mut rng);
    let x = unit_vector(dim, &mut rng);
    let y = unit_vector(dim, &mut rng);
    let bundle = InputBundle { a, b, c, d, x, y };
    Ok(match kind {
        EnsembleKind::Scaled(_) => bundle.scaled(scale_factor(kind, seed)),
        _ => bundle,
    })
}

/// `base_seed + h(cell, trial)` with `h` the leading 8 bytes of a SHA-256.
pub fn trial_seed(base_seed: u64, cell: usize, trial: usize) -> u64 {
    let digest = Sha256::digest(format!("cell:{cell}/trial:{trial}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    base_seed.wrapping_add(u64::from_le_bytes(bytes))
}

fn default_ensembles() -> Vec<EnsembleKind> {
    use EnsembleKind::*;
    vec![Ginibre, HermitianPsd, Normal, NilpotentShift, RankDeficient]
}
fn default_dims() -> Vec<usize> {
    vec![2, 3, 5, 8]
}
fn default_trials() -> usize {
    500
}
fn default_t_grid() -> Vec<f64> {
    ParamsGrid::default_grid().t_grid
}
fn default_r_grid() -> Vec<f64> {
    ParamsGrid::default_grid().r_grid
}
fn default_pairs() -> Vec<String> {
    ParamsGrid::default_grid().pairs
}
fn default_gauges() -> Vec<String> {
    ParamsGrid::default_grid().gauges
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_ensembles")]
    pub ensembles: Vec<EnsembleKind>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials_per_cell: usize,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_r_grid")]
    pub r_grid: Vec<f64>,
    #[serde(default = "default_pairs")]
    pub pairs: Vec<String>,
    #[serde(default = "default_gauges")]
    pub gauges: Vec<String>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Restricts the run to these catalog ids; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<String>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ensembles: default_ensembles(),
            dims: default_dims(),
            trials_per_cell: default_trials(),
            t_grid: default_t_grid(),
            r_grid: default_r_grid(),
            pairs: default_pairs(),
            gauges: default_gauges(),
            base_seed: 0,
            variant: Variant::Corrected,
            tolerances: Tolerances::default(),
            ids: None,
        }
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> ParamsGrid {
        ParamsGrid {
            t_grid: self.t_grid.clone(),
            r_grid: self.r_grid.clone(),
            pairs: self.pairs.clone(),
            gauges: self.gauges.clone(),
            ids: self.ids.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |len: usize, what: &str| {
            if len == 0 {
                Err(Error::rejected(format!("experiment config: {what} must be non-empty")))
            } else {
                Ok(())
            }
        };
        nonempty(self.ensembles.len(), "ensembles")?;
        nonempty(self.dims.len(), "dims")?;
        nonempty(self.trials_per_cell, "trials_per_cell")?;
        nonempty(self.t_grid.len(), "t_grid")?;
        nonempty(self.r_grid.len(), "r_grid")?;
        nonempty(self.pairs.len(), "pairs")?;
        nonempty(self.gauges.len(), "gauges")?;
        for &d in &self.dims {
            check_dim(d)?;
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::rejected(format!("t_grid value {t} is outside [0, 1]")));
        }
        if let Some(r) = self.r_grid.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
            return Err(Error::rejected(format!("r_grid value {r} must be ≥ 1")));
        }
        let grid = self.grid();
        grid.resolve_pairs()?;
        grid.resolve_gauges()?;
        grid.selected()?;
        let sweep = self.tolerances.sweep;
        if sweep.grid < crate::radii::MIN_GRID || !(sweep.refine_tol > 0.0) || self.tolerances.oracle_grid < 8 {
            return Err(Error::rejected("experiment config: invalid sweep settings"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackQuantiles {
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdAggregate {
    pub count: usize,
    pub pass_count: usize,
    pub fail_count: usize,
    pub skip_count: usize,
    pub min_slack: Option<f64>,
    pub median_slack: Option<f64>,
    pub max_slack: Option<f64>,
    pub argmin_slack_digest: Option<String>,
    pub quantiles: Option<SlackQuantiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub trials: usize,
    pub per_id: BTreeMap<String, IdAggregate>,
    /// Failing reports and error records, with their inputs attached.
    pub failures: Vec<CheckOutcome>,
    /// Seconds; kept out of the JSON so summaries are byte-reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

impl ExperimentSummary {
    pub fn corrected_failures(&self) -> usize {
        self.failures
            .iter()
            .filter(|f| match f {
                CheckOutcome::Checked(r) => r.variant == Variant::Corrected,
                CheckOutcome::Errored(e) => e.variant == Variant::Corrected,
                CheckOutcome::Skipped(_) => false,
            })
            .count()
    }

    /// Per-id slack quantiles as CSV.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record([
            "id", "count", "pass", "fail", "skip", "min", "q05", "q25", "median", "q75", "q95", "max",
        ])
        .map_err(io)?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for (id, agg) in &self.per_id {
            let q = agg.quantiles;
            w.write_record([
                id.clone(),
                agg.count.to_string(),
                agg.pass_count.to_string(),
                agg.fail_count.to_string(),
                agg.skip_count.to_string(),
                fmt(agg.min_slack),
                fmt(q.map(|q| q.q05)),
                fmt(q.map(|q| q.q25)),
                fmt(agg.median_slack),
                fmt(q.map(|q| q.q75)),
                fmt(q.map(|q| q.q95)),
                fmt(agg.max_slack),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One trial's contribution, reduced so that memory does not grow with the
/// number of reports.
#[derive(Default)]
struct TrialDigest {
    /// Per id: slacks of checked reports, pass/fail/skip counts, and the
    /// minimum-slack report.
    per_id: BTreeMap<String, IdTally>,
    failures: Vec<CheckOutcome>,
}

#[derive(Default)]
struct IdTally {
    slacks: Vec<f64>,
    pass: usize,
    fail: usize,
    skip: usize,
    min: Option<InequalityReport>,
}

fn attach_inputs(bundle: &InputBundle, id: &str) -> Option<Vec<ComplexMatrix>> {
    let schema = catalog::schema(id).ok()?;
    Some(bundle.inputs_for(schema).into_iter().cloned().collect())
}

fn tally(outcomes: Vec<CheckOutcome>, bundle: &InputBundle) -> TrialDigest {
    let mut out = TrialDigest::default();
    for o in outcomes {
        let entry = out.per_id.entry(o.id().to_string()).or_default();
        match o {
            CheckOutcome::Skipped(_) => entry.skip += 1,
            CheckOutcome::Checked(mut r) => {
                entry.slacks.push(r.slack);
                if r.passed {
                    entry.pass += 1;
                } else {
                    entry.fail += 1;
                }
                if entry.min.as_ref().is_none_or(|m| r.slack < m.slack) {
                    entry.min = Some(r.clone());
                }
                if !r.passed {
                    r.inputs = attach_inputs(bundle, &r.id);
                    out.failures.push(CheckOutcome::Checked(r));
                }
            }
            CheckOutcome::Errored(e) => {
                entry.fail += 1;
                out.failures.push(CheckOutcome::Errored(e));
            }
        }
    }
    out
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

struct Trial {
    kind: EnsembleKind,
    dim: usize,
    seed: u64,
}

fn trials(config: &ExperimentConfig) -> Vec<Trial> {
    let mut out = Vec::new();
    let mut cell = 0;
    for kind in &config.ensembles {
        for &dim in &config.dims {
            for t in 0..config.trials_per_cell {
                out.push(Trial { kind: kind.clone(), dim, seed: trial_seed(config.base_seed, cell, t) });
            }
            cell += 1;
        }
    }
    out
}

/// Full result of a run: the summary plus each id's minimum-slack report
/// with its inputs attached.
pub struct RunOutput {
    pub summary: ExperimentSummary,
    pub min_reports: BTreeMap<String, InequalityReport>,
}

/// Ids whose reports depend on the bundle's vectors.
fn uses_vectors(schema: &catalog::Schema) -> bool {
    schema.roles.iter().any(|r| r.is_vector())
}

fn bundle_key(b: &InputBundle) -> Vec<u64> {
    [&b.a, &b.b, &b.c, &b.d]
        .iter()
        .flat_map(|m| m.entries().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]))
        .collect()
}

/// Runs the experiment. Trials execute in parallel; every reduction happens
/// in canonical trial order, so the output does not depend on the schedule.
/// Trials whose matrices coincide (the deterministic shift ensemble) share
/// the evaluation of every vector-independent entry.
pub fn run_detailed(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let start = Instant::now();
    let grid = config.grid();
    let selected = grid.selected()?;
    let split = |vec_ids: bool| {
        let ids: Vec<String> = selected
            .iter()
            .filter(|s| uses_vectors(s) == vec_ids)
            .map(|s| s.id.to_string())
            .collect();
        ParamsGrid { ids: Some(ids), ..grid.clone() }
    };
    let (matrix_grid, vector_grid) = (split(false), split(true));
    let tol = config.tolerances;
    let variant = config.variant;

    let trials = trials(config);
    let bundles: Vec<InputBundle> = trials
        .par_iter()
        .map(|t| generate_bundle(&t.kind, t.dim, t.seed))
        .collect::<Result<_>>()?;

    let mut first_of: HashMap<Vec<u64>, usize> = HashMap::new();
    let representative: Vec<usize> = bundles
        .iter()
        .enumerate()
        .map(|(i, b)| *first_of.entry(bundle_key(b)).or_insert(i))
        .collect();
    let distinct: Vec<usize> = (0..bundles.len()).filter(|&i| representative[i] == i).collect();

    let matrix_outcomes: Vec<Vec<CheckOutcome>> = distinct
        .par_iter()
        .map(|&i| catalog::check_all(&bundles[i], &matrix_grid, &tol, variant))
        .collect::<Result<_>>()?;
    let slot: HashMap<usize, usize> = distinct.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    let digests: Vec<TrialDigest> = (0..bundles.len())
        .into_par_iter()
        .map(|i| {
            let mut outcomes = matrix_outcomes[slot[&representative[i]]].clone();
            outcomes.extend(catalog::check_all(&bundles[i], &vector_grid, &tol, variant)?);
            catalog::sort_canonical(&mut outcomes);
            Ok(tally(outcomes, &bundles[i]))
        })
        .collect::<Result<_>>()?;

    let mut merged: BTreeMap<String, IdTally> = selected.iter().map(|s| (s.id.to_string(), IdTally::default())).collect();
    let mut failures = Vec::new();
    for (i, d) in digests.into_iter().enumerate() {
        for (id, t) in d.per_id {
            let e = merged.entry(id).or_default();
            e.slacks.extend(t.slacks);
            e.pass += t.pass;
            e.fail += t.fail;
            e.skip += t.skip;
            if let Some(m) = t.min {
                if e.min.as_ref().is_none_or(|cur| m.slack < cur.slack) {
                    let mut m = m;
                    m.inputs = attach_inputs(&bundles[i], &m.id);
                    e.min = Some(m);
                }
            }
        }
        failures.extend(d.failures);
    }

    let mut per_id = BTreeMap::new();
    let mut min_reports = BTreeMap::new();
    for (id, mut t) in merged {
        t.slacks.sort_by(f64::total_cmp);
        let s = &t.slacks;
        let stats = !s.is_empty();
        per_id.insert(
            id.clone(),
            IdAggregate {
                count: t.pass + t.fail + t.skip,
                pass_count: t.pass,
                fail_count: t.fail,
                skip_count: t.skip,
                min_slack: stats.then(|| s[0]),
                median_slack: stats.then(|| quantile(s, 0.5)),
                max_slack: stats.then(|| s[s.len() - 1]),
                argmin_slack_digest: t.min.as_ref().map(|m| m.inputs_digest.clone()),
                quantiles: stats.then(|| SlackQuantiles {
                    q05: quantile(s, 0.05),
                    q25: quantile(s, 0.25),
                    q75: quantile(s, 0.75),
                    q95: quantile(s, 0.95),
                }),
            },
        );
        if let Some(m) = t.min {
            min_reports.insert(id, m);
        }
    }

    Ok(RunOutput {
        summary: ExperimentSummary {
            config: config.clone(),
            trials: bundles.len(),
            per_id,
            failures,
            wall_time: start.elapsed().as_secs_f64(),
        },
        min_reports,
    })
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    Ok(run_detailed(config)?.summary)
}

/// [`run`] on a dedicated pool of `threads` workers.
pub fn run_with_threads(config: &ExperimentConfig, threads: usize) -> Result<ExperimentSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::rejected(format!("thread pool: {e}")))?;
    pool.install(|| run(config))
}

/// The minimum-slack report of `id` over the run, with inputs attached for
/// replay.
pub fn min_slack_search(id: &str, config: &ExperimentConfig) -> Result<InequalityReport> {
    catalog::schema(id)?;
    let cfg = ExperimentConfig { ids: Some(vec![id.to_string()]), ..config.clone() };
    run_detailed(&cfg)?
        .min_reports
        .remove(id)
        .ok_or_else(|| Error::rejected(format!("{id}: every check was skipped")))
}
