//! Point counts of the non-generating locus `Z_r(F_q)` in `(Aₙ, *)^r`.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Field, FieldError, FiniteField, Fq};
use crate::mualg::{AlgElement, ClosureWorkspace};
use crate::unitary::{classify, dims, ClassifyError, ClassifyOptions, UnitaryError, UnitaryModel};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("{projected} tuples exceed the exhaustive budget {budget}; use sampled mode")]
    BudgetExceeded { projected: u128, budget: u128 },
    #[error("exponent fit needs at least two reports")]
    TooFewReports,
    #[error("exponent fit needs exhaustive reports for a single (n, r)")]
    MixedReports,
    #[error("no non-generating tuples at q = {0}; the logarithm is undefined")]
    EmptyCount(u64),
    #[error("checkpoint {path} belongs to a different run")]
    CheckpointMismatch { path: String },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Unitary(#[from] UnitaryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CensusMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct CensusOptions {
    /// Classify every non-generating tuple with all witnesses.
    pub classify: bool,
    pub classify_options: ClassifyOptions,
    /// Worker threads; 0 means one per logical core.
    pub workers: usize,
    /// Largest number of tuples an exhaustive run may visit.
    pub budget: u128,
    /// Progress file for restartable runs.
    pub checkpoint: Option<PathBuf>,
    /// Tuples per work item.
    pub chunk: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            classify: false,
            classify_options: ClassifyOptions { all_witnesses: true, ..Default::default() },
            workers: 1,
            budget: DEFAULT_BUDGET,
            checkpoint: None,
            chunk: 4096,
        }
    }
}

/// Per-class tallies. A tuple adds one to each class it lies in and, when
/// there are several, one to `multi_class`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    /// Index `i-1` counts tuples with a rational invariant subspace of dim `i`.
    pub x_rational: Vec<u64>,
    /// Index `i-1` counts tuples whose dim-`i` invariant subspaces are all
    /// irrational.
    pub x_geometric_only: Vec<u64>,
    pub y: u64,
    pub y_prime: u64,
    pub multi_class: u64,
}

impl ClassTally {
    fn new(n: usize) -> Self {
        ClassTally { x_rational: vec![0; n.saturating_sub(1)], x_geometric_only: vec![0; n.saturating_sub(1)], ..Default::default() }
    }

    fn merge(&mut self, o: &ClassTally) {
        for (a, b) in self.x_rational.iter_mut().zip(&o.x_rational) {
            *a += b;
        }
        for (a, b) in self.x_geometric_only.iter_mut().zip(&o.x_geometric_only) {
            *a += b;
        }
        self.y += o.y;
        self.y_prime += o.y_prime;
        self.multi_class += o.multi_class;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Tally {
    examined: u64,
    nongen: u64,
    classes: Option<ClassTally>,
}

impl Tally {
    fn new(n: usize, classify: bool) -> Self {
        Tally { examined: 0, nongen: 0, classes: classify.then(|| ClassTally::new(n)) }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.examined += o.examined;
        self.nongen += o.nongen;
        if let (Some(a), Some(b)) = (self.classes.as_mut(), o.classes.as_ref()) {
            a.merge(b);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub schema_version: u32,
    pub n: usize,
    pub r: usize,
    pub q: u64,
    pub mode: CensusMode,
    pub total: u64,
    pub nongen: u64,
    pub classes: Option<ClassTally>,
    pub frequency: f64,
    /// Wilson score interval at 95% for the non-generation frequency.
    pub wilson95: (f64, f64),
    /// `log_q N` (exhaustive) or `log_q (frequency · q^{2rn²})` (sampled).
    pub exponent_estimate: Option<f64>,
    pub predicted_dim_z: i64,
    pub predicted_c_a: i64,
    /// `frequency · q^{c_A(r)}`.
    pub scaled_frequency: f64,
    pub elapsed_secs: f64,
    pub workers: usize,
}

impl CensusReport {
    /// Equality ignoring wall time and worker count.
    pub fn same_content(&self, other: &CensusReport) -> bool {
        let strip = |r: &CensusReport| CensusReport { elapsed_secs: 0.0, workers: 0, ..r.clone() };
        strip(self) == strip(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    n: usize,
    r: usize,
    q: u64,
    mode: CensusMode,
    classify: bool,
    next_index: u64,
    tally: Tally,
}

/// Wilson score interval with `z = 1.96`.
pub fn wilson95(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let n = trials as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

struct Job {
    model: UnitaryModel<Fq>,
    r: usize,
    q: u64,
    classify: bool,
    copts: ClassifyOptions,
}

impl Job {
    fn coords(&self) -> usize {
        self.r * self.model.dim()
    }

    /// Tuple number `index` in lexicographic order, first coordinate most
    /// significant.
    fn tuple_at(&self, mut index: u64, buf: &mut [u64]) {
        let f = self.model.field();
        for slot in buf.iter_mut().rev() {
            *slot = f.elem_at(index % self.q);
            index /= self.q;
        }
    }

    /// Sample `i`: its own ChaCha stream under the run seed.
    fn sample_at(&self, seed: u64, i: u64, buf: &mut [u64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let f = self.model.field();
        for slot in buf.iter_mut() {
            *slot = f.elem_at(rng.gen_range(0..self.q));
        }
    }

    fn scan(&self, range: std::ops::Range<u64>, sampled: Option<u64>) -> Result<Tally, CensusError> {
        let alg = self.model.algebra();
        let dim = self.model.dim();
        let mut ws = ClosureWorkspace::new(alg);
        let mut buf = vec![0u64; self.coords()];
        let mut tally = Tally::new(self.model.n(), self.classify);
        for i in range {
            match sampled {
                Some(seed) => self.sample_at(seed, i, &mut buf),
                None => self.tuple_at(i, &mut buf),
            }
            let refs: Vec<&[u64]> = buf.chunks(dim).collect();
            tally.examined += 1;
            if ws.run(alg, &refs, None) == dim {
                continue;
            }
            tally.nongen += 1;
            if let Some(classes) = tally.classes.as_mut() {
                let tuple: Vec<AlgElement<u64>> = refs.iter().map(|c| AlgElement(c.to_vec())).collect();
                let cls = classify(&self.model, &tuple, &self.copts)?.classes();
                for &i in &cls.x_rational {
                    classes.x_rational[i - 1] += 1;
                }
                for &i in &cls.x_geometric {
                    classes.x_geometric_only[i - 1] += 1;
                }
                classes.y += cls.y as u64;
                classes.y_prime += cls.y_prime as u64;
                classes.multi_class += (cls.count() > 1) as u64;
            }
        }
        Ok(tally)
    }
}

fn load_checkpoint(path: &PathBuf) -> Result<Option<Checkpoint>, CensusError> {
    match std::fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| CensusError::Io(e.to_string())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CensusError::Io(e.to_string())),
    }
}

fn save_checkpoint(path: &PathBuf, cp: &Checkpoint) -> Result<(), CensusError> {
    let tmp = path.with_extension("tmp");
    let text = serde_json::to_string(cp).map_err(|e| CensusError::Io(e.to_string()))?;
    std::fs::write(&tmp, text).map_err(|e| CensusError::Io(e.to_string()))?;
    std::fs::rename(&tmp, path).map_err(|e| CensusError::Io(e.to_string()))
}

fn run(n: usize, r: usize, q: u64, mode: CensusMode, opts: &CensusOptions) -> Result<CensusReport, CensusError> {
    let start = Instant::now();
    let field = Fq::of_order(q)?;
    let model = UnitaryModel::new(&field, n)?;
    let job = Job { model, r, q, classify: opts.classify, copts: opts.classify_options.clone() };
    let (total, seed) = match mode {
        CensusMode::Exhaustive => {
            let projected = (q as u128).checked_pow(job.coords() as u32).unwrap_or(u128::MAX);
            if projected > opts.budget || projected > u64::MAX as u128 {
                return Err(CensusError::BudgetExceeded { projected, budget: opts.budget });
            }
            (projected as u64, None)
        }
        CensusMode::Sampled { samples, seed } => (samples, Some(seed)),
    };
    let workers = if opts.workers == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { opts.workers };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CensusError::Io(e.to_string()))?;

    let mut tally = Tally::new(n, opts.classify);
    let mut next = 0u64;
    if let Some(path) = &opts.checkpoint {
        if let Some(cp) = load_checkpoint(path)? {
            if (cp.n, cp.r, cp.q, cp.mode, cp.classify) != (n, r, q, mode, opts.classify) {
                return Err(CensusError::CheckpointMismatch { path: path.display().to_string() });
            }
            tally = cp.tally;
            next = cp.next_index;
        }
    }
    let chunk = opts.chunk.max(1);
    // checkpoints are written between blocks of work items
    let block = chunk * 64 * workers as u64;
    while next < total {
        let end = total.min(next.saturating_add(block));
        let chunks: Vec<(u64, u64)> = (next..end).step_by(chunk as usize).map(|s| (s, end.min(s + chunk))).collect();
        let part = pool.install(|| {
            chunks
                .par_iter()
                .map(|&(s, e)| job.scan(s..e, seed))
                .try_reduce(|| Tally::new(n, opts.classify), |a, b| Ok(a.merge(b)))
        })?;
        tally = tally.merge(part);
        next = end;
        if let Some(path) = &opts.checkpoint {
            save_checkpoint(path, &Checkpoint { n, r, q, mode, classify: opts.classify, next_index: next, tally: tally.clone() })?;
        }
    }

    let d = dims(n as u64, r as u64, field.characteristic());
    let frequency = if total == 0 { 0.0 } else { tally.nongen as f64 / total as f64 };
    let lnq = (q as f64).ln();
    let exponent_estimate = (tally.nongen > 0).then(|| match mode {
        CensusMode::Exhaustive => (tally.nongen as f64).ln() / lnq,
        CensusMode::Sampled { .. } => frequency.ln() / lnq + job.coords() as f64,
    });
    Ok(CensusReport {
        schema_version: SCHEMA_VERSION,
        n,
        r,
        q,
        mode,
        total,
        nongen: tally.nongen,
        classes: tally.classes,
        frequency,
        wilson95: wilson95(tally.nongen, total),
        exponent_estimate,
        predicted_dim_z: d.dim_z,
        predicted_c_a: d.c_a,
        scaled_frequency: frequency * (q as f64).powi(d.c_a as i32),
        elapsed_secs: start.elapsed().as_secs_f64(),
        workers,
    })
}

/// Visits every `r`-tuple over `F_q` in lexicographic order.
pub fn run_exhaustive(n: usize, r: usize, q: u64, opts: &CensusOptions) -> Result<CensusReport, CensusError> {
    run(n, r, q, CensusMode::Exhaustive, opts)
}

/// Uniform samples; sample `i` depends only on `(seed, i)`.
pub fn run_sampled(n: usize, r: usize, q: u64, samples: u64, seed: u64, opts: &CensusOptions) -> Result<CensusReport, CensusError> {
    run(n, r, q, CensusMode::Sampled { samples, seed }, opts)
}

/// Least-squares slope of `ln N(q)` against `ln q`.
pub fn exponent_fit(reports: &[CensusReport]) -> Result<f64, CensusError> {
    if reports.len() < 2 {
        return Err(CensusError::TooFewReports);
    }
    let (n, r) = (reports[0].n, reports[0].r);
    if reports.iter().any(|x| x.n != n || x.r != r || x.mode != CensusMode::Exhaustive) {
        return Err(CensusError::MixedReports);
    }
    let mut pts = Vec::new();
    for x in reports {
        if x.nongen == 0 {
            return Err(CensusError::EmptyCount(x.q));
        }
        pts.push(((x.q as f64).ln(), (x.nongen as f64).ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CensusError::MixedReports);
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_worker() -> CensusOptions {
        CensusOptions::default()
    }

    #[test]
    fn n1_counts_diagonal_tuples() {
        let rep = run_exhaustive(1, 2, 3, &one_worker()).unwrap();
        assert_eq!(rep.total, 81);
        assert_eq!(rep.nongen, 9);
        // the non-generators are exactly the diagonal tuples
        let job = Job {
            model: UnitaryModel::new(&Fq::prime(3).unwrap(), 1).unwrap(),
            r: 2,
            q: 3,
            classify: false,
            copts: ClassifyOptions::default(),
        };
        let mut buf = vec![0; 4];
        for i in 0..81 {
            job.tuple_at(i, &mut buf);
            let diagonal = buf[0] == buf[1] && buf[2] == buf[3];
            let refs: Vec<&[u64]> = buf.chunks(2).collect();
            let gens: Vec<_> = refs.iter().map(|c| AlgElement(c.to_vec())).collect();
            assert_eq!(!job.model.algebra().generates(&gens), diagonal);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let opts = CensusOptions { budget: 1000, ..one_worker() };
        assert!(matches!(run_exhaustive(2, 1, 3, &opts), Err(CensusError::BudgetExceeded { .. })));
    }

    #[test]
    fn worker_count_does_not_change_content() {
        let base = CensusOptions { classify: true, chunk: 97, ..one_worker() };
        let a = run_exhaustive(2, 1, 2, &base).unwrap();
        let b = run_exhaustive(2, 1, 2, &CensusOptions { workers: 3, ..base.clone() }).unwrap();
        assert!(a.same_content(&b));
        let s1 = run_sampled(2, 1, 3, 5000, 9, &base).unwrap();
        let s2 = run_sampled(2, 1, 3, 5000, 9, &CensusOptions { workers: 4, chunk: 31, ..base }).unwrap();
        assert!(s1.same_content(&s2));
    }

    #[test]
    fn checkpoint_resume_matches_fresh_run() {
        let dir = std::env::temp_dir().join(format!("census-cp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cp.json");
        let _ = std::fs::remove_file(&path);
        let fresh = run_exhaustive(2, 1, 2, &one_worker()).unwrap();
        // a partial checkpoint halfway through
        let job = Job {
            model: UnitaryModel::new(&Fq::prime(2).unwrap(), 2).unwrap(),
            r: 1,
            q: 2,
            classify: false,
            copts: ClassifyOptions::default(),
        };
        let half = job.scan(0..128, None).unwrap();
        let cp = Checkpoint { n: 2, r: 1, q: 2, mode: CensusMode::Exhaustive, classify: false, next_index: 128, tally: half };
        save_checkpoint(&path, &cp).unwrap();
        let resumed = run_exhaustive(2, 1, 2, &CensusOptions { checkpoint: Some(path.clone()), ..one_worker() }).unwrap();
        assert!(fresh.same_content(&resumed));
        let other = run_exhaustive(1, 1, 2, &CensusOptions { checkpoint: Some(path.clone()), ..one_worker() });
        assert!(matches!(other, Err(CensusError::CheckpointMismatch { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn exponent_fit_contract() {
        let reps: Vec<_> = [2, 3, 5].iter().map(|&q| run_exhaustive(1, 2, q, &one_worker()).unwrap()).collect();
        assert!((exponent_fit(&reps).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(exponent_fit(&reps[..1]), Err(CensusError::TooFewReports)));
        let s = run_sampled(1, 2, 3, 10, 0, &one_worker()).unwrap();
        assert!(matches!(exponent_fit(&[reps[0].clone(), s]), Err(CensusError::MixedReports)));
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson95(30, 1000);
        assert!(lo < 0.03 && 0.03 < hi);
        assert_eq!(wilson95(0, 0), (0.0, 1.0));
    }
}
