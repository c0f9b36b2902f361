//! Monte-Carlo phase-transition experiments on the canonical model.
//!
//! The grid is `n_j = ⌊2^{4+0.15(j-1)}⌋`, `d_j = ⌊2^{1+0.15(j-1)}⌋` for
//! `j = 1..=j_max`, with `SNR = c·ln n`. Every (algorithm, cell, trial) is a
//! pure function of its derived seed, so grids reproduce row for row.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::iterative::{em_from_signs, harden};
use crate::maxcut::{gw_round, maxcut_exact, maxcut_multistart, sdp_solve, SdpOptions};
use crate::metrics::{misclass_binary, TrialRecord};
use crate::model::{sample_canonical, CanonicalSpec, DataMatrix, SignLabels};
use crate::multiclass::{cv_whitened_kmeans, whitened_kmeans};
use crate::numerics::projection_onto_range;
use crate::spectral::{spectral_init_detailed, two_stage};

/// CSV header of [`run_grid`] output.
pub const CSV_HEADER: &str = "algorithm,n,d,snr,trial_id,seed,error_rate,wall_time_s,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Exact,
    Sdp,
    SpectralPpi,
    Em,
    CvKmeans,
    LloydWhitened,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Exact, Algorithm::Sdp, Algorithm::SpectralPpi, Algorithm::Em, Algorithm::CvKmeans, Algorithm::LloydWhitened];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Sdp => "sdp",
            Algorithm::SpectralPpi => "spectral_ppi",
            Algorithm::Em => "em",
            Algorithm::CvKmeans => "cv_kmeans",
            Algorithm::LloydWhitened => "lloyd_whitened",
        }
    }

    /// Handles any number of clusters, not only two.
    pub fn is_multiclass(self) -> bool {
        matches!(self, Algorithm::CvKmeans | Algorithm::LloydWhitened)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown algorithm '{s}'")))
    }
}

/// Per-algorithm limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Largest n solved by enumeration.
    pub exact_max_n: usize,
    /// Grid index beyond which the exact algorithm is skipped; between
    /// `exact_max_n` and this it falls back to multi-start local search.
    pub exact_max_j: usize,
    pub fallback_starts: usize,
    pub sdp_max_iters: usize,
    pub sdp_tol: f64,
    pub em_max_iters: usize,
    pub em_tol: f64,
    pub kmeans_restarts: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            exact_max_n: 24,
            exact_max_j: 27,
            fallback_starts: 64,
            sdp_max_iters: 1000,
            sdp_tol: 1e-7,
            em_max_iters: 200,
            em_tol: 1e-8,
            kmeans_restarts: 20,
        }
    }
}

fn default_trials() -> usize {
    10
}

fn default_c() -> f64 {
    3.0
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub j_max: usize,
    #[serde(default = "default_trials")]
    pub trials_per_cell: usize,
    /// SNR = c·ln n.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub budgets: Budgets,
}

impl GridConfig {
    pub fn new(j_max: usize, algorithms: Vec<Algorithm>, master_seed: u64) -> Self {
        Self { j_max, trials_per_cell: default_trials(), c: default_c(), algorithms, master_seed, budgets: Budgets::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_max < 1 {
            return Err(Error::Invalid("j_max must be at least 1".into()));
        }
        if self.trials_per_cell < 1 {
            return Err(Error::Invalid("trials_per_cell must be at least 1".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Invalid(format!("c must be positive, got {}", self.c)));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Invalid("no algorithms configured".into()));
        }
        Ok(())
    }

    pub fn snr(&self, n: usize) -> f64 {
        self.c * (n as f64).ln()
    }
}

/// `⌊2^{4+0.15(j-1)}⌋`.
pub fn grid_n(j: usize) -> usize {
    2f64.powf(4.0 + 0.15 * (j as f64 - 1.0)).floor() as usize
}

/// `⌊2^{1+0.15(j-1)}⌋`.
pub fn grid_d(j: usize) -> usize {
    2f64.powf(1.0 + 0.15 * (j as f64 - 1.0)).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCell {
    /// 1-based grid indices.
    pub n_index: usize,
    pub d_index: usize,
    pub n: usize,
    pub d: usize,
}

impl GridCell {
    pub fn infeasible(&self) -> bool {
        self.n < self.d
    }
}

/// All `(n_i, d_j)` pairs, n index outermost. Cells with n < d are kept and
/// flagged by [`GridCell::infeasible`].
pub fn grid_cells(cfg: &GridConfig) -> Vec<GridCell> {
    let mut cells = Vec::with_capacity(cfg.j_max * cfg.j_max);
    for i in 1..=cfg.j_max {
        for j in 1..=cfg.j_max {
            cells.push(GridCell { n_index: i, d_index: j, n: grid_n(i), d: grid_d(j) });
        }
    }
    cells
}

/// Labels from one run of an algorithm, with a note on how they were obtained.
#[derive(Debug, Clone)]
pub struct Clustering {
    /// 0-based cluster labels.
    pub labels: Vec<usize>,
    /// `exact_fallback`, `init=spectral`, `eigen_tie`, `dropped_last`, ...
    pub notes: Vec<&'static str>,
}

fn from_signs(y: &SignLabels) -> Vec<usize> {
    y.as_slice().iter().map(|&s| usize::from(s < 0)).collect()
}

fn to_signs(labels: &[usize]) -> SignLabels {
    SignLabels::sign_of(labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }))
}

/// Runs `algorithm` on `x` with `k` clusters. Only the k-means algorithms
/// accept k ≠ 2. The exact algorithm enumerates up to `exact_max_n` points
/// and uses multi-start local search beyond.
pub fn run_algorithm(algorithm: Algorithm, x: &DataMatrix, k: usize, seed: u64, budgets: &Budgets) -> Result<Clustering> {
    if k != 2 && !algorithm.is_multiclass() {
        return Err(Error::Invalid(format!("{algorithm} clusters into two groups only, got k = {k}")));
    }
    let mut notes = Vec::new();
    let labels = match algorithm {
        Algorithm::Exact => {
            let h = projection_onto_range(x);
            let y = if x.n() <= budgets.exact_max_n {
                maxcut_exact(&h)?
            } else {
                notes.push("exact_fallback");
                maxcut_multistart(&h, budgets.fallback_starts, seed)?
            };
            from_signs(&y)
        }
        Algorithm::Sdp => {
            let h = projection_onto_range(x);
            let opts = SdpOptions { rank: None, max_iters: budgets.sdp_max_iters, tol: budgets.sdp_tol, seed };
            from_signs(&gw_round(&sdp_solve(&h, &opts).factor))
        }
        Algorithm::SpectralPpi => from_signs(&two_stage(x)?),
        Algorithm::Em => {
            let spec = spectral_init_detailed(x)?;
            notes.push("init=spectral");
            if spec.eigen_tie {
                notes.push("eigen_tie");
            }
            let out = em_from_signs(&projection_onto_range(x), &spec.labels, budgets.em_max_iters, budgets.em_tol)?;
            from_signs(&harden(&out.labels))
        }
        Algorithm::LloydWhitened => whitened_kmeans(x, k, budgets.kmeans_restarts, seed)?.0,
        Algorithm::CvKmeans => {
            if x.n() % 2 == 1 {
                notes.push("dropped_last");
                let mut labels = cv_whitened_kmeans(&x.rows_range(0, x.n() - 1), k, budgets.kmeans_restarts, seed)?;
                labels.push(labels[labels.len() - 1]);
                labels
            } else {
                cv_whitened_kmeans(x, k, budgets.kmeans_restarts, seed)?
            }
        }
    };
    Ok(Clustering { labels, notes })
}

/// Error reported for cells and trials that produce no estimate.
pub const NO_ESTIMATE_ERROR: f64 = 0.5;

/// One trial on canonical data `(n, d, snr)` drawn with `seed`.
///
/// Never fails: errors are written into `status` with error rate 0.5. The
/// exact algorithm is skipped on cells beyond grid index `exact_max_j`. For
/// odd n, `cv_kmeans` runs on the first n-1 points and copies the last label.
pub fn run_trial(algorithm: Algorithm, n: usize, d: usize, snr: f64, seed: u64, budgets: &Budgets) -> TrialRecord {
    let start = Instant::now();
    let record = |error_rate: f64, status: String| TrialRecord {
        algorithm: algorithm.to_string(),
        n,
        d,
        snr,
        trial_id: 0,
        seed,
        error_rate,
        wall_time_s: start.elapsed().as_secs_f64(),
        status,
    };
    if algorithm == Algorithm::Exact && (n > grid_n(budgets.exact_max_j) || d > grid_d(budgets.exact_max_j)) {
        return record(NO_ESTIMATE_ERROR, "skipped".into());
    }
    let outcome = CanonicalSpec::new(n, d, snr).and_then(|spec| sample_canonical(&spec, seed)).and_then(|(x, y)| {
        let c = run_algorithm(algorithm, &x, 2, seed, budgets)?;
        let err = misclass_binary(&to_signs(&c.labels), &y)?;
        Ok((err, c.notes))
    });
    match outcome {
        Ok((err, notes)) => {
            let status = std::iter::once("ok").chain(notes).collect::<Vec<_>>().join(";");
            record(err, status)
        }
        Err(e) => record(NO_ESTIMATE_ERROR, format!("error: {e}")),
    }
}

pub fn is_error_status(status: &str) -> bool {
    status.starts_with("error")
}

#[derive(Debug, Clone)]
pub struct GridOutput {
    pub records: Vec<TrialRecord>,
    /// Number of trials whose status is an error.
    pub failures: usize,
}

impl GridOutput {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }
}

fn thread_count() -> Option<usize> {
    std::env::var("COVCLUST_THREADS").ok()?.trim().parse().ok().filter(|&t: &usize| t > 0)
}

/// Runs every (algorithm, cell, trial) of the grid.
///
/// Each feasible cell yields `trials_per_cell` rows then an average row
/// (trial_id -1, status `average`); an n < d cell yields one row with error
/// 0.5 and status `n_lt_d`. Trial t of cell c uses seed
/// `derive_seed(master_seed, [c, t])` for every algorithm. Rows come out in
/// (algorithm, cell, trial) order whatever the completion order.
pub fn run_grid(cfg: &GridConfig) -> Result<GridOutput> {
    cfg.validate()?;
    let cells = grid_cells(cfg);
    let jobs: Vec<(Algorithm, usize, usize)> = cfg
        .algorithms
        .iter()
        .flat_map(|&a| {
            cells.iter().enumerate().filter(|(_, c)| !c.infeasible()).flat_map(move |(ci, _)| (0..cfg.trials_per_cell).map(move |t| (a, ci, t)))
        })
        .collect();
    let run = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(a, ci, t)| {
                let cell = cells[ci];
                let seed = derive_seed(cfg.master_seed, &[ci as u64, t as u64]);
                TrialRecord { trial_id: t as i64, ..run_trial(a, cell.n, cell.d, cfg.snr(cell.n), seed, &cfg.budgets) }
            })
            .collect()
    };
    let trials = match thread_count() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Invalid(e.to_string()))?
            .install(run),
        None => run(),
    };

    let failures = trials.iter().filter(|r| is_error_status(&r.status)).count();
    let mut records = Vec::with_capacity(trials.len() + cells.len() * cfg.algorithms.len());
    let mut it = trials.into_iter();
    for &a in &cfg.algorithms {
        for cell in &cells {
            let snr = cfg.snr(cell.n);
            if cell.infeasible() {
                records.push(TrialRecord {
                    algorithm: a.to_string(),
                    n: cell.n,
                    d: cell.d,
                    snr,
                    trial_id: -1,
                    seed: cfg.master_seed,
                    error_rate: NO_ESTIMATE_ERROR,
                    wall_time_s: 0.0,
                    status: "n_lt_d".into(),
                });
                continue;
            }
            let rows: Vec<TrialRecord> = it.by_ref().take(cfg.trials_per_cell).collect();
            let m = rows.len() as f64;
            let average = TrialRecord {
                algorithm: a.to_string(),
                n: cell.n,
                d: cell.d,
                snr,
                trial_id: -1,
                seed: cfg.master_seed,
                error_rate: rows.iter().map(|r| r.error_rate).sum::<f64>() / m,
                wall_time_s: rows.iter().map(|r| r.wall_time_s).sum::<f64>() / m,
                status: "average".into(),
            };
            records.extend(rows);
            records.push(average);
        }
    }
    Ok(GridOutput { records, failures })
}
