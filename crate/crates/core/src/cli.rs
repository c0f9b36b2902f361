//! Command-line front end.
//!
//! Data files are CSV with a header row `x1,...,xd[,label]`. Two-cluster
//! labels are written as ±1, K-cluster labels as `0..K`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use crate::detect::{gen_instance, psi_test, Hypothesis};
use crate::error::{Error, Result};
use crate::harness::{run_algorithm, run_grid, Algorithm, Budgets, GridConfig};
use crate::metrics::misclass_labels;
use crate::model::{sample_canonical, sample_multiclass, sample_two_component, CanonicalSpec, DataMatrix, MixtureSpec, TwoComponentSpec};
use crate::pursuit::spurious_point;

#[derive(Debug, Parser)]
#[command(name = "covclust", version, about = "Clustering Gaussian mixtures with an unknown shared covariance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Canonical,
    TwoComponent,
    Multiclass,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a data set.
    Generate {
        #[arg(long, value_enum, default_value = "canonical")]
        model: ModelKind,
        #[arg(long)]
        n: usize,
        /// Dimension of the canonical model.
        #[arg(long)]
        d: Option<usize>,
        /// SNR of the canonical model; `inf` for noiseless data.
        #[arg(long)]
        snr: Option<f64>,
        /// JSON model file for `two-component` and `multiclass`.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Cluster the rows of a CSV file.
    Cluster {
        #[arg(long, value_parser = parse_algorithm)]
        algo: Algorithm,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON budgets overriding the defaults.
        #[arg(long)]
        budgets: Option<PathBuf>,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Run a Monte-Carlo grid from a JSON config; writes CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Planted Boolean vector detection with the noise-smoothed test.
    Detect {
        #[arg(long, default_value_t = 4096)]
        n: usize,
        /// Defaults to ⌈n / ln²n⌉.
        #[arg(long)]
        d: Option<usize>,
        /// Defaults to 1/√(6 ln n).
        #[arg(long)]
        eps: Option<f64>,
        /// Instances per hypothesis.
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Critical point of the population projection-pursuit loss along a
    /// direction orthogonal to the mean.
    Landscape {
        /// Two-component model JSON; defaults to μ = 5e₁, Σ = I.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Dimension of the default model.
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Comma-separated direction; defaults to e₂.
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, default_value = "-")]
        output: String,
    },
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on usage, input or config errors, 2
/// when an experiment grid had failing trials.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Generate { model, n, d, snr, spec, seed, output } => {
            let (x, labels) = match model {
                ModelKind::Canonical => {
                    let d = d.ok_or_else(|| Error::Invalid("--d is required for the canonical model".into()))?;
                    let snr = snr.ok_or_else(|| Error::Invalid("--snr is required for the canonical model".into()))?;
                    let (x, y) = sample_canonical(&CanonicalSpec::new(n, d, snr)?, seed)?;
                    (x, y.as_slice().iter().map(|&v| i64::from(v)).collect::<Vec<_>>())
                }
                ModelKind::TwoComponent => {
                    let spec: TwoComponentSpec = read_json(required(spec)?.as_path())?;
                    let (x, y) = sample_two_component(&spec, n, seed)?;
                    (x, y.as_slice().iter().map(|&v| i64::from(v)).collect())
                }
                ModelKind::Multiclass => {
                    let spec: MixtureSpec = read_json(required(spec)?.as_path())?;
                    let (x, y) = sample_multiclass(&spec, n, seed)?;
                    (x, y.labels().iter().map(|&v| v as i64).collect())
                }
            };
            write_output(&output, &data_csv(&x, Some(&labels))?)?;
            Ok(0)
        }
        Command::Cluster { algo, input, k, seed, budgets, output } => {
            let (x, truth) = read_data(&input)?;
            let budgets = match budgets {
                Some(p) => read_json(&p)?,
                None => Budgets::default(),
            };
            let c = run_algorithm(algo, &x, k, seed, &budgets)?;
            let labels: Vec<i64> = if k == 2 {
                c.labels.iter().map(|&l| if l == 0 { 1 } else { -1 }).collect()
            } else {
                c.labels.iter().map(|&l| l as i64).collect()
            };
            if let Some(truth) = truth {
                let err = score_against(&truth, &c.labels, k)?;
                eprintln!("misclassification rate vs input labels: {err}");
            }
            if !c.notes.is_empty() {
                eprintln!("notes: {}", c.notes.join(";"));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["label"])?;
            for l in labels {
                w.write_record([l.to_string()])?;
            }
            write_output(&output, &into_string(w)?)?;
            Ok(0)
        }
        Command::Experiment { config, output } => {
            let cfg: GridConfig = read_json(&config)?;
            cfg.validate()?;
            let out = run_grid(&cfg)?;
            write_output(&output, &out.to_csv()?)?;
            if out.failures > 0 {
                eprintln!("{} trial(s) failed; see the status column", out.failures);
                return Ok(2);
            }
            Ok(0)
        }
        Command::Detect { n, d, eps, instances, seed, output } => {
            let ln = (n as f64).ln();
            let d = d.unwrap_or_else(|| (n as f64 / (ln * ln)).ceil() as usize);
            let eps = eps.unwrap_or_else(|| 1.0 / (6.0 * ln).sqrt());
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["hypothesis", "instance", "statistic", "decision"])?;
            let mut wrong = 0;
            for (tag, h) in [(0u64, Hypothesis::H0), (1, Hypothesis::H1)] {
                for i in 0..instances {
                    let x = gen_instance(h, n, d, crate::derive_seed(seed, &[tag, i as u64, 0]))?;
                    let out = psi_test(&x, eps, crate::derive_seed(seed, &[tag, i as u64, 1]))?;
                    wrong += usize::from(out.decision != h);
                    w.write_record([format!("{h:?}"), i.to_string(), out.statistic.to_string(), format!("{:?}", out.decision)])?;
                }
            }
            write_output(&output, &into_string(w)?)?;
            eprintln!("n = {n}, d = {d}, eps = {eps}: empirical error {}", wrong as f64 / (2 * instances).max(1) as f64);
            Ok(0)
        }
        Command::Landscape { spec, d, beta, output } => {
            let (mu, sigma) = match spec {
                Some(p) => {
                    let spec: TwoComponentSpec = read_json(&p)?;
                    (spec.mu_star, spec.sigma_star)
                }
                None => {
                    if d < 2 {
                        return Err(Error::Invalid("--d must be at least 2".into()));
                    }
                    let mut mu = DVector::zeros(d);
                    mu[0] = 5.0;
                    (mu, DMatrix::identity(d, d))
                }
            };
            let beta = match beta {
                Some(s) => DVector::from_vec(parse_list(&s)?),
                None => {
                    let mut b = DVector::zeros(mu.len());
                    if mu.len() < 2 {
                        return Err(Error::Invalid("model dimension must be at least 2".into()));
                    }
                    b[1] = 1.0;
                    b
                }
            };
            let sp = spurious_point(&mu, &sigma, &beta)?;
            let json = serde_json::json!({
                "t0": sp.t0,
                "grad_norm": sp.grad_norm,
                "hessian_min_eig_offray": sp.hessian_min_eig_offray,
                "rank_one_coeff": sp.rank_one_coeff,
            });
            write_output(&output, &format!("{}\n", serde_json::to_string_pretty(&json)?))?;
            Ok(0)
        }
    }
}

fn required(spec: Option<PathBuf>) -> Result<PathBuf> {
    spec.ok_or_else(|| Error::Invalid("--spec is required for this model".into()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("bad number '{t}': {e}"))))
        .collect()
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
}

/// `-` is standard output.
fn write_output(target: &str, content: &str) -> Result<()> {
    if target == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(content.as_bytes())?;
        out.flush()?;
    } else {
        fs::write(target, content)?;
    }
    Ok(())
}

/// CSV with header `x1..xd[,label]`.
pub fn data_csv(x: &DataMatrix, labels: Option<&[i64]>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=x.d()).map(|j| format!("x{j}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for i in 0..x.n() {
        let mut row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(l) = labels {
            row.push(l[i].to_string());
        }
        w.write_record(&row)?;
    }
    into_string(w)
}

/// Reads a data CSV. A final column named `label` is split off.
pub fn read_data(path: &Path) -> Result<(DataMatrix, Option<Vec<i64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let has_label = headers.iter().next_back() == Some("label");
    let d = headers.len() - usize::from(has_label);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("row {}: bad number '{t}': {e}", line + 1)));
        rows.push(rec.iter().take(d).map(parse).collect::<Result<Vec<f64>>>()?);
        if has_label {
            let t = rec.get(d).unwrap_or_default();
            labels.push(t.trim().parse::<i64>().map_err(|e| Error::Invalid(format!("row {}: bad label '{t}': {e}", line + 1)))?);
        }
    }
    if rows.is_empty() {
        return Err(Error::Invalid("input has no data rows".into()));
    }
    Ok((DataMatrix::from_rows(&rows)?, has_label.then_some(labels)))
}

/// Misclassification of `labels` against file labels (±1 or `0..K`).
fn score_against(truth: &[i64], labels: &[usize], k: usize) -> Result<f64> {
    let mut distinct: Vec<i64> = truth.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let kk = k.max(distinct.len());
    let mapped: Vec<usize> = truth.iter().map(|t| distinct.binary_search(t).expect("present")).collect();
    misclass_labels(&mapped, labels, kk)
}

