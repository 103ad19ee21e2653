//! Experiment harness: the five benchmark architectures, multi-seed training
//! runs, the T sweep with its star/score table, convergence speed, and CSV /
//! Markdown reports.
//!
//! Every run draws all of its randomness (initialization, shuffles, dropout)
//! from one stream seeded by hashing `(base seed, activation label, arch label,
//! run index)`, so a cell's results do not depend on which other cells run.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::activation::{ActivationKind, ActivationSpec};
use crate::error::{Error, Result};
use crate::linalg::Rng;
use crate::mnist::{batches, Dataset};
use crate::network::{evaluate_accuracy, Network, TrainConfig, INPUT_DIM};

/// Final test accuracy below this counts as a failed run.
pub const CHANCE_BAND: f64 = 0.15;

pub const DEFAULT_SEEDS: usize = 3;
pub const PAPER_SEEDS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArchId {
    Dfnn5a,
    Dfnn5,
    Dfnn6,
    Dfnn7,
    Dfnn8,
}

impl ArchId {
    pub const ALL: [ArchId; 5] = [
        ArchId::Dfnn5a,
        ArchId::Dfnn5,
        ArchId::Dfnn6,
        ArchId::Dfnn7,
        ArchId::Dfnn8,
    ];

    /// Layer widths after the 784-wide input; the last entry is the 10-way output.
    pub fn sizes(self) -> &'static [usize] {
        match self {
            ArchId::Dfnn5a => &[512, 512, 512, 512, 10],
            ArchId::Dfnn5 => &[256, 128, 64, 32, 10],
            ArchId::Dfnn6 => &[512, 256, 128, 64, 32, 10],
            ArchId::Dfnn7 => &[784, 512, 256, 128, 64, 32, 10],
            ArchId::Dfnn8 => &[1568, 784, 512, 256, 128, 64, 32, 10],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ArchId::Dfnn5a => "DFNN-5a",
            ArchId::Dfnn5 => "DFNN-5",
            ArchId::Dfnn6 => "DFNN-6",
            ArchId::Dfnn7 => "DFNN-7",
            ArchId::Dfnn8 => "DFNN-8",
        }
    }
}

impl fmt::Display for ArchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ArchId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArchId::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown architecture '{s}'")))
    }
}

/// Parses `all` or a comma-separated list such as `dfnn-5,dfnn-8`.
pub fn parse_arch_list(s: &str) -> Result<Vec<ArchId>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ArchId::ALL.to_vec());
    }
    let archs = s
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<ArchId>>>()?;
    if archs.is_empty() {
        return Err(Error::InvalidArgument("no architectures given".into()));
    }
    Ok(archs)
}

pub fn build_network(arch: ArchId, activation: ActivationSpec, rng: &mut Rng) -> Result<Network> {
    Network::new(INPUT_DIM, arch.sizes(), activation, rng)
}

/// The seven existing activations in the benchmark, in table order.
pub fn comparators() -> Vec<ActivationSpec> {
    vec![
        ActivationSpec::relu(),
        ActivationSpec::swish(1.0),
        ActivationSpec::lrelu(0.01),
        ActivationSpec::lrelu(0.25),
        ActivationSpec::softplus(),
        ActivationSpec::elu(1.0),
        ActivationSpec::frelu(-0.398),
    ]
}

/// Inclusive grid from `from` towards `to` in steps of `|step|`, e.g.
/// `0.00, -0.05, …, -0.40`. Values are rounded to 1e-9 so they print cleanly.
pub fn t_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    let step = step.abs();
    if !(step > 0.0 && from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bad T grid: from {from} to {to} step {step}"
        )));
    }
    let n = ((to - from).abs() / step + 1e-9).floor() as usize;
    let dir = if to < from { -1.0 } else { 1.0 };
    Ok((0..=n)
        .map(|k| ((from + dir * k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn default_t_values() -> Vec<f64> {
    t_grid(0.0, -0.40, 0.05).expect("static grid")
}

/// Per-run seed: leading 8 bytes (little-endian) of SHA-256 over
/// `"{base}|{activation}|{arch}|{run}"`.
pub fn derive_seed(base: u64, activation: &str, arch: &str, run_index: usize) -> u64 {
    let digest = Sha256::digest(format!("{base}|{activation}|{arch}|{run_index}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub arch: ArchId,
    pub activation: ActivationSpec,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// Record train/test accuracy after every epoch; otherwise only the final test accuracy.
    pub eval_every_epoch: bool,
}

impl ExperimentConfig {
    pub fn new(
        arch: ArchId,
        activation: ActivationSpec,
        train: TrainConfig,
        seeds: Vec<u64>,
    ) -> Self {
        ExperimentConfig {
            arch,
            activation,
            train,
            seeds,
            eval_every_epoch: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.activation.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one seed is required".into(),
            ));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::InvalidArgument("seeds must be distinct".into()));
        }
        Ok(())
    }
}

/// `count` consecutive seeds starting at `base`.
pub fn seed_list(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Converged,
    NotConverged,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "Converged",
            RunStatus::NotConverged => "NotConverged",
        }
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Converged" => Ok(RunStatus::Converged),
            "NotConverged" => Ok(RunStatus::NotConverged),
            _ => Err(Error::InvalidArgument(format!("unknown status '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub activation: String,
    pub arch: ArchId,
    pub seed: u64,
    pub run_index: usize,
    /// Eval-mode accuracy on the training split after each completed epoch.
    pub train_curve: Vec<f64>,
    /// Eval-mode accuracy on the test split after each completed epoch.
    pub test_curve: Vec<f64>,
    pub final_test_accuracy: f64,
    pub status: RunStatus,
    /// Epochs fully trained before the run stopped.
    pub epochs_completed: usize,
}

/// Trains one seeded run of `config.arch` with `config.activation`.
///
/// A non-finite loss stops training; the curves then end at the last completed
/// epoch and the run is marked `NotConverged`, as is any run finishing below
/// [`CHANCE_BAND`].
pub fn run_single(
    config: &ExperimentConfig,
    run_index: usize,
    train: &Dataset,
    test: &Dataset,
) -> Result<RunResult> {
    let label = config.activation.label();
    let seed = config.seeds[run_index];
    let mut rng = Rng::new(derive_seed(seed, &label, config.arch.label(), run_index));
    let mut net = build_network(config.arch, config.activation, &mut rng)?;

    let mut train_curve = Vec::new();
    let mut test_curve = Vec::new();
    let mut diverged = false;
    let mut epochs_completed = 0;
    for epoch in 1..=config.train.epochs {
        for (x, y) in batches(train, config.train.batch_size, &mut rng)? {
            let loss = net.train_step(&x, &y, &config.train, &mut rng)?;
            if !loss.is_finite() {
                diverged = true;
                break;
            }
        }
        if diverged || !net.is_finite() {
            diverged = true;
            log::warn!(
                "{label} on {} run {run_index}: diverged in epoch {epoch}",
                config.arch
            );
            break;
        }
        epochs_completed = epoch;
        if config.eval_every_epoch {
            train_curve.push(evaluate_accuracy(&net, train)?);
            test_curve.push(evaluate_accuracy(&net, test)?);
            log::info!(
                "{label} on {} run {run_index} epoch {epoch}: train {:.4} test {:.4}",
                config.arch,
                train_curve[epoch - 1],
                test_curve[epoch - 1]
            );
        }
    }

    let final_test_accuracy = match test_curve.last() {
        Some(&acc) if !diverged && epochs_completed == config.train.epochs => acc,
        _ => evaluate_accuracy(&net, test)?,
    };
    let status = if diverged || final_test_accuracy < CHANCE_BAND {
        RunStatus::NotConverged
    } else {
        RunStatus::Converged
    };
    Ok(RunResult {
        activation: label,
        arch: config.arch,
        seed,
        run_index,
        train_curve,
        test_curve,
        final_test_accuracy,
        status,
        epochs_completed,
    })
}

/// One [`RunResult`] per seed, in seed order. Seeds train in parallel.
pub fn run_training(
    config: &ExperimentConfig,
    train: &Dataset,
    test: &Dataset,
) -> Result<Vec<RunResult>> {
    config.validate()?;
    (0..config.seeds.len())
        .into_par_iter()
        .map(|i| run_single(config, i, train, test))
        .collect()
}

/// Like [`run_training`], but reuses results previously written under
/// `cache_dir` for an identical configuration.
pub fn run_training_cached(
    config: &ExperimentConfig,
    train: &Dataset,
    test: &Dataset,
    cache_dir: &Path,
) -> Result<Vec<RunResult>> {
    config.validate()?;
    let dir = cache_dir.join(cell_cache_key(config));
    if dir.join(RESULTS_CSV).exists() && dir.join(CURVES_CSV).exists() {
        let cached = load_results(&dir)?;
        if cached.len() == config.seeds.len() {
            return Ok(cached);
        }
    }
    let results = run_training(config, train, test)?;
    emit_report(&results, &dir)?;
    Ok(results)
}

/// Directory name identifying a cell's full configuration.
pub fn cell_cache_key(config: &ExperimentConfig) -> String {
    let t = &config.train;
    let fingerprint = format!(
        "{}|{}|lr={:e}|bs={}|ep={}|drop={:e}|seeds={:?}|every={}|v{}",
        config.arch.label(),
        config.activation.label(),
        t.learning_rate,
        t.batch_size,
        t.epochs,
        t.dropout_rate,
        config.seeds,
        config.eval_every_epoch,
        env!("CARGO_PKG_VERSION"),
    );
    let digest = Sha256::digest(fingerprint.as_bytes());
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    let safe_label: String = config
        .activation
        .label()
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{}__{}__{}", config.arch.label(), safe_label, hex)
}

/// 1-based index of the first epoch whose accuracy reaches `theta`.
pub fn epochs_to_threshold(curve: &[f64], theta: f64) -> Option<usize> {
    curve.iter().position(|&acc| acc >= theta).map(|i| i + 1)
}

/// Epoch-wise mean over runs, truncated to the shortest curve.
pub fn mean_curve(curves: &[&[f64]]) -> Vec<f64> {
    let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
    (0..len)
        .map(|e| curves.iter().map(|c| c[e]).sum::<f64>() / curves.len() as f64)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    /// Arithmetic mean of the runs' final test accuracies.
    pub mean: f64,
    pub runs: usize,
    /// `NotConverged` only when every run failed.
    pub status: RunStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub activation: String,
    pub is_fts: bool,
    /// Aligned with [`ResultsTable::archs`]; `None` where the cell was not run.
    pub cells: Vec<Option<Cell>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultsTable {
    pub archs: Vec<ArchId>,
    pub rows: Vec<TableRow>,
}

impl ResultsTable {
    /// Groups runs by (activation, arch). Rows and columns keep first-appearance order.
    pub fn from_results(results: &[RunResult]) -> Self {
        let mut archs: Vec<ArchId> = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        let mut groups: BTreeMap<(usize, usize), Vec<&RunResult>> = BTreeMap::new();
        for r in results {
            let a = archs.iter().position(|&x| x == r.arch).unwrap_or_else(|| {
                archs.push(r.arch);
                archs.len() - 1
            });
            let l = labels
                .iter()
                .position(|x| *x == r.activation)
                .unwrap_or_else(|| {
                    labels.push(r.activation.clone());
                    labels.len() - 1
                });
            groups.entry((l, a)).or_default().push(r);
        }
        let rows = labels
            .iter()
            .enumerate()
            .map(|(l, label)| TableRow {
                activation: label.clone(),
                is_fts: is_fts_label(label),
                cells: (0..archs.len())
                    .map(|a| groups.get(&(l, a)).map(|runs| summarize_cell(runs)))
                    .collect(),
            })
            .collect();
        ResultsTable { archs, rows }
    }

    pub fn cell(&self, activation: &str, arch: ArchId) -> Option<&Cell> {
        let a = self.archs.iter().position(|&x| x == arch)?;
        self.rows.iter().find(|r| r.activation == activation)?.cells[a].as_ref()
    }

    /// Row index of the best converged existing (non-FTS) activation in each column.
    pub fn stars(&self) -> Vec<Option<usize>> {
        (0..self.archs.len())
            .map(|a| {
                let mut best: Option<(usize, f64)> = None;
                for (i, row) in self.rows.iter().enumerate() {
                    if row.is_fts {
                        continue;
                    }
                    if let Some(cell) = row.cells[a] {
                        if cell.status == RunStatus::Converged
                            && best.is_none_or(|(_, m)| cell.mean > m)
                        {
                            best = Some((i, cell.mean));
                        }
                    }
                }
                best.map(|(i, _)| i)
            })
            .collect()
    }
}

fn is_fts_label(label: &str) -> bool {
    ActivationSpec::from_label(label).is_ok_and(|s| s.kind == ActivationKind::Fts)
}

fn summarize_cell(runs: &[&RunResult]) -> Cell {
    let mean = runs.iter().map(|r| r.final_test_accuracy).sum::<f64>() / runs.len() as f64;
    let status = if runs.iter().all(|r| r.status == RunStatus::NotConverged) {
        RunStatus::NotConverged
    } else {
        RunStatus::Converged
    };
    Cell {
        mean,
        runs: runs.len(),
        status,
    }
}

/// For every FTS row, the number of columns where its mean strictly beats the
/// starred existing activation.
pub fn compute_scores(table: &ResultsTable) -> Result<Vec<(String, usize)>> {
    let stars = table.stars();
    for (a, star) in stars.iter().enumerate() {
        if star.is_none() {
            return Err(Error::NoReference(table.archs[a].label().to_string()));
        }
    }
    Ok(table
        .rows
        .iter()
        .filter(|r| r.is_fts)
        .map(|row| {
            let score = stars
                .iter()
                .enumerate()
                .filter(|(a, star)| {
                    let reference = table.rows[star.expect("checked above")].cells[*a]
                        .expect("starred cell exists")
                        .mean;
                    row.cells[*a]
                        .is_some_and(|c| c.status == RunStatus::Converged && c.mean > reference)
                })
                .count();
            (row.activation.clone(), score)
        })
        .collect())
}

/// Sweep settings shared by every cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub eval_every_epoch: bool,
}

/// Cells of a sweep: every comparator, then FTS at each `t`, for each arch.
pub fn sweep_cells(
    archs: &[ArchId],
    t_values: &[f64],
    base: &SweepConfig,
) -> Result<Vec<ExperimentConfig>> {
    if t_values.is_empty() {
        return Err(Error::EmptySweep);
    }
    if archs.is_empty() {
        return Err(Error::InvalidArgument("no architectures in sweep".into()));
    }
    let activations: Vec<ActivationSpec> = comparators()
        .into_iter()
        .chain(t_values.iter().map(|&t| ActivationSpec::fts(t)))
        .collect();
    let mut cells = Vec::with_capacity(activations.len() * archs.len());
    for act in &activations {
        for &arch in archs {
            let cell = ExperimentConfig {
                arch,
                activation: *act,
                train: base.train,
                seeds: base.seeds.clone(),
                eval_every_epoch: base.eval_every_epoch,
            };
            cell.validate()?;
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// Runs every (activation × arch) cell of the sweep and tabulates the results.
/// With `cache_dir`, finished cells are reused and new ones stored.
pub fn t_sweep(
    archs: &[ArchId],
    t_values: &[f64],
    base: &SweepConfig,
    train: &Dataset,
    test: &Dataset,
    cache_dir: Option<&Path>,
) -> Result<(ResultsTable, Vec<RunResult>)> {
    let cells = sweep_cells(archs, t_values, base)?;
    let per_cell = cells
        .par_iter()
        .map(|cell| match cache_dir {
            Some(dir) => run_training_cached(cell, train, test, dir),
            None => run_training(cell, train, test),
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<RunResult> = per_cell.into_iter().flatten().collect();
    Ok((ResultsTable::from_results(&results), results))
}

pub const RESULTS_CSV: &str = "results.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CURVES_CSV: &str = "curves.csv";
pub const REPORT_MD: &str = "report.md";

/// 17 significant digits: parses back to the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `results.csv`, `curves.csv`, `summary.csv` and `report.md` into `out_dir`.
pub fn emit_report(results: &[RunResult], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_results_csv(results, out_dir)?;
    write_curves_csv(results, out_dir)?;
    emit_summary(results, out_dir)
}

/// Rewrites only `summary.csv` and `report.md` from the given runs.
pub fn emit_summary(results: &[RunResult], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let table = ResultsTable::from_results(results);
    write_summary_csv(&table, out_dir)?;
    let md = render_markdown(&table, results);
    let path = out_dir.join(REPORT_MD);
    fs::write(&path, md).map_err(|e| Error::io(&path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_results_csv(results: &[RunResult], dir: &Path) -> Result<()> {
    let path = dir.join(RESULTS_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "activation",
        "arch",
        "seed",
        "run",
        "epochs_completed",
        "final_test_acc",
        "status",
    ])?;
    for r in results {
        w.write_record([
            r.activation.clone(),
            r.arch.label().to_string(),
            r.seed.to_string(),
            r.run_index.to_string(),
            r.epochs_completed.to_string(),
            fmt_f64(r.final_test_accuracy),
            r.status.as_str().to_string(),
        ])?;
    }
    finish(w, &path)
}

fn write_curves_csv(results: &[RunResult], dir: &Path) -> Result<()> {
    let path = dir.join(CURVES_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "activation",
        "arch",
        "seed",
        "epoch",
        "train_acc",
        "test_acc",
    ])?;
    for r in results {
        for (e, (tr, te)) in r.train_curve.iter().zip(&r.test_curve).enumerate() {
            w.write_record([
                r.activation.clone(),
                r.arch.label().to_string(),
                r.seed.to_string(),
                (e + 1).to_string(),
                fmt_f64(*tr),
                fmt_f64(*te),
            ])?;
        }
    }
    finish(w, &path)
}

fn write_summary_csv(table: &ResultsTable, dir: &Path) -> Result<()> {
    let path = dir.join(SUMMARY_CSV);
    let mut w = csv_writer(&path)?;
    let stars = table.stars();
    let scores: Option<BTreeMap<String, usize>> =
        compute_scores(table).ok().map(|s| s.into_iter().collect());

    let mut header = vec!["activation".to_string()];
    for arch in &table.archs {
        header.push(arch.label().to_string());
        header.push(format!("{}_star", arch.label()));
    }
    header.push("score".into());
    w.write_record(&header)?;

    for (i, row) in table.rows.iter().enumerate() {
        let mut rec = vec![row.activation.clone()];
        for (a, cell) in row.cells.iter().enumerate() {
            rec.push(match cell {
                None => String::new(),
                Some(c) if c.status == RunStatus::NotConverged => "NotConverged".into(),
                Some(c) => fmt_f64(c.mean),
            });
            rec.push(if stars[a] == Some(i) { "1" } else { "0" }.into());
        }
        rec.push(match (&scores, row.is_fts) {
            (Some(s), true) => s[&row.activation].to_string(),
            _ => "-".into(),
        });
        w.write_record(&rec)?;
    }
    finish(w, &path)
}

fn render_markdown(table: &ResultsTable, results: &[RunResult]) -> String {
    let stars = table.stars();
    let scores: Option<BTreeMap<String, usize>> =
        compute_scores(table).ok().map(|s| s.into_iter().collect());
    let mut md = String::new();
    let _ = writeln!(md, "# Mean test accuracy (%)\n");
    let runs: usize = table
        .rows
        .iter()
        .flat_map(|r| r.cells.iter().flatten())
        .map(|c| c.runs)
        .max()
        .unwrap_or(0);
    let _ = writeln!(
        md,
        "Mean of up to {runs} runs per cell. `*` marks the best existing activation per column.\n"
    );
    let _ = write!(md, "| Activation |");
    for a in &table.archs {
        let _ = write!(md, " {a} |");
    }
    let _ = writeln!(md, " Score |");
    let _ = writeln!(md, "|---|{}---|", "---|".repeat(table.archs.len()));
    for (i, row) in table.rows.iter().enumerate() {
        let _ = write!(md, "| {} |", row.activation);
        for (a, cell) in row.cells.iter().enumerate() {
            let text = match cell {
                None => "".to_string(),
                Some(c) if c.status == RunStatus::NotConverged => "Not converged".to_string(),
                Some(c) => format!(
                    "{:.2}{}",
                    c.mean * 100.0,
                    if stars[a] == Some(i) { "*" } else { "" }
                ),
            };
            let _ = write!(md, " {text} |");
        }
        let score = match (&scores, row.is_fts) {
            (Some(s), true) => s[&row.activation].to_string(),
            _ => "-".into(),
        };
        let _ = writeln!(md, " {score} |");
    }

    let relu = ActivationSpec::relu().label();
    let mut speed = String::new();
    for &arch in &table.archs {
        let curves_of = |label: &str| -> Vec<f64> {
            let cs: Vec<&[f64]> = results
                .iter()
                .filter(|r| r.arch == arch && r.activation == label)
                .map(|r| r.test_curve.as_slice())
                .collect();
            mean_curve(&cs)
        };
        let baseline = curves_of(&relu);
        let Some(&theta) = baseline.last() else {
            continue;
        };
        for row in table.rows.iter().filter(|r| r.is_fts) {
            let curve = curves_of(&row.activation);
            if curve.is_empty() {
                continue;
            }
            let fmt_epoch = |e: Option<usize>| e.map_or("never".to_string(), |e| e.to_string());
            let _ = writeln!(
                speed,
                "| {arch} | {} | {:.2} | {} | {} |",
                row.activation,
                theta * 100.0,
                fmt_epoch(epochs_to_threshold(&curve, theta)),
                fmt_epoch(epochs_to_threshold(&baseline, theta)),
            );
        }
    }
    if !speed.is_empty() {
        let _ = writeln!(md, "\n# Convergence speed\n");
        let _ = writeln!(
            md,
            "Epochs for the mean test curve to reach ReLU's final mean test accuracy.\n"
        );
        let _ = writeln!(
            md,
            "| Arch | Activation | Target (%) | Epochs | ReLU epochs |"
        );
        let _ = writeln!(md, "|---|---|---|---|---|");
        md.push_str(&speed);
    }
    md
}

/// Reads `results.csv` and `curves.csv` back into runs.
pub fn load_results(dir: &Path) -> Result<Vec<RunResult>> {
    let bad = |what: &str| Error::InvalidArgument(format!("{}: malformed {what}", dir.display()));
    let results_path = dir.join(RESULTS_CSV);
    let mut rdr = csv::Reader::from_path(&results_path)?;
    let mut runs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 7 {
            return Err(bad("results row"));
        }
        runs.push(RunResult {
            activation: rec[0].to_string(),
            arch: rec[1].parse()?,
            seed: rec[2].parse().map_err(|_| bad("seed"))?,
            run_index: rec[3].parse().map_err(|_| bad("run"))?,
            epochs_completed: rec[4].parse().map_err(|_| bad("epochs_completed"))?,
            final_test_accuracy: rec[5].parse().map_err(|_| bad("final_test_acc"))?,
            status: rec[6].parse()?,
            train_curve: Vec::new(),
            test_curve: Vec::new(),
        });
    }
    let curves_path = dir.join(CURVES_CSV);
    if curves_path.exists() {
        let mut rdr = csv::Reader::from_path(&curves_path)?;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 6 {
                return Err(bad("curves row"));
            }
            let arch: ArchId = rec[1].parse()?;
            let seed: u64 = rec[2].parse().map_err(|_| bad("seed"))?;
            let run = runs
                .iter_mut()
                .find(|r| r.activation == rec[0] && r.arch == arch && r.seed == seed)
                .ok_or_else(|| bad("curve without matching run"))?;
            run.train_curve
                .push(rec[4].parse().map_err(|_| bad("train_acc"))?);
            run.test_curve
                .push(rec[5].parse().map_err(|_| bad("test_acc"))?);
        }
    }
    Ok(runs)
}
