//! Sweep expansion and execution. A config expands to one deterministic,
//! canonically ordered list of runs; each run executes independently
//! (optionally in parallel) and a single collector writes the result
//! files so reruns never reorder rows.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use auglag::methods::{
    admm_solve, alm_solve, fp_train, sadmm_train, sal_train, InnerSolve, MethodError,
};
use auglag::objective::OnDataset;
use auglag::{
    ConstraintSet, ConstraintSpec, ConstraintSystem, CvOrder, Dataset, FpConfig, MlpObjective,
    MlpSpec, ParamVector, SadmmConfig, SalConfig, Termination, TrainingRecord,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{DatasetConfig, ExperimentConfig, MethodName};
use crate::idx::{self, IdxError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Idx(#[from] IdxError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Data(#[from] auglag::data::DataError),
    #[error(transparent)]
    Objective(#[from] auglag::objective::ObjectiveError),
    #[error(transparent)]
    Constraint(#[from] auglag::constraint::ConstraintError),
    #[error(transparent)]
    Metrics(#[from] auglag::metrics::MetricsError),
}

/// One grid point of the sweep, fully determined by the config.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub run_id: usize,
    pub method: MethodName,
    /// Grid coordinates in canonical order, e.g. `[("rho", 0.001), ("lr", 1e-4)]`.
    pub params: Vec<(&'static str, f64)>,
    /// Seed as listed in the config (before `--seed-offset`).
    pub seed: u64,
}

impl RunSpec {
    pub fn hyperparams(&self) -> String {
        let mut s = String::new();
        for (i, (k, v)) in self.params.iter().enumerate() {
            if i > 0 {
                s.push(';');
            }
            s.push_str(k);
            s.push('=');
            s.push_str(&v.to_string());
        }
        s
    }

    fn param(&self, key: &str) -> f64 {
        self.params
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .expect("run spec carries its own grid keys")
    }
}

/// Cartesian expansion in canonical order: methods as listed, then grid
/// points (first key outermost), then seeds as listed. Run ids are the
/// positions in this order.
pub fn expand_sweep(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let mut specs = Vec::new();
    let push = |method: MethodName, params: Vec<(&'static str, f64)>, specs: &mut Vec<RunSpec>| {
        for &seed in &cfg.run.seeds {
            specs.push(RunSpec {
                run_id: specs.len(),
                method,
                params: params.clone(),
                seed,
            });
        }
    };
    for &method in &cfg.run.methods {
        match method {
            MethodName::Fp => {
                for &rho in &cfg.grid.fp.rho {
                    for &lr in &cfg.grid.fp.lr {
                        push(method, vec![("rho", rho), ("lr", lr)], &mut specs);
                    }
                }
            }
            MethodName::Sal => {
                for &mu in &cfg.grid.sal.mu_init {
                    for &lr in &cfg.grid.sal.lr {
                        push(method, vec![("mu_init", mu), ("lr", lr)], &mut specs);
                    }
                }
            }
            MethodName::Sadmm => {
                for &rho in &cfg.grid.sadmm.rho {
                    for &eta0 in &cfg.grid.sadmm.eta0 {
                        push(method, vec![("rho", rho), ("eta0", eta0)], &mut specs);
                    }
                }
            }
            MethodName::Alm => {
                for &rho in &cfg.grid.alm.rho {
                    push(method, vec![("rho", rho)], &mut specs);
                }
            }
            MethodName::Admm => {
                for &rho in &cfg.grid.admm.rho {
                    push(method, vec![("rho", rho)], &mut specs);
                }
            }
        }
    }
    specs
}

/// A CSV metric cell: a number, the distinguished `undefined` marker
/// (relative violation with a feasible initialization), or absent
/// (aborted run / metric not produced).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    Undefined,
    Absent,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }

    fn to_field(self) -> String {
        match self {
            Cell::Value(v) => v.to_string(),
            Cell::Undefined => "undefined".into(),
            Cell::Absent => String::new(),
        }
    }

    fn parse(field: &str) -> Result<Cell, String> {
        match field {
            "" => Ok(Cell::Absent),
            "undefined" => Ok(Cell::Undefined),
            s => s
                .parse::<f64>()
                .map(Cell::Value)
                .map_err(|_| format!("expected a number, \"undefined\", or empty; got {s:?}")),
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(x) => Cell::Value(x),
            None => Cell::Undefined,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub run_id: usize,
    pub method: String,
    pub hyperparams: String,
    /// Seed actually used (config seed plus `--seed-offset`).
    pub seed: u64,
    pub cv_rel_final: Cell,
    pub cv_p2_final: Cell,
    pub accuracy: Cell,
    pub wall_time_s: f64,
    pub termination: String,
}

pub const RUNS_HEADER: [&str; 9] = [
    "run_id",
    "method",
    "hyperparams",
    "seed",
    "cv_rel_final",
    "cv_p2_final",
    "accuracy",
    "wall_time_s",
    "termination",
];

/// Everything shared across runs of one experiment. Datasets and the
/// constraint set are immutable, so parallel runs may borrow freely.
pub struct SweepContext {
    pub cfg: ExperimentConfig,
    pub train: Dataset,
    pub test: Dataset,
    pub mlp: MlpObjective,
    pub set: ConstraintSet,
    pub cv_order: CvOrder,
    pub seed_offset: u64,
}

impl SweepContext {
    pub fn build(cfg: ExperimentConfig, seed_offset: u64) -> Result<Self, HarnessError> {
        let (train, test) = load_datasets(&cfg)?;
        let mut widths = Vec::with_capacity(cfg.model.hidden.len() + 2);
        widths.push(train.dim());
        widths.extend_from_slice(&cfg.model.hidden);
        widths.push(train.n_classes());
        let mlp = MlpObjective::new(MlpSpec::new(widths)?);
        let specs: Vec<ConstraintSpec> = cfg
            .constraints
            .iter()
            .map(|c| ConstraintSpec::new(c.kind.to_kind(), c.to_target()))
            .collect();
        let set = ConstraintSet::new(specs);
        let cv_order = cfg
            .run
            .cv_order
            .resolve()
            .expect("config was validated before the sweep");
        Ok(Self {
            cfg,
            train,
            test,
            mlp,
            set,
            cv_order,
            seed_offset,
        })
    }

    fn test_accuracy(&self, theta: &ParamVector) -> Option<f64> {
        use auglag::Objective;
        let idx = self.test.all_indices();
        let preds = self
            .mlp
            .predict(theta, auglag::Batch::new(&self.test, &idx))?;
        auglag::metrics::accuracy(&preds, self.test.labels()).ok()
    }

    fn cv_at(&self, theta: &ParamVector, order: CvOrder) -> Result<f64, MethodError> {
        let c = self.set.evaluate(theta)?;
        Ok(auglag::metrics::cv(&c, order)?)
    }

    /// Execute one run; failures become aborted rows, never panics.
    pub fn execute(&self, spec: &RunSpec) -> (ResultRow, Option<TrainingRecord>) {
        let started = Instant::now();
        let outcome = self.dispatch(spec);
        let wall_time_s = started.elapsed().as_secs_f64();
        let mut row = ResultRow {
            run_id: spec.run_id,
            method: spec.method.to_string(),
            hyperparams: spec.hyperparams(),
            seed: spec.seed.wrapping_add(self.seed_offset),
            cv_rel_final: Cell::Absent,
            cv_p2_final: Cell::Absent,
            accuracy: Cell::Absent,
            wall_time_s,
            termination: String::new(),
        };
        match outcome {
            Ok(RunOutcome::Record(record)) => {
                row.termination = termination_label(&record.termination).into();
                row.cv_rel_final = record.cv_rel_final().into();
                row.cv_p2_final = match self.cv_at(&record.theta, CvOrder::P(2.0)) {
                    Ok(v) => Cell::Value(v),
                    Err(_) => Cell::Absent,
                };
                row.accuracy = match self.test_accuracy(&record.theta) {
                    Some(a) => Cell::Value(a),
                    None => Cell::Absent,
                };
                (row, Some(record))
            }
            Ok(RunOutcome::Point { theta, cv0 }) => {
                row.termination = "completed".into();
                match self.cv_at(&theta, self.cv_order) {
                    Ok(cv_final) => {
                        row.cv_rel_final = if cv0 > 0.0 {
                            Cell::Value(cv_final / cv0)
                        } else {
                            Cell::Undefined
                        };
                    }
                    Err(_) => row.cv_rel_final = Cell::Absent,
                }
                row.cv_p2_final = match self.cv_at(&theta, CvOrder::P(2.0)) {
                    Ok(v) => Cell::Value(v),
                    Err(_) => Cell::Absent,
                };
                row.accuracy = match self.test_accuracy(&theta) {
                    Some(a) => Cell::Value(a),
                    None => Cell::Absent,
                };
                (row, None)
            }
            Err(e) => {
                row.termination = format!("aborted: {e}");
                (row, None)
            }
        }
    }

    fn dispatch(&self, spec: &RunSpec) -> Result<RunOutcome, MethodError> {
        let run = &self.cfg.run;
        let seed = spec.seed.wrapping_add(self.seed_offset);
        let theta0 = self.mlp.spec().init_params(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match spec.method {
            MethodName::Fp => {
                let fp = FpConfig::uniform(spec.param("rho"), self.cfg.constraints.len());
                let solver = run.solver.to_config(spec.param("lr"), run.lr_decay);
                let record = fp_train(
                    &self.mlp,
                    &self.set,
                    &fp,
                    solver,
                    &self.train,
                    theta0,
                    run.epochs,
                    run.n_batch,
                    self.cv_order,
                    &mut rng,
                )?;
                Ok(RunOutcome::Record(record))
            }
            MethodName::Sal => {
                let g = &self.cfg.grid.sal;
                let sal = SalConfig {
                    eta: g.eta,
                    eps_f: g.eps_f,
                    eps_c: g.eps_c,
                    mu_init: spec.param("mu_init"),
                    sigma: g.sigma,
                    mu_max: g.mu_max,
                    n_batch: run.n_batch,
                    n_shuffle: run.epochs,
                    n_aug_lag: g.n_aug_lag,
                };
                let solver = run.solver.to_config(spec.param("lr"), run.lr_decay);
                let record = sal_train(
                    &self.mlp,
                    &self.set,
                    &sal,
                    solver,
                    &self.train,
                    theta0,
                    self.cv_order,
                    &mut rng,
                )?;
                Ok(RunOutcome::Record(record))
            }
            MethodName::Sadmm => {
                let cfg = SadmmConfig::new(
                    spec.param("rho"),
                    spec.param("eta0"),
                    run.epochs,
                    run.n_batch,
                );
                let record = sadmm_train(
                    &self.mlp,
                    &self.set,
                    &cfg,
                    &self.train,
                    theta0,
                    self.cv_order,
                    &mut rng,
                )?;
                Ok(RunOutcome::Record(record))
            }
            MethodName::Alm => {
                let g = &self.cfg.grid.alm;
                let obj = OnDataset {
                    objective: &self.mlp,
                    data: &self.train,
                };
                let cv0 = self.cv_at(&theta0, self.cv_order)?;
                let inner = InnerSolve {
                    grad_tol: g.inner_grad_tol,
                    max_iters: g.inner_max_iters,
                };
                let (theta, _lambda) = alm_solve(
                    &obj,
                    &self.set,
                    &theta0,
                    spec.param("rho"),
                    g.outer_iters,
                    inner,
                )?;
                Ok(RunOutcome::Point { theta, cv0 })
            }
            MethodName::Admm => {
                let g = &self.cfg.grid.admm;
                let obj = OnDataset {
                    objective: &self.mlp,
                    data: &self.train,
                };
                let cv0 = self.cv_at(&theta0, self.cv_order)?;
                let mut cfg = auglag::AdmmConfig::new(spec.param("rho"), g.outer_iters);
                cfg.dual_step = g.dual_step.to_dual_step();
                cfg.inner = InnerSolve {
                    grad_tol: g.inner_grad_tol,
                    max_iters: g.inner_max_iters,
                };
                let sol = admm_solve(&obj, &self.set, &theta0, &cfg)?;
                Ok(RunOutcome::Point {
                    theta: sol.theta,
                    cv0,
                })
            }
        }
    }
}

enum RunOutcome {
    /// Epoch-traced stochastic training.
    Record(TrainingRecord),
    /// Deterministic full-batch solve: final parameters only.
    Point { theta: ParamVector, cv0: f64 },
}

fn termination_label(t: &Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::Converged { .. } => "converged",
        Termination::Diverged { .. } => "non-finite",
    }
}

/// Rows included in summary statistics: runs that finished training.
/// Divergent ("non-finite") and aborted rows are counted but excluded
/// from the means.
pub fn row_is_included(row: &ResultRow) -> bool {
    row.termination == "completed" || row.termination == "converged"
}

pub fn load_datasets(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset), HarnessError> {
    match &cfg.dataset {
        DatasetConfig::Synthetic(s) => {
            let train = auglag::data::synth_gaussians(
                s.n_per_class,
                s.classes,
                s.dim,
                s.separation,
                s.seed,
            );
            let test_n = s.test_n_per_class.unwrap_or(s.n_per_class);
            let test = auglag::data::synth_gaussians(
                test_n,
                s.classes,
                s.dim,
                s.separation,
                s.seed.wrapping_add(1),
            );
            Ok((train, test))
        }
        DatasetConfig::Idx(ix) => {
            let train = idx::load_idx(&ix.train_images, &ix.train_labels, ix.limit_train)?;
            let test = idx::load_idx(&ix.test_images, &ix.test_labels, ix.limit_test)?;
            Ok((train, test))
        }
    }
}

/// Execute the whole sweep with up to `jobs` runs in parallel. Results
/// come back in canonical run order regardless of scheduling.
pub fn run_sweep(
    ctx: &SweepContext,
    specs: &[RunSpec],
    jobs: usize,
) -> Vec<(ResultRow, Option<TrainingRecord>)> {
    if jobs <= 1 {
        specs.iter().map(|s| ctx.execute(s)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool construction");
        pool.install(|| specs.par_iter().map(|s| ctx.execute(s)).collect())
    }
}

pub fn write_runs_csv(path: &Path, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RUNS_HEADER)?;
    for r in rows {
        w.write_record([
            r.run_id.to_string(),
            r.method.clone(),
            r.hyperparams.clone(),
            r.seed.to_string(),
            r.cv_rel_final.to_field(),
            r.cv_p2_final.to_field(),
            r.accuracy.to_field(),
            r.wall_time_s.to_string(),
            r.termination.clone(),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let display = path.display().to_string();
    let malformed = |line: usize, message: String| HarnessError::Malformed {
        path: display.clone(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    {
        let headers = reader.headers()?;
        if headers.iter().ne(RUNS_HEADER) {
            return Err(malformed(1, format!("unexpected header {headers:?}")));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != RUNS_HEADER.len() {
            return Err(malformed(
                line,
                format!("expected 9 fields, got {}", record.len()),
            ));
        }
        let field = |j: usize| record.get(j).unwrap_or("");
        let parse_cell = |j: usize| Cell::parse(field(j)).map_err(|m| malformed(line, m));
        rows.push(ResultRow {
            run_id: field(0)
                .parse()
                .map_err(|_| malformed(line, format!("bad run_id {:?}", field(0))))?,
            method: field(1).to_string(),
            hyperparams: field(2).to_string(),
            seed: field(3)
                .parse()
                .map_err(|_| malformed(line, format!("bad seed {:?}", field(3))))?,
            cv_rel_final: parse_cell(4)?,
            cv_p2_final: parse_cell(5)?,
            accuracy: parse_cell(6)?,
            wall_time_s: field(7)
                .parse()
                .map_err(|_| malformed(line, format!("bad wall_time_s {:?}", field(7))))?,
            termination: field(8).to_string(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub n_runs: usize,
    pub n_included: usize,
    pub n_excluded: usize,
    pub cv_rel: (Cell, Cell),
    pub cv_p2: (Cell, Cell),
    pub accuracy: (Cell, Cell),
}

/// Mean and population standard deviation, in plain left-to-right
/// summation order so the result is recomputable from the CSV text.
fn mean_std(values: &[f64]) -> (Cell, Cell) {
    if values.is_empty() {
        return (Cell::Absent, Cell::Absent);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (Cell::Value(mean), Cell::Value(var.sqrt()))
}

/// Per-method aggregation over included rows, mirroring mean(σ) table
/// cells. Methods appear in first-occurrence order.
pub fn summarize_rows(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let of_method: Vec<&ResultRow> = rows.iter().filter(|r| r.method == m).collect();
            let included: Vec<&&ResultRow> =
                of_method.iter().filter(|r| row_is_included(r)).collect();
            let column = |get: fn(&ResultRow) -> Cell| -> Vec<f64> {
                included.iter().filter_map(|r| get(r).value()).collect()
            };
            SummaryRow {
                method: m.to_string(),
                n_runs: of_method.len(),
                n_included: included.len(),
                n_excluded: of_method.len() - included.len(),
                cv_rel: mean_std(&column(|r| r.cv_rel_final)),
                cv_p2: mean_std(&column(|r| r.cv_p2_final)),
                accuracy: mean_std(&column(|r| r.accuracy)),
            }
        })
        .collect()
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "method",
    "n_runs",
    "n_included",
    "n_excluded",
    "cv_rel_final_mean",
    "cv_rel_final_std",
    "cv_p2_final_mean",
    "cv_p2_final_std",
    "accuracy_mean",
    "accuracy_std",
];

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.n_runs.to_string(),
            r.n_included.to_string(),
            r.n_excluded.to_string(),
            r.cv_rel.0.to_field(),
            r.cv_rel.1.to_field(),
            r.cv_p2.0.to_field(),
            r.cv_p2.1.to_field(),
            r.accuracy.0.to_field(),
            r.accuracy.1.to_field(),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, record: &TrainingRecord) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "epoch",
        "loss",
        "cv_p",
        "cv_rel",
        "accuracy",
        "lambda_inf",
        "penalty",
        "lr",
    ])?;
    for row in &record.rows {
        w.write_record([
            row.epoch.to_string(),
            row.loss.to_string(),
            row.cv_p.to_string(),
            Cell::from(row.cv_rel).to_field(),
            match row.accuracy {
                Some(a) => a.to_string(),
                None => String::new(),
            },
            row.lambda_inf.to_string(),
            row.penalty.to_string(),
            row.lr.to_string(),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// End-to-end `run` command: expand, execute, and write `runs.csv`,
/// `summary.csv`, and one `trace_<run_id>.csv` per epoch-traced run.
pub fn run_experiment(
    cfg: ExperimentConfig,
    out_override: Option<PathBuf>,
    jobs: usize,
    seed_offset: u64,
) -> Result<PathBuf, HarnessError> {
    let out_dir = out_override.unwrap_or_else(|| cfg.run.out_dir.clone());
    fs::create_dir_all(&out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let specs = expand_sweep(&cfg);
    let ctx = SweepContext::build(cfg, seed_offset)?;
    let results = run_sweep(&ctx, &specs, jobs);
    let rows: Vec<ResultRow> = results.iter().map(|(row, _)| row.clone()).collect();
    write_runs_csv(&out_dir.join("runs.csv"), &rows)?;
    write_summary_csv(&out_dir.join("summary.csv"), &summarize_rows(&rows))?;
    for (row, record) in &results {
        if let Some(record) = record {
            write_trace_csv(&out_dir.join(format!("trace_{}.csv", row.run_id)), record)?;
        }
    }
    Ok(out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use std::io::Write as _;

    fn small_config(dir: &Path, extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
            [dataset]
            kind = "synthetic"
            n_per_class = 20
            classes = 2
            dim = 3
            separation = 6.0
            test_n_per_class = 30

            [run]
            methods = ["fp", "sal"]
            seeds = [0, 1]
            epochs = 3
            n_batch = 8

            [grid.fp]
            rho = [0.01]
            lr = [0.05]

            [grid.sal]
            mu_init = [0.01]
            lr = [0.05]
            {extra}
            "#
        );
        let path = dir.join("cfg.toml");
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        parse_config(&path).unwrap()
    }

    #[test]
    fn sweep_cardinality_is_methods_by_grid_by_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), "");
        let specs = expand_sweep(&cfg);
        assert_eq!(specs.len(), 4); // 2 methods × 1 grid point × 2 seeds
        let ids: Vec<usize> = specs.iter().map(|s| s.run_id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(specs[0].hyperparams(), "rho=0.01;lr=0.05");
        assert_eq!(specs[2].hyperparams(), "mu_init=0.01;lr=0.05");
    }

    #[test]
    fn run_experiment_writes_one_row_per_run_and_matching_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "\n[[constraints]]\nkind = \"l2\"\ntarget = \"all\"\n",
        );
        let out = dir.path().join("out");
        run_experiment(cfg, Some(out.clone()), 1, 0).unwrap();

        let rows = read_runs_csv(&out.join("runs.csv")).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(row_is_included), "{rows:?}");
        assert!(out.join("trace_0.csv").exists());
        assert!(out.join("trace_3.csv").exists());

        let summary = summarize_rows(&rows);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].method, "fp");
        assert_eq!(summary[0].n_runs, 2);
        // Means recomputable from the parsed rows, bit for bit.
        let fp_acc: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == "fp")
            .filter_map(|r| r.accuracy.value())
            .collect();
        let expect = fp_acc.iter().sum::<f64>() / fp_acc.len() as f64;
        assert_eq!(summary[0].accuracy.0, Cell::Value(expect));
    }

    #[test]
    fn reruns_are_deterministic_and_parallelism_does_not_reorder() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "\n[[constraints]]\nkind = \"l1\"\ntarget = \"all\"\n",
        );
        let specs = expand_sweep(&cfg);
        let ctx = SweepContext::build(cfg, 0).unwrap();
        let serial = run_sweep(&ctx, &specs, 1);
        let parallel = run_sweep(&ctx, &specs, 4);
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.0.cv_rel_final, b.0.cv_rel_final);
            assert_eq!(a.0.cv_p2_final, b.0.cv_p2_final);
            assert_eq!(a.0.accuracy, b.0.accuracy);
            assert_eq!(a.0.termination, b.0.termination);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn divergent_runs_become_non_finite_rows_and_are_excluded_from_means() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(
            dir.path(),
            "\n[[constraints]]\nkind = \"l2\"\ntarget = \"all\"\n",
        );
        cfg.grid.fp.rho = vec![1e9];
        cfg.grid.fp.lr = vec![10.0];
        cfg.run.methods = vec![MethodName::Fp];
        let out = dir.path().join("out");
        run_experiment(cfg, Some(out.clone()), 1, 0).unwrap();
        let rows = read_runs_csv(&out.join("runs.csv")).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(
            rows.iter().all(|r| r.termination == "non-finite"),
            "{rows:?}"
        );
        let summary = summarize_rows(&rows);
        assert_eq!(summary[0].n_excluded, 2);
        assert_eq!(summary[0].accuracy.0, Cell::Absent);
    }

    #[test]
    fn seed_offset_shifts_the_recorded_seed_and_the_trajectory() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "\n[[constraints]]\nkind = \"l2\"\ntarget = \"all\"\n",
        );
        let specs = expand_sweep(&cfg);
        let ctx0 = SweepContext::build(cfg.clone(), 0).unwrap();
        let ctx9 = SweepContext::build(cfg, 9).unwrap();
        let (r0, _) = ctx0.execute(&specs[0]);
        let (r9, _) = ctx9.execute(&specs[0]);
        assert_eq!(r0.seed, 0);
        assert_eq!(r9.seed, 9);
        assert_ne!(r0.accuracy, Cell::Absent);
        assert_ne!(r0.cv_p2_final, r9.cv_p2_final);
    }
}
