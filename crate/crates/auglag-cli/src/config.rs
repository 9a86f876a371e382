//! Declarative experiment configuration: TOML on disk, strict parsing
//! (unknown keys rejected), then whole-config validation that reports
//! every violation at once.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use auglag::{ConstraintKind, CvOrder, SolverConfig, Target};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config:\n  - {}", violations.join("\n  - "))]
    Validation { violations: Vec<String> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
    pub run: RunSection,
    #[serde(default)]
    pub grid: GridSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Synthetic(SyntheticDataset),
    Idx(IdxDataset),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDataset {
    pub n_per_class: usize,
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
    /// Test rows per class; defaults to the training count.
    #[serde(default)]
    pub test_n_per_class: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxDataset {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default)]
    pub limit_train: Option<usize>,
    #[serde(default)]
    pub limit_test: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Hidden-layer widths; empty means softmax regression.
    #[serde(default)]
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    L1,
    L2,
    Orthogonality,
    #[serde(alias = "nonnegativity")]
    NonNegativity,
}

impl KindName {
    pub fn to_kind(self) -> ConstraintKind {
        match self {
            KindName::L1 => ConstraintKind::L1,
            KindName::L2 => ConstraintKind::L2,
            KindName::Orthogonality => ConstraintKind::Orthogonality,
            KindName::NonNegativity => ConstraintKind::NonNegativity,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub kind: KindName,
    /// `"all"` or a parameter-group name (`w0`, `b0`, `w1`, …).
    #[serde(default = "default_target")]
    pub target: String,
}

fn default_target() -> String {
    "all".into()
}

impl ConstraintConfig {
    pub fn to_target(&self) -> Target {
        if self.target.eq_ignore_ascii_case("all") {
            Target::All
        } else {
            Target::Group(self.target.clone())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Fp,
    Sal,
    Sadmm,
    Alm,
    Admm,
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodName::Fp => "fp",
            MethodName::Sal => "sal",
            MethodName::Sadmm => "sadmm",
            MethodName::Alm => "alm",
            MethodName::Admm => "admm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    #[default]
    Sgd,
    Adam,
}

impl SolverName {
    pub fn to_config(self, lr0: f64, decay: f64) -> SolverConfig {
        match self {
            SolverName::Sgd => SolverConfig::sgd(lr0).with_decay(decay),
            SolverName::Adam => SolverConfig::adam(lr0).with_decay(decay),
        }
    }
}

/// `cv_order = 2.0` or `cv_order = "inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CvOrderConfig {
    P(f64),
    Named(String),
}

impl CvOrderConfig {
    pub fn resolve(&self) -> Result<CvOrder, String> {
        match self {
            CvOrderConfig::P(p) if p.is_finite() && *p >= 1.0 => Ok(CvOrder::P(*p)),
            CvOrderConfig::P(p) => Err(format!("cv_order must be ≥ 1 or \"inf\", got {p}")),
            CvOrderConfig::Named(s) if s.eq_ignore_ascii_case("inf") => Ok(CvOrder::Inf),
            CvOrderConfig::Named(s) => Err(format!("cv_order must be ≥ 1 or \"inf\", got \"{s}\"")),
        }
    }
}

impl Default for CvOrderConfig {
    fn default() -> Self {
        CvOrderConfig::P(2.0)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub methods: Vec<MethodName>,
    pub seeds: Vec<u64>,
    /// Pass count over the training set: epochs for FP/S-ADMM, shuffles
    /// for SAL.
    pub epochs: usize,
    #[serde(default = "default_n_batch")]
    pub n_batch: usize,
    #[serde(default)]
    pub cv_order: CvOrderConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub solver: SolverName,
    #[serde(default = "default_one")]
    pub lr_decay: f64,
}

fn default_n_batch() -> usize {
    128
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_one() -> f64 {
    1.0
}

fn default_lr_grid() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5]
}

fn default_rho_grid() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 1e-1]
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub fp: FpGrid,
    pub sal: SalGrid,
    pub sadmm: SadmmGrid,
    pub alm: AlmGrid,
    pub admm: AdmmGrid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FpGrid {
    pub rho: Vec<f64>,
    pub lr: Vec<f64>,
}

impl Default for FpGrid {
    fn default() -> Self {
        Self {
            rho: default_rho_grid(),
            lr: default_lr_grid(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SalGrid {
    pub mu_init: Vec<f64>,
    pub lr: Vec<f64>,
    pub eta: f64,
    pub sigma: f64,
    pub mu_max: f64,
    pub eps_f: f64,
    pub eps_c: f64,
    pub n_aug_lag: usize,
}

impl Default for SalGrid {
    fn default() -> Self {
        Self {
            mu_init: default_rho_grid(),
            lr: default_lr_grid(),
            eta: 0.9,
            sigma: 2.0,
            mu_max: 100.0,
            eps_f: 0.0,
            eps_c: 0.0,
            n_aug_lag: 4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SadmmGrid {
    pub rho: Vec<f64>,
    pub eta0: Vec<f64>,
}

impl Default for SadmmGrid {
    fn default() -> Self {
        Self {
            rho: vec![1.0],
            eta0: default_lr_grid(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlmGrid {
    pub rho: Vec<f64>,
    pub outer_iters: usize,
    pub inner_grad_tol: f64,
    pub inner_max_iters: usize,
}

impl Default for AlmGrid {
    fn default() -> Self {
        Self {
            rho: vec![1.0],
            outer_iters: 50,
            inner_grad_tol: 1e-8,
            inner_max_iters: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualStepName {
    #[default]
    ScaledByRho,
    Conventional,
}

impl DualStepName {
    pub fn to_dual_step(self) -> auglag::DualStep {
        match self {
            DualStepName::ScaledByRho => auglag::DualStep::ScaledByRho,
            DualStepName::Conventional => auglag::DualStep::Conventional,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmGrid {
    pub rho: Vec<f64>,
    pub outer_iters: usize,
    pub dual_step: DualStepName,
    pub inner_grad_tol: f64,
    pub inner_max_iters: usize,
}

impl Default for AdmmGrid {
    fn default() -> Self {
        Self {
            rho: vec![1.0],
            outer_iters: 50,
            dual_step: DualStepName::default(),
            inner_grad_tol: 1e-8,
            inner_max_iters: 50_000,
        }
    }
}

impl ExperimentConfig {
    /// Parameter-group names of the configured model: `w0`, `b0`, …
    /// These depend only on the layer count, never on the dataset.
    pub fn group_names(&self) -> Vec<String> {
        let layers = self.model.hidden.len() + 1;
        let mut names = Vec::with_capacity(2 * layers);
        for l in 0..layers {
            names.push(format!("w{l}"));
            names.push(format!("b{l}"));
        }
        names
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation { violations })
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let run = &self.run;
        if run.methods.is_empty() {
            v.push("methods must list at least one method".into());
        }
        if run.seeds.is_empty() {
            v.push("seeds must list at least one seed".into());
        }
        if run.epochs == 0 {
            v.push("epochs must be ≥ 1".into());
        }
        if run.n_batch == 0 {
            v.push("n_batch must be ≥ 1".into());
        }
        if let Err(e) = run.cv_order.resolve() {
            v.push(e);
        }
        if !run.lr_decay.is_finite() || run.lr_decay <= 0.0 || run.lr_decay > 1.0 {
            v.push(format!("lr_decay must lie in (0, 1], got {}", run.lr_decay));
        }

        match &self.dataset {
            DatasetConfig::Synthetic(s) => {
                if s.n_per_class == 0 || s.classes == 0 || s.dim == 0 {
                    v.push("synthetic dataset counts must all be ≥ 1".into());
                }
                if s.test_n_per_class == Some(0) {
                    v.push("test_n_per_class must be ≥ 1".into());
                }
                if !s.separation.is_finite() || s.separation < 0.0 {
                    v.push(format!(
                        "separation must be nonnegative, got {}",
                        s.separation
                    ));
                }
            }
            DatasetConfig::Idx(_) => {}
        }

        if self.model.hidden.contains(&0) {
            v.push("hidden layer widths must all be ≥ 1".into());
        }

        let groups = self.group_names();
        for (i, c) in self.constraints.iter().enumerate() {
            let t = &c.target;
            if !t.eq_ignore_ascii_case("all") && !groups.iter().any(|g| g == t) {
                v.push(format!(
                    "constraint {i}: unknown target \"{t}\" (expected \"all\" or one of {})",
                    groups.join(", ")
                ));
            }
            if c.kind == KindName::Orthogonality && t.starts_with('b') {
                v.push(format!(
                    "constraint {i}: orthogonality targets the bias vector \"{t}\"; it requires a weight matrix"
                ));
            }
        }

        for method in &run.methods {
            match method {
                MethodName::Fp => {
                    let g = &self.grid.fp;
                    if g.rho.is_empty() || g.lr.is_empty() {
                        v.push("grid.fp: rho and lr must be nonempty".into());
                    }
                    if g.rho.iter().any(|r| !r.is_finite() || *r < 0.0) {
                        v.push("grid.fp: rho values must be nonnegative".into());
                    }
                    if g.lr.iter().any(|l| !l.is_finite() || *l <= 0.0) {
                        v.push("grid.fp: lr values must be positive".into());
                    }
                }
                MethodName::Sal => {
                    let g = &self.grid.sal;
                    if g.mu_init.is_empty() || g.lr.is_empty() {
                        v.push("grid.sal: mu_init and lr must be nonempty".into());
                    }
                    if g.mu_init.iter().any(|m| !m.is_finite() || *m <= 0.0) {
                        v.push("grid.sal: mu_init values must be positive".into());
                    }
                    if g.lr.iter().any(|l| !l.is_finite() || *l <= 0.0) {
                        v.push("grid.sal: lr values must be positive".into());
                    }
                    if g.eta.is_nan() || g.eta <= 0.0 || g.eta >= 1.0 {
                        v.push(format!("eta must be in (0,1), got {}", g.eta));
                    }
                    if !g.sigma.is_finite() || g.sigma <= 1.0 {
                        v.push(format!("grid.sal: sigma must exceed 1, got {}", g.sigma));
                    }
                    if g.mu_init.iter().any(|m| *m > g.mu_max) {
                        v.push(format!(
                            "grid.sal: mu_max {} is below a mu_init grid point",
                            g.mu_max
                        ));
                    }
                    if g.eps_f < 0.0 || g.eps_c < 0.0 {
                        v.push("grid.sal: eps_f and eps_c must be nonnegative".into());
                    }
                    if g.n_aug_lag == 0 {
                        v.push("grid.sal: n_aug_lag must be ≥ 1".into());
                    }
                }
                MethodName::Sadmm => {
                    let g = &self.grid.sadmm;
                    if g.rho.is_empty() || g.eta0.is_empty() {
                        v.push("grid.sadmm: rho and eta0 must be nonempty".into());
                    }
                    if g.rho.iter().any(|r| !r.is_finite() || *r <= 0.0) {
                        v.push("grid.sadmm: rho values must be positive".into());
                    }
                    if g.eta0.iter().any(|e| !e.is_finite() || *e <= 0.0) {
                        v.push("grid.sadmm: eta0 values must be positive".into());
                    }
                }
                MethodName::Alm => {
                    let g = &self.grid.alm;
                    if g.rho.is_empty() {
                        v.push("grid.alm: rho must be nonempty".into());
                    }
                    if g.rho.iter().any(|r| !r.is_finite() || *r <= 0.0) {
                        v.push("grid.alm: rho values must be positive".into());
                    }
                    if g.outer_iters == 0 {
                        v.push("grid.alm: outer_iters must be ≥ 1".into());
                    }
                }
                MethodName::Admm => {
                    let g = &self.grid.admm;
                    if g.rho.is_empty() {
                        v.push("grid.admm: rho must be nonempty".into());
                    }
                    if g.rho.iter().any(|r| !r.is_finite() || *r <= 0.0) {
                        v.push("grid.admm: rho values must be positive".into());
                    }
                    if g.outer_iters == 0 {
                        v.push("grid.admm: outer_iters must be ≥ 1".into());
                    }
                }
            }
        }
        v
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}
