//! Run configuration: JSON schema, defaults and validation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stripeforge_core::equilibrium::NewtonOptions;
use stripeforge_core::inverse::LoadCase;
use stripeforge_core::optimizer::OptOptions;
use stripeforge_core::shell::{Fiber, Material};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config error at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("invalid `{field}`: {msg}")]
    Invalid { field: String, msg: String },
    #[error("mesh file {0} does not exist")]
    MissingMesh(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshSource {
    Path(PathBuf),
    Grid { grid: GridSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub mu: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_f: Option<[f64; 3]>,
}

impl PhaseConfig {
    pub fn material(&self) -> Material {
        let fiber = self.beta_f.map(|beta| Fiber { beta, dir: self.n_f.unwrap_or([1.0, 0.0, 0.0]) });
        Material { mu: self.mu, lambda: self.lambda, fiber }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    pub soft: PhaseConfig,
    pub stiff: PhaseConfig,
    /// Shell thickness (m).
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_h() -> f64 {
    1e-3
}

/// Initial design field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    /// Constant wave-vector direction.
    Uniform { direction: [f64; 3] },
    /// Radial wave vectors about `centre` (concentric stripes).
    Concentric { centre: [f64; 3] },
    /// Design CSV written by `optimize`.
    Design { path: PathBuf },
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig::Uniform { direction: [1.0, 0.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StripeConfig {
    /// Radians per metre; three half-waves across the mesh when unset.
    pub frequency: Option<f64>,
    pub a1: f64,
    pub a2: f64,
    pub dhat: f64,
    pub field: FieldConfig,
    /// Seeded uniform noise added to the initial design angles (radians).
    pub noise: f64,
    pub theta: f64,
    /// Mesh vertex whose phase is pinned.
    pub pin: Option<usize>,
}

impl Default for StripeConfig {
    fn default() -> Self {
        Self { frequency: None, a1: 0.05, a2: 0.0, dhat: 0.1, field: FieldConfig::default(), noise: 0.0, theta: 0.0, pin: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    Profile {
        thetas: Vec<f64>,
        targets: Vec<f64>,
        #[serde(default = "default_strain")]
        strain: f64,
    },
    Match { load: LoadCase, target: PathBuf },
    Stiffness { load: LoadCase },
}

fn default_strain() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    pub objective: f64,
    pub singularity: f64,
    pub smoothness: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self { objective: 1.0, singularity: 1.0, smoothness: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Newton tolerance relative to the force scale.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 100 }
    }
}

impl SolverConfig {
    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions { tolerance: self.tol, max_iterations: self.max_iterations, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogenizeConfig {
    /// Angles `iπ/samples`, i < samples.
    pub samples: usize,
    pub strain: f64,
    /// Perturb the flat start so buckling branches can be found.
    pub buckling: bool,
}

impl Default for HomogenizeConfig {
    fn default() -> Self {
        Self { samples: 8, strain: 0.01, buckling: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub radius: f64,
    pub side: f64,
    pub resolutions: Vec<usize>,
    pub rows: usize,
    pub young: f64,
    pub poisson: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { radius: 0.1, side: 0.07, resolutions: vec![64, 128, 256, 512], rows: 2, young: 1e6, poisson: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckConfig {
    pub probes: usize,
    pub tol: f64,
    pub step: f64,
    /// Steps of an optional finite-difference sweep on the largest entry.
    pub sweep: Vec<f64>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { probes: 10, tol: 1e-4, step: 1e-6, sweep: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSource,
    /// Periodic lattice vectors; the mesh is treated as a unit cell when set.
    #[serde(default)]
    pub lattice: Option<[[f64; 3]; 2]>,
    pub materials: MaterialsConfig,
    #[serde(default)]
    pub stripes: StripeConfig,
    #[serde(default)]
    pub objective: Option<ObjectiveConfig>,
    /// Load case of `simulate` when the objective carries none.
    #[serde(default)]
    pub load: Option<LoadCase>,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub optimizer: OptOptions,
    #[serde(default)]
    pub homogenize: HomogenizeConfig,
    #[serde(default)]
    pub bench: BenchConfig,
    #[serde(default)]
    pub grad_check: GradCheckConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Closest expected key to an unknown one, from serde's error message.
fn suggest(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    let (unknown, rest) = rest.split_once('`')?;
    let best = rest
        .split('`')
        .skip(1)
        .step_by(2)
        .map(|cand| (strsim::jaro_winkler(unknown, cand), cand))
        .max_by(|a, b| a.0.total_cmp(&b.0))?;
    (best.0 > 0.7).then(|| best.1.to_string())
}

fn invalid(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), msg: msg.into() }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be non-negative, got {v}")))
    }
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let mut msg = e.inner().to_string();
            if let Some(s) = suggest(&msg) {
                msg = format!("{msg}; did you mean `{s}`?");
            }
            ConfigError::Schema { path, msg }
        })
    }

    /// Reads, validates and resolves relative paths against the config
    /// directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let MeshSource::Path(p) = &mut self.mesh {
            fix(p);
        }
        if let FieldConfig::Design { path } = &mut self.stripes.field {
            fix(path);
        }
        if let Some(ObjectiveConfig::Match { target, .. }) = &mut self.objective {
            fix(target);
        }
        fix(&mut self.output);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.mesh {
            MeshSource::Path(p) if !p.exists() => return Err(ConfigError::MissingMesh(p.clone())),
            MeshSource::Grid { grid } => {
                if grid.nx == 0 || grid.ny == 0 {
                    return Err(invalid("mesh.grid", "needs at least one element per side"));
                }
                positive("mesh.grid.lx", grid.lx)?;
                positive("mesh.grid.ly", grid.ly)?;
            }
            _ => {}
        }
        for (name, ph) in [("soft", &self.materials.soft), ("stiff", &self.materials.stiff)] {
            positive(&format!("materials.{name}.mu"), ph.mu)?;
            non_negative(&format!("materials.{name}.lambda"), ph.lambda)?;
            if let Some(b) = ph.beta_f {
                non_negative(&format!("materials.{name}.beta_f"), b)?;
            }
        }
        positive("h", self.materials.h)?;
        let s = &self.stripes;
        if let Some(f) = s.frequency {
            positive("stripes.frequency", f)?;
        }
        if !(s.a1 > 0.0 && s.a1 <= 1.0) {
            return Err(invalid("stripes.a1", format!("must lie in (0, 1], got {}", s.a1)));
        }
        if !(-1.0..=1.0).contains(&s.a2) {
            return Err(invalid("stripes.a2", format!("must lie in [-1, 1], got {}", s.a2)));
        }
        positive("stripes.dhat", s.dhat)?;
        non_negative("stripes.noise", s.noise)?;
        if !s.theta.is_finite() {
            return Err(invalid("stripes.theta", "must be finite"));
        }
        let w = &self.weights;
        non_negative("weights.objective", w.objective)?;
        non_negative("weights.singularity", w.singularity)?;
        non_negative("weights.smoothness", w.smoothness)?;
        positive("solver.tol", self.solver.tol)?;
        if let Some(ObjectiveConfig::Profile { thetas, targets, strain }) = &self.objective {
            if thetas.is_empty() || thetas.len() != targets.len() {
                return Err(invalid("objective.targets", "needs one target per angle"));
            }
            if let Some(t) = thetas.iter().find(|t| !(0.0..PI).contains(*t)) {
                return Err(invalid("objective.thetas", format!("angle {t} outside [0, π)")));
            }
            for t in targets {
                positive("objective.targets", *t)?;
            }
            if !(strain.abs() > 0.0 && strain.is_finite()) {
                return Err(invalid("objective.strain", "must be non-zero"));
            }
        }
        if self.homogenize.samples == 0 {
            return Err(invalid("homogenize.samples", "must be at least 1"));
        }
        if !(self.homogenize.strain.abs() > 0.0 && self.homogenize.strain.is_finite()) {
            return Err(invalid("homogenize.strain", "must be non-zero"));
        }
        let b = &self.bench;
        positive("bench.radius", b.radius)?;
        positive("bench.side", b.side)?;
        positive("bench.young", b.young)?;
        if !(-1.0 < b.poisson && b.poisson < 0.5) {
            return Err(invalid("bench.poisson", format!("must lie in (-1, 0.5), got {}", b.poisson)));
        }
        if b.rows == 0 || b.resolutions.iter().any(|&n| n < 2 || n % 2 != 0) {
            return Err(invalid("bench.resolutions", "need even resolutions >= 2 and rows >= 1"));
        }
        positive("grad_check.step", self.grad_check.step)?;
        positive("grad_check.tol", self.grad_check.tol)?;
        self.optimizer.validate().map_err(|e| invalid("optimizer", e.to_string()))?;
        Ok(())
    }

    pub fn transfer(&self) -> stripeforge_core::stripes::TransferParams {
        stripeforge_core::stripes::TransferParams { a1: self.stripes.a1, a2: self.stripes.a2 }
    }

    pub fn design_weights(&self) -> stripeforge_core::inverse::DesignWeights {
        let w = &self.weights;
        stripeforge_core::inverse::DesignWeights {
            objective: w.objective,
            singularity: w.singularity,
            smoothness: w.smoothness,
            dhat: self.stripes.dhat,
        }
    }
}
