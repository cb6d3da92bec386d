//! Scenario configuration.
//!
//! A TOML file with one section per concern. Every key is optional; the
//! defaults below describe a damped Gaussian blob in a quadratic well.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `scenario` | `"scenario"` | label copied into reports |
//! | `seed` | `0` | seed of the randomized test functions in `verify` |
//! | `grid.dim` | `1` | 1 or 2 |
//! | `grid.n` | `256` | cells per axis |
//! | `grid.half_width` | `4.0` | the box is `[-L, L]^d` |
//! | `grid.domain` | `"box"` | `"box"` or `"ball"` |
//! | `grid.radius` | `0.9 · half_width` | ball radius |
//! | `model.mu`, `model.lambda` | `1.0`, `0.0` | viscosities |
//! | `model.a`, `model.m` | `1.0`, `2.0` | pressure `a ϱ^m` |
//! | `model.eps` | `0.0` | artificial density diffusion |
//! | `model.delta`, `model.beta` | `0.0`, `5.0` | artificial pressure `δ ϱ^β` |
//! | `model.damping` | `"linear"` | `"linear"`, `"alignment"` or `"none"` |
//! | `kernel.kind` | `"gaussian_attractive"` | `"zero"`, `"gaussian_attractive"`, `"gaussian_kai"`, `"power_law"` |
//! | `kernel.amplitude` | `1.0` | |
//! | `kernel.exponent` | `0.5` | power-law exponent `b` |
//! | `kernel.cutoff` | none | far-field cutoff radius |
//! | `confinement.kind` | `"quadratic"` | `"zero"`, `"quadratic"`, `"tabulated"` |
//! | `confinement.stiffness` | `1.0` | `Φ = k|x|²/2` |
//! | `confinement.table` | none | two-column radius/value file |
//! | `confinement.growth_exponent` | `0.5` | `ν` of the growth and tail checks |
//! | `alignment.kind` | `"gaussian"` | `"zero"`, `"gaussian"`, `"constant"` |
//! | `alignment.strength`, `alignment.length` | `1.0`, `1.0` | `ψ = s exp(-|x|²/ℓ²)` |
//! | `initial.kind` | `"gaussian_blob"` | `"gaussian_blob"`, `"two_bumps"`, `"uniform_disk"`, `"from_snapshot"` |
//! | `initial.center` | `[0.0, 0.0]` | |
//! | `initial.width` | `0.5` | standard deviation of each bump |
//! | `initial.separation` | `2.0` | distance between the two bumps (along x) |
//! | `initial.radius` | `1.0` | disk radius |
//! | `initial.mass` | `1.0` | ignored for snapshots |
//! | `initial.velocity` | `[0.0, 0.0]` | uniform initial velocity |
//! | `initial.density_file`, `initial.momentum_file` | none | snapshot files |
//! | `run.t_end` | `10.0` | |
//! | `run.cfl`, `run.dt_max`, `run.dt_min` | `0.4`, `0.05`, `1e-12` | step control |
//! | `run.ledger_every` | none | ledger spacing; none writes every step |
//! | `run.snapshot_every` | none | snapshot spacing; none keeps first and last |
//! | `run.max_steps` | `10000000` | |
//! | `run.convolution` | `"spectral"` | `"spectral"` or `"direct"` |
//! | `steady.detect` | `false` | stop runs once the flow is at rest |
//! | `steady.grad_u`, `steady.kinetic`, `steady.rows` | `1e-6`, `1e-10`, `100` | rest thresholds |
//! | `steady.solver` | `"fixed_point"` | `"fixed_point"` or `"gradient_flow"` |
//! | `steady.tol`, `steady.max_iter` | `1e-12`, `20000` | fixed-point stopping |
//! | `steady.tol_gf`, `steady.max_time` | `1e-9`, `1e4` | gradient-flow stopping |
//! | `sweep.parameter` | `"eps"` | `"eps"`, `"delta"`, `"n"`, `"cfl"` |
//! | `sweep.values` | `[]` | |
//! | `sweep.mode` | `"simulate"` | `"simulate"` or `"steady"` |
//!
//! Any key can be overridden from the environment as
//! `SWARMHYDRO__<SECTION>__<KEY>` (or `SWARMHYDRO__<KEY>` for top-level keys).
//! Values are parsed as TOML literals, falling back to plain strings.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use swarmhydro::dynamics::{Damping, ModelParams, RunOptions, StepControl, SteadyDetection};
use swarmhydro::fields::{DomainKind, Grid, ScalarField, State, VectorField};
use swarmhydro::nonlocal::ConvolutionMethod;
use swarmhydro::potentials::{AlignmentKernel, ConfinementSpec, KernelSpec};
use swarmhydro::snapshot::read_snapshot;
use swarmhydro::steady::SteadyOptions;
use thiserror::Error;

pub const ENV_PREFIX: &str = "SWARMHYDRO__";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config is not valid TOML")]
    Syntax(#[from] toml::de::Error),
    #[error("environment override {var}: {reason}")]
    Env { var: String, reason: String },
    #[error("config key {key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{key}: file {path} does not exist")]
    MissingFile { key: &'static str, path: PathBuf },
    #[error("configuration rejected by the solver")]
    Model(#[from] swarmhydro::Error),
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: String,
    pub seed: u64,
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub kernel: KernelConfig,
    pub confinement: ConfinementConfig,
    pub alignment: AlignmentConfig,
    pub initial: InitialConfig,
    pub run: RunSection,
    pub steady: SteadySection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: "scenario".into(),
            seed: 0,
            grid: GridConfig::default(),
            model: ModelConfig::default(),
            kernel: KernelConfig::default(),
            confinement: ConfinementConfig::default(),
            alignment: AlignmentConfig::default(),
            initial: InitialConfig::default(),
            run: RunSection::default(),
            steady: SteadySection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub domain: String,
    pub radius: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dim: 1,
            n: 256,
            half_width: 4.0,
            domain: "box".into(),
            radius: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub mu: f64,
    pub lambda: f64,
    pub a: f64,
    pub m: f64,
    pub eps: f64,
    pub delta: f64,
    pub beta: f64,
    pub damping: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            mu: 1.0,
            lambda: 0.0,
            a: 1.0,
            m: 2.0,
            eps: 0.0,
            delta: 0.0,
            beta: 5.0,
            damping: "linear".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub kind: String,
    pub amplitude: f64,
    pub exponent: f64,
    pub cutoff: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kind: "gaussian_attractive".into(),
            amplitude: 1.0,
            exponent: 0.5,
            cutoff: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ConfinementConfig {
    pub kind: String,
    pub stiffness: f64,
    pub table: Option<PathBuf>,
    pub growth_exponent: f64,
}

impl Default for ConfinementConfig {
    fn default() -> Self {
        ConfinementConfig {
            kind: "quadratic".into(),
            stiffness: 1.0,
            table: None,
            growth_exponent: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AlignmentConfig {
    pub kind: String,
    pub strength: f64,
    pub length: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            kind: "gaussian".into(),
            strength: 1.0,
            length: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: String,
    pub center: [f64; 2],
    pub width: f64,
    pub separation: f64,
    pub radius: f64,
    pub mass: f64,
    pub velocity: [f64; 2],
    pub density_file: Option<PathBuf>,
    pub momentum_file: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: "gaussian_blob".into(),
            center: [0.0, 0.0],
            width: 0.5,
            separation: 2.0,
            radius: 1.0,
            mass: 1.0,
            velocity: [0.0, 0.0],
            density_file: None,
            momentum_file: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub ledger_every: Option<f64>,
    pub snapshot_every: Option<f64>,
    pub max_steps: usize,
    pub convolution: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            t_end: 10.0,
            cfl: 0.4,
            dt_max: 0.05,
            dt_min: 1e-12,
            ledger_every: None,
            snapshot_every: None,
            max_steps: 10_000_000,
            convolution: "spectral".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SteadySection {
    pub detect: bool,
    pub grad_u: f64,
    pub kinetic: f64,
    pub rows: usize,
    pub solver: String,
    pub tol: f64,
    pub max_iter: usize,
    pub tol_gf: f64,
    pub max_time: f64,
}

impl Default for SteadySection {
    fn default() -> Self {
        let d = SteadyDetection::<f64>::default();
        let o = SteadyOptions::<f64>::default();
        SteadySection {
            detect: false,
            grad_u: d.grad_u,
            kinetic: d.kinetic,
            rows: d.rows,
            solver: "fixed_point".into(),
            tol: o.tol_fp,
            max_iter: o.max_iter,
            tol_gf: o.tol_gf,
            max_time: o.max_time,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub parameter: String,
    pub values: Vec<f64>,
    pub mode: String,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            parameter: "eps".into(),
            values: Vec::new(),
            mode: "simulate".into(),
        }
    }
}

fn one_of(key: &str, value: &str, allowed: &[&str]) -> Result<(), ConfigError> {
    if allowed.contains(&value) {
        Ok(())
    } else {
        Err(invalid(key, format!("`{value}` is not one of {allowed:?}")))
    }
}

impl RunConfig {
    /// Reads `path` (or starts from the defaults) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })?,
            None => String::new(),
        };
        let base = path.and_then(Path::parent).map(Path::to_path_buf);
        Self::from_toml_with_env(&text, std::env::vars(), base.as_deref())
    }

    /// Parses TOML text, applies `vars` as overrides, resolves relative file
    /// paths against `base` and validates.
    pub fn from_toml_with_env(
        text: &str,
        vars: impl IntoIterator<Item = (String, String)>,
        base: Option<&Path>,
    ) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse()?;
        let mut vars: Vec<_> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (var, value) in vars {
            apply_override(&mut table, &var, &value)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table).try_into()?;
        if let Some(base) = base {
            for p in [
                &mut cfg.confinement.table,
                &mut cfg.initial.density_file,
                &mut cfg.initial.momentum_file,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.dim != 1 && g.dim != 2 {
            return Err(invalid("grid.dim", "must be 1 or 2"));
        }
        if g.n < 4 {
            return Err(invalid("grid.n", "need at least 4 cells per axis"));
        }
        if !(g.half_width > 0.0) {
            return Err(invalid("grid.half_width", "must be positive"));
        }
        one_of("grid.domain", &g.domain, &["box", "ball"])?;
        one_of("model.damping", &self.model.damping, &["linear", "alignment", "none"])?;
        one_of("kernel.kind", &self.kernel.kind, &["zero", "gaussian_attractive", "gaussian_kai", "power_law"])?;
        one_of("confinement.kind", &self.confinement.kind, &["zero", "quadratic", "tabulated"])?;
        one_of("alignment.kind", &self.alignment.kind, &["zero", "gaussian", "constant"])?;
        one_of(
            "initial.kind",
            &self.initial.kind,
            &["gaussian_blob", "two_bumps", "uniform_disk", "from_snapshot"],
        )?;
        one_of("run.convolution", &self.run.convolution, &["spectral", "direct"])?;
        one_of("steady.solver", &self.steady.solver, &["fixed_point", "gradient_flow"])?;
        one_of("sweep.parameter", &self.sweep.parameter, &["eps", "delta", "n", "cfl"])?;
        one_of("sweep.mode", &self.sweep.mode, &["simulate", "steady"])?;

        let r = &self.run;
        if !(r.t_end >= 0.0) || !r.t_end.is_finite() {
            return Err(invalid("run.t_end", "must be finite and >= 0"));
        }
        if !(r.cfl > 0.0 && r.cfl <= 1.0) {
            return Err(invalid("run.cfl", "must lie in (0, 1]"));
        }
        if !(r.dt_max > 0.0) || !(r.dt_min > 0.0) || r.dt_min > r.dt_max {
            return Err(invalid("run.dt_min", "need 0 < dt_min <= dt_max"));
        }
        for (key, v) in [("run.ledger_every", r.ledger_every), ("run.snapshot_every", r.snapshot_every)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(invalid(key, "output spacing must be positive"));
                }
            }
        }
        let i = &self.initial;
        if i.kind != "from_snapshot" && !(i.mass > 0.0) {
            return Err(invalid("initial.mass", "must be positive"));
        }
        if !(i.width > 0.0) || !(i.radius > 0.0) {
            return Err(invalid("initial", "width and radius must be positive"));
        }
        if i.kind == "from_snapshot" && i.density_file.is_none() {
            return Err(invalid("initial.density_file", "required for from_snapshot"));
        }
        for (key, p) in [
            ("confinement.table", &self.confinement.table),
            ("initial.density_file", &i.density_file),
            ("initial.momentum_file", &i.momentum_file),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(ConfigError::MissingFile { key, path: p.clone() });
                }
            }
        }
        if self.confinement.kind == "tabulated" && self.confinement.table.is_none() {
            return Err(invalid("confinement.table", "required for tabulated confinement"));
        }
        self.model_params()?.validate(g.dim)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid<f64>>, ConfigError> {
        let g = &self.grid;
        let kind = match g.domain.as_str() {
            "ball" => DomainKind::Ball {
                radius: g.radius.unwrap_or(0.9 * g.half_width),
            },
            _ => DomainKind::Box,
        };
        Ok(Grid::new(g.dim, g.n, g.half_width, kind)?)
    }

    pub fn kernel(&self) -> Result<KernelSpec<f64>, ConfigError> {
        let k = &self.kernel;
        let spec = match k.kind.as_str() {
            "zero" => KernelSpec::zero(),
            "gaussian_attractive" => KernelSpec::gaussian_attractive(k.amplitude),
            "gaussian_kai" => KernelSpec::gaussian_kai(k.amplitude),
            _ => KernelSpec::power_law(k.exponent, k.amplitude)?,
        };
        Ok(match k.cutoff {
            Some(c) => spec.with_cutoff(c),
            None => spec,
        })
    }

    pub fn confinement(&self) -> Result<ConfinementSpec<f64>, ConfigError> {
        let c = &self.confinement;
        let spec = match c.kind.as_str() {
            "zero" => ConfinementSpec::zero(),
            "quadratic" => ConfinementSpec::quadratic(c.stiffness),
            _ => {
                let path = c.table.as_ref().ok_or_else(|| invalid("confinement.table", "missing"))?;
                ConfinementSpec::load_table(path)?
            }
        };
        Ok(spec.with_growth_exponent(c.growth_exponent))
    }

    pub fn alignment_kernel(&self) -> AlignmentKernel<f64> {
        let a = &self.alignment;
        match a.kind.as_str() {
            "zero" => AlignmentKernel::Zero,
            "constant" => AlignmentKernel::Constant { strength: a.strength },
            _ => AlignmentKernel::Gaussian {
                strength: a.strength,
                length: a.length,
            },
        }
    }

    pub fn model_params(&self) -> Result<ModelParams<f64>, ConfigError> {
        let m = &self.model;
        let damping = match m.damping.as_str() {
            "linear" => Damping::Linear,
            "alignment" => Damping::Alignment(self.alignment_kernel()),
            _ => Damping::None,
        };
        Ok(ModelParams {
            mu: m.mu,
            lambda: m.lambda,
            a: m.a,
            m: m.m,
            eps: m.eps,
            delta: m.delta,
            beta: m.beta,
            damping,
            kernel: self.kernel()?,
            confinement: self.confinement()?,
        })
    }

    /// `ψ` for the convolution plan: only built when alignment damping is on.
    pub fn plan_alignment(&self) -> AlignmentKernel<f64> {
        if self.model.damping == "alignment" {
            self.alignment_kernel()
        } else {
            AlignmentKernel::Zero
        }
    }

    pub fn convolution(&self) -> ConvolutionMethod {
        if self.run.convolution == "direct" {
            ConvolutionMethod::Direct
        } else {
            ConvolutionMethod::Spectral
        }
    }

    pub fn step_control(&self) -> StepControl<f64> {
        StepControl {
            cfl: self.run.cfl,
            dt_max: self.run.dt_max,
            dt_min: self.run.dt_min,
        }
    }

    pub fn run_options(&self) -> RunOptions<f64> {
        let s = &self.steady;
        RunOptions {
            ledger_every: self.run.ledger_every,
            snapshot_every: self.run.snapshot_every,
            steady: s.detect.then_some(SteadyDetection {
                grad_u: s.grad_u,
                kinetic: s.kinetic,
                rows: s.rows,
            }),
            max_steps: self.run.max_steps,
        }
    }

    pub fn steady_options(&self) -> SteadyOptions<f64> {
        SteadyOptions {
            tol_fp: self.steady.tol,
            max_iter: self.steady.max_iter,
            tol_gf: self.steady.tol_gf,
            max_time: self.steady.max_time,
            ..SteadyOptions::default()
        }
    }

    /// Initial state from the catalog, on `grid`.
    pub fn initial_state(&self, grid: &Arc<Grid<f64>>) -> Result<State<f64>, ConfigError> {
        let i = &self.initial;
        let c = i.center;
        let dim = grid.dim();
        let r2 = move |x: [f64; 2], c: [f64; 2]| {
            let dx = x[0] - c[0];
            let dy = if dim == 2 { x[1] - c[1] } else { 0.0 };
            dx * dx + dy * dy
        };
        let bump = move |x: [f64; 2], c: [f64; 2]| (-r2(x, c) / (2.0 * i.width * i.width)).exp();
        let raw = match i.kind.as_str() {
            "gaussian_blob" => ScalarField::from_fn(grid, |x| bump(x, c)),
            "two_bumps" => {
                let s = 0.5 * i.separation;
                ScalarField::from_fn(grid, |x| bump(x, [c[0] - s, c[1]]) + bump(x, [c[0] + s, c[1]]))
            }
            "uniform_disk" => ScalarField::from_fn(grid, |x| if r2(x, c) < i.radius * i.radius { 1.0 } else { 0.0 }),
            _ => return self.snapshot_state(grid),
        };
        let total = raw.integral();
        if !(total > 0.0) {
            return Err(invalid("initial", "initial density has no mass on the grid"));
        }
        let rho = raw.map(|v| v * i.mass / total);
        let v = i.velocity;
        Ok(State::with_velocity(0.0, rho, |_| v)?)
    }

    fn snapshot_state(&self, grid: &Arc<Grid<f64>>) -> Result<State<f64>, ConfigError> {
        let i = &self.initial;
        let path = i.density_file.as_ref().ok_or_else(|| invalid("initial.density_file", "missing"))?;
        let open = |p: &Path| {
            std::fs::File::open(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })
        };
        let snap = read_snapshot::<f64, _>(open(path)?)?;
        let time = snap.time;
        if snap.grid.dim() != grid.dim() || (0..grid.dim()).any(|a| snap.grid.n(a) != grid.n(a)) {
            return Err(invalid("initial.density_file", "snapshot grid differs from [grid]"));
        }
        let rho = ScalarField::new(grid, snap.into_scalar()?.into_values())?;
        let mom = match &i.momentum_file {
            Some(p) => {
                let m = read_snapshot::<f64, _>(open(p)?)?.into_vector()?;
                VectorField::new(grid, m.values().to_vec())?
            }
            None => VectorField::zeros(grid),
        };
        Ok(State::new(time, rho, mom)?)
    }

    /// Sets a swept parameter.
    pub fn with_parameter(&self, parameter: &str, value: f64) -> Result<Self, ConfigError> {
        let mut cfg = self.clone();
        match parameter {
            "eps" => cfg.model.eps = value,
            "delta" => cfg.model.delta = value,
            "cfl" => cfg.run.cfl = value,
            "n" => {
                if value.fract() != 0.0 || value < 4.0 {
                    return Err(invalid("sweep.values", format!("{value} is not a cell count")));
                }
                cfg.grid.n = value as usize;
            }
            other => return Err(invalid("sweep.parameter", format!("unknown parameter `{other}`"))),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply_override(table: &mut toml::Table, var: &str, raw: &str) -> Result<(), ConfigError> {
    let path: Vec<String> = var[ENV_PREFIX.len()..].split("__").map(str::to_lowercase).collect();
    if path.iter().any(String::is_empty) || path.len() > 2 {
        return Err(ConfigError::Env {
            var: var.into(),
            reason: "expected SWARMHYDRO__<SECTION>__<KEY> or SWARMHYDRO__<KEY>".into(),
        });
    }
    // `x = <raw>` parses numbers, booleans, arrays and quoted strings.
    let value = match format!("x = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("x").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cur = table;
    for section in &path[..path.len() - 1] {
        let entry = cur
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError::Env {
            var: var.into(),
            reason: format!("`{section}` is not a section"),
        })?;
    }
    cur.insert(path[path.len() - 1].clone(), value);
    Ok(())
}
