//! Run configuration: TOML schema, defaults and validation.
//!
//! Matrices are row-major nested arrays. Quadratic forms use the
//! `½xᵀAx + bᵀx + ½c` convention, so an `initial` form with `c = 2` has
//! constant value 1. Each mode's `Sigma` is the already scaled
//! `σσᵀ/γ²`; `gamma` is recorded but not applied again.

use std::path::PathBuf;

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value};
use maxplus::pruning::PrunerKind;
use maxplus::semiconvex::{Domain, Placement, TestFunction};
use maxplus::{GridSlice, Matrix, Mode, QuadraticForm, SwitchedSystem, SymMatrix};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "defaults::tau")]
    pub tau: f64,
    #[serde(default = "defaults::steps")]
    pub steps: usize,
    /// Integer expression in the step index `i` (1-based).
    #[serde(default = "defaults::keep")]
    pub keep: String,
    #[serde(default = "defaults::pruner")]
    pub pruner: String,
    /// Witness samples per form for the SDP rounding.
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::out")]
    pub out: PathBuf,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub system: SystemConfig,
    /// Starting function; the single zero form when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<FormConfig>>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub prune_bench: PruneBenchConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    pub modes: Vec<ModeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "Sigma")]
    pub sigma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: f64,
}

/// Residual slice. Axes are 1-based, matching the `x1, x2` column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "defaults::axes")]
    pub axes: [usize; 2],
    #[serde(default = "defaults::grid_min")]
    pub min: f64,
    #[serde(default = "defaults::grid_max")]
    pub max: f64,
    #[serde(default = "defaults::resolution")]
    pub resolution: usize,
    /// Base point for the other coordinates; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<f64>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            axes: defaults::axes(),
            min: defaults::grid_min(),
            max: defaults::grid_max(),
            resolution: defaults::resolution(),
            fixed: None,
        }
    }
}

/// Head-to-head pruning on the forms produced by `steps` unpruned-at-the-end
/// iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PruneBenchConfig {
    #[serde(default = "defaults::bench_k")]
    pub k: usize,
    #[serde(default = "defaults::bench_methods")]
    pub methods: Vec<String>,
}

impl Default for PruneBenchConfig {
    fn default() -> Self {
        PruneBenchConfig {
            k: defaults::bench_k(),
            methods: defaults::bench_methods(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default = "defaults::function")]
    pub function: String,
    /// Semiconvexity constant of the basis functions.
    #[serde(default)]
    pub c: f64,
    #[serde(default = "defaults::scaling_dim")]
    pub d: usize,
    #[serde(default = "defaults::scaling_lo")]
    pub lo: f64,
    #[serde(default = "defaults::scaling_hi")]
    pub hi: f64,
    #[serde(default = "defaults::sizes")]
    pub n: Vec<usize>,
    /// `uniform-grid` or `bregman-lloyd`.
    #[serde(default = "defaults::placement")]
    pub placement: String,
    #[serde(default = "defaults::lloyd_iterations")]
    pub lloyd_iterations: usize,
    #[serde(default = "defaults::witness_res")]
    pub witness_res: usize,
    #[serde(default = "defaults::grid_res")]
    pub grid_res: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            function: defaults::function(),
            c: 0.0,
            d: defaults::scaling_dim(),
            lo: defaults::scaling_lo(),
            hi: defaults::scaling_hi(),
            n: defaults::sizes(),
            placement: defaults::placement(),
            lloyd_iterations: defaults::lloyd_iterations(),
            witness_res: defaults::witness_res(),
            grid_res: defaults::grid_res(),
        }
    }
}

mod defaults {
    use std::path::PathBuf;

    pub fn tau() -> f64 {
        0.2
    }
    pub fn steps() -> usize {
        25
    }
    pub fn keep() -> String {
        "20+6*i".into()
    }
    pub fn pruner() -> String {
        "greedy".into()
    }
    pub fn samples() -> usize {
        100
    }
    pub fn out() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn gamma() -> f64 {
        1.0
    }
    pub fn axes() -> [usize; 2] {
        [1, 2]
    }
    pub fn grid_min() -> f64 {
        -2.0
    }
    pub fn grid_max() -> f64 {
        2.0
    }
    pub fn resolution() -> usize {
        101
    }
    pub fn bench_k() -> usize {
        3
    }
    pub fn bench_methods() -> Vec<String> {
        ["sort-upper", "sort-lower", "jv", "greedy", "brute"]
            .into_iter()
            .map(String::from)
            .collect()
    }
    pub fn function() -> String {
        "half-norm-squared".into()
    }
    pub fn scaling_dim() -> usize {
        1
    }
    pub fn scaling_lo() -> f64 {
        -1.0
    }
    pub fn scaling_hi() -> f64 {
        1.0
    }
    pub fn sizes() -> Vec<usize> {
        vec![8, 16, 32, 64]
    }
    pub fn placement() -> String {
        "uniform-grid".into()
    }
    pub fn lloyd_iterations() -> usize {
        20
    }
    pub fn witness_res() -> usize {
        201
    }
    pub fn grid_res() -> usize {
        2049
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a configuration back to TOML.
pub fn serialize_config(cfg: &RunConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
}

fn config_err(key: impl Into<String>, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {msg}", key.into()))
}

fn square(key: &str, rows: &[Vec<f64>], d: usize) -> Result<Matrix, CliError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(config_err(key, format!("expected a {d}x{d} nested array")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(config_err(key, "entries must be finite"));
    }
    Ok(Matrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn symmetric(key: &str, rows: &[Vec<f64>], d: usize) -> Result<SymMatrix, CliError> {
    SymMatrix::new(square(key, rows, d)?).map_err(|e| config_err(key, e))
}

fn vector(key: &str, v: Option<&Vec<f64>>, d: usize) -> Result<DVector<f64>, CliError> {
    match v {
        None => Ok(DVector::zeros(d)),
        Some(v) if v.len() != d => Err(config_err(key, format!("expected {d} entries, got {}", v.len()))),
        Some(v) => Ok(DVector::from_column_slice(v)),
    }
}

/// Evaluates a keep schedule at every step `1..=steps`.
pub fn keep_schedule(expr: &str, steps: usize) -> Result<Vec<usize>, CliError> {
    let tree = evalexpr::build_operator_tree::<DefaultNumericTypes>(expr).map_err(|e| config_err("keep", format!("'{expr}': {e}")))?;
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    (1..=steps)
        .map(|i| {
            ctx.set_value("i".into(), Value::Int(i as i64))
                .map_err(|e| config_err("keep", e))?;
            let v = tree
                .eval_int_with_context(&ctx)
                .map_err(|e| config_err("keep", format!("'{expr}' at i={i}: {e}")))?;
            if v < 1 {
                return Err(config_err("keep", format!("'{expr}' gives {v} at i={i}; must be >= 1")));
            }
            Ok(v as usize)
        })
        .collect()
}

impl RunConfig {
    /// Checks every invariant without running anything.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(config_err("tau", format!("must be positive, got {}", self.tau)));
        }
        if self.steps == 0 {
            return Err(config_err("steps", "must be at least 1"));
        }
        keep_schedule(&self.keep, self.steps)?;
        self.pruner_kind()?;
        if self.samples == 0 {
            return Err(config_err("samples", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(config_err("threads", "must be at least 1"));
        }
        let sys = self.switched_system()?;
        self.initial_approx(sys.dim())?;
        if self.system.d >= 2 {
            self.grid_slice()?;
        }
        self.bench_methods()?;
        if self.prune_bench.k == 0 {
            return Err(config_err("prune_bench.k", "must be at least 1"));
        }
        self.scaling_setup()?;
        Ok(())
    }

    pub fn pruner_kind(&self) -> Result<PrunerKind, CliError> {
        self.pruner.parse().map_err(|e| config_err("pruner", e))
    }

    pub fn switched_system(&self) -> Result<SwitchedSystem, CliError> {
        let s = &self.system;
        if s.d == 0 {
            return Err(config_err("system.d", "must be at least 1"));
        }
        if s.m != s.modes.len() {
            return Err(config_err(
                "system.M",
                format!("declares {} modes but {} are given", s.m, s.modes.len()),
            ));
        }
        let modes = s
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let key = |f: &str| format!("system.modes[{i}].{f}");
                let mode = Mode::new(
                    square(&key("A"), &m.a, s.d)?,
                    symmetric(&key("D"), &m.d, s.d)?,
                    symmetric(&key("Sigma"), &m.sigma, s.d)?,
                    vector(&key("l1"), m.l1.as_ref(), s.d)?,
                    vector(&key("l2"), m.l2.as_ref(), s.d)?,
                    m.alpha,
                )
                .map_err(|e| config_err(format!("system.modes[{i}]"), e))?;
                Ok(mode)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        SwitchedSystem::new(modes, s.gamma).map_err(|e| config_err("system", e))
    }

    pub fn initial_approx(&self, d: usize) -> Result<Option<maxplus::MaxPlusApprox>, CliError> {
        let Some(forms) = &self.initial else {
            return Ok(None);
        };
        let forms = forms
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let key = |k: &str| format!("initial[{i}].{k}");
                QuadraticForm::new(symmetric(&key("A"), &f.a, d)?, vector(&key("b"), Some(&f.b), d)?, f.c)
                    .map_err(|e| config_err(format!("initial[{i}]"), e))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        maxplus::MaxPlusApprox::new(forms)
            .map(Some)
            .map_err(|e| config_err("initial", e))
    }

    pub fn grid_slice(&self) -> Result<GridSlice, CliError> {
        let d = self.system.d;
        let g = &self.grid;
        if d < 2 {
            return Err(config_err("grid", "a residual slice needs system.d >= 2"));
        }
        if g.axes.contains(&0) {
            return Err(config_err("grid.axes", "axes are 1-based"));
        }
        let slice = GridSlice {
            axis1: g.axes[0] - 1,
            axis2: g.axes[1] - 1,
            range1: (g.min, g.max),
            range2: (g.min, g.max),
            resolution: g.resolution,
            fixed: g.fixed.clone().unwrap_or_else(|| vec![0.0; d]),
        };
        slice.validate(d).map_err(|e| config_err("grid", e))?;
        Ok(slice)
    }

    pub fn bench_methods(&self) -> Result<Vec<PrunerKind>, CliError> {
        self.prune_bench
            .methods
            .iter()
            .map(|m| match m.parse::<PrunerKind>() {
                Ok(PrunerKind::None) => Err(config_err("prune_bench.methods", "'none' is not a pruning method")),
                Ok(k) => Ok(k),
                Err(e) => Err(config_err("prune_bench.methods", e)),
            })
            .collect()
    }

    pub fn scaling_setup(&self) -> Result<(TestFunction, Domain, Placement), CliError> {
        let s = &self.scaling;
        let psi: TestFunction = s.function.parse().map_err(|e| config_err("scaling.function", e))?;
        if s.d == 0 {
            return Err(config_err("scaling.d", "must be at least 1"));
        }
        let domain = Domain::cube(s.d, s.lo, s.hi).map_err(|e| config_err("scaling", e))?;
        let placement = match s.placement.as_str() {
            "uniform-grid" => Placement::UniformGrid,
            "bregman-lloyd" => Placement::BregmanLloyd {
                iterations: s.lloyd_iterations,
                witness_res: s.witness_res,
            },
            other => {
                return Err(config_err(
                    "scaling.placement",
                    format!("unknown placement '{other}' (expected uniform-grid or bregman-lloyd)"),
                ))
            }
        };
        if s.n.len() < 4 || s.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("scaling.n", "needs at least 4 strictly increasing sizes"));
        }
        if s.grid_res < 2 {
            return Err(config_err("scaling.grid_res", "must be at least 2"));
        }
        if !s.c.is_finite() || s.c < psi.c_min(&domain) {
            return Err(config_err(
                "scaling.c",
                format!("must be at least {} for {}", psi.c_min(&domain), psi.name()),
            ));
        }
        Ok((psi, domain, placement))
    }
}
