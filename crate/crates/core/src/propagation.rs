//! Propagation of quadratic forms through the modes of a switched
//! linear-quadratic system, and the full iteration with pruning.
//!
//! For one mode the Lax-Oleinik operator maps a quadratic form to another
//! quadratic form whose Hessian follows the Riccati equation
//! `Ṗ = D + AᵀP + PA + PΣP`. Writing `P = Y X⁻¹`, the pair `(X, Y)` obeys
//! the linear Hamiltonian system
//!
//! ```text
//! d/dt [X; Y] = [[-A, -Σ], [D, Aᵀ]] [X; Y],   X(0) = I, Y(0) = P₀
//! ```
//!
//! so a step of length `τ` is one multiplication by the cached
//! `exp(𝒜τ)` followed by one linear solve. Linear and constant terms are
//! handled by appending a constant state coordinate equal to one.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkernel::{self, Matrix, SymMatrix};
use crate::pruning::{self, PruneConfig, PruneDiagnostics};
use crate::quadform::{FormTag, MaxPlusApprox, QuadraticForm};

/// Tolerance on the smallest eigenvalue of `Σ`.
const SIGMA_PSD_TOL: f64 = 1e-10;

/// One mode: dynamics `ẋ = Ax + l₂ + σw` and running reward
/// `½xᵀDx + l₁ᵀx + α`, with `Σ = σσᵀ/γ²` stored already scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub a: Matrix,
    pub d: SymMatrix,
    pub sigma: SymMatrix,
    pub l1: DVector<f64>,
    pub l2: DVector<f64>,
    pub alpha: f64,
}

impl Mode {
    pub fn new(
        a: Matrix,
        d: SymMatrix,
        sigma: SymMatrix,
        l1: DVector<f64>,
        l2: DVector<f64>,
        alpha: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: a.ncols(),
            });
        }
        for (what, got) in [
            ("mode state cost", d.dim()),
            ("mode sigma", sigma.dim()),
            ("mode l1", l1.len()),
            ("mode l2", l2.len()),
        ] {
            if got != n {
                return Err(Error::dim(what, n, got));
            }
        }
        if a.iter().chain(l1.iter()).chain(l2.iter()).any(|v| !v.is_finite()) || !alpha.is_finite() {
            return Err(Error::NonFinite("mode coefficients"));
        }
        let min_eig = sigma.min_eigenvalue();
        if min_eig < -SIGMA_PSD_TOL {
            return Err(Error::InvalidArgument(format!(
                "sigma is not positive semidefinite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Mode {
            a,
            d,
            sigma,
            l1,
            l2,
            alpha,
        })
    }

    /// A mode without linear or constant terms.
    pub fn quadratic(a: Matrix, d: SymMatrix, sigma: SymMatrix) -> Result<Self> {
        let n = a.nrows();
        Mode::new(a, d, sigma, DVector::zeros(n), DVector::zeros(n), 0.0)
    }

    pub fn zero(dim: usize) -> Self {
        Mode {
            a: Matrix::zeros(dim, dim),
            d: SymMatrix::zeros(dim),
            sigma: SymMatrix::zeros(dim),
            l1: DVector::zeros(dim),
            l2: DVector::zeros(dim),
            alpha: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    dim: usize,
    modes: Vec<Mode>,
    /// Attenuation level; `Σ` in each mode already includes the `1/γ²`.
    pub gamma: f64,
}

impl SwitchedSystem {
    pub fn new(modes: Vec<Mode>, gamma: f64) -> Result<Self> {
        let dim = modes
            .first()
            .map(Mode::dim)
            .ok_or_else(|| Error::InvalidArgument("switched system needs at least one mode".into()))?;
        if let Some(bad) = modes.iter().find(|m| m.dim() != dim) {
            return Err(Error::dim("mode dimension", dim, bad.dim()));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        Ok(SwitchedSystem { dim, modes, gamma })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }
}

/// The mode data lifted to the state `(x, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMode {
    pub a: Matrix,
    pub d: Matrix,
    pub sigma: Matrix,
}

/// `Ã = [[A, l₂], [0, 0]]`, `D̃ = [[D, l₁], [l₁ᵀ, 2α]]`, `Σ̃ = [[Σ, 0], [0, 0]]`.
pub fn augment(m: &Mode) -> AugmentedMode {
    let n = m.dim();
    let mut a = Matrix::zeros(n + 1, n + 1);
    let mut d = Matrix::zeros(n + 1, n + 1);
    let mut sigma = Matrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&m.a);
    a.view_mut((0, n), (n, 1)).copy_from(&m.l2);
    d.view_mut((0, 0), (n, n)).copy_from(m.d.as_matrix());
    d.view_mut((0, n), (n, 1)).copy_from(&m.l1);
    d.view_mut((n, 0), (1, n)).copy_from(&m.l1.transpose());
    d[(n, n)] = 2.0 * m.alpha;
    sigma.view_mut((0, 0), (n, n)).copy_from(m.sigma.as_matrix());
    AugmentedMode { a, d, sigma }
}

/// The Hamiltonian matrix `[[-Ã, -Σ̃], [D̃, Ãᵀ]]`.
pub fn hamiltonian_matrix(m: &Mode) -> Matrix {
    let aug = augment(m);
    let n = aug.a.nrows();
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&(-&aug.a));
    h.view_mut((0, n), (n, n)).copy_from(&(-&aug.sigma));
    h.view_mut((n, 0), (n, n)).copy_from(&aug.d);
    h.view_mut((n, n), (n, n)).copy_from(&aug.a.transpose());
    h
}

/// `[[A, b], [bᵀ, c]]`: the augmented matrix whose half-quadratic form at
/// `(x, 1)` equals the form's value.
pub fn augmented_form(q: &QuadraticForm) -> Matrix {
    let n = q.dim();
    let mut p = Matrix::zeros(n + 1, n + 1);
    p.view_mut((0, 0), (n, n)).copy_from(q.a.as_matrix());
    p.view_mut((0, n), (n, 1)).copy_from(&q.b);
    p.view_mut((n, 0), (1, n)).copy_from(&q.b.transpose());
    p[(n, n)] = q.c;
    p
}

/// Inverse of [`augmented_form`]; the input is symmetrized first.
pub fn deaugment_form(p: &Matrix) -> QuadraticForm {
    let n = p.nrows() - 1;
    let p = SymMatrix::symmetrize(p.clone()).into_matrix();
    QuadraticForm {
        a: SymMatrix::symmetrize(p.view((0, 0), (n, n)).into_owned()),
        b: p.view((0, n), (n, 1)).column(0).into_owned(),
        c: p[(n, n)],
        tag: None,
    }
}

/// Cached fundamental solution `exp(𝒜τ)` for one mode.
#[derive(Debug, Clone)]
pub struct ModePropagator {
    pub mode: usize,
    pub tau: f64,
    dim: usize,
    e: Matrix,
    /// `exp(𝒜kτ/K)` for `k = 1..K`, used to detect escape inside the step.
    checkpoints: Vec<Matrix>,
}

/// Interior points at which `det X` is checked for a sign change.
const ESCAPE_CHECKPOINTS: usize = 8;

impl ModePropagator {
    pub fn new(mode_index: usize, mode: &Mode, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
        }
        let h = hamiltonian_matrix(mode);
        let e = numkernel::expm(&(&h * tau))?;
        let sub = numkernel::expm(&(&h * (tau / ESCAPE_CHECKPOINTS as f64)))?;
        let mut checkpoints = Vec::with_capacity(ESCAPE_CHECKPOINTS - 1);
        let mut acc = sub.clone();
        for _ in 1..ESCAPE_CHECKPOINTS {
            checkpoints.push(acc.clone());
            acc = &acc * &sub;
        }
        Ok(ModePropagator {
            mode: mode_index,
            tau,
            dim: mode.dim(),
            e,
            checkpoints,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `exp(𝒜τ)`, of size `2(d+1)`.
    pub fn fundamental(&self) -> &Matrix {
        &self.e
    }

    /// Propagates `q` over one step: `[X; Y] = E [I; P̃₀]`, `P̃_τ = Y X⁻¹`.
    ///
    /// Fails with [`Error::Finiteness`] when `X` is numerically singular,
    /// which happens when the propagated value blows up within the step.
    pub fn propagate(&self, q: &QuadraticForm) -> Result<QuadraticForm> {
        if q.dim() != self.dim {
            return Err(Error::dim("propagated form", self.dim, q.dim()));
        }
        let n = self.dim + 1;
        let p0 = augmented_form(q);
        let e11 = self.e.view((0, 0), (n, n));
        let e12 = self.e.view((0, n), (n, n));
        let e21 = self.e.view((n, 0), (n, n));
        let e22 = self.e.view((n, n), (n, n));
        let x = e11 + e12 * &p0;
        let y = e21 + e22 * &p0;

        // det X starts at 1; a sign change means the solution escaped to
        // infinity somewhere in the step even if X is invertible at τ.
        let escaped = self
            .checkpoints
            .iter()
            .map(|c| (c.view((0, 0), (n, n)) + c.view((0, n), (n, n)) * &p0).determinant())
            .chain(std::iter::once(x.determinant()))
            .any(|det| det.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater));
        if escaped {
            return Err(Error::Finiteness {
                mode: self.mode,
                step: None,
                rcond: 0.0,
            });
        }

        // P = Y X⁻¹  <=>  Xᵀ Pᵀ = Yᵀ
        let solved = numkernel::solve(&x.transpose(), &y.transpose()).map_err(|e| match e {
            Error::Singular { rcond } => Error::Finiteness {
                mode: self.mode,
                step: None,
                rcond,
            },
            other => other,
        })?;
        let p = solved.x.transpose();
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Finiteness {
                mode: self.mode,
                step: None,
                rcond: solved.rcond,
            });
        }
        Ok(deaugment_form(&p))
    }
}

/// Builds one propagator per mode.
pub fn build_propagators(sys: &SwitchedSystem, tau: f64) -> Result<Vec<ModePropagator>> {
    sys.modes()
        .iter()
        .enumerate()
        .map(|(i, m)| ModePropagator::new(i, m, tau))
        .collect()
}

/// One iteration of the max-plus recursion without pruning: every form is
/// propagated through every mode. Output order is mode-major, parent-minor.
pub fn step(v: &MaxPlusApprox, props: &[ModePropagator]) -> Result<MaxPlusApprox> {
    let Some(first) = props.first() else {
        return Err(Error::InvalidArgument("no propagators".into()));
    };
    if let Some(p) = props.iter().find(|p| p.tau != first.tau || p.dim != v.dim()) {
        return Err(Error::InvalidArgument(format!(
            "propagator for mode {} disagrees on step length or dimension",
            p.mode
        )));
    }
    let n = v.len();
    let forms = (0..props.len() * n)
        .into_par_iter()
        .map(|idx| {
            let (m, j) = (idx / n, idx % n);
            let parent = &v.forms()[j];
            let mut modes = parent.tag.as_ref().map(|t| t.modes.clone()).unwrap_or_default();
            modes.push(props[m].mode);
            props[m]
                .propagate(parent)
                .map(|f| f.with_tag(FormTag { parent: j, modes }))
        })
        .collect::<Result<Vec<_>>>()?;
    MaxPlusApprox::new(forms)
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tau: f64,
    pub steps: usize,
    pub pruner: PruneConfig,
    pub seed: u64,
    /// Starting function; the zero form when absent.
    pub initial: Option<MaxPlusApprox>,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    /// 1-based step index.
    pub step: usize,
    pub forms_before: usize,
    pub forms_after: usize,
    pub keep: usize,
    pub propagation_time: Duration,
    pub sdp_time: Duration,
    pub pruning_time: Duration,
    /// `None` when the budget did not bind and pruning was skipped.
    pub diagnostics: Option<PruneDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub steps: Vec<StepReport>,
    pub approx: MaxPlusApprox,
}

/// Runs `steps` iterations of propagate-then-prune starting from the zero
/// form. `keep(i)` is the budget after step `i` (1-based); pruning is
/// skipped when the step produced no more than that many forms.
pub fn solve(
    sys: &SwitchedSystem,
    opts: &SolveOptions,
    keep: &(dyn Fn(usize) -> usize + Sync),
) -> Result<SolveReport> {
    if opts.steps == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    let props = build_propagators(sys, opts.tau)?;
    let mut v = match &opts.initial {
        Some(init) if init.dim() != sys.dim() => {
            return Err(Error::dim("initial approximation", sys.dim(), init.dim()))
        }
        Some(init) => init.clone(),
        None => MaxPlusApprox::single(QuadraticForm::zero(sys.dim())),
    };
    let mut reports = Vec::with_capacity(opts.steps);

    for i in 1..=opts.steps {
        let budget = keep(i);
        if budget == 0 {
            return Err(Error::InvalidArgument(format!("keep schedule is zero at step {i}")));
        }
        let t0 = Instant::now();
        let next = step(&v, &props).map_err(|e| match e {
            Error::Finiteness { mode, rcond, .. } => Error::Finiteness {
                mode,
                step: Some(i),
                rcond,
            },
            other => other,
        })?;
        let propagation_time = t0.elapsed();
        let forms_before = next.len();

        let mut report = StepReport {
            step: i,
            forms_before,
            forms_after: forms_before,
            keep: budget,
            propagation_time,
            sdp_time: Duration::ZERO,
            pruning_time: Duration::ZERO,
            diagnostics: None,
        };
        v = if forms_before > budget && opts.pruner.kind != pruning::PrunerKind::None {
            let outcome = pruning::prune(&next, budget, &opts.pruner, crate::seed::derive(opts.seed, &[i as u64]))?;
            report.sdp_time = outcome.sdp_time;
            report.pruning_time = outcome.combinatorial_time;
            let kept = next.subset(&outcome.result.kept)?;
            report.forms_after = kept.len();
            report.diagnostics = Some(outcome.result.diagnostics);
            kept
        } else {
            next
        };
        reports.push(report);
    }
    Ok(SolveReport {
        steps: reports,
        approx: v,
    })
}
