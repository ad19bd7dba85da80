//! Hamiltonian backsubstitution diagnostics.
//!
//! A max-plus approximation `V` is plugged back into the stationary
//! equation `0 = max_m H^m(x, ∇V(x))`. The residual `H` is evaluated on a
//! two-dimensional slice through the state space; its discrete L1 norm
//! summarizes the quality of the approximation and the maximizing mode
//! gives the synthesized switching policy.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagation::{Mode, SwitchedSystem};
use crate::quadform::MaxPlusApprox;

/// `½xᵀDx + ½pᵀΣp + (Ax)ᵀp + l₁ᵀx + l₂ᵀp + α`.
pub fn hamiltonian_m(m: &Mode, x: &[f64], p: &[f64]) -> Result<f64> {
    let n = m.dim();
    if x.len() != n {
        return Err(Error::dim("hamiltonian state", n, x.len()));
    }
    if p.len() != n {
        return Err(Error::dim("hamiltonian costate", n, p.len()));
    }
    Ok(hamiltonian_unchecked(m, x, p))
}

fn hamiltonian_unchecked(m: &Mode, x: &[f64], p: &[f64]) -> f64 {
    let n = x.len();
    let (d, s) = (m.d.as_matrix(), m.sigma.as_matrix());
    let mut acc = m.alpha;
    for i in 0..n {
        let mut dx = 0.0;
        let mut sp = 0.0;
        let mut ax = 0.0;
        for j in 0..n {
            dx += d[(i, j)] * x[j];
            sp += s[(i, j)] * p[j];
            ax += m.a[(i, j)] * x[j];
        }
        acc += 0.5 * x[i] * dx + 0.5 * p[i] * sp + ax * p[i] + m.l1[i] * x[i] + m.l2[i] * p[i];
    }
    acc
}

/// `max_m H^m(x, ∇V(x))` and the lowest maximizing mode. `∇V` is the
/// gradient of the lowest-index active form.
pub fn hjb_residual(sys: &SwitchedSystem, v: &MaxPlusApprox, x: &[f64]) -> Result<(f64, usize)> {
    if v.dim() != sys.dim() {
        return Err(Error::dim("approximation", sys.dim(), v.dim()));
    }
    let p = v.active_gradient(x)?;
    Ok(max_mode(sys, x, &p))
}

fn max_mode(sys: &SwitchedSystem, x: &[f64], p: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (m, mode) in sys.modes().iter().enumerate() {
        let h = hamiltonian_unchecked(mode, x, p);
        if h > best.0 {
            best = (h, m);
        }
    }
    best
}

/// A uniform grid on the plane spanned by two coordinate axes; the other
/// coordinates are held at `fixed`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSlice {
    pub axis1: usize,
    pub axis2: usize,
    pub range1: (f64, f64),
    pub range2: (f64, f64),
    pub resolution: usize,
    /// Full-length base point; entries on the two axes are ignored.
    pub fixed: Vec<f64>,
}

impl GridSlice {
    /// Axes `(0, 1)`, range `[−2, 2]²`, 101 points per axis, others 0.
    pub fn default_for(dim: usize) -> Self {
        GridSlice {
            axis1: 0,
            axis2: 1,
            range1: (-2.0, 2.0),
            range2: (-2.0, 2.0),
            resolution: 101,
            fixed: vec![0.0; dim],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.axis1 == self.axis2 {
            return Err(Error::InvalidArgument(format!("grid axes must differ (both {})", self.axis1)));
        }
        for axis in [self.axis1, self.axis2] {
            if axis >= dim {
                return Err(Error::IndexOutOfRange { index: axis, len: dim });
            }
        }
        if self.resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be at least 2, got {}",
                self.resolution
            )));
        }
        for (lo, hi) in [self.range1, self.range2] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!("invalid grid range [{lo}, {hi}]")));
            }
        }
        if self.fixed.len() != dim {
            return Err(Error::dim("grid base point", dim, self.fixed.len()));
        }
        Ok(())
    }

    fn coord(range: (f64, f64), res: usize, i: usize) -> f64 {
        range.0 + (range.1 - range.0) * i as f64 / (res - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        let r = (self.resolution - 1) as f64;
        (self.range1.1 - self.range1.0) / r * (self.range2.1 - self.range2.0) / r
    }

    /// Grid point `(i, j)`: `i` along `axis1`, `j` along `axis2`.
    pub fn point(&self, i: usize, j: usize) -> Vec<f64> {
        let mut x = self.fixed.clone();
        x[self.axis1] = Self::coord(self.range1, self.resolution, i);
        x[self.axis2] = Self::coord(self.range2, self.resolution, j);
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSample {
    pub x1: f64,
    pub x2: f64,
    pub h: f64,
    /// Lowest index of the active form.
    pub active: usize,
    /// Maximizing mode.
    pub policy: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub slice: GridSlice,
    /// Row-major: `axis1` index outer, `axis2` index inner.
    pub samples: Vec<ResidualSample>,
    /// `Σ|H| · cellArea`.
    pub l1: f64,
    pub max_abs: f64,
}

/// Evaluates the residual on every point of `slice`.
pub fn residual_field(sys: &SwitchedSystem, v: &MaxPlusApprox, slice: &GridSlice) -> Result<ResidualField> {
    if v.dim() != sys.dim() {
        return Err(Error::dim("approximation", sys.dim(), v.dim()));
    }
    slice.validate(sys.dim())?;
    let res = slice.resolution;
    let samples: Vec<ResidualSample> = (0..res * res)
        .into_par_iter()
        .map(|k| {
            let x = slice.point(k / res, k % res);
            let (_, active) = v.eval_max_unchecked(&x);
            let p = v.forms()[active].gradient(&x).expect("grid point has system dimension");
            let (h, policy) = max_mode(sys, &x, &p);
            ResidualSample {
                x1: x[slice.axis1],
                x2: x[slice.axis2],
                h,
                active,
                policy,
            }
        })
        .collect();
    let l1 = samples.iter().map(|s| s.h.abs()).sum::<f64>() * slice.cell_area();
    let max_abs = samples.iter().map(|s| s.h.abs()).fold(0.0, f64::max);
    Ok(ResidualField {
        slice: slice.clone(),
        samples,
        l1,
        max_abs,
    })
}
