//! SDP relaxation of the importance metric and randomized rounding.
//!
//! For form `j` the importance metric is
//!
//! ```text
//! ν_j = max_x min_{j'≠j} (φ_j(x) − φ_j'(x)) / (1 + |x|²)
//! ```
//!
//! which, with `y = (1, x)/|(1, x)|`, is a nonconvex QCQP over the unit
//! sphere. Lifting `Y = yyᵀ` gives the relaxation
//!
//! ```text
//! ν̄_j = max ν  s.t.  Y ⪰ 0, Tr Y = 1, Y₁₁ ≥ η, ⟨Q_j^{j'}, Y⟩ ≥ ν  ∀ j' ≠ j
//! ```
//!
//! solved here by an alternating-direction augmented Lagrangian method on the
//! standard-form conic program. The returned `nu_bar` is always backed by a
//! dual certificate (`λ_max(Σ λ_i Q_i + μE₁₁) − μη` for a simplex vector `λ`
//! and `μ ≥ 0`), so it is a valid upper bound even when the iteration stops
//! early.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkernel::{self, SymMatrix};
use crate::quadform::{HomogenizedForm, MaxPlusApprox};

/// Differences `Q_j − Q_{j'}` of homogenized forms, for a fixed `j`.
#[derive(Debug, Clone)]
pub struct ImportanceSdp {
    pub j: usize,
    pub diffs: Vec<HomogenizedForm>,
}

impl ImportanceSdp {
    pub fn new(v: &MaxPlusApprox, j: usize) -> Result<Self> {
        if j >= v.len() {
            return Err(Error::IndexOutOfRange { index: j, len: v.len() });
        }
        let homog: Vec<HomogenizedForm> = v.forms().iter().map(|f| f.homogenize()).collect();
        Ok(Self::from_homogenized(&homog, j))
    }

    pub(crate) fn from_homogenized(homog: &[HomogenizedForm], j: usize) -> Self {
        let diffs = homog
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, h)| homog[j].difference(h))
            .collect();
        ImportanceSdp { j, diffs }
    }

    /// Size `d + 1` of the lifted variable.
    pub fn size(&self) -> usize {
        self.diffs.first().map(|h| h.q.dim()).unwrap_or(0)
    }

    /// `min_{j'} (φ_j − φ_j')(x) / (1 + |x|²)`: the metric evaluated at `x`.
    pub fn margin_at(&self, x: &[f64]) -> f64 {
        let mut y = Vec::with_capacity(x.len() + 1);
        y.push(1.0);
        y.extend_from_slice(x);
        let norm2: f64 = y.iter().map(|v| v * v).sum();
        self.diffs
            .iter()
            .map(|h| h.quad(&y))
            .fold(f64::INFINITY, f64::min)
            / norm2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Stopping tolerance on the relative primal and dual residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Lower bound replacing the open constraint `Y₁₁ > 0`.
    pub eta: f64,
    /// Required certified gap `ν̄ − min ⟨Q, Y⟩` for convergence.
    pub gap_tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tol: 1e-7,
            max_iter: 20_000,
            eta: 1e-6,
            gap_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Converged,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Certified upper bound on the importance metric.
    pub nu_bar: f64,
    /// `min_{j'} ⟨Q_j^{j'}, Y⟩` at the returned `Y`.
    pub nu_primal: f64,
    /// Lifted matrix: PSD, unit trace, `Y₁₁ ≥ η`.
    pub y_mat: SymMatrix,
    /// Mean vector with `Y − yyᵀ ⪰ 0`: the dominant rank-one part of `Y`.
    pub y: DVector<f64>,
    pub status: SdpStatus,
    pub iterations: usize,
}

/// Standard-form data: `X = (Y, w, s, t)` in `S^n_+ × R_+ × R_+^m × R_+`
/// with `ν = L + w`, constraints
/// `Tr Y = 1`, `⟨Q_i, Y⟩ − w − s_i = L`, `Y₁₁ − t = η`, objective `min −w`.
struct Conic<'a> {
    q: &'a [DMatrix<f64>],
    n: usize,
    lower: f64,
    eta: f64,
}

#[derive(Clone)]
struct Point {
    y: DMatrix<f64>,
    w: f64,
    s: DVector<f64>,
    t: f64,
}

impl Point {
    fn zeros(n: usize, m: usize) -> Self {
        Point {
            y: DMatrix::zeros(n, n),
            w: 0.0,
            s: DVector::zeros(m),
            t: 0.0,
        }
    }

    fn norm(&self) -> f64 {
        (self.y.norm_squared() + self.w * self.w + self.s.norm_squared() + self.t * self.t).sqrt()
    }
}

impl Conic<'_> {
    fn m(&self) -> usize {
        self.q.len()
    }

    fn b(&self) -> DVector<f64> {
        let m = self.m();
        DVector::from_fn(m + 2, |i, _| {
            if i == 0 {
                1.0
            } else if i <= m {
                self.lower
            } else {
                self.eta
            }
        })
    }

    fn c(&self) -> Point {
        let mut c = Point::zeros(self.n, self.m());
        c.w = -1.0;
        c
    }

    fn apply(&self, x: &Point) -> DVector<f64> {
        let m = self.m();
        let mut out = DVector::zeros(m + 2);
        out[0] = x.y.trace();
        for (i, qi) in self.q.iter().enumerate() {
            out[i + 1] = qi.dot(&x.y) - x.w - x.s[i];
        }
        out[m + 1] = x.y[(0, 0)] - x.t;
        out
    }

    fn adjoint(&self, v: &DVector<f64>) -> Point {
        let m = self.m();
        let mut p = Point::zeros(self.n, m);
        p.y.fill_diagonal(v[0]);
        for (i, qi) in self.q.iter().enumerate() {
            p.y += qi * v[i + 1];
            p.s[i] = -v[i + 1];
        }
        p.y[(0, 0)] += v[m + 1];
        p.w = -v.rows(1, m).sum();
        p.t = -v[m + 1];
        p
    }

    /// `𝒜𝒜*`, positive definite thanks to the slack columns.
    fn gram(&self) -> DMatrix<f64> {
        let m = self.m();
        let mut g = DMatrix::zeros(m + 2, m + 2);
        g[(0, 0)] = self.n as f64;
        g[(0, m + 1)] = 1.0;
        g[(m + 1, 0)] = 1.0;
        g[(m + 1, m + 1)] = 2.0;
        for i in 0..m {
            let qi = &self.q[i];
            g[(0, i + 1)] = qi.trace();
            g[(i + 1, 0)] = qi.trace();
            g[(i + 1, m + 1)] = qi[(0, 0)];
            g[(m + 1, i + 1)] = qi[(0, 0)];
            for k in i..m {
                let mut v = qi.dot(&self.q[k]) + 1.0;
                if i == k {
                    v += 1.0;
                }
                g[(i + 1, k + 1)] = v;
                g[(k + 1, i + 1)] = v;
            }
        }
        g
    }

    fn project_cone(&self, v: &Point) -> Point {
        Point {
            y: numkernel::project_psd(&SymMatrix::symmetrize(v.y.clone())).into_matrix(),
            w: v.w.max(0.0),
            s: v.s.map(|x| x.max(0.0)),
            t: v.t.max(0.0),
        }
    }
}

fn lin_comb(a: &Point, alpha: f64, b: &Point, beta: f64) -> Point {
    Point {
        y: &a.y * alpha + &b.y * beta,
        w: a.w * alpha + b.w * beta,
        s: &a.s * alpha + &b.s * beta,
        t: a.t * alpha + b.t * beta,
    }
}

/// Turns an iterate into a feasible lifted matrix: PSD, unit trace and
/// `Y₁₁ ≥ η`.
fn feasible_lift(y: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    let n = y.nrows();
    let mut p = numkernel::project_psd(&SymMatrix::symmetrize(y.clone())).into_matrix();
    let tr = p.trace();
    if tr > 0.0 && tr.is_finite() {
        p /= tr;
    } else {
        p = DMatrix::identity(n, n) / n as f64;
    }
    if p[(0, 0)] < eta {
        // Mix toward E₁₁ just enough.
        let theta = (eta - p[(0, 0)]) / (1.0 - p[(0, 0)]);
        p *= 1.0 - theta;
        p[(0, 0)] += theta;
    }
    p
}

/// `λ_max(Σ λ_i Q_i + μE₁₁) − μη` minimized over the two natural choices of
/// `μ`. Valid upper bound for any `λ` in the simplex.
fn certified_bound(q: &[DMatrix<f64>], dual: &DVector<f64>, eta: f64) -> f64 {
    let m = q.len();
    let n = q[0].nrows();
    let mut lambda: Vec<f64> = (1..=m).map(|i| dual[i].max(0.0)).collect();
    let total: f64 = lambda.iter().sum();
    let mu_candidates = if total > 0.0 && total.is_finite() {
        lambda.iter_mut().for_each(|l| *l /= total);
        vec![0.0, dual[m + 1].max(0.0) / total]
    } else {
        lambda.iter_mut().for_each(|l| *l = 1.0 / m as f64);
        vec![0.0]
    };
    let mut combo = DMatrix::zeros(n, n);
    for (qi, &l) in q.iter().zip(&lambda) {
        combo += qi * l;
    }
    mu_candidates
        .into_iter()
        .map(|mu| {
            let mut c = combo.clone();
            c[(0, 0)] += mu;
            SymMatrix::symmetrize(c).max_eigenvalue() - mu * eta
        })
        .fold(f64::INFINITY, f64::min)
}

fn dominant_rank_one(y: &DMatrix<f64>) -> DVector<f64> {
    let (values, vectors) = SymMatrix::symmetrize(y.clone()).eigen();
    let n = values.len();
    let top = values[n - 1].max(0.0);
    let mut v = vectors.column(n - 1).into_owned() * top.sqrt();
    if v[0] < 0.0 {
        v = -v;
    }
    v
}

/// Number of past differences kept by the Anderson extrapolation.
const ANDERSON_MEMORY: usize = 10;

impl Point {
    fn len(n: usize, m: usize) -> usize {
        n * n + m + 2
    }

    fn write(&self, out: &mut [f64]) {
        let nn = self.y.len();
        out[..nn].copy_from_slice(self.y.as_slice());
        out[nn] = self.w;
        out[nn + 1..nn + 1 + self.s.len()].copy_from_slice(self.s.as_slice());
        out[nn + 1 + self.s.len()] = self.t;
    }

    fn read(v: &[f64], n: usize, m: usize) -> Self {
        let nn = n * n;
        Point {
            y: DMatrix::from_column_slice(n, n, &v[..nn]),
            w: v[nn],
            s: DVector::from_column_slice(&v[nn + 1..nn + 1 + m]),
            t: v[nn + 1 + m],
        }
    }
}

/// Anderson (type II) extrapolation state over a flat iterate.
struct Anderson {
    dz: Vec<DVector<f64>>,
    dg: Vec<DVector<f64>>,
}

impl Anderson {
    fn clear(&mut self) {
        self.dz.clear();
        self.dg.clear();
    }

    fn push(&mut self, dz: DVector<f64>, dg: DVector<f64>) {
        if self.dz.len() == ANDERSON_MEMORY {
            self.dz.remove(0);
            self.dg.remove(0);
        }
        self.dz.push(dz);
        self.dg.push(dg);
    }

    /// `Tz − (ΔZ + ΔG)γ` with `γ` the least-squares fit of `g` by `ΔG`.
    fn extrapolate(&self, tz: &DVector<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
        if self.dz.is_empty() {
            return None;
        }
        let dg = DMatrix::from_columns(&self.dg);
        let gamma = dg.svd(true, true).solve(g, 1e-12).ok()?;
        let mut cand = tz.clone();
        for (k, &gk) in gamma.iter().enumerate() {
            cand -= (&self.dz[k] + &self.dg[k]) * gk;
        }
        cand.iter().all(|v| v.is_finite()).then_some(cand)
    }
}

/// Solves the relaxation for one candidate form.
pub fn solve_importance_sdp(p: &ImportanceSdp, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = p.size();
    if n < 2 || p.diffs.is_empty() {
        return Err(Error::InvalidArgument(
            "importance SDP needs dimension >= 1 and at least one competing form".into(),
        ));
    }
    if opts.eta > 1.0 / n as f64 {
        return Ok(SdpSolution {
            nu_bar: f64::INFINITY,
            nu_primal: f64::NEG_INFINITY,
            y_mat: SymMatrix::identity(n),
            y: DVector::zeros(n),
            status: SdpStatus::Infeasible,
            iterations: 0,
        });
    }

    let scale = p
        .diffs
        .iter()
        .map(|h| h.q.as_matrix().norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        let y_mat = DMatrix::identity(n, n) / n as f64;
        return Ok(SdpSolution {
            nu_bar: 0.0,
            nu_primal: 0.0,
            y: dominant_rank_one(&y_mat),
            y_mat: SymMatrix::symmetrize(y_mat),
            status: SdpStatus::Converged,
            iterations: 0,
        });
    }
    let q: Vec<DMatrix<f64>> = p.diffs.iter().map(|h| h.q.as_matrix() / scale).collect();
    let conic = Conic {
        q: &q,
        n,
        lower: -2.0,
        eta: opts.eta,
    };
    let m = conic.m();
    let b = conic.b();
    let c = conic.c();
    let gram = conic
        .gram()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("importance SDP Gram matrix is not positive definite".into()))?;
    let b_norm = 1.0 + b.norm();
    let c_norm = 1.0 + c.norm();

    // Fixed-point map of the ADMM on the state z = (X, S):
    // 𝒜𝒜* y = μ(b − 𝒜X) − 𝒜(S − C); V = C − 𝒜*y − μX; S⁺ = Π(V); X⁺ = (S⁺ − V)/μ.
    let mu = 1.0;
    let len = Point::len(n, m);
    let step = |z: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let x = Point::read(&z.as_slice()[..len], n, m);
        let s = Point::read(&z.as_slice()[len..], n, m);
        let rhs = (&b - conic.apply(&x)) * mu - conic.apply(&lin_comb(&s, 1.0, &c, -1.0));
        let dual = gram.solve(&rhs);
        let v = lin_comb(&lin_comb(&c, 1.0, &conic.adjoint(&dual), -1.0), 1.0, &x, -mu);
        let s_new = conic.project_cone(&v);
        let x_new = lin_comb(&s_new, 1.0 / mu, &v, -1.0 / mu);
        let mut out = DVector::zeros(2 * len);
        x_new.write(&mut out.as_mut_slice()[..len]);
        s_new.write(&mut out.as_mut_slice()[len..]);
        (out, dual)
    };

    let mut x0 = Point::zeros(n, m);
    x0.y = DMatrix::identity(n, n) / n as f64;
    let mut z = DVector::zeros(2 * len);
    x0.write(&mut z.as_mut_slice()[..len]);
    let (mut tz, mut dual) = step(&z);
    let mut g = &tz - &z;
    let mut anderson = Anderson { dz: Vec::new(), dg: Vec::new() };
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut best: Option<(f64, f64, DMatrix<f64>)> = None;

    for it in 1..=opts.max_iter {
        iterations = it;
        let (cand, tc, yc, gc) = match anderson.extrapolate(&tz, &g) {
            Some(cand) => {
                let (tc, yc) = step(&cand);
                let gc = &tc - &cand;
                if gc.norm() > g.norm() {
                    // Safeguard: fall back to the plain step.
                    anderson.clear();
                    let (tc, yc) = step(&tz);
                    let gc = &tc - &tz;
                    (tz.clone(), tc, yc, gc)
                } else {
                    anderson.push(&cand - &z, &gc - &g);
                    (cand, tc, yc, gc)
                }
            }
            None => {
                let (tc, yc) = step(&tz);
                let gc = &tc - &tz;
                anderson.push(&tz - &z, &gc - &g);
                (tz.clone(), tc, yc, gc)
            }
        };
        z = cand;
        tz = tc;
        dual = yc;
        g = gc;

        if it % 10 != 0 {
            continue;
        }
        let x = Point::read(&tz.as_slice()[..len], n, m);
        let s = Point::read(&tz.as_slice()[len..], n, m);
        let pinf = (conic.apply(&x) - &b).norm() / b_norm;
        let dres = lin_comb(&lin_comb(&conic.adjoint(&dual), 1.0, &s, 1.0), 1.0, &c, -1.0);
        let dinf = dres.norm() / c_norm;

        // Both ends of the gap are certified: the lifted iterate is exactly
        // feasible and the dual bound holds for any multipliers.
        let y_feas = feasible_lift(&x.y, opts.eta);
        let primal = q.iter().map(|qi| qi.dot(&y_feas)).fold(f64::INFINITY, f64::min) * scale;
        let upper = certified_bound(&q, &dual, opts.eta) * scale;
        if best.as_ref().is_none_or(|(u, l, _)| upper - primal < u - l) {
            best = Some((upper, primal, y_feas));
        }
        let (u, l, _) = best.as_ref().unwrap();
        if u - l <= opts.gap_tol || (pinf <= opts.tol && dinf <= opts.tol && u - l <= 10.0 * opts.gap_tol) {
            status = SdpStatus::Converged;
            break;
        }
    }

    let (nu_bar, nu_primal, y_mat) = match best {
        Some(b) => b,
        None => {
            let x = Point::read(&tz.as_slice()[..len], n, m);
            let y_feas = feasible_lift(&x.y, opts.eta);
            let primal = q.iter().map(|qi| qi.dot(&y_feas)).fold(f64::INFINITY, f64::min) * scale;
            (certified_bound(&q, &dual, opts.eta) * scale, primal, y_feas)
        }
    };
    if status == SdpStatus::MaxIter && nu_bar - nu_primal <= opts.gap_tol {
        // Certified optimal even though residuals did not settle.
        status = SdpStatus::Converged;
    }
    Ok(SdpSolution {
        nu_bar,
        nu_primal,
        y: dominant_rank_one(&y_mat),
        y_mat: SymMatrix::symmetrize(y_mat),
        status,
        iterations,
    })
}

/// Witness points drawn around one SDP solution.
#[derive(Debug, Clone)]
pub struct Witnesses {
    pub points: Vec<Vec<f64>>,
    /// Best metric value over the points; `None` when every draw was
    /// discarded.
    pub nu_lower: Option<f64>,
}

/// Draws below this first homogeneous coordinate are discarded.
const MIN_LEADING: f64 = 1e-9;

/// Samples `y ~ N(ȳ, Ȳ − ȳȳᵀ)` and maps each draw to `x = y[1..] / y[0]`.
pub fn sample_witnesses(p: &ImportanceSdp, sol: &SdpSolution, count: usize, seed: u64) -> Witnesses {
    let n = sol.y.len();
    let cov = sol.y_mat.as_matrix() - &sol.y * sol.y.transpose();
    let factor = numkernel::psd_factor(&numkernel::project_psd(&SymMatrix::symmetrize(cov)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut points = Vec::with_capacity(count);
    let mut nu_lower: Option<f64> = None;
    for _ in 0..count {
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let y = &sol.y + &factor * z;
        if y[0].abs() < MIN_LEADING {
            continue;
        }
        let x: Vec<f64> = (1..n).map(|i| y[i] / y[0]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let margin = p.margin_at(&x);
        nu_lower = Some(nu_lower.map_or(margin, |b| b.max(margin)));
        points.push(x);
    }
    Witnesses { points, nu_lower }
}
