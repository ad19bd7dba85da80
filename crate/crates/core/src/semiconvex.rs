//! Approximation-error experiments for semiconvex functions.
//!
//! A function `ψ` is c-semiconvex when `g = ψ + (c/2)|x|²` is convex. Then
//! `ψ` is approximated from below by the max of `n` quadratics with fixed
//! Hessian `−cI`, each obtained from a tangent plane of `g`:
//!
//! ```text
//! ψ̃(x) = max_i { −(c/2)|x|² + g(z_i) + ∇g(z_i)ᵀ(x − z_i) }
//! ```
//!
//! so the pointwise error is `min_i D_g(x; z_i)`, the Bregman distance of
//! `g` to the nearest touching point. The lab measures how the L1 and L∞
//! errors decay with `n`; the expected rate is `n^(−2/d)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkernel::{Matrix, SymMatrix};
use crate::quadform::{MaxPlusApprox, QuadraticForm};

/// Catalog of test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// `½|x|²`.
    HalfNormSquared,
    /// `¼Σx_i⁴ + ½|x|²`.
    QuarticPlusQuadratic,
}

impl TestFunction {
    pub const ALL: [TestFunction; 2] = [TestFunction::HalfNormSquared, TestFunction::QuarticPlusQuadratic];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::HalfNormSquared => "half-norm-squared",
            TestFunction::QuarticPlusQuadratic => "quartic",
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        let q: f64 = x.iter().map(|t| 0.5 * t * t).sum();
        match self {
            TestFunction::HalfNormSquared => q,
            TestFunction::QuarticPlusQuadratic => q + x.iter().map(|t| 0.25 * t.powi(4)).sum::<f64>(),
        }
    }

    pub fn gradient(self, x: &[f64]) -> Vec<f64> {
        match self {
            TestFunction::HalfNormSquared => x.to_vec(),
            TestFunction::QuarticPlusQuadratic => x.iter().map(|t| t.powi(3) + t).collect(),
        }
    }

    pub fn hessian(self, x: &[f64]) -> SymMatrix {
        match self {
            TestFunction::HalfNormSquared => SymMatrix::identity(x.len()),
            TestFunction::QuarticPlusQuadratic => {
                SymMatrix::from_diagonal(&x.iter().map(|t| 3.0 * t * t + 1.0).collect::<Vec<_>>())
            }
        }
    }

    /// Smallest `c` making `ψ + (c/2)|x|²` convex on `domain`.
    pub fn c_min(self, domain: &Domain) -> f64 {
        match self {
            TestFunction::HalfNormSquared => -1.0,
            TestFunction::QuarticPlusQuadratic => {
                let closest = domain
                    .lo
                    .iter()
                    .zip(&domain.hi)
                    .map(|(&lo, &hi)| if lo <= 0.0 && 0.0 <= hi { 0.0 } else { (lo * lo).min(hi * hi) })
                    .fold(f64::INFINITY, f64::min);
                -(1.0 + 3.0 * closest)
            }
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown test function '{s}'")))
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::dim("bregman pair", x.len(), y.len()));
    }
    Ok(())
}

/// `D_ψ(x; y) = ψ(x) − ψ(y) − ∇ψ(y)ᵀ(x − y)`.
pub fn bregman(psi: TestFunction, x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let gy = psi.gradient(y);
    let lin: f64 = gy.iter().zip(x.iter().zip(y)).map(|(g, (a, b))| g * (a - b)).sum();
    Ok(psi.value(x) - psi.value(y) - lin)
}

/// Bregman distance of `g = ψ + (c/2)|x|²`.
fn bregman_shifted(psi: TestFunction, c: f64, x: &[f64], y: &[f64]) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    bregman(psi, x, y).expect("matching dimensions") + 0.5 * c * sq
}

/// An axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim("domain bounds", lo.len(), hi.len()));
        }
        if lo.is_empty() {
            return Err(Error::InvalidArgument("domain must have at least one axis".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidArgument("domain bounds must be finite with lo < hi".into()));
        }
        Ok(Domain { lo, hi })
    }

    /// `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Domain::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Tensor grid with `res` nodes per axis (endpoints included) and the
    /// matching trapezoidal weights.
    fn nodes(&self, res: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let d = self.dim();
        let total = res.pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut x = vec![0.0; d];
            let mut w = 1.0;
            for k in (0..d).rev() {
                let i = rem % res;
                rem /= res;
                let h = (self.hi[k] - self.lo[k]) / (res - 1) as f64;
                x[k] = self.lo[k] + h * i as f64;
                w *= if i == 0 || i == res - 1 { 0.5 * h } else { h };
            }
            points.push(x);
            weights.push(w);
        }
        (points, weights)
    }
}

/// How touching points are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Cell centers of a uniform `m^d` grid; `n` must be a perfect `d`-th
    /// power.
    UniformGrid,
    /// Lloyd iteration for Bregman quantization of the uniform measure,
    /// run on a witness grid with `witness_res` nodes per axis.
    BregmanLloyd { iterations: usize, witness_res: usize },
}

impl Placement {
    pub fn name(&self) -> &'static str {
        match self {
            Placement::UniformGrid => "uniform-grid",
            Placement::BregmanLloyd { .. } => "bregman-lloyd",
        }
    }
}

/// Exact integer `d`-th root of `n`, if any.
fn perfect_root(n: usize, d: usize) -> Option<usize> {
    let guess = (n as f64).powf(1.0 / d as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|&m| m.checked_pow(d as u32) == Some(n))
}

fn uniform_centers(domain: &Domain, n: usize) -> Result<Vec<Vec<f64>>> {
    let d = domain.dim();
    let m = perfect_root(n, d).ok_or_else(|| Error::Placement {
        requested: n,
        reason: format!("uniform grid needs a perfect {d}-th power"),
    })?;
    Ok((0..n)
        .map(|flat| {
            let mut rem = flat;
            let mut z = vec![0.0; d];
            for k in (0..d).rev() {
                let i = rem % m;
                rem /= m;
                let h = (domain.hi[k] - domain.lo[k]) / m as f64;
                z[k] = domain.lo[k] + h * (i as f64 + 0.5);
            }
            z
        })
        .collect())
}

/// Radical inverse in base `b`.
fn radical_inverse(mut i: usize, b: usize) -> f64 {
    let inv = 1.0 / b as f64;
    let mut acc = 0.0;
    let mut f = inv;
    while i > 0 {
        acc += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    acc
}

/// First `n` points of the Halton sequence mapped into the box.
fn halton(domain: &Domain, n: usize) -> Vec<Vec<f64>> {
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    (1..=n)
        .map(|i| {
            (0..domain.dim())
                .map(|k| domain.lo[k] + (domain.hi[k] - domain.lo[k]) * radical_inverse(i, PRIMES[k % PRIMES.len()]))
                .collect()
        })
        .collect()
}

fn nearest(psi: TestFunction, c: f64, x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, z) in centers.iter().enumerate() {
        let dist = bregman_shifted(psi, c, x, z);
        if dist < best.1 {
            best = (i, dist);
        }
    }
    best
}

fn lloyd(psi: TestFunction, c: f64, domain: &Domain, n: usize, iterations: usize, res: usize) -> Result<Vec<Vec<f64>>> {
    if res < 2 {
        return Err(Error::Placement {
            requested: n,
            reason: "witness grid needs at least 2 nodes per axis".into(),
        });
    }
    let (witnesses, weights) = domain.nodes(res);
    let mut centers = match uniform_centers(domain, n) {
        Ok(z) => z,
        Err(_) => halton(domain, n),
    };
    let d = domain.dim();
    for _ in 0..iterations {
        let labels: Vec<usize> = witnesses.par_iter().map(|x| nearest(psi, c, x, &centers).0).collect();
        let mut sums = vec![vec![0.0; d]; n];
        let mut mass = vec![0.0; n];
        for ((x, &w), &l) in witnesses.iter().zip(&weights).zip(&labels) {
            mass[l] += w;
            for k in 0..d {
                sums[l][k] += w * x[k];
            }
        }
        // The Bregman centroid (second argument) is the plain mean.
        let mut moved = 0.0f64;
        for i in 0..n {
            if mass[i] > 0.0 {
                for k in 0..d {
                    let next = sums[i][k] / mass[i];
                    moved = moved.max((next - centers[i][k]).abs());
                    centers[i][k] = next;
                }
            }
        }
        if moved < 1e-12 {
            break;
        }
    }
    Ok(centers)
}

/// Touching points for `n` basis functions.
pub fn place(psi: TestFunction, c: f64, domain: &Domain, n: usize, placement: Placement) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::Placement {
            requested: 0,
            reason: "at least one basis function is required".into(),
        });
    }
    match placement {
        Placement::UniformGrid => uniform_centers(domain, n),
        Placement::BregmanLloyd { iterations, witness_res } => lloyd(psi, c, domain, n, iterations, witness_res),
    }
}

/// The quadratic `−(c/2)|x|² + g(z) + ∇g(z)ᵀ(x − z)` touching `ψ` at `z`.
pub fn tangent_form(psi: TestFunction, c: f64, z: &[f64]) -> QuadraticForm {
    let d = z.len();
    let zz: f64 = z.iter().map(|t| t * t).sum();
    let g = psi.value(z) + 0.5 * c * zz;
    let grad: Vec<f64> = psi.gradient(z).iter().zip(z).map(|(p, t)| p + c * t).collect();
    let gz: f64 = grad.iter().zip(z).map(|(a, b)| a * b).sum();
    QuadraticForm {
        a: SymMatrix::symmetrize(Matrix::from_diagonal_element(d, d, -c)),
        b: DVector::from_vec(grad),
        c: 2.0 * (g - gz),
        tag: None,
    }
}

/// Max of `n` fixed-Hessian quadratics touching `ψ` from below.
pub fn fit_from_below(
    psi: TestFunction,
    c: f64,
    domain: &Domain,
    n: usize,
    placement: Placement,
) -> Result<MaxPlusApprox> {
    let c_min = psi.c_min(domain);
    if !(c.is_finite() && c >= c_min) {
        return Err(Error::InvalidArgument(format!(
            "{psi} is only c-semiconvex for c >= {c_min} on this domain, got c = {c}"
        )));
    }
    let centers = place(psi, c, domain, n, placement)?;
    MaxPlusApprox::new(centers.iter().map(|z| tangent_form(psi, c, z)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub eps1: f64,
    pub eps_inf: f64,
}

/// Trapezoidal `∫|ψ − ψ̃|` and the grid maximum of `|ψ − ψ̃|`, with
/// `grid_res` nodes per axis including the box faces.
pub fn measure_errors(psi: TestFunction, approx: &MaxPlusApprox, domain: &Domain, grid_res: usize) -> Result<ErrorNorms> {
    if approx.dim() != domain.dim() {
        return Err(Error::dim("approximation", domain.dim(), approx.dim()));
    }
    if grid_res < 2 {
        return Err(Error::InvalidArgument("error grid needs at least 2 nodes per axis".into()));
    }
    let (points, weights) = domain.nodes(grid_res);
    let errs: Vec<f64> = points
        .par_iter()
        .map(|x| (psi.value(x) - approx.eval_max_unchecked(x).0).abs())
        .collect();
    Ok(ErrorNorms {
        eps1: errs.iter().zip(&weights).map(|(e, w)| e * w).sum(),
        eps_inf: errs.iter().cloned().fold(0.0, f64::max),
    })
}

/// `∫ det(ψ″ + cI)^(1/(d+2)) dx`, the density factor in the asymptotic
/// error constant.
pub fn hessian_factor(psi: TestFunction, c: f64, domain: &Domain, grid_res: usize) -> f64 {
    let d = domain.dim();
    let (points, weights) = domain.nodes(grid_res.max(2));
    points
        .par_iter()
        .zip(weights.par_iter())
        .map(|(x, w)| {
            let h = psi.hessian(x).into_matrix() + Matrix::identity(d, d) * c;
            w * h.determinant().max(0.0).powf(1.0 / (d as f64 + 2.0))
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub eps1: f64,
    pub eps_inf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub function: TestFunction,
    pub c: f64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log ε∞` against `log n`; `None` if some
    /// error is exactly zero.
    pub slope_inf: Option<f64>,
    pub slope_1: Option<f64>,
    pub hessian_factor: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn log_slope(ns: &[usize], eps: &[f64]) -> Option<f64> {
    if eps.iter().any(|&e| e <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    Some(fit_slope(&lx, &ly))
}

/// Runs [`fit_from_below`] and [`measure_errors`] for each `n` and fits the
/// decay exponents.
pub fn scaling_experiment(
    psi: TestFunction,
    c: f64,
    domain: &Domain,
    n_list: &[usize],
    placement: Placement,
    grid_res: usize,
) -> Result<ScalingReport> {
    if n_list.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "scaling experiment needs at least 4 sizes, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("sizes must be strictly increasing".into()));
    }
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let approx = fit_from_below(psi, c, domain, n, placement)?;
            let e = measure_errors(psi, &approx, domain, grid_res)?;
            Ok(ScalingRow {
                n,
                eps1: e.eps1,
                eps_inf: e.eps_inf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inf: Vec<f64> = rows.iter().map(|r| r.eps_inf).collect();
    let one: Vec<f64> = rows.iter().map(|r| r.eps1).collect();
    Ok(ScalingReport {
        function: psi,
        c,
        slope_inf: log_slope(n_list, &inf),
        slope_1: log_slope(n_list, &one),
        hessian_factor: hessian_factor(psi, c, domain, grid_res),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_interval() -> Domain {
        Domain::cube(1, -1.0, 1.0).unwrap()
    }

    #[test]
    fn bregman_examples() {
        let x = [0.3, -1.2];
        let y = [1.0, 0.5];
        let d = bregman(TestFunction::HalfNormSquared, &x, &y).unwrap();
        let half_sq = 0.5 * ((0.3f64 - 1.0).powi(2) + (-1.2f64 - 0.5).powi(2));
        assert!((d - half_sq).abs() < 1e-15);
        assert_eq!(bregman(TestFunction::QuarticPlusQuadratic, &x, &x).unwrap(), 0.0);
        // Quartic part alone: D_{x⁴}(1; 0) = 1, and ¼x⁴ + ½x² gives ¼ + ½.
        assert_eq!(bregman(TestFunction::QuarticPlusQuadratic, &[1.0], &[0.0]).unwrap(), 0.75);
        assert!(bregman(TestFunction::HalfNormSquared, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn single_tangent_at_center() {
        let dom = unit_interval();
        let v = fit_from_below(TestFunction::HalfNormSquared, 0.0, &dom, 1, Placement::UniformGrid).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.eval_max(&[0.0]).unwrap().0, 0.0);
        let e = measure_errors(TestFunction::HalfNormSquared, &v, &dom, 201).unwrap();
        // max over the domain of D_g(x; 0) = ½.
        assert!((e.eps_inf - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parabola_closed_form() {
        let dom = unit_interval();
        let v = fit_from_below(TestFunction::HalfNormSquared, 0.0, &dom, 10, Placement::UniformGrid).unwrap();
        let e = measure_errors(TestFunction::HalfNormSquared, &v, &dom, 1001).unwrap();
        assert!((e.eps_inf - 0.005).abs() < 1e-12, "{}", e.eps_inf);
        assert!(e.eps1 <= e.eps_inf * dom.volume());
        // Integral of ½t² over [−Δ/2, Δ/2], ten cells.
        let exact = 10.0 * 0.2f64.powi(3) / 24.0;
        assert!((e.eps1 - exact).abs() < 1e-6, "{} vs {exact}", e.eps1);
    }

    #[test]
    fn tangents_touch_exactly_at_their_points() {
        let dom = unit_interval();
        let centers = place(TestFunction::HalfNormSquared, 0.0, &dom, 8, Placement::UniformGrid).unwrap();
        let v = fit_from_below(TestFunction::HalfNormSquared, 0.0, &dom, 8, Placement::UniformGrid).unwrap();
        for z in &centers {
            assert!((v.eval_max(z).unwrap().0 - TestFunction::HalfNormSquared.value(z)).abs() < 1e-15);
        }
        assert!(v.eval_max(&[0.0]).unwrap().0 < 0.0);
    }

    #[test]
    fn placement_capacity() {
        let dom = Domain::cube(2, -1.0, 1.0).unwrap();
        let err = fit_from_below(TestFunction::HalfNormSquared, 0.0, &dom, 10, Placement::UniformGrid).unwrap_err();
        assert!(matches!(err, Error::Placement { requested: 10, .. }));
        assert!(fit_from_below(TestFunction::HalfNormSquared, 0.0, &dom, 0, Placement::UniformGrid).is_err());
        let lloyd = Placement::BregmanLloyd {
            iterations: 20,
            witness_res: 41,
        };
        assert_eq!(fit_from_below(TestFunction::HalfNormSquared, 0.0, &dom, 10, lloyd).unwrap().len(), 10);
    }

    #[test]
    fn rejects_c_below_semiconvexity_constant() {
        let dom = unit_interval();
        assert!(fit_from_below(TestFunction::QuarticPlusQuadratic, -1.5, &dom, 4, Placement::UniformGrid).is_err());
        let shifted = Domain::cube(1, 1.0, 2.0).unwrap();
        assert_eq!(TestFunction::QuarticPlusQuadratic.c_min(&shifted), -4.0);
    }

    #[test]
    fn scaling_one_dimensional_parabola() {
        let r = scaling_experiment(
            TestFunction::HalfNormSquared,
            0.0,
            &unit_interval(),
            &[4, 8, 16, 32, 64],
            Placement::UniformGrid,
            2049,
        )
        .unwrap();
        for row in &r.rows {
            let closed = 0.5 / (row.n * row.n) as f64;
            assert!((row.eps_inf - closed).abs() < 1e-12);
        }
        assert!((r.slope_inf.unwrap() + 2.0).abs() < 1e-9);
        assert!((r.slope_1.unwrap() + 2.0).abs() < 0.05);
        // det(1)^(1/3) integrated over [−1, 1].
        assert!((r.hessian_factor - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_two_dimensional_uniform() {
        let dom = Domain::cube(2, -1.0, 1.0).unwrap();
        let r = scaling_experiment(TestFunction::HalfNormSquared, 0.0, &dom, &[16, 36, 64, 100, 144], Placement::UniformGrid, 241)
            .unwrap();
        for row in &r.rows {
            assert!((row.eps_inf - 1.0 / row.n as f64).abs() < 1e-12, "{row:?}");
        }
        assert!((r.slope_inf.unwrap() + 1.0).abs() < 0.2);
    }

    #[test]
    fn larger_c_gives_larger_error() {
        let dom = Domain::cube(2, -1.0, 1.0).unwrap();
        let psi = TestFunction::QuarticPlusQuadratic;
        let c0 = psi.c_min(&dom);
        let ns = [16, 36, 64, 100];
        let lo = scaling_experiment(psi, c0, &dom, &ns, Placement::UniformGrid, 121).unwrap();
        let hi = scaling_experiment(psi, c0 + 2.0, &dom, &ns, Placement::UniformGrid, 121).unwrap();
        assert!(lo.rows[3].eps_inf <= hi.rows[3].eps_inf);
        assert!(lo.hessian_factor < hi.hessian_factor);
    }

    #[test]
    fn lloyd_does_not_lose_to_its_start() {
        let dom = Domain::cube(2, -1.0, 1.0).unwrap();
        let psi = TestFunction::QuarticPlusQuadratic;
        let uniform = fit_from_below(psi, 0.0, &dom, 16, Placement::UniformGrid).unwrap();
        let lloyd = fit_from_below(
            psi,
            0.0,
            &dom,
            16,
            Placement::BregmanLloyd {
                iterations: 50,
                witness_res: 61,
            },
        )
        .unwrap();
        let eu = measure_errors(psi, &uniform, &dom, 61).unwrap();
        let el = measure_errors(psi, &lloyd, &dom, 61).unwrap();
        assert!(el.eps1 <= eu.eps1 * (1.0 + 1e-9), "{el:?} vs {eu:?}");
    }

    #[test]
    fn experiment_argument_checks() {
        let dom = unit_interval();
        let psi = TestFunction::HalfNormSquared;
        assert!(scaling_experiment(psi, 0.0, &dom, &[1, 2, 3], Placement::UniformGrid, 11).is_err());
        assert!(scaling_experiment(psi, 0.0, &dom, &[1, 3, 2, 4], Placement::UniformGrid, 11).is_err());
        let exact = scaling_experiment(psi, -1.0, &dom, &[1, 2, 3, 4], Placement::UniformGrid, 11).unwrap();
        assert!(exact.slope_inf.is_none());
    }

    fn arb_pair(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (prop::collection::vec(-2.0f64..2.0, d), prop::collection::vec(-2.0f64..2.0, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn bregman_nonnegative((x, y) in (1usize..4).prop_flat_map(arb_pair)) {
            for psi in TestFunction::ALL {
                let d = bregman(psi, &x, &y).unwrap();
                prop_assert!(d >= 0.0);
                let sep: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
                if sep > 1e-10 {
                    prop_assert!(d > 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fit_never_exceeds_target(
            n in 1usize..12,
            c_extra in 0.0f64..3.0,
            x in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            let dom = Domain::cube(2, -1.0, 1.0).unwrap();
            let lloyd = Placement::BregmanLloyd { iterations: 5, witness_res: 21 };
            for psi in TestFunction::ALL {
                let v = fit_from_below(psi, psi.c_min(&dom) + c_extra, &dom, n, lloyd).unwrap();
                prop_assert!(v.eval_max(&x).unwrap().0 <= psi.value(&x) + 1e-12);
            }
        }

        #[test]
        fn local_quadratic_sandwich((x, y) in arb_pair(3), r in 0.01f64..0.3) {
            // Pull x into a ball of radius r around y.
            let dir: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let norm = dir.iter().map(|t| t * t).sum::<f64>().sqrt().max(1e-12);
            let x: Vec<f64> = y.iter().zip(&dir).map(|(b, t)| b + r * t / norm).collect();
            let psi = TestFunction::QuarticPlusQuadratic;
            // Hessian entries 3t² + 1 on the segment, compared with those at y.
            let mut lambda = 1.0f64;
            for k in 0..3 {
                let (a, b) = (x[k].min(y[k]), x[k].max(y[k]));
                let t_min = if a <= 0.0 && 0.0 <= b { 0.0 } else { a.abs().min(b.abs()) };
                let t_max = a.abs().max(b.abs());
                let (h_lo, h_hi, h_y) = (3.0 * t_min * t_min + 1.0, 3.0 * t_max * t_max + 1.0, 3.0 * y[k] * y[k] + 1.0);
                lambda = lambda.max(h_hi / h_y).max(h_y / h_lo);
            }
            let h = psi.hessian(&y);
            let v = DVector::from_iterator(3, x.iter().zip(&y).map(|(a, b)| a - b));
            let quad = (v.transpose() * h.as_matrix() * &v)[(0, 0)];
            let d = bregman(psi, &x, &y).unwrap();
            prop_assert!(quad / (2.0 * lambda) <= d * (1.0 + 1e-12));
            prop_assert!(d <= lambda * quad / 2.0 * (1.0 + 1e-12));
        }
    }
}
