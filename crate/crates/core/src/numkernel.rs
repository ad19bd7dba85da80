//! Dense small-matrix kernels.
//!
//! Every matrix handled by this crate is at most `2(d+1)` square with
//! `d <= 6`, so everything here is plain dense arithmetic on
//! [`nalgebra::DMatrix`] with no blocking.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Reciprocal condition number below which a linear solve is rejected.
pub const RCOND_SINGULAR: f64 = 1e-12;

/// Relative asymmetry tolerated by [`SymMatrix::new`].
const SYMMETRY_TOL: f64 = 1e-12;

/// A real symmetric matrix. Storage is always exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Validates near-symmetry (`max|M_ij - M_ji| <= 1e-12 (1 + max|M_ij|)`)
    /// and stores the symmetric part.
    pub fn new(m: Matrix) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m, "symmetric matrix")?;
        let scale = 1.0 + m.amax();
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(Self::symmetrize(m))
    }

    /// Stores `(M + M^T) / 2` without any tolerance check.
    pub fn symmetrize(m: Matrix) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(Matrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(Matrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    /// Builds from row-major entries; the input must be symmetric within
    /// tolerance.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::dim("symmetric matrix entries", dim * dim, entries.len()));
        }
        Self::new(Matrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Frobenius inner product `Tr(self * other)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Eigenvalues in ascending order together with the matching
    /// orthonormal eigenvectors (as columns).
    pub fn eigen(&self) -> (Vec<f64>, Matrix) {
        let eig = SymmetricEigen::new(self.0.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen().0.last().copied().unwrap_or(0.0)
    }

    /// Rebuilds `Q f(Λ) Q^T` from the eigendecomposition.
    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let (values, q) = self.eigen();
        let mut scaled = q.clone();
        for (c, &v) in values.iter().enumerate() {
            let fv = f(v);
            scaled.column_mut(c).scale_mut(fv);
        }
        scaled * q.transpose()
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl TryFrom<Matrix> for SymMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        SymMatrix::new(m)
    }
}

impl From<SymMatrix> for Matrix {
    fn from(s: SymMatrix) -> Matrix {
        s.0
    }
}

fn check_square(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn check_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Padé(13) numerator coefficients b_0..b_13 (Higham 2005).
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which unscaled Padé(13) is accurate to unit roundoff.
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    check_square(m)?;
    check_finite(m, "expm input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let norm = norm1(m);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m * 2f64.powi(-squarings);

    let ident = Matrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or(Error::Singular { rcond: 0.0 })?;

    for _ in 0..squarings {
        r = &r * &r;
    }
    check_finite(&r, "expm result")?;
    Ok(r)
}

/// Result of a checked linear solve.
#[derive(Debug, Clone)]
pub struct Solved {
    pub x: Matrix,
    /// Reciprocal 1-norm condition number of the system matrix.
    pub rcond: f64,
}

/// Reciprocal 1-norm condition number `1 / (|M|_1 |M^-1|_1)`, computed
/// exactly (the matrices here are tiny). Zero when `M` is singular.
pub fn rcond(m: &Matrix) -> f64 {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return 0.0;
    }
    let norm = norm1(m);
    if norm == 0.0 || !norm.is_finite() {
        return 0.0;
    }
    match m.clone().lu().try_inverse() {
        Some(inv) => {
            let inv_norm = norm1(&inv);
            if inv_norm.is_finite() && inv_norm > 0.0 {
                1.0 / (norm * inv_norm)
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

/// Solves `M X = B` with partial pivoting, rejecting systems whose
/// reciprocal condition number is below [`RCOND_SINGULAR`].
pub fn solve(m: &Matrix, b: &Matrix) -> Result<Solved> {
    check_square(m)?;
    if b.nrows() != m.nrows() {
        return Err(Error::dim("solve right-hand side rows", m.nrows(), b.nrows()));
    }
    check_finite(m, "solve matrix")?;
    check_finite(b, "solve right-hand side")?;
    let rc = rcond(m);
    if rc < RCOND_SINGULAR {
        return Err(Error::Singular { rcond: rc });
    }
    let x = m.clone().lu().solve(b).ok_or(Error::Singular { rcond: rc })?;
    Ok(Solved { x, rcond: rc })
}

/// Symmetric square root of the PSD part of `S`: returns `L` with
/// `L L^T = S_+` where negative eigenvalues are clipped to zero.
pub fn psd_factor(s: &SymMatrix) -> Matrix {
    SymMatrix::symmetrize(s.spectral_map(|v| v.max(0.0).sqrt())).into_matrix()
}

/// Nearest PSD matrix in Frobenius norm.
pub fn project_psd(s: &SymMatrix) -> SymMatrix {
    SymMatrix::symmetrize(s.spectral_map(|v| v.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        (a - b).amax()
    }

    /// Oracle: exp of a symmetric matrix from its eigendecomposition.
    fn expm_by_eigen(s: &SymMatrix) -> Matrix {
        s.spectral_map(f64::exp)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(e, Matrix::identity(2, 2));
    }

    #[test]
    fn expm_nilpotent() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&m).unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(max_abs_diff(&e, &expected) < 1e-15);
    }

    #[test]
    fn expm_diagonal() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let e = expm(&m).unwrap();
        let oracle = expm_by_eigen(&SymMatrix::new(m.clone()).unwrap());
        assert_relative_eq!(e[(0, 0)], std::f64::consts::E, max_relative = 1e-14);
        assert_relative_eq!(e[(1, 1)], 7.38905609893065, max_relative = 1e-14);
        assert!(max_abs_diff(&e, &oracle) <= 1e-10 * oracle.amax());
    }

    #[test]
    fn expm_rejects_non_square() {
        assert!(matches!(
            expm(&Matrix::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let s = SymMatrix::from_row_slice(2, &[-20.0, 3.0, 3.0, 5.0]).unwrap();
        let e = expm(s.as_matrix()).unwrap();
        let oracle = expm_by_eigen(&s);
        assert!(max_abs_diff(&e, &oracle) <= 1e-10 * oracle.amax());
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let s = solve(&Matrix::identity(2, 2), &b).unwrap();
        assert_eq!(s.x, b);
        assert_eq!(s.rcond, 1.0);

        let d = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let s = solve(&d, &Matrix::identity(2, 2)).unwrap();
        assert_eq!(s.x, Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]));
    }

    #[test]
    fn solve_two_by_two() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let b = Matrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let s = solve(&m, &b).unwrap();
        assert_relative_eq!(s.x[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(s.x[(1, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert!((&m * &s.x - &b).amax() <= 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = solve(&m, &Matrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::Singular { rcond } if rcond < RCOND_SINGULAR));
    }

    #[test]
    fn solve_rejects_row_mismatch() {
        let err = solve(&Matrix::identity(2, 2), &Matrix::zeros(3, 1)).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn psd_factor_examples() {
        assert!(max_abs_diff(&psd_factor(&SymMatrix::identity(2)), &Matrix::identity(2, 2)) < 1e-15);

        let l = psd_factor(&SymMatrix::from_diagonal(&[4.0, 0.0]));
        assert!(max_abs_diff(&l, &Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])) < 1e-15);

        let s = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let l = psd_factor(&s);
        assert!(max_abs_diff(&(&l * l.transpose()), s.as_matrix()) <= 1e-12);
    }

    #[test]
    fn project_psd_examples() {
        let i = SymMatrix::identity(3);
        assert!(max_abs_diff(project_psd(&i).as_matrix(), i.as_matrix()) < 1e-15);

        let p = project_psd(&SymMatrix::from_diagonal(&[1.0, -1.0]));
        assert!(max_abs_diff(p.as_matrix(), SymMatrix::from_diagonal(&[1.0, 0.0]).as_matrix()) < 1e-15);

        let p = project_psd(&SymMatrix::from_row_slice(2, &[0.0, 1.0, 1.0, 0.0]).unwrap());
        let expected = Matrix::from_element(2, 2, 0.5);
        assert!(max_abs_diff(p.as_matrix(), &expected) < 1e-15);
    }

    #[test]
    fn symmetric_construction_enforces_tolerance() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-14, 1.0]);
        let s = SymMatrix::new(m).unwrap();
        assert_eq!(s[(0, 1)], s[(1, 0)]);
        let bad = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 1.0]);
        assert!(matches!(SymMatrix::new(bad), Err(Error::NotSymmetric { .. })));
        let nan = Matrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(SymMatrix::new(nan), Err(Error::NonFinite(_))));
    }

    fn square(max_n: usize, bound: f64) -> impl Strategy<Value = Matrix> {
        (1..=max_n).prop_flat_map(move |n| {
            prop::collection::vec(-bound..bound, n * n)
                .prop_map(move |v| Matrix::from_row_slice(n, n, &v))
        })
    }

    /// Scales a matrix so its 1-norm is at most `limit`.
    fn cap_norm(m: Matrix, limit: f64) -> Matrix {
        let n = norm1(&m);
        if n > limit {
            m * (limit / n)
        } else {
            m
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn expm_inverse_pair(m in square(8, 4.0)) {
            let m = cap_norm(m, 10.0);
            let prod = expm(&m).unwrap() * expm(&(-&m)).unwrap();
            let n = m.nrows();
            prop_assert!(max_abs_diff(&prod, &Matrix::identity(n, n)) <= 1e-9);
        }

        #[test]
        fn expm_semigroup(m in square(8, 2.0), s in 0.0f64..1.0, t in 0.0f64..1.0) {
            let m = cap_norm(m, 5.0);
            let lhs = expm(&(&m * (s + t))).unwrap();
            let rhs = expm(&(&m * s)).unwrap() * expm(&(&m * t)).unwrap();
            prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-9 * (1.0 + lhs.amax()));
        }

        #[test]
        fn expm_matches_eigen_on_symmetric(m in square(8, 3.0)) {
            let s = SymMatrix::symmetrize(m);
            let e = expm(s.as_matrix()).unwrap();
            let oracle = expm_by_eigen(&s);
            prop_assert!(max_abs_diff(&e, &oracle) <= 1e-10 * oracle.amax().max(1.0));
        }

        #[test]
        fn solve_residual_is_small(m in square(8, 5.0), seed in 0u64..1000) {
            let n = m.nrows();
            let b = Matrix::from_fn(n, 2, |r, c| ((r * 7 + c * 3) as f64 + seed as f64).sin());
            if rcond(&m) >= 1e-8 {
                let x = solve(&m, &b).unwrap().x;
                let res = (&m * &x - &b).amax();
                prop_assert!(res <= 1e-10 * b.amax().max(1e-300));
            }
        }

        #[test]
        fn project_psd_idempotent_and_contractive(a in square(6, 5.0), b in square(6, 5.0)) {
            let n = a.nrows().min(b.nrows());
            let a = SymMatrix::symmetrize(a.view((0, 0), (n, n)).into_owned());
            let b = SymMatrix::symmetrize(b.view((0, 0), (n, n)).into_owned());
            let pa = project_psd(&a);
            let ppa = project_psd(&pa);
            prop_assert!(max_abs_diff(pa.as_matrix(), ppa.as_matrix()) <= 1e-10 * (1.0 + pa.as_matrix().amax()));
            prop_assert!(pa.min_eigenvalue() >= -1e-10);
            let pb = project_psd(&b);
            let before = (a.as_matrix() - b.as_matrix()).norm();
            let after = (pa.as_matrix() - pb.as_matrix()).norm();
            prop_assert!(after <= before + 1e-10);
        }
    }
}
