//! Quadratic forms `½xᵀAx + bᵀx + ½c` and their max-plus sums.
//!
//! Note the constant convention: the stored scalar `c` enters the value as
//! `c / 2`, so that the homogenized matrix is `½[[c, bᵀ], [b, A]]`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numkernel::{Matrix, SymMatrix};

/// Where a propagated form came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormTag {
    /// Index of the parent form in the previous approximation.
    pub parent: usize,
    /// Mode sequence applied so far, oldest first.
    pub modes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub a: SymMatrix,
    pub b: DVector<f64>,
    pub c: f64,
    pub tag: Option<FormTag>,
}

impl QuadraticForm {
    pub fn new(a: SymMatrix, b: DVector<f64>, c: f64) -> Result<Self> {
        if b.len() != a.dim() {
            return Err(Error::dim("quadratic form linear term", a.dim(), b.len()));
        }
        if !c.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic form coefficients"));
        }
        Ok(QuadraticForm {
            a,
            b,
            c,
            tag: None,
        })
    }

    /// The identically zero form on `R^dim`.
    pub fn zero(dim: usize) -> Self {
        QuadraticForm {
            a: SymMatrix::zeros(dim),
            b: DVector::zeros(dim),
            c: 0.0,
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: FormTag) -> Self {
        self.tag = Some(tag);
        self
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim("point", self.dim(), x.len()));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let a = self.a.as_matrix();
        let n = x.len();
        let mut quad = 0.0;
        let mut lin = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += a[(i, j)] * x[j];
            }
            quad += x[i] * row;
            lin += self.b[i] * x[i];
        }
        0.5 * quad + lin + 0.5 * self.c
    }

    /// `Ax + b`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let a = self.a.as_matrix();
        Ok((0..x.len())
            .map(|i| (0..x.len()).map(|j| a[(i, j)] * x[j]).sum::<f64>() + self.b[i])
            .collect())
    }

    pub fn homogenize(&self) -> HomogenizedForm {
        let d = self.dim();
        let mut q = Matrix::zeros(d + 1, d + 1);
        q[(0, 0)] = 0.5 * self.c;
        for i in 0..d {
            q[(0, i + 1)] = 0.5 * self.b[i];
            q[(i + 1, 0)] = 0.5 * self.b[i];
            for j in 0..d {
                q[(i + 1, j + 1)] = 0.5 * self.a[(i, j)];
            }
        }
        HomogenizedForm {
            q: SymMatrix::symmetrize(q),
        }
    }

    /// Scales every coefficient by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        QuadraticForm {
            a: SymMatrix::symmetrize(self.a.as_matrix() * factor),
            b: &self.b * factor,
            c: self.c * factor,
            tag: self.tag.clone(),
        }
    }
}

/// `Q = ½[[c, bᵀ], [b, A]]`, so that `(1, x)ᵀ Q (1, x) = φ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedForm {
    pub q: SymMatrix,
}

impl HomogenizedForm {
    pub fn dim(&self) -> usize {
        self.q.dim() - 1
    }

    /// `yᵀ Q y` for a homogeneous vector `y` of length `d + 1`.
    pub fn quad(&self, y: &[f64]) -> f64 {
        let q = self.q.as_matrix();
        let n = y.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += y[i] * q[(i, j)] * y[j];
            }
        }
        acc
    }

    pub fn dehomogenize(&self) -> QuadraticForm {
        let d = self.dim();
        let q = self.q.as_matrix();
        let a = Matrix::from_fn(d, d, |i, j| 2.0 * q[(i + 1, j + 1)]);
        let b = DVector::from_fn(d, |i, _| 2.0 * q[(i + 1, 0)]);
        QuadraticForm {
            a: SymMatrix::symmetrize(a),
            b,
            c: 2.0 * q[(0, 0)],
            tag: None,
        }
    }

    /// `Q_self - Q_other`.
    pub fn difference(&self, other: &HomogenizedForm) -> HomogenizedForm {
        HomogenizedForm {
            q: SymMatrix::symmetrize(self.q.as_matrix() - other.q.as_matrix()),
        }
    }
}

/// A nonempty max-plus sum of quadratic forms on a common `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPlusApprox {
    forms: Vec<QuadraticForm>,
    dim: usize,
}

impl MaxPlusApprox {
    pub fn new(forms: Vec<QuadraticForm>) -> Result<Self> {
        let dim = forms
            .first()
            .map(QuadraticForm::dim)
            .ok_or_else(|| Error::InvalidArgument("max-plus sum needs at least one form".into()))?;
        if let Some(bad) = forms.iter().find(|f| f.dim() != dim) {
            return Err(Error::dim("max-plus member", dim, bad.dim()));
        }
        Ok(MaxPlusApprox { forms, dim })
    }

    pub fn single(form: QuadraticForm) -> Self {
        let dim = form.dim();
        MaxPlusApprox {
            forms: vec![form],
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn forms(&self) -> &[QuadraticForm] {
        &self.forms
    }

    pub fn into_forms(self) -> Vec<QuadraticForm> {
        self.forms
    }

    /// Keeps the forms at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let forms = indices
            .iter()
            .map(|&i| {
                self.forms.get(i).cloned().ok_or(Error::IndexOutOfRange {
                    index: i,
                    len: self.forms.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MaxPlusApprox::new(forms)
    }

    /// Pointwise maximum and the lowest index attaining it.
    pub fn eval_max(&self, x: &[f64]) -> Result<(f64, usize)> {
        if x.len() != self.dim {
            return Err(Error::dim("point", self.dim, x.len()));
        }
        Ok(self.eval_max_unchecked(x))
    }

    pub(crate) fn eval_max_unchecked(&self, x: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, f) in self.forms.iter().enumerate() {
            let v = f.eval_unchecked(x);
            if v > best.0 {
                best = (v, j);
            }
        }
        best
    }

    /// Gradient of the active (lowest-index maximizing) form at `x`.
    pub fn active_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, j) = self.eval_max(x)?;
        self.forms[j].gradient(x)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn form(a: &[f64], b: &[f64], c: f64) -> QuadraticForm {
        let d = b.len();
        QuadraticForm::new(
            SymMatrix::from_row_slice(d, a).unwrap(),
            DVector::from_column_slice(b),
            c,
        )
        .unwrap()
    }

    /// The 1-d pair {0, x}.
    fn zero_and_identity_line() -> MaxPlusApprox {
        MaxPlusApprox::new(vec![form(&[0.0], &[0.0], 0.0), form(&[0.0], &[1.0], 0.0)]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let q = form(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 0.0);
        assert_eq!(q.eval(&[1.0, 1.0]).unwrap(), 1.0);
        let q = form(&[0.0, 0.0, 0.0, 0.0], &[1.0, 0.0], 2.0);
        assert_eq!(q.eval(&[3.0, 5.0]).unwrap(), 4.0);
        let q = form(&[2.0, 1.0, 1.0, -3.0], &[0.5, 7.0], 9.0);
        assert_eq!(q.eval(&[0.0, 0.0]).unwrap(), 4.5);
        assert!(matches!(q.eval(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn homogenize_examples() {
        let h = form(&[0.0; 4], &[0.0, 0.0], 2.0).homogenize();
        let mut expected = Matrix::zeros(3, 3);
        expected[(0, 0)] = 1.0;
        assert_eq!(h.q.as_matrix(), &expected);

        let q = form(&[2.0], &[4.0], 6.0);
        let h = q.homogenize();
        assert_eq!(h.q.as_matrix(), &Matrix::from_row_slice(2, 2, &[3.0, 2.0, 2.0, 1.0]));
        assert_eq!(h.quad(&[1.0, 1.0]), 8.0);
        assert_eq!(q.eval(&[1.0]).unwrap(), 8.0);
    }

    #[test]
    fn eval_max_examples() {
        let single = MaxPlusApprox::single(form(&[1.0], &[0.0], 0.0));
        assert_eq!(single.eval_max(&[2.0]).unwrap(), (2.0, 0));

        let v = zero_and_identity_line();
        assert_eq!(v.eval_max(&[2.0]).unwrap(), (2.0, 1));
        assert_eq!(v.eval_max(&[0.0]).unwrap(), (0.0, 0));
    }

    #[test]
    fn active_gradient_examples() {
        let single = MaxPlusApprox::single(form(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 0.0));
        assert_eq!(single.active_gradient(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);

        let v = zero_and_identity_line();
        assert_eq!(v.active_gradient(&[2.0]).unwrap(), vec![1.0]);
        assert_eq!(v.active_gradient(&[-1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn construction_errors() {
        assert!(MaxPlusApprox::new(vec![]).is_err());
        let mixed = vec![QuadraticForm::zero(1), QuadraticForm::zero(2)];
        assert!(matches!(MaxPlusApprox::new(mixed), Err(Error::Dimension { .. })));
        assert!(QuadraticForm::new(SymMatrix::zeros(2), DVector::zeros(3), 0.0).is_err());
        let v = zero_and_identity_line();
        assert!(matches!(v.subset(&[5]), Err(Error::IndexOutOfRange { index: 5, len: 2 })));
    }

    pub(crate) fn arb_form(d: usize) -> impl Strategy<Value = QuadraticForm> {
        (
            prop::collection::vec(-3.0f64..3.0, d * d),
            prop::collection::vec(-3.0f64..3.0, d),
            -3.0f64..3.0,
        )
            .prop_map(move |(a, b, c)| {
                QuadraticForm::new(
                    SymMatrix::symmetrize(Matrix::from_row_slice(d, d, &a)),
                    DVector::from_vec(b),
                    c,
                )
                .unwrap()
            })
    }

    fn arb_approx_and_point() -> impl Strategy<Value = (MaxPlusApprox, Vec<f64>, Vec<bool>)> {
        (1usize..4).prop_flat_map(|d| {
            (
                prop::collection::vec(arb_form(d), 1..8),
                prop::collection::vec(-5.0f64..5.0, d),
                prop::collection::vec(any::<bool>(), 8),
            )
                .prop_map(|(forms, x, mask)| (MaxPlusApprox::new(forms).unwrap(), x, mask))
        })
    }

    proptest! {
        #[test]
        fn max_dominates_members((v, x, _) in arb_approx_and_point()) {
            let (m, j) = v.eval_max(&x).unwrap();
            for f in v.forms() {
                prop_assert!(m >= f.eval(&x).unwrap());
            }
            prop_assert_eq!(m, v.forms()[j].eval(&x).unwrap());
        }

        #[test]
        fn removing_forms_never_increases((v, x, mask) in arb_approx_and_point()) {
            let keep: Vec<usize> = (0..v.len()).filter(|&i| mask[i]).collect();
            if !keep.is_empty() {
                let sub = v.subset(&keep).unwrap();
                prop_assert!(sub.eval_max(&x).unwrap().0 <= v.eval_max(&x).unwrap().0);
            }
        }

        #[test]
        fn homogenize_round_trip(q in (1usize..5).prop_flat_map(arb_form), x in prop::collection::vec(-4.0f64..4.0, 5)) {
            let h = q.homogenize();
            let back = h.dehomogenize();
            prop_assert_eq!(&back.a, &q.a);
            prop_assert_eq!(&back.b, &q.b);
            prop_assert_eq!(back.c, q.c);
            let x = &x[..q.dim()];
            let mut y = vec![1.0];
            y.extend_from_slice(x);
            let lhs = h.quad(&y);
            let rhs = q.eval(x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
