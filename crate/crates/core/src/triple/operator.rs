//! ℂ-linear maps on `M_n(ℂ)`: structured forms and their tabulated lowering.
//!
//! A tabulated operator stores the `n²×n²` coefficient matrix acting on
//! column-stacked matrices (basis order `E_11, E_21, …, E_nn`).

use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{same_dim, tp, TripleError};
use crate::linalg::ComplexMatrix;
use crate::scalar::Scalar;

/// Anything that maps matrices to matrices of a fixed dimension.
pub trait MatrixMap<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T>;
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorForm<T> {
    /// `x ↦ u x u*` with `u` unitary.
    Conjugation(ComplexMatrix<T>),
    /// `x ↦ a x − x a` with `a* = −a`.
    Commutator(ComplexMatrix<T>),
    Scaled(Complex<T>, Box<LinearOperator<T>>),
    Sum(Vec<LinearOperator<T>>),
    /// `x ↦ outer(inner(x))`.
    Compose {
        outer: Box<LinearOperator<T>>,
        inner: Box<LinearOperator<T>>,
    },
    /// `n²×n²` coefficients acting on column-stacked matrices.
    Tabulated(ComplexMatrix<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator<T> {
    dim: usize,
    form: OperatorForm<T>,
}

impl<T: Scalar> LinearOperator<T> {
    pub fn conjugation(u: ComplexMatrix<T>) -> Result<Self, TripleError> {
        let residual = (&(&u.adjoint() * &u) - &ComplexMatrix::identity(u.dim())).norm();
        if !(residual <= T::structural_tol()) {
            return Err(TripleError::NotUnitary {
                residual: residual.to_f64_lossy(),
            });
        }
        Ok(Self {
            dim: u.dim(),
            form: OperatorForm::Conjugation(u),
        })
    }

    pub fn commutator(a: ComplexMatrix<T>) -> Result<Self, TripleError> {
        let residual = (&a + &a.adjoint()).norm();
        if !(residual <= T::structural_tol()) {
            return Err(TripleError::NotSkewAdjoint {
                residual: residual.to_f64_lossy(),
            });
        }
        Ok(Self {
            dim: a.dim(),
            form: OperatorForm::Commutator(a),
        })
    }

    pub fn scaled(c: Complex<T>, inner: Self) -> Self {
        Self {
            dim: inner.dim,
            form: OperatorForm::Scaled(c, Box::new(inner)),
        }
    }

    pub fn sum(terms: Vec<Self>) -> Result<Self, TripleError> {
        let dim = terms.first().ok_or(TripleError::EmptySum)?.dim;
        if let Some(t) = terms.iter().find(|t| t.dim != dim) {
            return Err(TripleError::OperatorDimension {
                expected: dim,
                got: t.dim,
            });
        }
        Ok(Self {
            dim,
            form: OperatorForm::Sum(terms),
        })
    }

    pub fn compose(outer: Self, inner: Self) -> Result<Self, TripleError> {
        if outer.dim != inner.dim {
            return Err(TripleError::OperatorDimension {
                expected: outer.dim,
                got: inner.dim,
            });
        }
        Ok(Self {
            dim: outer.dim,
            form: OperatorForm::Compose {
                outer: Box::new(outer),
                inner: Box::new(inner),
            },
        })
    }

    /// Tabulated operator on `M_dim`; `coeffs` must be `dim²×dim²`.
    pub fn tabulated(dim: usize, coeffs: ComplexMatrix<T>) -> Result<Self, TripleError> {
        if coeffs.dim() != dim * dim {
            return Err(TripleError::OperatorDimension {
                expected: dim * dim,
                got: coeffs.dim(),
            });
        }
        Ok(Self {
            dim,
            form: OperatorForm::Tabulated(coeffs),
        })
    }

    /// Tabulates an arbitrary map by evaluating it on the canonical basis.
    /// The result is ℂ-linear by construction.
    pub fn tabulate_map(map: &impl MatrixMap<T>) -> Self {
        let n = map.dim();
        let columns: Vec<ComplexMatrix<T>> = basis(n).iter().map(|e| map.apply(e)).collect();
        Self::from_basis_images(n, &columns)
    }

    /// Tabulated operator whose `k`-th column is `vec(images[k])`.
    pub fn from_basis_images(dim: usize, images: &[ComplexMatrix<T>]) -> Self {
        let big = dim * dim;
        assert_eq!(images.len(), big, "need one image per basis element");
        let cols: Vec<Vec<Complex<T>>> = images.iter().map(|m| m.vec_column_stacked()).collect();
        let coeffs = ComplexMatrix::from_fn(big, |r, k| cols[k][r]);
        Self {
            dim,
            form: OperatorForm::Tabulated(coeffs),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            form: OperatorForm::Conjugation(ComplexMatrix::identity(dim)),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            form: OperatorForm::Tabulated(ComplexMatrix::zeros(dim * dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn form(&self) -> &OperatorForm<T> {
        &self.form
    }

    pub fn try_apply(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, TripleError> {
        if x.dim() != self.dim {
            return Err(TripleError::OperatorDimension {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(self.eval(x))
    }

    fn eval(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        match &self.form {
            OperatorForm::Conjugation(u) => &(u * x) * &u.adjoint(),
            OperatorForm::Commutator(a) => &(a * x) - &(x * a),
            OperatorForm::Scaled(c, inner) => inner.eval(x).scale(*c),
            OperatorForm::Sum(terms) => {
                let mut acc = ComplexMatrix::zeros(self.dim);
                for t in terms {
                    acc += &t.eval(x);
                }
                acc
            }
            OperatorForm::Compose { outer, inner } => outer.eval(&inner.eval(x)),
            OperatorForm::Tabulated(coeffs) => {
                let v = x.vec_column_stacked();
                let big = coeffs.dim();
                let out: Vec<Complex<T>> = (0..big)
                    .map(|r| {
                        coeffs.as_slice()[r * big..(r + 1) * big]
                            .iter()
                            .zip(&v)
                            .fold(Complex::new(T::zero(), T::zero()), |acc, (c, xv)| acc + c * xv)
                    })
                    .collect();
                ComplexMatrix::from_column_stacked(self.dim, &out)
            }
        }
    }

    /// Equivalent tabulated operator.
    pub fn to_tabulated(&self) -> Self {
        match &self.form {
            OperatorForm::Tabulated(_) => self.clone(),
            _ => Self::tabulate_map(self),
        }
    }

    /// The `n²×n²` coefficient matrix of the tabulated lowering.
    pub fn coefficients(&self) -> ComplexMatrix<T> {
        match self.to_tabulated().form {
            OperatorForm::Tabulated(c) => c,
            _ => unreachable!(),
        }
    }

    /// Largest entrywise difference between tabulated coefficients.
    pub fn max_coeff_diff(&self, other: &Self) -> T {
        self.coefficients().max_abs_diff(&other.coefficients())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("operator serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, TripleError> {
        serde_json::from_str(s).map_err(|e| TripleError::Encoding(e.to_string()))
    }
}

impl<T: Scalar> MatrixMap<T> for LinearOperator<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Panics on dimension mismatch; see [`LinearOperator::try_apply`].
    fn apply(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        self.try_apply(x).expect("operator applied to matrix of wrong dimension")
    }
}

/// Canonical basis `E_11, E_21, …, E_nn` in column-stacked order.
pub fn basis<T: Scalar>(dim: usize) -> Vec<ComplexMatrix<T>> {
    let mut out = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        for i in 0..dim {
            out.push(ComplexMatrix::unit(dim, i, j));
        }
    }
    out
}

/// `L(a, b) : x ↦ {a, b, x}` as a tabulated operator.
pub fn operator_l<T: Scalar>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<LinearOperator<T>, TripleError> {
    same_dim(&[a, b])?;
    let n = a.dim();
    let images: Vec<_> = basis(n).iter().map(|e| tp(a, b, e)).collect();
    Ok(LinearOperator::from_basis_images(n, &images))
}

// Wire format. Matrices are row-major lists of [re, im] pairs.

#[derive(Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
enum OperatorWire {
    Conjugation {
        dim: usize,
        u: Vec<[f64; 2]>,
    },
    Commutator {
        dim: usize,
        a: Vec<[f64; 2]>,
    },
    Scaled {
        dim: usize,
        c: [f64; 2],
        inner: Box<OperatorWire>,
    },
    Sum {
        dim: usize,
        terms: Vec<OperatorWire>,
    },
    Compose {
        dim: usize,
        outer: Box<OperatorWire>,
        inner: Box<OperatorWire>,
    },
    Tabulated {
        dim: usize,
        coeffs: Vec<[f64; 2]>,
    },
}

pub(crate) fn matrix_to_pairs<T: Scalar>(m: &ComplexMatrix<T>) -> Vec<[f64; 2]> {
    m.as_slice()
        .iter()
        .map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()])
        .collect()
}

pub(crate) fn pairs_to_matrix<T: Scalar>(dim: usize, pairs: &[[f64; 2]]) -> Result<ComplexMatrix<T>, TripleError> {
    let data = pairs
        .iter()
        .map(|&[re, im]| Complex::new(T::lit(re), T::lit(im)))
        .collect();
    Ok(ComplexMatrix::from_row_major(dim, data)?)
}

impl OperatorWire {
    fn from_operator<T: Scalar>(op: &LinearOperator<T>) -> Self {
        let dim = op.dim;
        match &op.form {
            OperatorForm::Conjugation(u) => Self::Conjugation {
                dim,
                u: matrix_to_pairs(u),
            },
            OperatorForm::Commutator(a) => Self::Commutator {
                dim,
                a: matrix_to_pairs(a),
            },
            OperatorForm::Scaled(c, inner) => Self::Scaled {
                dim,
                c: [c.re.to_f64_lossy(), c.im.to_f64_lossy()],
                inner: Box::new(Self::from_operator(inner)),
            },
            OperatorForm::Sum(terms) => Self::Sum {
                dim,
                terms: terms.iter().map(Self::from_operator).collect(),
            },
            OperatorForm::Compose { outer, inner } => Self::Compose {
                dim,
                outer: Box::new(Self::from_operator(outer)),
                inner: Box::new(Self::from_operator(inner)),
            },
            OperatorForm::Tabulated(coeffs) => Self::Tabulated {
                dim,
                coeffs: matrix_to_pairs(coeffs),
            },
        }
    }

    fn into_operator<T: Scalar>(self) -> Result<LinearOperator<T>, TripleError> {
        let check = |declared: usize, op: LinearOperator<T>| {
            if op.dim == declared {
                Ok(op)
            } else {
                Err(TripleError::OperatorDimension {
                    expected: declared,
                    got: op.dim,
                })
            }
        };
        match self {
            Self::Conjugation { dim, u } => LinearOperator::conjugation(pairs_to_matrix(dim, &u)?),
            Self::Commutator { dim, a } => LinearOperator::commutator(pairs_to_matrix(dim, &a)?),
            Self::Scaled { dim, c, inner } => {
                let inner = inner.into_operator()?;
                check(dim, LinearOperator::scaled(Complex::new(T::lit(c[0]), T::lit(c[1])), inner))
            }
            Self::Sum { dim, terms } => {
                let terms = terms.into_iter().map(Self::into_operator).collect::<Result<_, _>>()?;
                check(dim, LinearOperator::sum(terms)?)
            }
            Self::Compose { dim, outer, inner } => {
                check(dim, LinearOperator::compose(outer.into_operator()?, inner.into_operator()?)?)
            }
            Self::Tabulated { dim, coeffs } => LinearOperator::tabulated(dim, pairs_to_matrix(dim * dim, &coeffs)?),
        }
    }
}

impl<T: Scalar> Serialize for LinearOperator<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        OperatorWire::from_operator(self).serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for LinearOperator<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        OperatorWire::deserialize(deserializer)?
            .into_operator()
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_matrices, random_matrix, random_skew_adjoint, random_unitary, rng_from_seed};
    use crate::scalar::cplx;
    use proptest::prelude::*;

    type M = ComplexMatrix<f64>;
    type Op = LinearOperator<f64>;

    fn structured_zoo(seed: u64, n: usize) -> Vec<Op> {
        let mut rng = rng_from_seed(seed);
        let u = Op::conjugation(random_unitary(&mut rng, n)).unwrap();
        let d = Op::commutator(random_skew_adjoint(&mut rng, n, 1.0)).unwrap();
        let b: M = random_matrix(&mut rng, n);
        let c: M = random_matrix(&mut rng, n);
        let l = operator_l(&b, &c).unwrap();
        vec![
            u.clone(),
            d.clone(),
            Op::scaled(cplx(0.3, -1.2), d.clone()),
            Op::sum(vec![u.clone(), d.clone(), l.clone()]).unwrap(),
            Op::compose(u, d).unwrap(),
            l,
        ]
    }

    #[test]
    fn structured_forms_agree_with_tabulated_lowering() {
        for n in 1..=3 {
            for op in structured_zoo(n as u64, n) {
                let tab = op.to_tabulated();
                for e in basis::<f64>(n) {
                    assert!(op.apply(&e).max_abs_diff(&tab.apply(&e)) <= 1e-10);
                }
                for x in random_matrices::<f64>(77, n, 5) {
                    assert!(op.apply(&x).approx_eq(&tab.apply(&x), 1e-13));
                }
            }
        }
    }

    #[test]
    fn operator_l_examples() {
        let i2 = M::identity(2);
        let l_ii = operator_l(&i2, &i2).unwrap();
        assert!(l_ii.max_coeff_diff(&Op::identity(2)) < 1e-15);
        let l_0b = operator_l(&M::zeros(2), &i2).unwrap();
        assert!(l_0b.coefficients().is_zero());
        let e11 = M::unit(2, 0, 0);
        let e12 = M::unit(2, 0, 1);
        let got = operator_l(&e11, &e11).unwrap().apply(&e12);
        assert_eq!(got, e12.scale_real(0.5));
        assert!(operator_l(&e11, &M::identity(3)).is_err());
    }

    #[test]
    fn structural_preconditions_are_enforced() {
        let not_unitary = M::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(Op::conjugation(not_unitary), Err(TripleError::NotUnitary { .. })));
        let hermitian = M::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        assert!(matches!(Op::commutator(hermitian), Err(TripleError::NotSkewAdjoint { .. })));
        assert!(matches!(Op::sum(vec![]), Err(TripleError::EmptySum)));
        assert!(Op::compose(Op::identity(2), Op::identity(3)).is_err());
        assert!(Op::tabulated(2, M::zeros(3)).is_err());
        assert!(Op::identity(2).try_apply(&M::identity(3)).is_err());
    }

    #[test]
    fn tabulated_json_layout() {
        let op = Op::identity(1).to_tabulated();
        let v: serde_json::Value = serde_json::from_str(&op.to_json()).unwrap();
        assert_eq!(v["form"], "tabulated");
        assert_eq!(v["dim"], 1);
        assert_eq!(v["coeffs"], serde_json::json!([[1.0, 0.0]]));
        // row-major n²×n²: entry (r, k) at index r * n² + k
        let e21 = M::unit(2, 1, 0);
        let e12 = M::unit(2, 0, 1);
        let swap = Op::conjugation(&e12 + &e21).unwrap().to_tabulated();
        let v: serde_json::Value = serde_json::from_str(&swap.to_json()).unwrap();
        let coeffs = v["coeffs"].as_array().unwrap();
        assert_eq!(coeffs.len(), 16);
        // E_11 (index 0) maps to E_22 (index 3): coefficient (3, 0)
        assert_eq!(coeffs[3 * 4], serde_json::json!([1.0, 0.0]));
    }

    #[test]
    fn every_form_round_trips_bit_exactly() {
        for op in structured_zoo(5, 3) {
            let json = op.to_json();
            let back = Op::from_json(&json).unwrap();
            assert_eq!(back, op);
            assert_eq!(back.to_json(), json);
        }
    }

    #[test]
    fn malformed_json_is_rejected() {
        assert!(Op::from_json(r#"{"form":"tabulated","dim":2,"coeffs":[[1.0,0.0]]}"#).is_err());
        assert!(Op::from_json(r#"{"form":"commutator","dim":1,"a":[[1.0,0.0]]}"#).is_err());
        assert!(Op::from_json(r#"{"form":"bogus","dim":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn tabulated_round_trip_is_bit_exact(entries in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 16)) {
            let coeffs = M::from_row_major(4, entries.iter().map(|&(r, i)| cplx(r, i)).collect()).unwrap();
            let op = Op::tabulated(2, coeffs).unwrap();
            let back = Op::from_json(&op.to_json()).unwrap();
            prop_assert_eq!(back, op);
        }

        #[test]
        fn operators_are_complex_linear(seed in 0u64..500, re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let mut rng = rng_from_seed(seed);
            let x: M = random_matrix(&mut rng, 3);
            let y: M = random_matrix(&mut rng, 3);
            let lambda = cplx(re, im);
            for op in structured_zoo(seed, 3) {
                let lhs = op.apply(&(&x.scale(lambda) + &y));
                let rhs = &op.apply(&x).scale(lambda) + &op.apply(&y);
                let scale = 1f64.max(lambda.norm() * x.norm() + y.norm());
                prop_assert!(lhs.distance(&rhs) <= 1e-10 * scale);
            }
        }
    }
}
