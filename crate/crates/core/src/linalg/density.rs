use num_complex::Complex64;

use super::caps::{dense_max_qubits, diagonal_max_qubits, PRODUCT_MAX_QUBITS};
use super::matrix::{kron_vec, qubits_for_dim, tensor, ComplexMatrix};
use super::spectrum::hermitian_eigen;
use super::sum::neumaier_sum;
use crate::error::{Error, Result};

/// Default absolute tolerance for density-operator checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An n-qubit density operator.
///
/// Basis index `i` carries qubit 1 in its most significant bit, so tracing
/// out the last qubit sums adjacent index pairs `(2i, 2i+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    qubits: usize,
    repr: Repr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    Dense(ComplexMatrix),
    /// Probability vector over the computational basis.
    Diagonal(Vec<f64>),
    /// Tensor product of non-product factors, first factor on the earliest qubits.
    Product(Vec<DensityOperator>),
}

impl DensityOperator {
    /// Diagonal operator from a probability vector. Negatives down to
    /// `-DEFAULT_TOL` are clipped to zero.
    pub fn diagonal(probs: Vec<f64>) -> Result<Self> {
        let qubits = qubits_for_dim(probs.len())?;
        if qubits > diagonal_max_qubits() {
            return Err(Error::CapExceeded {
                qubits,
                cap: diagonal_max_qubits(),
                repr: "diagonal",
            });
        }
        let mut probs = probs;
        for (index, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -DEFAULT_TOL {
                return Err(Error::NegativeProbability { index, value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::WrongTrace { trace: total });
        }
        Ok(Self {
            qubits,
            repr: Repr::Diagonal(probs),
        })
    }

    /// Wraps a matrix that is already known to be a valid density operator.
    pub(crate) fn dense_unchecked(qubits: usize, matrix: ComplexMatrix) -> Self {
        Self {
            qubits,
            repr: Repr::Dense(matrix),
        }
    }

    pub(crate) fn diagonal_unchecked(qubits: usize, probs: Vec<f64>) -> Self {
        Self {
            qubits,
            repr: Repr::Diagonal(probs),
        }
    }

    /// The maximally mixed operator 2^{-n} I_n in diagonal form.
    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        check_diag_cap(qubits)?;
        let dim = 1usize << qubits;
        Ok(Self::diagonal_unchecked(qubits, vec![1.0 / dim as f64; dim]))
    }

    /// |σ⟩⟨σ| for the basis string whose index is `index`.
    pub fn basis_state(qubits: usize, index: usize) -> Result<Self> {
        check_diag_cap(qubits)?;
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::OutOfRange {
                value: index,
                min: 0,
                max: dim - 1,
            });
        }
        let mut probs = vec![0.0; dim];
        probs[index] = 1.0;
        Ok(Self::diagonal_unchecked(qubits, probs))
    }

    /// Tensor product kept in factored form. Nested products are flattened.
    pub fn product(factors: Vec<DensityOperator>) -> Result<Self> {
        let mut flat = Vec::with_capacity(factors.len());
        for f in factors {
            match f.repr {
                Repr::Product(inner) => flat.extend(inner),
                _ => flat.push(f),
            }
        }
        match flat.len() {
            0 => Err(Error::Invalid("empty tensor product".into())),
            1 => Ok(flat.pop().expect("one factor")),
            _ => {
                let qubits = flat.iter().map(|f| f.qubits).sum();
                if qubits > PRODUCT_MAX_QUBITS {
                    return Err(Error::CapExceeded {
                        qubits,
                        cap: PRODUCT_MAX_QUBITS,
                        repr: "product",
                    });
                }
                Ok(Self {
                    qubits,
                    repr: Repr::Product(flat),
                })
            }
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.qubits
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    /// True when the operator is diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        match &self.repr {
            Repr::Dense(_) => false,
            Repr::Diagonal(_) => true,
            Repr::Product(fs) => fs.iter().all(|f| f.is_diagonal()),
        }
    }

    /// Factors of a product form, or the operator itself.
    pub fn factors(&self) -> Vec<&DensityOperator> {
        match &self.repr {
            Repr::Product(fs) => fs.iter().collect(),
            _ => vec![self],
        }
    }

    /// Collapses a product form into a single diagonal or dense operator.
    pub fn materialize(&self) -> Result<DensityOperator> {
        let Repr::Product(factors) = &self.repr else {
            return Ok(self.clone());
        };
        if self.is_diagonal() {
            check_diag_cap(self.qubits)?;
            let mut probs = vec![1.0];
            for f in factors {
                probs = kron_vec(&probs, &f.diagonal_probs()?);
            }
            Ok(Self::diagonal_unchecked(self.qubits, probs))
        } else {
            check_dense_cap(self.qubits)?;
            let mut m = ComplexMatrix::identity(1);
            for f in factors {
                m = tensor(&m, &f.to_matrix()?)?;
            }
            Ok(Self::dense_unchecked(self.qubits, m))
        }
    }

    /// Probability vector of a diagonal operator.
    pub fn diagonal_probs(&self) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Diagonal(p) => Ok(p.clone()),
            Repr::Product(_) if self.is_diagonal() => self.materialize()?.diagonal_probs(),
            _ => Err(Error::Invalid("operator is not diagonal".into())),
        }
    }

    /// Diagonal entries ⟨i|d|i⟩ (real parts) in any representation.
    pub fn diagonal_entries(&self) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Dense(m) => Ok(m.diagonal().iter().map(|z| z.re).collect()),
            Repr::Diagonal(p) => Ok(p.clone()),
            Repr::Product(fs) => {
                check_diag_cap(self.qubits)?;
                let mut out = vec![1.0];
                for f in fs {
                    out = kron_vec(&out, &f.diagonal_entries()?);
                }
                Ok(out)
            }
        }
    }

    /// Dense matrix form, subject to the dense cap.
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        match &self.repr {
            Repr::Dense(m) => Ok(m.clone()),
            Repr::Diagonal(p) => {
                check_dense_cap(self.qubits)?;
                Ok(ComplexMatrix::from_real_diagonal(p))
            }
            Repr::Product(_) => self.materialize()?.to_matrix(),
        }
    }

    /// Removes the last qubit.
    pub fn partial_trace_last(&self) -> Result<DensityOperator> {
        if self.qubits < 2 {
            return Err(Error::Precondition(format!(
                "partial trace needs at least 2 qubits, got {}",
                self.qubits
            )));
        }
        Ok(match &self.repr {
            Repr::Dense(m) => {
                let half = m.rows() / 2;
                let out = ComplexMatrix::from_fn(half, half, |i, j| {
                    m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)]
                });
                Self::dense_unchecked(self.qubits - 1, out)
            }
            Repr::Diagonal(p) => {
                let out = p.chunks_exact(2).map(|pair| pair[0] + pair[1]).collect();
                Self::diagonal_unchecked(self.qubits - 1, out)
            }
            Repr::Product(fs) => {
                let mut fs = fs.clone();
                let last = fs.pop().expect("product has factors");
                if last.qubits > 1 {
                    fs.push(last.partial_trace_last()?);
                }
                Self::product(fs)?
            }
        })
    }

    /// Removes the last `count` qubits.
    pub fn partial_trace_k(&self, count: usize) -> Result<DensityOperator> {
        if count >= self.qubits {
            return Err(Error::Precondition(format!(
                "cannot trace out {count} of {} qubits",
                self.qubits
            )));
        }
        let mut out = self.clone();
        for _ in 0..count {
            out = out.partial_trace_last()?;
        }
        Ok(out)
    }

    /// Tensor product, materialized when both sides fit in a single
    /// representation and kept factored otherwise.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let qubits = self.qubits + other.qubits;
        let both_diag = self.is_diagonal() && other.is_diagonal();
        let fits = if both_diag {
            qubits <= diagonal_max_qubits()
        } else {
            qubits <= dense_max_qubits()
        };
        let product = Self::product(vec![self.clone(), other.clone()])?;
        if fits {
            product.materialize()
        } else {
            Ok(product)
        }
    }

    /// Largest entrywise deviation from `other`.
    ///
    /// Product forms with the same factor layout are compared factorwise
    /// through the telescoping bound
    /// `|A⊗B − A'⊗B'| ≤ |A−A'|·|B| + |A'|·|B−B'|`, which is exact when
    /// all factors agree.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> Result<f64> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch {
                left: self.qubits,
                right: other.qubits,
            });
        }
        if let (Repr::Product(a), Repr::Product(b)) = (&self.repr, &other.repr) {
            let same_layout = a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.qubits == y.qubits);
            if same_layout {
                let mut bound = 0.0;
                for k in 0..a.len() {
                    let mut term = a[k].max_abs_diff(&b[k])?;
                    if term == 0.0 {
                        continue;
                    }
                    for f in &b[..k] {
                        term *= f.max_abs()?;
                    }
                    for f in &a[k + 1..] {
                        term *= f.max_abs()?;
                    }
                    bound += term;
                }
                return Ok(bound);
            }
        }
        if self.is_diagonal() && other.is_diagonal() {
            let (a, b) = (self.diagonal_probs()?, other.diagonal_probs()?);
            return Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
        self.to_matrix()?.max_abs_diff(&other.to_matrix()?)
    }

    fn max_abs(&self) -> Result<f64> {
        Ok(match &self.repr {
            Repr::Dense(m) => m.max_abs(),
            Repr::Diagonal(p) => p.iter().fold(0.0, |a: f64, &b| a.max(b.abs())),
            Repr::Product(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.max_abs()?;
                }
                acc
            }
        })
    }
}

/// Checks that `m` is a density matrix: square with power-of-two dimension,
/// Hermitian, trace one and minimum eigenvalue at least `-tol`, all within
/// `tol`. The stored matrix is the Hermitian part of `m`.
pub fn validate_density(m: &ComplexMatrix, tol: f64) -> Result<DensityOperator> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let qubits = qubits_for_dim(m.rows())?;
    check_dense_cap(qubits)?;
    let deviation = m.hermitian_deviation();
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
        return Err(Error::WrongTrace { trace: trace.re });
    }
    let herm = m.hermitian_part();
    let (values, _) = hermitian_eigen(&herm);
    let min_eigenvalue = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -tol {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(DensityOperator::dense_unchecked(qubits, herm))
}

/// Density operator from a pure state vector |v⟩ (normalized here).
pub fn pure_state(v: &[Complex64]) -> Result<DensityOperator> {
    let qubits = qubits_for_dim(v.len())?;
    check_dense_cap(qubits)?;
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Invalid("zero or non-finite state vector".into()));
    }
    let u: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
    Ok(DensityOperator::dense_unchecked(qubits, ComplexMatrix::outer(&u)))
}

pub(crate) fn check_dense_cap(qubits: usize) -> Result<()> {
    if qubits > dense_max_qubits() {
        return Err(Error::CapExceeded {
            qubits,
            cap: dense_max_qubits(),
            repr: "dense",
        });
    }
    Ok(())
}

pub(crate) fn check_diag_cap(qubits: usize) -> Result<()> {
    if qubits > diagonal_max_qubits() {
        return Err(Error::CapExceeded {
            qubits,
            cap: diagonal_max_qubits(),
            repr: "diagonal",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> DensityOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap()
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let r = bell().partial_trace_last().unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        assert!(r.to_matrix().unwrap().max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn diagonal_partial_trace_sums_pairs() {
        let d = DensityOperator::diagonal(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let r = d.partial_trace_last().unwrap();
        let p = r.diagonal_probs().unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15 && (p[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn product_state_traces_back() {
        let rho = validate_density(
            &ComplexMatrix::new(2, 2, vec![c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]).unwrap(),
            1e-9,
        )
        .unwrap();
        let sigma = DensityOperator::diagonal(vec![0.25, 0.75]).unwrap();
        let joint = rho.tensor(&sigma).unwrap();
        assert!(matches!(joint.repr(), Repr::Dense(_)));
        let back = joint.partial_trace_last().unwrap();
        assert!(back.max_abs_diff(&rho).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_k_edge_cases() {
        let d = DensityOperator::maximally_mixed(3).unwrap();
        assert_eq!(d.partial_trace_k(0).unwrap(), d);
        assert!(d.partial_trace_k(3).is_err());
        assert!(DensityOperator::maximally_mixed(1).unwrap().partial_trace_last().is_err());
    }

    #[test]
    fn partial_trace_k_matches_index_summation() {
        // 3-qubit diagonal state; marginal over the first qubit by direct summation.
        let probs = vec![0.05, 0.10, 0.15, 0.20, 0.02, 0.08, 0.25, 0.15];
        let d = DensityOperator::diagonal(probs.clone()).unwrap();
        let got = d.partial_trace_k(2).unwrap().diagonal_probs().unwrap();
        let mut oracle = [0.0; 2];
        for (i, p) in probs.iter().enumerate() {
            oracle[i >> 2] += p;
        }
        assert!((got[0] - oracle[0]).abs() < 1e-15);
        assert!((got[1] - oracle[1]).abs() < 1e-15);
    }

    #[test]
    fn product_partial_trace_drops_single_qubit_factor() {
        let a = DensityOperator::maximally_mixed(2).unwrap();
        let b = DensityOperator::basis_state(1, 0).unwrap();
        let p = DensityOperator::product(vec![a.clone(), b]).unwrap();
        assert_eq!(p.partial_trace_last().unwrap(), a);
    }

    #[test]
    fn validate_density_errors() {
        let half = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        assert!(validate_density(&half, 1e-9).is_ok());

        let heavy = ComplexMatrix::from_real_diagonal(&[0.6, 0.6]);
        assert!(matches!(validate_density(&heavy, 1e-3), Err(Error::WrongTrace { .. })));

        let skew = ComplexMatrix::new(2, 2, vec![c(0.5, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(matches!(validate_density(&skew, 1e-9), Err(Error::NotHermitian { .. })));

        let neg = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(matches!(validate_density(&neg, 1e-9), Err(Error::NotPositive { .. })));

        let three = ComplexMatrix::identity(3).scale(1.0 / 3.0);
        assert!(matches!(validate_density(&three, 1e-9), Err(Error::BadDimension { dim: 3 })));

        let rect = ComplexMatrix::zeros(2, 4);
        assert!(matches!(validate_density(&rect, 1e-9), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn diagonal_clips_tiny_negatives() {
        let d = DensityOperator::diagonal(vec![1.0 + 1e-12, -1e-12]).unwrap();
        assert_eq!(d.diagonal_probs().unwrap()[1], 0.0);
        assert!(DensityOperator::diagonal(vec![1.1, -0.1]).is_err());
    }
}
