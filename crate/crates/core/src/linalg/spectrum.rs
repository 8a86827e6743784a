use nalgebra::DMatrix;
use num_complex::Complex64;

use super::density::{DensityOperator, Repr, DEFAULT_TOL};
use super::matrix::ComplexMatrix;
use super::projection::Projection;
use super::sum::neumaier_sum;
use crate::error::{Error, Result};

/// Eigenvalues below zero but above this are solver noise and get clipped.
pub const CLIP_TOL: f64 = 1e-9;
/// Largest eigenvalue-sum defect that is silently renormalized.
pub const RENORM_TOL: f64 = 1e-6;

/// Eigenvalues in non-increasing order together with the eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    qubits: usize,
    values: Vec<f64>,
    basis: SpectrumBasis,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumBasis {
    /// Orthonormal eigenvectors stored as matrix columns, aligned with the values.
    Vectors(ComplexMatrix),
    /// Computational-basis indices, for diagonal operators.
    Labels(Vec<usize>),
    Absent,
}

impl Spectrum {
    /// Spectrum without eigenvectors, from any probability vector of
    /// power-of-two length. Values are sorted here.
    pub fn from_probabilities(values: &[f64]) -> Result<Self> {
        let qubits = super::matrix::qubits_for_dim(values.len())?;
        let (values, _) = normalize_and_sort(values.to_vec())?;
        Ok(Self {
            qubits,
            values,
            basis: SpectrumBasis::Absent,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis(&self) -> &SpectrumBasis {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Σ α_i |ψ_i⟩⟨ψ_i|
    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        let dim = self.values.len();
        match &self.basis {
            SpectrumBasis::Vectors(vecs) => {
                let mut out = ComplexMatrix::zeros(dim, dim);
                for (k, &a) in self.values.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let v = vecs.column(k);
                    for i in 0..dim {
                        for j in 0..dim {
                            out[(i, j)] += v[i] * v[j].conj() * a;
                        }
                    }
                }
                Ok(out)
            }
            SpectrumBasis::Labels(labels) => {
                let mut diag = vec![0.0; dim];
                for (&a, &l) in self.values.iter().zip(labels) {
                    diag[l] = a;
                }
                Ok(ComplexMatrix::from_real_diagonal(&diag))
            }
            SpectrumBasis::Absent => Err(Error::NoEigenvectors),
        }
    }
}

/// Hermitian eigendecomposition, eigenvalues and eigenvectors in solver order.
pub(crate) fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let dim = m.rows();
    let na = DMatrix::<Complex64>::from_fn(dim, dim, |i, j| m[(i, j)]);
    let eig = na.symmetric_eigen();
    let values = eig.eigenvalues.iter().copied().collect();
    let vectors = ComplexMatrix::from_fn(dim, dim, |i, j| eig.eigenvectors[(i, j)]);
    (values, vectors)
}

/// Clips solver noise, renormalizes, and returns values sorted in
/// non-increasing order with the permutation that produced them. Ties keep
/// ascending original index.
fn normalize_and_sort(mut values: Vec<f64>) -> Result<(Vec<f64>, Vec<usize>)> {
    for v in values.iter_mut() {
        if !v.is_finite() || *v < -CLIP_TOL {
            return Err(Error::NotPositive { min_eigenvalue: *v });
        }
        *v = v.clamp(0.0, 1.0);
    }
    let sum = neumaier_sum(values.iter().copied());
    if (sum - 1.0).abs() > RENORM_TOL {
        return Err(Error::Malformed { sum });
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    Ok((sorted, order))
}

/// Eigendecomposition of a density operator.
pub fn eigendecompose(d: &DensityOperator) -> Result<Spectrum> {
    match d.repr() {
        Repr::Diagonal(p) => {
            let (values, order) = normalize_and_sort(p.clone())?;
            Ok(Spectrum {
                qubits: d.qubits(),
                values,
                basis: SpectrumBasis::Labels(order),
            })
        }
        Repr::Dense(m) => {
            let (raw, vectors) = hermitian_eigen(m);
            let (values, order) = normalize_and_sort(raw)?;
            let dim = m.rows();
            let sorted = ComplexMatrix::from_fn(dim, dim, |i, j| vectors[(i, order[j])]);
            Ok(Spectrum {
                qubits: d.qubits(),
                values,
                basis: SpectrumBasis::Vectors(sorted),
            })
        }
        Repr::Product(_) => eigendecompose(&d.materialize()?),
    }
}

/// −Σ p_i log₂ p_i with 0·log 0 = 0.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    for (index, &value) in p.iter().enumerate() {
        if !value.is_finite() || value < -DEFAULT_TOL {
            return Err(Error::NegativeProbability { index, value });
        }
    }
    Ok(entropy_terms(p))
}

/// Entropy sum without validation; non-positive entries contribute nothing.
pub(crate) fn entropy_terms(p: &[f64]) -> f64 {
    let h = neumaier_sum(p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()));
    // -0.0 for point masses
    h.max(0.0)
}

/// Von Neumann entropy in bits. Product forms use additivity.
pub fn von_neumann_entropy(d: &DensityOperator) -> Result<f64> {
    match d.repr() {
        Repr::Diagonal(p) => shannon_entropy(p),
        Repr::Dense(_) => Ok(entropy_terms(eigendecompose(d)?.values())),
        Repr::Product(fs) => {
            let mut total = 0.0;
            for f in fs {
                total += von_neumann_entropy(f)?;
            }
            Ok(total)
        }
    }
}

/// Sum of the `k` largest eigenvalues.
pub fn top_k_sum(s: &Spectrum, k: usize) -> Result<f64> {
    check_k(s, k)?;
    Ok(neumaier_sum(s.values[..k].iter().copied()))
}

/// Projection onto the span of the first `k` eigenvectors.
pub fn top_k_projector(s: &Spectrum, k: usize) -> Result<Projection> {
    check_k(s, k)?;
    match &s.basis {
        SpectrumBasis::Vectors(vecs) => {
            let dim = s.values.len();
            let mut p = ComplexMatrix::zeros(dim, dim);
            for col in 0..k {
                let v = vecs.column(col);
                for i in 0..dim {
                    for j in 0..dim {
                        p[(i, j)] += v[i] * v[j].conj();
                    }
                }
            }
            Ok(Projection::dense_with_rank(s.qubits, p, k as u64))
        }
        SpectrumBasis::Labels(labels) => {
            Projection::basis_subset(s.qubits, labels[..k].to_vec())
        }
        SpectrumBasis::Absent => Err(Error::NoEigenvectors),
    }
}

fn check_k(s: &Spectrum, k: usize) -> Result<()> {
    if k == 0 || k > s.values.len() {
        return Err(Error::OutOfRange {
            value: k,
            min: 1,
            max: s.values.len(),
        });
    }
    Ok(())
}
