use super::caps::{diagonal_max_qubits, PRODUCT_MAX_QUBITS};
use super::density::{check_dense_cap, check_diag_cap, DensityOperator, Repr};
use super::matrix::{qubits_for_dim, tensor, ComplexMatrix};
use super::sum::neumaier_sum;
use crate::error::{Error, Result};

/// A Hermitian projection on n qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    qubits: usize,
    repr: ProjRepr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProjRepr {
    Dense { matrix: ComplexMatrix, rank: u64 },
    /// Projection onto span{|i⟩ : i ∈ indices}; indices sorted and unique.
    BasisSubset(Vec<usize>),
    Identity,
    /// Tensor product of non-product factors, first factor on the earliest qubits.
    Product(Vec<Projection>),
}

impl Projection {
    /// Validates `matrix` as a projection: P = P*, P² = P and an integral trace, within `tol`.
    pub fn dense(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let qubits = qubits_for_dim(matrix.rows())?;
        check_dense_cap(qubits)?;
        let herm = matrix.hermitian_deviation();
        if herm > tol {
            return Err(Error::NotProjection(format!("not Hermitian (deviation {herm:e})")));
        }
        let idem = matrix.matmul(&matrix)?.max_abs_diff(&matrix)?;
        if idem > tol {
            return Err(Error::NotProjection(format!("not idempotent (deviation {idem:e})")));
        }
        let trace = matrix.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > tol * matrix.rows() as f64 {
            return Err(Error::NotProjection(format!("non-integral trace {trace}")));
        }
        Ok(Self {
            qubits,
            repr: ProjRepr::Dense {
                matrix,
                rank: rank as u64,
            },
        })
    }

    pub(crate) fn dense_with_rank(qubits: usize, matrix: ComplexMatrix, rank: u64) -> Self {
        Self {
            qubits,
            repr: ProjRepr::Dense { matrix, rank },
        }
    }

    /// Diagonal projection onto the given computational-basis indices.
    pub fn basis_subset(qubits: usize, mut indices: Vec<usize>) -> Result<Self> {
        check_diag_cap(qubits)?;
        let dim = 1usize << qubits;
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::OutOfRange {
                value: bad,
                min: 0,
                max: dim - 1,
            });
        }
        Ok(Self {
            qubits,
            repr: ProjRepr::BasisSubset(indices),
        })
    }

    pub fn identity(qubits: usize) -> Result<Self> {
        if qubits > PRODUCT_MAX_QUBITS {
            return Err(Error::CapExceeded {
                qubits,
                cap: PRODUCT_MAX_QUBITS,
                repr: "product",
            });
        }
        Ok(Self {
            qubits,
            repr: ProjRepr::Identity,
        })
    }

    /// Tensor product kept in factored form. Nested products are flattened.
    pub fn product(factors: Vec<Projection>) -> Result<Self> {
        let mut flat = Vec::with_capacity(factors.len());
        for f in factors {
            match f.repr {
                ProjRepr::Product(inner) => flat.extend(inner),
                _ if f.qubits == 0 => {}
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
                    repr: ProjRepr::Product(flat),
                })
            }
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn repr(&self) -> &ProjRepr {
        &self.repr
    }

    pub fn rank(&self) -> u64 {
        match &self.repr {
            ProjRepr::Dense { rank, .. } => *rank,
            ProjRepr::BasisSubset(idx) => idx.len() as u64,
            ProjRepr::Identity => 1u64 << self.qubits,
            ProjRepr::Product(fs) => fs.iter().map(|f| f.rank()).product(),
        }
    }

    /// True for projections diagonal in the computational basis.
    pub fn is_basis(&self) -> bool {
        match &self.repr {
            ProjRepr::Dense { .. } => false,
            ProjRepr::BasisSubset(_) | ProjRepr::Identity => true,
            ProjRepr::Product(fs) => fs.iter().all(|f| f.is_basis()),
        }
    }

    /// Membership of basis index `i` in a diagonal projection.
    pub fn contains(&self, i: usize) -> Option<bool> {
        match &self.repr {
            ProjRepr::Dense { .. } => None,
            ProjRepr::Identity => Some(i >> self.qubits == 0),
            ProjRepr::BasisSubset(idx) => Some(idx.binary_search(&i).is_ok()),
            ProjRepr::Product(fs) => {
                let mut rest = i;
                for f in fs.iter().rev() {
                    let local = rest & ((1usize << f.qubits) - 1);
                    if !f.contains(local)? {
                        return Some(false);
                    }
                    rest >>= f.qubits;
                }
                Some(rest == 0)
            }
        }
    }

    /// Collapses product and identity forms into basis-subset or dense form.
    pub fn materialize(&self) -> Result<Projection> {
        match &self.repr {
            ProjRepr::Dense { .. } | ProjRepr::BasisSubset(_) => Ok(self.clone()),
            _ if self.is_basis() => {
                check_diag_cap(self.qubits)?;
                let idx = (0..1usize << self.qubits)
                    .filter(|&i| self.contains(i) == Some(true))
                    .collect();
                Projection::basis_subset(self.qubits, idx)
            }
            _ => Ok(Self::dense_with_rank(self.qubits, self.to_matrix()?, self.rank())),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        check_dense_cap(self.qubits)?;
        match &self.repr {
            ProjRepr::Dense { matrix, .. } => Ok(matrix.clone()),
            ProjRepr::Identity => Ok(ComplexMatrix::identity(1usize << self.qubits)),
            ProjRepr::BasisSubset(idx) => {
                let mut diag = vec![0.0; 1usize << self.qubits];
                for &i in idx {
                    diag[i] = 1.0;
                }
                Ok(ComplexMatrix::from_real_diagonal(&diag))
            }
            ProjRepr::Product(fs) => {
                let mut m = ComplexMatrix::identity(1);
                for f in fs {
                    m = tensor(&m, &f.to_matrix()?)?;
                }
                Ok(m)
            }
        }
    }

    /// `self ⊗ I` on `extra` further qubits.
    pub fn pad_identity(&self, extra: usize) -> Result<Projection> {
        if extra == 0 {
            return Ok(self.clone());
        }
        let padded = Projection::product(vec![self.clone(), Projection::identity(extra)?])?;
        let total = self.qubits + extra;
        let small = match &self.repr {
            ProjRepr::Dense { .. } => total <= super::caps::dense_max_qubits(),
            ProjRepr::BasisSubset(_) => total <= diagonal_max_qubits(),
            _ => false,
        };
        if small {
            padded.materialize()
        } else {
            Ok(padded)
        }
    }
}

/// τ(G) = 2^{-n} rank(G).
pub fn tau_weight(g: &Projection) -> f64 {
    g.rank() as f64 * (-(g.qubits() as f64)).exp2()
}

/// ρ(G) = Tr(d G).
pub fn projection_weight(d: &DensityOperator, g: &Projection) -> Result<f64> {
    if d.qubits() != g.qubits() {
        return Err(Error::DimensionMismatch {
            left: d.qubits(),
            right: g.qubits(),
        });
    }
    if let ProjRepr::Identity = g.repr() {
        return density_trace(d);
    }
    if matches!(d.repr(), Repr::Product(_)) || matches!(g.repr(), ProjRepr::Product(_)) {
        if let Some(w) = grouped_weight(d, g)? {
            return Ok(w);
        }
    }
    match (d.repr(), g.repr()) {
        (Repr::Diagonal(p), _) if g.is_basis() => Ok(neumaier_sum(
            p.iter()
                .enumerate()
                .filter(|(i, &x)| x != 0.0 && g.contains(*i) == Some(true))
                .map(|(_, &x)| x),
        )),
        (Repr::Dense(m), _) if g.is_basis() => Ok(neumaier_sum(
            (0..m.rows())
                .filter(|&i| g.contains(i) == Some(true))
                .map(|i| m[(i, i)].re),
        )),
        (Repr::Diagonal(p), ProjRepr::Dense { matrix, .. }) => Ok(neumaier_sum(
            p.iter().enumerate().map(|(i, &x)| x * matrix[(i, i)].re),
        )),
        (Repr::Dense(m), ProjRepr::Dense { matrix, .. }) => {
            let dim = m.rows();
            let mut terms = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    terms.push((m[(i, j)] * matrix[(j, i)]).re);
                }
            }
            Ok(neumaier_sum(terms))
        }
        (Repr::Product(_), _) => projection_weight(&d.materialize()?, g),
        (_, ProjRepr::Product(_)) => projection_weight(d, &g.materialize()?),
        _ => unreachable!("identity handled above"),
    }
}

/// Splits both operands at their shared qubit boundaries and multiplies
/// the per-block weights. None when no interior boundary is shared.
fn grouped_weight(d: &DensityOperator, g: &Projection) -> Result<Option<f64>> {
    let d_factors = d.factors();
    let g_factors: Vec<&Projection> = match g.repr() {
        ProjRepr::Product(fs) => fs.iter().collect(),
        _ => vec![g],
    };
    let cuts = |sizes: Vec<usize>| -> Vec<usize> {
        sizes
            .iter()
            .scan(0, |acc, &q| {
                *acc += q;
                Some(*acc)
            })
            .collect()
    };
    let d_cuts = cuts(d_factors.iter().map(|f| f.qubits()).collect());
    let g_cuts = cuts(g_factors.iter().map(|f| f.qubits()).collect());
    let shared: Vec<usize> = d_cuts.iter().copied().filter(|c| g_cuts.contains(c)).collect();
    if shared.len() < 2 {
        return Ok(None);
    }
    let mut w = 1.0;
    let (mut di, mut gi) = (0, 0);
    for &cut in &shared {
        let mut ds = Vec::new();
        while di < d_factors.len() && d_cuts[di] <= cut {
            ds.push(d_factors[di].clone());
            di += 1;
        }
        let mut gs = Vec::new();
        while gi < g_factors.len() && g_cuts[gi] <= cut {
            gs.push(g_factors[gi].clone());
            gi += 1;
        }
        let dg = DensityOperator::product(ds)?;
        let gg = Projection::product(gs)?;
        w *= if let (Repr::Product(_), ProjRepr::Product(_)) = (dg.repr(), gg.repr()) {
            projection_weight(&dg.materialize()?, &gg)?
        } else {
            projection_weight(&dg, &gg)?
        };
    }
    Ok(Some(w))
}

fn density_trace(d: &DensityOperator) -> Result<f64> {
    Ok(match d.repr() {
        Repr::Dense(m) => m.trace().re,
        Repr::Diagonal(p) => neumaier_sum(p.iter().copied()),
        Repr::Product(fs) => {
            let mut t = 1.0;
            for f in fs {
                t *= density_trace(f)?;
            }
            t
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectrum::{eigendecompose, top_k_projector, top_k_sum};
    use crate::random::{random_density, seeded};
    use num_complex::Complex64;

    #[test]
    fn identity_weight_is_one() {
        let mut rng = seeded(1);
        let d = random_density(&mut rng, 2);
        let w = projection_weight(&d, &Projection::identity(2).unwrap()).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_state_on_zero_projector() {
        let d = DensityOperator::maximally_mixed(1).unwrap();
        let g = Projection::basis_subset(1, vec![0]).unwrap();
        assert_eq!(projection_weight(&d, &g).unwrap(), 0.5);
        assert_eq!(tau_weight(&g), 0.5);
        assert_eq!(tau_weight(&Projection::identity(5).unwrap()), 1.0);
    }

    #[test]
    fn top_k_projector_from_pure_and_mixed() {
        let pure = crate::linalg::density::validate_density(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0]), 1e-9).unwrap();
        let p = top_k_projector(&eigendecompose(&pure).unwrap(), 1).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(p.to_matrix().unwrap().max_abs_diff(&expected).unwrap() < 1e-12);

        let mixed = DensityOperator::maximally_mixed(1).unwrap();
        let full = top_k_projector(&eigendecompose(&mixed).unwrap(), 2).unwrap();
        assert_eq!(full.to_matrix().unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn random_top_k_projector_is_projection() {
        let mut rng = seeded(2);
        let d = random_density(&mut rng, 2);
        let s = eigendecompose(&d).unwrap();
        let p = top_k_projector(&s, 2).unwrap().to_matrix().unwrap();
        assert!(p.matmul(&p).unwrap().max_abs_diff(&p).unwrap() < 1e-9);
        assert!(p.hermitian_deviation() < 1e-9);
        assert!((p.trace().re - 2.0).abs() < 1e-9);
        // and it re-validates
        assert_eq!(Projection::dense(p, 1e-9).unwrap().rank(), 2);
    }

    #[test]
    fn eigenbasis_trace_matches_top_k_sum() {
        let mut rng = seeded(4);
        let d = random_density(&mut rng, 3);
        let s = eigendecompose(&d).unwrap();
        for k in 1..=8 {
            let g = top_k_projector(&s, k).unwrap();
            let w = projection_weight(&d, &g).unwrap();
            assert!((w - top_k_sum(&s, k).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_projection_validation() {
        let half = Complex64::new(0.5, 0.0);
        let plus = ComplexMatrix::new(2, 2, vec![half, half, half, half]).unwrap();
        assert_eq!(Projection::dense(plus, 1e-12).unwrap().rank(), 1);
        let not_idem = ComplexMatrix::from_real_diagonal(&[0.5, 1.0]);
        assert!(matches!(Projection::dense(not_idem, 1e-9), Err(Error::NotProjection(_))));
    }

    #[test]
    fn product_membership_and_rank() {
        // (|0><0| ⊗ I_1) ⊗ (|0><0| ⊗ I_2)
        let a = Projection::basis_subset(2, vec![0, 1]).unwrap();
        let b = Projection::basis_subset(3, vec![0, 1, 2, 3]).unwrap();
        let g = Projection::product(vec![a, b]).unwrap();
        assert_eq!(g.rank(), 8);
        assert_eq!(tau_weight(&g), 0.25);
        let m = g.materialize().unwrap();
        let ProjRepr::BasisSubset(idx) = m.repr() else { panic!() };
        assert_eq!(idx.len(), 8);
        for &i in idx {
            assert_eq!(i >> 4, 0);
            assert_eq!((i >> 2) & 1, 0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let d = DensityOperator::maximally_mixed(2).unwrap();
        let g = Projection::identity(3).unwrap();
        assert!(matches!(projection_weight(&d, &g), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn factored_and_materialized_weights_agree() {
        let mut rng = seeded(9);
        let a = random_density(&mut rng, 1);
        let b = random_density(&mut rng, 2);
        let d = DensityOperator::product(vec![a, b]).unwrap();
        let ga = Projection::basis_subset(1, vec![1]).unwrap();
        let gb = Projection::basis_subset(2, vec![0, 3]).unwrap();
        let g = Projection::product(vec![ga, gb]).unwrap();
        let factored = projection_weight(&d, &g).unwrap();
        let flat = projection_weight(&d.materialize().unwrap(), &g.materialize().unwrap()).unwrap();
        assert!((factored - flat).abs() < 1e-14);
    }

    #[test]
    fn product_weight_with_refined_layout() {
        // 1-qubit state factors against 2- and 3-qubit projection factors
        let half = DensityOperator::maximally_mixed(1).unwrap();
        let skew = DensityOperator::diagonal(vec![0.8, 0.2]).unwrap();
        let d = DensityOperator::product(vec![half.clone(), skew.clone(), half, skew.clone(), skew]).unwrap();
        let g = Projection::product(vec![
            Projection::basis_subset(2, vec![0, 3]).unwrap(),
            Projection::basis_subset(3, vec![1, 2, 6]).unwrap(),
        ])
        .unwrap();
        let factored = projection_weight(&d, &g).unwrap();
        let flat = projection_weight(&d.materialize().unwrap(), &g.materialize().unwrap()).unwrap();
        assert!((factored - flat).abs() < 1e-14);

        let wide = DensityOperator::product(vec![DensityOperator::maximally_mixed(1).unwrap(); 40]).unwrap();
        let g = Projection::product(vec![
            Projection::basis_subset(10, vec![0]).unwrap(),
            Projection::identity(30).unwrap(),
        ])
        .unwrap();
        assert_eq!(projection_weight(&wide, &g).unwrap(), (-10f64).exp2());
    }
}
