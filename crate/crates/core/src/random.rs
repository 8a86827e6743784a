//! Seeded random fixtures: Ginibre density matrices, Haar-distributed
//! orthonormal frames and random spectra.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, DensityOperator, Projection};

pub type FixtureRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Full-rank density matrix G G* / Tr(G G*) with G complex Ginibre.
pub fn random_density(rng: &mut impl Rng, qubits: usize) -> DensityOperator {
    let dim = 1usize << qubits;
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let gg = g.matmul(&g.adjoint()).expect("square");
    let tr = gg.trace().re;
    DensityOperator::dense_unchecked(qubits, gg.scale(1.0 / tr).hermitian_part())
}

/// Density matrix with a prescribed spectrum in a Haar-random eigenbasis.
pub fn density_with_spectrum(rng: &mut impl Rng, spectrum: &[f64]) -> DensityOperator {
    let dim = spectrum.len();
    let qubits = dim.trailing_zeros() as usize;
    let frame = haar_frame(rng, dim, dim);
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (v, &a) in frame.iter().zip(spectrum) {
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += v[i] * v[j].conj() * a;
            }
        }
    }
    DensityOperator::dense_unchecked(qubits, m.hermitian_part())
}

/// `k` orthonormal vectors in C^dim, Haar distributed (Gram–Schmidt on
/// Gaussian vectors, re-orthogonalized twice).
pub fn haar_frame(rng: &mut impl Rng, dim: usize, k: usize) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for u in &out {
                let dot: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        out.push(v);
    }
    out
}

/// Rank-`k` projection onto a Haar-random subspace.
pub fn random_projection(rng: &mut impl Rng, qubits: usize, k: usize) -> Projection {
    let dim = 1usize << qubits;
    let mut p = ComplexMatrix::zeros(dim, dim);
    for v in haar_frame(rng, dim, k) {
        for i in 0..dim {
            for j in 0..dim {
                p[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    Projection::dense_with_rank(qubits, p, k as u64)
}

/// Random probability vector of length `len`, sorted non-increasing.
/// `spread` controls how peaked it is: each weight is u^spread for uniform u.
pub fn random_descending(rng: &mut impl Rng, len: usize, spread: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len).map(|_| rng.random::<f64>().powf(spread)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w.sort_by(|a, b| b.total_cmp(a));
    w
}
