//! Eigenvalue-distribution constructions: flattening and the entropy bounds
//! built on it, the step family f^ρ, uniform-integrability profiles and
//! entropy gaps of measure-induced states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sum::{neumaier_sum, CompensatedSum};
use crate::linalg::{eigendecompose, qubits_for_dim, shannon_entropy};
use crate::states::{measure_state, DensitySpec, StateSequence};

/// Tolerance for "sums to 1" and "is descending".
pub const DIST_TOL: f64 = 1e-9;

fn check_distribution(alpha: &[f64]) -> Result<usize> {
    let n = qubits_for_dim(alpha.len())?;
    for (index, &value) in alpha.iter().enumerate() {
        if !(value >= -DIST_TOL) || !value.is_finite() {
            return Err(Error::NegativeProbability { index, value });
        }
    }
    let sum = neumaier_sum(alpha.iter().copied());
    if (sum - 1.0).abs() > DIST_TOL {
        return Err(Error::Malformed { sum });
    }
    Ok(n)
}

fn check_descending(alpha: &[f64]) -> Result<()> {
    if let Some(i) = alpha.windows(2).position(|w| w[1] > w[0] + DIST_TOL) {
        return Err(Error::Invalid(format!(
            "distribution not non-increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// ⌈2^x⌉ with x within 1e-9 of an integer treated as that integer.
pub fn guarded_ceil_pow2(x: f64) -> f64 {
    let nearest = x.round();
    let x = if (x - nearest).abs() < 1e-9 { nearest } else { x };
    x.exp2().ceil()
}

/// Output of [`flatten_distribution`]. Indices are 1-based as in the
/// construction; vectors are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlattenResult {
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    /// ⌈2^{nε}⌉, capped at 2^n.
    pub cut: usize,
    /// Last index kept in the support of r.
    pub xi_index: usize,
    /// Σ r_i.
    pub mass: f64,
}

/// Copies α up to the cut, continues with the constant α_cut while the
/// running sum stays ≤ 1, and zeroes the rest; p = r / Σ r.
pub fn flatten_distribution(alpha: &[f64], epsilon: f64) -> Result<FlattenResult> {
    let n = check_distribution(alpha)?;
    check_descending(alpha)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let dim = alpha.len();
    let cut = (guarded_ceil_pow2(n as f64 * epsilon) as usize).clamp(1, dim);
    let level = alpha[cut - 1];
    let mut r = vec![0.0; dim];
    let mut acc = CompensatedSum::default();
    for i in 0..cut {
        r[i] = alpha[i];
        acc.add(alpha[i]);
    }
    let mut xi_index = cut;
    while xi_index < dim && level > 0.0 {
        let mut next = acc;
        next.add(level);
        if next.value() > 1.0 {
            break;
        }
        r[xi_index] = level;
        acc = next;
        xi_index += 1;
    }
    let mass = acc.value();
    let p = r.iter().map(|x| x / mass).collect();
    Ok(FlattenResult {
        r,
        p,
        cut,
        xi_index,
        mass,
    })
}

/// Both sides of H(α) > (1−2δ)[log(1−δ) − log δ + nε].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    /// The premise: top-⌈2^{nε}⌉ sum ≤ δ and α₁ ≤ δ.
    pub applicable: bool,
    pub top_sum: f64,
    pub entropy: f64,
    pub bound: f64,
}

impl LowerBoundCheck {
    /// None when the premise fails.
    pub fn holds(&self) -> Option<bool> {
        self.applicable.then_some(self.entropy > self.bound)
    }
}

pub fn entropy_lower_bound_check(alpha: &[f64], epsilon: f64, delta: f64) -> Result<LowerBoundCheck> {
    let n = check_distribution(alpha)?;
    check_descending(alpha)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Precondition(format!("delta {delta} outside (0, 0.5)")));
    }
    let cut = (guarded_ceil_pow2(n as f64 * epsilon) as usize).clamp(1, alpha.len());
    let top_sum = neumaier_sum(alpha[..cut].iter().copied());
    let bound = (1.0 - 2.0 * delta)
        * ((1.0 - delta).log2() - delta.log2() + n as f64 * epsilon);
    Ok(LowerBoundCheck {
        applicable: top_sum <= delta && alpha[0] <= delta,
        top_sum,
        entropy: shannon_entropy(alpha)?,
        bound,
    })
}

/// p ≥ q pointwise on the support of p.
pub fn uniformity_dominance(p: &[f64], q: &[f64]) -> Result<bool> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for v in [p, q] {
        let sum = neumaier_sum(v.iter().copied());
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(Error::Malformed { sum });
        }
    }
    Ok(p
        .iter()
        .zip(q)
        .all(|(&a, &b)| a <= 0.0 || a >= b - 1e-15))
}

/// Averages α over the top 2^{n−m} indices and over the rest.
pub fn two_block_average(alpha: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = check_distribution(alpha)?;
    if m > n {
        return Err(Error::OutOfRange {
            value: m,
            min: 0,
            max: n,
        });
    }
    let dim = alpha.len();
    let head = dim >> m;
    let s = neumaier_sum(alpha[..head].iter().copied());
    let mut out = vec![s / head as f64; head];
    if head < dim {
        let rest = ((1.0 - s) / (dim - head) as f64).max(0.0);
        out.resize(dim, rest);
    }
    Ok(out)
}

/// Both sides of H(α) ≤ 1 − m S_{m,n} + n, plus the intermediate
/// H(α) ≤ H(two-block average).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundCheck {
    pub m: usize,
    pub s_mn: f64,
    pub entropy: f64,
    pub averaged_entropy: f64,
    pub bound: f64,
}

impl UpperBoundCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.entropy <= self.bound + slack
    }

    pub fn intermediate_holds(&self, slack: f64) -> bool {
        self.entropy <= self.averaged_entropy + slack
    }
}

pub fn entropy_upper_bound_check(alpha: &[f64], m: usize) -> Result<UpperBoundCheck> {
    let n = check_distribution(alpha)?;
    check_descending(alpha)?;
    let averaged = two_block_average(alpha, m)?;
    let s_mn = neumaier_sum(alpha[..alpha.len() >> m].iter().copied());
    Ok(UpperBoundCheck {
        m,
        s_mn,
        entropy: shannon_entropy(alpha)?,
        averaged_entropy: shannon_entropy(&averaged)?,
        bound: 1.0 - m as f64 * s_mn + n as f64,
    })
}

/// f^ρ_n(x) = 2^n α^n_i on [(i−1)2^{-n}, i 2^{-n}), for 1 ≤ n ≤ N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFamily {
    /// members[n − 1] = descending eigenvalues of ρ_n.
    members: Vec<Vec<f64>>,
}

impl StepFamily {
    /// Family from explicit descending spectra of ρ_1 … ρ_N.
    pub fn from_spectra(members: Vec<Vec<f64>>) -> Result<Self> {
        for (i, a) in members.iter().enumerate() {
            if a.len() != 1usize << (i + 1) {
                return Err(Error::EntryCount {
                    expected: 1usize << (i + 1),
                    found: a.len(),
                });
            }
            check_distribution(a)?;
            check_descending(a)?;
        }
        Ok(Self { members })
    }

    pub fn depth(&self) -> usize {
        self.members.len()
    }

    pub fn spectrum(&self, n: usize) -> Result<&[f64]> {
        if n == 0 || n > self.members.len() {
            return Err(Error::DepthExceeded {
                requested: n,
                available: self.members.len(),
            });
        }
        Ok(&self.members[n - 1])
    }

    /// f^ρ_n(x) for x in [0, 1).
    pub fn value(&self, n: usize, x: f64) -> Result<f64> {
        let a = self.spectrum(n)?;
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Invalid(format!("x = {x} outside [0, 1)")));
        }
        let i = ((x * a.len() as f64) as usize).min(a.len() - 1);
        Ok(a[i] * a.len() as f64)
    }

    /// ∫₀¹ f^ρ_n = Σ α^n_i.
    pub fn total(&self, n: usize) -> Result<f64> {
        Ok(neumaier_sum(self.spectrum(n)?.iter().copied()))
    }

    /// ∫₀^x f^ρ_n.
    pub fn prefix_integral(&self, n: usize, x: f64) -> Result<f64> {
        let a = self.spectrum(n)?;
        let x = x.clamp(0.0, 1.0);
        let scaled = x * a.len() as f64;
        let whole = (scaled.floor() as usize).min(a.len());
        let mut acc = CompensatedSum::default();
        a[..whole].iter().for_each(|&v| acc.add(v));
        if whole < a.len() {
            acc.add(a[whole] * (scaled - whole as f64));
        }
        Ok(acc.value())
    }

    /// ∫_W f^ρ_n over the union W of the given intervals (overlaps counted once).
    pub fn integral_over(&self, n: usize, intervals: &[(f64, f64)]) -> Result<f64> {
        let mut acc = CompensatedSum::default();
        for (a, b) in merge_intervals(intervals) {
            acc.add(self.prefix_integral(n, b)? - self.prefix_integral(n, a)?);
        }
        Ok(acc.value())
    }
}

/// Sorted disjoint intervals covering the same points of [0, 1].
pub fn merge_intervals(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = intervals
        .iter()
        .map(|&(a, b)| (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0)))
        .filter(|(a, b)| b > a)
        .collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Lebesgue measure of a union of intervals in [0, 1].
pub fn union_measure(intervals: &[(f64, f64)]) -> f64 {
    neumaier_sum(merge_intervals(intervals).iter().map(|(a, b)| b - a))
}

pub fn step_family(state: &StateSequence, depth: usize) -> Result<StepFamily> {
    if depth == 0 || depth > state.max_depth() {
        return Err(Error::DepthExceeded {
            requested: depth,
            available: state.max_depth(),
        });
    }
    let members = (1..=depth)
        .map(|n| Ok(eigendecompose(&state.rho(n)?)?.values().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(StepFamily { members })
}

/// ∫₀^{2^{-m}} f^ρ_n = Σ_{i ≤ 2^{n−m}} α^n_i.
pub fn tail_integral(fam: &StepFamily, n: usize, m: usize) -> Result<f64> {
    if m > n {
        return Err(Error::OutOfRange {
            value: m,
            min: 0,
            max: n,
        });
    }
    let a = fam.spectrum(n)?;
    Ok(neumaier_sum(a[..a.len() >> m].iter().copied()))
}

/// sup over n ≤ N of ∫₀^{2^{-m}} f^ρ_n. For n < m the prefix lies inside
/// the first step and the integral is 2^{n−m} α^n_1.
fn sup_prefix(fam: &StepFamily, m: usize) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for n in 1..=fam.depth() {
        let v = if m <= n {
            tail_integral(fam, n, m)?
        } else {
            fam.spectrum(n)?[0] * (n as f64 - m as f64).exp2()
        };
        sup = sup.max(v);
    }
    Ok(sup)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UIEntry {
    pub delta: f64,
    /// Smallest m ≤ N with sup_n ∫₀^{2^{-m}} f^ρ_n ≤ δ.
    pub modulus: Option<usize>,
    /// 2^{-modulus}.
    pub epsilon: Option<f64>,
    /// The supremum at the reported modulus, or at m = N when none exists.
    pub sup_tail: f64,
}

/// Empirical uniform-integrability moduli. Only prefixes [0, 2^{-m}) are
/// examined: each f^ρ_n is non-increasing, so among sets of a given measure
/// the prefix carries the most mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UIProfile {
    pub depth: usize,
    pub entries: Vec<UIEntry>,
}

pub fn ui_profile(fam: &StepFamily, deltas: &[f64], depth: usize) -> Result<UIProfile> {
    if deltas.is_empty() {
        return Err(Error::Invalid("empty delta grid".into()));
    }
    if depth == 0 || depth > fam.depth() {
        return Err(Error::DepthExceeded {
            requested: depth,
            available: fam.depth(),
        });
    }
    let truncated = StepFamily {
        members: fam.members[..depth].to_vec(),
    };
    let sups = (0..=depth)
        .map(|m| sup_prefix(&truncated, m))
        .collect::<Result<Vec<_>>>()?;
    let entries = deltas
        .iter()
        .map(|&delta| {
            let modulus = sups.iter().position(|&s| s <= delta);
            UIEntry {
                delta,
                modulus,
                epsilon: modulus.map(|m| (-(m as f64)).exp2()),
                sup_tail: sups[modulus.unwrap_or(depth)],
            }
        })
        .collect();
    Ok(UIProfile { depth, entries })
}

/// H(ρ_n) − n for the measure-induced state of `spec`, from exact cylinder masses.
pub fn riemann_entropy_gap(spec: &DensitySpec, n: usize) -> Result<f64> {
    let state = measure_state(spec.clone(), n)?;
    let rho = state.rho(n)?;
    Ok(shannon_entropy(&rho.diagonal_probs()?)? - n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{projection_weight, top_k_projector};
    use crate::states::{
        block_state, pure_bitstring_state, tracial_state, xi, BitSource, BuiltinDensity,
    };

    #[test]
    fn flatten_examples() {
        let f = flatten_distribution(&[0.4, 0.3, 0.2, 0.1], 0.5).unwrap();
        assert_eq!(f.cut, 2);
        assert_eq!(f.r, vec![0.4, 0.3, 0.3, 0.0]);
        assert_eq!(f.xi_index, 3);
        assert!((f.mass - 1.0).abs() < 1e-15);

        let u = vec![1.0 / 16.0; 16];
        let f = flatten_distribution(&u, 0.3).unwrap();
        assert_eq!(f.xi_index, 16);
        assert_eq!(f.mass, 1.0);
        assert_eq!(f.p, u);

        let mut point = vec![0.0; 8];
        point[0] = 1.0;
        let f = flatten_distribution(&point, 0.1).unwrap();
        assert_eq!(f.cut, 2);
        assert_eq!(f.xi_index, 2);
        assert_eq!(f.r, point);
        assert_eq!(f.p, point);

        assert!(flatten_distribution(&[0.1, 0.9], 0.5).is_err());
    }

    #[test]
    fn flatten_matches_direct_scan() {
        // oracle: brute-force the largest ξ with Σ_{i≤ξ} r_i ≤ 1
        let mut rng = crate::random::seeded(8);
        for _ in 0..200 {
            let a = crate::random::random_descending(&mut rng, 32, 3.0);
            let f = flatten_distribution(&a, 0.4).unwrap();
            let cut = f.cut;
            let mut best = cut;
            for xi in cut..=32 {
                let s: f64 = a[..cut].iter().sum::<f64>() + (xi - cut) as f64 * a[cut - 1];
                if s <= 1.0 + 1e-12 {
                    best = xi;
                }
            }
            assert_eq!(f.xi_index, best);
            assert!(1.0 - a[cut - 1] <= f.mass + 1e-12 && f.mass <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn lower_bound_example() {
        let u = vec![1.0 / 1024.0; 1024];
        let c = entropy_lower_bound_check(&u, 0.5, 0.4).unwrap();
        assert!(c.applicable);
        assert!((c.top_sum - 1.0 / 32.0).abs() < 1e-15);
        assert!((c.bound - 1.117).abs() < 1e-3);
        assert_eq!(c.holds(), Some(true));

        let mut point = vec![0.0; 4];
        point[0] = 1.0;
        let c = entropy_lower_bound_check(&point, 0.5, 0.4).unwrap();
        assert!(!c.applicable);
        assert_eq!(c.holds(), None);
    }

    #[test]
    fn dominance() {
        let a = [0.4, 0.3, 0.2, 0.1];
        let f = flatten_distribution(&a, 0.5).unwrap();
        assert!(uniformity_dominance(&f.p, &a).unwrap());
        assert!(uniformity_dominance(&a, &a).unwrap());
        assert!(!uniformity_dominance(&[0.25; 4], &a).unwrap());
        assert!(uniformity_dominance(&[0.5, 0.5], &[0.5]).is_err());
    }

    #[test]
    fn two_block_examples() {
        let b = two_block_average(&[0.4, 0.3, 0.2, 0.1], 1).unwrap();
        for (x, y) in b.iter().zip([0.35, 0.35, 0.15, 0.15]) {
            assert!((x - y).abs() < 1e-15);
        }
        let u = vec![0.125; 8];
        assert_eq!(two_block_average(&u, 2).unwrap(), u);
        let point = vec![1.0, 0.0, 0.0, 0.0];
        assert_eq!(two_block_average(&point, 2).unwrap(), point);
        assert!(two_block_average(&point, 3).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let u = vec![1.0 / 64.0; 64];
        for m in 0..=6 {
            let c = entropy_upper_bound_check(&u, m).unwrap();
            assert!((c.entropy - 6.0).abs() < 1e-12);
            assert!((c.bound - (7.0 - m as f64 * (-(m as f64)).exp2())).abs() < 1e-12);
            assert!(c.holds(1e-9) && c.intermediate_holds(1e-9));
        }
        let mut point = vec![0.0; 8];
        point[0] = 1.0;
        let c = entropy_upper_bound_check(&point, 3).unwrap();
        assert_eq!((c.entropy, c.bound), (0.0, 1.0));
    }

    #[test]
    fn step_family_examples() {
        let t = step_family(&tracial_state(6).unwrap(), 6).unwrap();
        for n in 1..=6 {
            assert_eq!(t.value(n, 0.3).unwrap(), 1.0);
            assert_eq!(t.total(n).unwrap(), 1.0);
        }
        let p = step_family(&pure_bitstring_state(BitSource::Seeded { seed: 2 }, 6).unwrap(), 6).unwrap();
        assert_eq!(p.value(3, 0.1).unwrap(), 8.0);
        assert_eq!(p.value(3, 0.2).unwrap(), 0.0);
        assert!(p.value(3, 1.0).is_err());
    }

    #[test]
    fn tail_integrals() {
        let t = step_family(&tracial_state(8).unwrap(), 8).unwrap();
        let p = step_family(&pure_bitstring_state(BitSource::Seeded { seed: 2 }, 8).unwrap(), 8).unwrap();
        for n in 1..=8 {
            for m in 0..=n {
                assert_eq!(tail_integral(&t, n, m).unwrap(), (-(m as f64)).exp2());
                assert_eq!(tail_integral(&p, n, m).unwrap(), 1.0);
                assert!((t.prefix_integral(n, (-(m as f64)).exp2()).unwrap() - (-(m as f64)).exp2()).abs() < 1e-15);
            }
        }
        assert!(tail_integral(&t, 3, 4).is_err());
        let b = step_family(&block_state(9).unwrap(), 9).unwrap();
        for m in 1..=3 {
            assert!((tail_integral(&b, xi(m), m).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_integral_bridge() {
        let s = block_state(9).unwrap();
        let fam = step_family(&s, 9).unwrap();
        for n in 1..=9 {
            let rho = s.rho(n).unwrap();
            let spec = eigendecompose(&rho).unwrap();
            for m in 0..=n {
                let g = top_k_projector(&spec, 1 << (n - m)).unwrap();
                let w = projection_weight(&rho, &g).unwrap();
                assert!((w - tail_integral(&fam, n, m).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ui_examples() {
        let deltas = [0.5, 0.25, 0.1];
        let t = step_family(&tracial_state(10).unwrap(), 10).unwrap();
        let prof = ui_profile(&t, &deltas, 10).unwrap();
        let got: Vec<_> = prof.entries.iter().map(|e| e.modulus).collect();
        assert_eq!(got, vec![Some(1), Some(2), Some(4)]);
        assert_eq!(prof.entries[2].epsilon, Some(1.0 / 16.0));

        let p = step_family(&pure_bitstring_state(BitSource::Seeded { seed: 1 }, 10).unwrap(), 10).unwrap();
        let prof = ui_profile(&p, &[0.9, 0.5], 10).unwrap();
        assert!(prof.entries.iter().all(|e| e.modulus.is_none()));

        let f2 = step_family(
            &crate::states::measure_state(DensitySpec::builtin(BuiltinDensity::F2), 16).unwrap(),
            16,
        )
        .unwrap();
        let prof = ui_profile(&f2, &deltas, 16).unwrap();
        let got: Vec<_> = prof.entries.iter().map(|e| e.modulus).collect();
        assert_eq!(got, vec![Some(2), Some(5), Some(13)]);
        assert!(ui_profile(&f2, &[], 4).is_err());
    }

    #[test]
    fn prefix_beats_unions() {
        let mut rng = crate::random::seeded(21);
        let a = crate::random::random_descending(&mut rng, 16, 2.0);
        let fam = StepFamily::from_spectra(vec![
            vec![0.6, 0.4],
            vec![0.4, 0.3, 0.2, 0.1],
            vec![0.3, 0.2, 0.15, 0.1, 0.1, 0.1, 0.05, 0.0],
            a,
        ])
        .unwrap();
        let w = [(0.05, 0.2), (0.5, 0.55), (0.9, 0.95)];
        let mu = union_measure(&w);
        assert!((mu - 0.25).abs() < 1e-15);
        for n in 1..=4 {
            assert!(fam.integral_over(n, &w).unwrap() <= fam.prefix_integral(n, mu).unwrap() + 1e-15);
        }
    }

    #[test]
    fn merge() {
        assert_eq!(merge_intervals(&[(0.5, 0.7), (0.1, 0.2), (0.15, 0.3), (0.9, 0.8)]), vec![(0.1, 0.3), (0.5, 0.7)]);
    }

    #[test]
    fn gaps() {
        let u = DensitySpec::builtin(BuiltinDensity::Uniform);
        for n in [1, 5, 12] {
            assert!(riemann_entropy_gap(&u, n).unwrap().abs() < 1e-12);
        }
        let f2 = DensitySpec::builtin(BuiltinDensity::F2);
        let mut prev = riemann_entropy_gap(&f2, 4).unwrap();
        for n in 5..=14 {
            let g = riemann_entropy_gap(&f2, n).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }
}
