//! Coherent state sequences `ρ = (ρ_n)_n`, their constructors, and
//! entropy-rate analytics on finite prefixes.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::caps::{diagonal_max_qubits, PRODUCT_MAX_QUBITS};
use crate::linalg::sum::neumaier_sum;
use crate::linalg::{von_neumann_entropy, DensityOperator};
use crate::quadrature;
use crate::random::seeded;

/// Default tolerance of the coherence check.
pub const COHERENCE_TOL: f64 = 1e-8;
/// Absolute tolerance for densities integrated numerically.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// ξ(m) = m + Σ_{i≤m} i, the qubit count of the m-th block boundary.
pub fn xi(m: usize) -> usize {
    m + m * (m + 1) / 2
}

/// Source of the bits of a pure basis-state sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BitSource {
    /// Finite explicit prefix, e.g. "0110".
    Explicit { bits: String },
    /// Repeats the pattern forever.
    Periodic { pattern: String },
    /// Seeded pseudo-random bits.
    Seeded { seed: u64 },
}

impl BitSource {
    pub fn bits(&self, count: usize) -> Result<Vec<bool>> {
        match self {
            BitSource::Explicit { bits } => {
                let parsed = parse_bits(bits)?;
                if parsed.len() < count {
                    return Err(Error::SourceExhausted {
                        requested: count,
                        available: parsed.len(),
                    });
                }
                Ok(parsed[..count].to_vec())
            }
            BitSource::Periodic { pattern } => {
                let parsed = parse_bits(pattern)?;
                if parsed.is_empty() {
                    return Err(Error::Invalid("empty periodic pattern".into()));
                }
                Ok(parsed.iter().copied().cycle().take(count).collect())
            }
            BitSource::Seeded { seed } => {
                let mut rng = seeded(*seed);
                Ok((0..count).map(|_| rng.random::<bool>()).collect())
            }
        }
    }
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Invalid(format!("bit string contains {other:?}"))),
        })
        .collect()
}

/// Densities on (0,1) shipped with closed-form antiderivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinDensity {
    /// f ≡ 1
    Uniform,
    /// f₁(x) = 2 / (x (1 − ln x)³), F₁(x) = (1 − ln x)^{-2}. Finite entropy integral.
    F1,
    /// f₂(x) = 1 / (x (1 − ln x)²), F₂(x) = (1 − ln x)^{-1}. Divergent entropy integral.
    F2,
}

impl BuiltinDensity {
    pub fn density(self, x: f64) -> f64 {
        match self {
            BuiltinDensity::Uniform => 1.0,
            BuiltinDensity::F1 => 2.0 / (x * (1.0 - x.ln()).powi(3)),
            BuiltinDensity::F2 => 1.0 / (x * (1.0 - x.ln()).powi(2)),
        }
    }

    /// Antiderivative with F(0) = 0.
    pub fn antiderivative(self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            BuiltinDensity::Uniform => x,
            BuiltinDensity::F1 => (1.0 - x.ln()).powi(-2),
            BuiltinDensity::F2 => 1.0 / (1.0 - x.ln()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinDensity::Uniform => "uniform",
            BuiltinDensity::F1 => "f1",
            BuiltinDensity::F2 => "f2",
        }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A probability density on (0,1), optionally with an antiderivative.
#[derive(Clone)]
pub struct DensitySpec {
    density: RealFn,
    antiderivative: Option<RealFn>,
    tolerance: f64,
    builtin: Option<BuiltinDensity>,
}

impl fmt::Debug for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensitySpec")
            .field("builtin", &self.builtin)
            .field("has_antiderivative", &self.antiderivative.is_some())
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl DensitySpec {
    /// Checks ∫₀¹ density = 1 within `tolerance`, through the
    /// antiderivative when one is given and by quadrature otherwise.
    pub fn new(
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
        tolerance: f64,
    ) -> Result<Self> {
        let spec = Self {
            density: Arc::new(density),
            antiderivative,
            tolerance,
            builtin: None,
        };
        spec.check_normalized()?;
        Ok(spec)
    }

    pub fn builtin(b: BuiltinDensity) -> Self {
        Self {
            density: Arc::new(move |x| b.density(x)),
            antiderivative: Some(Arc::new(move |x| b.antiderivative(x))),
            tolerance: QUADRATURE_TOL,
            builtin: Some(b),
        }
    }

    pub fn as_builtin(&self) -> Option<BuiltinDensity> {
        self.builtin
    }

    pub fn density_at(&self, x: f64) -> f64 {
        (self.density)(x)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn check_normalized(&self) -> Result<()> {
        let total = self.mass(0.0, 1.0)?;
        if (total - 1.0).abs() > self.tolerance.max(1e-15) {
            return Err(Error::Invalid(format!("density integrates to {total}, not 1")));
        }
        Ok(())
    }

    /// ∫_a^b density.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        match &self.antiderivative {
            Some(big_f) => Ok(big_f(b) - big_f(a)),
            None => {
                let f = self.density.clone();
                quadrature::integrate(&move |x| f(x), a, b, self.tolerance)
            }
        }
    }

    /// Masses α_σ of all 2^n dyadic cylinders, in basis-index order.
    pub fn cylinder_masses(&self, n: usize) -> Result<Vec<f64>> {
        let dim = 1usize << n;
        let h = (-(n as f64)).exp2();
        match &self.antiderivative {
            Some(big_f) => {
                let grid: Vec<f64> = (0..=dim).map(|k| big_f(k as f64 * h)).collect();
                Ok(grid.windows(2).map(|w| w[1] - w[0]).collect())
            }
            None => (0..dim)
                .map(|k| self.mass(k as f64 * h, (k + 1) as f64 * h))
                .collect(),
        }
    }
}

/// How a [`StateSequence`] produces `ρ_n`.
#[derive(Clone, Debug)]
pub enum StateKind {
    Tracial,
    PureBitstring { source: BitSource, bits: Vec<bool> },
    Block,
    TensorPower { factor: DensityOperator },
    Measure { density: DensitySpec },
    /// Masses at the deepest level; coarser levels are pairwise sums.
    CylinderMasses { masses: Vec<f64> },
    /// Explicit operators `ρ_1 … ρ_N`.
    Explicit { levels: Vec<DensityOperator> },
}

/// Truncation of a state `n ↦ ρ_n` to `1 ≤ n ≤ max_depth`.
#[derive(Clone, Debug)]
pub struct StateSequence {
    name: String,
    max_depth: usize,
    kind: StateKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationHint {
    Dense,
    Diagonal,
}

impl StateSequence {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn representation_hint(&self) -> RepresentationHint {
        match &self.kind {
            StateKind::TensorPower { factor } if !factor.is_diagonal() => RepresentationHint::Dense,
            StateKind::Explicit { levels } if levels.iter().any(|l| !l.is_diagonal()) => {
                RepresentationHint::Dense
            }
            _ => RepresentationHint::Diagonal,
        }
    }

    /// ρ_n for 1 ≤ n ≤ max_depth.
    pub fn rho(&self, n: usize) -> Result<DensityOperator> {
        if n == 0 || n > self.max_depth {
            return Err(Error::DepthExceeded {
                requested: n,
                available: self.max_depth,
            });
        }
        match &self.kind {
            StateKind::Tracial => {
                let half = DensityOperator::maximally_mixed(1)?;
                DensityOperator::product(vec![half; n])
            }
            StateKind::PureBitstring { bits, .. } => {
                let factors = bits[..n]
                    .iter()
                    .map(|&b| DensityOperator::basis_state(1, b as usize))
                    .collect::<Result<Vec<_>>>()?;
                DensityOperator::product(factors)
            }
            StateKind::Block => block_rho(n),
            StateKind::TensorPower { factor } => tensor_power_rho(factor, n),
            StateKind::Measure { density } => {
                DensityOperator::diagonal(density.cylinder_masses(n)?)
            }
            StateKind::CylinderMasses { masses } => {
                let depth = masses.len().trailing_zeros() as usize;
                let mut level = masses.clone();
                for _ in n..depth {
                    level = level.chunks_exact(2).map(|p| p[0] + p[1]).collect();
                }
                DensityOperator::diagonal(level)
            }
            StateKind::Explicit { levels } => Ok(levels[n - 1].clone()),
        }
    }
}

/// τ_n = 2^{-n} I_n.
pub fn tracial_state(max_depth: usize) -> Result<StateSequence> {
    check_depth(max_depth, PRODUCT_MAX_QUBITS)?;
    Ok(StateSequence {
        name: "tracial".into(),
        max_depth,
        kind: StateKind::Tracial,
    })
}

/// ρ_n = |Z↾n⟩⟨Z↾n| for the bits Z of `source`.
pub fn pure_bitstring_state(source: BitSource, max_depth: usize) -> Result<StateSequence> {
    check_depth(max_depth, PRODUCT_MAX_QUBITS)?;
    let bits = source.bits(max_depth)?;
    Ok(StateSequence {
        name: "pure".into(),
        max_depth,
        kind: StateKind::PureBitstring { source, bits },
    })
}

/// d_i = |0⟩⟨0| ⊗ 2^{-i} I_i on i + 1 qubits.
fn block_factor(i: usize) -> Result<DensityOperator> {
    let dim = 1usize << (i + 1);
    let mut probs = vec![0.0; dim];
    let w = (-(i as f64)).exp2();
    probs[..dim / 2].iter_mut().for_each(|p| *p = w);
    DensityOperator::diagonal(probs)
}

/// Largest m with ξ(m) < n.
pub fn block_index(n: usize) -> usize {
    let mut m = 0;
    while xi(m + 1) < n {
        m += 1;
    }
    m
}

fn block_rho(n: usize) -> Result<DensityOperator> {
    let m = block_index(n);
    let mut factors = (1..=m).map(block_factor).collect::<Result<Vec<_>>>()?;
    factors.push(block_factor(n - xi(m) - 1)?);
    DensityOperator::product(factors)
}

/// ρ_{ξ(m)} = ⊗_{i≤m} d_i, and ρ_n = ρ_{ξ(m)} ⊗ d_{n−ξ(m)−1} in between.
pub fn block_state(max_depth: usize) -> Result<StateSequence> {
    check_depth(max_depth, PRODUCT_MAX_QUBITS)?;
    Ok(StateSequence {
        name: "block".into(),
        max_depth,
        kind: StateKind::Block,
    })
}

fn tensor_power_rho(factor: &DensityOperator, z: usize) -> Result<DensityOperator> {
    let k = factor.qubits();
    let copies = z / k;
    let rest = z % k;
    let mut factors = vec![factor.clone(); copies];
    if rest > 0 {
        factors.push(factor.partial_trace_k(k - rest)?);
    }
    DensityOperator::product(factors)
}

/// ρ_{nk} = d^{⊗n}; intermediate depths are partial traces of the next multiple of k.
pub fn tensor_power_state(factor: DensityOperator, max_depth: usize) -> Result<StateSequence> {
    if factor.qubits() == 0 {
        return Err(Error::Precondition("factor must act on at least one qubit".into()));
    }
    check_depth(max_depth, PRODUCT_MAX_QUBITS)?;
    let factor = match factor.repr() {
        crate::linalg::Repr::Product(_) => factor.materialize()?,
        _ => factor,
    };
    Ok(StateSequence {
        name: "tensor_power".into(),
        max_depth,
        kind: StateKind::TensorPower { factor },
    })
}

/// Diagonal state with α_σ = ∫_{[σ]} f.
pub fn measure_state(density: DensitySpec, max_depth: usize) -> Result<StateSequence> {
    check_depth(max_depth, diagonal_max_qubits())?;
    let name = density
        .as_builtin()
        .map(|b| format!("measure_{}", b.name()))
        .unwrap_or_else(|| "measure".into());
    Ok(StateSequence {
        name,
        max_depth,
        kind: StateKind::Measure { density },
    })
}

/// Diagonal state ρ^ν from the cylinder masses ν([σ]) of a measure at
/// depth `log2(masses.len())`; shallower levels are marginals.
pub fn cylinder_measure_state(masses: Vec<f64>) -> Result<StateSequence> {
    let probe = DensityOperator::diagonal(masses)?;
    let max_depth = probe.qubits();
    if max_depth == 0 {
        return Err(Error::Invalid("need at least one qubit of masses".into()));
    }
    Ok(StateSequence {
        name: "measure".into(),
        max_depth,
        kind: StateKind::CylinderMasses {
            masses: probe.diagonal_probs()?,
        },
    })
}

/// State from explicit operators `ρ_1 … ρ_N`. Coherence is not enforced
/// here; see [`check_coherence`].
pub fn explicit_state(levels: Vec<DensityOperator>) -> Result<StateSequence> {
    for (i, l) in levels.iter().enumerate() {
        if l.qubits() != i + 1 {
            return Err(Error::DimensionMismatch {
                left: l.qubits(),
                right: i + 1,
            });
        }
    }
    if levels.is_empty() {
        return Err(Error::Invalid("no levels".into()));
    }
    Ok(StateSequence {
        name: "explicit".into(),
        max_depth: levels.len(),
        kind: StateKind::Explicit { levels },
    })
}

fn check_depth(max_depth: usize, cap: usize) -> Result<()> {
    if max_depth == 0 {
        return Err(Error::Invalid("max depth must be positive".into()));
    }
    if max_depth > cap {
        return Err(Error::CapExceeded {
            qubits: max_depth,
            cap,
            repr: "state depth",
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub tol: f64,
    /// (n, max |PT(ρ_n) − ρ_{n−1}|) for 2 ≤ n ≤ N.
    pub deviations: Vec<(usize, f64)>,
    /// First n whose deviation exceeds `tol`.
    pub first_failure: Option<usize>,
}

impl CoherenceReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().map(|d| d.1).fold(0.0, f64::max)
    }
}

/// Per-n deviation ‖PT(ρ_n) − ρ_{n−1}‖∞ for 2 ≤ n ≤ depth.
pub fn check_coherence(s: &StateSequence, depth: usize, tol: f64) -> Result<CoherenceReport> {
    check_within(s, depth)?;
    let mut deviations = Vec::with_capacity(depth.saturating_sub(1));
    let mut prev = s.rho(1)?;
    for n in 2..=depth {
        let cur = s.rho(n)?;
        let dev = cur.partial_trace_last()?.max_abs_diff(&prev)?;
        deviations.push((n, dev));
        prev = cur;
    }
    let first_failure = deviations.iter().find(|(_, d)| !(*d <= tol)).map(|(n, _)| *n);
    Ok(CoherenceReport {
        tol,
        deviations,
        first_failure,
    })
}

fn check_within(s: &StateSequence, depth: usize) -> Result<()> {
    if depth > s.max_depth() {
        return Err(Error::DepthExceeded {
            requested: depth,
            available: s.max_depth(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub n: usize,
    pub entropy: f64,
    pub rate: f64,
}

/// Initial-segment entropies H(ρ_n) for 1 ≤ n ≤ N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub entries: Vec<ProfileEntry>,
}

pub fn entropy_profile(s: &StateSequence, depth: usize) -> Result<EntropyProfile> {
    check_within(s, depth)?;
    let entries = (1..=depth)
        .map(|n| {
            let entropy = von_neumann_entropy(&s.rho(n)?)?;
            Ok(ProfileEntry {
                n,
                entropy,
                rate: entropy / n as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyProfile { entries })
}

/// Finite surrogate for liminf H(ρ_n)/n: the minimum rate over the
/// trailing window. Carries the window so it is never read as a limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub value: f64,
    pub window: usize,
    pub from_n: usize,
    pub to_n: usize,
}

pub fn entropy_rate_estimate(p: &EntropyProfile, window: usize) -> Result<RateEstimate> {
    if p.entries.is_empty() {
        return Err(Error::Invalid("empty entropy profile".into()));
    }
    if window == 0 || window > p.entries.len() {
        return Err(Error::OutOfRange {
            value: window,
            min: 1,
            max: p.entries.len(),
        });
    }
    let tail = &p.entries[p.entries.len() - window..];
    let value = tail.iter().map(|e| e.rate).fold(f64::INFINITY, f64::min);
    Ok(RateEstimate {
        value,
        window,
        from_n: tail[0].n,
        to_n: tail[tail.len() - 1].n,
    })
}

/// Mass check used by tests and reports: Σ α over a level.
pub fn level_mass(d: &DensityOperator) -> Result<f64> {
    Ok(neumaier_sum(d.diagonal_entries()?))
}
