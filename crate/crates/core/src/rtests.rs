//! Quantum Schnorr tests, quantum s-tests and null conditions; finite-depth
//! evaluators and the constructive test builders.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::caps::PRODUCT_MAX_QUBITS;
use crate::linalg::sum::CompensatedSum;
use crate::linalg::{
    eigendecompose, projection_weight, tau_weight, top_k_projector, top_k_sum,
    von_neumann_entropy, DensityOperator, Projection, Spectrum,
};
use crate::states::{xi, StateSequence};

/// Slack on the geometric budget τ(S^m) ≤ 2^{-m}.
pub const BUDGET_TOL: f64 = 1e-12;

/// One term `S^m` of a projection sequence, acting on `qubits` = n_m qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct TestTerm {
    pub m: usize,
    pub qubits: usize,
    pub projection: Projection,
}

impl TestTerm {
    pub fn new(m: usize, projection: Projection) -> Self {
        Self {
            m,
            qubits: projection.qubits(),
            projection,
        }
    }
}

/// Terms indexed by strictly increasing m ≥ 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProjectionSequence {
    terms: Vec<TestTerm>,
}

impl ProjectionSequence {
    pub fn new(terms: Vec<TestTerm>) -> Result<Self> {
        let mut last = 0;
        for t in &terms {
            if t.m <= last {
                return Err(Error::Invalid(format!(
                    "term indices must be strictly increasing from 1 (got {} after {last})",
                    t.m
                )));
            }
            if t.qubits != t.projection.qubits() {
                return Err(Error::DimensionMismatch {
                    left: t.qubits,
                    right: t.projection.qubits(),
                });
            }
            last = t.m;
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[TestTerm] {
        &self.terms
    }

    /// Largest index m present.
    pub fn max_index(&self) -> usize {
        self.terms.last().map_or(0, |t| t.m)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, m: usize) -> Option<&TestTerm> {
        self.terms
            .binary_search_by_key(&m, |t| t.m)
            .ok()
            .map(|i| &self.terms[i])
    }

    pub fn up_to(&self, depth: usize) -> impl Iterator<Item = &TestTerm> {
        self.terms.iter().take_while(move |t| t.m <= depth)
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.max_index() {
            return Err(Error::DepthExceeded {
                requested: depth,
                available: self.max_index(),
            });
        }
        Ok(())
    }
}

/// Evidence that Σ τ(S^m) is a computable real.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BudgetCertificate {
    /// τ(S^m) ≤ 2^{-m} for every m.
    Geometric,
    /// Approximations φ(j) of the total with |Σ τ − φ(j)| ≤ 2^{-j}.
    PartialSums { approximations: Vec<f64> },
    /// No finite certificate supplied.
    Unverified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QSTest {
    pub seq: ProjectionSequence,
    pub certificate: BudgetCertificate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct STest {
    pub s: f64,
    pub seq: ProjectionSequence,
    /// Σ_{m'≤m} 2^{-s n_m'} Tr(T^m'), one entry per term.
    pub weight_partial_sums: Vec<f64>,
}

impl STest {
    pub fn new(s: f64, seq: ProjectionSequence) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Precondition(format!("s = {s} outside [0, 1]")));
        }
        let mut acc = CompensatedSum::default();
        let weight_partial_sums = seq
            .terms()
            .iter()
            .map(|t| {
                acc.add(s_weight(s, t));
                acc.value()
            })
            .collect();
        Ok(Self {
            s,
            seq,
            weight_partial_sums,
        })
    }
}

fn s_weight(s: f64, t: &TestTerm) -> f64 {
    (-(s * t.qubits as f64)).exp2() * t.projection.rank() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct NullCondition {
    pub seq: ProjectionSequence,
}

impl NullCondition {
    /// The subsequence `(S^{k_j})_j` of a test at the witness indices `k_j`,
    /// renumbered from 1.
    pub fn from_witnesses(seq: &ProjectionSequence, witnesses: &[usize]) -> Result<Self> {
        let terms = witnesses
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let t = seq.get(k).ok_or(Error::OutOfRange {
                    value: k,
                    min: 1,
                    max: seq.max_index(),
                })?;
                Ok(TestTerm {
                    m: j + 1,
                    ..t.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            seq: ProjectionSequence::new(terms)?,
        })
    }
}

/// Anything carrying a projection sequence.
pub trait HasSequence {
    fn sequence(&self) -> &ProjectionSequence;
}

impl HasSequence for ProjectionSequence {
    fn sequence(&self) -> &ProjectionSequence {
        self
    }
}

impl HasSequence for QSTest {
    fn sequence(&self) -> &ProjectionSequence {
        &self.seq
    }
}

impl HasSequence for STest {
    fn sequence(&self) -> &ProjectionSequence {
        &self.seq
    }
}

impl HasSequence for NullCondition {
    fn sequence(&self) -> &ProjectionSequence {
        &self.seq
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub m: usize,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetStatus {
    Verified,
    Violated,
    Unverified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub depth: usize,
    /// (m, τ(S^m)) for m ≤ depth.
    pub taus: Vec<(usize, f64)>,
    pub status: BudgetStatus,
    pub violation: Option<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.status == BudgetStatus::Verified
    }
}

/// Checks the budget certificate of `t` on its first `depth` terms.
pub fn validate_qstest(t: &QSTest, depth: usize) -> Result<ValidationReport> {
    t.seq.check_depth(depth)?;
    let taus: Vec<(usize, f64)> = t
        .seq
        .up_to(depth)
        .map(|term| (term.m, tau_weight(&term.projection)))
        .collect();
    let violation = match &t.certificate {
        BudgetCertificate::Geometric => taus.iter().find_map(|&(m, tau)| {
            let bound = (-(m as f64)).exp2();
            (tau > bound + BUDGET_TOL).then(|| Violation {
                m,
                reason: format!("tau {tau} exceeds 2^-{m}"),
            })
        }),
        BudgetCertificate::PartialSums { approximations } => {
            check_partial_sums(&taus, approximations)
        }
        BudgetCertificate::Unverified => None,
    };
    let status = match (&t.certificate, &violation) {
        (_, Some(_)) => BudgetStatus::Violated,
        (BudgetCertificate::Unverified, None) => BudgetStatus::Unverified,
        _ => BudgetStatus::Verified,
    };
    Ok(ValidationReport {
        depth,
        taus,
        status,
        violation,
    })
}

/// Every observed partial sum must lie below φ(j) + 2^{-j}, and the
/// approximations must be mutually consistent.
fn check_partial_sums(taus: &[(usize, f64)], phi: &[f64]) -> Option<Violation> {
    for (i, a) in phi.iter().enumerate() {
        for (j, b) in phi.iter().enumerate().skip(i + 1) {
            let slack = (-((i + 1) as f64)).exp2() + (-((j + 1) as f64)).exp2();
            if (a - b).abs() > slack + BUDGET_TOL {
                return Some(Violation {
                    m: j + 1,
                    reason: format!("approximations {} and {} disagree beyond 2^-{} + 2^-{}", i + 1, j + 1, i + 1, j + 1),
                });
            }
        }
    }
    let ceiling = phi
        .iter()
        .enumerate()
        .map(|(j, a)| a + (-((j + 1) as f64)).exp2())
        .fold(f64::INFINITY, f64::min);
    let mut acc = CompensatedSum::default();
    for &(m, tau) in taus {
        acc.add(tau);
        if acc.value() > ceiling + BUDGET_TOL {
            return Some(Violation {
                m,
                reason: format!("partial sum {} exceeds certified total {ceiling}", acc.value()),
            });
        }
    }
    None
}

/// Per-term weights of a sequence against a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub m: usize,
    pub n: usize,
    pub tau: f64,
    pub rho: f64,
    pub witness: bool,
}

/// Finite-depth surrogate of "fails at order δ": the indices m ≤ depth
/// with ρ(S^m) > δ. Whether that is failure is left to the reader.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureReport {
    pub delta: f64,
    pub depth: usize,
    pub witnesses: Vec<usize>,
    pub rows: Vec<TermWeight>,
}

impl FailureReport {
    pub fn weights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rho).collect()
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.rho).reduce(f64::min)
    }
}

/// Witness report of `state` against the first `depth` terms of `t`.
pub fn evaluate_failure(
    state: &StateSequence,
    t: &impl HasSequence,
    delta: f64,
    depth: usize,
) -> Result<FailureReport> {
    let seq = t.sequence();
    seq.check_depth(depth)?;
    let mut rows = Vec::new();
    for term in seq.up_to(depth) {
        let rho_n = state.rho(term.qubits)?;
        let rho = projection_weight(&rho_n, &term.projection)?;
        rows.push(TermWeight {
            m: term.m,
            n: term.qubits,
            tau: tau_weight(&term.projection),
            rho,
            witness: rho > delta,
        });
    }
    Ok(FailureReport {
        delta,
        depth,
        witnesses: rows.iter().filter(|r| r.witness).map(|r| r.m).collect(),
        rows,
    })
}

/// Witness report of `state` against an s-test.
pub fn covered_by_s_test(
    state: &StateSequence,
    t: &STest,
    delta: f64,
    depth: usize,
) -> Result<FailureReport> {
    evaluate_failure(state, t, delta, depth)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SatisfactionReport {
    pub report: FailureReport,
    pub min_weight: f64,
    pub argmin: usize,
    /// min ρ(T^m) ≤ δ over the window.
    pub satisfied: bool,
}

/// Finite evidence for inf_m ρ(T^m) = 0.
pub fn satisfaction_check(
    state: &StateSequence,
    c: &NullCondition,
    delta: f64,
    depth: usize,
) -> Result<SatisfactionReport> {
    let report = evaluate_failure(state, c, delta, depth)?;
    let (argmin, min_weight) = report
        .rows
        .iter()
        .map(|r| (r.m, r.rho))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    if argmin == 0 {
        return Err(Error::Invalid("null condition has no terms in the window".into()));
    }
    Ok(SatisfactionReport {
        satisfied: min_weight <= delta,
        report,
        min_weight,
        argmin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendReport {
    pub taus: Vec<(usize, f64)>,
    pub first_half_max: f64,
    pub second_half_max: f64,
    /// The later half's peak is at most half the earlier half's.
    pub confirmed: bool,
}

/// Observed trend of τ(T^m) over m ≤ depth.
pub fn null_condition_trend(c: &NullCondition, depth: usize) -> Result<TrendReport> {
    c.seq.check_depth(depth)?;
    let taus: Vec<(usize, f64)> = c
        .seq
        .up_to(depth)
        .map(|t| (t.m, tau_weight(&t.projection)))
        .collect();
    if taus.len() < 2 {
        return Err(Error::Precondition("trend needs at least two terms".into()));
    }
    let mid = taus.len() / 2;
    let peak = |xs: &[(usize, f64)]| xs.iter().map(|x| x.1).fold(0.0, f64::max);
    let first_half_max = peak(&taus[..mid]);
    let second_half_max = peak(&taus[mid..]);
    Ok(TrendReport {
        confirmed: second_half_max <= 0.5 * first_half_max,
        taus,
        first_half_max,
        second_half_max,
    })
}

/// G^m = ⊗_{i≤m} |0⟩⟨0| ⊗ I_i on ξ(m) qubits.
pub fn block_state_test(m: usize) -> Result<TestTerm> {
    if m == 0 {
        return Err(Error::Invalid("m must be positive".into()));
    }
    if xi(m) > PRODUCT_MAX_QUBITS {
        return Err(Error::CapExceeded {
            qubits: xi(m),
            cap: PRODUCT_MAX_QUBITS,
            repr: "product",
        });
    }
    let factors = (1..=m)
        .map(|i| Projection::basis_subset(i + 1, (0..1usize << i).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(TestTerm::new(m, Projection::product(factors)?))
}

/// The geometric q-S test (G^m)_{m ≤ depth}.
pub fn block_qstest(depth: usize) -> Result<QSTest> {
    let terms = (1..=depth).map(block_state_test).collect::<Result<Vec<_>>>()?;
    Ok(QSTest {
        seq: ProjectionSequence::new(terms)?,
        certificate: BudgetCertificate::Geometric,
    })
}

/// T ⊗ I padded to the next multiple of `k` qubits.
pub fn pad_to_multiple(t: &Projection, k: usize) -> Result<Projection> {
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    let u = t.qubits();
    let target = u.div_ceil(k) * k;
    t.pad_identity(target - u)
}

/// ⌈2^{n p/q}⌉ computed exactly: the least k with k^q ≥ 2^{np}.
pub fn ceil_pow2_rational(n: usize, theta: Rational64) -> Result<u64> {
    let (p, q) = rational_parts(theta)?;
    let target = BigUint::from(1u8) << (n as u64 * p);
    let mut k = target.nth_root(q as u32);
    if k.pow(q as u32) < target {
        k += 1u8;
    }
    k.to_u64().ok_or_else(|| Error::Invalid(format!("rank 2^({n}*{theta}) overflows u64")))
}

/// 2^{n p/q} + 1 < 2^{e}, exactly.
fn pow2_rational_plus_one_below(n: usize, theta: Rational64, e: i64) -> Result<bool> {
    if e < 1 {
        return Ok(false);
    }
    let (p, q) = rational_parts(theta)?;
    let lhs = BigUint::from(1u8) << (n as u64 * p);
    let rhs = ((BigUint::from(1u8) << e as u64) - 1u8).pow(q as u32);
    Ok(lhs < rhs)
}

fn rational_parts(theta: Rational64) -> Result<(u64, u64)> {
    if *theta.numer() < 0 || *theta.denom() <= 0 {
        return Err(Error::Precondition(format!("exponent {theta} must be non-negative")));
    }
    let q = *theta.denom() as u64;
    if q > u32::MAX as u64 {
        return Err(Error::Precondition(format!("denominator of {theta} too large")));
    }
    Ok((*theta.numer() as u64, q))
}

fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Spectra of ρ_n, computed once per n.
struct SpectrumCache<'a> {
    state: &'a StateSequence,
    spectra: HashMap<usize, Spectrum>,
}

impl<'a> SpectrumCache<'a> {
    fn new(state: &'a StateSequence) -> Self {
        Self {
            state,
            spectra: HashMap::new(),
        }
    }

    fn get(&mut self, n: usize) -> Result<&Spectrum> {
        if !self.spectra.contains_key(&n) {
            let s = eigendecompose(&self.state.rho(n)?)?;
            self.spectra.insert(n, s);
        }
        Ok(&self.spectra[&n])
    }
}

/// Certificate data recorded for each emitted term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermCertificate {
    pub m: usize,
    pub n: usize,
    pub rank: u64,
    pub tau: f64,
    /// Budget the term must stay under: 2^{-m}, or 2^{-m} for the s-weight.
    pub bound: f64,
    /// The weight compared with `bound` (τ, or 2^{-s n} rank for s-tests).
    pub budget_weight: f64,
    /// ρ(G^m) at the term's own depth.
    pub rho: f64,
    pub holds: bool,
}

/// Builder output: the terms that were found plus the indices whose search
/// ran out of depth. Exhaustion is an outcome, not an error.
#[derive(Clone, Debug, PartialEq)]
pub struct BuildOutcome<T> {
    pub test: T,
    pub certificates: Vec<TermCertificate>,
    pub exhausted: Vec<usize>,
}

impl<T> BuildOutcome<T> {
    pub fn fully_built(&self) -> bool {
        self.exhausted.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
struct Search {
    terms: usize,
    n_cap: usize,
}

fn check_search(state: &StateSequence, terms: usize, n_cap: usize) -> Result<Search> {
    if n_cap > state.max_depth() {
        return Err(Error::DepthExceeded {
            requested: n_cap,
            available: state.max_depth(),
        });
    }
    if terms == 0 {
        return Err(Error::Invalid("at least one term required".into()));
    }
    Ok(Search { terms, n_cap })
}

/// Generic upward scan: for each m, the first n in [start(m), n_cap]
/// accepted by `pick`, where start is one past the previous emitted depth.
fn scan_builder(
    state: &StateSequence,
    search: Search,
    lower: impl Fn(usize) -> usize,
    mut pick: impl FnMut(&mut SpectrumCache, usize, usize) -> Result<Option<u64>>,
    budget: impl Fn(usize, usize, u64) -> (f64, f64),
) -> Result<(ProjectionSequence, Vec<TermCertificate>, Vec<usize>)> {
    let mut cache = SpectrumCache::new(state);
    let mut terms = Vec::new();
    let mut certs = Vec::new();
    let mut exhausted = Vec::new();
    let mut prev = 0;
    for m in 1..=search.terms {
        let start = (prev + 1).max(lower(m));
        let mut found = None;
        for n in start..=search.n_cap {
            if let Some(k) = pick(&mut cache, m, n)? {
                found = Some((n, k));
                break;
            }
        }
        let Some((n, k)) = found else {
            exhausted.push(m);
            continue;
        };
        let spectrum = cache.get(n)?;
        let projection = top_k_projector(spectrum, k as usize)?;
        let rho = projection_weight(&state.rho(n)?, &projection)?;
        let (budget_weight, bound) = budget(m, n, k);
        certs.push(TermCertificate {
            m,
            n,
            rank: k,
            tau: tau_weight(&projection),
            bound,
            budget_weight,
            rho,
            holds: budget_weight < bound,
        });
        terms.push(TestTerm::new(m, projection));
        prev = n;
    }
    Ok((ProjectionSequence::new(terms)?, certs, exhausted))
}

fn check_delta(delta: Rational64) -> Result<f64> {
    let d = rational_to_f64(delta);
    if !(0.0..1.0).contains(&d) {
        return Err(Error::Precondition(format!("delta {delta} outside [0, 1)")));
    }
    Ok(d)
}

/// Entropy-deficiency test: G^m = top-⌈2^{nθ}⌉ eigenprojector of ρ_n at the
/// first n with top-sum > δ and (2^{nθ}+1)/2^n < 2^{-m}.
pub fn build_entropy_deficiency_test(
    state: &StateSequence,
    theta: Rational64,
    delta: Rational64,
    terms: usize,
    n_cap: usize,
) -> Result<BuildOutcome<QSTest>> {
    let theta_f = rational_to_f64(theta);
    if !(theta_f > 0.0 && theta_f < 1.0) {
        return Err(Error::Precondition(format!("theta {theta} outside (0, 1)")));
    }
    let d = check_delta(delta)?;
    let search = check_search(state, terms, n_cap)?;
    let (seq, certificates, exhausted) = scan_builder(
        state,
        search,
        |_| 1,
        |cache, m, n| {
            if !pow2_rational_plus_one_below(n, theta, n as i64 - m as i64)? {
                return Ok(None);
            }
            let k = ceil_pow2_rational(n, theta)?;
            let s = top_k_sum(cache.get(n)?, k as usize)?;
            Ok((s > d).then_some(k))
        },
        |m, n, k| (k as f64 * (-(n as f64)).exp2(), (-(m as f64)).exp2()),
    )?;
    Ok(BuildOutcome {
        test: QSTest {
            seq,
            certificate: BudgetCertificate::Geometric,
        },
        certificates,
        exhausted,
    })
}

/// s-test: S^m = top-⌈2^{nt}⌉ eigenprojector at the first n with top-sum > δ
/// and (2^{nt}+1)/2^{ns} < 2^{-m}.
pub fn build_s_test(
    state: &StateSequence,
    s: f64,
    t: Rational64,
    delta: Rational64,
    terms: usize,
    n_cap: usize,
) -> Result<BuildOutcome<STest>> {
    let t_f = rational_to_f64(t);
    if !(0.0 <= t_f && t_f < s && s <= 1.0) {
        return Err(Error::Precondition(format!("need 0 <= t < s <= 1, got t = {t}, s = {s}")));
    }
    let d = check_delta(delta)?;
    let search = check_search(state, terms, n_cap)?;
    let (seq, certificates, exhausted) = scan_builder(
        state,
        search,
        |_| 1,
        |cache, m, n| {
            let lhs = (n as f64 * t_f).exp2() + 1.0;
            let rhs = (n as f64 * s - m as f64).exp2();
            if !(lhs < rhs) {
                return Ok(None);
            }
            let k = ceil_pow2_rational(n, t)?;
            let sum = top_k_sum(cache.get(n)?, k as usize)?;
            Ok((sum > d).then_some(k))
        },
        |m, n, k| {
            (
                (-(s * n as f64)).exp2() * k as f64,
                (-(m as f64)).exp2(),
            )
        },
    )?;
    Ok(BuildOutcome {
        test: STest::new(s, seq)?,
        certificates,
        exhausted,
    })
}

/// Test from a failure of uniform integrability: G^m = top-2^{j−m}
/// eigenprojector of ρ_j at the first j ≥ m whose top sum exceeds δ.
/// τ(G^m) = 2^{-m} exactly.
pub fn build_ui_test(
    state: &StateSequence,
    delta: f64,
    terms: usize,
    n_cap: usize,
) -> Result<BuildOutcome<QSTest>> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Precondition(format!("delta {delta} outside [0, 1)")));
    }
    let search = check_search(state, terms, n_cap)?;
    let (seq, certificates, exhausted) = scan_builder(
        state,
        search,
        |m| m,
        |cache, m, j| {
            let k = 1u64 << (j - m);
            let sum = top_k_sum(cache.get(j)?, k as usize)?;
            Ok((sum > delta).then_some(k))
        },
        // equality is the intended budget here
        |m, j, k| (k as f64 * (-(j as f64)).exp2(), (-(m as f64)).exp2() + BUDGET_TOL),
    )?;
    Ok(BuildOutcome {
        test: QSTest {
            seq,
            certificate: BudgetCertificate::Geometric,
        },
        certificates,
        exhausted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: usize,
    /// ⌊2^{nr}⌋, capped at the dimension.
    pub rank: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCurve {
    pub r: f64,
    pub entropy: f64,
    pub points: Vec<DecayPoint>,
    /// Least n₀ such that the curve strictly decreases on [n₀, N].
    pub decreasing_from: usize,
    /// The strictly decreasing tail covers at least the last quarter of the window.
    pub tail_decreasing: bool,
}

/// Largest Tr(S d^{⊗n}) over projections of rank ⌊2^{nr}⌋, for n ≤ N, by
/// exact enumeration of the multinomial spectrum of d^{⊗n}.
pub fn typical_subspace_decay(d: &DensityOperator, r: f64, depth: usize) -> Result<DecayCurve> {
    let entropy = von_neumann_entropy(d)?;
    if !(r >= 0.0 && r < entropy) {
        return Err(Error::Precondition(format!(
            "rate {r} must lie in [0, H(d)) = [0, {entropy})"
        )));
    }
    if depth == 0 {
        return Err(Error::Invalid("depth must be positive".into()));
    }
    let lambda: Vec<f64> = eigendecompose(d)?
        .values()
        .iter()
        .copied()
        .filter(|&x| x > 0.0)
        .collect();
    let dim = d.dim() as f64;
    let points = (1..=depth)
        .map(|n| {
            let rank = guarded_floor_pow2(n as f64 * r).min(dim.powi(n as i32));
            DecayPoint {
                n,
                rank,
                value: top_mass_of_power(&lambda, n, rank),
            }
        })
        .collect::<Vec<_>>();
    let mut decreasing_from = depth;
    while decreasing_from > 1 && points[decreasing_from - 2].value > points[decreasing_from - 1].value {
        decreasing_from -= 1;
    }
    Ok(DecayCurve {
        r,
        entropy,
        tail_decreasing: decreasing_from <= depth - depth / 4 && depth >= 2,
        decreasing_from,
        points,
    })
}

/// ⌊2^x⌋, treating x within 1e-9 of an integer as that integer.
fn guarded_floor_pow2(x: f64) -> f64 {
    let nearest = x.round();
    let x = if (x - nearest).abs() < 1e-9 { nearest } else { x };
    x.exp2().floor().max(1.0)
}

/// Sum of the `rank` largest eigenvalues of d^{⊗n} where d has positive
/// eigenvalues `lambda`. Each composition c of n gives eigenvalue Π λ_i^{c_i}
/// with multinomial multiplicity.
fn top_mass_of_power(lambda: &[f64], n: usize, rank: f64) -> f64 {
    let logs: Vec<f64> = lambda.iter().map(|x| x.ln()).collect();
    let mut classes: Vec<(f64, f64)> = Vec::new();
    let mut counts = vec![0usize; lambda.len()];
    compositions(n, 0, &mut counts, &mut |c| {
        let log_value: f64 = c.iter().zip(&logs).map(|(&k, l)| k as f64 * l).sum();
        classes.push((log_value, multinomial(n, c)));
    });
    classes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut remaining = rank;
    let mut acc = CompensatedSum::default();
    for (log_value, mult) in classes {
        if remaining <= 0.0 {
            break;
        }
        let take = mult.min(remaining);
        acc.add(take * log_value.exp());
        remaining -= take;
    }
    acc.value()
}

fn compositions(left: usize, i: usize, counts: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if i + 1 == counts.len() {
        counts[i] = left;
        visit(counts);
        return;
    }
    for k in 0..=left {
        counts[i] = k;
        compositions(left - k, i + 1, counts, visit);
    }
}

fn multinomial(n: usize, c: &[usize]) -> f64 {
    let mut out = 1.0;
    let mut placed = 0;
    for &k in c {
        placed += k;
        out *= binomial(placed, k);
    }
    debug_assert_eq!(placed, n);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
