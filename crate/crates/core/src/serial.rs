//! JSON documents for matrices, replayable state specs and tests.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    qubits_for_dim, validate_density, ComplexMatrix, DensityOperator, ProjRepr, Projection,
    Repr, DEFAULT_TOL,
};
use crate::rtests::{
    BudgetCertificate, NullCondition, ProjectionSequence, QSTest, STest, TestTerm,
};
use crate::states::{
    block_state, cylinder_measure_state, explicit_state, measure_state, pure_bitstring_state,
    tensor_power_state, tracial_state, BitSource, BuiltinDensity, DensitySpec, StateSequence,
};

/// A density operator as data. Dense entries are `[re, im]`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "repr", rename_all = "snake_case")]
pub enum MatrixSpec {
    Dense { qubits: usize, data: Vec<[f64; 2]> },
    Diag { qubits: usize, data: Vec<f64> },
    Product { qubits: usize, factors: Vec<MatrixSpec> },
}

impl MatrixSpec {
    pub fn from_density(d: &DensityOperator) -> Self {
        match d.repr() {
            Repr::Dense(m) => MatrixSpec::Dense {
                qubits: d.qubits(),
                data: m.data().iter().map(|z| [z.re, z.im]).collect(),
            },
            Repr::Diagonal(p) => MatrixSpec::Diag {
                qubits: d.qubits(),
                data: p.clone(),
            },
            Repr::Product(fs) => MatrixSpec::Product {
                qubits: d.qubits(),
                factors: fs.iter().map(MatrixSpec::from_density).collect(),
            },
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        let d = match self {
            MatrixSpec::Dense { data, .. } => {
                let dim = (data.len() as f64).sqrt().round() as usize;
                if dim * dim != data.len() {
                    return Err(Error::NotSquare {
                        rows: dim,
                        cols: data.len() / dim.max(1),
                    });
                }
                let entries = data.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                validate_density(&ComplexMatrix::new(dim, dim, entries)?, DEFAULT_TOL)?
            }
            MatrixSpec::Diag { data, .. } => DensityOperator::diagonal(data.clone())?,
            MatrixSpec::Product { factors, .. } => DensityOperator::product(
                factors.iter().map(|f| f.to_density()).collect::<Result<Vec<_>>>()?,
            )?,
        };
        if d.qubits() != self.qubits() {
            return Err(Error::DimensionMismatch {
                left: self.qubits(),
                right: d.qubits(),
            });
        }
        Ok(d)
    }

    pub fn qubits(&self) -> usize {
        match self {
            MatrixSpec::Dense { qubits, .. }
            | MatrixSpec::Diag { qubits, .. }
            | MatrixSpec::Product { qubits, .. } => *qubits,
        }
    }
}

/// Replayable description of a state: the constructor, not its matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constructor", rename_all = "snake_case")]
pub enum StateSpec {
    Tracial,
    Pure { source: BitSource },
    Block,
    TensorPower { factor: MatrixSpec },
    Measure { density: BuiltinDensity },
    /// Cylinder masses at the deepest level.
    Masses { masses: Vec<f64> },
    /// ρ_1 … ρ_N given explicitly.
    Explicit { levels: Vec<MatrixSpec> },
}

/// `{name, N_max, repr, spec}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub name: String,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub repr: String,
    pub spec: StateSpec,
}

impl StateDocument {
    pub fn new(spec: StateSpec, n_max: usize) -> Result<Self> {
        let state = build_state(&spec, n_max)?;
        Ok(Self {
            name: state.name().to_string(),
            n_max: state.max_depth(),
            repr: match state.representation_hint() {
                crate::states::RepresentationHint::Dense => "dense",
                crate::states::RepresentationHint::Diagonal => "diag",
            }
            .into(),
            spec,
        })
    }

    pub fn build(&self) -> Result<StateSequence> {
        let s = build_state(&self.spec, self.n_max)?;
        Ok(s.with_name(self.name.clone()))
    }
}

/// Instantiates `spec` up to depth `n_max`. Masses and explicit levels fix
/// their own depth, which must not be below `n_max`.
pub fn build_state(spec: &StateSpec, n_max: usize) -> Result<StateSequence> {
    let fixed = |s: StateSequence| -> Result<StateSequence> {
        if s.max_depth() < n_max {
            return Err(Error::DepthExceeded {
                requested: n_max,
                available: s.max_depth(),
            });
        }
        Ok(s)
    };
    match spec {
        StateSpec::Tracial => tracial_state(n_max),
        StateSpec::Pure { source } => pure_bitstring_state(source.clone(), n_max),
        StateSpec::Block => block_state(n_max),
        StateSpec::TensorPower { factor } => tensor_power_state(factor.to_density()?, n_max),
        StateSpec::Measure { density } => measure_state(DensitySpec::builtin(*density), n_max),
        StateSpec::Masses { masses } => fixed(cylinder_measure_state(masses.clone())?),
        StateSpec::Explicit { levels } => fixed(explicit_state(
            levels.iter().map(|l| l.to_density()).collect::<Result<Vec<_>>>()?,
        )?),
    }
}

/// A projection as data: basis-subset lists for diagonal projections,
/// dense matrices otherwise, and factored products.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "repr", rename_all = "snake_case")]
pub enum ProjectorSpec {
    Basis { qubits: usize, indices: Vec<usize> },
    Identity { qubits: usize },
    Dense { qubits: usize, rank: u64, data: Vec<[f64; 2]> },
    Product { qubits: usize, factors: Vec<ProjectorSpec> },
}

impl ProjectorSpec {
    pub fn from_projection(p: &Projection) -> Self {
        let qubits = p.qubits();
        match p.repr() {
            ProjRepr::BasisSubset(idx) => ProjectorSpec::Basis {
                qubits,
                indices: idx.clone(),
            },
            ProjRepr::Identity => ProjectorSpec::Identity { qubits },
            ProjRepr::Dense { matrix, rank } => ProjectorSpec::Dense {
                qubits,
                rank: *rank,
                data: matrix.data().iter().map(|z| [z.re, z.im]).collect(),
            },
            ProjRepr::Product(fs) => ProjectorSpec::Product {
                qubits,
                factors: fs.iter().map(ProjectorSpec::from_projection).collect(),
            },
        }
    }

    pub fn to_projection(&self) -> Result<Projection> {
        let p = match self {
            ProjectorSpec::Basis { qubits, indices } => {
                Projection::basis_subset(*qubits, indices.clone())?
            }
            ProjectorSpec::Identity { qubits } => Projection::identity(*qubits)?,
            ProjectorSpec::Dense { data, .. } => {
                let dim = 1usize << qubits_for_dim((data.len() as f64).sqrt().round() as usize)?;
                let entries = data.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                Projection::dense(ComplexMatrix::new(dim, dim, entries)?, 1e-8)?
            }
            ProjectorSpec::Product { factors, .. } => Projection::product(
                factors.iter().map(|f| f.to_projection()).collect::<Result<Vec<_>>>()?,
            )?,
        };
        let declared = self.qubits();
        if p.qubits() != declared {
            return Err(Error::DimensionMismatch {
                left: declared,
                right: p.qubits(),
            });
        }
        if let ProjectorSpec::Dense { rank, .. } = self {
            if p.rank() != *rank {
                return Err(Error::NotProjection(format!(
                    "declared rank {rank}, trace gives {}",
                    p.rank()
                )));
            }
        }
        Ok(p)
    }

    pub fn qubits(&self) -> usize {
        match self {
            ProjectorSpec::Basis { qubits, .. }
            | ProjectorSpec::Identity { qubits }
            | ProjectorSpec::Dense { qubits, .. }
            | ProjectorSpec::Product { qubits, .. } => *qubits,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Qs,
    S,
    Null,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDocument {
    pub m: usize,
    pub n_m: usize,
    pub projector: ProjectorSpec,
}

/// `{kind, terms: [{m, n_m, projector}], certificate}`; `s` only for s-tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestDocument {
    pub kind: TestKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub terms: Vec<TermDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<BudgetCertificate>,
}

/// Any of the three test objects.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTest {
    Qs(QSTest),
    S(STest),
    Null(NullCondition),
}

impl AnyTest {
    pub fn sequence(&self) -> &ProjectionSequence {
        match self {
            AnyTest::Qs(t) => &t.seq,
            AnyTest::S(t) => &t.seq,
            AnyTest::Null(t) => &t.seq,
        }
    }
}

impl crate::rtests::HasSequence for AnyTest {
    fn sequence(&self) -> &ProjectionSequence {
        AnyTest::sequence(self)
    }
}

fn term_documents(seq: &ProjectionSequence) -> Vec<TermDocument> {
    seq.terms()
        .iter()
        .map(|t| TermDocument {
            m: t.m,
            n_m: t.qubits,
            projector: ProjectorSpec::from_projection(&t.projection),
        })
        .collect()
}

impl TestDocument {
    pub fn from_test(t: &AnyTest) -> Self {
        match t {
            AnyTest::Qs(q) => Self {
                kind: TestKind::Qs,
                s: None,
                terms: term_documents(&q.seq),
                certificate: Some(q.certificate.clone()),
            },
            AnyTest::S(s) => Self {
                kind: TestKind::S,
                s: Some(s.s),
                terms: term_documents(&s.seq),
                certificate: None,
            },
            AnyTest::Null(c) => Self {
                kind: TestKind::Null,
                s: None,
                terms: term_documents(&c.seq),
                certificate: None,
            },
        }
    }

    pub fn to_test(&self) -> Result<AnyTest> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let projection = t.projector.to_projection()?;
                if projection.qubits() != t.n_m {
                    return Err(Error::DimensionMismatch {
                        left: t.n_m,
                        right: projection.qubits(),
                    });
                }
                Ok(TestTerm::new(t.m, projection))
            })
            .collect::<Result<Vec<_>>>()?;
        let seq = ProjectionSequence::new(terms)?;
        Ok(match self.kind {
            TestKind::Qs => AnyTest::Qs(QSTest {
                seq,
                certificate: self.certificate.clone().unwrap_or(BudgetCertificate::Unverified),
            }),
            TestKind::S => {
                let s = self
                    .s
                    .ok_or_else(|| Error::Invalid("s-test document without s".into()))?;
                AnyTest::S(STest::new(s, seq)?)
            }
            TestKind::Null => AnyTest::Null(NullCondition { seq }),
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("malformed JSON: {e}")))
}
