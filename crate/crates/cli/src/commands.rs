use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;

use qrandlab::infotheory::{step_family, ui_profile};
use qrandlab::rtests::{
    build_entropy_deficiency_test, build_s_test, build_ui_test, evaluate_failure, validate_qstest,
    TermCertificate,
};
use qrandlab::serial::{AnyTest, StateDocument, TestDocument};
use qrandlab::states::{entropy_profile, entropy_rate_estimate, StateSequence};

use crate::error::{CliError, Status};
use crate::input::{parse_rational, parse_state, parse_test};
use crate::output::{emit, pretty, Cell, ExperimentSpec, Format, Table};

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    /// JSON state document (inline or path) or `builtin:name(k=v,...)`
    #[arg(long)]
    pub state: String,
    /// Depth N; defaults to the state's N_max
    #[arg(long)]
    pub depth: Option<usize>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl StateArgs {
    fn load(&self) -> Result<(StateDocument, StateSequence, usize), CliError> {
        let doc = parse_state(&self.state, self.depth)?;
        let state = doc.build()?;
        let depth = self.depth.unwrap_or(state.max_depth());
        Ok((doc, state, depth))
    }
}

pub fn entropy_profile_cmd(args: &StateArgs, window: usize) -> Result<Status, CliError> {
    let (doc, state, depth) = args.load()?;
    let prof = entropy_profile(&state, depth)?;
    let est = entropy_rate_estimate(&prof, window.clamp(1, depth.max(1)))?;
    let mut table = Table::new(&["n", "H", "H/n"]);
    for e in &prof.entries {
        table.push(vec![e.n.into(), e.entropy.into(), e.rate.into()]);
    }
    table.note(format!(
        "rate_estimate window={} n={}..{} value={:.16e}",
        est.window, est.from_n, est.to_n, est.value
    ));
    let spec = ExperimentSpec {
        state: Some(doc),
        ..ExperimentSpec::new("entropy-profile")
            .param("depth", depth)
            .param("window", window)
    };
    emit(&table.render(args.format.unwrap_or_default(), &spec.hash()), args.out.as_deref())?;
    Ok(Status::Pass)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builder {
    /// θ-deficiency q-S test
    Deficiency,
    /// Quantum s-test at rank exponent t
    S,
    /// Test from the failure of uniform integrability at δ
    Ui,
}

#[derive(Args, Debug, Clone)]
pub struct BuildArgs {
    #[arg(long, value_enum, default_value = "deficiency")]
    pub builder: Builder,
    /// Rank exponent of the deficiency builder (p/q or decimal)
    #[arg(long, default_value = "1/2")]
    pub theta: String,
    /// Witness threshold (p/q or decimal)
    #[arg(long, default_value = "1/2")]
    pub delta: String,
    /// Exponent s of the s-test
    #[arg(long, default_value_t = 0.9)]
    pub s: f64,
    /// Rank exponent t of the s-test (p/q or decimal)
    #[arg(long, default_value = "1/2")]
    pub t: String,
    /// Number of terms M
    #[arg(long, default_value_t = 8)]
    pub terms: usize,
}

pub fn build_test_cmd(args: &StateArgs, b: &BuildArgs) -> Result<Status, CliError> {
    let (doc, state, n_cap) = args.load()?;
    let delta = parse_rational(&b.delta)?;
    let (test, certificates, exhausted): (AnyTest, Vec<TermCertificate>, Vec<usize>) = match b.builder {
        Builder::Deficiency => {
            let o = build_entropy_deficiency_test(&state, parse_rational(&b.theta)?, delta, b.terms, n_cap)?;
            (AnyTest::Qs(o.test), o.certificates, o.exhausted)
        }
        Builder::S => {
            let o = build_s_test(&state, b.s, parse_rational(&b.t)?, delta, b.terms, n_cap)?;
            (AnyTest::S(o.test), o.certificates, o.exhausted)
        }
        Builder::Ui => {
            let d = *delta.numer() as f64 / *delta.denom() as f64;
            let o = build_ui_test(&state, d, b.terms, n_cap)?;
            (AnyTest::Qs(o.test), o.certificates, o.exhausted)
        }
    };
    let validation = match &test {
        AnyTest::Qs(q) if !q.seq.is_empty() => Some(validate_qstest(q, q.seq.max_index())?),
        _ => None,
    };
    let document = TestDocument::from_test(&test);
    let spec = ExperimentSpec {
        state: Some(doc),
        ..ExperimentSpec::new("build-test")
            .param("builder", b.builder)
            .param("theta", &b.theta)
            .param("delta", &b.delta)
            .param("s", b.s)
            .param("t", &b.t)
            .param("terms", b.terms)
            .param("n_cap", n_cap)
    };
    let hash = spec.hash();
    let text = match args.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "spec_hash": hash,
            "test": document,
            "certificates": certificates,
            "exhausted": exhausted,
            "validation": validation,
        })),
        Format::Csv => {
            let mut t = Table::new(&["m", "n_m", "rank", "tau", "bound", "budget_weight", "rho", "holds"]);
            for c in &certificates {
                t.push(vec![
                    c.m.into(),
                    c.n.into(),
                    Cell::Int(c.rank as i64),
                    c.tau.into(),
                    c.bound.into(),
                    c.budget_weight.into(),
                    c.rho.into(),
                    c.holds.into(),
                ]);
            }
            if !exhausted.is_empty() {
                let ms: Vec<String> = exhausted.iter().map(usize::to_string).collect();
                t.note(format!("search_exhausted m={}", ms.join(";")));
            }
            t.to_csv(&hash)
        }
    };
    emit(&text, args.out.as_deref())?;
    if !exhausted.is_empty() {
        eprintln!("search exhausted for m = {exhausted:?} below n_cap = {n_cap}");
        return Ok(Status::SearchExhausted);
    }
    if validation.as_ref().is_some_and(|v| !v.is_valid()) {
        return Ok(Status::ValidationFailed);
    }
    Ok(Status::Pass)
}

pub fn evaluate_cmd(args: &StateArgs, test: &str, delta: f64) -> Result<Status, CliError> {
    let doc = parse_state(&args.state, args.depth)?;
    let state = doc.build()?;
    let document = parse_test(test)?;
    let t = document.to_test()?;
    let depth = args.depth.unwrap_or(t.sequence().max_index());
    let report = evaluate_failure(&state, &t, delta, depth)?;
    let mut table = Table::new(&["m", "n_m", "tau", "rho", "witness"]);
    for r in &report.rows {
        table.push(vec![r.m.into(), r.n.into(), r.tau.into(), r.rho.into(), r.witness.into()]);
    }
    table.note(format!("witnesses={} of {}", report.witnesses.len(), report.rows.len()));
    let spec = ExperimentSpec {
        state: Some(doc),
        test: Some(document),
        ..ExperimentSpec::new("evaluate").param("delta", delta).param("depth", depth)
    };
    emit(&table.render(args.format.unwrap_or_default(), &spec.hash()), args.out.as_deref())?;
    Ok(Status::Pass)
}

pub fn ui_profile_cmd(args: &StateArgs, deltas: &[f64]) -> Result<Status, CliError> {
    let (doc, state, depth) = args.load()?;
    let fam = step_family(&state, depth)?;
    let prof = ui_profile(&fam, deltas, depth)?;
    let mut table = Table::new(&["delta", "modulus", "epsilon", "sup_tail", "verdict"]);
    for e in &prof.entries {
        let verdict = if e.modulus.is_some() { "modulus" } else { "none" };
        table.push(vec![
            e.delta.into(),
            e.modulus.into(),
            e.epsilon.into(),
            e.sup_tail.into(),
            verdict.into(),
        ]);
    }
    let spec = ExperimentSpec {
        state: Some(doc),
        ..ExperimentSpec::new("ui-profile")
            .param("depth", depth)
            .param("deltas", deltas)
    };
    emit(&table.render(args.format.unwrap_or_default(), &spec.hash()), args.out.as_deref())?;
    Ok(Status::Pass)
}
