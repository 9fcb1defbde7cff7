//! Policy reports and treasury summaries: assembly from a concluded cycle and
//! the ledger event log, hash commitment, and independent verification.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{from_canonical_bytes, to_canonical_bytes, CanonicalError, Digest};
use crate::debt_index::{gdp_weights, normalize, policy_factor, BaselineRef, Weights};
use crate::decimal::Dec;
use crate::governance::GovernanceEvent;
use crate::ledger::{Amount, BucketKind, EventLog, GuidelineFlag, LedgerEvent, LedgerOp, LedgerState, RelockRecord, SignerId};
use crate::oracle_protocol::{CycleRecord, Flag, LapseReason, OperatorId, WindowStatus};
use crate::policy::PolicyFactors;
use crate::weo_ingest::{Bloc, ObservationStatus, VintageId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("cycle {0} has not concluded")]
    IncompleteCycle(i32),
    #[error("event range {start}..={end} is outside the log")]
    BadRange { start: u64, end: u64 },
    #[error("report fails the schema: {0:?}")]
    Schema(Vec<String>),
    #[error("{0}")]
    Canonical(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<CanonicalError> for ReportError {
    fn from(e: CanonicalError) -> Self {
        ReportError::Canonical(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportKind {
    AnnualPolicy,
    MonthlyTreasury,
    QuarterlyTreasury,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportBloc {
    pub bloc: Bloc,
    pub debt_ratio: Dec,
    pub nominal_gdp: Dec,
    pub weight: Dec,
    pub status: ObservationStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportedIndex {
    pub bdi: Dec,
    pub bdi_ref: Dec,
    pub x_norm: Dec,
    pub x_excess: Dec,
    pub g: Dec,
    pub lambda: Dec,
    pub weights: Weights,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportedSubmission {
    pub operator_id: OperatorId,
    pub bdi: Dec,
    pub g: Dec,
    pub payload_hash: Digest,
    pub signature: Digest,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSection {
    pub submissions: Vec<ReportedSubmission>,
    pub corrections: Vec<ReportedSubmission>,
    pub median_operator: Option<OperatorId>,
    pub median_bdi: Option<Dec>,
    pub window_status: Option<WindowStatus>,
    pub flags: Vec<Flag>,
    pub superseded_windows: u32,
    pub low_participation: bool,
    pub execution_halted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    CycleApplied,
    CycleRenewed,
    EscrowRelease,
    Distribution,
    Relock,
    Vest,
    StakingEmission,
    FeeBurn,
    ReserveSpend,
}

impl ActionKind {
    /// Sign of the action's effect on circulating supply.
    pub fn circulating_sign(self) -> i8 {
        match self {
            ActionKind::EscrowRelease | ActionKind::Vest | ActionKind::StakingEmission | ActionKind::ReserveSpend => 1,
            ActionKind::FeeBurn | ActionKind::Relock => -1,
            ActionKind::CycleApplied | ActionKind::CycleRenewed | ActionKind::Distribution => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutedAction {
    pub event_seq: u64,
    pub kind: ActionKind,
    pub amount: Amount,
    pub signers: Vec<SignerId>,
    pub action_hash: Digest,
}

/// Ledger positions and supply figures bracketing the report period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerPeriod {
    pub start_seq: u64,
    pub end_seq: u64,
    pub circulating_start: Amount,
    pub circulating_end: Amount,
    pub burned_start: Amount,
    pub burned_end: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub schema_version: u32,
    pub kind: ReportKind,
    /// False for treasury summaries, which never trigger a policy update.
    pub policy_effective: bool,
    pub label: String,
    pub cycle_year: i32,
    pub debt_index: Option<ReportedIndex>,
    pub blocs: Vec<ReportBloc>,
    pub vintage_id: Option<VintageId>,
    pub dataset_hash: Option<Digest>,
    pub oracle: Option<OracleSection>,
    pub confirmed_g: Dec,
    pub carried_forward: bool,
    pub lapse_reason: Option<LapseReason>,
    pub fallback_note: Option<String>,
    pub factors: PolicyFactors,
    pub issuance_budget: Amount,
    pub governance: Vec<GovernanceEvent>,
    pub actions: Vec<ExecutedAction>,
    pub signers: BTreeMap<String, BTreeSet<SignerId>>,
    pub period: LedgerPeriod,
    pub balances: BTreeMap<BucketKind, Amount>,
    pub relocks: Vec<RelockRecord>,
    pub guideline_flags: Vec<GuidelineFlag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCommitment {
    pub content_hash: Digest,
    pub reference_link: String,
    pub ledger_anchor: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Discrepancy {
    Malformed(String),
    NotCanonical,
    HashMismatch { expected: Digest, actual: Digest },
    SchemaIncomplete(Vec<String>),
    RecomputeMismatch { field: String, reported: String, recomputed: String },
    SupplyReconciliationGap { reported_delta: i128, period_delta: i128 },
    BurnReconciliationGap { reported: u64, period: u64 },
    LedgerMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub discrepancies: Vec<Discrepancy>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Everything needed to assemble an annual report.
pub struct ReportInputs<'a> {
    pub record: &'a CycleRecord,
    pub log: &'a EventLog,
    pub start_seq: u64,
    pub end_seq: u64,
    pub state: &'a LedgerState,
    pub governance: &'a [GovernanceEvent],
    pub fallback_note: Option<String>,
    pub carried_forward_blocs: BTreeSet<Bloc>,
}

fn period(log: &EventLog, start: u64, end: u64) -> Result<LedgerPeriod, ReportError> {
    let events = log.events();
    if start > end || end as usize >= events.len() {
        return Err(ReportError::BadRange { start, end });
    }
    let (circulating_start, burned_start) = match start {
        0 => (Amount::ZERO, Amount::ZERO),
        s => (events[s as usize - 1].circulating_after, events[s as usize - 1].burned_after),
    };
    let last = &events[end as usize];
    Ok(LedgerPeriod {
        start_seq: start,
        end_seq: end,
        circulating_start,
        circulating_end: last.circulating_after,
        burned_start,
        burned_end: last.burned_after,
    })
}

fn action_of(e: &LedgerEvent) -> Option<ExecutedAction> {
    let (kind, amount) = match &e.op {
        LedgerOp::Genesis { .. } | LedgerOp::MonthClosed { .. } => return None,
        LedgerOp::CycleApplied { issuance_budget, .. } => (ActionKind::CycleApplied, *issuance_budget),
        LedgerOp::CycleRenewed { .. } => (ActionKind::CycleRenewed, Amount::ZERO),
        LedgerOp::Release { released, .. } => (ActionKind::EscrowRelease, *released),
        LedgerOp::Distribute { amount, .. } => (ActionKind::Distribution, *amount),
        LedgerOp::Relock { record } => (ActionKind::Relock, record.amount),
        LedgerOp::Vest { amount } => (ActionKind::Vest, *amount),
        LedgerOp::StakingEmission { amount, .. } => (ActionKind::StakingEmission, *amount),
        LedgerOp::FeeBurn { amount, .. } => (ActionKind::FeeBurn, *amount),
        LedgerOp::ReserveSpend { amount, .. } => (ActionKind::ReserveSpend, *amount),
    };
    Some(ExecutedAction { event_seq: e.seq, kind, amount, signers: e.approvals.clone(), action_hash: e.event_hash() })
}

fn actions_in(log: &EventLog, start: u64, end: u64) -> Vec<ExecutedAction> {
    log.range(start, end).iter().filter_map(action_of).collect()
}

fn signer_set(actions: &[ExecutedAction]) -> BTreeMap<String, BTreeSet<SignerId>> {
    let mut out: BTreeMap<String, BTreeSet<SignerId>> = BTreeMap::new();
    for a in actions.iter().filter(|a| !a.signers.is_empty()) {
        out.entry(format!("{:?}", a.kind)).or_default().extend(a.signers.iter().cloned());
    }
    out
}

fn reported_submission(s: &crate::oracle_protocol::OracleSubmission) -> ReportedSubmission {
    ReportedSubmission {
        operator_id: s.operator_id.clone(),
        bdi: s.payload.bdi,
        g: s.payload.g,
        payload_hash: s.payload.content_hash(),
        signature: s.signature,
        timestamp: s.timestamp.to_rfc3339(),
    }
}

pub fn build_report(inputs: &ReportInputs<'_>) -> Result<PolicyReport, ReportError> {
    let r = inputs.record;
    if !r.is_concluded() {
        return Err(ReportError::IncompleteCycle(r.cycle_year()));
    }
    let ctx = r.context();
    let (debt_index, blocs) = match r.median_payload() {
        Some(p) => {
            let rec = p.recompute(&ctx.baseline, ctx.lambda).map_err(|e| ReportError::Schema(vec![e.to_string()]))?;
            let weights = gdp_weights(p.blocs.iter().map(|(b, i)| (*b, i.nominal_gdp))).map_err(|e| ReportError::Schema(vec![e.to_string()]))?;
            let blocs = p
                .blocs
                .iter()
                .map(|(b, i)| ReportBloc {
                    bloc: *b,
                    debt_ratio: i.debt_ratio,
                    nominal_gdp: i.nominal_gdp,
                    weight: weights[b],
                    status: if inputs.carried_forward_blocs.contains(b) { ObservationStatus::CarriedForward } else { ObservationStatus::Observed },
                })
                .collect();
            let idx = ReportedIndex {
                bdi: p.bdi,
                bdi_ref: ctx.baseline.bdi_ref(),
                x_norm: p.x_norm,
                x_excess: rec.x_excess,
                g: p.g,
                lambda: ctx.lambda,
                weights,
            };
            (Some(idx), blocs)
        }
        None => (None, Vec::new()),
    };
    let oracle = OracleSection {
        submissions: r.submissions().iter().map(reported_submission).collect(),
        corrections: r.corrections().iter().map(reported_submission).collect(),
        median_operator: r.median_operator().map(str::to_string),
        median_bdi: r.median_payload().map(|p| p.bdi),
        window_status: r.status(),
        flags: r
            .superseded_windows()
            .iter()
            .chain(r.window())
            .flat_map(|w| w.flags.iter().cloned())
            .collect(),
        superseded_windows: r.superseded_windows().len() as u32,
        low_participation: r.low_participation(),
        execution_halted: r.execution_halted(),
    };
    let actions = actions_in(inputs.log, inputs.start_seq, inputs.end_seq);
    let report = PolicyReport {
        schema_version: SCHEMA_VERSION,
        kind: ReportKind::AnnualPolicy,
        policy_effective: true,
        label: r.cycle_year().to_string(),
        cycle_year: r.cycle_year(),
        debt_index,
        blocs,
        vintage_id: r.median_payload().map(|p| p.vintage_id),
        dataset_hash: r.median_payload().map(|p| p.dataset_hash),
        oracle: Some(oracle),
        confirmed_g: r.effective_g(),
        carried_forward: r.carried_forward(),
        lapse_reason: r.lapse_reason(),
        fallback_note: inputs.fallback_note.clone(),
        factors: inputs.state.annual_factors.clone(),
        issuance_budget: inputs.state.cycle.issuance_budget,
        governance: inputs.governance.to_vec(),
        signers: signer_set(&actions),
        actions,
        period: period(inputs.log, inputs.start_seq, inputs.end_seq)?,
        balances: inputs.state.buckets.iter().map(|(k, b)| (*k, b.balance)).collect(),
        relocks: inputs.state.relock_log.clone(),
        guideline_flags: inputs.state.guideline_flags.clone(),
    };
    let problems = schema_problems(&report);
    if !problems.is_empty() {
        return Err(ReportError::Schema(problems));
    }
    Ok(report)
}

/// Monthly or quarterly treasury summary over a log range. Never policy-effective.
pub fn build_treasury_summary(
    kind: ReportKind,
    label: &str,
    state: &LedgerState,
    log: &EventLog,
    start_seq: u64,
    end_seq: u64,
) -> Result<PolicyReport, ReportError> {
    assert!(kind != ReportKind::AnnualPolicy, "treasury summaries are monthly or quarterly");
    let actions = actions_in(log, start_seq, end_seq);
    let report = PolicyReport {
        schema_version: SCHEMA_VERSION,
        kind,
        policy_effective: false,
        label: label.to_string(),
        cycle_year: state.cycle.cycle_year,
        debt_index: None,
        blocs: Vec::new(),
        vintage_id: None,
        dataset_hash: None,
        oracle: None,
        confirmed_g: state.annual_factors.g_used,
        carried_forward: false,
        lapse_reason: None,
        fallback_note: None,
        factors: state.annual_factors.clone(),
        issuance_budget: state.cycle.issuance_budget,
        governance: Vec::new(),
        signers: signer_set(&actions),
        actions,
        period: period(log, start_seq, end_seq)?,
        balances: state.buckets.iter().map(|(k, b)| (*k, b.balance)).collect(),
        relocks: state.relock_log.clone(),
        guideline_flags: state.guideline_flags.clone(),
    };
    Ok(report)
}

/// Completeness check for the annual schema.
pub fn schema_problems(report: &PolicyReport) -> Vec<String> {
    let mut p = Vec::new();
    if report.schema_version != SCHEMA_VERSION {
        p.push(format!("unsupported schema version {}", report.schema_version));
    }
    if report.kind != ReportKind::AnnualPolicy {
        if report.policy_effective {
            p.push("treasury summaries cannot be policy-effective".into());
        }
        return p;
    }
    if !report.policy_effective {
        p.push("annual report must be policy-effective".into());
    }
    let Some(oracle) = &report.oracle else {
        p.push("missing oracle section".into());
        return p;
    };
    let published = oracle.window_status.is_some();
    if published {
        if report.debt_index.is_none() {
            p.push("missing debt index".into());
        }
        let present: BTreeSet<Bloc> = report.blocs.iter().map(|b| b.bloc).collect();
        if present.len() != Bloc::ALL.len() || report.blocs.len() != Bloc::ALL.len() {
            p.push("raw inputs must cover every bloc exactly once".into());
        }
        if report.vintage_id.is_none() || report.dataset_hash.is_none() {
            p.push("missing vintage id or dataset hash".into());
        }
        if oracle.submissions.is_empty() || oracle.median_operator.is_none() {
            p.push("missing oracle submissions or median".into());
        }
    }
    if report.carried_forward != report.lapse_reason.is_some() {
        p.push("carried_forward and lapse_reason disagree".into());
    }
    if oracle.window_status == Some(WindowStatus::Executed) {
        if report.carried_forward {
            p.push("executed cycle cannot be carried forward".into());
        }
        if !report.actions.iter().any(|a| a.kind == ActionKind::CycleApplied) {
            p.push("executed cycle must include its execution action".into());
        }
        if report.signers.is_empty() {
            p.push("missing signer set".into());
        }
    }
    if report.period.start_seq > report.period.end_seq {
        p.push("period range is inverted".into());
    }
    p
}

pub fn canonical_bytes(report: &PolicyReport) -> Result<Vec<u8>, ReportError> {
    Ok(to_canonical_bytes(report)?)
}

pub fn commit(report: &PolicyReport, reference_link: &str) -> Result<ReportCommitment, ReportError> {
    let bytes = canonical_bytes(report)?;
    Ok(ReportCommitment {
        content_hash: Digest::of(&bytes),
        reference_link: reference_link.to_string(),
        ledger_anchor: report.period.end_seq,
    })
}

fn recompute_problems(report: &PolicyReport) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    let Some(idx) = &report.debt_index else {
        return out;
    };
    let mismatch = |field: &str, reported: &dyn ToString, recomputed: &dyn ToString| Discrepancy::RecomputeMismatch {
        field: field.to_string(),
        reported: reported.to_string(),
        recomputed: recomputed.to_string(),
    };
    let weights = match gdp_weights(report.blocs.iter().map(|b| (b.bloc, b.nominal_gdp))) {
        Ok(w) => w,
        Err(e) => {
            out.push(mismatch("weights", &"<reported>", &e));
            return out;
        }
    };
    if weights != idx.weights {
        out.push(mismatch("weights", &format!("{:?}", idx.weights), &format!("{weights:?}")));
    }
    for b in &report.blocs {
        if weights.get(&b.bloc) != Some(&b.weight) {
            out.push(mismatch(&format!("blocs.{}.weight", b.bloc), &b.weight, &weights.get(&b.bloc).copied().unwrap_or_default()));
        }
    }
    let obs: Vec<_> = report.blocs.iter().map(|b| (b.bloc, b.debt_ratio, b.nominal_gdp)).collect();
    let Some(bdi) = exact_bdi(&obs, &weights) else {
        out.push(mismatch("bdi", &idx.bdi, &"undefined"));
        return out;
    };
    if bdi != idx.bdi {
        out.push(mismatch("bdi", &idx.bdi, &bdi));
    }
    let baseline = match BaselineRef::new(idx.bdi_ref, placeholder_vintage()) {
        Ok(mut b) => {
            b.freeze();
            b
        }
        Err(e) => {
            out.push(mismatch("bdi_ref", &idx.bdi_ref, &e));
            return out;
        }
    };
    let Ok((x_norm, x_excess)) = normalize(bdi, &baseline) else {
        out.push(mismatch("x_norm", &idx.x_norm, &"undefined"));
        return out;
    };
    if x_norm != idx.x_norm {
        out.push(mismatch("x_norm", &idx.x_norm, &x_norm));
    }
    if x_excess != idx.x_excess {
        out.push(mismatch("x_excess", &idx.x_excess, &x_excess));
    }
    match policy_factor(x_excess, idx.lambda) {
        Ok(g) if g == idx.g => {}
        Ok(g) => out.push(mismatch("g", &idx.g, &g)),
        Err(e) => out.push(mismatch("g", &idx.g, &e)),
    }
    if !report.carried_forward && report.oracle.as_ref().and_then(|o| o.window_status) == Some(WindowStatus::Executed) {
        if report.confirmed_g != idx.g {
            out.push(mismatch("confirmed_g", &report.confirmed_g, &idx.g));
        }
        if report.factors.g_used != idx.g {
            out.push(mismatch("factors.g_used", &report.factors.g_used, &idx.g));
        }
    }
    out
}

fn exact_bdi(obs: &[(Bloc, Dec, Dec)], weights: &Weights) -> Option<Dec> {
    use crate::weo_ingest::{BlocObservation, WeoVintage};
    let v: WeoVintage = placeholder_vintage();
    let o: Vec<BlocObservation> = obs
        .iter()
        .map(|(b, d, g)| BlocObservation { bloc: *b, debt_ratio: *d, nominal_gdp: *g, source_vintage: v.clone(), status: ObservationStatus::Observed })
        .collect();
    crate::debt_index::compute_bdi(&o, weights).ok()
}

fn placeholder_vintage() -> crate::weo_ingest::WeoVintage {
    let id = VintageId::new(2000, 1).expect("valid");
    crate::weo_ingest::WeoVintage { vintage_id: id, publication_date: id.release_month_start(), dataset_hash: Digest::default() }
}

fn reconciliation_problems(report: &PolicyReport) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    let reported_delta: i128 = report.actions.iter().map(|a| a.kind.circulating_sign() as i128 * a.amount.units() as i128).sum();
    let period_delta = report.period.circulating_end.units() as i128 - report.period.circulating_start.units() as i128;
    if reported_delta != period_delta {
        out.push(Discrepancy::SupplyReconciliationGap { reported_delta, period_delta });
    }
    let reported_burns: u64 = report.actions.iter().filter(|a| a.kind == ActionKind::FeeBurn).map(|a| a.amount.units()).sum();
    let period_burns = report.period.burned_end.units().saturating_sub(report.period.burned_start.units());
    if reported_burns != period_burns {
        out.push(Discrepancy::BurnReconciliationGap { reported: reported_burns, period: period_burns });
    }
    out
}

fn ledger_problems(report: &PolicyReport, log: &EventLog) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    if let Err(e) = log.verify_chain() {
        out.push(Discrepancy::LedgerMismatch(e.to_string()));
        return out;
    }
    match period(log, report.period.start_seq, report.period.end_seq) {
        Ok(p) if p == report.period => {}
        Ok(p) => out.push(Discrepancy::LedgerMismatch(format!("period {:?} does not match replayed {:?}", report.period, p))),
        Err(e) => {
            out.push(Discrepancy::LedgerMismatch(e.to_string()));
            return out;
        }
    }
    let replayed = actions_in(log, report.period.start_seq, report.period.end_seq);
    if replayed != report.actions {
        let missing = replayed.iter().filter(|a| !report.actions.contains(a)).count();
        let extra = report.actions.iter().filter(|a| !replayed.contains(a)).count();
        out.push(Discrepancy::LedgerMismatch(format!("{missing} logged actions missing, {extra} unlogged actions reported")));
    }
    out
}

/// Check hash, canonical form, schema, internal recomputation and supply
/// reconciliation; with a log, also reconcile against the replayed ledger.
pub fn verify(report_bytes: &[u8], commitment: &ReportCommitment, log: Option<&EventLog>) -> Verification {
    let mut discrepancies = Vec::new();
    let actual = Digest::of(report_bytes);
    if actual != commitment.content_hash {
        discrepancies.push(Discrepancy::HashMismatch { expected: commitment.content_hash, actual });
    }
    let report: PolicyReport = match from_canonical_bytes(report_bytes) {
        Ok(r) => r,
        Err(CanonicalError::NotCanonical) => {
            discrepancies.push(Discrepancy::NotCanonical);
            match serde_json::from_slice(report_bytes) {
                Ok(r) => r,
                Err(_) => return Verification { discrepancies },
            }
        }
        Err(e) => {
            discrepancies.push(Discrepancy::Malformed(e.to_string()));
            return Verification { discrepancies };
        }
    };
    if report.period.end_seq != commitment.ledger_anchor {
        discrepancies.push(Discrepancy::LedgerMismatch(format!(
            "anchor {} does not match period end {}",
            commitment.ledger_anchor, report.period.end_seq
        )));
    }
    let schema = schema_problems(&report);
    if !schema.is_empty() {
        discrepancies.push(Discrepancy::SchemaIncomplete(schema));
    }
    discrepancies.extend(recompute_problems(&report));
    discrepancies.extend(reconciliation_problems(&report));
    if let Some(log) = log {
        discrepancies.extend(ledger_problems(&report, log));
    }
    Verification { discrepancies }
}

pub fn report_file_name(label: &str) -> String {
    format!("report-{label}.kldr")
}

pub fn commit_file_name(label: &str) -> String {
    format!("report-{label}.commit")
}

/// Write `report-<label>.kldr` and `report-<label>.commit` into `dir`.
pub fn write_report(dir: &Path, report: &PolicyReport, commitment: &ReportCommitment) -> Result<(PathBuf, PathBuf), ReportError> {
    let io = |e: std::io::Error| ReportError::Io(e.to_string());
    let rp = dir.join(report_file_name(&report.label));
    let cp = dir.join(commit_file_name(&report.label));
    std::fs::write(&rp, canonical_bytes(report)?).map_err(io)?;
    std::fs::write(&cp, to_canonical_bytes(commitment)?).map_err(io)?;
    Ok((rp, cp))
}

pub fn read_commitment(path: &Path) -> Result<ReportCommitment, ReportError> {
    let bytes = std::fs::read(path).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| ReportError::Canonical(e.to_string()))
}
