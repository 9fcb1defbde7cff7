//! Annual oracle update cycle.
//!
//! Operators submit internally consistent payloads; the lower median of the
//! submitted index values is published and a 72-hour challenge window opens
//! over `[opened_at, opened_at + 72h)`. A window becomes disputed when two
//! distinct operators flag the same issue code or a quorum pause motion
//! passes. Disputes must be corrected within 14 days, otherwise the cycle
//! lapses and the previous confirmed `g` stays in force. Only a cleanly
//! expired window can be executed, and only with executor approvals.
//!
//! No operation accepts an externally chosen `g`: the confirmed value is
//! either the published median or the prior confirmed value.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc;
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{canonical_digest, to_canonical_bytes, Digest};
use crate::debt_index::{compute_bdi, compute_weights, normalize, policy_factor, BaselineRef, IndexError};
use crate::decimal::Dec;
use crate::governance::{MotionKind, MotionResult};
use crate::ledger::{ApprovalPolicy, Ledger, LedgerError, SignerId};
use crate::policy::PolicyParams;
use crate::weo_ingest::{Bloc, BlocObservation, ObservationStatus, VintageId, WeoVintage};

pub const CHALLENGE_WINDOW_HOURS: i64 = 72;
pub const CORRECTION_DAYS: i64 = 14;
pub const DISPUTE_OPERATOR_THRESHOLD: usize = 2;
/// Cycles with fewer submissions are accepted but flagged in the report.
pub const RECOMMENDED_MIN_SUBMISSIONS: usize = 3;

pub type OperatorId = String;

pub fn challenge_window() -> Duration {
    Duration::hours(CHALLENGE_WINDOW_HOURS)
}

pub fn correction_period() -> Duration {
    Duration::days(CORRECTION_DAYS)
}

/// Source of protocol time.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Manually driven clock for deterministic runs.
#[derive(Debug)]
pub struct VirtualClock {
    now: Mutex<DateTime<Utc>>,
}

impl VirtualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        VirtualClock { now: Mutex::new(start) }
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.now.lock().expect("clock lock") = t;
    }

    pub fn advance(&self, d: Duration) {
        let mut g = self.now.lock().expect("clock lock");
        *g += d;
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.now.lock().expect("clock lock")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("operator {0} is not registered")]
    UnknownOperator(OperatorId),
    #[error("payload is inconsistent: {0}")]
    InconsistentPayload(String),
    #[error("operator {0} already submitted")]
    DuplicateSubmission(OperatorId),
    #[error("signature does not bind the payload to the operator")]
    BadSignature,
    #[error("submissions are closed once the window opens")]
    SubmissionsClosed,
    #[error("no submissions")]
    NoSubmissions,
    #[error("the cycle has already been published")]
    AlreadyPublished,
    #[error("the cycle has not been published")]
    NotPublished,
    #[error("challenge window is closed")]
    WindowClosed,
    #[error("motion did not meet quorum")]
    QuorumNotMet,
    #[error("motion met quorum but did not pass")]
    MotionRejected,
    #[error("expected a {expected:?} motion, got {got:?}")]
    WrongMotion { expected: MotionKind, got: MotionKind },
    #[error("motion is for cycle {got}, not {expected}")]
    WrongCycle { expected: i32, got: i32 },
    #[error("cycle is not executable in status {0:?}")]
    NotExecutable(Option<WindowStatus>),
    #[error("execution is halted by governance")]
    ExecutionHalted,
    #[error("executor requires {need} approvals, got {have}")]
    InsufficientApprovals { have: usize, need: u32 },
    #[error("cycle already concluded")]
    AlreadyConcluded,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorRegistry {
    operators: BTreeSet<OperatorId>,
}

impl OperatorRegistry {
    pub fn new(ids: impl IntoIterator<Item = OperatorId>) -> Self {
        OperatorRegistry { operators: ids.into_iter().collect() }
    }

    pub fn numbered(n: usize) -> Self {
        Self::new((1..=n).map(|i| format!("operator-{i}")))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.operators.contains(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &OperatorId> {
        self.operators.iter()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// Default 5-of-8 policy executor.
pub fn default_executor() -> ApprovalPolicy {
    ApprovalPolicy::numbered("executor", 5, 8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlocInput {
    pub debt_ratio: Dec,
    pub nominal_gdp: Dec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionPayload {
    pub blocs: BTreeMap<Bloc, BlocInput>,
    pub bdi: Dec,
    pub x_norm: Dec,
    pub g: Dec,
    pub vintage_id: VintageId,
    pub dataset_hash: Digest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recomputed {
    pub bdi: Dec,
    pub x_norm: Dec,
    pub x_excess: Dec,
    pub g: Dec,
}

impl SubmissionPayload {
    /// Build the payload an honest operator would publish.
    pub fn from_observations(
        observations: &[BlocObservation],
        vintage: &WeoVintage,
        baseline: &BaselineRef,
        lambda: Dec,
    ) -> Result<Self, IndexError> {
        let weights = compute_weights(observations)?;
        let bdi = compute_bdi(observations, &weights)?;
        let (x_norm, x_excess) = normalize(bdi, baseline)?;
        let g = policy_factor(x_excess, lambda)?;
        Ok(SubmissionPayload {
            blocs: observations.iter().map(|o| (o.bloc, BlocInput { debt_ratio: o.debt_ratio, nominal_gdp: o.nominal_gdp })).collect(),
            bdi,
            x_norm,
            g,
            vintage_id: vintage.vintage_id,
            dataset_hash: vintage.dataset_hash,
        })
    }

    pub fn observations(&self) -> Vec<BlocObservation> {
        let vintage = WeoVintage {
            vintage_id: self.vintage_id,
            publication_date: self.vintage_id.release_month_start(),
            dataset_hash: self.dataset_hash,
        };
        self.blocs
            .iter()
            .map(|(b, i)| BlocObservation {
                bloc: *b,
                debt_ratio: i.debt_ratio,
                nominal_gdp: i.nominal_gdp,
                source_vintage: vintage.clone(),
                status: ObservationStatus::Observed,
            })
            .collect()
    }

    pub fn recompute(&self, baseline: &BaselineRef, lambda: Dec) -> Result<Recomputed, IndexError> {
        let obs = self.observations();
        let weights = compute_weights(&obs)?;
        let bdi = compute_bdi(&obs, &weights)?;
        let (x_norm, x_excess) = normalize(bdi, baseline)?;
        let g = policy_factor(x_excess, lambda)?;
        Ok(Recomputed { bdi, x_norm, x_excess, g })
    }

    /// Reject payloads whose own inputs do not reproduce the submitted values.
    pub fn check_consistency(&self, baseline: &BaselineRef, lambda: Dec) -> Result<(), OracleError> {
        let r = self.recompute(baseline, lambda).map_err(|e| OracleError::InconsistentPayload(e.to_string()))?;
        for (name, got, want) in [("bdi", self.bdi, r.bdi), ("x", self.x_norm, r.x_norm), ("g", self.g, r.g)] {
            if got != want {
                return Err(OracleError::InconsistentPayload(format!("{name} is {got}, inputs give {want}")));
            }
        }
        Ok(())
    }

    pub fn content_hash(&self) -> Digest {
        canonical_digest(self).expect("payload encodes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSubmission {
    pub operator_id: OperatorId,
    pub payload: SubmissionPayload,
    pub timestamp: DateTime<Utc>,
    pub signature: Digest,
}

impl OracleSubmission {
    pub fn sign(operator_id: &str, payload: SubmissionPayload, timestamp: DateTime<Utc>) -> Self {
        let signature = Self::digest_for(operator_id, &payload, timestamp);
        OracleSubmission { operator_id: operator_id.to_string(), payload, timestamp, signature }
    }

    fn digest_for(operator_id: &str, payload: &SubmissionPayload, timestamp: DateTime<Utc>) -> Digest {
        let body = to_canonical_bytes(payload).expect("payload encodes");
        Digest::of_parts(&[operator_id.as_bytes(), &body, timestamp.to_rfc3339().as_bytes()])
    }

    pub fn verify_signature(&self) -> bool {
        Self::digest_for(&self.operator_id, &self.payload, self.timestamp) == self.signature
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub operator_id: OperatorId,
    pub issue_code: String,
    pub comment: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowStatus {
    Open,
    ExpiredClean,
    Disputed,
    PausedAwaitingCorrection,
    Executed,
    LapsedToLastConfirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeWindow {
    pub opened_at: DateTime<Utc>,
    pub duration_hours: i64,
    pub flags: Vec<Flag>,
    pub status: WindowStatus,
    pub disputed_at: Option<DateTime<Utc>>,
    pub correction_deadline: Option<DateTime<Utc>>,
    /// Content hash of the payload this window covers.
    pub payload_hash: Digest,
}

impl ChallengeWindow {
    fn open(opened_at: DateTime<Utc>, payload_hash: Digest) -> Self {
        ChallengeWindow {
            opened_at,
            duration_hours: CHALLENGE_WINDOW_HOURS,
            flags: Vec::new(),
            status: WindowStatus::Open,
            disputed_at: None,
            correction_deadline: None,
            payload_hash,
        }
    }

    pub fn closes_at(&self) -> DateTime<Utc> {
        self.opened_at + Duration::hours(self.duration_hours)
    }

    pub fn is_within(&self, now: DateTime<Utc>) -> bool {
        now >= self.opened_at && now < self.closes_at()
    }

    /// Issue codes flagged by at least two distinct operators.
    pub fn disputed_codes(&self) -> Vec<String> {
        let mut by_code: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for f in &self.flags {
            by_code.entry(&f.issue_code).or_default().insert(&f.operator_id);
        }
        by_code.into_iter().filter(|(_, ops)| ops.len() >= DISPUTE_OPERATOR_THRESHOLD).map(|(c, _)| c.to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LapseReason {
    UncorrectedDispute,
    NoPublication,
}

/// Result of [`CycleRecord::resolve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Unchanged,
    ExpiredClean,
    CorrectionOpened,
    CorrectionRejected(OracleError),
    Lapsed,
}

/// Inputs fixed for a cycle: the frozen baseline, λ and the operator set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleContext {
    pub baseline: BaselineRef,
    pub lambda: Dec,
    pub operators: OperatorRegistry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    cycle_year: i32,
    context: CycleContext,
    submissions: Vec<OracleSubmission>,
    corrections: Vec<OracleSubmission>,
    median_payload: Option<SubmissionPayload>,
    median_operator: Option<OperatorId>,
    window: Option<ChallengeWindow>,
    superseded_windows: Vec<ChallengeWindow>,
    prior_confirmed_g: Dec,
    confirmed_g: Option<Dec>,
    carried_forward: bool,
    lapse_reason: Option<LapseReason>,
    execution_halted: bool,
    executed_at: Option<DateTime<Utc>>,
}

/// Lower median of `values` under `Ord`.
pub fn lower_median<T: Ord + Clone>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort();
    Some(v[(v.len() - 1) / 2].clone())
}

impl CycleRecord {
    pub fn new(cycle_year: i32, context: CycleContext, prior_confirmed_g: Dec) -> Self {
        CycleRecord {
            cycle_year,
            context,
            submissions: Vec::new(),
            corrections: Vec::new(),
            median_payload: None,
            median_operator: None,
            window: None,
            superseded_windows: Vec::new(),
            prior_confirmed_g,
            confirmed_g: None,
            carried_forward: false,
            lapse_reason: None,
            execution_halted: false,
            executed_at: None,
        }
    }

    pub fn cycle_year(&self) -> i32 {
        self.cycle_year
    }

    pub fn context(&self) -> &CycleContext {
        &self.context
    }

    pub fn submissions(&self) -> &[OracleSubmission] {
        &self.submissions
    }

    pub fn corrections(&self) -> &[OracleSubmission] {
        &self.corrections
    }

    pub fn median_payload(&self) -> Option<&SubmissionPayload> {
        self.median_payload.as_ref()
    }

    pub fn median_operator(&self) -> Option<&str> {
        self.median_operator.as_deref()
    }

    pub fn window(&self) -> Option<&ChallengeWindow> {
        self.window.as_ref()
    }

    pub fn superseded_windows(&self) -> &[ChallengeWindow] {
        &self.superseded_windows
    }

    pub fn status(&self) -> Option<WindowStatus> {
        self.window.as_ref().map(|w| w.status)
    }

    pub fn prior_confirmed_g(&self) -> Dec {
        self.prior_confirmed_g
    }

    pub fn confirmed_g(&self) -> Option<Dec> {
        self.confirmed_g
    }

    /// The `g` in force after this cycle: confirmed if concluded, else the prior value.
    pub fn effective_g(&self) -> Dec {
        self.confirmed_g.unwrap_or(self.prior_confirmed_g)
    }

    pub fn carried_forward(&self) -> bool {
        self.carried_forward
    }

    pub fn lapse_reason(&self) -> Option<LapseReason> {
        self.lapse_reason
    }

    pub fn execution_halted(&self) -> bool {
        self.execution_halted
    }

    pub fn executed_at(&self) -> Option<DateTime<Utc>> {
        self.executed_at
    }

    pub fn low_participation(&self) -> bool {
        self.submissions.len() < RECOMMENDED_MIN_SUBMISSIONS
    }

    pub fn is_concluded(&self) -> bool {
        self.confirmed_g.is_some()
    }

    pub fn content_hash(&self) -> Digest {
        canonical_digest(self).expect("record encodes")
    }

    fn validate(&self, submission: &OracleSubmission) -> Result<(), OracleError> {
        if !self.context.operators.contains(&submission.operator_id) {
            return Err(OracleError::UnknownOperator(submission.operator_id.clone()));
        }
        if !submission.verify_signature() {
            return Err(OracleError::BadSignature);
        }
        submission.payload.check_consistency(&self.context.baseline, self.context.lambda)
    }

    pub fn submit(&mut self, submission: OracleSubmission) -> Result<(), OracleError> {
        if self.window.is_some() || self.is_concluded() {
            return Err(OracleError::SubmissionsClosed);
        }
        self.validate(&submission)?;
        if self.submissions.iter().any(|s| s.operator_id == submission.operator_id) {
            return Err(OracleError::DuplicateSubmission(submission.operator_id));
        }
        self.submissions.push(submission);
        Ok(())
    }

    /// Lower median by index value, ties broken by operator id. X and g are
    /// recomputed from the chosen submission's inputs.
    pub fn aggregate_median(&self) -> Result<(OperatorId, SubmissionPayload), OracleError> {
        let keys: Vec<(Dec, &OperatorId, usize)> =
            self.submissions.iter().enumerate().map(|(i, s)| (s.payload.bdi, &s.operator_id, i)).collect();
        let (_, _, idx) = lower_median(&keys).ok_or(OracleError::NoSubmissions)?;
        let chosen = &self.submissions[idx];
        let mut payload = chosen.payload.clone();
        let r = payload
            .recompute(&self.context.baseline, self.context.lambda)
            .map_err(|e| OracleError::InconsistentPayload(e.to_string()))?;
        payload.x_norm = r.x_norm;
        payload.g = r.g;
        Ok((chosen.operator_id.clone(), payload))
    }

    /// Publish the median and open the challenge window.
    pub fn publish(&mut self, clock: &dyn Clock) -> Result<&SubmissionPayload, OracleError> {
        if self.window.is_some() || self.is_concluded() {
            return Err(OracleError::AlreadyPublished);
        }
        let (op, payload) = self.aggregate_median()?;
        self.window = Some(ChallengeWindow::open(clock.now(), payload.content_hash()));
        self.median_operator = Some(op);
        Ok(self.median_payload.insert(payload))
    }

    fn live_window(&mut self, now: DateTime<Utc>) -> Result<&mut ChallengeWindow, OracleError> {
        let w = self.window.as_mut().ok_or(OracleError::NotPublished)?;
        if !w.is_within(now) || !matches!(w.status, WindowStatus::Open | WindowStatus::Disputed) {
            return Err(OracleError::WindowClosed);
        }
        Ok(w)
    }

    /// Record a flag. Two distinct operators on one issue code dispute the window.
    pub fn flag(&mut self, operator_id: &str, issue_code: &str, comment: &str, clock: &dyn Clock) -> Result<WindowStatus, OracleError> {
        if !self.context.operators.contains(operator_id) {
            return Err(OracleError::UnknownOperator(operator_id.to_string()));
        }
        let now = clock.now();
        let w = self.live_window(now)?;
        w.flags.push(Flag { operator_id: operator_id.into(), issue_code: issue_code.into(), comment: comment.into(), at: now });
        if w.status == WindowStatus::Open && !w.disputed_codes().is_empty() {
            w.status = WindowStatus::Disputed;
            w.disputed_at = Some(now);
            w.correction_deadline = Some(now + correction_period());
        }
        Ok(w.status)
    }

    fn check_motion(&self, motion: &MotionResult, expected: MotionKind) -> Result<(), OracleError> {
        if motion.kind != expected {
            return Err(OracleError::WrongMotion { expected, got: motion.kind });
        }
        if motion.cycle_year != self.cycle_year {
            return Err(OracleError::WrongCycle { expected: self.cycle_year, got: motion.cycle_year });
        }
        if !motion.quorum_met {
            return Err(OracleError::QuorumNotMet);
        }
        if !motion.passed {
            return Err(OracleError::MotionRejected);
        }
        Ok(())
    }

    /// A passed pause motion disputes the window and starts a 14-day correction period.
    pub fn pause_by_governance(&mut self, motion: &MotionResult, clock: &dyn Clock) -> Result<(), OracleError> {
        let now = clock.now();
        self.live_window(now)?;
        self.check_motion(motion, MotionKind::PauseExecution)?;
        let w = self.window.as_mut().expect("checked above");
        w.status = WindowStatus::PausedAwaitingCorrection;
        w.disputed_at.get_or_insert(now);
        w.correction_deadline = Some(now + correction_period());
        Ok(())
    }

    /// Advance time-driven transitions. Never fails; an invalid correction is reported and ignored.
    pub fn resolve(&mut self, clock: &dyn Clock, corrected: Option<OracleSubmission>) -> Resolution {
        let now = clock.now();
        let Some(w) = self.window.as_ref() else {
            return Resolution::Unchanged;
        };
        match w.status {
            WindowStatus::Open => {
                if now >= w.closes_at() {
                    self.window.as_mut().expect("present").status = WindowStatus::ExpiredClean;
                    Resolution::ExpiredClean
                } else {
                    Resolution::Unchanged
                }
            }
            WindowStatus::Disputed | WindowStatus::PausedAwaitingCorrection => {
                let deadline = w.correction_deadline.expect("disputed windows carry a deadline");
                match corrected {
                    Some(sub) if now <= deadline => {
                        if let Err(e) = self.validate(&sub) {
                            return Resolution::CorrectionRejected(e);
                        }
                        let old = self.window.take().expect("present");
                        self.superseded_windows.push(old);
                        self.window = Some(ChallengeWindow::open(now, sub.payload.content_hash()));
                        self.median_operator = Some(sub.operator_id.clone());
                        self.median_payload = Some(sub.payload.clone());
                        self.corrections.push(sub);
                        Resolution::CorrectionOpened
                    }
                    _ if now > deadline => {
                        self.window.as_mut().expect("present").status = WindowStatus::LapsedToLastConfirmed;
                        self.lapse(LapseReason::UncorrectedDispute);
                        Resolution::Lapsed
                    }
                    _ => Resolution::Unchanged,
                }
            }
            WindowStatus::ExpiredClean | WindowStatus::Executed | WindowStatus::LapsedToLastConfirmed => Resolution::Unchanged,
        }
    }

    fn lapse(&mut self, reason: LapseReason) {
        self.confirmed_g = Some(self.prior_confirmed_g);
        self.carried_forward = true;
        self.lapse_reason = Some(reason);
    }

    /// Conclude a cycle that never published an update.
    pub fn lapse_without_publication(&mut self) -> Result<(), OracleError> {
        if self.window.is_some() || self.is_concluded() {
            return Err(OracleError::AlreadyConcluded);
        }
        self.lapse(LapseReason::NoPublication);
        Ok(())
    }

    /// Execute a cleanly expired window: confirm the median `g` and start the
    /// ledger's annual cycle under it.
    pub fn execute(
        &mut self,
        ledger: &mut Ledger,
        params: &PolicyParams,
        executor: &ApprovalPolicy,
        approvals: &[SignerId],
        clock: &dyn Clock,
    ) -> Result<Dec, OracleError> {
        let now = clock.now();
        let status = self.status();
        let w = self.window.as_ref().ok_or(OracleError::NotExecutable(None))?;
        if w.status != WindowStatus::ExpiredClean || now < w.closes_at() {
            return Err(OracleError::NotExecutable(status));
        }
        if self.execution_halted {
            return Err(OracleError::ExecutionHalted);
        }
        if !executor.is_satisfied(approvals) {
            return Err(OracleError::InsufficientApprovals { have: executor.count_valid(approvals), need: executor.threshold() });
        }
        let g = self.median_payload.as_ref().expect("published").g;
        ledger.apply_cycle(params, g, self.cycle_year, approvals)?;
        self.confirmed_g = Some(g);
        self.executed_at = Some(now);
        self.window.as_mut().expect("present").status = WindowStatus::Executed;
        Ok(g)
    }

    /// Disable execution. Confirmed values are untouched.
    pub fn emergency_halt(&mut self, motion: &MotionResult) -> Result<(), OracleError> {
        self.check_motion(motion, MotionKind::EmergencyHalt)?;
        self.execution_halted = true;
        Ok(())
    }

    pub fn restore(&mut self, motion: &MotionResult) -> Result<(), OracleError> {
        self.check_motion(motion, MotionKind::RestoreExecution)?;
        self.execution_halted = false;
        Ok(())
    }
}

/// Ordered intake: concurrent senders, one consumer applying submissions in arrival order.
pub struct SubmissionIntake {
    tx: mpsc::Sender<OracleSubmission>,
    rx: mpsc::Receiver<OracleSubmission>,
}

impl Default for SubmissionIntake {
    fn default() -> Self {
        let (tx, rx) = mpsc::channel();
        SubmissionIntake { tx, rx }
    }
}

impl SubmissionIntake {
    pub fn sender(&self) -> mpsc::Sender<OracleSubmission> {
        self.tx.clone()
    }

    /// Apply everything queued so far to `record`.
    pub fn drain_into(&self, record: &mut CycleRecord) -> Vec<(OperatorId, Result<(), OracleError>)> {
        self.rx.try_iter().map(|s| (s.operator_id.clone(), record.submit(s))).collect()
    }
}
