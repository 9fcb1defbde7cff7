use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use chrono::{Duration, Utc};
use serde_json::{json, Value};

use kld_core::canonical::to_canonical_bytes;
use kld_core::governance::{AccountKind, MotionKind, ParameterKey, VoteDirection};
use kld_core::ledger::{LedgerError, LedgerOp, UNITS_PER_KLD};
use kld_core::oracle_protocol::{CycleContext, OracleError, Resolution, WindowStatus, CHALLENGE_WINDOW_HOURS};
use kld_core::reporting::{self, ReportInputs, ReportKind};
use kld_core::simulator::{self, Scenario, SimError};
use kld_core::weo_ingest::{apply_missing_data_rule, parse_weo_snapshot, BlocObservation, ObservationStatus, ParsedSnapshot};
use kld_core::{Amount, BaselineRef, BucketKind, Clock, Config, CycleRecord, DebtIndexState, Dec, OracleSubmission, SubmissionPayload, VirtualClock};

use crate::output::Outcome;
use crate::store::{CycleMeta, Lock, Store};
use crate::{Cli, Command, CycleArgs, Direction, GovernCommand, HolderKind, IndexArgs, Motion, ReportArgs, SimulateArgs, StateCommand, SummaryKind, VerifyArgs};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type R<T> = Result<T, Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn policy<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure { code: 1, error: e.into() }
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::ScenarioInvalid(_) | SimError::Io(_) => input(e),
        other => policy(other),
    }
}

pub fn dispatch(cli: &Cli) -> R<Outcome> {
    let dir = cli.state_dir.as_path();
    match &cli.command {
        Command::Index(a) => index(dir, a),
        Command::Cycle(a) => cycle(dir, a),
        Command::Simulate(a) => simulate(a),
        Command::Report(a) => report(dir, a),
        Command::Verify(a) => verify(a),
        Command::Govern(g) => govern(dir, g),
        Command::State(s) => state(dir, s),
    }
}

fn kld_units(v: Dec, what: &str) -> R<Amount> {
    if v.is_negative() {
        return Err(input(anyhow!("{what} must be nonnegative")));
    }
    v.mul_floor_units(UNITS_PER_KLD).map(Amount::from_units).ok_or_else(|| input(anyhow!("{what} is too large")))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

// ---------------------------------------------------------------------------
// index

fn read_snapshot(path: &Path, vintage: &str) -> R<ParsedSnapshot> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(input)?;
    parse_weo_snapshot(&raw, vintage).with_context(|| format!("parsing {}", path.display())).map_err(input)
}

fn complete(parsed: &ParsedSnapshot, path: &Path) -> R<Vec<BlocObservation>> {
    parsed
        .complete()
        .ok_or_else(|| input(anyhow!("{} lacks series for {:?}", path.display(), parsed.missing())))
}

fn index(dir: &Path, a: &IndexArgs) -> R<Outcome> {
    let mut parsed = read_snapshot(&a.snapshot, &a.vintage)?;
    if let Some(d) = a.published {
        parsed.vintage = parsed.vintage.clone().with_publication_date(d);
    }
    let (baseline, default_lambda) = match (&a.baseline, &a.baseline_vintage) {
        (Some(p), Some(v)) => {
            let b = read_snapshot(p, v)?;
            let obs = complete(&b, p)?;
            (BaselineRef::from_genesis(&obs, b.vintage.clone()).map_err(input)?, Dec::ONE)
        }
        (Some(_), None) => return Err(input(anyhow!("--baseline needs --baseline-vintage"))),
        _ => {
            let store = Store::open(dir).map_err(input)?;
            (store.baseline.clone(), store.config.constitutional.lambda)
        }
    };
    let lambda = a.lambda.unwrap_or(default_lambda);
    let prior = match (&a.prior, &a.prior_vintage) {
        (Some(p), Some(v)) => complete(&read_snapshot(p, v)?, p)?,
        _ => Vec::new(),
    };
    let obs = apply_missing_data_rule(&parsed.entries, &prior).map_err(input)?;
    let cycle_year = parsed.vintage.vintage_id.year() + 1;
    let idx = DebtIndexState::compute(cycle_year, &obs, &baseline, lambda).map_err(input)?;
    let carried: Vec<String> = obs.iter().filter(|o| o.status == ObservationStatus::CarriedForward).map(|o| o.bloc.to_string()).collect();
    let mut body = json!({
        "vintage": parsed.vintage.vintage_id.to_string(),
        "dataset_hash": parsed.vintage.dataset_hash.to_string(),
        "cycle_year": cycle_year,
        "weights": to_value(&idx.weights),
        "bdi": idx.bdi.to_string(),
        "bdi_ref": baseline.bdi_ref().to_string(),
        "x_norm": idx.x_norm.to_string(),
        "x_excess": idx.x_excess.to_string(),
        "g": idx.g.to_string(),
        "lambda": lambda.to_string(),
        "carried_forward": carried,
    });
    if let Some(op) = &a.sign_as {
        let out = a.out.as_ref().expect("clap requires --out");
        let payload = SubmissionPayload::from_observations(&obs, &parsed.vintage, &baseline, lambda).map_err(input)?;
        let sub = OracleSubmission::sign(op, payload, a.at.unwrap_or_else(Utc::now));
        fs::write(out, to_canonical_bytes(&sub).map_err(input)?).map_err(input)?;
        body["submission"] = json!(out.display().to_string());
    }
    Ok(Outcome::ok(body))
}

// ---------------------------------------------------------------------------
// cycle

fn read_submission(path: &Path) -> R<OracleSubmission> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(input)?;
    serde_json::from_slice(&bytes).with_context(|| format!("decoding submission {}", path.display())).map_err(input)
}

fn submission_files(dir: &Path) -> R<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Event range covered by a cycle's report: from its cycle event to the end of the log.
fn write_cycle_report(store: &Store, record: &CycleRecord, meta: &CycleMeta) -> R<Value> {
    let start_seq = meta.start_seq.ok_or_else(|| policy(anyhow!("cycle {} never reached the ledger", record.cycle_year())))?;
    let log = store.ledger.log();
    let gov = store.governance.registry.log();
    let report = reporting::build_report(&ReportInputs {
        record,
        log,
        start_seq,
        end_seq: log.position() - 1,
        state: store.ledger.state(),
        governance: &gov[meta.governance_start.min(gov.len())..],
        fallback_note: meta.fallback_note.clone(),
        carried_forward_blocs: meta.carried_forward_blocs.clone(),
    })
    .map_err(policy)?;
    let commitment = reporting::commit(&report, &format!("kld://reports/{}", report.label)).map_err(policy)?;
    let (rp, cp) = reporting::write_report(&store.reports_dir(), &report, &commitment).map_err(input)?;
    Ok(json!({
        "report": rp.display().to_string(),
        "commit": cp.display().to_string(),
        "content_hash": commitment.content_hash.to_string(),
        "ledger_anchor": commitment.ledger_anchor,
    }))
}

/// Rewrite the outgoing cycle's report over its full period before a new cycle starts.
fn close_previous_cycle(store: &Store) -> R<Option<Value>> {
    let prev = store.ledger.state().cycle.cycle_year;
    match store.load_cycle(prev).map_err(input)? {
        Some((record, meta)) if record.is_concluded() && meta.start_seq.is_some() => write_cycle_report(store, &record, &meta).map(Some),
        _ => Ok(None),
    }
}

fn cycle(dir: &Path, a: &CycleArgs) -> R<Outcome> {
    let _lock = Lock::acquire(dir).map_err(input)?;
    let mut store = Store::open(dir).map_err(input)?;
    let year = a.year.unwrap_or(store.ledger.state().cycle.cycle_year + 1);
    let mut notes: Vec<String> = Vec::new();
    let mut rejected = BTreeMap::new();

    let (mut record, mut meta, clock) = match store.load_cycle(year).map_err(input)? {
        Some((r, _)) if r.is_concluded() => return Err(input(anyhow!("cycle {year} has already concluded"))),
        Some((r, m)) => {
            let opened = r.window().map(|w| w.opened_at).ok_or_else(|| input(anyhow!("cycle {year} record has no window")))?;
            (r, m, VirtualClock::new(opened))
        }
        None => {
            if year <= store.ledger.state().cycle.cycle_year {
                return Err(input(anyhow!("cycle {year} is not after the ledger's current cycle")));
            }
            let dir = a.submissions.as_ref().ok_or_else(|| input(anyhow!("a new cycle needs --submissions")))?;
            let ctx = CycleContext {
                baseline: store.baseline.clone(),
                lambda: store.config.constitutional.lambda,
                operators: store.config.operators(),
            };
            let mut r = CycleRecord::new(year, ctx, store.ledger.state().annual_factors.g_used);
            for f in submission_files(dir)? {
                let sub = read_submission(&f)?;
                let op = sub.operator_id.clone();
                if let Err(e) = r.submit(sub) {
                    rejected.insert(op, e.to_string());
                }
            }
            let meta = CycleMeta {
                start_seq: None,
                governance_start: store.governance.registry.log().len(),
                fallback_note: a.fallback_note.clone(),
                carried_forward_blocs: Default::default(),
            };
            let open = a.open_at.unwrap_or_else(Utc::now);
            let clock = VirtualClock::new(open);
            if r.submissions().is_empty() {
                r.lapse_without_publication().map_err(policy)?;
                notes.push("no valid submissions; cycle lapsed".into());
            } else {
                r.publish(&clock).map_err(policy)?;
                notes.push(format!("published median of {} submissions at {}", r.submissions().len(), open.to_rfc3339()));
                if r.low_participation() {
                    notes.push("fewer than the recommended number of submissions".into());
                }
            }
            (r, meta, clock)
        }
    };

    if !a.flags.is_empty() {
        clock.set(a.flag_at.unwrap_or_else(|| record.window().map(|w| w.opened_at).unwrap_or_else(|| clock.now())));
        for f in &a.flags {
            let (op, code) = f.split_once(':').ok_or_else(|| input(anyhow!("flag `{f}` is not OPERATOR:CODE")))?;
            match record.flag(op, code, "", &clock) {
                Ok(s) => notes.push(format!("{op} flagged {code}; window {s:?}")),
                Err(e) => notes.push(format!("flag by {op} refused: {e}")),
            }
        }
    }

    if let Some(w) = record.window() {
        let at = a.at.unwrap_or(w.opened_at + Duration::hours(CHALLENGE_WINDOW_HOURS));
        clock.set(at.max(clock.now()));
        let correction = a.correction.as_deref().map(read_submission).transpose()?;
        match record.resolve(&clock, correction) {
            Resolution::CorrectionRejected(e) => notes.push(format!("correction rejected: {e}")),
            Resolution::CorrectionOpened => notes.push("correction accepted; new challenge window opened".into()),
            Resolution::Lapsed => notes.push("correction deadline passed; carrying the last confirmed g".into()),
            Resolution::ExpiredClean => notes.push("challenge window expired without a valid dispute".into()),
            Resolution::Unchanged => {}
        }
    }

    let mut code = 0;
    let mut previous_report = None;
    let status = record.status();
    let ready = status == Some(WindowStatus::ExpiredClean);
    let lapsed = record.carried_forward() && meta.start_seq.is_none();
    if ready || lapsed {
        previous_report = close_previous_cycle(&store)?;
        let seq = store.ledger.log().position();
        if ready {
            let executor = store.config.executor().map_err(input)?;
            let params = store.config.governable.params.clone();
            match record.execute(&mut store.ledger, &params, &executor, &a.approvals, &clock) {
                Ok(g) => {
                    notes.push(format!("executed g = {g}"));
                    meta.start_seq = Some(seq);
                }
                Err(e @ (OracleError::InsufficientApprovals { .. } | OracleError::ExecutionHalted)) => {
                    notes.push(format!("not executed: {e}"));
                    code = 1;
                }
                Err(e) => return Err(policy(e)),
            }
        } else {
            store.ledger.renew_cycle(year).map_err(policy)?;
            meta.start_seq = Some(seq);
        }
    } else if matches!(status, Some(WindowStatus::Disputed | WindowStatus::PausedAwaitingCorrection)) {
        code = 1;
    }

    store.save().map_err(input)?;
    store.save_cycle(&record, &meta).map_err(input)?;
    let report = if record.is_concluded() && meta.start_seq.is_some() { Some(write_cycle_report(&store, &record, &meta)?) } else { None };
    let w = record.window();
    Ok(Outcome::with_code(
        json!({
            "cycle_year": year,
            "status": status.map(|s| format!("{s:?}")).unwrap_or_else(|| "NoPublication".into()),
            "window_status": record.status().map(|s| format!("{s:?}")),
            "window_closes": w.map(|w| w.closes_at().to_rfc3339()),
            "correction_deadline": w.and_then(|w| w.correction_deadline).map(|d| d.to_rfc3339()),
            "median_operator": record.median_operator(),
            "median_bdi": record.median_payload().map(|p| p.bdi.to_string()),
            "effective_g": record.effective_g().to_string(),
            "carried_forward": record.carried_forward(),
            "rejected_submissions": rejected,
            "notes": notes,
            "state_hash": store.ledger.state().state_hash().map_err(policy)?.to_string(),
            "report": report,
            "previous_report": previous_report,
        }),
        code,
    ))
}

// ---------------------------------------------------------------------------
// simulate

fn simulate(a: &SimulateArgs) -> R<Outcome> {
    let scenario = Scenario::load(&a.scenario).map_err(sim_failure)?;
    let run = simulator::run_full(&scenario).map_err(sim_failure)?;
    let t = &run.trace;
    let cycles: Vec<Value> = t
        .cycles
        .iter()
        .map(|c| {
            json!({
                "year": c.cycle_year,
                "g": c.g.to_string(),
                "status": c.status.map(|s| format!("{s:?}")),
                "carried_forward": c.carried_forward,
                "escrow_cap": c.factors.escrow_cap.to_kld_string(),
                "burn_fraction": c.factors.burn_fraction.to_string(),
                "issuance_budget": c.issuance_budget.to_kld_string(),
            })
        })
        .collect();
    let last = t.months.last().expect("at least one month");
    let mut body = json!({
        "scenario": t.scenario,
        "seed": t.seed,
        "months": t.months.len(),
        "final_circulating": last.circulating.to_kld_string(),
        "final_burned": last.burned.to_kld_string(),
        "final_state_hash": t.final_state_hash.to_string(),
        "trace_digest": t.digest().to_string(),
        "reports": t.commitments.len(),
        "cycles": cycles,
    });
    if let Some(out) = &a.out {
        fs::create_dir_all(out.join("reports")).map_err(input)?;
        fs::write(out.join("trace.csv"), t.months_csv().map_err(sim_failure)?).map_err(input)?;
        fs::write(out.join("trace.json"), t.canonical_json().map_err(sim_failure)?).map_err(input)?;
        run.ledger.log().append_to_file(&out.join("events.jsonl"), 0).map_err(input)?;
        for (r, c) in run.reports.iter().zip(&t.commitments) {
            reporting::write_report(&out.join("reports"), r, c).map_err(input)?;
        }
        body["out"] = json!(out.display().to_string());
    }
    if let Some(other) = &a.compare {
        let b = simulator::run(&Scenario::load(other).map_err(sim_failure)?).map_err(sim_failure)?;
        let diff = simulator::compare(t, &b).map_err(sim_failure)?;
        body["diff"] = json!({
            "empty": diff.is_empty(),
            "month_fields": diff.months.len(),
            "cycle_fields": diff.cycles.len(),
            "final_state_differs": diff.final_state_differs,
            "first": diff.months.first().map(to_value),
        });
    }
    Ok(Outcome::ok(body))
}

// ---------------------------------------------------------------------------
// report

fn month_range(store: &Store, first: u32, last: u32) -> R<(u64, u64)> {
    let events = store.ledger.log().events();
    let closed = |m: u32| events.iter().find(|e| matches!(e.op, LedgerOp::MonthClosed { month_index } if month_index == m)).map(|e| e.seq);
    let end = closed(last).ok_or_else(|| input(anyhow!("month {last} has not closed")))?;
    let start = match first {
        0 => 0,
        m => closed(m - 1).ok_or_else(|| input(anyhow!("month {} has not closed", m - 1)))? + 1,
    };
    Ok((start, end))
}

fn report(dir: &Path, a: &ReportArgs) -> R<Outcome> {
    let _lock = Lock::acquire(dir).map_err(input)?;
    let store = Store::open(dir).map_err(input)?;
    if let Some(kind) = a.treasury {
        let n = a.period.ok_or_else(|| input(anyhow!("--treasury needs --period")))?;
        let (kind, label, first, last) = match kind {
            SummaryKind::Monthly => (ReportKind::MonthlyTreasury, format!("month-{n}"), n, n),
            SummaryKind::Quarterly => (ReportKind::QuarterlyTreasury, format!("quarter-{n}"), n * 3, n * 3 + 2),
        };
        let (start, end) = month_range(&store, first, last)?;
        let r = reporting::build_treasury_summary(kind, &label, store.ledger.state(), store.ledger.log(), start, end).map_err(policy)?;
        let link = a.link.clone().unwrap_or_else(|| format!("kld://reports/{label}"));
        let c = reporting::commit(&r, &link).map_err(policy)?;
        let (rp, cp) = reporting::write_report(&store.reports_dir(), &r, &c).map_err(input)?;
        return Ok(Outcome::ok(json!({
            "report": rp.display().to_string(),
            "commit": cp.display().to_string(),
            "content_hash": c.content_hash.to_string(),
            "ledger_anchor": c.ledger_anchor,
        })));
    }
    let current = store.ledger.state().cycle.cycle_year;
    let year = a.year.unwrap_or(current);
    if year != current {
        return Err(input(anyhow!("cycle {year} is closed; its final report was written when cycle {} began", year + 1)));
    }
    let (record, meta) = store.load_cycle(year).map_err(input)?.ok_or_else(|| input(anyhow!("no oracle record for cycle {year}")))?;
    Ok(Outcome::ok(write_cycle_report(&store, &record, &meta)?))
}

// ---------------------------------------------------------------------------
// verify

fn verify(a: &VerifyArgs) -> R<Outcome> {
    let bytes = fs::read(&a.report).with_context(|| format!("reading {}", a.report.display())).map_err(input)?;
    let commit_path = a.commit.clone().unwrap_or_else(|| a.report.with_extension("commit"));
    let commitment = reporting::read_commitment(&commit_path).map_err(input)?;
    let log = match &a.events {
        Some(p) if p.exists() => Some(kld_core::EventLog::load(p).map_err(input)?),
        _ => None,
    };
    let v = reporting::verify(&bytes, &commitment, log.as_ref());
    let problems: Vec<String> = v.discrepancies.iter().map(|d| format!("{d:?}")).collect();
    let code = if !v.ok() {
        1
    } else if log.is_none() {
        2
    } else {
        0
    };
    let reconciliation = if log.is_some() { "checked against event log" } else { "skipped: no event log" };
    Ok(Outcome::with_code(json!({ "ok": v.ok(), "discrepancies": problems, "ledger_reconciliation": reconciliation }), code))
}

// ---------------------------------------------------------------------------
// govern

fn direction(d: Direction) -> VoteDirection {
    match d {
        Direction::Yes => VoteDirection::Yes,
        Direction::No => VoteDirection::No,
        Direction::Abstain => VoteDirection::Abstain,
    }
}

fn parse_direction(s: &str) -> R<VoteDirection> {
    match s {
        "yes" => Ok(VoteDirection::Yes),
        "no" => Ok(VoteDirection::No),
        "abstain" => Ok(VoteDirection::Abstain),
        other => Err(input(anyhow!("vote `{other}` must be yes, no or abstain"))),
    }
}

fn govern(dir: &Path, g: &GovernCommand) -> R<Outcome> {
    if let GovernCommand::List = g {
        let store = Store::open(dir).map_err(input)?;
        let proposals: Vec<Value> = store.governance.registry.proposals().map(to_value).collect();
        return Ok(Outcome::ok(json!({ "proposals": proposals })));
    }
    let _lock = Lock::acquire(dir).map_err(input)?;
    let mut store = Store::open(dir).map_err(input)?;
    let result = govern_mut(&mut store, g);
    // rejected proposals and motions are recorded even when the command fails
    store.save().map_err(input)?;
    result
}

fn govern_mut(store: &mut Store, g: &GovernCommand) -> R<Outcome> {
    let position = store.ledger.log().position();
    match g {
        GovernCommand::Credit { holder, kind, liquid, staked } => {
            let kind = match kind {
                HolderKind::Holder => AccountKind::Holder,
                HolderKind::Treasury => AccountKind::Treasury,
                HolderKind::Escrow => AccountKind::Escrow,
                HolderKind::UnvestedTeam => AccountKind::UnvestedTeam,
            };
            store.governance.holders.credit(holder, kind, kld_units(*liquid, "liquid")?, kld_units(*staked, "staked")?);
            let view = store.governance.holders.snapshot(position);
            Ok(Outcome::ok(json!({ "holder": holder, "eligible_supply": view.total_eligible().to_kld_string() })))
        }
        GovernCommand::Propose { proposer, changes, at } => {
            let mut map = BTreeMap::new();
            for c in changes {
                let (k, v) = c.split_once('=').ok_or_else(|| input(anyhow!("change `{c}` is not KEY=VALUE")))?;
                let key: ParameterKey = k.parse().map_err(input)?;
                let value: Dec = v.parse().map_err(|e| input(anyhow!("{k}: {e}")))?;
                map.insert(key, value);
            }
            let view = store.governance.holders.snapshot(position);
            let params = store.config.governable.params.clone();
            let id = store.governance.registry.propose(proposer, map, &params, &view, *at).map_err(policy)?;
            store.governance.views.insert(id, view);
            let p = store.governance.registry.proposal(id).map_err(policy)?;
            Ok(Outcome::ok(json!({ "id": id, "voting_ends": p.voting_ends.to_rfc3339(), "snapshot": p.snapshot_block })))
        }
        GovernCommand::Vote { id, voter, direction: d, at } => {
            let view = store.governance.views.get(id).cloned().ok_or_else(|| input(anyhow!("unknown proposal {id}")))?;
            store.governance.registry.vote(*id, voter, &view, direction(*d), *at).map_err(policy)?;
            let t = store.governance.registry.proposal(*id).map_err(policy)?.tally();
            Ok(Outcome::ok(json!({ "id": id, "tally": to_value(&t) })))
        }
        GovernCommand::Finalize { id, at } => {
            let status = store.governance.registry.finalize(*id, *at).map_err(policy)?;
            let p = store.governance.registry.proposal(*id).map_err(policy)?;
            Ok(Outcome::ok(json!({
                "id": id,
                "status": format!("{status:?}"),
                "tally": to_value(&p.tally()),
                "timelock_ends": p.timelock_ends.map(|t| t.to_rfc3339()),
            })))
        }
        GovernCommand::Execute { id, at } => {
            let params = store.config.governable.params.clone();
            let next = store.governance.registry.execute(*id, &params, *at).map_err(policy)?;
            store.config.governable.params = next.clone();
            store.save_config().map_err(input)?;
            Ok(Outcome::ok(json!({ "id": id, "status": "Executed", "params": to_value(&next) })))
        }
        GovernCommand::Motion { kind, year, votes, at } => {
            let kind = match kind {
                Motion::Pause => MotionKind::PauseExecution,
                Motion::Halt => MotionKind::EmergencyHalt,
                Motion::Restore => MotionKind::RestoreExecution,
            };
            let mut ballot = BTreeMap::new();
            for v in votes {
                let (h, d) = v.split_once('=').ok_or_else(|| input(anyhow!("vote `{v}` is not HOLDER=DIRECTION")))?;
                ballot.insert(h.to_string(), parse_direction(d)?);
            }
            let (mut record, meta) = store.load_cycle(*year).map_err(input)?.ok_or_else(|| input(anyhow!("no oracle record for cycle {year}")))?;
            let view = store.governance.holders.snapshot(position);
            let result = store.governance.registry.motion(kind, *year, &view, &ballot, *at);
            let clock = VirtualClock::new(*at);
            let applied = match kind {
                MotionKind::PauseExecution => record.pause_by_governance(&result, &clock),
                MotionKind::EmergencyHalt => record.emergency_halt(&result),
                MotionKind::RestoreExecution => record.restore(&result),
            };
            store.save_cycle(&record, &meta).map_err(input)?;
            let body = json!({
                "motion": format!("{kind:?}"),
                "quorum_met": result.quorum_met,
                "passed": result.passed,
                "tally": to_value(&result.tally),
                "window_status": record.status().map(|s| format!("{s:?}")),
                "execution_halted": record.execution_halted(),
            });
            match applied {
                Ok(()) => Ok(Outcome::ok(body)),
                Err(e) => {
                    eprintln!("motion not applied: {e}");
                    Ok(Outcome::with_code(body, 1))
                }
            }
        }
        GovernCommand::List => unreachable!("handled without a lock"),
    }
}

// ---------------------------------------------------------------------------
// state

fn state_summary(store: &Store) -> R<Value> {
    let s = store.ledger.state();
    let balances: BTreeMap<String, String> = s.buckets.iter().map(|(k, b)| (format!("{k:?}"), b.balance.to_kld_string())).collect();
    Ok(json!({
        "circulating": s.circulating.to_kld_string(),
        "burned": s.burned_cumulative.to_kld_string(),
        "balances": balances,
        "month_index": s.month_index,
        "cycle_year": s.cycle.cycle_year,
        "g": s.annual_factors.g_used.to_string(),
        "escrow_cap": s.annual_factors.escrow_cap.to_kld_string(),
        "burn_fraction": s.annual_factors.burn_fraction.to_string(),
        "staking_rate": s.annual_factors.staking_rate.to_string(),
        "issuance_budget": s.cycle.issuance_budget.to_kld_string(),
        "issued": s.cycle.issued.to_kld_string(),
        "events": store.ledger.log().len(),
        "state_hash": s.state_hash().map_err(policy)?.to_string(),
        "constitutional_hash": store.config.constitutional_hash().to_string(),
    }))
}

fn state(dir: &Path, s: &StateCommand) -> R<Outcome> {
    match s {
        StateCommand::Init { config } => {
            let cfg = Config::load(config).map_err(input)?;
            let root = config.parent().unwrap_or(Path::new("."));
            let path = Config::resolve(root, &cfg.constitutional.baseline_snapshot);
            let parsed = read_snapshot(&path, &cfg.constitutional.baseline_vintage.to_string())?;
            let obs = complete(&parsed, &path)?;
            let baseline = BaselineRef::from_genesis(&obs, parsed.vintage.clone()).map_err(input)?;
            fs::create_dir_all(dir).map_err(input)?;
            let _lock = Lock::acquire(dir).map_err(input)?;
            let store = Store::init(dir, cfg, baseline).map_err(input)?;
            let mut body = state_summary(&store)?;
            body["bdi_ref"] = json!(store.baseline.bdi_ref().to_string());
            Ok(Outcome::ok(body))
        }
        StateCommand::Show => {
            let store = Store::open(dir).map_err(input)?;
            Ok(Outcome::ok(state_summary(&store)?))
        }
        StateCommand::Check => {
            // opening verifies the chain, conservation and the head state hash
            let store = Store::open(dir).map_err(input)?;
            store.ledger.state().check_conservation().map_err(policy)?;
            Ok(Outcome::ok(json!({
                "ok": true,
                "events": store.ledger.log().len(),
                "head": store.ledger.log().last().map(|e| e.event_hash().to_string()),
            })))
        }
        StateCommand::Month { fees, release, relock, reserve_spend, approvals } => {
            let _lock = Lock::acquire(dir).map_err(input)?;
            let mut store = Store::open(dir).map_err(input)?;
            let mut notes = Vec::new();
            let escrow = BucketKind::EcosystemEscrow;
            let mut released = Amount::ZERO;
            if let Some(r) = release {
                let requested = if r == "max" {
                    store.ledger.state().balance(escrow)
                } else {
                    kld_units(r.parse().map_err(|e| input(anyhow!("--release: {e}")))?, "release")?
                };
                match store.ledger.release_escrow(requested, approvals) {
                    Ok(a) => released = a,
                    Err(LedgerError::ZeroCap(reason)) => notes.push(format!("nothing released: {reason:?}")),
                    Err(e) => return Err(policy(e)),
                }
            }
            if !released.is_zero() {
                let back = Amount::from_units(relock.clamp_min(Dec::ZERO).mul_floor_units(released.units()).unwrap_or(0).min(released.units()));
                let out = released.checked_sub(back).map_err(policy)?;
                if !out.is_zero() {
                    store.ledger.distribute(escrow, out).map_err(policy)?;
                }
                if !back.is_zero() {
                    store.ledger.relock(back, escrow, escrow, "undistributed release returned", approvals).map_err(policy)?;
                }
            }
            let spend = kld_units(*reserve_spend, "reserve spend")?;
            if !spend.is_zero() {
                let status = store.ledger.spend_reserve(spend, approvals).map_err(policy)?;
                notes.push(format!("reserve spend {status:?}"));
            }
            let summary = store.ledger.advance_month(kld_units(*fees, "fees")?).map_err(policy)?;
            store.save().map_err(input)?;
            let mut body = state_summary(&store)?;
            body["month"] = json!({
                "index": summary.month_index,
                "released": released.to_kld_string(),
                "vested": summary.vested.to_kld_string(),
                "emitted": summary.emitted.to_kld_string(),
                "fees": summary.fees.to_kld_string(),
                "burned": summary.burned.to_kld_string(),
            });
            body["notes"] = json!(notes);
            Ok(Outcome::ok(body))
        }
    }
}
