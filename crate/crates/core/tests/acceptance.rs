//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration as StdDuration, Instant};

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::Value;

use kld_core::debt_index::policy_factor;
use kld_core::governance::{tally_motion, AccountKind, GovernanceError, HolderBook, MotionKind, ParameterClass, ProposalStatus, VoteDirection};
use kld_core::ledger::{ApprovalPolicy, BucketKind, LedgerOp, S_MAX};
use kld_core::oracle_protocol::{lower_median, CycleContext, LapseReason, OperatorRegistry, WindowStatus};
use kld_core::policy::{burn_fraction, escrow_cap, issuance_budget, issuance_factor, staking_rate};
use kld_core::reporting::{canonical_bytes, commit, verify, Discrepancy};
use kld_core::simulator::{run_full, DebtPath, FeeSpec, RandomEvents, Scenario, TreasurySpec};
use kld_core::weo_ingest::{resolve_snapshot_date, BusinessCalendar, ObservationStatus, RuleBranch};
use kld_core::{
    Amount, BaselineRef, Bloc, BlocObservation, CycleRecord, Dec, Digest, GenesisConfig, GovernanceConfig, GovernanceRegistry, Ledger,
    OracleSubmission, ParameterKey, PolicyParams, SubmissionPayload, VintageId, VirtualClock, WeoVintage,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn d(s: &str) -> Dec {
    s.parse().expect("decimal literal")
}

fn units(kld: u64) -> u64 {
    kld * 1_000_000
}

// 1 ---------------------------------------------------------------------------

fn allocation_exactness() -> Outcome {
    let state = kld_core::ledger::genesis(&GenesisConfig::table(PolicyParams::default(), 2025)).map_err(|e| e.to_string())?;
    let table = [
        (BucketKind::EcosystemEscrow, 5_500_000_000u64),
        (BucketKind::TeamVesting, 2_500_000_000),
        (BucketKind::CompanyReserve, 1_000_000_000),
        (BucketKind::CommunityAirdrop, 500_000_000),
        (BucketKind::StakingReserve, 300_000_000),
        (BucketKind::LiquidityPartnerships, 150_000_000),
        (BucketKind::LegalTreasury, 50_000_000),
    ];
    let mut sum = 0u64;
    for (kind, kld) in table {
        let got = state.balance(kind).units();
        ensure!(got == units(kld), "{kind:?} holds {got} base units, expected {}", units(kld));
        sum += got;
    }
    ensure!(state.buckets.len() == table.len(), "{} buckets at genesis", state.buckets.len());
    ensure!(sum == 10_000_000_000 * 1_000_000 && S_MAX.units() == sum, "allocations sum to {sum}");
    ensure!(state.circulating.is_zero() && state.burned_cumulative.is_zero(), "supply outside buckets at genesis");
    Ok(format!("7 buckets, {sum} base units"))
}

// 2 ---------------------------------------------------------------------------

fn vesting_reproduction() -> Outcome {
    let mut state = kld_core::ledger::genesis(&GenesisConfig::table(PolicyParams::default(), 2025)).map_err(|e| e.to_string())?;
    let team_start = state.balance(BucketKind::TeamVesting);
    let mut releases = Vec::new();
    for month in 0..60u32 {
        let before = state.balance(BucketKind::TeamVesting);
        let (next, summary) = state.advance_month(Amount::ZERO).map_err(|e| e.to_string())?;
        let moved = before.units() - next.balance(BucketKind::TeamVesting).units();
        ensure!(moved == summary.vested.units(), "month {month}: bucket moved {moved}, summary says {}", summary.vested.units());
        if month < 12 {
            ensure!(moved == 0, "transfer of {moved} during the cliff in month {month}");
        } else if moved > 0 {
            releases.push(moved);
        }
        state = next;
    }
    ensure!(releases.len() == 36, "{} releases instead of 36", releases.len());
    // 69,444,444.444444 KLD; the printed figure is 69,444,444.44
    let expected = 69_444_444_444_444u64;
    let printed = 69_444_444_440_000u64;
    for (i, r) in releases.iter().take(35).enumerate() {
        ensure!(*r == expected, "release {} is {r} units", i + 1);
        ensure!(r.abs_diff(printed) <= 5_000, "release {} differs from the printed value by more than 0.005", i + 1);
    }
    let total: u64 = releases.iter().sum();
    ensure!(total == units(2_500_000_000) && total == team_start.units(), "36 releases total {total}");
    ensure!(state.balance(BucketKind::TeamVesting).is_zero(), "team bucket not empty after vesting");
    Ok(format!("35 x {expected} units, final {}, total exact", releases[35]))
}

// 3 ---------------------------------------------------------------------------

fn policy_factor_values() -> Outcome {
    let started = Instant::now();
    let one = Dec::ONE;
    let g0 = policy_factor(Dec::ZERO, one).map_err(|e| e.to_string())?;
    ensure!(g0 == Dec::ZERO, "g(0) = {g0}");
    let g_half = policy_factor(d("0.5"), one).map_err(|e| e.to_string())?;
    // |g - 1/3| <= 1e-9, compared in units of 1e-9 against 333333333.33...
    let third_scaled_x3 = 1_000_000_000i128;
    ensure!((g_half.raw() * 3 - third_scaled_x3).abs() <= 3, "g(0.5) = {g_half}");
    let g_big = policy_factor(Dec::from_int(1_000_000), one).map_err(|e| e.to_string())?;
    ensure!(g_big > d("0.999999") && g_big < one, "g(1e6) = {g_big}");

    let mut rng = StdRng::seed_from_u64(3);
    let mut violations = 0;
    for _ in 0..1000 {
        let lambda = Dec::from_raw(rng.random_range(1..=10_000_000_000i128));
        let a = Dec::from_raw(rng.random_range(0..=1_000_000_000_000_000i128));
        let b = Dec::from_raw(rng.random_range(0..=1_000_000_000_000_000i128));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (glo, ghi) = (policy_factor(lo, lambda).map_err(|e| e.to_string())?, policy_factor(hi, lambda).map_err(|e| e.to_string())?);
        if glo > ghi || glo.is_negative() || ghi >= one {
            violations += 1;
        }
    }
    ensure!(violations == 0, "{violations} monotonicity violations");
    let elapsed = started.elapsed();
    ensure!(elapsed < StdDuration::from_secs(1), "took {elapsed:?}");
    Ok(format!("g(0.5)={g_half}, g(1e6)={g_big}, 1000 pairs monotone in {elapsed:.2?}"))
}

// 4 ---------------------------------------------------------------------------

fn random_dec(rng: &mut StdRng, lo: Dec, hi: Dec) -> Dec {
    Dec::from_raw(rng.random_range(lo.raw()..=hi.raw()))
}

fn random_params(rng: &mut StdRng) -> PolicyParams {
    let b_base = random_dec(rng, Dec::ZERO, d("0.5"));
    let e_base = Amount::from_units(rng.random_range(0..=units(100_000_000)));
    PolicyParams {
        alpha_i: random_dec(rng, Dec::ZERO, Dec::ONE),
        beta_b: random_dec(rng, Dec::ZERO, Dec::from_int(2)),
        alpha_e: random_dec(rng, Dec::ZERO, Dec::ONE),
        gamma: random_dec(rng, Dec::ZERO, Dec::from_int(2)),
        b_base,
        b_max: random_dec(rng, b_base, Dec::ONE),
        e_base,
        e_min: Amount::from_units(rng.random_range(0..=e_base.units())),
        i_base: Amount::from_units(rng.random_range(0..=units(1_000_000_000))),
        r_base: random_dec(rng, Dec::ZERO, d("0.01")),
        staking_multiplier: random_dec(rng, Dec::ZERO, Dec::from_int(2)),
    }
}

fn anti_cyclicality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let locked = S_MAX;
    let mut violations = Vec::new();
    for draw in 0..1000 {
        let p = random_params(&mut rng);
        let a = Dec::from_raw(rng.random_range(0..1_000_000_000i128));
        let b = Dec::from_raw(rng.random_range(0..1_000_000_000i128));
        if a == b {
            continue;
        }
        let (g1, g2) = if a < b { (a, b) } else { (b, a) };
        let checks = [
            ("issuance factor", issuance_factor(&p, g1) >= issuance_factor(&p, g2)),
            ("issuance budget", issuance_budget(&p, g1, locked) >= issuance_budget(&p, g2, locked)),
            ("burn fraction", burn_fraction(&p, g1) <= burn_fraction(&p, g2)),
            ("burn ceiling", burn_fraction(&p, g2) <= p.b_max),
            ("escrow cap", escrow_cap(&p, g1) >= escrow_cap(&p, g2)),
            ("escrow floor", escrow_cap(&p, g2) >= p.e_min),
            ("staking rate", staking_rate(&p, g1) >= staking_rate(&p, g2)),
            ("staking floor", !staking_rate(&p, g2).is_negative()),
        ];
        for (name, ok) in checks {
            if !ok {
                violations.push(format!("draw {draw}: {name}"));
            }
        }
    }
    ensure!(violations.is_empty(), "{} violations, first {}", violations.len(), violations[0]);
    Ok("1000 draws, zero violations".into())
}

// 5 ---------------------------------------------------------------------------

fn randomized_scenario(name: &str, seed: u64, years: u32) -> Scenario {
    let mut s = Scenario::new(name, seed, years);
    s.debt.path = DebtPath::RandomWalk { step: d("0.06"), gdp_growth: d("0.02") };
    s.debt.missing_bloc_probability = d("0.05");
    s.fees = FeeSpec::Uniform { min_kld: Dec::ZERO, max_kld: Dec::from_int(2_000_000) };
    s.random = RandomEvents {
        dispute_probability: d("0.3"),
        correction_probability: d("0.5"),
        pause_probability: d("0.1"),
        proposal_probability: d("0.3"),
    };
    s.treasury = TreasurySpec { relock_fraction: d("0.1"), reserve_spend_kld: Dec::from_int(100_000) };
    s
}

/// Replays every logged transition on an independent bucket book.
fn conservation() -> Outcome {
    let started = Instant::now();
    let run = run_full(&randomized_scenario("conservation", 20_240_601, 50)).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(run.trace.months.len() == 600, "{} months simulated", run.trace.months.len());
    let events = run.ledger.log().events();
    let mut buckets: BTreeMap<BucketKind, u64> = BTreeMap::new();
    let (mut circulating, mut burned) = (0u64, 0u64);
    let sub = |m: &mut BTreeMap<BucketKind, u64>, k: BucketKind, a: u64| -> Result<(), String> {
        let slot = m.get_mut(&k).ok_or(format!("{k:?} missing"))?;
        *slot = slot.checked_sub(a).ok_or(format!("{k:?} underflow"))?;
        Ok(())
    };
    for e in events {
        match &e.op {
            LedgerOp::Genesis { allocations } => buckets = allocations.iter().map(|(k, a)| (*k, a.units())).collect(),
            LedgerOp::Release { bucket, released, .. } => {
                sub(&mut buckets, *bucket, released.units())?;
                circulating += released.units();
            }
            LedgerOp::Vest { amount } => {
                sub(&mut buckets, BucketKind::TeamVesting, amount.units())?;
                circulating += amount.units();
            }
            LedgerOp::StakingEmission { amount, .. } => {
                sub(&mut buckets, BucketKind::StakingReserve, amount.units())?;
                circulating += amount.units();
            }
            LedgerOp::ReserveSpend { amount, .. } => {
                sub(&mut buckets, BucketKind::CompanyReserve, amount.units())?;
                circulating += amount.units();
            }
            LedgerOp::Relock { record } => {
                *buckets.entry(record.origin_bucket).or_default() += record.amount.units();
                circulating = circulating.checked_sub(record.amount.units()).ok_or("relock exceeds circulating")?;
            }
            LedgerOp::FeeBurn { amount, .. } => {
                circulating = circulating.checked_sub(amount.units()).ok_or("burn exceeds circulating")?;
                burned += amount.units();
            }
            LedgerOp::CycleApplied { .. } | LedgerOp::CycleRenewed { .. } | LedgerOp::Distribute { .. } | LedgerOp::MonthClosed { .. } => {}
        }
        let locked: u64 = buckets.values().sum();
        ensure!(circulating + locked + burned == S_MAX.units(), "event {}: total {}", e.seq, circulating + locked + burned);
        ensure!(e.circulating_after.units() == circulating, "event {}: circulating {} vs replayed {circulating}", e.seq, e.circulating_after.units());
        ensure!(e.burned_after.units() == burned, "event {}: burned {} vs replayed {burned}", e.seq, e.burned_after.units());
    }
    let mut last_burned = 0;
    for row in &run.trace.months {
        ensure!(row.burned.units() >= last_burned, "burns fell in month {}", row.month_index);
        last_burned = row.burned.units();
    }
    let state = run.ledger.state();
    for (k, v) in &buckets {
        ensure!(state.balance(*k).units() == *v, "{k:?} final balance differs from replay");
    }
    ensure!(burned > 0, "scenario burned nothing");
    let disputed = run.trace.records.iter().filter(|r| !r.superseded_windows().is_empty() || r.carried_forward()).count();
    ensure!(disputed > 0 && !run.trace.proposals.is_empty(), "scenario exercised no disputes or proposals");
    ensure!(elapsed < StdDuration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "600 months, {} events, {disputed} disturbed cycles, {} proposals, {elapsed:.2?}",
        events.len(),
        run.trace.proposals.len()
    ))
}

// 6 ---------------------------------------------------------------------------

fn vintage() -> WeoVintage {
    let id: VintageId = "2026-October".parse().expect("vintage");
    WeoVintage { vintage_id: id, publication_date: id.release_month_start(), dataset_hash: Digest::of(b"acceptance") }
}

fn observations(scale: Dec) -> Vec<BlocObservation> {
    Bloc::ALL
        .iter()
        .enumerate()
        .map(|(i, b)| BlocObservation {
            bloc: *b,
            debt_ratio: Dec::from_int(60 + 15 * i as i64) * scale,
            nominal_gdp: Dec::from_int(1500 + 200 * i as i64),
            source_vintage: vintage(),
            status: ObservationStatus::Observed,
        })
        .collect()
}

fn context() -> CycleContext {
    let baseline = BaselineRef::from_genesis(&observations(Dec::ONE), vintage()).expect("baseline");
    CycleContext { baseline, lambda: Dec::ONE, operators: OperatorRegistry::numbered(5) }
}

fn signed(ctx: &CycleContext, op: &str, scale: Dec, at: DateTime<Utc>) -> OracleSubmission {
    let p = SubmissionPayload::from_observations(&observations(scale), &vintage(), &ctx.baseline, ctx.lambda).expect("payload");
    OracleSubmission::sign(op, p, at)
}

#[derive(Clone, Copy, Debug)]
enum Ev {
    Flag(usize, &'static str),
    Correction,
    Tick,
    Execute,
}

/// Expected window state, rebuilt from the schedule alone.
struct Model {
    opened: DateTime<Utc>,
    flags: BTreeMap<&'static str, BTreeSet<usize>>,
    disputed_at: Option<DateTime<Utc>>,
    lapsed: bool,
    executed: bool,
    corrected: bool,
}

impl Model {
    fn past_deadline(&self, t: DateTime<Utc>) -> bool {
        self.disputed_at.is_some_and(|d| t > d + Duration::days(14))
    }
}

fn challenge_window_gating() -> Outcome {
    let ctx = context();
    let t0 = Utc.with_ymd_and_hms(2026, 10, 25, 12, 0, 0).unwrap();
    let prior = d("0.125");
    let scales = ["1.05", "1.10", "1.20", "1.30", "1.40"].map(d);
    let subs: Vec<OracleSubmission> = (0..5).map(|i| signed(&ctx, &format!("operator-{}", i + 1), scales[i], t0 - Duration::hours(1))).collect();
    let correction = signed(&ctx, "operator-1", d("1.15"), t0);
    let base = Ledger::genesis(&GenesisConfig::table(PolicyParams::default(), 2026)).map_err(|e| e.to_string())?;
    let executor = ApprovalPolicy::numbered("executor", 5, 8);
    let approvals: Vec<String> = (1..=5).map(|i| format!("executor-{i}")).collect();
    let (mut executions, mut lapses, mut corrections) = (0, 0, 0);

    for n in 0..10_000u64 {
        let mut rng = StdRng::seed_from_u64(0x6a7e_0000 + n);
        let mut chosen: Vec<usize> = (0..5).collect();
        chosen.shuffle(&mut rng);
        chosen.truncate(rng.random_range(1..=5));
        let mut record = CycleRecord::new(2027, ctx.clone(), prior);
        for &i in &chosen {
            record.submit(subs[i].clone()).map_err(|e| format!("schedule {n}: {e}"))?;
        }
        let mut by_index: Vec<(Dec, &str, Dec)> = chosen.iter().map(|&i| (subs[i].payload.bdi, subs[i].operator_id.as_str(), subs[i].payload.g)).collect();
        by_index.sort();
        let median_g = by_index[(by_index.len() - 1) / 2].2;

        let clock = VirtualClock::new(t0);
        record.publish(&clock).map_err(|e| format!("schedule {n}: {e}"))?;

        let minutes = |rng: &mut StdRng, hi: i64| t0 + Duration::minutes(rng.random_range(0..hi));
        let mut events: Vec<(DateTime<Utc>, Ev)> = Vec::new();
        for _ in 0..rng.random_range(0..=4) {
            let e = Ev::Flag(rng.random_range(0..5), if rng.random_bool(0.5) { "stale-data" } else { "weights" });
            events.push((minutes(&mut rng, 96 * 60), e));
        }
        if rng.random_bool(0.5) {
            events.push((minutes(&mut rng, 20 * 24 * 60), Ev::Correction));
        }
        for _ in 0..rng.random_range(1..=3) {
            events.push((minutes(&mut rng, 100 * 60), Ev::Execute));
        }
        for _ in 0..rng.random_range(0..=3) {
            events.push((minutes(&mut rng, 20 * 24 * 60), Ev::Tick));
        }
        events.sort_by_key(|(t, _)| *t);
        events.push((t0 + Duration::days(40), Ev::Execute));

        let mut m = Model { opened: t0, flags: BTreeMap::new(), disputed_at: None, lapsed: false, executed: false, corrected: false };
        let mut ledger: Option<Ledger> = None;
        for (t, ev) in events {
            clock.set(t);
            match ev {
                Ev::Flag(op, code) => {
                    let _ = record.flag(&format!("operator-{}", op + 1), code, "", &clock);
                    if !m.lapsed && t >= m.opened && t < m.opened + Duration::hours(72) {
                        let ops = m.flags.entry(code).or_default();
                        ops.insert(op);
                        if ops.len() >= 2 && m.disputed_at.is_none() {
                            m.disputed_at = Some(t);
                        }
                    }
                }
                Ev::Correction => {
                    record.resolve(&clock, Some(correction.clone()));
                    if !m.lapsed && m.past_deadline(t) {
                        m.lapsed = true;
                    } else if !m.lapsed && m.disputed_at.is_some() {
                        m = Model { opened: t, flags: BTreeMap::new(), disputed_at: None, lapsed: false, executed: false, corrected: true };
                    }
                }
                Ev::Tick | Ev::Execute => {
                    record.resolve(&clock, None);
                    if !m.lapsed && m.past_deadline(t) {
                        m.lapsed = true;
                    }
                    if matches!(ev, Ev::Execute) {
                        let l = ledger.get_or_insert_with(|| base.clone());
                        let params = l.state().cycle.params.clone();
                        let result = record.execute(l, &params, &executor, &approvals, &clock);
                        let allowed = !m.lapsed && !m.executed && m.disputed_at.is_none() && t >= m.opened + Duration::hours(72);
                        ensure!(result.is_ok() == allowed, "schedule {n} at {t}: execute gave {result:?}, model allows {allowed}");
                        if result.is_ok() {
                            let opened = record.window().expect("published").opened_at;
                            ensure!(t - opened >= Duration::hours(72), "schedule {n}: executed {} after opening", t - opened);
                            m.executed = true;
                            executions += 1;
                        }
                    }
                }
            }
        }
        ensure!(record.is_concluded(), "schedule {n}: cycle not concluded");
        if m.lapsed {
            lapses += 1;
            ensure!(record.status() == Some(WindowStatus::LapsedToLastConfirmed), "schedule {n}: status {:?}", record.status());
            ensure!(record.confirmed_g() == Some(prior) && record.carried_forward(), "schedule {n}: prior g not carried");
            ensure!(record.lapse_reason() == Some(LapseReason::UncorrectedDispute), "schedule {n}: lapse reason {:?}", record.lapse_reason());
            ensure!(record.executed_at().is_none(), "schedule {n}: lapsed cycle executed");
        } else {
            let want = if m.corrected { correction.payload.g } else { median_g };
            ensure!(m.executed && record.confirmed_g() == Some(want), "schedule {n}: confirmed {:?}, expected {want}", record.confirmed_g());
        }
        if m.corrected {
            corrections += 1;
        }
    }
    ensure!(lapses > 0 && corrections > 0, "schedules never lapsed or corrected");
    Ok(format!("10000 schedules: {executions} executions, {lapses} lapses, {corrections} corrections, none early"))
}

// 7 ---------------------------------------------------------------------------

fn median_aggregation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let ctx = context();
    let t0 = Utc.with_ymd_and_hms(2026, 10, 25, 11, 0, 0).unwrap();
    // duplicate index values exercise the operator-id tie break
    let scales = ["1.20", "1.05", "1.30", "1.20"].map(d);
    let subs: Vec<OracleSubmission> = scales.iter().enumerate().map(|(i, s)| signed(&ctx, &format!("operator-{}", i + 1), *s, t0)).collect();
    let mut keys: Vec<(Dec, String)> = subs.iter().map(|s| (s.payload.bdi, s.operator_id.clone())).collect();
    keys.sort();
    let oracle = keys[keys.len() / 2 - 1].clone();
    let mut order: Vec<usize> = (0..subs.len()).collect();
    for shuffle in 0..500 {
        order.shuffle(&mut rng);
        let mut record = CycleRecord::new(2027, ctx.clone(), Dec::ZERO);
        for &i in &order {
            record.submit(subs[i].clone()).map_err(|e| e.to_string())?;
        }
        let (op, payload) = record.aggregate_median().map_err(|e| e.to_string())?;
        ensure!(op == oracle.1 && payload.bdi == oracle.0, "shuffle {shuffle}: chose {op}, oracle {}", oracle.1);
    }
    for n in [2usize, 4, 6, 10, 50, 128] {
        for _ in 0..20 {
            let mut v: Vec<i64> = (0..n).map(|_| rng.random_range(-1000..1000)).collect();
            let got = lower_median(&v).expect("non-empty");
            v.sort_unstable();
            ensure!(got == v[n / 2 - 1], "n={n}: {got} vs sorted {}", v[n / 2 - 1]);
            v.shuffle(&mut rng);
            ensure!(lower_median(&v) == Some(got), "n={n}: order dependent");
        }
    }
    Ok(format!("500 shuffles pick {}, even counts match the sort oracle", oracle.1))
}

// 8 ---------------------------------------------------------------------------

fn mutate(v: &mut Value, rng: &mut StdRng) -> bool {
    match v {
        Value::Object(m) if !m.is_empty() => {
            let keys: Vec<String> = m.keys().cloned().collect();
            let k = &keys[rng.random_range(0..keys.len())];
            mutate(m.get_mut(k).expect("key"), rng)
        }
        Value::Array(a) if !a.is_empty() => {
            let i = rng.random_range(0..a.len());
            mutate(&mut a[i], rng)
        }
        Value::Object(_) | Value::Array(_) | Value::Null => {
            *v = Value::String("tampered".into());
            true
        }
        Value::Bool(b) => {
            *b = !*b;
            true
        }
        Value::Number(n) => {
            *v = Value::from(n.as_u64().map_or(1, |x| x.wrapping_add(1)));
            true
        }
        Value::String(s) => {
            s.push('0');
            true
        }
    }
}

fn report_integrity() -> Outcome {
    let run = run_full(&randomized_scenario("reports", 88, 8)).map_err(|e| e.to_string())?;
    let log = run.ledger.log();
    // one report per oracle cycle; the genesis cycle has none
    ensure!(
        run.reports.len() == run.trace.records.len() && run.reports.len() == 7 && run.trace.commitments.len() == 7,
        "{} reports for {} oracle cycles",
        run.reports.len(),
        run.trace.records.len()
    );
    for (r, c) in run.reports.iter().zip(&run.trace.commitments) {
        let bytes = canonical_bytes(r).map_err(|e| e.to_string())?;
        let v = verify(&bytes, c, Some(log));
        ensure!(v.ok(), "report {} fails: {:?}", r.label, v.discrepancies);
    }

    let mut rng = StdRng::seed_from_u64(8);
    for i in 0..100 {
        let k = rng.random_range(0..run.reports.len());
        let commitment = &run.trace.commitments[k];
        let mut value = serde_json::to_value(&run.reports[k]).map_err(|e| e.to_string())?;
        mutate(&mut value, &mut rng);
        let bytes = kld_core::canonical::to_canonical_bytes(&value).map_err(|e| e.to_string())?;
        ensure!(!verify(&bytes, commitment, Some(log)).ok(), "tampering {i} of report {} verified", run.reports[k].label);
    }

    let mut omissions = 0;
    for (r, c) in run.reports.iter().zip(&run.trace.commitments) {
        for i in 0..r.actions.len() {
            let mut cut = r.clone();
            let dropped = cut.actions.remove(i);
            let recommitted = commit(&cut, &c.reference_link).map_err(|e| e.to_string())?;
            let bytes = canonical_bytes(&cut).map_err(|e| e.to_string())?;
            let v = verify(&bytes, &recommitted, Some(log));
            ensure!(!v.ok(), "omitting event {} from {} went unnoticed", dropped.event_seq, r.label);
            let moves_supply = dropped.kind.circulating_sign() != 0 && !dropped.amount.is_zero();
            if moves_supply {
                let standalone = verify(&bytes, &recommitted, None);
                ensure!(
                    standalone.discrepancies.iter().any(|d| matches!(d, Discrepancy::SupplyReconciliationGap { .. })),
                    "no supply gap for omitted event {} in {}",
                    dropped.event_seq,
                    r.label
                );
            }
            omissions += 1;
        }
    }
    Ok(format!("{} reports verified, 100 tamperings rejected, {omissions} omissions detected", run.reports.len()))
}

// 9 ---------------------------------------------------------------------------

fn governance_boundaries() -> Outcome {
    let t0 = Utc.with_ymd_and_hms(2026, 3, 1, 0, 0, 0).unwrap();
    let mut book = HolderBook::default();
    // ineligible accounts hold 90% of a 1,000,000 KLD supply
    book.credit("treasury", AccountKind::Treasury, Amount::from_kld(500_000), Amount::ZERO);
    book.credit("team-unvested", AccountKind::UnvestedTeam, Amount::from_kld(400_000), Amount::ZERO);
    book.credit("proposer", AccountKind::Holder, Amount::ZERO, Amount::from_kld(5_000));
    book.credit("rest", AccountKind::Holder, Amount::from_kld(95_000), Amount::ZERO);
    let view = book.snapshot(1);
    ensure!(view.total_eligible() == Amount::from_kld(100_000), "eligible supply {:?}", view.total_eligible());

    let params = PolicyParams::default();
    let mut registry = GovernanceRegistry::new(GovernanceConfig::default());
    let mut rejected = 0;
    for key in ParameterKey::ALL.into_iter().filter(|k| k.class() == ParameterClass::Constitutional) {
        let changes = BTreeMap::from([(key, Dec::ONE)]);
        let r = registry.propose("proposer", changes, &params, &view, t0);
        ensure!(r == Err(GovernanceError::InvalidImmutable(key)), "{key:?} proposal gave {r:?}");
        rejected += 1;
    }
    ensure!(
        registry.proposals().all(|p| p.status == ProposalStatus::InvalidImmutable) && registry.proposals().count() == rejected,
        "constitutional proposals not recorded as immutable"
    );

    let cfg = GovernanceConfig::default();
    let yes = BTreeMap::from([("proposer".to_string(), VoteDirection::Yes)]);
    let m = tally_motion(MotionKind::PauseExecution, 2027, &view, &yes, &cfg);
    ensure!(m.quorum_met && m.passed, "5% of eligible supply did not reach quorum: {m:?}");
    ensure!(m.tally.yes < Amount::from_kld(50_000), "quorum only reachable at 5% of total supply");

    let mut short = HolderBook::default();
    short.credit("treasury", AccountKind::Treasury, Amount::from_kld(500_000), Amount::ZERO);
    short.credit("team-unvested", AccountKind::UnvestedTeam, Amount::from_kld(400_000), Amount::ZERO);
    short.credit("voter", AccountKind::Holder, Amount::from_units(units(5_000) - 1), Amount::ZERO);
    short.credit("rest", AccountKind::Holder, Amount::from_units(units(95_000) + 1), Amount::ZERO);
    let sv = short.snapshot(1);
    let one_short = tally_motion(MotionKind::PauseExecution, 2027, &sv, &BTreeMap::from([("voter".to_string(), VoteDirection::Yes)]), &cfg);
    ensure!(!one_short.quorum_met, "quorum met one base unit short");

    let id = registry.propose("proposer", BTreeMap::from([(ParameterKey::AlphaI, d("0.4"))]), &params, &view, t0).map_err(|e| e.to_string())?;
    registry.vote(id, "proposer", &view, VoteDirection::Yes, t0 + Duration::hours(1)).map_err(|e| e.to_string())?;
    let status = registry.finalize(id, t0 + Duration::days(7)).map_err(|e| e.to_string())?;
    ensure!(status == ProposalStatus::Queued, "proposal with 5% of eligible supply ended {status:?}");
    Ok(format!("{rejected} constitutional keys rejected; quorum reached with 5,000 of 100,000 eligible KLD"))
}

// 10 --------------------------------------------------------------------------

/// Days since 1970-01-01 for a proleptic Gregorian date.
fn civil_days(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// 0 = Monday .. 6 = Sunday; 1970-01-01 was a Thursday.
fn weekday(days: i64) -> i64 {
    (days + 3).rem_euclid(7)
}

fn unix_noon(days: i64) -> i64 {
    days * 86_400 + 12 * 3_600
}

fn snapshot_date_rule() -> Outcome {
    let weekends = BusinessCalendar::weekends_only();
    let published = NaiveDate::from_ymd_opt(2024, 10, 22).unwrap();
    let dec = resolve_snapshot_date(Some(published), published, &weekends);
    ensure!(dec.rule_branch == RuleBranch::OctoberPlus10, "branch {:?}", dec.rule_branch);
    ensure!(dec.snapshot_timestamp == Utc.with_ymd_and_hms(2024, 11, 1, 12, 0, 0).unwrap(), "snapshot {}", dec.snapshot_timestamp);

    let mut rng = StdRng::seed_from_u64(10);
    for year in 1990..2100i32 {
        let holidays: BTreeSet<i64> = (0..rng.random_range(0..4)).map(|_| civil_days(year as i64, 12, rng.random_range(8..=20))).collect();
        let calendar = BusinessCalendar::with_holidays(holidays.iter().map(|&n| NaiveDate::from_ymd_opt(1970, 1, 1).unwrap() + Duration::days(n)));
        let today = NaiveDate::from_ymd_opt(year, 12, 2).unwrap();
        let fallback = resolve_snapshot_date(None, today, &calendar);
        let mut day = civil_days(year as i64, 12, 10);
        while weekday(day) >= 5 || holidays.contains(&day) {
            day += 1;
        }
        ensure!(fallback.rule_branch == RuleBranch::DecemberFallback, "{year}: branch {:?}", fallback.rule_branch);
        ensure!(fallback.snapshot_timestamp.timestamp() == unix_noon(day), "{year}: fallback {} vs oracle day {day}", fallback.snapshot_timestamp);
        ensure!(fallback.fallback_note.is_some(), "{year}: no fallback note");

        let late = NaiveDate::from_ymd_opt(year, 12, rng.random_range(2..=31)).unwrap();
        let after_cutoff = resolve_snapshot_date(Some(late), late, &calendar);
        ensure!(after_cutoff.snapshot_timestamp == fallback.snapshot_timestamp, "{year}: release on {late} did not fall back");

        let (m, dd) = (rng.random_range(9..=11), rng.random_range(1..=30));
        let p = NaiveDate::from_ymd_opt(year, m, dd).unwrap();
        let on_time = resolve_snapshot_date(Some(p), p, &calendar);
        let oracle = unix_noon(civil_days(year as i64, m as i64, dd as i64) + 10);
        ensure!(on_time.snapshot_timestamp.timestamp() == oracle, "{year}: {p} gave {}", on_time.snapshot_timestamp);
    }
    let dec1 = NaiveDate::from_ymd_opt(2027, 12, 1).unwrap();
    ensure!(resolve_snapshot_date(Some(dec1), dec1, &weekends).rule_branch == RuleBranch::OctoberPlus10, "December 1 release fell back");
    Ok("2024-10-22 -> 2024-11-01T12:00Z; 110 years of fallbacks match the calendar oracle".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("allocation exactness", allocation_exactness),
        ("vesting reproduction", vesting_reproduction),
        ("policy factor values", policy_factor_values),
        ("anti-cyclicality", anti_cyclicality),
        ("conservation over 600 months", conservation),
        ("challenge-window gating", challenge_window_gating),
        ("median aggregation", median_aggregation),
        ("report integrity", report_integrity),
        ("governance boundaries", governance_boundaries),
        ("snapshot-date rule", snapshot_date_rule),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
