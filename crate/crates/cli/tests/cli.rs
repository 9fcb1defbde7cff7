use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kld_core::simulator::default_base;
use kld_core::{Config, Dec};
use serde_json::Value;
use tempfile::TempDir;

const OPEN: &str = "2025-10-25T12:00:00Z";

fn kld(state: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kld"))
        .arg("--state-dir")
        .arg(state)
        .arg("--format")
        .arg("canonical")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn snapshot(path: &Path, vintage: &str, scale: Dec) {
    let mut s = String::from("bloc,series,value,vintage\n");
    for (b, i) in default_base() {
        s.push_str(&format!("{b},GGXWDG_NGDP,{},{vintage}\n", i.debt_ratio * scale));
        s.push_str(&format!("{b},NGDPD,{},{vintage}\n", i.nominal_gdp));
    }
    fs::write(path, s).unwrap();
}

struct Fixture {
    tmp: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let tmp = TempDir::new().unwrap();
        snapshot(&tmp.path().join("baseline.csv"), "2024-October", Dec::ONE);
        let cfg = Config::with_baseline("baseline.csv", "2024-October".parse().unwrap(), 2025);
        fs::write(tmp.path().join("config.toml"), cfg.to_toml()).unwrap();
        Fixture { tmp }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.tmp.path().join(name)
    }

    fn state(&self) -> PathBuf {
        self.path("state")
    }

    fn init(&self) -> &Self {
        let out = kld(&self.state(), &["state", "init", "--config", self.path("config.toml").to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        self
    }

    /// Signed submissions from `n` operators for a snapshot at `scale` times the baseline.
    fn submissions(&self, n: usize, scale: Dec) -> PathBuf {
        let snap = self.path("snap-2025.csv");
        snapshot(&snap, "2025-October", scale);
        let dir = self.path("subs");
        fs::create_dir_all(&dir).unwrap();
        for i in 1..=n {
            let out = dir.join(format!("op{i}.json"));
            let o = kld(
                &self.state(),
                &[
                    "index",
                    snap.to_str().unwrap(),
                    "--vintage",
                    "2025-October",
                    "--sign-as",
                    &format!("operator-{i}"),
                    "--at",
                    "2025-10-25T11:00:00Z",
                    "--out",
                    out.to_str().unwrap(),
                ],
            );
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        dir
    }
}

const APPROVALS: &str = "executor-1,executor-2,executor-3,executor-4,executor-5";

#[test]
fn index_at_baseline_and_above() {
    let f = Fixture::new();
    let base = f.path("baseline.csv");
    let high = f.path("high.csv");
    snapshot(&high, "2025-October", Dec::from_ratio(3, 2));
    let args = |snap: &Path| -> Vec<String> {
        ["index", snap.to_str().unwrap(), "--vintage", "", "--baseline", base.to_str().unwrap(), "--baseline-vintage", "2024-October"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let mut a = args(&base);
    a[3] = "2024-October".into();
    let out = kld(&f.state(), &a.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success());
    assert_eq!(json(&out)["g"], "0.000000000");
    let mut a = args(&high);
    a[3] = "2025-October".into();
    let out = kld(&f.state(), &a.iter().map(String::as_str).collect::<Vec<_>>());
    let v = json(&out);
    assert_eq!(v["x_excess"], "0.500000000");
    assert_eq!(v["g"], "0.333333334");
}

#[test]
fn malformed_snapshot_exits_2() {
    let f = Fixture::new();
    let bad = f.path("bad.csv");
    fs::write(&bad, "bloc,series,value\nUS,NGDPD,1\n").unwrap();
    let out = kld(&f.state(), &["index", bad.to_str().unwrap(), "--vintage", "2025-October", "--baseline", f.path("baseline.csv").to_str().unwrap(), "--baseline-vintage", "2024-October"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed snapshot"));
}

#[test]
fn clean_cycle_executes_and_report_verifies() {
    let f = Fixture::new();
    f.init();
    let subs = f.submissions(3, Dec::from_ratio(3, 2));
    let out = kld(&f.state(), &["cycle", "--year", "2026", "--submissions", subs.to_str().unwrap(), "--open-at", OPEN, "--approvals", APPROVALS]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["window_status"], "Executed");
    assert_eq!(v["effective_g"], "0.333333334");
    let report = v["report"]["report"].as_str().unwrap().to_string();
    let events = f.state().join("events.jsonl");

    let ok = kld(&f.state(), &["verify", &report, "--events", events.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let skipped = kld(&f.state(), &["verify", &report]);
    assert_eq!(skipped.status.code(), Some(2));
    assert_eq!(json(&skipped)["ledger_reconciliation"], "skipped: no event log");

    let tampered = f.path("tampered.kldr");
    let text = fs::read_to_string(&report).unwrap().replace("\"confirmed_g\":\"0.333333334\"", "\"confirmed_g\":\"0.2\"");
    fs::write(&tampered, text).unwrap();
    fs::copy(Path::new(&report).with_extension("commit"), tampered.with_extension("commit")).unwrap();
    let bad = kld(&f.state(), &["verify", tampered.to_str().unwrap(), "--events", events.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(!json(&bad)["discrepancies"].as_array().unwrap().is_empty());

    let check = kld(&f.state(), &["state", "check"]);
    assert!(check.status.success());
    let show = json(&kld(&f.state(), &["state", "show"]));
    assert_eq!(show["cycle_year"], 2026);
}

#[test]
fn matching_flags_dispute_without_execution() {
    let f = Fixture::new();
    f.init();
    let subs = f.submissions(3, Dec::ONE);
    let out = kld(
        &f.state(),
        &["cycle", "--year", "2026", "--submissions", subs.to_str().unwrap(), "--open-at", OPEN, "--flag", "operator-1:gdp", "--flag", "operator-2:gdp", "--approvals", APPROVALS],
    );
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["window_status"], "Disputed");
    assert_eq!(json(&kld(&f.state(), &["state", "show"]))["cycle_year"], 2025);

    // no correction within 14 days: the cycle lapses to the last confirmed g
    let late = kld(&f.state(), &["cycle", "--year", "2026", "--at", "2025-11-09T12:00:01Z"]);
    assert_eq!(late.status.code(), Some(0), "{}", String::from_utf8_lossy(&late.stderr));
    let v = json(&late);
    assert_eq!(v["window_status"], "LapsedToLastConfirmed");
    assert_eq!(v["carried_forward"], true);
    assert_eq!(json(&kld(&f.state(), &["state", "show"]))["cycle_year"], 2026);
}

#[test]
fn replay_gives_identical_state_hash() {
    let hashes: Vec<Value> = (0..2)
        .map(|_| {
            let f = Fixture::new();
            f.init();
            let subs = f.submissions(3, Dec::from_ratio(6, 5));
            let out = kld(&f.state(), &["cycle", "--year", "2026", "--submissions", subs.to_str().unwrap(), "--open-at", OPEN, "--approvals", APPROVALS]);
            json(&out)["state_hash"].clone()
        })
        .collect();
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn constitutional_edits_are_refused() {
    let f = Fixture::new();
    f.init();
    let cfg_path = f.state().join("config.toml");
    let mut cfg = Config::load(&cfg_path).unwrap();
    cfg.constitutional.lambda = Dec::from_int(2);
    fs::write(&cfg_path, cfg.to_toml()).unwrap();
    let out = kld(&f.state(), &["state", "show"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("constitutional"));
}

#[test]
fn governance_lifecycle() {
    let f = Fixture::new();
    f.init();
    let s = f.state();
    for (h, liquid, staked) in [("alice", "900", "100"), ("bob", "1000", "0")] {
        assert!(kld(&s, &["govern", "credit", "--holder", h, "--liquid", liquid, "--staked", staked]).status.success());
    }
    assert!(kld(&s, &["govern", "credit", "--holder", "vault", "--kind", "treasury", "--liquid", "1000000"]).status.success());
    let t0 = "2026-01-01T00:00:00Z";
    let bad = kld(&s, &["govern", "propose", "--proposer", "alice", "--set", "lambda=2", "--at", t0]);
    assert_eq!(bad.status.code(), Some(1));
    let ok = kld(&s, &["govern", "propose", "--proposer", "alice", "--set", "alpha_i=0.4", "--at", t0]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let id = json(&ok)["id"].to_string();
    assert!(kld(&s, &["govern", "vote", "--id", &id, "--voter", "alice", "--direction", "yes", "--at", t0]).status.success());
    let early = kld(&s, &["govern", "finalize", "--id", &id, "--at", "2026-01-02T00:00:00Z"]);
    assert_eq!(early.status.code(), Some(1));
    let fin = kld(&s, &["govern", "finalize", "--id", &id, "--at", "2026-01-08T00:00:00Z"]);
    assert_eq!(json(&fin)["status"], "Queued");
    let locked = kld(&s, &["govern", "execute", "--id", &id, "--at", "2026-01-09T00:00:00Z"]);
    assert_eq!(locked.status.code(), Some(1));
    let exec = kld(&s, &["govern", "execute", "--id", &id, "--at", "2026-01-10T00:00:00Z"]);
    assert!(exec.status.success(), "{}", String::from_utf8_lossy(&exec.stderr));
    assert_eq!(json(&exec)["params"]["alpha_i"], "0.400000000");
    let list = json(&kld(&s, &["govern", "list"]));
    assert_eq!(list["proposals"].as_array().unwrap().len(), 2);
}

#[test]
fn monthly_step_and_treasury_summary() {
    let f = Fixture::new();
    f.init();
    let s = f.state();
    let approvals = "escrow-1,escrow-2,escrow-3,escrow-4,escrow-5";
    let out = kld(&s, &["state", "month", "--release", "max", "--fees", "1000", "--approvals", approvals]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["month"]["released"], v["escrow_cap"]);
    let unsigned = kld(&s, &["state", "month", "--release", "max"]);
    assert_eq!(unsigned.status.code(), Some(1));
    let r = kld(&s, &["report", "--treasury", "monthly", "--period", "0"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report = json(&r)["report"].as_str().unwrap().to_string();
    let ok = kld(&s, &["verify", &report, "--events", s.join("events.jsonl").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
}

#[test]
fn lock_file_blocks_a_second_writer() {
    let f = Fixture::new();
    f.init();
    fs::write(f.state().join(".lock"), "").unwrap();
    let out = kld(&f.state(), &["state", "month"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("locked"));
}

#[test]
fn simulate_writes_trace() {
    let f = Fixture::new();
    let scen = f.path("s.toml");
    fs::write(&scen, "name = \"ramp\"\nseed = 3\nyears = 3\n[debt]\nkind = \"ramp\"\nfactor = \"2\"\nover_years = 2\n").unwrap();
    let out_dir = f.path("out");
    let out = kld(&f.state(), &["simulate", scen.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--compare", scen.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["months"], 36);
    assert_eq!(v["diff"]["empty"], true);
    let csv = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 37);
    assert!(out_dir.join("reports").join("report-2026.kldr").exists());
    let bad = f.path("bad.toml");
    fs::write(&bad, "seed = 1\nyears = 0\n").unwrap();
    assert_eq!(kld(&f.state(), &["simulate", bad.to_str().unwrap()]).status.code(), Some(2));
}
