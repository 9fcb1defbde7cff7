//! `kld`: operator command line for the policy engine.
//!
//! Exit codes: 0 success, 1 verification or policy failure, 2 input error.

mod commands;
mod output;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "kld", version, about = "Debt-indexed monetary policy engine")]
pub struct Cli {
    /// Root of the engine state; all state paths are relative to it.
    #[arg(long, global = true, env = "KLD_STATE_DIR", default_value = ".kld")]
    pub state_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the debt index for a snapshot file.
    Index(IndexArgs),
    /// Run or resume the oracle cycle for one policy year.
    Cycle(CycleArgs),
    /// Run a scenario file through the full pipeline.
    Simulate(SimulateArgs),
    /// Build a policy report or a treasury summary from the state directory.
    Report(ReportArgs),
    /// Verify a report against its commitment and, if given, the event log.
    Verify(VerifyArgs),
    /// Parameter governance: holders, proposals, votes and motions.
    #[command(subcommand)]
    Govern(GovernCommand),
    /// Initialize, inspect, check or advance the ledger state.
    #[command(subcommand)]
    State(StateCommand),
}

pub fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s).map(|t| t.with_timezone(&Utc)).map_err(|e| format!("expected RFC 3339 time: {e}"))
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    /// Snapshot CSV with columns bloc,series,value,vintage.
    pub snapshot: PathBuf,
    /// Vintage id of the snapshot, e.g. 2025-October.
    #[arg(long)]
    pub vintage: String,
    /// Publication date of the vintage (defaults to the first of its release month).
    #[arg(long)]
    pub published: Option<chrono::NaiveDate>,
    /// Genesis baseline snapshot; defaults to the state directory's frozen baseline.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, requires = "baseline")]
    pub baseline_vintage: Option<String>,
    /// Last confirmed snapshot, used for missing series.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long, requires = "prior")]
    pub prior_vintage: Option<String>,
    /// Policy factor sensitivity; defaults to the state config, else 1.
    #[arg(long)]
    pub lambda: Option<kld_core::Dec>,
    /// Write a signed submission for this operator.
    #[arg(long, requires_all = ["out"])]
    pub sign_as: Option<String>,
    #[arg(long, value_parser = parse_time)]
    pub at: Option<DateTime<Utc>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CycleArgs {
    /// Policy year; defaults to the year after the ledger's current cycle.
    #[arg(long)]
    pub year: Option<i32>,
    /// Directory of signed submission JSON files (new cycles only).
    #[arg(long)]
    pub submissions: Option<PathBuf>,
    /// Publication time; opens the challenge window.
    #[arg(long, value_parser = parse_time)]
    pub open_at: Option<DateTime<Utc>>,
    /// Flags as OPERATOR:ISSUE_CODE.
    #[arg(long = "flag")]
    pub flags: Vec<String>,
    /// When flags are raised; defaults to the publication time.
    #[arg(long, value_parser = parse_time)]
    pub flag_at: Option<DateTime<Utc>>,
    /// Virtual time at which the window is resolved; defaults to publication + 72h.
    #[arg(long, value_parser = parse_time)]
    pub at: Option<DateTime<Utc>>,
    /// Signed corrected submission for a disputed window.
    #[arg(long)]
    pub correction: Option<PathBuf>,
    /// Executor approvals, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub approvals: Vec<String>,
    /// Note recorded when the December fallback was used.
    #[arg(long)]
    pub fallback_note: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    /// Write trace.csv, trace.json and reports here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Second scenario to diff against.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum SummaryKind {
    Monthly,
    Quarterly,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Annual report for this cycle year (must be the current cycle).
    #[arg(long, conflicts_with = "treasury")]
    pub year: Option<i32>,
    /// Treasury summary instead of the annual report.
    #[arg(long, value_enum)]
    pub treasury: Option<SummaryKind>,
    /// Month index (monthly) or quarter index (quarterly).
    #[arg(long, requires = "treasury")]
    pub period: Option<u32>,
    /// Reference link recorded in the commitment.
    #[arg(long)]
    pub link: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub report: PathBuf,
    /// Commitment file; defaults to the report path with a `.commit` extension.
    #[arg(long)]
    pub commit: Option<PathBuf>,
    /// Event log to reconcile against; without it reconciliation is skipped and the exit code is 2.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum HolderKind {
    Holder,
    Treasury,
    Escrow,
    UnvestedTeam,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Direction {
    Yes,
    No,
    Abstain,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Motion {
    Pause,
    Halt,
    Restore,
}

#[derive(Subcommand, Debug)]
pub enum GovernCommand {
    /// Credit an account in the holder book (amounts in KLD).
    Credit {
        #[arg(long)]
        holder: String,
        #[arg(long, value_enum, default_value_t = HolderKind::Holder)]
        kind: HolderKind,
        #[arg(long, default_value = "0")]
        liquid: kld_core::Dec,
        #[arg(long, default_value = "0")]
        staked: kld_core::Dec,
    },
    /// Open a proposal; changes as KEY=VALUE.
    Propose {
        #[arg(long)]
        proposer: String,
        #[arg(long = "set", required = true)]
        changes: Vec<String>,
        #[arg(long, value_parser = parse_time)]
        at: DateTime<Utc>,
    },
    Vote {
        #[arg(long)]
        id: u64,
        #[arg(long)]
        voter: String,
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long, value_parser = parse_time)]
        at: DateTime<Utc>,
    },
    Finalize {
        #[arg(long)]
        id: u64,
        #[arg(long, value_parser = parse_time)]
        at: DateTime<Utc>,
    },
    /// Apply a queued proposal after its timelock; values take effect at the next cycle.
    Execute {
        #[arg(long)]
        id: u64,
        #[arg(long, value_parser = parse_time)]
        at: DateTime<Utc>,
    },
    /// Tally a quorum motion and apply it to the year's cycle; votes as HOLDER=yes|no|abstain.
    Motion {
        #[arg(long, value_enum)]
        kind: Motion,
        #[arg(long)]
        year: i32,
        #[arg(long = "vote")]
        votes: Vec<String>,
        #[arg(long, value_parser = parse_time)]
        at: DateTime<Utc>,
    },
    /// List proposals.
    List,
}

#[derive(Subcommand, Debug)]
pub enum StateCommand {
    /// Create the state directory at genesis from a config file.
    Init {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print balances, factors and the current state hash.
    Show,
    /// Replay the event log and check every stored hash.
    Check,
    /// Advance one month: optional escrow release and reserve spend, then vest, emit and burn.
    Month {
        /// Fees paid this month, in KLD.
        #[arg(long, default_value = "0")]
        fees: kld_core::Dec,
        /// Escrow release request in KLD, or `max`.
        #[arg(long)]
        release: Option<String>,
        /// Share of the release relocked instead of distributed.
        #[arg(long, default_value = "0")]
        relock: kld_core::Dec,
        /// Reserve spend in KLD.
        #[arg(long, default_value = "0")]
        reserve_spend: kld_core::Dec,
        /// Bucket signer approvals, comma separated.
        #[arg(long, value_delimiter = ',')]
        approvals: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(out) => {
            if let Err(e) = out.print(cli.format) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
