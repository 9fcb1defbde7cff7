//! Debt-indexed monetary policy engine: macro-data ingestion, the bloc debt
//! index, policy factors, an exact-integer supply ledger, the oracle and
//! governance state machines, verifiable reports and a scenario simulator.

pub mod canonical;
pub mod config;
pub mod debt_index;
pub mod decimal;
pub mod governance;
pub mod ledger;
pub mod oracle_protocol;
pub mod policy;
pub mod reporting;
pub mod simulator;
pub mod weo_ingest;

pub use canonical::Digest;
pub use config::Config;
pub use debt_index::{BaselineRef, DebtIndexState};
pub use decimal::Dec;
pub use governance::{GovernanceConfig, GovernanceRegistry, ParameterKey};
pub use ledger::{Amount, BucketKind, EventLog, GenesisConfig, Ledger, LedgerState};
pub use oracle_protocol::{Clock, CycleRecord, OracleSubmission, SubmissionPayload, SystemClock, VirtualClock};
pub use policy::{PolicyFactors, PolicyParams};
pub use reporting::{PolicyReport, ReportCommitment};
pub use simulator::{Scenario, Trace};
pub use weo_ingest::{Bloc, BlocObservation, VintageId, WeoVintage};
