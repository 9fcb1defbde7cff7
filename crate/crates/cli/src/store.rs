//! State directory layout and the single-writer lock.
//!
//! ```text
//! <state-dir>/
//!   config.toml            operator config (constitutional section frozen at init)
//!   constitutional.sha256  hash of the constitutional section recorded at genesis
//!   baseline.json          frozen baseline reference
//!   ledger.json            current ledger state
//!   events.jsonl           append-only hash-chained event log
//!   governance.json        proposals, holder book and per-proposal snapshots
//!   cycles/<year>.json     oracle cycle records
//!   cycles/<year>.meta.json
//!   reports/               report bodies and commitments
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use kld_core::canonical::{from_canonical_bytes, to_canonical_bytes};
use kld_core::governance::{GovernanceRegistry, HolderBook, ProposalId, VotingPowerView};
use kld_core::{BaselineRef, Bloc, Config, CycleRecord, Digest, EventLog, Ledger, LedgerState};

pub const CONFIG: &str = "config.toml";
pub const CONSTITUTIONAL_HASH: &str = "constitutional.sha256";
pub const BASELINE: &str = "baseline.json";
pub const LEDGER: &str = "ledger.json";
pub const EVENTS: &str = "events.jsonl";
pub const GOVERNANCE: &str = "governance.json";
pub const CYCLES: &str = "cycles";
pub const REPORTS: &str = "reports";
const LOCK: &str = ".lock";

/// Held for the lifetime of a mutating command.
pub struct Lock {
    path: PathBuf,
}

impl Lock {
    pub fn acquire(dir: &Path) -> Result<Lock> {
        let path = dir.join(LOCK);
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .with_context(|| format!("state directory {} is locked by another writer ({})", dir.display(), path.display()))?;
        Ok(Lock { path })
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GovernanceStore {
    pub registry: GovernanceRegistry,
    pub holders: HolderBook,
    pub views: BTreeMap<ProposalId, VotingPowerView>,
}

/// Bookkeeping a cycle report needs beyond the record itself.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CycleMeta {
    pub start_seq: Option<u64>,
    pub governance_start: usize,
    pub fallback_note: Option<String>,
    pub carried_forward_blocs: BTreeSet<Bloc>,
}

pub struct Store {
    pub dir: PathBuf,
    pub config: Config,
    pub baseline: BaselineRef,
    pub ledger: Ledger,
    pub governance: GovernanceStore,
    persisted_events: u64,
}

fn write_canonical<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = to_canonical_bytes(value)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

fn read_canonical<T: Serialize + serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    from_canonical_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}

impl Store {
    pub fn exists(dir: &Path) -> bool {
        dir.join(LEDGER).exists()
    }

    /// Create a fresh state directory at genesis.
    pub fn init(dir: &Path, config: Config, baseline: BaselineRef) -> Result<Store> {
        if Self::exists(dir) {
            bail!("{} already holds engine state", dir.display());
        }
        fs::create_dir_all(dir.join(CYCLES))?;
        fs::create_dir_all(dir.join(REPORTS))?;
        let ledger = Ledger::genesis(&config.genesis_config()?)?;
        fs::write(dir.join(CONFIG), config.to_toml())?;
        fs::write(dir.join(CONSTITUTIONAL_HASH), format!("{}\n", config.constitutional_hash()))?;
        write_canonical(&dir.join(BASELINE), &baseline)?;
        let store = Store {
            dir: dir.to_path_buf(),
            governance: GovernanceStore { registry: GovernanceRegistry::new(config.governance()?), ..Default::default() },
            config,
            baseline,
            ledger,
            persisted_events: 0,
        };
        store.save_ledger_initial()?;
        Ok(store)
    }

    fn save_ledger_initial(&self) -> Result<()> {
        let events = self.dir.join(EVENTS);
        if events.exists() {
            bail!("{} already exists", events.display());
        }
        self.ledger.log().append_to_file(&events, 0)?;
        write_canonical(&self.dir.join(LEDGER), self.ledger.state())?;
        write_canonical(&self.dir.join(GOVERNANCE), &self.governance)?;
        Ok(())
    }

    pub fn open(dir: &Path) -> Result<Store> {
        if !Self::exists(dir) {
            bail!("{} holds no engine state; run `kld state init` first", dir.display());
        }
        let recorded: Digest = fs::read_to_string(dir.join(CONSTITUTIONAL_HASH))
            .context("reading the genesis constitutional hash")?
            .trim()
            .parse()
            .map_err(|e| anyhow::anyhow!("genesis constitutional hash: {e}"))?;
        let config = Config::load_checked(&dir.join(CONFIG), recorded)?;
        let baseline: BaselineRef = read_canonical(&dir.join(BASELINE))?;
        let state: LedgerState = read_canonical(&dir.join(LEDGER))?;
        let log = EventLog::load(&dir.join(EVENTS))?;
        let persisted_events = log.position();
        let ledger = Ledger::from_parts(state, log)?;
        let governance: GovernanceStore = read_canonical(&dir.join(GOVERNANCE))?;
        Ok(Store { dir: dir.to_path_buf(), config, baseline, ledger, governance, persisted_events })
    }

    /// Append new events, then replace the state snapshot and governance file.
    pub fn save(&mut self) -> Result<()> {
        self.ledger.log().append_to_file(&self.dir.join(EVENTS), self.persisted_events)?;
        self.persisted_events = self.ledger.log().position();
        write_canonical(&self.dir.join(LEDGER), self.ledger.state())?;
        write_canonical(&self.dir.join(GOVERNANCE), &self.governance)?;
        Ok(())
    }

    pub fn save_config(&self) -> Result<()> {
        fs::write(self.dir.join(CONFIG), self.config.to_toml())?;
        Ok(())
    }

    fn cycle_path(&self, year: i32) -> PathBuf {
        self.dir.join(CYCLES).join(format!("{year}.json"))
    }

    fn meta_path(&self, year: i32) -> PathBuf {
        self.dir.join(CYCLES).join(format!("{year}.meta.json"))
    }

    pub fn load_cycle(&self, year: i32) -> Result<Option<(CycleRecord, CycleMeta)>> {
        let path = self.cycle_path(year);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some((read_canonical(&path)?, read_canonical(&self.meta_path(year))?)))
    }

    pub fn save_cycle(&self, record: &CycleRecord, meta: &CycleMeta) -> Result<()> {
        write_canonical(&self.cycle_path(record.cycle_year()), record)?;
        write_canonical(&self.meta_path(record.cycle_year()), meta)
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.dir.join(REPORTS)
    }
}
