//! Engine configuration.
//!
//! Three TOML sections: `constitutional` (write-once, hashed at genesis),
//! `governable` (policy coefficients, bounds and voting process) and
//! `operational` (operators, signer rosters, paths).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{canonical_digest, Digest};
use crate::decimal::Dec;
use crate::governance::{GovernanceConfig, ParameterBounds, ParameterKey};
use crate::ledger::{ApprovalPolicy, BucketKind, GenesisConfig, LockMode, ASSET_SCALE, MAX_SUPPLY_KLD};
use crate::oracle_protocol::OperatorRegistry;
use crate::policy::PolicyParams;
use crate::weo_ingest::{Bloc, VintageId};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("constitutional section hash {found} differs from genesis-recorded {recorded}")]
    ConstitutionalMismatch { recorded: Digest, found: Digest },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstitutionalSection {
    pub lambda: Dec,
    /// Genesis snapshot file from which the baseline is computed.
    pub baseline_snapshot: PathBuf,
    pub baseline_vintage: VintageId,
    pub bloc_list: Vec<Bloc>,
    pub asset_scale: u32,
    pub max_supply_kld: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub quorum_fraction: Dec,
    pub voting_period_hours: i64,
    pub timelock_hours: i64,
    pub min_stake_fraction: Dec,
}

impl Default for ProcessSection {
    fn default() -> Self {
        let g = GovernanceConfig::default();
        ProcessSection {
            quorum_fraction: g.quorum_fraction,
            voting_period_hours: g.voting_period_secs / 3600,
            timelock_hours: g.timelock_secs / 3600,
            min_stake_fraction: g.min_stake_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernableSection {
    #[serde(default)]
    pub params: PolicyParams,
    /// Overrides for the default bounds, `[lo, hi]` per governable parameter.
    #[serde(default)]
    pub bounds: BTreeMap<ParameterKey, (Dec, Dec)>,
    #[serde(default)]
    pub process: ProcessSection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterSpec {
    pub threshold: u32,
    pub signers: Vec<String>,
}

impl RosterSpec {
    pub fn to_policy(&self) -> Result<ApprovalPolicy, ConfigError> {
        ApprovalPolicy::new(self.threshold, self.signers.iter().cloned()).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationalSection {
    pub genesis_year: i32,
    pub operators: Vec<String>,
    pub executor: RosterSpec,
    #[serde(default)]
    pub multisig: BTreeMap<BucketKind, RosterSpec>,
    #[serde(default)]
    pub holiday_calendar: Option<PathBuf>,
    #[serde(default)]
    pub token_escrow: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub constitutional: ConstitutionalSection,
    pub governable: GovernableSection,
    pub operational: OperationalSection,
}

impl Config {
    /// A complete default configuration around a baseline snapshot.
    pub fn with_baseline(baseline_snapshot: impl Into<PathBuf>, baseline_vintage: VintageId, genesis_year: i32) -> Self {
        Config {
            constitutional: ConstitutionalSection {
                lambda: Dec::ONE,
                baseline_snapshot: baseline_snapshot.into(),
                baseline_vintage,
                bloc_list: Bloc::ALL.to_vec(),
                asset_scale: ASSET_SCALE,
                max_supply_kld: MAX_SUPPLY_KLD,
            },
            governable: GovernableSection { params: PolicyParams::default(), bounds: BTreeMap::new(), process: ProcessSection::default() },
            operational: OperationalSection {
                genesis_year,
                operators: (1..=5).map(|i| format!("operator-{i}")).collect(),
                executor: RosterSpec { threshold: 5, signers: (1..=8).map(|i| format!("executor-{i}")).collect() },
                multisig: BTreeMap::new(),
                holiday_calendar: None,
                token_escrow: false,
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.into(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    /// Load and check the constitutional hash against the one recorded at genesis.
    pub fn load_checked(path: &Path, recorded: Digest) -> Result<Self, ConfigError> {
        let c = Self::load(path)?;
        c.check_constitutional(recorded)?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn constitutional_hash(&self) -> Digest {
        canonical_digest(&self.constitutional).expect("section encodes")
    }

    pub fn check_constitutional(&self, recorded: Digest) -> Result<(), ConfigError> {
        let found = self.constitutional_hash();
        if found != recorded {
            return Err(ConfigError::ConstitutionalMismatch { recorded, found });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.constitutional;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !c.lambda.is_positive() {
            return bad("lambda must be positive".into());
        }
        if c.bloc_list != Bloc::ALL {
            return bad("bloc_list must be US, EA20, JP, UK, CA, AU, KR in that order".into());
        }
        if c.asset_scale != ASSET_SCALE {
            return bad(format!("asset_scale must be {ASSET_SCALE}"));
        }
        if c.max_supply_kld != MAX_SUPPLY_KLD {
            return bad(format!("max_supply_kld must be {MAX_SUPPLY_KLD}"));
        }
        self.governable.params.check().map_err(ConfigError::Invalid)?;
        let gov = self.governance()?;
        for k in ParameterKey::GOVERNABLE {
            let v = match k {
                ParameterKey::AlphaI => self.governable.params.alpha_i,
                ParameterKey::BetaB => self.governable.params.beta_b,
                ParameterKey::AlphaE => self.governable.params.alpha_e,
                ParameterKey::Gamma => self.governable.params.gamma,
                ParameterKey::BMax => self.governable.params.b_max,
                ParameterKey::StakingMultiplier => self.governable.params.staking_multiplier,
                _ => unreachable!(),
            };
            gov.bounds.check(k, v).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.operational.operators.is_empty() {
            return bad("at least one oracle operator is required".into());
        }
        self.operational.executor.to_policy()?;
        for r in self.operational.multisig.values() {
            r.to_policy()?;
        }
        Ok(())
    }

    pub fn governance(&self) -> Result<GovernanceConfig, ConfigError> {
        let mut bounds: BTreeMap<ParameterKey, (Dec, Dec)> = ParameterBounds::default().iter().collect();
        for (k, v) in &self.governable.bounds {
            if !k.is_governable() {
                return Err(ConfigError::Invalid(format!("{k} is not governable and takes no bounds")));
            }
            bounds.insert(*k, *v);
        }
        let p = &self.governable.process;
        Ok(GovernanceConfig {
            quorum_fraction: p.quorum_fraction,
            voting_period_secs: p.voting_period_hours * 3600,
            timelock_secs: p.timelock_hours * 3600,
            min_stake_fraction: p.min_stake_fraction,
            bounds: ParameterBounds::new(bounds).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        })
    }

    pub fn operators(&self) -> OperatorRegistry {
        OperatorRegistry::new(self.operational.operators.iter().cloned())
    }

    pub fn executor(&self) -> Result<ApprovalPolicy, ConfigError> {
        self.operational.executor.to_policy()
    }

    pub fn genesis_config(&self) -> Result<GenesisConfig, ConfigError> {
        let mut g = GenesisConfig::table(self.governable.params.clone(), self.operational.genesis_year);
        for (k, r) in &self.operational.multisig {
            g.multisig.insert(*k, r.to_policy()?);
        }
        if self.operational.token_escrow {
            g.escrow_mode = LockMode::TokenEscrow;
        }
        Ok(g)
    }

    /// Resolve a path from the config relative to `root`.
    pub fn resolve(root: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            root.join(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Config {
        Config::with_baseline("baseline.csv", "2024-October".parse().unwrap(), 2025)
    }

    #[test]
    fn toml_round_trip() {
        let c = base();
        let text = c.to_toml();
        assert_eq!(Config::parse(&text).unwrap(), c);
    }

    #[test]
    fn constitutional_hash_guards_changes() {
        let c = base();
        let h = c.constitutional_hash();
        let mut changed = c.clone();
        changed.constitutional.lambda = Dec::from_int(2);
        assert!(matches!(changed.check_constitutional(h), Err(ConfigError::ConstitutionalMismatch { .. })));
        let mut governable_only = c.clone();
        governable_only.governable.params.alpha_i = Dec::from_ratio(3, 10);
        governable_only.check_constitutional(h).unwrap();
    }

    #[test]
    fn rejects_tampered_constants() {
        let mut c = base();
        c.constitutional.max_supply_kld += 1;
        assert!(c.validate().is_err());
        let mut c = base();
        c.constitutional.bloc_list.pop();
        assert!(c.validate().is_err());
        let mut c = base();
        c.governable.bounds.insert(ParameterKey::Lambda, (Dec::ZERO, Dec::ONE));
        assert!(c.validate().is_err());
        let mut c = base();
        c.governable.bounds.insert(ParameterKey::AlphaI, (Dec::ZERO, Dec::from_ratio(5, 100)));
        assert!(c.validate().is_err(), "default alpha_i 0.5 lies outside [0, 0.05]");
    }

    #[test]
    fn partial_params_take_defaults() {
        let mut text = base().to_toml();
        text = text.replace("[governable.params]", "[governable.params]\n# tuned");
        let c = Config::parse(&text).unwrap();
        assert_eq!(c.governable.params, PolicyParams::default());
        let minimal = r#"
[constitutional]
lambda = "1"
baseline_snapshot = "b.csv"
baseline_vintage = "2024-October"
bloc_list = ["US", "EA20", "JP", "UK", "CA", "AU", "KR"]
asset_scale = 6
max_supply_kld = 10000000000

[governable.params]
alpha_i = "0.03"

[operational]
genesis_year = 2025
operators = ["a", "b", "c"]
executor = { threshold = 2, signers = ["x", "y", "z"] }
"#;
        let c = Config::parse(minimal).unwrap();
        assert_eq!(c.governable.params.alpha_i, Dec::from_ratio(3, 100));
        assert_eq!(c.governable.params.b_max, PolicyParams::default().b_max);
    }
}
