//! Parameter governance: bounded proposals, snapshot-weighted voting, quorum
//! over eligible supply, timelocked execution, and quorum motions used by the
//! oracle protocol.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::Dec;
use crate::ledger::Amount;
use crate::policy::PolicyParams;

pub type HolderId = String;
pub type ProposalId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GovernanceError {
    #[error("proposer stake {have} is below the minimum {need}")]
    InsufficientStake { have: Amount, need: Amount },
    #[error("{0} is constitutional or fixed and cannot be changed by governance")]
    InvalidImmutable(ParameterKey),
    #[error("{key} = {value} outside [{lo}, {hi}]")]
    OutOfBounds { key: ParameterKey, value: Dec, lo: Dec, hi: Dec },
    #[error("changed parameters violate a structural constraint: {0}")]
    Inconsistent(String),
    #[error("proposal changes nothing")]
    EmptyProposal,
    #[error("{0} already has a live proposal")]
    ParameterBusy(ParameterKey),
    #[error("voting has closed")]
    VotingClosed,
    #[error("voting is still open")]
    VotingOpen,
    #[error("{0} has no eligible voting power at the snapshot")]
    ZeroPower(HolderId),
    #[error("voting power view was taken at position {view}, proposal snapshot is {proposal}")]
    SnapshotMismatch { view: u64, proposal: u64 },
    #[error("proposal already finalized")]
    AlreadyFinalized,
    #[error("proposal is not queued")]
    NotQueued,
    #[error("timelock active until {0}")]
    TimelockActive(DateTime<Utc>),
    #[error("unknown proposal {0}")]
    UnknownProposal(ProposalId),
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("insufficient balance in {0}")]
    InsufficientBalance(HolderId),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
}

/// Every parameter name governance may be asked to change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKey {
    AlphaI,
    BetaB,
    AlphaE,
    Gamma,
    BMax,
    StakingMultiplier,
    // fixed economic constants outside the governable list
    BBase,
    EMin,
    RBase,
    Lambda,
    // constitutional
    DebtIndexDefinition,
    BdiRef,
    DataSources,
    UpdateCadence,
    MaxSupply,
    MintDisabled,
    BurnIrreversibility,
    MultisigRequirement,
    BlocList,
    AggregationFormula,
    RevisionRule,
    PolicyFunctionalForms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterClass {
    Governable,
    Fixed,
    Constitutional,
}

impl ParameterKey {
    pub const ALL: [ParameterKey; 22] = [
        ParameterKey::AlphaI,
        ParameterKey::BetaB,
        ParameterKey::AlphaE,
        ParameterKey::Gamma,
        ParameterKey::BMax,
        ParameterKey::StakingMultiplier,
        ParameterKey::BBase,
        ParameterKey::EMin,
        ParameterKey::RBase,
        ParameterKey::Lambda,
        ParameterKey::DebtIndexDefinition,
        ParameterKey::BdiRef,
        ParameterKey::DataSources,
        ParameterKey::UpdateCadence,
        ParameterKey::MaxSupply,
        ParameterKey::MintDisabled,
        ParameterKey::BurnIrreversibility,
        ParameterKey::MultisigRequirement,
        ParameterKey::BlocList,
        ParameterKey::AggregationFormula,
        ParameterKey::RevisionRule,
        ParameterKey::PolicyFunctionalForms,
    ];

    pub const GOVERNABLE: [ParameterKey; 6] = [
        ParameterKey::AlphaI,
        ParameterKey::BetaB,
        ParameterKey::AlphaE,
        ParameterKey::Gamma,
        ParameterKey::BMax,
        ParameterKey::StakingMultiplier,
    ];

    pub fn class(self) -> ParameterClass {
        use ParameterKey::*;
        match self {
            AlphaI | BetaB | AlphaE | Gamma | BMax | StakingMultiplier => ParameterClass::Governable,
            BBase | EMin | RBase | Lambda => ParameterClass::Fixed,
            _ => ParameterClass::Constitutional,
        }
    }

    pub fn is_governable(self) -> bool {
        self.class() == ParameterClass::Governable
    }

    pub fn name(self) -> &'static str {
        use ParameterKey::*;
        match self {
            AlphaI => "alpha_i",
            BetaB => "beta_b",
            AlphaE => "alpha_e",
            Gamma => "gamma",
            BMax => "b_max",
            StakingMultiplier => "staking_multiplier",
            BBase => "b_base",
            EMin => "e_min",
            RBase => "r_base",
            Lambda => "lambda",
            DebtIndexDefinition => "debt_index_definition",
            BdiRef => "bdi_ref",
            DataSources => "data_sources",
            UpdateCadence => "update_cadence",
            MaxSupply => "s_max",
            MintDisabled => "mint_disabled",
            BurnIrreversibility => "burn_irreversibility",
            MultisigRequirement => "multisig_requirement",
            BlocList => "bloc_list",
            AggregationFormula => "aggregation_formula",
            RevisionRule => "revision_rule",
            PolicyFunctionalForms => "policy_functional_forms",
        }
    }

    fn apply(self, params: &mut PolicyParams, value: Dec) {
        match self {
            ParameterKey::AlphaI => params.alpha_i = value,
            ParameterKey::BetaB => params.beta_b = value,
            ParameterKey::AlphaE => params.alpha_e = value,
            ParameterKey::Gamma => params.gamma = value,
            ParameterKey::BMax => params.b_max = value,
            ParameterKey::StakingMultiplier => params.staking_multiplier = value,
            _ => unreachable!("only governable keys are applied"),
        }
    }
}

impl fmt::Display for ParameterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParameterKey {
    type Err = GovernanceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParameterKey::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| GovernanceError::UnknownParameter(s.to_string()))
    }
}

/// Closed intervals for the governable parameters, exactly one per key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterBounds {
    bounds: BTreeMap<ParameterKey, (Dec, Dec)>,
}

impl Default for ParameterBounds {
    fn default() -> Self {
        let one = Dec::ONE;
        let two = Dec::from_int(2);
        let bounds = [
            (ParameterKey::AlphaI, (Dec::ZERO, one)),
            (ParameterKey::BetaB, (Dec::ZERO, two)),
            (ParameterKey::AlphaE, (Dec::ZERO, one)),
            (ParameterKey::Gamma, (Dec::ZERO, two)),
            (ParameterKey::BMax, (Dec::ZERO, one)),
            (ParameterKey::StakingMultiplier, (Dec::ZERO, two)),
        ]
        .into_iter()
        .collect();
        ParameterBounds { bounds }
    }
}

impl ParameterBounds {
    pub fn new(bounds: BTreeMap<ParameterKey, (Dec, Dec)>) -> Result<Self, GovernanceError> {
        let keys: BTreeSet<_> = bounds.keys().copied().collect();
        let governable: BTreeSet<_> = ParameterKey::GOVERNABLE.into_iter().collect();
        if keys != governable {
            return Err(GovernanceError::InvalidBounds("bounds must cover exactly the governable parameters".into()));
        }
        for (k, (lo, hi)) in &bounds {
            if lo > hi {
                return Err(GovernanceError::InvalidBounds(format!("{k}: {lo} > {hi}")));
            }
        }
        Ok(ParameterBounds { bounds })
    }

    pub fn get(&self, key: ParameterKey) -> Option<(Dec, Dec)> {
        self.bounds.get(&key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParameterKey, (Dec, Dec))> + '_ {
        self.bounds.iter().map(|(k, v)| (*k, *v))
    }

    pub fn check(&self, key: ParameterKey, value: Dec) -> Result<(), GovernanceError> {
        if !key.is_governable() {
            return Err(GovernanceError::InvalidImmutable(key));
        }
        let (lo, hi) = self.bounds[&key];
        if value < lo || value > hi {
            return Err(GovernanceError::OutOfBounds { key, value, lo, hi });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GovernanceConfig {
    pub quorum_fraction: Dec,
    pub voting_period_secs: i64,
    pub timelock_secs: i64,
    pub min_stake_fraction: Dec,
    pub bounds: ParameterBounds,
}

impl Default for GovernanceConfig {
    fn default() -> Self {
        GovernanceConfig {
            quorum_fraction: Dec::from_ratio(5, 100),
            voting_period_secs: 7 * 24 * 3600,
            timelock_secs: 48 * 3600,
            min_stake_fraction: Dec::from_ratio(1, 1000),
            bounds: ParameterBounds::default(),
        }
    }
}

impl GovernanceConfig {
    pub fn voting_period(&self) -> Duration {
        Duration::seconds(self.voting_period_secs)
    }

    pub fn timelock(&self) -> Duration {
        Duration::seconds(self.timelock_secs)
    }

    /// `⌈quorum_fraction · eligible⌉`.
    pub fn quorum_threshold(&self, eligible: Amount) -> Amount {
        ceil_fraction(self.quorum_fraction, eligible)
    }

    pub fn min_stake(&self, eligible: Amount) -> Amount {
        ceil_fraction(self.min_stake_fraction, eligible)
    }
}

fn ceil_fraction(f: Dec, a: Amount) -> Amount {
    let exact = f.mul_units_exact(a.units()).expect("bounded");
    let s = crate::decimal::SCALE;
    Amount::from_units(((exact + s - 1) / s) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccountKind {
    Holder,
    Treasury,
    Escrow,
    UnvestedTeam,
}

impl AccountKind {
    pub fn is_eligible(self) -> bool {
        self == AccountKind::Holder
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub kind: AccountKind,
    pub liquid: Amount,
    pub staked: Amount,
}

impl Account {
    pub fn total(&self) -> Amount {
        Amount::from_units(self.liquid.units() + self.staked.units())
    }
}

/// Holder balances used for voting power. Ineligible account kinds are kept
/// so that transfers out of them are observable, but never carry power.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolderBook {
    accounts: BTreeMap<HolderId, Account>,
}

impl HolderBook {
    pub fn credit(&mut self, id: &str, kind: AccountKind, liquid: Amount, staked: Amount) {
        let e = self.accounts.entry(id.to_string()).or_insert(Account { kind, liquid: Amount::ZERO, staked: Amount::ZERO });
        e.kind = kind;
        e.liquid = Amount::from_units(e.liquid.units() + liquid.units());
        e.staked = Amount::from_units(e.staked.units() + staked.units());
    }

    pub fn account(&self, id: &str) -> Option<&Account> {
        self.accounts.get(id)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&HolderId, &Account)> {
        self.accounts.iter()
    }

    /// Move liquid balance; the recipient is created as a holder if absent.
    pub fn transfer(&mut self, from: &str, to: &str, amount: Amount) -> Result<(), GovernanceError> {
        let src = self.accounts.get_mut(from).ok_or_else(|| GovernanceError::InsufficientBalance(from.into()))?;
        if src.liquid < amount {
            return Err(GovernanceError::InsufficientBalance(from.into()));
        }
        src.liquid = src.liquid.saturating_sub(amount);
        self.credit(to, self.accounts.get(to).map(|a| a.kind).unwrap_or(AccountKind::Holder), amount, Amount::ZERO);
        Ok(())
    }

    pub fn stake(&mut self, id: &str, amount: Amount) -> Result<(), GovernanceError> {
        let a = self.accounts.get_mut(id).ok_or_else(|| GovernanceError::InsufficientBalance(id.into()))?;
        if a.liquid < amount {
            return Err(GovernanceError::InsufficientBalance(id.into()));
        }
        a.liquid = a.liquid.saturating_sub(amount);
        a.staked = Amount::from_units(a.staked.units() + amount.units());
        Ok(())
    }

    pub fn snapshot(&self, position: u64) -> VotingPowerView {
        let mut power = BTreeMap::new();
        let mut staked = BTreeMap::new();
        let mut total = 0u64;
        for (id, a) in &self.accounts {
            if !a.kind.is_eligible() {
                continue;
            }
            let p = a.total();
            if !p.is_zero() {
                total += p.units();
                power.insert(id.clone(), p);
            }
            if !a.staked.is_zero() {
                staked.insert(id.clone(), a.staked);
            }
        }
        VotingPowerView { position, power, staked, total_eligible: Amount::from_units(total) }
    }
}

/// Eligible balances frozen at one event-log position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingPowerView {
    pub position: u64,
    power: BTreeMap<HolderId, Amount>,
    staked: BTreeMap<HolderId, Amount>,
    total_eligible: Amount,
}

impl VotingPowerView {
    pub fn power_of(&self, id: &str) -> Amount {
        self.power.get(id).copied().unwrap_or_default()
    }

    pub fn staked_of(&self, id: &str) -> Amount {
        self.staked.get(id).copied().unwrap_or_default()
    }

    /// Quorum denominator.
    pub fn total_eligible(&self) -> Amount {
        self.total_eligible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteDirection {
    Yes,
    No,
    Abstain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub yes: Amount,
    pub no: Amount,
    pub abstain: Amount,
}

impl Tally {
    pub fn participation(&self) -> Amount {
        Amount::from_units(self.yes.units() + self.no.units() + self.abstain.units())
    }

    fn from_votes<'a>(votes: impl Iterator<Item = &'a (VoteDirection, Amount)>) -> Tally {
        let mut t = Tally::default();
        for (d, w) in votes {
            let slot = match d {
                VoteDirection::Yes => &mut t.yes,
                VoteDirection::No => &mut t.no,
                VoteDirection::Abstain => &mut t.abstain,
            };
            *slot = Amount::from_units(slot.units() + w.units());
        }
        t
    }

    /// Quorum over eligible supply and a strict majority of yes over no.
    pub fn outcome(&self, eligible: Amount, cfg: &GovernanceConfig) -> (bool, bool) {
        let quorum_met = !eligible.is_zero() && self.participation() >= cfg.quorum_threshold(eligible);
        (quorum_met, quorum_met && self.yes > self.no)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposalStatus {
    Voting,
    Rejected,
    Queued,
    Executed,
    InvalidImmutable,
    OutOfBounds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: ProposalId,
    pub proposer: HolderId,
    pub changes: BTreeMap<ParameterKey, Dec>,
    pub snapshot_block: u64,
    pub created_at: DateTime<Utc>,
    pub voting_ends: DateTime<Utc>,
    pub timelock_ends: Option<DateTime<Utc>>,
    pub status: ProposalStatus,
    pub eligible_supply: Amount,
    votes: BTreeMap<HolderId, (VoteDirection, Amount)>,
}

impl Proposal {
    pub fn tally(&self) -> Tally {
        Tally::from_votes(self.votes.values())
    }

    pub fn votes(&self) -> &BTreeMap<HolderId, (VoteDirection, Amount)> {
        &self.votes
    }

    pub fn is_live(&self) -> bool {
        matches!(self.status, ProposalStatus::Voting | ProposalStatus::Queued)
    }

    /// Record a vote weighted by snapshot power; a repeat vote replaces the earlier one.
    pub fn vote(&mut self, voter: &str, view: &VotingPowerView, direction: VoteDirection, now: DateTime<Utc>) -> Result<(), GovernanceError> {
        if self.status != ProposalStatus::Voting || now >= self.voting_ends {
            return Err(GovernanceError::VotingClosed);
        }
        if view.position != self.snapshot_block {
            return Err(GovernanceError::SnapshotMismatch { view: view.position, proposal: self.snapshot_block });
        }
        let power = view.power_of(voter);
        if power.is_zero() {
            return Err(GovernanceError::ZeroPower(voter.to_string()));
        }
        self.votes.insert(voter.to_string(), (direction, power));
        Ok(())
    }

    pub fn finalize(&mut self, now: DateTime<Utc>, cfg: &GovernanceConfig) -> Result<ProposalStatus, GovernanceError> {
        if self.status != ProposalStatus::Voting {
            return Err(GovernanceError::AlreadyFinalized);
        }
        if now < self.voting_ends {
            return Err(GovernanceError::VotingOpen);
        }
        let (_, passed) = self.tally().outcome(self.eligible_supply, cfg);
        if passed {
            self.status = ProposalStatus::Queued;
            self.timelock_ends = Some(now + cfg.timelock());
        } else {
            self.status = ProposalStatus::Rejected;
        }
        Ok(self.status)
    }

    /// Apply the queued changes. The caller adopts the result at the next cycle derivation.
    pub fn execute(&mut self, params: &PolicyParams, now: DateTime<Utc>) -> Result<PolicyParams, GovernanceError> {
        if self.status != ProposalStatus::Queued {
            return Err(GovernanceError::NotQueued);
        }
        let ends = self.timelock_ends.expect("queued proposals carry a timelock");
        if now < ends {
            return Err(GovernanceError::TimelockActive(ends));
        }
        let next = apply_changes(params, &self.changes)?;
        self.status = ProposalStatus::Executed;
        Ok(next)
    }
}

fn apply_changes(params: &PolicyParams, changes: &BTreeMap<ParameterKey, Dec>) -> Result<PolicyParams, GovernanceError> {
    let mut next = params.clone();
    for (k, v) in changes {
        k.apply(&mut next, *v);
    }
    next.check().map_err(GovernanceError::Inconsistent)?;
    Ok(next)
}

/// Validate a change set: immutability before bounds, then structural consistency.
pub fn check_changes(
    changes: &BTreeMap<ParameterKey, Dec>,
    params: &PolicyParams,
    cfg: &GovernanceConfig,
) -> Result<(), GovernanceError> {
    if changes.is_empty() {
        return Err(GovernanceError::EmptyProposal);
    }
    if let Some(k) = changes.keys().find(|k| !k.is_governable()) {
        return Err(GovernanceError::InvalidImmutable(*k));
    }
    for (k, v) in changes {
        cfg.bounds.check(*k, *v)?;
    }
    apply_changes(params, changes).map(|_| ())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GovernanceEvent {
    Proposed { id: ProposalId, at: DateTime<Utc> },
    RejectedAtProposal { id: ProposalId, reason: String, at: DateTime<Utc> },
    Voted { id: ProposalId, voter: HolderId, direction: VoteDirection, weight: Amount, at: DateTime<Utc> },
    Finalized { id: ProposalId, status: ProposalStatus, tally: Tally, at: DateTime<Utc> },
    Executed { id: ProposalId, at: DateTime<Utc> },
    Motion { result: MotionResult, at: DateTime<Utc> },
}

/// Single-writer proposal registry with its own append-only log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GovernanceRegistry {
    pub config: GovernanceConfig,
    proposals: BTreeMap<ProposalId, Proposal>,
    log: Vec<GovernanceEvent>,
    next_id: ProposalId,
}

impl GovernanceRegistry {
    pub fn new(config: GovernanceConfig) -> Self {
        GovernanceRegistry { config, ..Default::default() }
    }

    pub fn proposals(&self) -> impl Iterator<Item = &Proposal> {
        self.proposals.values()
    }

    pub fn proposal(&self, id: ProposalId) -> Result<&Proposal, GovernanceError> {
        self.proposals.get(&id).ok_or(GovernanceError::UnknownProposal(id))
    }

    pub fn log(&self) -> &[GovernanceEvent] {
        &self.log
    }

    /// Create a proposal against a snapshot. Rejected change sets are still
    /// recorded with their terminal status.
    pub fn propose(
        &mut self,
        proposer: &str,
        changes: BTreeMap<ParameterKey, Dec>,
        params: &PolicyParams,
        view: &VotingPowerView,
        now: DateTime<Utc>,
    ) -> Result<ProposalId, GovernanceError> {
        let need = self.config.min_stake(view.total_eligible());
        let have = view.staked_of(proposer);
        if have < need || have.is_zero() {
            return Err(GovernanceError::InsufficientStake { have, need });
        }
        let id = self.next_id;
        let mut proposal = Proposal {
            id,
            proposer: proposer.to_string(),
            changes: changes.clone(),
            snapshot_block: view.position,
            created_at: now,
            voting_ends: now + self.config.voting_period(),
            timelock_ends: None,
            status: ProposalStatus::Voting,
            eligible_supply: view.total_eligible(),
            votes: BTreeMap::new(),
        };
        let verdict = check_changes(&changes, params, &self.config).and_then(|_| {
            match changes.keys().find(|k| self.proposals.values().any(|p| p.is_live() && p.changes.contains_key(k))) {
                Some(k) => Err(GovernanceError::ParameterBusy(*k)),
                None => Ok(()),
            }
        });
        if let Err(e) = verdict {
            let terminal = match e {
                GovernanceError::InvalidImmutable(_) => Some(ProposalStatus::InvalidImmutable),
                GovernanceError::OutOfBounds { .. } | GovernanceError::Inconsistent(_) => Some(ProposalStatus::OutOfBounds),
                _ => None,
            };
            if let Some(status) = terminal {
                proposal.status = status;
                self.proposals.insert(id, proposal);
                self.next_id += 1;
                self.log.push(GovernanceEvent::RejectedAtProposal { id, reason: e.to_string(), at: now });
            }
            return Err(e);
        }
        self.proposals.insert(id, proposal);
        self.next_id += 1;
        self.log.push(GovernanceEvent::Proposed { id, at: now });
        Ok(id)
    }

    pub fn vote(
        &mut self,
        id: ProposalId,
        voter: &str,
        view: &VotingPowerView,
        direction: VoteDirection,
        now: DateTime<Utc>,
    ) -> Result<(), GovernanceError> {
        let p = self.proposals.get_mut(&id).ok_or(GovernanceError::UnknownProposal(id))?;
        p.vote(voter, view, direction, now)?;
        let weight = p.votes[voter].1;
        self.log.push(GovernanceEvent::Voted { id, voter: voter.to_string(), direction, weight, at: now });
        Ok(())
    }

    pub fn finalize(&mut self, id: ProposalId, now: DateTime<Utc>) -> Result<ProposalStatus, GovernanceError> {
        let cfg = self.config.clone();
        let p = self.proposals.get_mut(&id).ok_or(GovernanceError::UnknownProposal(id))?;
        let status = p.finalize(now, &cfg)?;
        let tally = p.tally();
        self.log.push(GovernanceEvent::Finalized { id, status, tally, at: now });
        Ok(status)
    }

    pub fn execute(&mut self, id: ProposalId, params: &PolicyParams, now: DateTime<Utc>) -> Result<PolicyParams, GovernanceError> {
        let p = self.proposals.get_mut(&id).ok_or(GovernanceError::UnknownProposal(id))?;
        let next = p.execute(params, now)?;
        self.log.push(GovernanceEvent::Executed { id, at: now });
        Ok(next)
    }

    /// Tally a quorum motion and log the result.
    pub fn motion(
        &mut self,
        kind: MotionKind,
        cycle_year: i32,
        view: &VotingPowerView,
        votes: &BTreeMap<HolderId, VoteDirection>,
        now: DateTime<Utc>,
    ) -> MotionResult {
        let result = tally_motion(kind, cycle_year, view, votes, &self.config);
        self.log.push(GovernanceEvent::Motion { result: result.clone(), at: now });
        result
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionKind {
    PauseExecution,
    EmergencyHalt,
    RestoreExecution,
}

/// Outcome of a quorum motion. Motions resolve immediately rather than over
/// a voting period, since they must act inside a 72-hour window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionResult {
    pub kind: MotionKind,
    pub cycle_year: i32,
    pub tally: Tally,
    pub eligible_supply: Amount,
    pub quorum_met: bool,
    pub passed: bool,
}

pub fn tally_motion(
    kind: MotionKind,
    cycle_year: i32,
    view: &VotingPowerView,
    votes: &BTreeMap<HolderId, VoteDirection>,
    cfg: &GovernanceConfig,
) -> MotionResult {
    let weighted: Vec<(VoteDirection, Amount)> = votes.iter().map(|(id, d)| (*d, view.power_of(id))).filter(|(_, w)| !w.is_zero()).collect();
    let tally = Tally::from_votes(weighted.iter());
    let (quorum_met, passed) = tally.outcome(view.total_eligible(), cfg);
    MotionResult { kind, cycle_year, tally, eligible_supply: view.total_eligible(), quorum_met, passed }
}
