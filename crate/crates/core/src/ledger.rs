//! Exact-integer supply ledger.
//!
//! The full supply exists from genesis and is split across allocation
//! buckets. Every later transition either moves tokens between a bucket and
//! circulation or burns circulating fees; nothing can create tokens. The
//! conservation identity
//!
//! ```text
//! circulating + Σ bucket balances + burned_cumulative = S_max
//! ```
//!
//! is re-checked after every transition. Transitions are pure: they take
//! `&LedgerState` and return a new state, so a failed transition leaves the
//! caller's state untouched. [`Ledger`] pairs a state with its append-only
//! event log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{canonical_digest, to_canonical_bytes, CanonicalError, Digest};
use crate::decimal::{Dec, SCALE};
use crate::policy::{self, PolicyFactors, PolicyParams};

/// Fractional digits of a token amount.
pub const ASSET_SCALE: u32 = 6;
pub const UNITS_PER_KLD: u64 = 1_000_000;
pub const MAX_SUPPLY_KLD: u64 = 10_000_000_000;
pub const S_MAX: Amount = Amount(MAX_SUPPLY_KLD * UNITS_PER_KLD);

pub const VESTING_CLIFF_MONTHS: u32 = 12;
pub const VESTING_MONTHS: u32 = 36;

/// Monthly company-reserve spending guideline, as a fraction of the balance at month start.
pub const RESERVE_GUIDELINE_FRACTION: Dec = Dec::from_raw(10_000_000); // 0.01

pub type SignerId = String;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("allocations sum to {found} base units, expected {expected}")]
    AllocationMismatch { expected: Amount, found: Amount },
    #[error("minting is permanently disabled after genesis")]
    NoMintAfterGenesis,
    #[error("vesting cliff active at month {month_index}")]
    CliffActive { month_index: u32 },
    #[error("vesting schedule already complete")]
    VestingComplete,
    #[error("{bucket:?} requires {need} approvals, got {have}")]
    InsufficientApprovals { bucket: BucketKind, have: usize, need: u32 },
    #[error("nothing can be released: {0:?}")]
    ZeroCap(ZeroCapReason),
    #[error("fee pool holds {available}, cannot burn {requested}")]
    InsufficientFeePool { requested: Amount, available: Amount },
    #[error("fees {fees} exceed uncommitted circulating supply {available}")]
    FeesExceedCirculating { fees: Amount, available: Amount },
    #[error("{bucket:?} balance {available} is below {requested}")]
    InsufficientBalance { bucket: BucketKind, requested: Amount, available: Amount },
    #[error("relock must return to the origin bucket ({origin:?}), not {into:?}")]
    CrossBucketRelock { origin: BucketKind, into: BucketKind },
    #[error("relock of {requested} exceeds undistributed release {pending}")]
    RelockExceedsRelease { requested: Amount, pending: Amount },
    #[error("distribution of {requested} exceeds undistributed release {pending}")]
    ExceedsPending { requested: Amount, pending: Amount },
    #[error("staking rate {rate} outside [0, {max}]")]
    InvalidRate { rate: Dec, max: Dec },
    #[error("invalid approval policy: threshold {threshold} of {signers} signers")]
    InvalidApprovalPolicy { threshold: u32, signers: usize },
    #[error("conservation violated: total {total} != {expected}")]
    ConservationViolation { total: Amount, expected: Amount },
    #[error("amount overflow")]
    Overflow,
    #[error("event log: {0}")]
    EventLog(String),
    #[error(transparent)]
    Canonical(#[from] CanonicalErrorString),
}

/// [`CanonicalError`] flattened to a string so [`LedgerError`] stays `Clone + Eq`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct CanonicalErrorString(pub String);

impl From<CanonicalError> for LedgerError {
    fn from(e: CanonicalError) -> Self {
        LedgerError::Canonical(CanonicalErrorString(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroCapReason {
    MonthlyCapExhausted,
    IssuanceBudgetExhausted,
    EscrowEmpty,
}

/// Token amount in base units (`10^-6` KLD).
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Amount(u64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub const fn from_units(units: u64) -> Self {
        Amount(units)
    }

    pub const fn from_kld(kld: u64) -> Self {
        Amount(kld * UNITS_PER_KLD)
    }

    pub const fn units(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, rhs: Amount) -> Result<Amount, LedgerError> {
        self.0.checked_add(rhs.0).map(Amount).ok_or(LedgerError::Overflow)
    }

    pub fn checked_sub(self, rhs: Amount) -> Result<Amount, LedgerError> {
        self.0.checked_sub(rhs.0).map(Amount).ok_or(LedgerError::Overflow)
    }

    pub fn saturating_sub(self, rhs: Amount) -> Amount {
        Amount(self.0.saturating_sub(rhs.0))
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Whole-and-fractional KLD rendering, e.g. `69444444.444444`.
    pub fn to_kld_string(self) -> String {
        format!("{}.{:06}", self.0 / UNITS_PER_KLD, self.0 % UNITS_PER_KLD)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Amount({})", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BucketKind {
    EcosystemEscrow,
    TeamVesting,
    CompanyReserve,
    CommunityAirdrop,
    StakingReserve,
    LiquidityPartnerships,
    LegalTreasury,
}

impl BucketKind {
    pub const ALL: [BucketKind; 7] = [
        BucketKind::EcosystemEscrow,
        BucketKind::TeamVesting,
        BucketKind::CompanyReserve,
        BucketKind::CommunityAirdrop,
        BucketKind::StakingReserve,
        BucketKind::LiquidityPartnerships,
        BucketKind::LegalTreasury,
    ];

    /// Genesis allocation in whole KLD.
    pub fn genesis_kld(self) -> u64 {
        match self {
            BucketKind::EcosystemEscrow => 5_500_000_000,
            BucketKind::TeamVesting => 2_500_000_000,
            BucketKind::CompanyReserve => 1_000_000_000,
            BucketKind::CommunityAirdrop => 500_000_000,
            BucketKind::StakingReserve => 300_000_000,
            BucketKind::LiquidityPartnerships => 150_000_000,
            BucketKind::LegalTreasury => 50_000_000,
        }
    }

    /// Default multisig shape `(threshold, signers)`.
    pub fn default_multisig(self) -> (u32, u32) {
        match self {
            BucketKind::EcosystemEscrow => (5, 8),
            BucketKind::CompanyReserve => (6, 7),
            BucketKind::TeamVesting => (3, 5),
            _ => (3, 5),
        }
    }

    fn signer_prefix(self) -> &'static str {
        match self {
            BucketKind::EcosystemEscrow => "escrow",
            BucketKind::TeamVesting => "team",
            BucketKind::CompanyReserve => "reserve",
            BucketKind::CommunityAirdrop => "community",
            BucketKind::StakingReserve => "staking",
            BucketKind::LiquidityPartnerships => "liquidity",
            BucketKind::LegalTreasury => "legal",
        }
    }
}

/// `m`-of-`n` approval rule over a fixed signer set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApprovalPolicy {
    threshold: u32,
    signers: BTreeSet<SignerId>,
}

impl ApprovalPolicy {
    pub fn new(threshold: u32, signers: impl IntoIterator<Item = SignerId>) -> Result<Self, LedgerError> {
        let signers: BTreeSet<_> = signers.into_iter().collect();
        if threshold == 0 || threshold as usize > signers.len() {
            return Err(LedgerError::InvalidApprovalPolicy { threshold, signers: signers.len() });
        }
        Ok(ApprovalPolicy { threshold, signers })
    }

    /// `prefix-1 … prefix-n`.
    pub fn numbered(prefix: &str, threshold: u32, n: u32) -> Self {
        Self::new(threshold, (1..=n).map(|i| format!("{prefix}-{i}"))).expect("valid shape")
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn signers(&self) -> &BTreeSet<SignerId> {
        &self.signers
    }

    /// Distinct approvals from registered signers.
    pub fn count_valid(&self, approvals: &[SignerId]) -> usize {
        approvals.iter().filter(|a| self.signers.contains(*a)).collect::<BTreeSet<_>>().len()
    }

    pub fn is_satisfied(&self, approvals: &[SignerId]) -> bool {
        self.count_valid(approvals) >= self.threshold as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LockMode {
    TokenEscrow,
    MultisigVault,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationBucket {
    pub kind: BucketKind,
    pub balance: Amount,
    pub multisig: ApprovalPolicy,
    pub mode: LockMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VestingSchedule {
    pub total: Amount,
    pub cliff_months: u32,
    pub vest_months: u32,
    pub released_months: u32,
    pub released_total: Amount,
}

impl VestingSchedule {
    pub fn new(total: Amount) -> Self {
        VestingSchedule {
            total,
            cliff_months: VESTING_CLIFF_MONTHS,
            vest_months: VESTING_MONTHS,
            released_months: 0,
            released_total: Amount::ZERO,
        }
    }

    /// `⌊T / 36⌋` for every month but the last, which sweeps the remainder.
    pub fn next_release(&self) -> Option<Amount> {
        match self.vest_months - self.released_months.min(self.vest_months) {
            0 => None,
            1 => Some(self.total.saturating_sub(self.released_total)),
            _ => Some(Amount(self.total.0 / self.vest_months as u64)),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.released_months >= self.vest_months
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelockRecord {
    pub amount: Amount,
    pub origin_bucket: BucketKind,
    pub tx_hash: Digest,
    pub justification: String,
    pub month_index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidelineFlag {
    pub month_index: u32,
    pub spent_this_month: Amount,
    pub guideline: Amount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GuidelineStatus {
    WithinGuideline,
    GuidelineExceeded,
}

/// Issuance bookkeeping for the current annual cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleBudget {
    pub cycle_year: i32,
    pub issuance_budget: Amount,
    pub issued: Amount,
    pub params: PolicyParams,
}

impl CycleBudget {
    pub fn remaining(&self) -> Amount {
        self.issuance_budget.saturating_sub(self.issued)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub allocations: BTreeMap<BucketKind, Amount>,
    pub multisig: BTreeMap<BucketKind, ApprovalPolicy>,
    pub escrow_mode: LockMode,
    pub params: PolicyParams,
    pub genesis_year: i32,
}

impl GenesisConfig {
    /// The published allocation table with default signer rosters.
    pub fn table(params: PolicyParams, genesis_year: i32) -> Self {
        let allocations = BucketKind::ALL.into_iter().map(|k| (k, Amount::from_kld(k.genesis_kld()))).collect();
        let multisig = BucketKind::ALL
            .into_iter()
            .map(|k| {
                let (t, n) = k.default_multisig();
                (k, ApprovalPolicy::numbered(k.signer_prefix(), t, n))
            })
            .collect();
        GenesisConfig { allocations, multisig, escrow_mode: LockMode::MultisigVault, params, genesis_year }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerState {
    pub s_max: Amount,
    pub circulating: Amount,
    pub buckets: BTreeMap<BucketKind, AllocationBucket>,
    pub burned_cumulative: Amount,
    pub vesting: VestingSchedule,
    pub month_index: u32,
    pub annual_factors: PolicyFactors,
    pub cycle: CycleBudget,
    pub releases_this_month: Amount,
    pub reserve_spend_this_month: Amount,
    pub reserve_month_start: Amount,
    /// Fees collected this month, part of `circulating`, awaiting burn.
    pub fee_pool: Amount,
    /// Sub-unit fee-burn remainder in `10^-9` base units.
    pub burn_dust: i128,
    /// Released but not yet distributed, by origin bucket.
    pub pending_distribution: BTreeMap<BucketKind, Amount>,
    /// Relocks of the current cycle, disclosed in its report.
    pub relock_log: Vec<RelockRecord>,
    pub guideline_flags: Vec<GuidelineFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MonthSummary {
    pub month_index: u32,
    pub vested: Amount,
    pub emitted: Amount,
    pub fees: Amount,
    pub burned: Amount,
}

/// One sub-step of a monthly transition together with the state it produced.
#[derive(Debug, Clone)]
pub struct MonthStep {
    pub op: LedgerOp,
    pub state: LedgerState,
}

pub fn genesis(config: &GenesisConfig) -> Result<LedgerState, LedgerError> {
    let mut total = Amount::ZERO;
    for k in BucketKind::ALL {
        total = total.checked_add(config.allocations.get(&k).copied().unwrap_or_default())?;
    }
    if total != S_MAX {
        return Err(LedgerError::AllocationMismatch { expected: S_MAX, found: total });
    }
    let buckets: BTreeMap<_, _> = BucketKind::ALL
        .into_iter()
        .map(|k| {
            let multisig = config.multisig.get(&k).cloned().unwrap_or_else(|| {
                let (t, n) = k.default_multisig();
                ApprovalPolicy::numbered(k.signer_prefix(), t, n)
            });
            let mode = match k {
                BucketKind::EcosystemEscrow => config.escrow_mode,
                _ => LockMode::MultisigVault,
            };
            (k, AllocationBucket { kind: k, balance: config.allocations[&k], multisig, mode })
        })
        .collect();
    let team = buckets[&BucketKind::TeamVesting].balance;
    let reserve = buckets[&BucketKind::CompanyReserve].balance;
    let placeholder = PolicyFactors {
        phi_i: Dec::ONE,
        burn_fraction: Dec::ZERO,
        escrow_cap: Amount::ZERO,
        staking_rate: Dec::ZERO,
        g_used: Dec::ZERO,
    };
    let state = LedgerState {
        s_max: S_MAX,
        circulating: Amount::ZERO,
        buckets,
        burned_cumulative: Amount::ZERO,
        vesting: VestingSchedule::new(team),
        month_index: 0,
        annual_factors: placeholder,
        cycle: CycleBudget {
            cycle_year: config.genesis_year,
            issuance_budget: Amount::ZERO,
            issued: Amount::ZERO,
            params: config.params.clone(),
        },
        releases_this_month: Amount::ZERO,
        reserve_spend_this_month: Amount::ZERO,
        reserve_month_start: reserve,
        fee_pool: Amount::ZERO,
        burn_dust: 0,
        pending_distribution: BTreeMap::new(),
        relock_log: Vec::new(),
        guideline_flags: Vec::new(),
    };
    // the genesis cycle runs at the baseline, g = 0
    let state = state.apply_cycle(&config.params, Dec::ZERO, config.genesis_year)?;
    Ok(state)
}

impl LedgerState {
    pub fn balance(&self, kind: BucketKind) -> Amount {
        self.buckets[&kind].balance
    }

    pub fn locked_total(&self) -> Amount {
        Amount(self.buckets.values().map(|b| b.balance.0).sum())
    }

    /// Locked balances that fund the issuance budget.
    pub fn locked_unburned(&self) -> Amount {
        Amount(self.balance(BucketKind::EcosystemEscrow).0 + self.balance(BucketKind::StakingReserve).0)
    }

    pub fn conservation_total(&self) -> Result<Amount, LedgerError> {
        self.circulating.checked_add(self.locked_total())?.checked_add(self.burned_cumulative)
    }

    pub fn check_conservation(&self) -> Result<(), LedgerError> {
        let total = self.conservation_total()?;
        if total != self.s_max || self.s_max != S_MAX {
            return Err(LedgerError::ConservationViolation { total, expected: S_MAX });
        }
        Ok(())
    }

    pub fn state_hash(&self) -> Result<Digest, LedgerError> {
        Ok(canonical_digest(self)?)
    }

    fn authorize(&self, kind: BucketKind, approvals: &[SignerId]) -> Result<(), LedgerError> {
        let policy = &self.buckets[&kind].multisig;
        if !policy.is_satisfied(approvals) {
            return Err(LedgerError::InsufficientApprovals {
                bucket: kind,
                have: policy.count_valid(approvals),
                need: policy.threshold(),
            });
        }
        Ok(())
    }

    fn move_to_circulating(&mut self, kind: BucketKind, amount: Amount) -> Result<(), LedgerError> {
        let bucket = self.buckets.get_mut(&kind).expect("all buckets exist");
        if bucket.balance < amount {
            return Err(LedgerError::InsufficientBalance { bucket: kind, requested: amount, available: bucket.balance });
        }
        bucket.balance = bucket.balance.checked_sub(amount)?;
        self.circulating = self.circulating.checked_add(amount)?;
        Ok(())
    }

    fn checked(self) -> Result<Self, LedgerError> {
        self.check_conservation()?;
        Ok(self)
    }

    /// Always fails: the supply is fixed at genesis.
    pub fn mint(&self, _amount: Amount) -> Result<LedgerState, LedgerError> {
        Err(LedgerError::NoMintAfterGenesis)
    }

    /// Release the next team vesting tranche.
    pub fn vest_month(&self) -> Result<(LedgerState, Amount), LedgerError> {
        if self.month_index < self.vesting.cliff_months {
            return Err(LedgerError::CliffActive { month_index: self.month_index });
        }
        let amount = self.vesting.next_release().ok_or(LedgerError::VestingComplete)?;
        let mut next = self.clone();
        next.move_to_circulating(BucketKind::TeamVesting, amount)?;
        next.vesting.released_months += 1;
        next.vesting.released_total = next.vesting.released_total.checked_add(amount)?;
        Ok((next.checked()?, amount))
    }

    pub fn vesting_due(&self) -> bool {
        self.month_index >= self.vesting.cliff_months && !self.vesting.is_complete()
    }

    /// Release from the ecosystem escrow, bounded by the monthly cap, the
    /// remaining annual issuance budget and the escrow balance.
    pub fn release_escrow(&self, requested: Amount, approvals: &[SignerId]) -> Result<(LedgerState, Amount), LedgerError> {
        self.authorize(BucketKind::EcosystemEscrow, approvals)?;
        let cap_left = self.annual_factors.escrow_cap.saturating_sub(self.releases_this_month);
        let budget_left = self.cycle.remaining();
        let balance = self.balance(BucketKind::EcosystemEscrow);
        let released = requested.min(cap_left).min(budget_left).min(balance);
        if released.is_zero() {
            if requested.is_zero() {
                return Ok((self.clone(), Amount::ZERO));
            }
            let reason = if balance.is_zero() {
                ZeroCapReason::EscrowEmpty
            } else if cap_left.is_zero() {
                ZeroCapReason::MonthlyCapExhausted
            } else {
                ZeroCapReason::IssuanceBudgetExhausted
            };
            return Err(LedgerError::ZeroCap(reason));
        }
        let mut next = self.clone();
        next.move_to_circulating(BucketKind::EcosystemEscrow, released)?;
        next.releases_this_month = next.releases_this_month.checked_add(released)?;
        next.cycle.issued = next.cycle.issued.checked_add(released)?;
        let pending = next.pending_distribution.entry(BucketKind::EcosystemEscrow).or_default();
        *pending = pending.checked_add(released)?;
        Ok((next.checked()?, released))
    }

    /// Mark part of a release as handed out to recipients.
    pub fn distribute(&self, origin: BucketKind, amount: Amount) -> Result<LedgerState, LedgerError> {
        let pending = self.pending_distribution.get(&origin).copied().unwrap_or_default();
        if amount > pending {
            return Err(LedgerError::ExceedsPending { requested: amount, pending });
        }
        let mut next = self.clone();
        next.pending_distribution.insert(origin, pending.checked_sub(amount)?);
        Ok(next)
    }

    /// Return undistributed released tokens to the bucket they came from.
    ///
    /// Monthly release counters and the issuance budget are not credited back.
    pub fn relock(
        &self,
        amount: Amount,
        origin: BucketKind,
        into: BucketKind,
        justification: &str,
    ) -> Result<LedgerState, LedgerError> {
        if origin != into {
            return Err(LedgerError::CrossBucketRelock { origin, into });
        }
        let pending = self.pending_distribution.get(&origin).copied().unwrap_or_default();
        if amount > pending {
            return Err(LedgerError::RelockExceedsRelease { requested: amount, pending });
        }
        let mut next = self.clone();
        next.pending_distribution.insert(origin, pending.checked_sub(amount)?);
        next.circulating = next.circulating.checked_sub(amount)?;
        let bucket = next.buckets.get_mut(&into).expect("all buckets exist");
        bucket.balance = bucket.balance.checked_add(amount)?;
        let tx_hash = Digest::of_parts(&[
            b"relock",
            &amount.0.to_be_bytes(),
            format!("{origin:?}").as_bytes(),
            &self.month_index.to_be_bytes(),
            justification.as_bytes(),
            &self.state_hash()?.0,
        ]);
        next.relock_log.push(RelockRecord {
            amount,
            origin_bucket: origin,
            tx_hash,
            justification: justification.to_string(),
            month_index: self.month_index,
        });
        next.checked()
    }

    /// Add protocol fees paid from circulating balances to the fee pool.
    pub fn collect_fees(&self, fees: Amount) -> Result<LedgerState, LedgerError> {
        let available = self.circulating.saturating_sub(self.fee_pool);
        if fees > available {
            return Err(LedgerError::FeesExceedCirculating { fees, available });
        }
        let mut next = self.clone();
        next.fee_pool = next.fee_pool.checked_add(fees)?;
        Ok(next)
    }

    /// Burn from the fee pool. There is no inverse operation.
    pub fn burn(&self, amount: Amount) -> Result<LedgerState, LedgerError> {
        if amount > self.fee_pool {
            return Err(LedgerError::InsufficientFeePool { requested: amount, available: self.fee_pool });
        }
        let mut next = self.clone();
        next.fee_pool = next.fee_pool.checked_sub(amount)?;
        next.circulating = next.circulating.checked_sub(amount)?;
        next.burned_cumulative = next.burned_cumulative.checked_add(amount)?;
        next.checked()
    }

    /// Emit `⌊rate · staking reserve⌋`, limited by the remaining issuance budget.
    pub fn emit_staking(&self, rate: Dec) -> Result<(LedgerState, Amount), LedgerError> {
        let max = self.annual_factors.staking_rate;
        if rate.is_negative() || rate > max {
            return Err(LedgerError::InvalidRate { rate, max });
        }
        let reserve = self.balance(BucketKind::StakingReserve);
        let gross = Amount(rate.mul_floor_units(reserve.0).ok_or(LedgerError::Overflow)?);
        let emission = gross.min(self.cycle.remaining()).min(reserve);
        if emission.is_zero() {
            return Ok((self.clone(), Amount::ZERO));
        }
        let mut next = self.clone();
        next.move_to_circulating(BucketKind::StakingReserve, emission)?;
        next.cycle.issued = next.cycle.issued.checked_add(emission)?;
        Ok((next.checked()?, emission))
    }

    /// Operational spend from the company reserve. Exceeding the 1% monthly
    /// guideline is allowed but flagged.
    pub fn spend_reserve(&self, amount: Amount, approvals: &[SignerId]) -> Result<(LedgerState, GuidelineStatus), LedgerError> {
        self.authorize(BucketKind::CompanyReserve, approvals)?;
        let mut next = self.clone();
        next.move_to_circulating(BucketKind::CompanyReserve, amount)?;
        next.reserve_spend_this_month = next.reserve_spend_this_month.checked_add(amount)?;
        let guideline = Amount(RESERVE_GUIDELINE_FRACTION.mul_floor_units(self.reserve_month_start.0).ok_or(LedgerError::Overflow)?);
        let status = if next.reserve_spend_this_month > guideline {
            next.guideline_flags.push(GuidelineFlag {
                month_index: self.month_index,
                spent_this_month: next.reserve_spend_this_month,
                guideline,
            });
            GuidelineStatus::GuidelineExceeded
        } else {
            GuidelineStatus::WithinGuideline
        };
        Ok((next.checked()?, status))
    }

    /// Start an annual cycle at policy factor `g`: derive the year's bases
    /// from current balances, the four levers and the issuance budget.
    pub fn apply_cycle(&self, params: &PolicyParams, g: Dec, cycle_year: i32) -> Result<LedgerState, LedgerError> {
        let cycle_params = params.with_cycle_bases(self.balance(BucketKind::EcosystemEscrow), self.balance(BucketKind::StakingReserve));
        let factors = policy::derive_cycle_factors(&cycle_params, g);
        let budget = policy::issuance_budget(&cycle_params, g, self.locked_unburned());
        let mut next = self.clone();
        next.annual_factors = factors;
        next.cycle = CycleBudget { cycle_year, issuance_budget: budget, issued: Amount::ZERO, params: cycle_params };
        next.start_cycle_bookkeeping();
        next.checked()
    }

    /// Start a new cycle under the previous cycle's factors and budget.
    pub fn renew_cycle(&self, cycle_year: i32) -> Result<LedgerState, LedgerError> {
        let mut next = self.clone();
        next.cycle.cycle_year = cycle_year;
        next.cycle.issued = Amount::ZERO;
        next.cycle.issuance_budget = next.cycle.issuance_budget.min(self.locked_unburned());
        next.start_cycle_bookkeeping();
        next.checked()
    }

    fn start_cycle_bookkeeping(&mut self) {
        self.pending_distribution.clear();
        self.relock_log.clear();
        self.guideline_flags.clear();
    }

    fn burn_fees_with_dust(&self) -> Result<(LedgerState, Amount), LedgerError> {
        let fees = self.fee_pool;
        let exact = self
            .annual_factors
            .burn_fraction
            .mul_units_exact(fees.0)
            .ok_or(LedgerError::Overflow)?;
        let mut amount = Amount((exact / SCALE) as u64);
        let mut dust = self.burn_dust + exact % SCALE;
        if dust >= SCALE && amount < fees {
            amount = amount.checked_add(Amount(1))?;
            dust -= SCALE;
        }
        let mut next = if amount.is_zero() { self.clone() } else { self.burn(amount)? };
        next.burn_dust = dust;
        Ok((next, amount))
    }

    /// One month: vesting (if due), staking emission, fee burn, then month
    /// close. The first failing step aborts the whole month.
    pub fn advance_month(&self, fees: Amount) -> Result<(LedgerState, MonthSummary), LedgerError> {
        let (steps, summary) = self.advance_month_steps(fees)?;
        Ok((steps.into_iter().last().expect("month close step").state, summary))
    }

    pub fn advance_month_steps(&self, fees: Amount) -> Result<(Vec<MonthStep>, MonthSummary), LedgerError> {
        self.advance_month_with(fees, |_, _| {})
    }

    fn advance_month_with(
        &self,
        fees: Amount,
        hook: impl Fn(&LedgerOp, &mut LedgerState),
    ) -> Result<(Vec<MonthStep>, MonthSummary), LedgerError> {
        let mut steps = Vec::with_capacity(4);
        let mut summary = MonthSummary { month_index: self.month_index, fees, ..Default::default() };
        let mut cur = self.clone();
        let push = |op: LedgerOp, mut state: LedgerState, steps: &mut Vec<MonthStep>| -> Result<LedgerState, LedgerError> {
            hook(&op, &mut state);
            state.check_conservation()?;
            steps.push(MonthStep { op, state: state.clone() });
            Ok(state)
        };
        if cur.vesting_due() {
            let (s, amount) = cur.vest_month()?;
            summary.vested = amount;
            cur = push(LedgerOp::Vest { amount }, s, &mut steps)?;
        }
        let rate = cur.annual_factors.staking_rate;
        let (s, amount) = cur.emit_staking(rate)?;
        if !amount.is_zero() {
            summary.emitted = amount;
            cur = push(LedgerOp::StakingEmission { rate, amount }, s, &mut steps)?;
        }
        if !fees.is_zero() {
            let s = cur.collect_fees(fees)?;
            let (s, amount) = s.burn_fees_with_dust()?;
            summary.burned = amount;
            cur = push(LedgerOp::FeeBurn { fees, amount }, s, &mut steps)?;
        }
        let mut s = cur.clone();
        // unburned fees leave the pool as ordinary protocol revenue
        s.fee_pool = Amount::ZERO;
        s.month_index += 1;
        s.releases_this_month = Amount::ZERO;
        s.reserve_spend_this_month = Amount::ZERO;
        s.reserve_month_start = s.balance(BucketKind::CompanyReserve);
        push(LedgerOp::MonthClosed { month_index: self.month_index }, s, &mut steps)?;
        Ok((steps, summary))
    }
}

/// A ledger transition as recorded in the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LedgerOp {
    Genesis { allocations: BTreeMap<BucketKind, Amount> },
    CycleApplied { cycle_year: i32, g: Dec, factors: PolicyFactors, issuance_budget: Amount },
    CycleRenewed { cycle_year: i32, g: Dec },
    Release { bucket: BucketKind, requested: Amount, released: Amount },
    Distribute { bucket: BucketKind, amount: Amount },
    Relock { record: RelockRecord },
    Vest { amount: Amount },
    StakingEmission { rate: Dec, amount: Amount },
    FeeBurn { fees: Amount, amount: Amount },
    ReserveSpend { amount: Amount, status: GuidelineStatus },
    MonthClosed { month_index: u32 },
}

impl LedgerOp {
    /// Change in circulating supply caused by this operation.
    pub fn circulating_delta(&self) -> i128 {
        match self {
            LedgerOp::Release { released, .. } => released.0 as i128,
            LedgerOp::Vest { amount } | LedgerOp::StakingEmission { amount, .. } | LedgerOp::ReserveSpend { amount, .. } => {
                amount.0 as i128
            }
            LedgerOp::FeeBurn { amount, .. } => -(amount.0 as i128),
            LedgerOp::Relock { record } => -(record.amount.0 as i128),
            LedgerOp::Genesis { .. }
            | LedgerOp::CycleApplied { .. }
            | LedgerOp::CycleRenewed { .. }
            | LedgerOp::Distribute { .. }
            | LedgerOp::MonthClosed { .. } => 0,
        }
    }

    pub fn burned_delta(&self) -> u64 {
        match self {
            LedgerOp::FeeBurn { amount, .. } => amount.0,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub seq: u64,
    pub op: LedgerOp,
    pub approvals: Vec<SignerId>,
    pub circulating_after: Amount,
    pub burned_after: Amount,
    pub state_hash: Digest,
    pub prev_event_hash: Digest,
}

impl LedgerEvent {
    pub fn event_hash(&self) -> Digest {
        canonical_digest(self).expect("event encodes")
    }
}

/// Append-only, hash-chained transition log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    events: Vec<LedgerEvent>,
}

impl EventLog {
    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Position of the next event.
    pub fn position(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn last(&self) -> Option<&LedgerEvent> {
        self.events.last()
    }

    pub fn range(&self, start: u64, end_inclusive: u64) -> &[LedgerEvent] {
        let s = (start as usize).min(self.events.len());
        let e = ((end_inclusive as usize).saturating_add(1)).min(self.events.len());
        &self.events[s..e.max(s)]
    }

    fn append(&mut self, op: LedgerOp, approvals: Vec<SignerId>, state: &LedgerState) -> Result<&LedgerEvent, LedgerError> {
        let prev_event_hash = self.events.last().map(|e| e.event_hash()).unwrap_or_default();
        let event = LedgerEvent {
            seq: self.position(),
            op,
            approvals,
            circulating_after: state.circulating,
            burned_after: state.burned_cumulative,
            state_hash: state.state_hash()?,
            prev_event_hash,
        };
        self.events.push(event);
        Ok(self.events.last().expect("just pushed"))
    }

    /// Check sequence numbers, hash links and per-event circulating deltas.
    pub fn verify_chain(&self) -> Result<(), LedgerError> {
        let mut prev = Digest::default();
        let mut circulating: i128 = 0;
        for (i, e) in self.events.iter().enumerate() {
            if e.seq != i as u64 {
                return Err(LedgerError::EventLog(format!("event {i} has seq {}", e.seq)));
            }
            if e.prev_event_hash != prev {
                return Err(LedgerError::EventLog(format!("event {i} breaks the hash chain")));
            }
            circulating += e.op.circulating_delta();
            if circulating != e.circulating_after.0 as i128 {
                return Err(LedgerError::EventLog(format!("event {i} circulating does not follow from its operation")));
            }
            prev = e.event_hash();
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<Vec<u8>, LedgerError> {
        let mut out = Vec::new();
        for e in &self.events {
            out.extend(to_canonical_bytes(e)?);
            out.push(b'\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(bytes: &[u8]) -> Result<Self, LedgerError> {
        let mut events = Vec::new();
        for line in bytes.lines() {
            let line = line.map_err(|e| LedgerError::EventLog(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line).map_err(|e| LedgerError::EventLog(e.to_string()))?);
        }
        let log = EventLog { events };
        log.verify_chain()?;
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self, LedgerError> {
        let bytes = std::fs::read(path).map_err(|e| LedgerError::EventLog(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&bytes)
    }

    /// Append events from `from_seq` onward to a file; earlier lines are never rewritten.
    pub fn append_to_file(&self, path: &Path, from_seq: u64) -> Result<(), LedgerError> {
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LedgerError::EventLog(e.to_string()))?;
        for e in self.events.iter().skip(from_seq as usize) {
            let mut line = to_canonical_bytes(e)?;
            line.push(b'\n');
            f.write_all(&line).map_err(|e| LedgerError::EventLog(e.to_string()))?;
        }
        Ok(())
    }
}

/// A ledger state together with the log of every transition that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ledger {
    state: LedgerState,
    log: EventLog,
}

impl Ledger {
    pub fn genesis(config: &GenesisConfig) -> Result<Self, LedgerError> {
        let state = genesis(config)?;
        let mut log = EventLog::default();
        log.append(LedgerOp::Genesis { allocations: config.allocations.clone() }, Vec::new(), &state)?;
        let factors = state.annual_factors.clone();
        log.append(
            LedgerOp::CycleApplied {
                cycle_year: config.genesis_year,
                g: Dec::ZERO,
                factors,
                issuance_budget: state.cycle.issuance_budget,
            },
            Vec::new(),
            &state,
        )?;
        Ok(Ledger { state, log })
    }

    /// Rebuild from persisted parts; the log's last state hash must match.
    pub fn from_parts(state: LedgerState, log: EventLog) -> Result<Self, LedgerError> {
        log.verify_chain()?;
        state.check_conservation()?;
        match log.last() {
            Some(e) if e.state_hash == state.state_hash()? => Ok(Ledger { state, log }),
            _ => Err(LedgerError::EventLog("state does not match the last logged state hash".into())),
        }
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    fn commit(&mut self, op: LedgerOp, approvals: &[SignerId], next: LedgerState) -> Result<(), LedgerError> {
        self.log.append(op, approvals.to_vec(), &next)?;
        self.state = next;
        Ok(())
    }

    pub fn mint(&mut self, amount: Amount) -> Result<(), LedgerError> {
        self.state.mint(amount).map(|_| ())
    }

    pub fn vest_month(&mut self) -> Result<Amount, LedgerError> {
        let (next, amount) = self.state.vest_month()?;
        self.commit(LedgerOp::Vest { amount }, &[], next)?;
        Ok(amount)
    }

    pub fn release_escrow(&mut self, requested: Amount, approvals: &[SignerId]) -> Result<Amount, LedgerError> {
        let (next, released) = self.state.release_escrow(requested, approvals)?;
        if !released.is_zero() {
            self.commit(LedgerOp::Release { bucket: BucketKind::EcosystemEscrow, requested, released }, approvals, next)?;
        }
        Ok(released)
    }

    pub fn distribute(&mut self, origin: BucketKind, amount: Amount) -> Result<(), LedgerError> {
        let next = self.state.distribute(origin, amount)?;
        self.commit(LedgerOp::Distribute { bucket: origin, amount }, &[], next)
    }

    pub fn relock(&mut self, amount: Amount, origin: BucketKind, into: BucketKind, justification: &str, approvals: &[SignerId]) -> Result<(), LedgerError> {
        let next = self.state.relock(amount, origin, into, justification)?;
        let record = next.relock_log.last().expect("relock recorded").clone();
        self.commit(LedgerOp::Relock { record }, approvals, next)
    }

    pub fn emit_staking(&mut self, rate: Dec) -> Result<Amount, LedgerError> {
        let (next, amount) = self.state.emit_staking(rate)?;
        if !amount.is_zero() {
            self.commit(LedgerOp::StakingEmission { rate, amount }, &[], next)?;
        }
        Ok(amount)
    }

    pub fn spend_reserve(&mut self, amount: Amount, approvals: &[SignerId]) -> Result<GuidelineStatus, LedgerError> {
        let (next, status) = self.state.spend_reserve(amount, approvals)?;
        self.commit(LedgerOp::ReserveSpend { amount, status }, approvals, next)?;
        Ok(status)
    }

    pub fn apply_cycle(&mut self, params: &PolicyParams, g: Dec, cycle_year: i32, approvals: &[SignerId]) -> Result<(), LedgerError> {
        let next = self.state.apply_cycle(params, g, cycle_year)?;
        let op = LedgerOp::CycleApplied {
            cycle_year,
            g,
            factors: next.annual_factors.clone(),
            issuance_budget: next.cycle.issuance_budget,
        };
        self.commit(op, approvals, next)
    }

    pub fn renew_cycle(&mut self, cycle_year: i32) -> Result<(), LedgerError> {
        let next = self.state.renew_cycle(cycle_year)?;
        let g = next.annual_factors.g_used;
        self.commit(LedgerOp::CycleRenewed { cycle_year, g }, &[], next)
    }

    /// Vest, emit, burn and close the month; each sub-step is logged.
    pub fn advance_month(&mut self, fees: Amount) -> Result<MonthSummary, LedgerError> {
        let (steps, summary) = self.state.advance_month_steps(fees)?;
        for step in steps {
            self.commit(step.op, &[], step.state)?;
        }
        Ok(summary)
    }
}
