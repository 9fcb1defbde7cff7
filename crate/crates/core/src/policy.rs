//! The four debt-indexed levers: issuance budget, fee-burn fraction, monthly
//! escrow release cap and staking emission rate.
//!
//! All four are continuous in `g` and shift toward lower net supply growth as
//! `g` rises. Token outputs round down so that rounding never releases more
//! than the formula allows.

use serde::{Deserialize, Serialize};

use crate::decimal::Dec;
use crate::ledger::Amount;

/// Fraction of the escrow balance available per year before debt adjustment.
pub const ANNUAL_ESCROW_BUDGET_FRACTION: Dec = Dec::from_raw(50_000_000); // 0.05

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyParams {
    pub alpha_i: Dec,
    pub beta_b: Dec,
    pub alpha_e: Dec,
    pub gamma: Dec,
    pub b_base: Dec,
    pub b_max: Dec,
    /// Monthly escrow release cap before debt adjustment.
    pub e_base: Amount,
    pub e_min: Amount,
    /// Annual gross issuance budget before debt adjustment.
    pub i_base: Amount,
    /// Baseline staking emission per month, as a fraction of the staking reserve.
    pub r_base: Dec,
    /// Governable multiplier applied to `r_base`.
    pub staking_multiplier: Dec,
}

impl Default for PolicyParams {
    fn default() -> Self {
        let half = Dec::from_ratio(1, 2);
        PolicyParams {
            alpha_i: half,
            beta_b: half,
            alpha_e: half,
            gamma: half,
            b_base: Dec::from_ratio(1, 4),
            b_max: Dec::from_ratio(9, 10),
            e_base: Amount::ZERO,
            e_min: Amount::ZERO,
            i_base: Amount::ZERO,
            r_base: Dec::from_ratio(5, 1000),
            staking_multiplier: Dec::ONE,
        }
    }
}

impl PolicyParams {
    /// Structural constraints that hold independently of governance bounds.
    pub fn check(&self) -> Result<(), String> {
        let unit = |name: &str, v: Dec| {
            if v.is_negative() || v > Dec::ONE {
                Err(format!("{name} = {v} outside [0, 1]"))
            } else {
                Ok(())
            }
        };
        unit("alpha_i", self.alpha_i)?;
        unit("alpha_e", self.alpha_e)?;
        unit("b_base", self.b_base)?;
        unit("b_max", self.b_max)?;
        if self.beta_b.is_negative() || self.gamma.is_negative() || self.r_base.is_negative() || self.staking_multiplier.is_negative() {
            return Err("beta_b, gamma, r_base and staking_multiplier must be nonnegative".into());
        }
        if self.b_base > self.b_max {
            return Err(format!("b_base {} exceeds b_max {}", self.b_base, self.b_max));
        }
        if self.e_min > self.e_base {
            return Err(format!("e_min {} exceeds e_base {}", self.e_min, self.e_base));
        }
        Ok(())
    }

    pub fn effective_r_base(&self) -> Dec {
        self.r_base * self.staking_multiplier
    }

    /// Set the annual bases from balances at the start of a cycle:
    /// `e_base = ⌊0.05·escrow / 12⌋` and
    /// `i_base = ⌊0.05·escrow⌋ + ⌊r_base·staking_reserve⌋·12`.
    pub fn with_cycle_bases(&self, escrow_balance: Amount, staking_reserve: Amount) -> PolicyParams {
        let annual_escrow = ANNUAL_ESCROW_BUDGET_FRACTION
            .mul_floor_units(escrow_balance.units())
            .expect("bounded");
        let monthly_staking = self.effective_r_base().mul_floor_units(staking_reserve.units()).unwrap_or(0);
        let e_base = Amount::from_units(annual_escrow / 12);
        PolicyParams {
            e_base,
            e_min: self.e_min.min(e_base),
            i_base: Amount::from_units(annual_escrow.saturating_add(monthly_staking.saturating_mul(12))),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyFactors {
    pub phi_i: Dec,
    pub burn_fraction: Dec,
    pub escrow_cap: Amount,
    pub staking_rate: Dec,
    pub g_used: Dec,
}

pub fn issuance_factor(params: &PolicyParams, g: Dec) -> Dec {
    Dec::ONE - params.alpha_i * g
}

/// `min(max(0, ⌊(1 − α_I g)·I_base⌋), locked_unburned)`.
pub fn issuance_budget(params: &PolicyParams, g: Dec, locked_unburned: Amount) -> Amount {
    let phi = issuance_factor(params, g).max(Dec::ZERO);
    let gross = Amount::from_units(phi.mul_floor_units(params.i_base.units()).expect("bounded"));
    gross.min(locked_unburned)
}

/// `min(b_max, b_base + β_B g)`.
pub fn burn_fraction(params: &PolicyParams, g: Dec) -> Dec {
    (params.b_base + params.beta_b * g).min(params.b_max)
}

/// `⌊b(g)·F⌋`.
pub fn fee_burn_amount(params: &PolicyParams, g: Dec, fees: Amount) -> Amount {
    let b = burn_fraction(params, g);
    Amount::from_units(b.mul_floor_units(fees.units()).expect("bounded")).min(fees)
}

/// `max(E_min, ⌊E_base(1 − α_E g)⌋)`.
pub fn escrow_cap(params: &PolicyParams, g: Dec) -> Amount {
    let factor = (Dec::ONE - params.alpha_e * g).max(Dec::ZERO);
    let cap = Amount::from_units(factor.mul_floor_units(params.e_base.units()).expect("bounded"));
    cap.max(params.e_min)
}

/// `max(0, (1 − γ g)·r_base)`; with `γ = 0` the rate does not depend on debt.
pub fn staking_rate(params: &PolicyParams, g: Dec) -> Dec {
    ((Dec::ONE - params.gamma * g) * params.effective_r_base()).max(Dec::ZERO)
}

/// Bundle the levers for one annual cycle. `g` is fixed for the whole year.
pub fn derive_cycle_factors(params: &PolicyParams, g: Dec) -> PolicyFactors {
    PolicyFactors {
        phi_i: issuance_factor(params, g),
        burn_fraction: burn_fraction(params, g),
        escrow_cap: escrow_cap(params, g),
        staking_rate: staking_rate(params, g),
        g_used: g,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dec {
        s.parse().unwrap()
    }

    fn units(n: u64) -> Amount {
        Amount::from_units(n)
    }

    #[test]
    fn issuance_cases() {
        let p = PolicyParams { i_base: units(100_000_000), ..Default::default() };
        assert_eq!(issuance_budget(&p, Dec::ZERO, units(u64::MAX)), units(100_000_000));
        assert_eq!(issuance_budget(&p, Dec::ZERO, units(5)), units(5));
        let p = PolicyParams { alpha_i: d("0.5"), i_base: units(100_000_000), ..Default::default() };
        assert_eq!(issuance_budget(&p, d("0.4"), units(u64::MAX)), units(80_000_000));
        // α_I = 1 drives issuance to zero as g → 1
        let p = PolicyParams { alpha_i: Dec::ONE, i_base: units(100_000_000), ..Default::default() };
        assert_eq!(issuance_budget(&p, d("0.999999999"), units(u64::MAX)), Amount::ZERO);
    }

    #[test]
    fn burn_cases() {
        let p = PolicyParams { b_base: d("0.2"), beta_b: d("0.5"), b_max: d("0.9"), ..Default::default() };
        assert_eq!(burn_fraction(&p, Dec::ZERO), d("0.2"));
        assert_eq!(burn_fraction(&p, d("0.4")), d("0.4"));
        let p = PolicyParams { b_base: d("0.2"), beta_b: d("2"), b_max: d("0.8"), ..Default::default() };
        assert_eq!(burn_fraction(&p, d("0.9")), d("0.8"));
    }

    #[test]
    fn fee_burn_cases() {
        let p = PolicyParams { b_base: d("0.2"), beta_b: d("0.5"), b_max: d("0.9"), ..Default::default() };
        assert_eq!(fee_burn_amount(&p, d("0.4"), Amount::ZERO), Amount::ZERO);
        assert_eq!(fee_burn_amount(&p, d("0.4"), units(1000)), units(400));
        let p = PolicyParams { b_base: Dec::ONE, b_max: Dec::ONE, ..Default::default() };
        assert_eq!(fee_burn_amount(&p, Dec::ZERO, units(7)), units(7));
    }

    #[test]
    fn escrow_cap_cases() {
        let p = PolicyParams { e_base: units(100), alpha_e: d("0.8"), ..Default::default() };
        assert_eq!(escrow_cap(&p, Dec::ZERO), units(100));
        assert_eq!(escrow_cap(&p, d("0.5")), units(60));
        let p = PolicyParams { e_base: units(100), e_min: units(30), alpha_e: Dec::ONE, ..Default::default() };
        assert_eq!(escrow_cap(&p, d("0.9")), units(30));
    }

    #[test]
    fn staking_cases() {
        let p = PolicyParams { gamma: Dec::ZERO, r_base: d("0.02"), ..Default::default() };
        for g in ["0", "0.3", "0.999"] {
            assert_eq!(staking_rate(&p, d(g)), d("0.02"));
        }
        let p = PolicyParams { gamma: d("2"), r_base: d("0.02"), ..Default::default() };
        assert_eq!(staking_rate(&p, d("0.6")), Dec::ZERO);
        let p = PolicyParams { gamma: d("0.5"), r_base: d("0.02"), ..Default::default() };
        assert_eq!(staking_rate(&p, d("0.4")), d("0.016"));
        let p = PolicyParams { gamma: Dec::ZERO, r_base: d("0.02"), staking_multiplier: d("1.5"), ..Default::default() };
        assert_eq!(staking_rate(&p, Dec::ZERO), d("0.03"));
    }

    #[test]
    fn derived_bundle() {
        let p = PolicyParams {
            alpha_i: Dec::ONE,
            beta_b: Dec::ONE,
            alpha_e: Dec::ONE,
            gamma: Dec::ONE,
            b_base: d("0.25"),
            b_max: Dec::ONE,
            e_base: units(1000),
            e_min: units(100),
            i_base: units(10_000),
            r_base: d("0.01"),
            staking_multiplier: Dec::ONE,
        };
        let f = derive_cycle_factors(&p, Dec::ZERO);
        assert_eq!((f.phi_i, f.burn_fraction, f.escrow_cap, f.staking_rate), (Dec::ONE, d("0.25"), units(1000), d("0.01")));
        let f = derive_cycle_factors(&p, d("0.5"));
        assert_eq!((f.phi_i, f.burn_fraction, f.escrow_cap, f.staking_rate), (d("0.5"), d("0.75"), units(500), d("0.005")));
        let near_one = d("0.999999999");
        let f = derive_cycle_factors(&p, near_one);
        assert_eq!(f.escrow_cap, units(100));
        assert_eq!(issuance_budget(&p, near_one, units(u64::MAX)), Amount::ZERO);
        assert!(f.staking_rate < d("0.00000001"));
    }

    #[test]
    fn cycle_bases_from_balances() {
        let p = PolicyParams { r_base: d("0.001"), ..Default::default() };
        let escrow = Amount::from_kld(5_500_000_000);
        let staking = Amount::from_kld(300_000_000);
        let q = p.with_cycle_bases(escrow, staking);
        assert_eq!(q.e_base, Amount::from_units(275_000_000_000_000 / 12));
        assert_eq!(q.i_base, Amount::from_units(275_000_000_000_000 + 300_000_000_000 * 12));
        assert!(q.check().is_ok());
    }

    #[test]
    fn structural_check() {
        let p = PolicyParams { b_base: d("0.95"), ..Default::default() };
        assert!(p.check().is_err());
        let p = PolicyParams { e_min: units(5), ..Default::default() };
        assert!(p.check().is_err());
        assert!(PolicyParams::default().check().is_ok());
    }
}
