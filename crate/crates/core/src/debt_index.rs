//! Bloc debt index, normalization against the genesis baseline, and the
//! saturating policy factor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::{mul_div_ceil, mul_div_half_even, Dec, SCALE};
use crate::weo_ingest::{Bloc, BlocObservation, WeoVintage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("observations do not cover the full bloc set (missing {0:?})")]
    IncompleteBlocSet(Vec<Bloc>),
    #[error("observation and weight bloc sets differ")]
    BlocSetMismatch,
    #[error("bloc {0} appears more than once")]
    DuplicateBloc(Bloc),
    #[error("no observations")]
    Empty,
    #[error("nominal GDP must be positive")]
    NonPositiveGdp,
    #[error("baseline is not frozen")]
    BaselineNotFrozen,
    #[error("baseline is frozen and cannot be modified")]
    BaselineFrozen,
    #[error("baseline index must be positive")]
    NonPositiveBaseline,
    #[error("lambda must be positive")]
    NonPositiveLambda,
    #[error("excess debt must be nonnegative")]
    NegativeExcess,
    #[error("arithmetic overflow")]
    Overflow,
}

pub type Weights = BTreeMap<Bloc, Dec>;

/// Genesis reference level of the index. Immutable once frozen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineRef {
    bdi_ref: Dec,
    genesis_vintage: WeoVintage,
    frozen: bool,
}

impl BaselineRef {
    pub fn new(bdi_ref: Dec, genesis_vintage: WeoVintage) -> Result<Self, IndexError> {
        if !bdi_ref.is_positive() {
            return Err(IndexError::NonPositiveBaseline);
        }
        Ok(BaselineRef { bdi_ref, genesis_vintage, frozen: false })
    }

    /// Compute the reference from a complete genesis snapshot and freeze it.
    pub fn from_genesis(observations: &[BlocObservation], genesis_vintage: WeoVintage) -> Result<Self, IndexError> {
        let weights = compute_weights(observations)?;
        let bdi = compute_bdi(observations, &weights)?;
        let mut b = Self::new(bdi, genesis_vintage)?;
        b.freeze();
        Ok(b)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn set_bdi_ref(&mut self, bdi_ref: Dec) -> Result<(), IndexError> {
        if self.frozen {
            return Err(IndexError::BaselineFrozen);
        }
        if !bdi_ref.is_positive() {
            return Err(IndexError::NonPositiveBaseline);
        }
        self.bdi_ref = bdi_ref;
        Ok(())
    }

    pub fn set_genesis_vintage(&mut self, vintage: WeoVintage) -> Result<(), IndexError> {
        if self.frozen {
            return Err(IndexError::BaselineFrozen);
        }
        self.genesis_vintage = vintage;
        Ok(())
    }

    pub fn bdi_ref(&self) -> Dec {
        self.bdi_ref
    }

    pub fn genesis_vintage(&self) -> &WeoVintage {
        &self.genesis_vintage
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebtIndexState {
    pub cycle_year: i32,
    pub weights: Weights,
    pub bdi: Dec,
    pub x_norm: Dec,
    pub x_excess: Dec,
    pub g: Dec,
    pub lambda: Dec,
}

impl DebtIndexState {
    /// Full index pipeline for one cycle.
    pub fn compute(
        cycle_year: i32,
        observations: &[BlocObservation],
        baseline: &BaselineRef,
        lambda: Dec,
    ) -> Result<Self, IndexError> {
        let weights = compute_weights(observations)?;
        let bdi = compute_bdi(observations, &weights)?;
        let (x_norm, x_excess) = normalize(bdi, baseline)?;
        let g = policy_factor(x_excess, lambda)?;
        Ok(DebtIndexState { cycle_year, weights, bdi, x_norm, x_excess, g, lambda })
    }
}

/// GDP weights over the full seven-bloc set.
pub fn compute_weights(observations: &[BlocObservation]) -> Result<Weights, IndexError> {
    let present: Vec<Bloc> = observations.iter().map(|o| o.bloc).collect();
    let missing: Vec<Bloc> = Bloc::ALL.into_iter().filter(|b| !present.contains(b)).collect();
    if !missing.is_empty() {
        return Err(IndexError::IncompleteBlocSet(missing));
    }
    gdp_weights(observations.iter().map(|o| (o.bloc, o.nominal_gdp)))
}

/// GDP weights over an arbitrary bloc subset.
///
/// Each weight is rounded half-even to nine digits; the rounding residual is
/// added to the largest-GDP bloc (first in code order on ties) so the weights
/// sum to exactly one.
pub fn gdp_weights(gdp: impl IntoIterator<Item = (Bloc, Dec)>) -> Result<Weights, IndexError> {
    let mut by_bloc: Weights = BTreeMap::new();
    for (bloc, v) in gdp {
        if !v.is_positive() {
            return Err(IndexError::NonPositiveGdp);
        }
        if by_bloc.insert(bloc, v).is_some() {
            return Err(IndexError::DuplicateBloc(bloc));
        }
    }
    if by_bloc.is_empty() {
        return Err(IndexError::Empty);
    }
    let total = by_bloc
        .values()
        .try_fold(Dec::ZERO, |acc, v| acc.checked_add(*v))
        .ok_or(IndexError::Overflow)?;
    let mut weights: Weights = BTreeMap::new();
    for (bloc, v) in &by_bloc {
        let w = mul_div_half_even(v.raw(), SCALE, total.raw()).ok_or(IndexError::Overflow)?;
        weights.insert(*bloc, Dec::from_raw(w));
    }
    let sum: Dec = weights.values().copied().sum();
    let residual = Dec::ONE - sum;
    if !residual.is_zero() {
        // max_by_key keeps the last maximum; iterate in reverse to keep the first
        let (anchor, _) = by_bloc.iter().rev().max_by_key(|(_, v)| **v).expect("nonempty");
        let w = weights.get_mut(anchor).expect("present");
        *w = *w + residual;
    }
    Ok(weights)
}

/// `Σ W_b · D_b`, accumulated exactly and rounded once, half-even.
pub fn compute_bdi(observations: &[BlocObservation], weights: &Weights) -> Result<Dec, IndexError> {
    let mut seen = BTreeMap::new();
    for o in observations {
        if seen.insert(o.bloc, o.debt_ratio).is_some() {
            return Err(IndexError::DuplicateBloc(o.bloc));
        }
    }
    if seen.len() != weights.len() || seen.keys().any(|b| !weights.contains_key(b)) {
        return Err(IndexError::BlocSetMismatch);
    }
    let mut acc: i128 = 0;
    for (bloc, debt) in &seen {
        let term = weights[bloc].raw().checked_mul(debt.raw()).ok_or(IndexError::Overflow)?;
        acc = acc.checked_add(term).ok_or(IndexError::Overflow)?;
    }
    mul_div_half_even(acc, 1, SCALE).map(Dec::from_raw).ok_or(IndexError::Overflow)
}

/// `(X, x) = (BDI / BDI_ref, max(0, X − 1))`.
pub fn normalize(bdi: Dec, baseline: &BaselineRef) -> Result<(Dec, Dec), IndexError> {
    if !baseline.is_frozen() {
        return Err(IndexError::BaselineNotFrozen);
    }
    let x_norm = bdi.checked_div(baseline.bdi_ref()).ok_or(IndexError::Overflow)?;
    let x_excess = (x_norm - Dec::ONE).max(Dec::ZERO);
    Ok((x_norm, x_excess))
}

/// `g = x / (1 + λx)`, evaluated as one rational and rounded up to the 1e-9 grid.
///
/// Rounding up keeps `g > 0` for every positive excess and keeps the factor
/// strictly above any grid point it exceeds, so large excesses stay
/// distinguishable from their lower neighbours. The result lies in `[0, 1)`;
/// values that would reach one are held at `1 − 1e-9`.
pub fn policy_factor(x_excess: Dec, lambda: Dec) -> Result<Dec, IndexError> {
    if !lambda.is_positive() {
        return Err(IndexError::NonPositiveLambda);
    }
    if x_excess.is_negative() {
        return Err(IndexError::NegativeExcess);
    }
    // g_raw = x_raw * S^2 / (S^2 + λ_raw * x_raw)
    let s2 = SCALE * SCALE;
    let lx = lambda.raw().checked_mul(x_excess.raw()).ok_or(IndexError::Overflow)?;
    let den = s2.checked_add(lx).ok_or(IndexError::Overflow)?;
    let g = mul_div_ceil(x_excess.raw(), s2, den).ok_or(IndexError::Overflow)?;
    // 1/λ is the supremum of x/(1+λx); for λ<1 the factor may exceed one
    // mathematically, so the [0,1) range needs the clamp regardless of rounding.
    Ok(Dec::from_raw(g.min(SCALE - 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    LowDebt,
    ModerateDebt,
    HighDebt,
}

/// Interpretive bands for `g`. No policy function reads the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeBand {
    low_max: Dec,
    high_min: Dec,
}

impl RegimeBand {
    pub fn new(low_max: Dec, high_min: Dec) -> Option<Self> {
        (!low_max.is_negative() && low_max < high_min && high_min < Dec::ONE).then_some(RegimeBand { low_max, high_min })
    }

    pub fn thresholds(&self) -> (Dec, Dec) {
        (self.low_max, self.high_min)
    }
}

impl Default for RegimeBand {
    fn default() -> Self {
        RegimeBand { low_max: Dec::from_ratio(5, 100), high_min: Dec::from_ratio(7, 10) }
    }
}

pub fn classify_band(g: Dec, bands: &RegimeBand) -> Band {
    if g <= bands.low_max {
        Band::LowDebt
    } else if g >= bands.high_min {
        Band::HighDebt
    } else {
        Band::ModerateDebt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::Digest;
    use crate::weo_ingest::ObservationStatus;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn d(s: &str) -> Dec {
        s.parse().unwrap()
    }

    fn vintage() -> WeoVintage {
        WeoVintage {
            vintage_id: "2024-April".parse().unwrap(),
            publication_date: NaiveDate::from_ymd_opt(2024, 4, 16).unwrap(),
            dataset_hash: Digest::of(b"genesis"),
        }
    }

    fn obs(bloc: Bloc, debt: &str, gdp: &str) -> BlocObservation {
        BlocObservation {
            bloc,
            debt_ratio: d(debt),
            nominal_gdp: d(gdp),
            source_vintage: vintage(),
            status: ObservationStatus::Observed,
        }
    }

    fn frozen(bdi: &str) -> BaselineRef {
        let mut b = BaselineRef::new(d(bdi), vintage()).unwrap();
        b.freeze();
        b
    }

    #[test]
    fn two_bloc_weights_match_rationals() {
        let w = gdp_weights([(Bloc::US, d("20")), (Bloc::JP, d("10"))]).unwrap();
        // rational oracle: 2/3 and 1/3, each rounded half-even
        assert_eq!(w[&Bloc::US], Dec::from_ratio(2, 3));
        assert_eq!(w[&Bloc::JP], Dec::from_ratio(1, 3));
        assert_eq!(w.values().copied().sum::<Dec>(), Dec::ONE);
    }

    #[test]
    fn equal_gdp_residual_lands_on_first_bloc() {
        let all: Vec<_> = Bloc::ALL.iter().map(|b| obs(*b, "100", "5")).collect();
        let w = compute_weights(&all).unwrap();
        assert_eq!(w.values().copied().sum::<Dec>(), Dec::ONE);
        // 1/7 rounds to 0.142857143; seven of those overshoot by 1e-9
        assert_eq!(w[&Bloc::US], d("0.142857142"));
        for b in &Bloc::ALL[1..] {
            assert_eq!(w[b], d("0.142857143"));
        }
    }

    #[test]
    fn incomplete_set_rejected() {
        let six: Vec<_> = Bloc::ALL[..6].iter().map(|b| obs(*b, "100", "5")).collect();
        assert_eq!(compute_weights(&six), Err(IndexError::IncompleteBlocSet(vec![Bloc::KR])));
    }

    #[test]
    fn weighted_sum() {
        let o = [obs(Bloc::US, "120", "20"), obs(Bloc::JP, "240", "10")];
        let w = gdp_weights([(Bloc::US, d("20")), (Bloc::JP, d("10"))]).unwrap();
        let bdi = compute_bdi(&o, &w).unwrap();
        // exact rational answer is 160; deviation bounded by weight rounding
        // (Σ D_b · 0.5e-9 plus the residual ulp on the anchor)
        let bound = d("0.000000540");
        assert!((bdi - d("160")).abs() <= bound, "{bdi}");
        // and it equals the value implied by the rounded weights exactly
        assert_eq!(bdi, d("159.999999960"));
    }

    #[test]
    fn constant_ratio_ignores_weights() {
        let all: Vec<_> = Bloc::ALL.iter().enumerate().map(|(i, b)| obs(*b, "100", &format!("{}", i * 7 + 3))).collect();
        let w = compute_weights(&all).unwrap();
        assert_eq!(compute_bdi(&all, &w).unwrap(), d("100"));
    }

    #[test]
    fn mismatched_weights_rejected() {
        let o = [obs(Bloc::US, "120", "20"), obs(Bloc::JP, "240", "10")];
        let w = gdp_weights([(Bloc::US, d("20")), (Bloc::UK, d("10"))]).unwrap();
        assert_eq!(compute_bdi(&o, &w), Err(IndexError::BlocSetMismatch));
    }

    #[test]
    fn normalization_cases() {
        let b = frozen("100");
        assert_eq!(normalize(d("100"), &b).unwrap(), (Dec::ONE, Dec::ZERO));
        assert_eq!(normalize(d("150"), &b).unwrap(), (d("1.5"), d("0.5")));
        assert_eq!(normalize(d("80"), &b).unwrap(), (d("0.8"), Dec::ZERO));
        let thawed = BaselineRef::new(d("100"), vintage()).unwrap();
        assert_eq!(normalize(d("100"), &thawed), Err(IndexError::BaselineNotFrozen));
    }

    #[test]
    fn frozen_baseline_is_immutable() {
        let mut b = frozen("100");
        assert_eq!(b.set_bdi_ref(d("90")), Err(IndexError::BaselineFrozen));
        assert_eq!(b.set_genesis_vintage(vintage()), Err(IndexError::BaselineFrozen));
        assert_eq!(b.bdi_ref(), d("100"));
        assert!(BaselineRef::new(Dec::ZERO, vintage()).is_err());
    }

    #[test]
    fn policy_factor_cases() {
        assert_eq!(policy_factor(Dec::ZERO, Dec::ONE).unwrap(), Dec::ZERO);
        // 1/3 lands on the grid point above it
        assert_eq!(policy_factor(d("0.5"), Dec::ONE).unwrap(), d("0.333333334"));
        assert_eq!(policy_factor(d("1000000"), Dec::ONE).unwrap(), d("0.999999001"));
        assert_eq!(policy_factor(Dec::ULP, Dec::ONE).unwrap(), Dec::ULP);
        assert_eq!(policy_factor(d("1"), Dec::ZERO), Err(IndexError::NonPositiveLambda));
        assert_eq!(policy_factor(d("-1"), Dec::ONE), Err(IndexError::NegativeExcess));
        // far into saturation the factor is held strictly below one
        assert!(policy_factor(d("100000000000000"), Dec::ONE).unwrap() < Dec::ONE);
        assert!(policy_factor(d("100"), d("0.001")).unwrap() < Dec::ONE);
    }

    #[test]
    fn band_classification() {
        let bands = RegimeBand::default();
        assert_eq!(classify_band(Dec::ZERO, &bands), Band::LowDebt);
        assert_eq!(classify_band(d("0.5"), &bands), Band::ModerateDebt);
        assert_eq!(classify_band(d("0.9"), &bands), Band::HighDebt);
        assert!(RegimeBand::new(d("0.7"), d("0.05")).is_none());
    }

    #[test]
    fn full_state_pipeline() {
        let base: Vec<_> = Bloc::ALL.iter().map(|b| obs(*b, "100", "10")).collect();
        let baseline = BaselineRef::from_genesis(&base, vintage()).unwrap();
        let now: Vec<_> = Bloc::ALL.iter().map(|b| obs(*b, "150", "10")).collect();
        let st = DebtIndexState::compute(2025, &now, &baseline, Dec::ONE).unwrap();
        assert_eq!(st.bdi, d("150"));
        assert_eq!(st.x_norm, d("1.5"));
        assert_eq!(st.g, d("0.333333334"));
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(a in 0i128..(1i128 << 70), b in 0i128..(1i128 << 70), lam in 1i128..10_000_000_000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let lambda = Dec::from_raw(lam);
            let g_lo = policy_factor(Dec::from_raw(lo), lambda).unwrap();
            let g_hi = policy_factor(Dec::from_raw(hi), lambda).unwrap();
            prop_assert!(g_lo <= g_hi);
            prop_assert!(!g_lo.is_negative() && g_hi < Dec::ONE);
            prop_assert_eq!(g_lo.is_zero(), lo == 0);
        }

        #[test]
        fn weights_sum_to_one(gdps in proptest::collection::vec(1i128..(1i128 << 80), 7)) {
            let w = gdp_weights(Bloc::ALL.iter().zip(&gdps).map(|(b, g)| (*b, Dec::from_raw(*g)))).unwrap();
            prop_assert_eq!(w.values().copied().sum::<Dec>(), Dec::ONE);
        }
    }
}
