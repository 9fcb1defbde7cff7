//! Macro dataset snapshot ingestion.
//!
//! A snapshot is a comma-separated extract of the seven-bloc series:
//!
//! ```text
//! bloc,series,value,vintage
//! US,GGXWDG_NGDP,121.0,2024-October
//! US,NGDPD,29167.779,2024-October
//! ...
//! ```
//!
//! `GGXWDG_NGDP` is general government gross debt in percent of GDP and
//! `NGDPD` is nominal GDP. The dataset digest is SHA-256 over the raw bytes,
//! so a snapshot must be hashed exactly as it was exported.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Days, NaiveDate, TimeZone, Utc, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::Digest;
use crate::decimal::Dec;

pub const DEBT_SERIES: &str = "GGXWDG_NGDP";
pub const GDP_SERIES: &str = "NGDPD";
const HEADER: [&str; 4] = ["bloc", "series", "value", "vintage"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("malformed snapshot (line {line}): {reason}")]
    MalformedFile { line: u64, reason: String },
    #[error("duplicate {series} row for bloc {bloc}")]
    DuplicateBloc { bloc: Bloc, series: String },
    #[error("invalid value for {bloc} {series}: {value}")]
    NegativeValue { bloc: Bloc, series: String, value: Dec },
    #[error("invalid vintage identifier `{0}` (expected e.g. 2024-October)")]
    BadVintage(String),
    #[error("bloc {0} is missing and has no prior confirmed value")]
    NoPriorValue(Bloc),
    #[error("calendar file: {0}")]
    Calendar(String),
}

/// The seven blocs of the index. Declaration order is the canonical code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bloc {
    US,
    EA20,
    JP,
    UK,
    CA,
    AU,
    KR,
}

impl Bloc {
    pub const ALL: [Bloc; 7] = [Bloc::US, Bloc::EA20, Bloc::JP, Bloc::UK, Bloc::CA, Bloc::AU, Bloc::KR];

    pub fn code(self) -> &'static str {
        match self {
            Bloc::US => "US",
            Bloc::EA20 => "EA20",
            Bloc::JP => "JP",
            Bloc::UK => "UK",
            Bloc::CA => "CA",
            Bloc::AU => "AU",
            Bloc::KR => "KR",
        }
    }
}

impl fmt::Display for Bloc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Bloc {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Bloc::ALL
            .into_iter()
            .find(|b| b.code() == s)
            .ok_or_else(|| format!("unknown bloc code `{s}`"))
    }
}

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October",
    "November", "December",
];

/// A release identifier such as `2024-October`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VintageId {
    year: i32,
    month: u32,
}

impl VintageId {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(VintageId { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    /// First day of the release month.
    pub fn release_month_start(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }
}

impl fmt::Display for VintageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.year, MONTHS[(self.month - 1) as usize])
    }
}

impl FromStr for VintageId {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::BadVintage(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month = MONTHS.iter().position(|name| *name == m).ok_or_else(bad)? as u32 + 1;
        Ok(VintageId { year, month })
    }
}

impl TryFrom<String> for VintageId {
    type Error = IngestError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<VintageId> for String {
    fn from(v: VintageId) -> String {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeoVintage {
    pub vintage_id: VintageId,
    pub publication_date: NaiveDate,
    pub dataset_hash: Digest,
}

impl WeoVintage {
    pub fn with_publication_date(mut self, date: NaiveDate) -> Self {
        self.publication_date = date;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObservationStatus {
    Observed,
    CarriedForward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlocObservation {
    pub bloc: Bloc,
    /// Debt in percent of GDP.
    pub debt_ratio: Dec,
    pub nominal_gdp: Dec,
    pub source_vintage: WeoVintage,
    pub status: ObservationStatus,
}

/// One bloc slot of a parsed snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotEntry {
    Present(BlocObservation),
    MissingSeries(Bloc),
}

impl SnapshotEntry {
    pub fn bloc(&self) -> Bloc {
        match self {
            SnapshotEntry::Present(o) => o.bloc,
            SnapshotEntry::MissingSeries(b) => *b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSnapshot {
    pub vintage: WeoVintage,
    /// One entry per bloc, in code order.
    pub entries: Vec<SnapshotEntry>,
}

impl ParsedSnapshot {
    pub fn missing(&self) -> Vec<Bloc> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                SnapshotEntry::MissingSeries(b) => Some(*b),
                SnapshotEntry::Present(_) => None,
            })
            .collect()
    }

    /// Observations if no bloc is missing.
    pub fn complete(&self) -> Option<Vec<BlocObservation>> {
        self.entries
            .iter()
            .map(|e| match e {
                SnapshotEntry::Present(o) => Some(o.clone()),
                SnapshotEntry::MissingSeries(_) => None,
            })
            .collect()
    }
}

/// Parse a snapshot extract. The dataset digest covers the raw bytes.
///
/// The vintage's publication date defaults to the first day of the release
/// month; callers that know the actual date override it with
/// [`WeoVintage::with_publication_date`].
pub fn parse_weo_snapshot(raw: &[u8], vintage_id: &str) -> Result<ParsedSnapshot, IngestError> {
    let vintage_id: VintageId = vintage_id.parse()?;
    let vintage = WeoVintage {
        publication_date: vintage_id.release_month_start(),
        vintage_id,
        dataset_hash: Digest::of(raw),
    };

    let malformed = |line: u64, reason: String| IngestError::MalformedFile { line, reason };
    let text = std::str::from_utf8(raw).map_err(|e| malformed(0, format!("not UTF-8: {e}")))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());

    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?;
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(malformed(1, format!("header must be `{}`", HEADER.join(","))));
    }

    let mut debt: BTreeMap<Bloc, Dec> = BTreeMap::new();
    let mut gdp: BTreeMap<Bloc, Dec> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 4 {
            return Err(malformed(line, format!("expected 4 fields, found {}", record.len())));
        }
        let bloc: Bloc = record[0].parse().map_err(|e| malformed(line, e))?;
        let series = &record[1];
        let value: Dec = record[2].parse().map_err(|e| malformed(line, format!("{e}")))?;
        let row_vintage: VintageId = record[3].parse().map_err(|e| malformed(line, format!("{e}")))?;
        if row_vintage != vintage_id {
            return Err(malformed(line, format!("row vintage {row_vintage} differs from {vintage_id}")));
        }
        let (target, valid) = match series {
            DEBT_SERIES => (&mut debt, !value.is_negative()),
            GDP_SERIES => (&mut gdp, value.is_positive()),
            other => return Err(malformed(line, format!("unknown series code `{other}`"))),
        };
        if !valid {
            return Err(IngestError::NegativeValue { bloc, series: series.to_string(), value });
        }
        if target.insert(bloc, value).is_some() {
            return Err(IngestError::DuplicateBloc { bloc, series: series.to_string() });
        }
    }

    let entries = Bloc::ALL
        .into_iter()
        .map(|bloc| match (debt.get(&bloc), gdp.get(&bloc)) {
            (Some(&debt_ratio), Some(&nominal_gdp)) => SnapshotEntry::Present(BlocObservation {
                bloc,
                debt_ratio,
                nominal_gdp,
                source_vintage: vintage.clone(),
                status: ObservationStatus::Observed,
            }),
            _ => SnapshotEntry::MissingSeries(bloc),
        })
        .collect();
    Ok(ParsedSnapshot { vintage, entries })
}

/// Replace every missing bloc with its last confirmed observation.
pub fn apply_missing_data_rule(
    current: &[SnapshotEntry],
    last_confirmed: &[BlocObservation],
) -> Result<Vec<BlocObservation>, IngestError> {
    current
        .iter()
        .map(|entry| match entry {
            SnapshotEntry::Present(o) => Ok(o.clone()),
            SnapshotEntry::MissingSeries(bloc) => last_confirmed
                .iter()
                .find(|o| o.bloc == *bloc)
                .map(|o| BlocObservation { status: ObservationStatus::CarriedForward, ..o.clone() })
                .ok_or(IngestError::NoPriorValue(*bloc)),
        })
        .collect()
}

/// Business days: weekdays not listed as holidays.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BusinessCalendar {
    holidays: BTreeSet<NaiveDate>,
}

impl BusinessCalendar {
    pub fn weekends_only() -> Self {
        Self::default()
    }

    pub fn with_holidays(holidays: impl IntoIterator<Item = NaiveDate>) -> Self {
        BusinessCalendar { holidays: holidays.into_iter().collect() }
    }

    /// One ISO date per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut holidays = BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let d = NaiveDate::parse_from_str(line, "%Y-%m-%d")
                .map_err(|e| IngestError::Calendar(format!("line {}: {e}", n + 1)))?;
            holidays.insert(d);
        }
        Ok(BusinessCalendar { holidays })
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|e| IngestError::Calendar(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn is_business_day(&self, d: NaiveDate) -> bool {
        !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && !self.holidays.contains(&d)
    }

    /// `d` itself if it is a business day, otherwise the next one.
    pub fn on_or_after(&self, mut d: NaiveDate) -> NaiveDate {
        while !self.is_business_day(d) {
            d = d.succ_opt().expect("date in range");
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleBranch {
    OctoberPlus10,
    DecemberFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotDecision {
    pub cycle_year: i32,
    pub snapshot_timestamp: DateTime<Utc>,
    pub rule_branch: RuleBranch,
    pub fallback_note: Option<String>,
}

impl SnapshotDecision {
    /// Vintages published on or before this date are eligible.
    pub fn cutoff(&self) -> NaiveDate {
        match self.rule_branch {
            RuleBranch::OctoberPlus10 => self.snapshot_timestamp.date_naive(),
            RuleBranch::DecemberFallback => december_first(self.cycle_year),
        }
    }
}

fn december_first(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 12, 1).expect("valid date")
}

fn at_noon(d: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&d.and_hms_opt(12, 0, 0).expect("valid time"))
}

/// Decide when the annual index is published.
///
/// An October release published by December 1 is snapshotted at 12:00 UTC ten
/// calendar days after publication. Otherwise publication moves to 12:00 UTC on
/// December 10, or the next business day.
pub fn resolve_snapshot_date(
    october_publication: Option<NaiveDate>,
    today: NaiveDate,
    calendar: &BusinessCalendar,
) -> SnapshotDecision {
    let year = today.year();
    match october_publication.filter(|p| *p <= december_first(year)) {
        Some(published) => SnapshotDecision {
            cycle_year: year,
            snapshot_timestamp: at_noon(published.checked_add_days(Days::new(10)).expect("date in range")),
            rule_branch: RuleBranch::OctoberPlus10,
            fallback_note: None,
        },
        None => {
            let dec10 = NaiveDate::from_ymd_opt(year, 12, 10).expect("valid date");
            let day = calendar.on_or_after(dec10);
            let mut note = format!("October {year} release not published by December 1; latest vintage as of December 1 used");
            if day != dec10 {
                note.push_str(&format!("; December 10 is not a business day, published {day}"));
            }
            SnapshotDecision {
                cycle_year: year,
                snapshot_timestamp: at_noon(day),
                rule_branch: RuleBranch::DecemberFallback,
                fallback_note: Some(note),
            }
        }
    }
}

/// Pick the vintage the decision refers to: the October release of the cycle
/// year, or the latest release published by December 1.
pub fn select_vintage<'a>(decision: &SnapshotDecision, available: &'a [WeoVintage]) -> Option<&'a WeoVintage> {
    match decision.rule_branch {
        RuleBranch::OctoberPlus10 => available
            .iter()
            .find(|v| v.vintage_id.year() == decision.cycle_year && v.vintage_id.month() == 10),
        RuleBranch::DecemberFallback => available
            .iter()
            .filter(|v| v.publication_date <= decision.cutoff())
            .max_by_key(|v| (v.publication_date, v.vintage_id)),
    }
}
