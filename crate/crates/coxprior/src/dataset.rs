//! Right-censored two-group survival data: records, CSV input/output,
//! risk sets, and a seeded Weibull simulator.
//!
//! Times are overall survival in months and must be strictly positive.
//! Censored and uncensored records at the same time both belong to the
//! risk set of an event at that time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("input has no header row")]
    EmptyInput,
    #[error("missing required column `{name}` in header")]
    MissingColumn { name: &'static str },
    #[error("dataset contains no records")]
    NoRecords,
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: time_os_months must be a positive finite number, got `{value}`")]
    InvalidTime { row: usize, value: String },
    #[error("event must be 0 or 1, row {row} (got `{value}`)")]
    InvalidEvent { row: usize, value: String },
    #[error("row {row}: group must be CRT or HFRT, got `{value}`")]
    InvalidGroup { row: usize, value: String },
    #[error("record time must be positive and finite, got {time}")]
    NonPositiveTime { time: f64 },
    #[error("record index {index} out of range for dataset of {len} records")]
    RecordOutOfRange { index: usize, len: usize },
    #[error("record {index} is censored, not an event")]
    NotAnEvent { index: usize },
    #[error("invalid simulation config: {reason}")]
    InvalidSimulationConfig { reason: String },
}

/// Treatment arm. CRT is the reference level; its covariate value is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Group {
    Crt,
    Hfrt,
}

impl Group {
    /// Case-insensitive parse of a group label.
    pub fn parse(s: &str) -> Option<Group> {
        if s.eq_ignore_ascii_case("crt") {
            Some(Group::Crt)
        } else if s.eq_ignore_ascii_case("hfrt") {
            Some(Group::Hfrt)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Crt => "CRT",
            Group::Hfrt => "HFRT",
        }
    }

    /// Covariate coding: 0 for the reference arm, 1 for HFRT.
    pub fn indicator(self) -> f64 {
        match self {
            Group::Crt => 0.0,
            Group::Hfrt => 1.0,
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::Crt => Group::Hfrt,
            Group::Hfrt => Group::Crt,
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One subject: arm, follow-up time in months, and whether death was
/// observed (`event`) or follow-up ended first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub group: Group,
    pub time: f64,
    pub event: bool,
}

impl SurvivalRecord {
    pub fn new(group: Group, time: f64, event: bool) -> Result<Self, DataError> {
        if !(time.is_finite() && time > 0.0) {
            return Err(DataError::NonPositiveTime { time });
        }
        Ok(SurvivalRecord { group, time, event })
    }
}

/// A non-empty collection of records plus a note on where they came
/// from (file path, simulation parameters, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<SurvivalRecord>,
    provenance: String,
}

impl Dataset {
    pub fn new(records: Vec<SurvivalRecord>, provenance: impl Into<String>) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::NoRecords);
        }
        for r in &records {
            if !(r.time.is_finite() && r.time > 0.0) {
                return Err(DataError::NonPositiveTime { time: r.time });
            }
        }
        Ok(Dataset {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn n_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    /// (reference-arm count, HFRT count).
    pub fn group_counts(&self) -> (usize, usize) {
        let crt = self
            .records
            .iter()
            .filter(|r| r.group == Group::Crt)
            .count();
        (crt, self.records.len() - crt)
    }

    /// The same data with every arm label flipped.
    pub fn swap_groups(&self) -> Dataset {
        let records = self
            .records
            .iter()
            .map(|r| SurvivalRecord {
                group: r.group.other(),
                ..*r
            })
            .collect();
        Dataset {
            records,
            provenance: format!("{} (groups swapped)", self.provenance),
        }
    }
}

/// Output of [`parse_csv`]: the dataset plus non-fatal notes such as
/// ignored extra columns.
#[derive(Debug)]
pub struct ParsedCsv {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Parses CSV text with required columns `group`, `time_os_months`, and
/// `event` in any order. Extra columns are ignored with a warning. Row
/// numbers in errors count data rows from 1.
pub fn parse_csv(text: &str) -> Result<ParsedCsv, DataError> {
    parse_csv_named(text, "csv input")
}

/// Same as [`parse_csv`] with an explicit provenance label, typically a
/// file path.
pub fn parse_csv_named(text: &str, source: &str) -> Result<ParsedCsv, DataError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(DataError::EmptyInput)?;
    let columns: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let find = |name: &'static str| -> Result<usize, DataError> {
        columns
            .iter()
            .position(|c| c == name)
            .ok_or(DataError::MissingColumn { name })
    };
    let group_col = find("group")?;
    let time_col = find("time_os_months")?;
    let event_col = find("event")?;

    let mut warnings = Vec::new();
    let extra: Vec<&str> = columns
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != group_col && i != time_col && i != event_col)
        .map(|(_, c)| c.as_str())
        .collect();
    if !extra.is_empty() {
        warnings.push(format!("ignoring extra column(s): {}", extra.join(", ")));
    }

    let mut records = Vec::new();
    for (row_idx, line) in lines.enumerate() {
        let row = row_idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(DataError::FieldCount {
                row,
                expected: columns.len(),
                found: fields.len(),
            });
        }
        let group = Group::parse(fields[group_col]).ok_or_else(|| DataError::InvalidGroup {
            row,
            value: fields[group_col].to_string(),
        })?;
        let time: f64 = fields[time_col].parse().map_err(|_| DataError::InvalidTime {
            row,
            value: fields[time_col].to_string(),
        })?;
        if !(time.is_finite() && time > 0.0) {
            return Err(DataError::InvalidTime {
                row,
                value: fields[time_col].to_string(),
            });
        }
        let event = match fields[event_col] {
            "0" => false,
            "1" => true,
            other => {
                return Err(DataError::InvalidEvent {
                    row,
                    value: other.to_string(),
                })
            }
        };
        records.push(SurvivalRecord { group, time, event });
    }
    let dataset = Dataset::new(records, source)?;
    Ok(ParsedCsv { dataset, warnings })
}

/// Renders a dataset as CSV that [`parse_csv`] reads back identically.
pub fn write_csv(dataset: &Dataset) -> String {
    let mut out = String::from("group,time_os_months,event\n");
    for r in dataset.records() {
        out.push_str(&format!(
            "{},{},{}\n",
            r.group,
            r.time,
            if r.event { 1 } else { 0 }
        ));
    }
    out
}

/// Indices of every record still at risk when the event at `index`
/// occurs: all records with time >= that event's time, ties included.
pub fn risk_set(dataset: &Dataset, index: usize) -> Result<Vec<usize>, DataError> {
    let records = dataset.records();
    let rec = records
        .get(index)
        .ok_or(DataError::RecordOutOfRange {
            index,
            len: records.len(),
        })?;
    if !rec.event {
        return Err(DataError::NotAnEvent { index });
    }
    Ok(records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.time >= rec.time)
        .map(|(i, _)| i)
        .collect())
}

/// Parameters for the seeded two-arm Weibull simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_crt: usize,
    pub n_hfrt: usize,
    /// Log hazard ratio of HFRT versus the reference arm.
    pub true_log_hr: f64,
    pub baseline_shape: f64,
    pub baseline_scale: f64,
    /// Target expected fraction of censored records, in [0, 1).
    pub censor_rate: f64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |reason: &str| {
            Err(DataError::InvalidSimulationConfig {
                reason: reason.to_string(),
            })
        };
        if self.n_crt == 0 {
            return fail("n_crt must be at least 1");
        }
        if self.n_hfrt == 0 {
            return fail("n_hfrt must be at least 1");
        }
        if !self.true_log_hr.is_finite() {
            return fail("true_log_hr must be finite");
        }
        if !(self.baseline_shape.is_finite() && self.baseline_shape > 0.0) {
            return fail("baseline_shape must be positive and finite");
        }
        if !(self.baseline_scale.is_finite() && self.baseline_scale > 0.0) {
            return fail("baseline_scale must be positive and finite");
        }
        if !(self.censor_rate >= 0.0 && self.censor_rate < 1.0) {
            return fail("censor_rate must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Draws a dataset from a Weibull proportional-hazards model with
/// exponential censoring. The censoring rate is calibrated so that the
/// expected censored fraction matches `censor_rate`; a rate of 0 turns
/// censoring off. Fixed seeds reproduce the dataset exactly.
pub fn simulate(config: &SimulationConfig) -> Result<Dataset, DataError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let censor_hazard = if config.censor_rate > 0.0 {
        calibrate_censor_hazard(config)
    } else {
        0.0
    };

    let mut records = Vec::with_capacity(config.n_crt + config.n_hfrt);
    for (group, n) in [(Group::Crt, config.n_crt), (Group::Hfrt, config.n_hfrt)] {
        let hr = (config.true_log_hr * group.indicator()).exp();
        for _ in 0..n {
            let event_time = loop {
                let e = exp_draw(&mut rng);
                let t = config.baseline_scale * (e / hr).powf(1.0 / config.baseline_shape);
                if t > 0.0 {
                    break t;
                }
            };
            let (time, event) = if censor_hazard > 0.0 {
                let censor_time = loop {
                    let c = exp_draw(&mut rng) / censor_hazard;
                    if c > 0.0 {
                        break c;
                    }
                };
                if event_time <= censor_time {
                    (event_time, true)
                } else {
                    (censor_time, false)
                }
            } else {
                (event_time, true)
            };
            records.push(SurvivalRecord { group, time, event });
        }
    }

    let provenance = format!(
        "simulated(seed={}, n_crt={}, n_hfrt={}, true_log_hr={}, shape={}, scale={}, censor_rate={})",
        config.seed,
        config.n_crt,
        config.n_hfrt,
        config.true_log_hr,
        config.baseline_shape,
        config.baseline_scale,
        config.censor_rate
    );
    Dataset::new(records, provenance)
}

/// Unit-mean exponential draw; strictly positive except for the u = 0
/// corner the callers retry away.
fn exp_draw<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p()
}

/// Expected censored fraction when censoring is Exp(rate), pooled over
/// both arms with the configured sizes.
fn censored_fraction(config: &SimulationConfig, rate: f64) -> f64 {
    let n_total = (config.n_crt + config.n_hfrt) as f64;
    let mut pooled = 0.0;
    for (weight, z) in [(config.n_crt as f64, 0.0), (config.n_hfrt as f64, 1.0)] {
        let hr = (config.true_log_hr * z).exp();
        // P(C < T) = E_u[ S_T(C(u)) ] with C(u) the censoring quantile;
        // midpoint rule over u.
        const NODES: usize = 2048;
        let mut acc = 0.0;
        for i in 0..NODES {
            let u = (i as f64 + 0.5) / NODES as f64;
            let c = -(-u).ln_1p() / rate;
            acc += (-hr * (c / config.baseline_scale).powf(config.baseline_shape)).exp();
        }
        pooled += weight / n_total * (acc / NODES as f64);
    }
    pooled
}

/// Bisects for the exponential censoring rate whose expected censored
/// fraction equals `config.censor_rate`. The fraction is increasing in
/// the rate, 0 at rate 0 and approaching 1 as the rate grows.
fn calibrate_censor_hazard(config: &SimulationConfig) -> f64 {
    let target = config.censor_rate;
    let mut hi = 1.0 / config.baseline_scale;
    let mut doublings = 0;
    while censored_fraction(config, hi) < target && doublings < 200 {
        hi *= 2.0;
        doublings += 1;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if censored_fraction(config, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
