//! Replications, parameter sweeps and CSV output.
//!
//! A campaign file is flat TOML: `campaign.*` keys control the campaign
//! itself, `sweep.<key> = [values]` adds an axis over any scenario key, and
//! every other key overrides the base scenario. Axes are combined as a
//! cartesian product in key order, the first key varying slowest.
//!
//! ```toml
//! campaign.replications = 20
//! campaign.seed = 7
//! sweep.platoon.length = [3, 4, 5, 6, 7, 8, 9, 10]
//! ift.kind = "multi_hop"
//! ```

use std::io::Write;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use toml::Value;

use crate::config::{flatten_toml, ScenarioConfig, KEYS};
use crate::engine::run_simulation;
use crate::error::{ConfigErrors, Error, Result};
use crate::metrics::{combine_reports, LinkSummary, MetricsReport, ReplicatedReport, Summary};
use crate::rng::{derive_seed, TAG_CAMPAIGN};

pub const DEFAULT_MAX_RUNS: usize = 100_000;

/// Columns always present to identify a scenario.
pub const IDENTITY_KEYS: [&str; 5] = [
    "ift.kind",
    "scheduler.kind",
    "platoon.count",
    "platoon.length",
    "channel.cqi",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub base: ScenarioConfig,
    /// Cartesian axes; the first varies slowest.
    pub axes: Vec<(String, Vec<Value>)>,
    pub replications: u32,
    pub seed: u64,
    pub max_runs: usize,
    pub per_link: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub overrides: Vec<(String, Value)>,
    pub config: ScenarioConfig,
}

impl CampaignSpec {
    pub fn new(base: ScenarioConfig) -> Self {
        Self {
            replications: base.run.replications,
            seed: base.run.seed,
            base,
            axes: Vec::new(),
            max_runs: DEFAULT_MAX_RUNS,
            per_link: false,
        }
    }

    pub fn axis<V: Into<Value>>(mut self, key: &str, values: impl IntoIterator<Item = V>) -> Self {
        self.axes.push((
            key.to_string(),
            values.into_iter().map(Into::into).collect(),
        ));
        self
    }

    pub fn replications(mut self, n: u32) -> Self {
        self.replications = n;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn per_link(mut self, on: bool) -> Self {
        self.per_link = on;
        self
    }

    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut base_pairs = Vec::new();
        let mut axes = Vec::new();
        let mut issues = Vec::new();
        let mut replications = None;
        let mut seed = None;
        let mut max_runs = DEFAULT_MAX_RUNS;
        let mut per_link = false;
        for (key, value) in flatten_toml(text)? {
            if let Some(axis) = key.strip_prefix("sweep.") {
                match value {
                    Value::Array(vs) if !vs.is_empty() && KEYS.contains(&axis) => {
                        axes.push((axis.to_string(), vs))
                    }
                    Value::Array(_) if !KEYS.contains(&axis) => {
                        issues.push(crate::error::ConfigIssue::new(&key, "unknown sweep key"))
                    }
                    _ => issues.push(crate::error::ConfigIssue::new(
                        &key,
                        "expected a non-empty array of values",
                    )),
                }
                continue;
            }
            let as_u64 = |v: &Value| match v {
                Value::Integer(i) if *i >= 0 => Some(*i as u64),
                _ => None,
            };
            let bad =
                |k: &str| crate::error::ConfigIssue::new(k, "expected a non-negative integer");
            match key.as_str() {
                "campaign.replications" => match as_u64(&value) {
                    Some(n) if n >= 1 => replications = Some(n as u32),
                    _ => issues.push(bad(&key)),
                },
                "campaign.seed" => match as_u64(&value) {
                    Some(n) => seed = Some(n),
                    None => issues.push(bad(&key)),
                },
                "campaign.max_runs" => match as_u64(&value) {
                    Some(n) => max_runs = n as usize,
                    None => issues.push(bad(&key)),
                },
                "campaign.per_link" => match value {
                    Value::Boolean(b) => per_link = b,
                    _ => issues.push(crate::error::ConfigIssue::new(
                        &key,
                        "expected true or false",
                    )),
                },
                _ => base_pairs.push((key, value)),
            }
        }
        let base = match ScenarioConfig::from_pairs(&base_pairs, base_dir) {
            Ok(b) => Some(b),
            Err(e) => {
                issues.extend(e.0);
                None
            }
        };
        if !issues.is_empty() {
            return Err(ConfigErrors(issues).into());
        }
        let base = base.expect("no issues");
        let spec = Self {
            replications: replications.unwrap_or(base.run.replications),
            seed: seed.unwrap_or(base.run.seed),
            base,
            axes,
            max_runs,
            per_link,
        };
        spec.points()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    pub fn run_count(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product::<usize>() * self.replications as usize
    }

    /// Every sweep point in row order, each validated.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let runs = self.run_count();
        if runs > self.max_runs {
            return Err(Error::CampaignTooLarge {
                runs,
                cap: self.max_runs,
            });
        }
        let mut combos: Vec<Vec<(String, Value)>> = vec![Vec::new()];
        for (key, values) in &self.axes {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push((key.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        let mut issues = Vec::new();
        let mut points = Vec::with_capacity(combos.len());
        for (index, overrides) in combos.into_iter().enumerate() {
            match self.base.with_overrides(&overrides) {
                Ok(config) => points.push(SweepPoint {
                    index,
                    overrides,
                    config,
                }),
                Err(e) => issues.extend(e.0),
            }
        }
        if issues.is_empty() {
            Ok(points)
        } else {
            Err(ConfigErrors(issues).into())
        }
    }

    fn key_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = IDENTITY_KEYS.iter().map(|s| s.to_string()).collect();
        for (k, _) in &self.axes {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
        cols
    }
}

/// Seed of replication `rep` at sweep point `point`.
pub fn replication_seed(base: u64, point: usize, rep: u32) -> u64 {
    derive_seed(base, &[TAG_CAMPAIGN, point as u64, u64::from(rep)])
}

/// Runs `cfg` once per seed.
pub fn run_replications(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    exec: Execution,
) -> Vec<Result<MetricsReport>> {
    match exec {
        Execution::Serial => seeds.iter().map(|&s| run_simulation(cfg, s)).collect(),
        Execution::Parallel => seeds.par_iter().map(|&s| run_simulation(cfg, s)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRow {
    pub point: usize,
    /// Values of the key columns.
    pub keys: Vec<String>,
    /// Aggregated result, or the first failure among the replications.
    pub outcome: std::result::Result<ReplicatedReport, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub key_columns: Vec<String>,
    pub rows: Vec<CampaignRow>,
    pub per_link: bool,
}

impl ResultsTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

fn key_text(cfg: &ScenarioConfig, key: &str) -> String {
    let v = cfg.value_text(key).unwrap_or_default();
    v.trim_matches('"').to_string()
}

/// Runs every sweep point and replication. Results do not depend on the
/// execution mode; rows come out in sweep order.
pub fn run_campaign(spec: &CampaignSpec, exec: Execution) -> Result<ResultsTable> {
    let points = spec.points()?;
    let reps = spec.replications;
    let jobs: Vec<(usize, u32)> = (0..points.len())
        .flat_map(|p| (0..reps).map(move |r| (p, r)))
        .collect();
    info!("campaign: {} points x {} replications", points.len(), reps);
    let run = |&(p, r): &(usize, u32)| {
        run_simulation(&points[p].config, replication_seed(spec.seed, p, r))
    };
    let results: Vec<Result<MetricsReport>> = match exec {
        Execution::Serial => jobs.iter().map(run).collect(),
        Execution::Parallel => jobs.par_iter().map(run).collect(),
    };
    let key_columns = spec.key_columns();
    let mut rows = Vec::with_capacity(points.len());
    let mut results = results.into_iter();
    for point in &points {
        let batch: Vec<Result<MetricsReport>> = results.by_ref().take(reps as usize).collect();
        let outcome = match batch.into_iter().collect::<Result<Vec<_>>>() {
            Ok(reports) => combine_reports(&reports).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        };
        if let Err(e) = &outcome {
            warn!("sweep point {} failed: {e}", point.index);
        }
        rows.push(CampaignRow {
            point: point.index,
            keys: key_columns
                .iter()
                .map(|k| key_text(&point.config, k))
                .collect(),
            outcome,
        });
    }
    Ok(ResultsTable {
        key_columns,
        rows,
        per_link: spec.per_link,
    })
}

/// Six significant digits, shortest form that reads back to the same value.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("valid float text");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), format_sig)
}

const METRIC_COLUMNS: [&str; 8] = [
    "delay_ms_mean",
    "delay_ms_ci95",
    "aoi_ms_mean",
    "aoi_ms_ci95",
    "throughput_kbps_mean",
    "throughput_kbps_ci95",
    "reception_prob_mean",
    "reception_prob_ci95",
];

fn metric_cells(l: &LinkSummary, rbs: &Summary) -> Vec<String> {
    vec![
        cell(l.delay_ms.mean),
        cell(l.delay_ms.ci95),
        cell(l.aoi_ms.mean),
        cell(l.aoi_ms.ci95),
        cell(l.throughput_kbps.mean),
        cell(l.throughput_kbps.ci95),
        cell(l.reception_prob.mean),
        cell(l.reception_prob.ci95),
        cell(l.aoi_sampled_ms.mean),
        cell(rbs.mean),
    ]
}

/// Writes the table as CSV. In per-link mode each scenario contributes one
/// row per leader-to-member link, tagged with its index distance.
pub fn write_csv<W: Write>(table: &ResultsTable, out: W) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = table.key_columns.clone();
    if table.per_link {
        header.push("link".into());
    }
    header.push("replications".into());
    header.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
    header.push("aoi_sampled_ms_mean".into());
    header.push("rbs_per_tti_mean".into());
    header.push("error".into());
    w.write_record(&header)?;
    let blanks = METRIC_COLUMNS.len() + 2;
    for row in &table.rows {
        match &row.outcome {
            Ok(rep) => {
                let links: Vec<(Option<usize>, &LinkSummary)> = if table.per_link {
                    rep.per_link
                        .iter()
                        .enumerate()
                        .map(|(i, l)| (Some(i + 1), l))
                        .collect()
                } else {
                    vec![(None, &rep.headline)]
                };
                for (idx, l) in links {
                    let mut rec = row.keys.clone();
                    if let Some(i) = idx {
                        rec.push(i.to_string());
                    }
                    rec.push(rep.replications.to_string());
                    rec.extend(metric_cells(l, &rep.rbs_per_tti));
                    rec.push(String::new());
                    w.write_record(&rec)?;
                }
            }
            Err(e) => {
                let mut rec = row.keys.clone();
                if table.per_link {
                    rec.push("NA".into());
                }
                rec.push("0".into());
                rec.extend(std::iter::repeat_n("NA".to_string(), blanks));
                rec.push(e.clone());
                w.write_record(&rec)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn csv_string(table: &ResultsTable) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

pub fn emit_csv(table: &ResultsTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file))
}

/// The standard comparison tables: every IFT and scheduler at the default
/// size, then platoon length, platoon count and CQI sweeps.
pub fn trend_tables(
    base: &ScenarioConfig,
    replications: u32,
    seed: u64,
) -> Vec<(&'static str, CampaignSpec)> {
    let spec = |b: &ScenarioConfig| {
        CampaignSpec::new(b.clone())
            .replications(replications)
            .seed(seed)
    };
    let iftv = || ["car_to_server", "multi_hop", "one_hop"];
    vec![
        (
            "ift_scheduler",
            spec(base)
                .axis("ift.kind", iftv())
                .axis("scheduler.kind", ["max_ci", "pf", "drr"]),
        ),
        (
            "platoon_length",
            spec(base)
                .axis("ift.kind", iftv())
                .axis("platoon.length", 3..=10i64),
        ),
        (
            "platoon_count",
            spec(base)
                .axis("ift.kind", iftv())
                .axis("platoon.count", 1..=3i64),
        ),
        (
            "cqi_length",
            spec(base)
                .axis("channel.cqi", [3i64, 5, 7, 9, 11])
                .axis("platoon.length", 3..=10i64),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(4.333333333), "4.33333");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1234567.0), "1234570");
        assert_eq!(format_sig(0.000123456789), "0.000123457");
        assert_eq!(format_sig(f64::NAN), "NA");
        for x in [1.0 / 3.0, 17.0312, 1e-9, 6.02e23] {
            let s = format_sig(x);
            assert_eq!(format_sig(s.parse().unwrap()), s);
        }
    }

    #[test]
    fn campaign_file_parsing() {
        let spec = CampaignSpec::parse(
            "campaign.replications = 3\ncampaign.seed = 9\nsweep.platoon.length = [3, 4]\nsweep.ift.kind = [\"one_hop\", \"multi_hop\"]\nchannel.cqi = 5\n",
            None,
        )
        .unwrap();
        assert_eq!(spec.replications, 3);
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.base.channel.cqi, 5);
        let pts = spec.points().unwrap();
        assert_eq!(pts.len(), 4);
        // Axes vary in key order, the first slowest.
        assert_eq!(pts[0].config.ift.kind, crate::IftKind::OneHop);
        assert_eq!(pts[1].config.platoon.length, 4);
        assert_eq!(pts[2].config.ift.kind, crate::IftKind::MultiHop);
        assert_eq!(spec.run_count(), 12);
    }

    #[test]
    fn campaign_errors() {
        assert!(CampaignSpec::parse("sweep.bogus.key = [1]", None).is_err());
        assert!(CampaignSpec::parse("sweep.platoon.length = []", None).is_err());
        assert!(CampaignSpec::parse("sweep.platoon.count = [1, 4]", None).is_err());
        let big = "campaign.max_runs = 10\ncampaign.replications = 20\n";
        assert!(matches!(
            CampaignSpec::parse(big, None),
            Err(Error::CampaignTooLarge { runs: 20, cap: 10 })
        ));
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for p in 0..10 {
            for r in 0..20 {
                assert!(seen.insert(replication_seed(1, p, r)));
            }
        }
    }
}
