//! QoS accounting per (source, receiver) pair: end-to-end delay, age of
//! information, throughput and reception probability, plus aggregation of
//! replications into means and confidence intervals.

use std::collections::{BTreeMap, HashSet};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ids::VehicleId;
use crate::routing::{DeliveryRecord, Outcome};
use crate::time::{self, Nanos};

/// Time-average of the age process `t - gen(newest update held)`, restricted
/// to a window. Deliveries must be fed in non-decreasing reception order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AoiIntegrator {
    window_start: Nanos,
    /// Twice the integrated area, in ns^2, kept exact.
    area2: u128,
    covered_from: Option<Nanos>,
    last_t: Nanos,
    newest_gen: Option<Nanos>,
}

impl AoiIntegrator {
    pub fn new(window_start: Nanos) -> Self {
        Self {
            window_start,
            ..Self::default()
        }
    }

    fn advance(&mut self, t: Nanos) {
        debug_assert!(t >= self.last_t, "deliveries out of order");
        if let Some(g) = self.newest_gen {
            let a = self.last_t.max(self.window_start);
            if t > a {
                let (a, b, g) = (a as u128, t as u128, g as u128);
                self.area2 += (b - a) * ((a - g) + (b - g));
                self.covered_from.get_or_insert(a as Nanos);
            }
        }
        self.last_t = self.last_t.max(t);
    }

    pub fn deliver(&mut self, generated_ns: Nanos, received_ns: Nanos) {
        self.advance(received_ns);
        self.newest_gen = Some(
            self.newest_gen
                .map_or(generated_ns, |g| g.max(generated_ns)),
        );
    }

    /// Mean age over the covered part of `[window_start, end]`, in ns.
    pub fn mean_ns(&self, end: Nanos) -> Option<f64> {
        let mut s = self.clone();
        s.advance(end.max(s.last_t));
        let from = s.covered_from?;
        let span = end.saturating_sub(from);
        (span > 0).then(|| s.area2 as f64 / 2.0 / span as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LinkAccumulator {
    hops: u32,
    transmitted: u64,
    delivered: u64,
    delay_sum_ns: u128,
    seen: HashSet<u64>,
    aoi: AoiIntegrator,
    last_recv_ns: Option<Nanos>,
    sampled_aoi_sum_ns: i128,
    sampled_aoi_count: u64,
}

/// Metrics for one (source, receiver) pair. `None` marks a quantity that is
/// undefined because nothing was transmitted or delivered.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics {
    pub source: VehicleId,
    pub receiver: VehicleId,
    /// Hops on the last delivery, or on the last attempt if none succeeded.
    pub hops: u32,
    pub transmitted: u64,
    pub delivered: u64,
    pub delay_ms: Option<f64>,
    pub aoi_ms: Option<f64>,
    /// Mean of `gen(k) - recv(k-1)` over consecutive deliveries.
    pub aoi_sampled_ms: Option<f64>,
    pub throughput_kbps: Option<f64>,
    pub reception_prob: Option<f64>,
}

impl LinkMetrics {
    /// Index distance between source and receiver within the platoon.
    pub fn distance_index(&self) -> u16 {
        self.source.index.abs_diff(self.receiver.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Emitted configuration minus the seed; equal for replications of one
    /// scenario.
    pub scenario: String,
    pub seed: u64,
    pub window_s: f64,
    pub air_bytes: u32,
    /// Every (source, receiver) pair, sorted.
    pub links: Vec<LinkMetrics>,
    pub mean_rbs_per_active_tti: Option<f64>,
    /// Controller updates that found no fresh reference CAM.
    pub stale_updates: u64,
    /// CAMs generated inside the measurement window.
    pub cams_generated: u64,
    pub events: u64,
}

impl MetricsReport {
    pub fn link(&self, source: VehicleId, receiver: VehicleId) -> Option<&LinkMetrics> {
        self.links
            .iter()
            .find(|l| l.source == source && l.receiver == receiver)
    }

    /// Leader to tail of platoon 0.
    pub fn headline(&self) -> &LinkMetrics {
        let tail = self
            .links
            .iter()
            .filter(|l| l.source == VehicleId::new(0, 0) && l.receiver.platoon == 0)
            .max_by_key(|l| l.receiver.index)
            .expect("platoon 0 has a tail");
        tail
    }

    /// Leader of platoon 0 to each member, nearest first.
    pub fn per_link(&self) -> Vec<&LinkMetrics> {
        let mut v: Vec<&LinkMetrics> = self
            .links
            .iter()
            .filter(|l| l.source == VehicleId::new(0, 0) && l.receiver.platoon == 0)
            .collect();
        v.sort_by_key(|l| l.receiver.index);
        v
    }
}

/// Accumulates delivery records of one run.
#[derive(Debug, Clone)]
pub struct MetricsCollector {
    window_start: Nanos,
    window_end: Nanos,
    air_bytes: u32,
    links: BTreeMap<(VehicleId, VehicleId), LinkAccumulator>,
}

impl MetricsCollector {
    /// Counts CAMs generated in `[window_start, window_end)`.
    pub fn new(window_start: Nanos, window_end: Nanos, air_bytes: u32) -> Self {
        Self {
            window_start,
            window_end,
            air_bytes,
            links: BTreeMap::new(),
        }
    }

    fn in_window(&self, gen: Nanos) -> bool {
        (self.window_start..self.window_end).contains(&gen)
    }

    /// Records one outcome. Outcomes must arrive in non-decreasing time
    /// order; a repeated `(seq, receiver)` is ignored.
    pub fn record(&mut self, rec: &DeliveryRecord) -> Result<()> {
        if let Outcome::Delivered(t) = rec.outcome {
            if t < rec.generated_ns {
                return Err(Error::Causality {
                    gen_ns: rec.generated_ns,
                    recv_ns: t,
                });
            }
        }
        let counted = self.in_window(rec.generated_ns);
        let start = self.window_start;
        let acc = self
            .links
            .entry((rec.source, rec.receiver))
            .or_insert_with(|| LinkAccumulator {
                hops: rec.hops,
                transmitted: 0,
                delivered: 0,
                delay_sum_ns: 0,
                seen: HashSet::new(),
                aoi: AoiIntegrator::new(start),
                last_recv_ns: None,
                sampled_aoi_sum_ns: 0,
                sampled_aoi_count: 0,
            });
        if !acc.seen.insert(rec.seq) {
            return Ok(());
        }
        if counted {
            acc.transmitted += 1;
        }
        if let Outcome::Delivered(t) = rec.outcome {
            acc.hops = rec.hops;
            acc.aoi.deliver(rec.generated_ns, t);
            if counted {
                acc.delivered += 1;
                acc.delay_sum_ns += u128::from(t - rec.generated_ns);
                if let Some(prev) = acc.last_recv_ns {
                    acc.sampled_aoi_sum_ns += i128::from(rec.generated_ns) - i128::from(prev);
                    acc.sampled_aoi_count += 1;
                }
            }
            acc.last_recv_ns = Some(t);
        } else if acc.delivered == 0 {
            acc.hops = rec.hops;
        }
        Ok(())
    }

    pub fn summarize(&self) -> Vec<LinkMetrics> {
        let window_s = time::to_secs(self.window_end - self.window_start);
        self.links
            .iter()
            .map(|(&(source, receiver), a)| {
                let delivered = a.delivered;
                let tx = a.transmitted;
                LinkMetrics {
                    source,
                    receiver,
                    hops: a.hops,
                    transmitted: tx,
                    delivered,
                    delay_ms: (delivered > 0)
                        .then(|| a.delay_sum_ns as f64 / delivered as f64 / time::NS_PER_MS as f64),
                    aoi_ms: (delivered > 0)
                        .then(|| a.aoi.mean_ns(self.window_end))
                        .flatten()
                        .map(|ns| ns / time::NS_PER_MS as f64),
                    aoi_sampled_ms: (a.sampled_aoi_count > 0).then(|| {
                        a.sampled_aoi_sum_ns as f64
                            / a.sampled_aoi_count as f64
                            / time::NS_PER_MS as f64
                    }),
                    throughput_kbps: (tx > 0).then(|| {
                        (delivered * u64::from(self.air_bytes)) as f64 / window_s / 1000.0
                    }),
                    reception_prob: (tx > 0).then(|| delivered as f64 / tx as f64),
                }
            })
            .collect()
    }
}

/// Sample statistics of one metric over replications. Undefined values are
/// skipped; `mean` is `None` when no replication defined the metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub ci95: Option<f64>,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Self {
        let xs: Vec<f64> = values.iter().flatten().copied().collect();
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: None,
                std: None,
                ci95: None,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self {
                n,
                mean: Some(mean),
                std: None,
                ci95: None,
            };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        Self {
            n,
            mean: Some(mean),
            std: Some(std),
            ci95: Some(t * std / (n as f64).sqrt()),
        }
    }
}

/// Cross-replication statistics for one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSummary {
    pub source: VehicleId,
    pub receiver: VehicleId,
    pub hops: u32,
    pub delay_ms: Summary,
    pub aoi_ms: Summary,
    pub aoi_sampled_ms: Summary,
    pub throughput_kbps: Summary,
    pub reception_prob: Summary,
}

impl LinkSummary {
    fn of(links: &[&LinkMetrics]) -> Self {
        let pick = |f: fn(&LinkMetrics) -> Option<f64>| -> Vec<Option<f64>> {
            links.iter().map(|l| f(l)).collect()
        };
        Self {
            source: links[0].source,
            receiver: links[0].receiver,
            hops: links[0].hops,
            delay_ms: Summary::of(&pick(|l| l.delay_ms)),
            aoi_ms: Summary::of(&pick(|l| l.aoi_ms)),
            aoi_sampled_ms: Summary::of(&pick(|l| l.aoi_sampled_ms)),
            throughput_kbps: Summary::of(&pick(|l| l.throughput_kbps)),
            reception_prob: Summary::of(&pick(|l| l.reception_prob)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatedReport {
    pub scenario: String,
    pub replications: usize,
    /// Platoon 0 leader to tail.
    pub headline: LinkSummary,
    /// Platoon 0 leader to each member, nearest first.
    pub per_link: Vec<LinkSummary>,
    pub rbs_per_tti: Summary,
}

/// Mean, sample standard deviation and Student-t 95% half-width across
/// replications of one scenario.
pub fn aggregate_replications(reports: &[MetricsReport]) -> Result<ReplicatedReport> {
    if reports.len() < 2 {
        return Err(Error::InsufficientReplications(reports.len()));
    }
    combine_reports(reports)
}

/// Like [`aggregate_replications`] but accepts a single report, whose
/// spread is then undefined.
pub fn combine_reports(reports: &[MetricsReport]) -> Result<ReplicatedReport> {
    if reports.is_empty() {
        return Err(Error::InsufficientReplications(0));
    }
    let scenario = &reports[0].scenario;
    if reports.iter().any(|r| &r.scenario != scenario) {
        return Err(Error::MismatchedScenarios);
    }
    let headline = LinkSummary::of(&reports.iter().map(|r| r.headline()).collect::<Vec<_>>());
    let n_links = reports[0].per_link().len();
    let per_link = (0..n_links)
        .map(|k| LinkSummary::of(&reports.iter().map(|r| r.per_link()[k]).collect::<Vec<_>>()))
        .collect();
    let rbs: Vec<Option<f64>> = reports.iter().map(|r| r.mean_rbs_per_active_tti).collect();
    Ok(ReplicatedReport {
        scenario: scenario.clone(),
        replications: reports.len(),
        headline,
        per_link,
        rbs_per_tti: Summary::of(&rbs),
    })
}
