//! Discrete-event core. One run is single-threaded and fully determined by
//! its configuration and seed.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use log::debug;
use rand_distr::{Distribution, Normal};

use crate::channel::{self, decode_cam, JakesFading, LinkState, McsEntry};
use crate::config::{CsiMode, IftKind, MobilityMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::ids::{FlowId, NodeId, VehicleId};
use crate::metrics::{MetricsCollector, MetricsReport};
use crate::mobility::{self, link_distance, plf_control_input, step_kinematics};
use crate::rng::{self, TAG_DECODE, TAG_FADING, TAG_SHADOWING};
use crate::routing::{
    plan_legs, CamMessage, DeliveryRecord, GrantTimeline, Kinematics, Outcome, TransmissionLeg,
};
use crate::scheduler::{FlowRequest, PacketDemand, Scheduler};
use crate::time::{self, Nanos};
use crate::world::{build_world, World};

/// Lateral distance between adjacent lanes.
pub const LANE_WIDTH_M: f64 = 3.5;

/// How long after the end of generation in-flight messages may still
/// complete. Anything left afterwards counts as lost.
pub const DRAIN_NS: Nanos = time::NS_PER_S;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    CamGeneration { vehicle: usize },
    SlotBoundary { slot: u64 },
    ControlUpdate,
    LegCompletion { transmission: u64 },
}

/// Events are dispatched in `(at, seq)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SimEvent {
    pub at: Nanos,
    pub seq: u64,
    pub kind: EventKind,
}

type FlowKey = (NodeId, Option<NodeId>);

#[derive(Debug, Clone)]
struct Pending {
    cam: usize,
    leg: usize,
    available_ns: Nanos,
    ready_ns: Nanos,
    order: u64,
}

#[derive(Debug)]
struct Flow {
    /// Receivers whose worst SINR sets the flow's rate.
    receivers: Vec<NodeId>,
    tx: NodeId,
    /// Sorted by `(ready_ns, order)`.
    queue: Vec<Pending>,
}

#[derive(Debug)]
struct ActiveCam {
    cam: CamMessage,
    legs: Vec<TransmissionLeg>,
    outstanding: usize,
}

#[derive(Debug)]
struct InAir {
    cam: usize,
    leg: usize,
    outcomes: Vec<(NodeId, bool)>,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    /// Every outcome in dispatch order; empty unless tracing was requested.
    pub trace: Vec<DeliveryRecord>,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    seed: u64,
    world: World,
    mcs: McsEntry,
    slot_ns: Nanos,
    cam_rbs: u32,
    end_gen_ns: Nanos,
    events: BinaryHeap<Reverse<SimEvent>>,
    event_seq: u64,
    dispatched: u64,
    scheduled_slots: BTreeSet<u64>,
    last_slot: Option<u64>,
    flows: Vec<Flow>,
    flow_index: HashMap<FlowKey, usize>,
    scheduler: Scheduler,
    links: HashMap<(NodeId, NodeId), LinkState>,
    cams: Vec<Option<ActiveCam>>,
    next_seq: Vec<u64>,
    in_air: HashMap<u64, InAir>,
    next_transmission: u64,
    pending_order: u64,
    last_control_ns: Nanos,
    metrics: MetricsCollector,
    trace: Option<Vec<DeliveryRecord>>,
    active_ttis: u64,
    granted_rbs: u64,
    stale_updates: u64,
    cams_generated: u64,
}

/// Runs one replication and returns its report.
pub fn run_simulation(cfg: &ScenarioConfig, seed: u64) -> Result<MetricsReport> {
    Ok(Simulation::new(cfg, seed)?.run()?.report)
}

/// Emitted configuration without the seed line.
pub fn scenario_key(cfg: &ScenarioConfig) -> String {
    cfg.emit()
        .lines()
        .filter(|l| !l.starts_with("sim.seed"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn flow_keys(world: &World, ift: IftKind) -> Vec<FlowKey> {
    let mut keys = Vec::new();
    for p in &world.platoons {
        for (i, v) in p.vehicles.iter().enumerate() {
            let me = NodeId::Vehicle(*v);
            match ift {
                IftKind::OneHop => keys.push((me, None)),
                IftKind::CarToServer => {
                    keys.push((me, Some(NodeId::Gnb)));
                    keys.push((NodeId::Gnb, Some(me)));
                }
                IftKind::MultiHop => {
                    if i > 0 {
                        keys.push((me, Some(NodeId::Vehicle(p.vehicles[i - 1]))));
                    }
                    if i + 1 < p.vehicles.len() {
                        keys.push((me, Some(NodeId::Vehicle(p.vehicles[i + 1]))));
                    }
                }
            }
        }
    }
    keys.sort();
    keys
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let world = build_world(cfg);
        let mcs = cfg
            .channel
            .mcs
            .get(cfg.channel.cqi)
            .expect("validated CQI")
            .clone();
        let keys = flow_keys(&world, cfg.ift.kind);
        let mut flows = Vec::with_capacity(keys.len());
        let mut flow_index = HashMap::with_capacity(keys.len());
        for (k, key) in keys.iter().enumerate() {
            let (tx, rx) = *key;
            let receivers = match rx {
                Some(r) => vec![r],
                None => {
                    let v = tx.vehicle().expect("broadcast from a vehicle");
                    world
                        .platoon(v.platoon)
                        .vehicles
                        .iter()
                        .filter(|m| **m != v)
                        .map(|m| NodeId::Vehicle(*m))
                        .collect()
                }
            };
            flows.push(Flow {
                receivers,
                tx,
                queue: Vec::new(),
            });
            flow_index.insert(*key, k);
        }
        let scheduler = Scheduler::new(
            cfg.scheduler.kind,
            cfg.scheduler.pf.clone(),
            cfg.radio.num_rbs as usize,
            cfg.scheduler.max_grants_per_tti as usize,
            vec![cfg.drr_quantum_bits(); flows.len()],
        );
        let warmup = time::from_secs(cfg.run.warmup_s);
        let end = time::from_secs(cfg.run.duration_s);
        let n_vehicles = world.vehicles.len();
        let mut sim = Self {
            cfg: cfg.clone(),
            seed,
            mcs,
            slot_ns: cfg.slot_ns(),
            cam_rbs: cfg.cam_rbs(),
            end_gen_ns: end,
            events: BinaryHeap::new(),
            event_seq: 0,
            dispatched: 0,
            scheduled_slots: BTreeSet::new(),
            last_slot: None,
            flows,
            flow_index,
            scheduler,
            links: HashMap::new(),
            cams: Vec::new(),
            next_seq: vec![0; n_vehicles],
            in_air: HashMap::new(),
            next_transmission: 0,
            pending_order: 0,
            last_control_ns: 0,
            metrics: MetricsCollector::new(warmup, end, cfg.cam.air_bytes()),
            trace: None,
            active_ttis: 0,
            granted_rbs: 0,
            stale_updates: 0,
            cams_generated: 0,
            world,
        };
        for v in 0..n_vehicles {
            sim.push(0, EventKind::CamGeneration { vehicle: v })?;
        }
        sim.push(0, EventKind::ControlUpdate)?;
        Ok(sim)
    }

    /// Keeps every delivery record for inspection.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    fn push(&mut self, at: Nanos, kind: EventKind) -> Result<()> {
        if self.events.len() >= self.cfg.run.max_events {
            return Err(Error::EventOverflow {
                cap: self.cfg.run.max_events,
                at_ns: at,
            });
        }
        self.events.push(Reverse(SimEvent {
            at,
            seq: self.event_seq,
            kind,
        }));
        self.event_seq += 1;
        Ok(())
    }

    pub fn run(mut self) -> Result<RunOutput> {
        let deadline = self.end_gen_ns + DRAIN_NS;
        let mut clock = 0;
        while let Some(Reverse(ev)) = self.events.pop() {
            if ev.at > deadline {
                break;
            }
            debug_assert!(ev.at >= clock, "event in the past");
            clock = ev.at;
            self.dispatched += 1;
            match ev.kind {
                EventKind::CamGeneration { vehicle } => self.on_generation(ev.at, vehicle)?,
                EventKind::SlotBoundary { slot } => self.on_slot(slot)?,
                EventKind::ControlUpdate => self.on_control(ev.at)?,
                EventKind::LegCompletion { transmission } => {
                    self.on_completion(ev.at, transmission)?
                }
            }
        }
        self.flush()?;
        let report = MetricsReport {
            scenario: scenario_key(&self.cfg),
            seed: self.seed,
            window_s: self.cfg.run.duration_s - self.cfg.run.warmup_s,
            air_bytes: self.cfg.cam.air_bytes(),
            links: self.metrics.summarize(),
            mean_rbs_per_active_tti: (self.active_ttis > 0)
                .then(|| self.granted_rbs as f64 / self.active_ttis as f64),
            stale_updates: self.stale_updates,
            cams_generated: self.cams_generated,
            events: self.dispatched,
        };
        debug!(
            "run seed={} done: {} events, {} CAMs",
            self.seed, self.dispatched, self.cams_generated
        );
        Ok(RunOutput {
            report,
            trace: self.trace.unwrap_or_default(),
        })
    }

    fn in_window(&self, t: Nanos) -> bool {
        t >= time::from_secs(self.cfg.run.warmup_s) && t < self.end_gen_ns
    }

    fn kinematics_at(&self, vehicle: usize, t: Nanos) -> Kinematics {
        let s = &self.world.vehicles[vehicle];
        let dt = time::to_secs(t.saturating_sub(self.last_control_ns));
        Kinematics {
            position_m: s.position_m + s.speed_mps * dt + 0.5 * s.accel_mps2 * dt * dt,
            speed_mps: (s.speed_mps + s.accel_mps2 * dt).max(0.0),
            accel_mps2: s.accel_mps2,
        }
    }

    fn on_generation(&mut self, now: Nanos, vehicle: usize) -> Result<()> {
        if now >= self.end_gen_ns {
            return Ok(());
        }
        let state = &self.world.vehicles[vehicle];
        let cam = CamMessage {
            seq: self.next_seq[vehicle],
            generated_ns: now,
            source: state.id,
            platoon: state.platoon(),
            lane: state.lane,
            app_bytes: self.cfg.cam.app_bytes,
            air_bytes: self.cfg.cam.air_bytes(),
            kinematics: self.kinematics_at(vehicle, now),
        };
        self.next_seq[vehicle] += 1;
        if self.in_window(now) {
            self.cams_generated += 1;
        }
        let legs = plan_legs(&cam, &self.cfg.ift, &self.world);
        let roots: Vec<usize> = (0..legs.len())
            .filter(|&i| legs[i].depends_on.is_none())
            .collect();
        let id = self.cams.len();
        self.cams.push(Some(ActiveCam {
            cam,
            outstanding: legs.len(),
            legs,
        }));
        for leg in roots {
            self.enqueue(id, leg, now)?;
        }
        let next = now + self.cfg.cam_period_ns();
        if next < self.end_gen_ns {
            self.push(next, EventKind::CamGeneration { vehicle })?;
        }
        Ok(())
    }

    fn flow_of(&self, leg: &TransmissionLeg) -> usize {
        let key = if leg.broadcast {
            (leg.tx, None)
        } else {
            (leg.tx, Some(leg.rx[0]))
        };
        self.flow_index[&key]
    }

    fn enqueue(&mut self, cam: usize, leg: usize, available_ns: Nanos) -> Result<()> {
        let active = self.cams[cam].as_ref().expect("live CAM");
        let l = &active.legs[leg];
        let ready_ns = l.ready_at(available_ns);
        let flow = self.flow_of(l);
        let p = Pending {
            cam,
            leg,
            available_ns,
            ready_ns,
            order: self.pending_order,
        };
        self.pending_order += 1;
        let q = &mut self.flows[flow].queue;
        let pos = q.partition_point(|x| (x.ready_ns, x.order) <= (ready_ns, p.order));
        q.insert(pos, p);
        let slot = ready_ns.div_ceil(self.slot_ns);
        self.ensure_slot(slot)
    }

    fn ensure_slot(&mut self, slot: u64) -> Result<()> {
        let slot = match self.last_slot {
            Some(last) => slot.max(last + 1),
            None => slot,
        };
        if self.scheduled_slots.insert(slot) {
            self.push(slot * self.slot_ns, EventKind::SlotBoundary { slot })?;
        }
        Ok(())
    }

    fn distance(&self, a: NodeId, b: NodeId, t: Nanos) -> f64 {
        let d = match (a, b) {
            (NodeId::Vehicle(x), NodeId::Vehicle(y)) => {
                if self.cfg.mobility.mode == MobilityMode::ConstantSpeed && x.platoon == y.platoon {
                    link_distance(x, y, self.world.spacing_m).unwrap_or(0.0)
                } else {
                    let px = self
                        .kinematics_at(self.world.vehicle_index(x), t)
                        .position_m;
                    let py = self
                        .kinematics_at(self.world.vehicle_index(y), t)
                        .position_m;
                    let dy = (f64::from(x.platoon) - f64::from(y.platoon)) * LANE_WIDTH_M;
                    (px - py).hypot(dy)
                }
            }
            (NodeId::Vehicle(v), NodeId::Gnb) | (NodeId::Gnb, NodeId::Vehicle(v)) => {
                let x = self
                    .kinematics_at(self.world.vehicle_index(v), t)
                    .position_m;
                let lane_y = f64::from(self.world.vehicle(v).lane) * LANE_WIDTH_M;
                (x - self.cfg.gnb.x_m).hypot(self.cfg.gnb.y_m - lane_y)
            }
            (NodeId::Gnb, NodeId::Gnb) => 0.0,
        };
        d.max(1.0)
    }

    fn link_sinr(&mut self, tx: NodeId, rx: NodeId, t: Nanos) -> Result<f64> {
        let d = self.distance(tx, rx, t);
        if !self.links.contains_key(&(tx, rx)) {
            let (lo, hi) = if tx.key() <= rx.key() {
                (tx.key(), rx.key())
            } else {
                (rx.key(), tx.key())
            };
            let sigma = self.cfg.radio.shadow_sigma_db;
            let shadow = if sigma > 0.0 {
                let mut r = rng::stream(self.seed, &[TAG_SHADOWING, lo, hi]);
                Normal::new(0.0, sigma)
                    .expect("finite sigma")
                    .sample(&mut r)
            } else {
                0.0
            };
            let mut link = LinkState::new(tx, rx, d, shadow);
            if self.cfg.channel.fading {
                let mut r = rng::stream(self.seed, &[TAG_FADING, tx.key(), rx.key()]);
                let fd =
                    channel::doppler_hz(self.cfg.platoon.speed_mps(), self.cfg.radio.carrier_ghz);
                link = link.with_fading(JakesFading::new(
                    fd,
                    self.cfg.channel.fading_oscillators,
                    &mut r,
                ));
            }
            self.links.insert((tx, rx), link);
        }
        let link = self.links.get_mut(&(tx, rx)).expect("link just ensured");
        link.distance_m = d;
        channel::update_link_sinr(link, &self.cfg.radio, time::to_secs(t))
    }

    fn on_slot(&mut self, slot: u64) -> Result<()> {
        self.scheduled_slots.remove(&slot);
        self.last_slot = Some(slot);
        let now = slot * self.slot_ns;
        let demand = PacketDemand {
            bits: self.cfg.cam.air_bits(),
            rbs: self.cam_rbs,
        };
        let mut requests = Vec::with_capacity(self.flows.len());
        let mut sinrs: HashMap<(NodeId, NodeId), f64> = HashMap::new();
        for k in 0..self.flows.len() {
            let ready = self.flows[k].queue.partition_point(|p| p.ready_ns <= now);
            let mut rates = Vec::new();
            if ready > 0 {
                let tx = self.flows[k].tx;
                let mut worst = f64::INFINITY;
                for r in self.flows[k].receivers.clone() {
                    let s = self.link_sinr(tx, r, now)?;
                    sinrs.insert((tx, r), s);
                    let seen = match self.cfg.scheduler.csi {
                        CsiMode::Instantaneous => s,
                        CsiMode::Wideband => {
                            s - 10.0 * self.links[&(tx, r)].fading_gain(time::to_secs(now)).log10()
                        }
                    };
                    worst = worst.min(seen);
                }
                rates.push(crate::scheduler::rate_per_rb(worst));
            }
            requests.push(FlowRequest::new(
                FlowId(k as u32),
                vec![demand; ready],
                rates,
            ));
        }
        let map = self.scheduler.allocate(slot, &mut requests)?;
        if !map.is_empty() && self.in_window(now) {
            self.active_ttis += 1;
            self.granted_rbs += map.granted_rbs() as u64;
        }
        for g in &map.grants {
            let k = g.flow.0 as usize;
            let p = self.flows[k].queue.remove(0);
            debug_assert!(p.ready_ns <= now);
            let active = self.cams[p.cam].as_ref().expect("live CAM");
            let leg = &active.legs[p.leg];
            let timeline = GrantTimeline {
                available_ns: p.available_ns,
                grant_slot_ns: now,
                slot_ns: self.slot_ns,
                slots_used: 1,
            };
            debug_assert!(timeline.grant_slot_ns >= leg.ready_at(p.available_ns));
            let mut outcomes = Vec::with_capacity(leg.rx.len());
            for &r in &leg.rx {
                let sinr = sinrs[&(leg.tx, r)];
                let source = active.cam.source.key();
                let mut rng = rng::stream(
                    self.seed,
                    &[TAG_DECODE, leg.tx.key(), r.key(), source, active.cam.seq],
                );
                let ok = decode_cam(g.num_rbs as usize, demand.rbs, &[sinr], &self.mcs, &mut rng)?;
                outcomes.push((r, ok));
            }
            let id = self.next_transmission;
            self.next_transmission += 1;
            self.in_air.insert(
                id,
                InAir {
                    cam: p.cam,
                    leg: p.leg,
                    outcomes,
                },
            );
            self.push(
                timeline.completion_ns(),
                EventKind::LegCompletion { transmission: id },
            )?;
        }
        let earliest = self
            .flows
            .iter()
            .filter_map(|f| f.queue.first().map(|p| p.ready_ns))
            .min();
        if let Some(t) = earliest {
            self.ensure_slot(t.div_ceil(self.slot_ns))?;
        }
        Ok(())
    }

    fn emit(
        &mut self,
        cam: &CamMessage,
        receiver: VehicleId,
        outcome: Outcome,
        hops: u32,
    ) -> Result<()> {
        let rec = DeliveryRecord {
            source: cam.source,
            seq: cam.seq,
            generated_ns: cam.generated_ns,
            receiver,
            outcome,
            hops,
        };
        self.metrics.record(&rec)?;
        if let Some(t) = self.trace.as_mut() {
            t.push(rec);
        }
        if outcome != Outcome::Lost && self.cfg.mobility.mode == MobilityMode::Plf {
            let r = self.world.vehicle_index(receiver);
            let state = &mut self.world.vehicles[r];
            let slot = if cam.source.index == 0 {
                Some(&mut state.latest_leader_cam)
            } else if cam.source.index + 1 == receiver.index {
                Some(&mut state.latest_predecessor_cam)
            } else {
                None
            };
            if let Some(s) = slot {
                if s.as_ref().is_none_or(|c| c.seq < cam.seq) {
                    *s = Some(cam.clone());
                }
            }
            // The leader is also the first follower's predecessor.
            if cam.source.index == 0 && receiver.index == 1 {
                let s = &mut state.latest_predecessor_cam;
                if s.as_ref().is_none_or(|c| c.seq < cam.seq) {
                    *s = Some(cam.clone());
                }
            }
        }
        Ok(())
    }

    fn finish_leg(&mut self, cam: usize) {
        let done = {
            let a = self.cams[cam].as_mut().expect("live CAM");
            a.outstanding -= 1;
            a.outstanding == 0
        };
        if done {
            self.cams[cam] = None;
        }
    }

    /// Marks `leg` and everything downstream of it lost at `now`.
    fn lose(&mut self, cam: usize, leg: usize) -> Result<()> {
        let (msg, rx, hops, deps) = {
            let a = self.cams[cam].as_ref().expect("live CAM");
            let l = &a.legs[leg];
            let deps: Vec<usize> = (0..a.legs.len())
                .filter(|&j| a.legs[j].depends_on == Some(leg))
                .collect();
            (a.cam.clone(), l.rx.clone(), l.hops, deps)
        };
        for r in rx {
            if let NodeId::Vehicle(v) = r {
                self.emit(&msg, v, Outcome::Lost, hops)?;
            }
        }
        self.finish_leg(cam);
        for d in deps {
            self.lose(cam, d)?;
        }
        Ok(())
    }

    fn on_completion(&mut self, now: Nanos, transmission: u64) -> Result<()> {
        let air = self
            .in_air
            .remove(&transmission)
            .expect("known transmission");
        let (msg, hops, deps) = {
            let a = self.cams[air.cam].as_ref().expect("live CAM");
            let deps: Vec<(usize, NodeId)> = (0..a.legs.len())
                .filter(|&j| a.legs[j].depends_on == Some(air.leg))
                .map(|j| (j, a.legs[j].tx))
                .collect();
            (a.cam.clone(), a.legs[air.leg].hops, deps)
        };
        for &(r, ok) in &air.outcomes {
            if let NodeId::Vehicle(v) = r {
                let outcome = if ok {
                    Outcome::Delivered(now)
                } else {
                    Outcome::Lost
                };
                self.emit(&msg, v, outcome, hops)?;
            }
            for &(j, _) in deps.iter().filter(|(_, tx)| *tx == r) {
                if ok {
                    self.enqueue(air.cam, j, now)?;
                } else {
                    self.lose(air.cam, j)?;
                }
            }
        }
        self.finish_leg(air.cam);
        Ok(())
    }

    fn on_control(&mut self, now: Nanos) -> Result<()> {
        let dt = time::to_secs(now - self.last_control_ns);
        if dt > 0.0 {
            let max_accel = self.cfg.mobility.max_accel;
            for s in &mut self.world.vehicles {
                *s = step_kinematics(s, dt, max_accel);
            }
        }
        self.last_control_ns = now;
        if self.cfg.mobility.mode == MobilityMode::Plf {
            let period = time::from_secs(self.cfg.mobility.control_period_s);
            let counting = self.in_window(now);
            let max_accel = self.cfg.mobility.max_accel;
            let gains = &self.cfg.mobility.plf;
            for s in self.world.vehicles.iter_mut().filter(|s| s.id.index > 0) {
                let out = plf_control_input(
                    s,
                    s.latest_leader_cam.as_ref(),
                    s.latest_predecessor_cam.as_ref(),
                    gains,
                    now,
                    period,
                );
                if counting && matches!(out, mobility::ControlOutcome::Stale { .. }) {
                    self.stale_updates += 1;
                }
                s.accel_mps2 = out.accel().clamp(-max_accel, max_accel);
            }
        }
        let next = now + time::from_secs(self.cfg.mobility.control_period_s);
        if next < self.end_gen_ns {
            self.push(next, EventKind::ControlUpdate)?;
        }
        Ok(())
    }

    /// Everything still queued or in the air when the run stops is lost.
    fn flush(&mut self) -> Result<()> {
        let mut air: Vec<(u64, InAir)> = self.in_air.drain().collect();
        air.sort_by_key(|(id, _)| *id);
        for (_, a) in air {
            self.lose(a.cam, a.leg)?;
        }
        let mut queued: Vec<Pending> = self
            .flows
            .iter_mut()
            .flat_map(|f| std::mem::take(&mut f.queue))
            .collect();
        queued.sort_by_key(|p| p.order);
        for p in queued {
            self.lose(p.cam, p.leg)?;
        }
        Ok(())
    }
}
