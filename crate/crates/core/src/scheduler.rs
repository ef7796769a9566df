//! Per-TTI resource-block allocation.
//!
//! MaxC/I and PF walk the grid RB by RB, each time picking the best eligible
//! flow and granting it the consecutive RBs its head-of-line message needs.
//! A flow is served at most once per TTI. DRR instead visits flows in fixed
//! cyclic order with a carried deficit and may serve several messages per
//! visit. Messages are never split: when the remaining grid cannot hold a
//! message it waits for a later TTI.

use crate::config::{PfParams, SchedulerKind};
use crate::error::{Error, Result};
use crate::ids::FlowId;

/// Initial PF average, so the first ratio is finite.
pub const PF_EPSILON: f64 = 1e-6;

/// `log2(1 + SINR)` with SINR given in dB.
pub fn rate_per_rb(sinr_db: f64) -> f64 {
    (1.0 + 10f64.powf(sinr_db / 10.0)).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketDemand {
    pub bits: u64,
    pub rbs: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRequest {
    pub flow: FlowId,
    /// Messages ready for transmission, oldest first.
    pub queue: Vec<PacketDemand>,
    /// Achievable rate `R_{k,n}` per RB. A single entry applies to every RB.
    pub rates: Vec<f64>,
    /// PF moving average `T_k`.
    pub avg_throughput: f64,
    /// DRR deficit `D_k`.
    pub deficit_bits: u64,
    /// DRR quantum `Q^N_k`.
    pub quantum_bits: u64,
}

impl FlowRequest {
    pub fn new(flow: FlowId, queue: Vec<PacketDemand>, rates: Vec<f64>) -> Self {
        Self {
            flow,
            queue,
            rates,
            avg_throughput: PF_EPSILON,
            deficit_bits: 0,
            quantum_bits: 0,
        }
    }

    pub fn rate(&self, rb: usize) -> f64 {
        match self.rates.as_slice() {
            [] => 0.0,
            [single] => *single,
            many => many[rb.min(many.len() - 1)],
        }
    }

    pub fn pending_bits(&self) -> u64 {
        self.queue.iter().map(|p| p.bits).sum()
    }

    fn head(&self) -> Option<PacketDemand> {
        self.queue.first().copied()
    }
}

/// One message placed on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grant {
    pub flow: FlowId,
    pub first_rb: usize,
    pub num_rbs: u32,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationMap {
    pub tti: u64,
    pub rb_owner: Vec<Option<FlowId>>,
    /// In placement order; a flow's grants follow its queue order.
    pub grants: Vec<Grant>,
}

impl AllocationMap {
    pub fn empty(tti: u64, grid: usize) -> Self {
        Self {
            tti,
            rb_owner: vec![None; grid],
            grants: Vec::new(),
        }
    }

    fn place(&mut self, flow: FlowId, first_rb: usize, packet: PacketDemand) {
        for owner in &mut self.rb_owner[first_rb..first_rb + packet.rbs as usize] {
            debug_assert!(owner.is_none(), "RB assigned twice");
            *owner = Some(flow);
        }
        self.grants.push(Grant {
            flow,
            first_rb,
            num_rbs: packet.rbs,
            bits: packet.bits,
        });
    }

    pub fn granted_rbs(&self) -> usize {
        self.rb_owner.iter().filter(|o| o.is_some()).count()
    }

    pub fn rbs_for(&self, flow: FlowId) -> usize {
        self.rb_owner.iter().filter(|o| **o == Some(flow)).count()
    }

    pub fn bits_for(&self, flow: FlowId) -> u64 {
        self.grants
            .iter()
            .filter(|g| g.flow == flow)
            .map(|g| g.bits)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.grants.is_empty()
    }

    /// Grants and the RB ownership vector agree, grants do not overlap and
    /// nothing lies outside the grid.
    pub fn is_consistent(&self) -> bool {
        let mut seen = vec![None; self.rb_owner.len()];
        for g in &self.grants {
            let end = g.first_rb + g.num_rbs as usize;
            if end > seen.len() {
                return false;
            }
            for slot in &mut seen[g.first_rb..end] {
                if slot.is_some() {
                    return false;
                }
                *slot = Some(g.flow);
            }
        }
        seen == self.rb_owner
    }
}

fn argmax_by<F>(candidates: &[&FlowRequest], mut score: F) -> Result<FlowId>
where
    F: FnMut(&FlowRequest) -> Result<f64>,
{
    let mut best: Option<(f64, FlowId)> = None;
    for c in candidates {
        let s = score(c)?;
        best = match best {
            Some((bs, bf)) if s < bs || (s == bs && bf < c.flow) => Some((bs, bf)),
            _ => Some((s, c.flow)),
        };
    }
    best.map(|(_, f)| f).ok_or(Error::NoCandidates(0))
}

/// `argmax_k R_{k,n}`, lowest flow id on ties.
pub fn max_ci_select(candidates: &[&FlowRequest], rb: usize) -> Result<FlowId> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates(rb));
    }
    argmax_by(candidates, |c| Ok(c.rate(rb)))
}

/// `argmax_k R_{k,n}^alpha / T_k^beta`, lowest flow id on ties.
pub fn pf_select(candidates: &[&FlowRequest], rb: usize, p: &PfParams) -> Result<FlowId> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates(rb));
    }
    argmax_by(candidates, |c| {
        if c.avg_throughput.is_nan() || c.avg_throughput <= 0.0 {
            return Err(Error::UninitializedAverage(c.flow));
        }
        Ok(c.rate(rb).powf(p.alpha) / c.avg_throughput.powf(p.beta))
    })
}

/// `T(t+1) = (1 - 1/t_c) T(t) + R_served / t_c`
pub fn pf_update_average(avg: f64, served_rate: f64, window: u32) -> f64 {
    let w = f64::from(window.max(1));
    (1.0 - 1.0 / w) * avg + served_rate / w
}

/// Position of the DRR round-robin pointer. `in_visit` marks a visit that
/// ran out of grid and resumes next TTI without a fresh quantum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DrrCursor {
    pub pointer: usize,
    pub in_visit: bool,
}

/// Deficit round robin over `queues` in slice order.
///
/// On each visit a backlogged flow's budget becomes `D + Q^N`; head-of-line
/// messages no larger than the budget are sent and charged against it. The
/// leftover carries to the next visit, or resets to zero once the queue
/// empties. Served messages are removed from the queues.
pub fn drr_allocate(
    queues: &mut [FlowRequest],
    cursor: &mut DrrCursor,
    grid: usize,
    max_grants: usize,
    tti: u64,
) -> AllocationMap {
    let mut map = AllocationMap::empty(tti, grid);
    let n = queues.len();
    if n == 0 {
        return map;
    }
    let mut next_rb = 0usize;
    while queues.iter().any(|q| !q.queue.is_empty()) {
        if next_rb >= grid || map.grants.len() >= max_grants {
            break;
        }
        let k = cursor.pointer % n;
        let q = &mut queues[k];
        if q.queue.is_empty() {
            q.deficit_bits = 0;
            cursor.in_visit = false;
            cursor.pointer = (k + 1) % n;
            continue;
        }
        if !cursor.in_visit {
            q.deficit_bits += q.quantum_bits.max(1);
            cursor.in_visit = true;
        }
        while let Some(head) = q.head() {
            if head.bits > q.deficit_bits {
                break;
            }
            if next_rb + head.rbs as usize > grid || map.grants.len() >= max_grants {
                return map;
            }
            map.place(q.flow, next_rb, head);
            next_rb += head.rbs as usize;
            q.deficit_bits -= head.bits;
            q.queue.remove(0);
        }
        if q.queue.is_empty() {
            q.deficit_bits = 0;
        }
        cursor.in_visit = false;
        cursor.pointer = (k + 1) % n;
    }
    map
}

/// One TTI of allocation. Served messages are removed from `pending`.
#[allow(clippy::too_many_arguments)]
pub fn allocate_tti(
    pending: &mut [FlowRequest],
    kind: SchedulerKind,
    grid: usize,
    pf: &PfParams,
    max_grants: usize,
    cursor: &mut DrrCursor,
    tti: u64,
) -> Result<AllocationMap> {
    if kind == SchedulerKind::DRR {
        return Ok(drr_allocate(pending, cursor, grid, max_grants, tti));
    }
    let mut map = AllocationMap::empty(tti, grid);
    let mut served = vec![false; pending.len()];
    let mut rb = 0usize;
    while rb < grid && map.grants.len() < max_grants {
        let eligible: Vec<usize> = (0..pending.len())
            .filter(|&i| !served[i])
            .filter(|&i| {
                pending[i]
                    .head()
                    .is_some_and(|h| h.rbs as usize <= grid - rb)
            })
            .collect();
        if eligible.is_empty() {
            break;
        }
        let cands: Vec<&FlowRequest> = eligible.iter().map(|&i| &pending[i]).collect();
        let chosen = match kind {
            SchedulerKind::MaxCI => max_ci_select(&cands, rb)?,
            SchedulerKind::PF => pf_select(&cands, rb, pf)?,
            SchedulerKind::DRR => unreachable!(),
        };
        let i = eligible
            .into_iter()
            .find(|&i| pending[i].flow == chosen)
            .expect("chosen flow is a candidate");
        let head = pending[i].queue.remove(0);
        map.place(chosen, rb, head);
        served[i] = true;
        rb += head.rbs as usize;
    }
    Ok(map)
}

/// Scheduler state that persists across TTIs for one run: PF averages, DRR
/// deficits and pointer. Flow ids index the state vectors.
#[derive(Debug, Clone)]
pub struct Scheduler {
    kind: SchedulerKind,
    pf: PfParams,
    grid: usize,
    max_grants: usize,
    averages: Vec<f64>,
    deficits: Vec<u64>,
    quanta: Vec<u64>,
    cursor: DrrCursor,
    last_tti: Option<u64>,
}

impl Scheduler {
    pub fn new(
        kind: SchedulerKind,
        pf: PfParams,
        grid: usize,
        max_grants: usize,
        quanta: Vec<u64>,
    ) -> Self {
        let n = quanta.len();
        Self {
            kind,
            pf,
            grid,
            max_grants,
            averages: vec![PF_EPSILON; n],
            deficits: vec![0; n],
            quanta,
            cursor: DrrCursor::default(),
            last_tti: None,
        }
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    pub fn average(&self, flow: FlowId) -> f64 {
        self.averages[flow.0 as usize]
    }

    pub fn deficit(&self, flow: FlowId) -> u64 {
        self.deficits[flow.0 as usize]
    }

    /// Allocates TTI `tti`. `requests` must list every flow in id order;
    /// flows with nothing ready carry an empty queue. TTIs skipped since the
    /// previous call count as idle for the PF averages.
    pub fn allocate(&mut self, tti: u64, requests: &mut [FlowRequest]) -> Result<AllocationMap> {
        debug_assert_eq!(requests.len(), self.averages.len());
        if let Some(last) = self.last_tti {
            let idle = tti.saturating_sub(last + 1);
            if idle > 0 {
                let w = f64::from(self.pf.window.max(1));
                let decay = (1.0 - 1.0 / w).powi(idle.min(i32::MAX as u64) as i32);
                for a in &mut self.averages {
                    *a = (*a * decay).max(f64::MIN_POSITIVE);
                }
            }
        }
        for r in requests.iter_mut() {
            let k = r.flow.0 as usize;
            r.avg_throughput = self.averages[k];
            r.deficit_bits = self.deficits[k];
            r.quantum_bits = self.quanta[k];
        }
        let rates: Vec<Vec<f64>> = requests.iter().map(|r| r.rates.clone()).collect();
        let map = allocate_tti(
            requests,
            self.kind,
            self.grid,
            &self.pf,
            self.max_grants,
            &mut self.cursor,
            tti,
        )?;
        let mut served = vec![0.0; self.averages.len()];
        for g in &map.grants {
            let k = g.flow.0 as usize;
            let r = &requests[k];
            let _ = r;
            for rb in g.first_rb..g.first_rb + g.num_rbs as usize {
                served[k] += match rates[k].as_slice() {
                    [] => 0.0,
                    [single] => *single,
                    many => many[rb.min(many.len() - 1)],
                };
            }
        }
        for (k, a) in self.averages.iter_mut().enumerate() {
            // Keep the average strictly positive so PF stays defined.
            *a = pf_update_average(*a, served[k], self.pf.window).max(f64::MIN_POSITIVE);
        }
        for r in requests.iter() {
            self.deficits[r.flow.0 as usize] = r.deficit_bits;
        }
        self.last_tti = Some(tti);
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(id: u32, rate: f64, rbs: u32) -> FlowRequest {
        FlowRequest::new(
            FlowId(id),
            vec![PacketDemand {
                bits: rbs as u64 * 100,
                rbs,
            }],
            vec![rate],
        )
    }

    #[test]
    fn shannon_rate() {
        assert_eq!(rate_per_rb(f64::NEG_INFINITY), 0.0);
        assert!((rate_per_rb(0.0) - 1.0).abs() < 1e-15);
        assert!(rate_per_rb(10.0) > rate_per_rb(5.0));
    }

    #[test]
    fn max_ci_picks_best_rate() {
        let f = [flow(0, 2.1, 1), flow(1, 3.5, 1), flow(2, 1.0, 1)];
        let c: Vec<&FlowRequest> = f.iter().collect();
        assert_eq!(max_ci_select(&c, 0).unwrap(), FlowId(1));
        let f = [flow(0, 2.0, 1), flow(1, 2.0, 1)];
        let c: Vec<&FlowRequest> = f.iter().collect();
        assert_eq!(max_ci_select(&c, 0).unwrap(), FlowId(0));
        assert!(matches!(max_ci_select(&[], 3), Err(Error::NoCandidates(3))));
    }

    #[test]
    fn ties_go_to_lowest_id_regardless_of_order() {
        let f = [flow(4, 2.0, 1), flow(1, 2.0, 1), flow(3, 1.0, 1)];
        let c: Vec<&FlowRequest> = f.iter().collect();
        assert_eq!(max_ci_select(&c, 0).unwrap(), FlowId(1));
    }

    #[test]
    fn pf_priority_arithmetic() {
        let mut a = flow(0, 4.0, 1);
        a.avg_throughput = 4.0;
        let mut b = flow(1, 2.0, 1);
        b.avg_throughput = 1.0;
        let p = PfParams::default();
        // priorities 4/4 = 1 and 2/1 = 2
        assert_eq!(pf_select(&[&a, &b], 0, &p).unwrap(), FlowId(1));
        b.avg_throughput = 0.0;
        assert!(matches!(
            pf_select(&[&a, &b], 0, &p),
            Err(Error::UninitializedAverage(FlowId(1)))
        ));
    }

    #[test]
    fn pf_average_update() {
        assert!((pf_update_average(100.0, 200.0, 10) - 110.0).abs() < 1e-12);
        assert_eq!(pf_update_average(7.5, 7.5, 4), 7.5);
        assert_eq!(pf_update_average(100.0, 3.0, 1), 3.0);
    }

    #[test]
    fn single_flow_gets_its_demand() {
        let mut f = [flow(0, 2.0, 5)];
        let map = allocate_tti(
            &mut f,
            SchedulerKind::MaxCI,
            132,
            &PfParams::default(),
            usize::MAX,
            &mut DrrCursor::default(),
            0,
        )
        .unwrap();
        assert_eq!(map.granted_rbs(), 5);
        assert_eq!(map.rb_owner.iter().filter(|o| o.is_none()).count(), 127);
        assert!(f[0].queue.is_empty());
    }

    #[test]
    fn over_demand_fills_grid_and_queues_the_rest() {
        // 72 + 60 + 18 = 150 RBs requested.
        let mut f = [flow(0, 3.0, 72), flow(1, 2.0, 60), flow(2, 1.0, 18)];
        let map = allocate_tti(
            &mut f,
            SchedulerKind::MaxCI,
            132,
            &PfParams::default(),
            usize::MAX,
            &mut DrrCursor::default(),
            0,
        )
        .unwrap();
        assert_eq!(map.granted_rbs(), 132);
        assert_eq!(f[2].queue.len(), 1);
        assert!(map.is_consistent());
    }

    #[test]
    fn no_pending_flows() {
        let mut f: [FlowRequest; 0] = [];
        let map = allocate_tti(
            &mut f,
            SchedulerKind::PF,
            132,
            &PfParams::default(),
            8,
            &mut DrrCursor::default(),
            0,
        )
        .unwrap();
        assert!(map.is_empty());
        assert_eq!(map.granted_rbs(), 0);
    }

    #[test]
    fn grant_cap_limits_messages_per_tti() {
        let mut f: Vec<FlowRequest> = (0..10).map(|k| flow(k, 1.0, 5)).collect();
        let map = allocate_tti(
            &mut f,
            SchedulerKind::MaxCI,
            132,
            &PfParams::default(),
            8,
            &mut DrrCursor::default(),
            0,
        )
        .unwrap();
        assert_eq!(map.grants.len(), 8);
        assert_eq!(map.granted_rbs(), 40);
    }

    fn drr_flow(id: u32, packets: &[u64], deficit: u64, quantum: u64) -> FlowRequest {
        let mut f = FlowRequest::new(
            FlowId(id),
            packets
                .iter()
                .map(|&b| PacketDemand { bits: b, rbs: 1 })
                .collect(),
            vec![1.0],
        );
        f.deficit_bits = deficit;
        f.quantum_bits = quantum;
        f
    }

    #[test]
    fn drr_bookkeeping() {
        // Budget 50 + 300 = 350; the 300-bit message goes, 50 carries.
        let mut q = [drr_flow(0, &[300, 400], 50, 300)];
        let mut cur = DrrCursor::default();
        let map = drr_allocate(&mut q, &mut cur, 1, 8, 0);
        assert_eq!(map.bits_for(FlowId(0)), 300);
        assert_eq!(q[0].deficit_bits, 50);
        assert_eq!(q[0].queue.len(), 1);

        // Emptied queue resets the deficit.
        let mut q = [drr_flow(0, &[300], 50, 300)];
        drr_allocate(&mut q, &mut DrrCursor::default(), 10, 8, 0);
        assert_eq!(q[0].deficit_bits, 0);

        // 400 > 350: nothing sent this visit, the budget carries. Flow 1
        // then fills the grid.
        let mut q = [drr_flow(0, &[400], 50, 300), drr_flow(1, &[100], 0, 300)];
        let mut cur = DrrCursor::default();
        let map = drr_allocate(&mut q, &mut cur, 1, 8, 0);
        assert_eq!(map.bits_for(FlowId(0)), 0);
        assert_eq!(map.bits_for(FlowId(1)), 100);
        assert_eq!(q[0].deficit_bits, 350);
    }

    #[test]
    fn drr_pointer_persists() {
        let mut q = [
            drr_flow(0, &[100, 100], 0, 100),
            drr_flow(1, &[100, 100], 0, 100),
        ];
        let mut cur = DrrCursor::default();
        let m1 = drr_allocate(&mut q, &mut cur, 1, 8, 0);
        assert_eq!(m1.grants[0].flow, FlowId(0));
        let m2 = drr_allocate(&mut q, &mut cur, 1, 8, 1);
        assert_eq!(m2.grants[0].flow, FlowId(1));
    }

    #[test]
    fn scheduler_decays_idle_averages() {
        let mut s = Scheduler::new(SchedulerKind::PF, PfParams::default(), 10, 8, vec![100; 1]);
        let mut r = vec![flow(0, 2.0, 1)];
        s.allocate(0, &mut r).unwrap();
        let after_serve = s.average(FlowId(0));
        assert!((after_serve - pf_update_average(PF_EPSILON, 2.0, 10)).abs() < 1e-15);
        let mut r = vec![FlowRequest::new(FlowId(0), vec![], vec![2.0])];
        s.allocate(3, &mut r).unwrap();
        // Two idle TTIs plus the empty one at t = 3.
        let expected = after_serve * 0.9f64.powi(3);
        assert!((s.average(FlowId(0)) - expected).abs() < 1e-15);
    }
}
