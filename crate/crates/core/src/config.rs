//! Scenario configuration: a flat list of dotted `key = value` pairs (valid
//! TOML), every key optional, unknown keys rejected. The full schema with
//! units and defaults lives in `docs/config.md`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::channel::mcs::DEFAULT_RE_PER_RB;
use crate::channel::{fading::DEFAULT_OSCILLATORS, rbs_needed, McsTable};
use crate::error::{ConfigErrors, ConfigIssue};
use crate::time::{self, Nanos};

pub const MAX_PLATOONS: usize = 3;
pub const SUPPORTED_CQI: [u8; 5] = [3, 5, 7, 9, 11];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IftKind {
    CarToServer,
    MultiHop,
    OneHop,
}

impl IftKind {
    pub const ALL: [IftKind; 3] = [IftKind::CarToServer, IftKind::MultiHop, IftKind::OneHop];

    pub fn as_str(self) -> &'static str {
        match self {
            IftKind::CarToServer => "car_to_server",
            IftKind::MultiHop => "multi_hop",
            IftKind::OneHop => "one_hop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "car_to_server" => Some(IftKind::CarToServer),
            "multi_hop" => Some(IftKind::MultiHop),
            "one_hop" => Some(IftKind::OneHop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchedulerKind {
    MaxCI,
    PF,
    DRR,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] =
        [SchedulerKind::MaxCI, SchedulerKind::PF, SchedulerKind::DRR];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::MaxCI => "max_ci",
            SchedulerKind::PF => "pf",
            SchedulerKind::DRR => "drr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "max_ci" => Some(SchedulerKind::MaxCI),
            "pf" => Some(SchedulerKind::PF),
            "drr" => Some(SchedulerKind::DRR),
            _ => None,
        }
    }
}

/// Channel knowledge behind the scheduler's per-RB rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    /// Path loss and shadowing only; fast fading is not reported.
    Wideband,
    /// SINR including the fading gain of the current slot.
    Instantaneous,
}

impl CsiMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CsiMode::Wideband => "wideband",
            CsiMode::Instantaneous => "instantaneous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wideband" => Some(CsiMode::Wideband),
            "instantaneous" => Some(CsiMode::Instantaneous),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityMode {
    ConstantSpeed,
    Plf,
}

impl MobilityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MobilityMode::ConstantSpeed => "constant_speed",
            MobilityMode::Plf => "plf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant_speed" => Some(MobilityMode::ConstantSpeed),
            "plf" => Some(MobilityMode::Plf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonParams {
    /// M
    pub count: usize,
    /// N
    pub length: usize,
    pub vehicle_length_m: f64,
    /// Centre-to-centre spacing d between consecutive vehicles.
    pub spacing_m: f64,
    pub speed_kmh: f64,
}

impl Default for PlatoonParams {
    fn default() -> Self {
        Self {
            count: 1,
            length: 5,
            vehicle_length_m: 5.0,
            spacing_m: 11.0,
            speed_kmh: 36.0,
        }
    }
}

impl PlatoonParams {
    pub fn speed_mps(&self) -> f64 {
        self.speed_kmh / 3.6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CamParams {
    /// T_p
    pub period_s: f64,
    /// Application header plus payload.
    pub app_bytes: u32,
    /// Headers added below the application.
    pub overhead_bytes: u32,
}

impl Default for CamParams {
    fn default() -> Self {
        Self {
            period_s: 0.03,
            app_bytes: 110,
            overhead_bytes: 20,
        }
    }
}

impl CamParams {
    pub fn air_bytes(&self) -> u32 {
        self.app_bytes + self.overhead_bytes
    }

    pub fn air_bits(&self) -> u64 {
        u64::from(self.air_bytes()) * 8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IftParams {
    pub kind: IftKind,
    /// Decode-and-forward time at each Multi-Hop relay.
    pub relay_proc_ms: f64,
    /// gNB/core forwarding time between uplink reception and downlink.
    pub core_proc_ms: f64,
    /// Buffer report to grant latency for vehicle-originated transmissions.
    pub access_delay_ms: f64,
}

impl Default for IftParams {
    fn default() -> Self {
        Self {
            kind: IftKind::OneHop,
            relay_proc_ms: 0.5,
            core_proc_ms: 1.0,
            access_delay_ms: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfParams {
    pub alpha: f64,
    pub beta: f64,
    /// Averaging window t_c in TTIs.
    pub window: u32,
}

impl Default for PfParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            window: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerParams {
    pub kind: SchedulerKind,
    pub pf: PfParams,
    /// DRR quantum; `None` means one CAM at the configured CQI.
    pub drr_quantum_bits: Option<u64>,
    /// Control-channel limit on grants issued per TTI.
    pub max_grants_per_tti: u32,
    pub csi: CsiMode,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        Self {
            kind: SchedulerKind::MaxCI,
            pf: PfParams::default(),
            drr_quantum_bits: None,
            max_grants_per_tti: 8,
            csi: CsiMode::Wideband,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub cqi: u8,
    pub fading: bool,
    pub fading_oscillators: usize,
    pub re_per_rb: u32,
    pub mcs_table_path: Option<PathBuf>,
    pub mcs: McsTable,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            cqi: 7,
            fading: true,
            fading_oscillators: DEFAULT_OSCILLATORS,
            re_per_rb: DEFAULT_RE_PER_RB,
            mcs_table_path: None,
            mcs: McsTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub carrier_ghz: f64,
    pub tx_power_dbm: f64,
    /// Per antenna; a link gets it twice.
    pub antenna_gain_dbi: f64,
    pub antenna_height_m: f64,
    pub noise_figure_db: f64,
    pub numerology: u8,
    pub num_rbs: u32,
    pub bandwidth_mhz: f64,
    pub shadow_sigma_db: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            carrier_ghz: 30.0,
            tx_power_dbm: 23.0,
            antenna_gain_dbi: 5.0,
            antenna_height_m: 1.6,
            noise_figure_db: 13.0,
            numerology: 3,
            num_rbs: 132,
            bandwidth_mhz: 200.0,
            shadow_sigma_db: 3.0,
        }
    }
}

impl RadioParams {
    /// 2^mu x 15 kHz
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        15_000.0 * f64::from(1u32 << self.numerology)
    }

    pub fn rb_bandwidth_hz(&self) -> f64 {
        12.0 * self.subcarrier_spacing_hz()
    }

    pub fn slot_ns(&self) -> Nanos {
        time::slot_ns(self.numerology)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnbParams {
    /// Longitudinal position along the highway.
    pub x_m: f64,
    /// Lateral offset from the road.
    pub y_m: f64,
}

impl Default for GnbParams {
    fn default() -> Self {
        Self {
            x_m: 300.0,
            y_m: 50.0,
        }
    }
}

/// PLF-CACC gains. The desired spacing is centre to centre.
#[derive(Debug, Clone, PartialEq)]
pub struct PlfGains {
    pub c1: f64,
    pub xi: f64,
    pub omega_n: f64,
    pub desired_gap_m: f64,
}

impl Default for PlfGains {
    fn default() -> Self {
        Self {
            c1: 0.5,
            xi: 1.0,
            omega_n: 0.2,
            desired_gap_m: 11.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityParams {
    pub mode: MobilityMode,
    pub max_accel: f64,
    /// T
    pub control_period_s: f64,
    pub plf: PlfGains,
    /// Set when `mobility.plf.desired_gap_m` was given explicitly; otherwise
    /// the desired gap tracks `platoon.spacing_m`.
    pub desired_gap_explicit: bool,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            mode: MobilityMode::ConstantSpeed,
            max_accel: 2.5,
            control_period_s: 0.1,
            plf: PlfGains::default(),
            desired_gap_explicit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub duration_s: f64,
    pub warmup_s: f64,
    pub replications: u32,
    pub seed: u64,
    pub max_events: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            warmup_s: 1.0,
            replications: 20,
            seed: 1,
            max_events: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioConfig {
    pub platoon: PlatoonParams,
    pub cam: CamParams,
    pub ift: IftParams,
    pub scheduler: SchedulerParams,
    pub channel: ChannelParams,
    pub radio: RadioParams,
    pub gnb: GnbParams,
    pub mobility: MobilityParams,
    pub run: RunParams,
}

/// Every accepted key, in emission order.
pub const KEYS: &[&str] = &[
    "platoon.count",
    "platoon.length",
    "platoon.vehicle_length_m",
    "platoon.spacing_m",
    "platoon.speed_kmh",
    "cam.period_s",
    "cam.app_bytes",
    "cam.overhead_bytes",
    "ift.kind",
    "ift.relay_proc_ms",
    "ift.core_proc_ms",
    "ift.access_delay_ms",
    "scheduler.kind",
    "scheduler.pf.alpha",
    "scheduler.pf.beta",
    "scheduler.pf.window",
    "scheduler.drr.quantum_bits",
    "scheduler.max_grants_per_tti",
    "scheduler.csi",
    "channel.cqi",
    "channel.fading",
    "channel.fading_oscillators",
    "channel.re_per_rb",
    "channel.mcs_table",
    "radio.carrier_ghz",
    "radio.tx_power_dbm",
    "radio.antenna_gain_dbi",
    "radio.antenna_height_m",
    "radio.noise_figure_db",
    "radio.numerology",
    "radio.num_rbs",
    "radio.bandwidth_mhz",
    "radio.shadow_sigma_db",
    "gnb.x_m",
    "gnb.y_m",
    "mobility.mode",
    "mobility.max_accel",
    "mobility.plf.c1",
    "mobility.plf.xi",
    "mobility.plf.omega_n",
    "mobility.plf.desired_gap_m",
    "control.period_s",
    "sim.duration_s",
    "sim.warmup_s",
    "sim.replications",
    "sim.seed",
    "sim.max_events",
];

/// Flattens a TOML document into `(dotted.key, value)` pairs in document order.
pub(crate) fn flatten_toml(text: &str) -> Result<Vec<(String, Value)>, ConfigErrors> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigErrors::single("<syntax>", e.to_string()))?;
    let mut out = Vec::new();
    fn walk(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
        for (k, v) in table {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match v {
                Value::Table(t) => walk(&key, t, out),
                other => out.push((key, other.clone())),
            }
        }
    }
    walk("", &table, &mut out);
    Ok(out)
}

struct Reader<'a> {
    key: &'a str,
    value: &'a Value,
    issues: &'a mut Vec<ConfigIssue>,
}

impl Reader<'_> {
    fn fail(&mut self, msg: impl Into<String>) {
        self.issues.push(ConfigIssue::new(self.key, msg));
    }

    fn float(&mut self, slot: &mut f64) {
        match self.value {
            Value::Float(f) => *slot = *f,
            Value::Integer(i) => *slot = *i as f64,
            _ => self.fail("expected a number"),
        }
    }

    fn uint<T: TryFrom<i64>>(&mut self, slot: &mut T) {
        match self.value {
            Value::Integer(i) => match T::try_from(*i) {
                Ok(v) if *i >= 0 => *slot = v,
                _ => self.fail(format!("integer {i} out of range")),
            },
            _ => self.fail("expected a non-negative integer"),
        }
    }

    fn boolean(&mut self, slot: &mut bool) {
        match self.value {
            Value::Boolean(b) => *slot = *b,
            _ => self.fail("expected true or false"),
        }
    }

    fn string(&mut self) -> Option<String> {
        match self.value {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.fail("expected a quoted string");
                None
            }
        }
    }

    fn choice<T>(&mut self, slot: &mut T, parse: fn(&str) -> Option<T>, allowed: &str) {
        if let Some(s) = self.string() {
            match parse(&s) {
                Some(v) => *slot = v,
                None => self.fail(format!("unknown value `{s}` (expected one of {allowed})")),
            }
        }
    }
}

impl ScenarioConfig {
    /// Parses scenario text, fills defaults for absent keys and checks every
    /// invariant. All problems are reported together, each naming its key.
    /// Relative `channel.mcs_table` paths resolve against `base_dir`.
    pub fn parse_with_base(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigErrors> {
        Self::from_pairs(&flatten_toml(text)?, base_dir)
    }

    pub(crate) fn from_pairs(
        pairs: &[(String, Value)],
        base_dir: Option<&Path>,
    ) -> Result<Self, ConfigErrors> {
        let mut cfg = ScenarioConfig::default();
        let mut issues = Vec::new();
        for (key, value) in pairs {
            cfg.apply(key, value, base_dir, &mut issues);
        }
        if !cfg.mobility.desired_gap_explicit {
            cfg.mobility.plf.desired_gap_m = cfg.platoon.spacing_m;
        }
        issues.extend(cfg.check());
        if issues.is_empty() {
            for w in cfg.warnings() {
                log::warn!("{w}");
            }
            Ok(cfg)
        } else {
            Err(ConfigErrors(issues))
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        Self::parse_with_base(text, None)
    }

    pub fn from_file(path: &Path) -> Result<Self, crate::Error> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(Self::parse_with_base(&text, path.parent())?)
    }

    /// Applies one `key = value` override, recording problems in `issues`.
    pub(crate) fn apply(
        &mut self,
        key: &str,
        value: &Value,
        base_dir: Option<&Path>,
        issues: &mut Vec<ConfigIssue>,
    ) {
        let mut r = Reader { key, value, issues };
        match key {
            "platoon.count" => r.uint(&mut self.platoon.count),
            "platoon.length" => r.uint(&mut self.platoon.length),
            "platoon.vehicle_length_m" => r.float(&mut self.platoon.vehicle_length_m),
            "platoon.spacing_m" => r.float(&mut self.platoon.spacing_m),
            "platoon.speed_kmh" => r.float(&mut self.platoon.speed_kmh),
            "cam.period_s" => r.float(&mut self.cam.period_s),
            "cam.app_bytes" => r.uint(&mut self.cam.app_bytes),
            "cam.overhead_bytes" => r.uint(&mut self.cam.overhead_bytes),
            "ift.kind" => r.choice(
                &mut self.ift.kind,
                IftKind::parse,
                "car_to_server, multi_hop, one_hop",
            ),
            "ift.relay_proc_ms" => r.float(&mut self.ift.relay_proc_ms),
            "ift.core_proc_ms" => r.float(&mut self.ift.core_proc_ms),
            "ift.access_delay_ms" => r.float(&mut self.ift.access_delay_ms),
            "scheduler.kind" => r.choice(
                &mut self.scheduler.kind,
                SchedulerKind::parse,
                "max_ci, pf, drr",
            ),
            "scheduler.pf.alpha" => r.float(&mut self.scheduler.pf.alpha),
            "scheduler.pf.beta" => r.float(&mut self.scheduler.pf.beta),
            "scheduler.pf.window" => r.uint(&mut self.scheduler.pf.window),
            "scheduler.drr.quantum_bits" => {
                let mut q = 0u64;
                r.uint(&mut q);
                self.scheduler.drr_quantum_bits = (q > 0).then_some(q);
            }
            "scheduler.max_grants_per_tti" => r.uint(&mut self.scheduler.max_grants_per_tti),
            "scheduler.csi" => r.choice(
                &mut self.scheduler.csi,
                CsiMode::parse,
                "wideband, instantaneous",
            ),
            "channel.cqi" => r.uint(&mut self.channel.cqi),
            "channel.fading" => r.boolean(&mut self.channel.fading),
            "channel.fading_oscillators" => r.uint(&mut self.channel.fading_oscillators),
            "channel.re_per_rb" => r.uint(&mut self.channel.re_per_rb),
            "channel.mcs_table" => {
                if let Some(s) = r.string() {
                    if s.is_empty() {
                        self.channel.mcs_table_path = None;
                        self.channel.mcs = McsTable::default();
                    } else {
                        let path = PathBuf::from(&s);
                        let resolved = match base_dir {
                            Some(dir) if path.is_relative() => dir.join(&path),
                            _ => path.clone(),
                        };
                        match McsTable::load(&resolved) {
                            Ok(t) => self.channel.mcs = t,
                            Err(e) => r.fail(e.to_string()),
                        }
                        self.channel.mcs_table_path = Some(path);
                    }
                }
            }
            "radio.carrier_ghz" => r.float(&mut self.radio.carrier_ghz),
            "radio.tx_power_dbm" => r.float(&mut self.radio.tx_power_dbm),
            "radio.antenna_gain_dbi" => r.float(&mut self.radio.antenna_gain_dbi),
            "radio.antenna_height_m" => r.float(&mut self.radio.antenna_height_m),
            "radio.noise_figure_db" => r.float(&mut self.radio.noise_figure_db),
            "radio.numerology" => r.uint(&mut self.radio.numerology),
            "radio.num_rbs" => r.uint(&mut self.radio.num_rbs),
            "radio.bandwidth_mhz" => r.float(&mut self.radio.bandwidth_mhz),
            "radio.shadow_sigma_db" => r.float(&mut self.radio.shadow_sigma_db),
            "gnb.x_m" => r.float(&mut self.gnb.x_m),
            "gnb.y_m" => r.float(&mut self.gnb.y_m),
            "mobility.mode" => r.choice(
                &mut self.mobility.mode,
                MobilityMode::parse,
                "constant_speed, plf",
            ),
            "mobility.max_accel" => r.float(&mut self.mobility.max_accel),
            "mobility.plf.c1" => r.float(&mut self.mobility.plf.c1),
            "mobility.plf.xi" => r.float(&mut self.mobility.plf.xi),
            "mobility.plf.omega_n" => r.float(&mut self.mobility.plf.omega_n),
            "mobility.plf.desired_gap_m" => {
                r.float(&mut self.mobility.plf.desired_gap_m);
                self.mobility.desired_gap_explicit = true;
            }
            "control.period_s" => r.float(&mut self.mobility.control_period_s),
            "sim.duration_s" => r.float(&mut self.run.duration_s),
            "sim.warmup_s" => r.float(&mut self.run.warmup_s),
            "sim.replications" => r.uint(&mut self.run.replications),
            "sim.seed" => match value {
                Value::String(s) => match s.parse::<u64>() {
                    Ok(v) => self.run.seed = v,
                    Err(_) => r.fail(format!("`{s}` is not a 64-bit unsigned integer")),
                },
                _ => r.uint(&mut self.run.seed),
            },
            "sim.max_events" => r.uint(&mut self.run.max_events),
            _ => r.fail("unknown key"),
        }
    }

    fn check(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut req = |ok: bool, key: &str, msg: String| {
            if !ok {
                out.push(ConfigIssue::new(key, msg));
            }
        };
        let p = &self.platoon;
        req(
            p.count >= 1,
            "platoon.count",
            "need at least one platoon".into(),
        );
        req(
            p.count <= MAX_PLATOONS,
            "platoon.count",
            format!("num_platoons exceeds {MAX_PLATOONS} (got {})", p.count),
        );
        req(
            p.length >= 2,
            "platoon.length",
            format!("a platoon needs at least 2 vehicles (got {})", p.length),
        );
        req(
            p.length <= u16::MAX as usize,
            "platoon.length",
            "too many vehicles".into(),
        );
        req(
            p.vehicle_length_m > 0.0,
            "platoon.vehicle_length_m",
            "must be positive".into(),
        );
        req(
            p.spacing_m > p.vehicle_length_m,
            "platoon.spacing_m",
            format!(
                "centre-to-centre spacing {} m must exceed the vehicle length {} m",
                p.spacing_m, p.vehicle_length_m
            ),
        );
        req(
            p.speed_kmh >= 0.0,
            "platoon.speed_kmh",
            "must be non-negative".into(),
        );

        let c = &self.cam;
        req(c.period_s > 0.0, "cam.period_s", "must be positive".into());
        req(
            c.period_s < self.mobility.control_period_s,
            "cam.period_s",
            format!(
                "T_p ({} s) must be shorter than the control period T ({} s)",
                c.period_s, self.mobility.control_period_s
            ),
        );
        req(c.app_bytes > 0, "cam.app_bytes", "must be positive".into());

        let i = &self.ift;
        req(
            i.relay_proc_ms >= 0.0,
            "ift.relay_proc_ms",
            "must be non-negative".into(),
        );
        req(
            i.core_proc_ms >= 0.0,
            "ift.core_proc_ms",
            "must be non-negative".into(),
        );
        req(
            i.access_delay_ms >= 0.0,
            "ift.access_delay_ms",
            "must be non-negative".into(),
        );

        let s = &self.scheduler;
        req(
            s.pf.alpha >= 0.0,
            "scheduler.pf.alpha",
            "must be non-negative".into(),
        );
        req(
            s.pf.beta >= 0.0,
            "scheduler.pf.beta",
            "must be non-negative".into(),
        );
        req(
            s.pf.window >= 1,
            "scheduler.pf.window",
            "t_c must be at least 1".into(),
        );
        req(
            s.max_grants_per_tti >= 1,
            "scheduler.max_grants_per_tti",
            "must be at least 1".into(),
        );

        let ch = &self.channel;
        req(
            SUPPORTED_CQI.contains(&ch.cqi),
            "channel.cqi",
            format!(
                "unsupported CQI value {} (expected one of 3, 5, 7, 9, 11)",
                ch.cqi
            ),
        );
        req(
            ch.re_per_rb >= 1,
            "channel.re_per_rb",
            "must be positive".into(),
        );
        req(
            ch.fading_oscillators >= 1,
            "channel.fading_oscillators",
            "must be positive".into(),
        );
        match ch.mcs.get(ch.cqi) {
            None if SUPPORTED_CQI.contains(&ch.cqi) => req(
                false,
                "channel.mcs_table",
                format!("no row for CQI {}", ch.cqi),
            ),
            Some(mcs) => {
                let need = rbs_needed(c.air_bits(), mcs, ch.re_per_rb.max(1));
                req(
                    need <= self.radio.num_rbs,
                    "radio.num_rbs",
                    format!(
                        "a CAM needs {need} RBs but the grid has {}",
                        self.radio.num_rbs
                    ),
                );
            }
            None => {}
        }

        let r = &self.radio;
        req(
            r.carrier_ghz > 0.0,
            "radio.carrier_ghz",
            "must be positive".into(),
        );
        req(
            r.numerology <= 6,
            "radio.numerology",
            format!("mu = {} is outside 0..=6", r.numerology),
        );
        req(r.num_rbs >= 1, "radio.num_rbs", "must be positive".into());
        req(
            r.noise_figure_db >= 0.0,
            "radio.noise_figure_db",
            "must be non-negative".into(),
        );
        req(
            r.shadow_sigma_db >= 0.0,
            "radio.shadow_sigma_db",
            "must be non-negative".into(),
        );
        req(
            r.antenna_height_m > 0.0,
            "radio.antenna_height_m",
            "must be positive".into(),
        );
        if r.numerology <= 6 {
            let occupied_mhz = r.num_rbs as f64 * r.rb_bandwidth_hz() / 1e6;
            req(
                occupied_mhz <= r.bandwidth_mhz + 1e-9,
                "radio.num_rbs",
                format!(
                    "{} RBs occupy {occupied_mhz} MHz, more than the {} MHz bandwidth",
                    r.num_rbs, r.bandwidth_mhz
                ),
            );
        }

        let m = &self.mobility;
        req(
            m.max_accel > 0.0,
            "mobility.max_accel",
            "must be positive".into(),
        );
        req(
            m.control_period_s > 0.0,
            "control.period_s",
            "must be positive".into(),
        );
        req(
            (0.0..=1.0).contains(&m.plf.c1),
            "mobility.plf.c1",
            "must lie in [0, 1]".into(),
        );
        req(
            m.plf.xi >= 1.0,
            "mobility.plf.xi",
            "must be at least 1".into(),
        );
        req(
            m.plf.omega_n > 0.0,
            "mobility.plf.omega_n",
            "must be positive".into(),
        );
        req(
            m.plf.desired_gap_m > 0.0,
            "mobility.plf.desired_gap_m",
            "must be positive".into(),
        );

        let run = &self.run;
        req(
            run.warmup_s >= 0.0,
            "sim.warmup_s",
            "must be non-negative".into(),
        );
        req(
            run.duration_s > run.warmup_s,
            "sim.duration_s",
            format!(
                "duration {} s must exceed the warm-up {} s",
                run.duration_s, run.warmup_s
            ),
        );
        req(
            run.replications >= 1,
            "sim.replications",
            "must be at least 1".into(),
        );
        req(
            run.max_events >= 1,
            "sim.max_events",
            "must be at least 1".into(),
        );
        out
    }

    /// Non-fatal remarks about an otherwise valid configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !(3..=10).contains(&self.platoon.length) {
            w.push(format!(
                "platoon.length: {} vehicles is outside the studied range 3..=10",
                self.platoon.length
            ));
        }
        w
    }

    /// Re-validates a configuration built in code.
    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let issues = self.check();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(issues))
        }
    }

    /// Renders every key, in schema order, so that `parse(emit(cfg)) == cfg`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            if let Some(v) = self.value_text(key) {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }

    /// TOML text for one key's current value; `None` for unset optional keys.
    pub fn value_text(&self, key: &str) -> Option<String> {
        let f = |x: f64| Value::Float(x).to_string();
        let q = |s: &str| Value::String(s.to_string()).to_string();
        Some(match key {
            "platoon.count" => self.platoon.count.to_string(),
            "platoon.length" => self.platoon.length.to_string(),
            "platoon.vehicle_length_m" => f(self.platoon.vehicle_length_m),
            "platoon.spacing_m" => f(self.platoon.spacing_m),
            "platoon.speed_kmh" => f(self.platoon.speed_kmh),
            "cam.period_s" => f(self.cam.period_s),
            "cam.app_bytes" => self.cam.app_bytes.to_string(),
            "cam.overhead_bytes" => self.cam.overhead_bytes.to_string(),
            "ift.kind" => q(self.ift.kind.as_str()),
            "ift.relay_proc_ms" => f(self.ift.relay_proc_ms),
            "ift.core_proc_ms" => f(self.ift.core_proc_ms),
            "ift.access_delay_ms" => f(self.ift.access_delay_ms),
            "scheduler.kind" => q(self.scheduler.kind.as_str()),
            "scheduler.pf.alpha" => f(self.scheduler.pf.alpha),
            "scheduler.pf.beta" => f(self.scheduler.pf.beta),
            "scheduler.pf.window" => self.scheduler.pf.window.to_string(),
            "scheduler.drr.quantum_bits" => {
                self.scheduler.drr_quantum_bits.unwrap_or(0).to_string()
            }
            "scheduler.max_grants_per_tti" => self.scheduler.max_grants_per_tti.to_string(),
            "scheduler.csi" => q(self.scheduler.csi.as_str()),
            "channel.cqi" => self.channel.cqi.to_string(),
            "channel.fading" => self.channel.fading.to_string(),
            "channel.fading_oscillators" => self.channel.fading_oscillators.to_string(),
            "channel.re_per_rb" => self.channel.re_per_rb.to_string(),
            "channel.mcs_table" => q(&self
                .channel
                .mcs_table_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()),
            "radio.carrier_ghz" => f(self.radio.carrier_ghz),
            "radio.tx_power_dbm" => f(self.radio.tx_power_dbm),
            "radio.antenna_gain_dbi" => f(self.radio.antenna_gain_dbi),
            "radio.antenna_height_m" => f(self.radio.antenna_height_m),
            "radio.noise_figure_db" => f(self.radio.noise_figure_db),
            "radio.numerology" => self.radio.numerology.to_string(),
            "radio.num_rbs" => self.radio.num_rbs.to_string(),
            "radio.bandwidth_mhz" => f(self.radio.bandwidth_mhz),
            "radio.shadow_sigma_db" => f(self.radio.shadow_sigma_db),
            "gnb.x_m" => f(self.gnb.x_m),
            "gnb.y_m" => f(self.gnb.y_m),
            "mobility.mode" => q(self.mobility.mode.as_str()),
            "mobility.max_accel" => f(self.mobility.max_accel),
            "mobility.plf.c1" => f(self.mobility.plf.c1),
            "mobility.plf.xi" => f(self.mobility.plf.xi),
            "mobility.plf.omega_n" => f(self.mobility.plf.omega_n),
            "mobility.plf.desired_gap_m" => {
                if !self.mobility.desired_gap_explicit {
                    return None;
                }
                f(self.mobility.plf.desired_gap_m)
            }
            "control.period_s" => f(self.mobility.control_period_s),
            "sim.duration_s" => f(self.run.duration_s),
            "sim.warmup_s" => f(self.run.warmup_s),
            "sim.replications" => self.run.replications.to_string(),
            "sim.seed" => {
                if self.run.seed > i64::MAX as u64 {
                    q(&self.run.seed.to_string())
                } else {
                    self.run.seed.to_string()
                }
            }
            "sim.max_events" => self.run.max_events.to_string(),
            _ => return None,
        })
    }

    /// Applies a list of overrides, as used by campaign sweeps.
    pub fn with_overrides(&self, overrides: &[(String, Value)]) -> Result<Self, ConfigErrors> {
        let mut cfg = self.clone();
        let mut issues = Vec::new();
        for (k, v) in overrides {
            cfg.apply(k, v, None, &mut issues);
        }
        if !cfg.mobility.desired_gap_explicit {
            cfg.mobility.plf.desired_gap_m = cfg.platoon.spacing_m;
        }
        issues.extend(cfg.check());
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(issues))
        }
    }

    pub fn slot_ns(&self) -> Nanos {
        self.radio.slot_ns()
    }

    pub fn cam_period_ns(&self) -> Nanos {
        time::from_secs(self.cam.period_s)
    }

    /// RBs one CAM occupies at the configured CQI.
    pub fn cam_rbs(&self) -> u32 {
        let mcs = self
            .channel
            .mcs
            .get(self.channel.cqi)
            .expect("validated CQI");
        rbs_needed(self.cam.air_bits(), mcs, self.channel.re_per_rb)
    }

    /// DRR quantum, defaulting to one CAM.
    pub fn drr_quantum_bits(&self) -> u64 {
        self.scheduler
            .drr_quantum_bits
            .unwrap_or_else(|| self.cam.air_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_is_accepted() {
        let text = r#"
            platoon.count = 1
            platoon.length = 5
            ift.kind = "one_hop"
            scheduler.kind = "max_ci"
            channel.cqi = 7
        "#;
        let cfg = ScenarioConfig::parse(text).unwrap();
        assert_eq!(cfg.platoon.count, 1);
        assert_eq!(cfg.platoon.length, 5);
        assert_eq!(cfg.ift.kind, IftKind::OneHop);
        assert_eq!(cfg.scheduler.kind, SchedulerKind::MaxCI);
        assert_eq!(cfg.channel.cqi, 7);
        assert_eq!(cfg.radio.num_rbs, 132);
        assert_eq!(cfg.radio.numerology, 3);
        assert_eq!(cfg.cam.app_bytes, 110);
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = ScenarioConfig::parse("").unwrap();
        assert_eq!(cfg.cam.period_s, 0.03);
        assert_eq!(cfg.mobility.control_period_s, 0.1);
        assert_eq!(cfg.platoon.spacing_m, 11.0);
        assert_eq!(cfg.mobility.max_accel, 2.5);
        assert_eq!(cfg.radio.carrier_ghz, 30.0);
        assert_eq!(cfg.radio.bandwidth_mhz, 200.0);
        assert_eq!(cfg.radio.shadow_sigma_db, 3.0);
        assert_eq!(cfg.cam.air_bytes(), 130);
    }

    #[test]
    fn too_many_platoons() {
        let err = ScenarioConfig::parse("platoon.count = 4").unwrap_err();
        assert!(err.mentions("platoon.count"));
        assert!(err.to_string().contains("num_platoons exceeds 3"));
    }

    #[test]
    fn cam_period_must_be_below_control_period() {
        let err = ScenarioConfig::parse("cam.period_s = 0.1").unwrap_err();
        assert!(err.mentions("cam.period_s"));
    }

    #[test]
    fn unsupported_cqi() {
        let err = ScenarioConfig::parse("channel.cqi = 4").unwrap_err();
        assert!(err.mentions("channel.cqi"));
        assert!(err.to_string().contains("unsupported CQI"));
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ScenarioConfig::parse("radio.colour = 3").unwrap_err();
        assert!(err.mentions("radio.colour"));
    }

    #[test]
    fn errors_are_collected() {
        let err = ScenarioConfig::parse(
            "platoon.count = 4\nchannel.cqi = 6\nift.kind = \"star\"\nsim.seed = -1",
        )
        .unwrap_err();
        for key in ["platoon.count", "channel.cqi", "ift.kind", "sim.seed"] {
            assert!(err.mentions(key), "missing issue for {key}: {err}");
        }
    }

    #[test]
    fn type_mismatch_names_key() {
        let err = ScenarioConfig::parse("platoon.length = \"five\"").unwrap_err();
        assert!(err.mentions("platoon.length"));
    }

    #[test]
    fn short_platoon_warns_but_parses() {
        let cfg = ScenarioConfig::parse("platoon.length = 2").unwrap();
        assert_eq!(cfg.warnings().len(), 1);
        assert!(ScenarioConfig::parse("platoon.length = 1").is_err());
    }

    #[test]
    fn grid_must_fit_bandwidth() {
        // 133 RBs x 1.44 MHz = 191.5 MHz fits; 140 x 1.44 = 201.6 does not.
        assert!(ScenarioConfig::parse("radio.num_rbs = 133").is_ok());
        let err = ScenarioConfig::parse("radio.num_rbs = 140").unwrap_err();
        assert!(err.mentions("radio.num_rbs"));
    }

    #[test]
    fn scs_follows_numerology() {
        let r = RadioParams::default();
        assert_eq!(r.subcarrier_spacing_hz(), 120_000.0);
        assert_eq!(r.rb_bandwidth_hz(), 1_440_000.0);
        assert_eq!(r.slot_ns(), 125_000);
    }

    #[test]
    fn nested_tables_are_equivalent_to_dotted_keys() {
        let a = ScenarioConfig::parse("[platoon]\nlength = 7\n[scheduler.pf]\nwindow = 4").unwrap();
        let b = ScenarioConfig::parse("platoon.length = 7\nscheduler.pf.window = 4").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn large_seed_round_trips_as_string() {
        let mut cfg = ScenarioConfig::default();
        cfg.run.seed = u64::MAX;
        assert_eq!(ScenarioConfig::parse(&cfg.emit()).unwrap(), cfg);
    }

    #[test]
    fn desired_gap_tracks_spacing_unless_set() {
        let cfg = ScenarioConfig::parse("platoon.spacing_m = 15").unwrap();
        assert_eq!(cfg.mobility.plf.desired_gap_m, 15.0);
        let cfg = ScenarioConfig::parse("platoon.spacing_m = 15\nmobility.plf.desired_gap_m = 12")
            .unwrap();
        assert_eq!(cfg.mobility.plf.desired_gap_m, 12.0);
        assert_eq!(ScenarioConfig::parse(&cfg.emit()).unwrap(), cfg);
    }
}
