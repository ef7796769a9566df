//! Fixed-CQI link abstraction: CQI to MCS mapping, RB demand per message,
//! per-RB block error probability and message decoding.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Resource elements per RB: 12 subcarriers x 14 OFDM symbols.
pub const DEFAULT_RE_PER_RB: u32 = 168;

/// Default transition width of the BLER curve, dB.
pub const DEFAULT_BLER_SLOPE_DB: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct McsEntry {
    pub cqi: u8,
    /// Bits per modulation symbol.
    pub modulation_order: u8,
    pub code_rate: f64,
    /// Information bits per resource element.
    pub efficiency: f64,
    /// SINR at which the per-RB error probability is 10 %, dB.
    pub sinr_threshold_db: f64,
    /// Width of the logistic error curve, dB.
    pub bler_slope_db: f64,
}

// 4-bit CQI table (QPSK 1..6, 16QAM 7..9, 64QAM 10..15) with AWGN 10 % BLER
// SINR points.
const BUILTIN: [(u8, u8, f64, f64); 15] = [
    (1, 2, 0.1523, -6.7),
    (2, 2, 0.2344, -4.7),
    (3, 2, 0.3770, -2.3),
    (4, 2, 0.6016, 0.2),
    (5, 2, 0.8770, 2.4),
    (6, 2, 1.1758, 4.3),
    (7, 4, 1.4766, 5.9),
    (8, 4, 1.9141, 8.1),
    (9, 4, 2.4063, 10.3),
    (10, 6, 2.7305, 11.7),
    (11, 6, 3.3223, 14.1),
    (12, 6, 3.9023, 16.3),
    (13, 6, 4.5234, 18.7),
    (14, 6, 5.1152, 21.0),
    (15, 6, 5.5547, 22.7),
];

fn modulation_for(cqi: u8) -> u8 {
    BUILTIN.iter().find(|e| e.0 == cqi).map_or(2, |e| e.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl Default for McsTable {
    fn default() -> Self {
        let entries = BUILTIN
            .iter()
            .map(|&(cqi, m, eff, thr)| McsEntry {
                cqi,
                modulation_order: m,
                code_rate: eff / m as f64,
                efficiency: eff,
                sinr_threshold_db: thr,
                bler_slope_db: DEFAULT_BLER_SLOPE_DB,
            })
            .collect();
        Self { entries }
    }
}

impl McsTable {
    /// Builds a table, rejecting rows that break monotonicity in CQI.
    pub fn new(mut entries: Vec<McsEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.cqi);
        for (n, pair) in entries.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            let reason = if a.cqi == b.cqi {
                Some(format!("CQI {} listed twice", a.cqi))
            } else if b.efficiency <= a.efficiency {
                Some(format!("efficiency not increasing at CQI {}", b.cqi))
            } else if b.sinr_threshold_db <= a.sinr_threshold_db {
                Some(format!("SINR threshold not increasing at CQI {}", b.cqi))
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(Error::McsTable {
                    line: n + 2,
                    reason,
                });
            }
        }
        for e in &entries {
            if e.efficiency.is_nan()
                || e.efficiency <= 0.0
                || e.bler_slope_db.is_nan()
                || e.bler_slope_db <= 0.0
            {
                return Err(Error::McsTable {
                    line: 0,
                    reason: format!("CQI {}: efficiency and slope must be positive", e.cqi),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Parses rows of `cqi efficiency threshold_db slope_db`, separated by
    /// whitespace or commas. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let bad = |reason: String| Error::McsTable {
                line: n + 1,
                reason,
            };
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 columns, found {}", fields.len())));
            }
            let cqi: u8 = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad CQI `{}`", fields[0])))?;
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| bad(format!("bad number `{s}`")))
            };
            let efficiency = num(fields[1])?;
            let modulation_order = modulation_for(cqi);
            entries.push(McsEntry {
                cqi,
                modulation_order,
                code_rate: efficiency / modulation_order as f64,
                efficiency,
                sinr_threshold_db: num(fields[2])?,
                bler_slope_db: num(fields[3])?,
            });
        }
        if entries.is_empty() {
            return Err(Error::McsTable {
                line: 0,
                reason: "no rows".into(),
            });
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# cqi efficiency threshold_db slope_db\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{} {} {} {}\n",
                e.cqi, e.efficiency, e.sinr_threshold_db, e.bler_slope_db
            ));
        }
        out
    }

    pub fn get(&self, cqi: u8) -> Option<&McsEntry> {
        self.entries.iter().find(|e| e.cqi == cqi)
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }
}

/// RBs needed to carry `payload_bits` at this MCS.
pub fn rbs_needed(payload_bits: u64, mcs: &McsEntry, re_per_rb: u32) -> u32 {
    if payload_bits == 0 {
        return 0;
    }
    let per_rb = re_per_rb as f64 * mcs.efficiency;
    let bits = payload_bits as f64;
    let mut n = (bits / per_rb).ceil();
    // Guard against the quotient landing a hair above an exact integer.
    if n > 1.0 && (n - 1.0) * per_rb >= bits * (1.0 - 1e-12) {
        n -= 1.0;
    }
    n as u32
}

/// Per-RB error probability at `sinr_db`:
/// `1 / (1 + 9 exp((sinr - threshold) / slope))`, which is 0.1 at the
/// threshold and tends to 1 and 0 at the extremes.
pub fn rb_error_probability(sinr_db: f64, mcs: &McsEntry) -> f64 {
    let x = (sinr_db - mcs.sinr_threshold_db) / mcs.bler_slope_db;
    1.0 / (1.0 + 9.0 * x.exp())
}

/// Decodes one message carried on `granted_rbs` RBs. Every RB must pass an
/// independent Bernoulli trial. `per_rb_sinr_db` holds one SINR per granted
/// RB, or a single value applied to all of them.
pub fn decode_cam<R: Rng + ?Sized>(
    granted_rbs: usize,
    demand_rbs: u32,
    per_rb_sinr_db: &[f64],
    mcs: &McsEntry,
    rng: &mut R,
) -> Result<bool> {
    if granted_rbs < demand_rbs as usize {
        return Err(Error::GrantTooSmall {
            granted: granted_rbs,
            needed: demand_rbs,
        });
    }
    let mut ok = true;
    for rb in 0..granted_rbs {
        let sinr = match per_rb_sinr_db {
            [single] => *single,
            many => many[rb],
        };
        let p_err = rb_error_probability(sinr, mcs);
        let u: f64 = rng.random();
        if u < p_err {
            ok = false;
        }
    }
    Ok(ok)
}
