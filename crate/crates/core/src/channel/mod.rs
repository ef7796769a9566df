//! Per-link signal quality: free-space-style path loss, static log-normal
//! shadowing, Jakes Doppler fading and thermal noise, plus the fixed-CQI link
//! abstraction in [`mcs`].

pub mod fading;
pub mod mcs;

pub use fading::JakesFading;
pub use mcs::{decode_cam, rb_error_probability, rbs_needed, McsEntry, McsTable};

use crate::config::RadioParams;
use crate::error::{Error, Result};
use crate::ids::NodeId;

/// Speed of light used for Doppler, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Thermal noise power spectral density, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// `PL = 32.4 + 20 log10(d) + 20 log10(f_c)` with `d` in metres and `f_c` in GHz.
pub fn path_loss_db(distance_m: f64, carrier_ghz: f64) -> Result<f64> {
    if distance_m.is_nan() || distance_m <= 0.0 {
        return Err(Error::NonPositiveDistance(distance_m));
    }
    if carrier_ghz.is_nan() || carrier_ghz <= 0.0 {
        return Err(Error::NonPositiveFrequency(carrier_ghz));
    }
    Ok(32.4 + 20.0 * distance_m.log10() + 20.0 * carrier_ghz.log10())
}

/// Maximum Doppler shift `v f_c / c` in Hz.
pub fn doppler_hz(speed_mps: f64, carrier_ghz: f64) -> f64 {
    speed_mps.abs() * carrier_ghz * 1e9 / SPEED_OF_LIGHT
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// State of one directed radio link.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub tx: NodeId,
    pub rx: NodeId,
    pub distance_m: f64,
    pub shadowing_db: f64,
    /// `None` disables small-scale fading (unit gain).
    pub fading: Option<JakesFading>,
    pub last_sinr_db: f64,
}

impl LinkState {
    pub fn new(tx: NodeId, rx: NodeId, distance_m: f64, shadowing_db: f64) -> Self {
        Self {
            tx,
            rx,
            distance_m,
            shadowing_db,
            fading: None,
            last_sinr_db: f64::NAN,
        }
    }

    pub fn with_fading(mut self, fading: JakesFading) -> Self {
        self.fading = Some(fading);
        self
    }

    pub fn doppler_hz(&self) -> f64 {
        self.fading.as_ref().map_or(0.0, |f| f.doppler_hz())
    }

    /// Linear power gain of the fading process at `t_s` seconds.
    pub fn fading_gain(&self, t_s: f64) -> f64 {
        self.fading.as_ref().map_or(1.0, |f| f.gain(t_s))
    }
}

/// Power spectral density integrated over one RB plus the receiver noise figure.
pub fn noise_floor_per_rb_dbm(radio: &RadioParams) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * radio.rb_bandwidth_hz().log10() + radio.noise_figure_db
}

/// SINR of `link` at time `t_s`. Pass `f64::NEG_INFINITY` for no interference.
pub fn link_sinr_db(
    link: &LinkState,
    radio: &RadioParams,
    t_s: f64,
    interference_dbm: f64,
) -> Result<f64> {
    let pl = path_loss_db(link.distance_m, radio.carrier_ghz)?;
    let rx_dbm = radio.tx_power_dbm + 2.0 * radio.antenna_gain_dbi - pl - link.shadowing_db
        + 10.0 * link.fading_gain(t_s).log10();
    let noise_dbm = noise_floor_per_rb_dbm(radio);
    if interference_dbm == f64::NEG_INFINITY {
        return Ok(rx_dbm - noise_dbm);
    }
    let denom = dbm_to_mw(noise_dbm) + dbm_to_mw(interference_dbm);
    Ok(rx_dbm - mw_to_dbm(denom))
}

/// Same as [`link_sinr_db`] but records the result on the link.
pub fn update_link_sinr(link: &mut LinkState, radio: &RadioParams, t_s: f64) -> Result<f64> {
    let sinr = link_sinr_db(link, radio, t_s, f64::NEG_INFINITY)?;
    link.last_sinr_db = sinr;
    Ok(sinr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::VehicleId;
    use approx::assert_abs_diff_eq;

    fn link(d: f64) -> LinkState {
        LinkState::new(
            VehicleId::new(0, 0).into(),
            VehicleId::new(0, 4).into(),
            d,
            0.0,
        )
    }

    #[test]
    fn path_loss_reference_points() {
        // 32.4 + 20 log10(44) + 20 log10(30) evaluated by hand: 94.8106...
        let expected = 32.4 + 20.0 * 44f64.log10() + 20.0 * 30f64.log10();
        assert_abs_diff_eq!(expected, 94.81, epsilon = 0.01);
        assert_abs_diff_eq!(path_loss_db(44.0, 30.0).unwrap(), 94.81, epsilon = 0.01);
        assert_abs_diff_eq!(path_loss_db(1.0, 1.0).unwrap(), 32.40, epsilon = 1e-12);
        let step = path_loss_db(88.0, 30.0).unwrap() - path_loss_db(44.0, 30.0).unwrap();
        assert_abs_diff_eq!(step, 20.0 * 2f64.log10(), epsilon = 1e-12);
        assert_abs_diff_eq!(step, 6.02, epsilon = 0.005);
    }

    #[test]
    fn path_loss_rejects_bad_inputs() {
        assert!(matches!(
            path_loss_db(0.0, 30.0),
            Err(Error::NonPositiveDistance(_))
        ));
        assert!(matches!(
            path_loss_db(-3.0, 30.0),
            Err(Error::NonPositiveDistance(_))
        ));
        assert!(matches!(
            path_loss_db(10.0, 0.0),
            Err(Error::NonPositiveFrequency(_))
        ));
    }

    #[test]
    fn doppler_at_ten_metres_per_second() {
        assert_abs_diff_eq!(doppler_hz(10.0, 30.0), 1000.0, epsilon = 1e-9);
    }

    #[test]
    fn link_budget_at_44_m() {
        let radio = RadioParams::default();
        // -174 + 10 log10(1.44e6) + 13 = -99.416 dBm
        assert_abs_diff_eq!(noise_floor_per_rb_dbm(&radio), -99.4166, epsilon = 1e-3);
        let sinr = link_sinr_db(&link(44.0), &radio, 0.0, f64::NEG_INFINITY).unwrap();
        // 23 + 10 - 94.8117 + 99.4166
        assert_abs_diff_eq!(sinr, 37.605, epsilon = 1e-3);
        let far = link_sinr_db(&link(88.0), &radio, 0.0, f64::NEG_INFINITY).unwrap();
        assert_abs_diff_eq!(sinr - far, 6.0206, epsilon = 1e-3);
    }

    #[test]
    fn interference_combines_in_linear_domain() {
        let radio = RadioParams::default();
        let l = link(44.0);
        let snr = link_sinr_db(&l, &radio, 0.0, f64::NEG_INFINITY).unwrap();
        let noise = noise_floor_per_rb_dbm(&radio);
        // Interference equal to the noise floor costs 3.01 dB.
        let sinr = link_sinr_db(&l, &radio, 0.0, noise).unwrap();
        assert_abs_diff_eq!(snr - sinr, 10.0 * 2f64.log10(), epsilon = 1e-9);
    }

    #[test]
    fn shadowing_subtracts() {
        let radio = RadioParams::default();
        let mut l = link(44.0);
        let base = update_link_sinr(&mut l, &radio, 0.0).unwrap();
        l.shadowing_db = 3.0;
        let shadowed = update_link_sinr(&mut l, &radio, 0.0).unwrap();
        assert_abs_diff_eq!(base - shadowed, 3.0, epsilon = 1e-12);
        assert_eq!(l.last_sinr_db, shadowed);
    }
}
