//! Rayleigh fading with a Jakes Doppler spectrum.
//!
//! Sum-of-sinusoids with independent in-phase and quadrature oscillator sets
//! and randomized arrival angles:
//!
//! ```text
//! a_n   = (2 pi n - pi + theta) / (4 M),      n = 1..M
//! X_c(t) = sqrt(2/M) sum_n cos(w_d t cos a_n + phi_n)
//! X_s(t) = sqrt(2/M) sum_n cos(w_d t sin a_n + psi_n)
//! h(t)   = (X_c + j X_s) / sqrt(2)
//! ```
//!
//! The time-average of `|h|^2` is exactly one for any realization, and the
//! autocorrelation of `h` approaches `J0(w_d tau)` as `M` grows.

use std::f64::consts::PI;

use rand::Rng;

pub const DEFAULT_OSCILLATORS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct JakesFading {
    doppler_hz: f64,
    /// Angular frequencies (rad/s) of the in-phase oscillators.
    in_phase_freq: Vec<f64>,
    in_phase_offset: Vec<f64>,
    quadrature_freq: Vec<f64>,
    quadrature_offset: Vec<f64>,
}

impl JakesFading {
    pub fn new<R: Rng + ?Sized>(doppler_hz: f64, oscillators: usize, rng: &mut R) -> Self {
        let m = oscillators.max(1);
        let w_d = 2.0 * PI * doppler_hz.max(0.0);
        let theta = rng.random_range(-PI..PI);
        let mut in_phase_freq = Vec::with_capacity(m);
        let mut quadrature_freq = Vec::with_capacity(m);
        for n in 1..=m {
            let angle = (2.0 * PI * n as f64 - PI + theta) / (4.0 * m as f64);
            in_phase_freq.push(w_d * angle.cos());
            quadrature_freq.push(w_d * angle.sin());
        }
        let in_phase_offset = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
        let quadrature_offset = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
        Self {
            doppler_hz: doppler_hz.max(0.0),
            in_phase_freq,
            in_phase_offset,
            quadrature_freq,
            quadrature_offset,
        }
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    pub fn oscillators(&self) -> usize {
        self.in_phase_freq.len()
    }

    /// Complex channel coefficient `(re, im)` at `t_s` seconds.
    pub fn coefficient(&self, t_s: f64) -> (f64, f64) {
        let scale = (1.0 / self.oscillators() as f64).sqrt();
        let sum = |freq: &[f64], offset: &[f64]| -> f64 {
            freq.iter()
                .zip(offset)
                .map(|(w, p)| (w * t_s + p).cos())
                .sum::<f64>()
        };
        (
            scale * sum(&self.in_phase_freq, &self.in_phase_offset),
            scale * sum(&self.quadrature_freq, &self.quadrature_offset),
        )
    }

    /// Power gain `|h(t)|^2`.
    pub fn gain(&self, t_s: f64) -> f64 {
        let (re, im) = self.coefficient(t_s);
        re * re + im * im
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_for_a_given_stream() {
        let a = JakesFading::new(1000.0, 16, &mut ChaCha8Rng::seed_from_u64(3));
        let b = JakesFading::new(1000.0, 16, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.gain(0.0123), b.gain(0.0123));
    }

    #[test]
    fn zero_doppler_is_static() {
        let f = JakesFading::new(0.0, 16, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(f.gain(0.0), f.gain(12.5));
    }

    #[test]
    fn gain_is_non_negative() {
        let f = JakesFading::new(500.0, 8, &mut ChaCha8Rng::seed_from_u64(1));
        assert!((0..1000).all(|k| f.gain(k as f64 * 1e-4) >= 0.0));
    }
}
