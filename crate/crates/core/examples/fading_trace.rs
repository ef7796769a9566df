//! Samples a Jakes fading process and compares its autocorrelation with
//! `J0(2 pi f_d tau)`.
//!
//! ```text
//! cargo run --example fading_trace -- [speed_kmh]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use platoon_sim::channel::doppler_hz;
use platoon_sim::channel::fading::JakesFading;

fn bessel_j0(x: f64) -> f64 {
    let n = 1000;
    let h = std::f64::consts::PI / f64::from(n);
    (0..n)
        .map(|i| (x * ((f64::from(i) + 0.5) * h).sin()).cos())
        .sum::<f64>()
        * h
        / std::f64::consts::PI
}

fn main() {
    let kmh: f64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(36.0);
    let fd = doppler_hz(kmh / 3.6, 30.0);
    println!("doppler {fd:.1} Hz");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let links: Vec<JakesFading> = (0..100)
        .map(|_| JakesFading::new(fd, 32, &mut rng))
        .collect();

    println!("{:>8} {:>8}", "t_ms", "gain_db");
    for k in 0..20 {
        let t = f64::from(k) * 0.125e-3;
        println!("{:>8.3} {:>8.2}", t * 1e3, 10.0 * links[0].gain(t).log10());
    }

    println!();
    println!("{:>10} {:>9} {:>9}", "tau_fd", "measured", "j0");
    for step in 0..=10 {
        let tau = f64::from(step) * 0.1 / fd;
        let mut acc = 0.0;
        for f in &links {
            for k in 0..100 {
                let t = f64::from(k) * 0.01;
                let (a, b) = f.coefficient(t);
                let (c, d) = f.coefficient(t + tau);
                acc += a * c + b * d;
            }
        }
        let measured = acc / (links.len() * 100) as f64;
        let j0 = bessel_j0(2.0 * std::f64::consts::PI * fd * tau);
        println!("{:>10.1} {measured:>9.4} {j0:>9.4}", tau * fd);
    }
}
