//! Shared helpers for the integration suites.
//!
//! The reference samplers here are deliberately independent of the library's
//! generator stack: a splitmix64 word stream feeds Box–Muller for Gaussians
//! and the quantile transform for Cauchys, so a sampler bug in the crate
//! cannot cancel against the same bug in the oracle.

#![allow(dead_code)] // each integration target uses a different subset

/// Minimal counter-based RNG (splitmix64).
pub struct OracleRng {
    state: u64,
}

impl OracleRng {
    pub fn new(seed: u64) -> Self {
        OracleRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller (uses one pair per two calls).
    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Standard Cauchy via the quantile transform tan(pi (u - 1/2)).
    pub fn cauchy(&mut self) -> f64 {
        (std::f64::consts::PI * (self.uniform() - 0.5)).tan()
    }
}

/// `n` draws from N(0, sigma^2) by Box–Muller.
pub fn gaussian_sample(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = OracleRng::new(seed);
    (0..n).map(|_| sigma * rng.gaussian()).collect()
}

/// `n` draws from a Cauchy with scale `sigma` by the quantile transform.
pub fn cauchy_sample(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = OracleRng::new(seed);
    (0..n).map(|_| sigma * rng.cauchy()).collect()
}

/// Two-sample Kolmogorov–Smirnov statistic: sup_x |F1(x) - F2(x)|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite sample"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite sample"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let (xa, xb) = (a[i], b[j]);
        if xa <= xb {
            i += 1;
        }
        if xb <= xa {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS p-value with the small-sample correction
/// lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * d, ne = n1 n2 / (n1 + n2),
/// and Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
pub fn ks_p_value(d: f64, n1: usize, n2: usize) -> f64 {
    let ne = (n1 as f64 * n2 as f64) / (n1 as f64 + n2 as f64);
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Convenience: KS p-value for two raw samples.
pub fn ks_test(a: &[f64], b: &[f64]) -> f64 {
    ks_p_value(ks_statistic(a, b), a.len(), b.len())
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn oracle_gaussian_has_right_moments() {
        let xs = gaussian_sample(200_000, 1.0, 7);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn oracle_cauchy_quartiles() {
        // Cauchy quartiles are at -1 and +1 exactly.
        let mut xs = cauchy_sample(200_000, 1.0, 11);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q1 = xs[xs.len() / 4];
        let q3 = xs[3 * xs.len() / 4];
        assert!((q1 + 1.0).abs() < 0.03, "q1 {q1}");
        assert!((q3 - 1.0).abs() < 0.03, "q3 {q3}");
    }

    #[test]
    fn ks_accepts_same_distribution_and_rejects_different() {
        let a = gaussian_sample(20_000, 1.0, 3);
        let b = gaussian_sample(20_000, 1.0, 4);
        assert!(ks_test(&a, &b) > 0.01);
        let c = gaussian_sample(20_000, 1.3, 5);
        assert!(ks_test(&a, &c) < 1e-6);
    }
}
