//! RIS phase configuration, received SNR and achievable rate.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reflection coefficients `beta_n * exp(j * alpha_n)` of the panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisResponse {
    pub magnitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl RisResponse {
    /// Unit magnitudes with the given phases.
    pub fn unit(phases: Vec<f64>) -> Self {
        Self { magnitudes: vec![1.0; phases.len()], phases }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    fn coefficient(&self, n: usize) -> Complex64 {
        Complex64::from_polar(self.magnitudes[n], self.phases[n])
    }
}

/// Linear powers in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub p_t: f64,
    pub n_0: f64,
}

pub const DEFAULT_N0_DBM: f64 = -130.0;
pub const DEFAULT_PT_DBM: f64 = 20.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

impl LinkBudget {
    pub fn new(p_t: f64, n_0: f64) -> Result<Self> {
        if !(p_t > 0.0 && n_0 > 0.0 && p_t.is_finite() && n_0.is_finite()) {
            return Err(Error::InvalidParameter(format!("powers must be positive, got p_t={p_t} n_0={n_0}")));
        }
        Ok(Self { p_t, n_0 })
    }

    pub fn from_dbm(p_t_dbm: f64, n_0_dbm: f64) -> Result<Self> {
        Self::new(dbm_to_mw(p_t_dbm), dbm_to_mw(n_0_dbm))
    }
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self { p_t: dbm_to_mw(DEFAULT_PT_DBM), n_0: dbm_to_mw(DEFAULT_N0_DBM) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkResult {
    pub snr_linear: f64,
    pub rate_bps_hz: f64,
    pub siso_magnitude: f64,
    /// `sum_n |h_n| |g_n|`
    pub ris_magnitude: f64,
}

fn check_lengths(h: &[Complex64], g: &[Complex64]) -> Result<()> {
    if h.len() != g.len() {
        return Err(Error::InvalidParameter(format!("h has {} entries but g has {}", h.len(), g.len())));
    }
    Ok(())
}

/// Phases that rotate every cascaded path onto the direct path.
pub fn optimal_phases(h: &[Complex64], g: &[Complex64], h_siso: Complex64) -> Result<RisResponse> {
    check_lengths(h, g)?;
    let target = if h_siso == Complex64::new(0.0, 0.0) { 0.0 } else { h_siso.arg() };
    let phases = h
        .iter()
        .zip(g)
        .map(|(hn, gn)| {
            let c = hn * gn;
            if c == Complex64::new(0.0, 0.0) {
                0.0
            } else {
                target - c.arg()
            }
        })
        .collect();
    Ok(RisResponse::unit(phases))
}

/// `g^T Theta h + h_siso`
pub fn effective_channel(
    h: &[Complex64],
    g: &[Complex64],
    theta: &RisResponse,
    h_siso: Complex64,
) -> Result<Complex64> {
    check_lengths(h, g)?;
    if theta.len() != h.len() || theta.magnitudes.len() != h.len() {
        return Err(Error::InvalidParameter(format!(
            "RIS response has {} entries for {} elements",
            theta.len(),
            h.len()
        )));
    }
    let reflected: Complex64 = (0..h.len()).map(|n| g[n] * theta.coefficient(n) * h[n]).sum();
    Ok(reflected + h_siso)
}

pub fn received_snr(
    h: &[Complex64],
    g: &[Complex64],
    theta: &RisResponse,
    h_siso: Complex64,
    budget: &LinkBudget,
) -> Result<f64> {
    let e = effective_channel(h, g, theta, h_siso)?;
    Ok(budget.p_t * e.norm_sqr() / budget.n_0)
}

/// SNR under optimal phases, computed from magnitudes only.
pub fn optimal_snr(h: &[Complex64], g: &[Complex64], h_siso: Complex64, budget: &LinkBudget) -> Result<LinkResult> {
    check_lengths(h, g)?;
    let ris_magnitude: f64 = h.iter().zip(g).map(|(a, b)| a.norm() * b.norm()).sum();
    let siso_magnitude = h_siso.norm();
    let amp = ris_magnitude + siso_magnitude;
    let snr_linear = budget.p_t * amp * amp / budget.n_0;
    Ok(LinkResult { snr_linear, rate_bps_hz: achievable_rate(snr_linear)?, siso_magnitude, ris_magnitude })
}

pub fn achievable_rate(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::InvalidParameter(format!("SNR must be non-negative, got {snr}")));
    }
    Ok((1.0 + snr).log2())
}

/// Received baseband sample for symbol `s` with CN(0, n_0) noise.
pub fn simulate_symbol<R: Rng + ?Sized>(
    s: Complex64,
    h: &[Complex64],
    g: &[Complex64],
    theta: &RisResponse,
    h_siso: Complex64,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<Complex64> {
    let e = effective_channel(h, g, theta, h_siso)?;
    let normal = Normal::new(0.0, (budget.n_0 / 2.0).sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let w = Complex64::new(normal.sample(rng), normal.sample(rng));
    Ok(budget.p_t.sqrt() * e * s + w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{trial_rng, Stream};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn aligned_channels_need_no_rotation() {
        let h = [c(1.0, 0.0), c(0.5, 0.0)];
        let g = [c(2.0, 0.0), c(0.1, 0.0)];
        let t = optimal_phases(&h, &g, c(0.3, 0.0)).unwrap();
        assert!(t.phases.iter().all(|a| *a == 0.0));
        assert!(t.magnitudes.iter().all(|b| *b == 1.0));
    }

    #[test]
    fn quarter_turn_example() {
        let t = optimal_phases(&[c(1.0, 0.0)], &[c(1.0, 0.0)], c(0.0, 1.0)).unwrap();
        assert!((t.phases[0] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cases() {
        let t = optimal_phases(&[c(0.0, 1.0), c(0.0, 0.0)], &[c(1.0, 0.0), c(1.0, 1.0)], c(0.0, 0.0)).unwrap();
        assert!((t.phases[0] + PI / 2.0).abs() < 1e-15);
        assert_eq!(t.phases[1], 0.0);
        assert!(optimal_phases(&[c(1.0, 0.0)], &[], c(1.0, 0.0)).is_err());
    }

    #[test]
    fn summands_share_the_direct_phase() {
        let mut rng = trial_rng(3, 0, 0, Stream::Noise);
        let h: Vec<_> = (0..8).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let g: Vec<_> = (0..8).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let hs = c(-0.2, 0.7);
        let t = optimal_phases(&h, &g, hs).unwrap();
        for n in 0..8 {
            let term = g[n] * Complex64::from_polar(1.0, t.phases[n]) * h[n];
            let diff = (term.arg() - hs.arg()).rem_euclid(2.0 * PI);
            assert!(diff < 1e-12 || 2.0 * PI - diff < 1e-12);
        }
        let budget = LinkBudget::default();
        let general = received_snr(&h, &g, &t, hs, &budget).unwrap();
        let closed = optimal_snr(&h, &g, hs, &budget).unwrap().snr_linear;
        assert!((general / closed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn siso_only_example() {
        let budget = LinkBudget::new(1.0, 1e-13).unwrap();
        let hs = c(1e-5, 0.0);
        let snr = received_snr(&[], &[], &RisResponse::unit(vec![]), hs, &budget).unwrap();
        assert!((snr - 1000.0).abs() < 1e-9);
        assert!((achievable_rate(snr).unwrap() - 9.967).abs() < 1e-3);
    }

    #[test]
    fn zero_h_ignores_phases() {
        let budget = LinkBudget::default();
        let hs = c(3e-6, -1e-6);
        let base = budget.p_t * hs.norm_sqr() / budget.n_0;
        let h = [c(0.0, 0.0); 3];
        let g = [c(1.0, 2.0), c(-1.0, 0.5), c(0.2, 0.1)];
        for a in [0.0, 1.0, 2.5] {
            let snr = received_snr(&h, &g, &RisResponse::unit(vec![a; 3]), hs, &budget).unwrap();
            assert_eq!(snr, base);
        }
    }

    #[test]
    fn rate_examples() {
        assert_eq!(achievable_rate(0.0).unwrap(), 0.0);
        assert_eq!(achievable_rate(1.0).unwrap(), 1.0);
        assert!((achievable_rate(1000.0).unwrap() - 9.967).abs() < 1e-3);
        assert!(achievable_rate(-1e-3).is_err());
    }

    #[test]
    fn budget_validation() {
        assert!(LinkBudget::new(0.0, 1.0).is_err());
        assert!(LinkBudget::new(1.0, -1.0).is_err());
        let b = LinkBudget::default();
        assert!((b.p_t - 100.0).abs() < 1e-12 && (b.n_0 - 1e-13).abs() < 1e-25);
    }

    #[test]
    fn noiseless_symbol() {
        let budget = LinkBudget::new(4.0, 1e-300).unwrap();
        let h = [c(0.3, 0.4), c(0.0, 1.0)];
        let g = [c(1.0, 0.0), c(0.0, -2.0)];
        let hs = c(0.0, 0.5);
        let t = optimal_phases(&h, &g, hs).unwrap();
        let mut rng = trial_rng(1, 0, 0, Stream::Noise);
        let y = simulate_symbol(c(1.0, 0.0), &h, &g, &t, hs, &budget, &mut rng).unwrap();
        let want = 2.0 * (0.5 + 2.0 + 0.5);
        assert!((y.norm() - want).abs() < 1e-12);
    }

    #[test]
    fn noise_variance_matches_n0() {
        let budget = LinkBudget::new(1.0, 2.5).unwrap();
        let mut rng = trial_rng(9, 0, 0, Stream::Noise);
        let t = RisResponse::unit(vec![]);
        let n = 100_000;
        let ys: Vec<Complex64> = (0..n)
            .map(|_| simulate_symbol(c(1.0, 0.0), &[], &[], &t, c(0.7, 0.0), &budget, &mut rng).unwrap())
            .collect();
        let mean = ys.iter().sum::<Complex64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
        assert!((var / 2.5 - 1.0).abs() < 0.02, "{var}");
    }
}
