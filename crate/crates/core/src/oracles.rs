//! Brute-force cross-checks for the near-field gain and the phase optimizer.
//!
//! These share no code path with the quantities they check beyond the
//! single-plate gain formula, which the subdivision oracle applies to many
//! smaller plates.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::plate_gain;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::largescale::{path_loss_db, Environment};
use crate::link::{optimal_snr, LinkBudget};

/// Cost guard for the exhaustive phase search.
pub const MAX_GRID_ELEMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubdivisionSpec {
    k: usize,
}

impl SubdivisionSpec {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("subdivision needs k >= 2, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Sum of the plate gains of the k x k sub-plates of a `d` x `d` element.
pub fn nearfield_gain_subdivided(center: &Point3, d: f64, rx: &Point3, spec: SubdivisionSpec) -> f64 {
    let k = spec.k;
    let sub = d / k as f64;
    let y = (center.y - rx.y).abs();
    let mut total = 0.0;
    for i in 0..k {
        let cx = center.x - d / 2.0 + (i as f64 + 0.5) * sub;
        for j in 0..k {
            let cz = center.z - d / 2.0 + (j as f64 + 0.5) * sub;
            total += plate_gain(cx - rx.x, cz - rx.z, y, sub);
        }
    }
    total
}

/// Largest SNR over a uniform grid of `grid_points` phases per element.
pub fn phase_grid_search(
    h: &[Complex64],
    g: &[Complex64],
    h_siso: Complex64,
    grid_points: usize,
    budget: &LinkBudget,
) -> Result<f64> {
    if h.len() != g.len() {
        return Err(Error::InvalidParameter(format!("h has {} entries but g has {}", h.len(), g.len())));
    }
    if h.len() > MAX_GRID_ELEMENTS {
        return Err(Error::TooManyElements(h.len()));
    }
    if grid_points == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    let grid: Vec<Complex64> =
        (0..grid_points).map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / grid_points as f64)).collect();
    let cascade: Vec<Complex64> = h.iter().zip(g).map(|(a, b)| a * b).collect();

    fn search(cascade: &[Complex64], grid: &[Complex64], partial: Complex64) -> f64 {
        match cascade.split_first() {
            None => partial.norm_sqr(),
            Some((c, rest)) => grid.iter().map(|p| search(rest, grid, partial + c * p)).fold(0.0, f64::max),
        }
    }

    Ok(budget.p_t * search(&cascade, &grid, h_siso) / budget.n_0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> OracleCheck {
    OracleCheck { name, passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(rng.random_range(0.1..1.0), rng.random_range(-PI..PI))
}

/// Self-test run by the `validate` command.
pub fn validate() -> Vec<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::new();

    let cases = [
        (Environment::InH, true, 10.0, 57.30),
        (Environment::UMi, true, 100.0, 79.60),
        (Environment::UMi, false, 100.0, 105.99),
    ];
    let worst = cases
        .iter()
        .map(|&(env, los, d, want)| (path_loss_db(env, los, d, 2.4, 1.5, 0.0).unwrap_or(f64::NAN) - want).abs())
        .fold(0.0, f64::max);
    out.push(check("path loss reference values", worst < 0.01, format!("max deviation {worst:.2e} dB")));

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(0.01..0.1);
        let center = Point3::new(rng.random_range(-1.0..1.0), 0.0, rng.random_range(-1.0..1.0));
        let rx = Point3::new(rng.random_range(-2.0..2.0), rng.random_range(0.05..5.0), rng.random_range(-2.0..2.0));
        let whole = plate_gain(center.x - rx.x, center.z - rx.z, rx.y, d);
        for k in [2, 4, 8] {
            let spec = SubdivisionSpec { k };
            worst = worst.max(rel(nearfield_gain_subdivided(&center, d, &rx, spec), whole));
        }
    }
    out.push(check("near-field additivity", worst < 1e-10, format!("max relative error {worst:.2e}")));

    let d = 0.0625;
    let ratios: Vec<f64> = [10.0, 30.0, 100.0]
        .iter()
        .map(|m| plate_gain(0.0, 0.0, m * d, d) * 4.0 * PI * m * m)
        .collect();
    let converging = (ratios[0] - 1.0).abs() > (ratios[1] - 1.0).abs() && (ratios[1] - 1.0).abs() > (ratios[2] - 1.0).abs();
    out.push(check(
        "near-field far limit",
        (0.99..=1.01).contains(&ratios[0]) && converging,
        format!("ratios {:.6} {:.6} {:.6}", ratios[0], ratios[1], ratios[2]),
    ));

    let budget = LinkBudget::new(1.0, 1.0).expect("unit budget");
    let mut worst = 0.0f64;
    for n in 1..=2 {
        for _ in 0..20 {
            let h: Vec<_> = (0..n).map(|_| random_complex(&mut rng)).collect();
            let g: Vec<_> = (0..n).map(|_| random_complex(&mut rng)).collect();
            let hs = random_complex(&mut rng);
            let best = optimal_snr(&h, &g, hs, &budget).map(|r| r.snr_linear).unwrap_or(f64::NAN);
            let grid = phase_grid_search(&h, &g, hs, 360, &budget).unwrap_or(f64::NAN);
            worst = worst.max(rel(grid, best));
        }
    }
    out.push(check("phase optimality", worst < 1e-3, format!("max gap to grid maximum {worst:.2e}")));

    out
}
