//! Compares the closed-form element gain against direct numerical integration
//! of the received power density over the element aperture.

use std::f64::consts::PI;

use ris_sim::channel::{nearfield_gain, plate_gain};
use ris_sim::geometry::Point3;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let w = 2.0 / ((1.0 - x * x) * dp * dp);
                    return (x, w);
                }
            }
        })
        .collect()
}

/// Power density of an isotropic point source seen by a plate element at
/// in-plane offset (x, z) and normal distance y, with the polarization
/// factor along x.
fn density(x: f64, z: f64, y: f64) -> f64 {
    let r2 = x * x + y * y + z * z;
    y * (x * x + y * y) / (4.0 * PI * r2 * r2 * r2.sqrt())
}

/// Composite tensor-product quadrature over [x0, x0+s] x [z0, z0+s].
fn integrate(x0: f64, z0: f64, s: f64, y: f64, cells: usize) -> f64 {
    let rule = gauss_legendre(10);
    let h = s / cells as f64;
    let mut total = 0.0;
    for i in 0..cells {
        for j in 0..cells {
            let (cx, cz) = (x0 + (i as f64 + 0.5) * h, z0 + (j as f64 + 0.5) * h);
            for (u, wu) in &rule {
                for (v, wv) in &rule {
                    total += wu * wv * density(cx + u * h / 2.0, cz + v * h / 2.0, y);
                }
            }
        }
    }
    total * h * h / 4.0
}

#[test]
fn quadrature_rule_is_exact_for_polynomials() {
    let rule = gauss_legendre(10);
    let sum: f64 = rule.iter().map(|(x, w)| w * x.powi(18)).sum();
    assert!((sum - 2.0 / 19.0).abs() < 1e-14);
}

#[test]
fn closed_form_matches_quadrature() {
    let cases = [
        (0.0, 0.0, 1.0, 0.0625),
        (0.3, -0.1, 0.5, 0.2),
        (-1.2, 0.8, 0.3, 0.05),
        (0.02, 2.0, 0.05, 0.025),
        (4.0, -6.0, 2.0, 0.0259),
    ];
    for (dx, dz, y, s) in cases {
        let closed = plate_gain(dx, dz, y, s);
        let numeric = integrate(dx - s / 2.0, dz - s / 2.0, s, y, 8);
        // far off-axis the closed form cancels O(1) terms, so tiny gains keep
        // only absolute accuracy
        assert!((closed - numeric).abs() < 1e-10 * numeric + 1e-16, "{dx} {dz} {y} {s}: {closed} vs {numeric}");
    }
}

#[test]
fn frozen_reference_values() {
    // exact aperture integrals, evaluated independently to 1e-15
    let g = nearfield_gain(&Point3::new(0.0, 0.0, 0.0), 0.0625, &Point3::new(0.0, 1.0, 0.0));
    assert!((g - 3.104_453_218e-4).abs() < 1e-13);
    let g = plate_gain(0.3, -0.1, 0.5, 0.2);
    assert!((g - 7.350_206_551_846_9e-3).abs() < 1e-15);
}

#[test]
fn infinite_plate_limit() {
    // the polarized density integrates to 1/3 over the whole plane
    let mut prev = 0.0;
    for side in [1.0, 10.0, 100.0, 1000.0] {
        let g = plate_gain(0.0, 0.0, 1.0, side);
        assert!(g > prev && g < 1.0 / 3.0, "{side}: {g}");
        prev = g;
    }
    assert!((prev - 1.0 / 3.0).abs() < 1e-3);
}
