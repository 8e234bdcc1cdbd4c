//! RIS element pattern and planar-array steering vectors.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{PanelGeometry, SphericalAngles};

pub const DEFAULT_Q: f64 = 0.285;

/// `cos^q` power pattern of a single RIS element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPattern {
    pub q: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        Self { q: DEFAULT_Q }
    }
}

impl ElementPattern {
    pub fn peak_gain(&self) -> f64 {
        2.0 * (2.0 * self.q + 1.0)
    }
}

/// Linear element gain for a ray at `zenith` degrees.
pub fn element_gain(zenith: f64, pattern: &ElementPattern) -> f64 {
    if zenith <= 0.0 || zenith >= 180.0 {
        return 0.0;
    }
    pattern.peak_gain() * zenith.to_radians().sin().powf(2.0 * pattern.q)
}

/// Which phase progression the steering vector uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteeringModel {
    /// `x * cos(zenith) + z * sin(zenith) * cos(azimuth)`.
    #[default]
    Printed,
    /// `x * sin(zenith) * cos(azimuth) + z * cos(zenith)`.
    Conventional,
}

impl SteeringModel {
    /// Phase slopes (rad/m) along the panel x and z axes.
    fn slopes(self, angles: &SphericalAngles, lambda: f64) -> (f64, f64) {
        let k = 2.0 * PI / lambda;
        let (st, ct) = angles.zenith.to_radians().sin_cos();
        let cp = angles.azimuth.to_radians().cos();
        match self {
            SteeringModel::Printed => (k * ct, k * st * cp),
            SteeringModel::Conventional => (k * st * cp, k * ct),
        }
    }
}

/// Unit-modulus array response, first entry exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Vec<Complex64>);

impl SteeringVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Separable per-column and per-row phasors of a square panel.
pub(crate) fn axis_phasors(
    panel: &PanelGeometry,
    angles: &SphericalAngles,
    lambda: f64,
    model: SteeringModel,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (kx, kz) = model.slopes(angles, lambda);
    let d = panel.spacing();
    // geometric progression; drift over a few hundred steps stays near 1e-14
    let phasors = |slope: f64| -> Vec<Complex64> {
        let step = Complex64::from_polar(1.0, slope * d);
        let mut p = Complex64::new(1.0, 0.0);
        (0..panel.side())
            .map(|_| {
                let cur = p;
                p *= step;
                cur
            })
            .collect()
    };
    (phasors(kx), phasors(kz))
}

/// Add `coef * a(angles)` into `acc` (row-major, length N).
pub(crate) fn accumulate_steering(
    acc: &mut [Complex64],
    coef: Complex64,
    panel: &PanelGeometry,
    angles: &SphericalAngles,
    lambda: f64,
    model: SteeringModel,
) {
    let (cols, rows) = axis_phasors(panel, angles, lambda, model);
    let side = panel.side();
    for (r, row) in rows.iter().enumerate() {
        let rc = coef * row;
        for (slot, col) in acc[r * side..(r + 1) * side].iter_mut().zip(&cols) {
            *slot += rc * col;
        }
    }
}

pub fn steering_vector(
    panel: &PanelGeometry,
    angles: &SphericalAngles,
    lambda: f64,
    model: SteeringModel,
) -> SteeringVector {
    let mut v = vec![Complex64::new(0.0, 0.0); panel.n_elements()];
    accumulate_steering(&mut v, Complex64::new(1.0, 0.0), panel, angles, lambda, model);
    SteeringVector(v)
}
