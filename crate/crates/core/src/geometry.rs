//! Positions, panel layout and line-of-sight angles.
//!
//! All coordinates are global Cartesian meters. The RIS lies in a plane of
//! constant `y` and faces either `+y` or `-y`. Angles at the panel use a
//! panel-local frame: zenith is measured from global `+z`, azimuth from the
//! panel-local x-axis, with the boresight direction at azimuth 90 deg.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light used for every wavelength computation, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sub(&self, other: &Point3) -> Point3 {
        Point3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Euclidean distance in meters.
pub fn distance_3d(a: &Point3, b: &Point3) -> f64 {
    a.sub(b).norm()
}

/// Horizontal (xy-plane) distance in meters.
pub fn distance_2d(a: &Point3, b: &Point3) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boresight {
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl Boresight {
    fn sign(self) -> f64 {
        match self {
            Boresight::PlusY => 1.0,
            Boresight::MinusY => -1.0,
        }
    }
}

/// Square RIS on a plane of constant `y`, elements laid out row-major from the
/// bottom-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelGeometry {
    n_elements: usize,
    side: usize,
    spacing: f64,
    first_element: Point3,
    boresight: Boresight,
}

impl PanelGeometry {
    pub fn new(
        n_elements: usize,
        spacing: f64,
        first_element: Point3,
        boresight: Boresight,
    ) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidGeometry("panel needs at least one element".into()));
        }
        let side = (n_elements as f64).sqrt().round() as usize;
        if side * side != n_elements {
            return Err(Error::InvalidGeometry(format!(
                "element count {n_elements} is not a perfect square"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGeometry(format!("spacing must be positive, got {spacing}")));
        }
        if !first_element.is_finite() {
            return Err(Error::InvalidGeometry("non-finite element position".into()));
        }
        Ok(Self { n_elements, side, spacing, first_element, boresight })
    }

    /// Panel whose geometric center sits at `center`.
    pub fn centered(
        center: Point3,
        n_elements: usize,
        spacing: f64,
        boresight: Boresight,
    ) -> Result<Self> {
        let side = (n_elements as f64).sqrt().round();
        let half = 0.5 * (side - 1.0) * spacing;
        let first = Point3::new(center.x - half, center.y, center.z - half);
        Self::new(n_elements, spacing, first, boresight)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Elements per row (and per column).
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn first_element(&self) -> Point3 {
        self.first_element
    }

    pub fn boresight(&self) -> Boresight {
        self.boresight
    }

    pub fn center(&self) -> Point3 {
        let half = 0.5 * (self.side as f64 - 1.0) * self.spacing;
        Point3::new(self.first_element.x + half, self.first_element.y, self.first_element.z + half)
    }

    /// Offset of element `idx` (zero-based) from the first element along x and z.
    pub fn element_offset(&self, idx: usize) -> (f64, f64) {
        let col = idx % self.side;
        let row = idx / self.side;
        (self.spacing * col as f64, self.spacing * row as f64)
    }

    /// Signed distance of `p` from the panel plane along the boresight.
    pub fn boresight_offset(&self, p: &Point3) -> f64 {
        self.boresight.sign() * (p.y - self.first_element.y)
    }
}

/// Carrier frequency and the derived wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierConfig {
    fc_ghz: f64,
    lambda: f64,
}

impl CarrierConfig {
    pub fn new(fc_ghz: f64) -> Result<Self> {
        if !(fc_ghz > 0.0 && fc_ghz.is_finite()) {
            return Err(Error::InvalidParameter(format!("carrier must be positive, got {fc_ghz} GHz")));
        }
        if !(0.5..=7.0).contains(&fc_ghz) {
            log::warn!("carrier {fc_ghz} GHz is outside the 0.5-7 GHz range the model targets");
        }
        Ok(Self { fc_ghz, lambda: SPEED_OF_LIGHT / (fc_ghz * 1e9) })
    }

    pub fn fc_ghz(&self) -> f64 {
        self.fc_ghz
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Direction in degrees; zenith in [0, 180], azimuth in (-180, 180].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalAngles {
    pub zenith: f64,
    pub azimuth: f64,
}

/// Direction from the panel center towards `source`, in the panel-local frame.
pub fn los_angles(panel: &PanelGeometry, source: &Point3) -> Result<SphericalAngles> {
    let delta = source.sub(&panel.center());
    let r = delta.norm();
    if r == 0.0 {
        return Err(Error::CoincidentPoints("source and panel center"));
    }
    let s = panel.boresight.sign();
    let zenith = (delta.z / r).clamp(-1.0, 1.0).acos().to_degrees();
    let mut azimuth = (s * delta.y).atan2(s * delta.x).to_degrees();
    if azimuth <= -180.0 {
        azimuth += 360.0;
    }
    Ok(SphericalAngles { zenith, azimuth })
}

/// Element positions, row-major from the bottom-left corner.
pub fn element_positions(panel: &PanelGeometry) -> Vec<Point3> {
    let r1 = panel.first_element;
    (0..panel.n_elements)
        .map(|idx| {
            let (dx, dz) = panel.element_offset(idx);
            Point3::new(r1.x + dx, r1.y, r1.z + dz)
        })
        .collect()
}

/// Far-field boundary `N * lambda / 2` of a square RIS.
pub fn fraunhofer_distance(panel: &PanelGeometry, carrier: &CarrierConfig) -> f64 {
    panel.n_elements as f64 * carrier.lambda / 2.0
}
