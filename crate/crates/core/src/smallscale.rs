//! Cluster delays, powers, ray angles and initial phases.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::SphericalAngles;
use crate::largescale::{Environment, LargeScaleParams, ScenarioParams};

/// Per-ray angle offsets within a cluster, in units of the intra-cluster spread.
const RAY_OFFSETS_20: [f64; 20] = [
    0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129, 0.6797,
    -0.6797, 0.8844, -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551,
];
const RAY_OFFSETS_1: [f64; 1] = [0.0];

/// Wrapped-Gaussian azimuth scaling by cluster count.
const AZIMUTH_SCALING: [(usize, f64); 12] = [
    (4, 0.779),
    (5, 0.860),
    (8, 1.018),
    (10, 1.090),
    (11, 1.123),
    (12, 1.146),
    (14, 1.190),
    (15, 1.211),
    (16, 1.226),
    (19, 1.273),
    (20, 1.289),
    (25, 1.358),
];

/// Laplacian scaling by cluster count.
const LAPLACIAN_SCALING: [(usize, f64); 8] = [
    (8, 0.889),
    (10, 0.957),
    (11, 1.031),
    (12, 1.104),
    (15, 1.1088),
    (19, 1.184),
    (20, 1.178),
    (25, 1.282),
];

/// Smallest normalized cluster power fed into the angle mapping.
const MIN_POWER_RATIO: f64 = 1e-300;

pub fn ray_offsets(rays_per_cluster: usize) -> Result<&'static [f64]> {
    match rays_per_cluster {
        20 => Ok(&RAY_OFFSETS_20),
        1 => Ok(&RAY_OFFSETS_1),
        s => Err(Error::UnsupportedRayCount(s)),
    }
}

/// Table value for `clusters`, linearly interpolated between entries and
/// clamped at the ends. A single cluster has no spread so its scaling is moot.
fn scaling_for(table: &[(usize, f64)], clusters: usize) -> f64 {
    if clusters <= 1 {
        return 1.0;
    }
    if let Some(&(_, v)) = table.iter().find(|(c, _)| *c == clusters) {
        return v;
    }
    let (first, last) = (table[0], table[table.len() - 1]);
    if clusters < first.0 {
        return first.1;
    }
    if clusters > last.0 {
        return last.1;
    }
    let hi = table.iter().position(|(c, _)| *c > clusters).unwrap();
    let ((c0, v0), (c1, v1)) = (table[hi - 1], table[hi]);
    v0 + (v1 - v0) * (clusters - c0) as f64 / (c1 - c0) as f64
}

/// Clusters of one link with per-ray angles and phases.
///
/// Rays removed by [`filter_front_hemisphere`] keep their angles but are
/// marked inactive.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    /// Seconds, ascending, first entry zero.
    pub delays: Vec<f64>,
    /// Linear, summing to one before hemisphere filtering.
    pub powers: Vec<f64>,
    /// Degrees in [0, 180], indexed `[cluster][ray]`.
    pub ray_zenith: Vec<Vec<f64>>,
    /// Degrees in (-180, 180], panel-local frame.
    pub ray_azimuth: Vec<Vec<f64>>,
    /// Radians in (-pi, pi].
    pub phases: Vec<Vec<f64>>,
    pub active: Vec<Vec<bool>>,
}

impl ClusterSet {
    pub fn cluster_count(&self) -> usize {
        self.powers.len()
    }

    pub fn rays_per_cluster(&self) -> usize {
        self.phases.first().map_or(0, Vec::len)
    }

    /// True when every ray was removed by the hemisphere filter.
    pub fn fully_shadowed(&self) -> bool {
        self.active.iter().flatten().all(|a| !a)
    }
}

/// Delays from explicit uniforms `u` in (0, 1].
pub fn delays_from_uniforms(uniforms: &[f64], r_tau: f64, ds: f64) -> Vec<f64> {
    let mut raw: Vec<f64> = uniforms.iter().map(|u| -r_tau * ds * u.ln()).collect();
    raw.sort_by(f64::total_cmp);
    let min = raw.first().copied().unwrap_or(0.0);
    raw.iter().map(|t| t - min).collect()
}

pub fn draw_delays<R: Rng + ?Sized>(clusters: usize, r_tau: f64, ds: f64, rng: &mut R) -> Vec<f64> {
    let uniforms: Vec<f64> = (0..clusters).map(|_| 1.0 - rng.random::<f64>()).collect();
    delays_from_uniforms(&uniforms, r_tau, ds)
}

/// Normalized powers, then the Ricean LOS injection into the first cluster.
pub fn powers_from_shadowing(
    delays: &[f64],
    r_tau: f64,
    ds: f64,
    shadowing_db: &[f64],
    k_db: f64,
    los: bool,
) -> Vec<f64> {
    let raw: Vec<f64> = delays
        .iter()
        .zip(shadowing_db)
        .map(|(tau, z)| (-tau * (r_tau - 1.0) / (r_tau * ds)).exp() * 10f64.powf(-z / 10.0))
        .collect();
    let total: f64 = raw.iter().sum();
    let mut powers: Vec<f64> = raw.iter().map(|p| p / total).collect();
    if los {
        let k = 10f64.powf(k_db / 10.0);
        if k.is_infinite() {
            powers.iter_mut().for_each(|p| *p = 0.0);
            powers[0] = 1.0;
        } else {
            powers.iter_mut().for_each(|p| *p /= k + 1.0);
            powers[0] += k / (k + 1.0);
        }
    }
    powers
}

pub fn cluster_powers<R: Rng + ?Sized>(
    delays: &[f64],
    r_tau: f64,
    ds: f64,
    zeta_db: f64,
    k_db: f64,
    los: bool,
    rng: &mut R,
) -> Vec<f64> {
    let shadowing: Vec<f64> =
        delays.iter().map(|_| zeta_db * rng.sample::<f64, _>(StandardNormal)).collect();
    powers_from_shadowing(delays, r_tau, ds, &shadowing, k_db, los)
}

fn wrap_azimuth(deg: f64) -> f64 {
    let a = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if a <= -180.0 {
        180.0
    } else {
        a
    }
}

fn reflect_zenith(deg: f64) -> f64 {
    let a = deg.rem_euclid(360.0);
    if a > 180.0 {
        360.0 - a
    } else {
        a
    }
}

/// Per-ray zenith and azimuth, `[cluster][ray]`, in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct RayAngles {
    pub zenith: Vec<Vec<f64>>,
    pub azimuth: Vec<Vec<f64>>,
}

/// Cluster-center offsets before signs, jitter and LOS alignment.
fn center_spreads(
    powers: &[f64],
    spread: f64,
    scaling: f64,
    wrapped_gaussian: bool,
) -> Vec<f64> {
    let max = powers.iter().copied().fold(0.0, f64::max);
    powers
        .iter()
        .map(|p| {
            let ratio = (p / max).max(MIN_POWER_RATIO);
            if wrapped_gaussian {
                2.0 * (spread / 1.4) * (-ratio.ln()).sqrt() / scaling
            } else {
                -spread * ratio.ln() / scaling
            }
        })
        .collect()
}

/// Ray angles around the LOS direction.
///
/// Zenith is Laplacian in both environments; azimuth is Laplacian indoors and
/// wrapped Gaussian outdoors. Under LOS the first cluster is re-centered onto
/// the LOS direction. Ray offsets are randomly permuted per cluster and per
/// dimension.
#[allow(clippy::too_many_arguments)]
pub fn draw_ray_angles<R: Rng + ?Sized>(
    env: Environment,
    powers: &[f64],
    lsps: &LargeScaleParams,
    los_dir: &SphericalAngles,
    los: bool,
    params: &ScenarioParams,
    rng: &mut R,
) -> Result<RayAngles> {
    let offsets = ray_offsets(params.rays_per_cluster)?;
    let clusters = powers.len();
    let k = lsps.k_factor_db;

    let laplace_los = 1.3086 + 0.0339 * k - 0.0077 * k * k + 0.0002 * k * k * k;
    let gauss_los = 1.1035 - 0.028 * k - 0.002 * k * k + 0.0001 * k * k * k;
    let wrapped_gaussian = env == Environment::UMi;
    let mut az_scaling = if wrapped_gaussian {
        scaling_for(&AZIMUTH_SCALING, clusters)
    } else {
        scaling_for(&LAPLACIAN_SCALING, clusters)
    };
    let mut zen_scaling = scaling_for(&LAPLACIAN_SCALING, clusters);
    if los {
        az_scaling *= if wrapped_gaussian { gauss_los } else { laplace_los };
        zen_scaling *= laplace_los;
    }

    let az_base = center_spreads(powers, lsps.asa_deg, az_scaling, wrapped_gaussian);
    let zen_base = center_spreads(powers, lsps.zsa_deg, zen_scaling, false);

    let mut az_rel = Vec::with_capacity(clusters);
    let mut zen_rel = Vec::with_capacity(clusters);
    for c in 0..clusters {
        let sign_az = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let sign_zen = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let jitter_az = lsps.asa_deg / 7.0 * rng.sample::<f64, _>(StandardNormal);
        let jitter_zen = lsps.zsa_deg / 7.0 * rng.sample::<f64, _>(StandardNormal);
        az_rel.push(sign_az * az_base[c] + jitter_az);
        zen_rel.push(sign_zen * zen_base[c] + jitter_zen);
    }
    if los && clusters > 0 {
        let (a0, z0) = (az_rel[0], zen_rel[0]);
        az_rel.iter_mut().for_each(|a| *a -= a0);
        zen_rel.iter_mut().for_each(|z| *z -= z0);
        az_rel[0] = 0.0;
        zen_rel[0] = 0.0;
    }

    let mut zenith = Vec::with_capacity(clusters);
    let mut azimuth = Vec::with_capacity(clusters);
    let mut az_perm: Vec<f64> = offsets.to_vec();
    let mut zen_perm: Vec<f64> = offsets.to_vec();
    for c in 0..clusters {
        az_perm.shuffle(rng);
        zen_perm.shuffle(rng);
        let az_center = los_dir.azimuth + az_rel[c];
        let zen_center = los_dir.zenith + zen_rel[c];
        azimuth.push(
            az_perm.iter().map(|o| wrap_azimuth(az_center + params.c_asa_deg * o)).collect(),
        );
        zenith.push(
            zen_perm.iter().map(|o| reflect_zenith(zen_center + params.c_zsa_deg * o)).collect(),
        );
    }
    Ok(RayAngles { zenith, azimuth })
}

/// Uniform phases on (-pi, pi], `[cluster][ray]`.
pub fn draw_phases<R: Rng + ?Sized>(clusters: usize, rays: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..clusters)
        .map(|_| (0..rays).map(|_| PI - 2.0 * PI * rng.random::<f64>()).collect())
        .collect()
}

/// Deactivate rays arriving from behind the panel (azimuth outside [0, 180]).
///
/// Surviving powers are not renormalized; a cluster with no surviving ray
/// carries zero power.
pub fn filter_front_hemisphere(mut set: ClusterSet) -> ClusterSet {
    for (c, rays) in set.ray_azimuth.iter().enumerate() {
        for (s, az) in rays.iter().enumerate() {
            if !(0.0..=180.0).contains(az) {
                set.active[c][s] = false;
            }
        }
        if set.active[c].iter().all(|a| !a) {
            set.powers[c] = 0.0;
        }
    }
    set
}
