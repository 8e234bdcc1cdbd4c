//! Propagation condition, path loss and correlated large-scale parameters.
//!
//! Statistical constants for InH office and UMi street canyon are shipped as
//! JSON tables under `data/` and can be replaced from user configuration.

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Environment {
    InH,
    UMi,
}

impl std::fmt::Display for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Environment::InH => f.write_str("InH"),
            Environment::UMi => f.write_str("UMi"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LosState {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
}

/// Order of the large-scale parameters in the correlation matrix.
pub const LSP_ORDER: [&str; 7] = ["SF", "K", "DS", "ASA", "ASD", "ZSA", "ZSD"];

const SF: usize = 0;
const K: usize = 1;
const DS: usize = 2;
const ASA: usize = 3;
const ASD: usize = 4;
const ZSA: usize = 5;
const ZSD: usize = 6;

/// Azimuth spreads are capped at 104 deg and zenith spreads at 52 deg.
pub const AZIMUTH_SPREAD_CAP_DEG: f64 = 104.0;
pub const ZENITH_SPREAD_CAP_DEG: f64 = 52.0;

/// Mean and standard deviation of one parameter, optionally linear in
/// `log10(1 + fc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspStat {
    pub mean: f64,
    pub std: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub mean_fc_slope: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub std_fc_slope: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl LspStat {
    pub const fn constant(mean: f64, std: f64) -> Self {
        Self { mean, std, mean_fc_slope: 0.0, std_fc_slope: 0.0 }
    }

    fn resolve(&self, log_fc: f64) -> (f64, f64) {
        (
            self.mean + self.mean_fc_slope * log_fc,
            (self.std + self.std_fc_slope * log_fc).max(0.0),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LspTable {
    #[serde(rename = "lgDS")]
    pub lg_ds: LspStat,
    #[serde(rename = "lgASA")]
    pub lg_asa: LspStat,
    #[serde(rename = "lgASD")]
    pub lg_asd: LspStat,
    #[serde(rename = "lgZSA")]
    pub lg_zsa: LspStat,
    #[serde(rename = "lgZSD")]
    pub lg_zsd: LspStat,
    #[serde(rename = "K_dB")]
    pub k_db: LspStat,
    #[serde(rename = "SF_dB")]
    pub sf_db: LspStat,
}

/// Statistical constants for one environment and propagation condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub environment: Environment,
    pub los_state: LosState,
    /// Carriers below this are evaluated at the floor in the fc-dependent stats.
    #[serde(default)]
    pub fc_floor_ghz: f64,
    pub lsp: LspTable,
    pub cluster_count: usize,
    pub rays_per_cluster: usize,
    pub r_tau: f64,
    pub zeta_db: f64,
    pub c_asa_deg: f64,
    pub c_zsa_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_order: Option<Vec<String>>,
    pub correlation: [[f64; 7]; 7],
}

impl ScenarioParams {
    pub fn from_json(text: &str) -> Result<Self> {
        let params: ScenarioParams = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.cluster_count == 0 || self.rays_per_cluster == 0 {
            return bad("cluster and ray counts must be positive".into());
        }
        if !(self.r_tau > 1.0) {
            return bad(format!("r_tau must exceed 1, got {}", self.r_tau));
        }
        if let Some(order) = &self.correlation_order {
            if order.iter().map(String::as_str).ne(LSP_ORDER) {
                return bad(format!("correlation_order must be {LSP_ORDER:?}"));
            }
        }
        for i in 0..7 {
            if (self.correlation[i][i] - 1.0).abs() > 1e-12 {
                return bad(format!("correlation diagonal entry {i} is not 1"));
            }
            for j in 0..7 {
                let (a, b) = (self.correlation[i][j], self.correlation[j][i]);
                if (a - b).abs() > 1e-12 || a.abs() > 1.0 {
                    return bad(format!("correlation entry ({i},{j}) is not a symmetric coefficient"));
                }
            }
        }
        Ok(())
    }

    fn resolved_stats(&self, fc_ghz: f64) -> ([f64; 7], [f64; 7]) {
        let log_fc = (1.0 + fc_ghz.max(self.fc_floor_ghz)).log10();
        let t = &self.lsp;
        let mut means = [0.0; 7];
        let mut stds = [0.0; 7];
        for (i, stat) in [t.sf_db, t.k_db, t.lg_ds, t.lg_asa, t.lg_asd, t.lg_zsa, t.lg_zsd]
            .iter()
            .enumerate()
        {
            (means[i], stds[i]) = stat.resolve(log_fc);
        }
        (means, stds)
    }
}

/// LOS and NLOS constants for one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTables {
    pub los: ScenarioParams,
    pub nlos: ScenarioParams,
}

impl ScenarioTables {
    pub fn builtin(env: Environment) -> Self {
        let (los, nlos) = match env {
            Environment::InH => {
                (include_str!("../data/inh_los.json"), include_str!("../data/inh_nlos.json"))
            }
            Environment::UMi => {
                (include_str!("../data/umi_los.json"), include_str!("../data/umi_nlos.json"))
            }
        };
        Self {
            los: ScenarioParams::from_json(los).expect("embedded LOS table is valid"),
            nlos: ScenarioParams::from_json(nlos).expect("embedded NLOS table is valid"),
        }
    }

    pub fn get(&self, los: bool) -> &ScenarioParams {
        if los {
            &self.los
        } else {
            &self.nlos
        }
    }
}

/// One draw of the large-scale parameters of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeScaleParams {
    pub sf_db: f64,
    pub k_factor_db: f64,
    pub ds_s: f64,
    pub asa_deg: f64,
    pub asd_deg: f64,
    pub zsa_deg: f64,
    pub zsd_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinkState {
    pub los: bool,
    /// Set when the elevation rule, not the LOS probability, decided the state.
    pub forced: bool,
}

/// LOS probability as a function of horizontal distance.
pub fn los_probability(env: Environment, d2d: f64) -> Result<f64> {
    if !(d2d >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative 2D distance {d2d}")));
    }
    let p = match env {
        Environment::InH => {
            if d2d <= 18.0 {
                1.0
            } else if d2d < 37.0 {
                // ends at 0.495, just below the constant tail
                (-(d2d - 18.0) / 27.0).exp()
            } else {
                0.5
            }
        }
        Environment::UMi => {
            if d2d == 0.0 {
                1.0
            } else {
                let e = (-d2d / 36.0).exp();
                (18.0 / d2d).min(1.0) * (1.0 - e) + e
            }
        }
    };
    Ok(p)
}

/// Decide the state from one uniform draw `u`; LOS iff `u < p`.
pub fn link_state_from_uniform(p_los: f64, u: f64, forced: bool) -> LinkState {
    if forced {
        LinkState { los: true, forced: true }
    } else {
        LinkState { los: u < p_los, forced: false }
    }
}

/// Propagation condition of a link ending at an elevated endpoint.
///
/// `z_end` is the height of the receiving endpoint (the RIS for the Tx-RIS
/// link) and `z_start` that of the transmitting one. LOS is forced when
/// `z_end >= z_start`. One uniform is consumed either way so the stream stays
/// aligned across geometries.
pub fn assign_link_state<R: Rng + ?Sized>(
    env: Environment,
    d2d: f64,
    z_end: f64,
    z_start: f64,
    rng: &mut R,
) -> Result<LinkState> {
    let u: f64 = rng.random();
    let p = los_probability(env, d2d)?;
    Ok(link_state_from_uniform(p, u, z_end >= z_start))
}

/// Reference path loss in dB, shadow fading included.
pub fn path_loss_db(
    env: Environment,
    los: bool,
    d3d: f64,
    fc_ghz: f64,
    h_ut: f64,
    sf_db: f64,
) -> Result<f64> {
    if !(d3d > 0.0) {
        return Err(Error::InvalidParameter(format!("path loss needs positive distance, got {d3d}")));
    }
    if !(fc_ghz > 0.0) {
        return Err(Error::InvalidParameter(format!("path loss needs positive carrier, got {fc_ghz}")));
    }
    let ld = d3d.log10();
    let lf = fc_ghz.log10();
    let pl = match (env, los) {
        (Environment::InH, true) => 16.9 * ld + 32.8 + 20.0 * lf,
        (Environment::InH, false) => 43.3 * ld + 11.5 + 20.0 * lf,
        (Environment::UMi, true) => 22.0 * ld + 28.0 + 20.0 * lf,
        (Environment::UMi, false) => 36.7 * ld + 22.7 + 26.0 * lf - 0.3 * (h_ut - 1.5),
    };
    Ok(pl + sf_db)
}

type Mat7 = SMatrix<f64, 7, 7>;

/// Symmetric, unit-diagonal, PSD version of `m`. Negative eigenvalues are
/// clipped to zero and the diagonal is renormalized.
pub fn repair_correlation(m: &[[f64; 7]; 7]) -> Result<[[f64; 7]; 7]> {
    let mat = Mat7::from_fn(|i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(mat);
    let repaired = if eig.eigenvalues.min() >= 0.0 {
        mat
    } else {
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let full = eig.eigenvectors * Mat7::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        let d = full.diagonal().map(|v| v.sqrt());
        if d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NonPsdCorrelation);
        }
        Mat7::from_fn(|i, j| full[(i, j)] / (d[i] * d[j]))
    };
    let mut out = [[0.0; 7]; 7];
    for i in 0..7 {
        for j in 0..7 {
            out[i][j] = if i == j { 1.0 } else { repaired[(i, j)] };
        }
    }
    Ok(out)
}

fn square_root_factor(c: &[[f64; 7]; 7]) -> Result<Mat7> {
    let mat = Mat7::from_fn(|i, j| c[i][j]);
    if let Some(chol) = mat.cholesky() {
        return Ok(chol.l());
    }
    // singular after repair: fall back to V * sqrt(L)
    let eig = SymmetricEigen::new(mat);
    if eig.eigenvalues.min() < -1e-9 {
        return Err(Error::NonPsdCorrelation);
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let factor = eig.eigenvectors * Mat7::from_diagonal(&root);
    if factor.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonPsdCorrelation);
    }
    Ok(factor)
}

/// Correlated LSP sampler for one scenario table at one carrier.
#[derive(Debug, Clone)]
pub struct LspGenerator {
    means: [f64; 7],
    stds: [f64; 7],
    correlation: [[f64; 7]; 7],
    factor: Mat7,
}

impl LspGenerator {
    pub fn new(params: &ScenarioParams, fc_ghz: f64) -> Result<Self> {
        params.validate()?;
        let correlation = repair_correlation(&params.correlation)?;
        let factor = square_root_factor(&correlation)?;
        let (means, stds) = params.resolved_stats(fc_ghz);
        Ok(Self { means, stds, correlation, factor })
    }

    /// Correlation matrix actually used, after repair.
    pub fn correlation(&self) -> &[[f64; 7]; 7] {
        &self.correlation
    }

    /// Correlated standard-normal vector in [`LSP_ORDER`].
    pub fn latent<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 7] {
        let z = SVector::<f64, 7>::from_fn(|_, _| rng.sample(StandardNormal));
        let x = self.factor * z;
        x.into()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> LargeScaleParams {
        let x = self.latent(rng);
        let v = |i: usize| self.means[i] + self.stds[i] * x[i];
        LargeScaleParams {
            sf_db: v(SF),
            k_factor_db: v(K),
            ds_s: 10f64.powf(v(DS)),
            asa_deg: 10f64.powf(v(ASA)).min(AZIMUTH_SPREAD_CAP_DEG),
            asd_deg: 10f64.powf(v(ASD)).min(AZIMUTH_SPREAD_CAP_DEG),
            zsa_deg: 10f64.powf(v(ZSA)).min(ZENITH_SPREAD_CAP_DEG),
            zsd_deg: 10f64.powf(v(ZSD)).min(ZENITH_SPREAD_CAP_DEG),
        }
    }
}

/// One-shot convenience over [`LspGenerator`].
pub fn draw_lsps<R: Rng + ?Sized>(
    params: &ScenarioParams,
    fc_ghz: f64,
    rng: &mut R,
) -> Result<LargeScaleParams> {
    Ok(LspGenerator::new(params, fc_ghz)?.draw(rng))
}
