//! Monte Carlo driver, figure presets and result writers.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{ElementPattern, SteeringModel, DEFAULT_Q};
use crate::channel::{ris_rx_nearfield, select_field_regime, ChannelModel, FieldRegime};
use crate::error::{Error, Result};
use crate::geometry::{distance_3d, fraunhofer_distance, Boresight, CarrierConfig, PanelGeometry, Point3};
use crate::largescale::{Environment, ScenarioTables};
use crate::link::{achievable_rate, optimal_snr, LinkBudget, DEFAULT_N0_DBM, DEFAULT_PT_DBM};
use crate::rng::{trial_rng, Stream};

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_SEED: u64 = 1;

/// Candidate RIS centers; every combination of the three lists is simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisGrid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl RisGrid {
    pub fn single(p: Point3) -> Self {
        Self { x: vec![p.x], y: vec![p.y], z: vec![p.z] }
    }

    pub fn points(&self) -> Vec<Point3> {
        let mut out = Vec::with_capacity(self.x.len() * self.y.len() * self.z.len());
        for &x in &self.x {
            for &y in &self.y {
                for &z in &self.z {
                    out.push(Point3::new(x, y, z));
                }
            }
        }
        out
    }
}

fn default_boresight() -> Boresight {
    Boresight::MinusY
}
fn default_pt() -> f64 {
    DEFAULT_PT_DBM
}
fn default_n0() -> f64 {
    DEFAULT_N0_DBM
}
fn default_trials() -> usize {
    DEFAULT_TRIALS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_q() -> f64 {
    DEFAULT_Q
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub environment: Environment,
    pub fc_ghz: f64,
    pub tx: Point3,
    pub rx: Point3,
    pub ris: RisGrid,
    #[serde(default = "default_boresight")]
    pub boresight: Boresight,
    /// Defaults to half a wavelength.
    #[serde(default)]
    pub element_spacing_m: Option<f64>,
    /// Element counts to sweep; 0 is the link without a RIS.
    pub n_elements: Vec<usize>,
    #[serde(default = "default_pt")]
    pub p_t_dbm: f64,
    #[serde(default = "default_n0")]
    pub n0_dbm: f64,
    /// Extra RIS-free rows at these transmit powers.
    #[serde(default)]
    pub no_ris_baseline_p_t_dbm: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub regime_override: Option<FieldRegime>,
    #[serde(default)]
    pub steering: SteeringModel,
    #[serde(default = "default_q")]
    pub element_q: f64,
    #[serde(default)]
    pub unity_element_gain: bool,
    /// Reuse the same trial seeds at every RIS position.
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
    /// Replaces the built-in LOS/NLOS tables.
    #[serde(default)]
    pub scenario: Option<ScenarioTables>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_elements.is_empty() || self.ris.x.is_empty() || self.ris.y.is_empty() || self.ris.z.is_empty() {
            return bad("sweep lists must be non-empty".into());
        }
        for &n in &self.n_elements {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return bad(format!("element count {n} is not a perfect square"));
            }
        }
        if let Some(d) = self.element_spacing_m {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("element spacing must be positive, got {d}"));
            }
        }
        if !(self.element_q >= 0.0 && self.element_q.is_finite()) {
            return bad(format!("element_q must be non-negative, got {}", self.element_q));
        }
        if !self.tx.is_finite() || !self.rx.is_finite() {
            return Err(Error::InvalidGeometry("non-finite terminal position".into()));
        }
        CarrierConfig::new(self.fc_ghz)?;
        LinkBudget::from_dbm(self.p_t_dbm, self.n0_dbm)?;
        if let Some(t) = &self.scenario {
            t.los.validate()?;
            t.nlos.validate()?;
        }
        Ok(())
    }

    fn spacing(&self, carrier: &CarrierConfig) -> f64 {
        self.element_spacing_m.unwrap_or(carrier.lambda() / 2.0)
    }

    fn channel_model(&self, carrier: CarrierConfig) -> Result<ChannelModel> {
        let tables = self.scenario.clone().unwrap_or_else(|| ScenarioTables::builtin(self.environment));
        let mut model = ChannelModel::with_tables(self.environment, carrier, tables)?;
        model.pattern = (!self.unity_element_gain).then_some(ElementPattern { q: self.element_q });
        model.steering = self.steering;
        Ok(model)
    }
}

/// Aggregated statistics of one output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub preset: String,
    pub ris: Point3,
    pub p_t_dbm: f64,
    #[serde(rename = "N")]
    pub n_elements: usize,
    pub mean_rate_bps_hz: f64,
    pub std_rate: f64,
    pub mean_snr_db: f64,
    /// `None` for rows without a RIS.
    pub los_fraction_txris: Option<f64>,
    pub los_fraction_txrx: f64,
    /// `None` for rows without a RIS.
    pub regime: Option<FieldRegime>,
    pub trials: usize,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStats {
    pub rows: Vec<RateRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: true }
    }
}

enum RowKind {
    Ris { panel: PanelGeometry, regime: FieldRegime, near_g: Option<Vec<Complex64>> },
    NoRis { budget: LinkBudget },
}

struct Row {
    p_t_dbm: f64,
    n_elements: usize,
    kind: RowKind,
}

struct TrialOutcome {
    snr: Vec<f64>,
    los_txris: Option<bool>,
    los_txrx: bool,
}

fn plan_rows(cfg: &ExperimentConfig, carrier: &CarrierConfig, center: Point3, budget: &LinkBudget) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &n in &cfg.n_elements {
        let kind = if n == 0 {
            RowKind::NoRis { budget: *budget }
        } else {
            let panel = PanelGeometry::centered(center, n, cfg.spacing(carrier), cfg.boresight)?;
            if distance_3d(&cfg.tx, &center) < fraunhofer_distance(&panel, carrier) {
                log::warn!("{}: transmitter inside the Fraunhofer distance of the {n}-element RIS at {center:?}", cfg.name);
            }
            let regime = select_field_regime(&panel, &cfg.rx, carrier, cfg.regime_override);
            let near_g = match regime {
                FieldRegime::NearField => Some(ris_rx_nearfield(&panel, &cfg.rx, carrier)?),
                FieldRegime::FarField => None,
            };
            RowKind::Ris { panel, regime, near_g }
        };
        rows.push(Row { p_t_dbm: cfg.p_t_dbm, n_elements: n, kind });
    }
    for &p in &cfg.no_ris_baseline_p_t_dbm {
        let budget = LinkBudget::from_dbm(p, cfg.n0_dbm)?;
        rows.push(Row { p_t_dbm: p, n_elements: 0, kind: RowKind::NoRis { budget } });
    }
    Ok(rows)
}

fn run_trial(
    cfg: &ExperimentConfig,
    model: &ChannelModel,
    rows: &[Row],
    budget: &LinkBudget,
    sweep: u64,
    trial: u64,
) -> Result<TrialOutcome> {
    let seed = cfg.master_seed;
    let (h_siso, direct) = model.siso_channel(&cfg.tx, &cfg.rx, &mut trial_rng(seed, sweep, trial, Stream::TxRx))?;

    let reference = rows.iter().find_map(|r| match &r.kind {
        RowKind::Ris { panel, .. } => Some(panel),
        RowKind::NoRis { .. } => None,
    });
    let needs_far = rows.iter().any(|r| matches!(r.kind, RowKind::Ris { regime: FieldRegime::FarField, .. }));
    let (h_link, g_link) = match reference {
        Some(panel) => {
            let h = model.draw_tx_ris(&cfg.tx, panel, &mut trial_rng(seed, sweep, trial, Stream::TxRis))?;
            let g = if needs_far {
                Some(model.draw_ris_rx(panel, &cfg.rx, &mut trial_rng(seed, sweep, trial, Stream::RisRx))?)
            } else {
                None
            };
            (Some(h), g)
        }
        None => (None, None),
    };

    let lambda = model.carrier().lambda();
    let mut snr = Vec::with_capacity(rows.len());
    for row in rows {
        let value = match &row.kind {
            RowKind::NoRis { budget } => budget.p_t * h_siso.norm_sqr() / budget.n_0,
            RowKind::Ris { panel, near_g, .. } => {
                let h = h_link.as_ref().expect("drawn for RIS rows").project(panel, lambda, model.steering);
                let g = match near_g {
                    Some(g) => g.clone(),
                    None => g_link.as_ref().expect("drawn for far rows").project(panel, lambda, model.steering),
                };
                optimal_snr(&h, &g, h_siso, budget)?.snr_linear
            }
        };
        snr.push(value);
    }
    Ok(TrialOutcome { snr, los_txris: h_link.map(|l| l.metadata.state.los), los_txrx: direct.state.los })
}

fn summarize(
    cfg: &ExperimentConfig,
    center: Point3,
    rows: &[Row],
    outcomes: &[TrialOutcome],
) -> Result<Vec<RateRow>> {
    let n = outcomes.len() as f64;
    let frac = |it: &mut dyn Iterator<Item = bool>| it.filter(|b| *b).count() as f64 / n;
    let los_txrx = frac(&mut outcomes.iter().map(|o| o.los_txrx));
    let los_txris = outcomes
        .iter()
        .map(|o| o.los_txris)
        .collect::<Option<Vec<_>>>()
        .map(|v| frac(&mut v.into_iter()));
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let mut rates = Vec::with_capacity(outcomes.len());
        let mut snr_sum = 0.0;
        for o in outcomes {
            rates.push(achievable_rate(o.snr[i])?);
            snr_sum += o.snr[i];
        }
        let mean = rates.iter().sum::<f64>() / n;
        let std = if rates.len() > 1 {
            (rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let (regime, los_txris) = match &row.kind {
            RowKind::Ris { regime, .. } => (Some(*regime), los_txris),
            RowKind::NoRis { .. } => (None, None),
        };
        out.push(RateRow {
            preset: cfg.name.clone(),
            ris: center,
            p_t_dbm: row.p_t_dbm,
            n_elements: row.n_elements,
            mean_rate_bps_hz: mean,
            std_rate: std,
            mean_snr_db: 10.0 * (snr_sum / n).log10(),
            los_fraction_txris: los_txris,
            los_fraction_txrx: los_txrx,
            regime,
            trials: outcomes.len(),
            seed: cfg.master_seed,
            error: None,
        });
    }
    Ok(out)
}

fn error_rows(cfg: &ExperimentConfig, center: Point3, err: &Error) -> Vec<RateRow> {
    let powers = cfg.no_ris_baseline_p_t_dbm.iter().map(|p| (*p, 0));
    cfg.n_elements
        .iter()
        .map(|n| (cfg.p_t_dbm, *n))
        .chain(powers)
        .map(|(p_t_dbm, n_elements)| RateRow {
            preset: cfg.name.clone(),
            ris: center,
            p_t_dbm,
            n_elements,
            mean_rate_bps_hz: f64::NAN,
            std_rate: f64::NAN,
            mean_snr_db: f64::NAN,
            los_fraction_txris: None,
            los_fraction_txrx: f64::NAN,
            regime: None,
            trials: cfg.trials,
            seed: cfg.master_seed,
            error: Some(err.to_string()),
        })
        .collect()
}

fn run_point(
    cfg: &ExperimentConfig,
    model: &ChannelModel,
    budget: &LinkBudget,
    sweep: u64,
    center: Point3,
    opts: RunOptions,
) -> Result<Vec<RateRow>> {
    let rows = plan_rows(cfg, model.carrier(), center, budget)?;
    let trial = |t: usize| run_trial(cfg, model, &rows, budget, sweep, t as u64);
    let outcomes: Vec<TrialOutcome> = if opts.parallel {
        (0..cfg.trials).into_par_iter().map(trial).collect::<Result<_>>()?
    } else {
        (0..cfg.trials).map(trial).collect::<Result<_>>()?
    };
    summarize(cfg, center, &rows, &outcomes)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RateStats> {
    run_experiment_with(cfg, RunOptions::default())
}

/// Every sweep point is simulated independently; a geometry problem at one
/// point becomes an error row and the sweep continues.
pub fn run_experiment_with(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RateStats> {
    cfg.validate()?;
    let carrier = CarrierConfig::new(cfg.fc_ghz)?;
    let model = cfg.channel_model(carrier)?;
    let budget = LinkBudget::from_dbm(cfg.p_t_dbm, cfg.n0_dbm)?;
    let mut rows = Vec::new();
    for (idx, center) in cfg.ris.points().into_iter().enumerate() {
        let sweep = if cfg.common_random_numbers { 0 } else { idx as u64 };
        log::info!("{}: RIS at ({}, {}, {})", cfg.name, center.x, center.y, center.z);
        match run_point(cfg, &model, &budget, sweep, center, opts) {
            Ok(r) => rows.extend(r),
            Err(e) => {
                log::warn!("{}: sweep point {center:?} failed: {e}", cfg.name);
                rows.extend(error_rows(cfg, center, &e));
            }
        }
    }
    Ok(RateStats { rows })
}

fn steps(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

fn preset_base(name: &str, environment: Environment, fc_ghz: f64, tx: [f64; 3], rx: [f64; 3], ris: RisGrid) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        environment,
        fc_ghz,
        tx: tx.into(),
        rx: rx.into(),
        ris,
        boresight: Boresight::MinusY,
        element_spacing_m: None,
        n_elements: vec![16, 64, 256, 1024, 4096],
        p_t_dbm: DEFAULT_PT_DBM,
        n0_dbm: DEFAULT_N0_DBM,
        no_ris_baseline_p_t_dbm: Vec::new(),
        trials: DEFAULT_TRIALS,
        master_seed: DEFAULT_SEED,
        regime_override: None,
        steering: SteeringModel::Printed,
        element_q: DEFAULT_Q,
        unity_element_gain: false,
        common_random_numbers: true,
        scenario: None,
    }
}

/// Ready-made scenarios: indoor height comparison (two placements), outdoor
/// element-count sweep, and outdoor RIS position sweeps in both regimes.
pub fn figure_presets() -> Vec<ExperimentConfig> {
    let heights = |x: f64| RisGrid { x: vec![x], y: vec![50.0], z: vec![2.0, 3.0] };
    let mut fig3a = preset_base("fig3a", Environment::InH, 2.4, [0.0, 25.0, 3.0], [40.0, 48.0, 1.5], heights(38.0));
    fig3a.regime_override = Some(FieldRegime::NearField);
    let mut fig3b = preset_base("fig3b", Environment::InH, 2.4, [0.0, 25.0, 3.0], [67.0, 45.0, 1.5], heights(70.0));
    fig3b.regime_override = Some(FieldRegime::NearField);

    let mut fig4 = preset_base(
        "fig4",
        Environment::UMi,
        2.4,
        [0.0, 25.0, 10.0],
        [65.0, 52.0, 1.0],
        RisGrid::single(Point3::new(62.0, 55.0, 7.0)),
    );
    fig4.n_elements = vec![0, 16, 64, 256, 1024, 4096];
    fig4.no_ris_baseline_p_t_dbm = vec![DEFAULT_PT_DBM + 10.0];

    let fig5 = |name: &str, x: Vec<f64>, regime| {
        let grid = RisGrid { x, y: steps(52.0, 72.0, 2.0), z: vec![7.0] };
        let mut c = preset_base(name, Environment::UMi, 5.8, [0.0, 25.0, 10.0], [100.0, 50.0, 1.0], grid);
        c.n_elements = vec![1024];
        c.regime_override = Some(regime);
        c
    };
    let fig5a = fig5("fig5a", steps(40.0, 98.0, 2.0), FieldRegime::FarField);
    let fig5b = fig5("fig5b", steps(90.0, 110.0, 2.0), FieldRegime::NearField);
    vec![fig3a, fig3b, fig4, fig5a, fig5b]
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    figure_presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Fixed-width significand with nine significant digits.
pub fn format_sig9(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..9).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, v)
    } else {
        format!("{v:.8e}")
    }
}

fn round_sig9(v: f64) -> f64 {
    format_sig9(v).parse().unwrap_or(f64::NAN)
}

pub const CSV_COLUMNS: [&str; 15] = [
    "preset",
    "ris_x",
    "ris_y",
    "ris_z",
    "p_t_dbm",
    "N",
    "mean_rate_bps_hz",
    "std_rate",
    "mean_snr_db",
    "los_fraction_txris",
    "los_fraction_txrx",
    "regime",
    "trials",
    "seed",
    "error",
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv(stats: &RateStats) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in &stats.rows {
        let fields = [
            csv_field(&r.preset),
            format_sig9(r.ris.x),
            format_sig9(r.ris.y),
            format_sig9(r.ris.z),
            format_sig9(r.p_t_dbm),
            r.n_elements.to_string(),
            format_sig9(r.mean_rate_bps_hz),
            format_sig9(r.std_rate),
            format_sig9(r.mean_snr_db),
            r.los_fraction_txris.map(format_sig9).unwrap_or_default(),
            format_sig9(r.los_fraction_txrx),
            r.regime.map(|g| g.as_str()).unwrap_or("none").to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
            csv_field(r.error.as_deref().unwrap_or("")),
        ];
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn to_json(stats: &RateStats) -> Result<String> {
    let rounded: Vec<RateRow> = stats
        .rows
        .iter()
        .map(|r| RateRow {
            ris: Point3::new(round_sig9(r.ris.x), round_sig9(r.ris.y), round_sig9(r.ris.z)),
            p_t_dbm: round_sig9(r.p_t_dbm),
            mean_rate_bps_hz: round_sig9(r.mean_rate_bps_hz),
            std_rate: round_sig9(r.std_rate),
            mean_snr_db: round_sig9(r.mean_snr_db),
            los_fraction_txris: r.los_fraction_txris.map(round_sig9),
            los_fraction_txrx: round_sig9(r.los_fraction_txrx),
            ..r.clone()
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&RateStats { rows: rounded })?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn write_stats<W: Write>(stats: &RateStats, format: OutputFormat, mut out: W) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => to_csv(stats),
        OutputFormat::Json => to_json(stats)?,
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}
