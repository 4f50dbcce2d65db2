//! Seeded Monte-Carlo sweeps over one scenario parameter.
//!
//! Every trial runs scenario generation, observation synthesis, matrix
//! completion, localization and scoring. Trial `t` uses the same seed at every
//! sweep point, so placements and noise draws are shared across points and
//! trends are not swamped by placement variance.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::completion::{build_graph, complete_matrix};
use crate::crlb::scenario_crlb;
use crate::error::{Error, Result};
use crate::localization::{localize, positions_matrix, wcl_baseline};
use crate::metrics::{energy_error_product, rmse, total_energy, EnergyParams};
use crate::network::{
    generate_scenario, splitmix64, synthesize_observations, NodePose, RangeObservation, Role, ScenarioConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Flat-mode range variance (m^2); `noise_epsilon` in distance mode.
    NoiseVariance,
    /// Total node count; sensors absorb the change.
    NNodes,
    /// Anchor count; sensors and relays stay fixed.
    NAnchors,
    /// Transmission range (m).
    TxRange,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::NoiseVariance => "noise_variance",
            SweepAxis::NNodes => "n_nodes",
            SweepAxis::NAnchors => "n_anchors",
            SweepAxis::TxRange => "tx_range",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value < 1e9 {
                Ok(value as usize)
            } else {
                Err(Error::config(format!("{} needs integer values, got {value}", self.as_str())))
            }
        };
        match self {
            SweepAxis::NoiseVariance => match cfg.noise_mode {
                crate::network::NoiseMode::Flat => cfg.noise_variance = value,
                crate::network::NoiseMode::Distance => cfg.noise_epsilon = value,
            },
            SweepAxis::NNodes => {
                let fixed = cfg.n_anchors + cfg.n_relays;
                let k = count()?;
                if k <= fixed {
                    return Err(Error::config(format!(
                        "n_nodes = {k} leaves no sensors beside {fixed} anchors and relays"
                    )));
                }
                cfg.n_sensors = k - fixed;
            }
            SweepAxis::NAnchors => cfg.n_anchors = count()?,
            SweepAxis::TxRange => cfg.transmission_range = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "noise_variance" => SweepAxis::NoiseVariance,
            "n_nodes" => SweepAxis::NNodes,
            "n_anchors" => SweepAxis::NAnchors,
            "tx_range" => SweepAxis::TxRange,
            other => return Err(Error::config(format!("unknown sweep axis `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Shortest-path completion, classical MDS and Procrustes alignment.
    Proposed,
    /// Weighted centroid of directly ranged anchors.
    Wcl,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Proposed, Method::Wcl];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Wcl => "wcl",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "proposed" => Ok(Method::Proposed),
            "wcl" => Ok(Method::Wcl),
            other => Err(Error::config(format!("unknown method `{other}` (expected proposed or wcl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    /// Scenario at every point before the axis value is applied; its seed is
    /// the base seed of the sweep.
    pub base: ScenarioConfig,
    pub methods: Vec<Method>,
    pub energy: EnergyParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep values must be non-empty"));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sweep values must be finite and strictly increasing"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("at least one method is required"));
        }
        self.energy.validate()?;
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }

    /// Seed of trial `trial`, identical at every sweep point.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        splitmix64(self.base.seed ^ splitmix64(trial as u64 ^ 0x05EE_D0F7_E1A1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(String),
}

impl Status {
    pub fn is_ok(&self) -> bool {
        matches!(self, Status::Ok)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Ok => f.write_str("ok"),
            Status::Failed(reason) => write!(f, "failed: {reason}"),
        }
    }
}

/// One (point, trial, method) outcome. Failed rows carry NaN metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub trial_seed: u64,
    pub method: Method,
    pub rmse_m: f64,
    pub h_crlb_m: f64,
    pub stress: f64,
    pub energy_j: f64,
    pub energy_error_product: f64,
    pub status: Status,
}

/// True and estimated positions of one trial, for scatter plots.
#[derive(Debug, Clone)]
pub struct ScatterSet {
    pub axis_value: f64,
    pub trial_seed: u64,
    pub method: Method,
    pub nodes: Vec<NodePose>,
    pub estimate: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// Ordered by point, then trial, then method.
    pub rows: Vec<SweepRow>,
    /// First trial of every point, per method, when it succeeded.
    pub scatter: Vec<ScatterSet>,
}

pub const CSV_HEADER: &str =
    "axis_value,trial_seed,method,rmse_m,h_crlb_m,stress,energy_J,energy_error_product,status";

/// Runs every (point, trial) of `spec` in parallel and merges the rows in order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(p, t)| run_trial(spec, spec.values[p], spec.trial_seed(t), t == 0))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(outcomes.len() * spec.methods.len());
    let mut scatter = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        scatter.extend(o.scatter);
    }
    Ok(SweepResult {
        axis: spec.axis,
        rows,
        scatter,
    })
}

struct TrialOutcome {
    rows: Vec<SweepRow>,
    scatter: Vec<ScatterSet>,
}

/// Nodes and observations for `cfg.seed`, drawn exactly as a sweep trial draws them.
pub fn draw_trial(cfg: &ScenarioConfig) -> Result<(Vec<NodePose>, Vec<RangeObservation>)> {
    let nodes = generate_scenario(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed));
    let observations = synthesize_observations(&nodes, cfg, &mut rng)?;
    Ok((nodes, observations))
}

fn run_trial(spec: &SweepSpec, value: f64, seed: u64, keep_scatter: bool) -> Result<TrialOutcome> {
    let mut cfg = spec.axis.apply(&spec.base, value)?;
    cfg.seed = seed;
    let failed = |method: Method, reason: &str| SweepRow {
        axis_value: value,
        trial_seed: seed,
        method,
        rmse_m: f64::NAN,
        h_crlb_m: f64::NAN,
        stress: f64::NAN,
        energy_j: f64::NAN,
        energy_error_product: f64::NAN,
        status: Status::Failed(reason.replace(',', ";")),
    };

    let (nodes, observations) = draw_trial(&cfg)?;
    let graph = build_graph(&observations, nodes.len())?;
    let matrix = match complete_matrix(&graph) {
        Ok(m) => m,
        Err(Error::Disconnected { components }) => {
            let reason = format!("disconnected into {} components", components.len());
            return Ok(TrialOutcome {
                rows: spec.methods.iter().map(|&m| failed(m, &reason)).collect(),
                scatter: Vec::new(),
            });
        }
        Err(e) => return Err(e),
    };

    let h_crlb_m = match scenario_crlb(&nodes, &observations, &cfg.noise_law(), &cfg.variance_multipliers) {
        Ok(rep) => rep.h_crlb,
        Err(Error::SingularFim { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let truth = positions_matrix(&nodes);
    let ranges = vec![cfg.transmission_range; nodes.len()];
    let energy_j = total_energy(&spec.energy, &ranges);

    let mut rows = Vec::with_capacity(spec.methods.len());
    let mut scatter = Vec::new();
    for &method in &spec.methods {
        let estimate = match method {
            Method::Proposed => match localize(&nodes, &matrix) {
                Ok(res) => Ok((res.absolute, res.stress)),
                Err(e @ Error::DegenerateGeometry(_)) => Err(e.to_string()),
                Err(e) => return Err(e),
            },
            Method::Wcl => {
                let est = wcl_baseline(&observations, &nodes, cfg.region.centroid());
                Ok((est.positions, f64::NAN))
            }
        };
        let (estimate, stress) = match estimate {
            Ok(v) => v,
            Err(reason) => {
                rows.push(failed(method, &reason));
                continue;
            }
        };
        rows.push(SweepRow {
            axis_value: value,
            trial_seed: seed,
            method,
            rmse_m: rmse(&truth, &estimate)?,
            h_crlb_m,
            stress,
            energy_j,
            energy_error_product: energy_error_product(&spec.energy, &ranges, &truth, &estimate)?,
            status: Status::Ok,
        });
        if keep_scatter {
            scatter.push(ScatterSet {
                axis_value: value,
                trial_seed: seed,
                method,
                nodes: nodes.clone(),
                estimate,
            });
        }
    }
    Ok(TrialOutcome { rows, scatter })
}

fn fmt_f(v: f64) -> String {
    format!("{v:.8e}")
}

/// The CSV text of `rows`: header, then one line per row.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f(r.axis_value),
            r.trial_seed,
            r.method.as_str(),
            fmt_f(r.rmse_m),
            fmt_f(r.h_crlb_m),
            fmt_f(r.stress),
            fmt_f(r.energy_j),
            fmt_f(r.energy_error_product),
            r.status
        );
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    fs::write(path, to_csv(&result.rows)).map_err(|e| Error::io(path, e))
}

/// Parses text produced by [`to_csv`]; `origin` only labels errors.
pub fn parse_csv(text: &str, origin: &Path) -> Result<Vec<SweepRow>> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        message: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(perr(1, format!("unexpected header {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let fields: Vec<&str> = line.splitn(9, ',').collect();
        if fields.len() != 9 {
            return Err(perr(n, format!("expected 9 fields, got {}", fields.len())));
        }
        let f = |j: usize| -> Result<f64> {
            fields[j].parse().map_err(|_| perr(n, format!("bad number `{}`", fields[j])))
        };
        let status = match fields[8] {
            "ok" => Status::Ok,
            s => match s.strip_prefix("failed: ") {
                Some(reason) => Status::Failed(reason.to_string()),
                None => return Err(perr(n, format!("bad status `{s}`"))),
            },
        };
        rows.push(SweepRow {
            axis_value: f(0)?,
            trial_seed: fields[1].parse().map_err(|_| perr(n, format!("bad seed `{}`", fields[1])))?,
            method: fields[2].parse().map_err(|e: Error| perr(n, e.to_string()))?,
            rmse_m: f(3)?,
            h_crlb_m: f(4)?,
            stress: f(5)?,
            energy_j: f(6)?,
            energy_error_product: f(7)?,
            status,
        });
    }
    Ok(rows)
}

/// Per (axis value, method) statistics over the successful trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub axis_value: f64,
    pub method: Method,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub rmse_median: f64,
    pub h_crlb_mean: f64,
    pub h_crlb_std: f64,
    pub energy_mean: f64,
    pub eep_mean: f64,
    pub eep_median: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Groups rows by axis value (in order of first appearance) and method.
pub fn aggregate(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut values: Vec<f64> = Vec::new();
    for r in rows {
        if !values.iter().any(|v| v.to_bits() == r.axis_value.to_bits()) {
            values.push(r.axis_value);
        }
    }
    let mut out = Vec::new();
    for &value in &values {
        for method in Method::ALL {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.axis_value.to_bits() == value.to_bits() && r.method == method)
                .collect();
            if group.is_empty() {
                continue;
            }
            let ok: Vec<&&SweepRow> = group.iter().filter(|r| r.status.is_ok()).collect();
            let col = |f: fn(&SweepRow) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
            let rmse_v = col(|r| r.rmse_m);
            let crlb_v = col(|r| r.h_crlb_m);
            let eep_v = col(|r| r.energy_error_product);
            let (rmse_mean, rmse_std) = mean_std(&rmse_v);
            let (h_crlb_mean, h_crlb_std) = mean_std(&crlb_v);
            out.push(Aggregate {
                axis_value: value,
                method,
                trials_ok: ok.len(),
                trials_failed: group.len() - ok.len(),
                rmse_mean,
                rmse_std,
                rmse_median: median(&rmse_v),
                h_crlb_mean,
                h_crlb_std,
                energy_mean: mean_std(&col(|r| r.energy_j)).0,
                eep_mean: mean_std(&eep_v).0,
                eep_median: median(&eep_v),
            });
        }
    }
    out
}

pub const AGGREGATE_HEADER: &str = "# axis_value method trials_ok trials_failed rmse_mean rmse_std rmse_median h_crlb_mean h_crlb_std energy_mean eep_mean eep_median";

/// Writes `aggregate.dat` plus one `scatter_<point>_<method>.dat` per kept
/// trial into directory `dir`, creating it if needed.
///
/// All files are whitespace-separated columns with a `#` header line.
pub fn emit_plot_data(result: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut agg = format!("# axis: {}\n{AGGREGATE_HEADER}\n", result.axis.as_str());
    for a in aggregate(&result.rows) {
        let _ = writeln!(
            agg,
            "{} {} {} {} {} {} {} {} {} {} {} {}",
            fmt_f(a.axis_value),
            a.method.as_str(),
            a.trials_ok,
            a.trials_failed,
            fmt_f(a.rmse_mean),
            fmt_f(a.rmse_std),
            fmt_f(a.rmse_median),
            fmt_f(a.h_crlb_mean),
            fmt_f(a.h_crlb_std),
            fmt_f(a.energy_mean),
            fmt_f(a.eep_mean),
            fmt_f(a.eep_median)
        );
    }
    let path = dir.join("aggregate.dat");
    fs::write(&path, agg).map_err(|e| Error::io(&path, e))?;

    let mut point = 0usize;
    let mut last: Option<u64> = None;
    for s in &result.scatter {
        if let Some(bits) = last {
            if bits != s.axis_value.to_bits() {
                point += 1;
            }
        }
        last = Some(s.axis_value.to_bits());
        let path = dir.join(format!("scatter_{point:02}_{}.dat", s.method.as_str()));
        fs::write(&path, scatter_text(s)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// One line per node: id, role, true and estimated coordinates.
pub fn scatter_text(s: &ScatterSet) -> String {
    let mut out = format!(
        "# {} = {} trial_seed = {} method = {}\n# id role x y z x_est y_est z_est\n",
        "axis_value",
        fmt_f(s.axis_value),
        s.trial_seed,
        s.method.as_str()
    );
    for n in &s.nodes {
        let p = n.position;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            n.id,
            match n.role {
                Role::Anchor => "anchor",
                Role::Sensor => "sensor",
                Role::Relay => "relay",
            },
            fmt_f(p.x),
            fmt_f(p.y),
            fmt_f(p.z),
            fmt_f(s.estimate[(n.id, 0)]),
            fmt_f(s.estimate[(n.id, 1)]),
            fmt_f(s.estimate[(n.id, 2)])
        );
    }
    out
}
