//! Scenario generation and synthesis of noisy single-hop range observations.

use nalgebra::Vector3;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    self, acoustic_invert_range, acoustic_path_loss, mi_invert_range, mi_received_power,
    optical_photon_count, optical_range_from_photons, optical_received_power,
    shadowed_power_sample, AcousticParams, MiParams, OpticalParams, ShadowingModel, Technology,
};
use crate::crlb::NoiseLawParams;
use crate::error::{Error, Result};

/// Smallest range a measurement may report (m).
pub const MIN_MEASURED_RANGE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Anchor,
    Sensor,
    Relay,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Anchor => "anchor",
            Role::Sensor => "sensor",
            Role::Relay => "relay",
        }
    }
}

/// A node and its true position. Ids are dense indices `0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePose {
    pub id: usize,
    pub role: Role,
    pub position: Vector3<f64>,
}

impl NodePose {
    pub fn new(id: usize, role: Role, position: Vector3<f64>) -> Self {
        NodePose { id, role, position }
    }

    pub fn is_anchor(&self) -> bool {
        self.role == Role::Anchor
    }
}

/// Ids of the anchors, in node order.
pub fn anchor_ids(nodes: &[NodePose]) -> Vec<usize> {
    nodes.iter().filter(|n| n.is_anchor()).map(|n| n.id).collect()
}

/// Ids of every node whose position is unknown (sensors and relays).
pub fn unknown_ids(nodes: &[NodePose]) -> Vec<usize> {
    nodes.iter().filter(|n| !n.is_anchor()).map(|n| n.id).collect()
}

/// Axis-aligned deployment box (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Region {
    pub fn cube(side: f64) -> Self {
        Region {
            min: [0.0; 3],
            max: [side; 3],
        }
    }

    pub fn extent(&self) -> Vector3<f64> {
        Vector3::new(
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        )
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn centroid(&self) -> Vector3<f64> {
        Vector3::from(self.min) + 0.5 * self.extent()
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Point at fractional coordinates `u` in `[0, 1]^3`.
    pub fn at(&self, u: [f64; 3]) -> Vector3<f64> {
        let e = self.extent();
        Vector3::new(
            self.min[0] + u[0] * e.x,
            self.min[1] + u[1] * e.y,
            self.min[2] + u[2] * e.z,
        )
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3<f64> {
        self.at([rng.random(), rng.random(), rng.random()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorPlacement {
    /// Non-coplanar corners first, then the remaining corners, face centres,
    /// edge midpoints and the centre; uniform random beyond that.
    Spread,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Range variance `noise_variance`, independent of distance.
    Flat,
    /// Range variance `noise_epsilon * r^noise_delta`.
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangingMode {
    /// One observation per pair from the technology picked by [`select_technology`].
    Select,
    /// One observation per technology whose band covers the pair; the graph
    /// builder fuses them by inverse variance.
    Fuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TechThresholds {
    pub optical_max_m: f64,
    pub mi_max_m: f64,
}

impl Default for TechThresholds {
    fn default() -> Self {
        TechThresholds {
            optical_max_m: 10.0,
            mi_max_m: 30.0,
        }
    }
}

/// Per-technology multipliers on the base range variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarianceMultipliers {
    pub optical: f64,
    pub mi: f64,
    pub acoustic: f64,
}

impl Default for VarianceMultipliers {
    fn default() -> Self {
        VarianceMultipliers {
            optical: 0.5,
            mi: 1.0,
            acoustic: 2.0,
        }
    }
}

impl VarianceMultipliers {
    pub fn get(&self, tech: Technology) -> f64 {
        match tech {
            Technology::Optical => self.optical,
            Technology::MagneticInduction => self.mi,
            Technology::Acoustic => self.acoustic,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSet {
    pub mi: MiParams,
    pub acoustic: AcousticParams,
    pub optical: OpticalParams,
    pub shadowing: ShadowingModel,
}

impl ChannelSet {
    pub fn validate(&self) -> Result<()> {
        self.mi.validate()?;
        self.acoustic.validate()?;
        self.optical.validate()?;
        self.shadowing.validate()
    }
}

/// Everything needed to draw one network and its measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub region: Region,
    pub n_anchors: usize,
    pub n_sensors: usize,
    pub n_relays: usize,
    pub anchor_placement: AnchorPlacement,
    /// Fraction of each side kept clear between spread anchors and the walls.
    pub anchor_inset: f64,
    /// Base range-noise variance (m^2) in flat mode.
    pub noise_variance: f64,
    pub noise_mode: NoiseMode,
    pub noise_epsilon: f64,
    pub noise_delta: f64,
    pub variance_multipliers: VarianceMultipliers,
    /// Maximum true distance (m) at which two nodes can range each other.
    /// The default spans the diagonal of the default cube.
    pub transmission_range: f64,
    pub thresholds: TechThresholds,
    pub ranging_mode: RangingMode,
    pub seed: u64,
    pub channels: ChannelSet,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            region: Region::cube(100.0),
            n_anchors: 4,
            n_sensors: 96,
            n_relays: 4,
            anchor_placement: AnchorPlacement::Spread,
            anchor_inset: 0.0,
            noise_variance: 0.01,
            noise_mode: NoiseMode::Flat,
            noise_epsilon: 1e-3,
            noise_delta: 1.0,
            variance_multipliers: VarianceMultipliers::default(),
            transmission_range: 175.0,
            thresholds: TechThresholds::default(),
            ranging_mode: RangingMode::Select,
            seed: 2021,
            channels: ChannelSet::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn node_count(&self) -> usize {
        self.n_anchors + self.n_sensors + self.n_relays
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.region.extent();
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) || !self.region.volume().is_finite() {
            return Err(Error::config(format!(
                "region {:?}..{:?} has zero volume",
                self.region.min, self.region.max
            )));
        }
        if self.n_anchors < 4 {
            return Err(Error::config(format!(
                "at least 4 anchors are needed for a 3D similarity fit, got {}",
                self.n_anchors
            )));
        }
        if !(0.0..0.5).contains(&self.anchor_inset) {
            return Err(Error::config("anchor_inset must lie in [0, 0.5)"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::config("noise_variance must be non-negative"));
        }
        if self.noise_mode == NoiseMode::Distance
            && !(self.noise_epsilon >= 0.0 && self.noise_delta >= 0.0)
        {
            return Err(Error::config("noise_epsilon and noise_delta must be non-negative"));
        }
        let m = &self.variance_multipliers;
        if !(m.optical > 0.0 && m.mi > 0.0 && m.acoustic > 0.0) {
            return Err(Error::config("variance multipliers must be positive"));
        }
        if !(self.transmission_range >= 0.0) {
            return Err(Error::config("transmission_range must be non-negative"));
        }
        let t = &self.thresholds;
        if !(t.optical_max_m >= 0.0 && t.mi_max_m >= t.optical_max_m) {
            return Err(Error::config("thresholds need 0 <= optical_max_m <= mi_max_m"));
        }
        self.channels.validate()
    }

    /// Noise law driving both the measurement synthesis and the bound.
    ///
    /// Flat noise is the `delta = 0` member of the family `epsilon * r^delta`.
    pub fn noise_law(&self) -> NoiseLawParams {
        match self.noise_mode {
            NoiseMode::Flat => NoiseLawParams::new(self.noise_variance, 0.0),
            NoiseMode::Distance => NoiseLawParams::new(self.noise_epsilon, self.noise_delta),
        }
    }

    /// Range variance (m^2) of one measurement over `tech` at true distance `d`.
    pub fn range_variance(&self, tech: Technology, d: f64) -> f64 {
        self.variance_multipliers.get(tech) * self.noise_law().variance(d)
    }
}

/// One single-hop range measurement between nodes `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeObservation {
    pub a: usize,
    pub b: usize,
    pub technology: Technology,
    pub measured_range: f64,
    /// Range-noise variance (m^2).
    pub variance: f64,
    /// Inverse variance; infinite for a noiseless measurement.
    pub weight: f64,
}

impl RangeObservation {
    pub fn new(a: usize, b: usize, technology: Technology, measured_range: f64, variance: f64) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        RangeObservation {
            a,
            b,
            technology,
            measured_range,
            variance,
            weight: 1.0 / variance,
        }
    }
}

/// Weights of `observations` rescaled to sum to one.
///
/// Noiseless observations (infinite weight) share the whole mass equally.
pub fn normalized_weights(observations: &[RangeObservation]) -> Vec<f64> {
    let exact = observations.iter().filter(|o| o.weight.is_infinite()).count();
    if exact > 0 {
        let w = 1.0 / exact as f64;
        return observations
            .iter()
            .map(|o| if o.weight.is_infinite() { w } else { 0.0 })
            .collect();
    }
    let total: f64 = observations.iter().map(|o| o.weight).sum();
    observations.iter().map(|o| o.weight / total).collect()
}

/// Places anchors, sensors and relays (in that id order) inside the region.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Vec<NodePose>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nodes = Vec::with_capacity(cfg.node_count());

    let spread = spread_points();
    for i in 0..cfg.n_anchors {
        let position = match cfg.anchor_placement {
            AnchorPlacement::Spread if i < spread.len() => {
                let s = cfg.anchor_inset;
                let u = spread[i].map(|c| s + c * (1.0 - 2.0 * s));
                cfg.region.at(u)
            }
            _ => cfg.region.sample(&mut rng),
        };
        nodes.push(NodePose::new(nodes.len(), Role::Anchor, position));
    }
    for _ in 0..cfg.n_sensors {
        let p = cfg.region.sample(&mut rng);
        nodes.push(NodePose::new(nodes.len(), Role::Sensor, p));
    }
    for _ in 0..cfg.n_relays {
        let p = cfg.region.sample(&mut rng);
        nodes.push(NodePose::new(nodes.len(), Role::Relay, p));
    }
    Ok(nodes)
}

/// Unit-cube anchor sites, most informative first.
fn spread_points() -> Vec<[f64; 3]> {
    let mut pts = vec![
        [0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
        [1.0, 1.0, 1.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];
    for axis in 0..3 {
        for side in [0.0, 1.0] {
            let mut p = [0.5; 3];
            p[axis] = side;
            pts.push(p);
        }
    }
    for free in 0..3 {
        for a in [0.0, 1.0] {
            for b in [0.0, 1.0] {
                let mut p = [0.0; 3];
                p[free] = 0.5;
                p[(free + 1) % 3] = a;
                p[(free + 2) % 3] = b;
                pts.push(p);
            }
        }
    }
    pts.push([0.5; 3]);
    pts
}

/// Technology used for a link of true length `d`: the shortest-reach link that covers it.
pub fn select_technology(d: f64, thresholds: &TechThresholds) -> Technology {
    if d <= thresholds.optical_max_m {
        Technology::Optical
    } else if d <= thresholds.mi_max_m {
        Technology::MagneticInduction
    } else {
        Technology::Acoustic
    }
}

/// Every technology whose band covers a link of length `d`.
pub fn feasible_technologies(d: f64, thresholds: &TechThresholds) -> Vec<Technology> {
    let mut techs = Vec::with_capacity(3);
    if d <= thresholds.optical_max_m {
        techs.push(Technology::Optical);
    }
    if d <= thresholds.mi_max_m {
        techs.push(Technology::MagneticInduction);
    }
    techs.push(Technology::Acoustic);
    techs
}

/// Draws range observations for every pair within `cfg.transmission_range`.
///
/// Each measurement passes the true distance through the link's forward model,
/// perturbs the received power with shadowing, inverts back to a range and adds
/// zero-mean Gaussian range noise with the configured variance. Pairs draw from
/// independent substreams keyed on `(rng draw, a, b)`, so output does not
/// depend on evaluation order.
pub fn synthesize_observations<R: RngCore + ?Sized>(
    nodes: &[NodePose],
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<RangeObservation>> {
    let base = rng.next_u64();
    let per_source: Vec<Vec<RangeObservation>> = (0..nodes.len())
        .into_par_iter()
        .map(|a| {
            let mut out = Vec::new();
            for b in a + 1..nodes.len() {
                let d = (nodes[a].position - nodes[b].position).norm();
                if !(d > 0.0 && d <= cfg.transmission_range) {
                    continue;
                }
                let techs = match cfg.ranging_mode {
                    RangingMode::Select => vec![select_technology(d, &cfg.thresholds)],
                    RangingMode::Fuse => feasible_technologies(d, &cfg.thresholds),
                };
                let mut pair_rng = ChaCha8Rng::seed_from_u64(pair_seed(base, a, b));
                for tech in techs {
                    let measured = measure_range(tech, d, cfg, &mut pair_rng)?;
                    let variance = cfg.range_variance(tech, d);
                    let z: f64 = pair_rng.sample(StandardNormal);
                    let range = (measured + variance.sqrt() * z).max(MIN_MEASURED_RANGE);
                    out.push(RangeObservation::new(
                        nodes[a].id,
                        nodes[b].id,
                        tech,
                        range,
                        variance,
                    ));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_source.into_iter().flatten().collect())
}

fn pair_seed(base: u64, a: usize, b: usize) -> u64 {
    let mut x = base ^ (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = splitmix64(x ^ (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
    splitmix64(x)
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Forward model, shadowing and inversion for one technology.
///
/// Shadowed observables outside the inversion bracket are clamped to its edge.
fn measure_range<R: Rng + ?Sized>(
    tech: Technology,
    d: f64,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<f64> {
    let ch = &cfg.channels;
    let shadow = &ch.shadowing;
    match tech {
        Technology::MagneticInduction => {
            let p = &ch.mi;
            let d = p.bracket.clamp(d);
            let db = channels::watts_to_db(mi_received_power(p, d)?);
            let lo = channels::watts_to_db(mi_received_power(p, p.bracket.max)?);
            let hi = channels::watts_to_db(mi_received_power(p, p.bracket.min)?);
            let observed = shadowed_power_sample(db, shadow, rng).clamp(lo, hi);
            // rounding at the bracket edge
            mi_invert_range(p, channels::db_to_watts(observed))
                .or(Ok(if observed >= db { p.bracket.min } else { p.bracket.max }))
        }
        Technology::Acoustic => {
            let p: &AcousticParams = &ch.acoustic;
            let d = p.bracket.clamp(d);
            let level = p.source_level_db - acoustic_path_loss(p, d)?;
            let lo = p.source_level_db - acoustic_path_loss(p, p.bracket.max)?;
            let hi = p.source_level_db - acoustic_path_loss(p, p.bracket.min)?;
            let observed = shadowed_power_sample(level, shadow, rng).clamp(lo, hi);
            acoustic_invert_range(p, p.source_level_db - observed)
                .map(|r| p.bracket.clamp(r))
                .or(Ok(if observed >= level { p.bracket.min } else { p.bracket.max }))
        }
        Technology::Optical => {
            let p: &OpticalParams = &ch.optical;
            let d = p.bracket.clamp(d);
            let db = channels::watts_to_db(optical_received_power(p, d)?);
            let lo = channels::watts_to_db(optical_received_power(p, p.bracket.max)?);
            let hi = channels::watts_to_db(optical_received_power(p, p.bracket.min)?);
            let observed = shadowed_power_sample(db, shadow, rng).clamp(lo, hi);
            let photons = optical_photon_count(p, channels::db_to_watts(observed));
            optical_range_from_photons(p, photons)
                .or(Ok(if observed >= db { p.bracket.min } else { p.bracket.max }))
        }
    }
}
