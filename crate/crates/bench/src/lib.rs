//! Fixtures shared by the pipeline benchmarks.

use hydroloc::completion::{build_graph, complete_matrix, CompletedDistanceMatrix};
use hydroloc::network::{NodePose, RangeObservation, ScenarioConfig};
use hydroloc::sweep::draw_trial;

/// A drawn network of `k` nodes with its observations and completed matrix.
pub struct Fixture {
    pub config: ScenarioConfig,
    pub nodes: Vec<NodePose>,
    pub observations: Vec<RangeObservation>,
    pub matrix: CompletedDistanceMatrix,
}

/// `k` nodes (4 anchors) in the default cube with a range short enough that
/// completion has real multi-hop work to do.
pub fn fixture(k: usize, transmission_range: f64) -> Fixture {
    let config = ScenarioConfig {
        n_anchors: 4,
        n_sensors: k - 4,
        n_relays: 0,
        transmission_range,
        seed: 11,
        ..ScenarioConfig::default()
    };
    let (nodes, observations) = draw_trial(&config).expect("fixture draws");
    let graph = build_graph(&observations, k).expect("graph builds");
    let matrix = complete_matrix(&graph).expect("fixture is connected");
    Fixture {
        config,
        nodes,
        observations,
        matrix,
    }
}
