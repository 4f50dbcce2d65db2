//! Range graph construction and shortest-path completion of the squared
//! distance matrix.
//!
//! Completion runs Dijkstra from every source, `O(K (E + K) log K)`, bounded by
//! the `O(K^3)` of a dense all-pairs pass. The Procrustes stage adds `O(M^2)`
//! and applying the transform `O(K)`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::RangeObservation;

/// A fused undirected edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub range: f64,
    pub variance: f64,
}

/// Undirected weighted range graph over nodes `0..k`.
#[derive(Debug, Clone)]
pub struct RangeGraph {
    k: usize,
    edges: BTreeMap<(usize, usize), Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl RangeGraph {
    pub fn node_count(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<Edge> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.edges.get(&key).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), Edge)> + '_ {
        self.edges.iter().map(|(&k, &e)| (k, e))
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.k];
        let mut out = Vec::new();
        for start in 0..self.k {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            label[start] = id;
            let mut i = 0;
            while i < members.len() {
                let u = members[i];
                for &(v, _) in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        members.push(v);
                    }
                }
                i += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// Builds the range graph; repeated pairs are fused by inverse-variance weighting.
///
/// Zero-variance measurements of a pair, when present, are averaged on their own.
pub fn build_graph(observations: &[RangeObservation], k: usize) -> Result<RangeGraph> {
    let mut grouped: BTreeMap<(usize, usize), Vec<&RangeObservation>> = BTreeMap::new();
    for o in observations {
        if o.a >= k || o.b >= k {
            return Err(Error::ShapeMismatch {
                expected: format!("node ids below {k}"),
                actual: format!("observation ({}, {})", o.a, o.b),
            });
        }
        if o.a == o.b {
            continue;
        }
        let key = if o.a < o.b { (o.a, o.b) } else { (o.b, o.a) };
        grouped.entry(key).or_default().push(o);
    }

    let mut edges = BTreeMap::new();
    let mut adjacency = vec![Vec::new(); k];
    for (key, group) in grouped {
        let edge = fuse(&group);
        adjacency[key.0].push((key.1, edge.range));
        adjacency[key.1].push((key.0, edge.range));
        edges.insert(key, edge);
    }
    Ok(RangeGraph { k, edges, adjacency })
}

fn fuse(group: &[&RangeObservation]) -> Edge {
    if let [only] = group {
        return Edge {
            range: only.measured_range,
            variance: only.variance,
        };
    }
    let exact: Vec<f64> = group
        .iter()
        .filter(|o| o.variance == 0.0)
        .map(|o| o.measured_range)
        .collect();
    if !exact.is_empty() {
        return Edge {
            range: exact.iter().sum::<f64>() / exact.len() as f64,
            variance: 0.0,
        };
    }
    let total: f64 = group.iter().map(|o| o.weight).sum();
    let range = group.iter().map(|o| o.weight * o.measured_range).sum::<f64>() / total;
    Edge {
        range,
        variance: 1.0 / total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Diagonal,
    Direct,
    ShortestPath,
}

/// Completed pairwise squared-distance matrix.
#[derive(Debug, Clone)]
pub struct CompletedDistanceMatrix {
    pub squared: DMatrix<f64>,
    pub provenance: Vec<Provenance>,
    pub hop_count: DMatrix<u32>,
}

impl CompletedDistanceMatrix {
    pub fn k(&self) -> usize {
        self.squared.nrows()
    }

    pub fn provenance(&self, a: usize, b: usize) -> Provenance {
        self.provenance[a * self.k() + b]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.squared[(a, b)].sqrt()
    }

    /// Wraps an exact squared-distance matrix (every pair treated as direct).
    pub fn from_squared(squared: DMatrix<f64>) -> Result<Self> {
        let k = squared.nrows();
        if squared.ncols() != k {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                actual: format!("{}x{}", k, squared.ncols()),
            });
        }
        let provenance = (0..k * k)
            .map(|i| if i / k == i % k { Provenance::Diagonal } else { Provenance::Direct })
            .collect();
        let hop_count = DMatrix::from_fn(k, k, |a, b| u32::from(a != b));
        Ok(CompletedDistanceMatrix {
            squared,
            provenance,
            hop_count,
        })
    }

    /// Writes `a,b,squared,distance,provenance,hops` rows for debugging.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut body = || -> std::io::Result<()> {
            writeln!(w, "a,b,squared,distance,provenance,hops")?;
            for a in 0..self.k() {
                for b in 0..self.k() {
                    let p = match self.provenance(a, b) {
                        Provenance::Diagonal => "diagonal",
                        Provenance::Direct => "direct",
                        Provenance::ShortestPath => "shortest_path",
                    };
                    writeln!(
                        w,
                        "{a},{b},{:.8e},{:.8e},{p},{}",
                        self.squared[(a, b)],
                        self.distance(a, b),
                        self.hop_count[(a, b)]
                    )?;
                }
            }
            w.flush()
        };
        body().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest path lengths and hop counts.
fn dijkstra(graph: &RangeGraph, source: usize) -> (Vec<f64>, Vec<u32>) {
    let mut dist = vec![f64::INFINITY; graph.k];
    let mut hops = vec![0u32; graph.k];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier {
        dist: 0.0,
        node: source,
    });
    while let Some(Frontier { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in graph.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                hops[v] = hops[u] + 1;
                heap.push(Frontier { dist: nd, node: v });
            }
        }
    }
    (dist, hops)
}

/// Completes the squared-distance matrix from the range graph.
///
/// Directly measured pairs keep their (fused) measurement; every other pair
/// takes the length of its shortest path.
pub fn complete_matrix(graph: &RangeGraph) -> Result<CompletedDistanceMatrix> {
    let components = graph.components();
    if components.len() > 1 {
        return Err(Error::Disconnected { components });
    }
    let k = graph.k;
    let rows: Vec<(Vec<f64>, Vec<u32>)> =
        (0..k).into_par_iter().map(|s| dijkstra(graph, s)).collect();

    let mut squared = DMatrix::zeros(k, k);
    let mut hop_count = DMatrix::zeros(k, k);
    let mut provenance = vec![Provenance::Diagonal; k * k];
    for a in 0..k {
        for b in a + 1..k {
            let (d, hops, prov) = match graph.edge(a, b) {
                Some(e) => (e.range, 1, Provenance::Direct),
                None => {
                    // symmetrize against floating-point path-order differences
                    let d = 0.5 * (rows[a].0[b] + rows[b].0[a]);
                    (d, rows[a].1[b], Provenance::ShortestPath)
                }
            };
            squared[(a, b)] = d * d;
            squared[(b, a)] = d * d;
            hop_count[(a, b)] = hops;
            hop_count[(b, a)] = hops;
            provenance[a * k + b] = prov;
            provenance[b * k + a] = prov;
        }
    }
    Ok(CompletedDistanceMatrix {
        squared,
        provenance,
        hop_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::Technology;

    fn obs(a: usize, b: usize, r: f64, var: f64) -> RangeObservation {
        RangeObservation::new(a, b, Technology::Optical, r, var)
    }

    #[test]
    fn empty_and_single_edge() {
        let g = build_graph(&[], 3).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.components().len(), 3);

        let g = build_graph(&[obs(0, 1, 5.0, 0.1)], 2).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(1, 0).unwrap().range, 5.0);
    }

    #[test]
    fn duplicate_pair_fuses_by_inverse_variance() {
        let g = build_graph(&[obs(0, 1, 10.0, 1.0), obs(1, 0, 13.0, 2.0)], 2).unwrap();
        let e = g.edge(0, 1).unwrap();
        // (10/1 + 13/2) / (1 + 1/2) = 11
        assert!((e.range - 11.0).abs() < 1e-12);
        assert!((e.variance - 2.0 / 3.0).abs() < 1e-12);

        let g = build_graph(&[obs(0, 1, 10.0, 0.0), obs(0, 1, 13.0, 2.0)], 2).unwrap();
        assert_eq!(g.edge(0, 1).unwrap().range, 10.0);
    }

    #[test]
    fn out_of_range_ids() {
        assert!(build_graph(&[obs(0, 4, 1.0, 1.0)], 3).is_err());
    }

    #[test]
    fn triangle_is_all_direct() {
        let g = build_graph(&[obs(0, 1, 3.0, 1.0), obs(0, 2, 4.0, 1.0), obs(1, 2, 5.0, 1.0)], 3)
            .unwrap();
        let m = complete_matrix(&g).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, 9.0, 16.0, 9.0, 0.0, 25.0, 16.0, 25.0, 0.0]);
        assert_eq!(m.squared, expect);
        assert_eq!(m.provenance(0, 2), Provenance::Direct);
        assert_eq!(m.provenance(1, 1), Provenance::Diagonal);
    }

    #[test]
    fn path_fills_missing_pair() {
        let g = build_graph(&[obs(0, 1, 1.0, 1.0), obs(1, 2, 2.0, 1.0)], 3).unwrap();
        let m = complete_matrix(&g).unwrap();
        assert_eq!(m.squared[(0, 2)], 9.0);
        assert_eq!(m.squared[(2, 0)], 9.0);
        assert_eq!(m.provenance(0, 2), Provenance::ShortestPath);
        assert_eq!(m.hop_count[(0, 2)], 2);
    }

    #[test]
    fn disconnected_reports_components() {
        let g = build_graph(&[obs(0, 1, 1.0, 1.0), obs(2, 3, 1.0, 1.0)], 5).unwrap();
        match complete_matrix(&g) {
            Err(Error::Disconnected { components }) => {
                assert_eq!(components, vec![vec![0, 1], vec![2, 3], vec![4]]);
            }
            other => panic!("expected disconnected error, got {other:?}"),
        }
    }

    #[test]
    fn csv_dump() {
        let g = build_graph(&[obs(0, 1, 1.0, 1.0), obs(1, 2, 2.0, 1.0)], 3).unwrap();
        let m = complete_matrix(&g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        m.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.contains("0,2,9.00000000e0,3.00000000e0,shortest_path,2"));
    }
}
