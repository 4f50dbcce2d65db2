//! Range log-likelihood, Fisher information and the hybrid Cramér-Rao bound.
//!
//! Range noise follows `rho ~ N(r, psi^2)` with `psi^2 = epsilon * r^delta`.
//! For that law the Fisher information carried by one link about its own
//! length is `beta / psi^2` with `beta = 1 + (delta^2 epsilon / 2) r^(delta-2)`;
//! projected onto the node coordinates it becomes `(beta / psi^2) u u^T` with
//! `u` the unit vector along the link.

use nalgebra::{DMatrix, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{unknown_ids, NodePose, RangeObservation, VarianceMultipliers};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLawParams {
    /// Variance scale, m^(2 - delta).
    pub epsilon: f64,
    /// Path exponent; 0 gives distance-independent noise.
    pub delta: f64,
}

impl NoiseLawParams {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        NoiseLawParams { epsilon, delta }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config(format!("delta must be non-negative, got {}", self.delta)));
        }
        Ok(())
    }

    /// Range variance `psi^2 = epsilon * r^delta` at distance `r`.
    pub fn variance(&self, r: f64) -> f64 {
        self.epsilon * r.powf(self.delta)
    }

    /// Same law with `epsilon` multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        NoiseLawParams::new(self.epsilon * c, self.delta)
    }
}

/// Log-density of measuring `rho` between nodes at `m_pos` and `n_pos`:
///
/// `-ln sqrt(2 pi eps) - (delta/4) ln(d^2) - (rho - d)^2 / (2 eps (d^2)^(delta/2))`.
pub fn range_log_likelihood(
    rho: f64,
    m_pos: &Vector3<f64>,
    n_pos: &Vector3<f64>,
    law: &NoiseLawParams,
) -> Result<f64> {
    let d2 = (m_pos - n_pos).norm_squared();
    if !(d2 > 0.0) {
        return Err(Error::DegenerateGeometry(
            "log-likelihood is singular for coincident positions".into(),
        ));
    }
    if !(law.epsilon > 0.0) {
        return Err(Error::Domain {
            function: "range_log_likelihood",
            value: law.epsilon,
            reason: "epsilon must be positive",
        });
    }
    let d = d2.sqrt();
    let eps = law.epsilon;
    Ok(-(2.0 * std::f64::consts::PI * eps).sqrt().ln()
        - law.delta / 4.0 * d2.ln()
        - (rho - d).powi(2) / (2.0 * eps * d2.powf(law.delta / 2.0)))
}

/// Sum of [`range_log_likelihood`] over every observation, each link's
/// `epsilon` scaled by its technology multiplier.
pub fn joint_log_likelihood(
    observations: &[RangeObservation],
    positions: &[Vector3<f64>],
    law: &NoiseLawParams,
    multipliers: &VarianceMultipliers,
) -> Result<f64> {
    let mut total = 0.0;
    for o in observations {
        let link_law = law.scaled(multipliers.get(o.technology));
        total += range_log_likelihood(o.measured_range, &positions[o.a], &positions[o.b], &link_law)
            .map_err(|_| Error::CoincidentNodes(o.a, o.b))?;
    }
    Ok(total)
}

/// `1 + (delta^2 epsilon / 2) r^(delta - 2)`.
pub fn beta_factor(r: f64, law: &NoiseLawParams) -> f64 {
    if law.delta == 0.0 || law.epsilon == 0.0 {
        return 1.0;
    }
    1.0 + law.delta * law.delta * law.epsilon / 2.0 * r.powf(law.delta - 2.0)
}

/// One ranging link; `variance_scale` multiplies the law's `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub variance_scale: f64,
}

/// Links contributing information, over `k` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    k: usize,
    links: Vec<Link>,
}

impl Neighborhood {
    pub fn new(k: usize, links: Vec<Link>) -> Result<Self> {
        for l in &links {
            if l.a >= k || l.b >= k || l.a == l.b {
                return Err(Error::config(format!("invalid link {}-{} over {k} nodes", l.a, l.b)));
            }
            if !(l.variance_scale > 0.0) {
                return Err(Error::config("link variance scale must be positive"));
            }
        }
        Ok(Neighborhood { k, links })
    }

    /// Unit-scale links for every listed pair.
    pub fn from_pairs(k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Neighborhood::new(
            k,
            pairs
                .iter()
                .map(|&(a, b)| Link {
                    a,
                    b,
                    variance_scale: 1.0,
                })
                .collect(),
        )
    }

    /// One link per observation, scaled by its technology multiplier.
    pub fn from_observations(
        k: usize,
        observations: &[RangeObservation],
        multipliers: &VarianceMultipliers,
    ) -> Result<Self> {
        Neighborhood::new(
            k,
            observations
                .iter()
                .map(|o| Link {
                    a: o.a,
                    b: o.b,
                    variance_scale: multipliers.get(o.technology),
                })
                .collect(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.k
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Sorted, deduplicated neighbours of `m`.
    pub fn neighbors(&self, m: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .links
            .iter()
            .filter_map(|l| {
                if l.a == m {
                    Some(l.b)
                } else if l.b == m {
                    Some(l.a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// How the off-diagonal coordinate blocks (xy, xz, yz) are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossTermForm {
    /// `(x_m - x_n)(y_m - y_n)`; the consistent Fisher information.
    #[default]
    Product,
    /// `(x_m - x_n)^2 (y_m - y_n)^2`. Neither symmetric-consistent nor PSD in
    /// general; kept only for comparison.
    SquaredComponents,
}

/// Fisher information over all node coordinates.
///
/// `matrix` is `3K x 3K` in coordinate-major order: entry `(c*K + m, c'*K + n)`
/// couples coordinate `c` of node `m` with coordinate `c'` of node `n`, so the
/// nine `K x K` blocks are `[xx xy xz; yx yy yz; zx zy zz]`.
#[derive(Debug, Clone)]
pub struct FisherInfo {
    pub matrix: DMatrix<f64>,
    pub k: usize,
    /// Nodes whose own 3x3 block is rank deficient (e.g. all neighbours collinear).
    pub degenerate_nodes: Vec<usize>,
    /// Zero noise: `matrix` holds the geometry at unit information and every
    /// bound is zero.
    pub noiseless: bool,
}

impl FisherInfo {
    pub fn index(&self, coord: usize, node: usize) -> usize {
        coord * self.k + node
    }

    /// The 3x3 block of node `m` with itself.
    pub fn node_block(&self, m: usize) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::from_fn(|i, j| self.matrix[(i * self.k + m, j * self.k + m)])
    }
}

/// Assembles the Fisher information at the true positions of `nodes`.
pub fn build_fim(
    nodes: &[NodePose],
    neighborhood: &Neighborhood,
    law: &NoiseLawParams,
    form: CrossTermForm,
) -> Result<FisherInfo> {
    let k = nodes.len();
    if neighborhood.node_count() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("neighbourhood over {k} nodes"),
            actual: neighborhood.node_count().to_string(),
        });
    }
    law.validate()?;
    let noiseless = law.epsilon == 0.0;
    let mut phi = DMatrix::zeros(3 * k, 3 * k);

    for link in neighborhood.links() {
        let diff = nodes[link.a].position - nodes[link.b].position;
        let r2 = diff.norm_squared();
        if !(r2 > 0.0) {
            return Err(Error::CoincidentNodes(link.a, link.b));
        }
        let info = if noiseless {
            1.0
        } else {
            let link_law = law.scaled(link.variance_scale);
            let r = r2.sqrt();
            beta_factor(r, &link_law) / link_law.variance(r)
        };
        for i in 0..3 {
            for j in 0..3 {
                let g = match form {
                    CrossTermForm::SquaredComponents if i != j => diff[i] * diff[i] * diff[j] * diff[j],
                    _ => diff[i] * diff[j],
                };
                let v = info * g / r2;
                let (am, bm) = (i * k + link.a, j * k + link.a);
                let (an, bn) = (i * k + link.b, j * k + link.b);
                phi[(am, bm)] += v;
                phi[(an, bn)] += v;
                phi[(am, bn)] -= v;
                phi[(an, bm)] -= v;
            }
        }
    }

    let mut fim = FisherInfo {
        matrix: phi,
        k,
        degenerate_nodes: Vec::new(),
        noiseless,
    };
    fim.degenerate_nodes = (0..k)
        .filter(|&m| {
            let sv = fim.node_block(m).singular_values();
            let max = sv.max();
            !(max > 0.0) || sv.min() <= 1e-10 * max
        })
        .collect();
    Ok(fim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrlbReport {
    /// `sqrt(Tr(Phi^-1) / K_unknown)`, comparable with a per-node RMSE (m).
    pub h_crlb: f64,
    /// `Tr(Phi^-1)` over the unknown coordinates (m^2).
    pub raw_trace: f64,
    /// Per node, `sqrt` of its three diagonal entries of `Phi^-1`; zero for known nodes.
    pub per_node_bound: Vec<f64>,
}

/// Inverts the Fisher information restricted to `unknown_ids`.
///
/// Rows and columns of every other node are deleted first, which treats those
/// positions as exactly known.
pub fn h_crlb(fim: &FisherInfo, unknown_ids: &[usize]) -> Result<CrlbReport> {
    let k = fim.k;
    let mut unknown: Vec<usize> = unknown_ids.to_vec();
    unknown.sort_unstable();
    unknown.dedup();
    if let Some(&bad) = unknown.iter().find(|&&u| u >= k) {
        return Err(Error::ShapeMismatch {
            expected: format!("node ids below {k}"),
            actual: bad.to_string(),
        });
    }
    let u = unknown.len();
    let mut per_node_bound = vec![0.0; k];
    if u == 0 {
        return Ok(CrlbReport {
            h_crlb: 0.0,
            raw_trace: 0.0,
            per_node_bound,
        });
    }

    let idx: Vec<usize> = (0..3).flat_map(|c| unknown.iter().map(move |&m| c * k + m)).collect();
    let reduced = fim.matrix.select_rows(&idx).select_columns(&idx);

    let l_inv = match reduced.clone().cholesky() {
        Some(ch) if well_conditioned(&reduced, &ch) => lower_inverse(&ch.l()),
        _ => return Err(Error::SingularFim { nodes: null_space_nodes(&reduced, &unknown) }),
    };

    if fim.noiseless {
        return Ok(CrlbReport {
            h_crlb: 0.0,
            raw_trace: 0.0,
            per_node_bound,
        });
    }

    // Phi^-1 = L^-T L^-1, so its diagonal holds the squared column norms of L^-1
    let mut trace = 0.0;
    for (slot, &m) in unknown.iter().enumerate() {
        let s: f64 = (0..3).map(|c| l_inv.column(c * u + slot).norm_squared()).sum();
        per_node_bound[m] = s.max(0.0).sqrt();
        trace += s;
    }
    Ok(CrlbReport {
        h_crlb: (trace / u as f64).max(0.0).sqrt(),
        raw_trace: trace,
        per_node_bound,
    })
}

/// Inverse of a lower-triangular `l` by forward substitution, skipping the
/// known zeros above the diagonal.
fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    // columns of `upper` are rows of `l`, contiguous in memory
    let upper = l.transpose();
    let data = upper.as_slice();
    let mut x = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = vec![0.0; n];
        col[j] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let row = &data[i * n + j..i * n + i];
            let dot: f64 = row.iter().zip(&col[j..i]).map(|(a, b)| a * b).sum();
            col[i] = -dot / l[(i, i)];
        }
        x.column_mut(j).copy_from_slice(&col);
    }
    x
}

/// Rejects factorizations whose pivots span more than ~13 orders of magnitude.
fn well_conditioned(m: &DMatrix<f64>, ch: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> bool {
    let l = ch.l_dirty();
    let diag: Vec<f64> = (0..m.nrows()).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    max > 0.0 && min > 1e-13 * max
}

fn null_space_nodes(reduced: &DMatrix<f64>, unknown: &[usize]) -> Vec<usize> {
    let u = unknown.len();
    let eig = SymmetricEigen::new(reduced.clone());
    let max = eig.eigenvalues.amax();
    let mut nodes = Vec::new();
    for (e, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 1e-10 * max.max(f64::MIN_POSITIVE) {
            continue;
        }
        let v = eig.eigenvectors.column(e);
        for (slot, &m) in unknown.iter().enumerate() {
            let w: f64 = (0..3).map(|c| v[c * u + slot].powi(2)).sum();
            if w > 1e-6 {
                nodes.push(m);
            }
        }
    }
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

/// Bound for a generated scenario: every observation is a link, the
/// non-anchor nodes are the unknowns.
pub fn scenario_crlb(
    nodes: &[NodePose],
    observations: &[RangeObservation],
    law: &NoiseLawParams,
    multipliers: &VarianceMultipliers,
) -> Result<CrlbReport> {
    let hood = Neighborhood::from_observations(nodes.len(), observations, multipliers)?;
    let fim = build_fim(nodes, &hood, law, CrossTermForm::Product)?;
    h_crlb(&fim, &unknown_ids(nodes))
}
