//! Relative embedding by classical MDS, anchor alignment by a Procrustes
//! similarity fit, and the weighted-centroid baseline.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};

use crate::completion::CompletedDistanceMatrix;
use crate::error::{Error, Result};
use crate::metrics;
use crate::network::{anchor_ids, normalized_weights, NodePose, RangeObservation};

/// Embedding dimension of every map produced here.
pub const DIMS: usize = 3;

/// Eigenvalues above `-EIGEN_CLAMP * lambda_max` are rounding noise.
const EIGEN_CLAMP: f64 = 1e-8;

/// Node positions as a `K x 3` matrix, one row per node.
pub fn positions_matrix(nodes: &[NodePose]) -> DMatrix<f64> {
    DMatrix::from_fn(nodes.len(), DIMS, |i, j| nodes[i].position[j])
}

fn row(m: &DMatrix<f64>, i: usize) -> Vector3<f64> {
    Vector3::new(m[(i, 0)], m[(i, 1)], m[(i, 2)])
}

/// Relative coordinates recovered from a distance matrix.
#[derive(Debug, Clone)]
pub struct RelativeMap {
    /// `K x 3`, column means zero.
    pub coords: DMatrix<f64>,
    /// Leading eigenvalues of the centred Gram matrix, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Some eigenvalue was significantly negative, so no exact embedding exists.
    pub non_euclidean: bool,
}

/// `-1/2 A R A` with the centring operator `A = I - (1/K) 1 1^T`.
pub fn double_center(squared: &DMatrix<f64>) -> DMatrix<f64> {
    let k = squared.nrows();
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    let kf = k as f64;
    let row_means: Vec<f64> = (0..k).map(|i| squared.row(i).sum() / kf).collect();
    let col_means: Vec<f64> = (0..k).map(|j| squared.column(j).sum() / kf).collect();
    let grand = row_means.iter().sum::<f64>() / kf;
    let mut gamma = DMatrix::from_fn(k, k, |i, j| {
        -0.5 * (squared[(i, j)] - row_means[i] - col_means[j] + grand)
    });
    // exact symmetry regardless of summation order
    for i in 0..k {
        for j in i + 1..k {
            let v = 0.5 * (gamma[(i, j)] + gamma[(j, i)]);
            gamma[(i, j)] = v;
            gamma[(j, i)] = v;
        }
    }
    gamma
}

/// Classical MDS: coordinates `u sqrt(v)` from the `dims` largest eigenpairs of `gamma`.
pub fn classical_mds(gamma: &DMatrix<f64>, dims: usize) -> Result<RelativeMap> {
    let k = gamma.nrows();
    if gamma.ncols() != k {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            actual: format!("{}x{}", k, gamma.ncols()),
        });
    }
    if gamma.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateGeometry(
            "non-finite entries in the centred distance matrix".into(),
        ));
    }
    let mut coords = DMatrix::zeros(k, dims);
    if k == 0 {
        return Ok(RelativeMap {
            coords,
            eigenvalues: vec![0.0; dims],
            non_euclidean: false,
        });
    }

    let eig = SymmetricEigen::new(gamma.clone());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let non_euclidean = eig.eigenvalues.iter().any(|&l| l < -EIGEN_CLAMP * lambda_max);
    let mut eigenvalues = Vec::with_capacity(dims);
    for (col, &idx) in order.iter().take(dims).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        eigenvalues.push(lambda);
        let s = lambda.sqrt();
        for i in 0..k {
            coords[(i, col)] = eig.eigenvectors[(i, idx)] * s;
        }
    }
    eigenvalues.resize(dims, 0.0);
    if non_euclidean {
        log::debug!("distance matrix is not Euclidean; leading eigenvalues clamped at zero");
    }
    Ok(RelativeMap {
        coords,
        eigenvalues,
        non_euclidean,
    })
}

/// Kruskal stress: root of the summed squared distance residuals over the
/// summed squared input distances, both over ordered pairs `m != n`.
pub fn kruskal_stress(matrix: &CompletedDistanceMatrix, coords: &DMatrix<f64>) -> Result<f64> {
    let k = matrix.k();
    if coords.nrows() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("{k} coordinate rows"),
            actual: coords.nrows().to_string(),
        });
    }
    let mut residual = 0.0;
    let mut total = 0.0;
    for m in 0..k {
        for n in 0..k {
            if m == n {
                continue;
            }
            let rho = matrix.distance(m, n);
            let r = (coords.row(m) - coords.row(n)).norm();
            residual += (rho - r) * (rho - r);
            total += rho * rho;
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(residual.sqrt() / total)
}

/// Weighted range misfit `sum gamma_mn (r~_mn - r_mn)^2` with weights normalized to one.
pub fn weighted_range_cost(observations: &[RangeObservation], coords: &DMatrix<f64>) -> f64 {
    let w = normalized_weights(observations);
    observations
        .iter()
        .zip(w)
        .map(|(o, w)| {
            let r = (coords.row(o.a) - coords.row(o.b)).norm();
            w * (o.measured_range - r).powi(2)
        })
        .sum()
}

/// `y = scale * rotation * x + translation`.
///
/// `rotation` is orthogonal and may be a reflection, since an MDS map is only
/// determined up to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * x) + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        SimilarityTransform {
            scale: 1.0 / self.scale,
            rotation: rt,
            translation: -(rt * self.translation) / self.scale,
        }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &SimilarityTransform) -> Self {
        SimilarityTransform {
            scale: self.scale * first.scale,
            rotation: self.rotation * first.rotation,
            translation: self.apply(&first.translation),
        }
    }

    /// Largest entry of `R^T R - I`.
    pub fn orthogonality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProcrustesFit {
    pub transform: SimilarityTransform,
    /// Summed squared anchor misfit at the optimum.
    pub residual: f64,
}

/// Least-squares similarity mapping estimated anchor coordinates onto the true ones.
///
/// Translation matches the centroids; the rotation comes from the SVD of the
/// centred cross-covariance `Y^T X = U S V^T` as `U V^T`; the scale is
/// `tr(S) / ||X||^2`.
pub fn procrustes_fit(anchors_true: &DMatrix<f64>, anchors_est: &DMatrix<f64>) -> Result<ProcrustesFit> {
    let m = anchors_true.nrows();
    if anchors_true.ncols() != DIMS || anchors_est.ncols() != DIMS || anchors_est.nrows() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("two {m}x3 anchor sets"),
            actual: format!(
                "{}x{} and {}x{}",
                anchors_true.nrows(),
                anchors_true.ncols(),
                anchors_est.nrows(),
                anchors_est.ncols()
            ),
        });
    }
    if m < 4 {
        return Err(Error::DegenerateGeometry(format!(
            "a 3D similarity fit needs at least 4 anchors, got {m}"
        )));
    }

    let mf = m as f64;
    let b0: Vector3<f64> = (0..m).map(|j| row(anchors_true, j)).sum::<Vector3<f64>>() / mf;
    let c0: Vector3<f64> = (0..m).map(|j| row(anchors_est, j)).sum::<Vector3<f64>>() / mf;

    let mut cov = Matrix3::zeros();
    let mut spread_true = Matrix3::zeros();
    let mut est_norm = 0.0;
    for j in 0..m {
        let y = row(anchors_true, j) - b0;
        let x = row(anchors_est, j) - c0;
        cov += y * x.transpose();
        spread_true += y * y.transpose();
        est_norm += x.norm_squared();
    }

    let sv = spread_true.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smax > 0.0) || smin < 1e-9 * smax {
        return Err(Error::DegenerateGeometry(
            "anchors are coplanar or collinear".into(),
        ));
    }
    if !(est_norm > 0.0) || !est_norm.is_finite() {
        return Err(Error::DegenerateGeometry(
            "estimated anchor positions coincide".into(),
        ));
    }

    let svd = cov.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let rotation = u * v_t;
    let scale = svd.singular_values.sum() / est_norm;
    let translation = b0 - scale * rotation * c0;
    let transform = SimilarityTransform {
        scale,
        rotation,
        translation,
    };
    let residual = (0..m)
        .map(|j| (row(anchors_true, j) - transform.apply(&row(anchors_est, j))).norm_squared())
        .sum();
    Ok(ProcrustesFit {
        transform,
        residual,
    })
}

/// Applies `t` to every row of `coords`.
pub fn apply_transform(coords: &DMatrix<f64>, t: &SimilarityTransform) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(coords.nrows(), DIMS);
    for i in 0..coords.nrows() {
        let y = t.apply(&row(coords, i));
        for c in 0..DIMS {
            out[(i, c)] = y[c];
        }
    }
    out
}

/// Output of a full localization run.
#[derive(Debug, Clone)]
pub struct LocalizationResult {
    pub relative: RelativeMap,
    pub absolute: DMatrix<f64>,
    pub transform: SimilarityTransform,
    pub procrustes_residual: f64,
    pub stress: f64,
    pub rmse: f64,
}

/// MDS embedding of `matrix` aligned to the anchors among `nodes`.
pub fn localize(nodes: &[NodePose], matrix: &CompletedDistanceMatrix) -> Result<LocalizationResult> {
    if matrix.k() != nodes.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} nodes", nodes.len()),
            actual: format!("{}x{} matrix", matrix.k(), matrix.k()),
        });
    }
    let gamma = double_center(&matrix.squared);
    let relative = classical_mds(&gamma, DIMS)?;
    let stress = kruskal_stress(matrix, &relative.coords)?;

    let anchors = anchor_ids(nodes);
    let truth = positions_matrix(nodes);
    let anchors_true = truth.select_rows(&anchors);
    let anchors_est = relative.coords.select_rows(&anchors);
    let fit = procrustes_fit(&anchors_true, &anchors_est)?;
    let absolute = apply_transform(&relative.coords, &fit.transform);
    let rmse = metrics::rmse(&truth, &absolute)?;
    Ok(LocalizationResult {
        relative,
        absolute,
        transform: fit.transform,
        procrustes_residual: fit.residual,
        stress,
        rmse,
    })
}

/// Weighted-centroid estimates; anchors keep their known positions.
#[derive(Debug, Clone)]
pub struct WclEstimate {
    pub positions: DMatrix<f64>,
    /// Unknown nodes that reached no anchor and were placed at the fallback point.
    pub unreached: Vec<usize>,
}

/// Weighted-centroid localization from direct anchor ranges only.
///
/// Each unknown node is placed at `sum w_j a_j / sum w_j` with `w_j = 1 / d_j`
/// over the anchors it measured.
pub fn wcl_baseline(
    observations: &[RangeObservation],
    nodes: &[NodePose],
    fallback: Vector3<f64>,
) -> WclEstimate {
    let k = nodes.len();
    let mut ranges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for o in observations {
        match (nodes[o.a].is_anchor(), nodes[o.b].is_anchor()) {
            (true, false) => ranges[o.b].push((o.a, o.measured_range)),
            (false, true) => ranges[o.a].push((o.b, o.measured_range)),
            _ => {}
        }
    }
    weighted_centroids(nodes, fallback, |i| ranges[i].clone())
}

/// Weighted-centroid localization using completed (possibly multi-hop) anchor distances.
pub fn wcl_from_matrix(
    matrix: &CompletedDistanceMatrix,
    nodes: &[NodePose],
    fallback: Vector3<f64>,
) -> WclEstimate {
    let anchors = anchor_ids(nodes);
    weighted_centroids(nodes, fallback, |i| {
        anchors
            .iter()
            .map(|&a| (a, matrix.distance(i, a)))
            .filter(|(_, d)| d.is_finite())
            .collect()
    })
}

fn weighted_centroids(
    nodes: &[NodePose],
    fallback: Vector3<f64>,
    anchor_ranges: impl Fn(usize) -> Vec<(usize, f64)>,
) -> WclEstimate {
    let mut positions = positions_matrix(nodes);
    let mut unreached = Vec::new();
    for node in nodes.iter().filter(|n| !n.is_anchor()) {
        let ranges = anchor_ranges(node.id);
        let est = if ranges.is_empty() {
            unreached.push(node.id);
            fallback
        } else if let Some(&(a, _)) = ranges.iter().find(|(_, d)| *d <= 0.0) {
            nodes[a].position
        } else {
            let (sum, wsum) = ranges.iter().fold((Vector3::zeros(), 0.0), |(s, ws), &(a, d)| {
                (s + nodes[a].position / d, ws + 1.0 / d)
            });
            sum / wsum
        };
        for c in 0..DIMS {
            positions[(node.id, c)] = est[c];
        }
    }
    WclEstimate {
        positions,
        unreached,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Role;

    fn squared_from_points(pts: &DMatrix<f64>) -> DMatrix<f64> {
        let k = pts.nrows();
        DMatrix::from_fn(k, k, |i, j| (pts.row(i) - pts.row(j)).norm_squared())
    }

    fn rot_z(deg: f64) -> Matrix3<f64> {
        let (s, c) = deg.to_radians().sin_cos();
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    fn anchors() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            5,
            3,
            &[0.0, 0.0, 0.0, 10.0, 0.0, 1.0, 0.0, 12.0, 2.0, 3.0, 4.0, 9.0, 7.0, 7.0, 7.0],
        )
    }

    #[test]
    fn double_center_cases() {
        let one = double_center(&DMatrix::zeros(1, 1));
        assert_eq!(one, DMatrix::zeros(1, 1));

        let r = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]);
        let g = double_center(&r);
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0]);
        assert!((g - expect).amax() < 1e-12);
    }

    #[test]
    fn double_center_matches_matrix_form() {
        let pts = anchors();
        let r = squared_from_points(&pts);
        let k = r.nrows();
        let a = DMatrix::identity(k, k) - DMatrix::from_element(k, k, 1.0 / k as f64);
        let direct = -0.5 * (&a * &r * &a);
        let g = double_center(&r);
        assert!((&g - direct).amax() < 1e-10);
        for i in 0..k {
            assert!(g.row(i).sum().abs() < 1e-10);
        }
        let eig = SymmetricEigen::new(g);
        assert!(eig.eigenvalues.min() > -1e-9);
    }

    #[test]
    fn mds_collinear() {
        let r = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]);
        let map = classical_mds(&double_center(&r), 3).unwrap();
        assert!((map.eigenvalues[0] - 2.0).abs() < 1e-12);
        let col: Vec<f64> = (0..3).map(|i| map.coords[(i, 0)]).collect();
        let sign = col[2].signum();
        assert!((col[0] * sign + 1.0).abs() < 1e-12);
        assert!(col[1].abs() < 1e-12);
        assert!((col[2] * sign - 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert!(map.coords[(i, 1)].abs() < 1e-7 && map.coords[(i, 2)].abs() < 1e-7);
        }
        assert!(!map.non_euclidean);
    }

    #[test]
    fn mds_regular_tetrahedron() {
        let r = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 });
        let map = classical_mds(&double_center(&r), 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d = (map.coords.row(i) - map.coords.row(j)).norm();
                assert!((d - if i == j { 0.0 } else { 1.0 }).abs() < 1e-10);
            }
        }
        for c in 0..3 {
            assert!(map.coords.column(c).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn mds_flags_non_euclidean_input() {
        // violates the triangle inequality badly
        let r = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 1.0, 1.0, 100.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 100.0, 1.0, 1.0, 0.0],
        );
        let map = classical_mds(&double_center(&r), 3).unwrap();
        assert!(map.non_euclidean);
        assert!(map.eigenvalues.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn stress_values() {
        let pts = anchors();
        let m = CompletedDistanceMatrix::from_squared(squared_from_points(&pts)).unwrap();
        assert!(kruskal_stress(&m, &pts).unwrap() < 1e-15);

        let mut sq = squared_from_points(&pts);
        let delta = 0.5;
        let d01 = sq[(0, 1)].sqrt() + delta;
        sq[(0, 1)] = d01 * d01;
        sq[(1, 0)] = d01 * d01;
        let m = CompletedDistanceMatrix::from_squared(sq.clone()).unwrap();
        let total: f64 = sq.iter().sum();
        let expect = (2.0 * delta * delta).sqrt() / total;
        assert!((kruskal_stress(&m, &pts).unwrap() - expect).abs() < 1e-15);
        assert!(kruskal_stress(&m, &DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn procrustes_identity_and_translation() {
        let a = anchors();
        let fit = procrustes_fit(&a, &a).unwrap();
        assert!((fit.transform.scale - 1.0).abs() < 1e-12);
        assert!((fit.transform.rotation - Matrix3::identity()).amax() < 1e-12);
        assert!(fit.transform.translation.amax() < 1e-12);
        assert!(fit.residual < 1e-20);

        let shift = Vector3::new(3.0, -2.0, 5.0);
        let est = DMatrix::from_fn(a.nrows(), 3, |i, j| a[(i, j)] + shift[j]);
        let fit = procrustes_fit(&a, &est).unwrap();
        assert!((fit.transform.scale - 1.0).abs() < 1e-12);
        assert!((fit.transform.rotation - Matrix3::identity()).amax() < 1e-12);
        assert!((fit.transform.translation + shift).amax() < 1e-12);
        assert!((apply_transform(&est, &fit.transform) - &a).amax() < 1e-12);
    }

    #[test]
    fn procrustes_recovers_applied_similarity() {
        let a = anchors();
        let applied = SimilarityTransform {
            scale: 2.0,
            rotation: rot_z(30.0),
            translation: Vector3::new(1.5, -4.0, 0.25),
        };
        let est = apply_transform(&a, &applied);
        let fit = procrustes_fit(&a, &est).unwrap();
        let recovered = fit.transform.inverse();
        assert!((recovered.scale - 2.0).abs() < 1e-8);
        assert!((recovered.rotation - applied.rotation).amax() < 1e-8);
        assert!((recovered.translation - applied.translation).amax() < 1e-8);
        assert!(fit.transform.orthogonality_error() < 1e-10);
    }

    #[test]
    fn procrustes_accepts_reflected_maps() {
        let a = anchors();
        let mirror = SimilarityTransform {
            scale: 0.7,
            rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0) * rot_z(40.0),
            translation: Vector3::new(-2.0, 0.0, 9.0),
        };
        let est = apply_transform(&a, &mirror);
        let fit = procrustes_fit(&a, &est).unwrap();
        assert!((fit.transform.rotation.determinant() + 1.0).abs() < 1e-10);
        assert!((apply_transform(&est, &fit.transform) - &a).amax() < 1e-9);
    }

    #[test]
    fn procrustes_rejects_coplanar_anchors() {
        let flat = DMatrix::from_row_slice(
            4,
            3,
            &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0],
        );
        assert!(matches!(
            procrustes_fit(&flat, &flat),
            Err(Error::DegenerateGeometry(_))
        ));
        let three = anchors().rows(0, 3).into_owned();
        assert!(procrustes_fit(&three, &three).is_err());
    }

    #[test]
    fn transform_algebra() {
        let a = anchors();
        assert_eq!(apply_transform(&a, &SimilarityTransform::identity()), a);
        let double = SimilarityTransform {
            scale: 2.0,
            ..SimilarityTransform::identity()
        };
        assert!((apply_transform(&a, &double) - &a * 2.0).amax() < 1e-15);

        let t = SimilarityTransform {
            scale: 1.7,
            rotation: rot_z(-65.0),
            translation: Vector3::new(0.3, 8.0, -1.0),
        };
        let back = apply_transform(&apply_transform(&a, &t), &t.inverse());
        assert!((back - &a).amax() < 1e-10);
        let id = t.inverse().compose(&t);
        assert!((id.scale - 1.0).abs() < 1e-12);
        assert!((id.rotation - Matrix3::identity()).amax() < 1e-12);
    }

    fn node(id: usize, role: Role, p: [f64; 3]) -> NodePose {
        NodePose::new(id, role, Vector3::from(p))
    }

    #[test]
    fn wcl_symmetric_and_coincident() {
        let mut nodes = vec![
            node(0, Role::Anchor, [0.0, 0.0, 0.0]),
            node(1, Role::Anchor, [10.0, 10.0, 0.0]),
            node(2, Role::Anchor, [10.0, 0.0, 10.0]),
            node(3, Role::Anchor, [0.0, 10.0, 10.0]),
            node(4, Role::Sensor, [5.0, 5.0, 5.0]),
        ];
        let d = 75f64.sqrt();
        let obs: Vec<_> = (0..4)
            .map(|a| RangeObservation::new(a, 4, crate::channels::Technology::Acoustic, d, 1.0))
            .collect();
        let est = wcl_baseline(&obs, &nodes, Vector3::zeros());
        assert!((row(&est.positions, 4) - Vector3::new(5.0, 5.0, 5.0)).norm() < 1e-12);
        assert!(est.unreached.is_empty());
        assert_eq!(row(&est.positions, 1), nodes[1].position);

        nodes[4].position = Vector3::new(10.0, 10.0, 0.0);
        let mut obs: Vec<_> = (0..4)
            .map(|a| {
                let r = (nodes[a].position - nodes[4].position).norm().max(1e-9);
                RangeObservation::new(a, 4, crate::channels::Technology::Acoustic, r, 1.0)
            })
            .collect();
        let est = wcl_baseline(&obs, &nodes, Vector3::zeros());
        assert!((row(&est.positions, 4) - nodes[1].position).norm() < 1e-6);

        obs.clear();
        let est = wcl_baseline(&obs, &nodes, Vector3::new(5.0, 5.0, 5.0));
        assert_eq!(est.unreached, vec![4]);
        assert_eq!(row(&est.positions, 4), Vector3::new(5.0, 5.0, 5.0));
    }

    #[test]
    fn weighted_cost_zero_at_truth() {
        let nodes: Vec<_> = (0..5)
            .map(|i| node(i, Role::Sensor, [i as f64, (i * i) as f64, 1.0]))
            .collect();
        let pts = positions_matrix(&nodes);
        let mut obs = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                let r = (nodes[a].position - nodes[b].position).norm();
                obs.push(RangeObservation::new(a, b, crate::channels::Technology::Optical, r, 0.5));
            }
        }
        assert!(weighted_range_cost(&obs, &pts) < 1e-20);
        obs[0].measured_range += 1.0;
        assert!((weighted_range_cost(&obs, &pts) - 0.1).abs() < 1e-12);
    }
}
