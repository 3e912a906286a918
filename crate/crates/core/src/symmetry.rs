//! Orthogonal maps and finite symmetry groups of state spaces.

use std::cmp::Ordering;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use crate::sampling::fibonacci_sphere;
use crate::statespace::{ContinuousAxes, StateSpace};
use crate::{Error, Result};

/// Entry-wise tolerance for comparing group elements.
pub const GROUP_TOL: f64 = 1e-9;

/// A 3x3 orthogonal matrix acting on state coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalMap {
    m: Matrix3<f64>,
}

impl OrthogonalMap {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let defect = (m.transpose() * m - Matrix3::identity()).amax();
        if defect.is_nan() || defect > GROUP_TOL {
            return Err(Error::InvalidGroup(format!(
                "matrix is not orthogonal (defect {defect:.3e})"
            )));
        }
        Ok(OrthogonalMap { m })
    }

    pub fn identity() -> Self {
        OrthogonalMap {
            m: Matrix3::identity(),
        }
    }

    /// Right-handed rotation by `angle` about `axis`.
    pub fn rotation(axis: &Vector3<f64>, angle: f64) -> Self {
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle);
        OrthogonalMap { m: *r.matrix() }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    pub fn is_rotation(&self) -> bool {
        self.det() > 0.0
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &OrthogonalMap) -> OrthogonalMap {
        OrthogonalMap {
            m: self.m * other.m,
        }
    }

    pub fn inverse(&self) -> OrthogonalMap {
        OrthogonalMap {
            m: self.m.transpose(),
        }
    }

    pub fn approx_eq(&self, other: &OrthogonalMap, tol: f64) -> bool {
        (self.m - other.m).amax() <= tol
    }

    /// Axis (canonical sign) and angle in `[0, pi]` of a proper rotation;
    /// `None` for improper maps. The identity reports axis `z`, angle 0.
    pub fn axis_angle(&self) -> Option<(Vector3<f64>, f64)> {
        if !self.is_rotation() {
            return None;
        }
        let m = &self.m;
        let skew = Vector3::new(
            m[(2, 1)] - m[(1, 2)],
            m[(0, 2)] - m[(2, 0)],
            m[(1, 0)] - m[(0, 1)],
        );
        // skew = 2 sin(angle) n
        let angle = (skew.norm() / 2.0).atan2((m.trace() - 1.0) / 2.0);
        if angle < 1e-12 {
            return Some((Vector3::z(), 0.0));
        }
        let axis = if angle < 3.0 {
            skew.normalize()
        } else {
            // symmetric part: M_ij + M_ji = 2 (1 - cos) n_i n_j off the diagonal
            let c = angle.cos();
            let i = (0..3)
                .max_by(|&a, &b| m[(a, a)].total_cmp(&m[(b, b)]))
                .expect("three");
            let ni = ((m[(i, i)] - c) / (1.0 - c)).max(0.0).sqrt();
            let mut col = Vector3::zeros();
            for j in 0..3 {
                col[j] = if j == i {
                    ni
                } else {
                    (m[(i, j)] + m[(j, i)]) / (2.0 * (1.0 - c) * ni)
                };
            }
            let n = canonical_axis(&col.normalize());
            if n.dot(&skew) < 0.0 {
                -n
            } else {
                n
            }
        };
        Some((axis, angle))
    }
}

/// Flips `n` so that its first non-negligible component is positive.
pub fn canonical_axis(n: &Vector3<f64>) -> Vector3<f64> {
    for i in 0..3 {
        if n[i].abs() > 1e-9 {
            return if n[i] < 0.0 { -n } else { *n };
        }
    }
    *n
}

fn cmp_maps(a: &OrthogonalMap, b: &OrthogonalMap) -> Ordering {
    let key = |x: f64| (x / GROUP_TOL).round();
    for (x, y) in a.m.transpose().iter().zip(b.m.transpose().iter()) {
        match key(*y).total_cmp(&key(*x)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// A finite group of orthogonal maps, identity first and otherwise in a
/// canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    elements: Vec<OrthogonalMap>,
}

impl FiniteGroup {
    /// Validates closure and the presence of the identity; duplicates are
    /// dropped.
    pub fn new(elements: Vec<OrthogonalMap>) -> Result<Self> {
        let mut unique: Vec<OrthogonalMap> = Vec::with_capacity(elements.len());
        for e in elements {
            if !unique.iter().any(|u| u.approx_eq(&e, GROUP_TOL)) {
                unique.push(e);
            }
        }
        let find = |g: &OrthogonalMap, set: &[OrthogonalMap]| {
            set.iter().any(|u| u.approx_eq(g, GROUP_TOL))
        };
        if !find(&OrthogonalMap::identity(), &unique) {
            return Err(Error::InvalidGroup("identity missing".into()));
        }
        for a in &unique {
            for b in &unique {
                if !find(&a.compose(b), &unique) {
                    return Err(Error::InvalidGroup("not closed under composition".into()));
                }
            }
        }
        unique.sort_by(cmp_maps);
        let id = unique
            .iter()
            .position(|u| u.approx_eq(&OrthogonalMap::identity(), GROUP_TOL))
            .expect("identity present");
        let e = unique.remove(id);
        unique.insert(0, e);
        Ok(FiniteGroup { elements: unique })
    }

    pub fn trivial() -> Self {
        FiniteGroup {
            elements: vec![OrthogonalMap::identity()],
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[OrthogonalMap] {
        &self.elements
    }

    pub fn contains(&self, g: &OrthogonalMap, tol: f64) -> bool {
        self.elements.iter().any(|e| e.approx_eq(g, tol))
    }

    pub fn rotation_subgroup(&self) -> FiniteGroup {
        FiniteGroup {
            elements: self
                .elements
                .iter()
                .filter(|e| e.is_rotation())
                .cloned()
                .collect(),
        }
    }

    pub fn is_subgroup_of(&self, other: &FiniteGroup) -> bool {
        self.elements.iter().all(|e| other.contains(e, GROUP_TOL))
    }

    /// Distinct rotation axes of the non-identity proper rotations.
    pub fn rotation_axes(&self) -> Vec<Vector3<f64>> {
        let mut axes: Vec<Vector3<f64>> = Vec::new();
        for e in &self.elements {
            if let Some((axis, angle)) = e.axis_angle() {
                if angle < 1e-9 {
                    continue;
                }
                let axis = canonical_axis(&axis);
                if !axes.iter().any(|a| (a - axis).norm() < 1e-7) {
                    axes.push(axis);
                }
            }
        }
        axes
    }

    /// Proper rotations about `axis`, as angles in `[0, 2 pi)` measured
    /// right-handedly around the given direction, sorted.
    pub fn angles_about(&self, axis: &Vector3<f64>, tol: f64) -> Vec<f64> {
        let n = axis.normalize();
        let mut out: Vec<f64> = Vec::new();
        for e in &self.elements {
            let Some((a, angle)) = e.axis_angle() else {
                continue;
            };
            let signed = if angle < 1e-12 {
                0.0
            } else if (a - n).norm() <= tol {
                angle
            } else if (a + n).norm() <= tol {
                std::f64::consts::TAU - angle
            } else {
                continue;
            };
            let signed = if signed >= std::f64::consts::TAU - 1e-12 {
                0.0
            } else {
                signed
            };
            if !out.iter().any(|x| (x - signed).abs() < 1e-9) {
                out.push(signed);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

fn rank3(vertices: &[Vector3<f64>]) -> usize {
    if vertices.is_empty() {
        return 0;
    }
    let m = nalgebra::DMatrix::from_fn(3, vertices.len(), |i, j| vertices[j][i]);
    let svd = m.svd(false, false);
    let scale = svd.singular_values.max().max(1.0);
    svd.singular_values
        .iter()
        .filter(|s| **s > 1e-9 * scale)
        .count()
}

fn contains_point(set: &[Vector3<f64>], p: &Vector3<f64>, tol: f64) -> bool {
    set.iter().any(|q| (q - p).amax() <= tol)
}

/// All orthogonal maps permuting the vertex set. The vertex centroid must
/// sit at the origin and the vertices must span three dimensions.
pub fn polytope_symmetries(vertices: &[Vector3<f64>]) -> Result<FiniteGroup> {
    let rank = rank3(vertices);
    if rank < 3 {
        return Err(Error::NotThreeDimensional(rank));
    }
    let centroid: Vector3<f64> = vertices.iter().sum::<Vector3<f64>>() / vertices.len() as f64;
    let scale = vertices.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    if centroid.norm() > 1e-9 * scale {
        return Err(Error::CentroidNotAtOrigin([
            centroid.x, centroid.y, centroid.z,
        ]));
    }
    // anchor triple: linearly independent
    let i = (0..vertices.len())
        .find(|&i| vertices[i].norm() > 1e-9 * scale)
        .expect("rank 3");
    let j = (0..vertices.len())
        .find(|&j| vertices[i].cross(&vertices[j]).norm() > 1e-9 * scale * scale)
        .expect("rank 3");
    let k = (0..vertices.len())
        .find(|&k| vertices[i].cross(&vertices[j]).dot(&vertices[k]).abs() > 1e-9 * scale.powi(3))
        .expect("rank 3");
    let anchor = [vertices[i], vertices[j], vertices[k]];
    let basis = Matrix3::from_columns(&anchor);
    let basis_inv = basis.try_inverse().expect("independent anchor");
    let gram = |t: &[Vector3<f64>; 3]| Matrix3::from_fn(|r, c| t[r].dot(&t[c]));
    let g0 = gram(&anchor);
    let tol = 1e-9 * scale * scale;

    let n = vertices.len();
    let mut maps = Vec::new();
    for a in 0..n {
        if (vertices[a].norm_squared() - g0[(0, 0)]).abs() > tol {
            continue;
        }
        for b in 0..n {
            if b == a {
                continue;
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                let image = [vertices[a], vertices[b], vertices[c]];
                if (gram(&image) - g0).amax() > tol {
                    continue;
                }
                let m = Matrix3::from_columns(&image) * basis_inv;
                let Ok(map) = OrthogonalMap::new(m) else {
                    continue;
                };
                if vertices
                    .iter()
                    .all(|v| contains_point(vertices, &map.apply(v), 1e-9 * scale))
                {
                    maps.push(map);
                }
            }
        }
    }
    FiniteGroup::new(maps)
}

/// Axis direction of the epistemic state supported on an unordered pair of
/// ontic states (numbered 1 to 4).
pub fn spekkens_pair_axis(a: usize, b: usize) -> Vector3<f64> {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    match (a, b) {
        (1, 2) => Vector3::z(),
        (3, 4) => -Vector3::z(),
        (1, 3) => Vector3::x(),
        (2, 4) => -Vector3::x(),
        (1, 4) => Vector3::y(),
        (2, 3) => -Vector3::y(),
        _ => panic!("invalid ontic pair ({a}, {b})"),
    }
}

/// Linear map induced by a permutation of the ontic states; `perm[i]` is
/// the image of state `i + 1`.
pub fn ontic_permutation_map(perm: [usize; 4]) -> OrthogonalMap {
    let image = |a: usize, b: usize| spekkens_pair_axis(perm[a - 1], perm[b - 1]);
    let m = Matrix3::from_columns(&[image(1, 3), image(1, 4), image(1, 2)]);
    OrthogonalMap::new(m).expect("ontic permutations act orthogonally")
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 1..=4 {
        for b in 1..=4 {
            for c in 1..=4 {
                for d in 1..=4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 5];
                    if p.iter().all(|&x| !std::mem::replace(&mut seen[x], true)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// The 24 maps induced by permutations of the four ontic states.
pub fn spekkens_group() -> FiniteGroup {
    FiniteGroup::new(
        permutations4()
            .into_iter()
            .map(ontic_permutation_map)
            .collect(),
    )
    .expect("permutation group")
}

/// The continuous symmetry axes declared for a space.
pub fn continuous_axes(space: &StateSpace) -> ContinuousAxes {
    space
        .symmetry()
        .map(|m| m.continuous.clone())
        .unwrap_or_else(ContinuousAxes::none)
}

/// Sampling check that rotations about `axis` by `angles` irregular angles
/// keep `samples` boundary points inside the body.
pub fn is_continuous_axis(
    space: &StateSpace,
    axis: &Vector3<f64>,
    angles: usize,
    samples: usize,
) -> bool {
    let points = space.check_points(samples);
    (1..=angles).all(|k| {
        // golden-ratio spacing avoids landing on finite symmetry angles only
        let angle = (k as f64 * 0.618_033_988_749_895).fract() * std::f64::consts::TAU;
        let r = OrthogonalMap::rotation(axis, angle);
        points.iter().all(|p| space.contains(&r.apply(p), 1e-9))
    })
}

/// Cross-checks declared continuous axes by sampling and, for "all axes",
/// a spread of directions.
pub fn verify_continuous_axes(space: &StateSpace) -> bool {
    match continuous_axes(space) {
        ContinuousAxes::All => fibonacci_sphere(12)
            .iter()
            .all(|a| is_continuous_axis(space, a, 8, 500)),
        ContinuousAxes::Axes(axes) => axes.iter().all(|a| is_continuous_axis(space, a, 16, 2000)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{builtin_theory, cube_vertices, octahedron_vertices, BuiltinTheory};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn orders_of_builtin_polytopes() {
        let cube = polytope_symmetries(&cube_vertices()).unwrap();
        let oct = polytope_symmetries(&octahedron_vertices()).unwrap();
        assert_eq!(cube.order(), 48);
        assert_eq!(oct.order(), 48);
        assert_eq!(cube.rotation_subgroup().order(), 24);
        assert_eq!(spekkens_group().order(), 24);
        assert_eq!(spekkens_group().rotation_subgroup().order(), 12);
    }

    #[test]
    fn identity_first_and_closed() {
        let g = polytope_symmetries(&cube_vertices()).unwrap();
        assert_eq!(g.elements()[0], OrthogonalMap::identity());
        for a in g.elements() {
            assert!(g.contains(&a.inverse(), GROUP_TOL));
        }
    }

    #[test]
    fn cube_has_thirteen_rotation_axes() {
        let rot = polytope_symmetries(&cube_vertices())
            .unwrap()
            .rotation_subgroup();
        let axes = rot.rotation_axes();
        assert_eq!(axes.len(), 13);
        let fourfold = axes
            .iter()
            .filter(|a| rot.angles_about(a, 1e-9).len() == 4)
            .count();
        let threefold = axes
            .iter()
            .filter(|a| rot.angles_about(a, 1e-9).len() == 3)
            .count();
        let twofold = axes
            .iter()
            .filter(|a| rot.angles_about(a, 1e-9).len() == 2)
            .count();
        assert_eq!((fourfold, threefold, twofold), (3, 4, 6));
    }

    #[test]
    fn spekkens_inside_octahedral() {
        let oct = polytope_symmetries(&octahedron_vertices()).unwrap();
        assert!(spekkens_group().is_subgroup_of(&oct));
        assert!(spekkens_group().contains(&OrthogonalMap::identity(), 0.0));
    }

    #[test]
    fn spekkens_pairs_are_antipodal_per_partition() {
        // complementary pairs are opposite points
        for (p, q) in [((1, 2), (3, 4)), ((1, 3), (2, 4)), ((1, 4), (2, 3))] {
            assert_eq!(spekkens_pair_axis(p.0, p.1), -spekkens_pair_axis(q.0, q.1));
        }
        // the swap 1 <-> 2 keeps z and exchanges the x and y half-axes
        let m = ontic_permutation_map([2, 1, 3, 4]);
        assert_eq!(m.apply(&Vector3::z()), Vector3::z());
        assert_eq!(m.apply(&Vector3::x()), -Vector3::y());
    }

    #[test]
    fn tetrahedron_has_order_24() {
        let s = 1.0;
        let tet = vec![
            Vector3::new(s, s, s),
            Vector3::new(s, -s, -s),
            Vector3::new(-s, s, -s),
            Vector3::new(-s, -s, s),
        ];
        let g = polytope_symmetries(&tet).unwrap();
        assert_eq!(g.order(), 24);
        assert_eq!(g.rotation_subgroup().order(), 12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let flat = vec![Vector3::x(), -Vector3::x(), Vector3::y(), -Vector3::y()];
        assert_eq!(
            polytope_symmetries(&flat),
            Err(Error::NotThreeDimensional(2))
        );
        let shifted: Vec<_> = cube_vertices()
            .iter()
            .map(|v| v + Vector3::new(0.5, 0.0, 0.0))
            .collect();
        assert!(matches!(
            polytope_symmetries(&shifted),
            Err(Error::CentroidNotAtOrigin(_))
        ));
        let m = Matrix3::new(2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(OrthogonalMap::new(m).is_err());
        let quarter = OrthogonalMap::rotation(&Vector3::z(), FRAC_PI_2);
        assert!(FiniteGroup::new(vec![OrthogonalMap::identity(), quarter]).is_err());
        assert!(FiniteGroup::new(vec![quarter]).is_err());
    }

    #[test]
    fn axis_angle_round_trip() {
        for axis in fibonacci_sphere(20) {
            for angle in [0.3, 1.7, PI - 1e-4, PI] {
                let r = OrthogonalMap::rotation(&axis, angle);
                let (a, t) = r.axis_angle().unwrap();
                assert!((t - angle).abs() < 1e-9);
                let back = OrthogonalMap::rotation(&a, t);
                assert!(back.approx_eq(&r, 1e-9), "{axis} {angle}");
            }
        }
        let reflection =
            OrthogonalMap::new(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))).unwrap();
        assert!(reflection.axis_angle().is_none());
    }

    #[test]
    fn angles_about_z() {
        let cube = polytope_symmetries(&cube_vertices())
            .unwrap()
            .rotation_subgroup();
        let angles = cube.angles_about(&Vector3::z(), 1e-9);
        assert_eq!(angles.len(), 4);
        for (k, a) in angles.iter().enumerate() {
            assert!((a - k as f64 * FRAC_PI_2).abs() < 1e-9);
        }
        assert_eq!(
            spekkens_group()
                .rotation_subgroup()
                .angles_about(&Vector3::z(), 1e-9)
                .len(),
            2
        );
    }

    #[test]
    fn builtin_groups_map_body_into_itself() {
        for t in BuiltinTheory::ALL {
            let space = builtin_theory(t);
            let g = space.reversible_group().unwrap();
            let pts = space.check_points(500);
            for e in g.elements() {
                for p in &pts {
                    assert!(space.contains(&e.apply(p), 1e-9), "{t}");
                }
            }
        }
        let cyl = builtin_theory(BuiltinTheory::Cylinder);
        assert_eq!(cyl.reversible_group().unwrap().order(), 16);
        let cone = builtin_theory(BuiltinTheory::Cone);
        assert_eq!(cone.reversible_group().unwrap().order(), 8);
    }

    #[test]
    fn continuous_axes_cross_check() {
        for t in BuiltinTheory::ALL {
            assert!(verify_continuous_axes(&builtin_theory(t)), "{t}");
        }
        let cube = builtin_theory(BuiltinTheory::Cube);
        assert!(!is_continuous_axis(&cube, &Vector3::z(), 8, 100));
        let cone = builtin_theory(BuiltinTheory::Cone);
        assert!(!is_continuous_axis(&cone, &Vector3::x(), 8, 500));
        assert!(continuous_axes(&cube).is_empty());
    }
}
