//! States, effects, measurements and observables of a three-dimensional
//! theory, together with the convex bodies that hold its normalized states.
//!
//! Coordinates are expectation values `(<X>, <Y>, <Z>)` of three two-outcome
//! measurements. Effects are affine functionals `w . rho + c`; the unit effect
//! is `w = 0, c = 1`. The normalization component of the state is implicit.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sampling::fibonacci_sphere;
use crate::symmetry::{self, FiniteGroup};
use crate::{Error, Result};

pub type StateVector = Vector3<f64>;

/// Number of boundary points used to scan smooth bodies.
pub const SMOOTH_BOUNDARY_SAMPLES: usize = 10_000;
/// Slack allowed when checking that effect values lie in `[0, 1]`.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Tolerance on `sum w = 0` and `sum c = 1`.
const NORMALIZATION_TOL: f64 = 1e-12;

/// Builds a state from a slice, checking length and finiteness.
pub fn state_from_slice(coords: &[f64]) -> Result<StateVector> {
    if coords.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: coords.len(),
        });
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidMeasurement(
            "non-finite state coordinate".into(),
        ));
    }
    Ok(Vector3::new(coords[0], coords[1], coords[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidMeasurement(format!("unknown axis '{other}'"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Affine functional `rho -> weight . rho + bias`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effect {
    pub weight: Vector3<f64>,
    pub bias: f64,
}

impl Effect {
    pub fn new(weight: Vector3<f64>, bias: f64) -> Self {
        Effect { weight, bias }
    }

    pub fn unit() -> Self {
        Effect::new(Vector3::zeros(), 1.0)
    }

    /// `(+-1/2 axis, 1/2)`.
    pub fn canonical(axis: Axis, positive: bool) -> Self {
        let sign = if positive { 0.5 } else { -0.5 };
        Effect::new(axis.unit() * sign, 0.5)
    }

    pub fn value(&self, rho: &StateVector) -> f64 {
        self.weight.dot(rho) + self.bias
    }
}

pub fn effect_value(e: &Effect, rho: &StateVector) -> f64 {
    e.value(rho)
}

/// An ordered family of effects with outcome labels.
///
/// Normalization (`sum w = 0`, `sum c = 1`) is not enforced at construction;
/// use [`validate_measurement`].
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    effects: Vec<Effect>,
    labels: Vec<String>,
}

impl Measurement {
    pub fn new(effects: Vec<Effect>, labels: Vec<String>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidMeasurement("no effects".into()));
        }
        if effects.len() != labels.len() {
            return Err(Error::InvalidMeasurement(format!(
                "{} effects but {} labels",
                effects.len(),
                labels.len()
            )));
        }
        Ok(Measurement { effects, labels })
    }

    /// Effects labelled `"1"`, `"2"`, ...
    pub fn unlabelled(effects: Vec<Effect>) -> Result<Self> {
        let labels = (1..=effects.len()).map(|i| i.to_string()).collect();
        Measurement::new(effects, labels)
    }

    /// The two-outcome measurement along a coordinate axis, outcomes `+`, `-`
    /// in that order.
    pub fn canonical(axis: Axis) -> Self {
        Measurement {
            effects: vec![
                Effect::canonical(axis, true),
                Effect::canonical(axis, false),
            ],
            labels: vec!["+".into(), "-".into()],
        }
    }

    /// Two-outcome measurement along an arbitrary unit direction scaled so
    /// that `|w . rho| <= 1/2` on a body with `max |n . rho| = reach`.
    pub fn along(direction: &Vector3<f64>, reach: f64) -> Self {
        let w = direction / (2.0 * reach);
        Measurement {
            effects: vec![Effect::new(w, 0.5), Effect::new(-w, 0.5)],
            labels: vec!["+".into(), "-".into()],
        }
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn probabilities(&self, rho: &StateVector) -> Vec<f64> {
        self.effects.iter().map(|e| e.value(rho)).collect()
    }

    pub fn weight_sum(&self) -> Vector3<f64> {
        self.effects.iter().map(|e| e.weight).sum()
    }

    pub fn bias_sum(&self) -> f64 {
        self.effects.iter().map(|e| e.bias).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementReport {
    pub pass: bool,
    /// `|sum w|`
    pub weight_sum_defect: f64,
    /// `|sum c - 1|`
    pub bias_sum_defect: f64,
    /// Largest amount by which an effect leaves `[0, 1]` on the body.
    pub worst_violation: f64,
    pub worst_effect: Option<usize>,
    pub witness: Option<[f64; 3]>,
}

/// Checks normalization and `0 <= e(rho) <= 1` over the body: exactly on
/// polytope vertices and the builtin smooth bodies, and on boundary samples
/// for custom constraint bodies.
pub fn validate_measurement(m: &Measurement, space: &StateSpace) -> MeasurementReport {
    let weight_sum_defect = m.weight_sum().norm();
    let bias_sum_defect = (m.bias_sum() - 1.0).abs();
    let mut worst_violation = 0.0;
    let mut worst_effect = None;
    let mut witness = None;
    for (i, e) in m.effects.iter().enumerate() {
        let (hi, hi_at) = space.support_point(&e.weight);
        let (lo_neg, lo_at) = space.support_point(&-e.weight);
        let over = hi + e.bias - 1.0;
        let under = -(e.bias - lo_neg);
        for (v, at) in [(over, hi_at), (under, lo_at)] {
            if v > worst_violation {
                worst_violation = v;
                worst_effect = Some(i);
                witness = Some([at.x, at.y, at.z]);
            }
        }
    }
    MeasurementReport {
        pass: weight_sum_defect <= NORMALIZATION_TOL
            && bias_sum_defect <= NORMALIZATION_TOL
            && worst_violation <= VALIDATION_TOL,
        weight_sum_defect,
        bias_sum_defect,
        worst_violation,
        worst_effect,
        witness,
    }
}

/// Value-weighted sum of the effects of a measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    values: Vec<f64>,
    measurement: Measurement,
    weight: Vector3<f64>,
    constant: f64,
}

impl Observable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn measurement(&self) -> &Measurement {
        &self.measurement
    }

    /// `W = sum x_i w_i`.
    pub fn weight(&self) -> Vector3<f64> {
        self.weight
    }

    /// `C = sum x_i c_i`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn expectation(&self, rho: &StateVector) -> f64 {
        self.weight.dot(rho) + self.constant
    }

    /// `sum_i x_i p_i(rho)`, the route the vector form must agree with.
    pub fn weighted_expectation(&self, rho: &StateVector) -> f64 {
        self.values
            .iter()
            .zip(self.measurement.effects())
            .map(|(x, e)| x * e.value(rho))
            .sum()
    }
}

pub fn observable_from_values(values: &[f64], m: &Measurement) -> Result<Observable> {
    if values.len() != m.len() {
        return Err(Error::InvalidMeasurement(format!(
            "{} values for {} outcomes",
            values.len(),
            m.len()
        )));
    }
    let weight = values
        .iter()
        .zip(m.effects())
        .map(|(x, e)| e.weight * *x)
        .sum();
    let constant = values
        .iter()
        .zip(m.effects())
        .map(|(x, e)| x * e.bias)
        .sum();
    Ok(Observable {
        values: values.to_vec(),
        measurement: m.clone(),
        weight,
        constant,
    })
}

/// Convex constraint `g(x) <= 0`, in serializable form for scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Constraint {
    /// `|x| <= radius`
    Ball { radius: f64 },
    /// `x^2 + y^2 <= radius^2`
    DiskXy { radius: f64 },
    /// `x^2 + y^2 <= a + b z`
    Paraboloid { a: f64, b: f64 },
    /// `min <= x_axis <= max`
    Slab { axis: Axis, min: f64, max: f64 },
    /// `normal . x <= offset`
    HalfSpace { normal: [f64; 3], offset: f64 },
}

impl Constraint {
    pub fn value(&self, x: &Vector3<f64>) -> f64 {
        match *self {
            Constraint::Ball { radius } => x.norm() - radius,
            Constraint::DiskXy { radius } => x.x.hypot(x.y) - radius,
            Constraint::Paraboloid { a, b } => x.x * x.x + x.y * x.y - a - b * x.z,
            Constraint::Slab { axis, min, max } => {
                let v = x[axis.index()];
                (min - v).max(v - max)
            }
            Constraint::HalfSpace { normal, offset } => {
                let n = Vector3::from(normal);
                let len = n.norm();
                (n.dot(x) - offset) / len
            }
        }
    }
}

/// Full-dimensional convex polytope given by its vertices; facets are
/// enumerated once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    vertices: Vec<Vector3<f64>>,
    facets: Vec<(Vector3<f64>, f64)>,
}

impl Polytope {
    pub fn new(vertices: Vec<Vector3<f64>>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::DegeneratePolytope(format!(
                "{} vertices cannot span three dimensions",
                vertices.len()
            )));
        }
        let scale = vertices.iter().fold(1.0f64, |m, v| m.max(v.norm()));
        let eps = 1e-9 * scale;
        let n = vertices.len();
        let mut facets: Vec<(Vector3<f64>, f64)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let normal = (vertices[j] - vertices[i]).cross(&(vertices[k] - vertices[i]));
                    let len = normal.norm();
                    if len < eps * scale {
                        continue;
                    }
                    let mut normal = normal / len;
                    let mut offset = normal.dot(&vertices[i]);
                    let above = vertices
                        .iter()
                        .filter(|v| normal.dot(v) > offset + eps)
                        .count();
                    let below = vertices
                        .iter()
                        .filter(|v| normal.dot(v) < offset - eps)
                        .count();
                    if above > 0 && below > 0 {
                        continue;
                    }
                    if above == 0 && below == 0 {
                        return Err(Error::DegeneratePolytope(
                            "all vertices are coplanar".into(),
                        ));
                    }
                    if below == 0 {
                        normal = -normal;
                        offset = -offset;
                    }
                    let dup = facets
                        .iter()
                        .any(|(m, o)| (m - normal).norm() < 1e-9 && (o - offset).abs() < eps);
                    if !dup {
                        facets.push((normal, offset));
                    }
                }
            }
        }
        if facets.len() < 4 {
            return Err(Error::DegeneratePolytope("fewer than four facets".into()));
        }
        Ok(Polytope { vertices, facets })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    /// Outward unit normals and offsets: the body is `n . x <= offset`.
    pub fn facets(&self) -> &[(Vector3<f64>, f64)] {
        &self.facets
    }

    fn violation(&self, x: &Vector3<f64>) -> f64 {
        self.facets
            .iter()
            .map(|(n, o)| n.dot(x) - o)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    /// Unit ball.
    Ball,
    /// `x^2 + y^2 <= 1, |z| <= 1`.
    Cylinder,
    /// `x^2 + y^2 <= (1 + z) / 2, -1 <= z <= 1`.
    Cone,
    Polytope(Polytope),
    Constraints(Vec<Constraint>),
}

impl Body {
    fn constraints(&self) -> Option<Vec<Constraint>> {
        match self {
            Body::Ball => Some(vec![Constraint::Ball { radius: 1.0 }]),
            Body::Cylinder => Some(vec![
                Constraint::DiskXy { radius: 1.0 },
                Constraint::Slab {
                    axis: Axis::Z,
                    min: -1.0,
                    max: 1.0,
                },
            ]),
            Body::Cone => Some(vec![
                Constraint::Paraboloid { a: 0.5, b: 0.5 },
                Constraint::Slab {
                    axis: Axis::Z,
                    min: -1.0,
                    max: 1.0,
                },
            ]),
            Body::Polytope(_) => None,
            Body::Constraints(cs) => Some(cs.clone()),
        }
    }
}

/// Set of rotation axes along which every angle is a symmetry of the body.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousAxes {
    All,
    Axes(Vec<Vector3<f64>>),
}

impl ContinuousAxes {
    pub fn none() -> Self {
        ContinuousAxes::Axes(Vec::new())
    }

    /// True if `direction` (any length) is parallel to a listed axis.
    pub fn contains(&self, direction: &Vector3<f64>, tol: f64) -> bool {
        let n = direction.normalize();
        match self {
            ContinuousAxes::All => true,
            ContinuousAxes::Axes(axes) => axes.iter().any(|a| a.cross(&n).norm() <= tol),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ContinuousAxes::Axes(a) if a.is_empty())
    }
}

/// Reversible-transformation data attached to a state space.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryMeta {
    pub continuous: ContinuousAxes,
    /// Every axis perpendicular to this normal admits a rotation by pi
    /// (the flips of a cylinder).
    pub flip_plane_normal: Option<Vector3<f64>>,
    /// Finite group of symmetries: the full group for polytopes, a
    /// representative finite subgroup for smooth bodies.
    pub group: FiniteGroup,
}

/// Extra restriction on which symmetries count as physical transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformRestriction {
    /// Only maps induced by permutations of the four ontic states.
    SpekkensOntic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinTheory {
    Ball,
    Cylinder,
    Cone,
    Octahedron,
    Cube,
    Spekkens,
}

impl BuiltinTheory {
    pub const ALL: [BuiltinTheory; 6] = [
        BuiltinTheory::Ball,
        BuiltinTheory::Cylinder,
        BuiltinTheory::Cone,
        BuiltinTheory::Octahedron,
        BuiltinTheory::Cube,
        BuiltinTheory::Spekkens,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinTheory::Ball => "ball",
            BuiltinTheory::Cylinder => "cylinder",
            BuiltinTheory::Cone => "cone",
            BuiltinTheory::Octahedron => "octahedron",
            BuiltinTheory::Cube => "cube",
            BuiltinTheory::Spekkens => "spekkens",
        }
    }
}

impl FromStr for BuiltinTheory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinTheory::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownTheory(s.to_string()))
    }
}

impl fmt::Display for BuiltinTheory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn octahedron_vertices() -> Vec<Vector3<f64>> {
    vec![
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(-1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, -1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 0.0, -1.0),
    ]
}

/// Cube vertices `(+-1, +-1, +-1)`, starting at `(1, 1, 1)`.
pub fn cube_vertices() -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(8);
    for x in [1.0, -1.0] {
        for y in [1.0, -1.0] {
            for z in [1.0, -1.0] {
                out.push(Vector3::new(x, y, z));
            }
        }
    }
    out
}

/// A compact convex set of normalized states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    name: String,
    body: Body,
    symmetry: Option<SymmetryMeta>,
    restriction: Option<TransformRestriction>,
}

impl StateSpace {
    pub fn new(name: impl Into<String>, body: Body) -> Self {
        StateSpace {
            name: name.into(),
            body,
            symmetry: None,
            restriction: None,
        }
    }

    /// A polytope theory with its full symmetry group computed from the
    /// vertices.
    pub fn from_vertices(name: impl Into<String>, vertices: Vec<Vector3<f64>>) -> Result<Self> {
        let group = symmetry::polytope_symmetries(&vertices)?;
        let body = Body::Polytope(Polytope::new(vertices)?);
        Ok(StateSpace::new(name, body).with_symmetry(SymmetryMeta {
            continuous: ContinuousAxes::none(),
            flip_plane_normal: None,
            group,
        }))
    }

    pub fn with_symmetry(mut self, meta: SymmetryMeta) -> Self {
        self.symmetry = Some(meta);
        self
    }

    pub fn with_restriction(mut self, r: TransformRestriction) -> Self {
        self.restriction = Some(r);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn dimension(&self) -> usize {
        3
    }

    pub fn symmetry(&self) -> Option<&SymmetryMeta> {
        self.symmetry.as_ref()
    }

    pub fn restriction(&self) -> Option<TransformRestriction> {
        self.restriction
    }

    /// The finite group of admissible reversible maps (already restricted
    /// for Spekkens).
    pub fn reversible_group(&self) -> Option<&FiniteGroup> {
        self.symmetry.as_ref().map(|m| &m.group)
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.body, Body::Ball)
    }

    pub fn vertices(&self) -> Option<&[Vector3<f64>]> {
        match &self.body {
            Body::Polytope(p) => Some(p.vertices()),
            _ => None,
        }
    }

    /// Largest constraint value; `<= 0` inside the body.
    pub fn violation(&self, rho: &StateVector) -> f64 {
        match &self.body {
            Body::Polytope(p) => p.violation(rho),
            body => body
                .constraints()
                .unwrap_or_default()
                .iter()
                .map(|c| c.value(rho))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn contains(&self, rho: &StateVector, tol: f64) -> bool {
        self.violation(rho) <= tol
    }

    /// Boundary point of the ray from the origin along `direction`.
    /// Requires the origin to be interior.
    pub fn ray_boundary(&self, direction: &Vector3<f64>) -> Vector3<f64> {
        let d = direction.normalize();
        let inside = |s: f64| self.violation(&(d * s)) <= 0.0;
        let mut hi = 1.0;
        while inside(hi) && hi < 1e6 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d * lo
    }

    /// Points on which linear properties of the whole body can be checked:
    /// the vertices of a polytope, or `count` boundary samples.
    pub fn check_points(&self, count: usize) -> Vec<Vector3<f64>> {
        match &self.body {
            Body::Polytope(p) => p.vertices().to_vec(),
            _ => fibonacci_sphere(count)
                .iter()
                .map(|d| self.ray_boundary(d))
                .collect(),
        }
    }

    pub fn boundary_samples(&self) -> Vec<Vector3<f64>> {
        self.check_points(SMOOTH_BOUNDARY_SAMPLES)
    }

    /// `max n . rho` over the body.
    pub fn support(&self, n: &Vector3<f64>) -> f64 {
        self.support_point(n).0
    }

    /// Maximum of `n . rho` and a maximizing point. Exact for polytopes and
    /// the builtin smooth bodies; custom constraint bodies use boundary
    /// samples refined by a local direction search.
    pub fn support_point(&self, n: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let len = n.norm();
        if len == 0.0 {
            return (0.0, Vector3::zeros());
        }
        match &self.body {
            Body::Polytope(p) => p.vertices().iter().map(|v| (n.dot(v), *v)).fold(
                (f64::NEG_INFINITY, Vector3::zeros()),
                |a, b| if b.0 > a.0 { b } else { a },
            ),
            Body::Ball => (len, n / len),
            Body::Cylinder => {
                let a = n.x.hypot(n.y);
                let xy = if a > 0.0 {
                    Vector3::new(n.x / a, n.y / a, 0.0)
                } else {
                    Vector3::zeros()
                };
                let z = if n.z >= 0.0 { 1.0 } else { -1.0 };
                (a + n.z.abs(), xy + Vector3::new(0.0, 0.0, z))
            }
            Body::Cone => {
                // radius at height z is s = sqrt((1 + z) / 2), z = 2 s^2 - 1:
                // maximize a s + n_z (2 s^2 - 1) over s in [0, 1]
                let a = n.x.hypot(n.y);
                let s = if n.z >= 0.0 {
                    1.0
                } else {
                    (a / (4.0 * -n.z)).min(1.0)
                };
                let z = 2.0 * s * s - 1.0;
                let xy = if a > 0.0 {
                    Vector3::new(n.x / a * s, n.y / a * s, 0.0)
                } else {
                    Vector3::zeros()
                };
                (a * s + n.z * z, xy + Vector3::new(0.0, 0.0, z))
            }
            Body::Constraints(_) => self.numeric_support(n),
        }
    }

    fn numeric_support(&self, n: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let (mut best_dir, mut best) = fibonacci_sphere(SMOOTH_BOUNDARY_SAMPLES)
            .into_iter()
            .map(|d| {
                let p = self.ray_boundary(&d);
                (d, n.dot(&p))
            })
            .fold((Vector3::z(), f64::NEG_INFINITY), |a, b| {
                if b.1 > a.1 {
                    b
                } else {
                    a
                }
            });
        // compass search over directions
        let mut step = 0.05;
        while step > 1e-13 {
            let (u, v) = orthonormal_complement(&best_dir);
            let mut improved = false;
            for (du, dv) in [
                (1.0, 0.0),
                (-1.0, 0.0),
                (0.0, 1.0),
                (0.0, -1.0),
                (1.0, 1.0),
                (-1.0, -1.0),
                (1.0, -1.0),
                (-1.0, 1.0),
            ] {
                let cand = (best_dir + u * (du * step) + v * (dv * step)).normalize();
                let val = n.dot(&self.ray_boundary(&cand));
                if val > best {
                    best = val;
                    best_dir = cand;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        (best, self.ray_boundary(&best_dir))
    }

    /// `max |n . rho|` over the body.
    pub fn reach(&self, n: &Vector3<f64>) -> f64 {
        self.support(n).max(self.support(&-n))
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::zeros();
        let mut hi = Vector3::zeros();
        for axis in Axis::ALL {
            let e = axis.unit();
            hi[axis.index()] = self.support(&e);
            lo[axis.index()] = -self.support(&-e);
        }
        (lo, hi)
    }

    /// Uniform random member state by rejection from the bounding box.
    pub fn random_member<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVector {
        let (lo, hi) = self.bounding_box();
        loop {
            let p = Vector3::new(
                rng.random_range(lo.x..=hi.x),
                rng.random_range(lo.y..=hi.y),
                rng.random_range(lo.z..=hi.z),
            );
            if self.contains(&p, 0.0) {
                return p;
            }
        }
    }

    pub fn canonical_measurement(&self, axis: Axis) -> Measurement {
        Measurement::canonical(axis)
    }

    pub fn canonical_measurements(&self) -> Vec<(Axis, Measurement)> {
        Axis::ALL
            .iter()
            .map(|&a| (a, Measurement::canonical(a)))
            .collect()
    }
}

/// Two unit vectors completing `n` to an orthonormal frame.
pub fn orthonormal_complement(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let n = n.normalize();
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    (u, v)
}

/// One of the six example theories with its symmetry data.
pub fn builtin_theory(theory: BuiltinTheory) -> StateSpace {
    let octahedral =
        symmetry::polytope_symmetries(&octahedron_vertices()).expect("octahedron symmetries");
    let subgroup = |keep: &dyn Fn(f64) -> bool| {
        FiniteGroup::new(
            octahedral
                .elements()
                .iter()
                .filter(|m| keep(m.matrix()[(2, 2)]))
                .cloned()
                .collect(),
        )
        .expect("subgroup of the octahedral group")
    };
    let z = Vector3::z();
    match theory {
        BuiltinTheory::Ball => StateSpace::new("ball", Body::Ball).with_symmetry(SymmetryMeta {
            continuous: ContinuousAxes::All,
            flip_plane_normal: None,
            group: octahedral.clone(),
        }),
        BuiltinTheory::Cylinder => {
            StateSpace::new("cylinder", Body::Cylinder).with_symmetry(SymmetryMeta {
                continuous: ContinuousAxes::Axes(vec![z]),
                flip_plane_normal: Some(z),
                group: subgroup(&|zz| zz.abs() == 1.0),
            })
        }
        BuiltinTheory::Cone => StateSpace::new("cone", Body::Cone).with_symmetry(SymmetryMeta {
            continuous: ContinuousAxes::Axes(vec![z]),
            flip_plane_normal: None,
            group: subgroup(&|zz| zz == 1.0),
        }),
        BuiltinTheory::Octahedron => {
            StateSpace::from_vertices("octahedron", octahedron_vertices()).expect("octahedron")
        }
        BuiltinTheory::Cube => StateSpace::from_vertices("cube", cube_vertices()).expect("cube"),
        BuiltinTheory::Spekkens => {
            let body = Body::Polytope(Polytope::new(octahedron_vertices()).expect("octahedron"));
            StateSpace::new("spekkens", body)
                .with_symmetry(SymmetryMeta {
                    continuous: ContinuousAxes::none(),
                    flip_plane_normal: None,
                    group: symmetry::spekkens_group(),
                })
                .with_restriction(TransformRestriction::SpekkensOntic)
        }
    }
}

pub fn builtin_by_name(name: &str) -> Result<StateSpace> {
    Ok(builtin_theory(name.parse()?))
}
