//! Phase groups of measurements, faces of well-defined energy, branch
//! locality, energies inferred from periods, and discrete-time aliasing.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::SeedableRng;
use serde::Serialize;

use crate::dynamics::{allowed_times, recipe_generator, EvolutionMode, HamiltonianObservable};
use crate::sampling::SampleRng;
use crate::statespace::{
    observable_from_values, orthonormal_complement, validate_measurement, ContinuousAxes, Effect,
    Measurement, StateSpace, StateVector,
};
use crate::symmetry::{FiniteGroup, OrthogonalMap};
use crate::{Error, Result};

type StepFn = Box<dyn Fn(&Vector3<f64>) -> Vector3<f64>>;

/// Tolerance for `w^T T = w^T`.
pub const PRESERVE_TOL: f64 = 1e-10;
/// Tolerance for `T rho = rho`.
pub const FIXED_TOL: f64 = 1e-10;
/// In-plane samples taken on a face of a smooth body.
pub const FACE_SAMPLES: usize = 64;

/// `max_b |T^T w_b - w_b|`.
pub fn statistics_defect(t: &OrthogonalMap, m: &Measurement) -> f64 {
    m.effects()
        .iter()
        .map(|e| (t.matrix().transpose() * e.weight - e.weight).amax())
        .fold(0.0, f64::max)
}

/// Reversible maps that leave every outcome probability of a measurement
/// unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGroupResult {
    /// All group elements preserving the statistics.
    pub preserving: FiniteGroup,
    /// Preserving elements outside the one-parameter families of
    /// `continuous_axes`. Equals `preserving` when there is no continuous part.
    pub finite_part: FiniteGroup,
    /// Unit axes spanning the continuous part; each generator is the
    /// rotation generator about the axis.
    pub continuous_axes: Vec<Vector3<f64>>,
}

impl PhaseGroupResult {
    pub fn continuous_dimension(&self) -> usize {
        self.continuous_axes.len()
    }

    pub fn continuous_generators(&self) -> Vec<Matrix3<f64>> {
        self.continuous_axes
            .iter()
            .map(|a| *recipe_generator(&HamiltonianObservable::new(*a, 0.0)).matrix())
            .collect()
    }
}

/// Null space of `a -> (a x w_b)_b`: the rotation generators annihilated
/// by every effect.
fn annihilating_axes(m: &Measurement) -> Vec<Vector3<f64>> {
    let rows = 3 * m.len();
    let mut mat = DMatrix::zeros(rows, 3);
    for (b, e) in m.effects().iter().enumerate() {
        let w = e.weight;
        // a x w = -[w]_x a
        let cross = Matrix3::new(0.0, w.z, -w.y, -w.z, 0.0, w.x, w.y, -w.x, 0.0);
        mat.view_mut((3 * b, 0), (3, 3)).copy_from(&cross);
    }
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let scale = svd.singular_values.max().max(1.0);
    let mut out = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= 1e-12 * scale {
            out.push(Vector3::new(v_t[(i, 0)], v_t[(i, 1)], v_t[(i, 2)]));
        }
    }
    // thin SVD returns min(rows, 3) = 3 singular vectors
    out
}

/// The phase group of `m` in `space`. Reflections join the finite part
/// only when `include_reflections` is set.
pub fn phase_group(
    space: &StateSpace,
    m: &Measurement,
    include_reflections: bool,
) -> Result<PhaseGroupResult> {
    let meta = space.symmetry().ok_or_else(|| {
        Error::UnsupportedSpace(format!(
            "'{}' has no transformation-group data",
            space.name()
        ))
    })?;
    let report = validate_measurement(m, space);
    if !report.pass {
        return Err(Error::InvalidMeasurement(format!(
            "measurement is not valid on '{}' (worst violation {:.3e})",
            space.name(),
            report.worst_violation
        )));
    }
    let group = if include_reflections {
        meta.group.clone()
    } else {
        meta.group.rotation_subgroup()
    };
    let preserving = FiniteGroup::new(
        group
            .elements()
            .iter()
            .filter(|t| statistics_defect(t, m) <= PRESERVE_TOL)
            .cloned()
            .collect(),
    )?;

    let null = annihilating_axes(m);
    let continuous_axes: Vec<Vector3<f64>> = match &meta.continuous {
        ContinuousAxes::All => null,
        ContinuousAxes::Axes(axes) => axes
            .iter()
            .filter(|a| {
                let a = a.normalize();
                // component outside the null space
                let proj: Vector3<f64> = null.iter().map(|n| n * n.dot(&a)).sum();
                (a - proj).norm() <= 1e-9
            })
            .map(|a| a.normalize())
            .collect(),
    };
    for g in continuous_axes.iter() {
        let gen = recipe_generator(&HamiltonianObservable::new(*g, 0.0));
        for e in m.effects() {
            debug_assert!((gen.matrix().transpose() * e.weight).amax() <= 1e-12);
        }
    }

    let in_identity_component = |t: &OrthogonalMap| -> bool {
        if !t.is_rotation() {
            return false;
        }
        match continuous_axes.len() {
            0 => false,
            1 => t
                .axis_angle()
                .map(|(a, angle)| angle < 1e-12 || a.cross(&continuous_axes[0]).norm() <= 1e-9)
                .unwrap_or(false),
            // two or more independent axes generate all rotations
            _ => true,
        }
    };
    let finite_part = if continuous_axes.is_empty() {
        preserving.clone()
    } else {
        let rest: Vec<OrthogonalMap> = std::iter::once(OrthogonalMap::identity())
            .chain(
                preserving
                    .elements()
                    .iter()
                    .filter(|t| !in_identity_component(t))
                    .cloned(),
            )
            .collect();
        FiniteGroup::new(rest).unwrap_or_else(|_| preserving.clone())
    };
    Ok(PhaseGroupResult {
        preserving,
        finite_part,
        continuous_axes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum FacePoints {
    Empty,
    /// Extreme points (a polytope face, or a single exposed point).
    Points(Vec<Vector3<f64>>),
    /// A flat face of a smooth body: a centre, an orthonormal basis of its
    /// affine hull, and points sampled around its relative boundary.
    Parametric {
        center: Vector3<f64>,
        basis: Vec<Vector3<f64>>,
        samples: Vec<Vector3<f64>>,
    },
}

/// Set of states on which an effect takes a fixed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub defining_effect: Effect,
    pub level: f64,
    pub points: FacePoints,
}

impl Face {
    pub fn is_empty(&self) -> bool {
        matches!(self.points, FacePoints::Empty)
    }

    /// Points sufficient to test linear properties of the face.
    pub fn test_points(&self) -> Vec<Vector3<f64>> {
        match &self.points {
            FacePoints::Empty => Vec::new(),
            FacePoints::Points(p) => p.clone(),
            FacePoints::Parametric { samples, .. } => samples.clone(),
        }
    }
}

/// Face of `space` where `effect` equals `level` (0 or 1).
pub fn face_where(space: &StateSpace, effect: &Effect, level: f64) -> Face {
    // e = 0 is the face where 1 - e = 1
    let (w, c) = if level == 0.0 {
        (-effect.weight, 1.0 - effect.bias)
    } else {
        (effect.weight, effect.bias)
    };
    let points = face_at_one(space, &w, c);
    Face {
        defining_effect: *effect,
        level,
        points,
    }
}

fn face_at_one(space: &StateSpace, w: &Vector3<f64>, c: f64) -> FacePoints {
    if w.norm() == 0.0 {
        return if (c - 1.0).abs() <= 1e-10 {
            FacePoints::Points(space.check_points(crate::statespace::SMOOTH_BOUNDARY_SAMPLES))
        } else {
            FacePoints::Empty
        };
    }
    if let Some(vertices) = space.vertices() {
        let pts: Vec<Vector3<f64>> = vertices
            .iter()
            .filter(|v| (w.dot(v) + c - 1.0).abs() <= 1e-10)
            .cloned()
            .collect();
        return if pts.is_empty() {
            FacePoints::Empty
        } else {
            FacePoints::Points(pts)
        };
    }
    let (top, p0) = space.support_point(w);
    if top + c < 1.0 - 1e-10 {
        return FacePoints::Empty;
    }
    let (u, v) = orthonormal_complement(w);
    let (lo, hi) = space.bounding_box();
    let reach = 2.0 * (hi - lo).norm();
    let rays = |from: &Vector3<f64>| -> Vec<Vector3<f64>> {
        (0..FACE_SAMPLES)
            .map(|k| {
                let phi = TAU * k as f64 / FACE_SAMPLES as f64;
                let dir = u * phi.cos() + v * phi.sin();
                let inside = |s: f64| space.violation(&(from + dir * s)) <= 1e-14;
                let (mut a, mut b) = (0.0, reach);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if inside(mid) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                from + dir * a
            })
            .collect()
    };
    let first = rays(&p0);
    if first.iter().all(|p| (p - p0).norm() < 1e-6) {
        return FacePoints::Points(vec![p0]);
    }
    let center: Vector3<f64> = first.iter().sum::<Vector3<f64>>() / first.len() as f64;
    FacePoints::Parametric {
        center,
        basis: vec![u, v],
        samples: rays(&center),
    }
}

/// States with probability 1 for outcome `label` of `m`.
pub fn well_defined_states(space: &StateSpace, m: &Measurement, label: &str) -> Result<Face> {
    let idx = m
        .outcome_index(label)
        .ok_or_else(|| Error::InvalidMeasurement(format!("no outcome labelled '{label}'")))?;
    Ok(face_where(space, &m.effects()[idx], 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StationarityReport {
    pub all_stationary: bool,
    /// A face point and its image after one step.
    pub moving_witness: Option<([f64; 3], [f64; 3])>,
}

/// Whether every point of `face` is left in place by the evolution: one
/// minimal step in discrete time, `A rho = 0` in continuous time.
pub fn stationary_under(
    space: &StateSpace,
    h: &HamiltonianObservable,
    face: &Face,
) -> Result<StationarityReport> {
    let spec = allowed_times(space, h)?;
    let g = recipe_generator(h);
    let step: StepFn = match spec.mode {
        EvolutionMode::None => {
            let v = h.vector();
            return Err(Error::NoAdmissibleEvolution([v.x, v.y, v.z]));
        }
        EvolutionMode::Discrete => {
            let m = crate::dynamics::evolve_map(&g, spec.minimal_time.expect("discrete"));
            Box::new(move |p| m.apply(p))
        }
        EvolutionMode::Continuous => {
            let a = *g.matrix();
            Box::new(move |p| p + a * p)
        }
    };
    for p in face.test_points() {
        let q = step(&p);
        if (q - p).amax() > FIXED_TOL {
            let image = if spec.mode == EvolutionMode::Continuous {
                // report the quarter-period image for a concrete witness
                crate::dynamics::evolve_map(&g, std::f64::consts::FRAC_PI_2 / h.norm()).apply(&p)
            } else {
                q
            };
            return Ok(StationarityReport {
                all_stationary: false,
                moving_witness: Some(([p.x, p.y, p.z], [image.x, image.y, image.z])),
            });
        }
    }
    Ok(StationarityReport {
        all_stationary: true,
        moving_witness: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Localization {
    pub localized: bool,
    /// The states with no support on the branches form an empty set.
    pub vacuous: bool,
}

/// Branch locality: `t` is localized to the outcomes `branches` (indices
/// into `m`) if it fixes every state giving those outcomes probability 0.
pub fn is_branch_localized(
    t: &OrthogonalMap,
    space: &StateSpace,
    m: &Measurement,
    branches: &[usize],
) -> Result<Localization> {
    let mut w = Vector3::zeros();
    let mut c = 0.0;
    for &i in branches {
        let e = m
            .effects()
            .get(i)
            .ok_or_else(|| Error::InvalidMeasurement(format!("no outcome with index {i}")))?;
        w += e.weight;
        c += e.bias;
    }
    let face = face_where(space, &Effect::new(w, c), 0.0);
    if face.is_empty() {
        return Ok(Localization {
            localized: true,
            vacuous: true,
        });
    }
    let localized = face
        .test_points()
        .iter()
        .all(|p| (t.apply(p) - p).amax() <= FIXED_TOL);
    Ok(Localization {
        localized,
        vacuous: false,
    })
}

/// Convention used when turning periods into energies.
pub const ENERGY_UNIT_NOTE: &str =
    "energy gaps use Delta = 2 pi / tau with hbar = 1 (equivalently 1 / tau with h = 1)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyAssignment {
    /// `E_1 = 0` gauge; index `i` holds level `i + 1`.
    pub energies: Vec<f64>,
    /// `max |E_j - E_i - Delta_ij|` over the supplied pairs.
    pub residual: f64,
    pub note: &'static str,
}

/// Solves `E_j - E_i = 2 pi / tau_ij` in least squares with `E_1 = 0`.
/// Levels are numbered from 1.
pub fn assign_energies(pairs: &[(usize, usize, f64)]) -> Result<EnergyAssignment> {
    if pairs.is_empty() {
        return Err(Error::DisconnectedPairs("no pairs given".into()));
    }
    let mut n = 0;
    for &(i, j, tau) in pairs {
        if i == 0 || j == 0 {
            return Err(Error::InvalidMeasurement(
                "energy levels are numbered from 1".into(),
            ));
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::NonPositivePeriod(tau));
        }
        n = n.max(i).max(j);
    }
    // union-find over levels
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j, _) in pairs {
        let (a, b) = (root(&mut parent, i - 1), root(&mut parent, j - 1));
        parent[a] = b;
    }
    let r0 = root(&mut parent, 0);
    let detached: Vec<usize> = (0..n)
        .filter(|&k| root(&mut parent, k) != r0)
        .map(|k| k + 1)
        .collect();
    if !detached.is_empty() {
        return Err(Error::DisconnectedPairs(format!(
            "levels {detached:?} are not linked to level 1"
        )));
    }
    let deltas: Vec<f64> = pairs.iter().map(|&(_, _, tau)| TAU / tau).collect();
    let mut energies = vec![0.0; n];
    if n > 1 {
        let mut a = DMatrix::zeros(pairs.len(), n - 1);
        for (r, &(i, j, _)) in pairs.iter().enumerate() {
            if j > 1 {
                a[(r, j - 2)] += 1.0;
            }
            if i > 1 {
                a[(r, i - 2)] -= 1.0;
            }
        }
        let b = DVector::from_vec(deltas.clone());
        let x = a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::DisconnectedPairs(e.to_string()))?;
        energies[1..].copy_from_slice(x.as_slice());
    }
    let residual = pairs
        .iter()
        .zip(&deltas)
        .map(|(&(i, j, _), d)| (energies[j - 1] - energies[i - 1] - d).abs())
        .fold(0.0, f64::max);
    let allowed = 1e-9 * deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if residual > allowed {
        return Err(Error::InconsistentCycle { residual, allowed });
    }
    Ok(EnergyAssignment {
        energies,
        residual,
        note: ENERGY_UNIT_NOTE,
    })
}

/// Distinguishable energies under evolution in steps of `tau_step`: with `k`
/// rotations about `axis` in the group, the classes are `2 pi j / (k tau)`,
/// `j = 0..k`, taken modulo `2 pi / tau`.
pub fn alias_classes(tau_step: f64, group: &FiniteGroup, axis: &Vector3<f64>) -> Result<Vec<f64>> {
    if !tau_step.is_finite() || tau_step <= 0.0 {
        return Err(Error::NonPositivePeriod(tau_step));
    }
    let k = group
        .rotation_subgroup()
        .angles_about(axis, 1e-9)
        .len()
        .max(1);
    Ok((0..k)
        .map(|j| TAU * j as f64 / (k as f64 * tau_step))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InvStarReport {
    /// The expectation of the observable is unchanged.
    pub inv_holds: bool,
    /// Every outcome probability is unchanged (membership of the phase
    /// group).
    pub inv_star_holds: bool,
    /// For two outcomes with distinct values, INV implies INV*.
    pub two_outcome_implication: Option<bool>,
}

/// Compares INV (mean energy conserved) with INV* (all energy statistics
/// conserved) for the observable with `values` on `m` under `t`.
pub fn check_inv_star(
    space: &StateSpace,
    m: &Measurement,
    values: &[f64],
    t: &OrthogonalMap,
    samples: usize,
    seed: u64,
) -> Result<InvStarReport> {
    let obs = observable_from_values(values, m)?;
    let mut rng = SampleRng::seed_from_u64(seed);
    let mut states: Vec<StateVector> = (0..samples)
        .map(|_| space.random_member(&mut rng))
        .collect();
    states.extend(space.check_points(500));
    let inv_holds = states
        .iter()
        .all(|p| (obs.expectation(&t.apply(p)) - obs.expectation(p)).abs() <= PRESERVE_TOL);
    let in_group = match space.reversible_group() {
        Some(g) => g.contains(t, 1e-9),
        None => true,
    };
    let inv_star_holds = in_group && statistics_defect(t, m) <= PRESERVE_TOL;
    let two_outcome_implication =
        (m.len() == 2 && values[0] != values[1]).then_some(!inv_holds || inv_star_holds);
    Ok(InvStarReport {
        inv_holds,
        inv_star_holds,
        two_outcome_implication,
    })
}

/// A three-outcome measurement on the cube with values `(0, E, 2E)` and a
/// cube symmetry that moves probability from the middle outcome equally
/// into the outer two: the mean energy is conserved, the distribution is not.
pub fn three_outcome_counterexample(energy: f64) -> (Measurement, Vec<f64>, OrthogonalMap) {
    let e1 = Effect::new(Vector3::new(-0.125, 0.0, -0.125), 0.25);
    let e2 = Effect::new(Vector3::new(0.0, 0.0, 0.25), 0.5);
    let e3 = Effect::new(Vector3::new(0.125, 0.0, -0.125), 0.25);
    let m = Measurement::unlabelled(vec![e1, e2, e3]).expect("three effects");
    // quarter turn about x: (x, y, z) -> (x, -z, y)
    let t = OrthogonalMap::new(Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0))
        .expect("rotation");
    (m, vec![0.0, energy, 2.0 * energy], t)
}
