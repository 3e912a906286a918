//! Hamiltonians of three-dimensional theories: the generator recipe,
//! continuous and discrete evolution, allowed times, and the desiderata
//! verifier.
//!
//! Units have `hbar = 1`. The generator of a Hamiltonian vector `H` is
//! `A = H1 Lx + H2 Ly + H3 Lz`, so `d rho / dt = A rho = H x rho`, the same
//! sense of rotation as the von Neumann equation on the Bloch ball.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::realrep::{self, gellmann_basis};
use crate::sampling::rng_from_seed;
use crate::statespace::{
    validate_measurement, Body, Effect, Measurement, Observable, StateSpace, StateVector,
};
use crate::symmetry::OrthogonalMap;
use crate::{Error, Result};

/// Tolerance for "t is an integer multiple of the minimal time".
pub const LATTICE_TOL: f64 = 1e-9;
/// Tolerance for a Hamiltonian axis to match a symmetry axis.
pub const AXIS_TOL: f64 = 1e-9;
/// Energy drift allowed along a trajectory.
pub const ENERGY_TOL: f64 = 1e-9;
/// Boundary samples used when checking that a map preserves a smooth body.
const GEN_CHECK_POINTS: usize = 2000;

/// `Lx`, `Ly`, `Lz`: the standard generators of rotations about the axes.
pub fn l_matrices() -> [Matrix3<f64>; 3] {
    [
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
        Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0),
        Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    ]
}

/// Hamiltonian vector `(H1, H2, H3)` with energy offset `H0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianObservable {
    vector: Vector3<f64>,
    offset: f64,
    decomposition: Option<Observable>,
}

impl HamiltonianObservable {
    pub fn new(vector: Vector3<f64>, offset: f64) -> Self {
        HamiltonianObservable {
            vector,
            offset,
            decomposition: None,
        }
    }

    pub fn from_slice(v: &[f64], offset: f64) -> Result<Self> {
        if v.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: v.len(),
            });
        }
        Ok(HamiltonianObservable::new(
            Vector3::new(v[0], v[1], v[2]),
            offset,
        ))
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.vector
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.vector == Vector3::zeros()
    }

    /// Unit rotation axis; `None` for the zero Hamiltonian.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        (!self.is_zero()).then(|| self.vector.normalize())
    }

    /// `H . rho + H0`, the conserved quantity along trajectories.
    pub fn energy(&self, rho: &StateVector) -> f64 {
        self.vector.dot(rho) + self.offset
    }

    pub fn decomposition(&self) -> Option<&Observable> {
        self.decomposition.as_ref()
    }

    /// Attaches the two-outcome decomposition along `H` for `space` after
    /// checking that its vector form agrees with the effect-weighted sum on
    /// 100 random member states.
    pub fn with_decomposition(mut self, space: &StateSpace, seed: u64) -> Result<Self> {
        let obs = decompose(&self, space)?;
        let mut rng = rng_from_seed(seed);
        for _ in 0..100 {
            let rho = space.random_member(&mut rng);
            let a = obs.expectation(&rho);
            let b = obs.weighted_expectation(&rho);
            let c = 0.5 * self.vector.dot(&rho) + self.offset;
            if (a - b).abs() > 1e-10 || (a - c).abs() > 1e-10 {
                return Err(Error::InvalidMeasurement(format!(
                    "decomposition disagrees with H at {rho:?}"
                )));
            }
        }
        self.decomposition = Some(obs);
        Ok(self)
    }
}

/// Spectral-style decomposition of `H` as an observable of `space`.
///
/// Effects are `(+-n / (2 s), 1/2)` along `n = H / |H|` with
/// `s = max |n . rho|`, values `H0 +- s |H| / 2`. The vector form is then
/// `W = H / 2`, `C = H0`, so the outcome gap equals the rotation frequency
/// on the ball. The zero Hamiltonian is the unit effect with value `H0`.
pub fn decompose(h: &HamiltonianObservable, space: &StateSpace) -> Result<Observable> {
    match h.axis() {
        None => crate::statespace::observable_from_values(
            &[h.offset],
            &Measurement::new(vec![Effect::unit()], vec!["1".into()])?,
        ),
        Some(n) => {
            let s = space.reach(&n);
            let m = Measurement::along(&n, s);
            let half = 0.5 * s * h.norm();
            crate::statespace::observable_from_values(&[h.offset + half, h.offset - half], &m)
        }
    }
}

/// Antisymmetric generating matrix built from a Hamiltonian vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    matrix: Matrix3<f64>,
    source: Vector3<f64>,
}

impl Generator {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// The Hamiltonian vector the generator was built from.
    pub fn source(&self) -> Vector3<f64> {
        self.source
    }

    /// `max |(H^T A)_j|`.
    pub fn annihilation_defect(&self) -> f64 {
        (self.matrix.transpose() * self.source).amax()
    }
}

pub fn recipe_generator(h: &HamiltonianObservable) -> Generator {
    let [lx, ly, lz] = l_matrices();
    let v = h.vector;
    Generator {
        matrix: lx * v.x + ly * v.y + lz * v.z,
        source: v,
    }
}

/// Inverse of [`recipe_generator`]: `H1 = A32, H2 = A13, H3 = A21`, `H0 = 0`.
pub fn hamiltonian_from_generator(a: &Matrix3<f64>) -> Result<HamiltonianObservable> {
    let defect = (a + a.transpose()).amax();
    if defect > 1e-12 {
        return Err(Error::NotAntisymmetric(defect));
    }
    Ok(HamiltonianObservable::new(
        Vector3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)]),
        0.0,
    ))
}

/// `exp(A t)` by the Rodrigues formula: rotation by `|H| t` about `H`.
pub fn evolve_map(g: &Generator, t: f64) -> OrthogonalMap {
    let norm = g.source.norm();
    if norm == 0.0 || t == 0.0 {
        return OrthogonalMap::identity();
    }
    let k = g.matrix / norm;
    let theta = norm * t;
    let m = Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos());
    OrthogonalMap::new(m).expect("Rodrigues matrices are orthogonal")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMode {
    Continuous,
    Discrete,
    None,
}

/// Which times a Hamiltonian may be evolved for in a given theory.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvolutionSpec {
    pub mode: EvolutionMode,
    /// Smallest positive admissible rotation angle (discrete only).
    pub minimal_angle: Option<f64>,
    /// `minimal_angle / |H|` (discrete only).
    pub minimal_time: Option<f64>,
    /// Set for the zero Hamiltonian.
    pub trivial: bool,
    pub allowed_times: String,
}

impl EvolutionSpec {
    fn continuous(trivial: bool) -> Self {
        EvolutionSpec {
            mode: EvolutionMode::Continuous,
            minimal_angle: None,
            minimal_time: None,
            trivial,
            allowed_times: "all t".into(),
        }
    }

    /// Checks `t` against the admissible set, returning the lattice index
    /// in discrete mode.
    pub fn check_time(&self, t: f64) -> Result<Option<i64>> {
        match self.mode {
            EvolutionMode::Continuous => Ok(None),
            EvolutionMode::Discrete => {
                let tau = self.minimal_time.expect("discrete spec has a minimal time");
                let n = (t / tau).round();
                if (t - n * tau).abs() > LATTICE_TOL * t.abs().max(1.0) {
                    return Err(Error::OffLatticeTime { t, tau });
                }
                Ok(Some(n as i64))
            }
            EvolutionMode::None => {
                if t == 0.0 {
                    Ok(Some(0))
                } else {
                    Err(Error::NoAdmissibleEvolution([f64::NAN; 3]))
                }
            }
        }
    }
}

impl fmt::Display for EvolutionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            EvolutionMode::Continuous if self.trivial => {
                f.write_str("continuous (trivial dynamics)")
            }
            EvolutionMode::Continuous => f.write_str("continuous, all t"),
            EvolutionMode::Discrete => write!(
                f,
                "discrete, angle {:.12} rad, t = n * {:.12}",
                self.minimal_angle.unwrap_or(f64::NAN),
                self.minimal_time.unwrap_or(f64::NAN)
            ),
            EvolutionMode::None => f.write_str("none"),
        }
    }
}

/// Classifies the dynamics generated by `H` in `space`.
///
/// A continuous symmetry axis along `H` gives continuous time. Otherwise the
/// smallest positive angle among the proper rotations about `H` in the
/// space's finite group (and the pi-flips of a flip plane) fixes a minimal
/// time. With no such rotation there is no admissible evolution.
pub fn allowed_times(space: &StateSpace, h: &HamiltonianObservable) -> Result<EvolutionSpec> {
    let meta = space.symmetry().ok_or_else(|| {
        Error::UnsupportedSpace(format!(
            "'{}' has no transformation-group data",
            space.name()
        ))
    })?;
    let Some(n) = h.axis() else {
        return Ok(EvolutionSpec::continuous(true));
    };
    if meta.continuous.contains(&n, AXIS_TOL) {
        return Ok(EvolutionSpec::continuous(false));
    }
    let mut theta = meta
        .group
        .rotation_subgroup()
        .angles_about(&n, AXIS_TOL)
        .into_iter()
        .filter(|a| *a > 1e-12)
        .fold(f64::INFINITY, f64::min);
    if let Some(normal) = meta.flip_plane_normal {
        if normal.normalize().dot(&n).abs() <= AXIS_TOL {
            theta = theta.min(PI);
        }
    }
    if !theta.is_finite() {
        return Ok(EvolutionSpec {
            mode: EvolutionMode::None,
            minimal_angle: None,
            minimal_time: None,
            trivial: false,
            allowed_times: "t = 0 only".into(),
        });
    }
    let tau = theta / h.norm();
    Ok(EvolutionSpec {
        mode: EvolutionMode::Discrete,
        minimal_angle: Some(theta),
        minimal_time: Some(tau),
        trivial: false,
        allowed_times: format!("n * {tau:.12}, n integer"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 3]>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max |E(t) - E(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let Some(e0) = self.energies.first() else {
            return 0.0;
        };
        self.energies
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
    }
}

/// `rho(t) = M(t) rho0` on a time grid.
pub fn trajectory(
    space: &StateSpace,
    h: &HamiltonianObservable,
    rho0: &StateVector,
    grid: &[f64],
) -> Result<Trajectory> {
    let violation = space.violation(rho0);
    if violation > 1e-9 {
        return Err(Error::OutsideStateSpace {
            state: [rho0.x, rho0.y, rho0.z],
            violation,
        });
    }
    let spec = allowed_times(space, h)?;
    for &t in grid {
        spec.check_time(t).map_err(|e| match e {
            Error::NoAdmissibleEvolution(_) => {
                let v = h.vector();
                Error::NoAdmissibleEvolution([v.x, v.y, v.z])
            }
            other => other,
        })?;
    }
    let g = recipe_generator(h);
    let mut out = Trajectory {
        times: Vec::with_capacity(grid.len()),
        states: Vec::with_capacity(grid.len()),
        energies: Vec::with_capacity(grid.len()),
    };
    for &t in grid {
        let rho = evolve_map(&g, t).apply(rho0);
        out.times.push(t);
        out.states.push([rho.x, rho.y, rho.z]);
        out.energies.push(h.energy(&rho));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Desideratum {
    #[serde(rename = "OBS")]
    Obs,
    #[serde(rename = "GEN")]
    Gen,
    #[serde(rename = "INV")]
    Inv,
    #[serde(rename = "QUAN")]
    Quan,
}

impl Desideratum {
    pub const ALL: [Desideratum; 4] = [
        Desideratum::Obs,
        Desideratum::Gen,
        Desideratum::Inv,
        Desideratum::Quan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Desideratum::Obs => "OBS",
            Desideratum::Gen => "GEN",
            Desideratum::Inv => "INV",
            Desideratum::Quan => "QUAN",
        }
    }
}

impl std::str::FromStr for Desideratum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Desideratum::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidMeasurement(format!("unknown desideratum '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesideratumResult {
    pub name: Desideratum,
    pub status: CheckStatus,
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl DesideratumResult {
    fn new(name: Desideratum, pass: bool) -> Self {
        DesideratumResult {
            name,
            status: if pass {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            diagnostics: BTreeMap::new(),
            witness: None,
            note: None,
        }
    }

    fn diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.into(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesiderataReport {
    pub entries: Vec<DesideratumResult>,
}

impl DesiderataReport {
    pub fn get(&self, d: Desideratum) -> &DesideratumResult {
        self.entries
            .iter()
            .find(|e| e.name == d)
            .expect("all four entries present")
    }

    pub fn status(&self, d: Desideratum) -> CheckStatus {
        self.get(d).status
    }

    /// No requested entry failed; not-applicable entries do not count.
    pub fn all_pass(&self, requested: &[Desideratum]) -> bool {
        requested
            .iter()
            .all(|d| self.status(*d) != CheckStatus::Fail)
    }
}

/// Evolution matrix for an arbitrary (possibly corrupted) generator.
fn general_map(a: &Matrix3<f64>, t: f64) -> Matrix3<f64> {
    (a * t).exp()
}

/// Times at which GEN and INV are probed.
fn probe_times(spec: &EvolutionSpec, h: &HamiltonianObservable) -> Vec<f64> {
    let norm = h.norm();
    if norm == 0.0 {
        return vec![0.0, 1.0, 10.0];
    }
    match spec.mode {
        EvolutionMode::Discrete => {
            let theta = spec.minimal_angle.expect("discrete");
            let tau = spec.minimal_time.expect("discrete");
            let steps = (TAU / theta).round().max(1.0) as i64;
            (1..=steps).map(|n| n as f64 * tau).collect()
        }
        // irregular fractions of a period, away from any finite symmetry
        _ => (1..=16)
            .map(|k| (k as f64 * 0.618_033_988_749_895).fract() * TAU / norm)
            .collect(),
    }
}

/// Runs OBS, GEN, INV and QUAN for the recipe generator of `h`.
pub fn verify_desiderata(
    space: &StateSpace,
    h: &HamiltonianObservable,
    samples: usize,
    seed: u64,
) -> DesiderataReport {
    let a = *recipe_generator(h).matrix();
    verify_with_generator(space, h, &a, samples, seed)
}

/// As [`verify_desiderata`] but with an explicitly supplied generator, used
/// to exhibit failures of non-antisymmetric generators.
pub fn verify_with_generator(
    space: &StateSpace,
    h: &HamiltonianObservable,
    a: &Matrix3<f64>,
    samples: usize,
    seed: u64,
) -> DesiderataReport {
    let spec = allowed_times(space, h);
    let mut entries = vec![check_obs(space, h, seed)];
    entries.push(check_gen(space, h, a, &spec));
    entries.push(check_inv(space, h, a, &spec, samples, seed));
    entries.push(check_quan(space, h, a, samples, seed));
    DesiderataReport { entries }
}

fn check_obs(space: &StateSpace, h: &HamiltonianObservable, seed: u64) -> DesideratumResult {
    match h.clone().with_decomposition(space, seed) {
        Ok(hd) => {
            let obs = hd.decomposition().expect("attached");
            let r = validate_measurement(obs.measurement(), space);
            let mut res = DesideratumResult::new(Desideratum::Obs, r.pass)
                .diag("weightSumDefect", r.weight_sum_defect)
                .diag("biasSumDefect", r.bias_sum_defect)
                .diag("worstEffectViolation", r.worst_violation);
            res.witness = r.witness;
            for (i, x) in obs.values().iter().enumerate() {
                res = res.diag(&format!("value{}", i + 1), *x);
            }
            res
        }
        Err(e) => {
            let mut res = DesideratumResult::new(Desideratum::Obs, false);
            res.note = Some(e.to_string());
            res
        }
    }
}

fn check_gen(
    space: &StateSpace,
    h: &HamiltonianObservable,
    a: &Matrix3<f64>,
    spec: &Result<EvolutionSpec>,
) -> DesideratumResult {
    let spec = match spec {
        Ok(s) => s,
        Err(e) => {
            let mut res = DesideratumResult::new(Desideratum::Gen, false);
            res.note = Some(e.to_string());
            return res;
        }
    };
    if spec.mode == EvolutionMode::None {
        let mut res = DesideratumResult::new(Desideratum::Gen, false);
        res.note = Some("no admissible evolution: no symmetry rotates about H".into());
        return res;
    }
    let points = space.check_points(GEN_CHECK_POINTS);
    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_orth = 0.0f64;
    let mut witness = None;
    for t in probe_times(spec, h) {
        let m = general_map(a, t);
        worst_orth = worst_orth.max((m.transpose() * m - Matrix3::identity()).amax());
        for p in &points {
            let v = space.violation(&(m * p));
            if v > worst_violation {
                worst_violation = v;
                witness = Some([p.x, p.y, p.z]);
            }
        }
    }
    let pass = worst_violation <= 1e-9 && worst_orth <= 1e-9;
    let mut res = DesideratumResult::new(Desideratum::Gen, pass)
        .diag("worstViolation", worst_violation.max(0.0))
        .diag("orthogonalityDefect", worst_orth);
    if let Some(tau) = spec.minimal_time {
        res = res.diag("minimalTime", tau);
    }
    res.note = Some(spec.to_string());
    if !pass {
        res.witness = witness;
    }
    res
}

fn check_inv(
    space: &StateSpace,
    h: &HamiltonianObservable,
    a: &Matrix3<f64>,
    spec: &Result<EvolutionSpec>,
    samples: usize,
    seed: u64,
) -> DesideratumResult {
    let hv = h.vector();
    let annihilation = a.transpose() * hv;
    let algebraic = annihilation.amax();
    let times = match spec {
        Ok(s) if s.mode == EvolutionMode::Discrete => probe_times(s, h),
        _ => probe_times(&EvolutionSpec::continuous(false), h),
    };
    let mut rng = rng_from_seed(seed);
    let mut drift = 0.0f64;
    for _ in 0..samples {
        let rho = space.random_member(&mut rng);
        let e0 = h.energy(&rho);
        for &t in &times {
            let e = h.energy(&(general_map(a, t) * rho));
            drift = drift.max((e - e0).abs());
        }
    }
    let pass = algebraic <= 1e-12 && drift <= ENERGY_TOL;
    let mut res = DesideratumResult::new(Desideratum::Inv, pass)
        .diag("annihilationDefect", algebraic)
        .diag("maxEnergyDrift", drift);
    if algebraic > 1e-12 {
        res.witness = Some([annihilation.x, annihilation.y, annihilation.z]);
    }
    res
}

fn check_quan(
    space: &StateSpace,
    h: &HamiltonianObservable,
    a: &Matrix3<f64>,
    samples: usize,
    seed: u64,
) -> DesideratumResult {
    if !matches!(space.body(), Body::Ball) {
        let mut res = DesideratumResult::new(Desideratum::Quan, true);
        res.status = CheckStatus::NotApplicable;
        res.note = Some("only the ball is a quantum state space".into());
        return res;
    }
    let basis = gellmann_basis(2).expect("qubit basis");
    let hv = h.vector();
    let hq = realrep::hermitian_from_vector(
        2.0 * h.offset(),
        &DVector::from_column_slice(hv.as_slice()),
        &basis,
    )
    .expect("qubit Hamiltonian");
    let mut rng = rng_from_seed(seed ^ 0x51_7c_c1_b7);
    let mut sup = 0.0f64;
    let mut failure = None;
    for _ in 0..samples.clamp(1, 100) {
        let rho = space.random_member(&mut rng);
        let dm = match realrep::density_from_bloch(
            &DVector::from_column_slice(rho.as_slice()),
            &basis,
        ) {
            Ok(dm) => dm,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        for k in 0..=100 {
            let t = 0.1 * k as f64;
            let recipe = general_map(a, t) * rho;
            let quantum = realrep::von_neumann_evolve(&dm, &hq, t)
                .and_then(|r| realrep::bloch_from_density(&r, &basis))
                .expect("qubit evolution");
            let err = (0..3)
                .map(|i| (recipe[i] - quantum[i]).abs())
                .fold(0.0, f64::max);
            sup = sup.max(err);
        }
    }
    let mut res = DesideratumResult::new(Desideratum::Quan, failure.is_none() && sup < 1e-8)
        .diag("supError", sup);
    res.note = failure;
    res
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DofReport {
    pub generator_dof: usize,
    pub observable_dof: usize,
    pub mismatch: usize,
}

/// Free parameters of an antisymmetric generator versus an observable
/// vector in `n` dimensions.
pub fn generator_dof_report(n: usize) -> Result<DofReport> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let generator_dof = n * (n - 1) / 2;
    Ok(DofReport {
        generator_dof,
        observable_dof: n,
        mismatch: generator_dof.abs_diff(n),
    })
}

/// Coupling tensor `g[i][j][k]` of `d rho_k / dt = sum g_ijk H_i rho_j`.
pub type CouplingTensor = [[[f64; 3]; 3]; 3];

/// `g_ijk = epsilon_ijk`.
pub fn levi_civita_tensor() -> CouplingTensor {
    let mut g = [[[0.0; 3]; 3]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        for (j, gij) in gi.iter_mut().enumerate() {
            for (k, v) in gij.iter_mut().enumerate() {
                *v = realrep::levi_civita(i, j, k);
            }
        }
    }
    g
}

/// Energy production rate `sum_ik H_i g_ijk H_k` for each `j`: the
/// coefficient of `rho_j` in `d (H . rho) / dt`.
pub fn energy_production(g: &CouplingTensor, h: &Vector3<f64>) -> Vector3<f64> {
    let mut out = Vector3::zeros();
    for j in 0..3 {
        for i in 0..3 {
            for k in 0..3 {
                out[j] += h[i] * g[i][j][k] * h[k];
            }
        }
    }
    out
}

/// A Hamiltonian whose expectation is not conserved by `g`, if any.
/// Conservation for every `H` forces `g_ijk = -g_kji`.
pub fn conservation_witness(g: &CouplingTensor) -> Option<(Vector3<f64>, f64)> {
    let mut candidates: Vec<Vector3<f64>> = Vec::new();
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = 1.0;
        candidates.push(e);
        for k in (i + 1)..3 {
            let mut f = e;
            f[k] = 1.0;
            candidates.push(f);
            f[k] = -1.0;
            candidates.push(f);
        }
    }
    candidates.extend(crate::sampling::fibonacci_sphere(200));
    candidates
        .into_iter()
        .map(|h| (h, energy_production(g, &h).amax()))
        .filter(|(_, v)| *v > 1e-12)
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// `max |M^T H - H|`: zero iff the finite map conserves `H . rho` for every
/// state. Applies to reflections, which have no generator.
pub fn finite_map_energy_defect(h: &HamiltonianObservable, m: &OrthogonalMap) -> f64 {
    (m.matrix().transpose() * h.vector() - h.vector()).amax()
}
