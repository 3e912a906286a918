//! Command-line front end: scenario files, trajectory CSV and SVG output,
//! and JSON or text reports.
//!
//! Exit codes: 0 success, 2 a requested check failed, 64 usage or parse
//! error, 65 the requested dynamics are not admissible.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{
    self, allowed_times, verify_desiderata, CheckStatus, DesiderataReport, Desideratum,
    EvolutionMode, EvolutionSpec, HamiltonianObservable, Trajectory,
};
use crate::liouville::{self, EvolveMethod, PhaseSpaceGrid, Potential};
use crate::phase;
use crate::statespace::{
    builtin_theory, observable_from_values, Axis, Body, BuiltinTheory, Constraint, ContinuousAxes,
    Measurement, StateSpace, SymmetryMeta,
};
use crate::symmetry::{self, FiniteGroup, OrthogonalMap};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INADMISSIBLE: i32 = 65;

/// Number of random member states used by `verify`.
pub const VERIFY_SAMPLES: usize = 100;

/// Formats like C's `%.12g`, with `-0` printed as `0`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    let fixed = format!("{:.*}", decimals, v);
    let out = trim_zeros(&fixed);
    if out == "-0" {
        "0".into()
    } else {
        out
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Writes through a temporary file in the destination directory.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

// ---------------------------------------------------------------- scenario

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TheorySpec {
    Builtin(String),
    Inline(InlineTheory),
}

/// A theory given by vertices (polytope) or convex constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct InlineTheory {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<Constraint>>,
    /// Declared continuous symmetry axes of a constraint body; checked by
    /// sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous_axes: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DecompositionSpec {
    pub values: Vec<f64>,
    pub measurement_axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub vector: [f64; 3],
    #[serde(default)]
    pub offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    #[default]
    Auto,
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default)]
    pub mode: TimeMode,
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

fn all_checks() -> Vec<Desideratum> {
    Desideratum::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub theory: TheorySpec,
    pub hamiltonian: HamiltonianSpec,
    pub time: TimeSpec,
    pub initial_state: [f64; 3],
    #[serde(default = "all_checks")]
    pub checks: Vec<Desideratum>,
    #[serde(default)]
    pub seed: u64,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoAdmissibleEvolution(_) | Error::OffLatticeTime { .. } => EXIT_INADMISSIBLE,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl Scenario {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid scenario: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn state_space(&self) -> CliResult<StateSpace> {
        resolve_theory(&self.theory)
    }

    /// The Hamiltonian, checking an explicit decomposition against the
    /// vector form `W = H / 2`, `C = H0`.
    pub fn hamiltonian(&self, space: &StateSpace) -> CliResult<HamiltonianObservable> {
        let h = HamiltonianObservable::new(
            Vector3::from(self.hamiltonian.vector),
            self.hamiltonian.offset,
        );
        if let Some(d) = &self.hamiltonian.decomposition {
            let m = Measurement::canonical(d.measurement_axis);
            let obs = observable_from_values(&d.values, &m)?;
            let w_err = (obs.weight() - h.vector() / 2.0).amax();
            let c_err = (obs.constant() - h.offset()).abs();
            if w_err > 1e-10 || c_err > 1e-10 {
                return Err(CliError::usage(
                    "decomposition does not match the Hamiltonian vector (expected W = vector / 2, C = offset)",
                ));
            }
            if !crate::statespace::validate_measurement(&m, space).pass {
                return Err(CliError::usage(
                    "decomposition measurement is not valid on this theory",
                ));
            }
        }
        Ok(h)
    }

    pub fn initial_state(&self, space: &StateSpace) -> CliResult<Vector3<f64>> {
        let rho = Vector3::from(self.initial_state);
        let violation = space.violation(&rho);
        if violation > 1e-9 {
            return Err(Error::OutsideStateSpace {
                state: self.initial_state,
                violation,
            }
            .into());
        }
        Ok(rho)
    }

    /// Sample times from `0` to `tMax`.
    pub fn time_grid(&self, spec: &EvolutionSpec) -> CliResult<Vec<f64>> {
        let t = &self.time;
        if t.t_max.is_nan() || t.t_max < 0.0 || !t.t_max.is_finite() {
            return Err(CliError::usage(format!(
                "tMax must be a nonnegative number, got {}",
                t.t_max
            )));
        }
        if t.mode == TimeMode::Continuous && spec.mode != EvolutionMode::Continuous {
            return Err(CliError {
                code: EXIT_INADMISSIBLE,
                message: format!("continuous time requested but the dynamics are {spec}"),
            });
        }
        if let Some(n) = t.steps {
            if n == 0 {
                return Err(CliError::usage("steps must be positive"));
            }
            return Ok((0..=n).map(|k| t.t_max * k as f64 / n as f64).collect());
        }
        let dt = match (t.dt, spec.minimal_time) {
            (Some(dt), _) => dt,
            (None, Some(tau)) => tau,
            (None, None) => {
                return Err(CliError::usage(
                    "time needs dt or steps for continuous dynamics",
                ))
            }
        };
        if !dt.is_finite() || dt <= 0.0 {
            return Err(CliError::usage(format!("dt must be positive, got {dt}")));
        }
        let n = ((t.t_max / dt) * (1.0 + 1e-12)).floor() as usize;
        Ok((0..=n).map(|k| k as f64 * dt).collect())
    }
}

fn inline_space(def: &InlineTheory) -> Result<StateSpace> {
    let name = def.name.clone().unwrap_or_else(|| "inline".into());
    match (&def.vertices, &def.constraints) {
        (Some(v), None) => {
            if def.continuous_axes.is_some() {
                return Err(Error::UnsupportedSpace(
                    "polytopes have no continuous axes".into(),
                ));
            }
            StateSpace::from_vertices(name, v.iter().map(|p| Vector3::from(*p)).collect())
        }
        (None, Some(cs)) => {
            let space = StateSpace::new(name, Body::Constraints(cs.clone()));
            if space.violation(&Vector3::zeros()) >= 0.0 {
                return Err(Error::UnsupportedSpace(
                    "the origin must be an interior point".into(),
                ));
            }
            let axes: Vec<Vector3<f64>> = def
                .continuous_axes
                .iter()
                .flatten()
                .map(|a| Vector3::from(*a).normalize())
                .collect();
            let space = space.with_symmetry(SymmetryMeta {
                continuous: ContinuousAxes::Axes(axes),
                flip_plane_normal: None,
                group: FiniteGroup::trivial(),
            });
            if !symmetry::verify_continuous_axes(&space) {
                return Err(Error::UnsupportedSpace(
                    "a declared continuous axis is not a symmetry of the body".into(),
                ));
            }
            Ok(space)
        }
        _ => Err(Error::UnsupportedSpace(
            "give exactly one of vertices or constraints".into(),
        )),
    }
}

pub fn resolve_theory(spec: &TheorySpec) -> CliResult<StateSpace> {
    match spec {
        TheorySpec::Builtin(name) => Ok(builtin_theory(name.parse::<BuiltinTheory>()?)),
        TheorySpec::Inline(def) => inline_space(def).map_err(|e| CliError::usage(e.to_string())),
    }
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub desiderata: Option<DesiderataReport>,
    pub evolution_spec: EvolutionSpec,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// `t,u1,u2,u3,energy` rows.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::from("t,u1,u2,u3,energy\n");
    for ((t, s), e) in tr.times.iter().zip(&tr.states).zip(&tr.energies) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_number(*t),
            format_number(s[0]),
            format_number(s[1]),
            format_number(s[2]),
            format_number(*e)
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    fn axes(self) -> (usize, usize, &'static str, &'static str) {
        match self {
            Plane::Xy => (0, 1, "u1", "u2"),
            Plane::Xz => (0, 2, "u1", "u3"),
            Plane::Yz => (1, 2, "u2", "u3"),
        }
    }
}

fn hull_2d(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Orthographic projection of the body outline and the trajectory.
pub fn trajectory_svg(space: &StateSpace, tr: &Trajectory, plane: Plane) -> String {
    let (a, b, la, lb) = plane.axes();
    let outline = hull_2d(
        space
            .check_points(2000)
            .iter()
            .map(|p| (p[a], p[b]))
            .collect(),
    );
    let extent = outline
        .iter()
        .chain(
            tr.states
                .iter()
                .map(|s| (s[a], s[b]))
                .collect::<Vec<_>>()
                .iter(),
        )
        .fold(1.0f64, |m, (x, y)| m.max(x.abs()).max(y.abs()))
        * 1.1;
    let size = 400.0;
    let map = |(x, y): (f64, f64)| {
        (
            size / 2.0 * (1.0 + x / extent),
            size / 2.0 * (1.0 - y / extent),
        )
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let poly: Vec<String> = outline
        .iter()
        .map(|p| {
            let (x, y) = map(*p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        svg,
        r##"<polygon points="{}" fill="#eef2f7" stroke="#556" stroke-width="1.5"/>"##,
        poly.join(" ")
    );
    let path: Vec<String> = tr
        .states
        .iter()
        .map(|s| {
            let (x, y) = map((s[a], s[b]));
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#c33" stroke-width="1.5"/>"##,
        path.join(" ")
    );
    for s in &tr.states {
        let (x, y) = map((s[a], s[b]));
        let _ = writeln!(
            svg,
            r##"<circle cx="{x:.3}" cy="{y:.3}" r="2.5" fill="#c33"/>"##
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="8" y="{}" font-family="monospace" font-size="12">{} ({la}, {lb})</text>"##,
        size - 8.0,
        space.name()
    );
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------- commands

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialName {
    Free,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    Expm,
    Rk4,
}

#[derive(Debug, Parser)]
#[command(
    name = "gptham",
    version,
    about = "Hamiltonians and dynamics of three-dimensional probabilistic theories"
)]
pub struct Cli {
    /// Output format; `verify` and `evolve` default to json, the rest to text.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for random sampling; overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the builtin theories with their symmetry data.
    ListTheories,
    /// Evolve the scenario's initial state and write a CSV trajectory.
    Evolve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "xy")]
        plane: Plane,
    },
    /// Check the desiderata for the scenario's Hamiltonian.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the finite symmetry group of a theory.
    Symmetry {
        #[arg(long)]
        theory: String,
        #[arg(long)]
        rotations_only: bool,
    },
    /// Print the phase group of a canonical measurement.
    PhaseGroup {
        #[arg(long)]
        theory: String,
        #[arg(long)]
        measurement: String,
        #[arg(long)]
        include_reflections: bool,
    },
    /// List group elements localized to a set of outcomes.
    Branch {
        #[arg(long)]
        theory: String,
        #[arg(long)]
        measurement: String,
        /// Comma-separated outcome labels, e.g. "+".
        #[arg(long)]
        outcomes: String,
    },
    /// Infer energies from a CSV of `i,j,tau` periods.
    Energy {
        #[arg(long)]
        periods: PathBuf,
    },
    /// Discretized Liouville evolution on an N x N grid.
    Liouville {
        #[arg(long, value_enum, default_value = "free")]
        potential: PotentialName,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long = "t-max", default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, value_enum, default_value = "expm")]
        method: MethodName,
        /// CSV snapshot of the final density.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Output<'a> {
    format: Format,
    out: &'a mut dyn Write,
}

impl Output<'_> {
    fn emit(&mut self, json: serde_json::Value, text: &str) {
        let _ = match self.format {
            Format::Json => writeln!(
                self.out,
                "{}",
                serde_json::to_string_pretty(&json).expect("json")
            ),
            Format::Text => write!(self.out, "{text}"),
        };
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let default = match cli.command {
        Command::Verify { .. } | Command::Evolve { .. } => Format::Json,
        _ => Format::Text,
    };
    let mut o = Output {
        format: cli.format.unwrap_or(default),
        out,
    };
    let result = match &cli.command {
        Command::ListTheories => cmd_list_theories(&mut o),
        Command::Evolve {
            scenario,
            out,
            svg,
            plane,
        } => cmd_evolve(&mut o, scenario, out, svg.as_deref(), *plane, cli.seed),
        Command::Verify { scenario } => cmd_verify(&mut o, scenario, cli.seed),
        Command::Symmetry {
            theory,
            rotations_only,
        } => cmd_symmetry(&mut o, theory, *rotations_only),
        Command::PhaseGroup {
            theory,
            measurement,
            include_reflections,
        } => cmd_phase_group(&mut o, theory, measurement, *include_reflections),
        Command::Branch {
            theory,
            measurement,
            outcomes,
        } => cmd_branch(&mut o, theory, measurement, outcomes),
        Command::Energy { periods } => cmd_energy(&mut o, periods),
        Command::Liouville {
            potential,
            grid,
            t_max,
            method,
            out,
        } => cmd_liouville(&mut o, *potential, *grid, *t_max, *method, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn axis_json(v: &Vector3<f64>) -> serde_json::Value {
    json!([v.x, v.y, v.z])
}

fn fmt_vec(v: &Vector3<f64>) -> String {
    format!(
        "({}, {}, {})",
        format_number(v.x),
        format_number(v.y),
        format_number(v.z)
    )
}

fn cmd_list_theories(o: &mut Output) -> CliResult<i32> {
    let mut text = String::new();
    let mut rows = Vec::new();
    for t in BuiltinTheory::ALL {
        let space = builtin_theory(t);
        let meta = space.symmetry().expect("builtins carry symmetry data");
        let order = meta.group.order();
        let rotations = meta.group.rotation_subgroup().order();
        let line = match (&meta.continuous, t) {
            (ContinuousAxes::All, _) => format!(
                "{t}: all axes continuous; representative finite group order {order}, rotations {rotations}"
            ),
            (ContinuousAxes::Axes(axes), _) if !axes.is_empty() => {
                let flips = if meta.flip_plane_normal.is_some() { ", pi-flips about in-plane axes" } else { "" };
                format!(
                    "{t}: continuous about z{flips}; representative finite group order {order}, rotations {rotations}"
                )
            }
            (_, BuiltinTheory::Spekkens) => {
                format!("{t}: group order {order}, rotations {rotations} (ontic permutations)")
            }
            _ => format!("{t}: finite group order {order}, rotations {rotations}"),
        };
        let _ = writeln!(text, "{line}");
        let continuous = match &meta.continuous {
            ContinuousAxes::All => json!("all"),
            ContinuousAxes::Axes(a) => json!(a.iter().map(axis_json).collect::<Vec<_>>()),
        };
        rows.push(json!({
            "name": t.name(),
            "continuousAxes": continuous,
            "flipPlaneNormal": meta.flip_plane_normal.as_ref().map(axis_json),
            "groupOrder": order,
            "rotations": rotations,
            "vertices": space.vertices().map(|v| v.len()),
        }));
    }
    o.emit(json!(rows), &text);
    Ok(EXIT_OK)
}

fn scenario_parts(
    path: &Path,
    seed: Option<u64>,
) -> CliResult<(Scenario, StateSpace, HamiltonianObservable, u64)> {
    let scenario = Scenario::load(path)?;
    let space = scenario.state_space()?;
    let h = scenario.hamiltonian(&space)?;
    let seed = seed.unwrap_or(scenario.seed);
    Ok((scenario, space, h, seed))
}

fn no_admissible(h: &HamiltonianObservable) -> CliError {
    let v = h.vector();
    Error::NoAdmissibleEvolution([v.x, v.y, v.z]).into()
}

fn cmd_evolve(
    o: &mut Output,
    path: &Path,
    out: &Path,
    svg: Option<&Path>,
    plane: Plane,
    seed: Option<u64>,
) -> CliResult<i32> {
    let (scenario, space, h, _) = scenario_parts(path, seed)?;
    let rho0 = scenario.initial_state(&space)?;
    let spec = allowed_times(&space, &h)?;
    if spec.mode == EvolutionMode::None {
        return Err(no_admissible(&h));
    }
    let grid = scenario.time_grid(&spec)?;
    let tr = dynamics::trajectory(&space, &h, &rho0, &grid)?;
    let drift = tr.energy_drift();
    let worst = tr
        .states
        .iter()
        .map(|s| space.violation(&Vector3::from(*s)))
        .fold(f64::NEG_INFINITY, f64::max);
    let io =
        |e: std::io::Error, p: &Path| CliError::usage(format!("cannot write {}: {e}", p.display()));
    write_atomic(out, &trajectory_csv(&tr)).map_err(|e| io(e, out))?;
    let mut outputs = vec![out.display().to_string()];
    if let Some(svg_path) = svg {
        write_atomic(svg_path, &trajectory_svg(&space, &tr, plane)).map_err(|e| io(e, svg_path))?;
        outputs.push(svg_path.display().to_string());
    }
    let ok = drift <= dynamics::ENERGY_TOL && worst <= 1e-9;
    let exit_code = if ok { EXIT_OK } else { EXIT_CHECK_FAILED };
    let message = (!ok).then(|| format!("energy drift {drift:e}, worst state violation {worst:e}"));
    let report = RunReport {
        desiderata: None,
        evolution_spec: spec.clone(),
        outputs,
        exit_code,
        message: message.clone(),
    };
    let mut text = format!(
        "theory: {}\ndynamics: {spec}\nsamples: {}\nenergy drift: {drift:e}\nwrote: {}\n",
        space.name(),
        tr.len(),
        report.outputs.join(", ")
    );
    if let Some(m) = message {
        let _ = writeln!(text, "check failed: {m}");
    }
    o.emit(serde_json::to_value(&report).expect("json"), &text);
    Ok(exit_code)
}

fn cmd_verify(o: &mut Output, path: &Path, seed: Option<u64>) -> CliResult<i32> {
    let (scenario, space, h, seed) = scenario_parts(path, seed)?;
    scenario.initial_state(&space)?;
    let spec = allowed_times(&space, &h)?;
    let report = verify_desiderata(&space, &h, VERIFY_SAMPLES, seed);
    let checks = &scenario.checks;
    let exit_code = if spec.mode == EvolutionMode::None {
        EXIT_INADMISSIBLE
    } else if report.all_pass(checks) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    let mut text = format!("theory: {}\ndynamics: {spec}\n", space.name());
    for entry in &report.entries {
        if !checks.contains(&entry.name) {
            continue;
        }
        let status = match entry.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "not-applicable",
        };
        let diags: Vec<String> = entry
            .diagnostics
            .iter()
            .map(|(k, v)| format!("{k}={v:.3e}"))
            .collect();
        let _ = writeln!(
            text,
            "{:<5} {:<15} {}",
            entry.name.name(),
            status,
            diags.join(" ")
        );
        if let Some(note) = &entry.note {
            let _ = writeln!(text, "      {note}");
        }
    }
    let filtered = DesiderataReport {
        entries: report
            .entries
            .into_iter()
            .filter(|e| checks.contains(&e.name))
            .collect(),
    };
    let run = RunReport {
        desiderata: Some(filtered),
        evolution_spec: spec,
        outputs: Vec::new(),
        exit_code,
        message: (exit_code == EXIT_INADMISSIBLE).then(|| no_admissible(&h).message),
    };
    o.emit(serde_json::to_value(&run).expect("json"), &text);
    Ok(exit_code)
}

fn element_json(t: &OrthogonalMap) -> serde_json::Value {
    let m = t.matrix();
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| m[(i, j)] + 0.0).collect())
        .collect();
    let (axis, angle) = match t.axis_angle() {
        Some((a, ang)) => (Some(axis_json(&a)), Some(ang)),
        None => (None, None),
    };
    json!({ "matrix": rows, "det": t.det().round(), "axis": axis, "angle": angle })
}

fn element_text(t: &OrthogonalMap) -> String {
    match t.axis_angle() {
        Some((_, angle)) if angle < 1e-12 => "identity".into(),
        Some((a, angle)) => format!("rotation {} about {}", format_number(angle), fmt_vec(&a)),
        None => {
            let m = t.matrix();
            let rows: Vec<String> = (0..3)
                .map(|i| {
                    format!(
                        "[{} {} {}]",
                        format_number(m[(i, 0)]),
                        format_number(m[(i, 1)]),
                        format_number(m[(i, 2)])
                    )
                })
                .collect();
            format!("improper {}", rows.join(" "))
        }
    }
}

fn group_of(space: &StateSpace) -> CliResult<&FiniteGroup> {
    space
        .reversible_group()
        .ok_or_else(|| CliError::usage(format!("'{}' has no symmetry data", space.name())))
}

fn cmd_symmetry(o: &mut Output, theory: &str, rotations_only: bool) -> CliResult<i32> {
    let space = builtin_theory(theory.parse()?);
    let full = group_of(&space)?;
    let group = if rotations_only {
        full.rotation_subgroup()
    } else {
        full.clone()
    };
    let mut text = format!("theory: {}\norder {}\n", space.name(), group.order());
    for t in group.elements() {
        let _ = writeln!(text, "  {}", element_text(t));
    }
    let j = json!({
        "theory": space.name(),
        "order": group.order(),
        "rotations": group.rotation_subgroup().order(),
        "elements": group.elements().iter().map(element_json).collect::<Vec<_>>(),
    });
    o.emit(j, &text);
    Ok(EXIT_OK)
}

fn cmd_phase_group(
    o: &mut Output,
    theory: &str,
    measurement: &str,
    reflections: bool,
) -> CliResult<i32> {
    let space = builtin_theory(theory.parse()?);
    let axis: Axis = measurement.parse()?;
    let m = Measurement::canonical(axis);
    let r = phase::phase_group(&space, &m, reflections)?;
    let mut text = format!(
        "theory: {}\nmeasurement: {axis}\nfinite part order {}\n",
        space.name(),
        r.finite_part.order()
    );
    for t in r.finite_part.elements() {
        let _ = writeln!(text, "  {}", element_text(t));
    }
    let _ = writeln!(
        text,
        "continuous part dimension {}",
        r.continuous_dimension()
    );
    for a in &r.continuous_axes {
        let _ = writeln!(text, "  rotations about {}", fmt_vec(a));
    }
    let j = json!({
        "theory": space.name(),
        "measurement": axis,
        "finitePart": {
            "order": r.finite_part.order(),
            "elements": r.finite_part.elements().iter().map(element_json).collect::<Vec<_>>(),
        },
        "preservingOrder": r.preserving.order(),
        "continuousPart": {
            "dimension": r.continuous_dimension(),
            "axes": r.continuous_axes.iter().map(axis_json).collect::<Vec<_>>(),
        },
    });
    o.emit(j, &text);
    Ok(EXIT_OK)
}

fn cmd_branch(o: &mut Output, theory: &str, measurement: &str, outcomes: &str) -> CliResult<i32> {
    let space = builtin_theory(theory.parse()?);
    let axis: Axis = measurement.parse()?;
    let m = Measurement::canonical(axis);
    let mut branches = Vec::new();
    for label in outcomes.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        branches.push(
            m.outcome_index(label).ok_or_else(|| {
                CliError::usage(format!("unknown outcome '{label}' (use + or -)"))
            })?,
        );
    }
    let group = group_of(&space)?;
    let mut localized = Vec::new();
    let mut vacuous = false;
    for t in group.elements() {
        let r = phase::is_branch_localized(t, &space, &m, &branches)?;
        vacuous |= r.vacuous;
        if r.localized {
            localized.push(*t);
        }
    }
    let mut text = format!(
        "theory: {}\nmeasurement: {axis}, outcomes {outcomes}\nlocalized elements: {} of {}\n",
        space.name(),
        localized.len(),
        group.order()
    );
    if vacuous {
        text.push_str("(vacuous: no state has zero support on these outcomes)\n");
    }
    for t in &localized {
        let _ = writeln!(text, "  {}", element_text(t));
    }
    let j = json!({
        "theory": space.name(),
        "measurement": axis,
        "outcomes": outcomes,
        "vacuous": vacuous,
        "groupOrder": group.order(),
        "localized": localized.iter().map(element_json).collect::<Vec<_>>(),
    });
    o.emit(j, &text);
    Ok(EXIT_OK)
}

/// Rows `i,j,tau`; a non-numeric first line is taken as a header.
pub fn parse_periods(text: &str) -> CliResult<Vec<(usize, usize, f64)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (|| -> Option<(usize, usize, f64)> {
            if fields.len() != 3 {
                return None;
            }
            Some((
                fields[0].parse().ok()?,
                fields[1].parse().ok()?,
                fields[2].parse().ok()?,
            ))
        })();
        match parsed {
            Some(p) => pairs.push(p),
            None if n == 0 && pairs.is_empty() => continue,
            None => return Err(CliError::usage(format!("line {}: expected i,j,tau", n + 1))),
        }
    }
    Ok(pairs)
}

fn cmd_energy(o: &mut Output, path: &Path) -> CliResult<i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let pairs = parse_periods(&text)?;
    match phase::assign_energies(&pairs) {
        Ok(a) => {
            let mut t = String::new();
            for (i, e) in a.energies.iter().enumerate() {
                let _ = writeln!(t, "E{} = {:.9}", i + 1, e);
            }
            let _ = writeln!(t, "residual {:e}\n{}", a.residual, a.note);
            o.emit(serde_json::to_value(&a).expect("json"), &t);
            Ok(EXIT_OK)
        }
        Err(e @ (Error::InconsistentCycle { .. } | Error::DisconnectedPairs(_))) => Err(CliError {
            code: EXIT_CHECK_FAILED,
            message: e.to_string(),
        }),
        Err(e) => Err(e.into()),
    }
}

fn cmd_liouville(
    o: &mut Output,
    potential: PotentialName,
    n: usize,
    t_max: f64,
    method: MethodName,
    out: Option<&Path>,
) -> CliResult<i32> {
    use std::f64::consts::PI;
    let grid = PhaseSpaceGrid::new(n, n, 2.0 * PI, PI, 1.0)?;
    let pot = match potential {
        PotentialName::Free => Potential::Free,
        PotentialName::Harmonic => Potential::Harmonic { k: 1.0, center: PI },
    };
    if !t_max.is_finite() {
        return Err(CliError::usage("t-max must be finite"));
    }
    let l = liouville::liouville_for(&grid, &pot)?;
    let antisym = l.antisymmetry_defect();
    let rho0 = liouville::DensityField::from_fn(&grid, |x, p| {
        (-((x - PI) / 0.5).powi(2) - ((p - PI / 2.0) / 0.5).powi(2)).exp()
    })?;
    let (evolve_method, orth) = match method {
        MethodName::Expm => (
            EvolveMethod::Expm,
            Some(liouville::orthogonality_defect(&l, t_max)?),
        ),
        MethodName::Rk4 => (
            EvolveMethod::Rk4 {
                step: liouville::DEFAULT_RK4_STEP,
            },
            None,
        ),
    };
    let rho = liouville::liouville_evolve(&l, &rho0, t_max, evolve_method)?;
    let drift = (rho.norm() - rho0.norm()).abs();
    let mut outputs = Vec::new();
    if let Some(path) = out {
        write_atomic(path, &liouville::density_csv(&grid, &rho))
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        outputs.push(path.display().to_string());
    }
    let mut text = format!(
        "potential: {}\ngrid: {n} x {n}\nt: {}\nmax antisymmetry defect {}\n",
        pot.name(),
        format_number(t_max),
        format_number(antisym)
    );
    match orth {
        Some(d) => {
            let _ = writeln!(text, "orthogonality defect {d:e}");
        }
        None => text.push_str("orthogonality defect not computed (rk4)\n"),
    }
    let _ = writeln!(text, "L2 norm drift {drift:e}");
    let j = json!({
        "potential": pot.name(),
        "grid": n,
        "tMax": t_max,
        "antisymmetryDefect": antisym,
        "orthogonalityDefect": orth,
        "normDrift": drift,
        "outputs": outputs,
    });
    o.emit(j, &text);
    Ok(EXIT_OK)
}
