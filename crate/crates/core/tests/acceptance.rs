//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

use gptham::dynamics::{
    allowed_times, evolve_map, recipe_generator, trajectory, EvolutionMode, HamiltonianObservable,
};
use gptham::liouville::{self, DensityField, EvolveMethod, PhaseSpaceGrid, Potential};
use gptham::phase::{self, assign_energies, check_inv_star, stationary_under, well_defined_states};
use gptham::realrep::{
    bloch_from_density, bloch_ode_evolve, gellmann_basis, random_density, random_hermitian,
    random_pure, structure_constants, von_neumann_evolve, QuantumRealPair,
};
use gptham::sampling::{random_unit_vector, rng_from_seed};
use gptham::statespace::{
    builtin_theory, cube_vertices, octahedron_vertices, Axis, BuiltinTheory, Measurement,
};
use gptham::symmetry::{polytope_symmetries, spekkens_group, OrthogonalMap};
use gptham::Error;
use rand::Rng;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn pauli() -> [DMatrix<Complex64>; 3] {
    let i = Complex64::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
    ]
}

fn eps(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `exp(-i H t) rho exp(i H t)` via the matrix exponential.
fn oracle_evolve(rho: &DMatrix<Complex64>, h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let u = (h * Complex64::new(0.0, -t)).exp();
    &u * rho * u.adjoint()
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=5 {
        let basis = gellmann_basis(d).map_err(|e| e.to_string())?;
        ensure(basis.len() == d * d - 1, || {
            format!("d={d}: {} elements", basis.len())
        })?;
        for (i, a) in basis.elements().iter().enumerate() {
            for (j, b) in basis.elements().iter().enumerate() {
                let tr = (a * b).trace();
                let target = if i == j { 2.0 } else { 0.0 };
                worst = worst.max((tr - c(target)).norm());
            }
        }
    }
    ensure(worst <= 1e-12, || {
        format!("max |Tr(l_i l_j) - 2 delta_ij| = {worst:e}")
    })?;
    let f = structure_constants(&gellmann_basis(2).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut lc = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                lc = lc.max((f.get(i, j, k) - eps(i, j, k)).abs());
            }
        }
    }
    ensure(lc <= 1e-12, || {
        format!("d=2 structure tensor differs from Levi-Civita by {lc:e}")
    })?;
    Ok(format!(
        "trace defect {worst:.1e}, d=2 Levi-Civita defect {lc:.1e}"
    ))
}

fn criterion_2() -> Outcome {
    let basis = gellmann_basis(2).map_err(|e| e.to_string())?;
    let sigma = pauli();
    let mut rng = rng_from_seed(2);
    let mut sup = 0.0f64;
    for n in 0..100 {
        let rho = if n % 2 == 0 {
            random_pure(2, &mut rng)
        } else {
            random_density(2, &mut rng)
        };
        let h = random_hermitian(2, &mut rng);
        let pair = QuantumRealPair::from_matrices(&rho, &h, &basis).map_err(|e| e.to_string())?;
        let hv = Vector3::new(
            pair.hamiltonian[0],
            pair.hamiltonian[1],
            pair.hamiltonian[2],
        );
        let u0 = Vector3::new(pair.state[0], pair.state[1], pair.state[2]);
        let g = recipe_generator(&HamiltonianObservable::new(hv, pair.offset));
        for k in 0..=100 {
            let t = 0.1 * k as f64;
            let recipe = evolve_map(&g, t).apply(&u0);
            let evolved = oracle_evolve(rho.matrix(), &h, t);
            for (i, s) in sigma.iter().enumerate() {
                sup = sup.max(((&evolved * s).trace().re - recipe[i]).abs());
            }
        }
    }
    ensure(sup < 1e-8, || format!("sup error {sup:e}"))?;
    Ok(format!("100 pairs, t in [0, 10], sup error {sup:.1e}"))
}

fn criterion_3() -> Outcome {
    let basis = gellmann_basis(3).map_err(|e| e.to_string())?;
    let f = structure_constants(&basis).map_err(|e| e.to_string())?;
    let mut rng = rng_from_seed(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let rho = random_density(3, &mut rng);
        let h = random_hermitian(3, &mut rng);
        let pair = QuantumRealPair::from_matrices(&rho, &h, &basis).map_err(|e| e.to_string())?;
        let ode = bloch_ode_evolve(&pair.state, &pair.hamiltonian, &f, &[0.0, 1.0], 1e-3)
            .map_err(|e| e.to_string())?;
        let exact = oracle_evolve(rho.matrix(), &h, 1.0);
        let target =
            DVector::from_iterator(8, basis.elements().iter().map(|l| (&exact * l).trace().re));
        worst = worst.max((&ode[1] - target).amax());
    }
    // the library's own matrix path agrees with the oracle too
    let rho = random_density(3, &mut rng);
    let h = random_hermitian(3, &mut rng);
    let lib = bloch_from_density(
        &von_neumann_evolve(&rho, &h, 1.0).map_err(|e| e.to_string())?,
        &basis,
    )
    .map_err(|e| e.to_string())?;
    let exact = oracle_evolve(rho.matrix(), &h, 1.0);
    let oracle =
        DVector::from_iterator(8, basis.elements().iter().map(|l| (&exact * l).trace().re));
    let lib_err = (lib - oracle).amax();
    ensure(worst < 1e-6, || {
        format!("RK4 vs matrix evolution error {worst:e}")
    })?;
    ensure(lib_err < 1e-10, || {
        format!("library von Neumann differs from oracle by {lib_err:e}")
    })?;
    Ok(format!("50 qutrit pairs at t = 1, max error {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut rng = rng_from_seed(4);
    let mut worst_ha = 0.0f64;
    for _ in 0..1000 {
        let v = random_unit_vector(&mut rng) * rng.random_range(0.01..20.0);
        let a = recipe_generator(&HamiltonianObservable::new(v, 0.0))
            .matrix()
            .clone_owned();
        worst_ha = worst_ha.max((v.transpose() * a).amax());
    }
    ensure(worst_ha <= 1e-14, || format!("max |H^T A| = {worst_ha:e}"))?;

    let axes = [
        Vector3::x(),
        Vector3::y(),
        Vector3::z(),
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(1.0, -1.0, 0.0),
        Vector3::new(0.3, -0.5, 0.8),
    ];
    let mut drift = 0.0f64;
    let mut runs = 0;
    for theory in BuiltinTheory::ALL {
        let space = builtin_theory(theory);
        let mut theory_runs = 0;
        for axis in axes {
            for scale in [0.5, 1.7] {
                let h = HamiltonianObservable::new(axis * scale, 0.3);
                let spec = allowed_times(&space, &h).map_err(|e| e.to_string())?;
                let grid: Vec<f64> = match spec.mode {
                    EvolutionMode::None => continue,
                    EvolutionMode::Continuous => (0..=100).map(|k| 0.1 * k as f64).collect(),
                    EvolutionMode::Discrete => {
                        let tau = spec.minimal_time.unwrap();
                        (0..=12).map(|k| k as f64 * tau).collect()
                    }
                };
                let mut starts: Vec<Vector3<f64>> =
                    (0..5).map(|_| space.random_member(&mut rng)).collect();
                starts.extend(space.vertices().map(|v| v.to_vec()).unwrap_or_default());
                for rho in starts {
                    let tr = trajectory(&space, &h, &rho, &grid).map_err(|e| e.to_string())?;
                    drift = drift.max(tr.energy_drift());
                    runs += 1;
                    theory_runs += 1;
                }
            }
        }
        ensure(theory_runs > 0, || {
            format!("{theory}: no admissible Hamiltonian among the probes")
        })?;
    }
    ensure(drift < 1e-9, || format!("energy drift {drift:e}"))?;
    Ok(format!(
        "max |H^T A| {worst_ha:.1e}; {runs} trajectories, max drift {drift:.1e}"
    ))
}

fn criterion_5() -> Outcome {
    for (name, verts) in [
        ("cube", cube_vertices()),
        ("octahedron", octahedron_vertices()),
    ] {
        let g = polytope_symmetries(&verts).map_err(|e| e.to_string())?;
        ensure(
            g.order() == 48 && g.rotation_subgroup().order() == 24,
            || {
                format!(
                    "{name}: order {}, rotations {}",
                    g.order(),
                    g.rotation_subgroup().order()
                )
            },
        )?;
        let builtin = builtin_theory(name.parse().unwrap());
        ensure(builtin.reversible_group().unwrap().order() == 48, || {
            format!("{name}: builtin group differs")
        })?;
    }
    let s = spekkens_group();
    ensure(
        s.order() == 24 && s.rotation_subgroup().order() == 12,
        || {
            format!(
                "spekkens: order {}, rotations {}",
                s.order(),
                s.rotation_subgroup().order()
            )
        },
    )?;
    let cube = polytope_symmetries(&cube_vertices()).map_err(|e| e.to_string())?;
    let z = cube.rotation_subgroup().angles_about(&Vector3::z(), 1e-9);
    let expected = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
    ensure(
        z.len() == 4 && z.iter().zip(expected).all(|(a, b)| (a - b).abs() <= 1e-12),
        || format!("cube z angles {z:?}"),
    )?;
    for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
        let a = s.angles_about(&axis, 1e-9);
        ensure(
            a.len() == 2 && a[0].abs() <= 1e-12 && (a[1] - PI).abs() <= 1e-12,
            || format!("spekkens angles about {axis:?}: {a:?}"),
        )?;
    }
    Ok("cube/octahedron 48 (24), spekkens 24 (12), cube z {0, pi/2, pi, 3pi/2}, spekkens principal {0, pi}".into())
}

fn classify(
    theory: BuiltinTheory,
    axis: Vector3<f64>,
) -> std::result::Result<(EvolutionMode, Option<f64>), String> {
    let spec = allowed_times(
        &builtin_theory(theory),
        &HamiltonianObservable::new(axis, 0.0),
    )
    .map_err(|e| e.to_string())?;
    Ok((spec.mode, spec.minimal_angle))
}

fn criterion_6() -> Outcome {
    let mut rng = rng_from_seed(6);
    let mut checked = 0;
    let mut expect =
        |theory, axis: Vector3<f64>, mode, angle: Option<f64>| -> std::result::Result<(), String> {
            let (m, a) = classify(theory, axis)?;
            checked += 1;
            let angle_ok = match (a, angle) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-9,
                (None, None) => true,
                _ => false,
            };
            ensure(m == mode && angle_ok, || {
                format!("{theory} about {:?}: {m:?} {a:?}", axis.as_slice())
            })
        };
    use BuiltinTheory::*;
    use EvolutionMode::{Continuous, Discrete, None as NoEvolution};
    for _ in 0..20 {
        let n = random_unit_vector(&mut rng);
        expect(Ball, n, Continuous, None)?;
        let in_plane = Vector3::new(n.x, n.y, 0.0).normalize();
        expect(Cylinder, in_plane, Discrete, Some(PI))?;
        if n.z.abs() < 0.99 && n.z.abs() > 0.01 {
            expect(Cylinder, n, NoEvolution, None)?;
            expect(Cone, n, NoEvolution, None)?;
        }
        expect(Cone, in_plane, NoEvolution, None)?;
    }
    expect(Cylinder, Vector3::z(), Continuous, None)?;
    expect(Cone, Vector3::z(), Continuous, None)?;
    expect(Cone, -Vector3::z(), Continuous, None)?;
    for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
        expect(Cube, axis, Discrete, Some(FRAC_PI_2))?;
        expect(Cube, -axis, Discrete, Some(FRAC_PI_2))?;
    }
    for s in [
        [1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ] {
        expect(Cube, Vector3::from(s), Discrete, Some(2.0 * PI / 3.0))?;
    }
    Ok(format!("{checked} axis classifications"))
}

fn criterion_7() -> Outcome {
    let cube = builtin_theory(BuiltinTheory::Cube);
    let z = Measurement::canonical(Axis::Z);
    let face = well_defined_states(&cube, &z, "+").map_err(|e| e.to_string())?;
    let pts = face.test_points();
    ensure(
        !pts.is_empty()
            && pts
                .iter()
                .all(|p| (z.probabilities(p)[0] - 1.0).abs() <= 1e-12),
        || "cube top face has no well-defined-energy states".into(),
    )?;
    let h = HamiltonianObservable::new(Vector3::z(), 0.0);
    let report = stationary_under(&cube, &h, &face).map_err(|e| e.to_string())?;
    let (from, to) = report.moving_witness.ok_or("no moving witness")?;
    let (from, to) = (Vector3::from(from), Vector3::from(to));
    ensure(!report.all_stationary && (from - to).norm() > 1e-6, || {
        "witness does not move".into()
    })?;
    ensure((z.probabilities(&to)[0] - 1.0).abs() <= 1e-12, || {
        "witness leaves the face".into()
    })?;

    let group = cube.reversible_group().unwrap();
    for branch in [0usize, 1] {
        let localized: Vec<&OrthogonalMap> = group
            .elements()
            .iter()
            .filter(|t| {
                phase::is_branch_localized(t, &cube, &z, &[branch])
                    .map(|l| l.localized)
                    .unwrap_or(false)
            })
            .collect();
        ensure(
            localized.len() == 1 && localized[0].approx_eq(&OrthogonalMap::identity(), 1e-12),
            || {
                format!(
                    "cube branch {branch}: {} localized elements",
                    localized.len()
                )
            },
        )?;
    }

    let ball = builtin_theory(BuiltinTheory::Ball);
    let mut rng = rng_from_seed(7);
    for _ in 0..20 {
        let t = OrthogonalMap::rotation(&Vector3::z(), rng.random_range(0.0..2.0 * PI));
        for branch in [0usize, 1] {
            let l =
                phase::is_branch_localized(&t, &ball, &z, &[branch]).map_err(|e| e.to_string())?;
            ensure(l.localized, || {
                format!("ball z-rotation not localized to branch {branch}")
            })?;
        }
    }
    let tilt = OrthogonalMap::rotation(&Vector3::x(), 0.4);
    ensure(
        !phase::is_branch_localized(&tilt, &ball, &z, &[0])
            .map_err(|e| e.to_string())?
            .localized,
        || "ball x-rotation reported as localized".into(),
    )?;

    let mut checked = 0;
    let mut inv_cases = 0;
    for theory in BuiltinTheory::ALL {
        let space = builtin_theory(theory);
        let group = space.reversible_group().unwrap();
        for axis in Axis::ALL {
            let m = Measurement::canonical(axis);
            for (k, t) in group.elements().iter().enumerate() {
                let r = check_inv_star(&space, &m, &[0.0, 1.0], t, 20, k as u64)
                    .map_err(|e| e.to_string())?;
                ensure(r.two_outcome_implication == Some(true), || {
                    format!("{theory} {axis}: INV holds but element {k} changes the statistics")
                })?;
                let in_phase = phase::statistics_defect(t, &m) <= 1e-10;
                ensure(r.inv_holds == in_phase, || {
                    format!("{theory} {axis}: element {k} disagrees with the phase filter")
                })?;
                inv_cases += r.inv_holds as usize;
                checked += 1;
            }
        }
    }
    let (m3, values, t3) = phase::three_outcome_counterexample(1.0);
    let r = check_inv_star(&cube, &m3, &values, &t3, 50, 0).map_err(|e| e.to_string())?;
    ensure(r.inv_holds && !r.inv_star_holds, || {
        "three-outcome counterexample did not separate INV from INV*".into()
    })?;
    Ok(format!(
        "moving witness found; cube branches localize identity only; {checked} two-outcome checks ({inv_cases} conserving)"
    ))
}

fn criterion_8() -> Outcome {
    let a = assign_energies(&[(1, 2, 2.0 * PI)]).map_err(|e| e.to_string())?;
    let gap = a.energies[1] - a.energies[0];
    ensure((gap - 1.0).abs() <= 1e-7, || format!("E2 - E1 = {gap}"))?;
    // the period as printed to eight digits
    #[allow(clippy::approx_constant)]
    let tau = 6.2831853;
    let b = assign_energies(&[(1, 2, tau)]).map_err(|e| e.to_string())?;
    ensure((b.energies[1] - 1.0).abs() <= 1e-7, || {
        format!("E2 = {}", b.energies[1])
    })?;
    match assign_energies(&[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)]) {
        Err(Error::InconsistentCycle { .. }) => {}
        other => return Err(format!("inconsistent cycle accepted: {other:?}")),
    }
    let consistent =
        assign_energies(&[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 0.5)]).map_err(|e| e.to_string())?;
    ensure(consistent.residual <= 1e-9, || {
        "consistent cycle rejected".into()
    })?;
    let cube = builtin_theory(BuiltinTheory::Cube);
    let classes = phase::alias_classes(FRAC_PI_2, cube.reversible_group().unwrap(), &Vector3::z())
        .map_err(|e| e.to_string())?;
    ensure(classes.len() == 4, || {
        format!("{} alias classes", classes.len())
    })?;
    Ok(format!(
        "E2 - E1 = {gap:.9}; cycle rejected; gbit classes {}",
        classes.len()
    ))
}

fn criterion_9() -> Outcome {
    let grid = PhaseSpaceGrid::new(16, 16, 2.0 * PI, PI, 1.0).map_err(|e| e.to_string())?;
    let mut orth = 0.0f64;
    let mut norm = 0.0f64;
    for pot in [Potential::Free, Potential::Harmonic { k: 1.0, center: PI }] {
        let l = liouville::liouville_for(&grid, &pot).map_err(|e| e.to_string())?;
        let dense = l.to_dense();
        let anti = (&dense + dense.transpose()).amax();
        ensure(anti == 0.0, || {
            format!("{}: antisymmetry defect {anti:e}", pot.name())
        })?;
        let rho = DensityField::from_fn(&grid, |x, p| {
            (-(x - PI).powi(2) - (p - 1.0).powi(2)).exp() + 0.1
        })
        .map_err(|e| e.to_string())?;
        for t in [0.1, 1.0, 10.0] {
            let e = (&dense * t).exp();
            orth =
                orth.max((e.transpose() * &e - DMatrix::identity(grid.dim(), grid.dim())).amax());
            let out = liouville::liouville_evolve(&l, &rho, t, EvolveMethod::Expm)
                .map_err(|e| e.to_string())?;
            norm = norm.max((out.norm() - rho.norm()).abs());
        }
    }
    ensure(orth < 1e-9, || format!("orthogonality defect {orth:e}"))?;
    ensure(norm < 1e-9, || format!("L2 norm drift {norm:e}"))?;
    Ok(format!(
        "antisymmetry exact; orthogonality {orth:.1e}; norm drift {norm:.1e}"
    ))
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_gptham");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |n: &str| dir.path().join(n).display().to_string();
    let write =
        |n: &str, body: &str| std::fs::write(dir.path().join(n), body).map_err(|e| e.to_string());
    let exec = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| e.to_string())
    };

    write(
        "ball.json",
        r#"{"theory":"ball","hamiltonian":{"vector":[0.4,-1.1,0.7],"offset":0.2},"time":{"tMax":5,"dt":0.05},"initialState":[0.3,0.1,-0.5],"seed":42}"#,
    )?;
    let (a, b) = (path("a.csv"), path("b.csv"));
    for out in [&a, &b] {
        let r = exec(&[
            "--seed",
            "9",
            "evolve",
            "--scenario",
            &path("ball.json"),
            "--out",
            out,
        ])?;
        ensure(r.status.code() == Some(0), || {
            format!("evolve exit {:?}", r.status.code())
        })?;
    }
    let (ca, cb) = (
        std::fs::read(&a).map_err(|e| e.to_string())?,
        std::fs::read(&b).map_err(|e| e.to_string())?,
    );
    ensure(ca == cb && ca.starts_with(b"t,u1,u2,u3,energy\n"), || {
        "CSV differs between runs".into()
    })?;

    let verify = exec(&["verify", "--scenario", &path("ball.json")])?;
    ensure(verify.status.code() == Some(0), || {
        format!("verify exit {:?}", verify.status.code())
    })?;
    let report: serde_json::Value =
        serde_json::from_slice(&verify.stdout).map_err(|e| e.to_string())?;
    let entries = report["desiderata"]["entries"]
        .as_array()
        .ok_or("no desiderata")?;
    let passing: Vec<&str> = entries
        .iter()
        .filter(|e| e["status"] == "pass")
        .filter_map(|e| e["name"].as_str())
        .collect();
    ensure(passing == ["OBS", "GEN", "INV", "QUAN"], || {
        format!("passing desiderata {passing:?}")
    })?;

    write("cycle.csv", "i,j,tau\n1,2,1\n2,3,1\n1,3,1\n")?;
    write(
        "bad.json",
        r#"{"theory":"ball","hamiltonian":{"vector":[0,0,1]},"time":{"tMax":1},"initialState":[0,0,0],"typo":1}"#,
    )?;
    write(
        "cone.json",
        r#"{"theory":"cone","hamiltonian":{"vector":[1,0,0]},"time":{"tMax":1,"dt":0.1},"initialState":[0,0,0.5]}"#,
    )?;
    let cases: [(&[&str], i32); 4] = [
        (&["list-theories"], 0),
        (&["energy", "--periods", &path("cycle.csv")], 2),
        (&["verify", "--scenario", &path("bad.json")], 64),
        (
            &[
                "evolve",
                "--scenario",
                &path("cone.json"),
                "--out",
                &path("c.csv"),
            ],
            65,
        ),
    ];
    for (args, code) in cases {
        let r = exec(args)?;
        ensure(r.status.code() == Some(code), || {
            format!("{args:?}: exit {:?}, expected {code}", r.status.code())
        })?;
    }
    Ok("CSV byte-identical; exit codes 0/2/64/65; ball verify passes OBS, GEN, INV, QUAN".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Gell-Mann validity", criterion_1),
        ("QUAN reproduction", criterion_2),
        ("qudit equivalence", criterion_3),
        ("INV", criterion_4),
        ("group orders", criterion_5),
        ("allowed-time classification", criterion_6),
        ("phase and branch results", criterion_7),
        ("energy assignment", criterion_8),
        ("Liouville", criterion_9),
        ("CLI contract", criterion_10),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({secs:.2}s)", n + 1),
            Err(why) => {
                failures += 1;
                println!("[FAIL] {:>2} {name}: {why} ({secs:.2}s)", n + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
