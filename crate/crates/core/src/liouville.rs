//! Classical Liouville evolution on a periodic phase-space grid.
//!
//! The operator is assembled from periodic central differences so that it
//! is exactly antisymmetric; `exp(-L t)` is then orthogonal and conserves
//! the L2 norm of the density.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{Error, Result};

/// Largest operator dimension accepted by the dense exponential.
pub const EXPM_MAX_DIM: usize = 4096;
pub const DEFAULT_RK4_STEP: f64 = 1e-3;

/// `x in [0, lx)` and `p in [-p_max, p_max)`, both periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PhaseSpaceGrid {
    nx: usize,
    np: usize,
    lx: f64,
    p_max: f64,
    mass: f64,
}

impl PhaseSpaceGrid {
    pub fn new(nx: usize, np: usize, lx: f64, p_max: f64, mass: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("np", np)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidPhaseGrid(format!(
                    "{name} = {n} must be even and at least 4"
                )));
            }
        }
        for (name, v) in [("lx", lx), ("p_max", p_max), ("mass", mass)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidPhaseGrid(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        Ok(PhaseSpaceGrid {
            nx,
            np,
            lx,
            p_max,
            mass,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn dim(&self) -> usize {
        self.nx * self.np
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / self.np as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }

    pub fn p(&self, ip: usize) -> f64 {
        -self.p_max + ip as f64 * self.dp()
    }

    /// Row-major cell index.
    pub fn index(&self, ix: usize, ip: usize) -> usize {
        ix * self.np + ip
    }
}

/// Cell values of a phase-space density, row-major over `(x, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    values: DVector<f64>,
}

impl DensityField {
    /// A nonnegative density with positive norm.
    pub fn new(grid: &PhaseSpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPhaseGrid(
                "density values must be finite and nonnegative".into(),
            ));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidPhaseGrid(
                "density is identically zero".into(),
            ));
        }
        Ok(DensityField {
            values: DVector::from_vec(values),
        })
    }

    pub fn from_fn(grid: &PhaseSpaceGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut v = Vec::with_capacity(grid.dim());
        for ix in 0..grid.nx {
            for ip in 0..grid.np {
                v.push(f(grid.x(ix), grid.p(ip)));
            }
        }
        DensityField::new(grid, v)
    }

    /// All weight on one cell.
    pub fn point(grid: &PhaseSpaceGrid, ix: usize, ip: usize) -> Result<Self> {
        let mut v = vec![0.0; grid.dim()];
        let idx = grid.index(ix % grid.nx, ip % grid.np);
        v[idx] = 1.0;
        DensityField::new(grid, v)
    }

    pub fn values(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    pub fn sum(&self) -> f64 {
        self.values.sum()
    }

    pub fn get(&self, grid: &PhaseSpaceGrid, ix: usize, ip: usize) -> f64 {
        self.values[grid.index(ix, ip)]
    }

    /// Mean position weighted by the density, on the unwrapped interval.
    pub fn mean_x(&self, grid: &PhaseSpaceGrid) -> f64 {
        let mut num = 0.0;
        for ix in 0..grid.nx {
            for ip in 0..grid.np {
                num += grid.x(ix) * self.get(grid, ix, ip);
            }
        }
        num / self.sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Potential {
    Free,
    /// `V'(x) = k (x - center)`, wrapped onto the periodic grid.
    Harmonic {
        k: f64,
        center: f64,
    },
}

impl Potential {
    pub fn name(&self) -> &'static str {
        match self {
            Potential::Free => "free",
            Potential::Harmonic { .. } => "harmonic",
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { k, center } => k * (x - center),
        }
    }
}

/// Sparse operator as `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
    potential_name: String,
}

impl LiouvilleMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn potential_name(&self) -> &str {
        &self.potential_name
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for &(r, c, x) in &self.entries {
            out[r] += x * v[c];
        }
        out
    }

    /// `max |L + L^T|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let d = self.to_dense();
        (&d + d.transpose()).amax()
    }
}

/// `L = Dx (x) diag(p / m) - diag(V'(x)) (x) Dp` with periodic central
/// differences; `d rho / dt = -L rho`.
pub fn liouville_matrix(
    grid: &PhaseSpaceGrid,
    potential_name: &str,
    vprime: impl Fn(f64) -> f64,
) -> Result<LiouvilleMatrix> {
    let (nx, np) = (grid.nx, grid.np);
    let gradients: Vec<f64> = (0..nx).map(|ix| vprime(grid.x(ix))).collect();
    if let Some(bad) = gradients.iter().find(|g| !g.is_finite()) {
        return Err(Error::NonFinitePotential(*bad));
    }
    let cx = 1.0 / (2.0 * grid.dx());
    let cp = 1.0 / (2.0 * grid.dp());
    let mut entries = Vec::with_capacity(4 * grid.dim());
    for (ix, &force) in gradients.iter().enumerate() {
        let (xf, xb) = ((ix + 1) % nx, (ix + nx - 1) % nx);
        for ip in 0..np {
            let row = grid.index(ix, ip);
            let velocity = grid.p(ip) / grid.mass;
            if velocity != 0.0 {
                entries.push((row, grid.index(xf, ip), cx * velocity));
                entries.push((row, grid.index(xb, ip), -(cx * velocity)));
            }
            if force != 0.0 {
                let (pf, pb) = ((ip + 1) % np, (ip + np - 1) % np);
                entries.push((row, grid.index(ix, pf), -(force * cp)));
                entries.push((row, grid.index(ix, pb), force * cp));
            }
        }
    }
    Ok(LiouvilleMatrix {
        dim: grid.dim(),
        entries,
        potential_name: potential_name.to_string(),
    })
}

pub fn liouville_for(grid: &PhaseSpaceGrid, potential: &Potential) -> Result<LiouvilleMatrix> {
    liouville_matrix(grid, potential.name(), |x| potential.gradient(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum EvolveMethod {
    Expm,
    Rk4 { step: f64 },
}

/// `exp(-L t)` as a dense matrix.
pub fn propagator(l: &LiouvilleMatrix, t: f64) -> Result<DMatrix<f64>> {
    if l.dim > EXPM_MAX_DIM {
        return Err(Error::ExpmTooLarge(l.dim));
    }
    Ok((l.to_dense() * -t).exp())
}

/// `max |E^T E - I|` for `E = exp(-L t)`.
pub fn orthogonality_defect(l: &LiouvilleMatrix, t: f64) -> Result<f64> {
    let e = propagator(l, t)?;
    Ok((e.transpose() * &e - DMatrix::identity(l.dim, l.dim)).amax())
}

/// Evolves a density for time `t`. The result may take negative values.
pub fn liouville_evolve(
    l: &LiouvilleMatrix,
    rho0: &DensityField,
    t: f64,
    method: EvolveMethod,
) -> Result<DensityField> {
    if rho0.values.len() != l.dim {
        return Err(Error::DimensionMismatch {
            expected: l.dim,
            found: rho0.values.len(),
        });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let values = match method {
        EvolveMethod::Expm => propagator(l, t)? * &rho0.values,
        EvolveMethod::Rk4 { step } => {
            if step.is_nan() || step <= 0.0 {
                return Err(Error::InvalidPhaseGrid(format!(
                    "step {step} must be positive"
                )));
            }
            let n = (t.abs() / step).ceil().max(1.0) as usize;
            let h = t / n as f64;
            let f = |v: &DVector<f64>| -l.apply(v);
            let mut y = rho0.values.clone();
            for _ in 0..n {
                let k1 = f(&y);
                let k2 = f(&(&y + &k1 * (h / 2.0)));
                let k3 = f(&(&y + &k2 * (h / 2.0)));
                let k4 = f(&(&y + &k3 * h));
                y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
            y
        }
    };
    Ok(DensityField { values })
}

/// `x,p,value` rows with a header line.
pub fn density_csv(grid: &PhaseSpaceGrid, field: &DensityField) -> String {
    let mut out = String::from("x,p,value\n");
    for ix in 0..grid.nx {
        for ip in 0..grid.np {
            let _ = writeln!(
                out,
                "{},{},{}",
                crate::cli::format_number(grid.x(ix)),
                crate::cli::format_number(grid.p(ip)),
                crate::cli::format_number(field.get(grid, ix, ip))
            );
        }
    }
    out
}
