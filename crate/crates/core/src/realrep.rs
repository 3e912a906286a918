//! Real-vector representation of finite-dimensional quantum theory.
//!
//! A density matrix on `d` levels is written as
//! `rho = 1/d + 1/2 * sum_j u_j lambda_j` where `lambda_j` are the generalized
//! Gell-Mann matrices, and a Hamiltonian as `H = v0/2 + 1/2 * sum_k v_k lambda_k`.
//! Evolution can then be computed either on the matrices (von Neumann) or on
//! the real vectors, using the `su(d)` structure constants:
//!
//! ```text
//! du_l/dt = f_ijl v_i u_j        (hbar = 1)
//! ```
//!
//! For `d = 2` this is `du/dt = v x u`, a rotation of the Bloch vector about
//! the Hamiltonian axis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const BASIS_TOL: f64 = 1e-12;
const STATE_TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as a valid (boundary) state.
pub const POSITIVITY_TOL: f64 = -1e-10;
pub const DEFAULT_ODE_STEP: f64 = 1e-3;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest entrywise deviation from hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    m.clone().symmetric_eigenvalues()
}

/// An ordered basis of traceless Hermitian `d x d` matrices with
/// `Tr(l_i l_j) = 2 delta_ij`.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    d: usize,
    elements: Vec<CMatrix>,
}

impl HermitianBasis {
    /// Wraps a user-supplied basis after checking hermiticity, tracelessness
    /// and orthogonality.
    pub fn from_elements(d: usize, elements: Vec<CMatrix>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if elements.len() != d * d - 1 {
            return Err(Error::DimensionMismatch {
                expected: d * d - 1,
                found: elements.len(),
            });
        }
        for (i, el) in elements.iter().enumerate() {
            if el.nrows() != d || el.ncols() != d {
                return Err(Error::InvalidBasis(format!("element {i} is not {d}x{d}")));
            }
            let h = hermiticity_defect(el);
            if h > BASIS_TOL {
                return Err(Error::InvalidBasis(format!(
                    "element {i} is not Hermitian (defect {h:e})"
                )));
            }
            if el.trace().norm() > BASIS_TOL {
                return Err(Error::InvalidBasis(format!("element {i} is not traceless")));
            }
        }
        let basis = HermitianBasis { d, elements };
        let defect = basis.orthogonality_defect();
        if defect > BASIS_TOL {
            return Err(Error::InvalidBasis(format!(
                "Tr(l_i l_j) deviates from 2 delta_ij by {defect:e}"
            )));
        }
        Ok(basis)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    /// `max_ij |Tr(l_i l_j) - 2 delta_ij|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                let target = if i == j { 2.0 } else { 0.0 };
                worst = worst.max((trace_product(a, b) - c(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Generalized Gell-Mann matrices for `d` levels.
///
/// Order: symmetric off-diagonal family `E_jk + E_kj`, antisymmetric family
/// `-i E_jk + i E_kj` (both over `j < k` in lexicographic order), then the
/// diagonal family. For `d = 2` this yields the Pauli matrices X, Y, Z.
pub fn gellmann_basis(d: usize) -> Result<HermitianBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let zero = CMatrix::zeros(d, d);
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .collect();
    let mut elements = Vec::with_capacity(d * d - 1);
    for &(j, k) in &pairs {
        let mut m = zero.clone();
        m[(j, k)] = c(1.0, 0.0);
        m[(k, j)] = c(1.0, 0.0);
        elements.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = zero.clone();
        m[(j, k)] = c(0.0, -1.0);
        m[(k, j)] = c(0.0, 1.0);
        elements.push(m);
    }
    for l in 1..d {
        let scale = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = zero.clone();
        for j in 0..l {
            m[(j, j)] = c(scale, 0.0);
        }
        m[(l, l)] = c(-(l as f64) * scale, 0.0);
        elements.push(m);
    }
    HermitianBasis::from_elements(d, elements)
}

/// Levi-Civita symbol on 0-based indices `{0, 1, 2}`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Totally antisymmetric structure constants `f_jkl` defined by
/// `[l_j, l_k] = 2i f_jkl l_l`. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor {
    d: usize,
    m: usize,
    entries: Vec<f64>,
}

impl StructureTensor {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of basis elements, `d^2 - 1`.
    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[(i * self.m + j) * self.m + k]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.entries[(i * self.m + j) * self.m + k] = value;
    }

    /// Largest violation of `f_ijk = -f_jik = -f_ikj`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let f = self.get(i, j, k);
                    worst = worst
                        .max((f + self.get(j, i, k)).abs())
                        .max((f + self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }

    /// The linear map `u -> du/dt` for Hamiltonian vector `v`:
    /// `G[l][j] = sum_i f_ijl v_i`.
    pub fn generator(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let m = self.m;
        let mut g = DMatrix::zeros(m, m);
        for i in 0..m {
            if v[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                for l in 0..m {
                    g[(l, j)] += self.get(i, j, l) * v[i];
                }
            }
        }
        g
    }
}

/// Structure constants `f_jkl = Tr([l_j, l_k] l_l) / 4i`.
///
/// The basis is re-validated; an imaginary residue above `1e-12` in any
/// coefficient is reported as an invalid basis.
pub fn structure_constants(basis: &HermitianBasis) -> Result<StructureTensor> {
    let defect = basis.orthogonality_defect();
    if defect > BASIS_TOL {
        return Err(Error::InvalidBasis(format!(
            "basis is not trace-orthogonal (defect {defect:e})"
        )));
    }
    let m = basis.len();
    let mut tensor = StructureTensor {
        d: basis.d(),
        m,
        entries: vec![0.0; m * m * m],
    };
    let els = basis.elements();
    for j in 0..m {
        for k in (j + 1)..m {
            let comm = &els[j] * &els[k] - &els[k] * &els[j];
            for (l, el) in els.iter().enumerate() {
                let tr = trace_product(&comm, el);
                // tr / (4i) = (tr.im - i tr.re) / 4
                if tr.re.abs() / 4.0 > BASIS_TOL {
                    return Err(Error::InvalidBasis(format!(
                        "structure constant ({j}, {k}, {l}) has imaginary residue {:e}",
                        tr.re / 4.0
                    )));
                }
                let f = tr.im / 4.0;
                tensor.set(j, k, l, f);
                tensor.set(k, j, l, -f);
            }
        }
    }
    Ok(tensor)
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let h = hermiticity_defect(&matrix);
        if h > BASIS_TOL {
            return Err(Error::NotHermitian(h));
        }
        let trace_defect = (matrix.trace() - c(1.0, 0.0)).norm();
        let min_eigenvalue = hermitian_eigenvalues(&matrix).min();
        if trace_defect > STATE_TRACE_TOL || min_eigenvalue < POSITIVITY_TOL {
            return Err(Error::NotAState {
                min_eigenvalue,
                trace_defect,
            });
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            matrix: CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0),
        }
    }

    /// `|psi><psi|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &DVector<Complex64>) -> Self {
        let norm = psi.norm();
        let psi = psi / c(norm, 0.0);
        DensityMatrix {
            matrix: &psi * psi.adjoint(),
        }
    }

    pub fn d(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn expectation(&self, observable: &CMatrix) -> f64 {
        trace_product(&self.matrix, observable).re
    }
}

/// `u_i = Tr(rho l_i)`.
pub fn bloch_from_density(rho: &DensityMatrix, basis: &HermitianBasis) -> Result<DVector<f64>> {
    if rho.d() != basis.d() {
        return Err(Error::DimensionMismatch {
            expected: basis.d(),
            found: rho.d(),
        });
    }
    let mut u = DVector::zeros(basis.len());
    for (i, el) in basis.elements().iter().enumerate() {
        let t = trace_product(rho.matrix(), el);
        debug_assert!(t.im.abs() < 1e-12);
        u[i] = t.re;
    }
    Ok(u)
}

/// `rho = 1/d + 1/2 sum u_j l_j`; positivity is checked and a negative
/// eigenvalue below `-1e-10` is reported as [`Error::NotAState`].
pub fn density_from_bloch(u: &DVector<f64>, basis: &HermitianBasis) -> Result<DensityMatrix> {
    if u.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: u.len(),
        });
    }
    let d = basis.d();
    let mut m = CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0);
    for (uj, el) in u.iter().zip(basis.elements()) {
        m += el * c(0.5 * uj, 0.0);
    }
    DensityMatrix::new(m)
}

/// `H = v0/2 + 1/2 sum v_k l_k`.
pub fn hermitian_from_vector(v0: f64, v: &DVector<f64>, basis: &HermitianBasis) -> Result<CMatrix> {
    if v.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: v.len(),
        });
    }
    let d = basis.d();
    let mut m = CMatrix::identity(d, d) * c(0.5 * v0, 0.0);
    for (vk, el) in v.iter().zip(basis.elements()) {
        m += el * c(0.5 * vk, 0.0);
    }
    Ok(m)
}

/// State, Hamiltonian vector and energy offset of a quantum system in the
/// real representation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRealPair {
    pub state: DVector<f64>,
    pub hamiltonian: DVector<f64>,
    /// `v0`, with `H = v0/2 * 1 + ...`.
    pub offset: f64,
}

impl QuantumRealPair {
    pub fn from_matrices(rho: &DensityMatrix, h: &CMatrix, basis: &HermitianBasis) -> Result<Self> {
        if h.nrows() != basis.d() {
            return Err(Error::DimensionMismatch {
                expected: basis.d(),
                found: h.nrows(),
            });
        }
        let defect = hermiticity_defect(h);
        if defect > BASIS_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let state = bloch_from_density(rho, basis)?;
        let hamiltonian = DVector::from_iterator(
            basis.len(),
            basis.elements().iter().map(|el| trace_product(h, el).re),
        );
        let offset = 2.0 * h.trace().re / basis.d() as f64;
        Ok(QuantumRealPair {
            state,
            hamiltonian,
            offset,
        })
    }
}

/// `exp(-i H t)` by eigendecomposition of the Hermitian `H`.
pub fn unitary(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let scale = h.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let defect = hermiticity_defect(h);
    if defect > BASIS_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let phases = DVector::from_iterator(
        n,
        eig.eigenvalues
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t)),
    );
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, ph) in phases.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    Ok(scaled * v.adjoint())
}

/// `rho(t) = exp(-iHt) rho exp(iHt)` with `hbar = 1`.
pub fn von_neumann_evolve(rho: &DensityMatrix, h: &CMatrix, t: f64) -> Result<DensityMatrix> {
    if h.nrows() != rho.d() || h.ncols() != rho.d() {
        return Err(Error::DimensionMismatch {
            expected: rho.d(),
            found: h.nrows(),
        });
    }
    let u = unitary(h, t)?;
    let evolved = &u * rho.matrix() * u.adjoint();
    let symmetrized = (&evolved + evolved.adjoint()) * c(0.5, 0.0);
    Ok(DensityMatrix {
        matrix: symmetrized,
    })
}

/// Integrates `du_l/dt = f_ijl v_i u_j` with fixed-step classical RK4 and
/// returns the state at every grid point.
///
/// The grid must start at 0 and be strictly increasing; each grid interval is
/// split into equal substeps no longer than `step`.
pub fn bloch_ode_evolve(
    u0: &DVector<f64>,
    v: &DVector<f64>,
    tensor: &StructureTensor,
    grid: &[f64],
    step: f64,
) -> Result<Vec<DVector<f64>>> {
    let m = tensor.size();
    for len in [u0.len(), v.len()] {
        if len != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: len,
            });
        }
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "step must be positive, got {step}"
        )));
    }
    match grid.first() {
        None => return Err(Error::InvalidGrid("empty grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidGrid(format!(
                "grid must start at 0, starts at {t0}"
            )))
        }
        _ => {}
    }
    if let Some(w) = grid
        .windows(2)
        .find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidGrid(format!(
            "grid is not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }

    let g = tensor.generator(v);
    let rhs = |u: &DVector<f64>| &g * u;
    let mut u = u0.clone();
    let mut out = Vec::with_capacity(grid.len());
    out.push(u.clone());
    for w in grid.windows(2) {
        let span = w[1] - w[0];
        let n = (span / step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            let k1 = rhs(&u);
            let k2 = rhs(&(&u + &k1 * (h / 2.0)));
            let k3 = rhs(&(&u + &k2 * (h / 2.0)));
            let k4 = rhs(&(&u + &k3 * h));
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out.push(u.clone());
    }
    Ok(out)
}

/// Random full-rank density matrix from a normalized Ginibre matrix `G G^dag`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m * c(1.0 / tr, 0.0);
    DensityMatrix {
        matrix: (&m + m.adjoint()) * c(0.5, 0.0),
    }
}

/// Random pure state (Haar distributed).
pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let psi = DVector::from_fn(d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    DensityMatrix::pure(&psi)
}

/// Random Hermitian matrix with standard normal entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&g + g.adjoint()) * c(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_from_seed;

    fn pauli() -> [CMatrix; 3] {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        [
            CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
            CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        ]
    }

    #[test]
    fn qubit_basis_is_pauli() {
        let b = gellmann_basis(2).unwrap();
        for (el, p) in b.elements().iter().zip(pauli().iter()) {
            assert_eq!(el, p);
        }
    }

    #[test]
    fn rejects_single_level() {
        assert_eq!(gellmann_basis(1).unwrap_err(), Error::InvalidDimension(1));
        assert_eq!(gellmann_basis(0).unwrap_err(), Error::InvalidDimension(0));
    }

    #[test]
    fn basis_invariants_up_to_five_levels() {
        for d in 2..=5 {
            let b = gellmann_basis(d).unwrap();
            assert_eq!(b.len(), d * d - 1);
            for el in b.elements() {
                assert!(hermiticity_defect(el) < 1e-12);
                assert!(el.trace().norm() < 1e-12);
            }
            // every one of the (d^2-1)^2 pairs, by direct trace computation
            for (i, a) in b.elements().iter().enumerate() {
                for (j, bb) in b.elements().iter().enumerate() {
                    let prod = a * bb;
                    let tr: Complex64 = (0..d).map(|k| prod[(k, k)]).sum();
                    let want = if i == j { 2.0 } else { 0.0 };
                    assert!((tr - c(want, 0.0)).norm() < 1e-12, "d={d} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn from_elements_rejects_non_orthogonal() {
        let mut els = pauli().to_vec();
        els[1] = els[0].clone();
        assert!(matches!(
            HermitianBasis::from_elements(2, els),
            Err(Error::InvalidBasis(_))
        ));
    }

    #[test]
    fn qubit_structure_constants_are_levi_civita() {
        let f = structure_constants(&gellmann_basis(2).unwrap()).unwrap();
        assert_eq!(f.get(0, 1, 2), 1.0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((f.get(i, j, k) - levi_civita(i, j, k)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn repeated_indices_vanish() {
        for d in 2..=4 {
            let f = structure_constants(&gellmann_basis(d).unwrap()).unwrap();
            assert_eq!(f.get(0, 0, 1), 0.0);
            assert!(f.antisymmetry_defect() < 1e-12);
        }
    }

    #[test]
    fn qutrit_structure_constant_458() {
        // Standard Gell-Mann labels lambda_4, lambda_5, lambda_8 are, in this
        // crate's ordering, elements 2 (sym 1-3), 5 (antisym 1-3) and 8.
        let b = gellmann_basis(3).unwrap();
        let f = structure_constants(&b).unwrap();
        let (l4, l5, l8) = (b.element(1), b.element(4), b.element(7));
        // oracle: trace formula evaluated by direct matrix arithmetic
        let comm = l4 * l5 - l5 * l4;
        let tr: Complex64 = (0..3).map(|k| (&comm * l8)[(k, k)]).sum();
        let oracle = (tr / c(0.0, 4.0)).re;
        assert!((oracle - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((f.get(1, 4, 7) - 3f64.sqrt() / 2.0).abs() < 1e-12);
        // the standard lambda_1 lambda_2 lambda_3 triple is 0, 3, 6 here
        assert!((f.get(0, 3, 6) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bloch_vector_of_maximally_mixed_is_zero() {
        for d in 2..=4 {
            let b = gellmann_basis(d).unwrap();
            let u = bloch_from_density(&DensityMatrix::maximally_mixed(d), &b).unwrap();
            assert!(u.norm() < 1e-15);
        }
    }

    #[test]
    fn bloch_vector_of_ground_state() {
        let b = gellmann_basis(2).unwrap();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.0, 0.0);
        let u = bloch_from_density(&DensityMatrix::new(m.clone()).unwrap(), &b).unwrap();
        assert_eq!(u.as_slice(), &[0.0, 0.0, 1.0]);
        let back = density_from_bloch(&u, &b).unwrap();
        assert!((back.matrix() - m).norm() < 1e-15);
    }

    #[test]
    fn density_from_zero_vector() {
        let b = gellmann_basis(3).unwrap();
        let rho = density_from_bloch(&DVector::zeros(8), &b).unwrap();
        assert!((rho.matrix() - DensityMatrix::maximally_mixed(3).matrix()).norm() < 1e-15);
    }

    #[test]
    fn oversized_qutrit_vector_is_not_a_state() {
        let b = gellmann_basis(3).unwrap();
        let mut u = DVector::zeros(8);
        u[0] = 1.5;
        // oracle: eigenvalues of 1/3 + 0.75 (E12 + E21) are 1/3 +- 0.75, 1/3
        match density_from_bloch(&u, &b) {
            Err(Error::NotAState { min_eigenvalue, .. }) => {
                assert!((min_eigenvalue - (1.0 / 3.0 - 0.75)).abs() < 1e-12)
            }
            other => panic!("expected NotAState, got {other:?}"),
        }
    }

    #[test]
    fn density_dimension_mismatch() {
        let b = gellmann_basis(2).unwrap();
        assert!(matches!(
            density_from_bloch(&DVector::zeros(8), &b),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 8
            })
        ));
        assert!(matches!(
            bloch_from_density(&DensityMatrix::maximally_mixed(3), &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn qubit_bloch_vectors_are_in_the_ball() {
        let b = gellmann_basis(2).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..100 {
            let u = bloch_from_density(&random_pure(2, &mut rng), &b).unwrap();
            assert!(u.norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn round_trip_random_states() {
        let mut rng = rng_from_seed(2);
        for d in [2, 3] {
            let b = gellmann_basis(d).unwrap();
            for _ in 0..100 {
                let rho = random_density(d, &mut rng);
                let back = density_from_bloch(&bloch_from_density(&rho, &b).unwrap(), &b).unwrap();
                let err = (back.matrix() - rho.matrix())
                    .iter()
                    .fold(0.0f64, |m, z| m.max(z.norm()));
                assert!(err < 1e-10);
            }
        }
    }

    #[test]
    fn von_neumann_identity_at_zero() {
        let mut rng = rng_from_seed(3);
        let rho = random_density(3, &mut rng);
        let h = random_hermitian(3, &mut rng);
        let out = von_neumann_evolve(&rho, &h, 0.0).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-14);
    }

    #[test]
    fn von_neumann_rejects_non_hermitian() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = c(1.0, 0.0);
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            von_neumann_evolve(&rho, &h, 1.0),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn qubit_precession_closed_form() {
        let b = gellmann_basis(2).unwrap();
        let plus = DensityMatrix::pure(&DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]));
        let e = 1.7;
        let h = b.element(2) * c(e / 2.0, 0.0);
        for &t in &[0.0, 0.3, 1.0, 2.5, 7.0] {
            let u = bloch_from_density(&von_neumann_evolve(&plus, &h, t).unwrap(), &b).unwrap();
            let want = [(e * t).cos(), (e * t).sin(), 0.0];
            for k in 0..3 {
                assert!((u[k] - want[k]).abs() < 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn unitary_evolution_preserves_purity_and_spectrum() {
        let mut rng = rng_from_seed(4);
        for d in 2..=4 {
            let rho = random_density(d, &mut rng);
            let h = random_hermitian(d, &mut rng);
            let out = von_neumann_evolve(&rho, &h, 2.3).unwrap();
            assert!((out.purity() - rho.purity()).abs() < 1e-10);
            assert!((out.matrix().trace() - c(1.0, 0.0)).norm() < 1e-10);
            let mut a: Vec<f64> = rho.eigenvalues().iter().copied().collect();
            let mut bb: Vec<f64> = out.eigenvalues().iter().copied().collect();
            a.sort_by(f64::total_cmp);
            bb.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&bb) {
                assert!((x - y).abs() < 1e-10);
            }
            assert!((out.expectation(&h) - rho.expectation(&h)).abs() < 1e-10);
        }
    }

    #[test]
    fn ode_with_zero_generator_is_constant() {
        let f = structure_constants(&gellmann_basis(3).unwrap()).unwrap();
        let u0 = DVector::from_fn(8, |i, _| 0.05 * i as f64);
        let out = bloch_ode_evolve(&u0, &DVector::zeros(8), &f, &[0.0, 0.5, 1.0], 1e-3).unwrap();
        for u in out {
            assert_eq!(u, u0);
        }
    }

    #[test]
    fn ode_rotates_qubit_about_axis_three() {
        let f = structure_constants(&gellmann_basis(2).unwrap()).unwrap();
        let u0 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let v = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let t = std::f64::consts::FRAC_PI_2;
        let out = bloch_ode_evolve(&u0, &v, &f, &[0.0, t], DEFAULT_ODE_STEP).unwrap();
        let u = &out[1];
        assert!((u[0] - 0.0).abs() < 1e-10);
        assert!((u[1] - 1.0).abs() < 1e-10);
        assert!(u[2].abs() < 1e-12);
    }

    #[test]
    fn ode_matches_matrix_route_for_qutrit() {
        let b = gellmann_basis(3).unwrap();
        let f = structure_constants(&b).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..5 {
            let rho = random_density(3, &mut rng);
            let h = random_hermitian(3, &mut rng);
            let pair = QuantumRealPair::from_matrices(&rho, &h, &b).unwrap();
            let out =
                bloch_ode_evolve(&pair.state, &pair.hamiltonian, &f, &[0.0, 1.0], 1e-3).unwrap();
            let exact =
                bloch_from_density(&von_neumann_evolve(&rho, &h, 1.0).unwrap(), &b).unwrap();
            assert!((&out[1] - exact).norm() < 1e-6);
        }
    }

    #[test]
    fn ode_rejects_bad_grids() {
        let f = structure_constants(&gellmann_basis(2).unwrap()).unwrap();
        let u = DVector::zeros(3);
        assert!(matches!(
            bloch_ode_evolve(&u, &u, &f, &[0.0, 1.0, 1.0], 1e-3),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            bloch_ode_evolve(&u, &u, &f, &[0.5, 1.0], 1e-3),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            bloch_ode_evolve(&DVector::zeros(8), &u, &f, &[0.0], 1e-3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hamiltonian_vector_round_trip() {
        let b = gellmann_basis(3).unwrap();
        let mut rng = rng_from_seed(6);
        let h = random_hermitian(3, &mut rng);
        let pair =
            QuantumRealPair::from_matrices(&DensityMatrix::maximally_mixed(3), &h, &b).unwrap();
        let rebuilt = hermitian_from_vector(pair.offset, &pair.hamiltonian, &b).unwrap();
        assert!((rebuilt - h).norm() < 1e-12);
    }
}
