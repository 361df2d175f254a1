//! Brute-force density-matrix reference.
//!
//! Pauli strings act on basis indices through bit operations, so no `2ⁿ×2ⁿ`
//! operator matrix is ever formed. Basis index bit `n−1−k` belongs to site `k`
//! (site 1 is the most significant bit).

use num_complex::Complex64;

use crate::eom::VariableSet;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix, Vector};
use crate::pauli::{LindbladModel, PauliPolynomial, PauliString};
use crate::sim::{step_size, Trajectory};

/// Largest register the oracle accepts.
pub const MAX_ORACLE_SITES: usize = 10;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_sites(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORACLE_SITES {
        return Err(Error::Dimension(format!(
            "oracle supports 1..={MAX_ORACLE_SITES} sites, got {n}"
        )));
    }
    Ok(())
}

// Site masks re-expressed in basis-index bit order.
fn index_masks(p: &PauliString) -> (usize, usize, Complex64) {
    let n = p.n_sites();
    let rev = |m: u64| -> usize {
        (0..n)
            .filter(|k| (m >> k) & 1 == 1)
            .map(|k| 1usize << (n - 1 - k))
            .sum()
    };
    let y = (p.x_mask() & p.z_mask()).count_ones();
    (rev(p.x_mask()), rev(p.z_mask()), I.powu(y))
}

fn parity(v: usize) -> f64 {
    if v.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `P·ψ` for a state vector.
pub fn apply_string_vec(p: &PauliString, psi: &[Complex64]) -> Vec<Complex64> {
    let (x, z, ph) = index_masks(p);
    (0..psi.len())
        .map(|r| {
            let s = r ^ x;
            psi[s] * ph * parity(z & s)
        })
        .collect()
}

/// `Σ c·P·m`, columns of `m` treated independently.
pub fn apply_left(poly: &PauliPolynomial, m: &CMatrix) -> CMatrix {
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, m.ncols());
    let terms: Vec<(usize, Vec<Complex64>)> = poly
        .terms()
        .map(|(p, c)| {
            let (x, z, ph) = index_masks(p);
            (x, (0..d).map(|r| c * ph * parity(z & (r ^ x))).collect())
        })
        .collect();
    for col in 0..m.ncols() {
        let src = m.column(col);
        let mut dst = out.column_mut(col);
        for (x, f) in &terms {
            for r in 0..d {
                dst[r] += f[r] * src[r ^ x];
            }
        }
    }
    out
}

/// `Σ c·m·P`.
pub fn apply_right(m: &CMatrix, poly: &PauliPolynomial) -> CMatrix {
    let d = m.ncols();
    let mut out = CMatrix::zeros(m.nrows(), d);
    for (p, c) in poly.terms() {
        let (x, z, ph) = index_masks(p);
        for col in 0..d {
            let s = col ^ x;
            let f = c * ph * parity(z & col);
            for r in 0..m.nrows() {
                out[(r, col)] += m[(r, s)] * f;
            }
        }
    }
    out
}

/// `Tr(P·m)` without forming `P·m`.
pub fn trace_with_string(p: &PauliString, m: &CMatrix) -> Complex64 {
    let (x, z, ph) = index_masks(p);
    let mut acc = Complex64::default();
    for r in 0..m.nrows() {
        let s = r ^ x;
        acc += m[(s, r)] * parity(z & s);
    }
    acc * ph
}

/// Dense matrix of a Pauli string (small registers only).
pub fn string_matrix(p: &PauliString) -> CMatrix {
    let d = 1usize << p.n_sites();
    apply_left(
        &PauliPolynomial::from_real(*p, 1.0),
        &CMatrix::identity(d, d),
    )
}

/// Dense matrix of a polynomial (small registers only).
pub fn poly_matrix(poly: &PauliPolynomial) -> CMatrix {
    let d = 1usize << poly.n_sites();
    let mut out = CMatrix::zeros(d, d);
    for (p, c) in poly.terms() {
        let (x, z, ph) = index_masks(p);
        for r in 0..d {
            let s = r ^ x;
            out[(r, s)] += c * ph * parity(z & s);
        }
    }
    out
}

/// Density matrix of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(n_sites: usize, data: CMatrix) -> Result<Self> {
        check_sites(n_sites)?;
        let d = 1usize << n_sites;
        if data.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "density matrix must be {d}x{d}, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let rho = Self { n: n_sites, data };
        rho.validate(1e-8)?;
        Ok(rho)
    }

    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let n = register_size(psi.len())?;
        check_normalized(psi)?;
        let v = CMatrix::from_column_slice(psi.len(), 1, psi);
        Ok(Self {
            n,
            data: &v * v.adjoint(),
        })
    }

    pub fn maximally_mixed(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let d = 1usize << n_sites;
        Ok(Self {
            n: n_sites,
            data: CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        })
    }

    /// `ρ = Π_k ½(I + b_x X + b_y Y + b_z Z)` from per-site Bloch vectors.
    pub fn from_product_bloch(blochs: &[[f64; 3]]) -> Result<Self> {
        check_sites(blochs.len())?;
        let mut data = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for b in blochs {
            let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            if norm > 1.0 + 1e-9 {
                return Err(Error::InvalidState(format!(
                    "Bloch vector norm {norm} exceeds 1"
                )));
            }
            let site = CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(0.5 * (1.0 + b[2]), 0.0),
                    Complex64::new(0.5 * b[0], -0.5 * b[1]),
                    Complex64::new(0.5 * b[0], 0.5 * b[1]),
                    Complex64::new(0.5 * (1.0 - b[2]), 0.0),
                ],
            );
            data = data.kronecker(&site);
        }
        Ok(Self {
            n: blochs.len(),
            data,
        })
    }

    /// `ρ = 2⁻ⁿ·poly` for a polynomial whose identity coefficient is `2⁻ⁿ`.
    pub fn from_poly(poly: &PauliPolynomial) -> Result<Self> {
        check_sites(poly.n_sites())?;
        Self::from_matrix(poly.n_sites(), poly_matrix(poly))
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn expectation(&self, p: &PauliString) -> f64 {
        trace_with_string(p, &self.data).re
    }

    /// `Tr(Pρ)` for a polynomial; only real parts of coefficients are used.
    pub fn poly_expectation(&self, poly: &PauliPolynomial) -> f64 {
        poly.terms()
            .map(|(s, c)| {
                if s.is_identity() {
                    c.re
                } else {
                    c.re * self.expectation(s)
                }
            })
            .sum()
    }

    pub fn expectations(&self, vars: &VariableSet) -> Vector {
        Vector::from_iterator(vars.len(), vars.iter().map(|p| self.expectation(p)))
    }

    /// Hermiticity and trace to `tol`, eigenvalues above `-tol·100`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = (&self.data - self.data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > tol {
            return Err(Error::InvalidState(format!(
                "density matrix not hermitian ({herm:.3e})"
            )));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidState(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -100.0 * tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `Σ_k K ρ K†` for the given Kraus operators.
    pub fn apply_kraus(&self, kraus: &[PauliPolynomial]) -> DensityMatrix {
        let mut out = CMatrix::zeros(self.data.nrows(), self.data.ncols());
        for k in kraus {
            out += apply_right(&apply_left(k, &self.data), &k.adjoint());
        }
        DensityMatrix {
            n: self.n,
            data: out,
        }
    }

    pub fn scale_add(&self, w: f64, other: &DensityMatrix, v: f64) -> DensityMatrix {
        DensityMatrix {
            n: self.n,
            data: &self.data * Complex64::new(w, 0.0) + &other.data * Complex64::new(v, 0.0),
        }
    }
}

fn register_size(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "amplitude list of length {len} is not a power of two"
        )));
    }
    let n = len.trailing_zeros() as usize;
    check_sites(n)?;
    Ok(n)
}

fn check_normalized(psi: &[Complex64]) -> Result<()> {
    let norm2: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if !norm2.is_finite() || (norm2 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "state is not normalized (‖ψ‖² = {norm2})"
        )));
    }
    Ok(())
}

/// A pure state or a density matrix.
#[derive(Debug, Clone)]
pub enum StateInput {
    Pure(Vec<Complex64>),
    Mixed(DensityMatrix),
}

/// `⟨P⟩` for every variable: `⟨ψ|P|ψ⟩` or `Tr(Pρ)`.
pub fn expectations_from_state(state: &StateInput, vars: &VariableSet) -> Result<Vector> {
    match state {
        StateInput::Pure(psi) => {
            let n = register_size(psi.len())?;
            check_normalized(psi)?;
            let mut out = Vector::zeros(vars.len());
            for (i, p) in vars.iter().enumerate() {
                if p.n_sites() != n {
                    return Err(Error::Dimension(format!(
                        "variable {p} on {} sites, state on {n}",
                        p.n_sites()
                    )));
                }
                let pp = apply_string_vec(p, psi);
                out[i] = psi
                    .iter()
                    .zip(&pp)
                    .map(|(a, b)| a.conj() * b)
                    .sum::<Complex64>()
                    .re;
            }
            Ok(out)
        }
        StateInput::Mixed(rho) => {
            rho.validate(1e-8)?;
            if let Some(p) = vars.iter().find(|p| p.n_sites() != rho.n) {
                return Err(Error::Dimension(format!(
                    "variable {p} on {} sites, state on {}",
                    p.n_sites(),
                    rho.n
                )));
            }
            Ok(rho.expectations(vars))
        }
    }
}

/// `−i[H,ρ] + Σ rate·(cρc† − ½{c†c,ρ})`.
pub fn lindblad_rhs(m: &LindbladModel, rho: &CMatrix) -> CMatrix {
    let h = m.hamiltonian();
    let mut out = (apply_left(h, rho) - apply_right(rho, h)) * Complex64::new(0.0, -1.0);
    for d in m.dissipators() {
        if d.rate == 0.0 {
            continue;
        }
        let c = &d.operator;
        let cd = c.adjoint();
        let cdc = &cd * c;
        let jump = apply_right(&apply_left(c, rho), &cd);
        let anti = apply_left(&cdc, rho) + apply_right(rho, &cdc);
        out += (jump - anti * Complex64::new(0.5, 0.0)) * Complex64::new(d.rate, 0.0);
    }
    out
}

// Fixed-step RK4 on ρ through the sample times; `on_sample` sees every sample.
fn integrate_states<F>(
    m: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    mut on_sample: F,
) -> Result<CMatrix>
where
    F: FnMut(usize, &CMatrix),
{
    check_sites(m.n_sites())?;
    if rho0.n != m.n_sites() {
        return Err(Error::Dimension(format!(
            "state on {} sites, model on {}",
            rho0.n,
            m.n_sites()
        )));
    }
    let h_max = step_size(times, m.norm_bound())?;
    let mut rho = rho0.data.clone();
    on_sample(0, &rho);
    for w in 1..times.len() {
        let span = times[w] - times[w - 1];
        let steps = (span / h_max).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let hc = Complex64::new(h, 0.0);
        for _ in 0..steps {
            let k1 = lindblad_rhs(m, &rho);
            let k2 = lindblad_rhs(m, &(&rho + &k1 * (hc * 0.5)));
            let k3 = lindblad_rhs(m, &(&rho + &k2 * (hc * 0.5)));
            let k4 = lindblad_rhs(m, &(&rho + &k3 * hc));
            rho += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * (hc / 6.0);
            let tr = rho.trace();
            if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
                rho /= tr;
            }
        }
        let diag_min = (0..rho.nrows())
            .map(|i| rho[(i, i)].re)
            .fold(f64::INFINITY, f64::min);
        if diag_min < -1e-6 {
            return Err(Error::Integration(format!(
                "density matrix lost positivity at t = {} (diagonal {diag_min:.3e})",
                times[w]
            )));
        }
        on_sample(w, &rho);
    }
    if m.n_sites() <= 6 {
        let end = DensityMatrix {
            n: rho0.n,
            data: rho.clone(),
        };
        let min = end.min_eigenvalue();
        if min < -1e-6 {
            return Err(Error::Integration(format!(
                "density matrix lost positivity (eigenvalue {min:.3e})"
            )));
        }
    }
    Ok(rho)
}

/// Integrates the master equation with fixed-step RK4 and records `⟨P⟩(t)`.
pub fn oracle_master_equation(
    m: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    vars: &VariableSet,
) -> Result<Trajectory> {
    if vars.n_sites().is_some_and(|n| n != m.n_sites()) {
        return Err(Error::Dimension(
            "variables and model differ in size".into(),
        ));
    }
    let mut values = Matrix::zeros(times.len(), vars.len());
    integrate_states(m, rho0, times, |row, rho| {
        for (j, p) in vars.iter().enumerate() {
            values[(row, j)] = trace_with_string(p, rho).re;
        }
    })?;
    Trajectory::new(times.to_vec(), vars.labels(), values)
}

/// State after evolving `rho0` for time `t` with the same integrator.
pub fn evolve_state(m: &LindbladModel, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "evolution time must be positive, got {t}"
        )));
    }
    let data = integrate_states(m, rho0, &[0.0, t], |_, _| {})?;
    Ok(DensityMatrix { n: rho0.n, data })
}
