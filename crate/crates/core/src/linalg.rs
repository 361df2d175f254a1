//! Dense real and complex matrix kernels.
//!
//! Storage, LU and the Hessenberg/QR eigenvalue iteration come from nalgebra;
//! the one-sided Jacobi SVD, the Kronecker-vectorized Lyapunov solver and the
//! Padé matrix exponential are implemented here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMatrix = DMatrix<Complex64>;

/// Numerical thresholds shared by every kernel in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative convergence threshold of the QR eigenvalue iteration.
    pub eig_convergence: f64,
    /// Maximum QR sweeps per eigenvalue.
    pub eig_max_sweeps: usize,
    /// Relative pivot size below which LU reports a singular matrix.
    pub lu_singular: f64,
    /// Relative symmetry defect accepted by symmetric routines.
    pub symmetry: f64,
    /// Eigenvalues below `-indefinite · λ_max` make a PSD factorization fail.
    pub indefinite: f64,
    /// Relative Frobenius residual accepted from `lyapunov_solve`.
    pub lyapunov_residual: f64,
    /// Hurwitz margin: real parts must be below `-hurwitz_margin · ‖A‖_F`.
    pub hurwitz_margin: f64,
    /// Off-diagonal threshold of the Jacobi SVD sweeps.
    pub jacobi: f64,
    /// Maximum Jacobi sweeps.
    pub jacobi_max_sweeps: usize,
    /// Relative rank threshold for coupling factorizations.
    pub rank: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        eig_convergence: 1e-12,
        eig_max_sweeps: 100,
        lu_singular: 1e-14,
        symmetry: 1e-10,
        indefinite: 1e-6,
        lyapunov_residual: 1e-8,
        hurwitz_margin: 1e-10,
        jacobi: 1e-15,
        jacobi_max_sweeps: 80,
        rank: 1e-10,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub const TOL: Tolerances = Tolerances::DEFAULT;

fn require_square<T: nalgebra::Scalar>(a: &DMatrix<T>, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

fn require_finite(a: &Matrix, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} has non-finite entries"
        )))
    }
}

/// Solves `a·x = b` by LU with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = require_square(a, "LU matrix")?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, matrix is {n}x{n}",
            b.nrows()
        )));
    }
    if n == 0 {
        return Ok(b.clone());
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let pivots = u.diagonal().map(f64::abs);
    let scale = a.amax();
    if scale == 0.0 || pivots.min() <= TOL.lu_singular * scale {
        return Err(Error::Singular);
    }
    lu.solve(b).ok_or(Error::Singular)
}

/// Complex counterpart of [`lu_solve`].
pub fn lu_solve_complex(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let n = require_square(a, "LU matrix")?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, matrix is {n}x{n}",
            b.nrows()
        )));
    }
    if n == 0 {
        return Ok(b.clone());
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = a.clone().lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    if scale == 0.0 || min_pivot <= TOL.lu_singular * scale {
        return Err(Error::Singular);
    }
    lu.solve(b).ok_or(Error::Singular)
}

/// All eigenvalues, via Hessenberg reduction and shifted QR (real Schur form).
/// Sorted by descending real part, then by imaginary part.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    let n = require_square(a, "eigenvalue matrix")?;
    require_finite(a, "eigenvalue matrix")?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let iterations = TOL.eig_max_sweeps * n;
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), TOL.eig_convergence, iterations)
        .ok_or(Error::NoConvergence { iterations })?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
    Ok(ev)
}

/// Largest real part of the spectrum (spectral abscissa).
pub fn spectral_abscissa(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Fails unless every eigenvalue has real part below `-1e-10·‖A‖_F`.
pub fn check_hurwitz(a: &Matrix) -> Result<()> {
    if a.nrows() == 0 {
        return Ok(());
    }
    let max_real = spectral_abscissa(a)?;
    let margin = TOL.hurwitz_margin * a.norm();
    if max_real < -margin {
        Ok(())
    } else {
        Err(Error::NotHurwitz { max_real, margin })
    }
}

/// Thin singular value decomposition `a = U·diag(σ)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m × min(m,n)` with orthonormal columns.
    pub u: Matrix,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// `n × min(m,n)` with orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    /// Number of singular values above `rel_tol · σ₁`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let s1 = self.singular_values.first().copied().unwrap_or(0.0);
        if s1 == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * s1)
            .count()
    }

    pub fn reconstruct(&self) -> Matrix {
        let s = Matrix::from_diagonal(&Vector::from_vec(self.singular_values.clone()));
        &self.u * s * self.v.transpose()
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &Matrix) -> Svd {
    if a.nrows() < a.ncols() {
        let t = jacobi_tall(&a.transpose());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    jacobi_tall(a)
}

fn jacobi_tall(a: &Matrix) -> Svd {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = Matrix::identity(n, n);
    for _ in 0..TOL.jacobi_max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == 0.0 || gamma.abs() <= TOL.jacobi * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut sv = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        sv.push(norms[j]);
        vs.set_column(k, &v.column(j));
        if norms[j] > f64::MIN_POSITIVE * 1e10 {
            u.set_column(k, &(w.column(j) / norms[j]));
        } else {
            missing.push(k);
        }
    }
    complete_orthonormal(&mut u, &missing);
    Svd {
        u,
        singular_values: sv,
        v: vs,
    }
}

// Fills the listed columns with unit vectors orthogonal to all other columns.
fn complete_orthonormal(u: &mut Matrix, missing: &[usize]) {
    let m = u.nrows();
    let mut candidate = 0;
    for &k in missing {
        loop {
            let mut e = Vector::zeros(m);
            e[candidate % m] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..u.ncols() {
                    if j == k || (missing.contains(&j) && u.column(j).norm() == 0.0) {
                        continue;
                    }
                    let proj = u.column(j).dot(&e);
                    e -= u.column(j) * proj;
                }
            }
            let nrm = e.norm();
            if nrm > 1e-8 {
                u.set_column(k, &(e / nrm));
                break;
            }
            if candidate > 2 * m {
                break;
            }
        }
    }
}

/// Relative symmetry defect `‖a − aᵀ‖_max / ‖a‖_max`.
pub fn symmetry_defect(a: &Matrix) -> f64 {
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).amax() / scale
}

/// Returns `L` with full column rank and `L·Lᵀ ≈ a`, dropping eigen-directions
/// below `tol · λ_max` and clipping small negative eigenvalues.
pub fn symmetric_psd_sqrt_factor(a: &Matrix, tol: f64) -> Result<Matrix> {
    let n = require_square(a, "PSD factor input")?;
    require_finite(a, "PSD factor input")?;
    let defect = symmetry_defect(a);
    if defect > TOL.symmetry {
        return Err(Error::NotSymmetric(defect));
    }
    let sym = (a + a.transpose()) * 0.5;
    let is_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || sym[(i, j)] == 0.0));
    let (values, vectors) = if is_diagonal {
        (sym.diagonal(), Matrix::identity(n, n))
    } else {
        let e = sym.symmetric_eigen();
        (e.eigenvalues, e.eigenvectors)
    };
    let lmax = values.iter().copied().fold(0.0, f64::max);
    let lmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    if lmax <= 0.0 {
        if lmin < 0.0 {
            return Err(Error::Indefinite {
                min: lmin,
                max: lmax,
            });
        }
        return Ok(Matrix::zeros(n, 0));
    }
    if lmin < -TOL.indefinite * lmax {
        return Err(Error::Indefinite {
            min: lmin,
            max: lmax,
        });
    }
    let mut idx: Vec<usize> = (0..n).filter(|&i| values[i] > tol * lmax).collect();
    if !is_diagonal {
        idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    }
    let mut l = Matrix::zeros(n, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        let mut col = vectors.column(i) * values[i].sqrt();
        let (imax, _) =
            col.iter().enumerate().fold(
                (0, 0.0),
                |acc, (r, v)| if v.abs() > acc.1 { (r, v.abs()) } else { acc },
            );
        if col[imax] < 0.0 {
            col = -col;
        }
        l.set_column(k, &col);
    }
    Ok(l)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Solves `A·P + P·Aᵀ + Q = 0` for symmetric `P` by vectorization.
pub fn lyapunov_solve(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = require_square(a, "Lyapunov A")?;
    if q.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "Lyapunov Q is {}x{}, A is {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    let defect = symmetry_defect(q);
    if defect > TOL.symmetry {
        return Err(Error::NotSymmetric(defect));
    }
    check_hurwitz(a)?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let id = Matrix::identity(n, n);
    let k = kron(&id, a) + kron(a, &id);
    // Column-major storage makes `as_slice` the vec(·) ordering.
    let rhs = Matrix::from_column_slice(n * n, 1, (-q).as_slice());
    let x = lu_solve(&k, &rhs)?;
    let p = Matrix::from_column_slice(n, n, x.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    let qn = q.norm();
    let residual = (a * &p + &p * a.transpose() + q).norm();
    let tolerance = TOL.lyapunov_residual * qn;
    if residual > tolerance && qn > 0.0 {
        return Err(Error::Residual {
            residual,
            tolerance,
        });
    }
    Ok(p)
}

const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Matrix exponential by scaling and squaring with a diagonal Padé(6,6) approximant.
pub fn expm(a: &Matrix) -> Result<Matrix> {
    let n = require_square(a, "expm input")?;
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if !norm1.is_finite() || norm1 > 1e12 {
        return Err(Error::Overflow(norm1));
    }
    let s = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s);
    let id = Matrix::identity(n, n);
    let mut num = &id * PADE6[0];
    let mut den = &id * PADE6[0];
    let mut power = id.clone();
    for (k, c) in PADE6.iter().enumerate().skip(1) {
        power = &power * &scaled;
        num += &power * *c;
        den += &power * if k % 2 == 0 { *c } else { -*c };
    }
    let mut r = lu_solve(&den, &num)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(norm1));
    }
    Ok(r)
}
