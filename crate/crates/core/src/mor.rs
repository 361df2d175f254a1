//! Balanced realization, Hankel singular values, balanced truncation and a
//! frequency-sweep H∞ estimate.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    check_hurwitz, lu_solve_complex, lyapunov_solve, svd, symmetric_psd_sqrt_factor, CMatrix,
    Matrix,
};
use crate::statespace::{InterconnectedModel, StateSpaceModel};

/// Hankel values at or below this fraction of σ₁ are removed as non-minimal.
pub const MINIMALITY_TOLERANCE: f64 = 1e-12;
/// Gramian eigenvalues below this fraction of the largest are treated as zero.
pub const GRAMIAN_TOLERANCE: f64 = 1e-14;
/// Required relative gap `σ_k/σ_{k+1} − 1` at a truncation point.
pub const SPLIT_GAP: f64 = 1e-8;

pub const HINF_OMEGA_MIN: f64 = 1e-3;
pub const HINF_OMEGA_MAX: f64 = 1e3;
pub const HINF_GRID_POINTS: usize = 2000;
pub const HINF_REL_WIDTH: f64 = 1e-6;

/// Balanced coordinates `x_b = T·x` of a minimal part of a model.
#[derive(Debug, Clone)]
pub struct BalancedRealization {
    /// `r × n`.
    pub t: Matrix,
    /// `n × r`; `T·Tinv = I`.
    pub tinv: Matrix,
    /// Descending Hankel singular values of the kept directions.
    pub hankel: Vec<f64>,
    /// Balanced model `(T·A·Tinv, T·B, C·Tinv)`.
    pub model: StateSpaceModel,
    /// Number of directions dropped as uncontrollable or unobservable.
    pub removed: usize,
}

impl BalancedRealization {
    pub fn order(&self) -> usize {
        self.hankel.len()
    }
}

/// Balanced truncation of order `k` with its a-priori error bounds.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub k: usize,
    pub model: StateSpaceModel,
    /// `σ_{k+1}` (zero when nothing is discarded).
    pub lower_bound: f64,
    /// `2·Σ_{i>k} σᵢ`.
    pub upper_bound: f64,
    /// All Hankel values of the balanced realization.
    pub hankel: Vec<f64>,
    /// `k × n` map from original states to reduced states.
    pub t: Matrix,
    /// `n × k` lift from reduced states back to original coordinates.
    pub tinv: Matrix,
}

/// Square-root balancing.
pub fn balance(s: &StateSpaceModel) -> Result<BalancedRealization> {
    check_hurwitz(&s.a)?;
    let n = s.order();
    let bbt = &s.b * s.b.transpose();
    let ctc = s.c.transpose() * &s.c;
    let p = lyapunov_solve(&s.a, &bbt)?;
    let q = lyapunov_solve(&s.a.transpose(), &ctc)?;
    let lc = symmetric_psd_sqrt_factor(&p, GRAMIAN_TOLERANCE)?;
    let lo = symmetric_psd_sqrt_factor(&q, GRAMIAN_TOLERANCE)?;
    let empty = || -> Result<BalancedRealization> {
        Ok(BalancedRealization {
            t: Matrix::zeros(0, n),
            tinv: Matrix::zeros(n, 0),
            hankel: Vec::new(),
            model: StateSpaceModel::new(
                Matrix::zeros(0, 0),
                Matrix::zeros(0, s.n_inputs()),
                Matrix::zeros(s.n_outputs(), 0),
                Vec::new(),
            )?,
            removed: n,
        })
    };
    if lc.ncols() == 0 || lo.ncols() == 0 {
        return empty();
    }
    let m = lo.transpose() * &lc;
    let d = svd(&m);
    let s1 = d.singular_values[0];
    if s1 == 0.0 {
        return empty();
    }
    let r = d
        .singular_values
        .iter()
        .filter(|&&v| v > MINIMALITY_TOLERANCE * s1)
        .count();
    let hankel: Vec<f64> = d.singular_values[..r].to_vec();
    let mut tinv = Matrix::zeros(n, r);
    let mut t = Matrix::zeros(r, n);
    let lcv = &lc * &d.v;
    let lou = &lo * &d.u;
    for (k, h) in hankel.iter().enumerate() {
        let f = 1.0 / h.sqrt();
        tinv.set_column(k, &(lcv.column(k) * f));
        t.set_row(k, &(lou.column(k).transpose() * f));
    }
    let a = &t * &s.a * &tinv;
    let b = &t * &s.b;
    let c = &s.c * &tinv;
    let labels = (1..=r).map(|i| format!("b{i}")).collect();
    Ok(BalancedRealization {
        t,
        tinv,
        hankel,
        model: StateSpaceModel::new(a, b, c, labels)?,
        removed: n - r,
    })
}

/// Keeps the leading `k` balanced states.
pub fn truncate(b: &BalancedRealization, k: usize) -> Result<ReducedModel> {
    let order = b.order();
    if k == 0 || k > order {
        return Err(Error::InvalidOrder { k, order });
    }
    if k < order {
        let ratio = b.hankel[k - 1] / b.hankel[k];
        if ratio < 1.0 + SPLIT_GAP {
            return Err(Error::DegenerateSplit { k, ratio });
        }
    }
    let a = b.model.a.view((0, 0), (k, k)).into_owned();
    let bb = b.model.b.rows(0, k).into_owned();
    let c = b.model.c.columns(0, k).into_owned();
    check_hurwitz(&a)?;
    let tail = &b.hankel[k..];
    let labels = b.model.labels[..k].to_vec();
    Ok(ReducedModel {
        k,
        model: StateSpaceModel::new(a, bb, c, labels)?,
        lower_bound: tail.first().copied().unwrap_or(0.0),
        upper_bound: 2.0 * tail.iter().fold(0.0, |a, b| a + b),
        hankel: b.hankel.clone(),
        t: b.t.rows(0, k).into_owned(),
        tinv: b.tinv.columns(0, k).into_owned(),
    })
}

/// Smallest admissible order whose upper error bound is within `tolerance`.
pub fn choose_order(hankel: &[f64], tolerance: f64) -> Option<usize> {
    (1..=hankel.len()).find(|&k| {
        let tail: f64 = hankel[k..].iter().sum();
        let split_ok = k == hankel.len() || hankel[k - 1] / hankel[k] >= 1.0 + SPLIT_GAP;
        split_ok && 2.0 * tail <= tolerance
    })
}

/// `G(iω) = C(iωI − A)⁻¹B`.
pub fn transfer_eval(s: &StateSpaceModel, omega: f64) -> Result<CMatrix> {
    let n = s.order();
    let lhs = CMatrix::from_fn(n, n, |i, j| {
        let d = if i == j {
            Complex64::new(0.0, omega)
        } else {
            Complex64::default()
        };
        d - s.a[(i, j)]
    });
    let b = s.b.map(|v| Complex64::new(v, 0.0));
    let x = lu_solve_complex(&lhs, &b)?;
    Ok(s.c.map(|v| Complex64::new(v, 0.0)) * x)
}

/// Largest singular value of a complex matrix via its real embedding.
pub fn max_singular_value(g: &CMatrix) -> f64 {
    let (m, n) = g.shape();
    if m == 0 || n == 0 {
        return 0.0;
    }
    let mut r = Matrix::zeros(2 * m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            let z = g[(i, j)];
            r[(i, j)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + m, j)] = z.im;
            r[(i + m, j + n)] = z.re;
        }
    }
    svd(&r).singular_values[0]
}

fn gain(s: &StateSpaceModel, omega: f64) -> Result<f64> {
    Ok(max_singular_value(&transfer_eval(s, omega)?))
}

/// Frequency grid used by [`hinf_norm`]: `ω = 0` followed by a log grid.
pub fn hinf_grid() -> Vec<f64> {
    let mut g = Vec::with_capacity(HINF_GRID_POINTS + 1);
    g.push(0.0);
    let (l0, l1) = (HINF_OMEGA_MIN.log10(), HINF_OMEGA_MAX.log10());
    for i in 0..HINF_GRID_POINTS {
        let f = i as f64 / (HINF_GRID_POINTS - 1) as f64;
        g.push(10f64.powf(l0 + f * (l1 - l0)));
    }
    g
}

/// H∞ norm estimate: grid maximum refined by golden-section search. The value
/// is attained at some frequency, so it never exceeds the true norm.
pub fn hinf_norm(s: &StateSpaceModel) -> Result<f64> {
    check_hurwitz(&s.a)?;
    if s.order() == 0
        || s.n_inputs() == 0
        || s.n_outputs() == 0
        || s.b.amax() == 0.0
        || s.c.amax() == 0.0
    {
        return Ok(0.0);
    }
    let grid = hinf_grid();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &w) in grid.iter().enumerate() {
        let v = gain(s, w)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let (i, mut value) = best;
    let lo = if i == 0 { 0.0 } else { grid[i - 1] };
    let hi = if i + 1 < grid.len() {
        grid[i + 1]
    } else {
        grid[i] * 1.01
    };
    let (mut a, mut b) = (lo, hi);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = gain(s, c)?;
    let mut fd = gain(s, d)?;
    let mut iterations = 0;
    while (b - a) > HINF_REL_WIDTH * b.max(1e-12) && iterations < 200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = gain(s, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = gain(s, d)?;
        }
        iterations += 1;
    }
    value = value.max(fc).max(fd);
    Ok(value)
}

/// `G − G_r` as a single state-space model.
pub fn error_system(full: &StateSpaceModel, reduced: &StateSpaceModel) -> Result<StateSpaceModel> {
    if full.n_inputs() != reduced.n_inputs() || full.n_outputs() != reduced.n_outputs() {
        return Err(Error::Dimension(
            "full and reduced models differ in input/output size".into(),
        ));
    }
    let (n, k) = (full.order(), reduced.order());
    let mut a = Matrix::zeros(n + k, n + k);
    a.view_mut((0, 0), (n, n)).copy_from(&full.a);
    a.view_mut((n, n), (k, k)).copy_from(&reduced.a);
    let mut b = Matrix::zeros(n + k, full.n_inputs());
    b.rows_mut(0, n).copy_from(&full.b);
    b.rows_mut(n, k).copy_from(&reduced.b);
    let mut c = Matrix::zeros(full.n_outputs(), n + k);
    c.columns_mut(0, n).copy_from(&full.c);
    c.columns_mut(n, k).copy_from(&(-&reduced.c));
    StateSpaceModel::unlabeled(a, b, c)
}

/// Measured `‖G − G_r‖∞`.
pub fn hinf_error(full: &StateSpaceModel, reduced: &ReducedModel) -> Result<f64> {
    hinf_norm(&error_system(full, &reduced.model)?)
}

/// Summary written by the `reduce` command.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub hankel: Vec<f64>,
    pub removed: usize,
    pub k: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub hinf_measured: f64,
}

/// Replaces the environment with its order-`k` balanced truncation. The
/// returned [`ReducedModel`] carries `T` for mapping initial conditions.
pub fn reduce_interconnected(
    m: &InterconnectedModel,
    k: usize,
) -> Result<(InterconnectedModel, ReducedModel)> {
    let b = balance(&m.sys2)?;
    let r = truncate(&b, k)?;
    let reduced = InterconnectedModel::new(m.sys1.clone(), r.model.clone())?;
    Ok((reduced, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;

    fn scalar(a: f64, b: f64, c: f64) -> StateSpaceModel {
        StateSpaceModel::unlabeled(
            Matrix::from_element(1, 1, a),
            Matrix::from_element(1, 1, b),
            Matrix::from_element(1, 1, c),
        )
        .unwrap()
    }

    #[test]
    fn scalar_transfer_and_norm() {
        let s = scalar(-1.0, 1.0, 1.0);
        assert!(
            (transfer_eval(&s, 0.0).unwrap()[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15
        );
        assert!(transfer_eval(&s, 1e9).unwrap()[(0, 0)].norm() < 1e-8);
        assert!((hinf_norm(&s).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(hinf_norm(&scalar(-1.0, 0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn resonant_peak_is_refined() {
        // Lightly damped oscillator: peak near ω = 2 off the grid.
        let z = 0.01;
        let w = 2.0;
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -w * w, -2.0 * z * w]);
        let s = StateSpaceModel::unlabeled(
            a,
            Matrix::from_column_slice(2, 1, &[0.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
        )
        .unwrap();
        let exact = 1.0 / (2.0 * z * (1.0 - z * z).sqrt() * w * w);
        let est = hinf_norm(&s).unwrap();
        assert!(est <= exact * (1.0 + 1e-12));
        assert!((est - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn balanced_diagonal_system() {
        // A = −diag(1,2), B = Cᵀ = diag(2, √2): P = Q = diag(2, 0.5).
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, -2.0]));
        let b = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 2f64.sqrt()]));
        let c = b.transpose();
        let s = StateSpaceModel::unlabeled(a, b, c).unwrap();
        let bal = balance(&s).unwrap();
        assert_eq!(bal.order(), 2);
        assert!((bal.hankel[0] - 2.0).abs() < 1e-12 && (bal.hankel[1] - 0.5).abs() < 1e-12);
        assert!((bal.t.abs() - Matrix::identity(2, 2)).amax() < 1e-12);
        assert!((&bal.t * &bal.tinv - Matrix::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn truncation_errors() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, -1.0]));
        let b = Matrix::identity(2, 2);
        let s = StateSpaceModel::unlabeled(a, b.clone(), b).unwrap();
        let bal = balance(&s).unwrap();
        assert!(matches!(
            truncate(&bal, 1),
            Err(Error::DegenerateSplit { .. })
        ));
        assert!(matches!(truncate(&bal, 0), Err(Error::InvalidOrder { .. })));
        let full = truncate(&bal, 2).unwrap();
        assert_eq!((full.lower_bound, full.upper_bound), (0.0, 0.0));
    }

    #[test]
    fn unstable_input_fails() {
        assert!(matches!(
            balance(&scalar(0.5, 1.0, 1.0)),
            Err(Error::NotHurwitz { .. })
        ));
    }

    #[test]
    fn order_choice() {
        let h = [1.0, 0.1, 0.01, 0.001];
        assert_eq!(choose_order(&h, 0.05), Some(2));
        assert_eq!(choose_order(&h, 0.0), Some(4));
        assert_eq!(choose_order(&[1.0, 1.0, 0.001], 0.01), Some(2));
    }
}
