//! Fixed-step time integration of linear expectation-value models, plus the
//! density-matrix reference in [`oracle`].

pub mod oracle;
pub mod svg;

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::statespace::InterconnectedModel;

/// Sampled time series; row `i` of `values` belongs to `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    pub values: Matrix,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, labels: Vec<String>, values: Matrix) -> Result<Self> {
        if values.nrows() != times.len() || values.ncols() != labels.len() {
            return Err(Error::Dimension(format!(
                "trajectory values are {}x{}, expected {}x{}",
                values.nrows(),
                values.ncols(),
                times.len(),
                labels.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration(
                "trajectory contains non-finite values".into(),
            ));
        }
        Ok(Self {
            times,
            labels,
            values,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.labels.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} columns",
                labels.len(),
                self.labels.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.values.column(j).iter().copied().collect())
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, labels: &[String]) -> Result<Trajectory> {
        let idx = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::InvalidArgument(format!("no trajectory column {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = Matrix::from_fn(self.times.len(), idx.len(), |r, c| self.values[(r, idx[c])]);
        Trajectory::new(self.times.clone(), labels.to_vec(), values)
    }

    /// Largest absolute value over all samples.
    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }

    /// CSV with header `t,<label>,…` and 12 significant digits.
    pub fn to_csv(&self) -> String {
        self.to_csv_with_index("t")
    }

    pub fn to_csv_with_index(&self, index_name: &str) -> String {
        let mut out = String::new();
        out.push_str(index_name);
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format_sig(*t, 12));
            for j in 0..self.labels.len() {
                let _ = write!(out, ",{}", format_sig(self.values[(i, j)], 12));
            }
            out.push('\n');
        }
        out
    }
}

/// Formats with `digits` significant digits, trimming trailing zeros.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Uniform grid of `samples` points on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need t_end > 0 and at least 2 samples, got t_end = {t_end}, samples = {samples}"
        )));
    }
    Ok((0..samples)
        .map(|i| t_end * i as f64 / (samples - 1) as f64)
        .collect())
}

/// RK4 step: a twentieth of the smallest sample spacing, capped so that
/// `norm · h ≤ 0.1`.
pub(crate) fn step_size(times: &[f64], norm: f64) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample time".into()));
    }
    let mut min_gap = f64::INFINITY;
    for w in times.windows(2) {
        let gap = w[1] - w[0];
        if gap <= 0.0 {
            return Err(Error::InvalidArgument(
                "sample times must be strictly ascending".into(),
            ));
        }
        min_gap = min_gap.min(gap);
    }
    let mut h = min_gap / 20.0;
    if norm > 0.0 {
        h = h.min(0.1 / norm);
    }
    let scale = times.iter().fold(1.0f64, |m, t| m.max(t.abs()));
    if times.len() > 1 && h < 1e-14 * scale {
        return Err(Error::StepUnderflow(h));
    }
    Ok(h)
}

fn inf_norm(a: &Matrix) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Integrates `ẋ = ax` with classic RK4 and samples at `times` (the first
/// entry is the time of `x0`).
pub fn integrate_linear(a: &Matrix, x0: &Vector, times: &[f64]) -> Result<Trajectory> {
    let n = a.nrows();
    if a.ncols() != n || x0.len() != n {
        return Err(Error::Dimension(format!(
            "system matrix {}x{} with initial vector of length {}",
            a.nrows(),
            a.ncols(),
            x0.len()
        )));
    }
    let h_max = step_size(times, inf_norm(a))?;
    let id = Matrix::identity(n, n);
    // RK4 applied to a linear system is the degree-4 Taylor polynomial of e^{ha}.
    let mut steppers: HashMap<u64, Matrix> = HashMap::new();
    let mut stepper = |h: f64| -> Matrix {
        steppers
            .entry(h.to_bits())
            .or_insert_with(|| {
                let ha = a * h;
                let ha2 = &ha * &ha;
                let ha3 = &ha2 * &ha;
                let ha4 = &ha3 * &ha;
                &id + &ha + ha2 / 2.0 + ha3 / 6.0 + ha4 / 24.0
            })
            .clone()
    };
    let mut values = Matrix::zeros(times.len(), n);
    let mut x = x0.clone();
    values.set_row(0, &x.transpose());
    for w in 1..times.len() {
        let span = times[w] - times[w - 1];
        let steps = (span / h_max).ceil().max(1.0);
        if steps > 1e9 {
            return Err(Error::StepUnderflow(span / steps));
        }
        let m = stepper(span / steps);
        for _ in 0..steps as usize {
            x = &m * x;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration(format!(
                "state diverged at t = {}",
                times[w]
            )));
        }
        values.set_row(w, &x.transpose());
    }
    let labels = (1..=n).map(|i| format!("x{i}")).collect();
    Trajectory::new(times.to_vec(), labels, values)
}

/// Integrates the closed loop `[[A₁, B₁C₂], [B₂C₁, A₂]]` from `x1_0` and the
/// environment state `state_map · x2_0` (identity when `None`). Returns the
/// `sys1` variables only.
pub fn simulate_interconnected(
    m: &InterconnectedModel,
    x1_0: &Vector,
    x2_0: &Vector,
    state_map: Option<&Matrix>,
    times: &[f64],
) -> Result<Trajectory> {
    let n1 = m.sys1.order();
    if x1_0.len() != n1 {
        return Err(Error::Dimension(format!(
            "x1(0) has {} entries, sys1 has order {n1}",
            x1_0.len()
        )));
    }
    let x2 = match state_map {
        Some(t) => {
            if t.ncols() != x2_0.len() {
                return Err(Error::Dimension(format!(
                    "state map takes {} entries, x2(0) has {}",
                    t.ncols(),
                    x2_0.len()
                )));
            }
            t * x2_0
        }
        None => x2_0.clone(),
    };
    if x2.len() != m.sys2.order() {
        return Err(Error::Dimension(format!(
            "mapped x2(0) has {} entries, sys2 has order {}",
            x2.len(),
            m.sys2.order()
        )));
    }
    let mut x0 = Vector::zeros(n1 + x2.len());
    x0.rows_mut(0, n1).copy_from(x1_0);
    x0.rows_mut(n1, x2.len()).copy_from(&x2);
    let full = integrate_linear(&m.reassemble(), &x0, times)?;
    let values = full.values.columns(0, n1).into_owned();
    Trajectory::new(full.times, m.sys1.labels.clone(), values)
}

/// Relative L2 distance `‖a − b‖₂ / ‖b‖₂` between two sampled series.
pub fn relative_l2_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
