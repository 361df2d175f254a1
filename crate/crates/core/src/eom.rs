//! Closed linear equations of motion over Pauli expectation values, and their
//! split into two interconnected subsystems.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix, Vector, TOL};
use crate::pauli::{adjoint_generator, Letter, LindbladModel, PauliString};
use crate::sim::oracle::{expectations_from_state, StateInput};
use crate::statespace::{InterconnectedModel, StateSpaceModel};

/// Default cap on the number of variables a closure may collect.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Ordered, duplicate-free list of non-identity Pauli strings; the order is
/// the index map of every matrix built over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSet {
    vars: Vec<PauliString>,
    index: HashMap<PauliString, usize>,
}

impl VariableSet {
    pub fn new(vars: Vec<PauliString>) -> Result<Self> {
        let mut index = HashMap::with_capacity(vars.len());
        let n = vars.first().map(|p| p.n_sites());
        for (i, p) in vars.iter().enumerate() {
            if p.is_identity() {
                return Err(Error::InvalidArgument(
                    "the identity string cannot be a dynamical variable".into(),
                ));
            }
            if Some(p.n_sites()) != n {
                return Err(Error::Dimension(format!(
                    "variable {p} has {} sites, expected {}",
                    p.n_sites(),
                    n.unwrap_or(0)
                )));
            }
            if index.insert(*p, i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate variable {p}")));
            }
        }
        Ok(Self { vars, index })
    }

    pub fn parse(labels: &[&str]) -> Result<Self> {
        Self::new(
            labels
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<PauliString>>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn n_sites(&self) -> Option<usize> {
        self.vars.first().map(|p| p.n_sites())
    }

    pub fn get(&self, i: usize) -> PauliString {
        self.vars[i]
    }

    pub fn index_of(&self, p: &PauliString) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.index.contains_key(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PauliString> {
        self.vars.iter()
    }

    pub fn as_slice(&self) -> &[PauliString] {
        &self.vars
    }

    /// Site-indexed labels such as `Z1X2`.
    pub fn labels(&self) -> Vec<String> {
        self.vars.iter().map(|p| p.site_label()).collect()
    }

    fn push(&mut self, p: PauliString) {
        self.index.insert(p, self.vars.len());
        self.vars.push(p);
    }
}

/// Breadth-first closure of `seeds` under `step`, which lists the strings a
/// variable couples to. Identity strings are never collected.
pub fn closure_with<F>(seeds: &VariableSet, max_dim: usize, mut step: F) -> Result<VariableSet>
where
    F: FnMut(&PauliString) -> Result<Vec<PauliString>>,
{
    if seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "closure needs at least one seed".into(),
        ));
    }
    if max_dim < seeds.len() {
        return Err(Error::InvalidArgument(format!(
            "max_dim {max_dim} is smaller than the {} seeds",
            seeds.len()
        )));
    }
    let mut out = seeds.clone();
    let mut queue: VecDeque<PauliString> = seeds.iter().copied().collect();
    while let Some(p) = queue.pop_front() {
        for q in step(&p)? {
            if q.is_identity() || out.contains(&q) {
                continue;
            }
            if out.len() == max_dim {
                return Err(Error::ClosureOverflow {
                    max_dim,
                    partial: out.vars,
                });
            }
            out.push(q);
            queue.push_back(q);
        }
    }
    Ok(out)
}

/// Smallest superset of `seeds` closed under the adjoint generator, seeds first,
/// then in discovery order.
pub fn closure(seeds: &VariableSet, m: &LindbladModel, max_dim: usize) -> Result<VariableSet> {
    closure_with(seeds, max_dim, |p| {
        Ok(adjoint_generator(p, m)?.strings().copied().collect())
    })
}

/// `ẋ = Ax` over a variable set.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub variables: VariableSet,
    pub a: Matrix,
}

/// Row `i` holds the coefficients of `adjoint_generator(vars[i])`.
pub fn build_generator(vars: &VariableSet, m: &LindbladModel) -> Result<GeneratorMatrix> {
    let n = vars.len();
    if let Some(ns) = vars.n_sites() {
        if ns != m.n_sites() {
            return Err(Error::Dimension(format!(
                "variables on {ns} sites, model on {}",
                m.n_sites()
            )));
        }
    }
    let mut a = Matrix::zeros(n, n);
    for (i, p) in vars.iter().enumerate() {
        for (q, c) in adjoint_generator(p, m)?.terms() {
            if q.is_identity() {
                return Err(Error::UnsupportedAffine { row: *p });
            }
            let j = vars.index_of(q).ok_or(Error::NotClosed { escaping: *q })?;
            a[(i, j)] = c.re;
        }
    }
    Ok(GeneratorMatrix {
        variables: vars.clone(),
        a,
    })
}

/// Rank-revealing factorization `m ≈ B·C` with `√σ` placed on both sides.
/// Singular values at or below `rel_tol · scale` are discarded.
pub fn balanced_factor(m: &Matrix, rel_tol: f64, scale: f64) -> (Matrix, Matrix) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (Matrix::zeros(rows, 0), Matrix::zeros(0, cols));
    }
    let s = svd(m);
    let cut = rel_tol * scale;
    let r = s.singular_values.iter().filter(|&&v| v > cut).count();
    let mut b = Matrix::zeros(rows, r);
    let mut c = Matrix::zeros(r, cols);
    for k in 0..r {
        let root = s.singular_values[k].sqrt();
        b.set_column(k, &(s.u.column(k) * root));
        c.set_row(k, &(s.v.column(k).transpose() * root));
    }
    (b, c)
}

/// Splits the generator into the interest block and its environment and
/// factors the coupling blocks. The closed-loop state is ordered interest
/// first (in the order given), then the remaining variables in their original order.
pub fn partition_and_factor(
    g: &GeneratorMatrix,
    interest: &[PauliString],
) -> Result<InterconnectedModel> {
    let n = g.variables.len();
    if interest.is_empty() || interest.len() >= n {
        return Err(Error::InvalidArgument(format!(
            "interest set must be a nonempty proper subset of the {n} variables"
        )));
    }
    let mut idx1 = Vec::with_capacity(interest.len());
    for p in interest {
        let i = g
            .variables
            .index_of(p)
            .ok_or_else(|| Error::InvalidArgument(format!("{p} is not one of the variables")))?;
        if idx1.contains(&i) {
            return Err(Error::InvalidArgument(format!(
                "{p} listed twice in the interest set"
            )));
        }
        idx1.push(i);
    }
    let idx2: Vec<usize> = (0..n).filter(|i| !idx1.contains(i)).collect();
    let block = |rows: &[usize], cols: &[usize]| {
        Matrix::from_fn(rows.len(), cols.len(), |r, c| g.a[(rows[r], cols[c])])
    };
    let a1 = block(&idx1, &idx1);
    let a12 = block(&idx1, &idx2);
    let a21 = block(&idx2, &idx1);
    let a2 = block(&idx2, &idx2);
    let scale = g.a.norm().max(f64::MIN_POSITIVE);
    let (b1, c2) = balanced_factor(&a12, TOL.rank, scale);
    let (b2, c1) = balanced_factor(&a21, TOL.rank, scale);
    let label = |ids: &[usize]| {
        ids.iter()
            .map(|&i| g.variables.get(i).site_label())
            .collect()
    };
    let sys1 = StateSpaceModel::new(a1, b1, c1, label(&idx1))?;
    let sys2 = StateSpaceModel::new(a2, b2, c2, label(&idx2))?;
    InterconnectedModel::new(sys1, sys2)
}

/// Variables of the environment block produced by [`partition_and_factor`].
pub fn environment_variables(vars: &VariableSet, interest: &[PauliString]) -> Vec<PauliString> {
    vars.iter()
        .filter(|p| !interest.contains(p))
        .copied()
        .collect()
}

/// Description of an initial state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Per-qubit Bloch vectors `(⟨X⟩,⟨Y⟩,⟨Z⟩)`, site 1 first.
    Product(Vec<[f64; 3]>),
    /// Amplitudes over the `2ⁿ` computational basis states; site 1 is the
    /// most significant bit of the index.
    Amplitudes(Vec<Complex64>),
}

/// Expectation values of `vars` in the given state.
pub fn initial_expectations(state: &InitialState, vars: &VariableSet) -> Result<Vector> {
    match state {
        InitialState::Product(blochs) => {
            for (k, b) in blochs.iter().enumerate() {
                let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
                if !norm.is_finite() || norm > 1.0 + 1e-9 {
                    return Err(Error::InvalidState(format!(
                        "Bloch vector of site {} has norm {norm}",
                        k + 1
                    )));
                }
            }
            let mut out = Vector::zeros(vars.len());
            for (i, p) in vars.iter().enumerate() {
                if p.n_sites() != blochs.len() {
                    return Err(Error::Dimension(format!(
                        "{} Bloch vectors for {}-site variables",
                        blochs.len(),
                        p.n_sites()
                    )));
                }
                out[i] = p
                    .letters()
                    .zip(blochs)
                    .map(|(l, b)| match l {
                        Letter::I => 1.0,
                        Letter::X => b[0],
                        Letter::Y => b[1],
                        Letter::Z => b[2],
                    })
                    .product();
            }
            Ok(out)
        }
        InitialState::Amplitudes(psi) => {
            expectations_from_state(&StateInput::Pure(psi.clone()), vars)
        }
    }
}

/// Aligned text rendering of `ẋ = Ax`, one equation per variable.
pub fn format_equations(g: &GeneratorMatrix) -> String {
    let labels = g.variables.labels();
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(1);
    let mut out = String::new();
    for (i, li) in labels.iter().enumerate() {
        let _ = write!(out, "d<{li}>/dt{:pad$} =", "", pad = width - li.len());
        let mut any = false;
        for (j, lj) in labels.iter().enumerate() {
            let c = g.a[(i, j)];
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { '-' } else { '+' };
            if any || c < 0.0 {
                let _ = write!(out, " {sign} {:.6} <{lj}>", c.abs());
            } else {
                let _ = write!(out, " {:.6} <{lj}>", c.abs());
            }
            any = true;
        }
        if !any {
            out.push_str(" 0");
        }
        out.push('\n');
    }
    out
}

/// JSON form `{variables, matrix}` of a generator.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratorRecord {
    pub variables: Vec<PauliString>,
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl From<&GeneratorMatrix> for GeneratorRecord {
    fn from(g: &GeneratorMatrix) -> Self {
        Self {
            variables: g.variables.as_slice().to_vec(),
            labels: g.variables.labels(),
            matrix: g
                .a
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}
