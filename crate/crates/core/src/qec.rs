//! Bit-flip code recovery as a linear map on Pauli expectation values.
//!
//! A code is a sequence of recovery stages. Each stage measures commuting
//! syndrome observables `S` (with `S² = I`) and applies a Pauli-type recovery
//! chosen by the outcome. Measurement with efficiency `η` uses the Kraus
//! operators `√((I ± ηS)/2) = αI ± βS`; recovery with efficiency `η_rec` is
//! applied with probability `η_rec` and skipped otherwise. Heisenberg-picture
//! adjoints of the stages turn logical observables into decode polynomials
//! over the physical expectation values before recovery.

use num_complex::Complex64;
use serde::Serialize;

use crate::eom::{build_generator, closure, closure_with, VariableSet, DEFAULT_MAX_DIM};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, expm, lu_solve_complex, CMatrix, Matrix, Vector};
use crate::pauli::{identity_coefficient, Letter, LindbladModel, PauliPolynomial, PauliString};
use crate::sim::oracle::{evolve_state, expectations_from_state, DensityMatrix, StateInput};
use crate::sim::Trajectory;

/// Largest concatenation depth accepted.
pub const MAX_LEVELS: usize = 3;

/// Relative threshold for new directions in observable (Krylov) subspaces.
pub const KRYLOV_TOLERANCE: f64 = 1e-9;

/// Logical Pauli operators of a code.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalOperators {
    pub x: PauliPolynomial,
    pub y: PauliPolynomial,
    pub z: PauliPolynomial,
}

impl LogicalOperators {
    pub fn get(&self, letter: Letter) -> Option<&PauliPolynomial> {
        match letter {
            Letter::I => None,
            Letter::X => Some(&self.x),
            Letter::Y => Some(&self.y),
            Letter::Z => Some(&self.z),
        }
    }

    pub fn entries(&self) -> [(&'static str, &PauliPolynomial); 3] {
        [("xbar", &self.x), ("ybar", &self.y), ("zbar", &self.z)]
    }
}

/// A recovery chosen for one syndrome sign pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `±1` per syndrome observable.
    pub signs: Vec<i8>,
    /// Hermitian, squares to identity.
    pub recovery: PauliPolynomial,
}

/// One round of syndrome measurement and conditional recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryStage {
    pub level: usize,
    pub syndromes: Vec<PauliPolynomial>,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerCode {
    pub n: usize,
    pub levels: usize,
    /// Syndrome strings of the base (physical) level, e.g. `Z₁Z₂`, `Z₁Z₃`.
    pub syndrome_observables: Vec<PauliString>,
    /// Base-level recovery table.
    pub recovery_ops: Vec<(Vec<i8>, PauliString)>,
    pub logical: LogicalOperators,
    /// Applied in order: lowest level first.
    pub stages: Vec<RecoveryStage>,
}

impl StabilizerCode {
    /// Checks that syndromes commute and square to identity, and that every
    /// recovery conjugates each syndrome to `sign · syndrome`.
    pub fn validate(&self) -> Result<()> {
        for (si, stage) in self.stages.iter().enumerate() {
            let k = stage.syndromes.len();
            let id = PauliPolynomial::identity(self.n);
            for (a, s) in stage.syndromes.iter().enumerate() {
                if s.n_sites() != self.n {
                    return Err(Error::Dimension(format!(
                        "stage {si} syndrome on wrong register"
                    )));
                }
                if (s * s - id.clone()).max_abs_coefficient() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "stage {si} syndrome {a} does not square to identity"
                    )));
                }
                for t in &stage.syndromes[a + 1..] {
                    if s.commutator(t).max_abs_coefficient() > 1e-12 {
                        return Err(Error::InvalidArgument(format!(
                            "stage {si} syndromes do not commute"
                        )));
                    }
                }
            }
            if stage.outcomes.len() != 1 << k {
                return Err(Error::InvalidArgument(format!(
                    "stage {si} lists {} outcomes for {k} syndromes",
                    stage.outcomes.len()
                )));
            }
            for o in &stage.outcomes {
                if o.signs.len() != k || o.signs.iter().any(|s| s.abs() != 1) {
                    return Err(Error::InvalidArgument(format!(
                        "stage {si} has a malformed sign pattern"
                    )));
                }
                let r = &o.recovery;
                if (r * r - id.clone()).max_abs_coefficient() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "stage {si} recovery is not an involution"
                    )));
                }
                for (s, &sign) in stage.syndromes.iter().zip(&o.signs) {
                    let conj = &(r * s) * r;
                    if (conj - s.scale_real(sign as f64)).max_abs_coefficient() > 1e-12 {
                        return Err(Error::InvalidArgument(format!(
                            "stage {si} recovery {r:?} does not undo the error flagged by {:?}",
                            o.signs
                        )));
                    }
                }
            }
            let mut patterns: Vec<&Vec<i8>> = stage.outcomes.iter().map(|o| &o.signs).collect();
            patterns.sort();
            patterns.dedup();
            if patterns.len() != stage.outcomes.len() {
                return Err(Error::InvalidArgument(format!(
                    "stage {si} repeats a sign pattern"
                )));
            }
        }
        Ok(())
    }

    /// Projector onto the code space: product of `(I + S)/2` over all syndromes.
    pub fn code_projector(&self) -> PauliPolynomial {
        let mut p = PauliPolynomial::identity(self.n);
        for stage in &self.stages {
            for s in &stage.syndromes {
                let f = (PauliPolynomial::identity(self.n) + s.clone()).scale_real(0.5);
                p = &p * &f;
            }
        }
        p
    }
}

fn ps(s: &str) -> PauliString {
    s.parse().expect("static Pauli label")
}

/// Three-qubit bit-flip code: syndromes `Z₁Z₂`, `Z₁Z₃`; recoveries `I, X₁, X₂, X₃`;
/// `X̄ = X₁X₂X₃`, `Z̄ = ½(Z₁+Z₂+Z₃−Z₁Z₂Z₃)`, `Ȳ = iX̄Z̄`.
pub fn bitflip3() -> StabilizerCode {
    let syndromes = vec![ps("ZZI"), ps("ZIZ")];
    let table = vec![
        (vec![1, 1], ps("III")),
        (vec![-1, -1], ps("XII")),
        (vec![-1, 1], ps("IXI")),
        (vec![1, -1], ps("IIX")),
    ];
    let x = PauliPolynomial::from_real(ps("XXX"), 1.0);
    let z = PauliPolynomial::from_real_terms(
        3,
        &[(0.5, "ZII"), (0.5, "IZI"), (0.5, "IIZ"), (-0.5, "ZZZ")],
    )
    .expect("static polynomial");
    let y = (&x * &z).scale(Complex64::new(0.0, 1.0));
    let stage = RecoveryStage {
        level: 1,
        syndromes: syndromes
            .iter()
            .map(|s| PauliPolynomial::from_real(*s, 1.0))
            .collect(),
        outcomes: table
            .iter()
            .map(|(signs, r)| Outcome {
                signs: signs.clone(),
                recovery: PauliPolynomial::from_real(*r, 1.0),
            })
            .collect(),
    };
    let code = StabilizerCode {
        n: 3,
        levels: 1,
        syndrome_observables: syndromes,
        recovery_ops: table,
        logical: LogicalOperators { x, y, z },
        stages: vec![stage],
    };
    code.validate().expect("bit-flip code is consistent");
    code
}

/// Measurement and recovery efficiencies, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryChannel {
    pub eta_meas: f64,
    pub eta_rec: f64,
}

impl RecoveryChannel {
    pub const PERFECT: RecoveryChannel = RecoveryChannel {
        eta_meas: 1.0,
        eta_rec: 1.0,
    };

    pub fn new(eta_meas: f64, eta_rec: f64) -> Result<Self> {
        for (name, v) in [("eta_meas", eta_meas), ("eta_rec", eta_rec)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(Self { eta_meas, eta_rec })
    }

    /// Coefficients `(α, β)` of the measurement Kraus operator `αI ± βS`.
    pub fn kraus_coefficients(&self) -> (f64, f64) {
        let p = ((1.0 + self.eta_meas) / 2.0).sqrt();
        let m = ((1.0 - self.eta_meas) / 2.0).max(0.0).sqrt();
        ((p + m) / 2.0, (p - m) / 2.0)
    }
}

/// Measurement Kraus operators `Πⱼ (αI + sⱼβSⱼ)`, one per outcome.
pub fn measurement_operators(
    stage: &RecoveryStage,
    n: usize,
    ch: &RecoveryChannel,
) -> Vec<PauliPolynomial> {
    let (alpha, beta) = ch.kraus_coefficients();
    stage
        .outcomes
        .iter()
        .map(|o| {
            let mut m = PauliPolynomial::identity(n);
            for (s, &sign) in stage.syndromes.iter().zip(&o.signs) {
                let f = PauliPolynomial::identity(n).scale_real(alpha)
                    + s.scale_real(beta * sign as f64);
                m = &m * &f;
            }
            m
        })
        .collect()
}

/// Heisenberg adjoint of one stage:
/// `L ↦ Σₛ [η_rec MₛRₛLRₛMₛ + (1−η_rec) MₛLMₛ]`.
pub fn stage_adjoint(
    stage: &RecoveryStage,
    n: usize,
    ch: &RecoveryChannel,
    l: &PauliPolynomial,
) -> PauliPolynomial {
    let ms = measurement_operators(stage, n, ch);
    let mut out = PauliPolynomial::zero(n);
    for (o, m) in stage.outcomes.iter().zip(&ms) {
        let mut inner = PauliPolynomial::zero(n);
        if ch.eta_rec > 0.0 {
            let r = &o.recovery;
            inner += &(&(r * l) * r).scale_real(ch.eta_rec);
        }
        if ch.eta_rec < 1.0 {
            inner += &l.scale_real(1.0 - ch.eta_rec);
        }
        out += &(&(m * &inner) * m);
    }
    out
}

/// Adjoint of the full recovery (all stages), real coefficients.
pub fn recovery_adjoint(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
    l: &PauliPolynomial,
) -> Result<PauliPolynomial> {
    let mut acc = l.clone();
    for stage in code.stages.iter().rev() {
        acc = stage_adjoint(stage, code.n, ch, &acc);
    }
    acc.into_real(1e-10)
}

/// Logical expectations after recovery as polynomials in the physical
/// expectations before recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingFunctional {
    pub x: PauliPolynomial,
    pub y: PauliPolynomial,
    pub z: PauliPolynomial,
}

impl DecodingFunctional {
    pub fn entries(&self) -> [(&'static str, &PauliPolynomial); 3] {
        [("xbar", &self.x), ("ybar", &self.y), ("zbar", &self.z)]
    }

    pub fn get(&self, name: &str) -> Option<&PauliPolynomial> {
        match name {
            "xbar" => Some(&self.x),
            "ybar" => Some(&self.y),
            "zbar" => Some(&self.z),
            _ => None,
        }
    }

    /// `(x̄, ȳ, z̄)` given a lookup of physical expectation values.
    pub fn evaluate<F: Fn(&PauliString) -> f64>(&self, expectation: F) -> [f64; 3] {
        let ev = |p: &PauliPolynomial| -> f64 {
            p.terms()
                .map(|(s, c)| {
                    if s.is_identity() {
                        c.re
                    } else {
                        c.re * expectation(s)
                    }
                })
                .sum()
        };
        [ev(&self.x), ev(&self.y), ev(&self.z)]
    }
}

/// Decode polynomials for every logical observable under the given channel.
pub fn decode_functional(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
) -> Result<DecodingFunctional> {
    Ok(DecodingFunctional {
        x: recovery_adjoint(code, ch, &code.logical.x)?,
        y: recovery_adjoint(code, ch, &code.logical.y)?,
        z: recovery_adjoint(code, ch, &code.logical.z)?,
    })
}

/// `v ↦ matrix·v + offset` over a variable set.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub variables: VariableSet,
    pub matrix: Matrix,
    pub offset: Vector,
}

impl AffineMap {
    pub fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v + &self.offset
    }
}

/// Coefficient vector of `poly` over `vars` and its identity coefficient.
pub fn coefficient_vector(poly: &PauliPolynomial, vars: &VariableSet) -> Result<(Vector, f64)> {
    let mut v = Vector::zeros(vars.len());
    let mut offset = 0.0;
    for (s, c) in poly.terms() {
        if s.is_identity() {
            offset = c.re;
            continue;
        }
        let j = vars.index_of(s).ok_or(Error::NotClosed { escaping: *s })?;
        v[j] = c.re;
    }
    Ok((v, offset))
}

/// Expectations after recovery as an affine function of those before; `vars`
/// is extended to closure under the recovery adjoint when necessary.
pub fn recovery_superoperator(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
    vars: &VariableSet,
) -> Result<AffineMap> {
    let vars = closure_with(vars, DEFAULT_MAX_DIM, |p| {
        Ok(
            recovery_adjoint(code, ch, &PauliPolynomial::from_real(*p, 1.0))?
                .strings()
                .copied()
                .collect(),
        )
    })?;
    recovery_matrix(code, ch, &vars)
}

fn recovery_matrix(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
    vars: &VariableSet,
) -> Result<AffineMap> {
    let n = vars.len();
    let mut matrix = Matrix::zeros(n, n);
    let mut offset = Vector::zeros(n);
    for (i, p) in vars.iter().enumerate() {
        let image = recovery_adjoint(code, ch, &PauliPolynomial::from_real(*p, 1.0))?;
        let (row, c0) = coefficient_vector(&image, vars)?;
        matrix.set_row(i, &row.transpose());
        offset[i] = c0;
    }
    Ok(AffineMap {
        variables: vars.clone(),
        matrix,
        offset,
    })
}

/// Orthonormal basis of `span{d, Aᵀd, (Aᵀ)²d, …}` over all starting vectors,
/// i.e. the observable subspace of the outputs `dᵀx`.
pub fn observable_subspace(a: &Matrix, outputs: &[Vector]) -> Matrix {
    let n = a.nrows();
    let at = a.transpose();
    let mut basis: Vec<Vector> = Vec::new();
    let add = |v: Vector, basis: &mut Vec<Vector>| -> Option<Vector> {
        let norm0 = v.norm();
        if norm0 == 0.0 {
            return None;
        }
        let mut w = v;
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = b.dot(&w);
                w -= b * proj;
            }
        }
        let nw = w.norm();
        if nw <= KRYLOV_TOLERANCE * norm0 {
            return None;
        }
        let u = w / nw;
        basis.push(u.clone());
        Some(u)
    };
    let mut frontier: Vec<Vector> = outputs
        .iter()
        .filter_map(|d| add(d.clone(), &mut basis))
        .collect();
    while !frontier.is_empty() && basis.len() < n {
        let mut next = Vec::new();
        for u in &frontier {
            if let Some(w) = add(&at * u, &mut basis) {
                next.push(w);
            }
        }
        frontier = next;
    }
    let mut m = Matrix::zeros(n, basis.len());
    for (k, b) in basis.iter().enumerate() {
        m.set_column(k, b);
    }
    m
}

/// Dynamics of one decoded logical observable.
#[derive(Debug, Clone)]
pub struct SectorDynamics {
    pub name: String,
    /// Strings reached from the decode polynomial under the generator.
    pub closure: VariableSet,
    pub generator: Matrix,
    /// Decode coefficients over `closure`.
    pub decode: Vector,
    /// Identity coefficient of the decode polynomial.
    pub decode_offset: f64,
    /// Dimension of the observable subspace of the decoded output.
    pub krylov_dim: usize,
    /// Variables needed besides the logical observable itself.
    pub auxiliary: usize,
    /// Generator of `w = (dᵀx, …)` on the observable subspace; `w₀` is the decoded value.
    pub induced: Matrix,
    pub eigenvalues: Vec<Complex64>,
    /// Orthonormal basis of the observable subspace (columns); column 0 is `d/‖d‖`.
    pub basis: Matrix,
}

impl SectorDynamics {
    /// Decoded value at time `t` from closure expectations `v0` at time zero.
    pub fn value_at(&self, v0: &Vector, t: f64) -> Result<f64> {
        let e = expm(&(&self.generator * t))?;
        Ok(self.decode.dot(&(e * v0)) + self.decode_offset)
    }

    /// Time derivative of the decoded value at zero.
    pub fn initial_slope(&self, v0: &Vector) -> f64 {
        self.decode.dot(&(&self.generator * v0))
    }

    /// Splits the decoded trajectory from `v0` into exponentials `c·e^{λt}` using
    /// the induced spectrum and the first `krylov_dim` derivatives at zero.
    pub fn exponential_modes(&self, v0: &Vector) -> Result<Vec<Mode>> {
        let k = self.krylov_dim;
        let mut modes = Vec::with_capacity(k + 1);
        if k > 0 {
            let mut moments = Vec::with_capacity(k);
            let mut w = v0.clone();
            for _ in 0..k {
                moments.push(self.decode.dot(&w));
                w = &self.generator * w;
            }
            let lam = &self.eigenvalues;
            let vander = CMatrix::from_fn(k, k, |j, m| lam[m].powu(j as u32));
            let rhs = CMatrix::from_iterator(k, 1, moments.iter().map(|&v| Complex64::new(v, 0.0)));
            let c = lu_solve_complex(&vander, &rhs)?;
            for (m, l) in lam.iter().enumerate() {
                modes.push(Mode {
                    rate: *l,
                    amplitude: c[(m, 0)],
                });
            }
        }
        if self.decode_offset != 0.0 {
            modes.push(Mode {
                rate: Complex64::default(),
                amplitude: Complex64::new(self.decode_offset, 0.0),
            });
        }
        Ok(modes)
    }
}

/// One exponential component `amplitude · e^{rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub rate: Complex64,
    pub amplitude: Complex64,
}

/// Sum of modes at time `t` (real part).
pub fn evaluate_modes(modes: &[Mode], t: f64) -> f64 {
    modes
        .iter()
        .map(|m| (m.amplitude * (m.rate * t).exp()).re)
        .sum()
}

/// Decoded logical dynamics under a physical noise model.
#[derive(Debug, Clone)]
pub struct LogicalDynamics {
    pub decode: DecodingFunctional,
    pub sectors: Vec<SectorDynamics>,
}

impl LogicalDynamics {
    pub fn sector(&self, name: &str) -> Option<&SectorDynamics> {
        self.sectors.iter().find(|s| s.name == name)
    }

    /// Dimension of the joint observable subspace of several decoded outputs.
    pub fn joint_dimension(&self, names: &[&str]) -> Result<usize> {
        let mut seeds = Vec::new();
        for name in names {
            let s = self
                .sector(name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown sector {name}")))?;
            seeds.extend(s.closure.iter().copied());
        }
        let mut uniq = Vec::new();
        for p in seeds {
            if !uniq.contains(&p) {
                uniq.push(p);
            }
        }
        let vars = VariableSet::new(uniq)?;
        let mut a = Matrix::zeros(vars.len(), vars.len());
        let mut outputs = Vec::new();
        for name in names {
            let s = self.sector(name).expect("checked above");
            let idx: Vec<usize> = s
                .closure
                .iter()
                .map(|p| vars.index_of(p).expect("union"))
                .collect();
            let mut d = Vector::zeros(vars.len());
            for (i, &gi) in idx.iter().enumerate() {
                d[gi] = s.decode[i];
                for (j, &gj) in idx.iter().enumerate() {
                    a[(gi, gj)] = s.generator[(i, j)];
                }
            }
            outputs.push(d);
        }
        Ok(observable_subspace(&a, &outputs).ncols())
    }
}

/// Builds the generator on the closure of each decode polynomial and reduces it
/// to the observable subspace of the decoded output.
pub fn logical_dynamics(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
    m: &LindbladModel,
) -> Result<LogicalDynamics> {
    if m.n_sites() != code.n {
        return Err(Error::Dimension(format!(
            "model on {} qubits, code on {}",
            m.n_sites(),
            code.n
        )));
    }
    let decode = decode_functional(code, ch)?;
    let mut sectors = Vec::new();
    for (name, poly) in decode.entries() {
        sectors.push(sector_dynamics(name, poly, m)?);
    }
    Ok(LogicalDynamics { decode, sectors })
}

fn sector_dynamics(
    name: &str,
    poly: &PauliPolynomial,
    m: &LindbladModel,
) -> Result<SectorDynamics> {
    let seeds: Vec<PauliString> = poly
        .strings()
        .filter(|s| !s.is_identity())
        .copied()
        .collect();
    let offset = identity_coefficient(poly).re;
    if seeds.is_empty() {
        return Ok(SectorDynamics {
            name: name.to_string(),
            closure: VariableSet::new(Vec::new())?,
            generator: Matrix::zeros(0, 0),
            decode: Vector::zeros(0),
            decode_offset: offset,
            krylov_dim: 0,
            auxiliary: 0,
            induced: Matrix::zeros(0, 0),
            eigenvalues: Vec::new(),
            basis: Matrix::zeros(0, 0),
        });
    }
    let vars = closure(&VariableSet::new(seeds)?, m, DEFAULT_MAX_DIM)?;
    let g = build_generator(&vars, m)?;
    let (d, _) = coefficient_vector(poly, &vars)?;
    let basis = observable_subspace(&g.a, std::slice::from_ref(&d));
    let k = basis.ncols();
    // AᵀU = UK with K = UᵀAᵀU; the coordinates z = Uᵀx obey ż = Kᵀz.
    let kt = basis.transpose() * &g.a * &basis;
    // Rescale the first coordinate so that it equals dᵀx.
    let dn = d.norm();
    let mut induced = kt.clone();
    for j in 1..k {
        induced[(0, j)] *= dn;
        induced[(j, 0)] /= dn;
    }
    let eigenvalues = eigenvalues(&induced)?;
    Ok(SectorDynamics {
        name: name.to_string(),
        closure: vars,
        generator: g.a,
        decode: d,
        decode_offset: offset,
        krylov_dim: k,
        auxiliary: k.saturating_sub(1),
        induced,
        eigenvalues,
        basis,
    })
}

/// Replaces each letter of `base` (on three sites) by the corresponding
/// logical operator of the block at that site.
pub fn substitute(base: &PauliPolynomial, blocks: &[LogicalOperators]) -> Result<PauliPolynomial> {
    let k = base.n_sites();
    if blocks.len() != k {
        return Err(Error::Dimension(format!(
            "{} blocks for a {k}-site formula",
            blocks.len()
        )));
    }
    let nb = blocks[0].x.n_sites();
    let total = nb * k;
    let mut out = PauliPolynomial::zero(total);
    for (s, c) in base.terms() {
        let mut term = PauliPolynomial::identity(total).scale(*c);
        for (site, letter) in s.letters().enumerate() {
            if let Some(op) = blocks[site].get(letter) {
                term = &term * &op.embed(total, site * nb)?;
            }
        }
        out += &term;
    }
    Ok(out)
}

/// Concatenates `code` with itself: blocks of the previous level become the
/// qubits of the base code. Returns the code and its perfect-channel decode.
pub fn concatenate(
    code: &StabilizerCode,
    levels: usize,
) -> Result<(StabilizerCode, DecodingFunctional)> {
    concatenate_with_channel(code, levels, &RecoveryChannel::PERFECT)
}

pub fn concatenate_with_channel(
    code: &StabilizerCode,
    levels: usize,
    ch: &RecoveryChannel,
) -> Result<(StabilizerCode, DecodingFunctional)> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(Error::InvalidArgument(format!(
            "concatenation levels must be in 1..={MAX_LEVELS}, got {levels}"
        )));
    }
    if code.levels != 1 {
        return Err(Error::InvalidArgument(
            "concatenate expects a base (level-1) code".into(),
        ));
    }
    let mut current = code.clone();
    for _ in 1..levels {
        current = lift(code, &current)?;
    }
    current.validate()?;
    let decode = decode_functional(&current, ch)?;
    Ok((current, decode))
}

// One more level: `base` acting on three copies of `inner`.
fn lift(base: &StabilizerCode, inner: &StabilizerCode) -> Result<StabilizerCode> {
    let k = base.n;
    let nb = inner.n;
    let n = nb * k;
    if n > crate::pauli::MAX_SITES {
        return Err(Error::InvalidArgument(format!(
            "{n} qubits exceed the register limit"
        )));
    }
    let blocks = vec![inner.logical.clone(); k];
    let mut stages = Vec::new();
    for b in 0..k {
        for st in &inner.stages {
            stages.push(RecoveryStage {
                level: st.level,
                syndromes: st
                    .syndromes
                    .iter()
                    .map(|s| s.embed(n, b * nb))
                    .collect::<Result<_>>()?,
                outcomes: st
                    .outcomes
                    .iter()
                    .map(|o| {
                        Ok(Outcome {
                            signs: o.signs.clone(),
                            recovery: o.recovery.embed(n, b * nb)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            });
        }
    }
    stages.sort_by_key(|s| s.level);
    let base_stage = &base.stages[0];
    stages.push(RecoveryStage {
        level: inner.levels + 1,
        syndromes: base_stage
            .syndromes
            .iter()
            .map(|s| substitute(s, &blocks))
            .collect::<Result<_>>()?,
        outcomes: base_stage
            .outcomes
            .iter()
            .map(|o| {
                Ok(Outcome {
                    signs: o.signs.clone(),
                    recovery: substitute(&o.recovery, &blocks)?,
                })
            })
            .collect::<Result<_>>()?,
    });
    let logical = LogicalOperators {
        x: substitute(&base.logical.x, &blocks)?,
        y: substitute(&base.logical.y, &blocks)?,
        z: substitute(&base.logical.z, &blocks)?,
    };
    Ok(StabilizerCode {
        n,
        levels: inner.levels + 1,
        syndrome_observables: (0..k)
            .flat_map(|b| inner.syndrome_observables.iter().map(move |s| (b, s)))
            .map(|(b, s)| s.embed(n, b * nb))
            .collect::<Result<_>>()?,
        recovery_ops: base.recovery_ops.clone(),
        logical,
        stages,
    })
}

/// Encoded density operator `(Π + xX̄Π + yȲΠ + zZ̄Π)/Tr` as a polynomial.
pub fn encode(code: &StabilizerCode, bloch: [f64; 3]) -> Result<PauliPolynomial> {
    let norm = (bloch[0] * bloch[0] + bloch[1] * bloch[1] + bloch[2] * bloch[2]).sqrt();
    if !norm.is_finite() || norm > 1.0 + 1e-9 {
        return Err(Error::InvalidState(format!(
            "logical Bloch vector norm {norm} exceeds 1"
        )));
    }
    let pi = code.code_projector();
    let l = &code.logical;
    let rho = pi.clone()
        + (&l.x * &pi).scale_real(bloch[0])
        + (&l.y * &pi).scale_real(bloch[1])
        + (&l.z * &pi).scale_real(bloch[2]);
    let trace = identity_coefficient(&rho).re * 2f64.powi(code.n as i32);
    if trace <= 0.0 {
        return Err(Error::AlgebraBug(
            "encoded state has non-positive trace".into(),
        ));
    }
    rho.scale_real(1.0 / trace).into_real(1e-10)
}

/// `⟨P⟩ = Tr(P·ρ) = 2ⁿ·(identity coefficient of P·ρ)` for every variable.
pub fn encoded_expectations(
    code: &StabilizerCode,
    bloch: [f64; 3],
    vars: &VariableSet,
) -> Result<Vector> {
    let rho = encode(code, bloch)?;
    let scale = 2f64.powi(code.n as i32);
    Ok(Vector::from_iterator(
        vars.len(),
        vars.iter().map(|p| {
            scale * identity_coefficient(&(&PauliPolynomial::from_real(*p, 1.0) * &rho)).re
        }),
    ))
}

/// Starting point of a cycle run.
#[derive(Debug, Clone, PartialEq)]
pub enum LogicalInitial {
    /// Logical Bloch vector, encoded into the code space.
    Bloch([f64; 3]),
    /// Physical amplitudes (site 1 is the most significant bit).
    Physical(Vec<Complex64>),
}

/// Prepared data for repeated decoherence-then-recovery cycles.
#[derive(Debug, Clone)]
pub struct CycleMap {
    pub variables: VariableSet,
    pub generator: Matrix,
    pub recovery: AffineMap,
    pub decode: DecodingFunctional,
}

/// Closure of the decode and logical strings under both the generator and the
/// recovery adjoint, with the matrices acting on it.
pub fn cycle_map(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
    m: &LindbladModel,
) -> Result<CycleMap> {
    if m.n_sites() != code.n {
        return Err(Error::Dimension(format!(
            "model on {} qubits, code on {}",
            m.n_sites(),
            code.n
        )));
    }
    let decode = decode_functional(code, ch)?;
    let mut seeds: Vec<PauliString> = Vec::new();
    for (_, p) in decode.entries().into_iter().chain(code.logical.entries()) {
        for s in p.strings() {
            if !s.is_identity() && !seeds.contains(s) {
                seeds.push(*s);
            }
        }
    }
    let vars = closure_with(&VariableSet::new(seeds)?, DEFAULT_MAX_DIM, |p| {
        let mut next: Vec<PauliString> = crate::pauli::adjoint_generator(p, m)?
            .strings()
            .copied()
            .collect();
        next.extend(
            recovery_adjoint(code, ch, &PauliPolynomial::from_real(*p, 1.0))?
                .strings()
                .copied(),
        );
        Ok(next)
    })?;
    let generator = build_generator(&vars, m)?.a;
    let recovery = recovery_matrix(code, ch, &vars)?;
    Ok(CycleMap {
        variables: vars,
        generator,
        recovery,
        decode,
    })
}

/// Applies `v ← R·e^{A·dt}·v` repeatedly and records the decoded logical
/// Bloch vector after each recovery (row 0 is the initial logical state).
pub fn run_cycles(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
    m: &LindbladModel,
    dt: f64,
    n_cycles: usize,
    initial: &LogicalInitial,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cycle duration must be positive, got {dt}"
        )));
    }
    let map = cycle_map(code, ch, m)?;
    let vars = &map.variables;
    let mut v = match initial {
        LogicalInitial::Bloch(b) => encoded_expectations(code, *b, vars)?,
        LogicalInitial::Physical(psi) => {
            expectations_from_state(&StateInput::Pure(psi.clone()), vars)?
        }
    };
    let e = expm(&(&map.generator * dt))?;
    let logical: Vec<(Vector, f64)> = code
        .logical
        .entries()
        .iter()
        .map(|(_, p)| coefficient_vector(p, vars))
        .collect::<Result<_>>()?;
    let decode: Vec<(Vector, f64)> = map
        .decode
        .entries()
        .iter()
        .map(|(_, p)| coefficient_vector(p, vars))
        .collect::<Result<_>>()?;
    let mut values = Matrix::zeros(n_cycles + 1, 3);
    for (j, (c, c0)) in logical.iter().enumerate() {
        values[(0, j)] = c.dot(&v) + c0;
    }
    for cycle in 1..=n_cycles {
        let u = &e * &v;
        for (j, (c, c0)) in decode.iter().enumerate() {
            values[(cycle, j)] = c.dot(&u) + c0;
        }
        v = map.recovery.apply(&u);
    }
    Trajectory::new(
        (0..=n_cycles).map(|c| c as f64).collect(),
        vec!["xbar".into(), "ybar".into(), "zbar".into()],
        values,
    )
}

/// Kraus operators of every stage, weights folded in, for density-matrix checks.
pub fn recovery_kraus(code: &StabilizerCode, ch: &RecoveryChannel) -> Vec<Vec<PauliPolynomial>> {
    code.stages
        .iter()
        .map(|stage| {
            let mut ks = Vec::new();
            for (o, mo) in stage
                .outcomes
                .iter()
                .zip(measurement_operators(stage, code.n, ch))
            {
                if ch.eta_rec > 0.0 {
                    ks.push((&o.recovery * &mo).scale_real(ch.eta_rec.sqrt()));
                }
                if ch.eta_rec < 1.0 {
                    ks.push(mo.scale_real((1.0 - ch.eta_rec).sqrt()));
                }
            }
            ks
        })
        .collect()
}

/// Applies the recovery channel to a density matrix stage by stage.
pub fn apply_recovery(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
    rho: &DensityMatrix,
) -> DensityMatrix {
    let mut out = rho.clone();
    for stage in recovery_kraus(code, ch) {
        out = out.apply_kraus(&stage);
    }
    out
}

/// Density-matrix counterpart of [`run_cycles`]: master-equation evolution
/// for `dt`, then Kraus recovery, recording the logical Bloch vector.
pub fn oracle_cycles(
    code: &StabilizerCode,
    ch: &RecoveryChannel,
    m: &LindbladModel,
    dt: f64,
    n_cycles: usize,
    initial: &LogicalInitial,
) -> Result<Trajectory> {
    let mut rho = match initial {
        LogicalInitial::Bloch(b) => DensityMatrix::from_poly(&encode(code, *b)?)?,
        LogicalInitial::Physical(psi) => DensityMatrix::from_pure(psi)?,
    };
    let mut values = Matrix::zeros(n_cycles + 1, 3);
    for (j, (_, l)) in code.logical.entries().iter().enumerate() {
        values[(0, j)] = rho.poly_expectation(l);
    }
    for cycle in 1..=n_cycles {
        rho = apply_recovery(code, ch, &evolve_state(m, &rho, dt)?);
        for (j, (_, l)) in code.logical.entries().iter().enumerate() {
            values[(cycle, j)] = rho.poly_expectation(l);
        }
    }
    Trajectory::new(
        (0..=n_cycles).map(|c| c as f64).collect(),
        vec!["xbar".into(), "ybar".into(), "zbar".into()],
        values,
    )
}

/// Closure-size and rate summary of a code under a noise model.
#[derive(Debug, Clone, Serialize)]
pub struct SectorReport {
    pub name: String,
    pub closure_size: usize,
    pub krylov_dim: usize,
    pub auxiliary: usize,
    pub rates: Vec<f64>,
    pub rate_imag: Vec<f64>,
}

impl From<&SectorDynamics> for SectorReport {
    fn from(s: &SectorDynamics) -> Self {
        Self {
            name: s.name.clone(),
            closure_size: s.closure.len(),
            krylov_dim: s.krylov_dim,
            auxiliary: s.auxiliary,
            rates: s.eigenvalues.iter().map(|z| 0.0 - z.re).collect(),
            rate_imag: s.eigenvalues.iter().map(|z| z.im).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::independent_bit_flips;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn syndromes_commute() {
        let code = bitflip3();
        let s = &code.syndrome_observables;
        assert!(s[0].commutes_with(&s[1]));
        assert!(code.validate().is_ok());
    }

    #[test]
    fn broken_recovery_table_is_rejected() {
        let mut code = bitflip3();
        code.stages[0].outcomes[2].recovery = PauliPolynomial::from_real(ps("IIX"), 1.0);
        assert!(code.validate().is_err());
    }

    #[test]
    fn perfect_decode_formulas() {
        let d = decode_functional(&bitflip3(), &RecoveryChannel::PERFECT).unwrap();
        assert_eq!(d.x, PauliPolynomial::from_real(ps("XXX"), 1.0));
        let z = PauliPolynomial::from_real_terms(
            3,
            &[(0.5, "ZII"), (0.5, "IZI"), (0.5, "IIZ"), (-0.5, "ZZZ")],
        )
        .unwrap();
        assert!((d.z.clone() - z).max_abs_coefficient() < 1e-14);
        let y = PauliPolynomial::from_real_terms(
            3,
            &[(0.5, "XXY"), (0.5, "XYX"), (0.5, "YXX"), (0.5, "YYY")],
        )
        .unwrap();
        assert!((d.y.clone() - y).max_abs_coefficient() < 1e-14);
    }

    #[test]
    fn measurement_efficiency_keeps_support() {
        let perfect = decode_functional(&bitflip3(), &RecoveryChannel::PERFECT).unwrap();
        for eta in [0.2, 0.5, 0.9] {
            let d =
                decode_functional(&bitflip3(), &RecoveryChannel::new(eta, 1.0).unwrap()).unwrap();
            let a: Vec<_> = d.z.strings().collect();
            let b: Vec<_> = perfect.z.strings().collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn channel_range_checks() {
        assert!(RecoveryChannel::new(1.1, 0.5).is_err());
        assert!(RecoveryChannel::new(0.5, -0.1).is_err());
        let (a, b) = RecoveryChannel::PERFECT.kraus_coefficients();
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn code_state_decodes_to_bloch_vector() {
        let code = bitflip3();
        let d = decode_functional(&code, &RecoveryChannel::PERFECT).unwrap();
        let (a, b) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let mut psi = vec![c(0.0); 8];
        psi[0] = a;
        psi[7] = b;
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let got = d.evaluate(|p| rho.expectation(p));
        let single = DensityMatrix::from_pure(&[a, b]).unwrap();
        let expect = [
            single.expectation(&ps("X")),
            single.expectation(&ps("Y")),
            single.expectation(&ps("Z")),
        ];
        for k in 0..3 {
            assert!(
                (got[k] - expect[k]).abs() < 1e-12,
                "{k}: {} vs {}",
                got[k],
                expect[k]
            );
        }
    }

    #[test]
    fn recovery_undoes_single_flip() {
        let code = bitflip3();
        let mut psi = vec![c(0.0); 8];
        psi[0] = c(0.8);
        psi[7] = c(0.6);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let flipped = rho.apply_kraus(&[PauliPolynomial::from_real(ps("IXI"), 1.0)]);
        let fixed = apply_recovery(&code, &RecoveryChannel::PERFECT, &flipped);
        let z = &code.logical.z;
        let ev =
            |r: &DensityMatrix| -> f64 { z.terms().map(|(s, c)| c.re * r.expectation(s)).sum() };
        assert!((ev(&fixed) - ev(&rho)).abs() < 1e-12);
        assert!((ev(&rho) - 0.28).abs() < 1e-12);
    }

    #[test]
    fn encode_decode_round_trip() {
        let code = bitflip3();
        let d = decode_functional(&code, &RecoveryChannel::PERFECT).unwrap();
        let bloch = [0.3, -0.4, 0.5];
        let rho = encode(&code, bloch).unwrap();
        let dm = DensityMatrix::from_poly(&rho).unwrap();
        let got = d.evaluate(|p| dm.expectation(p));
        for k in 0..3 {
            assert!((got[k] - bloch[k]).abs() < 1e-12);
        }
        assert!(encode(&code, [1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn perfect_recovery_is_idempotent_on_decode() {
        let code = bitflip3();
        let ch = RecoveryChannel::PERFECT;
        let d = decode_functional(&code, &ch).unwrap();
        let seeds: Vec<PauliString> = d.z.strings().copied().collect();
        let r = recovery_superoperator(&code, &ch, &VariableSet::new(seeds).unwrap()).unwrap();
        let (dz, _) = coefficient_vector(&d.z, &r.variables).unwrap();
        // decode(R v) = decode(v) for every v: dᵀR = dᵀ and dᵀ·offset = 0.
        assert!((r.matrix.transpose() * &dz - &dz).amax() < 1e-12);
        assert!(dz.dot(&r.offset).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_has_zero_generator() {
        let code = bitflip3();
        let m = independent_bit_flips(3, 0.0).unwrap();
        let ld = logical_dynamics(&code, &RecoveryChannel::PERFECT, &m).unwrap();
        let z = ld.sector("zbar").unwrap();
        assert_eq!(z.generator.amax(), 0.0);
        assert_eq!(z.krylov_dim, 1);
    }

    #[test]
    fn independent_flip_sector() {
        let g = 0.3;
        let code = bitflip3();
        let m = independent_bit_flips(3, g).unwrap();
        let ld = logical_dynamics(&code, &RecoveryChannel::PERFECT, &m).unwrap();
        let z = ld.sector("zbar").unwrap();
        assert_eq!(z.auxiliary, 1);
        let mut rates: Vec<f64> = z.eigenvalues.iter().map(|e| -e.re).collect();
        rates.sort_by(f64::total_cmp);
        assert!((rates[0] - 2.0 * g).abs() < 1e-12 && (rates[1] - 6.0 * g).abs() < 1e-12);
        assert_eq!(ld.sector("xbar").unwrap().krylov_dim, 1);
    }

    #[test]
    fn level_one_concatenation_is_identity() {
        let (code, d) = concatenate(&bitflip3(), 1).unwrap();
        assert_eq!(code, bitflip3());
        assert_eq!(
            d,
            decode_functional(&bitflip3(), &RecoveryChannel::PERFECT).unwrap()
        );
        assert!(concatenate(&bitflip3(), 4).is_err());
        assert!(concatenate(&bitflip3(), 0).is_err());
    }

    #[test]
    fn cycles_without_noise_are_constant() {
        let code = bitflip3();
        let m = independent_bit_flips(3, 0.0).unwrap();
        let t = run_cycles(
            &code,
            &RecoveryChannel::PERFECT,
            &m,
            0.5,
            4,
            &LogicalInitial::Bloch([0.1, 0.2, 0.3]),
        )
        .unwrap();
        for r in 0..5 {
            assert!((t.values[(r, 0)] - 0.1).abs() < 1e-12);
            assert!((t.values[(r, 1)] - 0.2).abs() < 1e-12);
            assert!((t.values[(r, 2)] - 0.3).abs() < 1e-12);
        }
    }
}
