//! Multi-qubit Pauli strings, complex polynomials over them, and the
//! Heisenberg-picture Lindblad generator.
//!
//! A string on `n` sites is packed into two bit masks (`x`, `z`); site `k`
//! occupies bit `k`. With the convention `P = i^{x·z} X^x Z^z` the letters are
//! `I = (0,0)`, `X = (1,0)`, `Z = (0,1)`, `Y = (1,1)`, and multiplication is a
//! handful of popcounts. Strings print with site 1 leftmost (`"ZX"` is `Z₁X₂`).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported number of sites (one bit per site in each mask).
pub const MAX_SITES: usize = 64;

/// Coefficients smaller than this fraction of the largest one are dropped.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Imaginary parts below this (relative) size are treated as round-off when a
/// generator image must be real.
pub const REALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// A tensor product of single-site Paulis.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
}

fn site_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Result<Self> {
        Self::from_masks(n_sites, 0, 0)
    }

    pub fn from_masks(n_sites: usize, x: u64, z: u64) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Dimension(format!(
                "Pauli strings need 1..={MAX_SITES} sites, got {n_sites}"
            )));
        }
        let mask = site_mask(n_sites);
        if (x | z) & !mask != 0 {
            return Err(Error::Dimension(format!(
                "masks set bits beyond {n_sites} sites"
            )));
        }
        Ok(Self {
            n: n_sites as u8,
            x,
            z,
        })
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        let (mut x, mut z) = (0u64, 0u64);
        for (k, l) in letters.iter().enumerate().take(MAX_SITES) {
            let (bx, bz) = l.bits();
            x |= (bx as u64) << k;
            z |= (bz as u64) << k;
        }
        Self::from_masks(letters.len(), x, z)
    }

    /// A single non-trivial letter at `site` (0-based) on `n_sites` qubits.
    pub fn single(n_sites: usize, site: usize, letter: Letter) -> Result<Self> {
        if site >= n_sites {
            return Err(Error::Dimension(format!(
                "site {site} out of range for {n_sites} sites"
            )));
        }
        let (bx, bz) = letter.bits();
        Self::from_masks(n_sites, (bx as u64) << site, (bz as u64) << site)
    }

    pub fn n_sites(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, site: usize) -> Letter {
        Letter::from_bits((self.x >> site) & 1 == 1, (self.z >> site) & 1 == 1)
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.n_sites()).map(move |k| self.letter(k))
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the two strings commute (an even number of anticommuting sites).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Places this string on sites `offset..offset + n` of a larger register.
    pub fn embed(&self, n_total: usize, offset: usize) -> Result<Self> {
        if offset + self.n_sites() > n_total {
            return Err(Error::Dimension(format!(
                "cannot embed {} sites at offset {offset} into {n_total}",
                self.n_sites()
            )));
        }
        Self::from_masks(n_total, self.x << offset, self.z << offset)
    }

    /// Compact site-indexed label, e.g. `Z1X2`; the identity prints as `I`.
    pub fn site_label(&self) -> String {
        if self.is_identity() {
            return "I".to_string();
        }
        let mut s = String::new();
        for (k, l) in self.letters().enumerate() {
            if l != Letter::I {
                s.push(l.as_char());
                s.push_str(&(k + 1).to_string());
            }
        }
        s
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            for k in 0..self.n_sites() {
                match self.letter(k).cmp(&other.letter(k)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| Letter::from_char(c.to_ascii_uppercase()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::ParsePauli(s.to_string()))?;
        if letters.is_empty() || letters.len() > MAX_SITES {
            return Err(Error::ParsePauli(s.to_string()));
        }
        Self::from_letters(&letters)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A power of `i`: `Phase(k)` stands for `i^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A Pauli string times `phase · magnitude`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPauli {
    pub phase: Phase,
    pub magnitude: f64,
    pub string: PauliString,
}

impl ScaledPauli {
    pub fn coefficient(&self) -> Complex64 {
        self.phase.to_complex() * self.magnitude
    }
}

fn check_sites(p: &PauliString, q: &PauliString) -> Result<()> {
    if p.n != q.n {
        return Err(Error::Dimension(format!(
            "Pauli strings on {} and {} sites",
            p.n, q.n
        )));
    }
    Ok(())
}

// Phase exponent and string of p·q with P = i^{x·z} X^x Z^z.
fn product_parts(p: &PauliString, q: &PauliString) -> (Phase, PauliString) {
    let x = p.x ^ q.x;
    let z = p.z ^ q.z;
    let k =
        (p.x & p.z).count_ones() + (q.x & q.z).count_ones() + 2 * (p.z & q.x).count_ones() + 4 * 64
            - (x & z).count_ones();
    (Phase::from_exponent(k), PauliString { n: p.n, x, z })
}

/// Sitewise product `p·q` with its accumulated phase.
pub fn multiply(p: &PauliString, q: &PauliString) -> Result<ScaledPauli> {
    check_sites(p, q)?;
    let (phase, string) = product_parts(p, q);
    Ok(ScaledPauli {
        phase,
        magnitude: 1.0,
        string,
    })
}

/// `pq − qp`: zero when the strings commute, otherwise `2·phase·(pq)`.
pub fn commutator(p: &PauliString, q: &PauliString) -> Result<PauliPolynomial> {
    check_sites(p, q)?;
    let mut out = PauliPolynomial::zero(p.n_sites());
    if !p.commutes_with(q) {
        let (phase, string) = product_parts(p, q);
        out.add_term(string, phase.to_complex() * 2.0);
    }
    Ok(out)
}

/// A finite complex linear combination of Pauli strings on a fixed register.
#[derive(Clone, PartialEq)]
pub struct PauliPolynomial {
    n: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliPolynomial {
    pub fn zero(n_sites: usize) -> Self {
        Self {
            n: n_sites,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_sites: usize) -> Self {
        let mut p = Self::zero(n_sites);
        p.add_term(
            PauliString::identity(n_sites).expect("valid site count"),
            Complex64::new(1.0, 0.0),
        );
        p
    }

    pub fn from_string(string: PauliString, coeff: Complex64) -> Self {
        let mut p = Self::zero(string.n_sites());
        p.add_term(string, coeff);
        p
    }

    pub fn from_real(string: PauliString, coeff: f64) -> Self {
        Self::from_string(string, Complex64::new(coeff, 0.0))
    }

    /// Collects `(string, coefficient)` pairs, summing repeats.
    pub fn from_terms<I>(n_sites: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut p = Self::zero(n_sites);
        for (s, c) in terms {
            if s.n_sites() != n_sites {
                return Err(Error::Dimension(format!(
                    "term {s} has {} sites, polynomial has {n_sites}",
                    s.n_sites()
                )));
            }
            p.add_term(s, c);
        }
        p.prune();
        Ok(p)
    }

    /// Parses `(coefficient, "XZI")` pairs with real coefficients.
    pub fn from_real_terms(n_sites: usize, terms: &[(f64, &str)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(c, s)| Ok((s.parse::<PauliString>()?, Complex64::new(*c, 0.0))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n_sites, parsed)
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn strings(&self) -> impl Iterator<Item = &PauliString> {
        self.terms.keys()
    }

    pub fn coefficient(&self, s: &PauliString) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    /// Adds `coeff · string` in place (no pruning).
    pub fn add_term(&mut self, string: PauliString, coeff: Complex64) {
        assert_eq!(string.n_sites(), self.n, "term/polynomial size mismatch");
        if coeff == Complex64::default() {
            return;
        }
        let e = self.terms.entry(string).or_default();
        *e += coeff;
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops coefficients below `DROP_TOLERANCE` relative to the largest one.
    pub fn prune(&mut self) {
        let cut = DROP_TOLERANCE * self.max_abs_coefficient();
        self.terms.retain(|_, c| c.norm() > cut && c.norm() > 0.0);
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = Self::zero(self.n);
        for (s, c) in &self.terms {
            out.add_term(*s, c * factor);
        }
        out.prune();
        out
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Hermitian conjugate; Pauli strings are Hermitian so only coefficients conjugate.
    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(s, c)| (*s, c.conj())).collect(),
        }
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let cut = rel_tol * self.max_abs_coefficient().max(1.0);
        self.terms.values().all(|c| c.im.abs() <= cut)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self * other + other * self
    }

    /// Real coefficients, failing when an imaginary part exceeds `rel_tol` of the
    /// largest coefficient (floored at one).
    pub fn into_real(self, rel_tol: f64) -> Result<Self> {
        let cut = rel_tol * self.max_abs_coefficient().max(1.0);
        if let Some((s, c)) = self.terms.iter().find(|(_, c)| c.im.abs() > cut) {
            return Err(Error::AlgebraBug(format!(
                "coefficient of {s} has imaginary part {:.3e}",
                c.im
            )));
        }
        let mut out = Self::zero(self.n);
        for (s, c) in self.terms {
            out.add_term(s, Complex64::new(c.re, 0.0));
        }
        out.prune();
        Ok(out)
    }

    /// Places the polynomial on sites `offset..` of an `n_total` register.
    pub fn embed(&self, n_total: usize, offset: usize) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|(s, c)| Ok((s.embed(n_total, offset)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n_total, terms)
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(s, c)| TermRecord {
                pauli: s.to_string(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_records(n_sites: usize, records: &[TermRecord]) -> Result<Self> {
        let terms = records
            .iter()
            .map(|r| Ok((r.pauli.parse::<PauliString>()?, Complex64::new(r.re, r.im))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n_sites, terms)
    }
}

/// Serialized form of one polynomial term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub pauli: String,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Serialize for PauliPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_records().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliPolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<TermRecord>::deserialize(deserializer)?;
        let n = records
            .first()
            .map(|r| r.pauli.len())
            .ok_or_else(|| serde::de::Error::custom("empty polynomial has no site count"))?;
        Self::from_records(n, &records).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for PauliPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliPolynomial[{}](", self.n)?;
        for (k, (s, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}·{s}", c.re)?;
            } else {
                write!(f, "({}{:+}i)·{s}", c.re, c.im)?;
            }
        }
        write!(f, ")")
    }
}

impl Add for &PauliPolynomial {
    type Output = PauliPolynomial;

    fn add(self, rhs: &PauliPolynomial) -> PauliPolynomial {
        assert_eq!(self.n, rhs.n, "polynomial size mismatch");
        let mut out = self.clone();
        for (s, c) in &rhs.terms {
            out.add_term(*s, *c);
        }
        out.prune();
        out
    }
}

impl Add for PauliPolynomial {
    type Output = PauliPolynomial;

    fn add(self, rhs: PauliPolynomial) -> PauliPolynomial {
        &self + &rhs
    }
}

impl AddAssign<&PauliPolynomial> for PauliPolynomial {
    fn add_assign(&mut self, rhs: &PauliPolynomial) {
        assert_eq!(self.n, rhs.n, "polynomial size mismatch");
        for (s, c) in &rhs.terms {
            self.add_term(*s, *c);
        }
        self.prune();
    }
}

impl Sub for &PauliPolynomial {
    type Output = PauliPolynomial;

    fn sub(self, rhs: &PauliPolynomial) -> PauliPolynomial {
        assert_eq!(self.n, rhs.n, "polynomial size mismatch");
        let mut out = self.clone();
        for (s, c) in &rhs.terms {
            out.add_term(*s, -c);
        }
        out.prune();
        out
    }
}

impl Sub for PauliPolynomial {
    type Output = PauliPolynomial;

    fn sub(self, rhs: PauliPolynomial) -> PauliPolynomial {
        &self - &rhs
    }
}

impl Neg for &PauliPolynomial {
    type Output = PauliPolynomial;

    fn neg(self) -> PauliPolynomial {
        self.scale_real(-1.0)
    }
}

impl Mul for &PauliPolynomial {
    type Output = PauliPolynomial;

    fn mul(self, rhs: &PauliPolynomial) -> PauliPolynomial {
        assert_eq!(self.n, rhs.n, "polynomial size mismatch");
        let mut out = PauliPolynomial::zero(self.n);
        for (p, a) in &self.terms {
            for (q, b) in &rhs.terms {
                let (phase, s) = product_parts(p, q);
                out.add_term(s, a * b * phase.to_complex());
            }
        }
        out.prune();
        out
    }
}

impl Mul for PauliPolynomial {
    type Output = PauliPolynomial;

    fn mul(self, rhs: PauliPolynomial) -> PauliPolynomial {
        &self * &rhs
    }
}

/// Stored coefficient of the all-identity string; `Tr(poly) = 2ⁿ ·` this value.
pub fn identity_coefficient(poly: &PauliPolynomial) -> Complex64 {
    match PauliString::identity(poly.n_sites()) {
        Ok(id) => poly.coefficient(&id),
        Err(_) => Complex64::default(),
    }
}

/// One dissipative channel `rate · D[operator]`.
#[derive(Debug, Clone)]
pub struct Dissipator {
    pub rate: f64,
    pub operator: PauliPolynomial,
    op_dag: PauliPolynomial,
    op_dag_op: PauliPolynomial,
}

impl Dissipator {
    pub fn new(rate: f64, operator: PauliPolynomial) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "dissipation rate must be finite and non-negative, got {rate}"
            )));
        }
        let op_dag = operator.adjoint();
        let op_dag_op = &op_dag * &operator;
        Ok(Self {
            rate,
            operator,
            op_dag,
            op_dag_op,
        })
    }
}

/// Hamiltonian plus dissipators; generates `ρ̇ = −i[H,ρ] + Σ rate·D[c]ρ` (ħ = 1).
#[derive(Debug, Clone)]
pub struct LindbladModel {
    n: usize,
    hamiltonian: PauliPolynomial,
    dissipators: Vec<Dissipator>,
}

impl LindbladModel {
    pub fn new(
        n_sites: usize,
        hamiltonian: PauliPolynomial,
        dissipators: Vec<(f64, PauliPolynomial)>,
    ) -> Result<Self> {
        if hamiltonian.n_sites() != n_sites {
            return Err(Error::Dimension(format!(
                "Hamiltonian acts on {} sites, model has {n_sites}",
                hamiltonian.n_sites()
            )));
        }
        if !hamiltonian.is_hermitian(REALITY_TOLERANCE) {
            return Err(Error::InvalidModel(
                "Hamiltonian has complex Pauli coefficients (not Hermitian)".into(),
            ));
        }
        let hamiltonian = hamiltonian.into_real(REALITY_TOLERANCE)?;
        let dissipators = dissipators
            .into_iter()
            .map(|(rate, op)| {
                if op.n_sites() != n_sites {
                    return Err(Error::Dimension(format!(
                        "dissipator acts on {} sites, model has {n_sites}",
                        op.n_sites()
                    )));
                }
                Dissipator::new(rate, op)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: n_sites,
            hamiltonian,
            dissipators,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn hamiltonian(&self) -> &PauliPolynomial {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    /// Crude bound on the generator norm, used for step-size control.
    pub fn norm_bound(&self) -> f64 {
        let h: f64 = self.hamiltonian.terms().map(|(_, c)| c.norm()).sum();
        let d: f64 = self
            .dissipators
            .iter()
            .map(|d| {
                let c: f64 = d.operator.terms().map(|(_, c)| c.norm()).sum();
                2.0 * d.rate * c * c
            })
            .sum();
        2.0 * h + d
    }
}

/// Heisenberg-picture generator applied to a polynomial observable:
/// `L†(P) = i[H,P] + Σ rate·(c†Pc − ½{c†c, P})`.
pub fn adjoint_generator_poly(p: &PauliPolynomial, m: &LindbladModel) -> Result<PauliPolynomial> {
    if p.n_sites() != m.n {
        return Err(Error::Dimension(format!(
            "observable on {} sites, model on {}",
            p.n_sites(),
            m.n
        )));
    }
    let mut out = m.hamiltonian.commutator(p).scale(Complex64::new(0.0, 1.0));
    for d in &m.dissipators {
        if d.rate == 0.0 {
            continue;
        }
        let sandwich = &(&d.op_dag * p) * &d.operator;
        let anti = d.op_dag_op.anticommutator(p).scale_real(0.5);
        out += &(&sandwich - &anti).scale_real(d.rate);
    }
    Ok(out)
}

/// `d⟨P⟩/dt` as a real polynomial over Pauli strings.
pub fn adjoint_generator(p: &PauliString, m: &LindbladModel) -> Result<PauliPolynomial> {
    let out = adjoint_generator_poly(&PauliPolynomial::from_real(*p, 1.0), m)?;
    out.into_real(REALITY_TOLERANCE)
}
