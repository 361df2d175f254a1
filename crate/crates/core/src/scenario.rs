//! JSON scenario files consumed by the command-line front end.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eom::{InitialState, VariableSet};
use crate::error::{Error, Result};
use crate::models::{correlated_bit_flips, independent_bit_flips};
use crate::pauli::{LindbladModel, PauliPolynomial, PauliString, TermRecord, MAX_SITES};
use crate::qec::{RecoveryChannel, MAX_LEVELS};
use crate::sim::uniform_grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianTerm {
    pub coeff: f64,
    pub pauli: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipatorSpec {
    pub rate: f64,
    pub op: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    content = "payload",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum InitialSpec {
    /// Per-site Bloch vectors.
    Product(Vec<[f64; 3]>),
    /// `[re, im]` amplitude pairs; site 1 is the most significant index bit.
    Amplitudes(Vec<[f64; 2]>),
    /// Logical Bloch vector for code scenarios.
    Logical([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionSpec {
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Independent,
    Correlated,
}

impl NoiseModel {
    pub fn build(self, n: usize, gamma: f64) -> Result<LindbladModel> {
        match self {
            NoiseModel::Independent => independent_bit_flips(n, gamma),
            NoiseModel::Correlated => correlated_bit_flips(n, gamma),
        }
    }
}

fn default_code() -> String {
    "bitflip3".into()
}
fn one_usize() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QecSpec {
    #[serde(default = "default_code")]
    pub code: String,
    #[serde(default = "one_usize")]
    pub levels: usize,
    pub model: NoiseModel,
    pub gamma: f64,
    #[serde(default = "one_f64")]
    pub eta_meas: f64,
    #[serde(default = "one_f64")]
    pub eta_rec: f64,
    pub dt: f64,
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub n_sites: usize,
    #[serde(default)]
    pub hamiltonian: Vec<HamiltonianTerm>,
    #[serde(default)]
    pub dissipators: Vec<DissipatorSpec>,
    #[serde(default)]
    pub interest: Vec<String>,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub times: Option<TimeGrid>,
    #[serde(default)]
    pub reduction: Option<ReductionSpec>,
    #[serde(default)]
    pub qec: Option<QecSpec>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_string(field: &str, s: &str, n: usize) -> Result<PauliString> {
    let p: PauliString = s.parse().map_err(|_| {
        schema(
            field,
            format!("{s:?} is not a Pauli string over I, X, Y, Z"),
        )
    })?;
    if p.n_sites() != n {
        return Err(schema(
            field,
            format!("{s:?} has {} letters, n_sites is {n}", p.n_sites()),
        ));
    }
    Ok(p)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("<document>")
                .to_string();
            schema(field, msg)
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| schema("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every field against `n_sites` before any computation.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        if n == 0 || n > MAX_SITES {
            return Err(schema(
                "n_sites",
                format!("must be in 1..={MAX_SITES}, got {n}"),
            ));
        }
        for (i, t) in self.hamiltonian.iter().enumerate() {
            parse_string(&format!("hamiltonian[{i}].pauli"), &t.pauli, n)?;
            if !t.coeff.is_finite() {
                return Err(schema(format!("hamiltonian[{i}].coeff"), "must be finite"));
            }
        }
        for (i, d) in self.dissipators.iter().enumerate() {
            if !(d.rate.is_finite() && d.rate >= 0.0) {
                return Err(schema(
                    format!("dissipators[{i}].rate"),
                    "must be finite and non-negative",
                ));
            }
            if d.op.is_empty() {
                return Err(schema(
                    format!("dissipators[{i}].op"),
                    "needs at least one term",
                ));
            }
            for (j, t) in d.op.iter().enumerate() {
                parse_string(&format!("dissipators[{i}].op[{j}].pauli"), &t.pauli, n)?;
                if !(t.re.is_finite() && t.im.is_finite()) {
                    return Err(schema(
                        format!("dissipators[{i}].op[{j}]"),
                        "coefficients must be finite",
                    ));
                }
            }
        }
        for (i, s) in self.interest.iter().enumerate() {
            let p = parse_string(&format!("interest[{i}]"), s, n)?;
            if p.is_identity() {
                return Err(schema(
                    format!("interest[{i}]"),
                    "the identity is not a variable",
                ));
            }
            if self.interest[..i].contains(s) {
                return Err(schema(format!("interest[{i}]"), "duplicate entry"));
            }
        }
        match &self.initial {
            Some(InitialSpec::Product(b)) => {
                if b.len() != n {
                    return Err(schema(
                        "initial.payload",
                        format!("{} Bloch vectors for {n} sites", b.len()),
                    ));
                }
                for (k, v) in b.iter().enumerate() {
                    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if !norm.is_finite() || norm > 1.0 + 1e-9 {
                        return Err(schema(
                            format!("initial.payload[{k}]"),
                            format!("Bloch vector norm {norm} exceeds 1"),
                        ));
                    }
                }
            }
            Some(InitialSpec::Amplitudes(a)) => {
                if n > 20 || a.len() != 1usize << n {
                    return Err(schema(
                        "initial.payload",
                        format!("{} amplitudes for {n} sites", a.len()),
                    ));
                }
                let norm2: f64 = a.iter().map(|z| z[0] * z[0] + z[1] * z[1]).sum();
                if (norm2 - 1.0).abs() > 1e-9 {
                    return Err(schema(
                        "initial.payload",
                        format!("amplitudes have squared norm {norm2}"),
                    ));
                }
            }
            Some(InitialSpec::Logical(b)) => {
                let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
                if !norm.is_finite() || norm > 1.0 + 1e-9 {
                    return Err(schema(
                        "initial.payload",
                        format!("logical Bloch vector norm {norm} exceeds 1"),
                    ));
                }
            }
            None => {}
        }
        if let Some(t) = &self.times {
            if !(t.t_end > 0.0 && t.t_end.is_finite()) {
                return Err(schema("times.t_end", "must be positive"));
            }
            if t.samples < 2 {
                return Err(schema("times.samples", "need at least 2 samples"));
            }
        }
        if let Some(r) = &self.reduction {
            match (r.k, r.tolerance) {
                (Some(0), _) => return Err(schema("reduction.k", "must be at least 1")),
                (Some(_), Some(_)) => {
                    return Err(schema("reduction", "give either k or tolerance, not both"))
                }
                (None, None) => return Err(schema("reduction", "needs k or tolerance")),
                (None, Some(tol)) if tol.is_nan() || tol <= 0.0 => {
                    return Err(schema("reduction.tolerance", "must be positive"))
                }
                _ => {}
            }
        }
        if let Some(q) = &self.qec {
            if q.code != "bitflip3" {
                return Err(schema(
                    "qec.code",
                    format!("unknown code {:?} (supported: bitflip3)", q.code),
                ));
            }
            if q.levels == 0 || q.levels > MAX_LEVELS {
                return Err(schema("qec.levels", format!("must be in 1..={MAX_LEVELS}")));
            }
            let expected = 3usize.pow(q.levels as u32);
            if n != expected {
                return Err(schema(
                    "n_sites",
                    format!("a level-{} code needs {expected} qubits", q.levels),
                ));
            }
            if !(q.gamma.is_finite() && q.gamma >= 0.0) {
                return Err(schema("qec.gamma", "must be finite and non-negative"));
            }
            for (f, v) in [("qec.eta_meas", q.eta_meas), ("qec.eta_rec", q.eta_rec)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(schema(f, "must lie in [0, 1]"));
                }
            }
            if !(q.dt > 0.0 && q.dt.is_finite()) {
                return Err(schema("qec.dt", "must be positive"));
            }
        }
        Ok(())
    }

    /// Lindblad model from the `hamiltonian` and `dissipators` fields.
    pub fn model(&self) -> Result<LindbladModel> {
        let n = self.n_sites;
        let h = PauliPolynomial::from_terms(
            n,
            self.hamiltonian
                .iter()
                .map(|t| {
                    Ok((
                        parse_string("hamiltonian", &t.pauli, n)?,
                        Complex64::new(t.coeff, 0.0),
                    ))
                })
                .collect::<Result<Vec<_>>>()?,
        )?;
        let dissipators = self
            .dissipators
            .iter()
            .map(|d| Ok((d.rate, PauliPolynomial::from_records(n, &d.op)?)))
            .collect::<Result<Vec<_>>>()?;
        LindbladModel::new(n, h, dissipators)
    }

    pub fn interest_set(&self) -> Result<VariableSet> {
        if self.interest.is_empty() {
            return Err(schema(
                "interest",
                "at least one observable of interest is required",
            ));
        }
        VariableSet::new(
            self.interest
                .iter()
                .map(|s| parse_string("interest", s, self.n_sites))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Physical initial state; logical payloads are handled by the code commands.
    pub fn initial_state(&self) -> Result<InitialState> {
        match &self.initial {
            Some(InitialSpec::Product(b)) => Ok(InitialState::Product(b.clone())),
            Some(InitialSpec::Amplitudes(a)) => Ok(InitialState::Amplitudes(
                a.iter().map(|z| Complex64::new(z[0], z[1])).collect(),
            )),
            Some(InitialSpec::Logical(_)) => {
                Err(schema("initial.type", "a logical state needs a qec block"))
            }
            None => Err(schema("initial", "missing initial state")),
        }
    }

    pub fn time_grid(&self) -> Result<Vec<f64>> {
        let t = self
            .times
            .ok_or_else(|| schema("times", "missing time grid"))?;
        uniform_grid(t.t_end, t.samples)
    }

    pub fn qec_spec(&self) -> Result<&QecSpec> {
        self.qec
            .as_ref()
            .ok_or_else(|| schema("qec", "missing qec block"))
    }
}

impl QecSpec {
    pub fn channel(&self) -> Result<RecoveryChannel> {
        RecoveryChannel::new(self.eta_meas, self.eta_rec)
    }

    pub fn noise(&self) -> Result<LindbladModel> {
        self.model.build(3usize.pow(self.levels as u32), self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SPIN: &str = r#"{
        "n_sites": 2,
        "hamiltonian": [{"coeff": 0.05, "pauli": "ZI"}, {"coeff": 0.05, "pauli": "IZ"}, {"coeff": 10.0, "pauli": "XX"}],
        "dissipators": [{"rate": 2.0, "op": [{"pauli": "IZ", "re": 1.0, "im": 0.0}]}],
        "interest": ["ZI"],
        "initial": {"type": "product", "payload": [[0, 0, 1], [1, 0, 0]]},
        "times": {"t_end": 5.0, "samples": 501},
        "reduction": {"k": 1}
    }"#;

    #[test]
    fn parses_two_spin() {
        let sc = Scenario::from_json(TWO_SPIN).unwrap();
        let m = sc.model().unwrap();
        assert_eq!(m.hamiltonian().len(), 3);
        assert_eq!(sc.time_grid().unwrap().len(), 501);
        assert_eq!(sc.interest_set().unwrap().len(), 1);
    }

    fn field_of(text: &str) -> String {
        match Scenario::from_json(text) {
            Err(Error::Schema { field, .. }) => field,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(
            field_of(&TWO_SPIN.replace("\"ZI\"}", "\"ZII\"}")),
            "hamiltonian[0].pauli"
        );
        assert_eq!(
            field_of(&TWO_SPIN.replace("\"rate\": 2.0", "\"rate\": -2.0")),
            "dissipators[0].rate"
        );
        assert_eq!(
            field_of(&TWO_SPIN.replace("\"interest\"", "\"intrest\"")),
            "intrest"
        );
        assert_eq!(
            field_of(&TWO_SPIN.replace("\"n_sites\": 2,", "")),
            "n_sites"
        );
        assert_eq!(
            field_of(&TWO_SPIN.replace("[1, 0, 0]", "[1, 1, 0]")),
            "initial.payload[1]"
        );
        assert_eq!(
            field_of(&TWO_SPIN.replace("\"k\": 1", "\"k\": 0")),
            "reduction.k"
        );
    }

    #[test]
    fn qec_block() {
        let text = r#"{"n_sites": 3, "initial": {"type": "logical", "payload": [0, 0, 1]},
            "qec": {"model": "independent", "gamma": 1.0, "dt": 0.1, "cycles": 3}}"#;
        let sc = Scenario::from_json(text).unwrap();
        let q = sc.qec_spec().unwrap();
        assert_eq!(q.levels, 1);
        assert_eq!(q.channel().unwrap(), RecoveryChannel::PERFECT);
        assert_eq!(q.noise().unwrap().dissipators().len(), 3);
        let bad = text.replace("\"n_sites\": 3", "\"n_sites\": 4");
        assert!(matches!(
            Scenario::from_json(&bad),
            Err(Error::Schema { .. })
        ));
    }
}
