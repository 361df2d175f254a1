//! Ready-made Lindblad models used throughout the examples and tests.

use crate::error::Result;
use crate::pauli::{Letter, LindbladModel, PauliPolynomial, PauliString};

/// `H = ½ω₁Z₁ + ½ω₂Z₂ + gX₁X₂` with phase damping `γD[Z₂]` on the second spin.
pub fn two_spin(omega1: f64, omega2: f64, g: f64, gamma: f64) -> Result<LindbladModel> {
    let h = PauliPolynomial::from_real_terms(
        2,
        &[(0.5 * omega1, "ZI"), (0.5 * omega2, "IZ"), (g, "XX")],
    )?;
    let c = PauliPolynomial::from_real_terms(2, &[(1.0, "IZ")])?;
    LindbladModel::new(2, h, vec![(gamma, c)])
}

/// `Σᵢ Γ·D[Xᵢ]` on `n` qubits, no Hamiltonian.
pub fn independent_bit_flips(n: usize, gamma: f64) -> Result<LindbladModel> {
    let dissipators = (0..n)
        .map(|i| {
            Ok((
                gamma,
                PauliPolynomial::from_real(PauliString::single(n, i, Letter::X)?, 1.0),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    LindbladModel::new(n, PauliPolynomial::zero(n), dissipators)
}

/// `Γ_c·D[X₁ + … + Xₙ]`: one collective flip channel, as from a stray uniform field.
pub fn correlated_bit_flips(n: usize, gamma_c: f64) -> Result<LindbladModel> {
    let terms = (0..n)
        .map(|i| Ok((PauliString::single(n, i, Letter::X)?, 1.0.into())))
        .collect::<Result<Vec<_>>>()?;
    let c = PauliPolynomial::from_terms(n, terms)?;
    LindbladModel::new(n, PauliPolynomial::zero(n), vec![(gamma_c, c)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_spin_structure() {
        let m = two_spin(1.0, 2.0, 3.0, 0.5).unwrap();
        assert_eq!(m.hamiltonian().len(), 3);
        assert_eq!(m.dissipators().len(), 1);
        assert_eq!(m.dissipators()[0].rate, 0.5);
    }

    #[test]
    fn flip_models() {
        let m = independent_bit_flips(3, 0.2).unwrap();
        assert_eq!(m.dissipators().len(), 3);
        let c = correlated_bit_flips(3, 0.2).unwrap();
        assert_eq!(c.dissipators().len(), 1);
        assert_eq!(c.dissipators()[0].operator.len(), 3);
    }
}
