//! Labeled real LTI systems `ẋ = Ax + Bu, y = Cx` and their two-block feedback
//! interconnection.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub labels: Vec<String>,
}

impl StateSpaceModel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, labels: Vec<String>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!(
                "B has {} rows, A has order {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!(
                "C has {} columns, A has order {n}",
                c.ncols()
            )));
        }
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {n} states",
                labels.len()
            )));
        }
        if a.iter()
            .chain(b.iter())
            .chain(c.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(
                "non-finite state-space entry".into(),
            ));
        }
        Ok(Self { a, b, c, labels })
    }

    /// Builds a model with generic labels `s1, s2, …`.
    pub fn unlabeled(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let labels = (1..=a.nrows()).map(|i| format!("s{i}")).collect();
        Self::new(a, b, c, labels)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
}

/// Two subsystems coupled through their outputs:
/// `ẋ₁ = A₁x₁ + B₁y₂`, `ẋ₂ = A₂x₂ + B₂y₁`, `y₁ = C₁x₁`, `y₂ = C₂x₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterconnectedModel {
    pub sys1: StateSpaceModel,
    pub sys2: StateSpaceModel,
}

impl InterconnectedModel {
    pub fn new(sys1: StateSpaceModel, sys2: StateSpaceModel) -> Result<Self> {
        if sys1.n_inputs() != sys2.n_outputs() {
            return Err(Error::Dimension(format!(
                "sys1 takes {} inputs but sys2 produces {} outputs",
                sys1.n_inputs(),
                sys2.n_outputs()
            )));
        }
        if sys2.n_inputs() != sys1.n_outputs() {
            return Err(Error::Dimension(format!(
                "sys2 takes {} inputs but sys1 produces {} outputs",
                sys2.n_inputs(),
                sys1.n_outputs()
            )));
        }
        Ok(Self { sys1, sys2 })
    }

    pub fn order(&self) -> usize {
        self.sys1.order() + self.sys2.order()
    }

    /// Closed-loop matrix `[[A₁, B₁C₂], [B₂C₁, A₂]]`.
    pub fn reassemble(&self) -> Matrix {
        let (n1, n2) = (self.sys1.order(), self.sys2.order());
        let mut a = Matrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.sys1.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&self.sys2.a);
        if n2 > 0 && n1 > 0 {
            a.view_mut((0, n1), (n1, n2))
                .copy_from(&(&self.sys1.b * &self.sys2.c));
            a.view_mut((n1, 0), (n2, n1))
                .copy_from(&(&self.sys2.b * &self.sys1.c));
        }
        a
    }

    pub fn labels(&self) -> Vec<String> {
        self.sys1
            .labels
            .iter()
            .chain(self.sys2.labels.iter())
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_checks() {
        let a = Matrix::identity(2, 2);
        assert!(
            StateSpaceModel::unlabeled(a.clone(), Matrix::zeros(3, 1), Matrix::zeros(1, 2))
                .is_err()
        );
        assert!(
            StateSpaceModel::unlabeled(a.clone(), Matrix::zeros(2, 1), Matrix::zeros(1, 3))
                .is_err()
        );
        let s = StateSpaceModel::unlabeled(a, Matrix::zeros(2, 1), Matrix::zeros(1, 2)).unwrap();
        assert_eq!((s.order(), s.n_inputs(), s.n_outputs()), (2, 1, 1));
        assert_eq!(s.labels, vec!["s1", "s2"]);
    }

    #[test]
    fn reassembly_places_blocks() {
        let s1 = StateSpaceModel::unlabeled(
            Matrix::from_element(1, 1, -1.0),
            Matrix::from_element(1, 1, 2.0),
            Matrix::from_element(1, 1, 3.0),
        )
        .unwrap();
        let s2 = StateSpaceModel::unlabeled(
            Matrix::from_element(1, 1, -4.0),
            Matrix::from_element(1, 1, 5.0),
            Matrix::from_element(1, 1, 7.0),
        )
        .unwrap();
        let m = InterconnectedModel::new(s1, s2).unwrap();
        let a = m.reassemble();
        assert_eq!(a, Matrix::from_row_slice(2, 2, &[-1.0, 14.0, 15.0, -4.0]));
    }
}
