//! Parameter-affine operators and right-hand sides.
//!
//! Every parameter-dependent quantity is stored as a sum of fixed matrices
//! or vectors weighted by scalar coefficient functions of the parameter.
//! The fixed parts are assembled once on the reference mesh; evaluating at
//! a parameter is a linear combination, which is what makes the reduced
//! online phase independent of the mesh size.

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Scalar coefficient function `c * prod_i mu_i^{e_i}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Theta {
    pub coeff: f64,
    pub exponents: Vec<i32>,
}

impl Theta {
    pub fn constant(c: f64) -> Self {
        Self { coeff: c, exponents: Vec::new() }
    }

    /// `c * mu_i^e`.
    pub fn monomial(c: f64, i: usize, e: i32) -> Self {
        let mut exponents = vec![0; i + 1];
        exponents[i] = e;
        Self { coeff: c, exponents }
    }

    /// `c * mu_i^ei * mu_j^ej`.
    pub fn product(c: f64, (i, ei): (usize, i32), (j, ej): (usize, i32)) -> Self {
        let mut exponents = vec![0; i.max(j) + 1];
        exponents[i] += ei;
        exponents[j] += ej;
        Self { coeff: c, exponents }
    }

    pub fn eval(&self, mu: &[f64]) -> Result<f64> {
        if self.exponents.len() > mu.len() {
            return Err(Error::ShapeMismatch(format!(
                "coefficient references mu_{} but parameter has {} entries",
                self.exponents.len() - 1,
                mu.len()
            )));
        }
        let mut v = self.coeff;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e != 0 {
                v *= mu[i].powi(e);
            }
        }
        Ok(v)
    }
}

/// Affine matrix `A(mu) = sum_q theta_q(mu) A_q`.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    pub terms: Vec<(Theta, SparseOperator)>,
}

impl AffineOperator {
    pub fn new(terms: Vec<(Theta, SparseOperator)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::ShapeMismatch("affine operator needs at least one term".into()));
        }
        let shape = terms[0].1.shape();
        for (_, op) in &terms {
            if op.shape() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "affine term shapes differ: {:?} vs {:?}",
                    op.shape(),
                    shape
                )));
            }
        }
        Ok(Self { terms })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.terms[0].1.shape()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn evaluate(&self, mu: &[f64]) -> Result<SparseOperator> {
        let weighted: Vec<(f64, &SparseOperator)> = self
            .terms
            .iter()
            .map(|(t, op)| Ok((t.eval(mu)?, op)))
            .collect::<Result<_>>()?;
        SparseOperator::linear_combination(&weighted)
    }
}

/// Per-step scaling of one right-hand side term over the time grid.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    /// Same weight 1 at every step.
    Constant,
    /// Explicit weight per step.
    Samples(Vec<f64>),
}

impl TimeProfile {
    pub fn weight(&self, step: usize) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Samples(s) => s[step],
        }
    }
}

/// Spatial data of one right-hand side term.
#[derive(Debug, Clone)]
pub enum TermData {
    /// Separable in time: one spatial vector scaled per step by a profile.
    Separable { profile: TimeProfile, vector: Vec<f64> },
    /// General space-time data, one vector per step (used for tabulated
    /// target trajectories).
    Trajectory(Vec<Vec<f64>>),
}

impl TermData {
    /// Spatial vector at the given step.
    pub fn step(&self, k: usize) -> (&[f64], f64) {
        match self {
            TermData::Separable { profile, vector } => (vector, profile.weight(k)),
            TermData::Trajectory(steps) => (&steps[k], 1.0),
        }
    }
}

/// Affine space-time right-hand side
/// `f_k(mu) = sum_q theta_q(mu) b_q(k)`.
#[derive(Debug, Clone)]
pub struct AffineVector {
    pub terms: Vec<(Theta, TermData)>,
    pub len: usize,
    pub n_steps: usize,
}

impl AffineVector {
    pub fn new(len: usize, n_steps: usize, terms: Vec<(Theta, TermData)>) -> Result<Self> {
        for (_, data) in &terms {
            match data {
                TermData::Separable { profile, vector } => {
                    if vector.len() != len {
                        return Err(Error::ShapeMismatch(format!(
                            "affine vector term has length {}, expected {len}",
                            vector.len()
                        )));
                    }
                    if let TimeProfile::Samples(s) = profile {
                        if s.len() != n_steps {
                            return Err(Error::ShapeMismatch(format!(
                                "time profile has {} samples, expected {n_steps}",
                                s.len()
                            )));
                        }
                    }
                }
                TermData::Trajectory(steps) => {
                    if steps.len() != n_steps || steps.iter().any(|v| v.len() != len) {
                        return Err(Error::ShapeMismatch(
                            "trajectory term shape mismatch".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { terms, len, n_steps })
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// One vector per time step.
    pub fn evaluate(&self, mu: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![vec![0.0; self.len]; self.n_steps];
        for (theta, data) in &self.terms {
            let t = theta.eval(mu)?;
            for (k, step) in out.iter_mut().enumerate() {
                let (b, w) = data.step(k);
                let w = t * w;
                if w != 0.0 {
                    for (o, v) in step.iter_mut().zip(b) {
                        *o += w * v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Apply a linear map (such as a basis projection) to every spatial
    /// vector of every term, producing a reduced affine right-hand side.
    pub fn map(&self, new_len: usize, f: &dyn Fn(&[f64]) -> Vec<f64>) -> Result<AffineVector> {
        let terms = self
            .terms
            .iter()
            .map(|(theta, data)| {
                let data = match data {
                    TermData::Separable { profile, vector } => TermData::Separable {
                        profile: profile.clone(),
                        vector: f(vector),
                    },
                    TermData::Trajectory(steps) => {
                        TermData::Trajectory(steps.iter().map(|v| f(v)).collect())
                    }
                };
                (theta.clone(), data)
            })
            .collect();
        AffineVector::new(new_len, self.n_steps, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn theta_monomials() {
        let mu = [0.1, 2.0, 2.5];
        assert_relative_eq!(Theta::constant(3.0).eval(&mu).unwrap(), 3.0);
        assert_relative_eq!(Theta::monomial(2.0, 2, -1).eval(&mu).unwrap(), 0.8);
        assert_relative_eq!(
            Theta::product(1.0, (0, 1), (2, 1)).eval(&mu).unwrap(),
            0.25
        );
        assert!(Theta::monomial(1.0, 5, 1).eval(&mu).is_err());
    }

    #[test]
    fn operator_evaluation_is_linear_combination() {
        let a = SparseOperator::identity(3);
        let b = SparseOperator::from_triplets(3, 3, &[(0, 1, 1.0), (2, 0, 4.0)]);
        let op = AffineOperator::new(vec![
            (Theta::constant(1.0), a),
            (Theta::monomial(1.0, 0, 2), b),
        ])
        .unwrap();
        let m = op.evaluate(&[3.0]).unwrap().to_dense();
        assert_relative_eq!(m[(0, 0)], 1.0);
        assert_relative_eq!(m[(0, 1)], 9.0);
        assert_relative_eq!(m[(2, 0)], 36.0);
    }

    #[test]
    fn vector_evaluation_with_profile() {
        let v = AffineVector::new(
            2,
            3,
            vec![
                (
                    Theta::constant(1.0),
                    TermData::Separable { profile: TimeProfile::Constant, vector: vec![1.0, 0.0] },
                ),
                (
                    Theta::monomial(1.0, 0, 1),
                    TermData::Separable {
                        profile: TimeProfile::Samples(vec![0.0, 1.0, 2.0]),
                        vector: vec![0.0, 1.0],
                    },
                ),
            ],
        )
        .unwrap();
        let steps = v.evaluate(&[2.0]).unwrap();
        assert_eq!(steps.len(), 3);
        assert_relative_eq!(steps[0][1], 0.0);
        assert_relative_eq!(steps[1][1], 2.0);
        assert_relative_eq!(steps[2][1], 4.0);
        assert_relative_eq!(steps[2][0], 1.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = SparseOperator::identity(3);
        let b = SparseOperator::identity(2);
        assert!(AffineOperator::new(vec![
            (Theta::constant(1.0), a),
            (Theta::constant(1.0), b),
        ])
        .is_err());
    }
}
