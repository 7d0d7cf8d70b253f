//! Brute-force information-theoretic diagnostics on explicit discrete joints
//! over (X₁, X₂, Y): conditional entropies, the conditioning inequality, and
//! the Fano lower bound on Bayes error.
//!
//! Both inequalities are unconditional theorems at the table level, so any
//! violation signals an implementation bug and is reported with the offending
//! table verbatim.

use crate::error::{AcrError, Result};

/// Probability table over (X₁, X₂, Y) with finite alphabets, stored as
/// `p[x1][x2][y]` flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteJoint {
    x1: usize,
    x2: usize,
    y: usize,
    p: Vec<f64>,
}

/// Which inputs Y is conditioned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conditioning {
    None,
    X1,
    X2,
    Both,
}

impl DiscreteJoint {
    /// Validates non-negativity and total mass 1 within 1e-12.
    pub fn new(x1: usize, x2: usize, y: usize, p: Vec<f64>) -> Result<Self> {
        if x1 == 0 || x2 == 0 || y == 0 {
            return Err(AcrError::invalid_input("alphabet sizes must be positive"));
        }
        if p.len() != x1 * x2 * y {
            return Err(AcrError::shape_mismatch(format!(
                "expected {} probabilities, got {}",
                x1 * x2 * y,
                p.len()
            )));
        }
        if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(AcrError::invalid_input(
                "joint probabilities must be finite and non-negative",
            ));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(AcrError::invalid_input(format!(
                "joint probabilities must sum to 1 within 1e-12, got {total}"
            )));
        }
        Ok(Self { x1, x2, y, p })
    }

    /// Normalizes an arbitrary non-negative weight table into a joint.
    pub fn from_weights(x1: usize, x2: usize, y: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(AcrError::invalid_input("weights must have positive total"));
        }
        let mut p: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        // Pin the residual onto one cell so the table sums to 1 exactly.
        let sum_rest: f64 = p[1..].iter().sum();
        p[0] = 1.0 - sum_rest;
        Self::new(x1, x2, y, p)
    }

    pub fn prob(&self, a: usize, b: usize, c: usize) -> f64 {
        self.p[(a * self.x2 + b) * self.y + c]
    }

    pub fn alphabet_y(&self) -> usize {
        self.y
    }

    pub fn table(&self) -> &[f64] {
        &self.p
    }

    /// `p(y | x1 marginal)` style helper: the marginal over the conditioning
    /// set paired with y, as `(p(x_S), p(x_S, y))` sums.
    fn entropy_given(&self, cond: Conditioning) -> f64 {
        // H(Y | X_S) = −Σ p(x_S, y) · ln( p(x_S, y) / p(x_S) ).
        let cells: Box<dyn Iterator<Item = (usize, usize)>> = match cond {
            Conditioning::None => Box::new(std::iter::once((0, 0))),
            Conditioning::X1 => Box::new((0..self.x1).map(|a| (a, 0))),
            Conditioning::X2 => Box::new((0..self.x2).map(|b| (0, b))),
            Conditioning::Both => {
                let x2 = self.x2;
                Box::new((0..self.x1).flat_map(move |a| (0..x2).map(move |b| (a, b))))
            }
        };
        let mut h = 0.0;
        for (a, b) in cells {
            for y in 0..self.y {
                let joint = self.mass(cond, a, b, y);
                if joint > 0.0 {
                    let marginal = self.mass_marginal(cond, a, b);
                    h -= joint * (joint / marginal).ln();
                }
            }
        }
        h
    }

    /// `p(x_S = (a, b), Y = y)` where coordinates outside S are summed out.
    fn mass(&self, cond: Conditioning, a: usize, b: usize, y: usize) -> f64 {
        match cond {
            Conditioning::None => (0..self.x1)
                .flat_map(|i| (0..self.x2).map(move |j| (i, j)))
                .map(|(i, j)| self.prob(i, j, y))
                .sum(),
            Conditioning::X1 => (0..self.x2).map(|j| self.prob(a, j, y)).sum(),
            Conditioning::X2 => (0..self.x1).map(|i| self.prob(i, b, y)).sum(),
            Conditioning::Both => self.prob(a, b, y),
        }
    }

    fn mass_marginal(&self, cond: Conditioning, a: usize, b: usize) -> f64 {
        (0..self.y).map(|y| self.mass(cond, a, b, y)).sum()
    }

    /// Bayes-optimal error of predicting Y from (X₁, X₂): one minus the
    /// summed per-cell maxima.
    pub fn bayes_error(&self) -> f64 {
        let mut best = 0.0;
        for a in 0..self.x1 {
            for b in 0..self.x2 {
                let cell_max = (0..self.y)
                    .map(|y| self.prob(a, b, y))
                    .fold(0.0f64, f64::max);
                best += cell_max;
            }
        }
        1.0 - best
    }
}

/// `H(Y | X_S)` in nats, computed by direct summation over the table.
pub fn conditional_entropy(joint: &DiscreteJoint, cond: Conditioning) -> f64 {
    joint.entropy_given(cond)
}

/// Outcome of the conditioning-inequality and Fano-bound checks.
#[derive(Clone, Debug, PartialEq)]
pub struct FanoDiagnostics {
    /// H(Y | X₁, X₂), nats.
    pub h_given_both: f64,
    /// H(Y | X₁), nats.
    pub h_given_x1: f64,
    /// H(Y | X₂), nats.
    pub h_given_x2: f64,
    /// Bayes-optimal error over the table.
    pub bayes_error: f64,
    /// `(H₂(Y|X₁,X₂) − 1) / log₂|Y|` with the entropy in bits.
    pub fano_bound: f64,
}

const INFO_TOL: f64 = 1e-12;

/// Asserts `H(Y|X₁,X₂) ≤ H(Y|Xₖ)` for both modalities and the Fano lower
/// bound on the Bayes error. Violations are unconditional-theorem failures
/// and return the offending joint verbatim in the error.
pub fn dpi_and_fano_check(joint: &DiscreteJoint) -> Result<FanoDiagnostics> {
    if joint.alphabet_y() < 2 {
        return Err(AcrError::invalid_input(
            "fano check requires |Y| >= 2",
        ));
    }
    let h_given_both = conditional_entropy(joint, Conditioning::Both);
    let h_given_x1 = conditional_entropy(joint, Conditioning::X1);
    let h_given_x2 = conditional_entropy(joint, Conditioning::X2);
    if h_given_both > h_given_x1 + INFO_TOL || h_given_both > h_given_x2 + INFO_TOL {
        return Err(AcrError::invalid_input(format!(
            "conditioning inequality violated: H(Y|X1,X2)={h_given_both}, H(Y|X1)={h_given_x1}, \
             H(Y|X2)={h_given_x2}; offending joint: {:?}",
            joint
        )));
    }
    let bayes_error = joint.bayes_error();
    let h_bits = h_given_both / std::f64::consts::LN_2;
    let fano_bound = (h_bits - 1.0) / (joint.alphabet_y() as f64).log2();
    if bayes_error < fano_bound - INFO_TOL {
        return Err(AcrError::invalid_input(format!(
            "fano bound violated: bayes error {bayes_error} < bound {fano_bound}; \
             offending joint: {:?}",
            joint
        )));
    }
    Ok(FanoDiagnostics {
        h_given_both,
        h_given_x1,
        h_given_x2,
        bayes_error,
        fano_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RandomStream;

    fn uniform_independent() -> DiscreteJoint {
        // X1, X2, Y independent uniform binary.
        DiscreteJoint::new(2, 2, 2, vec![0.125; 8]).unwrap()
    }

    #[test]
    fn independent_y_keeps_full_entropy() {
        let j = uniform_independent();
        let ln2 = std::f64::consts::LN_2;
        assert!((conditional_entropy(&j, Conditioning::X1) - ln2).abs() < 1e-12);
        assert!((conditional_entropy(&j, Conditioning::X2) - ln2).abs() < 1e-12);
        assert!((conditional_entropy(&j, Conditioning::None) - ln2).abs() < 1e-12);
    }

    #[test]
    fn deterministic_y_has_zero_entropy() {
        // Y = X1 with X1 uniform, X2 uniform independent.
        let mut p = vec![0.0; 8];
        for x1 in 0..2 {
            for x2 in 0..2 {
                p[(x1 * 2 + x2) * 2 + x1] = 0.25;
            }
        }
        let j = DiscreteJoint::new(2, 2, 2, p).unwrap();
        assert!(conditional_entropy(&j, Conditioning::X1).abs() < 1e-12);
        assert!(conditional_entropy(&j, Conditioning::Both).abs() < 1e-12);
        // Bayes error zero, bound trivially satisfied.
        let diag = dpi_and_fano_check(&j).unwrap();
        assert!(diag.bayes_error.abs() < 1e-12);
        assert!(diag.fano_bound <= 0.0);
    }

    /// Independent oracle: H(Y|X_S) = H(X_S, Y) − H(X_S), summed in a
    /// different order than the implementation.
    fn conditional_entropy_oracle(j: &DiscreteJoint, cond: Conditioning) -> f64 {
        let ent = |masses: Vec<f64>| -> f64 {
            masses
                .into_iter()
                .filter(|&m| m > 0.0)
                .map(|m| -m * m.ln())
                .sum()
        };
        let (x1, x2, y) = (2, 2, 2);
        let mut joint_sy = Vec::new();
        let mut marg_s = Vec::new();
        match cond {
            Conditioning::X1 => {
                for a in 0..x1 {
                    let mut m = 0.0;
                    for c in 0..y {
                        let mass: f64 = (0..x2).map(|b| j.prob(a, b, c)).sum();
                        joint_sy.push(mass);
                        m += mass;
                    }
                    marg_s.push(m);
                }
            }
            Conditioning::Both => {
                for a in 0..x1 {
                    for b in 0..x2 {
                        let mut m = 0.0;
                        for c in 0..y {
                            joint_sy.push(j.prob(a, b, c));
                            m += j.prob(a, b, c);
                        }
                        marg_s.push(m);
                    }
                }
            }
            _ => unreachable!("oracle only covers X1 and Both"),
        }
        ent(joint_sy) - ent(marg_s)
    }

    #[test]
    fn random_joints_match_second_implementation() {
        let mut rng = RandomStream::new(77);
        for _ in 0..50 {
            let weights: Vec<f64> = (0..8).map(|_| rng.unit::<f64>() + 1e-3).collect();
            let j = DiscreteJoint::from_weights(2, 2, 2, weights).unwrap();
            for cond in [Conditioning::X1, Conditioning::Both] {
                let got = conditional_entropy(&j, cond);
                let want = conditional_entropy_oracle(&j, cond);
                assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
            }
        }
    }

    #[test]
    fn random_joints_pass_both_checks() {
        let mut rng = RandomStream::new(5);
        for trial in 0..200 {
            let x1 = rng.uniform_usize(1, 4).unwrap();
            let x2 = rng.uniform_usize(1, 4).unwrap();
            let y = rng.uniform_usize(2, 4).unwrap();
            let weights: Vec<f64> = (0..x1 * x2 * y).map(|_| rng.unit::<f64>()).collect();
            let j = DiscreteJoint::from_weights(x1, x2, y, weights).unwrap();
            dpi_and_fano_check(&j).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
        }
    }

    #[test]
    fn rejects_invalid_tables() {
        assert!(DiscreteJoint::new(2, 2, 2, vec![0.2; 8]).is_err());
        assert!(DiscreteJoint::new(2, 2, 2, vec![-0.125; 8]).is_err());
        assert!(DiscreteJoint::new(2, 2, 2, vec![0.125; 7]).is_err());
    }
}
