use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// Weight families for Gaussian quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GaussFamily {
    /// Weight `e^{-x²}` on ℝ.
    Hermite,
    /// Weight `u^β e^{-u}` on `(0, ∞)`, `β > −1`.
    GeneralizedLaguerre { beta: f64 },
}

/// Nodes in increasing order and their positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(x_i)`
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss rule with `q` nodes computed by Golub–Welsch: the nodes are the
/// eigenvalues of the Jacobi matrix of the monic recurrence and the weights
/// are `μ₀` times the squared first eigenvector components.
pub fn gauss_nodes(q: usize, family: GaussFamily) -> Result<GaussRule> {
    if q == 0 {
        return Err(Error::EmptyQuadrature);
    }
    let (diag, off, mu0): (Vec<f64>, Vec<f64>, f64) = match family {
        GaussFamily::Hermite => (
            vec![0.0; q],
            (1..q).map(|i| (i as f64 / 2.0).sqrt()).collect(),
            std::f64::consts::PI.sqrt(),
        ),
        GaussFamily::GeneralizedLaguerre { beta } => {
            if !(beta > -1.0 && beta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "Laguerre exponent must exceed -1, got {beta}"
                )));
            }
            (
                (0..q).map(|i| 2.0 * i as f64 + beta + 1.0).collect(),
                (1..q)
                    .map(|i| (i as f64 * (i as f64 + beta)).sqrt())
                    .collect(),
                gamma(beta + 1.0),
            )
        }
    };
    let mut jacobi = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        jacobi[(i, i)] = diag[i];
    }
    for i in 0..q - 1 {
        jacobi[(i, i + 1)] = off[i];
        jacobi[(i + 1, i)] = off[i];
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let GaussFamily::Hermite = family {
        // Enforce the exact symmetry of the Hermite rule.
        for i in 0..q / 2 {
            let j = q - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[j].1 + pairs[i].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if q % 2 == 1 {
            pairs[q / 2].0 = 0.0;
        }
    }
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}
