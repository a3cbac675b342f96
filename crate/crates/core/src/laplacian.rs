//! Matrix-free graph Laplacians.
//!
//! * unnormalized: `L = S - W`
//! * normalized:   `L_N = I - S^{-1/2} W S^{-1/2}`

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::{connected_components, strengths, Components, GraphError, StrengthProfile, WeightedGraph};
use crate::operator::SymmetricOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Unnormalized,
    Normalized,
}

impl Variant {
    /// Constant that bounds the spectrum and drives spectral inflation:
    /// the total strength `s` or `2`.
    pub fn inflation_shift(self, total_strength: f64) -> f64 {
        match self {
            Variant::Unnormalized => total_strength,
            Variant::Normalized => 2.0,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Unnormalized => "unnormalized",
            Variant::Normalized => "normalized",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unnormalized" => Ok(Variant::Unnormalized),
            "normalized" => Ok(Variant::Normalized),
            other => Err(format!("unknown Laplacian variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LaplacianOperator {
    variant: Variant,
    graph: Arc<WeightedGraph>,
    strengths: StrengthProfile,
    components: Components,
    inv_sqrt_strength: Vec<f64>,
}

impl LaplacianOperator {
    pub fn new(graph: impl Into<Arc<WeightedGraph>>, variant: Variant) -> Result<Self, GraphError> {
        let graph = graph.into();
        let sp = strengths(&graph);
        let inv_sqrt_strength = match variant {
            Variant::Unnormalized => Vec::new(),
            Variant::Normalized => {
                if let Some(v) = sp.strengths.iter().position(|&s| s <= 0.0) {
                    return Err(GraphError::ZeroStrengthNode(v));
                }
                sp.strengths.iter().map(|s| 1.0 / s.sqrt()).collect()
            }
        };
        let components = connected_components(&graph);
        Ok(LaplacianOperator {
            variant,
            graph,
            strengths: sp,
            components,
            inv_sqrt_strength,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<WeightedGraph> {
        Arc::clone(&self.graph)
    }

    pub fn strengths(&self) -> &StrengthProfile {
        &self.strengths
    }

    /// Total strength `s`.
    pub fn total_strength(&self) -> f64 {
        self.strengths.total
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    /// `s` for the unnormalized Laplacian, `2` for the normalized one.
    pub fn inflation_shift(&self) -> f64 {
        self.variant.inflation_shift(self.strengths.total)
    }

    /// Sum of the diagonal: `s` (unnormalized) or `n` (normalized).
    pub fn trace(&self) -> f64 {
        match self.variant {
            Variant::Unnormalized => self.strengths.strengths.iter().sum(),
            Variant::Normalized => self.graph.n() as f64,
        }
    }

    /// Vector spanning the null space of the connected operator, not normalized:
    /// all ones, or `sqrt(s_i)` for the normalized variant.
    pub fn null_vector(&self) -> Vec<f64> {
        match self.variant {
            Variant::Unnormalized => vec![1.0; self.graph.n()],
            Variant::Normalized => self.strengths.strengths.iter().map(|s| s.sqrt()).collect(),
        }
    }
}

/// Sum of the Laplacian's diagonal entries.
pub fn trace_of_laplacian(op: &LaplacianOperator) -> f64 {
    op.trace()
}

impl SymmetricOperator for LaplacianOperator {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let g = &*self.graph;
        match self.variant {
            Variant::Unnormalized => {
                for (v, yv) in y.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (u, w) in g.neighbors(v) {
                        acc += w * (x[v] - x[u]);
                    }
                    *yv = acc;
                }
            }
            Variant::Normalized => {
                let d = &self.inv_sqrt_strength;
                for (v, yv) in y.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (u, w) in g.neighbors(v) {
                        acc += w * d[u] * x[u];
                    }
                    *yv = x[v] - d[v] * acc;
                }
            }
        }
    }
}
