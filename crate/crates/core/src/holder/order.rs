use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{norm, Expr};

/// Shape of `α(x)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OrderSpec {
    Constant { value: f64 },
    /// `base + amplitude·sin(frequency·x₁ + phase)`
    Sine {
        base: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Arbitrary expression; its modulus of continuity is only sampled.
    Expr { expr: Expr },
}

/// A variable order `α: ℝᵈ → (0, 2]` with the absolute gap `ε`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableOrderFn {
    pub order: OrderSpec,
    #[serde(default = "default_gap")]
    pub eps_gap: f64,
}

pub const DEFAULT_GAP: f64 = 0.05;

fn default_gap() -> f64 {
    DEFAULT_GAP
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderCheck {
    pub inf: f64,
    pub sup: f64,
    /// Largest `|α(x) − α(z)| / |x − z|` over neighbouring grid states.
    pub sampled_lipschitz: f64,
    /// Analytic Lipschitz constant when the shape provides one.
    pub lipschitz: Option<f64>,
    /// Continuity is only sampled (expression orders).
    pub heuristic: bool,
    pub pass: bool,
}

impl VariableOrderFn {
    pub fn constant(value: f64) -> Self {
        VariableOrderFn {
            order: OrderSpec::Constant { value },
            eps_gap: DEFAULT_GAP,
        }
    }

    pub fn sine(base: f64, amplitude: f64, frequency: f64) -> Self {
        VariableOrderFn {
            order: OrderSpec::Sine {
                base,
                amplitude,
                frequency,
                phase: 0.0,
            },
            eps_gap: DEFAULT_GAP,
        }
    }

    pub fn from_expr(expr: Expr) -> Self {
        match expr.as_constant() {
            Some(value) => VariableOrderFn::constant(value),
            None => VariableOrderFn {
                order: OrderSpec::Expr { expr },
                eps_gap: DEFAULT_GAP,
            },
        }
    }

    pub fn with_gap(mut self, eps: f64) -> Self {
        self.eps_gap = eps;
        self
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        match &self.order {
            OrderSpec::Constant { value } => *value,
            OrderSpec::Sine {
                base,
                amplitude,
                frequency,
                phase,
            } => base + amplitude * (frequency * x.first().copied().unwrap_or(0.0) + phase).sin(),
            OrderSpec::Expr { expr } => expr.eval(x),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match &self.order {
            OrderSpec::Constant { value } => Some(*value),
            OrderSpec::Expr { expr } => expr.as_constant(),
            OrderSpec::Sine { amplitude, base, .. } if *amplitude == 0.0 => Some(*base),
            OrderSpec::Sine { .. } => None,
        }
    }

    pub fn lipschitz(&self) -> Option<f64> {
        match &self.order {
            OrderSpec::Constant { .. } => Some(0.0),
            OrderSpec::Sine {
                amplitude, frequency, ..
            } => Some((amplitude * frequency).abs()),
            OrderSpec::Expr { .. } => None,
        }
    }

    /// Range `(0, 2]` and continuity on a probe grid.
    pub fn check(&self, grid: &[Vec<f64>]) -> Result<OrderCheck> {
        if !(self.eps_gap > 0.0) {
            return Err(Error::domain(format!("ε_gap must be positive, got {}", self.eps_gap)));
        }
        if grid.is_empty() {
            return Err(Error::precondition("probe grid is empty"));
        }
        let vals: Vec<f64> = grid.iter().map(|x| self.at(x)).collect();
        let inf = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let sup = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sampled: f64 = 0.0;
        for i in 0..grid.len() {
            // nearest neighbour of each state
            let mut best: Option<(f64, usize)> = None;
            for j in 0..grid.len() {
                if i == j {
                    continue;
                }
                let dist = norm(&grid[i].iter().zip(&grid[j]).map(|(a, b)| a - b).collect::<Vec<_>>());
                if dist > 0.0 && best.is_none_or(|(b, _)| dist < b) {
                    best = Some((dist, j));
                }
            }
            if let Some((dist, j)) = best {
                sampled = sampled.max((vals[i] - vals[j]).abs() / dist);
            }
        }
        let lipschitz = self.lipschitz();
        let heuristic = lipschitz.is_none();
        let range_ok = inf > 0.0 && sup <= 2.0 && vals.iter().all(|v| v.is_finite());
        let cont_ok = lipschitz.is_none_or(|l| sampled <= l * (1.0 + 1e-9) + 1e-12);
        Ok(OrderCheck {
            inf,
            sup,
            sampled_lipschitz: sampled,
            lipschitz,
            heuristic,
            pass: range_ok && cont_ok,
        })
    }
}
