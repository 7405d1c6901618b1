//! Grid paths with running supremum and exit times.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ProcessModel, Simulator};
use crate::error::{Error, Result};
use crate::expr::norm;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub size: Vec<f64>,
}

/// Closed ball whose complement defines an exit time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    /// `X ∉ B(center, radius)` (open ball).
    pub fn outside(&self, x: &[f64]) -> bool {
        let d: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        d.sqrt() >= self.radius
    }
}

/// A path on the grid `t_k = k h`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `max_{s ≤ t_k} |X_s − x₀|` over grid times; a lower bound of the
    /// continuous-time supremum.
    pub running_sup: Vec<f64>,
    pub exit_radius: Option<f64>,
    /// First grid time with `|X − x₀| ≥ exit_radius`, `+∞` if none.
    pub exit_time: f64,
    pub jumps: Vec<JumpRecord>,
}

impl PathSample {
    /// Columns `t, X1..Xd, runsup, exited`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let d = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("X{i}")));
        header.push("runsup".into());
        header.push("exited".into());
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.states[k].iter().map(f64::to_string));
            row.push(self.running_sup[k].to_string());
            row.push(u8::from(*t >= self.exit_time).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn grid_steps(horizon: f64, step: f64) -> Result<usize> {
    if !(horizon > 0.0 && step > 0.0 && step <= horizon) {
        return Err(Error::contract(format!(
            "need 0 < step ≤ horizon, got step {step} and horizon {horizon}"
        )));
    }
    let n = (horizon / step).round();
    if (n * step - horizon).abs() > 1e-9 * horizon {
        return Err(Error::contract(format!("horizon {horizon} is not a multiple of the step {step}")));
    }
    Ok(n as usize)
}

impl Simulator {
    pub fn path<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        horizon: f64,
        step: f64,
        exit_radius: Option<f64>,
        rng: &mut R,
    ) -> Result<PathSample> {
        if x0.len() != self.dim() {
            return Err(Error::domain(format!("start must lie in ℝ^{}", self.dim())));
        }
        let n = grid_steps(horizon, step)?;
        let mut times = Vec::with_capacity(n + 1);
        let mut states = Vec::with_capacity(n + 1);
        let mut running_sup = Vec::with_capacity(n + 1);
        let mut jumps = Vec::new();
        let mut x = x0.to_vec();
        let mut sup = 0.0f64;
        let mut exit_time = f64::INFINITY;
        times.push(0.0);
        states.push(x.clone());
        running_sup.push(0.0);
        for k in 0..n {
            let t0 = k as f64 * step;
            self.step(&mut x, t0, step, rng, Some(&mut jumps))?;
            let t = (k + 1) as f64 * step;
            let dev: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
            sup = sup.max(norm(&dev));
            if let Some(r) = exit_radius {
                if exit_time.is_infinite() && sup >= r {
                    exit_time = t;
                }
            }
            times.push(t);
            states.push(x.clone());
            running_sup.push(sup);
        }
        Ok(PathSample {
            times,
            states,
            running_sup,
            exit_radius,
            exit_time,
            jumps,
        })
    }

    /// Runs `steps` grid steps over `[0, t]`, stopping at the first grid
    /// exit from `stop` when given. Avoids storing the path.
    pub fn run<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        t: f64,
        steps: usize,
        stop: Option<&Ball>,
        rng: &mut R,
    ) -> Result<Endpoint> {
        let h = t / steps as f64;
        let mut x = x0.to_vec();
        let mut sup2 = 0.0f64;
        for k in 0..steps {
            self.step(&mut x, k as f64 * h, h, rng, None)?;
            let dev: f64 = x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum();
            sup2 = sup2.max(dev);
            if let Some(ball) = stop {
                if ball.outside(&x) {
                    return Ok(Endpoint {
                        x,
                        sup: sup2.sqrt(),
                        exit_time: (k + 1) as f64 * h,
                    });
                }
            }
        }
        Ok(Endpoint {
            x,
            sup: sup2.sqrt(),
            exit_time: f64::INFINITY,
        })
    }
}

/// End state of a grid run.
#[derive(Clone, Debug, PartialEq)]
pub struct Endpoint {
    pub x: Vec<f64>,
    /// Grid supremum of `|X_s − x₀|`.
    pub sup: f64,
    pub exit_time: f64,
}

/// A single path of `model` from `x0` on the grid of step `step`.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &ProcessModel,
    x0: &[f64],
    horizon: f64,
    step: f64,
    exit_radius: Option<f64>,
    rng: &mut R,
) -> Result<PathSample> {
    grid_steps(horizon, step)?;
    model.compile()?.path(x0, horizon, step, exit_radius, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::measure::Atom;
    use crate::stats::SeedPolicy;
    use crate::symbol::{ExponentTerm, Symbol};

    fn cp() -> ProcessModel {
        ProcessModel::compound_poisson(
            vec![Atom {
                location: vec![1.0],
                weight: 2.0,
            }],
            None,
        )
    }

    #[test]
    fn sde_jumps_are_pushed_forward() {
        let m = ProcessModel::Sde {
            sigma: vec![vec![Expr::constant(2.0)]],
            driver: Box::new(cp()),
            sigma_bound: 2.0,
            sigma_lipschitz: 0.0,
        };
        let mut rng = SeedPolicy::new(3).rng(0);
        let p = simulate_path(&m, &[0.0], 5.0, 0.5, None, &mut rng).unwrap();
        assert!(!p.jumps.is_empty());
        assert!(p.jumps.iter().all(|j| j.size == vec![2.0]));
        let last = p.states.last().unwrap()[0];
        assert_eq!(last, 2.0 * p.jumps.len() as f64);
        for w in p.jumps.windows(2) {
            assert!(w[0].time <= w[1].time);
        }
    }

    #[test]
    fn variable_sde_uses_left_limits() {
        // σ(x) = 1 + x/10 bounded on the probe grid, driver jumps of size 1
        let m = ProcessModel::Sde {
            sigma: vec![vec![Expr::parse("1 + x/10").unwrap()]],
            driver: Box::new(cp()),
            sigma_bound: 1.8,
            sigma_lipschitz: 0.1,
        };
        let mut rng = SeedPolicy::new(4).rng(0);
        let p = simulate_path(&m, &[0.0], 2.0, 1.0, None, &mut rng).unwrap();
        let mut x = 0.0;
        for j in &p.jumps {
            assert!((j.size[0] - (1.0 + x / 10.0)).abs() < 1e-12);
            x += j.size[0];
        }
        assert!((p.states.last().unwrap()[0] - x).abs() < 1e-12);
    }

    #[test]
    fn zero_driver_is_constant() {
        let m = ProcessModel::Levy {
            symbol: Symbol::levy(2, vec![ExponentTerm::Drift { b: vec![0.0, 0.0] }]),
            small_jumps: Default::default(),
        };
        let mut rng = SeedPolicy::new(5).rng(0);
        let p = simulate_path(&m, &[1.0, -1.0], 1.0, 0.25, Some(0.1), &mut rng).unwrap();
        assert!(p.states.iter().all(|s| s == &vec![1.0, -1.0]));
        assert!(p.exit_time.is_infinite());
    }

    #[test]
    fn running_sup_and_exit_agree() {
        let m = ProcessModel::stable(1.5, 1);
        let mut rng = SeedPolicy::new(6).rng(0);
        for _ in 0..20 {
            let p = simulate_path(&m, &[0.0], 1.0, 1.0 / 64.0, Some(0.8), &mut rng).unwrap();
            for w in p.running_sup.windows(2) {
                assert!(w[1] >= w[0]);
            }
            assert!(*p.running_sup.last().unwrap() >= p.states.last().unwrap()[0].abs());
            let first = p.times.iter().zip(&p.running_sup).find(|(_, s)| **s >= 0.8).map(|(t, _)| *t);
            assert_eq!(first.unwrap_or(f64::INFINITY), p.exit_time);
        }
    }

    #[test]
    fn inconsistent_grids_are_contract_errors() {
        let m = ProcessModel::stable(1.0, 1);
        let mut rng = SeedPolicy::new(7).rng(0);
        assert!(matches!(
            simulate_path(&m, &[0.0], 1.0, 2.0, None, &mut rng),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            simulate_path(&m, &[0.0], 1.0, 0.3, None, &mut rng),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let m = ProcessModel::stable(1.0, 2);
        let mut rng = SeedPolicy::new(8).rng(0);
        let p = simulate_path(&m, &[0.0, 0.0], 1.0, 0.5, Some(1.0), &mut rng).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,X1,X2,runsup,exited\n"));
        assert_eq!(s.lines().count(), 4);
        assert!(!s.contains('\r'));
    }
}
