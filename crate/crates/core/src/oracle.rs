//! Brute-force discrete-game value iteration for cross-checking the grid
//! solvers on small problems.
//!
//! Each iteration advects every node by `dt * f(x, u_D, u_A)` for all pairs of
//! discretized controls and interpolates the previous iterate there. The
//! interpolation is implemented here on purpose rather than shared with the
//! grid module; outside the box it extrapolates linearly from the edge cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::TimeField;
use crate::dynamics::{ControlSet, GameModel, Optimizer, Player};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::hji::{cfl_timestep, SolveConfig, TimeFieldBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Boundary angles of a disk control set; the centre is added.
    pub disk_angles: usize,
    /// Evenly spaced points across an interval control set, endpoints included.
    pub interval_points: usize,
    /// Step in seconds; `None` picks half the grid solver's CFL step.
    pub dt: Option<f64>,
    pub horizon: f64,
    /// Stop early once the sup-norm change per second falls below this.
    pub tolerance: Option<f64>,
    pub node_cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            disk_angles: 37,
            interval_points: 11,
            dt: None,
            horizon: 5.0,
            tolerance: None,
            node_cap: 100_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub field: ScalarField,
    pub dt: f64,
    pub steps: usize,
    pub final_horizon: f64,
    /// Earliest horizon at which each node's value is non-positive.
    pub crossing: TimeField,
}

pub fn control_samples(set: ControlSet, cfg: &OracleConfig) -> Vec<[f64; 2]> {
    match set {
        ControlSet::None => vec![[0.0, 0.0]],
        ControlSet::Interval(b) => {
            let n = cfg.interval_points.max(2);
            (0..n)
                .map(|i| [-b + 2.0 * b * i as f64 / (n - 1) as f64, 0.0])
                .collect()
        }
        ControlSet::Disk(r) => {
            let n = cfg.disk_angles.max(3);
            let mut v = vec![[0.0, 0.0]];
            v.extend((0..n).map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                [r * a.cos(), r * a.sin()]
            }));
            v
        }
    }
}

/// Multilinear interpolation with linear extrapolation beyond the box.
fn sample(grid: &GridSpec, values: &[f64], x: &[f64]) -> f64 {
    let d = grid.ndim();
    let mut base = 0usize;
    let mut frac = [0.0; 8];
    let mut strides = [0usize; 8];
    let mut stride = 1usize;
    for k in (0..d).rev() {
        let a = grid.axis(k);
        let h = (a.max - a.min) / (a.count - 1) as f64;
        let s = (x[k] - a.min) / h;
        let i = (s.floor().max(0.0) as usize).min(a.count - 2);
        frac[k] = s - i as f64;
        base += i * stride;
        strides[k] = stride;
        stride *= a.count;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut flat = base;
        for k in 0..d {
            if corner >> k & 1 == 1 {
                w *= frac[k];
                flat += strides[k];
            } else {
                w *= 1.0 - frac[k];
            }
        }
        acc += w * values[flat];
    }
    acc
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Reach,
    MaxTracking,
}

fn iterate<M: GameModel + ?Sized>(
    model: &M,
    l: &ScalarField,
    cfg: &OracleConfig,
    mode: Mode,
) -> Result<OracleSolution> {
    let grid = l.spec();
    if grid.len() > cfg.node_cap {
        return Err(Error::NodeCapExceeded {
            nodes: grid.len(),
            cap: cfg.node_cap,
        });
    }
    if grid.ndim() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim(),
            got: grid.ndim(),
        });
    }
    if !(cfg.horizon >= 0.0 && cfg.horizon.is_finite()) {
        return Err(Error::InvalidConfig(format!("bad horizon {}", cfg.horizon)));
    }
    let dt = match cfg.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::InvalidConfig(format!("bad oracle dt {dt}"))),
        None => {
            let alpha = model.dissipation_bounds(grid);
            0.5 * cfl_timestep(&alpha, grid.spacing(), SolveConfig::default().cfl)?
        }
    };
    let ud = control_samples(model.control_set(Player::Defender), cfg);
    let ua = control_samples(model.control_set(Player::Attacker), cfg);
    let (role_d, role_a) = (model.role(Player::Defender), model.role(Player::Attacker));
    let arity_d = model.control_set(Player::Defender).arity();
    let arity_a = model.control_set(Player::Attacker).arity();
    let n = grid.ndim();
    let lv = l.values();

    let mut v = lv.to_vec();
    let mut builder = TimeFieldBuilder::new(grid.clone());
    builder.push(0.0, l)?;
    let mut t = 0.0;
    let mut steps = 0;
    while t < cfg.horizon - 1e-9 {
        let h = dt.min(cfg.horizon - t);
        let prev = &v;
        let next: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map_init(
                || (vec![0.0; n], vec![0.0; n], vec![0.0; n]),
                |(x, f, y), i| {
                    grid.node_point(i, x);
                    let mut outer = role_d.worst();
                    for u_d in &ud {
                        let mut inner = role_a.worst();
                        for u_a in &ua {
                            model.flow_into(x, &u_d[..arity_d], &u_a[..arity_a], f);
                            for k in 0..n {
                                y[k] = x[k] + h * f[k];
                            }
                            inner = role_a.better(inner, sample(grid, prev, y));
                        }
                        outer = role_d.better(outer, inner);
                    }
                    match mode {
                        Mode::Reach => outer.min(lv[i]),
                        Mode::MaxTracking => outer.max(lv[i]),
                    }
                },
            )
            .collect();
        let change = next
            .iter()
            .zip(prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        t += h;
        steps += 1;
        builder.push(t, &ScalarField::new(grid.clone(), v.clone())?)?;
        if cfg.tolerance.is_some_and(|tol| change / h <= tol) {
            break;
        }
    }
    Ok(OracleSolution {
        field: ScalarField::new(grid.clone(), v)?,
        dt,
        steps,
        final_horizon: t,
        crossing: builder.finish()?,
    })
}

/// `V_{k+1}(x) = min(l(x), opt_D opt_A V_k(x + dt f))`, defender outermost.
pub fn oracle_solve_reach<M: GameModel + ?Sized>(
    model: &M,
    l: &ScalarField,
    cfg: &OracleConfig,
) -> Result<OracleSolution> {
    iterate(model, l, cfg, Mode::Reach)
}

/// `V_{k+1}(x) = max(l(x), min_D max_A V_k(x + dt f))` for tracking models.
pub fn oracle_solve_max_tracking<M: GameModel + ?Sized>(
    model: &M,
    l: &ScalarField,
    cfg: &OracleConfig,
) -> Result<OracleSolution> {
    if model.role(Player::Defender) != Optimizer::Min {
        return Err(Error::InvalidConfig(
            "max-tracking needs a minimizing defender".into(),
        ));
    }
    iterate(model, l, cfg, Mode::MaxTracking)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolates_linear_fields_exactly() {
        let grid = GridSpec::from_triples(&[(4, 0.0, 3.0), (3, -1.0, 1.0)]).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |p| 2.0 * p[0] - p[1] + 0.5);
        for x in [[1.3, 0.2], [-0.5, 0.0], [3.7, 1.5], [0.0, -1.0]] {
            let v = sample(&grid, f.values(), &x);
            assert!((v - (2.0 * x[0] - x[1] + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn control_sampling() {
        let cfg = OracleConfig::default();
        let d = control_samples(ControlSet::Disk(6.0), &cfg);
        assert_eq!(d.len(), 38);
        assert!(d.iter().all(|u| u[0].hypot(u[1]) <= 6.0 + 1e-12));
        let i = control_samples(ControlSet::Interval(4.0), &cfg);
        assert_eq!(i.len(), 11);
        assert_eq!(i[0][0], -4.0);
        assert_eq!(i[10][0], 4.0);
        assert_eq!(i[5][0], 0.0);
    }

    #[test]
    fn node_cap_is_enforced() {
        use crate::dynamics::{DynamicsModel, ModelKind};
        use crate::geometry::Scenario;
        let grid = GridSpec::from_triples(&[(400, 0.0, 1.0), (400, 0.0, 1.0)]).unwrap();
        let l = ScalarField::constant(grid, 1.0);
        let m = DynamicsModel::from_scenario(ModelKind::AttackerReach2d, &Scenario::reference());
        assert!(matches!(
            oracle_solve_reach(&m, &l, &OracleConfig::default()),
            Err(Error::NodeCapExceeded { .. })
        ));
    }
}
