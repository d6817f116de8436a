//! Explicit time-marching solvers for the reach, reach-avoid and
//! maximum-tracking value functions.
//!
//! All solvers march a horizon `t` forward from the terminal condition with a
//! first-order Lax-Friedrichs scheme:
//!
//! ```text
//! phi~ = phi + dt * [ H(x, (D- + D+)/2) + sum_i alpha_i (D+_i - D-_i)/2 ]
//! ```
//!
//! followed by the solver-specific clamp. The dissipation term is a centered
//! second difference scaled by `alpha_i * dx_i / 2`, which keeps the explicit
//! update monotone under `dt <= cfl / sum_i (alpha_i / dx_i)`.
//!
//! The default [`Scheme::Upwind`] replaces the bracket with the model's upwind
//! numerical Hamiltonian, `opt_D opt_A sum_i [max(f_i,0) D+_i + min(f_i,0) D-_i]`.
//! It is monotone under the same step bound but only dissipates at the rate
//! `|f_i| dx_i / 2` of the optimal flow instead of the global bound `alpha_i`.
//! Lax-Friedrichs smears maximum-over-time values upward without bound on long
//! horizons (the viscous game keeps producing larger excursions), so the
//! upwind form is what lets the tracking solves settle.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::TimeField;
use crate::dynamics::GameModel;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, MAX_DIM};

/// Steps that would land within this many seconds of a stop are merged into it.
const TIME_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Upwind numerical Hamiltonian; falls back to Lax-Friedrichs for models
    /// without one.
    #[default]
    Upwind,
    LaxFriedrichs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Final horizon in seconds; `None` marches until convergence.
    pub horizon: Option<f64>,
    pub cfl: f64,
    /// Sup-norm change per second below which the solve counts as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Horizon spacing of snapshots for crossing-time extraction.
    pub snapshot_interval: Option<f64>,
    /// Stop marching as soon as the convergence test passes.
    pub stop_on_convergence: bool,
    #[serde(default)]
    pub scheme: Scheme,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            horizon: Some(20.0),
            cfl: 0.9,
            tolerance: 1e-3,
            max_iterations: 1_000_000,
            snapshot_interval: None,
            stop_on_convergence: true,
            scheme: Scheme::Upwind,
        }
    }
}

impl SolveConfig {
    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon: Some(horizon),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if let Some(t) = self.horizon {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig(format!("bad horizon {t}")));
            }
        }
        if let Some(s) = self.snapshot_interval {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("bad snapshot interval {s}")));
            }
        }
        if self.horizon.is_none() && !self.stop_on_convergence {
            return Err(Error::InvalidConfig(
                "an open-ended solve must stop on convergence".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ValueSolution {
    pub field: ScalarField,
    pub converged: bool,
    pub final_horizon: f64,
    /// Sup-norm change per second of every iteration.
    pub history: Vec<f64>,
    pub dt: f64,
    /// Earliest horizon at which each node is non-positive (reach solvers only).
    pub crossing: Option<TimeField>,
}

impl ValueSolution {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }
}

pub fn cfl_timestep(alpha: &[f64], spacing: &[f64], cfl: f64) -> Result<f64> {
    if alpha.len() != spacing.len() {
        return Err(Error::DimensionMismatch {
            expected: spacing.len(),
            got: alpha.len(),
        });
    }
    let mut rate = 0.0;
    for (&a, &dx) in alpha.iter().zip(spacing) {
        if !(dx > 0.0) {
            return Err(Error::InvalidConfig(format!("non-positive spacing {dx}")));
        }
        if !(a >= 0.0) {
            return Err(Error::InvalidConfig(format!("negative dissipation {a}")));
        }
        rate += a / dx;
    }
    let dt = cfl / rate;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "CFL condition gives unusable step {dt}"
        )));
    }
    Ok(dt)
}

/// Streaming crossing-time extraction from snapshots at increasing horizons.
pub struct TimeFieldBuilder {
    spec: GridSpec,
    prev_t: Option<f64>,
    prev: Vec<f64>,
    times: Vec<f64>,
}

impl TimeFieldBuilder {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.len();
        Self {
            spec,
            prev_t: None,
            prev: Vec::new(),
            times: vec![f64::INFINITY; n],
        }
    }

    pub fn push(&mut self, t: f64, field: &ScalarField) -> Result<()> {
        if field.spec() != &self.spec {
            return Err(Error::GridMismatch);
        }
        let values = field.values();
        match self.prev_t {
            None => {
                for (time, &v) in self.times.iter_mut().zip(values) {
                    if v <= 0.0 {
                        *time = t;
                    }
                }
            }
            Some(t0) => {
                if !(t > t0) {
                    return Err(Error::UnorderedSnapshots);
                }
                let span = t - t0;
                self.times
                    .par_iter_mut()
                    .zip(values.par_iter().zip(self.prev.par_iter()))
                    .for_each(|(time, (&v, &vp))| {
                        if time.is_infinite() && v <= 0.0 {
                            // vp > 0 here, otherwise the node would already be set
                            *time = t0 + span * vp / (vp - v);
                        }
                    });
            }
        }
        self.prev_t = Some(t);
        self.prev.clear();
        self.prev.extend_from_slice(values);
        Ok(())
    }

    pub fn finish(self) -> Result<TimeField> {
        TimeField::new(ScalarField::new(self.spec, self.times)?)
    }
}

/// Crossing times from `(horizon, field)` snapshots ordered by horizon.
pub fn extract_time_field(snapshots: &[(f64, &ScalarField)]) -> Result<TimeField> {
    let Some((_, first)) = snapshots.first() else {
        return Err(Error::InvalidConfig("no snapshots given".into()));
    };
    let mut builder = TimeFieldBuilder::new(first.spec().clone());
    for &(t, f) in snapshots {
        builder.push(t, f)?;
    }
    builder.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Clamp {
    /// `phi <- min(phi~, l)`
    Reach,
    /// `phi <- max(min(phi~, l), g)`
    ReachAvoid,
    /// `V <- max(V~, l, V_prev)`
    MaxTracking,
}

impl Clamp {
    fn name(self) -> &'static str {
        match self {
            Clamp::Reach => "reach",
            Clamp::ReachAvoid => "reach_avoid",
            Clamp::MaxTracking => "max_tracking",
        }
    }
}

struct StepInputs<'a, M: ?Sized> {
    model: &'a M,
    grid: &'a GridSpec,
    alpha: &'a [f64],
    coords: &'a [Vec<f64>],
    l: &'a [f64],
    g: Option<&'a [f64]>,
    clamp: Clamp,
    upwind: bool,
}

#[derive(Clone, Copy)]
struct StepStats {
    sup: f64,
    bad: Option<usize>,
}

impl StepStats {
    fn merge(a: StepStats, b: StepStats) -> StepStats {
        StepStats {
            sup: a.sup.max(b.sup),
            bad: match (a.bad, b.bad) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, None) => x,
                (None, y) => y,
            },
        }
    }
}

fn lf_step<const N: usize, M: GameModel + ?Sized>(
    s: &StepInputs<'_, M>,
    phi: &[f64],
    out: &mut [f64],
    dt: f64,
) -> StepStats {
    let grid = s.grid;
    let mut counts = [0usize; N];
    let mut strides = [0usize; N];
    let mut inv_dx = [0.0; N];
    let mut alpha = [0.0; N];
    for k in 0..N {
        counts[k] = grid.count(k);
        strides[k] = grid.strides()[k];
        inv_dx[k] = 1.0 / grid.spacing()[k];
        alpha[k] = s.alpha[k];
    }
    let row_len = counts[N - 1];
    let last = &s.coords[N - 1];

    out.par_chunks_mut(row_len)
        .enumerate()
        .map(|(r, row_out)| {
            let base = r * row_len;
            let mut idx = [0usize; N];
            let mut rem = r;
            for k in (0..N - 1).rev() {
                idx[k] = rem % counts[k];
                rem /= counts[k];
            }
            let mut x = [0.0; N];
            for k in 0..N - 1 {
                x[k] = s.coords[k][idx[k]];
            }
            let mut stats = StepStats { sup: 0.0, bad: None };
            let mut p = [0.0; N];
            let mut dms = [0.0; N];
            let mut dps = [0.0; N];
            for (j, slot) in row_out.iter_mut().enumerate() {
                let i = base + j;
                let c = phi[i];
                idx[N - 1] = j;
                x[N - 1] = last[j];
                let mut diss = 0.0;
                for k in 0..N {
                    let st = strides[k];
                    // Edge ghosts repeat the edge value.
                    let (dm, dp) = if idx[k] == 0 {
                        (0.0, (phi[i + st] - c) * inv_dx[k])
                    } else if idx[k] + 1 == counts[k] {
                        ((c - phi[i - st]) * inv_dx[k], 0.0)
                    } else {
                        ((c - phi[i - st]) * inv_dx[k], (phi[i + st] - c) * inv_dx[k])
                    };
                    p[k] = 0.5 * (dm + dp);
                    dms[k] = dm;
                    dps[k] = dp;
                    diss += alpha[k] * 0.5 * (dp - dm);
                }
                let h = if s.upwind {
                    s.model
                        .upwind_hamiltonian(&x, &dms, &dps)
                        .expect("model provides an upwind Hamiltonian")
                } else {
                    s.model.hamiltonian(&x, &p) + diss
                };
                let tilde = c + dt * h;
                let v = match s.clamp {
                    Clamp::Reach => tilde.min(s.l[i]),
                    Clamp::ReachAvoid => {
                        tilde.min(s.l[i]).max(s.g.expect("obstacle field")[i])
                    }
                    Clamp::MaxTracking => tilde.max(s.l[i]).max(c),
                };
                if !v.is_finite() && stats.bad.is_none() {
                    stats.bad = Some(i);
                }
                stats.sup = stats.sup.max((v - c).abs());
                *slot = v;
            }
            stats
        })
        .reduce(
            || StepStats { sup: 0.0, bad: None },
            StepStats::merge,
        )
}

fn dispatch<M: GameModel + ?Sized>(
    s: &StepInputs<'_, M>,
    phi: &[f64],
    out: &mut [f64],
    dt: f64,
) -> StepStats {
    match s.grid.ndim() {
        1 => lf_step::<1, M>(s, phi, out, dt),
        2 => lf_step::<2, M>(s, phi, out, dt),
        3 => lf_step::<3, M>(s, phi, out, dt),
        4 => lf_step::<4, M>(s, phi, out, dt),
        5 => lf_step::<5, M>(s, phi, out, dt),
        6 => lf_step::<6, M>(s, phi, out, dt),
        7 => lf_step::<7, M>(s, phi, out, dt),
        8 => lf_step::<8, M>(s, phi, out, dt),
        n => unreachable!("grid dimension {n} exceeds {MAX_DIM}"),
    }
}

fn march<M: GameModel + ?Sized>(
    model: &M,
    l: &ScalarField,
    g: Option<&ScalarField>,
    clamp: Clamp,
    cfg: &SolveConfig,
) -> Result<ValueSolution> {
    cfg.validate()?;
    let grid = l.spec();
    if grid.ndim() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim(),
            got: grid.ndim(),
        });
    }
    if let Some(g) = g {
        if g.spec() != grid {
            return Err(Error::GridMismatch);
        }
    }
    if !l.all_finite() || g.is_some_and(|g| !g.all_finite()) {
        return Err(Error::InvalidConfig("cost fields must be finite".into()));
    }
    if clamp == Clamp::MaxTracking && l.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidConfig(
            "tracking cost must be non-negative".into(),
        ));
    }
    let alpha = model.dissipation_bounds(grid);
    let dt = cfl_timestep(&alpha, grid.spacing(), cfg.cfl)?;
    let coords: Vec<Vec<f64>> = (0..grid.ndim())
        .map(|k| (0..grid.count(k)).map(|i| grid.coord(k, i)).collect())
        .collect();

    let mut phi = match (clamp, g) {
        (Clamp::ReachAvoid, Some(g)) => l
            .values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| a.max(*b))
            .collect(),
        (Clamp::ReachAvoid, None) => {
            return Err(Error::InvalidConfig("reach-avoid needs an obstacle field".into()))
        }
        _ => l.values().to_vec(),
    };
    let mut next = vec![0.0; phi.len()];
    let inputs = StepInputs {
        model,
        grid,
        alpha: &alpha,
        coords: &coords,
        l: l.values(),
        g: g.map(|g| g.values()),
        clamp,
        upwind: cfg.scheme == Scheme::Upwind && {
            let probe = vec![0.0; grid.ndim()];
            model.upwind_hamiltonian(&probe, &probe, &probe).is_some()
        },
    };

    let track_crossing = cfg.snapshot_interval.is_some() && clamp != Clamp::MaxTracking;
    let mut builder = track_crossing.then(|| TimeFieldBuilder::new(grid.clone()));
    let snapshot_field = |t: f64, values: &[f64], b: &mut Option<TimeFieldBuilder>| {
        if let Some(b) = b.as_mut() {
            let f = ScalarField::new(grid.clone(), values.to_vec())?;
            b.push(t, &f)?;
        }
        Ok::<(), Error>(())
    };
    snapshot_field(0.0, &phi, &mut builder)?;

    let horizon = cfg.horizon.unwrap_or(f64::INFINITY);
    let mut next_snapshot = cfg.snapshot_interval.unwrap_or(f64::INFINITY);
    let mut t = 0.0;
    let mut history = Vec::new();
    let mut converged = false;
    let start = Instant::now();
    log::info!(
        "{{\"solver\":\"{}\",\"model\":\"{}\",\"nodes\":{},\"dt\":{dt:.6e},\"horizon\":{}}}",
        clamp.name(),
        model.id(),
        grid.len(),
        cfg.horizon.map_or("null".to_string(), |h| h.to_string()),
    );
    while t < horizon - TIME_EPS && history.len() < cfg.max_iterations {
        let stop = horizon.min(next_snapshot);
        let mut h = dt;
        if t + h >= stop - TIME_EPS {
            h = stop - t;
        }
        let stats = dispatch(&inputs, &phi, &mut next, h);
        if let Some(node) = stats.bad {
            return Err(Error::NonFiniteValue {
                node,
                iteration: history.len() + 1,
            });
        }
        std::mem::swap(&mut phi, &mut next);
        t = if t + h >= stop - TIME_EPS { stop } else { t + h };
        let rate = stats.sup / h;
        history.push(rate);
        converged = rate <= cfg.tolerance;
        let iter = history.len();
        let line = format!(
            "{{\"iter\":{iter},\"horizon\":{t:.6},\"sup_change\":{rate:.6e},\"wall_ms\":{}}}",
            start.elapsed().as_millis()
        );
        if iter % 100 == 0 {
            log::info!("{line}");
        } else {
            log::debug!("{line}");
        }
        if t >= next_snapshot - TIME_EPS {
            snapshot_field(t, &phi, &mut builder)?;
            next_snapshot = t + cfg.snapshot_interval.unwrap_or(f64::INFINITY);
        }
        if converged && cfg.stop_on_convergence {
            break;
        }
    }
    if !converged && cfg.horizon.is_none() {
        log::warn!("open-ended solve hit the iteration cap without converging");
    }
    // Snapshot the final state when it did not fall on the cadence.
    if let Some(b) = builder.as_ref() {
        if b.prev_t.is_some_and(|pt| pt < t) {
            snapshot_field(t, &phi, &mut builder)?;
        }
    }
    log::info!(
        "{{\"solver\":\"{}\",\"done\":true,\"iter\":{},\"horizon\":{t:.6},\"converged\":{converged},\"wall_ms\":{}}}",
        clamp.name(),
        history.len(),
        start.elapsed().as_millis()
    );
    Ok(ValueSolution {
        field: ScalarField::new(grid.clone(), phi)?,
        converged,
        final_horizon: t,
        history,
        dt,
        crossing: builder.map(|b| b.finish()).transpose()?,
    })
}

pub fn solve_reach_avoid<M: GameModel + ?Sized>(
    model: &M,
    l: &ScalarField,
    g: &ScalarField,
    cfg: &SolveConfig,
) -> Result<ValueSolution> {
    march(model, l, Some(g), Clamp::ReachAvoid, cfg)
}

pub fn solve_reach<M: GameModel + ?Sized>(
    model: &M,
    l: &ScalarField,
    cfg: &SolveConfig,
) -> Result<ValueSolution> {
    march(model, l, None, Clamp::Reach, cfg)
}

pub fn solve_max_tracking<M: GameModel + ?Sized>(
    model: &M,
    l: &ScalarField,
    cfg: &SolveConfig,
) -> Result<ValueSolution> {
    march(model, l, None, Clamp::MaxTracking, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DynamicsModel, ModelKind};
    use crate::geometry::{build_attacker_reach_costs, build_tracking_cost_z, ImplicitSet, Scenario};

    #[test]
    fn cfl_examples() {
        assert_eq!(cfl_timestep(&[1.0, 1.0], &[1.0, 1.0], 0.5).unwrap(), 0.25);
        let a = cfl_timestep(&[2.0, 3.0], &[0.1, 0.2], 0.8).unwrap();
        let b = cfl_timestep(&[4.0, 6.0], &[0.1, 0.2], 0.8).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        let dt = cfl_timestep(&[6.0, 12.0, 2.0], &[0.084, 0.08, 0.084], 1.0).unwrap();
        assert!((1.0 / dt - 245.24).abs() < 0.05);
        assert!(cfl_timestep(&[1.0], &[0.0], 0.5).is_err());
        assert!(cfl_timestep(&[0.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SolveConfig::default();
        c.cfl = 1.5;
        assert!(c.validate().is_err());
        c.cfl = 0.5;
        c.tolerance = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn time_field_extraction() {
        let spec = GridSpec::from_triples(&[(3, 0.0, 2.0)]).unwrap();
        let f0 = ScalarField::new(spec.clone(), vec![-1.0, 1.0, 1.0]).unwrap();
        let f1 = ScalarField::new(spec.clone(), vec![-1.0, -1.0, 1.0]).unwrap();
        let tf = extract_time_field(&[(0.0, &f0), (1.0, &f1)]).unwrap();
        assert_eq!(tf.values(), &[0.0, 0.5, f64::INFINITY]);
        assert!(matches!(
            extract_time_field(&[(1.0, &f0), (0.5, &f1)]),
            Err(Error::UnorderedSnapshots)
        ));
    }

    #[test]
    fn zero_horizon_tracking_returns_cost() {
        let s = Scenario::reference();
        let grid = GridSpec::from_triples(&[(21, -10.0, 10.0), (11, -4.0, 4.0)]).unwrap();
        let l = build_tracking_cost_z(&grid).unwrap();
        let m = DynamicsModel::from_scenario(ModelKind::RelVertical2d, &s);
        let sol = solve_max_tracking(&m, &l, &SolveConfig::with_horizon(0.0)).unwrap();
        assert_eq!(sol.field, l);
        assert_eq!(sol.iterations(), 0);
    }

    #[test]
    fn eikonal_reach_matches_distance() {
        let mut s = Scenario::reference();
        s.obstacles.clear();
        s.target = ImplicitSet::halfspace(vec![1.0, 0.0], 3.0);
        let grid = GridSpec::from_triples(&[(66, -20.0, 45.0), (26, 0.0, 25.0)]).unwrap();
        let (l, _) = build_attacker_reach_costs(&s, &grid).unwrap();
        let m = DynamicsModel::from_scenario(ModelKind::AttackerReach2d, &s);
        let cfg = SolveConfig {
            horizon: Some(20.0),
            snapshot_interval: Some(0.1),
            ..SolveConfig::default()
        };
        let sol = solve_reach(&m, &l, &cfg).unwrap();
        let tf = sol.crossing.unwrap();
        for (i, &t) in tf.values().iter().enumerate() {
            let mut p = [0.0; 2];
            grid.node_point(i, &mut p);
            let expect = (p[0] - 3.0).max(0.0) / 3.0;
            assert!((t - expect).abs() <= 1.0 / 3.0 + 0.1, "{p:?}: {t} vs {expect}");
        }
    }
}
