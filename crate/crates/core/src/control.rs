//! Reach-Track defender policies, attacker policies and the deep-inside
//! performant tracker.

use serde::{Deserialize, Serialize};

use crate::analysis::{membership, recenter_vertical, GameArtifacts, Side, SubGame};
use crate::dynamics::{ControlCommand, ControlSet, DynamicsModel, GameModel, JointState, ModelKind, Player};
use crate::error::{Error, Result};
use crate::geometry::Scenario;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Width of the vertical boundary band: tracking is "deep" once `V_z <= d_z - eps`.
    pub eps: f64,
    /// Horizontal counterpart of `eps`.
    pub eps_track: f64,
    /// Position gains (1/s) of the performant tracker for `(x, y, z)`.
    pub kp: [f64; 3],
    /// Feed-forward gain on the attacker velocity estimate.
    pub kv: f64,
    /// Extra margin a tracking mode must be overshot by before it is left.
    pub hysteresis: f64,
    /// Safety margin on the game-value membership tests.
    pub delta: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            eps: 0.2,
            eps_track: 0.3,
            kp: [1.0, 1.0, 2.0],
            kv: 1.0,
            hysteresis: 0.05,
            delta: 0.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps_track > 0.0) {
            return Err(Error::InvalidConfig("eps and eps_track must be positive".into()));
        }
        if !(self.hysteresis >= 0.0) {
            return Err(Error::InvalidConfig("hysteresis must be non-negative".into()));
        }
        if self.kp.iter().any(|k| !(*k >= 0.0)) || !(self.kv >= 0.0) {
            return Err(Error::InvalidConfig("tracker gains must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    Reach,
    TrackBoundary,
    TrackDeep,
    OutsideWinningRegion,
}

impl PolicyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyMode::Reach => "reach",
            PolicyMode::TrackBoundary => "track_boundary",
            PolicyMode::TrackDeep => "track_deep",
            PolicyMode::OutsideWinningRegion => "outside_winning_region",
        }
    }

    fn tracking(self) -> bool {
        matches!(self, PolicyMode::TrackBoundary | PolicyMode::TrackDeep)
    }
}

/// Band selection for a tracking value `r` against capture distance `d`.
///
/// Without history the bands are `r > d` (reach), `d - eps < r <= d`
/// (boundary) and `r <= d - eps` (deep). A tracking mode is only left once
/// `r` exceeds its entry threshold by `hysteresis`.
pub fn select_mode(prev: Option<PolicyMode>, r: f64, d: f64, eps: f64, hysteresis: f64) -> PolicyMode {
    let was_tracking = prev.is_some_and(PolicyMode::tracking);
    let was_deep = prev == Some(PolicyMode::TrackDeep);
    let track_limit = if was_tracking { d + hysteresis } else { d };
    let deep_limit = if was_deep { d - eps + hysteresis } else { d - eps };
    if r > track_limit {
        PolicyMode::Reach
    } else if r <= deep_limit {
        PolicyMode::TrackDeep
    } else {
        PolicyMode::TrackBoundary
    }
}

/// `kv * v_A - kp * rel`, clipped into `set`.
pub fn performant_tracker(rel: &[f64], attacker_velocity: &[f64], kp: &[f64], kv: f64, set: ControlSet) -> ControlCommand {
    let raw = |i: usize| kv * attacker_velocity[i] - kp[i] * rel[i];
    let u = match set {
        ControlSet::None => ControlCommand::none(),
        ControlSet::Interval(_) => ControlCommand::scalar(raw(0)),
        ControlSet::Disk(_) => ControlCommand::planar(raw(0), raw(1)),
    };
    set.clip(u)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision<U> {
    pub command: U,
    pub mode: PolicyMode,
    /// Tracking value consulted for the mode decision.
    pub tracking_value: f64,
    /// Whether any field query was clamped to its grid.
    pub clamped: bool,
}

fn model(kind: ModelKind, art: &GameArtifacts) -> DynamicsModel {
    DynamicsModel::from_scenario(kind, &art.scenario)
}

/// Vertical Reach-Track law over `(z_D, v_z_D, z_A)`.
pub fn defender_vertical(
    x: [f64; 3],
    attacker_vz: f64,
    art: &GameArtifacts,
    cfg: &ControllerConfig,
    prev: Option<PolicyMode>,
) -> Result<Decision<f64>> {
    let vert = art.vertical()?;
    let s = &art.scenario;
    let rel = [x[0] - x[2], x[1]];
    let r = art.v_z(rel)?;
    let mode = select_mode(prev, r, s.d_z, cfg.eps, cfg.hysteresis);
    let set = ControlSet::Interval(s.bounds.uz_d);
    let (command, mode, clamped) = match mode {
        PolicyMode::TrackDeep => {
            let u = performant_tracker(&rel[..1], &[attacker_vz], &cfg.kp[2..], cfg.kv, set);
            (u.as_slice()[0], mode, false)
        }
        PolicyMode::TrackBoundary => {
            let (grad, clamped) = vert.tracking.gradient_at(&rel)?;
            let u = model(ModelKind::RelVertical2d, art).optimal_control(&rel, &grad, Player::Defender);
            (u.as_slice()[0], mode, clamped)
        }
        _ => {
            let xz = recenter_vertical(vert.game.spec(), x);
            let sample = vert.game.interpolate(&xz)?;
            let (_, grad) = vert.capture_heading(&xz)?;
            let u = model(ModelKind::VerticalGame3d, art).optimal_control(&xz, &grad, Player::Defender);
            let winning = membership(sample.value, Side::Defender, SubGame::Vertical, cfg.delta);
            let mode = if winning { PolicyMode::Reach } else { PolicyMode::OutsideWinningRegion };
            (u.as_slice()[0], mode, sample.clamped)
        }
    };
    Ok(Decision {
        command,
        mode,
        tracking_value: r,
        clamped,
    })
}

/// Horizontal Reach-Avoid-Track law over `(x_D, y_D, v_x_D, v_y_D, x_A, y_A)`.
pub fn defender_horizontal(
    x: [f64; 6],
    attacker_v: [f64; 2],
    art: &GameArtifacts,
    cfg: &ControllerConfig,
    prev: Option<PolicyMode>,
) -> Result<Decision<[f64; 2]>> {
    let hor = art.horizontal()?;
    let s = &art.scenario;
    let rel = [x[0] - x[4], x[1] - x[5], x[2], x[3]];
    let r = art.v_h(rel)?;
    let mode = select_mode(prev, r, s.d_h, cfg.eps_track, cfg.hysteresis);
    let set = ControlSet::Disk(s.bounds.uh_d);
    let (u, mode, clamped) = match mode {
        PolicyMode::TrackDeep => {
            let u = performant_tracker(&rel[..2], &attacker_v, &cfg.kp[..2], cfg.kv, set);
            (u, mode, false)
        }
        PolicyMode::TrackBoundary => {
            let (grad, clamped) = hor.tracking.gradient_at(&rel)?;
            let u = model(ModelKind::RelHorizontal4d, art).optimal_control(&rel, &grad, Player::Defender);
            (u, mode, clamped)
        }
        _ => {
            let (sample, grad) = hor.game.value_and_gradient(&x)?;
            let u = model(ModelKind::HorizontalGame6d, art).optimal_control(&x, &grad, Player::Defender);
            let winning = membership(sample.value, Side::Defender, SubGame::Horizontal, cfg.delta);
            let mode = if winning { PolicyMode::Reach } else { PolicyMode::OutsideWinningRegion };
            (u, mode, sample.clamped)
        }
    };
    let u = u.as_slice();
    Ok(Decision {
        command: [u[0], u[1]],
        mode,
        tracking_value: r,
        clamped,
    })
}

/// Which value function the adversarial attacker plays against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackerPhase {
    /// Against the game (`Phi_h`, or `T_capture` vertically).
    Game,
    /// Against the tracking value (`V_h,T` / `V_z,inf`).
    Tracking,
}

pub fn attacker_adversarial_vertical(x: [f64; 3], art: &GameArtifacts, phase: AttackerPhase) -> Result<f64> {
    let vert = art.vertical()?;
    let u = match phase {
        AttackerPhase::Game => {
            let xz = recenter_vertical(vert.game.spec(), x);
            let (_, grad) = vert.capture_heading(&xz)?;
            model(ModelKind::VerticalGame3d, art).optimal_control(&xz, &grad, Player::Attacker)
        }
        AttackerPhase::Tracking => {
            let rel = [x[0] - x[2], x[1]];
            let (grad, _) = vert.tracking.gradient_at(&rel)?;
            model(ModelKind::RelVertical2d, art).optimal_control(&rel, &grad, Player::Attacker)
        }
    };
    Ok(u.as_slice()[0])
}

pub fn attacker_adversarial_horizontal(x: [f64; 6], art: &GameArtifacts, phase: AttackerPhase) -> Result<[f64; 2]> {
    let hor = art.horizontal()?;
    let u = match phase {
        AttackerPhase::Game => {
            let (grad, _) = hor.game.gradient_at(&x)?;
            model(ModelKind::HorizontalGame6d, art).optimal_control(&x, &grad, Player::Attacker)
        }
        AttackerPhase::Tracking => {
            let rel = [x[0] - x[4], x[1] - x[5], x[2], x[3]];
            let (grad, _) = hor.tracking.gradient_at(&rel)?;
            model(ModelKind::RelHorizontal4d, art).optimal_control(&rel, &grad, Player::Attacker)
        }
    };
    let u = u.as_slice();
    Ok([u[0], u[1]])
}

/// Vertical command that delays the first `|z_rel| <= d_z` as long as possible.
pub fn attacker_delay_contact(x: [f64; 3], art: &GameArtifacts) -> Result<f64> {
    let vert = art.vertical()?;
    let xz = recenter_vertical(vert.contact_game.spec(), x);
    let (_, grad) = vert.contact_heading(&xz)?;
    let u = model(ModelKind::VerticalGame3d, art).optimal_control(&xz, &grad, Player::Attacker);
    Ok(u.as_slice()[0])
}

/// Time-optimal obstacle-avoiding heading toward the target, descending the
/// time-to-goal field; zero inside the target.
pub fn attacker_goal_seeking(position: [f64; 2], art: &GameArtifacts) -> Result<[f64; 2]> {
    let goal = art.goal()?;
    let (sample, grad) = goal.heading(&position)?;
    if sample.value <= 0.0 {
        return Ok([0.0, 0.0]);
    }
    let u = model(ModelKind::AttackerReach2d, art).optimal_control(&position, &grad, Player::Attacker);
    let u = u.as_slice();
    Ok([u[0], u[1]])
}

/// Commands and diagnostics from one defender evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DefenderOutput {
    /// `(v_x, v_y, v_z)` velocity command.
    pub command: [f64; 3],
    pub mode_h: Option<PolicyMode>,
    pub mode_z: Option<PolicyMode>,
    pub v_h: Option<f64>,
    pub v_z: Option<f64>,
}

pub trait DefenderPolicy {
    fn command(&mut self, t: f64, state: &JointState) -> Result<DefenderOutput>;
}

pub trait AttackerPolicy {
    /// `(v_x, v_y, v_z)` velocity command.
    fn command(&mut self, t: f64, state: &JointState) -> Result<[f64; 3]>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeTransition {
    pub t: f64,
    pub game: SubGame,
    pub from: Option<PolicyMode>,
    pub to: PolicyMode,
}

/// The switching defender of both sub-games, with mode memory.
pub struct ReachTrackDefender<'a> {
    art: &'a GameArtifacts,
    cfg: ControllerConfig,
    horizontal: bool,
    vertical: bool,
    mode_h: Option<PolicyMode>,
    mode_z: Option<PolicyMode>,
    last_attacker: Option<(f64, [f64; 3])>,
    pub transitions: Vec<ModeTransition>,
}

impl<'a> ReachTrackDefender<'a> {
    pub fn new(art: &'a GameArtifacts, cfg: ControllerConfig) -> Self {
        Self {
            art,
            cfg,
            horizontal: true,
            vertical: true,
            mode_h: None,
            mode_z: None,
            last_attacker: None,
            transitions: Vec::new(),
        }
    }

    /// Disabled sub-systems receive a zero command.
    pub fn with_subsystems(mut self, horizontal: bool, vertical: bool) -> Self {
        self.horizontal = horizontal;
        self.vertical = vertical;
        self
    }

    fn attacker_velocity(&mut self, t: f64, p: [f64; 3]) -> [f64; 3] {
        let v = match self.last_attacker {
            Some((t0, p0)) if t > t0 => {
                let h = t - t0;
                [(p[0] - p0[0]) / h, (p[1] - p0[1]) / h, (p[2] - p0[2]) / h]
            }
            _ => [0.0; 3],
        };
        self.last_attacker = Some((t, p));
        v
    }

    fn record(&mut self, t: f64, game: SubGame, to: PolicyMode) {
        let prev = match game {
            SubGame::Horizontal => &mut self.mode_h,
            SubGame::Vertical => &mut self.mode_z,
        };
        if *prev != Some(to) {
            let from = prev.replace(to);
            log::debug!("t={t:.3} {game:?} mode {from:?} -> {to:?}");
            self.transitions.push(ModeTransition { t, game, from, to });
        }
    }
}

impl DefenderPolicy for ReachTrackDefender<'_> {
    fn command(&mut self, t: f64, state: &JointState) -> Result<DefenderOutput> {
        let va = self.attacker_velocity(t, state.attacker);
        let mut out = DefenderOutput::default();
        if self.horizontal {
            let d = defender_horizontal(state.horizontal(), [va[0], va[1]], self.art, &self.cfg, self.mode_h)?;
            out.command[0] = d.command[0];
            out.command[1] = d.command[1];
            out.mode_h = Some(d.mode);
            out.v_h = Some(d.tracking_value);
            self.record(t, SubGame::Horizontal, d.mode);
        }
        if self.vertical {
            let d = defender_vertical(state.vertical(), va[2], self.art, &self.cfg, self.mode_z)?;
            out.command[2] = d.command;
            out.mode_z = Some(d.mode);
            out.v_z = Some(d.tracking_value);
            self.record(t, SubGame::Vertical, d.mode);
        }
        Ok(out)
    }
}

/// Worst-case attacker: plays against the game value until the relative
/// state enters the capture set of a sub-game, then against the tracking value.
pub struct AdversarialAttacker<'a> {
    art: &'a GameArtifacts,
    horizontal: bool,
    vertical: bool,
}

impl<'a> AdversarialAttacker<'a> {
    pub fn new(art: &'a GameArtifacts) -> Self {
        Self {
            art,
            horizontal: true,
            vertical: true,
        }
    }

    pub fn with_subsystems(mut self, horizontal: bool, vertical: bool) -> Self {
        self.horizontal = horizontal;
        self.vertical = vertical;
        self
    }
}

/// Distance from an obstacle inside which the attacker's planar command loses
/// its inward component.
const OBSTACLE_GUARD: f64 = 0.5;

/// Removes the component of `u` that points into a nearby obstacle.
pub fn guard_obstacles(s: &Scenario, p: [f64; 2], u: [f64; 2]) -> [f64; 2] {
    let dist = |q: [f64; 2]| s.obstacle_distance(&q).unwrap_or(f64::INFINITY);
    if dist(p) > OBSTACLE_GUARD {
        return u;
    }
    let h = 1e-4;
    let n = [
        dist([p[0] + h, p[1]]) - dist([p[0] - h, p[1]]),
        dist([p[0], p[1] + h]) - dist([p[0], p[1] - h]),
    ];
    let norm = n[0].hypot(n[1]);
    if !(norm > 0.0) {
        return u;
    }
    let n = [n[0] / norm, n[1] / norm];
    let inward = u[0] * n[0] + u[1] * n[1];
    if inward < 0.0 {
        [u[0] - inward * n[0], u[1] - inward * n[1]]
    } else {
        u
    }
}

fn vertical_evasion(art: &GameArtifacts, state: &JointState) -> Result<f64> {
    let phase = if art.v_z(state.rel_vertical())? <= art.scenario.d_z {
        AttackerPhase::Tracking
    } else {
        AttackerPhase::Game
    };
    attacker_adversarial_vertical(state.vertical(), art, phase)
}

impl AttackerPolicy for AdversarialAttacker<'_> {
    fn command(&mut self, _t: f64, state: &JointState) -> Result<[f64; 3]> {
        let mut u = [0.0; 3];
        if self.horizontal {
            let phase = if self.art.v_h(state.rel_horizontal())? <= self.art.scenario.d_h {
                AttackerPhase::Tracking
            } else {
                AttackerPhase::Game
            };
            let h = attacker_adversarial_horizontal(state.horizontal(), self.art, phase)?;
            let h = guard_obstacles(&self.art.scenario, state.attacker_planar(), h);
            u[0] = h[0];
            u[1] = h[1];
        }
        if self.vertical {
            u[2] = vertical_evasion(self.art, state)?;
        }
        Ok(u)
    }
}

/// Attacker heading straight for the target along the time-optimal path,
/// optionally delaying vertical contact.
pub struct GoalSeekingAttacker<'a> {
    art: &'a GameArtifacts,
    vertical_evasion: bool,
}

impl<'a> GoalSeekingAttacker<'a> {
    pub fn new(art: &'a GameArtifacts, vertical_evasion: bool) -> Self {
        Self {
            art,
            vertical_evasion,
        }
    }
}

impl AttackerPolicy for GoalSeekingAttacker<'_> {
    fn command(&mut self, _t: f64, state: &JointState) -> Result<[f64; 3]> {
        let h = attacker_goal_seeking(state.attacker_planar(), self.art)?;
        let z = if self.vertical_evasion {
            attacker_delay_contact(state.vertical(), self.art)?
        } else {
            0.0
        };
        Ok([h[0], h[1], z])
    }
}

/// Fixed velocity command.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConstantAttacker(pub [f64; 3]);

impl AttackerPolicy for ConstantAttacker {
    fn command(&mut self, _t: f64, _state: &JointState) -> Result<[f64; 3]> {
        Ok(self.0)
    }
}

/// Defender that never commands anything.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdleDefender;

impl DefenderPolicy for IdleDefender {
    fn command(&mut self, _t: f64, _state: &JointState) -> Result<DefenderOutput> {
        Ok(DefenderOutput::default())
    }
}
