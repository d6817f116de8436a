//! Sub-system flows, optimal Hamiltonians and feedback control extraction.
//!
//! Every model's costate-weighted flow splits as
//! `p . f(x, u_D, u_A) = p . drift(x) + c_D(p) . u_D + c_A(p) . u_A`,
//! so each player's optimum over a disk or interval is available in closed
//! form. The role table (who maximizes) is fixed per model:
//!
//! | model                | defender | attacker |
//! |----------------------|----------|----------|
//! | `horizontal_game_6d` | max      | min      |
//! | `vertical_game_3d`   | min      | max      |
//! | `rel_vertical_2d`    | min      | max      |
//! | `rel_horizontal_4d`  | min      | max      |
//! | `attacker_reach_2d`  | (none)   | min      |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Gains, Scenario, SpeedBounds};
use crate::grid::GridSpec;

/// Tolerance on control bounds when validating commands.
pub const CONTROL_TOLERANCE: f64 = 1e-9;

/// Costate coefficient norms at or below this produce the zero command.
pub const ZERO_COSTATE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Defender,
    Attacker,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Optimizer {
    Min,
    Max,
}

impl Optimizer {
    pub fn sign(self) -> f64 {
        match self {
            Optimizer::Min => -1.0,
            Optimizer::Max => 1.0,
        }
    }

    pub fn better(self, a: f64, b: f64) -> f64 {
        match self {
            Optimizer::Min => a.min(b),
            Optimizer::Max => a.max(b),
        }
    }

    pub fn worst(self) -> f64 {
        match self {
            Optimizer::Min => f64::INFINITY,
            Optimizer::Max => f64::NEG_INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlSet {
    /// The player has no input in this model.
    None,
    /// Euclidean disk of the given radius (planar velocity command).
    Disk(f64),
    /// Symmetric interval `[-bound, bound]`.
    Interval(f64),
}

impl ControlSet {
    pub fn arity(self) -> usize {
        match self {
            ControlSet::None => 0,
            ControlSet::Disk(_) => 2,
            ControlSet::Interval(_) => 1,
        }
    }

    pub fn contains(self, u: &[f64], tol: f64) -> bool {
        match self {
            ControlSet::None => u.is_empty(),
            ControlSet::Disk(r) => u.len() == 2 && u[0].hypot(u[1]) <= r + tol,
            ControlSet::Interval(b) => u.len() == 1 && u[0].abs() <= b + tol,
        }
    }

    /// Argument of `opt` of `c . u` over the set; zero when `c` vanishes.
    pub fn extremize(self, c: &[f64], opt: Optimizer) -> ControlCommand {
        match self {
            ControlSet::None => ControlCommand::none(),
            ControlSet::Disk(r) => {
                let n = c[0].hypot(c[1]);
                if n <= ZERO_COSTATE {
                    ControlCommand::planar(0.0, 0.0)
                } else {
                    let s = opt.sign() * r / n;
                    ControlCommand::planar(s * c[0], s * c[1])
                }
            }
            ControlSet::Interval(b) => {
                if c[0].abs() <= ZERO_COSTATE {
                    ControlCommand::scalar(0.0)
                } else {
                    ControlCommand::scalar(opt.sign() * b * c[0].signum())
                }
            }
        }
    }

    /// Clips a command into the set: disks rescale, intervals clamp per axis.
    pub fn clip(self, u: ControlCommand) -> ControlCommand {
        match self {
            ControlSet::None => ControlCommand::none(),
            ControlSet::Disk(r) => {
                let n = u.v[0].hypot(u.v[1]);
                if n > r {
                    ControlCommand::planar(u.v[0] * r / n, u.v[1] * r / n)
                } else {
                    u
                }
            }
            ControlSet::Interval(b) => ControlCommand::scalar(u.v[0].clamp(-b, b)),
        }
    }
}

/// A velocity command with sub-game-specific arity (0, 1 or 2 components).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlCommand {
    v: [f64; 2],
    arity: usize,
}

impl ControlCommand {
    pub fn none() -> Self {
        Self {
            v: [0.0; 2],
            arity: 0,
        }
    }

    pub fn scalar(u: f64) -> Self {
        Self {
            v: [u, 0.0],
            arity: 1,
        }
    }

    pub fn planar(ux: f64, uy: f64) -> Self {
        Self {
            v: [ux, uy],
            arity: 2,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.arity]
    }

    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// A two-player system usable by the grid solvers and the oracle.
pub trait GameModel: Sync {
    fn id(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn control_set(&self, player: Player) -> ControlSet;
    fn role(&self, player: Player) -> Optimizer;
    /// Unchecked flow `f(x, u_D, u_A)` written into `out`.
    fn flow_into(&self, x: &[f64], u_d: &[f64], u_a: &[f64], out: &mut [f64]);
    /// Coefficient of `player`'s control in `p . f`.
    fn control_coefficients(&self, x: &[f64], p: &[f64], player: Player) -> [f64; 2];
    /// `opt_D opt_A p . f(x, u_D, u_A)` in closed form.
    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64;
    /// Per-axis upper bounds of `|dH/dp_i|` over the grid box and admissible controls.
    fn dissipation_bounds(&self, grid: &GridSpec) -> Vec<f64>;

    /// Monotone upwind numerical Hamiltonian from one-sided derivatives:
    /// `opt_D opt_A sum_i [max(f_i, 0) D+_i + min(f_i, 0) D-_i]`.
    /// `None` when the model has no closed form; solvers then fall back to
    /// Lax-Friedrichs.
    fn upwind_hamiltonian(&self, _x: &[f64], _dm: &[f64], _dp: &[f64]) -> Option<f64> {
        None
    }

    fn optimal_control(&self, x: &[f64], p: &[f64], player: Player) -> ControlCommand {
        let c = self.control_coefficients(x, p, player);
        self.control_set(player).extremize(&c, self.role(player))
    }

    /// Checked flow: validates arities and control bounds.
    fn flow(
        &self,
        x: &[f64],
        u_d: &ControlCommand,
        u_a: &ControlCommand,
    ) -> Result<Vec<f64>> {
        let n = self.state_dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        for (player, u) in [(Player::Defender, u_d), (Player::Attacker, u_a)] {
            let set = self.control_set(player);
            if u.as_slice().len() != set.arity() {
                return Err(Error::DimensionMismatch {
                    expected: set.arity(),
                    got: u.as_slice().len(),
                });
            }
            if !set.contains(u.as_slice(), CONTROL_TOLERANCE) {
                let bound = match set {
                    ControlSet::Disk(r) => r,
                    ControlSet::Interval(b) => b,
                    ControlSet::None => 0.0,
                };
                return Err(Error::ControlBound {
                    value: u.norm(),
                    bound,
                });
            }
        }
        let mut out = vec![0.0; n];
        self.flow_into(x, u_d.as_slice(), u_a.as_slice(), &mut out);
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// `(x_D, y_D, v_x_D, v_y_D, x_A, y_A)`
    #[serde(rename = "horizontal_game_6d")]
    HorizontalGame6d,
    /// `(z_D, v_z_D, z_A)`
    #[serde(rename = "vertical_game_3d")]
    VerticalGame3d,
    /// `(z_rel, v_z_D)` with `z_rel = z_D - z_A`
    #[serde(rename = "rel_vertical_2d")]
    RelVertical2d,
    /// `(x_rel, y_rel, v_x_D, v_y_D)`
    #[serde(rename = "rel_horizontal_4d")]
    RelHorizontal4d,
    /// `(x_A, y_A)`
    #[serde(rename = "attacker_reach_2d")]
    AttackerReach2d,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::HorizontalGame6d,
        ModelKind::VerticalGame3d,
        ModelKind::RelVertical2d,
        ModelKind::RelHorizontal4d,
        ModelKind::AttackerReach2d,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::HorizontalGame6d => "horizontal_game_6d",
            ModelKind::VerticalGame3d => "vertical_game_3d",
            ModelKind::RelVertical2d => "rel_vertical_2d",
            ModelKind::RelHorizontal4d => "rel_horizontal_4d",
            ModelKind::AttackerReach2d => "attacker_reach_2d",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsModel {
    pub kind: ModelKind,
    pub gains: Gains,
    pub bounds: SpeedBounds,
}

/// Upwind flux of a single velocity component `c`.
#[inline]
pub fn upwind(c: f64, dm: f64, dp: f64) -> f64 {
    c.max(0.0) * dp + c.min(0.0) * dm
}

/// `opt` of `upwind(c, dm, dp)` over `c` in `[lo, hi]`.
#[inline]
pub fn upwind_interval(lo: f64, hi: f64, dm: f64, dp: f64, opt: Optimizer) -> f64 {
    let mut best = opt.better(upwind(lo, dm, dp), upwind(hi, dm, dp));
    if lo < 0.0 && hi > 0.0 {
        best = opt.better(best, 0.0);
    }
    best
}

/// [`upwind_disk`] for a disk centred at the origin, where the support
/// function is `r |b|` and each axis contributes its extreme squared slope.
pub fn upwind_disk_centred(r: f64, dm: [f64; 2], dp: [f64; 2], opt: Optimizer) -> f64 {
    let s = opt.sign();
    let q = |dm: f64, dp: f64| {
        let (dm, dp) = (s * dm, s * dp);
        if dm <= dp {
            (dm * dm).max(dp * dp)
        } else {
            let b = 0.0f64.clamp(dp, dm);
            b * b
        }
    };
    s * r * (q(dm[0], dp[0]) + q(dm[1], dp[1])).sqrt()
}

/// `min` over `b` in `[lo, hi]` of `a * ca + b * cb + r * |(a, b)|`, a convex
/// function of `b` minimized at its clamped stationary point.
#[inline]
fn min_support(a: f64, ca: f64, cb: f64, lo: f64, hi: f64, r: f64) -> f64 {
    let b = if cb >= r {
        lo
    } else if cb <= -r {
        hi
    } else {
        (-cb * a.abs() / (r * r - cb * cb).sqrt()).clamp(lo, hi)
    };
    a * ca + b * cb + r * (a * a + b * b).sqrt()
}

/// `opt` of `sum_i upwind(w_i, dm_i, dp_i)` over the disk `|w - centre| <= r`.
///
/// After reducing to a maximization, each term is the max of its two slopes
/// times `w_i` when `dm_i <= dp_i` and the min over the slope interval
/// otherwise. Swapping the disk maximization with those inner minimizations
/// (the objective is bilinear in slopes and `w`) leaves support functions
/// `b . centre + r |b|` to be minimized over at most a box of slopes.
pub fn upwind_disk(centre: [f64; 2], r: f64, dm: [f64; 2], dp: [f64; 2], opt: Optimizer) -> f64 {
    let s = opt.sign();
    let (dm, dp) = ([s * dm[0], s * dm[1]], [s * dp[0], s * dp[1]]);
    let [c0, c1] = centre;
    let support = |b0: f64, b1: f64| b0 * c0 + b1 * c1 + r * (b0 * b0 + b1 * b1).sqrt();
    let best = match (dm[0] <= dp[0], dm[1] <= dp[1]) {
        (true, true) => support(dp[0], dp[1])
            .max(support(dp[0], dm[1]))
            .max(support(dm[0], dp[1]))
            .max(support(dm[0], dm[1])),
        (true, false) => {
            min_support(dp[0], c0, c1, dp[1], dm[1], r).max(min_support(dm[0], c0, c1, dp[1], dm[1], r))
        }
        (false, true) => {
            min_support(dp[1], c1, c0, dp[0], dm[0], r).max(min_support(dm[1], c1, c0, dp[0], dm[0], r))
        }
        (false, false) => {
            let zero_inside = dp[0] <= 0.0 && 0.0 <= dm[0] && dp[1] <= 0.0 && 0.0 <= dm[1];
            if zero_inside && c0 * c0 + c1 * c1 <= r * r {
                0.0
            } else {
                min_support(dp[0], c0, c1, dp[1], dm[1], r)
                    .min(min_support(dm[0], c0, c1, dp[1], dm[1], r))
                    .min(min_support(dp[1], c1, c0, dp[0], dm[0], r))
                    .min(min_support(dm[1], c1, c0, dp[0], dm[0], r))
            }
        }
    };
    s * best
}

fn max_abs(grid: &GridSpec, axis: usize) -> f64 {
    let a = grid.axis(axis);
    a.min.abs().max(a.max.abs())
}

impl DynamicsModel {
    pub fn new(kind: ModelKind, gains: Gains, bounds: SpeedBounds) -> Self {
        Self {
            kind,
            gains,
            bounds,
        }
    }

    pub fn from_scenario(kind: ModelKind, scenario: &Scenario) -> Self {
        Self::new(kind, scenario.gains, scenario.bounds)
    }
}

impl GameModel for DynamicsModel {
    fn id(&self) -> &str {
        self.kind.id()
    }

    fn state_dim(&self) -> usize {
        match self.kind {
            ModelKind::HorizontalGame6d => 6,
            ModelKind::VerticalGame3d => 3,
            ModelKind::RelVertical2d | ModelKind::AttackerReach2d => 2,
            ModelKind::RelHorizontal4d => 4,
        }
    }

    fn control_set(&self, player: Player) -> ControlSet {
        let b = &self.bounds;
        match (self.kind, player) {
            (ModelKind::HorizontalGame6d | ModelKind::RelHorizontal4d, Player::Defender) => {
                ControlSet::Disk(b.uh_d)
            }
            (ModelKind::HorizontalGame6d | ModelKind::RelHorizontal4d, Player::Attacker) => {
                ControlSet::Disk(b.uh_a)
            }
            (ModelKind::VerticalGame3d | ModelKind::RelVertical2d, Player::Defender) => {
                ControlSet::Interval(b.uz_d)
            }
            (ModelKind::VerticalGame3d | ModelKind::RelVertical2d, Player::Attacker) => {
                ControlSet::Interval(b.uz_a)
            }
            (ModelKind::AttackerReach2d, Player::Defender) => ControlSet::None,
            (ModelKind::AttackerReach2d, Player::Attacker) => ControlSet::Disk(b.uh_a),
        }
    }

    fn role(&self, player: Player) -> Optimizer {
        match (self.kind, player) {
            (ModelKind::HorizontalGame6d, Player::Defender) => Optimizer::Max,
            (ModelKind::HorizontalGame6d, Player::Attacker) => Optimizer::Min,
            (ModelKind::AttackerReach2d, _) => Optimizer::Min,
            (_, Player::Defender) => Optimizer::Min,
            (_, Player::Attacker) => Optimizer::Max,
        }
    }

    #[inline]
    fn flow_into(&self, x: &[f64], u_d: &[f64], u_a: &[f64], out: &mut [f64]) {
        let Gains { kx, ky, kz } = self.gains;
        match self.kind {
            ModelKind::HorizontalGame6d => {
                out[0] = x[2];
                out[1] = x[3];
                out[2] = kx * (u_d[0] - x[2]);
                out[3] = ky * (u_d[1] - x[3]);
                out[4] = u_a[0];
                out[5] = u_a[1];
            }
            ModelKind::VerticalGame3d => {
                out[0] = x[1];
                out[1] = kz * (u_d[0] - x[1]);
                out[2] = u_a[0];
            }
            ModelKind::RelVertical2d => {
                out[0] = x[1] - u_a[0];
                out[1] = kz * (u_d[0] - x[1]);
            }
            ModelKind::RelHorizontal4d => {
                out[0] = x[2] - u_a[0];
                out[1] = x[3] - u_a[1];
                out[2] = kx * (u_d[0] - x[2]);
                out[3] = ky * (u_d[1] - x[3]);
            }
            ModelKind::AttackerReach2d => {
                out[0] = u_a[0];
                out[1] = u_a[1];
            }
        }
    }

    #[inline]
    fn control_coefficients(&self, _x: &[f64], p: &[f64], player: Player) -> [f64; 2] {
        let Gains { kx, ky, kz } = self.gains;
        match (self.kind, player) {
            (ModelKind::HorizontalGame6d | ModelKind::RelHorizontal4d, Player::Defender) => {
                [kx * p[2], ky * p[3]]
            }
            (ModelKind::HorizontalGame6d, Player::Attacker) => [p[4], p[5]],
            (ModelKind::RelHorizontal4d, Player::Attacker) => [-p[0], -p[1]],
            (ModelKind::VerticalGame3d | ModelKind::RelVertical2d, Player::Defender) => {
                [kz * p[1], 0.0]
            }
            (ModelKind::VerticalGame3d, Player::Attacker) => [p[2], 0.0],
            (ModelKind::RelVertical2d, Player::Attacker) => [-p[0], 0.0],
            (ModelKind::AttackerReach2d, Player::Defender) => [0.0, 0.0],
            (ModelKind::AttackerReach2d, Player::Attacker) => [p[0], p[1]],
        }
    }

    #[inline]
    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let Gains { kx, ky, kz } = self.gains;
        let b = &self.bounds;
        match self.kind {
            // p1 vx + p2 vy - kx p3 vx - ky p4 vy + UhD |(kx p3, ky p4)| - UhA |(p5, p6)|
            ModelKind::HorizontalGame6d => {
                let (vx, vy) = (x[2], x[3]);
                p[0] * vx + p[1] * vy - kx * p[2] * vx - ky * p[3] * vy
                    + b.uh_d * (kx * p[2]).hypot(ky * p[3])
                    - b.uh_a * p[4].hypot(p[5])
            }
            // p1 vz - kz p2 vz - kz UzD |p2| + UzA |p3|
            ModelKind::VerticalGame3d => {
                let vz = x[1];
                p[0] * vz - kz * p[1] * vz - kz * b.uz_d * p[1].abs() + b.uz_a * p[2].abs()
            }
            // p1 vz - kz p2 vz - kz UzD |p2| + UzA |p1|
            ModelKind::RelVertical2d => {
                let vz = x[1];
                p[0] * vz - kz * p[1] * vz - kz * b.uz_d * p[1].abs() + b.uz_a * p[0].abs()
            }
            // p1 vx + p2 vy - kx p3 vx - ky p4 vy - UhD |(kx p3, ky p4)| + UhA |(p1, p2)|
            ModelKind::RelHorizontal4d => {
                let (vx, vy) = (x[2], x[3]);
                p[0] * vx + p[1] * vy - kx * p[2] * vx - ky * p[3] * vy
                    - b.uh_d * (kx * p[2]).hypot(ky * p[3])
                    + b.uh_a * p[0].hypot(p[1])
            }
            // -UhA |(p1, p2)|
            ModelKind::AttackerReach2d => -b.uh_a * p[0].hypot(p[1]),
        }
    }

    fn upwind_hamiltonian(&self, x: &[f64], dm: &[f64], dp: &[f64]) -> Option<f64> {
        let Gains { kx, ky, kz } = self.gains;
        let b = &self.bounds;
        let (min, max) = (Optimizer::Min, Optimizer::Max);
        Some(match self.kind {
            ModelKind::HorizontalGame6d => {
                let (vx, vy) = (x[2], x[3]);
                upwind(vx, dm[0], dp[0])
                    + upwind(vy, dm[1], dp[1])
                    // k_i (u_i - v_i) = k_i w_i with w = u_D - v on a shifted disk
                    + upwind_disk(
                        [-vx, -vy],
                        b.uh_d,
                        [kx * dm[2], ky * dm[3]],
                        [kx * dp[2], ky * dp[3]],
                        max,
                    )
                    + upwind_disk_centred(b.uh_a, [dm[4], dm[5]], [dp[4], dp[5]], min)
            }
            ModelKind::VerticalGame3d => {
                let vz = x[1];
                upwind(vz, dm[0], dp[0])
                    + upwind_interval(kz * (-b.uz_d - vz), kz * (b.uz_d - vz), dm[1], dp[1], min)
                    + upwind_interval(-b.uz_a, b.uz_a, dm[2], dp[2], max)
            }
            ModelKind::RelVertical2d => {
                let vz = x[1];
                upwind_interval(vz - b.uz_a, vz + b.uz_a, dm[0], dp[0], max)
                    + upwind_interval(kz * (-b.uz_d - vz), kz * (b.uz_d - vz), dm[1], dp[1], min)
            }
            ModelKind::RelHorizontal4d => {
                let (vx, vy) = (x[2], x[3]);
                upwind_disk([vx, vy], b.uh_a, [dm[0], dm[1]], [dp[0], dp[1]], max)
                    + upwind_disk(
                        [-vx, -vy],
                        b.uh_d,
                        [kx * dm[2], ky * dm[3]],
                        [kx * dp[2], ky * dp[3]],
                        min,
                    )
            }
            ModelKind::AttackerReach2d => {
                upwind_disk_centred(b.uh_a, [dm[0], dm[1]], [dp[0], dp[1]], min)
            }
        })
    }

    fn dissipation_bounds(&self, grid: &GridSpec) -> Vec<f64> {
        let Gains { kx, ky, kz } = self.gains;
        let b = &self.bounds;
        match self.kind {
            ModelKind::HorizontalGame6d => {
                let (vx, vy) = (max_abs(grid, 2), max_abs(grid, 3));
                vec![vx, vy, kx * (b.uh_d + vx), ky * (b.uh_d + vy), b.uh_a, b.uh_a]
            }
            ModelKind::VerticalGame3d => {
                let vz = max_abs(grid, 1);
                vec![vz, kz * (b.uz_d + vz), b.uz_a]
            }
            ModelKind::RelVertical2d => {
                let vz = max_abs(grid, 1);
                vec![vz + b.uz_a, kz * (b.uz_d + vz)]
            }
            ModelKind::RelHorizontal4d => {
                let (vx, vy) = (max_abs(grid, 2), max_abs(grid, 3));
                vec![vx + b.uh_a, vy + b.uh_a, kx * (b.uh_d + vx), ky * (b.uh_d + vy)]
            }
            ModelKind::AttackerReach2d => vec![b.uh_a, b.uh_a],
        }
    }
}

/// Joint state of both vehicles.
///
/// Serialized as the flat array `[xD, yD, zD, vxD, vyD, vzD, xA, yA, zA]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 9]", into = "[f64; 9]")]
pub struct JointState {
    /// `(x, y, z, v_x, v_y, v_z)`
    pub defender: [f64; 6],
    /// `(x, y, z)`
    pub attacker: [f64; 3],
}

impl From<[f64; 9]> for JointState {
    fn from(a: [f64; 9]) -> Self {
        Self {
            defender: [a[0], a[1], a[2], a[3], a[4], a[5]],
            attacker: [a[6], a[7], a[8]],
        }
    }
}

impl From<JointState> for [f64; 9] {
    fn from(s: JointState) -> Self {
        let d = s.defender;
        let a = s.attacker;
        [d[0], d[1], d[2], d[3], d[4], d[5], a[0], a[1], a[2]]
    }
}

impl JointState {
    pub fn is_finite(&self) -> bool {
        self.defender.iter().chain(&self.attacker).all(|v| v.is_finite())
    }

    /// `(x_D, y_D, v_x_D, v_y_D, x_A, y_A)`
    pub fn horizontal(&self) -> [f64; 6] {
        let d = &self.defender;
        [d[0], d[1], d[3], d[4], self.attacker[0], self.attacker[1]]
    }

    /// `(z_D, v_z_D, z_A)`
    pub fn vertical(&self) -> [f64; 3] {
        [self.defender[2], self.defender[5], self.attacker[2]]
    }

    /// `(x_rel, y_rel, v_x_D, v_y_D)`
    pub fn rel_horizontal(&self) -> [f64; 4] {
        let d = &self.defender;
        [d[0] - self.attacker[0], d[1] - self.attacker[1], d[3], d[4]]
    }

    /// `(z_rel, v_z_D)`
    pub fn rel_vertical(&self) -> [f64; 2] {
        [self.defender[2] - self.attacker[2], self.defender[5]]
    }

    pub fn attacker_planar(&self) -> [f64; 2] {
        [self.attacker[0], self.attacker[1]]
    }

    pub fn planar_distance(&self) -> f64 {
        (self.defender[0] - self.attacker[0]).hypot(self.defender[1] - self.attacker[1])
    }

    pub fn vertical_distance(&self) -> f64 {
        (self.defender[2] - self.attacker[2]).abs()
    }
}
