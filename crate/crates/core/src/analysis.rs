//! Winning-region membership, capture/goal time queries and the joint-state
//! outcome classifier.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::JointState;
use crate::error::{Error, Result};
use crate::geometry::{tracking_value, Scenario};
use crate::grid::{GridSpec, Sample, ScalarField};

/// Earliest-crossing times in seconds; `f64::INFINITY` marks "never".
#[derive(Clone, Debug, PartialEq)]
pub struct TimeField(ScalarField);

impl TimeField {
    pub fn new(field: ScalarField) -> Result<Self> {
        if field.values().iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidConfig(
                "crossing times must be non-negative (or +inf)".into(),
            ));
        }
        Ok(Self(field))
    }

    pub fn spec(&self) -> &GridSpec {
        self.0.spec()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    /// Multilinear interpolation; any contributing `+inf` corner yields `+inf`.
    pub fn query(&self, point: &[f64]) -> Result<Sample> {
        self.0.interpolate(point)
    }

    /// Finite copy with `+inf` raised to one second above the latest finite
    /// time, so gradients near unreachable nodes point away from them.
    pub fn capped(&self) -> ScalarField {
        let cap = self.values().iter().copied().filter(|t| t.is_finite()).fold(0.0, f64::max) + 1.0;
        let values = self.values().iter().map(|&t| if t.is_finite() { t } else { cap }).collect();
        ScalarField::new(self.spec().clone(), values).expect("same spec and length")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Defender,
    Attacker,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubGame {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub margin: f64,
    pub clamped: bool,
}

/// Sign test on a game value.
///
/// Horizontal: defender wins where `v > delta`. Vertical: defender wins where
/// `v <= -delta`. The attacker side is the complement in both cases.
pub fn membership(value: f64, side: Side, game: SubGame, delta: f64) -> bool {
    let defender = match game {
        SubGame::Horizontal => value > delta,
        SubGame::Vertical => value <= -delta,
    };
    match side {
        Side::Defender => defender,
        Side::Attacker => !defender,
    }
}

pub fn in_winning_region(
    field: &ScalarField,
    state: &[f64],
    side: Side,
    game: SubGame,
    delta: f64,
) -> Result<Membership> {
    let s = field.interpolate(state)?;
    Ok(Membership {
        member: membership(s.value, side, game, delta),
        margin: s.value,
        clamped: s.clamped,
    })
}

pub fn query_time(field: &TimeField, point: &[f64]) -> Result<f64> {
    Ok(field.query(point)?.value)
}

/// Shifts `(z_D, v_z_D, z_A)` by a common altitude offset so that the pair is
/// centred in the vertical-game grid. Vertical costs and flows depend on the
/// altitudes only through `z_D - z_A`, so the value is unchanged.
pub fn recenter_vertical(grid3: &GridSpec, x: [f64; 3]) -> [f64; 3] {
    let mid_grid = 0.5 * (grid3.axis(0).min + grid3.axis(0).max);
    let mid_grid_a = 0.5 * (grid3.axis(2).min + grid3.axis(2).max);
    let z_rel = x[0] - x[2];
    let centre = 0.5 * (mid_grid + mid_grid_a);
    [centre + 0.5 * z_rel, x[1], centre - 0.5 * z_rel]
}

/// Vertical-game outputs: `Phi_z`, `V_z,inf` and `T_capture`.
#[derive(Clone, Debug)]
pub struct VerticalArtifacts {
    pub game: ScalarField,
    pub tracking: ScalarField,
    pub capture_time: TimeField,
    /// Game against the plain reach set `|z_rel| <= d_z`. Equal to `game`
    /// under the classic variant.
    pub contact_game: ScalarField,
    /// Earliest time of `|z_rel| <= d_z` under optimal play.
    pub contact_time: TimeField,
    capture_heading: ScalarField,
    contact_heading: ScalarField,
}

impl VerticalArtifacts {
    pub fn new(
        game: ScalarField,
        tracking: ScalarField,
        capture_time: TimeField,
        contact_game: ScalarField,
        contact_time: TimeField,
    ) -> Self {
        let capture_heading = capture_time.capped();
        let contact_heading = contact_time.capped();
        Self {
            game,
            tracking,
            capture_time,
            contact_game,
            contact_time,
            capture_heading,
            contact_heading,
        }
    }

    /// Capped `T_capture` and its gradient at a recentred vertical state.
    pub fn capture_heading(&self, xz: &[f64]) -> Result<(Sample, Vec<f64>)> {
        self.capture_heading.value_and_gradient(xz)
    }

    /// Capped contact time and its gradient at a recentred vertical state.
    pub fn contact_heading(&self, xz: &[f64]) -> Result<(Sample, Vec<f64>)> {
        self.contact_heading.value_and_gradient(xz)
    }
}

/// Horizontal-game outputs: `Phi_h` and `V_h,T`.
#[derive(Clone, Debug)]
pub struct HorizontalArtifacts {
    pub game: ScalarField,
    pub tracking: ScalarField,
}

/// Attacker-only reach outputs: `Phi_A,h^reach` and `T_goal`.
#[derive(Clone, Debug)]
pub struct GoalArtifacts {
    pub reach: ScalarField,
    pub goal_time: TimeField,
    heading: ScalarField,
}

impl GoalArtifacts {
    pub fn new(reach: ScalarField, goal_time: TimeField) -> Result<Self> {
        let heading = goal_time.capped();
        Ok(Self { reach, goal_time, heading })
    }

    /// Capped time to goal and its gradient at an attacker position.
    pub fn heading(&self, position: &[f64]) -> Result<(Sample, Vec<f64>)> {
        self.heading.value_and_gradient(position)
    }
}

#[derive(Clone, Debug)]
pub struct GameArtifacts {
    pub scenario: Scenario,
    pub vertical: Option<VerticalArtifacts>,
    pub horizontal: Option<HorizontalArtifacts>,
    pub goal: Option<GoalArtifacts>,
}

impl GameArtifacts {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            vertical: None,
            horizontal: None,
            goal: None,
        }
    }

    pub fn vertical(&self) -> Result<&VerticalArtifacts> {
        self.vertical
            .as_ref()
            .ok_or_else(|| Error::MissingArtifact("vertical game".into()))
    }

    pub fn horizontal(&self) -> Result<&HorizontalArtifacts> {
        self.horizontal
            .as_ref()
            .ok_or_else(|| Error::MissingArtifact("horizontal game".into()))
    }

    pub fn goal(&self) -> Result<&GoalArtifacts> {
        self.goal
            .as_ref()
            .ok_or_else(|| Error::MissingArtifact("attacker reach".into()))
    }

    /// `V_z,inf` at the relative vertical state, floored by `|z_rel|` off-grid.
    pub fn v_z(&self, rel: [f64; 2]) -> Result<f64> {
        Ok(tracking_value(&self.vertical()?.tracking, &rel, rel[0].abs()))
    }

    /// `V_h,T` at the relative horizontal state, floored by the planar distance off-grid.
    pub fn v_h(&self, rel: [f64; 4]) -> Result<f64> {
        Ok(tracking_value(
            &self.horizontal()?.tracking,
            &rel,
            rel[0].hypot(rel[1]),
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    DefenderGuaranteed,
    AttackerGuaranteed,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Prop1,
    Prop2,
    Prop3,
    Theorem,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub verdict: Verdict,
    pub rule: Option<Rule>,
    /// Every value the decision consulted; infinite times serialize as `null`.
    pub evidence: BTreeMap<String, f64>,
    /// Names of queries that fell outside their grid.
    pub clamped: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Safety margin on the game-value sign tests.
    pub delta: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self { delta: 0.0 }
    }
}

/// Applies, in order, Prop 1 (attacker), the Theorem, Prop 2 and Prop 3
/// (defender); returns `Indeterminate` when none holds or when a game query
/// had to be clamped to its grid.
pub fn classify(
    state: &JointState,
    artifacts: &GameArtifacts,
    cfg: &ClassifyConfig,
) -> Result<ClassificationResult> {
    if !state.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let scenario = &artifacts.scenario;
    let vert = artifacts.vertical()?;
    let hor = artifacts.horizontal()?;
    let goal = artifacts.goal()?;

    let mut evidence = BTreeMap::new();
    let mut clamped = Vec::new();
    let mut note = |name: &str, s: Sample, clamped: &mut Vec<String>| {
        if s.clamped {
            clamped.push(name.to_string());
        }
        evidence.insert(name.to_string(), s.value);
        s.value
    };

    let xz = recenter_vertical(vert.game.spec(), state.vertical());
    let t_goal = note("t_goal", goal.goal_time.query(&state.attacker_planar())?, &mut clamped);
    let t_capture = note("t_capture", vert.capture_time.query(&xz)?, &mut clamped);
    let t_contact = note("t_contact", vert.contact_time.query(&xz)?, &mut clamped);
    let phi_z = note("phi_z", vert.game.interpolate(&xz)?, &mut clamped);
    let phi_h = note("phi_h", hor.game.interpolate(&state.horizontal())?, &mut clamped);
    let v_z = artifacts.v_z(state.rel_vertical())?;
    let v_h = artifacts.v_h(state.rel_horizontal())?;
    evidence.insert("v_z".into(), v_z);
    evidence.insert("v_h".into(), v_h);
    evidence.insert("d_z".into(), scenario.d_z);
    evidence.insert("d_h".into(), scenario.d_h);

    let result = |verdict, rule, evidence, clamped| ClassificationResult {
        verdict,
        rule,
        evidence,
        clamped,
    };
    if !clamped.is_empty() {
        return Ok(result(Verdict::Indeterminate, None, evidence, clamped));
    }

    let defender_z = membership(phi_z, Side::Defender, SubGame::Vertical, cfg.delta);
    let defender_h = membership(phi_h, Side::Defender, SubGame::Horizontal, cfg.delta);
    let goal_first = t_goal.is_finite() && t_goal <= t_contact;
    let capture_first = t_goal > t_capture;

    let (verdict, rule) = if goal_first {
        (Verdict::AttackerGuaranteed, Some(Rule::Prop1))
    } else if defender_z && capture_first && defender_h {
        (Verdict::DefenderGuaranteed, Some(Rule::Theorem))
    } else if defender_h && v_z <= scenario.d_z {
        (Verdict::DefenderGuaranteed, Some(Rule::Prop2))
    } else if defender_z && capture_first && v_h <= scenario.d_h {
        (Verdict::DefenderGuaranteed, Some(Rule::Prop3))
    } else {
        (Verdict::Indeterminate, None)
    };
    Ok(result(verdict, rule, evidence, clamped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_sign_rules() {
        assert!(membership(0.5, Side::Defender, SubGame::Horizontal, 0.0));
        assert!(!membership(0.5, Side::Attacker, SubGame::Horizontal, 0.0));
        assert!(membership(0.0, Side::Attacker, SubGame::Horizontal, 0.0));
        assert!(membership(0.0, Side::Defender, SubGame::Vertical, 0.0));
        assert!(!membership(0.0, Side::Defender, SubGame::Vertical, 0.1));
        assert!(membership(0.05, Side::Attacker, SubGame::Vertical, 0.0));
    }

    #[test]
    fn node_query_reproduces_sign() {
        let spec = GridSpec::from_triples(&[(5, -2.0, 2.0), (3, 0.0, 2.0)]).unwrap();
        let f = ScalarField::from_fn(spec.clone(), |p| p[0] - 0.5);
        for i in 0..spec.len() {
            let mut p = [0.0; 2];
            spec.node_point(i, &mut p);
            let m = in_winning_region(&f, &p, Side::Defender, SubGame::Horizontal, 0.0).unwrap();
            assert_eq!(m.member, f.values()[i] > 0.0);
            assert_eq!(m.margin, f.values()[i]);
        }
    }

    #[test]
    fn infinite_corner_absorbs() {
        let spec = GridSpec::from_triples(&[(3, 0.0, 2.0)]).unwrap();
        let tf = TimeField::new(
            ScalarField::new(spec, vec![0.0, 1.0, f64::INFINITY]).unwrap(),
        )
        .unwrap();
        assert_eq!(query_time(&tf, &[1.0]).unwrap(), 1.0);
        assert_eq!(query_time(&tf, &[0.5]).unwrap(), 0.5);
        assert_eq!(query_time(&tf, &[1.5]).unwrap(), f64::INFINITY);
        assert_eq!(query_time(&tf, &[2.0]).unwrap(), f64::INFINITY);
        let bad = ScalarField::new(GridSpec::from_triples(&[(3, 0.0, 2.0)]).unwrap(), vec![-1.0; 3]);
        assert!(TimeField::new(bad.unwrap()).is_err());
    }

    #[test]
    fn recentering_preserves_relative_altitude() {
        let grid = GridSpec::from_triples(&[(11, 0.0, 10.0), (5, -4.0, 4.0), (11, 0.0, 10.0)]).unwrap();
        let x = recenter_vertical(&grid, [25.0, 1.0, 20.0]);
        assert_eq!(x, [7.5, 1.0, 2.5]);
        let x = recenter_vertical(&grid, [-3.0, -2.0, 1.0]);
        assert_eq!(x[0] - x[2], -4.0);
        assert_eq!(x[0] + x[2], 10.0);
    }
}
