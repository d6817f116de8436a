//! Signed-distance set algebra and the scenario cost fields.
//!
//! Sign convention: negative strictly inside a set, positive strictly outside,
//! zero on the boundary. Unions take the pointwise minimum, intersections the
//! maximum, complements negate. Composite magnitudes are not re-distanced.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, ScalarField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ImplicitSet {
    /// `{ p | normal . p <= offset }`
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// Axis-aligned box `[min, max]`.
    Box { min: Vec<f64>, max: Vec<f64> },
    Circle { center: [f64; 2], radius: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    /// Vertical cylinder over `(x, y, z)`; unbounded in z unless a range is given.
    Cylinder {
        center: [f64; 2],
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z_range: Option<[f64; 2]>,
    },
    Union { sets: Vec<ImplicitSet> },
    Intersection { sets: Vec<ImplicitSet> },
    Complement { set: Box<ImplicitSet> },
}

impl ImplicitSet {
    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Self {
        Self::Halfspace { normal, offset }
    }

    pub fn aabb(min: Vec<f64>, max: Vec<f64>) -> Self {
        Self::Box { min, max }
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self::Circle { center, radius }
    }

    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        Self::Sphere { center, radius }
    }

    pub fn union(sets: Vec<ImplicitSet>) -> Self {
        Self::Union { sets }
    }

    pub fn intersection(sets: Vec<ImplicitSet>) -> Self {
        Self::Intersection { sets }
    }

    pub fn complement(set: ImplicitSet) -> Self {
        Self::Complement { set: Box::new(set) }
    }

    /// Number of coordinates the set is defined over.
    pub fn arity(&self) -> Result<usize> {
        match self {
            Self::Halfspace { normal, .. } => Ok(normal.len()),
            Self::Box { min, .. } => Ok(min.len()),
            Self::Circle { .. } => Ok(2),
            Self::Sphere { .. } | Self::Cylinder { .. } => Ok(3),
            Self::Union { sets } | Self::Intersection { sets } => {
                let first = sets
                    .first()
                    .ok_or_else(|| Error::InvalidScenario("empty set composition".into()))?
                    .arity()?;
                for s in &sets[1..] {
                    let a = s.arity()?;
                    if a != first {
                        return Err(Error::DimensionMismatch {
                            expected: first,
                            got: a,
                        });
                    }
                }
                Ok(first)
            }
            Self::Complement { set } => set.arity(),
        }
    }

    /// Checks geometric parameters and arity consistency.
    pub fn validate(&self) -> Result<usize> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.to_string()));
        match self {
            Self::Halfspace { normal, offset } => {
                let n2: f64 = normal.iter().map(|v| v * v).sum();
                if normal.is_empty() || !(n2 > 0.0) || !offset.is_finite() {
                    return bad("halfspace needs a non-zero normal and finite offset");
                }
            }
            Self::Box { min, max } => {
                if min.is_empty()
                    || min.len() != max.len()
                    || min.iter().zip(max).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b))
                {
                    return bad("box needs matching finite min <= max");
                }
            }
            Self::Circle { radius, .. } | Self::Sphere { radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad("radius must be positive");
                }
            }
            Self::Cylinder { radius, z_range, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad("radius must be positive");
                }
                if let Some([lo, hi]) = z_range {
                    if !(lo < hi) {
                        return bad("cylinder z range must be increasing");
                    }
                }
            }
            Self::Union { sets } | Self::Intersection { sets } => {
                for s in sets {
                    s.validate()?;
                }
            }
            Self::Complement { set } => {
                set.validate()?;
            }
        }
        self.arity()
    }

    pub fn eval_signed(&self, point: &[f64]) -> Result<f64> {
        let arity = self.arity()?;
        if point.len() != arity {
            return Err(Error::DimensionMismatch {
                expected: arity,
                got: point.len(),
            });
        }
        Ok(self.eval(point))
    }

    /// Unchecked evaluation; `point` must have the set's arity.
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            Self::Halfspace { normal, offset } => {
                let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dot: f64 = normal.iter().zip(p).map(|(n, x)| n * x).sum();
                (dot - offset) / norm
            }
            Self::Box { min, max } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for ((&lo, &hi), &x) in min.iter().zip(max).zip(p) {
                    let q = (x - 0.5 * (lo + hi)).abs() - 0.5 * (hi - lo);
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                outside.sqrt() + inside.min(0.0)
            }
            Self::Circle { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) - radius
            }
            Self::Sphere { center, radius } => {
                let d: f64 = center.iter().zip(p).map(|(c, x)| (x - c).powi(2)).sum();
                d.sqrt() - radius
            }
            Self::Cylinder {
                center,
                radius,
                z_range,
            } => {
                let radial = (p[0] - center[0]).hypot(p[1] - center[1]) - radius;
                match z_range {
                    None => radial,
                    Some([lo, hi]) => {
                        let axial = (p[2] - 0.5 * (lo + hi)).abs() - 0.5 * (hi - lo);
                        radial.max(0.0).hypot(axial.max(0.0)) + radial.max(axial).min(0.0)
                    }
                }
            }
            Self::Union { sets } => sets.iter().map(|s| s.eval(p)).fold(f64::INFINITY, f64::min),
            Self::Intersection { sets } => sets
                .iter()
                .map(|s| s.eval(p))
                .fold(f64::NEG_INFINITY, f64::max),
            Self::Complement { set } => -set.eval(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedBounds {
    #[serde(rename = "UhD")]
    pub uh_d: f64,
    #[serde(rename = "UhA")]
    pub uh_a: f64,
    #[serde(rename = "UzD")]
    pub uz_d: f64,
    #[serde(rename = "UzA")]
    pub uz_a: f64,
}

/// Grid boxes for every sub-problem, in each model's state order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domains {
    /// `(z_rel, v_z_D)`
    pub vertical_tracking: GridSpec,
    /// `(z_D, v_z_D, z_A)`
    pub vertical_game: GridSpec,
    /// `(x_rel, y_rel, v_x_D, v_y_D)`
    pub horizontal_tracking: GridSpec,
    /// `(x_D, y_D, v_x_D, v_y_D, x_A, y_A)`
    pub horizontal_game: GridSpec,
    /// `(x_A, y_A)`
    pub attacker_reach: GridSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub target: ImplicitSet,
    #[serde(default)]
    pub obstacles: Vec<ImplicitSet>,
    pub d_h: f64,
    pub d_z: f64,
    pub gains: Gains,
    pub bounds: SpeedBounds,
    #[serde(rename = "K")]
    pub k_penalty: f64,
    pub domains: Domains,
}

fn axes(triples: &[(usize, f64, f64)]) -> GridSpec {
    GridSpec::from_triples(triples).expect("static grid definition")
}

impl Scenario {
    /// Reference game: target `x <= 3`, a circular and a rectangular obstacle,
    /// defender twice as fast as the attacker, desk-scale grids.
    pub fn reference() -> Self {
        Self {
            target: ImplicitSet::halfspace(vec![1.0, 0.0], 3.0),
            obstacles: vec![
                ImplicitSet::circle([20.0, 17.0], 3.0),
                ImplicitSet::aabb(vec![29.0, 4.0], vec![33.0, 9.0]),
            ],
            d_h: 3.0,
            d_z: 1.0,
            gains: Gains {
                kx: 0.7,
                ky: 0.7,
                kz: 1.5,
            },
            bounds: SpeedBounds {
                uh_d: 6.0,
                uh_a: 3.0,
                uz_d: 4.0,
                uz_a: 2.0,
            },
            k_penalty: 1000.0,
            domains: Domains {
                vertical_tracking: axes(&[(480, -10.0, 10.0), (200, -4.0, 4.0)]),
                vertical_game: axes(&[(121, 0.0, 10.0), (61, -4.0, 4.0), (121, 0.0, 10.0)]),
                horizontal_tracking: axes(&[
                    (41, -3.0, 3.0),
                    (41, -3.0, 3.0),
                    (31, -6.0, 6.0),
                    (31, -6.0, 6.0),
                ]),
                horizontal_game: axes(&[
                    (45, 0.0, 45.0),
                    (25, 0.0, 25.0),
                    (7, -6.0, 6.0),
                    (7, -6.0, 6.0),
                    (45, 0.0, 45.0),
                    (25, 0.0, 25.0),
                ]),
                attacker_reach: axes(&[(181, 0.0, 45.0), (101, 0.0, 25.0)]),
            },
        }
    }

    /// Same game on the full-resolution grids (hours of compute for the 6D solve).
    pub fn reference_paper_scale() -> Self {
        let mut s = Self::reference();
        s.domains.horizontal_tracking = axes(&[
            (60, -3.0, 3.0),
            (60, -3.0, 3.0),
            (75, -6.0, 6.0),
            (75, -6.0, 6.0),
        ]);
        s.domains.horizontal_game = axes(&[
            (85, 0.0, 45.0),
            (45, 0.0, 25.0),
            (8, -6.0, 6.0),
            (7, -6.0, 6.0),
            (85, 0.0, 45.0),
            (45, 0.0, 25.0),
        ]);
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.target.validate()? != 2 {
            return bad("target must be defined over horizontal (x, y) coordinates".into());
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.validate()? != 2 {
                return bad(format!("obstacle {i} must be defined over (x, y)"));
            }
        }
        let positive = [
            ("d_h", self.d_h),
            ("d_z", self.d_z),
            ("kx", self.gains.kx),
            ("ky", self.gains.ky),
            ("kz", self.gains.kz),
            ("UhD", self.bounds.uh_d),
            ("UhA", self.bounds.uh_a),
            ("UzD", self.bounds.uz_d),
            ("UzA", self.bounds.uz_a),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.k_penalty > self.d_h) {
            return bad(format!("K = {} must exceed d_h = {}", self.k_penalty, self.d_h));
        }
        let dims = [
            ("vertical_tracking", &self.domains.vertical_tracking, 2),
            ("vertical_game", &self.domains.vertical_game, 3),
            ("horizontal_tracking", &self.domains.horizontal_tracking, 4),
            ("horizontal_game", &self.domains.horizontal_game, 6),
            ("attacker_reach", &self.domains.attacker_reach, 2),
        ];
        for (name, g, d) in dims {
            if g.ndim() != d {
                return bad(format!("{name} grid must be {d}-dimensional"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn target_distance(&self, p: &[f64]) -> f64 {
        self.target.eval(p)
    }

    /// Signed distance to the obstacle union, `None` when there are no obstacles.
    pub fn obstacle_distance(&self, p: &[f64]) -> Option<f64> {
        self.obstacles.iter().map(|o| o.eval(p)).reduce(f64::min)
    }

    pub fn in_target(&self, p: &[f64]) -> bool {
        self.target_distance(p) <= 0.0
    }

    pub fn in_obstacle(&self, p: &[f64]) -> bool {
        self.obstacle_distance(p).is_some_and(|d| d <= 0.0)
    }
}

/// Which capture set seeds a game solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureVariant {
    /// Plain distance ball / slab.
    Classic,
    /// Sublevel set of a maximum-tracking value function.
    InvariantSet,
}

fn check_grid(grid: &GridSpec, expected: &GridSpec, ndim: usize, what: &str) -> Result<()> {
    if grid.ndim() != ndim {
        return Err(Error::DimensionMismatch {
            expected: ndim,
            got: grid.ndim(),
        });
    }
    if grid.axes().iter().zip(expected.axes()).any(|(a, b): (&Axis, &Axis)| {
        a.min != b.min || a.max != b.max
    }) {
        return Err(Error::InvalidConfig(format!(
            "{what} grid box does not match the scenario's axis order"
        )));
    }
    Ok(())
}

fn require_capture<'a>(
    variant: CaptureVariant,
    field: Option<&'a ScalarField>,
    ndim: usize,
) -> Result<Option<&'a ScalarField>> {
    match variant {
        CaptureVariant::Classic => Ok(None),
        CaptureVariant::InvariantSet => {
            let f = field.ok_or_else(|| {
                Error::MissingArtifact("capture-set field for the invariant-set variant".into())
            })?;
            if f.spec().ndim() != ndim {
                return Err(Error::DimensionMismatch {
                    expected: ndim,
                    got: f.spec().ndim(),
                });
            }
            Ok(Some(f))
        }
    }
}

/// Maximum-tracking value at a relative state; outside the tracking grid the
/// clamped lookup is floored by the plain distance, which the value never
/// undercuts.
pub(crate) fn tracking_value(field: &ScalarField, rel: &[f64], distance: f64) -> f64 {
    let s = field.interpolate(rel).expect("finite relative state");
    s.value.max(distance)
}

/// Reach cost `l` and avoid cost `g` over `(x_D, y_D, v_x_D, v_y_D, x_A, y_A)`.
pub fn build_horizontal_costs(
    scenario: &Scenario,
    grid6: &GridSpec,
    variant: CaptureVariant,
    capture_set_field: Option<&ScalarField>,
) -> Result<(ScalarField, ScalarField)> {
    check_grid(grid6, &scenario.domains.horizontal_game, 6, "horizontal game")?;
    let vh = require_capture(variant, capture_set_field, 4)?;
    let l = ScalarField::from_fn(grid6.clone(), |x| {
        let reach = scenario.target_distance(&x[4..6]);
        match scenario.obstacle_distance(&x[0..2]) {
            Some(o) => reach.min(o),
            None => reach,
        }
    });
    let g = ScalarField::from_fn(grid6.clone(), |x| {
        let rel = [x[0] - x[4], x[1] - x[5], x[2], x[3]];
        let dist = rel[0].hypot(rel[1]);
        let margin = match vh {
            None => dist - scenario.d_h,
            Some(f) => tracking_value(f, &rel, dist) - scenario.d_h,
        };
        let captured_outside = margin.max(-scenario.target_distance(&x[4..6]));
        let inner = match scenario.obstacle_distance(&x[4..6]) {
            Some(o) => captured_outside.min(o),
            None => captured_outside,
        };
        -inner
    });
    Ok((l, g))
}

/// Vertical reach cost over `(z_D, v_z_D, z_A)`.
pub fn build_vertical_cost(
    scenario: &Scenario,
    grid3: &GridSpec,
    variant: CaptureVariant,
    capture_set_field: Option<&ScalarField>,
) -> Result<ScalarField> {
    if grid3.ndim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: grid3.ndim(),
        });
    }
    let vz = require_capture(variant, capture_set_field, 2)?;
    Ok(ScalarField::from_fn(grid3.clone(), |x| {
        let z_rel = x[0] - x[2];
        match vz {
            None => z_rel.abs() - scenario.d_z,
            Some(f) => tracking_value(f, &[z_rel, x[1]], z_rel.abs()) - scenario.d_z,
        }
    }))
}

/// Horizontal tracking cost over `(x_rel, y_rel, v_x_D, v_y_D)`.
///
/// With an anchor, the defender position `anchor + rel` is tested against the
/// obstacles and pays `K` inside them; without one the cost is the planar
/// distance alone.
pub fn build_tracking_cost_h(
    scenario: &Scenario,
    grid4: &GridSpec,
    attacker_anchor: Option<[f64; 2]>,
) -> Result<ScalarField> {
    if grid4.ndim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: grid4.ndim(),
        });
    }
    Ok(ScalarField::from_fn(grid4.clone(), |x| {
        let rel = x[0].hypot(x[1]);
        let penalty = match attacker_anchor {
            Some([ax, ay]) if scenario.in_obstacle(&[ax + x[0], ay + x[1]]) => scenario.k_penalty,
            _ => 0.0,
        };
        rel.max(penalty)
    }))
}

/// Vertical tracking cost `|z_rel|` over `(z_rel, v_z_D)`.
pub fn build_tracking_cost_z(grid2: &GridSpec) -> Result<ScalarField> {
    if grid2.ndim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: grid2.ndim(),
        });
    }
    Ok(ScalarField::from_fn(grid2.clone(), |x| x[0].abs()))
}

/// Attacker-only reach (`l`, signed distance to the target) and avoid
/// (`g`, positive inside obstacles) costs over `(x_A, y_A)`.
pub fn build_attacker_reach_costs(
    scenario: &Scenario,
    grid2: &GridSpec,
) -> Result<(ScalarField, ScalarField)> {
    if grid2.ndim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: grid2.ndim(),
        });
    }
    let l = ScalarField::from_fn(grid2.clone(), |x| scenario.target_distance(x));
    let g = ScalarField::from_fn(grid2.clone(), |x| {
        scenario.obstacle_distance(x).map_or(-1e6, |o| -o)
    });
    Ok((l, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfspace_signed_distance() {
        let t = ImplicitSet::halfspace(vec![1.0], 3.0);
        assert_eq!(t.eval_signed(&[5.0]).unwrap(), 2.0);
        assert_eq!(t.eval_signed(&[3.0]).unwrap(), 0.0);
        assert_eq!(t.eval_signed(&[1.0]).unwrap(), -2.0);
        assert!(t.eval_signed(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn union_is_min_and_sphere_center_depth() {
        let u = ImplicitSet::union(vec![
            ImplicitSet::circle([0.0, 0.0], 1.0),
            ImplicitSet::circle([10.0, 0.0], 1.0),
        ]);
        // 5 from A's centre (4 from its boundary), 2 from B's centre (1 from boundary)
        assert_eq!(u.eval_signed(&[8.0, 0.0]).unwrap(), 1.0);
        let s = ImplicitSet::sphere([0.0, 0.0, 0.0], 2.0);
        assert_eq!(s.eval_signed(&[0.0, 0.0, 0.0]).unwrap(), -2.0);
    }

    #[test]
    fn box_and_cylinder_distances() {
        let b = ImplicitSet::aabb(vec![0.0, 0.0], vec![2.0, 4.0]);
        assert_eq!(b.eval(&[1.0, 1.0]), -1.0);
        assert_eq!(b.eval(&[5.0, 8.0]), 5.0);
        let c = ImplicitSet::Cylinder {
            center: [0.0, 0.0],
            radius: 1.0,
            z_range: Some([0.0, 2.0]),
        };
        assert_eq!(c.eval(&[0.0, 0.0, 1.0]), -1.0);
        assert_eq!(c.eval(&[0.0, 0.0, 5.0]), 3.0);
        assert!((c.eval(&[4.0, 0.0, 6.0]) - 5.0).abs() < 1e-12);
        let inf = ImplicitSet::Cylinder {
            center: [0.0, 0.0],
            radius: 1.0,
            z_range: None,
        };
        assert_eq!(inf.eval(&[3.0, 0.0, -100.0]), 2.0);
    }

    #[test]
    fn mixed_arity_is_rejected() {
        let bad = ImplicitSet::union(vec![
            ImplicitSet::circle([0.0, 0.0], 1.0),
            ImplicitSet::sphere([0.0, 0.0, 0.0], 1.0),
        ]);
        assert!(bad.arity().is_err());
    }

    #[test]
    fn set_expr_json() {
        let text = r#"{"op":"union","sets":[
            {"op":"halfspace","normal":[1,0],"offset":3},
            {"op":"complement","set":{"op":"circle","center":[0,0],"radius":1}}]}"#;
        let s: ImplicitSet = serde_json::from_str(text).unwrap();
        assert_eq!(s.validate().unwrap(), 2);
        assert_eq!(s.eval(&[10.0, 0.0]), -9.0);
    }

    #[test]
    fn scenario_validation_and_hash() {
        let s = Scenario::reference();
        s.validate().unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"UhD\"") && json.contains("\"K\""));
        let back = Scenario::from_json(&json).unwrap();
        assert_eq!(back.hash(), s.hash());

        let mut bad = s.clone();
        bad.k_penalty = 2.0;
        assert!(bad.validate().is_err());
        let mut bad = s.clone();
        bad.target = ImplicitSet::sphere([0.0, 0.0, 0.0], 1.0);
        assert!(bad.validate().is_err());
        let mut changed = s.clone();
        changed.d_z = 1.5;
        assert_ne!(changed.hash(), s.hash());
    }

    fn small_scenario() -> Scenario {
        let mut s = Scenario::reference();
        s.domains.horizontal_game = axes(&[
            (10, 0.0, 45.0),
            (6, 0.0, 25.0),
            (3, -6.0, 6.0),
            (3, -6.0, 6.0),
            (10, 0.0, 45.0),
            (6, 0.0, 25.0),
        ]);
        s
    }

    #[test]
    fn horizontal_cost_signs() {
        let s = small_scenario();
        let grid = s.domains.horizontal_game.clone();
        let (l, g) = build_horizontal_costs(&s, &grid, CaptureVariant::Classic, None).unwrap();
        let mut p = [0.0; 6];
        for flat in 0..grid.len() {
            grid.node_point(flat, &mut p);
            if s.in_target(&p[4..6]) || s.in_obstacle(&p[0..2]) {
                assert!(l.values()[flat] <= 0.0);
            }
        }
        assert!(matches!(
            build_horizontal_costs(&s, &grid, CaptureVariant::InvariantSet, None),
            Err(Error::MissingArtifact(_))
        ));
        let wrong = axes(&[(3, 0.0, 1.0); 6]);
        assert!(build_horizontal_costs(&s, &wrong, CaptureVariant::Classic, None).is_err());
        assert!(g.all_finite());
    }

    #[test]
    fn horizontal_cost_point_checks() {
        let s = Scenario::reference();
        // defender at obstacle centre -> l < 0 whatever the attacker does
        let l = |x: [f64; 6]| {
            s.target_distance(&x[4..6])
                .min(s.obstacle_distance(&x[0..2]).unwrap())
        };
        assert!(l([20.0, 17.0, 0.0, 0.0, 40.0, 5.0]) < 0.0);
        assert!(l([10.0, 10.0, 0.0, 0.0, 2.0, 5.0]) < 0.0);
        // capture boundary, attacker clear of target and obstacles: g = 0
        let grid = axes(&[
            (3, 10.0, 12.0),
            (3, 10.0, 12.0),
            (3, -6.0, 6.0),
            (3, -6.0, 6.0),
            (3, 13.0, 15.0),
            (3, 10.0, 12.0),
        ]);
        let mut s2 = s.clone();
        s2.domains.horizontal_game = grid.clone();
        let (_, g) = build_horizontal_costs(&s2, &grid, CaptureVariant::Classic, None).unwrap();
        // x_D = 10, x_A = 13, same y: distance 3 = d_h
        assert_eq!(g.get(&[0, 0, 0, 0, 0, 0]), 0.0);
    }

    #[test]
    fn vertical_costs() {
        let s = Scenario::reference();
        let grid = axes(&[(11, 0.0, 10.0), (3, -4.0, 4.0), (11, 0.0, 10.0)]);
        let l = build_vertical_cost(&s, &grid, CaptureVariant::Classic, None).unwrap();
        assert_eq!(l.get(&[4, 1, 4]), -1.0);
        assert_eq!(l.get(&[5, 1, 4]), 0.0);
        let vz = ScalarField::constant(axes(&[(5, -10.0, 10.0), (5, -4.0, 4.0)]), 0.4);
        let l = build_vertical_cost(&s, &grid, CaptureVariant::InvariantSet, Some(&vz)).unwrap();
        assert!((l.get(&[3, 0, 3]) + 0.6).abs() < 1e-12);
        assert!(build_vertical_cost(&s, &grid, CaptureVariant::InvariantSet, None).is_err());
    }

    #[test]
    fn tracking_costs() {
        let s = Scenario::reference();
        let grid = axes(&[(7, -3.0, 3.0), (9, -4.0, 4.0), (3, -6.0, 6.0), (3, -6.0, 6.0)]);
        let l = build_tracking_cost_h(&s, &grid, None).unwrap();
        assert_eq!(l.get(&[6, 8, 1, 1]), 5.0);
        assert_eq!(l.get(&[3, 4, 0, 2]), 0.0);
        // anchor at the circle obstacle's centre: zero offset is inside it
        let l = build_tracking_cost_h(&s, &grid, Some([20.0, 17.0])).unwrap();
        assert_eq!(l.get(&[3, 4, 1, 1]), 1000.0);
        let lz = build_tracking_cost_z(&axes(&[(5, -2.0, 2.0), (3, -4.0, 4.0)])).unwrap();
        assert_eq!(lz.get(&[0, 1]), 2.0);
    }
}
