//! Solve stages, their dependencies, and an on-disk artifact store.
//!
//! Every stage writes `<stage>.hjvf` plus a metadata sidecar (and
//! `<stage>.times.hjvf` for stages that produce crossing times). Under the
//! invariant-set variant the vertical game also stores the plain-contact game
//! as `vertical_game.contact.hjvf` and `vertical_game.contact.times.hjvf`. The metadata
//! carries a hash of everything the stage depends on: scenario, stage config,
//! and the hash of the upstream stage. Loading compares that hash and refuses
//! stale files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{GameArtifacts, GoalArtifacts, HorizontalArtifacts, TimeField, VerticalArtifacts};
use crate::dynamics::{DynamicsModel, ModelKind};
use crate::error::{Error, Result};
use crate::geometry::{
    build_attacker_reach_costs, build_horizontal_costs, build_tracking_cost_h, build_tracking_cost_z,
    build_vertical_cost, CaptureVariant, Scenario,
};
use crate::grid::ScalarField;
use crate::hji::{solve_max_tracking, solve_reach, solve_reach_avoid, SolveConfig, ValueSolution};
use crate::hjvf::{read_field, read_meta, write_field, write_meta, FieldMeta};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    VerticalTracking,
    VerticalGame,
    HorizontalTracking,
    HorizontalGame,
    AttackerReach,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::VerticalTracking,
        Stage::VerticalGame,
        Stage::HorizontalTracking,
        Stage::HorizontalGame,
        Stage::AttackerReach,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::VerticalTracking => "vertical-tracking",
            Stage::VerticalGame => "vertical-game",
            Stage::HorizontalTracking => "horizontal-tracking",
            Stage::HorizontalGame => "horizontal-game",
            Stage::AttackerReach => "attacker-reach",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Self::ALL.into_iter().find(|st| st.name() == s)
    }

    fn stem(self) -> String {
        self.name().replace('-', "_")
    }

    pub fn dependency(self) -> Option<Stage> {
        match self {
            Stage::VerticalGame => Some(Stage::VerticalTracking),
            Stage::HorizontalGame => Some(Stage::HorizontalTracking),
            _ => None,
        }
    }

    pub fn model(self) -> ModelKind {
        match self {
            Stage::VerticalTracking => ModelKind::RelVertical2d,
            Stage::VerticalGame => ModelKind::VerticalGame3d,
            Stage::HorizontalTracking => ModelKind::RelHorizontal4d,
            Stage::HorizontalGame => ModelKind::HorizontalGame6d,
            Stage::AttackerReach => ModelKind::AttackerReach2d,
        }
    }

    pub fn has_times(self) -> bool {
        matches!(self, Stage::VerticalGame | Stage::AttackerReach)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub vertical_tracking: SolveConfig,
    pub vertical_game: SolveConfig,
    pub horizontal_tracking: SolveConfig,
    pub horizontal_game: SolveConfig,
    pub attacker_reach: SolveConfig,
    pub variant: CaptureVariant,
    /// Attacker position used to charge obstacle penalties in the horizontal
    /// tracking cost; `None` solves the obstacle-free tracking problem.
    pub tracking_anchor: Option<[f64; 2]>,
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let timed = |horizon| SolveConfig {
            horizon: Some(horizon),
            snapshot_interval: Some(0.1),
            stop_on_convergence: false,
            ..SolveConfig::default()
        };
        Self {
            vertical_tracking: SolveConfig::with_horizon(20.0),
            vertical_game: timed(15.0),
            horizontal_tracking: SolveConfig {
                stop_on_convergence: false,
                ..SolveConfig::with_horizon(2.5)
            },
            horizontal_game: SolveConfig::with_horizon(20.0),
            attacker_reach: timed(25.0),
            variant: CaptureVariant::InvariantSet,
            tracking_anchor: None,
            seed: None,
        }
    }
}

impl PipelineConfig {
    pub fn solve_config(&self, stage: Stage) -> &SolveConfig {
        match stage {
            Stage::VerticalTracking => &self.vertical_tracking,
            Stage::VerticalGame => &self.vertical_game,
            Stage::HorizontalTracking => &self.horizontal_tracking,
            Stage::HorizontalGame => &self.horizontal_game,
            Stage::AttackerReach => &self.attacker_reach,
        }
    }

    pub fn solve_config_mut(&mut self, stage: Stage) -> &mut SolveConfig {
        match stage {
            Stage::VerticalTracking => &mut self.vertical_tracking,
            Stage::VerticalGame => &mut self.vertical_game,
            Stage::HorizontalTracking => &mut self.horizontal_tracking,
            Stage::HorizontalGame => &mut self.horizontal_game,
            Stage::AttackerReach => &mut self.attacker_reach,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StageOutput {
    pub field: ScalarField,
    pub crossing: Option<TimeField>,
    /// Plain-contact vertical game and its crossing times.
    pub contact: Option<(ScalarField, TimeField)>,
    pub meta: FieldMeta,
}

/// Stage solver bound to a scenario, a config and an output directory.
pub struct Pipeline {
    pub scenario: Scenario,
    pub config: PipelineConfig,
    dir: PathBuf,
}

impl Pipeline {
    pub fn new(scenario: Scenario, config: PipelineConfig, dir: impl Into<PathBuf>) -> Result<Self> {
        scenario.validate()?;
        for st in Stage::ALL {
            config.solve_config(st).validate()?;
        }
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            scenario,
            config,
            dir,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn field_path(&self, stage: Stage) -> PathBuf {
        self.dir.join(format!("{}.hjvf", stage.stem()))
    }

    pub fn times_path(&self, stage: Stage) -> PathBuf {
        self.dir.join(format!("{}.times.hjvf", stage.stem()))
    }

    fn contact_paths(&self) -> (PathBuf, PathBuf) {
        let stem = Stage::VerticalGame.stem();
        (
            self.dir.join(format!("{stem}.contact.hjvf")),
            self.dir.join(format!("{stem}.contact.times.hjvf")),
        )
    }

    fn has_contact(&self, stage: Stage) -> bool {
        stage == Stage::VerticalGame && self.config.variant == CaptureVariant::InvariantSet
    }

    /// Hash of everything `stage` depends on, including upstream stages.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let upstream = stage.dependency().map(|d| self.stage_hash(d));
        let variant = match stage {
            Stage::VerticalGame | Stage::HorizontalGame => Some(self.config.variant),
            _ => None,
        };
        let anchor = (stage == Stage::HorizontalTracking)
            .then_some(self.config.tracking_anchor)
            .flatten();
        let mut doc = serde_json::json!({
            "stage": stage,
            "scenario": self.scenario.hash(),
            "solve": self.config.solve_config(stage),
            "variant": variant,
            "anchor": anchor,
            "upstream": upstream,
        });
        if self.has_contact(stage) {
            doc["contact"] = true.into();
        }
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }

    /// Loads a stage's artifact, refusing missing or stale files.
    pub fn load(&self, stage: Stage) -> Result<StageOutput> {
        let path = self.field_path(stage);
        if !path.exists() {
            return Err(Error::MissingArtifact(format!(
                "{} (expected {})",
                stage.name(),
                path.display()
            )));
        }
        let meta = read_meta(&path)?;
        let expected = self.stage_hash(stage);
        if meta.parameter_hash != expected {
            return Err(Error::StaleArtifact {
                name: stage.name().into(),
                expected,
                found: meta.parameter_hash,
            });
        }
        let field = read_field(&path)?;
        let crossing = if stage.has_times() {
            Some(TimeField::new(read_field(&self.times_path(stage))?)?)
        } else {
            None
        };
        let contact = if self.has_contact(stage) {
            let (f, t) = self.contact_paths();
            Some((read_field(&f)?, TimeField::new(read_field(&t)?)?))
        } else {
            None
        };
        Ok(StageOutput {
            field,
            crossing,
            contact,
            meta,
        })
    }

    pub fn is_fresh(&self, stage: Stage) -> bool {
        read_meta(&self.field_path(stage))
            .is_ok_and(|m| m.parameter_hash == self.stage_hash(stage))
    }

    /// Solves `stage`; its upstream artifact must already be on disk.
    pub fn solve(&self, stage: Stage) -> Result<StageOutput> {
        let upstream = stage.dependency().map(|d| self.load(d)).transpose()?;
        let s = &self.scenario;
        let d = &s.domains;
        let cfg = self.config.solve_config(stage);
        let model = DynamicsModel::from_scenario(stage.model(), s);
        let capture = upstream.as_ref().map(|u| &u.field);
        let start = Instant::now();
        let contact = if self.has_contact(stage) {
            let l = build_vertical_cost(s, &d.vertical_game, CaptureVariant::Classic, None)?;
            let sol = solve_reach(&model, &l, cfg)?;
            let times = sol
                .crossing
                .ok_or_else(|| Error::MissingArtifact("vertical-game contact times".into()))?;
            Some((sol.field, times))
        } else {
            None
        };
        let sol: ValueSolution = match stage {
            Stage::VerticalTracking => {
                solve_max_tracking(&model, &build_tracking_cost_z(&d.vertical_tracking)?, cfg)?
            }
            Stage::HorizontalTracking => {
                let l = build_tracking_cost_h(s, &d.horizontal_tracking, self.config.tracking_anchor)?;
                solve_max_tracking(&model, &l, cfg)?
            }
            Stage::VerticalGame => {
                let l = build_vertical_cost(s, &d.vertical_game, self.config.variant, capture)?;
                solve_reach(&model, &l, cfg)?
            }
            Stage::HorizontalGame => {
                let (l, g) = build_horizontal_costs(s, &d.horizontal_game, self.config.variant, capture)?;
                solve_reach_avoid(&model, &l, &g, cfg)?
            }
            Stage::AttackerReach => {
                let (l, g) = build_attacker_reach_costs(s, &d.attacker_reach)?;
                solve_reach_avoid(&model, &l, &g, cfg)?
            }
        };
        let meta = FieldMeta {
            dynamics: model.kind.id().into(),
            parameter_hash: self.stage_hash(stage),
            horizon: sol.final_horizon,
            tolerance: cfg.tolerance,
            iterations: sol.iterations(),
            converged: sol.converged,
            final_rate: sol.history.last().copied(),
            cfl: cfg.cfl,
            seed: self.config.seed,
            inputs: upstream.iter().map(|u| u.meta.parameter_hash.clone()).collect(),
            wall_ms: Some(start.elapsed().as_millis() as u64),
        };
        let path = self.field_path(stage);
        write_field(&path, &sol.field)?;
        if let Some(tf) = &sol.crossing {
            write_field(&self.times_path(stage), tf.field())?;
        }
        if let Some((f, t)) = &contact {
            let (fp, tp) = self.contact_paths();
            write_field(&fp, f)?;
            write_field(&tp, t.field())?;
        }
        write_meta(&path, &meta)?;
        Ok(StageOutput {
            field: sol.field,
            crossing: sol.crossing,
            contact,
            meta,
        })
    }

    /// Loads `stage` when fresh, otherwise solves it (and its upstream) first.
    pub fn ensure(&self, stage: Stage) -> Result<StageOutput> {
        if self.is_fresh(stage) {
            if let Ok(out) = self.load(stage) {
                return Ok(out);
            }
        }
        if let Some(dep) = stage.dependency() {
            if !self.is_fresh(dep) {
                self.solve(dep)?;
            }
        }
        self.solve(stage)
    }

    fn fetch(&self, stage: Stage, solve_missing: bool) -> Result<StageOutput> {
        if solve_missing {
            self.ensure(stage)
        } else {
            self.load(stage)
        }
    }

    fn times(out: StageOutput, stage: Stage) -> Result<(ScalarField, TimeField)> {
        let tf = out
            .crossing
            .ok_or_else(|| Error::MissingArtifact(format!("{} crossing times", stage.name())))?;
        Ok((out.field, tf))
    }

    pub fn vertical_artifacts(&self, solve_missing: bool) -> Result<VerticalArtifacts> {
        let tracking = self.fetch(Stage::VerticalTracking, solve_missing)?.field;
        let mut out = self.fetch(Stage::VerticalGame, solve_missing)?;
        let contact = out.contact.take();
        let (game, capture_time) = Self::times(out, Stage::VerticalGame)?;
        let (contact_game, contact_time) = match contact {
            Some(c) => c,
            None => (game.clone(), capture_time.clone()),
        };
        Ok(VerticalArtifacts::new(game, tracking, capture_time, contact_game, contact_time))
    }

    pub fn horizontal_artifacts(&self, solve_missing: bool) -> Result<HorizontalArtifacts> {
        let tracking = self.fetch(Stage::HorizontalTracking, solve_missing)?.field;
        let game = self.fetch(Stage::HorizontalGame, solve_missing)?.field;
        Ok(HorizontalArtifacts { game, tracking })
    }

    pub fn goal_artifacts(&self, solve_missing: bool) -> Result<GoalArtifacts> {
        let (reach, goal_time) =
            Self::times(self.fetch(Stage::AttackerReach, solve_missing)?, Stage::AttackerReach)?;
        GoalArtifacts::new(reach, goal_time)
    }

    pub fn artifacts(&self, solve_missing: bool) -> Result<GameArtifacts> {
        Ok(GameArtifacts {
            scenario: self.scenario.clone(),
            vertical: Some(self.vertical_artifacts(solve_missing)?),
            horizontal: Some(self.horizontal_artifacts(solve_missing)?),
            goal: Some(self.goal_artifacts(solve_missing)?),
        })
    }
}
