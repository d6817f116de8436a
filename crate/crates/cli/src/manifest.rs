use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use reachtrack::geometry::Scenario;
use reachtrack::grid::{Axis, GridSpec};
use reachtrack::pipeline::{PipelineConfig, Stage};
use serde::{Deserialize, Serialize};

/// Full-scale 6D grid in `(x_D, y_D, v_x, v_y, x_A, y_A)` order.
pub const PAPER_SCALE_6D: [usize; 6] = [85, 45, 8, 7, 85, 45];

/// Everything a pipeline run depends on. Written next to the artifacts.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PipelineManifest {
    /// Scenario JSON; the built-in reference scenario when absent.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    /// Node counts per stage name, keeping each domain's bounds.
    #[serde(default)]
    pub grids: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub out: PathBuf,
    #[serde(default)]
    pub config: PipelineConfig,
}

impl PipelineManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        Ok(serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?)
    }

    pub fn save(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// The scenario with grid overrides applied.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.scenario {
            Some(p) => {
                if !p.exists() {
                    bail!("scenario file {} does not exist", p.display());
                }
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", p.display()))?
            }
            None => Scenario::reference(),
        };
        for (name, counts) in &self.grids {
            let stage = Stage::parse(name).with_context(|| format!("unknown stage {name:?} in grid overrides"))?;
            let grid = domain_mut(&mut s, stage);
            *grid = resize(grid, counts)?;
        }
        s.validate()?;
        Ok(s)
    }
}

pub fn domain_mut(s: &mut Scenario, stage: Stage) -> &mut GridSpec {
    let d = &mut s.domains;
    match stage {
        Stage::VerticalTracking => &mut d.vertical_tracking,
        Stage::VerticalGame => &mut d.vertical_game,
        Stage::HorizontalTracking => &mut d.horizontal_tracking,
        Stage::HorizontalGame => &mut d.horizontal_game,
        Stage::AttackerReach => &mut d.attacker_reach,
    }
}

pub fn resize(grid: &GridSpec, counts: &[usize]) -> Result<GridSpec> {
    if counts.len() != grid.ndim() {
        bail!("grid override has {} axes, domain has {}", counts.len(), grid.ndim());
    }
    let axes = grid
        .axes()
        .iter()
        .zip(counts)
        .map(|(a, &n)| Axis::new(n, a.min, a.max))
        .collect();
    Ok(GridSpec::new(axes)?)
}

/// Parses `480x200` style node counts.
pub fn parse_counts(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X', ','])
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad node count {t:?} in {s:?}")))
        .collect()
}
