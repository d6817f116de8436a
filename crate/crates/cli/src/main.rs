mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reachtrack::analysis::{classify, ClassificationResult, ClassifyConfig, GameArtifacts, Verdict};
use reachtrack::control::{
    AdversarialAttacker, AttackerPolicy, ConstantAttacker, ControllerConfig, DefenderPolicy, GoalSeekingAttacker,
    IdleDefender, ReachTrackDefender,
};
use reachtrack::dynamics::{DynamicsModel, JointState};
use reachtrack::geometry::{build_tracking_cost_h, build_tracking_cost_z, Scenario};
use reachtrack::grid::{GridSpec, ScalarField};
use reachtrack::hji::{solve_max_tracking, solve_reach, SolveConfig};
use reachtrack::hjvf::{read_field, write_field};
use reachtrack::oracle::{oracle_solve_max_tracking, oracle_solve_reach, OracleConfig};
use reachtrack::pipeline::{Pipeline, Stage};
use reachtrack::sim::{self, SimConfig};
use serde::Serialize;

use crate::manifest::{domain_mut, parse_counts, resize, PipelineManifest, PAPER_SCALE_6D};

/// Exit status of `classify --strict` when some state is not decided.
const EXIT_INDETERMINATE: u8 = 2;

#[derive(Parser)]
#[command(name = "reachtrack", version, about = "Reach-avoid game solver for a defender and an attacker drone")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline manifest; flags below override its fields.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Scenario JSON (default: built-in reference scenario).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the 85x45x8x7x85x45 horizontal-game grid.
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one pipeline stage, or all of them in dependency order.
    Solve(SolveArgs),
    /// Classify joint states against the solved fields.
    Classify(ClassifyArgs),
    /// Closed-loop simulation from initial states.
    Simulate(SimulateArgs),
    /// Dump a 2D slice of a field as CSV.
    ExportSlice(SliceArgs),
    /// Compare the grid solver with the brute-force oracle on a small grid.
    OracleDiff(OracleArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// vertical-tracking, vertical-game, horizontal-tracking, horizontal-game, attacker-reach or all.
    kind: String,
    /// Node counts for this stage, e.g. 480x200.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Solve even when a fresh artifact exists.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// JSON array of 9-element states `[xD, yD, zD, vxD, vyD, vzD, xA, yA, zA]`.
    #[arg(long, required_unless_present = "sample")]
    states: Option<PathBuf>,
    /// Classify this many random states drawn with `--seed` instead.
    #[arg(long)]
    sample: Option<usize>,
    /// Game-value safety margin.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Write verdicts here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Exit with status 2 if any state is indeterminate.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DefenderKind {
    ReachTrack,
    Idle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Subsystems {
    Both,
    Horizontal,
    Vertical,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    states: PathBuf,
    #[arg(long, value_enum, default_value = "reach-track")]
    defender: DefenderKind,
    /// adversarial, goal-seeking, goal-evasive, or constant=vx,vy,vz.
    #[arg(long, default_value = "adversarial")]
    attacker: String,
    #[arg(long, value_enum, default_value = "both")]
    subsystems: Subsystems,
    #[arg(long, default_value_t = 0.02)]
    dt: f64,
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    /// Keep integrating after the first terminal event.
    #[arg(long)]
    no_stop: bool,
}

#[derive(Args)]
struct SliceArgs {
    field: PathBuf,
    /// Fixed axis as `index=value`; repeat for each fixed axis.
    #[arg(long = "fix")]
    fix: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// vertical-tracking, horizontal-tracking, vertical-game or attacker-reach.
    kind: String,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 5.0)]
    horizon: f64,
    #[arg(long)]
    cfl: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let manifest = resolve_manifest(&cli.common)?;
    match cli.command {
        Command::Solve(a) => cmd_solve(manifest, a),
        Command::Classify(a) => cmd_classify(manifest, a),
        Command::Simulate(a) => cmd_simulate(manifest, a),
        Command::ExportSlice(a) => cmd_export_slice(a),
        Command::OracleDiff(a) => cmd_oracle_diff(manifest, a),
    }
}

fn resolve_manifest(c: &Common) -> Result<PipelineManifest> {
    let mut m = match &c.manifest {
        Some(p) => PipelineManifest::load(p)?,
        None => PipelineManifest {
            out: PathBuf::from("artifacts"),
            ..PipelineManifest::default()
        },
    };
    if let Some(s) = &c.scenario {
        m.scenario = Some(s.clone());
    }
    if let Some(o) = &c.out {
        m.out = o.clone();
    }
    if m.out.as_os_str().is_empty() {
        m.out = PathBuf::from("artifacts");
    }
    if c.seed.is_some() {
        m.config.seed = c.seed;
    }
    if c.paper_scale {
        m.grids.insert(Stage::HorizontalGame.name().into(), PAPER_SCALE_6D.to_vec());
    }
    Ok(m)
}

fn pipeline(m: &PipelineManifest) -> Result<Pipeline> {
    Ok(Pipeline::new(m.scenario()?, m.config.clone(), &m.out)?)
}

fn cmd_solve(mut m: PipelineManifest, a: SolveArgs) -> Result<ExitCode> {
    let stages: Vec<Stage> = if a.kind == "all" {
        Stage::ALL.to_vec()
    } else {
        vec![Stage::parse(&a.kind).with_context(|| format!("unknown stage {:?}", a.kind))?]
    };
    if stages.len() > 1 && a.grid.is_some() {
        bail!("--grid applies to a single stage");
    }
    for &st in &stages {
        if let Some(g) = &a.grid {
            m.grids.insert(st.name().into(), parse_counts(g)?);
        }
        let cfg = m.config.solve_config_mut(st);
        if let Some(h) = a.horizon {
            cfg.horizon = Some(h);
        }
        if let Some(c) = a.cfl {
            cfg.cfl = c;
        }
        if let Some(t) = a.tol {
            cfg.tolerance = t;
        }
    }
    let p = pipeline(&m)?;
    m.save()?;
    for st in stages {
        let out = if !a.force && p.is_fresh(st) {
            println!("{}: fresh artifact, skipping", st.name());
            p.load(st)?
        } else {
            p.solve(st)?
        };
        let meta = &out.meta;
        println!(
            "{}: grid {:?}, horizon {:.3} s, {} iterations, converged={}, final sup-change {}/s, hash {}",
            st.name(),
            out.field.spec().counts(),
            meta.horizon,
            meta.iterations,
            meta.converged,
            meta.final_rate.map_or("n/a".into(), |r| format!("{r:.3e}")),
            meta.parameter_hash
        );
        let level = match st {
            Stage::VerticalTracking => Some(("B_z", p.scenario.d_z)),
            Stage::HorizontalTracking => Some(("B_h", p.scenario.d_h)),
            _ => None,
        };
        if let Some((name, d)) = level {
            let n = out.field.values().iter().filter(|v| **v <= d).count();
            let min = out.field.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let state = if n > 0 { "non-empty" } else { "empty" };
            println!("  {name} at level {d}: {state} ({n} nodes), min value {min:.4}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_states(path: &Path) -> Result<Vec<JointState>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading states {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing states {}", path.display()))?)
}

/// Uniform draw over the horizontal-game and vertical-game boxes.
fn sample_states(s: &Scenario, n: usize, seed: u64) -> Vec<JointState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, v) = (&s.domains.horizontal_game, &s.domains.vertical_game);
    (0..n)
        .map(|_| {
            let mut draw = |g: &GridSpec, k: usize| rng.gen_range(g.axis(k).min..=g.axis(k).max);
            JointState {
                defender: [draw(h, 0), draw(h, 1), draw(v, 0), draw(h, 2), draw(h, 3), draw(v, 1)],
                attacker: [draw(h, 4), draw(h, 5), draw(v, 2)],
            }
        })
        .collect()
}

#[derive(Serialize)]
struct Verdicts<'a> {
    scenario_hash: String,
    seed: Option<u64>,
    results: Vec<Classified<'a>>,
}

#[derive(Serialize)]
struct Classified<'a> {
    state: &'a JointState,
    #[serde(flatten)]
    result: ClassificationResult,
}

fn cmd_classify(m: PipelineManifest, a: ClassifyArgs) -> Result<ExitCode> {
    let p = pipeline(&m)?;
    let states = match (&a.states, a.sample) {
        (Some(path), _) => read_states(path)?,
        (None, Some(n)) => sample_states(&p.scenario, n, m.config.seed.unwrap_or(0)),
        (None, None) => unreachable!("clap requires one of --states/--sample"),
    };
    let art = if states.is_empty() {
        GameArtifacts::new(p.scenario.clone())
    } else {
        p.artifacts(false)?
    };
    let cfg = ClassifyConfig { delta: a.delta };
    let results = states
        .iter()
        .map(|s| Ok(Classified { state: s, result: classify(s, &art, &cfg)? }))
        .collect::<Result<Vec<_>>>()?;
    let undecided = results.iter().filter(|r| r.result.verdict == Verdict::Indeterminate).count();
    let doc = Verdicts {
        scenario_hash: p.scenario.hash(),
        seed: m.config.seed,
        results,
    };
    let json = serde_json::to_string_pretty(&doc)? + "\n";
    match &a.output {
        Some(path) => std::fs::write(path, json)?,
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    eprintln!("{} states, {undecided} indeterminate", doc.results.len());
    Ok(if a.strict && undecided > 0 {
        ExitCode::from(EXIT_INDETERMINATE)
    } else {
        ExitCode::SUCCESS
    })
}

fn parse_constant(spec: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = spec
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad velocity {t:?}")))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|_| anyhow::anyhow!("constant attacker needs three components"))
}

#[derive(Serialize)]
struct SimSummary {
    scenario_hash: String,
    seed: Option<u64>,
    runs: Vec<serde_json::Value>,
}

fn cmd_simulate(m: PipelineManifest, a: SimulateArgs) -> Result<ExitCode> {
    let p = pipeline(&m)?;
    let states = read_states(&a.states)?;
    let constant = a.attacker.strip_prefix("constant=").map(parse_constant).transpose()?;
    if constant.is_none() && !matches!(a.attacker.as_str(), "adversarial" | "goal-seeking" | "goal-evasive") {
        bail!("unknown attacker policy {:?}", a.attacker);
    }
    let needs_fields = matches!(a.defender, DefenderKind::ReachTrack) || constant.is_none();
    let art = if needs_fields && !states.is_empty() {
        p.artifacts(false)?
    } else {
        GameArtifacts::new(p.scenario.clone())
    };
    let (h, v) = match a.subsystems {
        Subsystems::Both => (true, true),
        Subsystems::Horizontal => (true, false),
        Subsystems::Vertical => (false, true),
    };
    let cfg = SimConfig {
        dt: a.dt,
        max_duration: a.duration,
        stop_at_terminal: !a.no_stop,
        ..SimConfig::default()
    };
    let dir = m.out.join("sims");
    std::fs::create_dir_all(&dir)?;
    println!("{:>5} {:>14} {:>10} {:>10}", "run", "outcome", "t_end", "capture3d");
    let mut runs = Vec::new();
    for (i, state) in states.iter().enumerate() {
        let mut defender: Box<dyn DefenderPolicy> = match a.defender {
            DefenderKind::ReachTrack => {
                Box::new(ReachTrackDefender::new(&art, ControllerConfig::default()).with_subsystems(h, v))
            }
            DefenderKind::Idle => Box::new(IdleDefender),
        };
        let mut attacker: Box<dyn AttackerPolicy> = match (a.attacker.as_str(), constant) {
            (_, Some(c)) => Box::new(ConstantAttacker(c)),
            ("adversarial", _) => Box::new(AdversarialAttacker::new(&art).with_subsystems(h, v)),
            ("goal-seeking", _) => Box::new(GoalSeekingAttacker::new(&art, false)),
            _ => Box::new(GoalSeekingAttacker::new(&art, true)),
        };
        let log = sim::run(&p.scenario, *state, defender.as_mut(), attacker.as_mut(), &cfg)?;
        let stem = format!("run_{i:04}");
        log.save(&dir, &stem)?;
        let capture = log.first_event(sim::EventKind::Capture3d);
        let fmt = |t: Option<f64>| t.map_or("-".into(), |t| format!("{t:.2}"));
        println!("{i:>5} {:>14} {:>10} {:>10}", format!("{:?}", log.outcome), fmt(log.outcome_time), fmt(capture));
        if let Some(e) = &log.error {
            eprintln!("run {i}: policy failure: {e}");
        }
        runs.push(serde_json::json!({
            "run": stem,
            "outcome": log.outcome,
            "outcome_time": log.outcome_time,
            "error": log.error,
        }));
    }
    let summary = SimSummary {
        scenario_hash: p.scenario.hash(),
        seed: m.config.seed,
        runs,
    };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(ExitCode::SUCCESS)
}

/// Fixed axes snapped to nodes; exactly two axes stay free.
fn slice_rows(field: &ScalarField, fix: &[(usize, f64)]) -> Result<(Vec<(usize, f64)>, [usize; 2], Vec<[f64; 3]>)> {
    let grid = field.spec();
    let n = grid.ndim();
    let mut fixed = vec![None; n];
    for &(k, x) in fix {
        if k >= n {
            bail!("axis {k} out of range for a {n}D field");
        }
        if fixed[k].is_some() {
            bail!("axis {k} fixed twice");
        }
        fixed[k] = Some(grid.nearest_index(k, x));
    }
    let free: Vec<usize> = (0..n).filter(|&k| fixed[k].is_none()).collect();
    let [a, b] = free[..] else {
        bail!("fixed axes must leave exactly two free axes, {} remain", free.len());
    };
    let snapped = (0..n)
        .filter_map(|k| fixed[k].map(|i| (k, grid.coord(k, i))))
        .collect();
    let mut multi: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
    let mut rows = Vec::with_capacity(grid.count(a) * grid.count(b));
    for i in 0..grid.count(a) {
        for j in 0..grid.count(b) {
            multi[a] = i;
            multi[b] = j;
            rows.push([grid.coord(a, i), grid.coord(b, j), field.get(&multi)]);
        }
    }
    Ok((snapped, [a, b], rows))
}

fn cmd_export_slice(a: SliceArgs) -> Result<ExitCode> {
    let field = read_field(&a.field)?;
    let fix = a
        .fix
        .iter()
        .map(|s| {
            let (k, x) = s.split_once('=').with_context(|| format!("expected index=value, got {s:?}"))?;
            Ok((k.trim().parse::<usize>()?, x.trim().parse::<f64>()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (snapped, [ia, ib], rows) = slice_rows(&field, &fix)?;
    for (k, x) in &snapped {
        eprintln!("axis {k} snapped to {x}");
    }
    let mut w: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    };
    writeln!(w, "x{ia},x{ib},value")?;
    for [x, y, v] in rows {
        writeln!(w, "{x},{y},{v}")?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle_diff(m: PipelineManifest, a: OracleArgs) -> Result<ExitCode> {
    let stage = Stage::parse(&a.kind).with_context(|| format!("unknown stage {:?}", a.kind))?;
    let mut s = m.scenario()?;
    let default_counts: &[usize] = match stage {
        Stage::VerticalTracking => &[61, 41],
        Stage::VerticalGame => &[31, 21, 31],
        Stage::HorizontalTracking => &[11, 11, 9, 9],
        Stage::AttackerReach => &[46, 26],
        Stage::HorizontalGame => bail!("the oracle is limited to four dimensions"),
    };
    let counts = a.grid.as_deref().map(parse_counts).transpose()?.unwrap_or(default_counts.to_vec());
    let grid = resize(domain_mut(&mut s, stage), &counts)?;
    let model = DynamicsModel::from_scenario(stage.model(), &s);
    let mut cfg = SolveConfig {
        stop_on_convergence: false,
        ..SolveConfig::with_horizon(a.horizon)
    };
    if let Some(c) = a.cfl {
        cfg.cfl = c;
    }
    let ocfg = OracleConfig {
        horizon: a.horizon,
        ..OracleConfig::default()
    };
    let (hji, oracle, level) = match stage {
        Stage::VerticalTracking | Stage::HorizontalTracking => {
            let (l, d) = if stage == Stage::VerticalTracking {
                (build_tracking_cost_z(&grid)?, s.d_z)
            } else {
                (build_tracking_cost_h(&s, &grid, None)?, s.d_h)
            };
            (solve_max_tracking(&model, &l, &cfg)?.field, oracle_solve_max_tracking(&model, &l, &ocfg)?.field, d)
        }
        _ => {
            // Classic capture slab for the vertical game; the obstacle-free target for the attacker.
            let l = if stage == Stage::VerticalGame {
                ScalarField::from_fn(grid.clone(), |q| (q[0] - q[2]).abs() - s.d_z)
            } else {
                ScalarField::from_fn(grid.clone(), |q| s.target_distance(q))
            };
            (solve_reach(&model, &l, &cfg)?.field, oracle_solve_reach(&model, &l, &ocfg)?.field, 0.0)
        }
    };
    let dir = m.out.join("oracle-diff");
    std::fs::create_dir_all(&dir)?;
    write_field(&dir.join(format!("{}.hji.hjvf", stage.name())), &hji)?;
    write_field(&dir.join(format!("{}.oracle.hjvf", stage.name())), &oracle)?;
    let diffs: Vec<f64> = hji.values().iter().zip(oracle.values()).map(|(a, b)| (a - b).abs()).collect();
    let max = diffs.iter().cloned().fold(0.0, f64::max);
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let flipped: Vec<usize> = (0..grid.len())
        .filter(|&i| (hji.values()[i] <= level) != (oracle.values()[i] <= level))
        .collect();
    let displacement = flipped
        .iter()
        .map(|&i| (hji.values()[i] - level).abs().max((oracle.values()[i] - level).abs()))
        .fold(0.0, f64::max);
    println!("{}: grid {:?}, horizon {} s", stage.name(), grid.counts(), a.horizon);
    println!("max |diff| {max:.4}, mean |diff| {mean:.5}");
    println!(
        "boundary (level {level}): {} of {} nodes on different sides, largest value gap there {displacement:.4}",
        flipped.len(),
        grid.len()
    );
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices() {
        let g = GridSpec::from_triples(&[(3, 0.0, 2.0), (4, 0.0, 3.0), (3, 0.0, 2.0)]).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0] + 10.0 * p[1] + 100.0 * p[2]);
        let (snapped, axes, rows) = slice_rows(&f, &[(2, 0.7)]).unwrap();
        assert_eq!(snapped, vec![(2, 1.0)]);
        assert_eq!(axes, [0, 1]);
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[5], [1.0, 1.0, 111.0]);
        assert!(slice_rows(&f, &[]).is_err());
        assert!(slice_rows(&f, &[(0, 0.0), (1, 0.0), (2, 0.0)]).is_err());
        assert!(slice_rows(&f, &[(3, 0.0)]).is_err());
    }

    #[test]
    fn constant_attacker_spec() {
        assert_eq!(parse_constant("1, 0,-2").unwrap(), [1.0, 0.0, -2.0]);
        assert!(parse_constant("1,2").is_err());
    }
}
