//! Closed-loop forward-Euler simulation of the joint system.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{AttackerPolicy, DefenderPolicy, PolicyMode};
use crate::dynamics::{ControlSet, JointState, CONTROL_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::{Gains, Scenario, SpeedBounds};

pub const MAX_SIM_DT: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub max_duration: f64,
    /// Log every `log_stride`-th step (the final step is always logged).
    pub log_stride: usize,
    /// End the run at the first terminal event; otherwise keep integrating to
    /// `max_duration` while the outcome stays fixed.
    pub stop_at_terminal: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            max_duration: 30.0,
            log_stride: 1,
            stop_at_terminal: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_SIM_DT) {
            return Err(Error::InvalidConfig(format!(
                "sim dt must lie in (0, {MAX_SIM_DT}], got {}",
                self.dt
            )));
        }
        if !(self.max_duration >= 0.0 && self.max_duration.is_finite()) {
            return Err(Error::InvalidConfig("bad max duration".into()));
        }
        if self.log_stride == 0 {
            return Err(Error::InvalidConfig("log stride must be positive".into()));
        }
        Ok(())
    }
}

fn check_command(set: ControlSet, u: &[f64]) -> Result<()> {
    if set.contains(u, CONTROL_TOLERANCE) {
        Ok(())
    } else {
        let bound = match set {
            ControlSet::Disk(r) | ControlSet::Interval(r) => r,
            ControlSet::None => 0.0,
        };
        Err(Error::ControlBound {
            value: u.iter().map(|x| x * x).sum::<f64>().sqrt(),
            bound,
        })
    }
}

/// One forward-Euler step; commands must satisfy the speed bounds.
pub fn step(
    state: &JointState,
    u_d: [f64; 3],
    u_a: [f64; 3],
    dt: f64,
    gains: &Gains,
    bounds: &SpeedBounds,
) -> Result<JointState> {
    if !state.is_finite() || u_d.iter().chain(&u_a).any(|v| !v.is_finite()) || !dt.is_finite() {
        return Err(Error::NonFiniteState);
    }
    check_command(ControlSet::Disk(bounds.uh_d), &u_d[..2])?;
    check_command(ControlSet::Interval(bounds.uz_d), &u_d[2..])?;
    check_command(ControlSet::Disk(bounds.uh_a), &u_a[..2])?;
    check_command(ControlSet::Interval(bounds.uz_a), &u_a[2..])?;
    let d = &state.defender;
    let k = [gains.kx, gains.ky, gains.kz];
    let mut next = *state;
    for i in 0..3 {
        next.defender[i] = d[i] + dt * d[i + 3];
        next.defender[i + 3] = d[i + 3] + dt * k[i] * (u_d[i] - d[i + 3]);
        next.attacker[i] = state.attacker[i] + dt * u_a[i];
    }
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    CaptureH,
    CaptureZ,
    Capture3d,
    GoalReached,
    DefenderObstacleHit,
    AttackerObstacleHit,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    DefenderWins,
    AttackerWins,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub state: JointState,
    pub u_d: [f64; 3],
    pub u_a: [f64; 3],
    pub mode_h: Option<PolicyMode>,
    pub mode_z: Option<PolicyMode>,
    pub v_h: Option<f64>,
    pub v_z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
    /// Time of the terminal event that fixed the outcome.
    pub outcome_time: Option<f64>,
    /// Set when a policy failed; the log holds everything up to the failure.
    pub error: Option<String>,
}

impl TrajectoryLog {
    pub fn first_event(&self, kind: EventKind) -> Option<f64> {
        self.events.iter().find(|e| e.kind == kind).map(|e| e.t)
    }

    pub fn final_state(&self) -> Option<&JointState> {
        self.rows.last().map(|r| &r.state)
    }

    pub const CSV_HEADER: &'static str =
        "t,xD,yD,zD,vxD,vyD,vzD,xA,yA,zA,uxD,uyD,uzD,uxA,uyA,uzA,mode_h,mode_z,Vh,Vz";

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        let mode = |m: Option<PolicyMode>| m.map_or("", PolicyMode::as_str);
        for r in &self.rows {
            let s: [f64; 9] = r.state.into();
            let nums: Vec<String> = std::iter::once(r.t)
                .chain(s)
                .chain(r.u_d)
                .chain(r.u_a)
                .map(|v| v.to_string())
                .collect();
            writeln!(
                w,
                "{},{},{},{},{}",
                nums.join(","),
                mode(r.mode_h),
                mode(r.mode_z),
                opt(r.v_h),
                opt(r.v_z)
            )?;
        }
        Ok(())
    }

    pub fn events_json(&self) -> serde_json::Value {
        serde_json::json!({
            "outcome": self.outcome,
            "outcome_time": self.outcome_time,
            "events": self.events,
            "error": self.error,
        })
    }

    /// Writes `<stem>.csv` and `<stem>.events.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let f = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let text = serde_json::to_string_pretty(&self.events_json())?;
        std::fs::write(dir.join(format!("{stem}.events.json")), text + "\n")?;
        Ok(())
    }
}

struct Conditions {
    goal: bool,
    defender_obstacle: bool,
    attacker_obstacle: bool,
    capture_h: bool,
    capture_z: bool,
}

fn conditions(s: &Scenario, state: &JointState) -> Conditions {
    let pd = [state.defender[0], state.defender[1]];
    Conditions {
        goal: s.in_target(&state.attacker_planar()),
        defender_obstacle: s.in_obstacle(&pd),
        attacker_obstacle: s.in_obstacle(&state.attacker_planar()),
        capture_h: state.planar_distance() <= s.d_h,
        capture_z: state.vertical_distance() <= s.d_z,
    }
}

/// Runs the closed loop from `initial` until a terminal event or `max_duration`.
///
/// Terminal checks at each timestamp, in order: attacker in target, defender
/// in an obstacle (both attacker wins), attacker in an obstacle, simultaneous
/// horizontal and vertical capture (both defender wins).
pub fn run(
    scenario: &Scenario,
    initial: JointState,
    defender: &mut dyn DefenderPolicy,
    attacker: &mut dyn AttackerPolicy,
    cfg: &SimConfig,
) -> Result<TrajectoryLog> {
    cfg.validate()?;
    if !initial.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let steps = (cfg.max_duration / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let mut log = TrajectoryLog {
        rows: Vec::new(),
        events: Vec::new(),
        outcome: Outcome::Timeout,
        outcome_time: None,
        error: None,
    };
    let mut state = initial;
    let mut prev: Option<Conditions> = None;
    let mut decided = false;
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let c = conditions(scenario, &state);
        let onset = |now: bool, before: Option<bool>| now && !before.unwrap_or(false);
        let p = prev.as_ref();
        let mut push = |kind| log.events.push(Event { t, kind });
        if onset(c.capture_h, p.map(|p| p.capture_h)) {
            push(EventKind::CaptureH);
        }
        if onset(c.capture_z, p.map(|p| p.capture_z)) {
            push(EventKind::CaptureZ);
        }
        let capture = c.capture_h && c.capture_z;
        if onset(capture, p.map(|p| p.capture_h && p.capture_z)) {
            push(EventKind::Capture3d);
        }
        if onset(c.goal, p.map(|p| p.goal)) {
            push(EventKind::GoalReached);
        }
        if onset(c.defender_obstacle, p.map(|p| p.defender_obstacle)) {
            push(EventKind::DefenderObstacleHit);
        }
        if onset(c.attacker_obstacle, p.map(|p| p.attacker_obstacle)) {
            push(EventKind::AttackerObstacleHit);
        }
        if !decided {
            let outcome = if c.goal || c.defender_obstacle {
                Some(Outcome::AttackerWins)
            } else if c.attacker_obstacle || capture {
                Some(Outcome::DefenderWins)
            } else {
                None
            };
            if let Some(o) = outcome {
                log.outcome = o;
                log.outcome_time = Some(t);
                decided = true;
            }
        }
        prev = Some(c);

        let last = k == steps || (decided && cfg.stop_at_terminal);
        let commands = defender
            .command(t, &state)
            .and_then(|d| attacker.command(t, &state).map(|a| (d, a)));
        let (d, u_a) = match commands {
            Ok(x) => x,
            Err(e) => {
                log.error = Some(e.to_string());
                return Ok(log);
            }
        };
        if k % cfg.log_stride == 0 || last {
            log.rows.push(LogRow {
                t,
                state,
                u_d: d.command,
                u_a,
                mode_h: d.mode_h,
                mode_z: d.mode_z,
                v_h: d.v_h,
                v_z: d.v_z,
            });
        }
        if last {
            break;
        }
        state = match step(&state, d.command, u_a, cfg.dt, &scenario.gains, &scenario.bounds) {
            Ok(s) => s,
            Err(e) => {
                log.error = Some(e.to_string());
                return Ok(log);
            }
        };
    }
    if !decided {
        let t = log.rows.last().map_or(0.0, |r| r.t);
        log.events.push(Event {
            t,
            kind: EventKind::Timeout,
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ConstantAttacker, IdleDefender};

    fn reference() -> Scenario {
        Scenario::reference()
    }

    #[test]
    fn step_examples() {
        let s = reference();
        let x = JointState::from([10.0, 10.0, 5.0, 0.0, 0.0, 0.0, 20.0, 10.0, 5.0]);
        let same = step(&x, [0.0; 3], [0.0; 3], 0.1, &s.gains, &s.bounds).unwrap();
        assert_eq!(same, x);
        let y = step(&x, [0.0, 0.0, 4.0], [3.0, 0.0, 0.0], 0.1, &s.gains, &s.bounds).unwrap();
        assert!((y.defender[5] - 0.6).abs() < 1e-12);
        assert!((y.attacker[0] - 20.3).abs() < 1e-12);
        assert!(step(&x, [6.0, 1.0, 0.0], [0.0; 3], 0.1, &s.gains, &s.bounds).is_err());
        let nan = JointState::from([f64::NAN; 9]);
        assert!(matches!(
            step(&nan, [0.0; 3], [0.0; 3], 0.1, &s.gains, &s.bounds),
            Err(Error::NonFiniteState)
        ));
    }

    #[test]
    fn attacker_in_target_wins_immediately() {
        let s = reference();
        let x = JointState::from([1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0]);
        let log = run(&s, x, &mut IdleDefender, &mut ConstantAttacker::default(), &SimConfig::default()).unwrap();
        assert_eq!(log.outcome, Outcome::AttackerWins);
        assert_eq!(log.outcome_time, Some(0.0));
        assert_eq!(log.rows.len(), 1);
    }

    #[test]
    fn idle_agents_time_out() {
        let s = reference();
        let x = JointState::from([40.0, 20.0, 5.0, 0.0, 0.0, 0.0, 10.0, 12.0, 5.0]);
        let cfg = SimConfig {
            max_duration: 1.0,
            ..SimConfig::default()
        };
        let log = run(&s, x, &mut IdleDefender, &mut ConstantAttacker::default(), &cfg).unwrap();
        assert_eq!(log.outcome, Outcome::Timeout);
        assert_eq!(log.rows.len(), 51);
        assert_eq!(log.events.last().unwrap().kind, EventKind::Timeout);
        let ts: Vec<f64> = log.rows.iter().map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn capture_needs_both_axes() {
        let s = reference();
        // horizontally captured at once, vertical gap closes at 2 m/s from 3 m
        let x = JointState::from([20.0, 12.0, 8.0, 0.0, 0.0, 0.0, 21.0, 12.0, 5.0]);
        let mut a = ConstantAttacker([0.0, 0.0, 2.0]);
        let log = run(&s, x, &mut IdleDefender, &mut a, &SimConfig::default()).unwrap();
        assert_eq!(log.outcome, Outcome::DefenderWins);
        assert_eq!(log.first_event(EventKind::CaptureH), Some(0.0));
        let t3 = log.first_event(EventKind::Capture3d).unwrap();
        assert!((t3 - 1.0).abs() < 0.021);
        assert_eq!(log.first_event(EventKind::CaptureZ), Some(t3));
    }

    #[test]
    fn capture_inside_target_is_attacker_win() {
        let s = reference();
        let x = JointState::from([2.0, 12.0, 5.0, 0.0, 0.0, 0.0, 2.5, 12.0, 5.0]);
        let log = run(&s, x, &mut IdleDefender, &mut ConstantAttacker::default(), &SimConfig::default()).unwrap();
        assert_eq!(log.outcome, Outcome::AttackerWins);
    }

    #[test]
    fn csv_layout() {
        let s = reference();
        let x = JointState::from([40.0, 20.0, 5.0, 0.0, 0.0, 0.0, 10.0, 12.0, 5.0]);
        let cfg = SimConfig {
            max_duration: 0.04,
            ..SimConfig::default()
        };
        let log = run(&s, x, &mut IdleDefender, &mut ConstantAttacker::default(), &cfg).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TrajectoryLog::CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 20);
    }

    #[test]
    fn rejects_large_dt() {
        let cfg = SimConfig {
            dt: 0.1,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
