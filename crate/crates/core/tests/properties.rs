mod common;

use proptest::prelude::*;
use reachtrack::dynamics::{DynamicsModel, GameModel, ModelKind};
use reachtrack::geometry::{build_tracking_cost_z, Scenario};
use reachtrack::grid::{GridSpec, ScalarField};
use reachtrack::hji::{solve_max_tracking, solve_reach, solve_reach_avoid, Scheme, SolveConfig};
use reachtrack::sim::step;

fn model(kind: ModelKind) -> DynamicsModel {
    DynamicsModel::from_scenario(kind, &Scenario::reference())
}

fn kind() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(ModelKind::ALL.to_vec())
}

fn small_grid() -> GridSpec {
    GridSpec::from_triples(&[(41, -10.0, 10.0), (17, -4.0, 4.0)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hamiltonian_matches_brute_force(
        kind in kind(),
        x in prop::array::uniform6(-20.0f64..20.0),
        p in prop::array::uniform6(-3.0f64..3.0),
    ) {
        let m = model(kind);
        let n = m.state_dim();
        let exact = m.hamiltonian(&x[..n], &p[..n]);
        let brute = common::brute_force_hamiltonian(&m, &x[..n], &p[..n], 90);
        let gap = common::sampling_gap(&m, &x[..n], &p[..n], 90);
        prop_assert!((exact - brute).abs() <= gap, "{kind:?}: {exact} vs {brute} (gap {gap})");
    }

    #[test]
    fn upwind_brackets_and_is_monotone(
        kind in kind(),
        x in prop::array::uniform6(-20.0f64..20.0),
        p in prop::array::uniform6(-3.0f64..3.0),
        bump in prop::array::uniform6(0.0f64..0.5),
    ) {
        let m = model(kind);
        let n = m.state_dim();
        let (x, p, bump) = (&x[..n], &p[..n], &bump[..n]);
        let same = m.upwind_hamiltonian(x, p, p).unwrap();
        prop_assert!((same - m.hamiltonian(x, p)).abs() < 1e-9);
        let up: Vec<f64> = p.iter().zip(bump).map(|(a, b)| a + b).collect();
        let down: Vec<f64> = p.iter().zip(bump).map(|(a, b)| a - b).collect();
        let base = m.upwind_hamiltonian(x, p, p).unwrap();
        prop_assert!(m.upwind_hamiltonian(x, p, &up).unwrap() >= base - 1e-12);
        prop_assert!(m.upwind_hamiltonian(x, &down, p).unwrap() >= base - 1e-12);
    }

    #[test]
    fn optimal_controls_are_admissible(
        kind in kind(),
        x in prop::array::uniform6(-20.0f64..20.0),
        p in prop::array::uniform6(-3.0f64..3.0),
    ) {
        use reachtrack::dynamics::Player;
        let m = model(kind);
        let n = m.state_dim();
        for pl in [Player::Defender, Player::Attacker] {
            let u = m.optimal_control(&x[..n], &p[..n], pl);
            prop_assert!(m.control_set(pl).contains(u.as_slice(), 1e-9));
        }
    }

    #[test]
    fn interpolation_reproduces_affine_fields(
        a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0,
        z in -10.0f64..10.0, v in -4.0f64..4.0,
    ) {
        let f = ScalarField::from_fn(small_grid(), |q| a * q[0] + b * q[1] + c);
        let s = f.interpolate(&[z, v]).unwrap();
        prop_assert!((s.value - (a * z + b * v + c)).abs() < 1e-9);
        let (g, clamped) = f.gradient_at(&[z, v]).unwrap();
        prop_assert!(!clamped);
        prop_assert!((g[0] - a).abs() < 1e-9 && (g[1] - b).abs() < 1e-9);
    }

    #[test]
    fn simulation_step_keeps_velocities_bounded(
        s in prop::array::uniform9(-6.0f64..6.0),
        ud in prop::array::uniform3(-1.0f64..1.0),
        ua in prop::array::uniform3(-1.0f64..1.0),
        dt in 0.001f64..0.05,
    ) {
        use reachtrack::dynamics::JointState;
        let sc = Scenario::reference();
        let b = sc.bounds;
        let scale = |u: [f64; 3], h: f64, z: f64| {
            let n = u[0].hypot(u[1]).max(1.0);
            [h * u[0] / n, h * u[1] / n, z * u[2]]
        };
        let mut state = JointState::from(s);
        for k in 3..6 {
            state.defender[k] = state.defender[k].clamp(-b.uz_d, b.uz_d);
        }
        let next = step(&state, scale(ud, b.uh_d, b.uz_d), scale(ua, b.uh_a, b.uz_a), dt, &sc.gains, &b).unwrap();
        for k in 3..6 {
            // Velocity relaxes toward a command inside [-6, 6], so it cannot leave that box.
            prop_assert!(next.defender[k].abs() <= b.uh_d + 1e-12);
        }
    }
}

fn tracking(horizon: f64, scheme: Scheme) -> (ScalarField, reachtrack::hji::ValueSolution) {
    let l = build_tracking_cost_z(&small_grid()).unwrap();
    let m = model(ModelKind::RelVertical2d);
    let cfg = SolveConfig { scheme, stop_on_convergence: false, ..SolveConfig::with_horizon(horizon) };
    let sol = solve_max_tracking(&m, &l, &cfg).unwrap();
    (l, sol)
}

#[test]
fn max_tracking_dominates_cost_and_grows_with_horizon() {
    for scheme in [Scheme::Upwind, Scheme::LaxFriedrichs] {
        let (l, short) = tracking(1.0, scheme);
        let (_, long) = tracking(3.0, scheme);
        for ((a, b), c) in short.field.values().iter().zip(long.field.values()).zip(l.values()) {
            assert!(a >= c && b >= a, "{scheme:?}");
        }
    }
}

#[test]
fn reach_values_bounded_by_target_cost() {
    let s = Scenario::reference();
    let grid = GridSpec::from_triples(&[(46, 0.0, 45.0), (26, 0.0, 25.0)]).unwrap();
    let l = ScalarField::from_fn(grid.clone(), |q| q[0] - 3.0);
    let g = ScalarField::from_fn(grid, |q| 3.0 - (q[0] - 20.0).hypot(q[1] - 17.0));
    let m = DynamicsModel::from_scenario(ModelKind::AttackerReach2d, &s);
    let cfg = SolveConfig { snapshot_interval: Some(0.5), ..SolveConfig::with_horizon(5.0) };
    let reach = solve_reach(&m, &l, &cfg).unwrap();
    let ra = solve_reach_avoid(&m, &l, &g, &cfg).unwrap();
    for i in 0..l.values().len() {
        assert!(reach.field.values()[i] <= l.values()[i]);
        assert!(ra.field.values()[i] >= g.values()[i]);
        assert!(ra.field.values()[i] >= reach.field.values()[i] - 1e-12);
    }
    let times = reach.crossing.unwrap();
    for (t, v) in times.values().iter().zip(l.values()) {
        assert!(*t >= 0.0);
        if *v <= 0.0 {
            assert_eq!(*t, 0.0);
        }
    }
}

#[test]
fn solves_are_identical_across_thread_counts() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| tracking(2.0, Scheme::Upwind).1)
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.field.values(), b.field.values());
    assert_eq!(a.history, b.history);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn upwind_disk_matches_sampling(
        c in prop::array::uniform2(-8.0f64..8.0),
        r in 0.5f64..6.0,
        dm in prop::array::uniform2(-2.0f64..2.0),
        dp in prop::array::uniform2(-2.0f64..2.0),
        max in any::<bool>(),
    ) {
        use reachtrack::dynamics::{upwind, upwind_disk, Optimizer};
        let opt = if max { Optimizer::Max } else { Optimizer::Min };
        let f = |w: [f64; 2]| upwind(w[0], dm[0], dp[0]) + upwind(w[1], dm[1], dp[1]);
        // Feasible samples: boundary, axis crossings and the origin when inside.
        let mut pts: Vec<[f64; 2]> = (0..2000)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 2000.0;
                [c[0] + r * a.cos(), c[1] + r * a.sin()]
            })
            .collect();
        for axis in 0..2 {
            let off = c[axis];
            if off.abs() <= r {
                let h = (r * r - off * off).sqrt();
                for e in [c[1 - axis] - h, c[1 - axis] + h] {
                    let mut w = [0.0; 2];
                    w[1 - axis] = e;
                    pts.push(w);
                }
            }
        }
        if c[0].hypot(c[1]) <= r {
            pts.push([0.0, 0.0]);
        }
        let sampled = pts.iter().map(|w| f(*w)).fold(opt.worst(), |a, b| opt.better(a, b));
        let exact = upwind_disk(c, r, dm, dp, opt);
        let slack = 4.0 * r * 1.5f64.hypot(1.5) * (1.0 - (std::f64::consts::PI / 2000.0).cos()) + 1e-9;
        // The exact optimum can only beat feasible samples, and by at most the sampling gap.
        prop_assert!(opt.sign() * (exact - sampled) >= -1e-9, "{exact} vs {sampled}");
        prop_assert!(opt.sign() * (exact - sampled) <= slack, "{exact} vs {sampled}");
        let centred = reachtrack::dynamics::upwind_disk_centred(r, dm, dp, opt);
        prop_assert!((centred - upwind_disk([0.0, 0.0], r, dm, dp, opt)).abs() <= 1e-9 * (1.0 + centred.abs()));
    }
}
