#![allow(dead_code)]

use reachtrack::dynamics::{ControlSet, DynamicsModel, GameModel, Player};

/// Boundary samples of a control set plus its centre; a linear objective
/// attains its extremum on the boundary.
pub fn samples(set: ControlSet, n: usize) -> Vec<[f64; 2]> {
    match set {
        ControlSet::None => vec![[0.0, 0.0]],
        ControlSet::Interval(b) => (0..n).map(|i| [-b + 2.0 * b * i as f64 / (n - 1) as f64, 0.0]).collect(),
        ControlSet::Disk(r) => {
            let mut v = vec![[0.0, 0.0]];
            v.extend((0..n).map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                [r * a.cos(), r * a.sin()]
            }));
            v
        }
    }
}

/// Nested min/max of `p . f(x, u_D, u_A)` over sampled controls, defender outermost.
pub fn brute_force_hamiltonian(m: &DynamicsModel, x: &[f64], p: &[f64], n: usize) -> f64 {
    let sd = m.control_set(Player::Defender);
    let sa = m.control_set(Player::Attacker);
    let (rd, ra) = (m.role(Player::Defender), m.role(Player::Attacker));
    let mut f = vec![0.0; m.state_dim()];
    let mut outer = rd.worst();
    for ud in samples(sd, n) {
        let mut inner = ra.worst();
        for ua in samples(sa, n) {
            m.flow_into(x, &ud[..sd.arity()], &ua[..sa.arity()], &mut f);
            inner = ra.better(inner, p.iter().zip(&f).map(|(a, b)| a * b).sum());
        }
        outer = rd.better(outer, inner);
    }
    outer
}

/// Worst-case gap between the sampled and exact optimum of a linear term
/// `c . u` over a control set sampled with `n` boundary points.
pub fn sampling_gap(m: &DynamicsModel, x: &[f64], p: &[f64], n: usize) -> f64 {
    [Player::Defender, Player::Attacker]
        .into_iter()
        .map(|pl| match m.control_set(pl) {
            ControlSet::Disk(r) => {
                let c = m.control_coefficients(x, p, pl);
                r * c[0].hypot(c[1]) * (1.0 - (std::f64::consts::PI / n as f64).cos())
            }
            _ => 0.0,
        })
        .sum::<f64>()
        + 1e-9
}
