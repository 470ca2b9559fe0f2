//! Minimal action `J_q[x, y] = inf int (-q_t(z) + |z'|^2 / 2) dt` over
//! piecewise-linear paths in the domain.

use crate::error::{Error, Result};
use crate::euler::field::PressureField;

/// Discretization and stopping rule of [`path_action_min`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    pub n_seg: usize,
    /// Stop when the projected gradient has Euclidean norm below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Side of the node lattice for the dynamic-programming seed; `None`
    /// starts from the straight line only.
    pub dp_lattice: Option<usize>,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            n_seg: 32,
            tolerance: 1e-8,
            max_iterations: 20_000,
            dp_lattice: Some(12),
        }
    }
}

/// A minimizing path: `nodes[k]` at time `t0 + k (t1 - t0) / n_seg`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPath {
    pub nodes: Vec<[f64; 2]>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// `sum |z_{k+1} - z_k|^2 / (2 dt) - dt sum' q(t_k, z_k)` (trapezoid in time)
/// and its gradient in the interior nodes.
fn action(q: &PressureField, nodes: &[[f64; 2]], grad: Option<&mut Vec<[f64; 2]>>) -> f64 {
    let (t0, t1) = q.interval();
    let n = nodes.len() - 1;
    let dt = (t1 - t0) / n as f64;
    let mut s = 0.0;
    for w in nodes.windows(2) {
        let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
        s += (dx * dx + dy * dy) / (2.0 * dt);
    }
    let mut g = grad;
    if let Some(g) = g.as_deref_mut() {
        g.clear();
        g.resize(n + 1, [0.0, 0.0]);
    }
    for (k, z) in nodes.iter().enumerate() {
        let c = if k == 0 || k == n { 0.5 } else { 1.0 };
        let t = t0 + k as f64 * dt;
        if let Some(g) = g.as_deref_mut() {
            let (v, dq) = q.value_and_gradient(t, *z);
            s -= c * dt * v;
            if k > 0 && k < n {
                let (a, b) = (nodes[k - 1], nodes[k + 1]);
                g[k] = [
                    (2.0 * z[0] - a[0] - b[0]) / dt - dt * dq[0],
                    (2.0 * z[1] - a[1] - b[1]) / dt - dt * dq[1],
                ];
            }
        } else {
            s -= c * dt * q.value(t, *z);
        }
    }
    s
}

/// Nonmonotone spectral projected gradient (Birgin-Martinez-Raydan) from
/// `start`, preconditioned by the kinetic operator `tridiag(-1, 2, -1) / dt`.
/// Each iteration tries the preconditioned direction `P(z - alpha L^{-1} g) - z`
/// and falls back to the plain one `P(z - beta g) - z` when that is not a
/// descent direction; both step lengths are Barzilai-Borwein, and the line
/// search compares against the largest of the last few values.
fn descend(q: &PressureField, start: Vec<[f64; 2]>, opts: &PathOptions) -> ActionPath {
    const MEMORY: usize = 10;
    let domain = q.domain();
    let (t0, t1) = q.interval();
    let n = start.len() - 1;
    let dt = (t1 - t0) / n as f64;
    let mut z: Vec<[f64; 2]> = start.iter().map(|&p| domain.project(p)).collect();
    let mut g = Vec::new();
    let mut value = action(q, &z, Some(&mut g));
    let mut history = std::collections::VecDeque::from([value]);
    let mut alpha = 1.0;
    // the kinetic part has curvature at most 4 / dt
    let mut beta = dt / 4.0;
    let mut d = vec![[0.0; 2]; n + 1];
    let mut z_new = z.clone();
    let mut g_new = Vec::new();
    let mut grad_norm = projected_norm(q, &z, &g);
    let mut iterations = 0;
    while grad_norm > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let reference = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = None;
        for preconditioned in [true, false] {
            let step = if preconditioned { kinetic_solve(&g, dt) } else { g.clone() };
            let a = if preconditioned { alpha } else { beta };
            let mut slope = 0.0;
            for k in 1..n {
                let p = domain.project([z[k][0] - a * step[k][0], z[k][1] - a * step[k][1]]);
                d[k] = [p[0] - z[k][0], p[1] - z[k][1]];
                slope += d[k][0] * g[k][0] + d[k][1] * g[k][1];
            }
            if preconditioned && slope >= 0.0 {
                continue;
            }
            let mut lambda = 1.0;
            loop {
                for k in 1..n {
                    z_new[k] = [z[k][0] + lambda * d[k][0], z[k][1] + lambda * d[k][1]];
                }
                let v = action(q, &z_new, Some(&mut g_new));
                if v <= reference + 1e-4 * lambda * slope {
                    accepted = Some((v, preconditioned));
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-12 {
                    break;
                }
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((v, preconditioned)) = accepted else {
            break;
        };
        let (mut ss, mut sls, mut sy) = (0.0, 0.0, 0.0);
        for k in 1..n {
            for c in 0..2 {
                let s = z_new[k][c] - z[k][c];
                let prev = if k > 1 { z_new[k - 1][c] - z[k - 1][c] } else { 0.0 };
                let next = if k + 1 < n { z_new[k + 1][c] - z[k + 1][c] } else { 0.0 };
                ss += s * s;
                sls += s * (2.0 * s - prev - next) / dt;
                sy += s * (g_new[k][c] - g[k][c]);
            }
        }
        if sy > 0.0 {
            alpha = (sls / sy).clamp(1e-3, 1e3);
            beta = (ss / sy).clamp(1e-6 * dt, 1e6 * dt);
        } else if preconditioned {
            alpha = 1.0;
        } else {
            beta = dt / 4.0;
        }
        std::mem::swap(&mut z, &mut z_new);
        std::mem::swap(&mut g, &mut g_new);
        value = v;
        history.push_back(v);
        if history.len() > MEMORY {
            history.pop_front();
        }
        grad_norm = projected_norm(q, &z, &g);
    }
    ActionPath {
        nodes: z,
        value,
        grad_norm,
        iterations,
    }
}

/// `L^{-1} g` on the interior nodes for `L = tridiag(-1, 2, -1) / dt` with
/// fixed endpoints (Thomas algorithm, per coordinate).
fn kinetic_solve(g: &[[f64; 2]], dt: f64) -> Vec<[f64; 2]> {
    let n = g.len() - 1;
    let mut out = vec![[0.0; 2]; n + 1];
    if n < 2 {
        return out;
    }
    let m = n - 1;
    let mut c = vec![0.0; m];
    let mut r = vec![[0.0; 2]; m];
    let mut denom = 2.0;
    c[0] = -1.0 / denom;
    r[0] = [g[1][0] * dt / denom, g[1][1] * dt / denom];
    for i in 1..m {
        denom = 2.0 + c[i - 1];
        c[i] = -1.0 / denom;
        for k in 0..2 {
            r[i][k] = (g[i + 1][k] * dt + r[i - 1][k]) / denom;
        }
    }
    out[m] = r[m - 1];
    for i in (0..m - 1).rev() {
        for k in 0..2 {
            out[i + 1][k] = r[i][k] - c[i] * out[i + 2][k];
        }
    }
    out
}

fn sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Norm of `z - P(z - g)` over the interior nodes.
fn projected_norm(q: &PressureField, z: &[[f64; 2]], g: &[[f64; 2]]) -> f64 {
    let domain = q.domain();
    (1..z.len() - 1)
        .map(|k| sq(z[k], domain.project([z[k][0] - g[k][0], z[k][1] - g[k][1]])))
        .sum::<f64>()
        .sqrt()
}

fn straight_line(x: [f64; 2], y: [f64; 2], n_seg: usize) -> Vec<[f64; 2]> {
    (0..=n_seg)
        .map(|k| {
            let s = k as f64 / n_seg as f64;
            [x[0] + s * (y[0] - x[0]), x[1] + s * (y[1] - x[1])]
        })
        .collect()
}

/// Globally best path through the domain nodes of a `side x side` lattice,
/// with at most 16 time steps, resampled to `n_seg` segments.
fn dp_seed(q: &PressureField, x: [f64; 2], y: [f64; 2], side: usize, n_seg: usize) -> Vec<[f64; 2]> {
    let domain = q.domain();
    let (lo, len) = domain.bounding_square();
    let mut sites: Vec<[f64; 2]> = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let p = [
                lo[0] + len * (i as f64 + 0.5) / side as f64,
                lo[1] + len * (j as f64 + 0.5) / side as f64,
            ];
            if domain.contains(p) {
                sites.push(p);
            }
        }
    }
    let (t0, t1) = q.interval();
    let m = n_seg.min(16);
    let dt = (t1 - t0) / m as f64;
    let potential: Vec<Vec<f64>> = (1..m)
        .map(|k| sites.iter().map(|&p| dt * q.value(t0 + k as f64 * dt, p)).collect())
        .collect();
    let mut cost: Vec<f64> = sites
        .iter()
        .zip(&potential[0])
        .map(|(&p, v)| sq(p, x) / (2.0 * dt) - v)
        .collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(m);
    for k in 2..m {
        let mut next = vec![f64::INFINITY; sites.len()];
        let mut arg = vec![0; sites.len()];
        for (b, pb) in sites.iter().enumerate() {
            for (a, pa) in sites.iter().enumerate() {
                let c = cost[a] + sq(*pa, *pb) / (2.0 * dt);
                if c < next[b] {
                    next[b] = c;
                    arg[b] = a;
                }
            }
            next[b] -= potential[k - 1][b];
        }
        back.push(arg);
        cost = next;
    }
    let last = (0..sites.len())
        .min_by(|&a, &b| {
            let ca = cost[a] + sq(sites[a], y) / (2.0 * dt);
            let cb = cost[b] + sq(sites[b], y) / (2.0 * dt);
            ca.total_cmp(&cb)
        })
        .expect("lattice has interior sites");
    let mut idx = vec![last];
    for arg in back.iter().rev() {
        idx.push(arg[*idx.last().unwrap()]);
    }
    idx.reverse();
    let mut coarse = vec![x];
    coarse.extend(idx.iter().map(|&i| sites[i]));
    coarse.push(y);
    // linear resampling in time onto n_seg segments
    (0..=n_seg)
        .map(|k| {
            let s = k as f64 * m as f64 / n_seg as f64;
            let i = (s.floor() as usize).min(m - 1);
            let f = s - i as f64;
            [
                coarse[i][0] + f * (coarse[i + 1][0] - coarse[i][0]),
                coarse[i][1] + f * (coarse[i + 1][1] - coarse[i][1]),
            ]
        })
        .collect()
}

/// Minimal discrete action between `x` and `y`, best of the descents started
/// from the straight line, the dynamic-programming seed and `warm`.
pub fn path_action_min_with(
    q: &PressureField,
    x: [f64; 2],
    y: [f64; 2],
    opts: &PathOptions,
    warm: Option<&[[f64; 2]]>,
) -> Result<ActionPath> {
    let domain = q.domain();
    if !domain.contains(x) || !domain.contains(y) {
        return Err(Error::InvalidArgument(format!("endpoints {x:?}, {y:?} leave the {domain}")));
    }
    if opts.n_seg < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 segments, got {}", opts.n_seg)));
    }
    let mut starts = vec![straight_line(x, y, opts.n_seg)];
    if let Some(side) = opts.dp_lattice {
        if opts.n_seg >= 2 && side >= 2 {
            starts.push(dp_seed(q, x, y, side, opts.n_seg));
        }
    }
    if let Some(w) = warm {
        if w.len() == opts.n_seg + 1 {
            let mut w = w.to_vec();
            w[0] = x;
            w[opts.n_seg] = y;
            starts.push(w);
        }
    }
    let best = starts
        .into_iter()
        .map(|s| descend(q, s, opts))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    if best.grad_norm > opts.tolerance {
        return Err(Error::NonConvergence {
            grad_norm: best.grad_norm,
            iterations: best.iterations,
            value: best.value,
        });
    }
    Ok(best)
}

/// `J_q[x, y]` over paths with `n_seg` segments.
pub fn path_action_min(q: &PressureField, x: [f64; 2], y: [f64; 2], n_seg: usize) -> Result<f64> {
    let opts = PathOptions {
        n_seg,
        ..PathOptions::default()
    };
    path_action_min_with(q, x, y, &opts, None).map(|p| p.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::domain::ConvexDomain;
    use std::f64::consts::PI;

    fn oscillator(omega: f64, t1: f64) -> PressureField {
        PressureField::from_fn(ConvexDomain::Disk, 48, 0.0, t1, 2, |_, x| 0.5 * omega * omega * (x[0] * x[0] + x[1] * x[1]))
            .unwrap()
    }

    /// Minimal action along the segment `[-1, 1]` by dynamic programming
    /// over a fine lattice in space, for the potential `q(z) = z^2 / 2`,
    /// Richardson-extrapolated in the number of time steps.
    fn dp_oracle_1d(r: f64, t1: f64) -> f64 {
        let run = |steps: usize| {
            let m = 4000;
            let dz = 2.0 / m as f64;
            let sites: Vec<f64> = (0..=m).map(|i| -1.0 + i as f64 * dz).collect();
            let dt = t1 / steps as f64;
            let width = ((2.0 * dt) / dz).ceil() as usize;
            let q = |z: f64| 0.5 * z * z;
            let start = ((r + 1.0) / dz).round() as usize;
            let mut cost = vec![f64::INFINITY; sites.len()];
            cost[start] = -0.5 * dt * q(sites[start]);
            for k in 1..=steps {
                let c = if k == steps { 0.5 } else { 1.0 };
                let mut next = vec![f64::INFINITY; sites.len()];
                for b in 0..sites.len() {
                    let lo = b.saturating_sub(width);
                    let hi = (b + width).min(m);
                    let mut best = f64::INFINITY;
                    for a in lo..=hi {
                        let d = sites[b] - sites[a];
                        best = best.min(cost[a] + d * d / (2.0 * dt));
                    }
                    next[b] = best - c * dt * q(sites[b]);
                }
                cost = next;
            }
            cost[start]
        };
        let (coarse, fine) = (run(40), run(80));
        fine + (fine - coarse) / 3.0
    }

    #[test]
    fn free_particle() {
        let q = PressureField::zero(ConvexDomain::Disk, 16, 0.0, 2.0, 2).unwrap();
        let (x, y) = ([-0.5, 0.1], [0.3, 0.4]);
        let v = path_action_min(&q, x, y, 8).unwrap();
        assert!((v - sq(x, y) / 4.0).abs() < 1e-12);
        assert!(path_action_min(&q, x, x, 8).unwrap().abs() < 1e-12);
    }

    #[test]
    fn oscillator_matches_dynamic_programming() {
        let t1 = PI / 2.0;
        let r = 0.5;
        let q = oscillator(1.0, t1);
        let oracle = dp_oracle_1d(r, t1);
        // the closed form for x = y = (r, 0): -r^2 tan(T / 2)
        assert!((oracle + r * r).abs() < 1e-3, "oracle {oracle}");
        let v = path_action_min(&q, [r, 0.0], [r, 0.0], 64).unwrap();
        assert!((v - oracle).abs() < 1e-3, "{v} vs {oracle}");
    }

    #[test]
    fn refinement_converges_to_the_oscillator_action() {
        let (t1, x, y) = (1.2f64, [0.6, 0.0], [0.0, -0.6]);
        let q = oscillator(1.0, t1);
        // harmonic oscillator z'' = -z between x and y in time T:
        // ((|x|^2 + |y|^2) cos T - 2 x.y) / (2 sin T)
        let exact = (0.72 * t1.cos()) / (2.0 * t1.sin());
        let errors: Vec<f64> = [4, 8, 16, 32].iter().map(|&n| path_action_min(&q, x, y, n).unwrap() - exact).collect();
        for w in errors.windows(2) {
            assert!(w[1].abs() < w[0].abs() / 3.0, "{errors:?}");
        }
        assert!(errors[3].abs() < 1e-3);
    }

    #[test]
    fn constrained_minimizer_stays_in_the_square() {
        // a strong pull toward (2, 2) pushes the path against the corner
        let q = PressureField::from_fn(ConvexDomain::Square, 20, 0.0, 1.0, 2, |_, x| 5.0 * (x[0] + x[1])).unwrap();
        let p = path_action_min_with(&q, [0.2, 0.2], [0.9, 0.1], &PathOptions::default(), None).unwrap();
        assert!(p.nodes.iter().all(|&z| ConvexDomain::Square.contains(z)));
        assert!(p.nodes.iter().any(|z| z[0] == 1.0 || z[1] == 1.0));
    }

    #[test]
    fn rejects_bad_input() {
        let q = oscillator(1.0, 1.0);
        assert!(path_action_min(&q, [2.0, 0.0], [0.0, 0.0], 8).is_err());
        assert!(path_action_min(&q, [0.0, 0.0], [0.0, 0.0], 1).is_err());
        let opts = PathOptions {
            max_iterations: 1,
            dp_lattice: None,
            ..PathOptions::default()
        };
        assert!(matches!(
            path_action_min_with(&q, [0.5, 0.0], [-0.5, 0.3], &opts, None),
            Err(Error::NonConvergence { .. })
        ));
    }
}
