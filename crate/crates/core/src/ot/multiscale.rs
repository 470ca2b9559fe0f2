//! Candidate arcs for large problems from a coarsened solve.
//!
//! Both measures are aggregated on a regular grid with about `2^d` atoms per
//! cell, the coarse problem is solved (recursively), and the coarse convex
//! potential is extended to the fine atoms to first order using the coarse
//! barycentric map as its gradient. Arcs with the smallest slack
//! `phi_i + psi_j - x_i . y_j` per row and per column become candidates.

use std::collections::HashMap;

use crate::error::Result;
use crate::ot::dual::{legendre_transform, solve_discrete_ot};
use crate::ot::measure::{dot, DiscreteMeasure, PointCloud};
use crate::ot::plan::barycentric_map;

/// Problems with at most this many arcs are solved densely.
pub(crate) const DENSE_ARC_LIMIT: usize = 400_000;
const PER_ROW: usize = 6;
const PER_COLUMN: usize = 6;

pub(crate) fn candidate_arcs(alpha: &DiscreteMeasure, beta: &DiscreteMeasure) -> Result<Option<Vec<(usize, usize)>>> {
    if alpha.len() * beta.len() <= DENSE_ARC_LIMIT {
        return Ok(None);
    }
    let (Some((ca, pa)), Some((cb, _))) = (coarsen(alpha), coarsen(beta)) else {
        return Ok(None);
    };
    let coarse = solve_discrete_ot(&ca, &cb)?;
    let grad = barycentric_map(&coarse.plan)?;

    let phi: Vec<f64> = (0..alpha.len())
        .map(|i| {
            let parent = pa[i];
            let offset: f64 = alpha
                .point(i)
                .iter()
                .zip(ca.point(parent))
                .zip(&grad[parent])
                .map(|((x, c), g)| (x - c) * g)
                .sum();
            coarse.potentials.phi[parent] + offset
        })
        .collect();
    let psi = legendre_transform(alpha.points(), &phi, beta.points())?;

    let mut arcs = Vec::with_capacity((alpha.len() + beta.len()) * PER_ROW);
    nearest_by_slack(alpha.points(), &phi, beta.points(), &psi, PER_ROW, |i, j| arcs.push((i, j)));
    nearest_by_slack(beta.points(), &psi, alpha.points(), &phi, PER_COLUMN, |j, i| arcs.push((i, j)));
    arcs.sort_unstable();
    arcs.dedup();
    Ok(Some(arcs))
}

/// For each `a` in `rows`, reports the `k` columns with the smallest slack.
fn nearest_by_slack(
    rows: &PointCloud,
    row_pot: &[f64],
    cols: &PointCloud,
    col_pot: &[f64],
    k: usize,
    mut emit: impl FnMut(usize, usize),
) {
    let k = k.min(cols.len());
    let mut slack: Vec<(f64, usize)> = Vec::with_capacity(cols.len());
    for (a, x) in rows.iter().enumerate() {
        slack.clear();
        slack.extend(
            cols.iter()
                .zip(col_pot)
                .enumerate()
                .map(|(b, (y, p))| (row_pot[a] + p - dot(x, y), b)),
        );
        if k < slack.len() {
            slack.select_nth_unstable_by(k, |s, t| s.0.total_cmp(&t.0));
        }
        for &(_, b) in &slack[..k] {
            emit(a, b);
        }
    }
}

/// Aggregates atoms on a grid sized for about `2^d` atoms per cell. Returns
/// the coarse measure (cell centroids) and each atom's cell, or `None` when
/// aggregation would not shrink the problem.
fn coarsen(m: &DiscreteMeasure) -> Option<(DiscreteMeasure, Vec<usize>)> {
    let d = m.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in m.points().iter() {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let spread: Vec<usize> = (0..d).filter(|&k| hi[k] > lo[k]).collect();
    if spread.is_empty() {
        return None;
    }
    let volume: f64 = spread.iter().map(|&k| hi[k] - lo[k]).product();
    let e = spread.len() as f64;
    let cells_wanted = m.len() as f64 / 2f64.powf(e);
    let side = (volume / cells_wanted).powf(1.0 / e);

    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut parent = Vec::with_capacity(m.len());
    let mut mass: Vec<f64> = Vec::new();
    let mut centroid: Vec<f64> = Vec::new();
    for (p, &w) in m.points().iter().zip(m.weights()) {
        let key: Vec<i64> = spread.iter().map(|&k| ((p[k] - lo[k]) / side).floor() as i64).collect();
        let next = mass.len();
        let c = *index.entry(key).or_insert(next);
        if c == next {
            mass.push(0.0);
            centroid.extend(std::iter::repeat(0.0).take(d));
        }
        mass[c] += w;
        for k in 0..d {
            centroid[c * d + k] += w * p[k];
        }
        parent.push(c);
    }
    if mass.len() * 4 > m.len() * 3 {
        return None;
    }
    for (c, w) in mass.iter().enumerate() {
        for k in 0..d {
            centroid[c * d + k] /= w;
        }
    }
    let coarse = DiscreteMeasure::new(PointCloud::new(d, centroid).ok()?, mass).ok()?;
    if coarse.len() != parent.iter().max().map_or(0, |p| p + 1) {
        // centroids merged; parent indices would no longer line up
        return None;
    }
    Some((coarse, parent))
}
