use serde::Serialize;

use crate::error::{Error, Result};
use crate::isoperimetry::domain::{isoperimetric_bound, unit_ball_volume, DomainGrid, Shape};
use crate::ot::{barycentric_map, solve_discrete_ot, DiscreteMeasure, PointCloud};

/// Relative size of `J - J^T` above which a cell counts as asymmetric.
pub const SYMMETRY_TOLERANCE: f64 = 0.1;

/// Discrete version of the transport proof of the isoperimetric inequality
/// for one domain and resolution.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub shape: String,
    pub resolution: usize,
    pub cell_size: f64,
    pub source_cells: usize,
    pub target_cells: usize,
    pub pivots: usize,
    /// `|dOmega|`, the first link of the chain.
    pub boundary_length: f64,
    /// `sum_cells div_h(T) h^d`, face-averaged so that it telescopes to a
    /// boundary flux.
    pub divergence_integral: f64,
    /// `sum_cells d det(J_h)^{1/d} h^d` with `J_h` symmetrized.
    pub determinant_integral: f64,
    /// `d |Omega|^{1-1/d} |B_1|^{1/d}`, the last link.
    pub lower_bound: f64,
    pub tolerance: f64,
    /// `divergence_integral >= lower_bound - tolerance`.
    pub chain_holds: bool,
    /// `divergence_integral - lower_bound`.
    pub gap: f64,
    /// `d` times the isoperimetric margin, `|dOmega| - lower_bound`.
    pub analytic_gap: f64,
    /// Largest `d det^{1/d} - trace` over cells, clamped at 0.
    pub amgm_max_residual: f64,
    pub amgm_violations: usize,
    pub asymmetric_cells: usize,
    pub symmetry_tolerance: f64,
    /// Largest `|T_i| - 1`, clamped at 0.
    pub map_range_excess: f64,
}

/// Transports the uniform measure on `domain` to the uniform measure on the
/// unit ball and evaluates each link of
/// `|dOmega| >= int div T >= d int det(DT)^{1/d} = d |Omega|^{1-1/d}|B_1|^{1/d}`.
pub fn gromov_chain_check(domain: &DomainGrid) -> Result<ChainReport> {
    let d = domain.dim();
    if domain.resolution() < 8 {
        return Err(Error::InvalidArgument(format!(
            "resolution {} below the minimum of 8",
            domain.resolution()
        )));
    }
    let h = domain.cell_size();
    // about as many ball cells as domain cells, so the plan is close to a
    // permutation and T resolves at the domain's cell size
    let hb = h * (unit_ball_volume(d) / domain.shape().volume()).powf(1.0 / d as f64);
    let ball = DomainGrid::with_cell_size(Shape::ball(d), hb, (2.0 / hb).round() as usize)?;

    let alpha = DiscreteMeasure::uniform(PointCloud::new(d, domain.centers().to_vec())?)?;
    let beta = DiscreteMeasure::uniform(PointCloud::new(d, ball.centers().to_vec())?)?;
    if alpha.len() != domain.len() {
        return Err(Error::SolverFailure("grid cells were merged".into()));
    }
    let sol = solve_discrete_ot(&alpha, &beta)?;
    let t = barycentric_map(&sol.plan)?;

    let cell_vol = domain.cell_volume();
    let mut divergence = 0.0;
    let mut det_sum = 0.0;
    let mut amgm_max: f64 = 0.0;
    let mut amgm_violations = 0;
    let mut asymmetric = 0;
    let mut jac = vec![vec![0.0; d]; d];
    for cell in 0..domain.len() {
        for k in 0..d {
            let plus = domain.neighbor(cell, k, 1);
            let minus = domain.neighbor(cell, k, -1);
            // face values: neighbor average, or the cell value on the boundary
            let face = |n: Option<usize>| n.map_or(t[cell][k], |c| 0.5 * (t[cell][k] + t[c][k]));
            divergence += (face(plus) - face(minus)) / h * cell_vol;

            let (hi, lo, span) = match (plus, minus) {
                (Some(p), Some(m)) => (p, m, 2.0 * h),
                (Some(p), None) => (p, cell, h),
                (None, Some(m)) => (cell, m, h),
                (None, None) => (cell, cell, 1.0),
            };
            for r in 0..d {
                jac[r][k] = (t[hi][r] - t[lo][r]) / span;
            }
        }
        let mut skew: f64 = 0.0;
        let mut size: f64 = 0.0;
        for r in 0..d {
            for k in 0..d {
                skew = skew.max((jac[r][k] - jac[k][r]).abs());
                size = size.max(jac[r][k].abs());
            }
        }
        if skew > SYMMETRY_TOLERANCE * size {
            asymmetric += 1;
        }
        let sym: Vec<Vec<f64>> = (0..d)
            .map(|r| (0..d).map(|k| 0.5 * (jac[r][k] + jac[k][r])).collect())
            .collect();
        let root = determinant(&sym).max(0.0).powf(1.0 / d as f64);
        let trace: f64 = (0..d).map(|r| sym[r][r]).sum();
        det_sum += d as f64 * root * cell_vol;
        let residual = d as f64 * root - trace;
        if residual > 1e-12 * trace.abs().max(1.0) {
            amgm_violations += 1;
        }
        amgm_max = amgm_max.max(residual);
    }

    let map_range_excess = t
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0)
        .fold(0.0, f64::max);

    let bound = isoperimetric_bound(domain);
    let lower_bound = d as f64 * bound.lhs;
    let tolerance = chain_tolerance(domain);
    Ok(ChainReport {
        shape: domain.shape().to_string(),
        resolution: domain.resolution(),
        cell_size: h,
        source_cells: alpha.len(),
        target_cells: beta.len(),
        pivots: sol.pivots,
        boundary_length: domain.boundary_length(),
        divergence_integral: divergence,
        determinant_integral: det_sum,
        lower_bound,
        tolerance,
        chain_holds: divergence >= lower_bound - tolerance,
        gap: divergence - lower_bound,
        analytic_gap: domain.boundary_length() - lower_bound,
        amgm_max_residual: amgm_max,
        amgm_violations,
        asymmetric_cells: asymmetric,
        symmetry_tolerance: SYMMETRY_TOLERANCE,
        map_range_excess,
    })
}

/// `2 |dOmega| h (|B_1| / |Omega|)^{1/d}`: a half-cell boundary layer
/// weighted by the typical expansion rate of the map.
fn chain_tolerance(domain: &DomainGrid) -> f64 {
    let d = domain.dim() as f64;
    2.0 * domain.boundary_length() * domain.cell_size() * (unit_ball_volume(domain.dim()) / domain.volume()).powf(1.0 / d)
}

fn determinant(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        n => panic!("determinant of a {n}x{n} matrix"),
    }
}
