//! Discrete Kruzhkov entropy inequality `d/dt |u - k| + d/dx Z <= 0`.

use crate::error::{Error, Result};
use crate::scl::flux::ScalarFlux;
use crate::scl::grid::CellAverages;

/// Largest positive value, over cells and time steps, of
///
/// `(|u_i^{n+1} - k| - |u_i^n - k|) / dt + (Z_{i+1/2} - Z_{i-1/2}) / h`
///
/// with the cell entropy flux
/// `Z_{i+1/2} = G(u_i v k, u_{i+1} v k) - G(u_i ^ k, u_{i+1} ^ k)` built from
/// the Godunov flux `G` of `flux`. This is the integrated entropy inequality
/// tested against cell indicators. Trajectories of a monotone scheme give
/// `<= 0` up to rounding; nonadmissible jumps give `O(1 / h)`.
pub fn entropy_residual(trajectory: &[CellAverages<1>], dt: f64, flux: &ScalarFlux, k: f64) -> Result<f64> {
    if trajectory.len() < 2 {
        return Err(Error::InvalidArgument("need at least two snapshots".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let grid = *trajectory[0].grid();
    if let Some(u) = trajectory.iter().find(|u| *u.grid() != grid) {
        return Err(Error::GridMismatch(grid.cells(), u.grid().cells()));
    }
    let h = grid.cell_width();
    let n = grid.n;
    let mut worst: f64 = 0.0;
    for pair in trajectory.windows(2) {
        let (old, new) = (pair[0].values(), pair[1].values());
        let z: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = (old[i], old[(i + 1) % n]);
                flux.godunov(a.max(k), b.max(k)) - flux.godunov(a.min(k), b.min(k))
            })
            .collect();
        for i in 0..n {
            let dudt = ((new[i] - k).abs() - (old[i] - k).abs()) / dt;
            let r = dudt + (z[i] - z[(i + n - 1) % n]) / h;
            worst = worst.max(r);
        }
    }
    Ok(worst)
}
