//! Godunov finite-volume reference solver on the periodic grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scl::flux::{FluxLaw, ScalarFlux};
use crate::scl::grid::{CellAverages, Torus};
use crate::scl::lift::step_count;

/// Courant number used by [`godunov_solve`].
pub const DEFAULT_CFL: f64 = 0.5;

/// Cell averages advanced by the Godunov scheme, with dimensional
/// splitting (axis 0 first) in 2D.
#[derive(Debug, Clone)]
pub struct FiniteVolumeState<const D: usize> {
    u: CellAverages<D>,
    flux: FluxLaw<D>,
    dt: f64,
    t: f64,
    cfl: f64,
}

impl<const D: usize> FiniteVolumeState<D> {
    pub fn new(u0: &CellAverages<D>, flux: FluxLaw<D>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
        }
        let cfl = dt * flux.lipschitz_bound() / u0.grid().cell_width();
        if cfl > 1.0 + 1e-12 {
            return Err(Error::CflViolation { courant: cfl, limit: 1.0 });
        }
        Ok(Self {
            u: u0.clone(),
            flux,
            dt,
            t: 0.0,
            cfl,
        })
    }

    pub fn step(&mut self) -> &CellAverages<D> {
        let grid = *self.u.grid();
        let mut u = self.u.values().to_vec();
        for axis in 0..D {
            u = sweep(&grid, &u, self.flux.component(axis), axis, self.dt / grid.cell_width());
        }
        self.u = CellAverages::from_computed(grid, u);
        self.t += self.dt;
        &self.u
    }

    pub fn solution(&self) -> &CellAverages<D> {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn cfl(&self) -> f64 {
        self.cfl
    }
}

/// One conservative update along `axis` with `ratio = dt / h`.
fn sweep<const D: usize>(grid: &Torus<D>, u: &[f64], f: &ScalarFlux, axis: usize, ratio: f64) -> Vec<f64> {
    let n = grid.n;
    let stride = grid.stride(axis);
    let next = |c: usize| {
        let i = (c / stride) % n;
        if i + 1 == n {
            c + stride - n * stride
        } else {
            c + stride
        }
    };
    // flux through the face on the high side of each cell
    let face: Vec<f64> = (0..u.len()).into_par_iter().map(|c| f.godunov(u[c], u[next(c)])).collect();
    let mut out = vec![0.0; u.len()];
    out.par_iter_mut().enumerate().for_each(|(c, o)| {
        let i = (c / stride) % n;
        let prev = if i == 0 { c + (n - 1) * stride } else { c - stride };
        *o = u[c] - ratio * (face[c] - face[prev]);
    });
    out
}

/// Godunov solution at `t_end` with Courant number [`DEFAULT_CFL`].
pub fn godunov_solve<const D: usize>(u0: &CellAverages<D>, flux: &FluxLaw<D>, t_end: f64) -> Result<CellAverages<D>> {
    let l = flux.lipschitz_bound();
    let dt = if l > 0.0 { DEFAULT_CFL * u0.grid().cell_width() / l } else { t_end.max(f64::MIN_POSITIVE) };
    let mut last = u0.clone();
    run(u0, flux, t_end, dt, |u| last = u.clone())?;
    Ok(last)
}

/// Snapshots at every step of `ceil(T / dt)` equal steps, starting with `u0`.
pub fn godunov_trajectory<const D: usize>(
    u0: &CellAverages<D>,
    flux: &FluxLaw<D>,
    t_end: f64,
    dt: f64,
) -> Result<Vec<CellAverages<D>>> {
    let mut out = vec![u0.clone()];
    run(u0, flux, t_end, dt, |u| out.push(u.clone()))?;
    Ok(out)
}

fn run<const D: usize>(
    u0: &CellAverages<D>,
    flux: &FluxLaw<D>,
    t_end: f64,
    dt: f64,
    mut observe: impl FnMut(&CellAverages<D>),
) -> Result<()> {
    if !(t_end >= 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("bad horizon {t_end} or step {dt}")));
    }
    let steps = step_count(t_end, dt);
    if steps == 0 {
        return Ok(());
    }
    let courant = dt * flux.lipschitz_bound() / u0.grid().cell_width();
    if courant > 1.0 + 1e-12 {
        return Err(Error::CflViolation { courant, limit: 1.0 });
    }
    let mut state = FiniteVolumeState::new(u0, *flux, t_end / steps as f64)?;
    for _ in 0..steps {
        observe(state.step());
    }
    Ok(())
}
