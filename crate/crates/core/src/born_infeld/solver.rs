use rayon::prelude::*;
use serde::Serialize;

use crate::born_infeld::field::AbiField1D;
use crate::born_infeld::state::{abi_flux, jacobian_spectral_radius, wave_speed_bound, AbiState};
use crate::error::{Error, Result};

/// Default `dt * lambda_max / dx`.
pub const DEFAULT_CFL: f64 = 0.5;

/// `max_i lambda(u_i)` of the Rusanov wave-speed bound.
pub fn max_wave_speed(field: &AbiField1D) -> f64 {
    field.cells().iter().map(wave_speed_bound).fold(0.0, f64::max)
}

/// One Rusanov step on the periodic grid:
/// `F_{i+1/2} = (F(u_i) + F(u_{i+1})) / 2 - a (u_{i+1} - u_i) / 2`,
/// `a = max(lambda(u_i), lambda(u_{i+1}))`.
pub fn fv_step(field: &AbiField1D, dt: f64) -> Result<AbiField1D> {
    let cells = field.cells();
    let n = cells.len();
    let dx = field.cell_width();
    let courant = dt * max_wave_speed(field) / dx;
    if !(dt > 0.0) || courant > 1.0 {
        return Err(Error::CflViolation { courant, limit: 1.0 });
    }
    let fluxes: Vec<[f64; 10]> = cells.par_iter().map(abi_flux).collect::<Result<_>>()?;
    let interface: Vec<[f64; 10]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let j = (i + 1) % n;
            let (ul, ur) = (cells[i].to_array(), cells[j].to_array());
            let a = wave_speed_bound(&cells[i]).max(wave_speed_bound(&cells[j]));
            std::array::from_fn(|k| 0.5 * (fluxes[i][k] + fluxes[j][k]) - 0.5 * a * (ur[k] - ul[k]))
        })
        .collect();
    let r = dt / dx;
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let left = &interface[(i + n - 1) % n];
        let right = &interface[i];
        let u = cells[i].to_array();
        let mut v: [f64; 10] = std::array::from_fn(|k| u[k] - r * (right[k] - left[k]));
        // both fluxes vanish identically; keep the constants bit-exact
        v[4] = u[4];
        v[7] = u[7];
        if !(v[0] > 0.0) {
            return Err(Error::PositivityLoss { cell: i, h: v[0] });
        }
        next.push(AbiState::from_array(&v));
    }
    AbiField1D::new(next)
}

/// A cell where the finite-difference flux Jacobian has a spectral
/// radius above the Rusanov bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedWarning {
    pub step: usize,
    pub cell: usize,
    pub spectral_radius: f64,
    pub bound: f64,
}

/// Time stepper with a fixed Courant number that periodically compares
/// the wave-speed bound with the flux Jacobian spectrum.
#[derive(Debug, Clone)]
pub struct AbiSolver {
    field: AbiField1D,
    time: f64,
    steps: usize,
    cfl: f64,
    monitor_every: usize,
    warnings: Vec<SpeedWarning>,
}

impl AbiSolver {
    pub fn new(field: AbiField1D, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidArgument(format!("Courant number {cfl} outside (0, 1]")));
        }
        Ok(Self {
            field,
            time: 0.0,
            steps: 0,
            cfl,
            monitor_every: 50,
            warnings: Vec::new(),
        })
    }

    /// Checks the wave-speed bound every `n` steps (0 disables).
    pub fn monitor_every(mut self, n: usize) -> Self {
        self.monitor_every = n;
        self
    }

    pub fn field(&self) -> &AbiField1D {
        &self.field
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn warnings(&self) -> &[SpeedWarning] {
        &self.warnings
    }

    /// Largest stable step for the current field.
    pub fn stable_dt(&self) -> f64 {
        self.cfl * self.field.cell_width() / max_wave_speed(&self.field)
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        if self.monitor_every > 0 && self.steps % self.monitor_every == 0 {
            self.check_speeds()?;
        }
        self.field = fv_step(&self.field, dt)?;
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    /// Steps to `t_end`, shortening the last step to land on it.
    pub fn advance_to(&mut self, t_end: f64, mut observe: impl FnMut(&Self)) -> Result<()> {
        while self.time < t_end - 1e-12 * t_end.abs().max(1.0) {
            let dt = self.stable_dt().min(t_end - self.time);
            self.step(dt)?;
            observe(self);
        }
        Ok(())
    }

    fn check_speeds(&mut self) -> Result<()> {
        let radii: Vec<f64> = self.field.cells().par_iter().map(jacobian_spectral_radius).collect::<Result<_>>()?;
        for (cell, (&rho, s)) in radii.iter().zip(self.field.cells()).enumerate() {
            let bound = wave_speed_bound(s);
            if rho > bound {
                self.warnings.push(SpeedWarning {
                    step: self.steps,
                    cell,
                    spectral_radius: rho,
                    bound,
                });
            }
        }
        Ok(())
    }
}
