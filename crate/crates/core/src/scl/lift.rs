//! Lifted formulation: `u` is encoded as a level function `Y(x, a)`,
//! nondecreasing in `a`, that is transported along `x' = F'(a)` and projected
//! back onto nondecreasing functions of `a`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scl::flux::FluxLaw;
use crate::scl::grid::{CellAverages, Torus};
use crate::scl::pav::{pav_in_place, Block};

/// `Y(x, a_k)` on a periodic grid times the level nodes
/// `a_k = (k + 1/2) / n_a`, stored level by level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelField<const D: usize> {
    grid: Torus<D>,
    n_a: usize,
    values: Vec<f64>,
}

impl<const D: usize> LevelField<D> {
    /// `values[k * cells + c]` is `Y` at cell `c` and level `k`.
    pub fn new(grid: Torus<D>, n_a: usize, values: Vec<f64>) -> Result<Self> {
        if n_a < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 levels, got {n_a}")));
        }
        if values.len() != grid.cells() * n_a {
            return Err(Error::GridMismatch(values.len(), grid.cells() * n_a));
        }
        Ok(Self { grid, n_a, values })
    }

    pub fn grid(&self) -> &Torus<D> {
        &self.grid
    }

    pub fn levels(&self) -> usize {
        self.n_a
    }

    pub fn level_node(&self, k: usize) -> f64 {
        (k as f64 + 0.5) / self.n_a as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let cells = self.grid.cells();
        &self.values[k * cells..(k + 1) * cells]
    }

    pub fn get(&self, cell: usize, k: usize) -> f64 {
        self.values[k * self.grid.cells() + cell]
    }

    pub fn column(&self, cell: usize) -> Vec<f64> {
        (0..self.n_a).map(|k| self.get(cell, k)).collect()
    }

    /// First `(cell, level)` where `Y(cell, a_level) > Y(cell, a_{level+1})`.
    pub fn first_decrease(&self) -> Option<(usize, usize)> {
        let cells = self.grid.cells();
        for k in 0..self.n_a - 1 {
            let (lo, hi) = (self.slice(k), &self.values[(k + 1) * cells..(k + 2) * cells]);
            if let Some(c) = (0..cells).find(|&c| lo[c] > hi[c]) {
                return Some((c, k));
            }
        }
        None
    }

    pub fn is_monotone(&self) -> bool {
        self.first_decrease().is_none()
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// `L2(T^d x [0, 1])` distance with cell-volume and `1 / n_a` weights.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid || self.n_a != other.n_a {
            return Err(Error::GridMismatch(self.values.len(), other.values.len()));
        }
        let sq: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok((sq * self.grid.cell_volume() / self.n_a as f64).sqrt())
    }
}

/// `Y_0(x, a_k) = a_k - u_0(x)`.
pub fn lift<const D: usize>(u0: &CellAverages<D>, n_a: usize) -> Result<LevelField<D>> {
    build(u0, n_a, |u, k, n_a| (k as f64 + 0.5) / n_a as f64 - u)
}

/// `Y_0(x, a_k) = 1 - 2 clamp(n_a u_0(x) - k, 0, 1)`: `-1` on levels fully
/// below `u_0`, `+1` above, with the fractional level in between. Also
/// nondecreasing in `a`; [`reconstruct_band`] inverts it exactly.
pub fn lift_band<const D: usize>(u0: &CellAverages<D>, n_a: usize) -> Result<LevelField<D>> {
    build(u0, n_a, |u, k, n_a| 1.0 - 2.0 * (n_a as f64 * u - k as f64).clamp(0.0, 1.0))
}

fn build<const D: usize>(
    u0: &CellAverages<D>,
    n_a: usize,
    profile: impl Fn(f64, usize, usize) -> f64 + Sync,
) -> Result<LevelField<D>> {
    if n_a < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 levels, got {n_a}")));
    }
    let cells = u0.grid().cells();
    let mut values = vec![0.0; cells * n_a];
    values.par_chunks_mut(cells).enumerate().for_each(|(k, slice)| {
        for (y, &u) in slice.iter_mut().zip(u0.values()) {
            *y = profile(u, k, n_a);
        }
    });
    LevelField::new(*u0.grid(), n_a, values)
}

/// Shifts every level slice by `dt F'(a_k)` with periodic wrap and linear
/// interpolation (bilinear in 2D). Integer cell shifts are exact.
pub fn transport_step<const D: usize>(y: &LevelField<D>, dt: f64, flux: &FluxLaw<D>) -> LevelField<D> {
    let grid = y.grid;
    let h = grid.cell_width();
    let cells = grid.cells();
    let speeds = flux.speeds(y.n_a);
    let mut values = y.values.clone();
    values.par_chunks_mut(cells).enumerate().for_each(|(k, slice)| {
        let mut line = vec![0.0; grid.n];
        let mut shifted = vec![0.0; grid.n];
        for axis in 0..D {
            let s = dt * speeds[k][axis] / h;
            if s == 0.0 {
                continue;
            }
            let stride = grid.stride(axis);
            for start in line_starts(&grid, axis) {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = slice[start + i * stride];
                }
                shift_periodic(&line, s, &mut shifted);
                for (i, v) in shifted.iter().enumerate() {
                    slice[start + i * stride] = *v;
                }
            }
        }
    });
    LevelField {
        grid,
        n_a: y.n_a,
        values,
    }
}

/// First flat index of every grid line running along `axis`.
fn line_starts<const D: usize>(grid: &Torus<D>, axis: usize) -> Vec<usize> {
    let stride = grid.stride(axis);
    (0..grid.cells()).filter(|c| (c / stride) % grid.n == 0).collect()
}

/// `out[i] = line(x_i - s h)` by linear interpolation on the periodic line.
fn shift_periodic(line: &[f64], s: f64, out: &mut [f64]) {
    let n = line.len();
    let rounded = s.round();
    let s = if (s - rounded).abs() < 1e-9 { rounded } else { s };
    let whole = s.floor();
    let theta = s - whole;
    let offset = (whole as i64).rem_euclid(n as i64) as usize;
    for (i, o) in out.iter_mut().enumerate() {
        let a = line[(i + n - offset) % n];
        if theta == 0.0 {
            *o = a;
        } else {
            let b = line[(i + 2 * n - offset - 1) % n];
            *o = (1.0 - theta) * a + theta * b;
        }
    }
}

/// Replaces each `a`-column by its L2 projection onto nondecreasing
/// sequences (uniform level weights).
pub fn monotone_project<const D: usize>(y: &LevelField<D>) -> LevelField<D> {
    let cells = y.grid.cells();
    let n_a = y.n_a;
    let mut columns = vec![0.0; cells * n_a];
    columns.par_chunks_mut(n_a).enumerate().for_each_init(Vec::<Block>::new, |blocks, (c, col)| {
        for (k, v) in col.iter_mut().enumerate() {
            *v = y.values[k * cells + c];
        }
        pav_in_place(col, None, blocks);
    });
    let mut values = vec![0.0; cells * n_a];
    values.par_chunks_mut(cells).enumerate().for_each(|(k, slice)| {
        for (c, v) in slice.iter_mut().enumerate() {
            *v = columns[c * n_a + k];
        }
    });
    LevelField {
        grid: y.grid,
        n_a,
        values,
    }
}

/// `u(x) = (1 / n_a) #{k : Y(x, a_k) < 0}`, the midpoint rule for
/// `int_0^1 1{Y(x, a) < 0} da`.
pub fn reconstruct<const D: usize>(y: &LevelField<D>) -> Result<CellAverages<D>> {
    if let Some((cell, level)) = y.first_decrease() {
        return Err(Error::NotMonotone { cell, level });
    }
    let cells = y.grid.cells();
    let mut count = vec![0usize; cells];
    for k in 0..y.n_a {
        for (c, &v) in y.slice(k).iter().enumerate() {
            if v < 0.0 {
                count[c] += 1;
            }
        }
    }
    let u = count.into_iter().map(|n| n as f64 / y.n_a as f64).collect();
    Ok(CellAverages::from_computed(y.grid, u))
}

/// Inverse of [`lift_band`]: `u = (1 / n_a) sum_k (1 - Y(x, a_k)) / 2`.
///
/// This is `int_0^1 1{Y < 0} da` when `Y` is read as rising linearly by 2
/// across each level cell, so it agrees with [`reconstruct`] up to `1 / n_a`
/// on band-lifted data. Being linear in `Y`, it turns the exact conservation
/// of transport and projection into exact conservation of `u`.
pub fn reconstruct_band<const D: usize>(y: &LevelField<D>) -> Result<CellAverages<D>> {
    if let Some((cell, level)) = y.first_decrease() {
        return Err(Error::NotMonotone { cell, level });
    }
    let cells = y.grid.cells();
    let mut sum = vec![0.0; cells];
    for k in 0..y.n_a {
        for (s, &v) in sum.iter_mut().zip(y.slice(k)) {
            *s += v;
        }
    }
    let u = sum.into_iter().map(|s| 0.5 * (1.0 - s / y.n_a as f64)).collect();
    Ok(CellAverages::from_computed(y.grid, u))
}

/// Lift/reconstruct pairing and re-lifting policy of the lifted solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftedScheme {
    /// [`lift`] and [`reconstruct`]: `Y_0 = a - u_0` with the indicator
    /// quadrature. Not conservative at finite `n_a`.
    Affine,
    /// [`lift_band`] and [`reconstruct_band`], `Y` carried across steps.
    Band,
    /// As `Band`, but `Y` is rebuilt from `u` after every step, so one step
    /// is a monotone conservative map of `u` alone.
    BandRelift,
}

impl LiftedScheme {
    fn lift<const D: usize>(self, u: &CellAverages<D>, n_a: usize) -> Result<LevelField<D>> {
        match self {
            LiftedScheme::Affine => lift(u, n_a),
            LiftedScheme::Band | LiftedScheme::BandRelift => lift_band(u, n_a),
        }
    }

    fn reconstruct<const D: usize>(self, y: &LevelField<D>) -> Result<CellAverages<D>> {
        match self {
            LiftedScheme::Affine => reconstruct(y),
            LiftedScheme::Band | LiftedScheme::BandRelift => reconstruct_band(y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LiftedScheme::Affine => "affine",
            LiftedScheme::Band => "band",
            LiftedScheme::BandRelift => "band-relift",
        }
    }
}

impl std::str::FromStr for LiftedScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(LiftedScheme::Affine),
            "band" => Ok(LiftedScheme::Band),
            "band-relift" => Ok(LiftedScheme::BandRelift),
            _ => Err(Error::Parse(format!("unknown lifted scheme {s:?}"))),
        }
    }
}

/// Time stepper alternating [`transport_step`] and [`monotone_project`].
#[derive(Debug, Clone)]
pub struct LiftedSolver<const D: usize> {
    scheme: LiftedScheme,
    flux: FluxLaw<D>,
    dt: f64,
    y: LevelField<D>,
    u: CellAverages<D>,
    time: f64,
    steps: usize,
}

impl<const D: usize> LiftedSolver<D> {
    /// Requires `dt * L <= h`; larger steps are stable but inaccurate.
    pub fn new(u0: &CellAverages<D>, flux: FluxLaw<D>, dt: f64, n_a: usize, scheme: LiftedScheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
        }
        let courant = dt * flux.lipschitz_bound() / u0.grid().cell_width();
        if courant > 1.0 + 1e-12 {
            return Err(Error::CflViolation { courant, limit: 1.0 });
        }
        let y = scheme.lift(u0, n_a)?;
        let u = scheme.reconstruct(&y)?;
        Ok(Self {
            scheme,
            flux,
            dt,
            y,
            u,
            time: 0.0,
            steps: 0,
        })
    }

    pub fn step(&mut self) -> Result<&CellAverages<D>> {
        let moved = transport_step(&self.y, self.dt, &self.flux);
        self.y = monotone_project(&moved);
        self.u = self.scheme.reconstruct(&self.y)?;
        if self.scheme == LiftedScheme::BandRelift {
            self.y = self.scheme.lift(&self.u, self.y.n_a)?;
        }
        self.time += self.dt;
        self.steps += 1;
        Ok(&self.u)
    }

    pub fn solution(&self) -> &CellAverages<D> {
        &self.u
    }

    pub fn level_field(&self) -> &LevelField<D> {
        &self.y
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// The scheme used by [`evolve`]: conservative, order preserving and an
/// L1 contraction step by step.
pub const DEFAULT_SCHEME: LiftedScheme = LiftedScheme::BandRelift;

/// Runs `ceil(T / dt)` steps of equal size `T / ceil(T / dt)` from the
/// lifted initial data and returns the reconstruction at time `T`.
pub fn evolve<const D: usize>(u0: &CellAverages<D>, flux: &FluxLaw<D>, t_end: f64, dt: f64, n_a: usize) -> Result<CellAverages<D>> {
    evolve_with(u0, flux, t_end, dt, n_a, DEFAULT_SCHEME, |_, _| {})
}

/// [`evolve`] with an explicit scheme; `observe(time, u)` sees every step.
pub fn evolve_with<const D: usize>(
    u0: &CellAverages<D>,
    flux: &FluxLaw<D>,
    t_end: f64,
    dt: f64,
    n_a: usize,
    scheme: LiftedScheme,
    mut observe: impl FnMut(f64, &CellAverages<D>),
) -> Result<CellAverages<D>> {
    if !(t_end >= 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("bad horizon {t_end} or step {dt}")));
    }
    let steps = step_count(t_end, dt);
    if steps == 0 {
        return scheme.reconstruct(&scheme.lift(u0, n_a)?);
    }
    let mut solver = LiftedSolver::new(u0, *flux, t_end / steps as f64, n_a, scheme)?;
    for _ in 0..steps {
        solver.step()?;
        observe(solver.time(), solver.solution());
    }
    Ok(solver.u)
}

pub(crate) fn step_count(t_end: f64, dt: f64) -> usize {
    (t_end / dt - 1e-9).ceil().max(0.0) as usize
}
