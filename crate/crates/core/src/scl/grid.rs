use crate::error::{Error, Result};

/// Uniform periodic grid on `[origin, origin + length)^D` with `n` cells per
/// axis. Cells are stored row-major, axis 0 slowest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torus<const D: usize> {
    pub n: usize,
    pub origin: f64,
    pub length: f64,
}

impl<const D: usize> Torus<D> {
    pub fn new(n: usize, origin: f64, length: f64) -> Result<Self> {
        if n == 0 || !(length > 0.0) || !origin.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bad torus: {n} cells, origin {origin}, length {length}"
            )));
        }
        if !(1..=2).contains(&D) {
            return Err(Error::InvalidArgument(format!("dimension {D} not supported")));
        }
        Ok(Self { n, origin, length })
    }

    /// `n` cells on the unit torus `[0, 1)^D`.
    pub fn unit(n: usize) -> Self {
        Self::new(n, 0.0, 1.0).expect("valid unit torus")
    }

    pub fn cell_width(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width().powi(D as i32)
    }

    pub fn cells(&self) -> usize {
        self.n.pow(D as u32)
    }

    /// Distance in flat storage between neighbors along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((D - 1 - axis) as u32)
    }

    pub fn center(&self, cell: usize) -> [f64; D] {
        let h = self.cell_width();
        std::array::from_fn(|k| {
            let i = (cell / self.stride(k)) % self.n;
            self.origin + (i as f64 + 0.5) * h
        })
    }
}

/// Cell averages `u` with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAverages<const D: usize> {
    grid: Torus<D>,
    u: Vec<f64>,
}

impl<const D: usize> CellAverages<D> {
    pub fn new(grid: Torus<D>, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.cells() {
            return Err(Error::GridMismatch(u.len(), grid.cells()));
        }
        if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::RangeError { index, value });
        }
        Ok(Self { grid, u })
    }

    /// Clamps values within rounding of `[0, 1]`.
    pub(crate) fn from_computed(grid: Torus<D>, mut u: Vec<f64>) -> Self {
        for v in &mut u {
            debug_assert!(*v > -1e-9 && *v < 1.0 + 1e-9, "value {v} left [0, 1]");
            *v = v.clamp(0.0, 1.0);
        }
        Self { grid, u }
    }

    pub fn from_fn(grid: Torus<D>, f: impl Fn([f64; D]) -> f64) -> Result<Self> {
        let u = (0..grid.cells()).map(|c| f(grid.center(c))).collect();
        Self::new(grid, u)
    }

    pub fn grid(&self) -> &Torus<D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// `sum u * cell volume`.
    pub fn mass(&self) -> f64 {
        self.u.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `sum |u - v| * cell volume`.
pub fn l1_distance<const D: usize>(u: &CellAverages<D>, v: &CellAverages<D>) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch(u.grid.cells(), v.grid.cells()));
    }
    Ok(u.u.iter().zip(&v.u).map(|(a, b)| (a - b).abs()).sum::<f64>() * u.grid.cell_volume())
}
