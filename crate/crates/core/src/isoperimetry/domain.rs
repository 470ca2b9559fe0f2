use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Named domains, all centered at the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Axis-aligned box with the given side lengths; its dimension is the
    /// number of sides.
    Box(Vec<f64>),
    Ball { dim: usize, radius: f64 },
    /// Simple polygon, vertices in order.
    Polygon(Vec<[f64; 2]>),
}

impl Shape {
    pub fn square() -> Self {
        Shape::Box(vec![1.0, 1.0])
    }

    pub fn rectangle(a: f64, b: f64) -> Self {
        Shape::Box(vec![a, b])
    }

    pub fn cube() -> Self {
        Shape::Box(vec![1.0; 3])
    }

    pub fn disk() -> Self {
        Shape::Ball { dim: 2, radius: 1.0 }
    }

    pub fn ball(dim: usize) -> Self {
        Shape::Ball { dim, radius: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Box(sides) => sides.len(),
            Shape::Ball { dim, .. } => *dim,
            Shape::Polygon(_) => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("dimension {d} not supported (2 or 3)")));
        }
        match self {
            Shape::Box(sides) if sides.iter().any(|s| !(*s > 0.0 && s.is_finite())) => {
                Err(Error::InvalidArgument("box sides must be positive".into()))
            }
            Shape::Ball { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(Error::InvalidArgument("radius must be positive".into()))
            }
            Shape::Polygon(v) if v.len() < 3 => Err(Error::InvalidArgument("polygon needs 3 vertices".into())),
            Shape::Polygon(v) if polygon_area(v).abs() <= 0.0 => {
                Err(Error::InvalidArgument("degenerate polygon".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Box(sides) => x.iter().zip(sides).all(|(xi, s)| xi.abs() < 0.5 * s),
            Shape::Ball { radius, .. } => x.iter().map(|v| v * v).sum::<f64>() < radius * radius,
            Shape::Polygon(v) => {
                // even-odd ray casting
                let mut inside = false;
                let mut j = v.len() - 1;
                for i in 0..v.len() {
                    let (a, b) = (v[i], v[j]);
                    if (a[1] > x[1]) != (b[1] > x[1]) {
                        let cross = a[0] + (x[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if x[0] < cross {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside
            }
        }
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Box(sides) => (sides.iter().map(|s| -0.5 * s).collect(), sides.iter().map(|s| 0.5 * s).collect()),
            Shape::Ball { dim, radius } => (vec![-radius; *dim], vec![*radius; *dim]),
            Shape::Polygon(v) => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for p in v {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Exact area (d = 2) or volume (d = 3).
    pub fn volume(&self) -> f64 {
        match self {
            Shape::Box(sides) => sides.iter().product(),
            Shape::Ball { dim, radius } => unit_ball_volume(*dim) * radius.powi(*dim as i32),
            Shape::Polygon(v) => polygon_area(v).abs(),
        }
    }

    /// Exact perimeter (d = 2) or surface area (d = 3).
    pub fn boundary_measure(&self) -> f64 {
        match self {
            Shape::Box(sides) if sides.len() == 2 => 2.0 * (sides[0] + sides[1]),
            Shape::Box(s) => 2.0 * (s[0] * s[1] + s[1] * s[2] + s[0] * s[2]),
            Shape::Ball { dim, radius } => *dim as f64 * unit_ball_volume(*dim) * radius.powi(*dim as i32 - 1),
            Shape::Polygon(v) => (0..v.len())
                .map(|i| {
                    let (a, b) = (v[i], v[(i + 1) % v.len()]);
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
                .sum(),
        }
    }
}

fn polygon_area(v: &[[f64; 2]]) -> f64 {
    0.5 * (0..v.len())
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Box(s) if s == &[1.0, 1.0] => write!(f, "square"),
            Shape::Box(s) if s == &[1.0, 1.0, 1.0] => write!(f, "cube"),
            Shape::Box(s) if s.len() == 2 => write!(f, "rectangle {} {}", s[0], s[1]),
            Shape::Box(s) => write!(f, "box {} {} {}", s[0], s[1], s[2]),
            Shape::Ball { dim: 2, radius } => write!(f, "disk {radius}"),
            Shape::Ball { radius, .. } => write!(f, "ball {radius}"),
            Shape::Polygon(v) => {
                write!(f, "polygon")?;
                for p in v {
                    write!(f, " {} {}", p[0], p[1])?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `square`, `cube`, `disk [r]`, `ball [r]`, `rectangle a b`,
/// `box a b c` and `polygon x1 y1 x2 y2 ...`.
impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let name = words.next().ok_or_else(|| Error::Parse("empty shape".into()))?;
        let args: Vec<f64> = words
            .map(|w| w.parse::<f64>().map_err(|e| Error::Parse(format!("shape argument {w:?}: {e}"))))
            .collect::<Result<_>>()?;
        let shape = match (name, args.as_slice()) {
            ("square", []) => Shape::square(),
            ("cube", []) => Shape::cube(),
            ("disk", []) => Shape::disk(),
            ("disk", [r]) => Shape::Ball { dim: 2, radius: *r },
            ("ball", []) => Shape::ball(3),
            ("ball", [r]) => Shape::Ball { dim: 3, radius: *r },
            ("rectangle", [a, b]) => Shape::rectangle(*a, *b),
            ("box", [a, b, c]) => Shape::Box(vec![*a, *b, *c]),
            ("polygon", xs) if xs.len() >= 6 && xs.len() % 2 == 0 => {
                Shape::Polygon(xs.chunks(2).map(|p| [p[0], p[1]]).collect())
            }
            _ => return Err(Error::Parse(format!("unrecognized shape {s:?}"))),
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// `|B_1| = pi^{d/2} / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    PI.powf(dim as f64 / 2.0) / gamma_half_integer(dim + 2)
}

/// `Gamma(k / 2)` for a positive integer `k`.
fn gamma_half_integer(k: usize) -> f64 {
    let (mut x, mut g) = if k % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while 2.0 * x < k as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Cells of a uniform grid whose centers lie inside a shape.
#[derive(Debug, Clone)]
pub struct DomainGrid {
    shape: Shape,
    dim: usize,
    resolution: usize,
    cell_size: f64,
    counts: Vec<usize>,
    lower: Vec<f64>,
    /// Multi-index of each inside cell.
    index: Vec<Vec<usize>>,
    centers: Vec<f64>,
    /// Dense lookup from flattened multi-index to inside-cell number.
    lookup: Vec<Option<u32>>,
    boundary_length: f64,
    volume: f64,
}

impl DomainGrid {
    /// Grid with `resolution` cells across the longest side of the shape's
    /// bounding box.
    pub fn new(shape: Shape, resolution: usize) -> Result<Self> {
        shape.validate()?;
        if resolution == 0 {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        let (lo, hi) = shape.bounding_box();
        let longest = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        Self::with_cell_size(shape, longest / resolution as f64, resolution)
    }

    /// Grid with a prescribed cell size, aligned to the bounding box.
    pub fn with_cell_size(shape: Shape, cell_size: f64, resolution: usize) -> Result<Self> {
        shape.validate()?;
        let dim = shape.dim();
        let (lo, hi) = shape.bounding_box();
        let counts: Vec<usize> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (((b - a) / cell_size) - 1e-9).ceil().max(1.0) as usize)
            .collect();
        // center the grid on the bounding box
        let lower: Vec<f64> = (0..dim)
            .map(|k| 0.5 * (lo[k] + hi[k]) - 0.5 * counts[k] as f64 * cell_size)
            .collect();
        let total: usize = counts.iter().product();
        let mut lookup = vec![None; total];
        let mut index = Vec::new();
        let mut centers = Vec::new();
        let mut multi = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        for flat in 0..total {
            let mut rest = flat;
            for k in (0..dim).rev() {
                multi[k] = rest % counts[k];
                rest /= counts[k];
            }
            for k in 0..dim {
                x[k] = lower[k] + (multi[k] as f64 + 0.5) * cell_size;
            }
            if shape.contains(&x) {
                lookup[flat] = Some(index.len() as u32);
                index.push(multi.clone());
                centers.extend_from_slice(&x);
            }
        }
        if index.is_empty() {
            return Err(Error::EmptySupport);
        }
        let volume = index.len() as f64 * cell_size.powi(dim as i32);
        let boundary_length = shape.boundary_measure();
        Ok(Self {
            shape,
            dim,
            resolution,
            cell_size,
            counts,
            lower,
            index,
            centers,
            lookup,
            boundary_length,
            volume,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Flat `len * dim` array of cell centers.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn center(&self, cell: usize) -> &[f64] {
        &self.centers[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_length
    }

    /// Cell count times cell volume.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn lower_corner(&self) -> &[f64] {
        &self.lower
    }

    /// Inside cell adjacent to `cell` along `axis` (`step` = +1 or -1).
    pub fn neighbor(&self, cell: usize, axis: usize, step: isize) -> Option<usize> {
        let m = &self.index[cell];
        let moved = m[axis] as isize + step;
        if moved < 0 || moved as usize >= self.counts[axis] {
            return None;
        }
        let mut flat = 0;
        for k in 0..self.dim {
            let v = if k == axis { moved as usize } else { m[k] };
            flat = flat * self.counts[k] + v;
        }
        self.lookup[flat].map(|c| c as usize)
    }
}

/// Both sides of `|Omega|^{1-1/d} |B_1|^{1/d} <= |dOmega| / d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoperimetricBound {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Negative margin tolerated because the volume is a cell count:
    /// `|dOmega| * h / d`.
    pub grid_tolerance: f64,
}

pub fn isoperimetric_bound(domain: &DomainGrid) -> IsoperimetricBound {
    let d = domain.dim() as f64;
    let lhs = domain.volume().powf(1.0 - 1.0 / d) * unit_ball_volume(domain.dim()).powf(1.0 / d);
    let rhs = domain.boundary_length() / d;
    let grid_tolerance = domain.boundary_length() * domain.cell_size() / d;
    IsoperimetricBound {
        lhs,
        rhs,
        margin: rhs - lhs,
        grid_tolerance,
    }
}
