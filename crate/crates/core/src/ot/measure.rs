use crate::error::{Error, Result};

/// Atoms closer than this are merged when a measure is built.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// A flat list of points in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coordinate {bad}")));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch(dim, p.len()));
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    /// Points on the real line.
    pub fn line(xs: &[f64]) -> Result<Self> {
        Self::new(1, xs.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Weighted point cloud standing for a density `alpha(x) dx` on R^d.
///
/// Weights are strictly positive and atoms are pairwise distinct: atoms
/// closer than [`MERGE_TOLERANCE`] are merged (masses added, first
/// occurrence kept) at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: PointCloud,
    weights: Vec<f64>,
    total_mass: f64,
    second_moment: f64,
}

impl DiscreteMeasure {
    pub fn new(points: PointCloud, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::EmptySupport);
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidMeasure(format!("weight {w} at atom {i} is not positive")));
            }
        }
        let (points, weights) = merge_duplicates(points, weights);
        let total_mass = weights.iter().sum();
        let second_moment = points
            .iter()
            .zip(&weights)
            .map(|(p, w)| w * norm_sq(p))
            .sum();
        Ok(Self {
            points,
            weights,
            total_mass,
            second_moment,
        })
    }

    /// Measure with one unit of mass split evenly over the given points.
    pub fn uniform(points: PointCloud) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// 1D convenience constructor from `(position, weight)` pairs.
    pub fn on_line(atoms: &[(f64, f64)]) -> Result<Self> {
        let xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let ws: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        Self::new(PointCloud::line(&xs)?, ws)
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.point(i)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `sum_i w_i |x_i|^2`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }
}

fn merge_duplicates(points: PointCloud, weights: Vec<f64>) -> (PointCloud, Vec<f64>) {
    let n = points.len();
    let dim = points.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points.point(a)[0].total_cmp(&points.point(b)[0]));

    // representative[i] = smallest index of the cluster containing i
    let mut representative: Vec<usize> = (0..n).collect();
    for (pos, &i) in order.iter().enumerate() {
        let xi = points.point(i);
        for &j in &order[pos + 1..] {
            let xj = points.point(j);
            if xj[0] - xi[0] > MERGE_TOLERANCE {
                break;
            }
            let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2.sqrt() <= MERGE_TOLERANCE {
                let (ri, rj) = (find(&mut representative, i), find(&mut representative, j));
                let (lo, hi) = (ri.min(rj), ri.max(rj));
                representative[hi] = lo;
            }
        }
    }

    let mut merged_weight = vec![0.0; n];
    for i in 0..n {
        let r = find(&mut representative, i);
        merged_weight[r] += weights[i];
    }
    if (0..n).all(|i| representative[i] == i) {
        return (points, weights);
    }
    let mut coords = Vec::with_capacity(points.coords().len());
    let mut out_weights = Vec::new();
    for i in 0..n {
        if find(&mut representative, i) == i {
            coords.extend_from_slice(points.point(i));
            out_weights.push(merged_weight[i]);
        }
    }
    let merged = PointCloud::new(dim, coords).expect("subset of a valid cloud");
    (merged, out_weights)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}
