use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Planar convex container of the fluid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexDomain {
    /// Unit disk centered at the origin.
    Disk,
    /// Unit square `[0, 1]^2`.
    Square,
}

impl ConvexDomain {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        match self {
            ConvexDomain::Disk => x[0] * x[0] + x[1] * x[1] <= 1.0 + 1e-12,
            ConvexDomain::Square => x.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)),
        }
    }

    /// Nearest point of the domain.
    pub fn project(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            ConvexDomain::Disk => {
                let r = x[0].hypot(x[1]);
                if r > 1.0 {
                    [x[0] / r, x[1] / r]
                } else {
                    x
                }
            }
            ConvexDomain::Square => [x[0].clamp(0.0, 1.0), x[1].clamp(0.0, 1.0)],
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            ConvexDomain::Disk => PI,
            ConvexDomain::Square => 1.0,
        }
    }

    /// `(lower corner, side)` of the bounding square.
    pub fn bounding_square(&self) -> ([f64; 2], f64) {
        match self {
            ConvexDomain::Disk => ([-1.0, -1.0], 2.0),
            ConvexDomain::Square => ([0.0, 0.0], 1.0),
        }
    }

    /// Equal-weight product rule with `n1 * n2` nodes.
    ///
    /// Disk: `n1` rings at the midpoints of equal-area annuli times `n2`
    /// equally spaced angles. The angular rule is exact for trigonometric
    /// polynomials of degree below `n2` on every ring, so integrals are
    /// invariant (to that order) under rotating the nodes.
    /// Square: the `n1 x n2` midpoint grid.
    pub fn quadrature(&self, n1: usize, n2: usize) -> Result<SpatialQuadrature> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one node per direction".into()));
        }
        let w = self.area() / (n1 * n2) as f64;
        let mut points = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                points.push(match self {
                    ConvexDomain::Disk => {
                        let r = ((i as f64 + 0.5) / n1 as f64).sqrt();
                        let theta = 2.0 * PI * (j as f64 + 0.5) / n2 as f64;
                        [r * theta.cos(), r * theta.sin()]
                    }
                    ConvexDomain::Square => [(i as f64 + 0.5) / n1 as f64, (j as f64 + 0.5) / n2 as f64],
                });
            }
        }
        Ok(SpatialQuadrature {
            weights: vec![w; points.len()],
            points,
        })
    }
}

impl fmt::Display for ConvexDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvexDomain::Disk => "disk",
            ConvexDomain::Square => "box",
        })
    }
}

impl FromStr for ConvexDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(ConvexDomain::Disk),
            "box" | "square" => Ok(ConvexDomain::Square),
            _ => Err(Error::Parse(format!("unknown domain {s:?}"))),
        }
    }
}

/// Nodes and weights approximating `int_D f dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialQuadrature {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl SpatialQuadrature {
    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, w)| w * f(x)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn midpoints_stay_inside() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for domain in [ConvexDomain::Disk, ConvexDomain::Square] {
            let (lo, side) = domain.bounding_square();
            let mut checked = 0;
            while checked < 1000 {
                let a = [lo[0] + side * rng.gen::<f64>(), lo[1] + side * rng.gen::<f64>()];
                let b = [lo[0] + side * rng.gen::<f64>(), lo[1] + side * rng.gen::<f64>()];
                if domain.contains(a) && domain.contains(b) {
                    assert!(domain.contains([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]));
                    checked += 1;
                }
            }
        }
    }

    #[test]
    fn projection() {
        let d = ConvexDomain::Disk;
        assert_eq!(d.project([3.0, 4.0]), [0.6, 0.8]);
        assert_eq!(d.project([0.1, 0.2]), [0.1, 0.2]);
        assert_eq!(ConvexDomain::Square.project([-1.0, 0.5]), [0.0, 0.5]);
    }

    #[test]
    fn disk_quadrature_moments() {
        let q = ConvexDomain::Disk.quadrature(10, 20).unwrap();
        assert_eq!(q.points.len(), 200);
        assert!((q.total_weight() - PI).abs() < 1e-13);
        assert!(q.points.iter().all(|&x| ConvexDomain::Disk.contains(x)));
        // int |x|^2 = pi / 2: the midpoint rule in r^2 is exact for it
        assert!((q.integrate(|x| x[0] * x[0] + x[1] * x[1]) - PI / 2.0).abs() < 1e-13);
        assert!(q.integrate(|x| (3.0 * x[0] - x[1]).cos() * x[1]).abs() < 1e-13);
        // rotating the nodes leaves the rule unchanged on low angular modes
        let f = |x: [f64; 2]| (1.3 * x[0] + 0.4 * x[1]).cos() + x[0].powi(3);
        let rotated = q.integrate(|x| f([x[0] * 0.3f64.cos() - x[1] * 0.3f64.sin(), x[0] * 0.3f64.sin() + x[1] * 0.3f64.cos()]));
        assert!((rotated - q.integrate(f)).abs() < 1e-13);
    }
}
