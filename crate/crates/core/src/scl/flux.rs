use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Scalar flux function on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFlux {
    /// `F(u) = c u`.
    Linear(f64),
    /// `F(u) = u^2 / 2`.
    Burgers,
    /// `F(u) = c3 u^3 + c2 u^2 + c1 u`; concave-convex when the inflection
    /// point `-c2 / (3 c3)` lies inside `(0, 1)`.
    Cubic { c3: f64, c2: f64, c1: f64 },
}

impl ScalarFlux {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            ScalarFlux::Linear(c) => c * u,
            ScalarFlux::Burgers => 0.5 * u * u,
            ScalarFlux::Cubic { c3, c2, c1 } => ((c3 * u + c2) * u + c1) * u,
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            ScalarFlux::Linear(c) => c,
            ScalarFlux::Burgers => u,
            ScalarFlux::Cubic { c3, c2, c1 } => (3.0 * c3 * u + 2.0 * c2) * u + c1,
        }
    }

    /// Zeros of `F'` strictly inside `(lo, hi)`.
    fn critical_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let roots = match *self {
            ScalarFlux::Linear(_) => vec![],
            ScalarFlux::Burgers => vec![0.0],
            ScalarFlux::Cubic { c3, c2, c1 } => quadratic_roots(3.0 * c3, 2.0 * c2, c1),
        };
        roots.into_iter().filter(|&r| r > lo && r < hi).collect()
    }

    /// `min F` over `[lo, hi]`.
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        self.extremum(lo, hi, f64::min)
    }

    /// `max F` over `[lo, hi]`.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.extremum(lo, hi, f64::max)
    }

    fn extremum(&self, lo: f64, hi: f64, pick: fn(f64, f64) -> f64) -> f64 {
        let mut best = pick(self.value(lo), self.value(hi));
        for c in self.critical_points(lo, hi) {
            best = pick(best, self.value(c));
        }
        best
    }

    /// `max |F'|` over `[0, 1]`.
    pub fn lipschitz(&self) -> f64 {
        let mut pts = vec![0.0, 1.0];
        if let ScalarFlux::Cubic { c3, c2, .. } = *self {
            if c3 != 0.0 {
                pts.push((-c2 / (3.0 * c3)).clamp(0.0, 1.0));
            }
        }
        pts.iter().map(|&u| self.derivative(u).abs()).fold(0.0, f64::max)
    }

    /// Godunov numerical flux: exact min/max of `F` over the Riemann fan.
    pub fn godunov(&self, left: f64, right: f64) -> f64 {
        if left <= right {
            self.min_on(left, right)
        } else {
            self.max_on(right, left)
        }
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

impl fmt::Display for ScalarFlux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFlux::Linear(c) => write!(f, "linear {c}"),
            ScalarFlux::Burgers => write!(f, "burgers"),
            ScalarFlux::Cubic { c3, c2, c1 } => write!(f, "concave-convex {c3} {c2} {c1}"),
        }
    }
}

/// Parses `burgers`, `linear c` and `concave-convex c3 c2 c1`.
impl FromStr for ScalarFlux {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let name = words.next().ok_or_else(|| Error::Parse("empty flux".into()))?;
        let args: Vec<f64> = words
            .map(|w| w.parse::<f64>().map_err(|e| Error::Parse(format!("flux argument {w:?}: {e}"))))
            .collect::<Result<_>>()?;
        let flux = match (name, args.as_slice()) {
            ("burgers", []) => ScalarFlux::Burgers,
            ("linear", [c]) => ScalarFlux::Linear(*c),
            ("concave-convex", [c3, c2, c1]) => ScalarFlux::Cubic {
                c3: *c3,
                c2: *c2,
                c1: *c1,
            },
            _ => return Err(Error::Parse(format!("unrecognized flux {s:?}"))),
        };
        if args.iter().any(|a| !a.is_finite()) {
            return Err(Error::Parse(format!("non-finite flux coefficient in {s:?}")));
        }
        Ok(flux)
    }
}

/// Flux `F = (F_1, ..., F_D)` of `u_t + div F(u) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxLaw<const D: usize> {
    components: [ScalarFlux; D],
    lipschitz: f64,
}

impl<const D: usize> FluxLaw<D> {
    pub fn new(components: [ScalarFlux; D]) -> Self {
        let lipschitz = components.iter().map(|c| c.lipschitz()).fold(0.0, f64::max);
        Self { components, lipschitz }
    }

    /// The same scalar flux along every axis.
    pub fn isotropic(f: ScalarFlux) -> Self {
        Self::new([f; D])
    }

    pub fn component(&self, axis: usize) -> &ScalarFlux {
        &self.components[axis]
    }

    pub fn components(&self) -> &[ScalarFlux; D] {
        &self.components
    }

    /// `L` with `|F_k'| <= L` on `[0, 1]` for every axis.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    pub fn velocity(&self, a: f64) -> [f64; D] {
        std::array::from_fn(|k| self.components[k].derivative(a))
    }

    /// `F'(a_k)` at the level nodes `a_k = (k + 1/2) / n_a`.
    pub fn speeds(&self, n_a: usize) -> Vec<[f64; D]> {
        (0..n_a).map(|k| self.velocity((k as f64 + 0.5) / n_a as f64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_godunov_cases() {
        let f = ScalarFlux::Burgers;
        // shock, left state wins
        assert_eq!(f.godunov(1.0, 0.0), 0.5);
        // rarefaction straddling the sonic point 0 of F' = u: here min on [0,1] = 0
        assert_eq!(f.godunov(0.0, 1.0), 0.0);
        assert_eq!(f.godunov(0.3, 0.3), 0.045);
    }

    #[test]
    fn cubic_extrema_by_dense_search() {
        let f: ScalarFlux = "concave-convex 4 -6 3".parse().unwrap();
        let (lo, hi) = (0.1, 0.9);
        let samples: Vec<f64> = (0..=100_000).map(|k| f.value(lo + (hi - lo) * k as f64 / 1e5)).collect();
        let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((f.min_on(lo, hi) - min).abs() < 1e-9);
        assert!((f.max_on(lo, hi) - max).abs() < 1e-9);
    }

    #[test]
    fn lipschitz_bounds() {
        assert_eq!(ScalarFlux::Burgers.lipschitz(), 1.0);
        assert_eq!(ScalarFlux::Linear(-2.0).lipschitz(), 2.0);
        // F' = 12u^2 - 12u + 3 = 3 (2u - 1)^2: max 3 at the ends, 0 at 1/2
        assert_eq!("concave-convex 4 -6 3".parse::<ScalarFlux>().unwrap().lipschitz(), 3.0);
    }

    #[test]
    fn parsing() {
        for s in ["burgers", "linear 0.5", "concave-convex 1 -1.5 0"] {
            let f: ScalarFlux = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<ScalarFlux>().unwrap(), f);
        }
        assert!("linear".parse::<ScalarFlux>().is_err());
        assert!("kdv".parse::<ScalarFlux>().is_err());
    }

    #[test]
    fn law_speeds() {
        let law = FluxLaw::<2>::isotropic(ScalarFlux::Burgers);
        assert_eq!(law.speeds(2), vec![[0.25, 0.25], [0.75, 0.75]]);
        assert_eq!(law.lipschitz_bound(), 1.0);
    }
}
