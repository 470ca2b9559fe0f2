use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::euler::domain::{ConvexDomain, SpatialQuadrature};

/// Node lines outside the domain's bounding square on each side, so that the
/// cubic stencil of every point of the domain lies on the grid.
const PAD: usize = 2;

/// Time-dependent scalar field `q_t(x)` sampled on `n_t` equally spaced
/// levels of `[t0, t1]` times an `n x n` node grid covering the domain, and
/// read back by Keys cubic convolution in space and linearly in time.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    domain: ConvexDomain,
    t0: f64,
    t1: f64,
    n_t: usize,
    n: usize,
    lo: [f64; 2],
    h: f64,
    /// `values[(level * n + i) * n + j]` at `(lo[0] + i h, lo[1] + j h)`.
    values: Vec<f64>,
    zero_mean: bool,
}

impl PressureField {
    pub fn from_fn(
        domain: ConvexDomain,
        n: usize,
        t0: f64,
        t1: f64,
        n_t: usize,
        f: impl Fn(f64, [f64; 2]) -> f64,
    ) -> Result<Self> {
        if n < 2 * PAD + 4 {
            return Err(Error::InvalidArgument(format!("grid of {n} nodes per axis is too coarse")));
        }
        if n_t < 2 || !(t1 > t0) {
            return Err(Error::InvalidArgument(format!("need t1 > t0 and 2+ levels, got [{t0}, {t1}] x {n_t}")));
        }
        let (corner, side) = domain.bounding_square();
        let h = side / (n - 1 - 2 * PAD) as f64;
        let lo = [corner[0] - PAD as f64 * h, corner[1] - PAD as f64 * h];
        let mut values = Vec::with_capacity(n_t * n * n);
        for level in 0..n_t {
            let t = t0 + (t1 - t0) * level as f64 / (n_t - 1) as f64;
            for i in 0..n {
                for j in 0..n {
                    values.push(f(t, [lo[0] + i as f64 * h, lo[1] + j as f64 * h]));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field has non-finite values".into()));
        }
        Ok(Self {
            domain,
            t0,
            t1,
            n_t,
            n,
            lo,
            h,
            values,
            zero_mean: false,
        })
    }

    /// `q == 0`.
    pub fn zero(domain: ConvexDomain, n: usize, t0: f64, t1: f64, n_t: usize) -> Result<Self> {
        let mut q = Self::from_fn(domain, n, t0, t1, n_t, |_, _| 0.0)?;
        q.zero_mean = true;
        Ok(q)
    }

    pub fn domain(&self) -> ConvexDomain {
        self.domain
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn levels(&self) -> usize {
        self.n_t
    }

    pub fn level_time(&self, level: usize) -> f64 {
        self.t0 + (self.t1 - self.t0) * level as f64 / (self.n_t - 1) as f64
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.lo[0] + i as f64 * self.h, self.lo[1] + j as f64 * self.h]
    }

    pub fn node_value(&self, level: usize, i: usize, j: usize) -> f64 {
        self.values[(level * self.n + i) * self.n + j]
    }

    pub fn is_zero_mean(&self) -> bool {
        self.zero_mean
    }

    fn same_layout(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain
            || self.n != other.n
            || self.n_t != other.n_t
            || self.t0 != other.t0
            || self.t1 != other.t1
        {
            return Err(Error::GridMismatch(self.values.len(), other.values.len()));
        }
        Ok(())
    }

    /// `a self + b other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.same_layout(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self {
            values,
            zero_mean: self.zero_mean && other.zero_mean,
            ..self.clone()
        })
    }

    /// `int_D q_t` at every level, by `quad`.
    pub fn level_means(&self, quad: &SpatialQuadrature) -> Vec<f64> {
        let area = quad.total_weight();
        (0..self.n_t)
            .map(|level| quad.integrate(|x| self.level_value(level, x).0) / area)
            .collect()
    }

    /// Subtracts the `quad`-mean at every level. Adding a constant commutes
    /// with interpolation, so the interpolated field has mean zero too.
    pub fn normalized(&self, quad: &SpatialQuadrature) -> Self {
        let means = self.level_means(quad);
        let per_level = self.n * self.n;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v - means[k / per_level])
            .collect();
        Self {
            values,
            zero_mean: true,
            ..self.clone()
        }
    }

    /// Interpolated value and spatial gradient at one level.
    pub fn level_value(&self, level: usize, x: [f64; 2]) -> (f64, [f64; 2]) {
        let base = level * self.n * self.n;
        let (i0, wx, dwx) = self.stencil(x[0], self.lo[0]);
        let (j0, wy, dwy) = self.stencil(x[1], self.lo[1]);
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for a in 0..4 {
            let row = base + (i0 + a) * self.n + j0;
            let (mut s, mut sd) = (0.0, 0.0);
            for b in 0..4 {
                let q = self.values[row + b];
                s += wy[b] * q;
                sd += dwy[b] * q;
            }
            v += wx[a] * s;
            gx += dwx[a] * s;
            gy += wx[a] * sd;
        }
        (v, [gx / self.h, gy / self.h])
    }

    /// Value and spatial gradient at time `t`.
    pub fn value_and_gradient(&self, t: f64, x: [f64; 2]) -> (f64, [f64; 2]) {
        let s = ((t - self.t0) / (self.t1 - self.t0) * (self.n_t - 1) as f64).clamp(0.0, (self.n_t - 1) as f64);
        let level = (s.floor() as usize).min(self.n_t - 2);
        let theta = s - level as f64;
        if theta < 1e-12 {
            return self.level_value(level, x);
        }
        if theta > 1.0 - 1e-12 {
            return self.level_value(level + 1, x);
        }
        let (a, ga) = self.level_value(level, x);
        let (b, gb) = self.level_value(level + 1, x);
        let mix = |p: f64, q: f64| (1.0 - theta) * p + theta * q;
        (mix(a, b), [mix(ga[0], gb[0]), mix(ga[1], gb[1])])
    }

    pub fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        self.value_and_gradient(t, x).0
    }

    /// First node index of the 4-point stencil containing `x` and the kernel
    /// weights and their derivatives in grid units.
    fn stencil(&self, x: f64, lo: f64) -> (usize, [f64; 4], [f64; 4]) {
        let s = ((x - lo) / self.h).clamp(1.0, (self.n - 3) as f64);
        let i = (s.floor() as usize).min(self.n - 3);
        let f = s - i as f64;
        let mut w = [0.0; 4];
        let mut dw = [0.0; 4];
        for (k, off) in [-1.0, 0.0, 1.0, 2.0].iter().enumerate() {
            let d = f - off;
            w[k] = keys(d);
            dw[k] = keys_derivative(d);
        }
        (i - 1, w, dw)
    }
}

/// Keys cubic convolution kernel with `a = -1/2`; reproduces quadratics.
fn keys(s: f64) -> f64 {
    let t = s.abs();
    if t <= 1.0 {
        (1.5 * t - 2.5) * t * t + 1.0
    } else if t < 2.0 {
        ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    } else {
        0.0
    }
}

fn keys_derivative(s: f64) -> f64 {
    let t = s.abs();
    let d = if t <= 1.0 {
        (4.5 * t - 5.0) * t
    } else if t < 2.0 {
        (-1.5 * t + 5.0) * t - 4.0
    } else {
        0.0
    };
    d * s.signum()
}

/// Outcome of the test `(t1 - t0)^2 D^2 p <= pi^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Smallness {
    pub holds: bool,
    /// `pi^2 - (t1 - t0)^2 lambda_max`.
    pub margin: f64,
    /// Largest Hessian eigenvalue over all levels and nodes in the domain.
    pub lambda_max: f64,
}

/// Largest eigenvalue of the central-difference Hessian of `p` over every
/// time level and grid node of the domain.
pub fn smallness_check(p: &PressureField, t0: f64, t1: f64) -> Smallness {
    let n = p.n;
    let h2 = p.h * p.h;
    let mut lambda_max = f64::NEG_INFINITY;
    for level in 0..p.n_t {
        let v = |i: usize, j: usize| p.node_value(level, i, j);
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                if !p.domain.contains(p.node(i, j)) {
                    continue;
                }
                let c = v(i, j);
                let a = (v(i + 1, j) - 2.0 * c + v(i - 1, j)) / h2;
                let d = (v(i, j + 1) - 2.0 * c + v(i, j - 1)) / h2;
                let b = (v(i + 1, j + 1) - v(i + 1, j - 1) - v(i - 1, j + 1) + v(i - 1, j - 1)) / (4.0 * h2);
                let top = 0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b * b).sqrt();
                lambda_max = lambda_max.max(top);
            }
        }
    }
    let margin = PI * PI - (t1 - t0).powi(2) * lambda_max;
    Smallness {
        holds: margin >= 0.0,
        margin,
        lambda_max,
    }
}

/// Random smooth field `amplitude * c(t) * mean_j cos(k_j . x + phi_j)` with
/// small integer wave vectors and `c(t) = cos(m pi tau + psi)`, `tau` the
/// normalized time and `m` in `{0, 1}`; zero mean under `quad`.
pub fn random_perturbation(
    like: &PressureField,
    amplitude: f64,
    quad: &SpatialQuadrature,
    rng: &mut impl Rng,
) -> Result<PressureField> {
    let modes: Vec<([f64; 2], f64)> = (0..2)
        .map(|_| {
            let k = loop {
                let k = [rng.gen_range(-2..=2) as f64, rng.gen_range(-2..=2) as f64];
                if k != [0.0, 0.0] {
                    break k;
                }
            };
            (k, rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let m = rng.gen_range(0..=1) as f64;
    let psi = rng.gen_range(0.0..2.0 * PI);
    let (t0, t1) = like.interval();
    let delta = PressureField::from_fn(like.domain, like.n, t0, t1, like.n_t, |t, x| {
        let c = (m * PI * (t - t0) / (t1 - t0) + psi).cos();
        let s: f64 = modes.iter().map(|(k, phi)| (k[0] * x[0] + k[1] * x[1] + phi).cos()).sum();
        amplitude * c * s / modes.len() as f64
    })?;
    Ok(delta.normalized(quad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn quadratic(omega: f64) -> PressureField {
        PressureField::from_fn(ConvexDomain::Disk, 64, 0.0, 1.0, 3, |_, x| 0.5 * omega * omega * (x[0] * x[0] + x[1] * x[1]))
            .unwrap()
    }

    #[test]
    fn interpolation_reproduces_quadratics() {
        let p = PressureField::from_fn(ConvexDomain::Disk, 20, 0.0, 1.0, 2, |t, x| {
            1.0 + t + 0.3 * x[0] - x[1] + 2.0 * x[0] * x[1] + 0.7 * x[1] * x[1]
        })
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let t = rng.gen_range(0.0..1.0);
            let (v, g) = p.value_and_gradient(t, x);
            let exact = 1.0 + t + 0.3 * x[0] - x[1] + 2.0 * x[0] * x[1] + 0.7 * x[1] * x[1];
            assert!((v - exact).abs() < 1e-12);
            assert!((g[0] - (0.3 + 2.0 * x[1])).abs() < 1e-11);
            assert!((g[1] - (-1.0 + 2.0 * x[0] + 1.4 * x[1])).abs() < 1e-11);
        }
    }

    #[test]
    fn interpolation_hits_nodes() {
        let p = PressureField::from_fn(ConvexDomain::Square, 12, 0.0, 1.0, 2, |_, x| (3.0 * x[0]).sin() * x[1]).unwrap();
        for (i, j) in [(3, 4), (2, 2), (9, 5)] {
            let (v, _) = p.level_value(1, p.node(i, j));
            assert!((v - p.node_value(1, i, j)).abs() < 1e-14);
        }
    }

    #[test]
    fn smallness_of_rotation_pressure() {
        let s = smallness_check(&quadratic(1.0), 0.0, 1.0);
        assert!((s.lambda_max - 1.0).abs() < 1e-8);
        assert!((s.margin - (PI * PI - 1.0)).abs() < 1e-8);
        let zero = PressureField::zero(ConvexDomain::Disk, 16, 0.0, 1.0, 2).unwrap();
        let s = smallness_check(&zero, 0.0, 1.0);
        assert!(s.holds && s.margin == PI * PI);
        let long = smallness_check(&quadratic(1.0), 0.0, PI + 0.1);
        assert!(!long.holds && long.margin < 0.0);
    }

    #[test]
    fn normalization_zeroes_the_mean() {
        let quad = ConvexDomain::Disk.quadrature(10, 20).unwrap();
        let p = quadratic(1.0).normalized(&quad);
        assert!(p.is_zero_mean());
        assert!(p.level_means(&quad).iter().all(|m| m.abs() < 1e-12));
        // mean of |x|^2 / 2 over the disk is 1/4
        assert!((p.value(0.5, [0.0, 0.0]) + 0.25).abs() < 1e-12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let d = random_perturbation(&p, 0.1, &quad, &mut rng).unwrap();
        assert!(d.level_means(&quad).iter().all(|m| m.abs() < 1e-12));
        assert!(d.values.iter().all(|v| v.abs() <= 0.2 + 1e-12));
    }
}
