use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::euler::domain::{ConvexDomain, SpatialQuadrature};
use crate::euler::field::{smallness_check, PressureField, Smallness};
use crate::euler::path::{path_action_min_with, PathOptions};

/// Samples `(g_{t0}(x_s), g_{t1}(x_s))` of a volume-preserving flow, with
/// quadrature weights for `int_D dx`. The start points double as the
/// spatial quadrature nodes of the `int int q` term.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEndpoints {
    pub sources: Vec<[f64; 2]>,
    pub targets: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl ParticleEndpoints {
    pub fn new(domain: ConvexDomain, sources: Vec<[f64; 2]>, targets: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self> {
        if sources.len() != targets.len() || sources.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} sources, {} targets, {} weights",
                sources.len(),
                targets.len(),
                weights.len()
            )));
        }
        if let Some(p) = sources.iter().chain(&targets).find(|&&p| !domain.contains(p)) {
            return Err(Error::InvalidArgument(format!("endpoint {p:?} outside the {domain}")));
        }
        Ok(Self {
            sources,
            targets,
            weights,
        })
    }

    /// Identity pairs on the nodes of `quad`.
    pub fn identity(quad: &SpatialQuadrature) -> Self {
        Self {
            sources: quad.points.clone(),
            targets: quad.points.clone(),
            weights: quad.weights.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn quadrature(&self) -> SpatialQuadrature {
        SpatialQuadrature {
            points: self.sources.clone(),
            weights: self.weights.clone(),
        }
    }
}

/// Evaluates `q -> int int q dt dx + sum_s w_s J_q[x_s, y_s]`, optionally
/// warm-starting every path search from the minimizers of an earlier field.
#[derive(Debug, Clone)]
pub struct Functional<'a> {
    endpoints: &'a ParticleEndpoints,
    opts: PathOptions,
    warm: Option<Vec<Vec<[f64; 2]>>>,
}

impl<'a> Functional<'a> {
    pub fn new(endpoints: &'a ParticleEndpoints, opts: PathOptions) -> Self {
        Self {
            endpoints,
            opts,
            warm: None,
        }
    }

    pub fn options(&self) -> &PathOptions {
        &self.opts
    }

    pub fn value(&self, q: &PressureField) -> Result<f64> {
        self.evaluate(q, &self.opts).map(|(v, _)| v)
    }

    /// Evaluates `q` and keeps its minimizing paths as warm starts; later
    /// calls then skip the dynamic-programming seed.
    pub fn value_and_remember(&mut self, q: &PressureField) -> Result<f64> {
        let (v, paths) = self.evaluate(q, &self.opts)?;
        self.warm = Some(paths);
        Ok(v)
    }

    fn evaluate(&self, q: &PressureField, opts: &PathOptions) -> Result<(f64, Vec<Vec<[f64; 2]>>)> {
        let e = self.endpoints;
        let opts = match &self.warm {
            Some(_) => PathOptions {
                dp_lattice: None,
                ..*opts
            },
            None => *opts,
        };
        let paths: Vec<_> = (0..e.len())
            .into_par_iter()
            .map(|s| {
                let warm = self.warm.as_ref().map(|w| w[s].as_slice());
                path_action_min_with(q, e.sources[s], e.targets[s], &opts, warm)
            })
            .collect::<Result<_>>()?;
        let action: f64 = paths.iter().zip(&e.weights).map(|(p, w)| w * p.value).sum();
        let value = space_time_integral(q, &e.quadrature()) + action;
        Ok((value, paths.into_iter().map(|p| p.nodes).collect()))
    }
}

/// `int_{t0}^{t1} int_D q`, trapezoid over the field's time levels.
fn space_time_integral(q: &PressureField, quad: &SpatialQuadrature) -> f64 {
    let (t0, t1) = q.interval();
    let n = q.levels();
    let dt = (t1 - t0) / (n - 1) as f64;
    (0..n)
        .map(|level| {
            let c = if level == 0 || level == n - 1 { 0.5 } else { 1.0 };
            c * dt * quad.integrate(|x| q.level_value(level, x).0)
        })
        .sum()
}

/// The functional at `q` with default path options.
pub fn functional_value(q: &PressureField, endpoints: &ParticleEndpoints) -> Result<f64> {
    Functional::new(endpoints, PathOptions::default()).value(q)
}

/// Rigid rotation `g_t(x) = R(omega (t - t0)) x` of the unit disk,
/// tracked at the nodes of a quadrature rule.
#[derive(Debug, Clone)]
pub struct RotationFlow {
    pub omega: f64,
    pub t0: f64,
    pub t1: f64,
    pub labels: SpatialQuadrature,
}

impl RotationFlow {
    pub fn position(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let (s, c) = (self.omega * (t - self.t0)).sin_cos();
        [c * x[0] - s * x[1], s * x[0] + c * x[1]]
    }

    pub fn endpoints(&self) -> ParticleEndpoints {
        ParticleEndpoints {
            sources: self.labels.points.clone(),
            targets: self.labels.points.iter().map(|&x| self.position(x, self.t1)).collect(),
            weights: self.labels.weights.clone(),
        }
    }

    /// `max |(g(t + dt) - 2 g(t) + g(t - dt)) / dt^2 + grad p_t(g(t))|` over
    /// labels and the interior of `steps` equal time steps.
    pub fn euler_residual(&self, p: &PressureField, steps: usize) -> f64 {
        let dt = (self.t1 - self.t0) / steps as f64;
        let mut worst: f64 = 0.0;
        for &x in &self.labels.points {
            for k in 1..steps {
                let t = self.t0 + k as f64 * dt;
                let (a, b, c) = (self.position(x, t - dt), self.position(x, t), self.position(x, t + dt));
                let (_, grad) = p.value_and_gradient(t, b);
                let r0 = (a[0] - 2.0 * b[0] + c[0]) / (dt * dt) + grad[0];
                let r1 = (a[1] - 2.0 * b[1] + c[1]) / (dt * dt) + grad[1];
                worst = worst.max(r0.hypot(r1));
            }
        }
        worst
    }

    /// Kinetic action `int int |dg/dt|^2 / 2 = pi omega^2 (t1 - t0) / 4`,
    /// which equals the functional at the true pressure.
    pub fn kinetic_action(&self) -> f64 {
        std::f64::consts::PI * self.omega * self.omega * (self.t1 - self.t0) / 4.0
    }
}

/// Resolution of [`rigid_rotation_solution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSetup {
    /// Pressure grid nodes per axis.
    pub grid: usize,
    /// Pressure time levels.
    pub levels: usize,
    pub rings: usize,
    pub angles: usize,
}

impl Default for RotationSetup {
    fn default() -> Self {
        Self {
            grid: 64,
            levels: 33,
            rings: 10,
            angles: 20,
        }
    }
}

/// Rigid rotation of the unit disk and its pressure
/// `p = omega^2 |x|^2 / 2 - omega^2 / 4` (zero mean).
pub fn rigid_rotation_solution(omega: f64, t0: f64, t1: f64, setup: RotationSetup) -> Result<(RotationFlow, PressureField)> {
    if !omega.is_finite() {
        return Err(Error::InvalidArgument(format!("angular speed {omega}")));
    }
    let labels = ConvexDomain::Disk.quadrature(setup.rings, setup.angles)?;
    let w2 = omega * omega;
    let p = PressureField::from_fn(ConvexDomain::Disk, setup.grid, t0, t1, setup.levels, |_, x| {
        0.5 * w2 * (x[0] * x[0] + x[1] * x[1])
    })?
    .normalized(&labels);
    Ok((RotationFlow { omega, t0, t1, labels }, p))
}

/// Result of comparing the functional at `p` with its values at `p + delta`.
#[derive(Debug, Clone, Serialize)]
pub struct MaximizerReport {
    /// `min_delta (Phi(p) - Phi(p + delta))`; 0 without perturbations.
    pub margin: f64,
    pub base_value: f64,
    pub perturbed_values: Vec<f64>,
    /// `|Phi(p)|` change when the number of path segments doubles.
    pub eps_disc: f64,
    pub smallness: Smallness,
}

/// Checks that `p` maximizes the functional against `perturbations`.
/// Requires the smallness condition on `p`.
pub fn maximizer_margin(
    p: &PressureField,
    perturbations: &[PressureField],
    endpoints: &ParticleEndpoints,
    opts: PathOptions,
) -> Result<MaximizerReport> {
    let (t0, t1) = p.interval();
    let smallness = smallness_check(p, t0, t1);
    if !smallness.holds {
        return Err(Error::SmallnessViolated {
            margin: smallness.margin,
        });
    }
    let mut functional = Functional::new(endpoints, opts);
    let base_value = functional.value_and_remember(p)?;
    let fine = PathOptions {
        n_seg: 2 * opts.n_seg,
        ..opts
    };
    let eps_disc = (Functional::new(endpoints, fine).value(p)? - base_value).abs();
    let perturbed_values = perturbations
        .iter()
        .map(|d| functional.value(&p.combine(1.0, d, 1.0)?))
        .collect::<Result<Vec<_>>>()?;
    let margin = perturbed_values.iter().map(|v| base_value - v).fold(f64::INFINITY, f64::min);
    Ok(MaximizerReport {
        margin: if perturbed_values.is_empty() { 0.0 } else { margin },
        base_value,
        perturbed_values,
        eps_disc,
        smallness,
    })
}

/// Largest `(Phi(a) + Phi(b)) / 2 - Phi((a + b) / 2)` over `pairs` random
/// pairs of distinct `fields`, whose values are `values`. Concavity makes
/// it nonpositive up to discretization error.
pub fn midpoint_concavity_defect(
    functional: &Functional<'_>,
    fields: &[PressureField],
    values: &[f64],
    pairs: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64> {
    if fields.len() != values.len() || fields.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{} fields with {} values; need at least two",
            fields.len(),
            values.len()
        )));
    }
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let i = rng.gen_range(0..fields.len());
        let j = (i + rng.gen_range(1..fields.len())) % fields.len();
        let mid = fields[i].combine(0.5, &fields[j], 0.5)?;
        worst = worst.max(0.5 * (values[i] + values[j]) - functional.value(&mid)?);
    }
    Ok(worst)
}
