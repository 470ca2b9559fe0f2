use rand::Rng;

use crate::error::{Error, Result};
use crate::ot::measure::{dot, DiscreteMeasure, PointCloud};
use crate::ot::multiscale::candidate_arcs;
use crate::ot::network_simplex::{solve_transport, NegInnerProduct};
use crate::ot::plan::{PlanEntry, TransportPlan};

/// Relative tolerance on the equality of total masses.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance on `phi_i + psi_j >= x_i . y_j`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Samples of a convex potential on the source atoms (`phi`) and of its
/// Legendre transform on the target atoms (`psi`).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSamples {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl PotentialSamples {
    /// Largest violation of `phi_i + psi_j >= x_i . y_j` (0 when feasible).
    pub fn feasibility_violation(&self, alpha: &DiscreteMeasure, beta: &DiscreteMeasure) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, phi) in alpha.points().iter().zip(&self.phi) {
            for (y, psi) in beta.points().iter().zip(&self.psi) {
                worst = worst.max(dot(x, y) - phi - psi);
            }
        }
        worst
    }
}

/// Optimal coupling for the quadratic cost together with optimal duals.
#[derive(Debug, Clone)]
pub struct OtSolution<'a> {
    pub plan: TransportPlan<'a>,
    pub potentials: PotentialSamples,
    pub pivots: usize,
}

/// Exact discrete optimal transport: maximizes `sum gamma_ij x_i . y_j` over
/// all couplings of `alpha` and `beta` (equivalently minimizes the quadratic
/// cost) and returns duals satisfying complementary slackness.
pub fn solve_discrete_ot<'a>(alpha: &'a DiscreteMeasure, beta: &'a DiscreteMeasure) -> Result<OtSolution<'a>> {
    if alpha.dim() != beta.dim() {
        return Err(Error::DimensionMismatch(alpha.dim(), beta.dim()));
    }
    let (ma, mb) = (alpha.total_mass(), beta.total_mass());
    if (ma - mb).abs() > MASS_TOLERANCE * ma.max(mb) {
        return Err(Error::MassMismatch {
            source_mass: ma,
            target_mass: mb,
        });
    }
    // Rescale the target so both sides balance to the last bit.
    let demand: Vec<f64> = beta.weights().iter().map(|v| v * (ma / mb)).collect();
    let costs = NegInnerProduct::new(alpha.dim(), alpha.points().coords(), beta.points().coords());
    let candidates = candidate_arcs(alpha, beta)?;
    let sol = solve_transport(alpha.weights(), &demand, &costs, candidates.as_deref())?;

    let entries = sol
        .flows
        .iter()
        .map(|&(i, j, f)| PlanEntry {
            source: i,
            target: j,
            mass: f * (mb / ma),
        })
        .collect();
    let plan = TransportPlan::new_unchecked(alpha, beta, entries);

    // reduced costs: -x.y + p_i - s_j >= 0, so phi = p, psi = -s is feasible;
    // two c-transforms make both sides tight
    let phi = sol.source_pot;
    let psi = legendre_transform(alpha.points(), &phi, beta.points())?;
    let phi = legendre_transform(beta.points(), &psi, alpha.points())?;
    let psi = legendre_transform(alpha.points(), &phi, beta.points())?;
    let shift = 0.5 * (weighted_sum(alpha.weights(), &phi) - weighted_sum(beta.weights(), &psi)) / ma;
    let potentials = PotentialSamples {
        phi: phi.iter().map(|p| p - shift).collect(),
        psi: psi.iter().map(|p| p + shift).collect(),
    };

    let err = plan.marginal_error();
    if err > crate::ot::plan::MARGINAL_TOLERANCE {
        return Err(Error::SolverFailure(format!("marginals off by {err:e}")));
    }
    Ok(OtSolution {
        plan,
        potentials,
        pivots: sol.pivots,
    })
}

fn weighted_sum(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Discrete Legendre transform `max_i (x_i . y - phi_i)` at each query `y`.
pub fn legendre_transform(samples: &PointCloud, phi: &[f64], queries: &PointCloud) -> Result<Vec<f64>> {
    if samples.is_empty() || phi.is_empty() {
        return Err(Error::EmptySupport);
    }
    if samples.len() != phi.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sample points but {} potential values",
            samples.len(),
            phi.len()
        )));
    }
    if samples.dim() != queries.dim() {
        return Err(Error::DimensionMismatch(samples.dim(), queries.dim()));
    }
    Ok(queries
        .iter()
        .map(|y| {
            samples
                .iter()
                .zip(phi)
                .map(|(x, p)| dot(x, y) - p)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// `J = sum_i w_i phi_i + sum_j v_j psi_j` for dual-feasible potentials.
pub fn evaluate_j(pot: &PotentialSamples, alpha: &DiscreteMeasure, beta: &DiscreteMeasure) -> Result<f64> {
    if pot.phi.len() != alpha.len() || pot.psi.len() != beta.len() {
        return Err(Error::InvalidArgument("potential lengths do not match the measures".into()));
    }
    let violation = pot.feasibility_violation(alpha, beta);
    if violation > FEASIBILITY_TOLERANCE {
        return Err(Error::InfeasiblePotentials(violation));
    }
    Ok(weighted_sum(alpha.weights(), &pot.phi) + weighted_sum(beta.weights(), &pot.psi))
}

/// Outcome of sampling cycles on the support of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub sampled: usize,
    pub violations: usize,
    /// Largest amount by which a shifted pairing beat the support pairing.
    pub worst_excess: f64,
}

/// Samples `cycles` random cycles of length 2..=`max_len` through support
/// pairs `(x_i, y_j)` and checks
/// `sum_m x_m . y_m >= sum_m x_{m+1} . y_m - tol`.
pub fn check_cyclical_monotonicity<R: Rng>(
    plan: &TransportPlan<'_>,
    cycles: usize,
    max_len: usize,
    tol: f64,
    rng: &mut R,
) -> CycleReport {
    let support: Vec<(&[f64], &[f64])> = plan
        .entries()
        .iter()
        .filter(|e| e.mass > 0.0)
        .map(|e| (plan.source().point(e.source), plan.target().point(e.target)))
        .collect();
    let mut report = CycleReport {
        sampled: 0,
        violations: 0,
        worst_excess: 0.0,
    };
    if support.len() < 2 || max_len < 2 {
        return report;
    }
    let mut picks = Vec::with_capacity(max_len);
    for _ in 0..cycles {
        let k = rng.gen_range(2..=max_len.min(support.len()));
        picks.clear();
        while picks.len() < k {
            let s = rng.gen_range(0..support.len());
            if !picks.contains(&s) {
                picks.push(s);
            }
        }
        let on_support: f64 = picks.iter().map(|&s| dot(support[s].0, support[s].1)).sum();
        let shifted: f64 = (0..k)
            .map(|m| dot(support[picks[(m + 1) % k]].0, support[picks[m]].1))
            .sum();
        let excess = shifted - on_support;
        report.sampled += 1;
        if excess > tol {
            report.violations += 1;
        }
        report.worst_excess = report.worst_excess.max(excess);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::on_line(atoms).unwrap()
    }

    #[test]
    fn identity_case() {
        let a = line(&[(0.0, 1.0), (1.0, 1.0)]);
        let sol = solve_discrete_ot(&a, &a).unwrap();
        assert_eq!(sol.plan.to_dense(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn two_point_monotone_matching() {
        let a = line(&[(0.0, 0.5), (1.0, 0.5)]);
        let b = line(&[(2.0, 0.5), (3.0, 0.5)]);
        let sol = solve_discrete_ot(&a, &b).unwrap();
        assert_eq!(sol.plan.to_dense(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        let j = evaluate_j(&sol.potentials, &a, &b).unwrap();
        assert!((j - 1.5).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let a = line(&[(0.0, 1.0)]);
        let b = line(&[(0.0, 2.0)]);
        assert!(matches!(solve_discrete_ot(&a, &b), Err(Error::MassMismatch { .. })));
        let c = DiscreteMeasure::new(PointCloud::from_points(2, &[[0.0, 0.0]]).unwrap(), vec![1.0]).unwrap();
        assert!(matches!(solve_discrete_ot(&a, &c), Err(Error::DimensionMismatch(1, 2))));
    }

    #[test]
    fn legendre_examples() {
        let xs = PointCloud::line(&[-1.0, 0.0, 1.0]).unwrap();
        let q = PointCloud::line(&[2.0]).unwrap();
        assert_eq!(legendre_transform(&xs, &[0.0; 3], &q).unwrap(), vec![2.0]);
        let one = PointCloud::line(&[3.0]).unwrap();
        let q1 = PointCloud::line(&[1.0]).unwrap();
        assert_eq!(legendre_transform(&one, &[7.0], &q1).unwrap(), vec![-4.0]);
        let empty = PointCloud::new(1, vec![]).unwrap();
        assert_eq!(legendre_transform(&empty, &[], &q1), Err(Error::EmptySupport));
    }

    #[test]
    fn legendre_of_half_square_is_self_dual() {
        // grid spacing 1e-3 on [-1, 1]; the sup is attained within half a
        // spacing of y, so the error is at most spacing^2 / 8
        let n = 2001;
        let xs: Vec<f64> = (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect();
        let phi: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let samples = PointCloud::line(&xs).unwrap();
        let q = PointCloud::line(&[0.5]).unwrap();
        let v = legendre_transform(&samples, &phi, &q).unwrap()[0];
        assert!((v - 0.125).abs() <= 1e-6 / 8.0 + 1e-15);
    }

    #[test]
    fn identity_j_with_half_squares() {
        let a = line(&[(0.0, 1.0), (1.0, 1.0)]);
        let half: Vec<f64> = [0.0, 0.5].to_vec();
        let pot = PotentialSamples {
            phi: half.clone(),
            psi: half,
        };
        assert_eq!(evaluate_j(&pot, &a, &a).unwrap(), a.second_moment());
    }

    #[test]
    fn infeasible_potentials_rejected() {
        let a = line(&[(1.0, 1.0)]);
        let pot = PotentialSamples {
            phi: vec![0.0],
            psi: vec![0.0],
        };
        assert!(matches!(evaluate_j(&pot, &a, &a), Err(Error::InfeasiblePotentials(_))));
    }

    #[test]
    fn cycles_on_an_anti_monotone_plan_are_caught() {
        let a = line(&[(0.0, 1.0), (1.0, 1.0)]);
        let plan = TransportPlan::new(
            &a,
            &a,
            vec![
                PlanEntry {
                    source: 0,
                    target: 1,
                    mass: 1.0,
                },
                PlanEntry {
                    source: 1,
                    target: 0,
                    mass: 1.0,
                },
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = check_cyclical_monotonicity(&plan, 10, 2, 1e-12, &mut rng);
        assert_eq!(r.violations, 10);
        assert_eq!(r.worst_excess, 1.0);
    }
}
