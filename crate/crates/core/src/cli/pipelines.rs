use std::fs::File;
use std::io::Write;

use rand::Rng;
use serde_json::json;

use crate::born_infeld::{conservation_drift, manifold_residual, AbiSolver, Profile};
use crate::cli::config::{key, optional, ConfigError, Key, Params};
use crate::cli::{Failure, Run, Subcommand};
use crate::error::{Error, Result};
use crate::euler::{
    maximizer_margin, midpoint_concavity_defect, random_perturbation, rigid_rotation_solution, smallness_check,
    Functional, PathOptions, RotationSetup,
};
use crate::isoperimetry::{gromov_chain_check, isoperimetric_bound, DomainGrid, Shape};
use crate::ot::{
    check_cyclical_monotonicity, evaluate_j, io as ot_io, solve_discrete_ot, DiscreteMeasure, PointCloud,
};
use crate::scl::{
    evolve_with, godunov_solve, io as scl_io, l1_distance, CellAverages, FluxLaw, LiftedScheme, ScalarFlux, Torus,
};

const OT_KEYS: &[Key] = &[
    key("pipeline", "solve"),
    key("seed", "0"),
    optional("source"),
    optional("target"),
    key("atoms", "64"),
    key("dim", "2"),
    key("cycles", "1000"),
    key("max_cycle_len", "4"),
];

const ISO_KEYS: &[Key] = &[key("pipeline", "chain"), key("seed", "0"), key("shape", "square"), key("resolution", "32")];

const SCL_KEYS: &[Key] = &[
    key("pipeline", "evolve"),
    key("seed", "0"),
    key("dim", "1"),
    key("flux", "burgers"),
    key("initial", "riemann 1 0"),
    key("origin", "-0.5"),
    key("cells", "400"),
    key("n_a", "64"),
    key("t_end", "0.4"),
    key("scheme", "band-relift"),
    key("courant", "1"),
    key("refinements", "3"),
];

const EULER_KEYS: &[Key] = &[
    key("pipeline", "maximizer"),
    key("seed", "0"),
    key("omega", "1"),
    key("t0", "0"),
    key("t1", "1"),
    key("grid", "64"),
    key("levels", "33"),
    key("rings", "10"),
    key("angles", "20"),
    key("n_seg", "32"),
    key("perturbations", "20"),
    key("amplitude", "0.1"),
    key("concavity_pairs", "50"),
];

const ABI_KEYS: &[Key] = &[
    key("pipeline", "manifold-drift"),
    key("seed", "0"),
    key("profile", "manifold-sine 0.1 1"),
    key("cells", "200"),
    optional("t_end"),
    optional("steps"),
    key("cfl", "0.5"),
    key("monitor_every", "50"),
    key("snapshot_every", "0"),
];

pub(crate) fn schema(sub: Subcommand) -> &'static [Key] {
    match sub {
        Subcommand::Ot => OT_KEYS,
        Subcommand::Iso => ISO_KEYS,
        Subcommand::Scl => SCL_KEYS,
        Subcommand::Euler => EULER_KEYS,
        Subcommand::Abi => ABI_KEYS,
    }
}

pub(crate) fn dispatch(sub: Subcommand, p: &Params, run: &mut Run) -> std::result::Result<(), Failure> {
    let pipeline = p.raw("pipeline").unwrap_or_default();
    match (sub, pipeline) {
        (Subcommand::Ot, "solve") => ot_solve(p, run),
        (Subcommand::Iso, "chain") => iso_chain(p, run),
        (Subcommand::Scl, "evolve") => scl_dim(p, run, false),
        (Subcommand::Scl, "compare") => scl_dim(p, run, true),
        (Subcommand::Euler, "maximizer") => euler_maximizer(p, run),
        (Subcommand::Abi, "manifold-drift") => abi_manifold_drift(p, run),
        _ => Err(ConfigError(format!("unknown pipeline {pipeline:?} for {}", sub.name())).into()),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn ot_measure(run: &Run, path: &str) -> Result<DiscreteMeasure> {
    let path = run.input_path(path);
    let file = File::open(&path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    ot_io::read_measure(file)
}

fn random_measure(rng: &mut impl Rng, atoms: usize, dim: usize, lo: f64, hi: f64) -> Result<DiscreteMeasure> {
    let coords: Vec<f64> = (0..atoms * dim).map(|_| rng.gen_range(lo..hi)).collect();
    let weights: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    DiscreteMeasure::new(PointCloud::new(dim, coords)?, weights.iter().map(|w| w / total).collect())
}

fn ot_solve(p: &Params, run: &mut Run) -> std::result::Result<(), Failure> {
    let (alpha, beta) = match (p.raw("source"), p.raw("target")) {
        (Some(s), Some(t)) => (ot_measure(run, s)?, ot_measure(run, t)?),
        (None, None) => {
            let (atoms, dim) = (p.get::<usize>("atoms")?, p.get::<usize>("dim")?);
            let a = random_measure(&mut run.rng(1), atoms, dim, 0.0, 1.0)?;
            let b = random_measure(&mut run.rng(2), atoms, dim, -1.0, 1.0)?;
            run.write("source.csv", |w| ot_io::write_measure(&a, w))?;
            run.write("target.csv", |w| ot_io::write_measure(&b, w))?;
            (a, b)
        }
        _ => return Err(ConfigError("give both source and target, or neither".into()).into()),
    };
    let sol = solve_discrete_ot(&alpha, &beta)?;
    run.write("plan.csv", |w| ot_io::write_plan(&sol.plan, w))?;
    run.write("potentials.csv", |w| ot_io::write_potentials(&sol.potentials, w))?;

    let value = sol.plan.inner_product_value();
    let j = evaluate_j(&sol.potentials, &alpha, &beta)?;
    let gap_tol = run.tolerance("duality_gap", 1e-8);
    let cycle_tol = run.tolerance("cycle_excess", 1e-10);
    let marginal_tol = run.tolerance("marginal_error", crate::ot::MARGINAL_TOLERANCE);
    run.tolerance("dual_feasibility", crate::ot::FEASIBILITY_TOLERANCE);
    let cycles = check_cyclical_monotonicity(
        &sol.plan,
        p.get("cycles")?,
        p.get("max_cycle_len")?,
        cycle_tol,
        &mut run.rng(3),
    );
    run.result("quadratic_cost", sol.plan.quadratic_cost());
    run.result("plan_value", value);
    run.result("j_value", j);
    run.result("duality_gap", j - value);
    run.result("marginal_error", sol.plan.marginal_error());
    run.result("pivots", sol.pivots);
    run.result(
        "cycles",
        json!({"sampled": cycles.sampled, "violations": cycles.violations, "worst_excess": cycles.worst_excess}),
    );
    run.check("duality_gap", (j - value).abs() <= gap_tol, format!("J - plan value = {:e}", j - value));
    run.check(
        "cyclical_monotonicity",
        cycles.violations == 0,
        format!("{} of {} cycles violate", cycles.violations, cycles.sampled),
    );
    let me = sol.plan.marginal_error();
    run.check("marginals", me <= marginal_tol, format!("marginal error {me:e}"));
    Ok(())
}

fn iso_chain(p: &Params, run: &mut Run) -> std::result::Result<(), Failure> {
    let shape: Shape = p.get("shape")?;
    let grid = DomainGrid::new(shape, p.get("resolution")?)?;
    let bound = isoperimetric_bound(&grid);
    let chain = gromov_chain_check(&grid)?;
    run.tolerance("grid_tolerance", bound.grid_tolerance);
    run.tolerance("chain_tolerance", chain.tolerance);
    run.tolerance("symmetry_tolerance", chain.symmetry_tolerance);
    run.write("chain.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Parse(e.to_string());
        out.write_record(["link", "value"]).map_err(err)?;
        for (name, v) in [
            ("boundary_length", chain.boundary_length),
            ("divergence_integral", chain.divergence_integral),
            ("determinant_integral", chain.determinant_integral),
            ("lower_bound", chain.lower_bound),
        ] {
            out.write_record([name.to_string(), fmt(v)]).map_err(err)?;
        }
        out.flush().map_err(|e| Error::Parse(e.to_string()))
    })?;
    run.check(
        "isoperimetric_bound",
        bound.margin >= -bound.grid_tolerance,
        format!("margin {:e} below -{:e}", bound.margin, bound.grid_tolerance),
    );
    run.check("chain", chain.chain_holds, format!("gap {:e}", chain.gap));
    run.result("lhs", bound.lhs);
    run.result("rhs", bound.rhs);
    run.result("margin", bound.margin);
    run.result("chain", &chain);
    Ok(())
}

/// Initial data of the `scl` pipelines, on the torus `[origin, origin + 1)^D`.
#[derive(Debug, Clone, PartialEq)]
enum SclInitial {
    /// `left` where the first coordinate is below the center, else `right`.
    Riemann(f64, f64),
    /// `mean + amplitude * prod_i sin(2 pi (x_i - origin))`.
    Sine(f64, f64),
    /// `inside` on the centered box of half-width 1/4, else `outside`.
    Box(f64, f64),
    /// Cell averages from a CSV grid dump (`x,u` or `x,y,u` rows).
    Csv(std::path::PathBuf),
}

impl std::str::FromStr for SclInitial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let nums = |w: &[&str]| -> Result<Vec<f64>> {
            w.iter()
                .map(|x| x.parse::<f64>().map_err(|e| Error::Parse(format!("{x:?}: {e}"))))
                .collect()
        };
        match words.split_first() {
            Some((&"csv", [path])) => Ok(SclInitial::Csv(path.into())),
            Some((&name, rest)) if rest.len() == 2 => {
                let v = nums(rest)?;
                match name {
                    "riemann" => Ok(SclInitial::Riemann(v[0], v[1])),
                    "sine" => Ok(SclInitial::Sine(v[0], v[1])),
                    "box" => Ok(SclInitial::Box(v[0], v[1])),
                    _ => Err(Error::Parse(format!("unknown initial data {s:?}"))),
                }
            }
            _ => Err(Error::Parse(format!("initial data {s:?}: expected <riemann|sine|box> a b or csv PATH"))),
        }
    }
}

impl SclInitial {
    fn sample<const D: usize>(&self, grid: Torus<D>) -> Result<CellAverages<D>> {
        if let SclInitial::Csv(path) = self {
            let file = File::open(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
            return scl_io::read_cell_averages(grid, file);
        }
        let center = grid.origin + 0.5 * grid.length;
        CellAverages::from_fn(grid, |x| match *self {
            SclInitial::Riemann(l, r) => {
                if x[0] < center {
                    l
                } else {
                    r
                }
            }
            SclInitial::Sine(mean, amp) => {
                mean + amp
                    * x.iter()
                        .map(|&xi| (2.0 * std::f64::consts::PI * (xi - grid.origin) / grid.length).sin())
                        .product::<f64>()
            }
            SclInitial::Box(inside, outside) => {
                if x.iter().all(|&xi| (xi - center).abs() < 0.25 * grid.length) {
                    inside
                } else {
                    outside
                }
            }
            SclInitial::Csv(_) => unreachable!(),
        })
    }
}

fn scl_dim(p: &Params, run: &mut Run, compare: bool) -> std::result::Result<(), Failure> {
    match p.get::<usize>("dim")? {
        1 => scl::<1>(p, run, compare),
        2 => scl::<2>(p, run, compare),
        d => Err(ConfigError(format!("dim = {d}: the scl pipelines support 1 or 2")).into()),
    }
}

struct SclRun<const D: usize> {
    lifted: CellAverages<D>,
    godunov: CellAverages<D>,
    dt: f64,
    steps: usize,
}

fn scl_solve<const D: usize>(
    initial: &SclInitial,
    flux: &FluxLaw<D>,
    grid: Torus<D>,
    n_a: usize,
    t_end: f64,
    courant: f64,
    scheme: LiftedScheme,
) -> Result<(CellAverages<D>, SclRun<D>)> {
    let u0 = initial.sample(grid)?;
    let l = flux.lipschitz_bound();
    let dt = if l > 0.0 { courant * grid.cell_width() / l } else { t_end };
    let mut steps = 0;
    let lifted = evolve_with(&u0, flux, t_end, dt, n_a, scheme, |_, _| steps += 1)?;
    let godunov = godunov_solve(&u0, flux, t_end)?;
    Ok((
        u0,
        SclRun {
            lifted,
            godunov,
            dt,
            steps,
        },
    ))
}

fn scl<const D: usize>(p: &Params, run: &mut Run, compare: bool) -> std::result::Result<(), Failure> {
    let flux = FluxLaw::<D>::isotropic(p.get::<ScalarFlux>("flux")?);
    let initial = match p.get("initial")? {
        SclInitial::Csv(path) if compare => {
            return Err(ConfigError(format!("initial = csv {}: compare refines the grid, which a CSV dump fixes", path.display())).into())
        }
        SclInitial::Csv(path) => SclInitial::Csv(run.input_path(&path.to_string_lossy())),
        other => other,
    };
    let scheme: LiftedScheme = p.get("scheme")?;
    let (origin, cells, n_a) = (p.get::<f64>("origin")?, p.get::<usize>("cells")?, p.get::<usize>("n_a")?);
    let (t_end, courant) = (p.get::<f64>("t_end")?, p.get::<f64>("courant")?);
    if !(t_end > 0.0) || !(courant > 0.0) {
        return Err(ConfigError("t_end and courant must be positive".into()).into());
    }
    run.result("scheme", scheme.name());
    if compare {
        let refinements = p.get::<usize>("refinements")?;
        let mut rows = Vec::new();
        for r in 0..refinements {
            let (n, na) = (cells << r, n_a << r);
            let (_, s) = scl_solve(&initial, &flux, Torus::<D>::new(n, origin, 1.0)?, na, t_end, courant, scheme)?;
            rows.push((n, na, s.dt, l1_distance(&s.lifted, &s.godunov)?));
        }
        run.write("compare.csv", |w| {
            let mut out = csv::Writer::from_writer(w);
            let err = |e: csv::Error| Error::Parse(e.to_string());
            out.write_record(["cells", "n_a", "dt", "l1_gap", "ratio"]).map_err(err)?;
            for (k, &(n, na, dt, gap)) in rows.iter().enumerate() {
                let ratio = if k == 0 { String::new() } else { fmt(gap / rows[k - 1].3) };
                out.write_record([n.to_string(), na.to_string(), fmt(dt), fmt(gap), ratio]).map_err(err)?;
            }
            out.flush().map_err(|e| Error::Parse(e.to_string()))
        })?;
        run.result(
            "l1_gaps",
            rows.iter().map(|r| json!({"cells": r.0, "n_a": r.1, "l1_gap": r.3})).collect::<Vec<_>>(),
        );
        return Ok(());
    }
    let grid = Torus::<D>::new(cells, origin, 1.0)?;
    let (u0, s) = scl_solve(&initial, &flux, grid, n_a, t_end, courant, scheme)?;
    run.write("initial.csv", |w| scl_io::write_cell_averages(&u0, w))?;
    run.write("lifted.csv", |w| scl_io::write_cell_averages(&s.lifted, w))?;
    run.write("godunov.csv", |w| scl_io::write_cell_averages(&s.godunov, w))?;
    let mass_tol = run.tolerance("mass_conservation", 1e-10);
    let range_tol = run.tolerance("maximum_principle", 1e-12);
    let drift = (s.lifted.mass() - u0.mass()).abs() / u0.mass().abs().max(f64::MIN_POSITIVE);
    run.result("dt", s.dt);
    run.result("steps", s.steps);
    run.result("mass_drift", drift);
    run.result("l1_gap_to_godunov", l1_distance(&s.lifted, &s.godunov)?);
    run.result("min", s.lifted.min());
    run.result("max", s.lifted.max());
    run.check("mass_conservation", drift <= mass_tol, format!("relative mass drift {drift:e}"));
    run.check(
        "maximum_principle",
        s.lifted.min() >= u0.min() - range_tol && s.lifted.max() <= u0.max() + range_tol,
        format!("range [{}, {}] leaves [{}, {}]", s.lifted.min(), s.lifted.max(), u0.min(), u0.max()),
    );
    Ok(())
}

fn euler_maximizer(p: &Params, run: &mut Run) -> std::result::Result<(), Failure> {
    let (omega, t0, t1) = (p.get::<f64>("omega")?, p.get::<f64>("t0")?, p.get::<f64>("t1")?);
    if !(t1 > t0) {
        return Err(ConfigError(format!("t1 = {t1} must exceed t0 = {t0}")).into());
    }
    let setup = RotationSetup {
        grid: p.get("grid")?,
        levels: p.get("levels")?,
        rings: p.get("rings")?,
        angles: p.get("angles")?,
    };
    let opts = PathOptions {
        n_seg: p.get("n_seg")?,
        ..PathOptions::default()
    };
    run.tolerance("path_gradient", opts.tolerance);
    let margin_tol = run.tolerance("maximizer_margin", 1e-3);
    let disc_tol = run.tolerance("eps_disc", 1e-3);
    let (flow, pressure) = rigid_rotation_solution(omega, t0, t1, setup)?;
    run.result("kinetic_action", flow.kinetic_action());
    run.result("euler_residual", flow.euler_residual(&pressure, 100));
    let smallness = smallness_check(&pressure, t0, t1);
    run.result("smallness", smallness);
    if !smallness.holds {
        run.diagnostics.push(format!(
            "maximizer test skipped: smallness margin {} < 0 (interval too long for omega = {omega})",
            smallness.margin
        ));
        return Err(Failure::Invariant("smallness", Error::SmallnessViolated { margin: smallness.margin }));
    }
    let endpoints = flow.endpoints();
    let mut rng = run.rng(1);
    let amplitude: f64 = p.get("amplitude")?;
    let deltas = (0..p.get::<usize>("perturbations")?)
        .map(|_| random_perturbation(&pressure, amplitude, &flow.labels, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let report = maximizer_margin(&pressure, &deltas, &endpoints, opts)?;
    run.write("perturbations.csv", |w| {
        writeln!(w, "index,value,gap").map_err(|e| Error::Parse(e.to_string()))?;
        for (k, v) in report.perturbed_values.iter().enumerate() {
            writeln!(w, "{k},{},{}", fmt(*v), fmt(report.base_value - v)).map_err(|e| Error::Parse(e.to_string()))?;
        }
        Ok(())
    })?;
    let pairs: usize = p.get("concavity_pairs")?;
    if pairs > 0 {
        let mut functional = Functional::new(&endpoints, opts);
        functional.value_and_remember(&pressure)?;
        let fields = std::iter::once(Ok(pressure.clone()))
            .chain(deltas.iter().map(|d| pressure.combine(1.0, d, 1.0)))
            .collect::<Result<Vec<_>>>()?;
        let mut values = vec![report.base_value];
        values.extend(&report.perturbed_values);
        let defect = midpoint_concavity_defect(&functional, &fields, &values, pairs, &mut run.rng(2))?;
        run.result("concavity_defect", defect);
        run.check(
            "concavity",
            defect <= report.eps_disc,
            format!("midpoint defect {defect:e} exceeds eps_disc {:e}", report.eps_disc),
        );
    }
    run.check(
        "maximizer",
        report.margin >= -margin_tol,
        format!("margin {:e} below -{margin_tol:e}", report.margin),
    );
    run.check(
        "discretization",
        report.eps_disc <= disc_tol,
        format!("eps_disc {:e} above {disc_tol:e}", report.eps_disc),
    );
    run.result("report", &report);
    Ok(())
}

fn abi_manifold_drift(p: &Params, run: &mut Run) -> std::result::Result<(), Failure> {
    let profile: Profile = p.get("profile")?;
    let f0 = profile.field(p.get("cells")?)?;
    let mut solver = AbiSolver::new(f0.clone(), p.get("cfl")?)?.monitor_every(p.get("monitor_every")?);
    let (t_end, steps) = (p.get_opt::<f64>("t_end")?, p.get_opt::<usize>("steps")?);
    let snapshot_every: usize = p.get("snapshot_every")?;
    let drift_tol = run.tolerance("conservation_drift", 1e-12);
    let entropy_tol = run.tolerance("entropy_increase", 1e-10);
    run.tolerance("wave_speed_margin", 0.2);
    run.write("initial.csv", |w| f0.write_csv(w))?;

    let mut series = vec![series_row(&solver, &f0)?];
    let mut snapshots = Vec::new();
    let mut record = |s: &AbiSolver, series: &mut Vec<[f64; 6]>| -> Result<()> {
        series.push(series_row(s, &f0)?);
        if snapshot_every > 0 && s.steps() % snapshot_every == 0 {
            snapshots.push((s.steps(), s.field().clone()));
        }
        Ok(())
    };
    match (t_end, steps) {
        (Some(_), Some(_)) => return Err(ConfigError("give t_end or steps, not both".into()).into()),
        (None, Some(n)) => {
            for _ in 0..n {
                let dt = solver.stable_dt();
                solver.step(dt)?;
                record(&solver, &mut series)?;
            }
        }
        (t, None) => {
            let t = t.unwrap_or(0.1);
            let mut err = None;
            solver.advance_to(t, |s| {
                if err.is_none() {
                    err = record(s, &mut series).err();
                }
            })?;
            if let Some(e) = err {
                return Err(e.into());
            }
        }
    }
    for (step, field) in &snapshots {
        run.write(&format!("snapshot_{step:06}.csv"), |w| field.write_csv(w))?;
    }
    run.write("final.csv", |w| solver.field().write_csv(w))?;
    run.write("series.csv", |w| {
        writeln!(w, "step,time,manifold_residual,hull_residual,total_entropy,max_drift")
            .map_err(|e| Error::Parse(e.to_string()))?;
        for r in &series {
            writeln!(w, "{},{},{},{},{},{}", r[0], fmt(r[1]), fmt(r[2]), fmt(r[3]), fmt(r[4]), fmt(r[5]))
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        Ok(())
    })?;

    let worst_increase = series.windows(2).map(|w| w[1][4] - w[0][4]).fold(0.0, f64::max);
    let worst_drift = series.iter().map(|r| r[5]).fold(0.0, f64::max);
    for w in solver.warnings() {
        run.diagnostics.push(format!(
            "wave speed warning: step {} cell {}: spectral radius {} above bound {}",
            w.step, w.cell, w.spectral_radius, w.bound
        ));
    }
    run.result("steps", solver.steps());
    run.result("time", solver.time());
    run.result("manifold_residual", manifold_residual(solver.field()));
    run.result("hull_residual", solver.field().max_hull_residual());
    run.result("max_conservation_drift", worst_drift);
    run.result("max_entropy_increase", worst_increase);
    run.result("wave_speed_warnings", solver.warnings().len());
    run.check("conservation", worst_drift <= drift_tol, format!("relative drift {worst_drift:e}"));
    run.check("entropy", worst_increase <= entropy_tol, format!("total U grew by {worst_increase:e}"));
    Ok(())
}

fn series_row(s: &AbiSolver, f0: &crate::born_infeld::AbiField1D) -> Result<[f64; 6]> {
    let f = s.field();
    let drift = conservation_drift(f0, f).iter().cloned().fold(0.0, f64::max);
    Ok([
        s.steps() as f64,
        s.time(),
        manifold_residual(f),
        f.max_hull_residual(),
        f.total_entropy()?,
        drift,
    ])
}
