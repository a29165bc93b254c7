//! Subcommand implementations. Each returns records and tables; writing is left to
//! the caller.

use std::f64::consts::PI;

use hardy_core::bubble::{bubble_moments, pohozaev_residual, BubbleMoments, Moment};
use hardy_core::constants::{
    critical_exponent, hardy_constant, hardy_sobolev_constant, sobolev_constant, Dimension, SigmaExponent,
};
use hardy_core::eigensolver::smallest_generalized_eigen;
use hardy_core::expansion::{expanded_coefficient, fit_expansion, quotient_series, theory_coefficient};
use hardy_core::forms::{assemble_forms, build_grid, BoundaryCondition, LogGridParams, QuadraticForms};
use hardy_core::manifold::{curvature_criterion, make_manifold, scalar_curvature_at_pole, ManifoldKind, ModelManifold};
use hardy_core::minimizer::{default_inits, minimize_quotient, MinimizerParams};
use hardy_core::thresholds::{
    constant_test_bound, hardy_forms, lambda_star_bracket, mu_curve, natural_bc, strict_inequality_report, HardyGrid,
    LambdaSearch, StrictGrid, Verdict,
};

use crate::record::{real, RunRecord, Table, ARTIFACT_DERIVED};
use crate::{
    BubbleArgs, Command, ConstantsArgs, ExpansionArgs, GridArgs, LambdaStarArgs, ManifoldArgs, MuCurveArgs, SolveArgs,
    Theorem2Args, EXIT_INCONCLUSIVE, EXIT_OK,
};

pub mod anchor {
    pub const HARDY: &str = "anchor:hardy-constant";
    pub const SOBOLEV: &str = "anchor:sobolev-constant";
    pub const LIEB: &str = "anchor:lieb-constant";
    pub const EXPONENT: &str = "anchor:critical-exponent";
    pub const GROUND_STATE: &str = "anchor:ground-state-moments";
    pub const POHOZAEV: &str = "anchor:pohozaev-identity";
    pub const CURVATURE: &str = "anchor:scalar-curvature";
    pub const LOCAL_HARDY: &str = "anchor:local-hardy-cap";
    pub const THRESHOLD: &str = "anchor:attainment-threshold";
    pub const CRITERION: &str = "anchor:curvature-criterion";
    pub const EXPANSION: &str = "anchor:quotient-expansion";
    pub const IMPROVED_HARDY: &str = "anchor:improved-hardy";
    pub const VIRTUAL_GROUND_STATE: &str = "anchor:virtual-ground-state";
    pub const MOMENT_SYMMETRY: &str = "anchor:moment-symmetry";
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub records: Vec<RunRecord>,
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
    pub exit: i32,
}

pub type CmdResult = Result<Outcome, String>;

fn err(e: hardy_core::Error) -> String {
    e.to_string()
}

pub fn execute(cmd: &Command, run_id: &str) -> CmdResult {
    match cmd {
        Command::Constants(a) => constants(a, run_id),
        Command::BubbleMoments(a) => bubble(a, run_id),
        Command::Solve(a) => solve(a, run_id),
        Command::MuCurve(a) => curve(a, run_id),
        Command::LambdaStar(a) => lambda_star(a, run_id),
        Command::Theorem2Check(a) => theorem2(a, run_id),
        Command::ExpansionFit(a) => expansion(a, run_id),
        Command::Verify(a) => crate::verify::run_suite(&a.suite, run_id),
    }
}

fn dimension(n: u32) -> Result<Dimension, String> {
    Dimension::new(n).map_err(err)
}

fn sigma_exp(s: f64) -> Result<SigmaExponent<f64>, String> {
    SigmaExponent::new(s).map_err(err)
}

/// Parses `3.5`, `pi`, `2pi`, `0.5*pi` or `pi/2`.
pub fn parse_radius(text: &str) -> Result<f64, String> {
    let t = text.trim().to_ascii_lowercase().replace(' ', "");
    let bad = || format!("cannot read radius {text:?}");
    let v = if let Some(rest) = t.strip_prefix("pi/") {
        PI / rest.parse::<f64>().map_err(|_| bad())?
    } else if t == "pi" {
        PI
    } else if let Some(k) = t.strip_suffix("pi") {
        let k = k.strip_suffix('*').unwrap_or(k);
        k.parse::<f64>().map_err(|_| bad())? * PI
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn build_manifold(a: &ManifoldArgs) -> Result<ModelManifold<f64>, String> {
    let kind: ManifoldKind = a.manifold.parse().map_err(err)?;
    let n = dimension(a.dim)?;
    let r_max = match &a.rmax {
        Some(t) => parse_radius(t)?,
        None if kind == ManifoldKind::Sphere => PI * a.radius,
        None => 1.0,
    };
    make_manifold(kind, a.radius, n, r_max).map_err(err)
}

fn manifold_params(r: &mut RunRecord, m: &ModelManifold<f64>) {
    r.param("manifold", m.kind.to_string())
        .param("radius", real(m.scale))
        .param("dim", m.dim.get())
        .param("rmax", real(m.r_max));
}

fn boundary(g: &GridArgs, m: &ModelManifold<f64>) -> Result<BoundaryCondition, String> {
    match &g.bc {
        Some(b) => b.parse().map_err(err),
        None => Ok(natural_bc(m)),
    }
}

fn hardy_grid(g: &GridArgs) -> Result<HardyGrid<f64>, String> {
    match g.grid.as_deref().unwrap_or("log") {
        "log" => Ok(HardyGrid::Log(LogGridParams::default())),
        "graded" => Ok(HardyGrid::Graded { cells: g.cells, gamma: g.gamma }),
        other => Err(format!("unknown grid {other:?}; expected log or graded")),
    }
}

fn grid_meta(r: &mut RunRecord, g: &HardyGrid<f64>, level: u32) {
    match g {
        HardyGrid::Log(p) => {
            r.grid("kind", "log")
                .grid("t_min", real(p.t_min))
                .grid("outer_span", real(p.outer_span))
                .grid("h_fine", real(p.h_fine))
                .grid("h_coarse", real(p.h_coarse));
        }
        HardyGrid::Graded { cells, gamma } => {
            r.grid("kind", "graded").grid("cells", *cells).grid("gamma", real(*gamma));
        }
    }
    r.grid("level", level).grid("ansatz", "radial");
}

fn constants(a: &ConstantsArgs, run_id: &str) -> CmdResult {
    let n = dimension(a.dim)?;
    let s = sigma_exp(a.sigma)?;
    let mut r = RunRecord::new(run_id, "constants");
    r.param("dim", a.dim).param("sigma", real(a.sigma));
    r.result("hardy_constant", real(hardy_constant::<f64>(n)), anchor::HARDY)
        .result("sobolev_constant", real(sobolev_constant::<f64>(n)), anchor::SOBOLEV)
        .result("critical_exponent", real(critical_exponent(s, n)), anchor::EXPONENT);
    if a.sigma < 2.0 {
        r.result("hardy_sobolev_constant", real(hardy_sobolev_constant(n, s).map_err(err)?), anchor::LIEB);
    }
    Ok(Outcome { records: vec![r], exit: EXIT_OK, ..Outcome::default() })
}

fn moment_results(r: &mut RunRecord, name: &str, m: &Moment<f64>) {
    r.result(name, real(m.value), anchor::GROUND_STATE);
    r.result(&format!("{name}_abs_error"), real(m.abs_error), ARTIFACT_DERIVED);
    r.result(&format!("{name}_finite"), m.finite, ARTIFACT_DERIVED);
    if let Some(s) = m.log_slope {
        r.result(&format!("{name}_log_slope"), real(s), ARTIFACT_DERIVED);
    }
    if let Some(t) = m.truncation_radius {
        r.result(&format!("{name}_truncation_radius"), real(t), ARTIFACT_DERIVED);
    }
}

fn bubble(a: &BubbleArgs, run_id: &str) -> CmdResult {
    let n = dimension(a.dim)?;
    let s = sigma_exp(a.sigma)?;
    let m: BubbleMoments<f64> = bubble_moments(n, s, a.tol).map_err(err)?;
    let mut r = RunRecord::new(run_id, "bubble-moments");
    r.param("dim", a.dim).param("sigma", real(a.sigma)).param("tol", real(a.tol));
    moment_results(&mut r, "dirichlet", &m.dirichlet);
    moment_results(&mut r, "mass2", &m.mass2);
    moment_results(&mut r, "hs_mass", &m.hs_mass);
    moment_results(&mut r, "r2_dirichlet", &m.r2_dirichlet);
    moment_results(&mut r, "r2_hs", &m.r2_hs);
    r.result("quotient", real(m.quotient()), anchor::LIEB);
    if a.dim >= 5 {
        r.result("pohozaev_residual", real(pohozaev_residual(n, s).map_err(err)?), anchor::POHOZAEV);
    }
    Ok(Outcome { records: vec![r], exit: EXIT_OK, ..Outcome::default() })
}

fn profile_table(forms: &QuadraticForms<f64>, u: &[f64]) -> Table {
    let mut t = Table::new("profile", &["log_r", "coefficient", "value"]);
    let values = forms.nodal_values(u);
    for ((lr, c), v) in forms.log_radius.iter().zip(u).zip(values) {
        t.push(vec![lr.to_string(), c.to_string(), v.to_string()]);
    }
    t
}

fn solve(a: &SolveArgs, run_id: &str) -> CmdResult {
    if !(a.sigma > 0.0 && a.sigma <= 2.0) {
        return Err(format!("sigma must lie in (0, 2], got {}", a.sigma));
    }
    let m = build_manifold(&a.manifold)?;
    let mut r = RunRecord::new(run_id, "solve");
    manifold_params(&mut r, &m);
    r.param("sigma", real(a.sigma)).param("lambda", real(a.lambda));
    if a.sigma == 2.0 {
        let grid = hardy_grid(&a.grid)?;
        if a.grid.bc.is_some() && boundary(&a.grid, &m)? != natural_bc(&m) {
            return Err("the sigma = 2 solver uses the natural boundary condition of the model".into());
        }
        let forms = hardy_forms(&m, &grid, 0).map_err(err)?;
        let e = smallest_generalized_eigen(&forms, a.lambda).map_err(err)?;
        grid_meta(&mut r, &grid, 0);
        r.grid("unknowns", forms.n_free());
        r.result("mu", real(e.mu), anchor::LOCAL_HARDY)
            .result("hardy_constant", real(hardy_constant::<f64>(m.dim)), anchor::HARDY)
            .result("concentration", real(e.concentration), ARTIFACT_DERIVED)
            .result("residual", real(e.residual), ARTIFACT_DERIVED)
            .result("iterations", e.iterations, ARTIFACT_DERIVED)
            .result("method", format!("{:?}", e.method), ARTIFACT_DERIVED);
        let table = profile_table(&forms, &e.profile.values);
        return Ok(Outcome { records: vec![r], tables: vec![table], exit: EXIT_OK, ..Outcome::default() });
    }
    if a.grid.grid.as_deref().is_some_and(|g| g != "graded") {
        return Err("sigma < 2 runs on the graded grid only".into());
    }
    let bc = boundary(&a.grid, &m)?;
    let g = build_grid(m.r_max, a.grid.cells, a.grid.gamma, bc).map_err(err)?;
    let forms = assemble_forms(&g, &m, a.sigma).map_err(err)?;
    let res = minimize_quotient(&forms, a.lambda, &default_inits(&forms).map_err(err)?, &MinimizerParams::default())
        .map_err(err)?;
    let s = hardy_sobolev_constant(m.dim, sigma_exp(a.sigma)?).map_err(err)?;
    r.grid("ansatz", "radial")
        .grid("kind", "graded")
        .grid("cells", a.grid.cells)
        .grid("gamma", real(a.grid.gamma))
        .grid("bc", bc.to_string());
    r.result("mu_upper", real(res.mu_upper), ARTIFACT_DERIVED)
        .result("hardy_sobolev_constant", real(s), anchor::LIEB)
        .result("converged", res.converged, ARTIFACT_DERIVED)
        .result("grad_norm", real(res.grad_norm), ARTIFACT_DERIVED)
        .result("iterations", res.iterations, ARTIFACT_DERIVED)
        .result("init", res.init_tag.to_string(), ARTIFACT_DERIVED)
        .result("concentration", real(res.concentration), ARTIFACT_DERIVED)
        .result("constraint_drift", real(res.constraint_drift), ARTIFACT_DERIVED);
    let mut starts = Table::new("starts", &["init", "initial_quotient", "mu", "iterations", "grad_norm", "converged"]);
    for o in &res.starts {
        starts.push(vec![
            o.tag.to_string(),
            o.initial_quotient.to_string(),
            o.mu.to_string(),
            o.iterations.to_string(),
            o.grad_norm.to_string(),
            o.converged.to_string(),
        ]);
    }
    let table = profile_table(&forms, &res.profile.values);
    Ok(Outcome { records: vec![r], tables: vec![table, starts], exit: EXIT_OK, ..Outcome::default() })
}

fn sweep(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if min.is_nan() || max.is_nan() || min >= max || steps < 2 {
        return Err("lambda range must be nonempty with at least two steps".into());
    }
    Ok((0..steps).map(|i| min + (max - min) * i as f64 / (steps - 1) as f64).collect())
}

fn curve(a: &MuCurveArgs, run_id: &str) -> CmdResult {
    let m = build_manifold(&a.manifold)?;
    let grid = hardy_grid(&a.grid)?;
    let forms = hardy_forms(&m, &grid, 0).map_err(err)?;
    let c = mu_curve(&forms, &sweep(a.lambda_min, a.lambda_max, a.steps)?).map_err(err)?;
    let mut r = RunRecord::new(run_id, "mu-curve");
    manifold_params(&mut r, &m);
    r.param("lambda_min", real(a.lambda_min)).param("lambda_max", real(a.lambda_max)).param("steps", a.steps);
    grid_meta(&mut r, &grid, 0);
    r.result("strictly_decreasing", c.is_strictly_decreasing(), anchor::LOCAL_HARDY)
        .result("max_mu", real(c.max_mu()), anchor::LOCAL_HARDY)
        .result("hardy_constant", real(hardy_constant::<f64>(m.dim)), anchor::HARDY);
    let mut t = Table::new("mu_curve", &["lambda", "mu", "concentration"]);
    for s in &c.samples {
        t.push(vec![s.lambda.to_string(), s.mu.to_string(), s.concentration.to_string()]);
    }
    Ok(Outcome { records: vec![r], tables: vec![t], exit: EXIT_OK, ..Outcome::default() })
}

fn lambda_star(a: &LambdaStarArgs, run_id: &str) -> CmdResult {
    let m = build_manifold(&a.manifold)?;
    let grid = hardy_grid(&a.grid)?;
    let search = LambdaSearch {
        lambda_min: a.lambda_min,
        lambda_max: a.lambda_max,
        steps: a.steps,
        tol_lambda: a.tol,
        detection_delta: a.delta,
    };
    let b = lambda_star_bracket(&m, &grid, 0, &search).map_err(err)?;
    let mut r = RunRecord::new(run_id, "lambda-star");
    manifold_params(&mut r, &m);
    r.param("tol", real(a.tol))
        .param("lambda_min", real(a.lambda_min))
        .param("lambda_max", real(a.lambda_max))
        .param("steps", a.steps);
    if let Some(d) = a.delta {
        r.param("delta", real(d));
    }
    grid_meta(&mut r, &grid, b.grid_tag);
    r.result("lo", real(b.lo), anchor::THRESHOLD)
        .result("hi", real(b.hi), anchor::THRESHOLD)
        .result("mu_lo", real(b.mu_lo), ARTIFACT_DERIVED)
        .result("mu_hi", real(b.mu_hi), ARTIFACT_DERIVED)
        .result("detection_delta", real(b.detection_delta), ARTIFACT_DERIVED)
        .result("note", "hi is an upper estimate: detection certifies mu < cap, never mu = cap", ARTIFACT_DERIVED);
    if m.is_closed() {
        r.result("constant_test_bound", real(constant_test_bound(&m).map_err(err)?), anchor::THRESHOLD);
    }
    Ok(Outcome { records: vec![r], exit: EXIT_OK, ..Outcome::default() })
}

fn theorem2(a: &Theorem2Args, run_id: &str) -> CmdResult {
    let m = build_manifold(&a.manifold)?;
    let rep =
        strict_inequality_report(&m, a.lambda, a.sigma, StrictGrid { cells: a.cells, gamma: a.gamma }).map_err(err)?;
    let mut r = RunRecord::new(run_id, "theorem2-check");
    manifold_params(&mut r, &m);
    r.param("lambda", real(a.lambda)).param("sigma", real(a.sigma));
    r.grid("ansatz", "radial")
        .grid("kind", "graded")
        .grid("coarse_cells", a.cells)
        .grid("fine_cells", 2 * a.cells)
        .grid("gamma", real(a.gamma))
        .grid("bc", natural_bc(&m).to_string());
    let crit = curvature_criterion(&m, a.lambda);
    r.result("mu_upper", real(rep.mu_upper), ARTIFACT_DERIVED)
        .result("mu_coarse", real(rep.mu_coarse), ARTIFACT_DERIVED)
        .result("sharp_constant", real(rep.sharp_constant), anchor::LIEB)
        .result("margin", real(rep.margin), ARTIFACT_DERIVED)
        .result("error_estimate", real(rep.error_estimate), ARTIFACT_DERIVED)
        .result("scalar_curvature", real(scalar_curvature_at_pole(&m)), anchor::CURVATURE)
        .result("criterion_holds", crit.holds, anchor::CRITERION)
        .result("in_theorem_scope", rep.in_theorem_scope, anchor::CRITERION)
        .result("converged", rep.converged, ARTIFACT_DERIVED)
        .result("verdict", rep.verdict.to_string(), ARTIFACT_DERIVED);
    let exit = if rep.verdict == Verdict::Inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK };
    Ok(Outcome { records: vec![r], summary: vec![rep.verdict.to_string()], exit, ..Outcome::default() })
}

fn expansion(a: &ExpansionArgs, run_id: &str) -> CmdResult {
    let m = build_manifold(&a.manifold)?;
    let cutoff = a.cutoff.unwrap_or(m.r_max / 2.0);
    let series = quotient_series(&m, a.lambda, a.sigma, &a.n, cutoff).map_err(err)?;
    let fit = fit_expansion(&series, m.dim).map_err(err)?;
    let s = hardy_sobolev_constant(m.dim, sigma_exp(a.sigma)?).map_err(err)?;
    let mut r = RunRecord::new(run_id, "expansion-fit");
    manifold_params(&mut r, &m);
    r.param("lambda", real(a.lambda))
        .param("sigma", real(a.sigma))
        .param("n", a.n.iter().map(|x| real(*x)).collect::<Vec<_>>())
        .param("cutoff", real(cutoff));
    r.grid("ansatz", "radial").grid("kind", "per-n geometric panels");
    r.result("model", fit.model.to_string(), ARTIFACT_DERIVED)
        .result("c0", real(fit.c0), ARTIFACT_DERIVED)
        .result("c1", real(fit.c1), ARTIFACT_DERIVED)
        .result("c2", real(fit.c2), ARTIFACT_DERIVED)
        .result("rms", real(fit.rms), ARTIFACT_DERIVED)
        .result("hardy_sobolev_constant", real(s), anchor::LIEB)
        .result("criterion_sign", real((scalar_curvature_at_pole(&m) + 6.0 * a.lambda).signum()), anchor::CRITERION);
    if m.dim.get() >= 4 {
        if a.lambda <= 0.0 {
            r.result(
                "theory_coefficient",
                real(theory_coefficient(&m, a.lambda, a.sigma).map_err(err)?),
                anchor::EXPANSION,
            );
        }
        r.result(
            "expanded_coefficient",
            real(expanded_coefficient(&m, a.lambda, a.sigma).map_err(err)?),
            ARTIFACT_DERIVED,
        );
    }
    let mut t = Table::new("expansion_series", &["n", "energy", "denominator", "quotient", "self_check"]);
    for e in &series.entries {
        t.push(vec![
            e.n.to_string(),
            e.energy.to_string(),
            e.denominator.to_string(),
            e.quotient.to_string(),
            e.self_check.to_string(),
        ]);
    }
    Ok(Outcome { records: vec![r], tables: vec![t], exit: EXIT_OK, ..Outcome::default() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_tokens() {
        assert_eq!(parse_radius("pi").unwrap(), PI);
        assert_eq!(parse_radius("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_radius("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_radius("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_radius("1.25").unwrap(), 1.25);
        assert!(parse_radius("tau").is_err());
    }

    #[test]
    fn sphere_defaults_to_the_antipode() {
        let a = ManifoldArgs { manifold: "sphere".into(), radius: 2.0, dim: 4, rmax: None };
        assert_eq!(build_manifold(&a).unwrap().r_max, 2.0 * PI);
    }
}
