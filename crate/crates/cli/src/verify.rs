//! Invariant suites for `verify`. One record per check; any failed check makes the run
//! exit with status 1.

use std::f64::consts::PI;

use hardy_core::bubble::{bubble_quotient, pohozaev_residual};
use hardy_core::constants::{
    hardy_constant, hardy_sobolev_constant, sobolev_constant, sphere_area, Dimension, SigmaExponent,
};
use hardy_core::eigensolver::smallest_generalized_eigen;
use hardy_core::expansion::{fit_expansion, moment_symmetry, quotient_series, theory_coefficient};
use hardy_core::hardy_refined::{
    dominant_term_sign, flat_operator_residual, improved_hardy_eigen, log_bubble_norm_growth, LogUniformGrid,
};
use hardy_core::manifold::{
    density_expansion_residual, make_manifold, scalar_curvature_at_pole, ManifoldKind, ModelManifold,
};
use hardy_core::thresholds::{
    constant_test_bound, hardy_forms, lambda_star_bracket, mu_curve, strict_inequality_report, HardyGrid, LambdaSearch,
    StrictGrid, Verdict, MARGIN_FACTOR,
};

use crate::commands::{anchor, CmdResult, Outcome};
use crate::record::{real, RunRecord, ARTIFACT_DERIVED};
use crate::{EXIT_ERROR, EXIT_OK};

pub const SUITES: [&str; 6] = ["constants", "bubble", "manifold", "thresholds", "refined-hardy", "expansion"];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub provenance: &'static str,
}

fn check(name: &str, value: f64, threshold: f64, pass: bool, provenance: &'static str) -> Check {
    Check { name: name.to_string(), pass, value, threshold, provenance }
}

type Checks = Result<Vec<Check>, hardy_core::Error>;

fn dim(n: u32) -> Dimension {
    Dimension::new(n).expect("fixed dimensions are valid")
}

fn sig(s: f64) -> hardy_core::Result<SigmaExponent<f64>> {
    SigmaExponent::new(s)
}

fn sphere(n: u32) -> hardy_core::Result<ModelManifold<f64>> {
    make_manifold(ManifoldKind::Sphere, 1.0, dim(n), PI)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn constants_suite() -> Checks {
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    for n in [3, 4, 5, 6] {
        for s in [0.0, 0.5, 1.0, 1.5] {
            worst = worst.max(rel(bubble_quotient(dim(n), sig(s)?)?, hardy_sobolev_constant(dim(n), sig(s)?)?));
        }
    }
    out.push(check("lieb_matches_bubble_quotient", worst, 1e-6, worst <= 1e-6, anchor::LIEB));
    let mut sob = 0.0f64;
    let mut hardy = 0.0f64;
    for n in [3, 4, 5] {
        sob = sob.max(rel(hardy_sobolev_constant(dim(n), sig(1e-6)?)?, sobolev_constant(dim(n))));
        hardy = hardy.max((hardy_sobolev_constant(dim(n), sig(1.99)?)? - hardy_constant::<f64>(dim(n))).abs());
    }
    out.push(check("sigma_to_zero_gives_sobolev", sob, 1e-5, sob <= 1e-5, anchor::SOBOLEV));
    out.push(check("sigma_1.99_near_hardy", hardy, 1e-2, hardy <= 1e-2, anchor::HARDY));
    let mut rec = 0.0f64;
    for n in 3..30 {
        let a: f64 = sphere_area(n)?;
        let b: f64 = sphere_area(n - 2)?;
        rec = rec.max(rel(a, 2.0 * PI * b / (n as f64 - 1.0)));
    }
    out.push(check("sphere_area_recursion", rec, 1e-12, rec <= 1e-12, ARTIFACT_DERIVED));
    Ok(out)
}

fn bubble_suite() -> Checks {
    let mut worst = 0.0f64;
    for (n, s) in [(5, 0.5), (5, 1.0), (6, 1.0)] {
        worst = worst.max(pohozaev_residual(dim(n), sig(s)?)?);
    }
    Ok(vec![check("pohozaev_residual", worst, 1e-8, worst <= 1e-8, anchor::POHOZAEV)])
}

fn manifold_suite() -> Checks {
    let mut worst = 0.0f64;
    for kind in [ManifoldKind::EuclideanBall, ManifoldKind::Sphere, ManifoldKind::HyperbolicCap] {
        for n in 3..7 {
            worst = worst.max(density_expansion_residual(&make_manifold(kind, 1.0, dim(n), 1.0)?));
        }
    }
    Ok(vec![check("density_expansion_matches_curvature", worst, 1e-4, worst <= 1e-4, anchor::CURVATURE)])
}

fn thresholds_suite() -> Checks {
    let mut out = Vec::new();
    let m = sphere(3)?;
    let forms = hardy_forms(&m, &HardyGrid::default(), 0)?;
    let c = mu_curve(&forms, &[-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0])?;
    let dec = c.is_strictly_decreasing();
    out.push(check("s3_mu_strictly_decreasing", if dec { 1.0 } else { 0.0 }, 1.0, dec, anchor::LOCAL_HARDY));
    let cap = c.max_mu() - 0.25;
    out.push(check("s3_mu_below_hardy_constant", cap, 1e-6, cap <= 1e-6, anchor::LOCAL_HARDY));
    let mu0 = smallest_generalized_eigen(&forms, 0.0)?.mu.abs();
    out.push(check("s3_mu_at_zero", mu0, 1e-8, mu0 <= 1e-8, ARTIFACT_DERIVED));
    let b = lambda_star_bracket(
        &m,
        &HardyGrid::default(),
        0,
        &LambdaSearch { tol_lambda: 0.01, ..LambdaSearch::default() },
    )?;
    let bound = constant_test_bound(&m)?;
    out.push(check("s3_bracket_below_constant_test_bound", b.hi, bound, b.hi <= bound, anchor::THRESHOLD));
    let r = strict_inequality_report(&sphere(4)?, -1.0, 1.0, StrictGrid::default())?;
    let ok = r.verdict == Verdict::ConfirmsTheorem;
    out.push(check("s4_strict_margin_over_error", r.margin / r.error_estimate, MARGIN_FACTOR, ok, anchor::CRITERION));
    Ok(out)
}

fn refined_suite() -> Checks {
    let mut out = Vec::new();
    let g = LogUniformGrid::new(0.1, 8.0, 512)?;
    let mut order = f64::INFINITY;
    for n in [3, 4] {
        for a in [-1.0, -0.75, -0.5, 0.0, 0.5] {
            let r1 = flat_operator_residual(a, 0.0, dim(n), &g)?;
            let r2: f64 = flat_operator_residual(a, 0.0, dim(n), &g.refine())?;
            order = order.min((r1 / r2).log2());
        }
    }
    out.push(check("flat_residual_order", order, 1.9, order >= 1.9, anchor::VIRTUAL_GROUND_STATE));
    let mut eig = f64::INFINITY;
    for n in [3, 4] {
        eig = eig.min(improved_hardy_eigen(dim(n), 0.1, 1024, 2.0)?.eigenvalue);
    }
    out.push(check("improved_hardy_eigenvalue", eig, 0.99, eig >= 0.99, anchor::IMPROVED_HARDY));
    let sub = dominant_term_sign(-0.75);
    out.push(check("sub_solution_sign", sub, -1.0, sub == -1.0, anchor::VIRTUAL_GROUND_STATE));
    let sup = dominant_term_sign(-1.0);
    out.push(check("super_solution_sign", sup, 1.0, sup == 1.0, anchor::IMPROVED_HARDY));
    let conv = log_bubble_norm_growth(-0.75, dim(3), 0.5, 6)?;
    let div = log_bubble_norm_growth(-0.25, dim(3), 0.5, 6)?;
    let ok = conv.converges && !div.converges;
    out.push(check("finite_norm_below_minus_half", conv.increment_ratio, 1.0, ok, anchor::VIRTUAL_GROUND_STATE));
    Ok(out)
}

fn expansion_suite() -> Checks {
    let mut out = Vec::new();
    let ns = [4.0, 8.0, 16.0, 32.0, 64.0];
    let s5 = sphere(5)?;
    let fit = fit_expansion(&quotient_series(&s5, -1.0, 1.0, &ns, PI / 2.0)?, dim(5))?;
    let s = hardy_sobolev_constant(dim(5), sig(1.0)?)?;
    let e0 = rel(fit.c0, s);
    out.push(check("s5_c0_near_sharp_constant", e0, 0.01, e0 <= 0.01, anchor::EXPANSION));
    let e1 = rel(fit.c1, theory_coefficient(&s5, -1.0, 1.0)?);
    out.push(check("s5_c1_near_theory", e1, 0.15, e1 <= 0.15, anchor::EXPANSION));
    let mut agree = 0.0;
    for (n, lambda) in [(4, -1.0), (5, -1.0), (4, -3.0)] {
        let m = sphere(n)?;
        let f = fit_expansion(&quotient_series(&m, lambda, 1.0, &ns, PI / 2.0)?, dim(n))?;
        if (f.c1 > 0.0) == (scalar_curvature_at_pole(&m) + 6.0 * lambda > 0.0) {
            agree += 1.0;
        }
    }
    out.push(check("sign_law", agree, 3.0, agree == 3.0, anchor::CRITERION));
    let ms = moment_symmetry(dim(3), 1.0, 1.0, 100_000, 7)?;
    let z =
        (ms.off_diagonal / ms.off_diagonal_se).abs().max(((ms.diagonal - ms.radial_share) / ms.difference_se).abs());
    out.push(check("moment_symmetry_z", z, 3.0, z <= 3.0, anchor::MOMENT_SYMMETRY));
    Ok(out)
}

pub fn checks_for(suite: &str) -> Result<Vec<Check>, String> {
    let run = |f: fn() -> Checks| f().map_err(|e| e.to_string());
    match suite {
        "constants" => run(constants_suite),
        "bubble" => run(bubble_suite),
        "manifold" => run(manifold_suite),
        "thresholds" => run(thresholds_suite),
        "refined-hardy" => run(refined_suite),
        "expansion" => run(expansion_suite),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(checks_for(s)?);
            }
            Ok(out)
        }
        other => Err(format!("unknown suite {other:?}; expected all or one of {}", SUITES.join(", "))),
    }
}

pub fn run_suite(suite: &str, run_id: &str) -> CmdResult {
    let checks = checks_for(suite)?;
    let mut records = Vec::with_capacity(checks.len());
    let mut summary = Vec::with_capacity(checks.len());
    for c in &checks {
        let mut r = RunRecord::new(run_id, "verify");
        r.param("suite", suite).param("check", c.name.as_str());
        r.result("pass", c.pass, c.provenance).result("value", real(c.value), c.provenance).result(
            "threshold",
            real(c.threshold),
            c.provenance,
        );
        records.push(r);
        summary.push(format!(
            "{} {} ({:.3e} vs {:.3e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        ));
    }
    let exit = if checks.iter().all(|c| c.pass) { EXIT_OK } else { EXIT_ERROR };
    Ok(Outcome { records, tables: Vec::new(), summary, exit })
}
