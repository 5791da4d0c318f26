//! Monte Carlo suites; per-suite seeds come from the run seed and the suite
//! position so that adding a suite does not disturb the others.

use flab_mc::{
    avoidance_mc_suite, azema_exponential_check, poisson_suite, predictable_jump_probe, McCheck, McReport,
    RandomTimeSpec,
};

use crate::config::{McParams, Outcome};
use crate::registry::SuiteKind;
use crate::report::Finding;

fn with_report(f: Finding, r: &McReport) -> Finding {
    let f = f
        .ev("estimate", r.estimate)
        .ev("expected", r.expected)
        .ev("std_error", r.std_error)
        .ev("z_score", r.z_score)
        .ev("n_paths", r.n_paths as f64)
        .ev("z_max", r.z_max);
    if f.holds {
        f
    } else {
        let w = format!("{}: estimate {} vs {} (z = {})", r.statistic, r.estimate, r.expected, r.z_score);
        f.witness(Some(w))
    }
}

fn from_check(c: &McCheck) -> Finding {
    let f = if c.expect_pass {
        Finding::property(c.report.statistic.clone(), c.report.pass)
    } else {
        Finding::fixed(format!("{} (negative control)", c.report.statistic), c.report.pass, Outcome::Fails)
    };
    with_report(f, &c.report)
}

pub fn run_mc(kind: SuiteKind, p: &McParams, seed: u64, z_max: f64) -> Vec<Finding> {
    let res = match kind {
        SuiteKind::McPoisson => poisson_suite(p.lambda, p.t_real, p.n_paths, seed, z_max).map(checks),
        SuiteKind::McAzema => azema_exponential_check(p.lambda, p.mu, p.t_real, p.n_paths, seed, z_max).map(checks),
        SuiteKind::McAvoidance => avoidance_mc_suite(p.lambda, p.mu, p.t_real, p.n_paths, seed, z_max).map(checks),
        SuiteKind::McPredictableJump => predictable_jump(p, seed, z_max),
        _ => unreachable!("validated: exact suites never reach the mc engine"),
    };
    res.unwrap_or_else(|e| vec![Finding::property("evaluation", false).witness(Some(e))])
}

fn checks(cs: Vec<McCheck>) -> Vec<Finding> {
    cs.iter().map(from_check).collect()
}

fn predictable_jump(p: &McParams, seed: u64, z_max: f64) -> flab_mc::Result<Vec<Finding>> {
    let mut out = Vec::new();
    for &eps in &p.epsilons {
        let r = predictable_jump_probe(p.lambda, p.t_real, eps, RandomTimeSpec::Midpoint, p.n_paths, seed, z_max)?;
        let exact = r.p_g.n_paths > 0 && r.p_g.estimate == 1.0;
        out.push(with_report(Finding::property(format!("p_G = 1 exactly (eps={eps})"), exact), &r.p_g));
        out.push(with_report(Finding::property(format!("p_F = 1 - exp(-lambda eps) (eps={eps})"), r.p_f.pass), &r.p_f));
        let indep = RandomTimeSpec::IndependentExp { mu: p.mu };
        let c = predictable_jump_probe(p.lambda, p.t_real, eps, indep, p.n_paths, seed, z_max)?;
        out.push(with_report(
            Finding::property(format!("exponential tau announces nothing: p_G = p_F (eps={eps})"), c.p_g.pass),
            &c.p_g,
        ));
    }
    Ok(out)
}
