//! One line per acceptance criterion; exits non-zero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use flab_cli::exact::random_predictable;
use flab_cli::{load_config, run_with_threads};
use flab_core::calculus::{compensator, is_martingale, orthogonality_report, quadratic_covariation, stochastic_integral};
use flab_core::fixtures::{self, Scenario};
use flab_core::jump_measure::{compensator_measure, fundamental_martingales, jump_measure, Mark, PredictableFunction};
use flab_core::random_time::{azema_cross_check, build_random_time_bundle};
use flab_core::representation::{
    independent_decomposition, martingale_closure, multiplicity_certificate, solve_triple, solve_wrp,
};
use flab_core::{Error, Filtration, Process};
use flab_core::jump_measure::RandomMeasure;
use flab_mc::{avoidance_mc_suite, poisson_suite, predictable_jump_probe, RandomTimeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESIDUAL_TOL: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-12;
const COMPLETENESS_BUDGET_S: f64 = 10.0;
const MC_BUDGET_S: f64 = 60.0;
const RANDOM_SPACES: u64 = 50;
const CLOSURES: usize = 100;
const PREDICTABLE_FUNCTIONS: usize = 100;
const CLAUSE_PAIRS: u64 = 200;
const RANDOM_TIMES: u64 = 20;
const MC_LAMBDA: f64 = 1.0;
const MC_MU: f64 = 1.0;
const MC_T: f64 = 10.0;
const MC_PATHS: usize = 100_000;
const MC_Z: f64 = 4.0;
const MC_SEED: u64 = 20_240_611;
const EPSILONS: [f64; 2] = [0.1, 0.01];
const A2_PRODUCT: f64 = 0.15;
const GRID_LAMBDA: f64 = 1.5;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn completeness_fixtures() -> Vec<Scenario> {
    let mut v = vec![fixtures::space_a(), fixtures::counterexample_a2(), fixtures::staggered()];
    v.extend((0..RANDOM_SPACES).map(fixtures::random_scenario));
    v
}

fn closures(g: &Filtration, n: usize, rng: &mut ChaCha8Rng) -> Vec<Process> {
    (0..n)
        .map(|_| {
            let xi: Vec<f64> = (0..g.n_atoms()).map(|_| rng.random_range(-1.0..1.0)).collect();
            martingale_closure(&xi, g)
        })
        .collect()
}

fn completeness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut wrp, mut triple): (f64, f64) = (0.0, 0.0);
    let mut worst_fixture = String::new();
    let fx = completeness_fixtures();
    for s in &fx {
        let b = s.bundle().expect("fixture bundle");
        let mu = jump_measure(&b.x, &b.h, &b.g).expect("jump measure");
        let nu = compensator_measure(&mu, &b.g).expect("compensator measure");
        let zs = fundamental_martingales(&b.x, &b.h, &b.g).expect("fundamental martingales");
        for y in closures(&b.g, CLOSURES, &mut rng) {
            let w = solve_wrp(&y, &mu, &nu, &b.g).expect("wrp").residual_sup;
            let t = solve_triple(&y, &zs.z, &b.g, None).expect("triple").residual_sup;
            if w.max(t) > wrp.max(triple) {
                worst_fixture.clone_from(&s.name);
            }
            wrp = wrp.max(w);
            triple = triple.max(t);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        wrp <= RESIDUAL_TOL && triple <= RESIDUAL_TOL && secs < COMPLETENESS_BUDGET_S,
        format!(
            "{} fixtures x {CLOSURES} closures: wrp residual {wrp:.2e}, triple residual {triple:.2e} (worst {worst_fixture}), {secs:.2}s",
            fx.len()
        ),
    )
}

fn compensated_measure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut drift, mut gap): (f64, f64) = (0.0, 0.0);
    let mut all_martingales = true;
    let fx = completeness_fixtures();
    for s in &fx {
        let b = s.bundle().expect("fixture bundle");
        let g = &b.g;
        let mu = jump_measure(&b.x, &b.h, g).expect("jump measure");
        let nu = compensator_measure(&mu, g).expect("compensator measure");
        let zs = fundamental_martingales(&b.x, &b.h, g).expect("fundamental martingales");
        for _ in 0..PREDICTABLE_FUNCTIONS {
            let w = PredictableFunction::new(
                random_predictable(&mut rng, g),
                random_predictable(&mut rng, g),
                random_predictable(&mut rng, g),
            );
            let m = &mu.integrate(&w) - &nu.integrate(&w);
            let c = is_martingale(&m, g);
            all_martingales &= c.is_martingale();
            drift = drift.max(c.max_drift);
            let mut sum = Process::zeros(g.n_atoms(), g.horizon());
            for mark in Mark::ALL {
                sum = &sum + &stochastic_integral(w.get(mark), &zs.z[mark.index()], g).expect("integral");
            }
            gap = gap.max(m.max_abs_diff(&sum, g.space()));
        }
    }
    outcome(
        all_martingales && drift <= RESIDUAL_TOL && gap <= IDENTITY_TOL,
        format!(
            "{} fixtures x {PREDICTABLE_FUNCTIONS} functions: max drift {drift:.2e}, identity gap {gap:.2e}",
            fx.len()
        ),
    )
}

fn orthogonality_lemma() -> Outcome {
    let clauses_ok = (0..CLAUSE_PAIRS).all(|seed| {
        let s = fixtures::random_scenario(10_000 + seed);
        let g = s.bundle().expect("bundle").g;
        orthogonality_report(&s.x, &s.h, &g).expect("report").all_clauses_hold()
    });

    let s = fixtures::counterexample_a2();
    let g = s.bundle().expect("bundle").g;
    let r = orthogonality_report(&s.x, &s.h, &g).expect("report");
    let yp = compensator(&s.x, &g).expect("compensator").compensator;
    let zp = compensator(&s.h, &g).expect("compensator").compensator;
    let product = yp.increment(0, 1) * zp.increment(0, 1);
    let a2_ok = !r.is_orthogonal && r.disjoint_jumps && (product - A2_PRODUCT).abs() <= IDENTITY_TOL;

    let mut grid_ok = true;
    let mut last = f64::INFINITY;
    for n in [2usize, 4, 8, 12] {
        let s = fixtures::bernoulli_grid(n, GRID_LAMBDA / n as f64);
        let f = s.bundle().expect("bundle").base;
        let yp = compensator(&s.x, &f).expect("compensator").compensator;
        let yyp = compensator(&quadratic_covariation(&s.x, &s.x), &f).expect("compensator").compensator;
        let bracket_p = quadratic_covariation(&yp, &yp).value(0, n);
        let linear = (0..=n).all(|t| (yp.value(0, t) - GRID_LAMBDA * t as f64 / n as f64).abs() <= IDENTITY_TOL);
        grid_ok &= yyp.max_abs_diff(&yp, f.space()) <= IDENTITY_TOL
            && linear
            && bracket_p > 0.0
            && bracket_p < last
            && (bracket_p - GRID_LAMBDA * GRID_LAMBDA / n as f64).abs() <= IDENTITY_TOL;
        last = bracket_p;
    }
    outcome(
        clauses_ok && a2_ok && grid_ok,
        format!(
            "clauses on {CLAUSE_PAIRS} pairs: {clauses_ok}; two-point pair orthogonal: {}, compensator jump product {product:.15}; grid [Y,Y]^p = Y^p with [Y^p,Y^p]_1 = {last:.4} at n=12: {grid_ok}",
            r.is_orthogonal
        ),
    )
}

fn azema_formula() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let named = [fixtures::staggered(), fixtures::counterexample_a2(), fixtures::avoidance_three_branch()];
    let random = (0..RANDOM_TIMES).map(fixtures::random_time_scenario);
    for s in named.into_iter().chain(random) {
        let f = s.bundle().expect("bundle").f;
        let tau = s.tau.as_ref().expect("single-jump H");
        let b = build_random_time_bundle(tau, &f).expect("random time bundle");
        worst = worst.max(azema_cross_check(&b).expect("cross check").max_gap);
        count += 1;
    }
    outcome(worst <= RESIDUAL_TOL, format!("{count} bundles: max gap {worst:.2e}"))
}

fn multiplicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases = [
        (fixtures::single_point_process(3, 0.5), 1usize),
        (fixtures::space_a(), 3),
        (fixtures::avoidance_three_branch(), 2),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, expected) in cases {
        let g = s.bundle().expect("bundle").g;
        let tests = closures(&g, 20, &mut rng);
        let c = multiplicity_certificate(&g, &tests).expect("certificate");
        let ok = c.multiplicity == expected && c.basis.len() == expected && c.holds();
        pass &= ok;
        parts.push(format!(
            "{}={} (spanning {:.1e}, minimality {:.2})",
            s.name, c.multiplicity, c.spanning_residual, c.minimality_residual
        ));
    }
    outcome(pass, parts.join("; "))
}

fn independence() -> Outcome {
    let s = fixtures::space_a();
    let b = s.bundle().expect("bundle");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut cross, mut zid, mut pyth, mut res): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for y in closures(&b.g, 20, &mut rng) {
        let d = independent_decomposition(&y, &b).expect("independent decomposition");
        cross = cross.max(d.max_cross_covariation);
        zid = zid.max(d.z_identity_deviation.iter().copied().fold(0.0, f64::max));
        pyth = pyth.max(d.pythagoras_gap);
        res = res.max(d.solution.residual_sup);
    }
    let dep = fixtures::dependent();
    let db = dep.bundle().expect("bundle");
    let y = closures(&db.g, 1, &mut rng).pop().expect("closure");
    let violated = matches!(independent_decomposition(&y, &db), Err(Error::IndependenceViolated { .. }));
    outcome(
        cross <= IDENTITY_TOL && zid <= IDENTITY_TOL && pyth <= RESIDUAL_TOL && res <= RESIDUAL_TOL && violated,
        format!(
            "cross covariation {cross:.1e}, Z identities {zid:.1e}, pythagoras {pyth:.1e}, residual {res:.1e}; dependent fixture rejected: {violated}"
        ),
    )
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let run = || -> flab_mc::Result<(bool, String)> {
        let pois = poisson_suite(MC_LAMBDA, MC_T, MC_PATHS, MC_SEED, MC_Z)?;
        let avoid = avoidance_mc_suite(MC_LAMBDA, MC_MU, MC_T, MC_PATHS, MC_SEED, MC_Z)?;
        let declared = pois.iter().chain(&avoid).all(|c| c.as_declared());
        let controls = pois.iter().chain(&avoid).filter(|c| !c.expect_pass).count();
        let fraction = avoid[0].report.estimate;
        let mut ok = declared && controls >= 2 && fraction == 0.0;
        let mut detail = format!(
            "poisson z {:.2}, second moment z {:.2}, avoidance fraction {fraction}, {controls} controls failed as declared",
            pois[0].report.z_score, pois[2].report.z_score
        );
        for eps in EPSILONS {
            let r = predictable_jump_probe(MC_LAMBDA, MC_T, eps, RandomTimeSpec::Midpoint, MC_PATHS, MC_SEED, MC_Z)?;
            ok &= r.p_g.estimate == 1.0 && r.p_g.n_paths > 0 && r.p_f.pass;
            detail.push_str(&format!(
                "; eps={eps}: p_G={:.3} p_F={:.4} (z {:.2})",
                r.p_g.estimate, r.p_f.estimate, r.p_f.z_score
            ));
        }
        Ok((ok, detail))
    };
    match run() {
        Ok((ok, detail)) => {
            let secs = start.elapsed().as_secs_f64();
            outcome(ok && secs < MC_BUDGET_S, format!("{detail}; {secs:.2}s"))
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn determinism() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("configs directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    let mut pass = !names.is_empty();
    let mut parts = Vec::new();
    for p in &names {
        let cfg = load_config(p).expect("bundled config loads");
        let seed = cfg.seed.unwrap_or(0);
        let one = run_with_threads(&cfg, seed, Some(1)).expect("run").to_json();
        let eight = run_with_threads(&cfg, seed, Some(8)).expect("run").to_json();
        let again = run_with_threads(&cfg, seed, Some(8)).expect("run").to_json();
        let same = one == eight && eight == again;
        pass &= same;
        parts.push(format!("{}: {}", p.file_name().unwrap().to_string_lossy(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(pass, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("completeness of WRP and triple representation", completeness),
        ("compensated jump-measure integrals", compensated_measure),
        ("orthogonality lemma, two-point counterexample, Poisson grid", orthogonality_lemma),
        ("Azema compensator formula", azema_formula),
        ("multiplicity certificates 1 / 3 / 2", multiplicity),
        ("independent enlargement decomposition", independence),
        ("Monte Carlo suite", monte_carlo),
        ("determinism across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} [{}] {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
