//! Exact-engine suites run against one finite scenario.

use flab_core::calculus::{
    compensator, is_martingale, orthogonality_report, quadratic_covariation, stochastic_integral,
};
use flab_core::enlargement::{
    progressive_enlargement, verify_filtration_identities, EnlargementBundle, RIGHT_CONTINUITY_NOTE,
};
use flab_core::fixtures::{bernoulli_grid, random_scenario, Scenario};
use flab_core::jump_measure::{
    compensator_measure, fundamental_martingales, joint_decomposition, jump_measure, Mark, PredictableFunction,
    RandomMeasure,
};
use flab_core::random_time::{
    avoidance_check, azema_cross_check, azema_report, build_random_time_bundle, orthogonality_suite,
    DEFERRED_STRUCTURE_NOTE,
};
use flab_core::representation::{
    independent_decomposition, martingale_closure, multiplicity, multiplicity_certificate, solve_prp, solve_triple,
    solve_wrp,
};
use flab_core::{Filtration, Process, StoppingTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::registry::SuiteKind;
use crate::report::Finding;

/// Atomwise identities that involve no solve are held to this bound.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Rate of the Bernoulli grids standing in for a Poisson process on [0, 1].
const GRID_LAMBDA: f64 = 1.5;
const GRID_STEPS: [usize; 4] = [2, 4, 8, 12];

pub struct ExactContext<'a> {
    pub scenario: &'a Scenario,
    pub bundle: EnlargementBundle,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
}

type Out = flab_core::Result<Vec<Finding>>;

pub fn run_exact(kind: SuiteKind, cx: &ExactContext) -> Vec<Finding> {
    let res = match kind {
        SuiteKind::Enlargement => enlargement(cx),
        SuiteKind::BasePrp => base_prp(cx),
        SuiteKind::PointProcessDecomposition => point_processes(cx),
        SuiteKind::CompensatedMeasure => compensated_measure(cx),
        SuiteKind::FiltrationIdentities => filtration_identities(cx),
        SuiteKind::FundamentalMartingales => fundamental(cx),
        SuiteKind::WrpCompleteness => wrp(cx),
        SuiteKind::TripleCompleteness => triple(cx, false),
        SuiteKind::StoppedRepresentation => triple(cx, true),
        SuiteKind::Multiplicity => multiplicity_suite(cx),
        SuiteKind::Independence => independence(cx),
        SuiteKind::OrthogonalityLemma => orthogonality_lemma(cx),
        SuiteKind::OrthogonalityCounterexample => counterexample(cx),
        SuiteKind::PoissonGrid => poisson_grid(),
        SuiteKind::AzemaFormula => azema(cx),
        SuiteKind::Avoidance => avoidance(cx),
        SuiteKind::StoppedOrthogonality => stopped_orthogonality(cx),
        SuiteKind::McPoisson | SuiteKind::McAzema | SuiteKind::McAvoidance | SuiteKind::McPredictableJump => {
            unreachable!("validated: mc suites never reach the exact engine")
        }
    };
    res.unwrap_or_else(|e| vec![Finding::property("evaluation", false).witness(Some(e))])
}

impl ExactContext<'_> {
    fn rng(&self, kind: SuiteKind) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(flab_mc::derive_seed(self.seed, kind as u64 + 1))
    }

    fn closures(&self, kind: SuiteKind, f: &Filtration) -> Vec<Process> {
        let mut rng = self.rng(kind);
        let n = f.n_atoms();
        (0..self.samples)
            .map(|_| {
                let xi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                martingale_closure(&xi, f)
            })
            .collect()
    }

    fn tau(&self) -> &StoppingTime {
        self.scenario.tau.as_ref().expect("validated: random-time suites have tau")
    }
}

/// Random process constant on the blocks of `P_{t-1}` at each `t ≥ 1`.
pub fn random_predictable<R: Rng>(rng: &mut R, f: &Filtration) -> Process {
    let mut p = Process::zeros(f.n_atoms(), f.horizon());
    for t in 1..=f.horizon() {
        let prev = f.at(t - 1);
        let vals: Vec<f64> = (0..prev.n_blocks()).map(|_| rng.random_range(-2.0..2.0)).collect();
        for a in 0..f.n_atoms() {
            p.set(a, t, vals[prev.block_of(a)]);
        }
    }
    p
}

fn same_filtration(a: &Filtration, b: &Filtration) -> bool {
    a.horizon() == b.horizon() && (0..=a.horizon()).all(|t| a.at(t).refines(b.at(t)) && b.at(t).refines(a.at(t)))
}

fn enlargement(cx: &ExactContext) -> Out {
    let b = &cx.bundle;
    let join = progressive_enlargement(&b.f, &b.h_filtration);
    Ok(vec![
        Finding::property("F is contained in G", b.f.is_contained_in(&b.g)),
        Finding::property("R is contained in G_0", b.g.at(0).refines(&b.initial_sigma)),
        Finding::property("X is F-adapted", b.x.is_adapted(&b.f)),
        Finding::property("H is G-adapted", b.h.is_adapted(&b.g)),
        Finding::property("G = F joined with the filtration of H", same_filtration(&join, &b.g))
            .note(RIGHT_CONTINUITY_NOTE),
    ])
}

fn base_prp(cx: &ExactContext) -> Out {
    let f = &cx.bundle.f;
    let m = compensator(&cx.bundle.x, f)?.martingale_part;
    let mut worst: f64 = 0.0;
    for y in cx.closures(SuiteKind::BasePrp, f) {
        worst = worst.max(solve_prp(&y, &m, f)?.residual_sup);
    }
    Ok(vec![Finding::property("compensated X represents every F-martingale", worst <= cx.tol)
        .ev("residual_sup", worst)
        .ev("closures", cx.samples as f64)
        .ev("multiplicity_F", multiplicity(f) as f64)])
}

fn point_processes(cx: &ExactContext) -> Out {
    let b = &cx.bundle;
    let d = joint_decomposition(&b.x, &b.h, &b.g)?;
    let space = b.g.space();
    let [xo, ho, j] = d.as_array();
    let pp = xo.is_point_process() && ho.is_point_process() && j.is_point_process();
    let common = [(xo, ho), (xo, j), (ho, j)]
        .iter()
        .map(|(p, q)| quadratic_covariation(p, q).sup_abs(space))
        .fold(0.0, f64::max);
    let rebuild = (&(xo + j) - &b.x).sup_abs(space).max((&(ho + j) - &b.h).sup_abs(space));
    Ok(vec![
        Finding::property("X - [X,H], H - [X,H], [X,H] are point processes", pp),
        Finding::property("the three have no common jumps", common == 0.0).ev("max_common_jumps", common),
        Finding::property("they rebuild X and H", rebuild <= IDENTITY_TOL).ev("max_gap", rebuild),
    ])
}

fn compensated_measure(cx: &ExactContext) -> Out {
    let b = &cx.bundle;
    let g = &b.g;
    let mu = jump_measure(&b.x, &b.h, g)?;
    let nu = compensator_measure(&mu, g)?;
    let zs = fundamental_martingales(&b.x, &b.h, g)?;
    let mut rng = cx.rng(SuiteKind::CompensatedMeasure);
    let (mut drift, mut gap): (f64, f64) = (0.0, 0.0);
    let mut witness = None;
    for _ in 0..cx.samples {
        let w = PredictableFunction::new(
            random_predictable(&mut rng, g),
            random_predictable(&mut rng, g),
            random_predictable(&mut rng, g),
        );
        let m = &mu.integrate(&w) - &nu.integrate(&w);
        let check = is_martingale(&m, g);
        drift = drift.max(check.max_drift);
        if witness.is_none() {
            witness = check.witness;
        }
        let mut sum = Process::zeros(g.n_atoms(), g.horizon());
        for mark in Mark::ALL {
            sum = &sum + &stochastic_integral(w.get(mark), &zs.z[mark.index()], g)?;
        }
        gap = gap.max(m.max_abs_diff(&sum, g.space()));
    }
    Ok(vec![
        Finding::property("W*mu - W*nu is a G-martingale", witness.is_none() && drift <= cx.tol)
            .ev("max_drift", drift)
            .ev("functions", cx.samples as f64)
            .witness(witness),
        Finding::property("W*mu - W*nu = sum of W(e).Z_e", gap <= IDENTITY_TOL).ev("max_gap", gap),
    ])
}

fn filtration_identities(cx: &ExactContext) -> Out {
    let r = verify_filtration_identities(&cx.bundle)?;
    let w = r.first_mismatch.map(|t| format!("first mismatch at t={t}"));
    Ok(vec![
        Finding::property("G = R joined with the natural filtration of (X,H)", r.g_is_initial_join_of_joint)
            .witness(w.clone()),
        Finding::property("natural filtration of (X,H) = filtration of the jump measure", r.joint_is_measure_filtration)
            .witness(w),
        Finding::property("X and H are recovered from the marks", r.reconstruction_holds).note(r.note),
    ])
}

fn fundamental(cx: &ExactContext) -> Out {
    let b = &cx.bundle;
    let g = &b.g;
    let zs = fundamental_martingales(&b.x, &b.h, g)?;
    let mut out = Vec::new();
    for (i, z) in zs.z.iter().enumerate() {
        let c = is_martingale(z, g);
        out.push(
            Finding::property(format!("Z{} is a G-martingale", i + 1), c.is_martingale())
                .ev("max_drift", c.max_drift)
                .witness(c.witness),
        );
    }
    let xbar = compensator(&b.x, g)?.martingale_part;
    let hbar = compensator(&b.h, g)?.martingale_part;
    let space = g.space();
    let gx = (zs.z1() + zs.z3()).max_abs_diff(&xbar, space);
    let gh = (zs.z2() + zs.z3()).max_abs_diff(&hbar, space);
    out.push(Finding::property("Z1 + Z3 = compensated X", gx <= IDENTITY_TOL).ev("max_gap", gx));
    out.push(Finding::property("Z2 + Z3 = compensated H", gh <= IDENTITY_TOL).ev("max_gap", gh));
    Ok(out)
}

fn wrp(cx: &ExactContext) -> Out {
    let b = &cx.bundle;
    let mu = jump_measure(&b.x, &b.h, &b.g)?;
    let nu = compensator_measure(&mu, &b.g)?;
    let mut worst: f64 = 0.0;
    for y in cx.closures(SuiteKind::WrpCompleteness, &b.g) {
        worst = worst.max(solve_wrp(&y, &mu, &nu, &b.g)?.residual_sup);
    }
    Ok(vec![Finding::property("Y = Y0 + W*mu - W*nu for every G-martingale", worst <= cx.tol)
        .ev("residual_sup", worst)
        .ev("closures", cx.samples as f64)])
}

fn triple(cx: &ExactContext, stopped: bool) -> Out {
    let b = &cx.bundle;
    let zs = fundamental_martingales(&b.x, &b.h, &b.g)?;
    let (kind, stop, name) = if stopped {
        (SuiteKind::StoppedRepresentation, Some(cx.tau()), "Y^tau = Y0 + K1.Z1^tau + K2.Z2 + K3.Z3")
    } else {
        (SuiteKind::TripleCompleteness, None, "Y = Y0 + K1.Z1 + K2.Z2 + K3.Z3 for every G-martingale")
    };
    let mut worst: f64 = 0.0;
    for y in cx.closures(kind, &b.g) {
        worst = worst.max(solve_triple(&y, &zs.z, &b.g, stop)?.residual_sup);
    }
    Ok(vec![Finding::property(name, worst <= cx.tol).ev("residual_sup", worst).ev("closures", cx.samples as f64)])
}

fn multiplicity_suite(cx: &ExactContext) -> Out {
    let g = &cx.bundle.g;
    let tests = cx.closures(SuiteKind::Multiplicity, g);
    let c = multiplicity_certificate(g, &tests)?;
    let node = c.critical_node.map(|(t, b)| format!("branching node t={t} block={b}"));
    Ok(vec![
        Finding::property("orthogonal spanning family of size multiplicity(G)", c.holds())
            .ev("multiplicity", c.multiplicity as f64)
            .ev("max_cross_covariation", c.max_cross_covariation)
            .ev("spanning_residual", c.spanning_residual)
            .ev("minimality_residual", c.minimality_residual)
            .witness(node),
    ])
}

fn independence(cx: &ExactContext) -> Out {
    let b = &cx.bundle;
    let mut worst = [0.0f64; 5];
    let mut gap = 0.0;
    for y in cx.closures(SuiteKind::Independence, &b.g) {
        let d = match independent_decomposition(&y, b) {
            Ok(d) => d,
            Err(e @ flab_core::Error::IndependenceViolated { gap, .. }) => {
                return Ok(vec![Finding::property("F and the filtration of H are independent", false)
                    .ev("independence_gap", gap)
                    .witness(Some(e))]);
            }
            Err(e) => return Err(e),
        };
        gap = d.independence_gap;
        let vals = [
            d.solution.residual_sup,
            d.max_cross_covariation,
            d.z_identity_deviation.iter().copied().fold(0.0, f64::max),
            d.bracket_compensator_deviation,
            d.pythagoras_gap,
        ];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
    }
    let [res, cross, zid, brk, pyth] = worst;
    Ok(vec![
        Finding::property("F and the filtration of H are independent", true).ev("independence_gap", gap),
        Finding::property("basis is pairwise orthogonal", cross <= IDENTITY_TOL).ev("max_cross_covariation", cross),
        Finding::property("Z1, Z2, Z3 in the basis", zid <= IDENTITY_TOL).ev("max_deviation", zid),
        Finding::property("[X,H]^p = [X^p,H^p]", brk <= IDENTITY_TOL).ev("max_deviation", brk),
        Finding::property("representation in the basis", res <= cx.tol).ev("residual_sup", res),
        Finding::property("second moments split", pyth <= cx.tol).ev("pythagoras_gap", pyth),
    ])
}

fn orthogonality_lemma(cx: &ExactContext) -> Out {
    let b = &cx.bundle;
    let r = orthogonality_report(&b.x, &b.h, &b.g)?;
    let mut out: Vec<Finding> = r
        .clauses
        .iter()
        .map(|c| Finding::invariant(format!("clause {}", c.clause), c.holds).ev("deviation", c.deviation).note(&c.note))
        .collect();
    let mut rng = cx.rng(SuiteKind::OrthogonalityLemma);
    let mut bad = None;
    for _ in 0..cx.samples {
        let seed: u64 = rng.random();
        let s = random_scenario(seed);
        let g = s.bundle()?.g;
        if !orthogonality_report(&s.x, &s.h, &g)?.all_clauses_hold() && bad.is_none() {
            bad = Some(format!("random scenario seed {seed}"));
        }
    }
    out.push(
        Finding::invariant("clauses hold on random pairs", bad.is_none())
            .ev("pairs", cx.samples as f64)
            .witness(bad),
    );
    out.push(
        Finding::property("compensated X and H are orthogonal in G", r.is_orthogonal)
            .ev("common_compensator_jump", r.common_compensator_jump)
            .witness(r.witness),
    );
    Ok(out)
}

fn counterexample(cx: &ExactContext) -> Out {
    let b = &cx.bundle;
    let r = orthogonality_report(&b.x, &b.h, &b.g)?;
    let w = r.witness.map(|w| format!("[Xbar,Hbar] drifts: {w}"));
    Ok(vec![
        Finding::invariant("X and H have no common jumps", r.disjoint_jumps),
        Finding::property("compensated X and H are orthogonal in G", r.is_orthogonal)
            .ev("common_compensator_jump", r.common_compensator_jump)
            .witness(w),
    ])
}

fn poisson_grid() -> Out {
    let mut eq_gap: f64 = 0.0;
    let mut formula_gap: f64 = 0.0;
    let mut last = f64::INFINITY;
    let mut decreasing = true;
    let mut non_orth = true;
    for n in GRID_STEPS {
        let s = bernoulli_grid(n, GRID_LAMBDA / n as f64);
        let f = s.bundle()?.base;
        let yp = compensator(&s.x, &f)?.compensator;
        let yyp = compensator(&quadratic_covariation(&s.x, &s.x), &f)?.compensator;
        eq_gap = eq_gap.max(yyp.max_abs_diff(&yp, f.space()));
        let at_one = quadratic_covariation(&yp, &yp).value(0, n);
        formula_gap = formula_gap.max((at_one - GRID_LAMBDA * GRID_LAMBDA / n as f64).abs());
        decreasing &= at_one < last;
        last = at_one;
        non_orth &= !orthogonality_report(&s.x, &s.x, &f)?.is_orthogonal;
    }
    Ok(vec![
        Finding::invariant("[Y,Y]^p = Y^p on every grid", eq_gap <= IDENTITY_TOL).ev("max_gap", eq_gap),
        Finding::invariant("[Y^p,Y^p]_1 = lambda^2/n", formula_gap <= IDENTITY_TOL).ev("max_gap", formula_gap),
        Finding::property("[Y^p,Y^p]_1 decreases to 0 under refinement", decreasing)
            .ev("finest_value", last)
            .ev("finest_steps", GRID_STEPS[GRID_STEPS.len() - 1] as f64),
        Finding::property("compensated Y is not orthogonal to itself", non_orth),
    ])
}

fn azema(cx: &ExactContext) -> Out {
    let rb = build_random_time_bundle(cx.tau(), &cx.bundle.f)?;
    let a = azema_report(&rb);
    let c = azema_cross_check(&rb)?;
    Ok(vec![
        Finding::property("Azema supermartingale in [0,1]", a.in_unit_interval),
        Finding::property("Azema supermartingale is an F-supermartingale", a.supermartingale_excess <= IDENTITY_TOL)
            .ev("supermartingale_excess", a.supermartingale_excess),
        Finding::property("compensator via Azema = direct G-compensator", c.max_gap <= cx.tol).ev("max_gap", c.max_gap),
    ])
}

fn f_stopping_times(x: &Process) -> Vec<StoppingTime> {
    (1..=x.horizon()).map(|k| StoppingTime::hitting_time(x, k as f64)).collect()
}

fn avoidance(cx: &ExactContext) -> Out {
    let rb = build_random_time_bundle(cx.tau(), &cx.bundle.f)?;
    let r = avoidance_check(&rb, &cx.bundle.x, &f_stopping_times(&cx.bundle.x))?;
    let mut out =
        vec![Finding::property("tau avoids F-stopping times and jumps of X", r.avoids).ev("max_charge", r.max_charge)];
    out.extend(r.conclusions.iter().map(|c| Finding::property(c.name.clone(), c.holds).ev("deviation", c.deviation)));
    Ok(out)
}

fn stopped_orthogonality(cx: &ExactContext) -> Out {
    let rb = build_random_time_bundle(cx.tau(), &cx.bundle.f)?;
    let s = orthogonality_suite(&rb, &cx.bundle.x)?;
    let mut out: Vec<Finding> = s
        .pairs
        .iter()
        .map(|p| {
            Finding::property(
                format!("{} orthogonal exactly when compensators share no jumps", p.pair),
                p.orthogonal == p.surrogate_condition,
            )
            .ev("orthogonal", f64::from(u8::from(p.orthogonal)))
            .ev("common_compensator_jump", p.common_compensator_jump)
            .witness(p.witness)
        })
        .collect();
    if let Some(first) = out.first_mut() {
        first.evidence.insert("multiplicity".into(), crate::report::Num(s.multiplicity as f64));
        first.note = Some(s.deferred.first().cloned().unwrap_or_else(|| DEFERRED_STRUCTURE_NOTE.to_string()));
    }
    Ok(out)
}
