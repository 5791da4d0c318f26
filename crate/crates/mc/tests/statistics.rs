use flab_mc::report::McReport;
use flab_mc::{
    avoidance_mc_suite, mc_martingale_test, predictable_jump_probe, sample_random_time, simulate_poisson, PathModel,
    RandomTimeSpec,
};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn poisson_count_mean_and_variance() {
    let counts: Vec<f64> = (0..20_000u64).map(|s| simulate_poisson(2.0, 5.0, s).unwrap().x_events.len() as f64).collect();
    let mean = McReport::from_samples("count", &counts, 10.0, 4.0);
    assert!(mean.pass, "{mean:?}");
    let sq: Vec<f64> = counts.iter().map(|c| (c - 10.0).powi(2)).collect();
    let var = McReport::from_samples("variance", &sq, 10.0, 4.0);
    assert!(var.pass, "{var:?}");
}

#[test]
fn exponential_survival() {
    let path = simulate_poisson(1.0, 1.0, 0).unwrap();
    let t = 0.7f64;
    let alive: Vec<f64> = (0..20_000u64)
        .map(|s| {
            let tau = sample_random_time(RandomTimeSpec::IndependentExp { mu: 1.0 }, &path, s).unwrap();
            f64::from(u8::from(tau > t))
        })
        .collect();
    assert!(McReport::from_samples("survival", &alive, (-t).exp(), 4.0).pass);
}

#[test]
fn martingale_test_controls() {
    let model = PathModel::new(1.0, 10.0, RandomTimeSpec::IndependentExp { mu: 1.0 }).unwrap();
    let comp = mc_martingale_test("comp", &model, |p, t| p.count(t) as f64 - t, |_, _| 1.0, 2.0, 6.0, 20_000, 8, 4.0)
        .unwrap();
    assert!(comp.pass, "{comp:?}");
    let raw = mc_martingale_test("raw", &model, |p, t| p.count(t) as f64, |_, _| 1.0, 2.0, 6.0, 20_000, 8, 4.0).unwrap();
    assert!(!raw.pass && raw.z_score > 50.0);
    assert!(mc_martingale_test("bad", &model, |_, _| 0.0, |_, _| 1.0, 6.0, 2.0, 10, 8, 4.0).is_err());
}

#[test]
fn large_mu_still_avoids() {
    let checks = avoidance_mc_suite(1.0, 50.0, 10.0, 20_000, 17, 4.0).unwrap();
    assert!(checks.iter().all(|c| c.as_declared()), "{checks:?}");
}

#[test]
fn reports_identical_across_thread_counts() {
    let run = |threads| {
        pool(threads).install(|| {
            (
                avoidance_mc_suite(1.0, 1.0, 10.0, 20_000, 99, 4.0).unwrap(),
                predictable_jump_probe(1.0, 10.0, 0.01, RandomTimeSpec::Midpoint, 20_000, 99, 4.0).unwrap(),
            )
        })
    };
    let (a1, p1) = run(1);
    let (a8, p8) = run(8);
    assert_eq!(serde_json::to_string(&a1).unwrap(), serde_json::to_string(&a8).unwrap());
    assert_eq!(serde_json::to_string(&p1).unwrap(), serde_json::to_string(&p8).unwrap());
}

#[test]
fn independent_time_gives_no_announcement() {
    let r = predictable_jump_probe(1.0, 10.0, 0.1, RandomTimeSpec::IndependentExp { mu: 1.0 }, 40_000, 3, 4.0).unwrap();
    assert!(r.p_g.pass && r.p_f.pass, "{r:?}");
    assert!(r.p_g.estimate < 0.2);
}
