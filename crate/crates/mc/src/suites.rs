use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::path::{ContinuousPath, PathModel, RandomTimeSpec};
use crate::report::McReport;
use crate::{derive_seed, McError, Result};

type Probe = fn(&ContinuousPath, f64) -> f64;

const TAG_POISSON: u64 = 1;
const TAG_AVOID: u64 = 2;
const TAG_AVOID_CONTROL: u64 = 3;
const TAG_AZEMA: u64 = 4;
const TAG_PROBE: u64 = 5;

/// One statistical check plus whether it is meant to pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub report: McReport,
    /// `false` for negative controls, which must fail.
    pub expect_pass: bool,
}

impl McCheck {
    fn positive(report: McReport) -> Self {
        Self { report, expect_pass: true }
    }

    fn control(report: McReport) -> Self {
        Self { report, expect_pass: false }
    }

    /// The check behaved as declared.
    pub fn as_declared(&self) -> bool {
        self.report.pass == self.expect_pass
    }
}

/// Per-path values in index order; paths whose random time cannot be built
/// are skipped, and `f` returning `None` marks the path as ineligible.
fn collect<F>(model: &PathModel, master: u64, n_paths: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&ContinuousPath) -> Option<f64> + Sync,
{
    let vals: Vec<Result<Option<f64>>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| match model.path(master, i) {
            Ok(p) => Ok(f(&p)),
            Err(McError::InsufficientEvents { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut out = Vec::with_capacity(n_paths);
    for v in vals {
        if let Some(x) = v? {
            out.push(x);
        }
    }
    Ok(out)
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths < 2 {
        return Err(McError::BadParameter(format!("n_paths must be at least 2, got {n_paths}")));
    }
    Ok(())
}

/// `E[(M_t - M_s) · probe(s)] = 0` estimated over `n_paths` paths.
#[allow(clippy::too_many_arguments)]
pub fn mc_martingale_test<M, P>(
    statistic: &str,
    model: &PathModel,
    m: M,
    probe: P,
    s: f64,
    t: f64,
    n_paths: usize,
    master: u64,
    z_max: f64,
) -> Result<McReport>
where
    M: Fn(&ContinuousPath, f64) -> f64 + Sync,
    P: Fn(&ContinuousPath, f64) -> f64 + Sync,
{
    check_paths(n_paths)?;
    if !(0.0 <= s && s < t && t <= model.t_real) {
        return Err(McError::BadParameter(format!("need 0 <= s < t <= T, got s={s}, t={t}")));
    }
    let vals = collect(model, master, n_paths, |p| Some((m(p, t) - m(p, s)) * probe(p, s)))?;
    Ok(McReport::from_samples(statistic, &vals, 0.0, z_max))
}

/// Compensator and second-moment checks for a plain Poisson process, plus
/// the uncompensated negative control.
pub fn poisson_suite(lambda: f64, t_real: f64, n_paths: usize, seed: u64, z_max: f64) -> Result<Vec<McCheck>> {
    check_paths(n_paths)?;
    let model = PathModel::new(lambda, t_real, RandomTimeSpec::IndependentExp { mu: 1.0 })?;
    let master = derive_seed(seed, TAG_POISSON);
    let comp = |p: &ContinuousPath, t: f64| p.count(t) as f64 - lambda * t;
    let (s, t) = (0.5 * t_real, t_real);
    let mut out = vec![McCheck::positive(mc_martingale_test(
        "poisson_compensator",
        &model,
        comp,
        |_, _| 1.0,
        s,
        t,
        n_paths,
        master,
        z_max,
    )?)];
    out.push(McCheck::positive(mc_martingale_test(
        "poisson_compensator_probe_past",
        &model,
        comp,
        |p, s| f64::from(u8::from(p.count(s) as f64 >= lambda * s)),
        s,
        t,
        n_paths,
        master,
        z_max,
    )?));
    let sq = collect(&model, master, n_paths, |p| Some(comp(p, t_real).powi(2)))?;
    out.push(McCheck::positive(McReport::from_samples("poisson_second_moment", &sq, lambda * t_real, z_max)));
    out.push(McCheck::control(mc_martingale_test(
        "uncompensated_control",
        &model,
        |p, t| p.count(t) as f64,
        |_, _| 1.0,
        s,
        t,
        n_paths,
        master,
        z_max,
    )?));
    Ok(out)
}

fn avoidance_window(mu: f64, t_real: f64) -> (f64, f64) {
    let s = (0.5 * (1.0f64).min(1.0 / mu)).min(0.25 * t_real);
    (s, 2.0 * s)
}

/// τ ~ Exp(μ) independent of X: avoidance is exact, `X - λt` and
/// `H - μ(t∧τ)` are G-martingales and `[Z¹,Z²]` vanishes pathwise. The
/// control with `τ = τ₁` must fail the avoidance check.
pub fn avoidance_mc_suite(
    lambda: f64,
    mu: f64,
    t_real: f64,
    n_paths: usize,
    seed: u64,
    z_max: f64,
) -> Result<Vec<McCheck>> {
    check_paths(n_paths)?;
    let model = PathModel::new(lambda, t_real, RandomTimeSpec::IndependentExp { mu })?;
    let master = derive_seed(seed, TAG_AVOID);
    let (s, t) = avoidance_window(mu, t_real);
    let alive = |p: &ContinuousPath, s: f64| f64::from(u8::from(p.tau > s));

    let charged = collect(&model, master, n_paths, |p| Some(f64::from(u8::from(p.tau_is_jump_time()))))?;
    let mut out = vec![McCheck::positive(McReport::from_samples("avoidance_fraction", &charged, 0.0, z_max))];
    out.push(McCheck::positive(mc_martingale_test(
        "z1_compensated_x",
        &model,
        |p, t| p.count(t) as f64 - lambda * t,
        alive,
        s,
        t,
        n_paths,
        master,
        z_max,
    )?));
    out.push(McCheck::positive(mc_martingale_test(
        "z2_compensated_h",
        &model,
        |p, t| p.h(t) - mu * t.min(p.tau),
        alive,
        s,
        t,
        n_paths,
        master,
        z_max,
    )?));
    // Compensators are continuous, so [Z¹,Z²]_T counts the X jumps at τ.
    let common = collect(&model, master, n_paths, |p| {
        Some(if p.tau <= p.horizon && p.tau_is_jump_time() { 1.0 } else { 0.0 })
    })?;
    out.push(McCheck::positive(McReport::from_samples("z1_z2_common_jumps", &common, 0.0, z_max)));

    let control = PathModel::new(lambda, t_real, RandomTimeSpec::FirstJump)?;
    let cmaster = derive_seed(seed, TAG_AVOID_CONTROL);
    let charged = collect(&control, cmaster, n_paths, |p| Some(f64::from(u8::from(p.tau_is_jump_time()))))?;
    out.push(McCheck::control(McReport::from_samples("avoidance_fraction_first_jump_control", &charged, 0.0, z_max)));
    Ok(out)
}

/// `H_t - μ(t∧τ)` for exponential τ: the G-compensator obtained from
/// `A_t = e^{-μt}` and `H^{p,F}_t = 1 - e^{-μt}`.
pub fn azema_exponential_check(
    lambda: f64,
    mu: f64,
    t_real: f64,
    n_paths: usize,
    seed: u64,
    z_max: f64,
) -> Result<Vec<McCheck>> {
    let model = PathModel::new(lambda, t_real, RandomTimeSpec::IndependentExp { mu })?;
    let master = derive_seed(seed, TAG_AZEMA);
    let (s, t) = avoidance_window(mu, t_real);
    let m = |p: &ContinuousPath, t: f64| p.h(t) - mu * t.min(p.tau);
    let probes: [(&str, Probe); 2] = [
        ("azema_exponential_alive", |p, s| f64::from(u8::from(p.tau > s))),
        ("azema_exponential_alive_x_quiet", |p, s| f64::from(u8::from(p.tau > s && p.count(s) == 0))),
    ];
    probes
        .iter()
        .map(|(name, probe)| mc_martingale_test(name, &model, m, probe, s, t, n_paths, master, z_max).map(McCheck::positive))
        .collect()
}

/// `p_G` and `p_F` at one ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReports {
    pub epsilon: f64,
    pub p_g: McReport,
    pub p_f: McReport,
}

/// Relative widening of the window's right edge; absorbs the rounding in
/// `2τ - τ₁`, which equals `τ₂` in exact arithmetic.
const ROUNDING_SLACK: f64 = 1e-12;

/// `p_G`: probability that X jumps in `(ρ-ε, ρ]` with `ρ = 2τ - τ₁`, over
/// paths where `ρ - ε ≥ max(τ, τ₁)` (so ρ is known in G by time `ρ - ε`) and
/// `ρ ≤ T`. `p_F`: probability of a jump in `(τ₁, τ₁+ε]`, expected
/// `1 - e^{-λε}`. For the midpoint time `p_G` is 1; for an independent
/// exponential τ it matches `p_F`.
pub fn predictable_jump_probe(
    lambda: f64,
    t_real: f64,
    epsilon: f64,
    spec: RandomTimeSpec,
    n_paths: usize,
    seed: u64,
    z_max: f64,
) -> Result<ProbeReports> {
    check_paths(n_paths)?;
    if !(epsilon > 0.0 && epsilon < t_real) {
        return Err(McError::BadParameter(format!("epsilon must lie in (0, T), got {epsilon}")));
    }
    let expected_g = match spec {
        RandomTimeSpec::Midpoint => 1.0,
        RandomTimeSpec::IndependentExp { .. } => -(-lambda * epsilon).exp_m1(),
        RandomTimeSpec::FirstJump => {
            return Err(McError::BadParameter("the first jump time announces nothing after itself".into()))
        }
    };
    let model = PathModel::new(lambda, t_real, spec)?;
    let master = derive_seed(seed, TAG_PROBE ^ epsilon.to_bits());
    let g_vals = collect(&model, master, n_paths, |p| {
        let t1 = *p.x_events.first()?;
        if p.tau <= t1 {
            return None;
        }
        let rho = 2.0 * p.tau - t1;
        let start = rho - epsilon;
        (start >= p.tau.max(t1) && rho <= p.horizon)
            .then(|| f64::from(u8::from(p.count_in(start, rho * (1.0 + ROUNDING_SLACK)) > 0)))
    })?;
    let f_vals: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = model.x_path(master, i);
            let t1 = *p.x_events.first()?;
            (t1 + epsilon <= p.horizon).then(|| f64::from(u8::from(p.count_in(t1, t1 + epsilon) > 0)))
        })
        .collect::<Vec<Option<f64>>>()
        .into_iter()
        .flatten()
        .collect();
    let expected_f = -(-lambda * epsilon).exp_m1();
    Ok(ProbeReports {
        epsilon,
        p_g: McReport::from_samples(format!("p_G(eps={epsilon})"), &g_vals, expected_g, z_max),
        p_f: McReport::from_samples(format!("p_F(eps={epsilon})"), &f_vals, expected_f, z_max),
    })
}
