//! Discrete-time stochastic calculus on a finite filtration.
//!
//! "Predictable at t" means measurable w.r.t. `P_{t-1}`. The compensator of an
//! increasing process is the sum of its one-step conditional increments, which
//! is the discrete Doob decomposition. `⟨Y,Z⟩` is defined as the compensator of
//! `[Y,Z]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Filtration, Process, EXACT_TOL};

/// An increasing process, its compensator and the compensated martingale.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorPair {
    pub raw: Process,
    pub compensator: Process,
    pub martingale_part: Process,
}

/// `Σ_{s<=t} E[ΔA_s | P_{s-1}]`, starting at 0.
///
/// `a` need not be adapted: for a raw increasing process this is its dual
/// predictable projection onto the filtration.
pub fn predictable_drift(a: &Process, filtration: &Filtration) -> Process {
    let n = a.n_atoms();
    let horizon = a.horizon();
    let mut drift = vec![vec![0.0; horizon + 1]; n];
    for t in 1..=horizon {
        let inc = filtration.cond_exp(&a.increments_at(t), t - 1);
        for (atom, row) in drift.iter_mut().enumerate() {
            row[t] = inc[atom];
        }
    }
    Process::from_increments(n, horizon, |_| 0.0, |atom, t| drift[atom][t])
}

/// Dual predictable projection of an adapted increasing process.
pub fn compensator(a: &Process, filtration: &Filtration) -> Result<CompensatorPair> {
    filtration.check_shape(a)?;
    if let Some((t, block)) = a.adaptedness_violation(filtration) {
        return Err(Error::NotAdapted { t, block });
    }
    a.check_increasing()?;
    let comp = predictable_drift(a, filtration);
    let martingale_part = a - &comp;
    Ok(CompensatorPair { raw: a.clone(), compensator: comp, martingale_part })
}

/// `[Y,Z]_t = Σ_{s<=t} ΔY_s ΔZ_s` (no continuous parts on a finite grid).
pub fn quadratic_covariation(y: &Process, z: &Process) -> Process {
    assert!(y.same_shape(z), "quadratic covariation of processes with different shapes");
    Process::from_increments(y.n_atoms(), y.horizon(), |_| 0.0, |a, t| y.increment(a, t) * z.increment(a, t))
}

/// `⟨Y,Z⟩`: the compensator of `[Y,Z]`. Both inputs must be martingales.
pub fn predictable_covariation(y: &Process, z: &Process, filtration: &Filtration) -> Result<Process> {
    require_martingale(y, filtration)?;
    require_martingale(z, filtration)?;
    Ok(predictable_drift(&quadratic_covariation(y, z), filtration))
}

/// `(K·M)_t = Σ_{s<=t} K_s ΔM_s` for a predictable integrand `K`.
pub fn stochastic_integral(k: &Process, m: &Process, filtration: &Filtration) -> Result<Process> {
    filtration.check_shape(k)?;
    filtration.check_shape(m)?;
    if let Some((t, block)) = k.predictability_violation(filtration) {
        return Err(Error::NotPredictable { t, block });
    }
    Ok(integral(k, m))
}

/// Stieltjes sum without the predictability check.
pub(crate) fn integral(k: &Process, m: &Process) -> Process {
    Process::from_increments(m.n_atoms(), m.horizon(), |_| 0.0, |a, t| k.value(a, t) * m.increment(a, t))
}

/// First location where a check failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: usize,
    pub block: usize,
    pub value: f64,
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t={} block={} value={:e}", self.t, self.block, self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleCheck {
    pub adapted: bool,
    /// Largest |E[ΔM_t | P_{t-1}]| over positive-probability blocks.
    pub max_drift: f64,
    pub witness: Option<Witness>,
}

impl MartingaleCheck {
    pub fn is_martingale(&self) -> bool {
        self.adapted && self.witness.is_none()
    }
}

/// Exact martingale test: adapted and `E[ΔM_t | P_{t-1}] = 0` within 1e-9.
pub fn is_martingale(m: &Process, filtration: &Filtration) -> MartingaleCheck {
    martingale_check_tol(m, filtration, EXACT_TOL)
}

pub(crate) fn martingale_check_tol(m: &Process, filtration: &Filtration, tol: f64) -> MartingaleCheck {
    if filtration.check_shape(m).is_err() {
        return MartingaleCheck { adapted: false, max_drift: f64::NAN, witness: None };
    }
    if let Some((t, block)) = m.adaptedness_violation(filtration) {
        let vals: Vec<f64> = filtration.at(t).block(block).iter().map(|&a| m.value(a, t)).collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        return MartingaleCheck { adapted: false, max_drift: f64::NAN, witness: Some(Witness { t, block, value: spread }) };
    }
    let space = filtration.space();
    let mut max_drift: f64 = 0.0;
    let mut witness = None;
    for t in 1..=m.horizon() {
        let prev = filtration.at(t - 1);
        for (b, block) in prev.blocks().iter().enumerate() {
            let mass: f64 = block.iter().map(|&a| space.prob(a)).sum();
            if mass == 0.0 {
                continue;
            }
            let drift = block.iter().map(|&a| space.prob(a) * m.increment(a, t)).sum::<f64>() / mass;
            if drift.abs() > max_drift {
                max_drift = drift.abs();
            }
            if drift.abs() > tol && witness.is_none() {
                witness = Some(Witness { t, block: b, value: drift });
            }
        }
    }
    MartingaleCheck { adapted: true, max_drift, witness }
}

/// `Ok` iff `m` passes [`is_martingale`].
pub fn require_martingale(m: &Process, filtration: &Filtration) -> Result<()> {
    filtration.check_shape(m)?;
    let check = is_martingale(m, filtration);
    match check.witness {
        None if check.adapted => Ok(()),
        Some(w) if check.adapted => Err(Error::NotMartingale { t: w.t, block: w.block, drift: w.value }),
        Some(w) => Err(Error::NotAdapted { t: w.t, block: w.block }),
        None => unreachable!("non-adapted check always carries a witness"),
    }
}

/// One evaluated statement of the orthogonality lemma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub holds: bool,
    /// Largest deviation found while evaluating the clause (0 for pure logic).
    pub deviation: f64,
    pub note: String,
}

/// Orthogonality of two compensated point processes `Ȳ = Y - Y^p`, `Z̄ = Z - Z^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityReport {
    pub y_comp: CompensatorPair,
    pub z_comp: CompensatorPair,
    /// `[Y,Z]`
    pub bracket_raw: Process,
    /// `[Y^p,Z^p]`
    pub bracket_compensators: Process,
    /// `[Ȳ,Z̄]`
    pub bracket_bar: Process,
    pub is_orthogonal: bool,
    pub witness: Option<Witness>,
    /// ΔYΔZ ≡ 0
    pub disjoint_jumps: bool,
    /// sup |ΔY^p ΔZ^p|
    pub common_compensator_jump: f64,
    pub clauses: Vec<ClauseCheck>,
}

impl OrthogonalityReport {
    pub fn all_clauses_hold(&self) -> bool {
        self.clauses.iter().all(|c| c.holds)
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseCheck> {
        self.clauses.iter().find(|c| c.clause == name)
    }
}

/// Evaluates the five clauses of the orthogonality lemma for two point
/// processes plus the bracket expansion
/// `[Ȳ,Z̄] = [Y,Z] - [Y^p,Z] - [Y,Z^p] + [Y^p,Z^p]`.
pub fn orthogonality_report(y: &Process, z: &Process, filtration: &Filtration) -> Result<OrthogonalityReport> {
    y.check_point_process()?;
    z.check_point_process()?;
    let space = filtration.space();
    let yc = compensator(y, filtration)?;
    let zc = compensator(z, filtration)?;
    let (yp, zp) = (&yc.compensator, &zc.compensator);
    let (ybar, zbar) = (&yc.martingale_part, &zc.martingale_part);

    let bracket_raw = quadratic_covariation(y, z);
    let yp_z = quadratic_covariation(yp, z);
    let y_zp = quadratic_covariation(y, zp);
    let yp_zp = quadratic_covariation(yp, zp);
    let bracket_bar = quadratic_covariation(ybar, zbar);

    let mut clauses = Vec::new();

    // (i)
    let increasing = [&yp_z, &y_zp, &yp_zp].iter().all(|p| p.check_increasing().is_ok());
    let finite = [&yp_z, &y_zp, &yp_zp].iter().all(|p| p.values().iter().all(|v| v.is_finite()));
    clauses.push(ClauseCheck {
        clause: "i".into(),
        holds: increasing && finite,
        deviation: 0.0,
        note: "[Y^p,Z], [Y,Z^p], [Y^p,Z^p] increasing and bounded".into(),
    });

    // (ii)
    let c1 = predictable_drift(&yp_z, filtration);
    let c2 = predictable_drift(&y_zp, filtration);
    let dev_ii = c1.max_abs_diff(&yp_zp, space).max(c2.max_abs_diff(&yp_zp, space));
    clauses.push(ClauseCheck {
        clause: "ii".into(),
        holds: dev_ii <= EXACT_TOL,
        deviation: dev_ii,
        note: "[Y^p,Z] and [Y,Z^p] are associated with compensator [Y^p,Z^p]".into(),
    });

    // (iii)
    let mcheck = is_martingale(&bracket_bar, filtration);
    let orthogonal = mcheck.is_martingale();
    let bracket_comp = predictable_drift(&bracket_raw, filtration);
    let dev_iii = bracket_comp.max_abs_diff(&yp_zp, space);
    let rhs_iii = dev_iii <= EXACT_TOL;
    clauses.push(ClauseCheck {
        clause: "iii".into(),
        holds: orthogonal == rhs_iii,
        deviation: dev_iii,
        note: format!("[Ȳ,Z̄] martingale = {orthogonal}, [Y,Z]^p = [Y^p,Z^p] = {rhs_iii}"),
    });

    // (iv), (v)
    let disjoint_jumps = bracket_raw.sup_abs(space) == 0.0;
    let common = Process::from_fn(y.n_atoms(), y.horizon(), |a, t| yp.increment(a, t) * zp.increment(a, t));
    let common_compensator_jump = common.sup_abs(space);
    let bar_sup = bracket_bar.sup_abs(space);
    if disjoint_jumps {
        let bar_zero = bar_sup <= EXACT_TOL;
        clauses.push(ClauseCheck {
            clause: "iv".into(),
            holds: orthogonal == bar_zero,
            deviation: bar_sup,
            note: format!("martingale = {orthogonal}, [Ȳ,Z̄] ≡ 0 = {bar_zero}"),
        });
        let no_common = common_compensator_jump <= EXACT_TOL;
        clauses.push(ClauseCheck {
            clause: "v".into(),
            holds: orthogonal == no_common,
            deviation: common_compensator_jump,
            note: format!("martingale = {orthogonal}, ΔY^pΔZ^p ≡ 0 = {no_common}"),
        });
    } else {
        for name in ["iv", "v"] {
            clauses.push(ClauseCheck {
                clause: name.into(),
                holds: true,
                deviation: 0.0,
                note: "vacuous: Y and Z have common jumps".into(),
            });
        }
    }

    let expanded = &(&(&bracket_raw - &yp_z) - &y_zp) + &yp_zp;
    let dev_exp = expanded.max_abs_diff_all(&bracket_bar);
    clauses.push(ClauseCheck {
        clause: "bracket_expansion".into(),
        holds: dev_exp <= 1e-12,
        deviation: dev_exp,
        note: "[Ȳ,Z̄] = [Y,Z] - [Y^p,Z] - [Y,Z^p] + [Y^p,Z^p] atomwise".into(),
    });

    Ok(OrthogonalityReport {
        bracket_raw,
        bracket_compensators: yp_zp,
        bracket_bar,
        is_orthogonal: orthogonal,
        witness: mcheck.witness,
        disjoint_jumps,
        common_compensator_jump,
        clauses,
        y_comp: yc,
        z_comp: zc,
    })
}

/// `Y_-·Z + Z_-·Y + [Y,Z]`, the right-hand side of integration by parts for
/// `YZ - Y_0 Z_0`.
pub fn integration_by_parts_rhs(y: &Process, z: &Process) -> Process {
    let a = integral(&y.left_limit(), z);
    let b = integral(&z.left_limit(), y);
    &(&a + &b) + &quadratic_covariation(y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_space, FiniteProbabilitySpace, Partition};
    use std::sync::Arc;

    fn a2() -> (Filtration, Process, Process) {
        let s = Arc::new(build_space(&[0.3, 0.5, 0.2]).unwrap());
        let f = Filtration::new(s, vec![Partition::trivial(3), Partition::finest(3)]).unwrap();
        let y = Process::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let z = Process::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        (f, y, z)
    }

    #[test]
    fn deterministic_increasing_process_is_its_own_compensator() {
        let s = Arc::new(FiniteProbabilitySpace::uniform(3).unwrap());
        let f = Filtration::trivial(s, 3).unwrap();
        let a = Process::deterministic(3, &[0.0, 1.0, 1.5, 4.0]);
        let pair = compensator(&a, &f).unwrap();
        assert_eq!(pair.compensator, a);
        assert!(pair.martingale_part.sup_abs(f.space()) == 0.0);
    }

    #[test]
    fn compensator_a2() {
        let (f, y, _) = a2();
        let pair = compensator(&y, &f).unwrap();
        for a in 0..3 {
            assert!((pair.compensator.value(a, 1) - 0.3).abs() < 1e-15);
        }
        assert!(is_martingale(&pair.martingale_part, &f).is_martingale());
        assert!(pair.compensator.is_predictable(&f));
    }

    #[test]
    fn compensator_errors() {
        let (f, y, _) = a2();
        let dec = &y * -1.0;
        assert!(matches!(compensator(&dec, &f), Err(Error::NotIncreasing { .. })));
        let g = Filtration::trivial(f.space_arc().clone(), 1).unwrap();
        assert!(matches!(compensator(&y, &g), Err(Error::NotAdapted { t: 1, .. })));
    }

    #[test]
    fn uncompensated_point_process_is_not_a_martingale() {
        let (f, y, _) = a2();
        let check = is_martingale(&y, &f);
        assert!(!check.is_martingale());
        let w = check.witness.unwrap();
        assert_eq!(w.t, 1);
        assert!((w.value - 0.3).abs() < 1e-15);
    }

    #[test]
    fn point_process_bracket_is_itself() {
        let (_, y, z) = a2();
        assert_eq!(quadratic_covariation(&y, &y), y);
        assert_eq!(quadratic_covariation(&y, &z), Process::zeros(3, 1));
    }

    #[test]
    fn integral_with_constant_integrands() {
        let (f, y, _) = a2();
        let m = compensator(&y, &f).unwrap().martingale_part;
        let one = Process::deterministic(3, &[1.0, 1.0]);
        let zero = Process::zeros(3, 1);
        let m0 = Process::from_fn(3, 1, |a, _| m.value(a, 0));
        assert_eq!(stochastic_integral(&one, &m, &f).unwrap(), &m - &m0);
        assert_eq!(stochastic_integral(&zero, &m, &f).unwrap(), zero);
        // y itself is not F_0-measurable at t=1
        assert!(matches!(stochastic_integral(&y, &m, &f), Err(Error::NotPredictable { t: 1, .. })));
    }

    #[test]
    fn predictable_covariation_of_zero_and_non_martingale() {
        let (f, y, _) = a2();
        let zero = Process::zeros(3, 1);
        assert_eq!(predictable_covariation(&zero, &zero, &f).unwrap(), zero);
        assert!(matches!(predictable_covariation(&y, &zero, &f), Err(Error::NotMartingale { .. })));
    }

    #[test]
    fn counterexample_common_compensator_jump() {
        let (f, y, z) = a2();
        let r = orthogonality_report(&y, &z, &f).unwrap();
        assert!(r.disjoint_jumps);
        assert!(!r.is_orthogonal);
        assert!((r.common_compensator_jump - 0.15).abs() < 1e-12);
        assert!(r.all_clauses_hold(), "{:?}", r.clauses);
        // [Ȳ,Z̄] is not a martingale; its drift is the common compensator jump
        assert!(!is_martingale(&r.bracket_bar, &f).is_martingale());
    }

    #[test]
    fn orthogonality_rejects_non_point_process() {
        let (f, y, _) = a2();
        let two = &y * 2.0;
        assert!(matches!(orthogonality_report(&two, &y, &f), Err(Error::NotPointProcess { .. })));
    }
}
