//! Martingale representation by per-node weighted least squares.
//!
//! At every `(t, block of P_{t-1})` the one-step increments of the target are
//! regressed on those of the basis martingales under the block's conditional
//! distribution. A zero residual certifies the representation.

use nalgebra::{DMatrix, DVector};

use crate::calculus::{
    compensator, integral, predictable_covariation, quadratic_covariation, require_martingale,
};
use crate::enlargement::EnlargementBundle;
use crate::error::{Error, Result};
use crate::jump_measure::{CompensatorMeasure, Mark, MarkedMeasure, PredictableFunction, RandomMeasure};
use crate::space::{stop_process, Filtration, Process, StoppingTime, EXACT_TOL};

/// Pivots of the column-pivoted QR below this in absolute value end the
/// numerical rank.
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Integrands {
    /// `Y = Y_0 + K·M`
    Single(Process),
    /// `Y = Y_0 + W∗μ - W∗ν`
    Marks(PredictableFunction),
    /// `Y = Y_0 + Σ K^i·B^i` over a basis of three martingales.
    Triple([Process; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationSolution {
    pub integrands: Integrands,
    pub reconstruction: Process,
    pub residual: Process,
    /// Sup of `|residual|` over positive-probability atoms and all times.
    pub residual_sup: f64,
}

impl RepresentationSolution {
    fn new(integrands: Integrands, target: &Process, reconstruction: Process, f: &Filtration) -> Self {
        let residual = target - &reconstruction;
        let residual_sup = residual.sup_abs(f.space());
        Self { integrands, reconstruction, residual, residual_sup }
    }

    pub fn is_exact(&self) -> bool {
        self.residual_sup <= EXACT_TOL
    }
}

/// `Y_t = E[ξ | P_t]`.
pub fn martingale_closure(xi: &[f64], f: &Filtration) -> Process {
    assert_eq!(xi.len(), f.n_atoms(), "terminal variable length differs from space size");
    let cols: Vec<Vec<f64>> = (0..=f.horizon()).map(|t| f.cond_exp(xi, t)).collect();
    Process::from_fn(f.n_atoms(), f.horizon(), |a, t| cols[t][a])
}

/// Least-squares integrands, one predictable process per basis element.
fn node_least_squares(target: &Process, basis: &[&Process], f: &Filtration) -> Vec<Process> {
    let space = f.space();
    let (n, horizon) = (f.n_atoms(), f.horizon());
    let mut k: Vec<Process> = basis.iter().map(|_| Process::zeros(n, horizon)).collect();
    if basis.is_empty() {
        return k;
    }
    for t in 1..=horizon {
        for block in f.at(t - 1).blocks() {
            let rows: Vec<usize> = block.iter().copied().filter(|&a| !space.is_null(a)).collect();
            let mass: f64 = rows.iter().map(|&a| space.prob(a)).sum();
            if rows.is_empty() || mass == 0.0 {
                continue;
            }
            let w: Vec<f64> = rows.iter().map(|&a| (space.prob(a) / mass).sqrt()).collect();
            let design = DMatrix::from_fn(rows.len(), basis.len(), |i, j| w[i] * basis[j].increment(rows[i], t));
            let rhs = DVector::from_fn(rows.len(), |i, _| w[i] * target.increment(rows[i], t));
            let sol = basic_least_squares(design, &rhs);
            for (j, kj) in k.iter_mut().enumerate() {
                for &a in block {
                    kj.set(a, t, sol[j]);
                }
            }
        }
    }
    k
}

/// A least-squares solution of `d x ≈ b` from a column-pivoted QR, with the
/// columns past the numerical rank set to zero. The fitted values do not
/// depend on which solution is picked.
fn basic_least_squares(d: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = d.shape();
    let qr = d.col_piv_qr();
    let (q, r, p) = (qr.q(), qr.r(), qr.p());
    let qb = q.transpose() * b;
    let rank = (0..m.min(n)).take_while(|&i| r[(i, i)].abs() > RANK_CUTOFF).count();
    let mut x = DVector::zeros(n);
    for i in (0..rank).rev() {
        let s: f64 = (i + 1..rank).map(|j| r[(i, j)] * x[j]).sum();
        x[i] = (qb[i] - s) / r[(i, i)];
    }
    p.inv_permute_rows(&mut x);
    x
}

fn initial_values(y: &Process) -> Process {
    Process::from_fn(y.n_atoms(), y.horizon(), |a, _| y.value(a, 0))
}

fn require_in(y: &Process, g: &Filtration) -> Result<()> {
    g.check_shape(y)?;
    if let Some((t, block)) = y.adaptedness_violation(g) {
        return Err(Error::FiltrationMismatch { t, block });
    }
    require_martingale(y, g)
}

/// `Y = Y_0 + K·M` on `F`; exact whenever `F` branches at most binarily.
pub fn solve_prp(y: &Process, m: &Process, f: &Filtration) -> Result<RepresentationSolution> {
    require_martingale(y, f)?;
    require_martingale(m, f)?;
    let k = node_least_squares(y, &[m], f).pop().expect("one integrand");
    let rec = &initial_values(y) + &integral(&k, m);
    Ok(RepresentationSolution::new(Integrands::Single(k), y, rec, f))
}

/// `Y = Y_0 + W∗μ - W∗ν` on `G`.
pub fn solve_wrp(
    y: &Process,
    mu: &MarkedMeasure,
    nu: &CompensatorMeasure,
    g: &Filtration,
) -> Result<RepresentationSolution> {
    require_in(y, g)?;
    if mu.n_atoms() != g.n_atoms() || mu.horizon() != g.horizon() || nu.horizon() != g.horizon() {
        return Err(Error::ShapeMismatch("jump measure and filtration differ in shape".into()));
    }
    let cols = Mark::ALL.map(|m| &mu.count(m) - nu.compensator(m));
    let k = node_least_squares(y, &[&cols[0], &cols[1], &cols[2]], g);
    let [k10, k01, k11]: [Process; 3] = k.try_into().expect("three integrands");
    let w = PredictableFunction::new(k10, k01, k11);
    let rec = &(&initial_values(y) + &mu.integrate(&w)) - &nu.integrate(&w);
    Ok(RepresentationSolution::new(Integrands::Marks(w), y, rec, g))
}

/// `Y = Y_0 + K¹·Z¹ + K²·Z² + K³·Z³`; with `stop_at = τ`, represents `Y^τ`
/// against `((Z¹)^τ, Z², Z³)`.
pub fn solve_triple(
    y: &Process,
    z: &[Process; 3],
    g: &Filtration,
    stop_at: Option<&StoppingTime>,
) -> Result<RepresentationSolution> {
    require_in(y, g)?;
    for zi in z {
        g.check_shape(zi)?;
    }
    let (target, z1) = match stop_at {
        Some(tau) => (stop_process(y, tau, g)?, stop_process(&z[0], tau, g)?),
        None => (y.clone(), z[0].clone()),
    };
    let basis = [&z1, &z[1], &z[2]];
    let k = node_least_squares(&target, &basis, g);
    let mut rec = initial_values(&target);
    for (ki, bi) in k.iter().zip(basis) {
        rec = &rec + &integral(ki, bi);
    }
    let k: [Process; 3] = k.try_into().expect("three integrands");
    Ok(RepresentationSolution::new(Integrands::Triple(k), &target, rec, g))
}

/// Largest `|P(a ∩ b) - P(a)P(b)|` over blocks of `F_T` and `H_T`.
pub fn independence_gap(f: &Filtration, h: &Filtration) -> (f64, usize, usize) {
    let space = f.space();
    let (ft, ht) = (f.at(f.horizon()), h.at(h.horizon()));
    let mut worst = (0.0, 0, 0);
    for (i, a) in ft.blocks().iter().enumerate() {
        let pa = space.event_prob(a.iter().copied());
        for (j, b) in ht.blocks().iter().enumerate() {
            let pb = space.event_prob(b.iter().copied());
            let pab = space.event_prob(a.iter().copied().filter(|&x| ht.block_of(x) == j));
            let gap = (pab - pa * pb).abs();
            if gap > worst.0 {
                worst = (gap, i, j);
            }
        }
    }
    worst
}

/// Orthogonal decomposition on `(X̄, H̄, [X̄,H̄])` under independence of
/// `F` and the filtration of `H`, with the cross-checks that go with it.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentDecomposition {
    pub solution: RepresentationSolution,
    /// `X̄^G`, `H̄^G`, `[X̄^G, H̄^G]`.
    pub basis: [Process; 3],
    pub independence_gap: f64,
    /// Largest `|⟨B^i, B^j⟩|`, i ≠ j.
    pub max_cross_covariation: f64,
    /// Deviations of `Z¹, Z², Z³` from their expressions in the basis.
    pub z_identity_deviation: [f64; 3],
    /// `|[X,H]^p - [X^p, H^p]|`
    pub bracket_compensator_deviation: f64,
    /// `|E[(Y_T - Y_0)²] - Σ_i E[(K^i·B^i)_T²]|`
    pub pythagoras_gap: f64,
}

impl IndependentDecomposition {
    pub fn all_hold(&self) -> bool {
        self.solution.is_exact()
            && self.max_cross_covariation <= EXACT_TOL
            && self.z_identity_deviation.iter().all(|d| *d <= EXACT_TOL)
            && self.bracket_compensator_deviation <= EXACT_TOL
            && self.pythagoras_gap <= EXACT_TOL
    }
}

fn second_moment(p: &Process, f: &Filtration) -> f64 {
    let t = p.terminal();
    let init = p.at_time(0);
    let d: Vec<f64> = t.iter().zip(&init).map(|(a, b)| (a - b).powi(2)).collect();
    f.space().expectation(&d)
}

pub fn independent_decomposition(y: &Process, bundle: &EnlargementBundle) -> Result<IndependentDecomposition> {
    let (gap, fb, hb) = independence_gap(&bundle.f, &bundle.h_filtration);
    if gap > EXACT_TOL {
        return Err(Error::IndependenceViolated { f_block: fb, h_block: hb, gap });
    }
    let g = &bundle.g;
    require_in(y, g)?;
    let xc = compensator(&bundle.x, g)?;
    let hc = compensator(&bundle.h, g)?;
    let (xbar, hbar) = (xc.martingale_part.clone(), hc.martingale_part.clone());
    let cross = quadratic_covariation(&xbar, &hbar);
    let basis = [xbar, hbar, cross];

    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut max_cross: f64 = 0.0;
    for (i, j) in pairs {
        let pc = predictable_covariation(&basis[i], &basis[j], g)?;
        max_cross = max_cross.max(pc.sup_abs(g.space()));
    }

    let k = node_least_squares(y, &[&basis[0], &basis[1], &basis[2]], g);
    let parts: Vec<Process> = k.iter().zip(&basis).map(|(ki, bi)| integral(ki, bi)).collect();
    let mut rec = initial_values(y);
    for p in &parts {
        rec = &rec + p;
    }
    let pythagoras_gap =
        (second_moment(y, g) - parts.iter().map(|p| second_moment(p, g)).sum::<f64>()).abs();

    // Z in the basis: Z³ = B³ + ΔX^p·H̄ + ΔH^p·X̄, Z¹ = X̄ - Z³, Z² = H̄ - Z³.
    let dxp = xc.compensator.jumps();
    let dhp = hc.compensator.jumps();
    let z3_basis = &(&basis[2] + &integral(&dxp, &basis[1])) + &integral(&dhp, &basis[0]);
    let z1_basis = &basis[0] - &z3_basis;
    let z2_basis = &basis[1] - &z3_basis;
    let zs = crate::jump_measure::fundamental_martingales(&bundle.x, &bundle.h, g)?;
    let space = g.space();
    let z_identity_deviation = [
        zs.z[0].max_abs_diff(&z1_basis, space),
        zs.z[1].max_abs_diff(&z2_basis, space),
        zs.z[2].max_abs_diff(&z3_basis, space),
    ];
    let bracket_p = compensator(&quadratic_covariation(&bundle.x, &bundle.h), g)?.compensator;
    let comp_bracket = quadratic_covariation(&xc.compensator, &hc.compensator);
    let bracket_compensator_deviation = bracket_p.max_abs_diff(&comp_bracket, space);

    let k: [Process; 3] = k.try_into().expect("three integrands");
    let solution = RepresentationSolution::new(Integrands::Triple(k), y, rec, g);
    Ok(IndependentDecomposition {
        solution,
        basis,
        independence_gap: gap,
        max_cross_covariation: max_cross,
        z_identity_deviation,
        bracket_compensator_deviation,
        pythagoras_gap,
    })
}

/// `max_{t, B ∈ P_{t-1}} (#positive-probability children of B in P_t) - 1`,
/// floored at 0.
pub fn multiplicity(f: &Filtration) -> usize {
    critical_node(f).map_or(0, |(_, _, m)| m)
}

/// `(t, block, branching - 1)` of the first node with maximal branching.
fn critical_node(f: &Filtration) -> Option<(usize, usize, usize)> {
    let mut best: Option<(usize, usize, usize)> = None;
    for t in 1..=f.horizon() {
        for b in 0..f.at(t - 1).n_blocks() {
            let m = positive_children(f, t, b).len().saturating_sub(1);
            if best.is_none_or(|(_, _, cur)| m > cur) {
                best = Some((t, b, m));
            }
        }
    }
    best
}

fn positive_children(f: &Filtration, t: usize, b: usize) -> Vec<(Vec<usize>, f64)> {
    let space = f.space();
    f.at(t - 1)
        .children(b, f.at(t))
        .into_iter()
        .map(|c| {
            let atoms = f.at(t).block(c).to_vec();
            let p = space.event_prob(atoms.iter().copied());
            (atoms, p)
        })
        .filter(|(_, p)| *p > 0.0)
        .collect()
}

/// Explicit orthogonal spanning family certifying [`multiplicity`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityCertificate {
    pub multiplicity: usize,
    /// Node with maximal branching.
    pub critical_node: Option<(usize, usize)>,
    /// Pairwise orthogonal martingales built by per-node Gram–Schmidt.
    pub basis: Vec<Process>,
    /// Largest `|⟨M^i, M^j⟩|`, i ≠ j.
    pub max_cross_covariation: f64,
    /// Worst residual when representing the supplied test martingales.
    pub spanning_residual: f64,
    /// Residual of the last basis element against the others; positive
    /// means fewer martingales cannot span.
    pub minimality_residual: f64,
}

impl MultiplicityCertificate {
    pub fn holds(&self) -> bool {
        self.max_cross_covariation <= EXACT_TOL
            && self.spanning_residual <= EXACT_TOL
            && (self.multiplicity == 0 || self.minimality_residual > EXACT_TOL)
    }
}

/// Builds `multiplicity(F)` pairwise orthogonal martingales whose one-step
/// increments span every node's zero-mean space, then checks they represent
/// each of `tests` and that one fewer does not suffice.
#[allow(clippy::needless_range_loop)]
pub fn multiplicity_certificate(f: &Filtration, tests: &[Process]) -> Result<MultiplicityCertificate> {
    let m = multiplicity(f);
    let (n, horizon) = (f.n_atoms(), f.horizon());
    let mut incs = vec![vec![vec![0.0; horizon + 1]; n]; m];
    for t in 1..=horizon {
        for b in 0..f.at(t - 1).n_blocks() {
            let kids = positive_children(f, t, b);
            let total: f64 = kids.iter().map(|(_, p)| p).sum();
            if kids.len() < 2 {
                continue;
            }
            let q: Vec<f64> = kids.iter().map(|(_, p)| p / total).collect();
            let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).zip(&q).map(|((a, b), w)| a * b * w).sum::<f64>();
            let mut ortho: Vec<Vec<f64>> = Vec::new();
            for (j, &qj) in q.iter().enumerate() {
                let mut v: Vec<f64> = (0..kids.len()).map(|i| f64::from(u8::from(i == j)) - qj).collect();
                for u in &ortho {
                    let c = dot(&v, u);
                    v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= c * ui);
                }
                let norm = dot(&v, &v).sqrt();
                if norm > RANK_CUTOFF.sqrt() {
                    v.iter_mut().for_each(|vi| *vi /= norm);
                    ortho.push(v);
                }
            }
            for (k, vec) in ortho.iter().enumerate() {
                for ((atoms, _), val) in kids.iter().zip(vec) {
                    for &a in atoms {
                        incs[k][a][t] = *val;
                    }
                }
            }
        }
    }
    let basis: Vec<Process> = incs
        .iter()
        .map(|inc| Process::from_increments(n, horizon, |_| 0.0, |a, t| inc[a][t]))
        .collect();

    let mut max_cross: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let pc = predictable_covariation(&basis[i], &basis[j], f)?;
            max_cross = max_cross.max(pc.sup_abs(f.space()));
        }
    }
    let refs: Vec<&Process> = basis.iter().collect();
    let mut spanning_residual: f64 = 0.0;
    for y in tests {
        require_martingale(y, f)?;
        let k = node_least_squares(y, &refs, f);
        let mut rec = initial_values(y);
        for (ki, bi) in k.iter().zip(&basis) {
            rec = &rec + &integral(ki, bi);
        }
        spanning_residual = spanning_residual.max(y.max_abs_diff(&rec, f.space()));
    }
    let minimality_residual = match basis.split_last() {
        Some((last, rest)) => {
            let rest: Vec<&Process> = rest.iter().collect();
            let k = node_least_squares(last, &rest, f);
            let mut rec = Process::zeros(n, horizon);
            for (ki, bi) in k.iter().zip(&rest) {
                rec = &rec + &integral(ki, bi);
            }
            last.max_abs_diff(&rec, f.space())
        }
        None => 0.0,
    };
    Ok(MultiplicityCertificate {
        multiplicity: m,
        critical_node: critical_node(f).map(|(t, b, _)| (t, b)),
        basis,
        max_cross_covariation: max_cross,
        spanning_residual,
        minimality_residual,
    })
}
