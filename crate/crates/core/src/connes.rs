//! The Connes pseudo-metric `d(φ, ψ) = sup{|φ(a) - ψ(a)| : ‖[D, a]‖ ≤ 1}`
//! on states of the truncated algebra.
//!
//! The solver maximizes the linear objective over the commutator-norm unit
//! ball by projected supergradient ascent on the quotient by constants:
//! the objective gradient is the fixed weight difference, feasibility is
//! restored by radial rescaling (exact along rays from 0 because the
//! constraint is a seminorm ball), and a tangent correction from the top
//! singular pair of the commutator unsticks the iteration when plain
//! ascent stalls on the curved boundary. Every reported value is a
//! certified lower bound: it is the objective at an explicit witness whose
//! commutator norm is re-verified with the standalone norm routine.

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cantor::{first_disagreement, CantorPoint, GammaParam};
use crate::error::{Error, Result};
use crate::gns::{eigenvalue_condition_check, AlgebraElement, DiracSpec, TruncatedTriple};
use crate::walsh;

/// A state on the level-`N` algebra: probability weights over the `2^N` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    level: usize,
    weights: Vec<f64>,
}

impl State {
    /// Validates nonnegativity and unit mass (to `1e-12`).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if !weights.len().is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "state needs 2^N atom weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidState("state weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state weights sum to {total}, want 1")));
        }
        let level = weights.len().trailing_zeros() as usize;
        Ok(State { level, weights })
    }

    /// The point evaluation `χ_x` restricted to level `level`: the unit
    /// mass on the atom containing `x`.
    pub fn point(level: usize, x: &CantorPoint) -> State {
        let mut weights = vec![0.0; 1 << level];
        weights[x.atom_index(level) as usize] = 1.0;
        State { level, weights }
    }

    pub fn uniform(level: usize) -> State {
        let n = 1usize << level;
        State { level, weights: vec![1.0 / n as f64; n] }
    }

    /// A random state with strictly positive weights, for sampling tests.
    pub fn random<R: Rng>(level: usize, rng: &mut R) -> State {
        let n = 1usize << level;
        let mut weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        State { level, weights }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `φ(a) = Σ_w φ_w a(w)`.
    pub fn evaluate(&self, a: &AlgebraElement) -> Result<f64> {
        let lifted = a.lift(self.level)?;
        Ok(self.weights.iter().zip(lifted.values()).map(|(w, v)| w * v).sum())
    }

    /// Atom index when the state is a point mass, else `None`.
    pub fn as_point_atom(&self) -> Option<usize> {
        let mut atom = None;
        for (w, &x) in self.weights.iter().enumerate() {
            if x != 0.0 {
                if x == 1.0 && atom.is_none() {
                    atom = Some(w);
                } else {
                    return None;
                }
            }
        }
        atom
    }
}

/// A certified distance computation: `value` is the objective at
/// `witness` (a feasible element up to `1e-8` on its commutator norm) and
/// `upper_bound` brackets the supremum from above.
#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub value: f64,
    pub witness: AlgebraElement,
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Ascent controls; the defaults implement the documented schedule.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Terminate after this many consecutive iterations whose relative
    /// objective improvement stays below `stall_tolerance`.
    pub stall_window: usize,
    pub stall_tolerance: f64,
    pub seed: u64,
    /// Resume from a known feasible element (used by nested-truncation scans).
    pub warm_start: Option<AlgebraElement>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 20_000,
            stall_window: 50,
            stall_tolerance: 1e-10,
            seed: 0,
            warm_start: None,
        }
    }
}

/// Commutator-norm evaluations inside the ascent loop: power iteration in
/// operator form, warm-started with the previous right singular vector
/// since consecutive iterates differ little.
struct NormEngine<'a> {
    triple: &'a TruncatedTriple,
    scratch: Vec<f64>,
    out: Vec<f64>,
    warm: Option<Vec<f64>>,
}

impl<'a> NormEngine<'a> {
    fn new(triple: &'a TruncatedTriple) -> Self {
        let dim = triple.atom_count();
        NormEngine { triple, scratch: vec![0.0; dim], out: vec![0.0; dim], warm: None }
    }

    fn eval(&mut self, a: &AlgebraElement) -> f64 {
        let dim = self.triple.atom_count();
        let (triple, scratch) = (self.triple, &mut self.scratch);
        let r = crate::numerics::skew_operator_norm(
            dim,
            |v, out| triple.commutator_apply(a, v, out, scratch),
            1e-10,
            800,
            0x5CA7,
            self.warm.as_deref(),
        );
        self.warm = Some(r.right_vector.clone());
        r.sigma
    }

    /// Top singular triple `(σ, u, v)` of the current commutator.
    fn singular_pair(&mut self, a: &AlgebraElement) -> (f64, Vec<f64>, Vec<f64>) {
        let sigma = self.eval(a);
        let v = self.warm.clone().unwrap_or_else(|| vec![0.0; self.triple.atom_count()]);
        self.triple.commutator_apply(a, &v, &mut self.out, &mut self.scratch);
        let u: Vec<f64> =
            if sigma > 0.0 { self.out.iter().map(|x| x / sigma).collect() } else { self.out.clone() };
        (sigma, u, v)
    }
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The element `γ^{m-1} s_m` whose commutator norm is exactly 1 and whose
/// gap between point states disagreeing first at `m` is `2 γ^{m-1}`.
pub fn lower_bound_witness(gamma: GammaParam, m: usize, level: usize) -> AlgebraElement {
    assert!(m >= 1 && m <= level, "witness index {m} out of range 1..={level}");
    let scale = gamma.value().powi(m as i32 - 1);
    let s = AlgebraElement::symmetry(level, m);
    AlgebraElement::from_values(s.values().iter().map(|v| v * scale).collect())
        .expect("power-of-two length is preserved")
}

/// `2 γ^{m-1} / (1-γ)²`, the analytic upper bound for point states.
pub fn analytic_point_upper(gamma: GammaParam, m: usize) -> f64 {
    let g = gamma.value();
    2.0 * g.powi(m as i32 - 1) / ((1.0 - g) * (1.0 - g))
}

/// Full sum `Σ β_n` for the spec: closed form `(1-γ)^{-2}` in the
/// geometric case, the partial sum up to the truncation level otherwise
/// (exact there, because `π_N` is the identity at level `N`).
fn beta_series_bound(triple: &TruncatedTriple) -> Result<f64> {
    match triple.spec() {
        DiracSpec::Geometric(g) => {
            let one_minus = 1.0 - g.value();
            Ok(1.0 / (one_minus * one_minus))
        }
        other => eigenvalue_condition_check(other, triple.level()),
    }
}

fn crude_upper_bound(triple: &TruncatedTriple, c: &[f64]) -> Result<f64> {
    let l1: f64 = c.iter().map(|x| x.abs()).sum();
    Ok(l1 * beta_series_bound(triple)?)
}

/// Supremum certificate for `d(φ, ψ)` on the truncated triple.
///
/// Returns a feasible witness (certified lower bound), the bracketing
/// upper bound (analytic for geometric point states, `‖φ-ψ‖₁ Σβ`
/// otherwise) and the iteration diagnostics. Deterministic for fixed
/// inputs and seed.
pub fn connes_distance(
    triple: &TruncatedTriple,
    phi: &State,
    psi: &State,
    opts: &SolverOptions,
) -> Result<DistanceResult> {
    let level = triple.level();
    if phi.level() != level || psi.level() != level {
        return Err(Error::DimensionMismatch(format!(
            "states at levels {}/{} on a level-{level} triple",
            phi.level(),
            psi.level()
        )));
    }
    let dim = triple.atom_count();
    let c: Vec<f64> = phi.weights().iter().zip(psi.weights()).map(|(a, b)| a - b).collect();

    if c.iter().all(|&x| x == 0.0) {
        return Ok(DistanceResult {
            value: 0.0,
            witness: AlgebraElement::constant(level, 0.0),
            upper_bound: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    // analytic bracket for geometric point states, crude ‖φ-ψ‖₁·Σβ otherwise
    let point_pair = match (phi.as_point_atom(), psi.as_point_atom()) {
        (Some(a), Some(b)) if a != b => Some((a, b)),
        _ => None,
    };
    let geometric_gamma = match triple.spec() {
        DiracSpec::Geometric(g) => Some(*g),
        _ => None,
    };
    let mut upper = crude_upper_bound(triple, &c)?;
    let mut start: Option<Vec<f64>> = None;
    if let (Some((a, b)), Some(g)) = (point_pair, geometric_gamma) {
        let m = (a ^ b).trailing_zeros() as usize + 1;
        upper = analytic_point_upper(g, m);
        // orient the witness toward the objective half-space
        let mut w = lower_bound_witness(g, m, level).values().to_vec();
        if dot(&c, &w) < 0.0 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        start = Some(w);
    }

    let mut engine = NormEngine::new(triple);

    // starting element: warm start, the paper's witness, or the centered
    // objective direction rescaled onto the constraint boundary
    let mut a = match &opts.warm_start {
        Some(w) => {
            let mut v = w.lift(level)?.values().to_vec();
            center(&mut v);
            v
        }
        None => start.unwrap_or_else(|| {
            let mut v = c.clone();
            center(&mut v);
            v
        }),
    };
    {
        let elem = AlgebraElement::from_values(a.clone())?;
        let sigma = engine.eval(&elem);
        if sigma > 1.0 {
            a.iter_mut().for_each(|x| *x /= sigma);
        }
    }

    let mut best_value = dot(&c, &a);
    let mut best_witness = a.clone();
    let mut step = 1.0f64;
    let mut stall = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        let mut cand: Vec<f64> = a.iter().zip(&c).map(|(x, g)| x + step * g).collect();
        center(&mut cand);
        let elem = AlgebraElement::from_values(cand.clone())?;
        let sigma = engine.eval(&elem);
        if sigma > 1.0 {
            cand.iter_mut().for_each(|x| *x /= sigma);
        }
        let val = dot(&c, &cand);

        let improvement = (val - best_value) / best_value.abs().max(1e-30);
        if val > best_value {
            a = cand;
            best_value = val;
            best_witness = a.clone();
            step = (step * 2.0).min(1.0);
        } else {
            step *= 0.5;
        }
        if improvement < opts.stall_tolerance {
            stall += 1;
        } else {
            stall = 0;
        }

        // tangent correction once plain ascent has exhausted its step
        if step < 1e-13 {
            let elem = AlgebraElement::from_values(a.clone())?;
            let (sigma, u, v) = engine.singular_pair(&elem);
            if sigma > 0.0 {
                let mut du = u.clone();
                triple.apply_dirac(&mut du);
                let mut dv = v.clone();
                triple.apply_dirac(&mut dv);
                // ∂σ/∂a_w = (Du)_w v_w - u_w (Dv)_w
                let mut normal: Vec<f64> =
                    (0..dim).map(|w| du[w] * v[w] - u[w] * dv[w]).collect();
                center(&mut normal);
                let nn = dot(&normal, &normal);
                if nn > 0.0 {
                    let coeff = dot(&c, &normal) / nn;
                    let mut tangent: Vec<f64> =
                        c.iter().zip(&normal).map(|(g, n)| g - coeff * n).collect();
                    center(&mut tangent);
                    let mut fw_step = 1.0f64;
                    for _ in 0..40 {
                        let mut cand: Vec<f64> =
                            a.iter().zip(&tangent).map(|(x, t)| x + fw_step * t).collect();
                        center(&mut cand);
                        let elem = AlgebraElement::from_values(cand.clone())?;
                        let s = engine.eval(&elem);
                        if s > 1.0 {
                            cand.iter_mut().for_each(|x| *x /= s);
                        }
                        let val = dot(&c, &cand);
                        if val > best_value {
                            let improvement = (val - best_value) / best_value.abs().max(1e-30);
                            a = cand;
                            best_value = val;
                            best_witness = a.clone();
                            step = fw_step;
                            if improvement >= opts.stall_tolerance {
                                stall = 0;
                            }
                            break;
                        }
                        fw_step *= 0.5;
                    }
                }
            }
            if step < 1e-13 {
                step = 1e-13;
            }
        }

        if stall >= opts.stall_window {
            converged = true;
            break;
        }
    }

    // certify the returned witness with the standalone norm
    let mut witness = best_witness;
    let mut value = best_value;
    let elem = AlgebraElement::from_values(witness.clone())?;
    let sigma = triple.commutator_norm(&elem)?;
    if sigma > 1.0 {
        witness.iter_mut().for_each(|x| *x /= sigma);
        value = dot(&c, &witness);
    }
    value = value.max(0.0);

    Ok(DistanceResult {
        value,
        witness: AlgebraElement::from_values(witness)?,
        upper_bound: upper,
        iterations,
        converged,
    })
}

/// Certified bracket `[lower, upper]` for `d(χ_x, χ_y)` on geometric
/// triples, with the witness certified once per disagreement index.
#[derive(Debug, Clone)]
pub struct PointBrackets<'a> {
    triple: &'a TruncatedTriple,
    gamma: GammaParam,
    /// `1 / σ_m` when the certified witness norm `σ_m` exceeds `1 + 1e-8`, else 1.
    witness_rescale: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PointBracket {
    /// First disagreement of the two points, when they differ within the level.
    pub m: Option<usize>,
    /// Certified lower bound: the witness gap `2 γ^{m-1}`.
    pub lower: f64,
    /// Analytic upper bound `2 γ^{m-1} / (1-γ)²`.
    pub upper: f64,
}

impl<'a> PointBrackets<'a> {
    /// Certifies the witnesses `γ^{m-1} s_m` for every `m ≤ N` up front.
    pub fn new(triple: &'a TruncatedTriple) -> Result<Self> {
        let gamma = match triple.spec() {
            DiracSpec::Geometric(g) => *g,
            other => {
                return Err(Error::InvalidInput(format!(
                    "analytic point brackets need a geometric spec, got {}",
                    other.label()
                )))
            }
        };
        let mut witness_rescale = Vec::with_capacity(triple.level());
        for m in 1..=triple.level() {
            let w = lower_bound_witness(gamma, m, triple.level());
            let sigma = triple.commutator_norm(&w)?;
            witness_rescale.push(if sigma > 1.0 + 1e-8 { 1.0 / sigma } else { 1.0 });
        }
        Ok(PointBrackets { triple, gamma, witness_rescale })
    }

    pub fn bracket(&self, x: &CantorPoint, y: &CantorPoint) -> PointBracket {
        match first_disagreement(x, y) {
            None => PointBracket { m: None, lower: 0.0, upper: 0.0 },
            Some(m) => self.bracket_for_disagreement(m),
        }
    }

    /// Bracket for a pair of points first disagreeing at coordinate `m`.
    pub fn bracket_for_disagreement(&self, m: usize) -> PointBracket {
        if m > self.triple.level() {
            // the truncations coincide: d_N = 0, the analytic bound
            // still caps the untruncated metric
            return PointBracket { m: Some(m), lower: 0.0, upper: analytic_point_upper(self.gamma, m) };
        }
        let gap = 2.0 * self.gamma.value().powi(m as i32 - 1);
        PointBracket {
            m: Some(m),
            lower: gap * self.witness_rescale[m - 1],
            upper: analytic_point_upper(self.gamma, m),
        }
    }
}

/// One-shot [`PointBrackets`] evaluation for a single pair.
pub fn point_bracket(
    triple: &TruncatedTriple,
    x: &CantorPoint,
    y: &CantorPoint,
) -> Result<PointBracket> {
    Ok(PointBrackets::new(triple)?.bracket(x, y))
}

/// Grid-search oracle over the quotient space, for `N ≤ 2` only.
///
/// The value of the program is the dual-norm ratio `max_u (c·u)/‖[D,M_u]‖`
/// over directions `u` in the span of the nonconstant Walsh functions;
/// the oracle scans the unit sphere of that span (1- or 3-dimensional) at
/// `grid` points per axis and polishes the best cell by shrinking local
/// scans, independent of the ascent solver.
pub fn brute_force_oracle(
    triple: &TruncatedTriple,
    phi: &State,
    psi: &State,
    grid: usize,
) -> Result<f64> {
    let level = triple.level();
    if level > 2 {
        return Err(Error::InvalidInput(format!(
            "brute-force oracle is limited to levels 1 and 2, got {level}"
        )));
    }
    if phi.level() != level || psi.level() != level {
        return Err(Error::DimensionMismatch("oracle states must live at the triple level".into()));
    }
    if grid < 4 {
        return Err(Error::InvalidInput("oracle grid resolution must be at least 4".into()));
    }

    // objective in Walsh coordinates: obj_S = (φ-ψ)(s_S)
    let dim = triple.atom_count();
    let mut obj = vec![0.0; dim];
    for (mask, o) in obj.iter_mut().enumerate().skip(1) {
        let s = AlgebraElement::walsh_basis(level, mask);
        *o = phi.evaluate(&s)? - psi.evaluate(&s)?;
    }

    if level == 1 {
        // single quotient direction s_1
        let alpha = triple.dirac_eigenvalue(1);
        return Ok((obj[1] / alpha).abs());
    }

    let alphas = [
        triple.dirac_eigenvalue(0),
        triple.dirac_eigenvalue(1),
        triple.dirac_eigenvalue(2),
        triple.dirac_eigenvalue(2),
    ];
    // ratio for Walsh coefficients (c₁, c₂, c₁₂); scale-invariant
    let ratio = |coeffs: [f64; 3]| -> f64 {
        let c = [0.0, coeffs[0], coeffs[1], coeffs[2]];
        let k = Matrix4::from_fn(|t, s| (alphas[t] - alphas[s]) * c[t ^ s]);
        let ktk = k.transpose() * k;
        let sigma = ktk.symmetric_eigenvalues().iter().fold(0.0f64, |m, &x| m.max(x)).sqrt();
        if sigma == 0.0 {
            return 0.0;
        }
        ((c[1] * obj[1] + c[2] * obj[2] + c[3] * obj[3]) / sigma).abs()
    };
    let direction = |theta: f64, phi_ang: f64| -> [f64; 3] {
        [theta.sin() * phi_ang.cos(), theta.sin() * phi_ang.sin(), theta.cos()]
    };

    let mut best = 0.0f64;
    let mut best_angles = (0.0f64, 0.0f64);
    for i in 0..=grid {
        let theta = std::f64::consts::PI * i as f64 / grid as f64;
        for j in 0..(2 * grid) {
            let phi_ang = std::f64::consts::PI * j as f64 / grid as f64;
            let r = ratio(direction(theta, phi_ang));
            if r > best {
                best = r;
                best_angles = (theta, phi_ang);
            }
        }
    }
    // adaptive local refinement around the best cell
    let mut window = std::f64::consts::PI / grid as f64;
    for _ in 0..70 {
        let (t0, p0) = best_angles;
        for di in -3i32..=3 {
            for dj in -3i32..=3 {
                let theta = t0 + window * di as f64 / 3.0;
                let phi_ang = p0 + window * dj as f64 / 3.0;
                let r = ratio(direction(theta, phi_ang));
                if r > best {
                    best = r;
                    best_angles = (theta, phi_ang);
                }
            }
        }
        window *= 0.6;
    }
    Ok(best)
}

/// Outcome of the diameter-bound search: the largest observed quotient
/// norm over the sampled unit ball, the theoretical cap `Σ β_j`, and the
/// tail observations `‖a - π_n(a)‖ ≤ Σ_{j>n} β_j`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiameterReport {
    pub sup_observed: f64,
    pub bound: f64,
    pub samples: usize,
    /// Per level `n`: largest observed `‖a - π_n(a)‖_∞` and its bound.
    pub tail_observed: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    /// Violations of either bound beyond `1e-7`, expected to stay 0.
    pub violations: usize,
}

fn tail_bound(triple: &TruncatedTriple, n: usize) -> Result<f64> {
    match triple.spec() {
        DiracSpec::Geometric(g) => {
            let gv = g.value();
            Ok(gv.powi(n as i32) / ((1.0 - gv) * (1.0 - gv)))
        }
        other => {
            let full = eigenvalue_condition_check(other, triple.level())?;
            let head = eigenvalue_condition_check(other, n)?;
            Ok(full - head)
        }
    }
}

/// Maximizes `‖a - τ(a)·1‖_∞` over sampled and ascent-refined elements of
/// the commutator unit ball, checking the diameter bound `Σ β_j` and the
/// tail bounds at every level.
pub fn diameter_bound_check(
    triple: &TruncatedTriple,
    samples: usize,
    seed: u64,
) -> Result<DiameterReport> {
    let dim = triple.atom_count();
    let level = triple.level();
    let bound = beta_series_bound(triple)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut engine = NormEngine::new(triple);

    let mut sup_observed = 0.0f64;
    let mut tail_observed = vec![0.0f64; level];
    let mut tail_bounds = Vec::with_capacity(level);
    for n in 1..=level {
        tail_bounds.push(tail_bound(triple, n)?);
    }
    let mut violations = 0usize;

    let inspect = |a: &AlgebraElement,
                       sup_observed: &mut f64,
                       tail_observed: &mut [f64],
                       violations: &mut usize|
     -> Result<f64> {
        let tau = a.tau();
        let centered =
            AlgebraElement::from_values(a.values().iter().map(|v| v - tau).collect())?;
        let sup = centered.sup_norm();
        *sup_observed = sup_observed.max(sup);
        if sup > bound + 1e-7 {
            *violations += 1;
        }
        for n in 1..=level {
            let pn = triple.conditional_expectation(a, n)?;
            let t = a
                .values()
                .iter()
                .zip(pn.values())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            tail_observed[n - 1] = tail_observed[n - 1].max(t);
            if t > tail_bounds[n - 1] + 1e-7 {
                *violations += 1;
            }
        }
        Ok(sup)
    };

    // deterministic seeds: the unit-norm witnesses γ^{n-1} s_n (geometric)
    // or s_n / ‖[D, s_n]‖ in general, then random directions
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for n in 1..=level {
        let s = AlgebraElement::symmetry(level, n);
        let sigma = triple.commutator_norm(&s)?;
        if sigma > 0.0 {
            starts.push(s.values().iter().map(|v| v / sigma).collect());
        }
    }
    while starts.len() < samples.max(level) {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        center(&mut v);
        starts.push(v);
    }

    for start in starts.iter().take(samples.max(level)) {
        let mut a = start.clone();
        let elem = AlgebraElement::from_values(a.clone())?;
        let sigma = engine.eval(&elem);
        if sigma == 0.0 {
            continue;
        }
        if sigma > 1.0 {
            a.iter_mut().for_each(|x| *x /= sigma);
        }
        let mut current =
            inspect(&AlgebraElement::from_values(a.clone())?, &mut sup_observed, &mut tail_observed, &mut violations)?;

        // ascent on the sup norm: push the peak coordinate
        let mut step = 0.5f64;
        for _ in 0..60 {
            let (peak, _) = a
                .iter()
                .enumerate()
                .max_by(|(_, x), (_, y)| x.abs().partial_cmp(&y.abs()).unwrap())
                .unwrap();
            let sign = a[peak].signum();
            let mut cand = a.clone();
            cand[peak] += sign * step;
            center(&mut cand);
            let elem = AlgebraElement::from_values(cand.clone())?;
            let s = engine.eval(&elem);
            if s > 1.0 {
                cand.iter_mut().for_each(|x| *x /= s);
            }
            let refreshed = AlgebraElement::from_values(cand.clone())?;
            let tau = refreshed.tau();
            let sup = refreshed.values().iter().fold(0.0f64, |m, v| m.max((v - tau).abs()));
            if sup > current {
                a = cand;
                current = inspect(&refreshed, &mut sup_observed, &mut tail_observed, &mut violations)?;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
    }

    Ok(DiameterReport {
        sup_observed,
        bound,
        samples: samples.max(level),
        tail_observed,
        tail_bounds,
        violations,
    })
}

/// Lift the mask-indexed Walsh coefficients to an element (test support
/// and oracle parameterization).
pub fn element_from_walsh(level: usize, coeffs: &[f64]) -> Result<AlgebraElement> {
    if coeffs.len() != (1usize << level) {
        return Err(Error::DimensionMismatch(format!(
            "need {} Walsh coefficients at level {level}, got {}",
            1usize << level,
            coeffs.len()
        )));
    }
    let mut v = coeffs.to_vec();
    walsh::inverse_in_place(&mut v);
    AlgebraElement::from_values(v)
}

/// Dimension of the quotient by constants at a given level.
#[inline]
pub fn quotient_dimension(level: usize) -> usize {
    (1usize << level) - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gns::TruncatedTriple;

    fn geometric_triple(level: usize, g: f64) -> TruncatedTriple {
        TruncatedTriple::build(level, DiracSpec::Geometric(GammaParam::new(g).unwrap())).unwrap()
    }

    fn point(level: usize, bits: &str) -> State {
        State::point(level, &CantorPoint::parse(bits).unwrap())
    }

    #[test]
    fn state_validation() {
        assert!(State::new(vec![0.5, 0.5]).is_ok());
        assert!(State::new(vec![0.5, 0.6]).is_err());
        assert!(State::new(vec![-0.1, 1.1]).is_err());
        assert!(State::new(vec![0.3, 0.3, 0.4]).is_err());
        let p = point(2, "10");
        assert_eq!(p.as_point_atom(), Some(1));
        assert_eq!(State::uniform(2).as_point_atom(), None);
    }

    #[test]
    fn identical_states_have_zero_distance() {
        let t = geometric_triple(2, 0.5);
        let phi = point(2, "01");
        let r = connes_distance(&t, &phi, &phi, &SolverOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn level_one_closed_form() {
        // feasible set {c₀·1 + c₁ s₁ : |c₁| α₁ ≤ 1}, objective 2|c₁|, α₁ = 1
        let t = geometric_triple(1, 0.5);
        let r = connes_distance(&t, &point(1, "0"), &point(1, "1"), &SolverOptions::default())
            .unwrap();
        assert!(r.value >= 2.0 - 1e-12, "value {}", r.value);
        assert!(r.value <= 2.0 + 1e-9);
        assert!(r.upper_bound >= r.value - 1e-8);
        // witness is feasible
        let sigma = t.commutator_norm(&r.witness).unwrap();
        assert!(sigma <= 1.0 + 1e-8);
    }

    #[test]
    fn witness_examples() {
        let g = GammaParam::new(0.5).unwrap();
        let t = geometric_triple(4, 0.5);
        // m = 1: s_1, norm 1, gap 2
        let w1 = lower_bound_witness(g, 1, 4);
        assert!((t.commutator_norm(&w1).unwrap() - 1.0).abs() <= 1e-10);
        let x = point(4, "0000");
        let y = point(4, "1000");
        assert_eq!(x.evaluate(&w1).unwrap() - y.evaluate(&w1).unwrap(), -2.0);
        // m = 3, γ = 1/2: witness (1/4) s₃, gap 1/2
        let w3 = lower_bound_witness(g, 3, 4);
        assert_eq!(w3.values().iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.25);
        let x = point(4, "0000");
        let y = point(4, "0010");
        assert_eq!((x.evaluate(&w3).unwrap() - y.evaluate(&w3).unwrap()).abs(), 0.5);
        // unit commutator norm for every m ≤ N
        for m in 1..=4usize {
            let w = lower_bound_witness(g, m, 4);
            assert!((t.commutator_norm(&w).unwrap() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn oracle_level_one_and_trivial() {
        let t = geometric_triple(1, 0.5);
        let v = brute_force_oracle(&t, &point(1, "0"), &point(1, "1"), 400).unwrap();
        assert!((v - 2.0).abs() <= 1e-12);
        let phi = point(1, "0");
        assert_eq!(brute_force_oracle(&t, &phi, &phi, 400).unwrap(), 0.0);
        let t3 = geometric_triple(3, 0.5);
        assert!(brute_force_oracle(&t3, &point(3, "000"), &point(3, "100"), 400).is_err());
    }

    #[test]
    fn oracle_matches_solver_at_level_two() {
        let t = geometric_triple(2, 0.5);
        let pairs =
            [("00", "01"), ("00", "10"), ("00", "11"), ("01", "10"), ("01", "11"), ("10", "11")];
        for (a, b) in pairs {
            let phi = point(2, a);
            let psi = point(2, b);
            let oracle = brute_force_oracle(&t, &phi, &psi, 400).unwrap();
            let solved = connes_distance(&t, &phi, &psi, &SolverOptions::default()).unwrap();
            assert!(
                (oracle - solved.value).abs() <= 1e-4,
                "{a} vs {b}: oracle {oracle}, solver {}",
                solved.value
            );
            assert!(solved.value <= solved.upper_bound + 1e-8);
        }
    }

    #[test]
    fn oracle_matches_solver_on_random_states() {
        let t = geometric_triple(2, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let phi = State::random(2, &mut rng);
            let psi = State::random(2, &mut rng);
            let oracle = brute_force_oracle(&t, &phi, &psi, 400).unwrap();
            let solved = connes_distance(&t, &phi, &psi, &SolverOptions::default()).unwrap();
            assert!(
                (oracle - solved.value).abs() <= 1e-4,
                "oracle {oracle}, solver {}",
                solved.value
            );
        }
    }

    #[test]
    fn point_brackets_sandwich() {
        for &g in &[0.3, 0.5, 0.7] {
            let t = geometric_triple(6, g);
            let brackets = PointBrackets::new(&t).unwrap();
            let x = CantorPoint::parse("010010").unwrap();
            let y = CantorPoint::parse("010110").unwrap(); // m = 4
            let b = brackets.bracket(&x, &y);
            assert_eq!(b.m, Some(4));
            let expect = 2.0 * g.powi(3);
            assert!(b.lower >= expect * (1.0 - 1e-12));
            assert!((b.upper - expect / ((1.0 - g) * (1.0 - g))).abs() < 1e-12);
            assert!(b.lower <= b.upper);
            // solver value lands inside the bracket
            let r = connes_distance(
                &t,
                &State::point(6, &x),
                &State::point(6, &y),
                &SolverOptions::default(),
            )
            .unwrap();
            assert!(r.value >= b.lower - 1e-9);
            assert!(r.value <= b.upper + 1e-8);
        }
    }

    #[test]
    fn bracket_handles_equal_and_deep_pairs() {
        let t = geometric_triple(3, 0.5);
        let brackets = PointBrackets::new(&t).unwrap();
        let x = CantorPoint::parse("101").unwrap();
        assert_eq!(brackets.bracket(&x, &x), PointBracket { m: None, lower: 0.0, upper: 0.0 });
        // differ only past the truncation: zero at this level
        let deep_x = CantorPoint::parse("10100001").unwrap();
        let deep_y = CantorPoint::parse("10100000").unwrap();
        let b = brackets.bracket(&deep_x, &deep_y);
        assert_eq!(b.m, Some(8));
        assert_eq!(b.lower, 0.0);
        assert!(b.upper > 0.0);
    }

    #[test]
    fn distance_scales_inversely_with_dirac() {
        // replacing D by 2D halves every distance
        let g = GammaParam::new(0.5).unwrap();
        let base = geometric_triple(3, 0.5);
        let scaled_spec =
            DiracSpec::Custom((1..=3).map(|n| 2.0 * g.value().powi(1 - n as i32)).collect());
        let scaled = TruncatedTriple::build(3, scaled_spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..4 {
            let phi = State::random(3, &mut rng);
            let psi = State::random(3, &mut rng);
            let d1 = connes_distance(&base, &phi, &psi, &SolverOptions::default()).unwrap();
            let d2 = connes_distance(&scaled, &phi, &psi, &SolverOptions::default()).unwrap();
            assert!(
                (2.0 * d2.value - d1.value).abs() <= 1e-8 * (1.0 + d1.value),
                "d {} vs scaled {}",
                d1.value,
                d2.value
            );
        }
    }

    #[test]
    fn triangle_inequality_with_certification_slack() {
        let t = geometric_triple(3, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..6 {
            let phi = State::random(3, &mut rng);
            let psi = State::random(3, &mut rng);
            let rho = State::random(3, &mut rng);
            let o = SolverOptions::default();
            let dxy = connes_distance(&t, &phi, &psi, &o).unwrap().value;
            let dxz = connes_distance(&t, &phi, &rho, &o).unwrap().value;
            let dzy = connes_distance(&t, &rho, &psi, &o).unwrap().value;
            assert!(dxy <= dxz + dzy + 2e-8, "{dxy} > {dxz} + {dzy}");
        }
    }

    #[test]
    fn monotone_in_truncation_with_warm_start() {
        let x = CantorPoint::parse("0110").unwrap();
        let y = CantorPoint::parse("0010").unwrap();
        let mut prev: Option<(f64, AlgebraElement)> = None;
        for level in 2..=5usize {
            let t = geometric_triple(level, 0.5);
            let mut opts = SolverOptions::default();
            if let Some((_, w)) = &prev {
                opts.warm_start = Some(w.clone());
            }
            let r = connes_distance(&t, &State::point(level, &x), &State::point(level, &y), &opts)
                .unwrap();
            if let Some((prev_value, _)) = prev {
                assert!(
                    prev_value <= r.value + 1e-8,
                    "level {level}: {prev_value} > {}",
                    r.value
                );
            }
            prev = Some((r.value, r.witness));
        }
    }

    #[test]
    fn diameter_report_is_clean() {
        let t = geometric_triple(5, 0.5);
        let report = diameter_bound_check(&t, 12, 99).unwrap();
        assert_eq!(report.violations, 0);
        assert!((report.bound - 4.0).abs() < 1e-12);
        // the s₁ witness already reaches sup-norm 1
        assert!(report.sup_observed >= 1.0 - 1e-12);
        assert!(report.sup_observed <= report.bound + 1e-7);
        for (obs, b) in report.tail_observed.iter().zip(&report.tail_bounds) {
            assert!(obs <= &(b + 1e-7));
        }
    }

    #[test]
    fn upper_bound_is_crude_but_valid_for_custom_specs() {
        let spec = DiracSpec::Custom(vec![1.0, 3.0, 9.0]);
        let t = TruncatedTriple::build(3, spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let phi = State::random(3, &mut rng);
        let psi = State::random(3, &mut rng);
        let r = connes_distance(&t, &phi, &psi, &SolverOptions::default()).unwrap();
        assert!(r.value <= r.upper_bound + 1e-8);
    }

    #[test]
    fn delta_comparison_bounds() {
        // 2 δ_γ ≤ d ≤ 2 (1-γ)^{-3} δ_γ on point states
        let g = 0.5;
        let t = geometric_triple(4, g);
        let gamma = GammaParam::new(g).unwrap();
        let pts: Vec<CantorPoint> = ["0000", "1000", "0100", "1110", "0011"]
            .iter()
            .map(|s| CantorPoint::parse(s).unwrap())
            .collect();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let delta = crate::cantor::delta_gamma(&pts[i], &pts[j], gamma);
                let r = connes_distance(
                    &t,
                    &State::point(4, &pts[i]),
                    &State::point(4, &pts[j]),
                    &SolverOptions::default(),
                )
                .unwrap();
                assert!(2.0 * delta <= r.value + 1e-8, "lower failed: {delta} vs {}", r.value);
                let cap = 2.0 / (1.0 - g).powi(3) * delta;
                assert!(r.value <= cap + 1e-8, "upper failed: {} vs {cap}", r.value);
            }
        }
    }
}
