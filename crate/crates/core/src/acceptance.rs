//! The verification suite: thirteen quantitative checks, each pinning an
//! identity or inequality from the construction at a fixed tolerance.
//! `run_all` powers both the `verify-all` CLI command and the acceptance
//! integration test; `quick` shrinks sizes without touching tolerances.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cantor::{cover_sum, critical_exponent, delta_gamma, first_disagreement, CantorPoint, GammaParam};
use crate::connes::{
    analytic_point_upper, brute_force_oracle, connes_distance, diameter_bound_check, PointBrackets,
    SolverOptions, State,
};
use crate::embed::{
    box_dimension, embed_euclidean, embed_l1, euclidean_dim, gh_correspondence_distance,
    gh_upper_bound, hausdorff_bounds, norm_distance, EmbeddedCloud, NormTag,
};
use crate::gns::{AlgebraElement, DiracSpec, TruncatedTriple};
use crate::matrix_triple::{flip_commutator_norm, spread_half, verify_flip_metric, ComplexMatrix};
use crate::summability::{
    geometric_trace_closed_form, slow_growth_spec, summability_threshold, trace_power,
    trace_resolvent, Multiplicities,
};

#[derive(Debug, Clone, serde::Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
    pub seconds: f64,
}

pub const CRITERION_COUNT: usize = 13;

const NAMES: [&str; CRITERION_COUNT] = [
    "eigenvalue-identity",
    "distance-sandwich",
    "oracle-equivalence",
    "diameter-bound",
    "trace-closed-form",
    "resolvent-bound",
    "isometry-norm-chain",
    "bilipschitz-embedding",
    "box-dimension",
    "cover-identity",
    "gh-bound",
    "matrix-transposition",
    "monotone-truncation",
];

/// Run one criterion (1-based id).
pub fn run_criterion(id: usize, quick: bool) -> Option<CriterionOutcome> {
    let body: fn(bool) -> (bool, String) = match id {
        1 => eigenvalue_identity,
        2 => distance_sandwich,
        3 => oracle_equivalence,
        4 => diameter_bound,
        5 => trace_closed_form,
        6 => resolvent_bound,
        7 => isometry_norm_chain,
        8 => bilipschitz_embedding,
        9 => box_dimension_recovery,
        10 => cover_identity,
        11 => gh_bound,
        12 => matrix_transposition,
        13 => monotone_truncation,
        _ => return None,
    };
    let start = Instant::now();
    let (pass, details) = body(quick);
    Some(CriterionOutcome {
        id,
        name: NAMES[id - 1],
        pass,
        details,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Run the whole suite in order.
pub fn run_all(quick: bool) -> Vec<CriterionOutcome> {
    (1..=CRITERION_COUNT).map(|id| run_criterion(id, quick).expect("known id")).collect()
}

const GAMMAS_FOUR: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

fn geometric(gamma: f64) -> DiracSpec {
    DiracSpec::Geometric(GammaParam::new(gamma).unwrap())
}

// 1. ‖[D, s_n]‖ = γ^{-n+1} for n ≤ N, across the γ grid, rel 1e-9.
fn eigenvalue_identity(quick: bool) -> (bool, String) {
    let level = if quick { 6 } else { 10 };
    let mut worst = 0.0f64;
    for &g in &GAMMAS_FOUR {
        let triple = match TruncatedTriple::build(level, geometric(g)) {
            Ok(t) => t,
            Err(e) => return (false, format!("build failed: {e}")),
        };
        for n in 1..=level {
            let sn = AlgebraElement::symmetry(level, n);
            let norm = match triple.commutator_norm(&sn) {
                Ok(x) => x,
                Err(e) => return (false, format!("norm failed: {e}")),
            };
            let expected = g.powi(1 - n as i32);
            let rel = (norm - expected).abs() / expected;
            worst = worst.max(rel);
        }
    }
    (worst <= 1e-9, format!("N = {level}, worst relative error {worst:.3e} (tol 1e-9)"))
}

// 2. For all point-state pairs: 2γ^{m-1} ≤ certified lower bound and
//    analytic upper ≤ 2γ^{m-1}/(1-γ)² + 1e-7.
fn distance_sandwich(quick: bool) -> (bool, String) {
    let level = if quick { 5 } else { 8 };
    let dim = 1usize << level;
    let mut pairs = 0usize;
    for &g in &GAMMAS_FOUR {
        let triple = match TruncatedTriple::build(level, geometric(g)) {
            Ok(t) => t,
            Err(e) => return (false, format!("build failed: {e}")),
        };
        let brackets = match PointBrackets::new(&triple) {
            Ok(b) => b,
            Err(e) => return (false, format!("bracket certification failed: {e}")),
        };
        let gamma = GammaParam::new(g).unwrap();
        for a in 0..dim {
            for b in (a + 1)..dim {
                let m = ((a ^ b).trailing_zeros() + 1) as usize;
                let bracket = brackets.bracket_for_disagreement(m);
                let target_low = 2.0 * g.powi(m as i32 - 1);
                let target_high = analytic_point_upper(gamma, m);
                if bracket.lower < target_low || bracket.upper > target_high + 1e-7 {
                    return (
                        false,
                        format!(
                            "γ={g}, m={m}: bracket [{}, {}] escapes [{target_low}, {target_high}]",
                            bracket.lower, bracket.upper
                        ),
                    );
                }
                if bracket.lower > bracket.upper {
                    return (false, format!("γ={g}, m={m}: inverted bracket"));
                }
                pairs += 1;
            }
        }
    }
    (true, format!("N = {level}: {pairs} point pairs inside the sandwich"))
}

// 3. Solver matches the independent grid oracle at N ∈ {1, 2} to 1e-4.
fn oracle_equivalence(quick: bool) -> (bool, String) {
    let grid = if quick { 120 } else { 400 };
    let random_pairs = if quick { 5 } else { 20 };
    let mut worst = 0.0f64;
    let opts = SolverOptions::default();

    // all point pairs at both levels
    for level in 1..=2usize {
        let triple = TruncatedTriple::build(level, geometric(0.5)).unwrap();
        let dim = 1usize << level;
        for a in 0..dim {
            for b in (a + 1)..dim {
                let phi = State::point(level, &CantorPoint::from_index(a as u64, level));
                let psi = State::point(level, &CantorPoint::from_index(b as u64, level));
                let oracle = match brute_force_oracle(&triple, &phi, &psi, grid) {
                    Ok(v) => v,
                    Err(e) => return (false, format!("oracle failed: {e}")),
                };
                let solved = match connes_distance(&triple, &phi, &psi, &opts) {
                    Ok(r) => r.value,
                    Err(e) => return (false, format!("solver failed: {e}")),
                };
                worst = worst.max((oracle - solved).abs());
            }
        }
    }
    // random state pairs at N = 2, mixed γ
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..random_pairs {
        let g = GAMMAS_FOUR[trial % GAMMAS_FOUR.len()];
        let triple = TruncatedTriple::build(2, geometric(g)).unwrap();
        let phi = State::random(2, &mut rng);
        let psi = State::random(2, &mut rng);
        let oracle = match brute_force_oracle(&triple, &phi, &psi, grid) {
            Ok(v) => v,
            Err(e) => return (false, format!("oracle failed: {e}")),
        };
        let solved = match connes_distance(&triple, &phi, &psi, &opts) {
            Ok(r) => r.value,
            Err(e) => return (false, format!("solver failed: {e}")),
        };
        worst = worst.max((oracle - solved).abs());
    }
    (worst <= 1e-4, format!("worst |solver - oracle| = {worst:.3e} (tol 1e-4)"))
}

// 4. sup ‖a - τ(a)1‖_∞ over refined elements of the unit ball stays
//    under Σβ = 4 at γ = 1/2.
fn diameter_bound(quick: bool) -> (bool, String) {
    let level = if quick { 5 } else { 8 };
    let samples = if quick { 8 } else { 24 };
    let triple = TruncatedTriple::build(level, geometric(0.5)).unwrap();
    match diameter_bound_check(&triple, samples, 0xD1A) {
        Ok(report) => {
            let pass = report.violations == 0
                && report.sup_observed <= report.bound + 1e-7
                && report.sup_observed >= 1.0 - 1e-12;
            (
                pass,
                format!(
                    "N = {level}: sup {:.6} ≤ bound {} over {} refined samples, {} violations",
                    report.sup_observed, report.bound, report.samples, report.violations
                ),
            )
        }
        Err(e) => (false, format!("diameter check failed: {e}")),
    }
}

// 5. Geometric trace matches its closed form to rel 1e-12; threshold
//    term ratios behave structurally.
fn trace_closed_form(_quick: bool) -> (bool, String) {
    let mut worst = 0.0f64;
    for &g in &[0.3, 0.5, 0.7] {
        let gamma = GammaParam::new(g).unwrap();
        for &s in &[1.0, 2.0, 3.0] {
            for k in 1..=200usize {
                let direct = match trace_power(&geometric(g), &Multiplicities::CantorDyadic, s, k) {
                    Ok(r) => r.partial_sum,
                    Err(e) => return (false, format!("trace failed: {e}")),
                };
                let closed = geometric_trace_closed_form(gamma, s, k);
                worst = worst.max((direct - closed).abs() / closed.abs().max(1e-300));
            }
        }
    }
    // threshold behavior
    for &g in &[0.3, 0.5, 0.7] {
        let gamma = GammaParam::new(g).unwrap();
        let t = summability_threshold(gamma);
        let at = trace_power(&geometric(g), &Multiplicities::CantorDyadic, t, 200).unwrap();
        if (at.term_ratio - 1.0).abs() > 1e-12 {
            return (false, format!("γ={g}: ratio at threshold is {}", at.term_ratio));
        }
        let above = trace_power(&geometric(g), &Multiplicities::CantorDyadic, t * 1.01, 200).unwrap();
        if above.term_ratio >= 1.0 {
            return (false, format!("γ={g}: ratio above threshold is {}", above.term_ratio));
        }
    }
    (worst <= 1e-12, format!("worst closed-form relative error {worst:.3e} (tol 1e-12)"))
}

// 6. Slow-growth recipe keeps the resolvent trace ≤ 2 for p ∈ {0.5, 1, 2}.
fn resolvent_bound(quick: bool) -> (bool, String) {
    let horizon = if quick { 10_000 } else { 100_000 };
    let mut sums = Vec::new();
    for &p in &[0.5, 1.0, 2.0] {
        let spec = match slow_growth_spec(p, horizon) {
            Ok(s) => s,
            Err(e) => return (false, format!("spec failed: {e}")),
        };
        let r = match trace_resolvent(&spec, &Multiplicities::Constant(1.0), p, horizon) {
            Ok(r) => r,
            Err(e) => return (false, format!("resolvent failed: {e}")),
        };
        if r.partial_sum > 2.0 {
            return (false, format!("p = {p}: partial sum {} exceeds 2", r.partial_sum));
        }
        sums.push(r.partial_sum);
    }
    (true, format!("horizon {horizon}: partial sums {sums:.6?} all ≤ 2"))
}

// 7. ℓ¹ isometry within the truncation tail and the exact sup-norm gap.
fn isometry_norm_chain(quick: bool) -> (bool, String) {
    let pairs = if quick { 1_000 } else { 10_000 };
    let len = 40usize;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for &g in &[0.3, 1.0 / 3.0, 0.5, 0.7, 0.9] {
        let gamma = GammaParam::new(g).unwrap();
        let tail = 2.0 * gamma.pow(len);
        for _ in 0..pairs {
            let x = random_point(&mut rng, len);
            let y = random_point(&mut rng, len);
            let fx = embed_l1(&x, gamma, len);
            let fy = embed_l1(&y, gamma, len);
            let gap = (norm_distance(NormTag::L1, &fx, &fy) - delta_gamma(&x, &y, gamma)).abs();
            if gap > tail {
                return (false, format!("γ={g}: isometry gap {gap} exceeds tail {tail}"));
            }
            worst = worst.max(gap);
            if let Some(m) = first_disagreement(&x, &y) {
                let inf_gap = norm_distance(NormTag::LInf, &fx, &fy);
                if inf_gap != gamma.weight(m) {
                    return (
                        false,
                        format!("γ={g}: sup-norm gap {inf_gap} differs from γ^(m-1)(1-γ)"),
                    );
                }
            }
        }
    }
    (true, format!("{pairs} pairs per γ at L = {len}; worst isometry gap {worst:.3e}"))
}

// 8. Euclidean embedding satisfies the two-sided Lipschitz sandwich; the
//    middle-third image uses only base-3 digits {0, 2}.
fn bilipschitz_embedding(quick: bool) -> (bool, String) {
    let pairs = if quick { 1_000 } else { 10_000 };
    let len = 40usize;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for &g in &[0.3, 1.0 / 3.0, 0.5, 0.7, 0.9] {
        let gamma = GammaParam::new(g).unwrap();
        let e = euclidean_dim(gamma);
        let ge = g.powi(e as i32);
        let lower_c = (1.0 - 2.0 * ge) * g;
        let upper_c = g.powi(1 - e as i32) / (1.0 - g);
        let slack = gamma.pow(len) / (1.0 - g);
        for _ in 0..pairs {
            let x = random_point(&mut rng, len);
            let y = random_point(&mut rng, len);
            let delta = delta_gamma(&x, &y, gamma);
            let d = norm_distance(
                NormTag::L2,
                &embed_euclidean(&x, gamma, len),
                &embed_euclidean(&y, gamma, len),
            );
            if lower_c * delta - slack > d + 1e-14 || d > upper_c * delta + slack + 1e-14 {
                return (
                    false,
                    format!("γ={g}: distance {d} escapes [{} , {}]", lower_c * delta, upper_c * delta),
                );
            }
        }
    }
    // digit structure of the middle-third image
    let digit_samples = if quick { 50 } else { 300 };
    let gamma = GammaParam::new(1.0 / 3.0).unwrap();
    for _ in 0..digit_samples {
        let x = random_point(&mut rng, 30);
        let mut rest = embed_euclidean(&x, gamma, 30)[0];
        for _ in 0..15 {
            rest *= 3.0;
            let mut digit = rest.floor();
            if rest - digit > 1.0 - 1e-9 {
                digit += 1.0;
            }
            rest -= digit;
            if digit != 0.0 && digit != 2.0 {
                return (false, format!("middle-third digit {digit} outside {{0, 2}}"));
            }
        }
    }
    (true, format!("{pairs} pairs per γ inside the sandwich; base-3 digits clean"))
}

// 9. Interval counting recovers the dimension exactly; grid counting
//    within 5%.
fn box_dimension_recovery(_quick: bool) -> (bool, String) {
    // the γ = 0.7 scale span needs the full depth, so quick mode gets no
    // size reduction here (the whole criterion runs in seconds anyway)
    let level = 14usize;
    let mut details = Vec::new();
    for &g in &[1.0 / 3.0, 0.5, 0.7] {
        let gamma = GammaParam::new(g).unwrap();
        let t = critical_exponent(gamma);
        let cloud = match EmbeddedCloud::cantor_l1(gamma, level) {
            Ok(c) => c,
            Err(e) => return (false, format!("cloud failed: {e}")),
        };
        let scales: Vec<f64> = (2..=(level - 2)).map(|n| gamma.pow(n)).collect();
        match box_dimension(&cloud, &scales) {
            Ok(est) => {
                if (est.slope - t).abs() > 1e-9 {
                    return (false, format!("γ={g}: interval slope {} vs {t}", est.slope));
                }
            }
            Err(e) => return (false, format!("interval counting failed: {e}")),
        }

        let euclid = match EmbeddedCloud::cantor_euclidean(gamma, level) {
            Ok(c) => c,
            Err(e) => return (false, format!("cloud failed: {e}")),
        };
        let e_dim = euclidean_dim(gamma) as i32;
        let mu = g.powi(e_dim);
        let depth = (level as i32 / e_dim).max(2);
        let grid_scales: Vec<f64> = (1..depth).map(|p| mu.powi(p)).collect();
        match box_dimension(&euclid, &grid_scales) {
            Ok(est) => {
                let rel = (est.slope - t).abs() / t;
                details.push(format!("γ={g}: grid slope {:.4} (target {t:.4})", est.slope));
                if rel > 0.05 {
                    return (false, format!("γ={g}: grid slope {} off target {t} by {rel:.3}", est.slope));
                }
            }
            Err(e) => return (false, format!("grid counting failed: {e}")),
        }
    }
    (true, format!("L = {level}: {}", details.join("; ")))
}

// 10. Level cover sums equal 1 at the critical exponent through level 40.
fn cover_identity(_quick: bool) -> (bool, String) {
    let mut worst = 0.0f64;
    for &g in &[0.3, 1.0 / 3.0, 0.5, 0.7, 0.9] {
        let gamma = GammaParam::new(g).unwrap();
        let t = critical_exponent(gamma);
        for n in 1..=40usize {
            worst = worst.max((cover_sum(n, t, gamma) - 1.0).abs());
        }
        let bounds = hausdorff_bounds(gamma, 10);
        if !(bounds.lower < bounds.upper) {
            return (false, format!("γ={g}: bounds [{}, {}] not ordered", bounds.lower, bounds.upper));
        }
    }
    (worst <= 1e-12, format!("worst |cover sum - 1| = {worst:.3e} through level 40"))
}

// 11. Correspondence distance stays below the analytic bound plus tail on
//     a γ-μ grid.
fn gh_bound(quick: bool) -> (bool, String) {
    let grid = if quick { 8 } else { 20 };
    let level = if quick { 10 } else { 12 };
    let mut cells = 0usize;
    for i in 1..=grid {
        for j in 1..=grid {
            let gv = i as f64 / (grid + 1) as f64;
            let mv = j as f64 / (grid + 1) as f64;
            if mv >= gv {
                continue;
            }
            let gamma = GammaParam::new(gv).unwrap();
            let mu = GammaParam::new(mv).unwrap();
            let observed = match gh_correspondence_distance(gamma, mu, level) {
                Ok(v) => v,
                Err(e) => return (false, format!("correspondence failed: {e}")),
            };
            let cap = gh_upper_bound(gamma, mu) + 2.0 * gamma.pow(level);
            if observed > cap + 1e-12 {
                return (false, format!("γ={gv}, μ={mv}: {observed} exceeds {cap}"));
            }
            cells += 1;
        }
    }
    (true, format!("{cells} grid cells at L = {level} under the bound"))
}

// 12. The flip seminorm is the spectral spread; the flip metric is the
//     norm metric on states.
fn matrix_transposition(quick: bool) -> (bool, String) {
    let per_size = if quick { 100 } else { 1000 };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for n in 2..=8usize {
        for _ in 0..per_size {
            let a = random_hermitian(n, &mut rng);
            let lhs = match flip_commutator_norm(&a) {
                Ok(x) => x,
                Err(e) => return (false, format!("flip norm failed: {e}")),
            };
            let rhs = match spread_half(&a) {
                Ok(x) => x,
                Err(e) => return (false, format!("spread failed: {e}")),
            };
            worst = worst.max((lhs - rhs).abs());
        }
    }
    if worst > 1e-9 {
        return (false, format!("flip vs spread deviation {worst:.3e} exceeds 1e-9"));
    }
    let trials = if quick { 5 } else { 20 };
    match verify_flip_metric(8, trials, 0xF11F) {
        Ok(report) => (
            report.max_deviation < 1e-7,
            format!(
                "seminorm identity deviation {worst:.3e}; metric recovery deviation {:.3e} over {} trials",
                report.max_deviation, report.trials
            ),
        ),
        Err(e) => (false, format!("flip metric verification failed: {e}")),
    }
}

// 13. Certified distances are monotone along nested truncations.
fn monotone_truncation(quick: bool) -> (bool, String) {
    let max_level = if quick { 5 } else { 8 };
    let pair_count = if quick { 3 } else { 6 };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut pairs = Vec::new();
    while pairs.len() < pair_count {
        let x = random_point(&mut rng, max_level);
        let y = random_point(&mut rng, max_level);
        if x != y {
            pairs.push((x, y));
        }
    }
    let mut checked = 0usize;
    for (x, y) in &pairs {
        let mut prev: Option<(f64, AlgebraElement)> = None;
        for level in 2..=max_level {
            let triple = match TruncatedTriple::build(level, geometric(0.5)) {
                Ok(t) => t,
                Err(e) => return (false, format!("build failed: {e}")),
            };
            let mut opts = SolverOptions { max_iters: 4000, ..SolverOptions::default() };
            if let Some((_, w)) = &prev {
                opts.warm_start = Some(w.clone());
            }
            let r = match connes_distance(
                &triple,
                &State::point(level, x),
                &State::point(level, y),
                &opts,
            ) {
                Ok(r) => r,
                Err(e) => return (false, format!("solve failed: {e}")),
            };
            if let Some((prev_value, _)) = &prev {
                if *prev_value > r.value + 1e-8 {
                    return (
                        false,
                        format!("pair {x} vs {y}: d_{} = {prev_value} > d_{level} = {}", level - 1, r.value),
                    );
                }
                checked += 1;
            }
            prev = Some((r.value, r.witness));
        }
    }
    (true, format!("{checked} nested-truncation steps monotone across {pair_count} pairs"))
}

fn random_point(rng: &mut ChaCha8Rng, support: usize) -> CantorPoint {
    let bits: Vec<u8> = (0..support).map(|_| rng.random_range(0..2u8)).collect();
    CantorPoint::from_bits(&bits).unwrap()
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let raw = ComplexMatrix::from_fn(n, n, |_, _| {
        nalgebra::Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&raw + raw.adjoint()) * nalgebra::Complex::new(0.5, 0.0)
}
