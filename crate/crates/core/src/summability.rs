//! Summability of the Dirac spectra: partial traces of `D^{-s}` and
//! `(I + D²)^{-p/2}`, the dimension threshold of the geometric family,
//! and the two UHF eigenvalue recipes.
//!
//! Finite horizons cannot witness divergence by magnitude, so reports
//! carry the late-term ratio and a structural verdict: a spectrum is
//! flagged divergent when consecutive terms stop shrinking.

use serde::Serialize;

use crate::cantor::GammaParam;
use crate::error::{Error, Result};
use crate::gns::DiracSpec;
use crate::numerics::KahanSum;

/// Eigenvalue multiplicities `dim Q_n H` fed to the trace sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Multiplicities {
    /// `2^{n-1}` — the Cantor algebra default.
    CantorDyadic,
    /// `m_n² - m_{n-1}²` from a UHF dimension sequence (`m_0 = 1`).
    UhfDims(Vec<f64>),
    /// The dominating bound `m_n²` used in the UHF trace estimates.
    UhfDominated(Vec<f64>),
    /// Constant multiplicity, e.g. 1 when `dim A_n = n + 1`.
    Constant(f64),
    /// Explicit multiplicities for `n = 1, 2, …`.
    Custom(Vec<f64>),
}

impl Multiplicities {
    /// Multiplicity of level `n ≥ 1`; level 0 always has multiplicity 1.
    pub fn value(&self, n: usize) -> Option<f64> {
        if n == 0 {
            return Some(1.0);
        }
        match self {
            Multiplicities::CantorDyadic => Some(2f64.powi(n as i32 - 1)),
            Multiplicities::UhfDims(m) => {
                let hi = m.get(n - 1)?;
                let lo = if n == 1 { 1.0 } else { *m.get(n - 2)? };
                Some(hi * hi - lo * lo)
            }
            Multiplicities::UhfDominated(m) => m.get(n - 1).map(|x| x * x),
            Multiplicities::Constant(c) => Some(*c),
            Multiplicities::Custom(list) => list.get(n - 1).copied(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Convergent,
    Divergent,
}

/// Outcome of a partial trace: the compensated sum, the late-term ratio,
/// and the structural verdict (`ratio ≥ 1 - 1e-12` ⇒ divergent).
#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub partial_sum: f64,
    pub term_ratio: f64,
    pub verdict: Verdict,
    pub horizon: usize,
}

const RATIO_FLOOR: f64 = 1e-280;

fn report(terms: &[f64]) -> TraceReport {
    let mut sum = KahanSum::new();
    for &t in terms {
        sum.add(t);
    }
    // ratio of the latest consecutive pair that is safely above the
    // subnormal range; deep-underflow tails carry no ratio information
    let mut term_ratio = 0.0;
    for w in terms.windows(2).rev() {
        if w[0] >= RATIO_FLOOR && w[1] >= RATIO_FLOOR {
            term_ratio = w[1] / w[0];
            break;
        }
    }
    let verdict = if term_ratio >= 1.0 - 1e-12 { Verdict::Divergent } else { Verdict::Convergent };
    TraceReport { partial_sum: sum.value(), term_ratio, verdict, horizon: terms.len() }
}

/// Partial sum `Σ_{n=1}^{k} |α_n|^{-s} · mult(n)` of `tr(D^{-s})`, the
/// kernel (`α_0 = 0`) excluded.
///
/// For `Geometric(γ)` with dyadic multiplicities this telescopes to
/// `(1 - (2γ^s)^k) / (1 - 2γ^s)` whenever `2γ^s ≠ 1`.
pub fn trace_power(
    spec: &DiracSpec,
    mult: &Multiplicities,
    s: f64,
    horizon: usize,
) -> Result<TraceReport> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("exponent s must be positive, got {s}")));
    }
    let alphas = spec.eigenvalues(horizon)?;
    let mut terms = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        if alphas[n] == 0.0 {
            return Err(Error::InvalidInput(format!("eigenvalue α_{n} vanishes; tr(D^-s) needs a trivial kernel")));
        }
        let m = mult
            .value(n)
            .ok_or_else(|| Error::InvalidInput(format!("multiplicity sequence shorter than {n}")))?;
        terms.push(alphas[n].abs().powf(-s) * m);
    }
    Ok(report(&terms))
}

/// Partial sum `Σ_{n=0}^{k} (1 + α_n²)^{-p/2} · mult(n)` of the resolvent trace.
pub fn trace_resolvent(
    spec: &DiracSpec,
    mult: &Multiplicities,
    p: f64,
    horizon: usize,
) -> Result<TraceReport> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("exponent p must be positive, got {p}")));
    }
    let mut terms = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let alpha = spec
            .eigenvalue(n)
            .ok_or_else(|| Error::InvalidInput(format!("spec supplies fewer than {n} eigenvalues")))?;
        let m = mult
            .value(n)
            .ok_or_else(|| Error::InvalidInput(format!("multiplicity sequence shorter than {n}")))?;
        terms.push((1.0 + alpha * alpha).powf(-p / 2.0) * m);
    }
    Ok(report(&terms))
}

/// Closed form `(1 - (2γ^s)^k) / (1 - 2γ^s)` for the geometric partial trace.
pub fn geometric_trace_closed_form(gamma: GammaParam, s: f64, horizon: usize) -> f64 {
    let r = 2.0 * gamma.value().powf(s);
    if (r - 1.0).abs() < 1e-15 {
        return horizon as f64;
    }
    (1.0 - r.powi(horizon as i32)) / (1.0 - r)
}

/// The summability threshold `log 2 / (-log γ)`: `tr(D^{-s})` diverges at
/// `s` equal to it and converges above it.
pub fn summability_threshold(gamma: GammaParam) -> f64 {
    crate::cantor::critical_exponent(gamma)
}

/// Parameters of a UHF filtration `A_n = A_{n-1} ⊗ M_{d_n}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UhfParams {
    d: Vec<u32>,
    m: Vec<f64>,
}

impl UhfParams {
    /// Requires every `d_n ≥ 2`; cumulative dimensions must stay finite.
    pub fn new(d: Vec<u32>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidInput("need at least one tensor factor".into()));
        }
        let mut m = Vec::with_capacity(d.len());
        let mut acc = 1.0f64;
        for (i, &dn) in d.iter().enumerate() {
            if dn < 2 {
                return Err(Error::InvalidInput(format!("d_{} = {dn} violates d_n >= 2", i + 1)));
            }
            acc *= dn as f64;
            if !acc.is_finite() {
                return Err(Error::InvalidInput(format!("cumulative dimension m_{} overflows", i + 1)));
            }
            m.push(acc);
        }
        Ok(UhfParams { d, m })
    }

    /// The CAR filtration `d_n ≡ 2` with `levels` factors.
    pub fn car(levels: usize) -> Result<Self> {
        Self::new(vec![2; levels])
    }

    pub fn factors(&self) -> &[u32] {
        &self.d
    }

    /// Cumulative dimensions `m_n = d_1 ⋯ d_n`.
    pub fn dims(&self) -> &[f64] {
        &self.m
    }
}

/// The two UHF Dirac recipes: `α_n = √m_n / β_n` (summable `Σ β_n`, a
/// 4-summable module) and `α_n = m_n^s` (`s > 1`, p-summable for `p > 2/s`).
pub fn uhf_dirac_specs(params: &UhfParams, beta: &[f64], s: f64) -> Result<(DiracSpec, DiracSpec)> {
    if beta.len() < params.dims().len() {
        return Err(Error::InvalidInput(format!(
            "beta series has {} entries for {} levels",
            beta.len(),
            params.dims().len()
        )));
    }
    if beta.iter().any(|&b| b == 0.0 || !b.is_finite()) {
        return Err(Error::InvalidInput("beta series must consist of nonzero finite reals".into()));
    }
    let abs_sum: f64 = beta.iter().map(|b| b.abs()).sum();
    if !abs_sum.is_finite() {
        return Err(Error::InvalidInput("beta series is not absolutely summable".into()));
    }
    if !(s > 1.0) {
        return Err(Error::InvalidInput(format!("power family needs s > 1, got {s}")));
    }
    let sqrt_family = DiracSpec::UhfSqrt { beta: beta[..params.dims().len()].to_vec(), m: params.dims().to_vec() };
    let power_family = DiracSpec::UhfPower { s, m: params.dims().to_vec() };
    Ok((sqrt_family, power_family))
}

/// The general-AF recipe with `dim A_n = n + 1`: `β_n = (n+1)^{-t}`,
/// `t = max{2, 3/p}` and unit seminorm constants, so the resolvent trace
/// stays below 2 for every horizon.
pub fn slow_growth_spec(p: f64, horizon: usize) -> Result<DiracSpec> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("exponent p must be positive, got {p}")));
    }
    let t = 2f64.max(3.0 / p);
    let beta: Vec<f64> = (1..=horizon).map(|n| ((n + 1) as f64).powf(-t)).collect();
    let c = vec![1.0; horizon];
    Ok(DiracSpec::AfGeneral { beta, c })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(g: f64) -> DiracSpec {
        DiracSpec::Geometric(GammaParam::new(g).unwrap())
    }

    #[test]
    fn closed_form_tends_to_two() {
        // γ = 1/2, s = 2: (1 - (1/2)^k) / (1/2) → 2
        let g = GammaParam::new(0.5).unwrap();
        let r = trace_power(&geometric(0.5), &Multiplicities::CantorDyadic, 2.0, 60).unwrap();
        assert!((r.partial_sum - geometric_trace_closed_form(g, 2.0, 60)).abs() < 1e-13);
        assert!((r.partial_sum - 2.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Convergent);
    }

    #[test]
    fn closed_form_agreement_over_grid() {
        for &g in &[0.3, 0.5, 0.7] {
            let gamma = GammaParam::new(g).unwrap();
            for &s in &[1.0, 2.0, 3.0] {
                for k in [1usize, 7, 50, 200] {
                    let direct =
                        trace_power(&geometric(g), &Multiplicities::CantorDyadic, s, k).unwrap();
                    let closed = geometric_trace_closed_form(gamma, s, k);
                    assert!(
                        (direct.partial_sum - closed).abs() <= 1e-12 * closed.abs().max(1.0),
                        "γ={g} s={s} k={k}: {} vs {closed}",
                        direct.partial_sum
                    );
                }
            }
        }
    }

    #[test]
    fn divergence_is_structural_at_threshold() {
        // s = log2/(-log γ) makes every term exactly one: ratio 1
        let gamma = GammaParam::new(0.5).unwrap();
        let t = summability_threshold(gamma);
        assert!((t - 1.0).abs() < 1e-15);
        let r = trace_power(&geometric(0.5), &Multiplicities::CantorDyadic, t, 200).unwrap();
        assert!((r.term_ratio - 1.0).abs() <= 1e-12);
        assert_eq!(r.verdict, Verdict::Divergent);
        // slightly above threshold the ratio drops below one
        let r = trace_power(&geometric(0.5), &Multiplicities::CantorDyadic, t * 1.01, 200).unwrap();
        assert!(r.term_ratio < 1.0 - 1e-12);
        assert_eq!(r.verdict, Verdict::Convergent);
    }

    #[test]
    fn single_term_trace() {
        let spec = DiracSpec::Custom(vec![3.0]);
        let r = trace_power(&spec, &Multiplicities::Constant(5.0), 2.0, 1).unwrap();
        assert!((r.partial_sum - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn trace_power_rejects_bad_input() {
        assert!(trace_power(&geometric(0.5), &Multiplicities::CantorDyadic, 0.0, 5).is_err());
        assert!(trace_power(&geometric(0.5), &Multiplicities::CantorDyadic, -1.0, 5).is_err());
        let degenerate = DiracSpec::Custom(vec![0.0, 1.0]);
        assert!(trace_power(&degenerate, &Multiplicities::Constant(1.0), 1.0, 2).is_err());
    }

    #[test]
    fn monotone_in_s() {
        let mut prev = f64::INFINITY;
        for &s in &[0.8, 1.0, 1.5, 2.0, 3.0] {
            let r = trace_power(&geometric(0.5), &Multiplicities::CantorDyadic, s, 100).unwrap();
            assert!(r.partial_sum <= prev);
            prev = r.partial_sum;
        }
    }

    #[test]
    fn slow_growth_resolvent_stays_below_two() {
        for &p in &[0.5, 1.0, 2.0] {
            let spec = slow_growth_spec(p, 10_000).unwrap();
            let r = trace_resolvent(&spec, &Multiplicities::Constant(1.0), p, 10_000).unwrap();
            assert!(r.partial_sum <= 2.0, "p = {p}: {}", r.partial_sum);
            assert!(r.partial_sum > 1.0);
            assert_eq!(r.verdict, Verdict::Convergent);
        }
    }

    #[test]
    fn zero_dirac_resolvent_counts_terms() {
        let spec = DiracSpec::Custom(vec![0.0; 9]);
        let r = trace_resolvent(&spec, &Multiplicities::Constant(1.0), 1.0, 9).unwrap();
        assert_eq!(r.partial_sum, 10.0);
    }

    #[test]
    fn geometric_resolvent_converges_like_trace_power() {
        // 2γ^p = 1/2 < 1 at γ = 1/2, p = 2
        let r = trace_resolvent(&geometric(0.5), &Multiplicities::CantorDyadic, 2.0, 80).unwrap();
        assert_eq!(r.verdict, Verdict::Convergent);
        let tp = trace_power(&geometric(0.5), &Multiplicities::CantorDyadic, 2.0, 80).unwrap();
        // resolvent terms are dominated by the |α|^{-p} terms
        assert!(r.partial_sum <= 1.0 + tp.partial_sum);
    }

    #[test]
    fn threshold_examples() {
        let third = GammaParam::new(1.0 / 3.0).unwrap();
        assert!((summability_threshold(third) - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
        assert!((summability_threshold(third) - 0.63093).abs() < 1e-5);
        let half = GammaParam::new(0.5).unwrap();
        assert!((summability_threshold(half) - 1.0).abs() < 1e-15);
        let quarter_root = GammaParam::new(2f64.powf(-0.25)).unwrap();
        assert!((summability_threshold(quarter_root) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn uhf_params_validation() {
        assert!(UhfParams::new(vec![2, 3, 2]).is_ok());
        assert!(UhfParams::new(vec![2, 1]).is_err());
        assert!(UhfParams::new(vec![]).is_err());
        let car = UhfParams::car(5).unwrap();
        assert_eq!(car.dims(), &[2.0, 4.0, 8.0, 16.0, 32.0]);
        // m_{n+1} ≥ 2 m_n
        for w in car.dims().windows(2) {
            assert!(w[1] >= 2.0 * w[0]);
        }
    }

    #[test]
    fn uhf_spec_families() {
        // CAR with β_n = m_n^{1/2 - s}, s = 2: power family gives α_n = m_n² = 4^n
        let params = UhfParams::car(6).unwrap();
        let beta: Vec<f64> = params.dims().iter().map(|m| m.powf(0.5 - 2.0)).collect();
        let (sqrt_family, power_family) = uhf_dirac_specs(&params, &beta, 2.0).unwrap();
        for n in 1..=6usize {
            let alpha = power_family.eigenvalue(n).unwrap();
            assert!((alpha - 4f64.powi(n as i32)).abs() < 1e-9 * alpha);
        }
        // family i with β_n = 2^{-n}: α_n = 2^n √m_n
        let beta2: Vec<f64> = (1..=6).map(|n| 2f64.powi(-n)).collect();
        let (fam1, _) = uhf_dirac_specs(&params, &beta2, 1.5).unwrap();
        for n in 1..=6usize {
            let expect = 2f64.powi(n as i32) * (2f64.powi(n as i32)).sqrt();
            assert!((fam1.eigenvalue(n).unwrap() - expect).abs() < 1e-9 * expect);
        }
        let _ = sqrt_family;
    }

    #[test]
    fn uhf_power_family_resolvent_bound() {
        // p = 1, s = 3: partial traces bounded by 1 + Σ (2^{2-3})^n = 2
        let params = UhfParams::car(40).unwrap();
        let beta: Vec<f64> = params.dims().iter().map(|m| m.powf(0.5 - 3.0)).collect();
        let (_, power_family) = uhf_dirac_specs(&params, &beta, 3.0).unwrap();
        let mult = Multiplicities::UhfDominated(params.dims().to_vec());
        let r = trace_resolvent(&power_family, &mult, 1.0, 40).unwrap();
        let bound = 1.0 + (1..=40).map(|n| 2f64.powi(-n)).sum::<f64>();
        assert!(r.partial_sum <= bound + 1e-12);
        assert_eq!(r.verdict, Verdict::Convergent);
    }

    #[test]
    fn sqrt_family_is_summable_not_pinned() {
        // Theorem-only constant: assert convergence (term ratio < 1), not a value
        let params = UhfParams::car(30).unwrap();
        let beta: Vec<f64> = (1..=30).map(|n| 2f64.powi(-n)).collect();
        let (sqrt_family, _) = uhf_dirac_specs(&params, &beta, 2.0).unwrap();
        let mult = Multiplicities::UhfDims(params.dims().to_vec());
        let r = trace_resolvent(&sqrt_family, &mult, 4.0, 30).unwrap();
        assert_eq!(r.verdict, Verdict::Convergent);
    }

    #[test]
    fn uhf_spec_validation() {
        let params = UhfParams::car(4).unwrap();
        assert!(uhf_dirac_specs(&params, &[0.5, 0.5], 2.0).is_err()); // beta too short
        assert!(uhf_dirac_specs(&params, &[0.5, 0.5, 0.5, 0.0], 2.0).is_err()); // zero beta
        assert!(uhf_dirac_specs(&params, &[0.5; 4], 1.0).is_err()); // s ≤ 1
    }
}
