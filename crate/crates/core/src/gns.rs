//! Level-`N` truncation of the GNS representation of the Cantor algebra
//! with the symmetric product state: a `2^N`-dimensional Hilbert space,
//! conditional-expectation projections `P_k`, eigenprojections `Q_k`,
//! diagonal Dirac operators and their commutators with multiplication
//! operators.
//!
//! Two bases are in play. Multiplication operators are diagonal in the
//! atom basis; the Dirac operator is diagonal in the Walsh basis
//! `{s_S : S ⊆ {1..N}}`, which is orthonormal for the inner product
//! `(a, b) = τ(b* a)`. The change of basis is the fast transform in
//! [`crate::walsh`], so every operation here reduces to diagonal scaling
//! plus transforms.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::cantor::GammaParam;
use crate::error::{Error, Result};
use crate::numerics::{skew_operator_norm, KahanSum};
use crate::walsh;

/// Default cap on the truncation level; `SPECTRAL_CANTOR_MAX_LEVEL` overrides.
pub const DEFAULT_MAX_LEVEL: usize = 14;

/// Commutator norms use a dense eigensolve up to this Hilbert-space
/// dimension and deterministic power iteration above it.
pub const DENSE_NORM_DIM: usize = 256;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 20_000;
const POWER_SEED: u64 = 0x5CA7;

/// An eigenvalue recipe for the Dirac operator `D = Σ α_n Q_n`.
///
/// `α_0 = 0` always; the variants realize the different growth recipes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum DiracSpec {
    /// `α_n = γ^{-n+1}`.
    Geometric(GammaParam),
    /// `α_n = c_n / β_n` for a summable series `Σ β_n` and seminorm constants `c_n`.
    AfGeneral { beta: Vec<f64>, c: Vec<f64> },
    /// `α_n = √m_n / β_n` for matrix-algebra dimensions `m_n`.
    UhfSqrt { beta: Vec<f64>, m: Vec<f64> },
    /// `α_n = m_n^s`.
    UhfPower { s: f64, m: Vec<f64> },
    /// Explicit eigenvalues `α_1, α_2, …`.
    Custom(Vec<f64>),
}

impl DiracSpec {
    /// `α_n`, or `None` when the recipe's data runs out before `n`.
    pub fn eigenvalue(&self, n: usize) -> Option<f64> {
        if n == 0 {
            return Some(0.0);
        }
        match self {
            DiracSpec::Geometric(g) => Some(g.value().powi(1 - n as i32)),
            DiracSpec::AfGeneral { beta, c } => {
                let (b, cn) = (beta.get(n - 1)?, c.get(n - 1)?);
                Some(cn / b)
            }
            DiracSpec::UhfSqrt { beta, m } => {
                let (b, mn) = (beta.get(n - 1)?, m.get(n - 1)?);
                Some(mn.sqrt() / b)
            }
            DiracSpec::UhfPower { s, m } => Some(m.get(n - 1)?.powf(*s)),
            DiracSpec::Custom(list) => list.get(n - 1).copied(),
        }
    }

    /// `[α_0, …, α_horizon]`, failing when the recipe is too short.
    pub fn eigenvalues(&self, horizon: usize) -> Result<Vec<f64>> {
        (0..=horizon)
            .map(|n| {
                self.eigenvalue(n).ok_or_else(|| {
                    Error::InvalidInput(format!("spec supplies fewer than {horizon} eigenvalues"))
                })
            })
            .collect()
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            DiracSpec::Geometric(g) => format!("geometric({})", g.value()),
            DiracSpec::AfGeneral { .. } => "af-general".to_string(),
            DiracSpec::UhfSqrt { .. } => "uhf-sqrt".to_string(),
            DiracSpec::UhfPower { s, .. } => format!("uhf-power({s})"),
            DiracSpec::Custom(_) => "custom".to_string(),
        }
    }
}

/// Partial sum of the condition series `Σ β_n` up to the horizon, infinite
/// as soon as some eigenvalue repeats an earlier one.
///
/// For the geometric recipe this reports the consecutive-gap series
/// `β_n = (α_n - α_{n-1})^{-1} = γ^{n-1}/(1-γ)` (the operator-inverse
/// bound behind the diameter estimates, full sum `(1-γ)^{-2}`); note that
/// at `n = 1` this exceeds the literal sup `|α_1 - α_0|^{-1} = 1`, so it
/// stays a valid upper bound. Other specs scan all earlier eigenvalues
/// and take the sup literally.
pub fn eigenvalue_condition_check(spec: &DiracSpec, horizon: usize) -> Result<f64> {
    let mut sum = KahanSum::new();
    if let DiracSpec::Geometric(g) = spec {
        let gv = g.value();
        for n in 1..=horizon {
            sum.add(gv.powi(n as i32 - 1) / (1.0 - gv));
        }
        return Ok(sum.value());
    }
    let alphas = spec.eigenvalues(horizon)?;
    for n in 1..=horizon {
        let mut min_gap = f64::INFINITY;
        for i in 0..n {
            min_gap = min_gap.min((alphas[n] - alphas[i]).abs());
        }
        if min_gap == 0.0 {
            return Ok(f64::INFINITY);
        }
        sum.add(1.0 / min_gap);
    }
    Ok(sum.value())
}

/// A self-adjoint element of the level-`N` algebra: its values on the
/// `2^N` atoms, acting as a diagonal multiplication operator in the atom
/// basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    level: usize,
    values: Vec<f64>,
}

impl AlgebraElement {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "element needs 2^N atom values, got {}",
                values.len()
            )));
        }
        let level = values.len().trailing_zeros() as usize;
        Ok(AlgebraElement { level, values })
    }

    pub fn constant(level: usize, value: f64) -> Self {
        AlgebraElement { level, values: vec![value; 1 << level] }
    }

    /// The symmetry `s_n = 2 e_n - I`, `1 ≤ n ≤ level`.
    pub fn symmetry(level: usize, n: usize) -> Self {
        assert!(1 <= n && n <= level);
        Self::walsh_basis(level, 1usize << (n - 1))
    }

    /// The Walsh product `s_S` for the subset mask `S` (bit `i-1` ⇔ `s_i`).
    pub fn walsh_basis(level: usize, mask: usize) -> Self {
        assert!(mask < (1usize << level));
        let values = (0..1usize << level).map(|w| walsh::walsh_value(mask, w)).collect();
        AlgebraElement { level, values }
    }

    /// Indicator function of a single level-`N` atom.
    pub fn indicator(level: usize, atom: usize) -> Self {
        let mut values = vec![0.0; 1 << level];
        values[atom] = 1.0;
        AlgebraElement { level, values }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// View as a function of the first `level` coordinates: values duplicate
    /// across the new coordinates.
    pub fn lift(&self, level: usize) -> Result<Self> {
        if level < self.level {
            return Err(Error::DimensionMismatch(format!(
                "cannot lift level {} element down to {level}",
                self.level
            )));
        }
        let old = self.values.len();
        let mut values = vec![0.0; 1 << level];
        for (w, v) in values.iter_mut().enumerate() {
            *v = self.values[w % old];
        }
        Ok(AlgebraElement { level, values })
    }

    /// `τ(a)`: the mean of the atom values under the symmetric state.
    pub fn tau(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Uniform norm `‖a‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Hilbert-space norm `‖a ξ‖ = √τ(a² )`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// Walsh coefficients of the element.
    pub fn walsh_coefficients(&self) -> Vec<f64> {
        let mut c = self.values.clone();
        walsh::forward_in_place(&mut c);
        c
    }
}

/// Level of the eigenprojection holding `s_S`: `max S`, with `max ∅ = 0`.
#[inline]
pub fn mask_level(mask: usize) -> usize {
    (usize::BITS - mask.leading_zeros()) as usize
}

fn max_level_cap() -> usize {
    std::env::var("SPECTRAL_CANTOR_MAX_LEVEL")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(DEFAULT_MAX_LEVEL)
}

/// The level-`N` spectral-triple data: Dirac diagonal in the Walsh basis
/// plus the eigenvalue recipe that produced it. Immutable after
/// construction; all operations are read-only.
#[derive(Debug)]
pub struct TruncatedTriple {
    level: usize,
    spec: DiracSpec,
    /// `α_{max S}` indexed by the Walsh mask `S`.
    dirac_diag: Vec<f64>,
    dense_dirac: OnceLock<DMatrix<f64>>,
}

impl TruncatedTriple {
    /// Assemble the triple at truncation level `N ≥ 1`.
    ///
    /// Rejects levels above the memory cap (default
    /// [`DEFAULT_MAX_LEVEL`], overridable through the
    /// `SPECTRAL_CANTOR_MAX_LEVEL` environment variable) because dense
    /// commutator matrices grow as `4^N`.
    pub fn build(level: usize, spec: DiracSpec) -> Result<Self> {
        if level == 0 {
            return Err(Error::LevelZero);
        }
        let cap = max_level_cap();
        if level > cap {
            return Err(Error::LevelTooLarge { requested: level, cap });
        }
        let alphas = spec.eigenvalues(level)?;
        let dim = 1usize << level;
        let mut dirac_diag = vec![0.0; dim];
        for (mask, d) in dirac_diag.iter_mut().enumerate() {
            *d = alphas[mask_level(mask)];
        }
        Ok(TruncatedTriple { level, spec, dirac_diag, dense_dirac: OnceLock::new() })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn atom_count(&self) -> usize {
        1 << self.level
    }

    pub fn spec(&self) -> &DiracSpec {
        &self.spec
    }

    /// `α_k` as realized in this triple, `0 ≤ k ≤ N`.
    pub fn dirac_eigenvalue(&self, k: usize) -> f64 {
        assert!(k <= self.level);
        if k == 0 {
            0.0
        } else {
            self.dirac_diag[1 << (k - 1)]
        }
    }

    /// The Dirac diagonal in the Walsh basis, indexed by subset mask.
    pub fn dirac_diag(&self) -> &[f64] {
        &self.dirac_diag
    }

    /// Multiplicity of eigenvalue index `k`: `dim Q_k H`.
    pub fn eigenprojection_dim(&self, k: usize) -> usize {
        assert!(k <= self.level);
        if k == 0 {
            1
        } else {
            1 << (k - 1)
        }
    }

    /// Apply `D` to a vector of atom coordinates, in place.
    pub fn apply_dirac(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.atom_count());
        walsh::forward_in_place(v);
        for (x, d) in v.iter_mut().zip(&self.dirac_diag) {
            *x *= d;
        }
        walsh::inverse_in_place(v);
    }

    /// `out = [D, M_a] v`, with `scratch` the same length as `v`.
    pub fn commutator_apply(&self, a: &AlgebraElement, v: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let av = a.values();
        debug_assert_eq!(av.len(), v.len());
        // scratch = D (a ∘ v)
        for ((s, x), c) in scratch.iter_mut().zip(v).zip(av) {
            *s = x * c;
        }
        self.apply_dirac(scratch);
        // out = a ∘ (D v)
        out.copy_from_slice(v);
        self.apply_dirac(out);
        for ((o, s), c) in out.iter_mut().zip(scratch.iter()).zip(av) {
            *o = *s - *o * c;
        }
    }

    fn check_element(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        if a.level() > self.level {
            return Err(Error::DimensionMismatch(format!(
                "element level {} exceeds triple level {}",
                a.level(),
                self.level
            )));
        }
        a.lift(self.level)
    }

    /// Dense matrix of `D` in the orthonormal atom basis.
    pub fn dirac_matrix(&self) -> &DMatrix<f64> {
        self.dense_dirac.get_or_init(|| {
            let dim = self.atom_count();
            let mut m = DMatrix::zeros(dim, dim);
            let mut col = vec![0.0; dim];
            for w in 0..dim {
                col.fill(0.0);
                col[w] = 1.0;
                self.apply_dirac(&mut col);
                for v in 0..dim {
                    m[(v, w)] = col[v];
                }
            }
            m
        })
    }

    /// Dense matrix of `[D, M_a]` in the orthonormal atom basis.
    ///
    /// Real and skew-symmetric for the self-adjoint elements represented
    /// here, so `i [D, M_a]` is the self-adjoint form. Entrywise
    /// `C[v][w] = D[v][w] (a_w - a_v)`, exact in exact arithmetic.
    pub fn commutator(&self, a: &AlgebraElement) -> Result<DMatrix<f64>> {
        let a = self.check_element(a)?;
        let dim = self.atom_count();
        let d = self.dirac_matrix();
        let av = a.values();
        let mut c = DMatrix::zeros(dim, dim);
        for w in 0..dim {
            for v in 0..dim {
                c[(v, w)] = d[(v, w)] * (av[w] - av[v]);
            }
        }
        Ok(c)
    }

    /// Spectral norm of `[D, M_a]`.
    ///
    /// Dense symmetric eigensolve of `-C²` for dimensions up to
    /// [`DENSE_NORM_DIM`], deterministic power iteration in operator form
    /// above that.
    pub fn commutator_norm(&self, a: &AlgebraElement) -> Result<f64> {
        if self.atom_count() <= DENSE_NORM_DIM {
            self.commutator_norm_dense(a)
        } else {
            self.commutator_norm_iterative(a)
        }
    }

    /// Dense route: eigensolve of the PSD matrix `CᵀC = -C²`.
    pub fn commutator_norm_dense(&self, a: &AlgebraElement) -> Result<f64> {
        let c = self.commutator(a)?;
        let ctc = -(&c * &c);
        let eigs = ctc.symmetric_eigenvalues();
        Ok(eigs.iter().fold(0.0f64, |m, &x| m.max(x.max(0.0))).sqrt())
    }

    /// Iterative route: power iteration on `CᵀC` applied in operator form.
    pub fn commutator_norm_iterative(&self, a: &AlgebraElement) -> Result<f64> {
        let a = self.check_element(a)?;
        let dim = self.atom_count();
        let mut scratch = vec![0.0; dim];
        let r = skew_operator_norm(
            dim,
            |v, out| self.commutator_apply(&a, v, out, &mut scratch),
            POWER_TOL,
            POWER_MAX_ITER,
            POWER_SEED,
            None,
        );
        Ok(r.sigma)
    }

    /// The conditional expectation `π_k(a)`: average over coordinates
    /// `k+1..N`. `π_0(a) = τ(a)·1` and `π_N` is the identity.
    pub fn conditional_expectation(&self, a: &AlgebraElement, k: usize) -> Result<AlgebraElement> {
        if k > self.level {
            return Err(Error::InvalidInput(format!(
                "expectation level {k} out of range 0..={}",
                self.level
            )));
        }
        let a = self.check_element(a)?;
        let mut c = a.values().to_vec();
        walsh::forward_in_place(&mut c);
        for (mask, x) in c.iter_mut().enumerate() {
            if mask_level(mask) > k {
                *x = 0.0;
            }
        }
        walsh::inverse_in_place(&mut c);
        AlgebraElement::from_values(c)
    }

    /// `τ(a)` through the triple's state.
    pub fn tau(&self, a: &AlgebraElement) -> f64 {
        a.tau()
    }

    /// Best constant `c_k` with `‖π_k(a) - π_{k-1}(a)‖ ≤ c_k ‖Q_k a ξ‖`:
    /// the largest ratio `‖b‖_∞ / ‖b ξ‖` over the range of `π_k - π_{k-1}`.
    ///
    /// For the symmetric state the maximum is attained at `b = 1_A s_k`
    /// with `A` a single level-`(k-1)` atom, giving `2^{(k-1)/2}` exactly;
    /// the witnesses are enumerated rather than trusted.
    pub fn af_estimate_cn(&self, k: usize) -> Result<f64> {
        if k < 1 || k > self.level {
            return Err(Error::InvalidInput(format!(
                "constant index {k} out of range 1..={}",
                self.level
            )));
        }
        let half = 1usize << (k - 1);
        let mut best = 0.0f64;
        for atom in 0..half {
            // values of 1_atom · s_k on the 2^k level-k atoms
            let mut values = vec![0.0; 1 << k];
            values[atom] = -1.0; // coordinate k = 0 half
            values[atom + half] = 1.0; // coordinate k = 1 half
            let b = AlgebraElement::from_values(values)?;
            best = best.max(b.sup_norm() / b.l2_norm());
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::GammaParam;

    fn geometric(g: f64) -> DiracSpec {
        DiracSpec::Geometric(GammaParam::new(g).unwrap())
    }

    fn projection_matrix(t: &TruncatedTriple, k: usize) -> DMatrix<f64> {
        // P_k in the orthonormal atom basis, via the transforms
        let dim = t.atom_count();
        let mut m = DMatrix::zeros(dim, dim);
        let mut col = vec![0.0; dim];
        for w in 0..dim {
            col.fill(0.0);
            col[w] = 1.0;
            walsh::forward_in_place(&mut col);
            for (mask, x) in col.iter_mut().enumerate() {
                if mask_level(mask) > k {
                    *x = 0.0;
                }
            }
            walsh::inverse_in_place(&mut col);
            for v in 0..dim {
                m[(v, w)] = col[v];
            }
        }
        m
    }

    #[test]
    fn eigenvalue_recipes() {
        let spec = geometric(0.5);
        assert_eq!(spec.eigenvalue(0), Some(0.0));
        assert_eq!(spec.eigenvalue(1), Some(1.0));
        assert_eq!(spec.eigenvalue(3), Some(4.0));

        let af = DiracSpec::AfGeneral { beta: vec![0.5, 0.25], c: vec![1.0, 3.0] };
        assert_eq!(af.eigenvalue(2), Some(12.0));
        assert_eq!(af.eigenvalue(3), None);

        let uhf = DiracSpec::UhfSqrt { beta: vec![0.5], m: vec![4.0] };
        assert_eq!(uhf.eigenvalue(1), Some(4.0));

        let pw = DiracSpec::UhfPower { s: 2.0, m: vec![2.0, 4.0] };
        assert_eq!(pw.eigenvalue(2), Some(16.0));
    }

    #[test]
    fn build_triple_examples() {
        // N = 1: eigenvalues {0, 1} with multiplicities {1, 1}
        let t = TruncatedTriple::build(1, geometric(0.7)).unwrap();
        assert_eq!(t.dirac_diag(), &[0.0, 1.0]);

        // N = 3, geometric(1/2): eigenvalue 4 with multiplicity 4
        let t = TruncatedTriple::build(3, geometric(0.5)).unwrap();
        let count = t.dirac_diag().iter().filter(|&&d| d == 4.0).count();
        assert_eq!(count, 4);
        assert_eq!(t.eigenprojection_dim(3), 4);
        // eigenvalue 0 has multiplicity 1 at any level
        assert_eq!(t.dirac_diag().iter().filter(|&&d| d == 0.0).count(), 1);
    }

    #[test]
    fn build_rejects_bad_levels() {
        assert!(matches!(TruncatedTriple::build(0, geometric(0.5)), Err(Error::LevelZero)));
        assert!(matches!(
            TruncatedTriple::build(DEFAULT_MAX_LEVEL + 1, geometric(0.5)),
            Err(Error::LevelTooLarge { .. })
        ));
        // custom spec with too few eigenvalues
        assert!(TruncatedTriple::build(3, DiracSpec::Custom(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn walsh_vectors_are_orthonormal() {
        let level = 4;
        let dim = 1 << level;
        for s in 0..dim {
            let es = AlgebraElement::walsh_basis(level, s);
            for t in 0..dim {
                let et = AlgebraElement::walsh_basis(level, t);
                let gram: f64 = es
                    .values()
                    .iter()
                    .zip(et.values())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / dim as f64;
                let expected = if s == t { 1.0 } else { 0.0 };
                assert!((gram - expected).abs() <= 1e-12, "Gram[{s}][{t}] = {gram}");
            }
        }
    }

    #[test]
    fn eigenprojection_ranges_are_exact() {
        let t = TruncatedTriple::build(4, geometric(0.5)).unwrap();
        for mask in 0..t.atom_count() {
            let s = AlgebraElement::walsh_basis(4, mask);
            let k = mask_level(mask);
            // Q_k s_S = s_S when max S = k: π_k - π_{k-1} acts as identity
            let pk = t.conditional_expectation(&s, k).unwrap();
            assert_eq!(pk.values(), s.values());
            if k > 0 {
                let pk1 = t.conditional_expectation(&s, k - 1).unwrap();
                assert!(pk1.values().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn conditional_expectation_examples() {
        let t = TruncatedTriple::build(3, geometric(0.5)).unwrap();
        let s1 = AlgebraElement::symmetry(3, 1);
        // π_0(s_1) = τ(s_1)·1 = 0
        let p0 = t.conditional_expectation(&s1, 0).unwrap();
        assert!(p0.values().iter().all(|&v| v == 0.0));
        // π_1(s_1) = s_1
        let p1 = t.conditional_expectation(&s1, 1).unwrap();
        assert_eq!(p1.values(), s1.values());
        // π_n(s_n) - π_{n-1}(s_n) = s_n
        for n in 1..=3usize {
            let sn = AlgebraElement::symmetry(3, n);
            let hi = t.conditional_expectation(&sn, n).unwrap();
            let lo = t.conditional_expectation(&sn, n - 1).unwrap();
            let diff: Vec<f64> = hi.values().iter().zip(lo.values()).map(|(a, b)| a - b).collect();
            assert_eq!(diff, sn.values());
        }
        // π_N is the identity up to transform round-off
        let a = AlgebraElement::from_values(vec![0.3, -1.0, 2.0, 0.1, 0.0, 5.0, -2.5, 1.0]).unwrap();
        let pn = t.conditional_expectation(&a, 3).unwrap();
        for (x, y) in pn.values().iter().zip(a.values()) {
            assert!((x - y).abs() <= 1e-14);
        }
        assert!(t.conditional_expectation(&a, 4).is_err());
    }

    #[test]
    fn commutator_of_constant_is_zero() {
        let t = TruncatedTriple::build(3, geometric(0.5)).unwrap();
        let c = t.commutator(&AlgebraElement::constant(3, 2.5)).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));
        assert_eq!(t.commutator_norm(&AlgebraElement::constant(3, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn commutator_norm_of_symmetries() {
        for &g in &[0.3, 0.5, 0.9] {
            let t = TruncatedTriple::build(5, geometric(g)).unwrap();
            for n in 1..=5usize {
                let sn = AlgebraElement::symmetry(5, n);
                let norm = t.commutator_norm(&sn).unwrap();
                let expected = g.powi(1 - n as i32);
                assert!(
                    (norm - expected).abs() <= 1e-9 * expected,
                    "gamma {g}, n {n}: {norm} vs {expected}"
                );
                // γ^{n-1} s_n has commutator norm exactly 1
                let scaled = AlgebraElement::from_values(
                    sn.values().iter().map(|v| v * g.powi(n as i32 - 1)).collect(),
                )
                .unwrap();
                let unit = t.commutator_norm(&scaled).unwrap();
                assert!((unit - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn commutator_is_skew_symmetric() {
        let t = TruncatedTriple::build(4, geometric(0.4)).unwrap();
        let a = AlgebraElement::from_values((0..16).map(|i| ((i * 7 % 5) as f64) - 2.0).collect())
            .unwrap();
        let c = t.commutator(&a).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert!((c[(i, j)] + c[(j, i)]).abs() < 1e-12);
            }
        }
    }

    // Dual route for [D, s_n]: the proof's block identity
    // [D, s_n] = (D - α_n) P_{n-1} s_n Q_n - Q_n s_n (D - α_n) P_{n-1},
    // whose two summands have equal norms α_n.
    #[test]
    fn commutator_block_route_agrees() {
        let level = 2;
        let gamma = 0.5;
        let t = TruncatedTriple::build(level, geometric(gamma)).unwrap();
        let dim = t.atom_count();
        let d = t.dirac_matrix().clone();

        let block_route = |n: usize| -> DMatrix<f64> {
            let p_prev = projection_matrix(&t, n - 1);
            let q_n = &projection_matrix(&t, n) - &p_prev;
            let alpha_n = t.dirac_eigenvalue(n);
            let sn = AlgebraElement::symmetry(level, n);
            let m_sn = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(sn.values()));
            let shifted = (&d - alpha_n * DMatrix::identity(dim, dim)) * &p_prev;
            &shifted * &m_sn * &q_n - &q_n * &m_sn * &shifted
        };

        let direct = |a: &AlgebraElement| t.commutator(a).unwrap();

        // per-symmetry matrices agree entrywise
        for n in 1..=level {
            let sn = AlgebraElement::symmetry(level, n);
            let lhs = direct(&sn);
            let rhs = block_route(n);
            assert!((lhs - &rhs).norm() < 1e-12);
            // max-of-summands: each block has norm α_n
            let p_prev = projection_matrix(&t, n - 1);
            let q_n = &projection_matrix(&t, n) - &p_prev;
            let upper = &p_prev * &rhs * &q_n;
            let upper_norm = (-(&upper.transpose() * &upper))
                .symmetric_eigenvalues()
                .iter()
                .fold(0.0f64, |m, &x| m.max(-x))
                .max(
                    (upper.transpose() * &upper)
                        .symmetric_eigenvalues()
                        .iter()
                        .fold(0.0f64, |m, &x| m.max(x)),
                )
                .sqrt();
            assert!((upper_norm - t.dirac_eigenvalue(n)).abs() < 1e-10);
        }

        // the sum s_1 + s_2: both routes give the same norm
        let a = AlgebraElement::from_values(
            AlgebraElement::symmetry(level, 1)
                .values()
                .iter()
                .zip(AlgebraElement::symmetry(level, 2).values())
                .map(|(x, y)| x + y)
                .collect(),
        )
        .unwrap();
        let dense_norm = t.commutator_norm_dense(&a).unwrap();
        let assembled = block_route(1) + block_route(2);
        let ctc = -(&assembled * &assembled);
        let block_norm = ctc.symmetric_eigenvalues().iter().fold(0.0f64, |m, &x| m.max(x)).sqrt();
        assert!((dense_norm - block_norm).abs() <= 1e-10);
    }

    #[test]
    fn dense_and_iterative_norms_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for &g in &[0.3, 0.7] {
            let t = TruncatedTriple::build(6, geometric(g)).unwrap();
            for _ in 0..5 {
                let a = AlgebraElement::from_values(
                    (0..t.atom_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
                .unwrap();
                let dense = t.commutator_norm_dense(&a).unwrap();
                let iter = t.commutator_norm_iterative(&a).unwrap();
                assert!(
                    (dense - iter).abs() <= 1e-9 * dense.max(1.0),
                    "gamma {g}: dense {dense} vs iterative {iter}"
                );
            }
        }
    }

    #[test]
    fn high_levels_commute_with_low_level_elements() {
        let t = TruncatedTriple::build(5, geometric(0.5)).unwrap();
        // a depends only on the first 2 coordinates; π_k fixes it for k ≥ 2
        let a = AlgebraElement::from_values(vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let lifted = a.lift(5).unwrap();
        for k in 2..=5 {
            let pk = t.conditional_expectation(&lifted, k).unwrap();
            assert_eq!(pk.values(), lifted.values());
        }
    }

    #[test]
    fn expectation_steps_bounded_by_beta_on_unit_ball() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &g in &[0.5, 0.7] {
            let t = TruncatedTriple::build(6, geometric(g)).unwrap();
            for _ in 0..10 {
                let raw = AlgebraElement::from_values(
                    (0..t.atom_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
                .unwrap();
                let norm = t.commutator_norm(&raw).unwrap();
                if norm < 1e-12 {
                    continue;
                }
                let a = AlgebraElement::from_values(
                    raw.values().iter().map(|v| v / norm).collect(),
                )
                .unwrap();
                for k in 1..=6usize {
                    let hi = t.conditional_expectation(&a, k).unwrap();
                    let lo = t.conditional_expectation(&a, k - 1).unwrap();
                    let step = hi
                        .values()
                        .iter()
                        .zip(lo.values())
                        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                    let beta = g.powi(k as i32 - 1) / (1.0 - g);
                    assert!(step <= beta + 1e-9, "gamma {g}, k {k}: step {step} > beta {beta}");
                }
            }
        }
    }

    #[test]
    fn block_identity_for_expectation_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let t = TruncatedTriple::build(4, geometric(0.6)).unwrap();
        let dim = t.atom_count();
        let a = AlgebraElement::from_values((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        for n in 1..=4usize {
            let hi = t.conditional_expectation(&a, n).unwrap();
            let lo = t.conditional_expectation(&a, n - 1).unwrap();
            let diff: Vec<f64> = hi.values().iter().zip(lo.values()).map(|(x, y)| x - y).collect();
            let m_b = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&diff));
            let p_n = projection_matrix(&t, n);
            let p_prev = projection_matrix(&t, n - 1);
            let q_n = &p_n - &p_prev;
            let lhs = &p_n * &m_b * &p_n;
            let rhs = &p_prev * &m_b * &q_n + &q_n * &m_b * &p_prev;
            assert!((lhs - rhs).norm() <= 1e-12, "n = {n}");
            // in particular Q_n (π_n - π_{n-1})(a) Q_n = 0
            let corner = &q_n * &m_b * &q_n;
            assert!(corner.norm() <= 1e-12);
        }
    }

    #[test]
    fn af_constants_match_closed_form() {
        let t = TruncatedTriple::build(5, geometric(0.5)).unwrap();
        assert!((t.af_estimate_cn(1).unwrap() - 1.0).abs() < 1e-14);
        assert!((t.af_estimate_cn(3).unwrap() - 2.0).abs() < 1e-14);
        for k in 1..=5usize {
            let expected = 2f64.powf((k as f64 - 1.0) / 2.0);
            assert!((t.af_estimate_cn(k).unwrap() - expected).abs() < 1e-12);
        }
        assert!(t.af_estimate_cn(0).is_err());
        assert!(t.af_estimate_cn(6).is_err());
    }

    // brute-force oracle for the constant: the enumerated witness is a
    // true maximum of ‖b‖_∞ / ‖bξ‖ over the range of π_k - π_{k-1}
    #[test]
    fn af_constant_dominates_random_ratio() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let t = TruncatedTriple::build(5, geometric(0.5)).unwrap();
        for k in 1..=5usize {
            let ck = t.af_estimate_cn(k).unwrap();
            for _ in 0..50 {
                let a = AlgebraElement::from_values(
                    (0..t.atom_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
                .unwrap();
                let hi = t.conditional_expectation(&a, k).unwrap();
                let lo = t.conditional_expectation(&a, k - 1).unwrap();
                let b = AlgebraElement::from_values(
                    hi.values().iter().zip(lo.values()).map(|(x, y)| x - y).collect(),
                )
                .unwrap();
                if b.l2_norm() < 1e-13 {
                    continue;
                }
                assert!(b.sup_norm() / b.l2_norm() <= ck * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn eigenvalue_condition_examples() {
        // geometric(1/2): Σβ = (1-γ)^{-2} = 4
        let s = eigenvalue_condition_check(&geometric(0.5), 400).unwrap();
        assert!((s - 4.0).abs() < 1e-12);
        // repeated eigenvalue makes the sup infinite
        let rep = DiracSpec::Custom(vec![5.0, 5.0, 7.0]);
        assert_eq!(eigenvalue_condition_check(&rep, 3).unwrap(), f64::INFINITY);
        // geometric(0.9) partial sums approach 100
        let s = eigenvalue_condition_check(&geometric(0.9), 200).unwrap();
        assert!((s - 100.0).abs() < 1e-6);
    }

    #[test]
    fn uhf_sqrt_constant_comparison() {
        // for a full matrix level with m_k = 2^k the analogous constant is √m_k
        let t = TruncatedTriple::build(6, geometric(0.5)).unwrap();
        for k in 1..=6usize {
            let commutative = t.af_estimate_cn(k).unwrap();
            let uhf = (2f64.powi(k as i32)).sqrt();
            assert!((uhf / commutative - 2f64.sqrt()).abs() < 1e-12);
        }
    }
}
