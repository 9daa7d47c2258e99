//! Points of the infinite product group `{0,1}^∞`, the first-disagreement
//! index, the weighted-Hamming metric `δ_γ` and the standard intervals
//! `V(s, n)` that cover the space at level `n`.
//!
//! Coordinates are 1-based in the public API; storage is 0-based bit words.

use std::fmt;

use crate::error::{Error, Result};

/// A scale parameter validated to lie strictly inside `(0, 1)`.
///
/// Downstream code relies on the validation and never rechecks the range.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct GammaParam(f64);

impl GammaParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && 0.0 < gamma && gamma < 1.0 {
            Ok(GammaParam(gamma))
        } else {
            Err(Error::InvalidGamma(gamma))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The coordinate weight `γ^{n-1} (1 - γ)` for 1-based coordinate `n`.
    #[inline]
    pub fn weight(self, n: usize) -> f64 {
        self.0.powi(n as i32 - 1) * (1.0 - self.0)
    }

    /// `γ^n`.
    #[inline]
    pub fn pow(self, n: usize) -> f64 {
        self.0.powi(n as i32)
    }
}

const WORD_BITS: usize = 64;

/// A point of `{0,1}^∞` with finitely many nonzero coordinates.
///
/// Coordinate `n ≥ 1` is bit `n-1` of the packed words. Everything beyond
/// the stored words is zero. Equality and hashing are defined on the
/// coordinate function, so trailing zeros never matter; the constructor
/// keeps the word vector trimmed to enforce that.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CantorPoint {
    words: Vec<u64>,
}

impl CantorPoint {
    /// The all-zeros point.
    pub fn zero() -> Self {
        CantorPoint { words: Vec::new() }
    }

    /// Build from 0/1 coordinates, entry `i` being coordinate `i + 1`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut words = vec![0u64; bits.len().div_ceil(WORD_BITS)];
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => words[i / WORD_BITS] |= 1 << (i % WORD_BITS),
                _ => return Err(Error::InvalidInput(format!("coordinate {} is {b}, want 0 or 1", i + 1))),
            }
        }
        Ok(Self::from_words(words))
    }

    /// Parse a bit string such as `"0110"`, coordinate 1 leftmost.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "invalid character {ch:?} at position {} in bit string {s:?}",
                        i + 1
                    )))
                }
            }
        }
        Self::from_bits(&bits)
    }

    /// The atom of the level-`level` truncation containing this point:
    /// bit `k` of the index is coordinate `k + 1`.
    pub fn from_index(index: u64, level: usize) -> Self {
        assert!(level <= WORD_BITS, "index form supports at most 64 coordinates");
        let masked = if level == WORD_BITS { index } else { index & ((1u64 << level) - 1) };
        Self::from_words(vec![masked])
    }

    fn from_words(mut words: Vec<u64>) -> Self {
        while words.last() == Some(&0) {
            words.pop();
        }
        CantorPoint { words }
    }

    /// Coordinate `n ≥ 1`, as 0 or 1.
    pub fn coordinate(&self, n: usize) -> u8 {
        assert!(n >= 1, "coordinates are 1-based");
        let i = n - 1;
        match self.words.get(i / WORD_BITS) {
            Some(w) => ((w >> (i % WORD_BITS)) & 1) as u8,
            None => 0,
        }
    }

    /// Largest `n` with coordinate `n` nonzero; 0 for the zero point.
    pub fn support(&self) -> usize {
        match self.words.last() {
            None => 0,
            Some(w) => (self.words.len() - 1) * WORD_BITS + (WORD_BITS - w.leading_zeros() as usize),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    /// The projection `π_n`: coordinates beyond `n` replaced by zero.
    pub fn truncate(&self, n: usize) -> Self {
        let keep_words = n.div_ceil(WORD_BITS).min(self.words.len());
        let mut words = self.words[..keep_words].to_vec();
        if let Some(last) = words.last_mut() {
            let used = n - (keep_words - 1) * WORD_BITS;
            if used < WORD_BITS {
                *last &= (1u64 << used) - 1;
            }
        }
        Self::from_words(words)
    }

    /// Atom index of the level-`level` truncation (inverse of [`from_index`]).
    ///
    /// [`from_index`]: CantorPoint::from_index
    pub fn atom_index(&self, level: usize) -> u64 {
        assert!(level <= WORD_BITS, "index form supports at most 64 coordinates");
        let w = self.words.first().copied().unwrap_or(0);
        if level == WORD_BITS {
            w
        } else {
            w & ((1u64 << level) - 1)
        }
    }

    /// Bit string of the first `level` coordinates, coordinate 1 leftmost.
    pub fn to_bit_string(&self, level: usize) -> String {
        (1..=level).map(|n| if self.coordinate(n) == 1 { '1' } else { '0' }).collect()
    }

    /// All `2^n` points supported in the first `n` coordinates, in atom-index order.
    pub fn enumerate_level(n: usize) -> impl Iterator<Item = CantorPoint> {
        assert!(n < WORD_BITS, "enumeration is limited to fewer than 64 coordinates");
        (0u64..(1u64 << n)).map(move |idx| CantorPoint::from_index(idx, n))
    }
}

impl fmt::Display for CantorPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = self.support().max(1);
        write!(f, "{}", self.to_bit_string(level))
    }
}

/// Least `n` with `x(n) ≠ y(n)`; `None` iff the points are equal.
pub fn first_disagreement(x: &CantorPoint, y: &CantorPoint) -> Option<usize> {
    let len = x.words.len().max(y.words.len());
    for i in 0..len {
        let xw = x.words.get(i).copied().unwrap_or(0);
        let yw = y.words.get(i).copied().unwrap_or(0);
        let diff = xw ^ yw;
        if diff != 0 {
            return Some(i * WORD_BITS + diff.trailing_zeros() as usize + 1);
        }
    }
    None
}

/// The metric `δ_γ(x, y) = Σ_n |x(n) - y(n)| γ^{n-1} (1 - γ)`.
///
/// The sum is finite because both points have finite support.
pub fn delta_gamma(x: &CantorPoint, y: &CantorPoint, gamma: GammaParam) -> f64 {
    let len = x.words.len().max(y.words.len());
    let mut sum = 0.0;
    for i in 0..len {
        let xw = x.words.get(i).copied().unwrap_or(0);
        let yw = y.words.get(i).copied().unwrap_or(0);
        let mut diff = xw ^ yw;
        while diff != 0 {
            let bit = diff.trailing_zeros() as usize;
            sum += gamma.weight(i * WORD_BITS + bit + 1);
            diff &= diff - 1;
        }
    }
    sum
}

/// The cylinder `V(s, n)` of points whose first `n` coordinates equal `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardInterval {
    prefix: CantorPoint,
    level: usize,
}

impl StandardInterval {
    /// Requires the prefix to be supported in the first `level` coordinates.
    pub fn new(prefix: CantorPoint, level: usize) -> Result<Self> {
        if prefix.support() > level {
            return Err(Error::InvalidInput(format!(
                "prefix has support {} past interval level {level}",
                prefix.support()
            )));
        }
        Ok(StandardInterval { prefix, level })
    }

    pub fn prefix(&self) -> &CantorPoint {
        &self.prefix
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn contains(&self, x: &CantorPoint) -> bool {
        x.truncate(self.level) == self.prefix
    }

    /// Diameter under `δ_γ`: exactly `γ^n` at level `n`.
    pub fn diameter(&self, gamma: GammaParam) -> f64 {
        gamma.pow(self.level)
    }
}

/// The standard interval of diameter at most `bound / (1 - γ)` containing `u`.
///
/// `n = ⌈log(bound / (1-γ)) / log γ⌉` in exact arithmetic; because the
/// ceiling is computed in floating point it is re-checked against
/// `γ^n ≤ bound / (1-γ)` directly and bumped when rounding broke it.
pub fn standard_interval_of(
    u: &CantorPoint,
    diameter_bound: f64,
    gamma: GammaParam,
) -> Result<StandardInterval> {
    let g = gamma.value();
    if !(diameter_bound > 0.0) || diameter_bound >= 1.0 - g {
        return Err(Error::InvalidInput(format!(
            "diameter bound {diameter_bound} must lie in (0, 1 - gamma) = (0, {})",
            1.0 - g
        )));
    }
    let ratio = diameter_bound / (1.0 - g);
    let mut n = (ratio.ln() / g.ln()).ceil() as i64;
    if n < 1 {
        n = 1;
    }
    let mut n = n as usize;
    while gamma.pow(n) > ratio {
        n += 1;
    }
    StandardInterval::new(u.truncate(n), n)
}

/// `Σ_{s ∈ S_n} (γ^n)^t = 2^n γ^{nt}`; exactly 1 when `t = log 2 / (-log γ)`.
pub fn cover_sum(level: usize, t: f64, gamma: GammaParam) -> f64 {
    assert!(level >= 1, "cover sums start at level 1");
    let per_level = 2.0 * gamma.value().powf(t);
    per_level.powi(level as i32)
}

/// The exponent `t_γ = log 2 / (-log γ)` at which the level cover sums equal 1.
pub fn critical_exponent(gamma: GammaParam) -> f64 {
    std::f64::consts::LN_2 / -gamma.value().ln()
}
