//! Fast transform between atom values and Walsh coefficients.
//!
//! A function on the `2^N` level-`N` atoms expands as `a = Σ_S c_S s_S`
//! where `s_S = Π_{i∈S} s_i` and `s_i` takes the value `2 w_i - 1` on the
//! atom with bits `w`. Bit `i-1` of an atom index is coordinate `i`; the
//! same convention indexes coefficients by the subset mask `S`.
//!
//! The forward pass averages with a factor 1/2 per stage, so the pair is
//! an exact inverse in exact arithmetic: per coordinate, values `(a₀, a₁)`
//! on the two half-atoms become `((a₀+a₁)/2, (a₁-a₀)/2)` and back.

/// Atom values to Walsh coefficients, in place. Length must be a power of two.
pub fn forward_in_place(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        let mut block = 0;
        while block < n {
            for i in block..block + h {
                let a0 = v[i];
                let a1 = v[i + h];
                v[i] = 0.5 * (a0 + a1);
                v[i + h] = 0.5 * (a1 - a0);
            }
            block += 2 * h;
        }
        h *= 2;
    }
}

/// Walsh coefficients to atom values, in place. Length must be a power of two.
pub fn inverse_in_place(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        let mut block = 0;
        while block < n {
            for i in block..block + h {
                let c0 = v[i];
                let c1 = v[i + h];
                v[i] = c0 - c1;
                v[i + h] = c0 + c1;
            }
            block += 2 * h;
        }
        h *= 2;
    }
}

/// Value of the Walsh function `s_S` on the atom `w`: `Π_{i∈S} (2 w_i - 1)`.
pub fn walsh_value(mask: usize, atom: usize) -> f64 {
    // -1 for every coordinate in S where the atom bit is 0
    let zeros_in_s = mask & !atom;
    if (zeros_in_s.count_ones() & 1) == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_point_transform() {
        let mut v = vec![3.0, 7.0];
        forward_in_place(&mut v);
        assert_eq!(v, vec![5.0, 2.0]); // mean and s_1 coefficient
        inverse_in_place(&mut v);
        assert_eq!(v, vec![3.0, 7.0]);
    }

    #[test]
    fn matches_direct_expansion() {
        let n = 3usize;
        let dim = 1 << n;
        let values: Vec<f64> = (0..dim).map(|w| (w as f64) * 0.37 - 1.0).collect();
        let mut coeffs = values.clone();
        forward_in_place(&mut coeffs);
        // c_S = 2^{-N} Σ_w a(w) s_S(w)
        for mask in 0..dim {
            let direct: f64 = (0..dim).map(|w| values[w] * walsh_value(mask, w)).sum::<f64>()
                / dim as f64;
            assert!((coeffs[mask] - direct).abs() < 1e-14, "mask {mask}");
        }
        // reconstruction a(w) = Σ_S c_S s_S(w)
        for w in 0..dim {
            let rec: f64 = (0..dim).map(|mask| coeffs[mask] * walsh_value(mask, w)).sum();
            assert!((rec - values[w]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn forward_inverse_round_trip(
            log_n in 0usize..8,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let dim = 1usize << log_n;
            let original: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut v = original.clone();
            forward_in_place(&mut v);
            inverse_in_place(&mut v);
            for (a, b) in v.iter().zip(&original) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
