use spectral_cantor::{AlgebraElement, DiracSpec, GammaParam, TruncatedTriple};

fn main() {
    for &g in &[0.3, 0.9] {
        let spec = DiracSpec::Geometric(GammaParam::new(g).unwrap());
        let t = TruncatedTriple::build(10, spec).unwrap();
        for n in 1..=10usize {
            let sn = AlgebraElement::symmetry(10, n);
            let iter = t.commutator_norm_iterative(&sn).unwrap();
            let expected = g.powi(1 - n as i32);
            println!("g={g} n={n:2} iter={iter:.12e} expected={expected:.12e} rel={:.3e}",
                (iter - expected).abs() / expected);
        }
    }
}
