use mssvs::fock;
use mssvs::{CircuitParams, ConditionalState, Error};

fn scaled_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-2)
}

#[test]
fn higher_moments_and_long_pnd_match_oracle() {
    for p in [
        CircuitParams::new(0.5, 0.05, 0.1, 0.9, 1).unwrap(),
        CircuitParams::new(0.4, 0.2, 0.0, 0.7, 2).unwrap(),
    ] {
        let st = ConditionalState::new(&p).unwrap();
        let run = fock::simulate_auto(&p).unwrap();
        let rho = run.state.unwrap();
        for (k, l) in [(2, 2), (3, 1), (4, 0), (3, 3)] {
            let a = st.moment(k, l).unwrap();
            let b = rho.moment(k, l);
            assert!((a - b).norm() <= 1e-8 * b.norm().max(1.0), "⟨a†^{k} a^{l}⟩: {a} vs {b}");
        }
        let pnd = st.pnd_upto(24).unwrap();
        for (n, want) in rho.pnd().iter().take(25).enumerate() {
            assert!(scaled_error(pnd[n], *want) < 1e-8, "P({n})");
        }
        for (x, y) in [(0.3, -0.4), (-1.2, 0.8), (2.5, 0.0)] {
            assert!(scaled_error(st.wigner(x, y).unwrap().w, rho.wigner(x, y)) < 1e-8);
        }
    }
}

#[test]
fn impossible_herald_agrees() {
    let p = CircuitParams::new(0.5, 0.0, 1.0, 0.9, 2).unwrap();
    let st = ConditionalState::new(&p).unwrap();
    assert!(!st.is_defined());
    assert!(matches!(st.variances(), Err(Error::UndefinedState { .. })));
    let run = fock::simulate_auto(&p).unwrap();
    assert!(run.state.is_none() && run.p_d < fock::HERALD_FLOOR);
}
