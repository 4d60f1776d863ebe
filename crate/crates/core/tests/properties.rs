use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use scnls::dynamics::{galilean_transform, solve, DtPolicy, NLSParams, SolveOptions};
use scnls::fit::fit_decay_exponent;
use scnls::grid::{forward_transform, inverse_transform, make_grid, spectral_shift, SampledField};
use scnls::initial_data::{synthesize, Envelope, WavepacketSpec};
use scnls::phase_space::{fourier_wigner, wigner_transform};

fn bumps(n: usize, half: f64, params: &[(f64, f64, f64, f64)], eps: f64) -> SampledField {
    let g = make_grid(1, n, half).unwrap();
    SampledField::from_fn(g, eps, |x| {
        params
            .iter()
            .map(|&(c, w, k, phase)| {
                (-PI * ((x[0] - c) / w).powi(2)).exp() * C64::from_polar(1.0, 2.0 * PI * k * x[0] + phase)
            })
            .sum()
    })
    .unwrap()
    .normalized()
    .unwrap()
}

fn bump_params() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((-1.5..1.5f64, 0.5..1.2f64, -2.0..2.0f64, 0.0..6.0f64), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_and_round_trip(p in bump_params()) {
        let f = bumps(256, 8.0, &p, 1.0);
        let s = forward_transform(&f);
        prop_assert!((s.mass() - f.mass()).abs() < 1e-12);
        let back = inverse_transform(&s);
        let err = back.l2_distance(&f).unwrap();
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn shifts_compose(p in bump_params(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let f = bumps(256, 8.0, &p, 1.0);
        let two = spectral_shift(&spectral_shift(&f, &[a]).unwrap(), &[b]).unwrap();
        let one = spectral_shift(&f, &[a + b]).unwrap();
        prop_assert!(two.l2_distance(&one).unwrap() < 1e-10);
    }

    #[test]
    fn wigner_sup_is_the_mass(p in bump_params(), eps in 0.2..1.0f64) {
        let f = bumps(256, 8.0, &p, eps);
        let sup = fourier_wigner(&f).unwrap().spectrum.max_abs();
        prop_assert!((sup - 1.0).abs() < 1e-10, "{}", sup);
    }

    #[test]
    fn wigner_is_real_and_integrates_to_the_mass(p in bump_params()) {
        let f = bumps(256, 8.0, &p, 0.5);
        let w = wigner_transform(&f).unwrap();
        prop_assert!(w.function.imaginary_residue() < 1e-10);
        prop_assert!((w.function.integral() - 1.0).norm() < 1e-8);
    }

    #[test]
    fn mass_is_conserved(b in -0.05..0.05f64, x0 in -0.5..0.5f64, k0 in -0.5..0.5f64) {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![x0], vec![k0]);
        let g = make_grid(1, 1024, 8.0).unwrap();
        let f = synthesize(&spec, 0.1, &g).unwrap();
        let params = NLSParams::new(0.1, 1.0, b).unwrap();
        let traj = solve(&params, &f, 0.25, &SolveOptions::default()).unwrap();
        prop_assert!(traj.mass_drift() < 1e-10);
    }

    #[test]
    fn galilean_boost_commutes_with_the_flow(b in -0.1..0.1f64, v in -0.4..0.4f64, x0 in -0.3..0.3f64) {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.0]);
        let g = make_grid(1, 1024, 8.0).unwrap();
        let f = synthesize(&spec, 0.1, &g).unwrap();
        let params = NLSParams::new(0.1, 1.0, b).unwrap();
        let options = SolveOptions::default().with_dt(DtPolicy::Fixed(1e-3));
        let boosted = solve(&params, &galilean_transform(&f, &[x0], &[v], 0.0).unwrap(), 0.2, &options).unwrap();
        let plain = solve(&params, &f, 0.2, &options).unwrap();
        let moved = galilean_transform(plain.last(), &[x0], &[v], 0.2).unwrap();
        prop_assert!(boosted.last().l2_distance(&moved).unwrap() < 1e-8);
    }

    #[test]
    fn power_laws_fit_exactly(exp in -1.0..1.0f64, c in 0.1..10.0f64) {
        let rows: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().map(|&e: &f64| (e, c * e.powf(exp))).collect();
        let fit = fit_decay_exponent(&rows).unwrap();
        prop_assert!((fit.slope - exp).abs() < 1e-10);
        prop_assert!(fit.r_squared > 1.0 - 1e-10);
    }
}
