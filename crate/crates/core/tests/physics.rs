mod common;

use common::{cvec, grid, model};
use nlse_recovery::rng::seeded_rng;
use nlse_recovery::*;
use proptest::prelude::*;

#[test]
fn energy_is_conserved_under_default_channel() {
    let m = model();
    let mut rng = seeded_rng(1);
    for _ in 0..5 {
        let s = SparseSignal::random(30, 3, &mut rng).unwrap();
        let u0 = Waveform::new(*m.grid(), m.synthesize(&s.coeffs).unwrap()).unwrap();
        let (u1, _) = m.solver().propagate(&u0, false).unwrap();
        assert!((u1.energy() - u0.energy()).abs() / u0.energy() < 1e-8);
    }
}

#[test]
fn pure_kerr_matches_closed_form() {
    let ch = FiberChannel::new(0.0, 2.0, 0.3, 0.01).unwrap();
    let u0 = Waveform::from_fn(grid(), |t| {
        Complex64::new((-t * t / 4.0).exp(), 0.2 * t.sin())
    })
    .unwrap();
    let (u1, _) = ssfm_propagate(&u0, &ch, false).unwrap();
    for (a, b) in u0.values().iter().zip(u1.values()) {
        let exact = a * Complex64::cis(2.0 * a.norm_sqr() * 0.3);
        assert!((exact - b).norm() < 1e-13);
    }
}

#[test]
fn fundamental_soliton_keeps_its_shape() {
    let ch = FiberChannel::new(-10.0, 2.0, 0.3, 0.001).unwrap();
    let a = 5f64.sqrt();
    let u0 = Waveform::from_fn(grid(), |t| Complex64::new(a / t.cosh(), 0.0)).unwrap();
    let (u1, _) = ssfm_propagate(&u0, &ch, false).unwrap();
    let phase = Complex64::cis(2.0 * 5.0 * 0.3 / 2.0);
    let exact = Waveform::from_fn(grid(), |t| phase * a / t.cosh()).unwrap();
    assert!(u1.relative_l2_error(&exact) < 1e-3);
}

#[test]
fn positive_dispersion_destroys_the_soliton() {
    let ch = FiberChannel::new(10.0, 2.0, 0.3, 0.001).unwrap();
    let a = 5f64.sqrt();
    let u0 = Waveform::from_fn(grid(), |t| Complex64::new(a / t.cosh(), 0.0)).unwrap();
    let (u1, _) = ssfm_propagate(&u0, &ch, false).unwrap();
    let phase = Complex64::cis(2.0 * 5.0 * 0.3 / 2.0);
    let exact = Waveform::from_fn(grid(), |t| phase * a / t.cosh()).unwrap();
    assert!(u1.relative_l2_error(&exact) > 0.1);
}

#[test]
fn halving_dz_quarters_the_error() {
    let m = model();
    let mut rng = seeded_rng(4);
    let u0 = Waveform::new(*m.grid(), m.synthesize(&cvec(&mut rng, 30, 0.7)).unwrap()).unwrap();
    let run = |dz: f64| {
        let ch = FiberChannel::new(-10.0, 2.0, 0.3, dz).unwrap();
        ssfm_propagate(&u0, &ch, false).unwrap().0
    };
    let reference = run(0.3 / 256.0);
    let e1 = run(0.3 / 8.0).relative_l2_error(&reference);
    let e2 = run(0.3 / 16.0).relative_l2_error(&reference);
    assert!((e1 / e2).log2() >= 1.8, "order {}", (e1 / e2).log2());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn dbp_inverts_ssfm(
        beta2 in -20.0f64..20.0,
        gamma in 0.0f64..4.0,
        length in 0.05f64..0.6,
        dz in 0.004f64..0.02,
        seed in any::<u64>(),
    ) {
        let ch = FiberChannel::new(beta2, gamma, length, dz).unwrap();
        let mut rng = seeded_rng(seed);
        let bank = PulseBank::evenly_spaced(20, 1.0, &grid(), None).unwrap();
        let u = synthesize_waveform(&cvec(&mut rng, 20, 1.0), &bank, &grid()).unwrap();
        let (v, _) = ssfm_propagate(&u, &ch, false).unwrap();
        prop_assert!(dbp(&v, &ch).unwrap().relative_l2_error(&u) < 1e-8);
    }

    #[test]
    fn energy_conserved_for_random_channels(
        beta2 in -20.0f64..20.0,
        gamma in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let ch = FiberChannel::new(beta2, gamma, 0.3, 0.01).unwrap();
        let mut rng = seeded_rng(seed);
        let bank = PulseBank::evenly_spaced(10, 1.0, &grid(), None).unwrap();
        let u = synthesize_waveform(&cvec(&mut rng, 10, 1.0), &bank, &grid()).unwrap();
        let (v, _) = ssfm_propagate(&u, &ch, false).unwrap();
        prop_assert!((v.energy() - u.energy()).abs() <= 1e-10 * u.energy());
    }
}
