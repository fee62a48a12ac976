#![allow(dead_code)]

use nlse_recovery::rng::SimRng;
use nlse_recovery::*;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn grid() -> TemporalGrid {
    TemporalGrid::centered(256, 0.3).unwrap()
}

pub fn model_with(gamma: f64) -> ForwardModel {
    let g = grid();
    let bank = PulseBank::evenly_spaced(30, 1.0, &g, None).unwrap();
    let ch = FiberChannel::new(-10.0, gamma, 0.3, 0.01).unwrap();
    ForwardModel::full_grid(g, bank, ch).unwrap()
}

pub fn model() -> ForwardModel {
    model_with(2.0)
}

pub fn cn(rng: &mut SimRng, scale: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn cvec(rng: &mut SimRng, n: usize, scale: f64) -> Vec<Complex64> {
    (0..n).map(|_| cn(rng, scale)).collect()
}
