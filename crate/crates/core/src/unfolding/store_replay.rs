use num_complex::Complex64;

use crate::error::{ensure_len, Error, Result};
use crate::gradient::fidelity_and_gradient;
use crate::model::ForwardModel;
use crate::params::UnfoldedParams;
use crate::recovery::ista_step;
use crate::shrinkage::Shrinkage;
use crate::signal::MeasurementVector;

/// Physics gradients recorded along one PA-ISTA trajectory, plus its starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStore {
    x0: Vec<Complex64>,
    grads: Vec<Vec<Complex64>>,
}

impl GradientStore {
    pub fn initial_state(&self) -> &[Complex64] {
        &self.x0
    }

    /// Number of stored iterations.
    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn gradient(&self, k: usize) -> &[Complex64] {
        &self.grads[k]
    }
}

/// Runs PA-ISTA from `x0` with fixed parameters, recording each Wirtinger gradient.
pub fn store_phase(
    model: &ForwardModel,
    y: &MeasurementVector,
    x0: Vec<Complex64>,
    params: &UnfoldedParams,
    shrink: &dyn Shrinkage,
) -> Result<(GradientStore, Vec<Complex64>)> {
    params.validate()?;
    ensure_len("initial state", model.num_coeffs(), x0.len())?;
    let mut grads = Vec::with_capacity(params.len());
    let mut x = x0.clone();
    for k in 0..params.len() {
        let (_, g) = fidelity_and_gradient(model, &x, y)?;
        let g = g.into_inner();
        x = ista_step(&x, &g, params.step(k), params.theta[k], shrink);
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("store-phase iterate"));
        }
        grads.push(g);
    }
    Ok((GradientStore { x0, grads }, x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    /// `‖s_U − s_truth‖²`.
    pub loss: f64,
    pub grad_eta: Vec<f64>,
    pub grad_theta: Vec<f64>,
    pub estimate: Vec<Complex64>,
}

/// Replays the first `layers` iterations with stored gradients as constants and
/// returns the loss against `truth` with its exact derivatives in `(η, θ)`.
/// Derivatives for layers beyond `layers` are zero.
pub fn replay_phase(
    store: &GradientStore,
    truth: &[Complex64],
    params: &UnfoldedParams,
    shrink: &dyn Shrinkage,
    layers: usize,
) -> Result<ReplayOutcome> {
    params.validate()?;
    ensure_len("truth", store.x0.len(), truth.len())?;
    if layers > store.len() || layers > params.len() {
        return Err(Error::DimensionMismatch {
            context: "replay layers",
            expected: store.len().min(params.len()),
            actual: layers,
        });
    }

    // forward, keeping every pre-shrinkage point
    let mut pre = Vec::with_capacity(layers);
    let mut s = store.x0.clone();
    for k in 0..layers {
        let step = params.step(k);
        let z: Vec<Complex64> = s
            .iter()
            .zip(&store.grads[k])
            .map(|(x, g)| x - g * step)
            .collect();
        s = z
            .iter()
            .map(|&zi| shrink.apply(zi, params.theta[k]))
            .collect();
        pre.push(z);
    }
    let loss: f64 = s.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum();

    let mut grad_eta = vec![0.0; params.len()];
    let mut grad_theta = vec![0.0; params.len()];
    let mut upstream: Vec<Complex64> = s.iter().zip(truth).map(|(a, b)| (a - b) * 2.0).collect();
    for k in (0..layers).rev() {
        let theta = params.theta[k];
        let mut d_step = 0.0;
        for ((u, z), g) in upstream.iter_mut().zip(&pre[k]).zip(&store.grads[k]) {
            let (gz, gp) = shrink.backward(*z, theta, *u);
            grad_theta[k] += gp;
            d_step -= (gz.conj() * g).re;
            *u = gz;
        }
        grad_eta[k] = d_step * params.eta[k].signum();
    }
    Ok(ReplayOutcome {
        loss,
        grad_eta,
        grad_theta,
        estimate: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FiberChannel;
    use crate::grid::TemporalGrid;
    use crate::init::{dbp_initialize, PeakReadout};
    use crate::noise::NoiseModel;
    use crate::rng::seeded_rng;
    use crate::shrinkage::{QpskTanh, SoftThreshold};
    use crate::signal::{PulseBank, QpskSignal, SparseSignal};

    fn model(n: usize, length: f64) -> ForwardModel {
        let g = TemporalGrid::centered(256, 0.3).unwrap();
        let bank = PulseBank::evenly_spaced(n, 1.0, &g, None).unwrap();
        let ch = FiberChannel::new(-10.0, 2.0, length, 0.01).unwrap();
        ForwardModel::full_grid(g, bank, ch).unwrap()
    }

    fn sparse_sample(
        m: &ForwardModel,
        seed: u64,
    ) -> (Vec<Complex64>, MeasurementVector, Vec<Complex64>) {
        let mut rng = seeded_rng(seed);
        let s = SparseSignal::random(30, 3, &mut rng).unwrap();
        let y = m
            .measure(&s.coeffs, &NoiseModel::new(15.0).unwrap(), &mut rng)
            .unwrap();
        let x0 = dbp_initialize(m, &y, &PeakReadout).unwrap();
        (s.coeffs, y, x0)
    }

    #[test]
    fn empty_schedule() {
        let m = model(30, 0.3);
        let (_, y, x0) = sparse_sample(&m, 1);
        let p = UnfoldedParams::constant(0, 0.01, 0.001);
        let (store, est) = store_phase(&m, &y, x0.clone(), &p, &SoftThreshold).unwrap();
        assert!(store.is_empty());
        assert_eq!(est, x0);
    }

    #[test]
    fn zero_signal_stores_zero_gradients() {
        let m = model(30, 0.3);
        let zero = vec![Complex64::new(0.0, 0.0); 30];
        let y = m
            .measure(&zero, &NoiseModel::noiseless(), &mut seeded_rng(0))
            .unwrap();
        let x0 = dbp_initialize(&m, &y, &PeakReadout).unwrap();
        let p = UnfoldedParams::constant(5, 0.01, 0.001);
        let (store, _) = store_phase(&m, &y, x0, &p, &SoftThreshold).unwrap();
        assert_eq!(store.len(), 5);
        assert!((0..5).all(|k| store.gradient(k).iter().all(|g| g.norm() == 0.0)));
    }

    #[test]
    fn replay_reproduces_store_bitwise() {
        let m = model(30, 0.3);
        let (s, y, x0) = sparse_sample(&m, 2);
        let p = UnfoldedParams::constant(30, 0.01, 0.001);
        let (store, est) = store_phase(&m, &y, x0, &p, &SoftThreshold).unwrap();
        assert_eq!(store.len(), 30);
        let out = replay_phase(&store, &s, &p, &SoftThreshold, 30).unwrap();
        assert_eq!(out.estimate, est);
    }

    #[test]
    fn saturated_thresholds_kill_everything() {
        let m = model(30, 0.3);
        let (s, y, x0) = sparse_sample(&m, 3);
        let p = UnfoldedParams::constant(4, 0.01, 100.0);
        let (store, _) = store_phase(&m, &y, x0, &p, &SoftThreshold).unwrap();
        let out = replay_phase(&store, &s, &p, &SoftThreshold, 4).unwrap();
        assert!(out.estimate.iter().all(|c| c.norm() == 0.0));
        let energy: f64 = s.iter().map(|c| c.norm_sqr()).sum();
        assert_eq!(out.loss, energy);
        assert!(out.grad_eta.iter().all(|&g| g == 0.0));
    }

    fn fd_check(
        store: &GradientStore,
        truth: &[Complex64],
        p: &UnfoldedParams,
        shrink: &dyn Shrinkage,
    ) {
        let out = replay_phase(store, truth, p, shrink, p.len()).unwrap();
        let eps = 1e-6;
        let loss_at =
            |q: &UnfoldedParams| replay_phase(store, truth, q, shrink, q.len()).unwrap().loss;
        for k in [0, p.len() / 2, p.len() - 1] {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.eta[k] += eps;
            minus.eta[k] -= eps;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
            assert!(
                (fd - out.grad_eta[k]).abs() <= 1e-4 * fd.abs().max(1e-6),
                "eta[{k}] fd {fd} an {}",
                out.grad_eta[k]
            );
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.theta[k] += eps;
            minus.theta[k] -= eps;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
            assert!(
                (fd - out.grad_theta[k]).abs() <= 1e-4 * fd.abs().max(1e-6),
                "theta[{k}] fd {fd} an {}",
                out.grad_theta[k]
            );
        }
    }

    #[test]
    fn replay_gradients_match_finite_differences() {
        let m = model(30, 0.3);
        let (s, y, x0) = sparse_sample(&m, 4);
        let p = UnfoldedParams::constant(10, 0.02, 0.01);
        let (store, _) = store_phase(&m, &y, x0, &p, &SoftThreshold).unwrap();
        fd_check(&store, &s, &p, &SoftThreshold);
    }

    #[test]
    fn qpsk_replay_gradients_match_finite_differences() {
        let m = model(15, 0.5);
        let mut rng = seeded_rng(5);
        let s = QpskSignal::random(15, &mut rng);
        let y = m
            .measure(s.symbols(), &NoiseModel::new(10.0).unwrap(), &mut rng)
            .unwrap();
        let x0 = dbp_initialize(&m, &y, &PeakReadout).unwrap();
        let p = UnfoldedParams::constant(8, 0.02, 1.5);
        let (store, _) = store_phase(&m, &y, x0, &p, &QpskTanh).unwrap();
        fd_check(&store, s.symbols(), &p, &QpskTanh);
    }

    #[test]
    fn replay_rejects_mismatch() {
        let m = model(30, 0.3);
        let (s, y, x0) = sparse_sample(&m, 6);
        let p = UnfoldedParams::constant(3, 0.01, 0.001);
        let (store, _) = store_phase(&m, &y, x0, &p, &SoftThreshold).unwrap();
        assert!(replay_phase(&store, &s[..10], &p, &SoftThreshold, 3).is_err());
        assert!(replay_phase(&store, &s, &p, &SoftThreshold, 4).is_err());
    }
}
