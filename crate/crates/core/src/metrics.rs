//! Recovery quality metrics.

use num_complex::Complex64;

use crate::error::{ensure_len, Result};
use crate::signal::QpskSignal;

/// Squared L2 distance `‖s − ŝ‖²` of one trial.
pub fn mse(truth: &[Complex64], estimate: &[Complex64]) -> Result<f64> {
    ensure_len("mse operands", truth.len(), estimate.len())?;
    Ok(truth
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum())
}

/// Fraction of positions whose symbols differ.
pub fn ser(truth: &QpskSignal, estimate: &QpskSignal) -> Result<f64> {
    ensure_len("ser operands", truth.len(), estimate.len())?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    Ok(symbol_errors(truth, estimate) as f64 / truth.len() as f64)
}

pub fn symbol_errors(truth: &QpskSignal, estimate: &QpskSignal) -> usize {
    truth
        .symbols()
        .iter()
        .zip(estimate.symbols())
        .filter(|(a, b)| a != b)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::QPSK_POINTS;

    #[test]
    fn mse_cases() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &[Complex64::new(0.0, 0.0); 2]).unwrap(), 1.0);
        assert!(mse(&a, &a[..1]).is_err());
    }

    #[test]
    fn ser_cases() {
        let t = QpskSignal::new(QPSK_POINTS.to_vec()).unwrap();
        assert_eq!(ser(&t, &t).unwrap(), 0.0);
        let mut wrong = QPSK_POINTS.to_vec();
        wrong[2] = QPSK_POINTS[0];
        assert_eq!(ser(&t, &QpskSignal::new(wrong).unwrap()).unwrap(), 0.25);
    }
}
