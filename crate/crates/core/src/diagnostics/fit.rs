//! Exponential decay fits by least squares on the logarithm.

use crate::error::{invalid, Error, Result};

/// Minimum number of samples in a fit window.
pub const MIN_SAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Negated slope of `ln(value)` against time.
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Fits `value ~ A exp(-rate t)` over the samples with `t` in `window`
/// (inclusive; the whole series when `None`).
///
/// A series with no spread in `ln(value)` is a perfect fit with rate 0.
pub fn fit_decay_rate(
    times: &[f64],
    values: &[f64],
    window: Option<(f64, f64)>,
) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(invalid("times and values differ in length"));
    }
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in the fit window, need {MIN_SAMPLES}",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid(format!("nonpositive value {v} at t = {t}")));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in &pts {
        let dt = t - tm;
        let dy = v.ln() - ym;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(invalid("fit window has a single distinct time"));
    }
    let (slope, r_squared) = if syy <= f64::EPSILON * f64::EPSILON * n * ym.abs().max(1.0).powi(2) {
        (0.0, 1.0)
    } else {
        (sty / stt, (sty * sty / (stt * syy)).min(1.0))
    };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        samples: pts.len(),
    })
}
