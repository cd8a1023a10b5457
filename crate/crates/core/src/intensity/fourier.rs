//! Selection of fixed weekly harmonic frequencies from a binned activity profile.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub const WEEK_HOURS: f64 = 168.0;

/// Fallbacks, in order, when the profile has too few nonzero harmonics:
/// daily, weekly, half-day.
pub const FALLBACK_FREQUENCIES: [f64; 3] = [TAU / 24.0, TAU / WEEK_HOURS, TAU / 12.0];

/// Angular frequencies (rad/h) of the three strongest weekly harmonics.
///
/// `counts` is a histogram covering one week with equal-width bins (at most
/// one hour wide). Harmonic `n` has frequency `2πn/168`; the constant term is
/// ignored. Ties go to the lower harmonic.
pub fn fix_frequencies(counts: &[f64]) -> [f64; 3] {
    let n = counts.len();
    let mut chosen: Vec<f64> = Vec::with_capacity(3);
    if n >= 2 {
        let mut buf: Vec<Complex<f64>> = counts.iter().map(|&c| Complex::new(c, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = counts.iter().map(|c| c.abs()).fold(0.0, f64::max) * n as f64;
        let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
        let mut mags: Vec<(usize, f64)> = (1..=n / 2).map(|k| (k, buf[k].norm())).collect();
        mags.retain(|&(_, m)| m > tol);
        mags.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        chosen.extend(mags.iter().take(3).map(|&(k, _)| TAU * k as f64 / WEEK_HOURS));
    }
    for f in FALLBACK_FREQUENCIES {
        if chosen.len() == 3 {
            break;
        }
        if !chosen.iter().any(|&c| (c - f).abs() < 1e-12) {
            chosen.push(f);
        }
    }
    [chosen[0], chosen[1], chosen[2]]
}

/// Folds event times onto one week and counts them in `bins` equal bins.
pub fn weekly_histogram(times: impl IntoIterator<Item = f64>, bins: usize, shift: f64) -> Vec<f64> {
    let mut hist = vec![0.0; bins];
    let width = WEEK_HOURS / bins as f64;
    for t in times {
        let local = (t + shift).rem_euclid(WEEK_HOURS);
        let idx = ((local / width) as usize).min(bins - 1);
        hist[idx] += 1.0;
    }
    hist
}
