//! Event-anchored hidden-path approximation for one dyad.
//!
//! The dyad's window is cut so that every piece holds exactly one event; the
//! latent edge is held constant on a piece and moves by the CTMC between the
//! piece midpoints. Forward and backward recursions run in log space.

use crate::ctmc::CtmcParams;
use crate::error::Rejection;
use crate::events::{EventStream, ObservationWindow};
use crate::intensity::{DyadCovariates, Intensity, ModelSpec, RateForm, SegmentKey};
use crate::real::{log_add_exp, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// `N + 1` wall-clock cut points: window start, event midpoints, window end.
    /// A dyad without events keeps the two outer points.
    pub boundaries: Vec<f64>,
    /// Midpoint of each piece; empty when there are no events.
    pub midpoints: Vec<f64>,
}

impl Partition {
    pub fn pieces(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    pub fn has_events(&self) -> bool {
        !self.midpoints.is_empty()
    }
}

pub fn partition_events(stream: &EventStream) -> Partition {
    let (Some(start), Some(end)) = (stream.window.start(), stream.window.end()) else {
        return Partition {
            boundaries: Vec::new(),
            midpoints: Vec::new(),
        };
    };
    let mut boundaries = Vec::with_capacity(stream.times.len() + 1);
    boundaries.push(start);
    for w in stream.times.windows(2) {
        boundaries.push(0.5 * (w[0] + w[1]));
    }
    boundaries.push(end);
    let midpoints = if stream.times.is_empty() {
        Vec::new()
    } else {
        boundaries.windows(2).map(|b| 0.5 * (b[0] + b[1])).collect()
    };
    Partition {
        boundaries,
        midpoints,
    }
}

/// Per-piece log-emissions `[e(0), e(1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionTable<T> {
    pub rows: Vec<[T; 2]>,
}

/// Direct evaluation: `log λ_y(t_l) - ∫_{piece l ∩ window} λ_y`.
///
/// Without events the single row carries only the compensator. A piece whose
/// event is impossible in both states rejects the parameters.
pub fn emissions(
    partition: &Partition,
    stream: &EventStream,
    intensity: &Intensity<'_>,
    cov: &DyadCovariates,
) -> Result<EmissionTable<f64>, Rejection> {
    let mut rows = Vec::with_capacity(partition.pieces());
    for (l, b) in partition.boundaries.windows(2).enumerate() {
        let piece = stream.window.clip(b[0], b[1]);
        let mut row = [0.0; 2];
        for (y, slot) in row.iter_mut().enumerate() {
            let connected = y == 1;
            let mut e = -intensity.integrate(&piece, cov, connected);
            if let Some(&t) = stream.times.get(l) {
                e += intensity.rate(t, cov, connected).ln();
            }
            *slot = e;
        }
        check_row(&row, l)?;
        rows.push(row);
    }
    Ok(EmissionTable { rows })
}

fn check_row(row: &[f64; 2], l: usize) -> Result<(), Rejection> {
    if row.iter().any(|e| e.is_nan()) || row.iter().all(|&e| e == f64::NEG_INFINITY) {
        return Err(Rejection(format!("event {l} has zero intensity in both states")));
    }
    Ok(())
}

/// Log transition matrices between consecutive midpoints.
pub fn log_transitions<T: Real>(partition: &Partition, ctmc: &CtmcParams<T>) -> Vec<[[T; 2]; 2]> {
    partition
        .midpoints
        .windows(2)
        .map(|m| ctmc.log_transition_matrix(T::lit(m[1] - m[0])))
        .collect()
}

fn log_initial<T: Real>(ctmc: &CtmcParams<T>) -> [T; 2] {
    let (p0, p1) = ctmc.stationary();
    [p0.ln(), p1.ln()]
}

#[inline]
fn step<T: Real>(prev: &[T; 2], lt: &[[T; 2]; 2], e: &[T; 2]) -> [T; 2] {
    [
        log_add_exp(prev[0] + lt[0][0], prev[1] + lt[1][0]) + e[0],
        log_add_exp(prev[0] + lt[0][1], prev[1] + lt[1][1]) + e[1],
    ]
}

/// Forward pass without allocation. `trans.len()` must be `rows.len() - 1`.
pub fn forward_loglik_parts<T: Real>(rows: &[[T; 2]], trans: &[[[T; 2]; 2]], log_pi: [T; 2]) -> T {
    debug_assert_eq!(trans.len() + 1, rows.len().max(1));
    let Some(first) = rows.first() else {
        return T::zero();
    };
    let mut alpha = [log_pi[0] + first[0], log_pi[1] + first[1]];
    for (lt, e) in trans.iter().zip(&rows[1..]) {
        alpha = step(&alpha, lt, e);
    }
    log_add_exp(alpha[0], alpha[1])
}

/// `log p(t | θ)` marginalized over the latent path.
pub fn forward_loglik<T: Real>(
    emissions: &EmissionTable<T>,
    partition: &Partition,
    ctmc: &CtmcParams<T>,
) -> T {
    let trans = log_transitions(partition, ctmc);
    forward_loglik_parts(&emissions.rows, &trans, log_initial(ctmc))
}

/// Smoothed `P(y(t*_l) = 1 | t, θ)` at the midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPosterior<T> {
    pub midpoints: Vec<f64>,
    pub probs: Vec<T>,
    pub loglik: T,
    /// Set for a dyad without events: the posterior of its single latent state.
    pub zero_event_prob: Option<T>,
}

impl<T: Real> PathPosterior<T> {
    /// Linear between the bracketing midpoints, constant outside them.
    pub fn interp(&self, t: f64) -> T {
        let clamp = |p: T| p.max(T::zero()).min(T::one());
        if let Some(p) = self.zero_event_prob {
            return clamp(p);
        }
        let m = &self.midpoints;
        let k = m.partition_point(|&x| x <= t);
        if k == 0 {
            return clamp(self.probs[0]);
        }
        if k == m.len() {
            return clamp(self.probs[k - 1]);
        }
        let (t0, t1) = (m[k - 1], m[k]);
        let w = T::lit((t - t0) / (t1 - t0));
        clamp(self.probs[k - 1] + w * (self.probs[k] - self.probs[k - 1]))
    }
}

pub fn forward_backward<T: Real>(
    emissions: &EmissionTable<T>,
    partition: &Partition,
    ctmc: &CtmcParams<T>,
) -> PathPosterior<T> {
    let trans = log_transitions(partition, ctmc);
    let probs = smooth_parts(&emissions.rows, &trans, log_initial(ctmc));
    let loglik = forward_loglik_parts(&emissions.rows, &trans, log_initial(ctmc));
    if partition.has_events() {
        PathPosterior {
            midpoints: partition.midpoints.clone(),
            probs,
            loglik,
            zero_event_prob: None,
        }
    } else {
        PathPosterior {
            midpoints: Vec::new(),
            probs: Vec::new(),
            loglik,
            zero_event_prob: probs.first().copied(),
        }
    }
}

/// Posterior state-1 probabilities for every row.
pub fn smooth_parts<T: Real>(rows: &[[T; 2]], trans: &[[[T; 2]; 2]], log_pi: [T; 2]) -> Vec<T> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    let mut alpha = Vec::with_capacity(n);
    alpha.push([log_pi[0] + rows[0][0], log_pi[1] + rows[0][1]]);
    for l in 1..n {
        let a = step(&alpha[l - 1], &trans[l - 1], &rows[l]);
        alpha.push(a);
    }
    let mut probs = vec![T::zero(); n];
    let mut beta = [T::zero(); 2];
    for l in (0..n).rev() {
        if l + 1 < n {
            let lt = &trans[l];
            let nb = [rows[l + 1][0] + beta[0], rows[l + 1][1] + beta[1]];
            beta = [
                log_add_exp(lt[0][0] + nb[0], lt[0][1] + nb[1]),
                log_add_exp(lt[1][0] + nb[0], lt[1][1] + nb[1]),
            ];
        }
        let g0 = alpha[l][0] + beta[0];
        let g1 = alpha[l][1] + beta[1];
        // normalize per row rather than by the global evidence
        let z = log_add_exp(g0, g1);
        probs[l] = (g1 - z).exp().max(T::zero()).min(T::one());
    }
    probs
}

/// One observed piece of the window inside a partition cell.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    start: f64,
    end: f64,
    key: u16,
}

/// Precomputed geometry of a dyad for repeated likelihood evaluation.
///
/// Structural segments are resolved once; a parameter change then costs one
/// rate-form evaluation per distinct segment key and one integral per piece.
#[derive(Debug, Clone)]
pub struct DyadKernel {
    pub partition: Partition,
    pub cov: DyadCovariates,
    times: Vec<f64>,
    keys: Vec<SegmentKey>,
    event_keys: Vec<u16>,
    pieces: Vec<Piece>,
    /// `pieces[cell_start[l]..cell_start[l + 1]]` belong to cell `l`.
    cell_start: Vec<usize>,
    /// Observed measure per cell and key, `(cell, key, measure)` sparse rows.
    cell_measure: Vec<(u16, f64)>,
    measure_start: Vec<usize>,
}

impl DyadKernel {
    pub fn new(spec: &ModelSpec, stream: &EventStream, cov: DyadCovariates) -> Self {
        let partition = partition_events(stream);
        let mut keys: Vec<SegmentKey> = Vec::new();
        let local = |k: SegmentKey, keys: &mut Vec<SegmentKey>| -> u16 {
            match keys.iter().position(|&x| x == k) {
                Some(p) => p as u16,
                None => {
                    keys.push(k);
                    (keys.len() - 1) as u16
                }
            }
        };
        let event_keys = stream
            .times
            .iter()
            .map(|&t| local(spec.key_at(t), &mut keys))
            .collect();
        let mut pieces = Vec::new();
        let mut cell_start = vec![0];
        let mut cell_measure = Vec::new();
        let mut measure_start = vec![0];
        let mut segs = Vec::new();
        for b in partition.boundaries.windows(2) {
            let cell = stream.window.clip(b[0], b[1]);
            segs.clear();
            for s in cell.spans() {
                spec.segments(s.start, s.end, &mut segs);
            }
            let first = cell_measure.len();
            for s in &segs {
                let key = local(s.key, &mut keys);
                pieces.push(Piece {
                    start: s.start,
                    end: s.end,
                    key,
                });
                let len = s.end - s.start;
                match cell_measure[first..].iter_mut().find(|(k, _)| *k == key) {
                    Some((_, m)) => *m += len,
                    None => cell_measure.push((key, len)),
                }
            }
            cell_start.push(pieces.len());
            measure_start.push(cell_measure.len());
        }
        DyadKernel {
            partition,
            cov,
            times: stream.times.clone(),
            keys,
            event_keys,
            pieces,
            cell_start,
            cell_measure,
            measure_start,
        }
    }

    pub fn rows(&self) -> usize {
        self.partition.pieces()
    }

    pub fn event_count(&self) -> usize {
        self.times.len()
    }

    /// Same values as [`emissions`] up to rounding, written into `out`.
    pub fn fill_emissions<T: Real>(
        &self,
        intensity: &Intensity<'_>,
        out: &mut Vec<[T; 2]>,
    ) -> Result<(), Rejection> {
        out.clear();
        let forms: Vec<[RateForm<'_>; 2]> = self
            .keys
            .iter()
            .map(|&k| {
                [
                    intensity.form(k, &self.cov, false),
                    intensity.form(k, &self.cov, true),
                ]
            })
            .collect();
        let smooth = forms.iter().all(|f| !f[0].has_harmonics() && !f[1].has_harmonics());
        for l in 0..self.rows() {
            let mut row = [0.0f64; 2];
            if smooth {
                for &(k, m) in &self.cell_measure[self.measure_start[l]..self.measure_start[l + 1]] {
                    let f = &forms[k as usize];
                    row[0] -= f[0].constant * m;
                    row[1] -= f[1].constant * m;
                }
            } else {
                for p in &self.pieces[self.cell_start[l]..self.cell_start[l + 1]] {
                    let f = &forms[p.key as usize];
                    row[0] -= f[0].integral(p.start, p.end);
                    row[1] -= f[1].integral(p.start, p.end);
                }
            }
            if let Some(&t) = self.times.get(l) {
                let f = &forms[self.event_keys[l] as usize];
                row[0] += f[0].eval(t).ln();
                row[1] += f[1].eval(t).ln();
            }
            check_row(&row, l)?;
            out.push([T::lit(row[0]), T::lit(row[1])]);
        }
        Ok(())
    }

    pub fn fill_log_transitions<T: Real>(&self, ctmc: &CtmcParams<T>, out: &mut Vec<[[T; 2]; 2]>) {
        out.clear();
        out.extend(
            self.partition
                .midpoints
                .windows(2)
                .map(|m| ctmc.log_transition_matrix(T::lit(m[1] - m[0]))),
        );
    }

    /// Observed window measure covered by this kernel.
    pub fn observed_measure(&self) -> f64 {
        self.cell_measure.iter().map(|&(_, m)| m).sum()
    }
}

/// Convenience: smoothed path posterior for a dyad under bound parameters.
pub fn smooth_dyad(
    stream: &EventStream,
    intensity: &Intensity<'_>,
    cov: &DyadCovariates,
    ctmc: &CtmcParams<f64>,
) -> Result<PathPosterior<f64>, Rejection> {
    let partition = partition_events(stream);
    let em = emissions(&partition, stream, intensity, cov)?;
    Ok(forward_backward(&em, &partition, ctmc))
}

/// `true` when the window has no observable time at all.
pub fn is_degenerate(window: &ObservationWindow) -> bool {
    window.measure() <= 0.0
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::events::{ActorId, Dyad, Span};
    use crate::intensity::SwallowSpec;

    fn stream(times: Vec<f64>, window: ObservationWindow) -> EventStream {
        EventStream {
            dyad: Dyad::new(ActorId(1), ActorId(2)).unwrap(),
            times,
            window,
        }
    }

    /// Log-weight of one constant-per-piece path, in linear-space factors.
    fn enumerate(rows: &[[f64; 2]], mids: &[f64], ctmc: &CtmcParams<f64>) -> (f64, Vec<f64>) {
        let n = rows.len();
        let (p0, p1) = ctmc.stationary();
        let mut logw = Vec::with_capacity(1 << n);
        for mask in 0u32..(1 << n) {
            let y = |l: usize| ((mask >> l) & 1) as usize;
            let mut w = if y(0) == 1 { p1 } else { p0 }.ln();
            for l in 0..n {
                w += rows[l][y(l)];
                if l + 1 < n {
                    let p = ctmc.transition_matrix(mids[l + 1] - mids[l]);
                    w += p[y(l)][y(l + 1)].ln();
                }
            }
            logw.push(w);
        }
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logw.iter().map(|w| (w - max).exp()).sum();
        let mut marg = vec![0.0; n];
        for (mask, w) in logw.iter().enumerate() {
            let p = (w - max).exp() / z;
            for (l, m) in marg.iter_mut().enumerate() {
                if (mask >> l) & 1 == 1 {
                    *m += p;
                }
            }
        }
        (max + z.ln(), marg)
    }

    #[test]
    fn partition_examples() {
        let p = partition_events(&stream(vec![4.0], ObservationWindow::single(0.0, 10.0)));
        assert_eq!(p.boundaries, vec![0.0, 10.0]);
        assert_eq!(p.midpoints, vec![5.0]);
        let p = partition_events(&stream(vec![2.0, 4.0], ObservationWindow::single(0.0, 10.0)));
        assert_eq!(p.boundaries, vec![0.0, 3.0, 10.0]);
        assert_eq!(p.midpoints, vec![1.5, 6.5]);
        let p = partition_events(&stream(vec![], ObservationWindow::single(0.0, 10.0)));
        assert_eq!(p.pieces(), 1);
        assert!(p.midpoints.is_empty());
    }

    #[test]
    fn partition_ignores_holes() {
        let w = ObservationWindow::new(vec![Span::new(0.0, 2.0), Span::new(8.0, 10.0)]).unwrap();
        let p = partition_events(&stream(vec![1.0, 9.0], w));
        assert_eq!(p.boundaries, vec![0.0, 5.0, 10.0]);
        assert_eq!(p.midpoints, vec![2.5, 7.5]);
    }

    fn sessions(sessions: Vec<Span>) -> ModelSpec {
        ModelSpec::Swallow(SwallowSpec {
            sessions,
            sex_attribute: "sex".into(),
        })
    }

    fn swallow_theta(k: f64, c: f64, s: f64, q: f64) -> Vec<f64> {
        vec![k, c, c, c, s, q]
    }

    #[test]
    fn homogeneous_emission() {
        let spec = sessions(vec![Span::new(0.0, 10.0)]);
        let bound = spec.bind(&swallow_theta(0.7, 2.0, 0.1, 0.05)).unwrap();
        let cov = DyadCovariates {
            pairing: Some(crate::intensity::SexPairing::MM),
            ..Default::default()
        };
        let st = stream(vec![4.0], ObservationWindow::single(0.0, 10.0));
        let p = partition_events(&st);
        let em = emissions(&p, &st, &bound.intensity, &cov).unwrap();
        assert!((em.rows[0][0] - (0.7f64.ln() - 7.0)).abs() < 1e-14);
        assert!((em.rows[0][1] - ((3.0 * 0.7f64).ln() - 21.0)).abs() < 1e-13);
    }

    #[test]
    fn hole_emission_uses_observed_measure() {
        let spec = sessions(vec![Span::new(0.0, 10.0)]);
        let bound = spec.bind(&swallow_theta(0.7, 2.0, 0.1, 0.05)).unwrap();
        let cov = DyadCovariates {
            pairing: Some(crate::intensity::SexPairing::FF),
            ..Default::default()
        };
        let w = ObservationWindow::new(vec![Span::new(0.0, 3.0), Span::new(6.0, 10.0)]).unwrap();
        let st = stream(vec![2.0], w);
        let p = partition_events(&st);
        let em = emissions(&p, &st, &bound.intensity, &cov).unwrap();
        assert!((em.rows[0][0] - (0.7f64.ln() - 0.7 * 7.0)).abs() < 1e-14);
    }

    #[test]
    fn single_event_closed_forms() {
        let ctmc = CtmcParams::new(0.2, 0.3).unwrap();
        let em = EmissionTable {
            rows: vec![[-1.3, -0.4]],
        };
        let p = Partition {
            boundaries: vec![0.0, 1.0],
            midpoints: vec![0.5],
        };
        let mix = 0.8 * (-1.3f64).exp() + 0.2 * (-0.4f64).exp();
        assert!((forward_loglik(&em, &p, &ctmc) - mix.ln()).abs() < 1e-15);
        let post = forward_backward(&em, &p, &ctmc);
        assert!((post.probs[0] - 0.2 * (-0.4f64).exp() / mix).abs() < 1e-15);
    }

    #[test]
    fn uninformative_data_returns_prior() {
        let ctmc = CtmcParams::new(0.15, 0.2).unwrap();
        let mids: Vec<f64> = (0..20).map(|i| i as f64 * 1.7 + 0.5).collect();
        let mut b = vec![0.0];
        b.extend(mids.windows(2).map(|m| 0.5 * (m[0] + m[1])));
        b.push(40.0);
        let p = Partition {
            boundaries: b,
            midpoints: mids,
        };
        let em = EmissionTable {
            rows: vec![[-2.0, -2.0]; 20],
        };
        for q in forward_backward(&em, &p, &ctmc).probs {
            assert!((q - 0.15_f64).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_chain_reduces_to_poisson_loglik() {
        let ctmc = CtmcParams::new(1e-300, 1e-300).unwrap();
        let rows = vec![[-1.0, 5.0], [-2.5, 3.0], [-0.2, 1.0]];
        let p = Partition {
            boundaries: vec![0.0, 1.0, 2.0, 3.0],
            midpoints: vec![0.5, 1.5, 2.5],
        };
        let ll = forward_loglik(&EmissionTable { rows }, &p, &ctmc);
        assert!((ll - (-3.7_f64)).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_oracle_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..=8);
            let rows: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.gen_range(-8.0..1.0), rng.gen_range(-8.0..1.0)])
                .collect();
            let mut mids: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..30.0)).collect();
            mids.sort_by(f64::total_cmp);
            let p = Partition {
                boundaries: vec![0.0; n + 1],
                midpoints: mids.clone(),
            };
            let ctmc = CtmcParams::new(rng.gen_range(0.01..0.9), rng.gen_range(0.01..2.0)).unwrap();
            let em = EmissionTable { rows: rows.clone() };
            let (ll, marg) = enumerate(&rows, &mids, &ctmc);
            let post = forward_backward(&em, &p, &ctmc);
            assert!((post.loglik - ll).abs() <= 1e-11 * ll.abs().max(1.0));
            for (a, b) in post.probs.iter().zip(&marg) {
                assert!((a - b).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn long_chain_is_stable() {
        let n = 10_000;
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|l| if l % 3 == 0 { [-800.0, -1.0] } else { [-0.5, -700.0] })
            .collect();
        let mids: Vec<f64> = (0..n).map(|l| l as f64 * 0.01).collect();
        let p = Partition {
            boundaries: vec![0.0; n + 1],
            midpoints: mids,
        };
        let ctmc = CtmcParams::new(1e-4, 1e-6).unwrap();
        let post = forward_backward(&EmissionTable { rows }, &p, &ctmc);
        assert!(post.loglik.is_finite());
        assert!(post.probs.iter().all(|q| q.is_finite() && (0.0..=1.0).contains(q)));
    }

    #[test]
    fn kernel_matches_direct_route() {
        let windows = vec![Span::new(0.0, 3.0), Span::new(12.0, 15.0), Span::new(24.0, 27.0)];
        let spec = sessions(windows.clone());
        let bound = spec.bind(&[0.4, 0.9, 0.2, 1.5, 2.0, 0.5, 0.1, 0.05]).unwrap();
        let cov = DyadCovariates {
            pairing: Some(crate::intensity::SexPairing::MF),
            ..Default::default()
        };
        let w = ObservationWindow::new(vec![
            Span::new(0.0, 1.0),
            Span::new(1.5, 3.0),
            Span::new(12.0, 15.0),
            Span::new(24.0, 26.0),
        ])
        .unwrap();
        let st = stream(vec![0.5, 2.0, 12.2, 13.0, 25.0], w);
        let p = partition_events(&st);
        let direct = emissions(&p, &st, &bound.intensity, &cov).unwrap();
        let kernel = DyadKernel::new(&spec, &st, cov.clone());
        let mut rows: Vec<[f64; 2]> = Vec::new();
        kernel.fill_emissions(&bound.intensity, &mut rows).unwrap();
        for (a, b) in rows.iter().zip(&direct.rows) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        assert!((kernel.observed_measure() - st.window.measure()).abs() < 1e-12);
    }

    #[test]
    fn zero_event_dyad() {
        let spec = sessions(vec![Span::new(0.0, 10.0)]);
        let bound = spec.bind(&swallow_theta(0.3, 1.0, 0.1, 0.05)).unwrap();
        let cov = DyadCovariates {
            pairing: Some(crate::intensity::SexPairing::FF),
            ..Default::default()
        };
        let st = stream(vec![], ObservationWindow::single(0.0, 10.0));
        let ctmc = CtmcParams::new(0.1, 0.05).unwrap();
        let post = smooth_dyad(&st, &bound.intensity, &cov, &ctmc).unwrap();
        let mix = 0.9 * (-3.0f64).exp() + 0.1 * (-6.0f64).exp();
        assert!((post.loglik - mix.ln()).abs() < 1e-14);
        let p1 = 0.1 * (-6.0f64).exp() / mix;
        assert!((post.interp(3.0) - p1).abs() < 1e-15);
        assert!((post.interp(-100.0) - p1).abs() < 1e-15);
    }

    #[test]
    fn interpolation_rules() {
        let post = PathPosterior {
            midpoints: vec![1.0, 3.0, 5.0],
            probs: vec![0.2_f64, 0.6, 1.0],
            loglik: 0.0,
            zero_event_prob: None,
        };
        assert_eq!(post.interp(3.0), 0.6);
        assert!((post.interp(2.0) - 0.4_f64).abs() < 1e-15);
        assert_eq!(post.interp(0.0), 0.2);
        assert_eq!(post.interp(9.0), 1.0);
    }

    #[test]
    fn single_precision_forward() {
        let ctmc = CtmcParams::new(0.2f32, 0.3f32).unwrap();
        let em = EmissionTable {
            rows: vec![[-1.3f32, -0.4], [-0.1, -2.0]],
        };
        let p = Partition {
            boundaries: vec![0.0, 1.0, 2.0],
            midpoints: vec![0.5, 1.5],
        };
        let (ll, _) = enumerate(&[[-1.3, -0.4], [-0.1, -2.0]], &[0.5, 1.5], &CtmcParams::new(0.2, 0.3).unwrap());
        assert!((forward_loglik(&em, &p, &ctmc) as f64 - ll).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn marginals_sum_to_one_and_evidence_is_monotone(
            raw in prop::collection::vec((-20.0f64..2.0, -20.0f64..2.0, 0.01f64..5.0), 1..30),
            s in 0.01f64..0.95,
            q in 0.001f64..3.0,
            which in 0usize..30,
            shift in 0.0f64..50.0,
        ) {
            let rows: Vec<[f64; 2]> = raw.iter().map(|r| [r.0, r.1]).collect();
            let mut t = 0.0;
            let mids: Vec<f64> = raw.iter().map(|r| { t += r.2; t }).collect();
            let n = rows.len();
            let p = Partition { boundaries: vec![0.0; n + 1], midpoints: mids };
            let ctmc = CtmcParams::new(s, q).unwrap();
            let trans = log_transitions(&p, &ctmc);
            let lp = log_initial(&ctmc);
            let base = smooth_parts(&rows, &trans, lp);
            prop_assert!(base.iter().all(|x| (0.0..=1.0).contains(x)));
            let l = which % n;
            let mut bumped = rows.clone();
            bumped[l][1] += shift;
            let after = smooth_parts(&bumped, &trans, lp);
            prop_assert!(after[l] >= base[l] - 1e-12);
        }
    }
}
