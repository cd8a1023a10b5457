//! Two-state continuous-time Markov chain for a latent edge.
//!
//! State 1 is "connected". With sparsity `s` and rate `q` the generator is
//! `[[-s q, s q], [(1-s) q, -(1-s) q]]`, whose exponential gives the closed
//! form used by [`CtmcParams::transition_matrix`]; the stationary law is
//! `(1-s, s)`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::Rejection;
use crate::intensity::DyadCovariates;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtmcParams<T> {
    pub s: T,
    pub q: T,
}

impl<T: Real> CtmcParams<T> {
    pub fn new(s: T, q: T) -> Result<Self, Rejection> {
        if !(s > T::zero() && s < T::one()) {
            return Err(Rejection(format!("sparsity {s} outside (0, 1)")));
        }
        if !(q > T::zero()) || !q.is_finite() {
            return Err(Rejection(format!("transition rate {q} is not positive")));
        }
        Ok(CtmcParams { s, q })
    }

    /// Row-stochastic `P(dt)`; `P[a][b]` is the probability of moving from `a` to `b`.
    pub fn transition_matrix(&self, dt: T) -> [[T; 2]; 2] {
        let (s, q) = (self.s, self.q);
        // 1 - e^{-q dt}, accurate for small q dt
        let moved = -(-q * dt).exp_m1();
        let p01 = s * moved;
        let p10 = (T::one() - s) * moved;
        [[T::one() - p01, p01], [p10, T::one() - p10]]
    }

    /// Entrywise log of [`Self::transition_matrix`].
    pub fn log_transition_matrix(&self, dt: T) -> [[T; 2]; 2] {
        let (s, q) = (self.s, self.q);
        let moved = -(-q * dt).exp_m1();
        let ln_moved = moved.ln();
        [
            [(-(s * moved)).ln_1p(), s.ln() + ln_moved],
            [(T::one() - s).ln() + ln_moved, (-((T::one() - s) * moved)).ln_1p()],
        ]
    }

    pub fn stationary(&self) -> (T, T) {
        (T::one() - self.s, self.s)
    }

    /// Exit rates `(from 0, from 1)`.
    pub fn exit_rates(&self) -> (T, T) {
        (self.s * self.q, (T::one() - self.s) * self.q)
    }
}

/// How sparsity and rate depend on dyadic covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SparsityModel {
    /// `s = (1 + s1 1[same floor]) (1 + s2 1[same year]) s0`.
    FloorYear { s0: f64, s1: f64, s2: f64, q: f64 },
    /// Common `s` and `q` for every dyad.
    Constant { s: f64, q: f64 },
}

impl SparsityModel {
    pub fn sparsity_for(&self, cov: &DyadCovariates) -> Result<CtmcParams<f64>, Rejection> {
        match *self {
            SparsityModel::FloorYear { s0, s1, s2, q } => {
                if s1 < 0.0 || s2 < 0.0 {
                    return Err(Rejection("negative sparsity effect".into()));
                }
                let floor = if cov.same_floor { 1.0 + s1 } else { 1.0 };
                let year = if cov.same_year { 1.0 + s2 } else { 1.0 };
                CtmcParams::new(floor * year * s0, q)
            }
            SparsityModel::Constant { s, q } => CtmcParams::new(s, q),
        }
    }
}

/// Piecewise-constant 0/1 path on wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPath {
    pub start: f64,
    pub end: f64,
    pub initial: bool,
    /// Times at which the state flips, strictly increasing inside `(start, end)`.
    pub switches: Vec<f64>,
}

impl LatentPath {
    pub fn constant(start: f64, end: f64, state: bool) -> Self {
        LatentPath {
            start,
            end,
            initial: state,
            switches: Vec::new(),
        }
    }

    pub fn state_at(&self, t: f64) -> bool {
        let flips = self.switches.partition_point(|&s| s <= t);
        self.initial ^ (flips % 2 == 1)
    }

    /// `(start, end, state)` pieces covering `[start, end)`.
    pub fn pieces(&self) -> Vec<(f64, f64, bool)> {
        let mut out = Vec::with_capacity(self.switches.len() + 1);
        let mut cur = self.start;
        let mut state = self.initial;
        for &s in &self.switches {
            out.push((cur, s, state));
            cur = s;
            state = !state;
        }
        out.push((cur, self.end, state));
        out
    }

    /// Time spent in state 1 inside `[a, b)`.
    pub fn occupancy(&self, a: f64, b: f64) -> f64 {
        self.pieces()
            .into_iter()
            .filter(|p| p.2)
            .map(|(s, e, _)| (e.min(b) - s.max(a)).max(0.0))
            .sum()
    }
}

/// Draws a stationary path on `[start, end)` by exponential holding times.
pub fn sample_path<R: Rng + ?Sized>(
    params: &CtmcParams<f64>,
    start: f64,
    end: f64,
    rng: &mut R,
) -> LatentPath {
    let initial = rng.gen::<f64>() < params.s;
    let (rate0, rate1) = params.exit_rates();
    let hold0 = Exp::new(rate0).expect("exit rates are positive");
    let hold1 = Exp::new(rate1).expect("exit rates are positive");
    let mut switches = Vec::new();
    let mut state = initial;
    let mut t = start;
    loop {
        t += if state { hold1.sample(rng) } else { hold0.sample(rng) };
        if !(t < end) {
            break;
        }
        switches.push(t);
        state = !state;
    }
    LatentPath {
        start,
        end,
        initial,
        switches,
    }
}
