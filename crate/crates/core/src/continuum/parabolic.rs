//! Brownian motion with parabolic drift, reflected at its running minimum.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Excursion, ExcursionKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicPath {
    pub lambda: f64,
    pub horizon: f64,
    pub dt: f64,
    /// `W^λ(k·dt) = W(k·dt) + λ k dt − (k dt)²/2`.
    pub w: Vec<f64>,
    /// `B^λ = W^λ − running minimum`.
    pub b: Vec<f64>,
}

impl ParabolicPath {
    fn grid_len(horizon: f64, dt: f64) -> Result<usize> {
        if !(horizon > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidParameter("horizon and dt must be positive".into()));
        }
        Ok((horizon / dt).round() as usize + 1)
    }

    /// The noiseless path `λt − t²/2`.
    pub fn drift_only(lambda: f64, horizon: f64, dt: f64) -> Result<Self> {
        let n = Self::grid_len(horizon, dt)?;
        Ok(Self::from_w(lambda, horizon, dt, (0..n).map(|k| drift(lambda, k as f64 * dt)).collect()))
    }

    /// Wraps a hand-built reflected path, e.g. for tests of excursion extraction.
    pub fn from_reflected(dt: f64, b: Vec<f64>) -> Self {
        let horizon = dt * (b.len().saturating_sub(1)) as f64;
        Self { lambda: 0.0, horizon, dt, w: b.clone(), b }
    }

    fn from_w(lambda: f64, horizon: f64, dt: f64, w: Vec<f64>) -> Self {
        let mut run = f64::INFINITY;
        let b = w
            .iter()
            .map(|&x| {
                run = run.min(x);
                x - run
            })
            .collect();
        Self { lambda, horizon, dt, w, b }
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

fn drift(lambda: f64, t: f64) -> f64 {
    lambda * t - 0.5 * t * t
}

pub fn reflected_parabolic<R: Rng + ?Sized>(lambda: f64, horizon: f64, dt: f64, rng: &mut R) -> Result<ParabolicPath> {
    let n = ParabolicPath::grid_len(horizon, dt)?;
    let sd = dt.sqrt();
    let mut w = Vec::with_capacity(n);
    let mut bm = 0.0;
    w.push(0.0);
    for k in 1..n {
        let z: f64 = StandardNormal.sample(rng);
        bm += sd * z;
        w.push(bm + drift(lambda, k as f64 * dt));
    }
    Ok(ParabolicPath::from_w(lambda, horizon, dt, w))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedExcursion {
    pub start: f64,
    /// Number of strictly positive grid points times `dt`.
    pub length: f64,
    /// The run together with the zero grid points on either side.
    pub excursion: Excursion,
    pub touches_horizon: bool,
}

/// Maximal runs of `B > 0` on the grid, longest first, ties by start.
pub fn extract_excursions(path: &ParabolicPath) -> Vec<ExtractedExcursion> {
    let b = &path.b;
    let mut out = Vec::new();
    let mut k = 0;
    while k < b.len() {
        if b[k] > 0.0 {
            let s = k;
            while k < b.len() && b[k] > 0.0 {
                k += 1;
            }
            let count = k - s;
            let mut values = Vec::with_capacity(count + 2);
            values.push(0.0);
            values.extend_from_slice(&b[s..k]);
            values.push(0.0);
            out.push(ExtractedExcursion {
                start: s as f64 * path.dt,
                length: count as f64 * path.dt,
                excursion: Excursion {
                    sigma: (count + 1) as f64 * path.dt,
                    values,
                    kind: ExcursionKind::Extracted,
                },
                touches_horizon: k == b.len(),
            });
        } else {
            k += 1;
        }
    }
    out.sort_by(|x, y| y.length.total_cmp(&x.length).then(x.start.total_cmp(&y.start)));
    if out.first().is_some_and(|e| e.touches_horizon) {
        warn!("longest excursion is cut off at the horizon T = {}", path.horizon);
    }
    out
}
