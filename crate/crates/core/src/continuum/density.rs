//! Unnormalised density of excursion lengths of `B^λ`.

use log::warn;
use rand::Rng;
use serde::Serialize;

use super::brownian_excursion;
use crate::error::{Error, Result};
use crate::stats::{Estimate, Summer};

pub const DEFAULT_DENSITY_GRID: usize = 1024;

/// Warn above this relative standard error of the moment factor.
const RELATIVE_SE_LIMIT: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub x: f64,
    pub lambda: f64,
    /// `(2π)^{-1/2} x^{-3/2} exp(−((x−λ)³ + λ³)/6)`, exact.
    pub prefactor: f64,
    /// Monte Carlo `E[exp(x^{3/2} ∫₀¹ e)]`.
    pub moment: Estimate,
    pub value: f64,
    pub std_error: f64,
    /// `∫₀¹ e` of each proposal, kept for resampling.
    #[serde(skip)]
    pub areas: Vec<f64>,
}

impl DensityEstimate {
    /// An area of the `exp(∫e)`-tilted excursion of length `x`, resampled from
    /// the proposals.
    pub fn resample_area<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = self.x.powf(1.5);
        let top = self.areas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = self.areas.iter().map(|a| (c * (a - top)).exp()).sum();
        let mut u = rng.random::<f64>() * total;
        for &a in &self.areas {
            u -= (c * (a - top)).exp();
            if u <= 0.0 {
                return c * a;
            }
        }
        c * self.areas[self.areas.len() - 1]
    }
}

pub fn density_prefactor(lambda: f64, x: f64) -> f64 {
    (2.0 * std::f64::consts::PI).powf(-0.5) * x.powf(-1.5) * (-((x - lambda).powi(3) + lambda.powi(3)) / 6.0).exp()
}

pub fn excursion_sigma_density<R: Rng + ?Sized>(lambda: f64, x: f64, mc_samples: usize, rng: &mut R) -> Result<DensityEstimate> {
    excursion_sigma_density_with_grid(lambda, x, mc_samples, DEFAULT_DENSITY_GRID, rng)
}

pub fn excursion_sigma_density_with_grid<R: Rng + ?Sized>(
    lambda: f64,
    x: f64,
    mc_samples: usize,
    grid: usize,
    rng: &mut R,
) -> Result<DensityEstimate> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("x = {x} must be positive")));
    }
    if mc_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 Monte Carlo samples".into()));
    }
    let c = x.powf(1.5);
    let mut areas = Vec::with_capacity(mc_samples);
    let (mut s, mut sq) = (Summer::default(), Summer::default());
    for _ in 0..mc_samples {
        let a = brownian_excursion(1.0, grid, rng)?.area();
        let w = (c * a).exp();
        s.add(w);
        sq.add(w * w);
        areas.push(a);
    }
    let n = mc_samples as f64;
    let mean = s.value() / n;
    let var = ((sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
    let moment = Estimate { value: mean, std_error: (var / n).sqrt(), n: mc_samples };
    if moment.std_error > RELATIVE_SE_LIMIT * moment.value {
        warn!("density at x = {x}: moment factor has relative standard error {:.3}", moment.std_error / moment.value);
    }
    let prefactor = density_prefactor(lambda, x);
    Ok(DensityEstimate {
        x,
        lambda,
        prefactor,
        moment,
        value: prefactor * moment.value,
        std_error: prefactor * moment.std_error,
        areas,
    })
}
