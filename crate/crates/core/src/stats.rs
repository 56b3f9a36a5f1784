//! Summaries and goodness-of-fit tests used by the experiments.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Summer {
    sum: f64,
    comp: f64,
}

impl Summer {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum(xs: &[f64]) -> f64 {
    let mut s = Summer::default();
    xs.iter().for_each(|&x| s.add(x));
    s.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let mut s = Summer::default();
    xs.iter().for_each(|&x| s.add((x - m) * (x - m)));
    s.value() / (xs.len() - 1) as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        Self { value: mean(xs), std_error: std_error(xs), n: xs.len() }
    }
}

pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let lc = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
    (lc + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

pub fn poisson_pmf(mu: f64, k: u64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * mu.ln() - mu - ln_gamma(k as f64 + 1.0)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of `observed` counts against cell probabilities.
///
/// Cells expected to hold fewer than 5 counts are pooled into one.
pub fn chi_square_gof(observed: &[f64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::InvalidParameter("observed and probabilities differ in length".into()));
    }
    let total: f64 = sum(observed);
    let psum: f64 = sum(probs);
    let mut cells = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = total * p / psum;
        if e < 5.0 {
            pool_o += o;
            pool_e += e;
        } else {
            cells.push((o, e));
        }
    }
    if pool_e > 0.0 || pool_o > 0.0 {
        cells.push((pool_o, pool_e));
    }
    if cells.len() < 2 {
        return Err(Error::InvalidParameter("fewer than two usable cells".into()));
    }
    let mut stat = 0.0;
    for &(o, e) in &cells {
        if e == 0.0 {
            if o > 0.0 {
                return Ok(ChiSquareTest { statistic: f64::INFINITY, dof: cells.len() - 1, p_value: 0.0 });
            }
            continue;
        }
        stat += (o - e) * (o - e) / e;
    }
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ChiSquareTest { statistic: stat, dof, p_value: 1.0 - dist.cdf(stat) })
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`, ties handled exactly.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d.max((i as f64 / na - j as f64 / nb).abs())
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic p-value of a KS distance `d` at effective size `n_eff`.
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let t = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * d;
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        s += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
    }
    s.clamp(0.0, 1.0)
}

pub fn counts<K: Ord + Clone, I: IntoIterator<Item = K>>(items: I) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

/// Total variation between two empirical laws given as count tables.
pub fn total_variation<K: Ord>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> f64 {
    let na: usize = a.values().sum();
    let nb: usize = b.values().sum();
    let mut tv = 0.0;
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        tv += (ca as f64 / na as f64 - cb as f64 / nb as f64).abs();
    }
    for (k, &cb) in b {
        if !a.contains_key(k) {
            tv += cb as f64 / nb as f64;
        }
    }
    tv / 2.0
}

/// Integrated autocorrelation time with Sokal's adaptive window (c = 5).
pub fn integrated_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(xs);
    let c0 = xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let mut c = 0.0;
        for t in 0..n - lag {
            c += (xs[t] - m) * (xs[t + lag] - m);
        }
        tau += 2.0 * c / (n as f64 * c0);
        if (lag as f64) >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
