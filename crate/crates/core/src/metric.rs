//! Finite metric spaces, correspondences and Gromov–Hausdorff envelopes.
//!
//! Exact GH distance is out of reach, so every comparison is an interval:
//! half the diameter gap from below, half a correspondence distortion above.

use std::fmt::Debug;

use rand::Rng;
use serde::Serialize;

use crate::continuum::PlanarPoints;
use crate::error::{Error, Result};

pub trait Distance: Copy + PartialOrd + Default + Debug + Send + Sync + Serialize + 'static {
    fn to_f64(self) -> f64;
}

impl Distance for u32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Distance for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

/// A dense symmetric distance matrix with a distinguished root.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteMetricSpace<D = f64> {
    k: usize,
    dist: Vec<D>,
    root: usize,
}

impl<D: Distance> FiniteMetricSpace<D> {
    /// Checks shape, zero diagonal, symmetry and nonnegativity.
    pub fn new(k: usize, dist: Vec<D>, root: usize) -> Result<Self> {
        if dist.len() != k * k {
            return Err(Error::InvalidParameter(format!("{} entries for {k} points", dist.len())));
        }
        if k > 0 && root >= k {
            return Err(Error::InvalidParameter(format!("root {root} out of range")));
        }
        for i in 0..k {
            if dist[i * k + i].to_f64() != 0.0 {
                return Err(Error::InvalidParameter(format!("d({i},{i}) != 0")));
            }
            for j in 0..i {
                let a = dist[i * k + j];
                if a != dist[j * k + i] || a.to_f64() < 0.0 || a.to_f64().is_nan() {
                    return Err(Error::InvalidParameter(format!("bad entry at ({i},{j})")));
                }
            }
        }
        Ok(Self { k, dist, root })
    }

    pub(crate) fn new_unchecked(k: usize, dist: Vec<D>, root: usize) -> Self {
        debug_assert_eq!(dist.len(), k * k);
        Self { k, dist, root }
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn d(&self, i: usize, j: usize) -> D {
        self.dist[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[D] {
        &self.dist[i * self.k..(i + 1) * self.k]
    }

    pub fn diameter(&self) -> D {
        let mut best = D::default();
        for &x in &self.dist {
            if x > best {
                best = x;
            }
        }
        best
    }

    pub fn to_f64(&self) -> FiniteMetricSpace<f64> {
        FiniteMetricSpace { k: self.k, dist: self.dist.iter().map(|d| d.to_f64()).collect(), root: self.root }
    }

    /// Largest violation `d(i,k) − d(i,j) − d(j,k)` seen; `≤ 0` means none.
    ///
    /// Exhaustive for at most 200 points, otherwise `samples` random triples.
    pub fn triangle_violation<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> f64 {
        let k = self.k;
        let mut worst = f64::NEG_INFINITY;
        let mut check = |i: usize, j: usize, l: usize| {
            let v = self.d(i, l).to_f64() - self.d(i, j).to_f64() - self.d(j, l).to_f64();
            if v > worst {
                worst = v;
            }
        };
        if k <= 200 {
            for i in 0..k {
                for j in 0..k {
                    for l in 0..k {
                        check(i, j, l);
                    }
                }
            }
        } else {
            for _ in 0..samples {
                check(rng.random_range(0..k), rng.random_range(0..k), rng.random_range(0..k));
            }
        }
        if k == 0 {
            0.0
        } else {
            worst
        }
    }
}

/// Hausdorff distance between planar point sets under the Euclidean metric.
pub fn hausdorff(a: &PlanarPoints, b: &PlanarPoints) -> Result<f64> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Err(Error::EmptyPointSet),
        _ => {}
    }
    let directed = |p: &PlanarPoints, q: &PlanarPoints| {
        p.points
            .iter()
            .map(|&(x, y)| q.points.iter().map(|&(u, v)| (x - u).hypot(y - v)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// A relation between the points of two spaces that covers both.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence {
    pub pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs }
    }

    pub fn identity(k: usize) -> Self {
        Self { pairs: (0..k).map(|i| (i, i)).collect() }
    }

    /// Adds `(root_a, root_b)`, which makes the distortion bound the rooted distance.
    pub fn rooted(mut self, root_a: usize, root_b: usize) -> Self {
        if !self.pairs.contains(&(root_a, root_b)) {
            self.pairs.push((root_a, root_b));
        }
        self
    }

    pub fn validate(&self, ka: usize, kb: usize) -> Result<()> {
        let mut ca = vec![false; ka];
        let mut cb = vec![false; kb];
        for &(i, j) in &self.pairs {
            if i >= ka || j >= kb {
                return Err(Error::InvalidCorrespondence(format!("pair ({i},{j}) out of range")));
            }
            ca[i] = true;
            cb[j] = true;
        }
        if let Some(i) = ca.iter().position(|&c| !c) {
            return Err(Error::InvalidCorrespondence(format!("point {i} of the first space is uncovered")));
        }
        if let Some(j) = cb.iter().position(|&c| !c) {
            return Err(Error::InvalidCorrespondence(format!("point {j} of the second space is uncovered")));
        }
        Ok(())
    }
}

/// `sup |d_A(x,x') − d_B(y,y')|` over pairs of related pairs.
pub fn distortion<DA: Distance, DB: Distance>(
    c: &Correspondence,
    a: &FiniteMetricSpace<DA>,
    b: &FiniteMetricSpace<DB>,
) -> Result<f64> {
    c.validate(a.len(), b.len())?;
    let mut worst = 0.0f64;
    for (s, &(x, y)) in c.pairs.iter().enumerate() {
        let ra = a.row(x);
        let rb = b.row(y);
        for &(x2, y2) in &c.pairs[s + 1..] {
            let gap = (ra[x2].to_f64() - rb[y2].to_f64()).abs();
            if gap > worst {
                worst = gap;
            }
        }
    }
    Ok(worst)
}

pub fn gh_upper<DA: Distance, DB: Distance>(
    c: &Correspondence,
    a: &FiniteMetricSpace<DA>,
    b: &FiniteMetricSpace<DB>,
) -> Result<f64> {
    Ok(distortion(c, a, b)? / 2.0)
}

pub fn gh_lower<DA: Distance, DB: Distance>(a: &FiniteMetricSpace<DA>, b: &FiniteMetricSpace<DB>) -> f64 {
    (a.diameter().to_f64() - b.diameter().to_f64()).abs() / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GhInterval {
    pub lower: f64,
    pub upper: f64,
}

pub fn gh_interval<DA: Distance, DB: Distance>(
    c: &Correspondence,
    a: &FiniteMetricSpace<DA>,
    b: &FiniteMetricSpace<DB>,
) -> Result<GhInterval> {
    Ok(GhInterval { lower: gh_lower(a, b), upper: gh_upper(c, a, b)? })
}

/// One coordinate of the sequence metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SequenceEntry {
    /// A GH estimate between the i-th members of both sequences.
    Paired(f64),
    /// Only one sequence has an i-th member; it is compared to a point.
    Unpaired { diameter: f64 },
}

impl SequenceEntry {
    pub fn gh(self) -> f64 {
        match self {
            SequenceEntry::Paired(d) => d,
            SequenceEntry::Unpaired { diameter } => diameter / 2.0,
        }
    }
}

/// `(Σ d_i⁴)^{1/4}`.
pub fn sequence_distance(entries: &[SequenceEntry]) -> f64 {
    entries.iter().map(|e| e.gh().powi(4)).sum::<f64>().powf(0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn pts(v: &[(f64, f64)]) -> PlanarPoints {
        PlanarPoints { points: v.to_vec() }
    }

    fn two_point(d: f64) -> FiniteMetricSpace {
        FiniteMetricSpace::new(2, vec![0.0, d, d, 0.0], 0).unwrap()
    }

    #[test]
    fn hausdorff_by_hand() {
        let a = pts(&[(0.0, 1.0), (2.0, 0.5)]);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&pts(&[(0.0, 0.0)]), &pts(&[(3.0, 4.0)])).unwrap(), 5.0);
        assert_eq!(hausdorff(&pts(&[(0.0, 0.0), (1.0, 0.0)]), &pts(&[(0.0, 0.0)])).unwrap(), 1.0);
        assert_eq!(hausdorff(&pts(&[]), &pts(&[])).unwrap(), 0.0);
        assert!(hausdorff(&pts(&[]), &a).is_err());
    }

    #[test]
    fn distortion_by_hand() {
        let a = two_point(1.0);
        let b = two_point(3.0);
        let id = Correspondence::identity(2);
        assert_eq!(distortion(&id, &a, &a).unwrap(), 0.0);
        assert_eq!(distortion(&id, &a, &b).unwrap(), 2.0);
        assert_eq!(gh_upper(&id, &a, &b).unwrap(), 1.0);
        assert!(distortion(&Correspondence::new(vec![(0, 0)]), &a, &b).is_err());
        assert!(distortion(&Correspondence::new(vec![(0, 0), (1, 1), (2, 0)]), &a, &b).is_err());
    }

    #[test]
    fn lower_by_hand() {
        assert_eq!(gh_lower(&two_point(3.0), &two_point(3.0)), 0.0);
        assert_eq!(gh_lower(&two_point(3.0), &two_point(7.0)), 2.0);
    }

    #[test]
    fn metric_validation() {
        assert!(FiniteMetricSpace::new(2, vec![0.0, 1.0, 2.0, 0.0], 0).is_err());
        assert!(FiniteMetricSpace::new(2, vec![1.0, 1.0, 1.0, 0.0], 0).is_err());
        assert!(FiniteMetricSpace::new(2, vec![0.0, -1.0, -1.0, 0.0], 0).is_err());
        assert!(FiniteMetricSpace::new(1, vec![0.0], 3).is_err());
    }

    fn random_space<R: Rng>(k: usize, rng: &mut R) -> FiniteMetricSpace {
        // points on a line give a genuine metric
        let xs: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 10.0).collect();
        let dist = (0..k * k).map(|s| (xs[s / k] - xs[s % k]).abs()).collect();
        FiniteMetricSpace::new(k, dist, 0).unwrap()
    }

    #[test]
    fn lower_never_exceeds_upper() {
        let mut r = stream(21, 0);
        for _ in 0..10_000 {
            let ka = r.random_range(1..6);
            let kb = r.random_range(1..6);
            let a = random_space(ka, &mut r);
            let b = random_space(kb, &mut r);
            // a covering relation: each point related to a random partner, plus extras
            let mut pairs: Vec<(usize, usize)> = (0..ka).map(|i| (i, r.random_range(0..kb))).collect();
            pairs.extend((0..kb).map(|j| (r.random_range(0..ka), j)));
            let c = Correspondence::new(pairs).rooted(0, 0);
            let iv = gh_interval(&c, &a, &b).unwrap();
            assert!(iv.lower <= iv.upper + 1e-12, "{iv:?}");
        }
    }

    #[test]
    fn sequence_distance_arithmetic() {
        assert_eq!(sequence_distance(&[SequenceEntry::Paired(0.0); 3]), 0.0);
        assert_eq!(sequence_distance(&[SequenceEntry::Paired(2.0)]), 2.0);
        let s = sequence_distance(&[SequenceEntry::Paired(1.0); 4]);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(sequence_distance(&[SequenceEntry::Unpaired { diameter: 4.0 }]), 2.0);
    }

    #[test]
    fn sequence_distance_is_a_metric_on_lists() {
        // on lists of reals with |a_i − b_i| as the coordinate distance it is an l4 norm
        let mut r = stream(22, 0);
        let dist = |a: &[f64], b: &[f64]| {
            let e: Vec<SequenceEntry> = a.iter().zip(b).map(|(x, y)| SequenceEntry::Paired((x - y).abs())).collect();
            sequence_distance(&e)
        };
        for _ in 0..2000 {
            let k = r.random_range(1..8);
            let a: Vec<f64> = (0..k).map(|_| r.random()).collect();
            let b: Vec<f64> = (0..k).map(|_| r.random()).collect();
            let c: Vec<f64> = (0..k).map(|_| r.random()).collect();
            assert!((dist(&a, &b) - dist(&b, &a)).abs() < 1e-15);
            assert!(dist(&a, &c) <= dist(&a, &b) + dist(&b, &c) + 1e-12);
        }
    }

    #[test]
    fn triangle_check_flags_violations() {
        let mut r = stream(1, 1);
        let good = random_space(30, &mut r);
        assert!(good.triangle_violation(0, &mut r) <= 1e-12);
        let bad = FiniteMetricSpace::new(3, vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0], 0).unwrap();
        assert!(bad.triangle_violation(0, &mut r) > 2.9);
    }
}
