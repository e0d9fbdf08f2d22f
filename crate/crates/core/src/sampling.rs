//! Deterministic low-discrepancy sample points over a box.
//!
//! Points follow the additive recurrence `t_n = frac(s + n·α)` where `α`
//! holds the powers of the inverse generalized golden ratio for the box
//! dimension, and `s` is a shift drawn from a ChaCha stream seeded by the
//! caller. The same `(box, seed)` always yields the same sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metric::Interval;

#[derive(Debug, Clone)]
pub struct Lattice {
    domain: Vec<Interval>,
    alpha: Vec<f64>,
    shift: Vec<f64>,
}

/// Unique positive root of `x^(d+1) = x + 1`.
fn generalized_golden_ratio(d: usize) -> f64 {
    let mut x = 2.0_f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

impl Lattice {
    pub fn new(domain: &[Interval], seed: u64) -> Lattice {
        let d = domain.len();
        let phi = generalized_golden_ratio(d);
        let alpha = (1..=d).map(|k| (1.0 / phi.powi(k as i32)).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..d).map(|_| rng.gen::<f64>()).collect();
        Lattice {
            domain: domain.to_vec(),
            alpha,
            shift,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    /// The `n`-th point of the sequence.
    pub fn point(&self, n: usize) -> Vec<f64> {
        self.domain
            .iter()
            .zip(self.alpha.iter().zip(&self.shift))
            .map(|(iv, (a, s))| {
                let t = (s + (n as f64 + 1.0) * a).fract();
                iv.lerp(t)
            })
            .collect()
    }

    pub fn points(&self, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
        range.map(|n| self.point(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_in_one_dimension() {
        assert!((generalized_golden_ratio(1) - 1.618_033_988_749_895).abs() < 1e-14);
    }

    #[test]
    fn points_stay_in_box_and_repeat() {
        let dom = vec![
            Interval::new(-1.0, 1.0),
            Interval::new(0.1, 1.0),
            Interval::new(2.0, 2.0),
        ];
        let a = Lattice::new(&dom, 42);
        let b = Lattice::new(&dom, 42);
        let c = Lattice::new(&dom, 43);
        for n in 0..500 {
            let p = a.point(n);
            assert_eq!(p, b.point(n));
            assert!(dom.iter().zip(&p).all(|(iv, v)| iv.contains(*v)));
            assert_eq!(p[2], 2.0);
        }
        assert_ne!(a.point(0), c.point(0));
    }

    #[test]
    fn coverage_is_roughly_uniform() {
        let dom = vec![Interval::new(0.0, 1.0); 2];
        let lat = Lattice::new(&dom, 7);
        let mut bins = [0usize; 4];
        for n in 0..400 {
            let p = lat.point(n);
            bins[(p[0] >= 0.5) as usize * 2 + (p[1] >= 0.5) as usize] += 1;
        }
        assert!(bins.iter().all(|&b| (90..=110).contains(&b)), "{:?}", bins);
    }
}
