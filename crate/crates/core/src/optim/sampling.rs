use rand::Rng as _;

use super::{OptimError, Rng, SearchSpace};

/// Largest dimension for which all `2^d` corners may be enumerated.
pub const MAX_CORNER_DIM: usize = 20;

/// `n` independent uniform points in the box.
pub fn uniform_samples(space: &SearchSpace, n: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| space.bounds().iter().map(|b| rng.random_range(b.lo..=b.hi)).collect())
        .collect()
}

/// All `2^d` vertices of the box in lexicographic order: coordinate 0 varies slowest, and the
/// lower bound comes before the upper one.
pub fn corner_samples(space: &SearchSpace) -> Result<Vec<Vec<f64>>, OptimError> {
    let d = space.dim();
    if d > MAX_CORNER_DIM {
        return Err(OptimError::TooManyCorners(d));
    }
    Ok(corner_prefix(space, 1 << d))
}

/// The first `n` vertices in the order of [`corner_samples`] (all of them if `n ≥ 2^d`), without
/// enumerating the rest.
pub fn corner_prefix(space: &SearchSpace, n: usize) -> Vec<Vec<f64>> {
    let d = space.dim();
    let total = if d >= usize::BITS as usize { usize::MAX } else { 1usize << d };
    (0..n.min(total))
        .map(|idx| {
            space
                .bounds()
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let bit = d - 1 - i;
                    if bit < usize::BITS as usize && idx >> bit & 1 == 1 {
                        b.hi
                    } else {
                        b.lo
                    }
                })
                .collect()
        })
        .collect()
}

fn primes(n: usize) -> Vec<u64> {
    let mut ps = Vec::with_capacity(n);
    let mut c = 2u64;
    while ps.len() < n {
        if ps.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            ps.push(c);
        }
        c += 1;
    }
    ps
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Points `start .. start + n` of the Halton sequence (bases 2, 3, 5, ...) mapped into the box.
/// Index 0 is the origin of the unit cube, so callers usually start at 1.
pub fn halton(space: &SearchSpace, start: u64, n: usize) -> Vec<Vec<f64>> {
    let bases = primes(space.dim());
    (start..start + n as u64)
        .map(|i| {
            let z: Vec<f64> = bases.iter().map(|&b| radical_inverse(i, b)).collect();
            space.from_unit(&z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Bounds;
    use proptest::prelude::*;
    use crate::optim::Rng;
    use rand::SeedableRng;

    fn space(b: &[(f64, f64)]) -> SearchSpace {
        SearchSpace::new(b.iter().map(|&(l, h)| Bounds::new(l, h).unwrap()).collect()).unwrap()
    }

    #[test]
    fn corners_of_the_transmission_box() {
        let c = corner_samples(&space(&[(0.0, 100.0), (0.0, 325.0)])).unwrap();
        assert_eq!(c, vec![vec![0.0, 0.0], vec![0.0, 325.0], vec![100.0, 0.0], vec![100.0, 325.0]]);
        assert_eq!(corner_samples(&space(&[(-1.0, 2.0)])).unwrap(), vec![vec![-1.0], vec![2.0]]);
    }

    #[test]
    fn corner_guard() {
        let s = space(&[(0.0, 1.0); 21]);
        assert!(matches!(corner_samples(&s), Err(OptimError::TooManyCorners(21))));
        let s = space(&[(0.0, 1.0); 10]);
        assert_eq!(corner_samples(&s).unwrap().len(), 1024);
    }

    #[test]
    fn corner_prefix_matches_full_enumeration() {
        let s = space(&[(0.0, 1.0); 6]);
        let all = corner_samples(&s).unwrap();
        assert_eq!(corner_prefix(&s, 10), all[..10].to_vec());
        assert_eq!(corner_prefix(&s, 1000), all);
        let wide = space(&[(0.0, 1.0); 80]);
        let c = corner_prefix(&wide, 3);
        assert_eq!(c.len(), 3);
        assert!(c[0].iter().all(|&v| v == 0.0));
        assert_eq!(c[1].iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(c[1][79], 1.0);
    }

    #[test]
    fn uniform_is_seeded() {
        let s = space(&[(0.0, 1.0), (5.0, 6.0)]);
        assert!(uniform_samples(&s, 0, &mut Rng::seed_from_u64(1)).is_empty());
        let a = uniform_samples(&s, 50, &mut Rng::seed_from_u64(7));
        let b = uniform_samples(&s, 50, &mut Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert!(a.iter().all(|p| s.contains(p)));
    }

    #[test]
    fn halton_first_points() {
        let s = space(&[(0.0, 1.0), (0.0, 1.0)]);
        let h = halton(&s, 1, 3);
        assert_eq!(h[0], vec![0.5, 1.0 / 3.0]);
        assert_eq!(h[1], vec![0.25, 2.0 / 3.0]);
        assert_eq!(h[2], vec![0.75, 1.0 / 9.0]);
    }

    proptest! {
        #[test]
        fn corners_are_distinct_vertices(d in 1usize..8) {
            let s = space(&vec![(-2.0, 3.0); d]);
            let c = corner_samples(&s).unwrap();
            prop_assert_eq!(c.len(), 1 << d);
            let mut sorted = c.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(&sorted, &c);
            sorted.dedup();
            prop_assert_eq!(sorted.len(), c.len());
            prop_assert!(c.iter().flatten().all(|&v| v == -2.0 || v == 3.0));
        }

        #[test]
        fn halton_stays_inside(d in 1usize..12, start in 0u64..1000) {
            let s = space(&vec![(-1.0, 4.0); d]);
            prop_assert!(halton(&s, start, 20).iter().all(|p| s.contains(p)));
        }
    }
}
