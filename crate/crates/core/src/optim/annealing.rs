use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{cmp_score, start_point, Evaluator, Minimizer, Rng, Stop};

/// Simulated annealing with Gaussian proposals and a geometric cooling schedule.
///
/// The initial temperature is the spread of the seed scores (1 when there is no finite spread)
/// and cools so that it reaches `final_ratio` of it when the budget runs out.
#[derive(Debug, Clone, PartialEq)]
pub struct Annealing {
    /// Proposal standard deviation as a fraction of each coordinate's range.
    pub step: f64,
    pub final_ratio: f64,
}

impl Default for Annealing {
    fn default() -> Self {
        Self { step: 0.1, final_ratio: 1e-3 }
    }
}

/// Folds `x` back into `[lo, hi]` by mirroring at the bounds.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut y = (x - lo).rem_euclid(2.0 * w);
    if y > w {
        y = 2.0 * w - y;
    }
    lo + y
}

fn initial_temperature(ev: &Evaluator) -> f64 {
    let finite: Vec<f64> = ev.history().iter().map(|e| e.score).filter(|s| s.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    if spread.is_finite() && spread > 0.0 {
        spread
    } else {
        1.0
    }
}

impl Minimizer for Annealing {
    fn name(&self) -> &str {
        "sa"
    }

    fn minimize(&self, ev: &mut Evaluator, rng: &mut Rng) -> Stop {
        let mut run = || -> Result<(), Stop> {
            let (mut x, mut f) = start_point(ev)?;
            let mut temp = initial_temperature(ev);
            let alpha = self.final_ratio.powf(1.0 / ev.remaining().max(1) as f64);
            let bounds = ev.space().bounds().to_vec();
            loop {
                let y: Vec<f64> = x
                    .iter()
                    .zip(&bounds)
                    .map(|(&xi, b)| {
                        let z: f64 = rng.sample(StandardNormal);
                        reflect(xi + self.step * b.width() * z, b.lo, b.hi)
                    })
                    .collect();
                let fy = ev.eval(&y)?;
                let accept = if cmp_score(fy, f) != std::cmp::Ordering::Greater {
                    true
                } else {
                    let delta = fy - f;
                    delta.is_finite() && rng.random::<f64>() < (-delta / temp).exp()
                };
                if accept {
                    x = y;
                    f = fy;
                }
                temp *= alpha;
            }
        };
        match run() {
            Ok(()) => unreachable!(),
            Err(s) => s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{Budget, SearchSpace};
    use crate::signal::Bounds;
    use proptest::prelude::*;
    use crate::optim::Rng;
    use rand::SeedableRng;

    fn space1() -> SearchSpace {
        SearchSpace::new(vec![Bounds::new(0.0, 10.0).unwrap()]).unwrap()
    }

    #[test]
    fn approaches_quadratic_minimum() {
        let mut ev = Evaluator::new(space1(), Budget { max_evals: 200, stall: None }, |x| Ok((x[0] - 3.0).powi(2)));
        ev.eval(&[9.0]).unwrap();
        ev.eval(&[0.5]).unwrap();
        let stop = Annealing::default().minimize(&mut ev, &mut Rng::seed_from_u64(11));
        assert_eq!(stop, Stop::Budget);
        assert!(ev.evals() <= 200);
        assert!((ev.best().unwrap().point[0] - 3.0).abs() < 0.05, "{:?}", ev.best());
    }

    #[test]
    fn early_exit_and_replay() {
        let run = |seed| {
            let mut ev = Evaluator::new(space1(), Budget { max_evals: 300, stall: None }, |x| Ok(9.5 - x[0]));
            ev.eval(&[1.0]).unwrap();
            let s = Annealing::default().minimize(&mut ev, &mut Rng::seed_from_u64(seed));
            (s, ev.into_history())
        };
        let (s, h) = run(3);
        assert_eq!(s, Stop::Success);
        assert!(h.last().unwrap().score < 0.0);
        assert_eq!(run(3).1, h);
    }

    proptest! {
        #[test]
        fn reflection_lands_inside(x in -1e3f64..1e3, lo in -10.0f64..10.0, w in 0.1f64..20.0) {
            let y = reflect(x, lo, lo + w);
            prop_assert!(y >= lo && y <= lo + w);
            if x >= lo && x <= lo + w {
                prop_assert!((y - x).abs() < 1e-9);
            }
        }
    }
}
