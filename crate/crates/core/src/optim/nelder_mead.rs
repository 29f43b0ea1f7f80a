use std::cmp::Ordering;

use super::{cmp_score, halton, start_point, Evaluator, InitialSampling, Minimizer, Rng, Stop};

fn lt(a: f64, b: f64) -> bool {
    cmp_score(a, b) == Ordering::Less
}

/// Nelder-Mead simplex search with restarts ("global Nelder-Mead").
///
/// The first simplex is built around the best evaluated seed. When a simplex collapses, the
/// search restarts from the next-best unused seed, and after the seeds from successive Halton
/// points. No randomness is used.
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMead {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Initial simplex edge as a fraction of each coordinate's range.
    pub initial_step: f64,
    /// Restart when every vertex is within this fraction of the range from the best one.
    pub restart_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { reflection: 1.0, expansion: 2.0, contraction: 0.5, shrink: 0.5, initial_step: 0.05, restart_tol: 1e-6 }
    }
}

impl NelderMead {
    fn point(&self, ev: &Evaluator, x: Vec<f64>) -> Vec<f64> {
        let mut x = x;
        ev.space().clamp(&mut x);
        x
    }

    /// Runs one simplex from `x0` until it collapses.
    fn descend(&self, ev: &mut Evaluator, x0: Vec<f64>, f0: f64) -> Result<(), Stop> {
        let d = x0.len();
        let ranges: Vec<f64> = ev.space().bounds().iter().map(|b| b.width()).collect();
        let mut simplex = vec![(x0.clone(), f0)];
        for i in 0..d {
            let b = ev.space().bounds()[i];
            let mut x = x0.clone();
            let step = self.initial_step * ranges[i];
            x[i] = if x[i] + step <= b.hi { x[i] + step } else { x[i] - step };
            let f = ev.eval(&x)?;
            simplex.push((x, f));
        }

        loop {
            simplex.sort_by(|a, b| cmp_score(a.1, b.1));
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).zip(&ranges).map(|((a, b), r)| (a - b).abs() / r))
                .fold(0.0, f64::max);
            if diameter < self.restart_tol {
                return Ok(());
            }

            let mut c = vec![0.0; d];
            for (x, _) in &simplex[..d] {
                for (ci, xi) in c.iter_mut().zip(x) {
                    *ci += xi / d as f64;
                }
            }
            let (worst, f_worst) = simplex[d].clone();
            let f_best = simplex[0].1;
            let f_second = simplex[d - 1].1;
            let along = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
                from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
            };

            let xr = self.point(ev, along(&c, &worst, -self.reflection));
            let fr = ev.eval(&xr)?;
            if lt(fr, f_best) {
                let xe = self.point(ev, along(&c, &xr, self.expansion));
                let fe = ev.eval(&xe)?;
                simplex[d] = if lt(fe, fr) { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if lt(fr, f_second) {
                simplex[d] = (xr, fr);
                continue;
            }
            let accepted = if lt(fr, f_worst) {
                let xc = self.point(ev, along(&c, &xr, self.contraction));
                let fc = ev.eval(&xc)?;
                (!lt(fr, fc)).then_some((xc, fc))
            } else {
                let xc = self.point(ev, along(&c, &worst, self.contraction));
                let fc = ev.eval(&xc)?;
                lt(fc, f_worst).then_some((xc, fc))
            };
            match accepted {
                Some(v) => simplex[d] = v,
                None => {
                    let best = simplex[0].0.clone();
                    for v in simplex.iter_mut().skip(1) {
                        let x = self.point(ev, along(&best, &v.0, self.shrink));
                        let f = ev.eval(&x)?;
                        *v = (x, f);
                    }
                }
            }
        }
    }
}

impl Minimizer for NelderMead {
    fn name(&self) -> &str {
        "gnm"
    }

    fn initial_sampling(&self) -> InitialSampling {
        InitialSampling::CornersThenHalton
    }

    fn minimize(&self, ev: &mut Evaluator, _rng: &mut Rng) -> Stop {
        let run = |ev: &mut Evaluator| -> Result<(), Stop> {
            let seeds: Vec<(Vec<f64>, f64)> = ev
                .ranked()
                .into_iter()
                .map(|i| (ev.history()[i].point.clone(), ev.history()[i].score))
                .collect();
            let (x0, f0) = start_point(ev)?;
            self.descend(ev, x0, f0)?;
            for (x, f) in seeds.into_iter().skip(1) {
                self.descend(ev, x, f)?;
            }
            let mut k = 1;
            loop {
                let x = halton(ev.space(), k, 1).remove(0);
                k += 1;
                let f = ev.eval(&x)?;
                self.descend(ev, x, f)?;
            }
        };
        match run(ev) {
            Ok(()) => unreachable!("restarts continue until the evaluator stops"),
            Err(s) => s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{Budget, SearchSpace};
    use crate::signal::Bounds;
    use rand::SeedableRng;

    fn space(d: usize, lo: f64, hi: f64) -> SearchSpace {
        SearchSpace::new(vec![Bounds::new(lo, hi).unwrap(); d]).unwrap()
    }

    #[test]
    fn converges_on_quadratic() {
        let mut ev = Evaluator::new(space(1, 0.0, 10.0), Budget { max_evals: 100, stall: None }, |x| {
            Ok((x[0] - 3.0).powi(2))
        });
        ev.eval(&[9.0]).unwrap();
        let stop = NelderMead::default().minimize(&mut ev, &mut Rng::seed_from_u64(0));
        assert_eq!(stop, Stop::Budget);
        assert_eq!(ev.evals(), 100);
        assert!((ev.best().unwrap().point[0] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn rosenbrock_2d() {
        let mut ev = Evaluator::new(space(2, -2.0, 2.0), Budget { max_evals: 400, stall: None }, |x| {
            Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
        });
        ev.eval(&[-1.5, 1.5]).unwrap();
        NelderMead::default().minimize(&mut ev, &mut Rng::seed_from_u64(0));
        assert!(ev.best().unwrap().score < 1e-4, "{:?}", ev.best());
    }

    #[test]
    fn negative_seed_returns_immediately() {
        let mut ev = Evaluator::new(space(1, 0.0, 10.0), Budget { max_evals: 100, stall: None }, |x| Ok(x[0] - 5.0));
        assert_eq!(ev.eval(&[1.0]), Err(Stop::Success));
        assert_eq!(NelderMead::default().minimize(&mut ev, &mut Rng::seed_from_u64(0)), Stop::Success);
        assert_eq!(ev.evals(), 1);
    }

    #[test]
    fn restarts_after_collapse() {
        // A flat objective collapses every simplex, so the run keeps restarting until the budget
        // ends; every point stays in the box.
        let s = space(3, -1.0, 1.0);
        let mut ev = Evaluator::new(s.clone(), Budget { max_evals: 500, stall: None }, |_| Ok(1.0));
        NelderMead::default().minimize(&mut ev, &mut Rng::seed_from_u64(0));
        assert_eq!(ev.evals(), 500);
        assert!(ev.history().iter().all(|e| s.contains(&e.point)));
        let distinct_far = ev.history().iter().filter(|e| (e.point[0] - 0.0).abs() > 0.2).count();
        assert!(distinct_far > 0);
    }
}
