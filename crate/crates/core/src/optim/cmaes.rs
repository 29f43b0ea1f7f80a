use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{cmp_score, start_point, Evaluator, Minimizer, Rng, Stop};

/// `(μ/μ_w, λ)` CMA-ES with rank-one and rank-μ covariance updates and cumulative step-size
/// adaptation, run in coordinates normalized to the unit cube.
///
/// Samples outside the box are redrawn up to `max_resample` times and then clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaEs {
    /// Initial step size as a fraction of the range.
    pub sigma0: f64,
    /// Population size; `None` uses `4 + ⌊3 ln d⌋`.
    pub lambda: Option<usize>,
    pub max_resample: usize,
}

impl Default for CmaEs {
    fn default() -> Self {
        Self { sigma0: 0.3, lambda: None, max_resample: 10 }
    }
}

struct Params {
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
}

impl Params {
    fn new(d: usize, lambda: Option<usize>) -> Self {
        let n = d as f64;
        let lambda = lambda.unwrap_or(4 + (3.0 * n.ln()).floor() as usize).max(2);
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let cs = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let c1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let cmu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let damps = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self { lambda, mu, weights, mu_eff, cc, cs, c1, cmu, damps, chi_n }
    }
}

impl Minimizer for CmaEs {
    fn name(&self) -> &str {
        "cma_es"
    }

    fn minimize(&self, ev: &mut Evaluator, rng: &mut Rng) -> Stop {
        let mut run = || -> Result<(), Stop> {
            let (x0, _) = start_point(ev)?;
            let space = ev.space().clone();
            let d = space.dim();
            let p = Params::new(d, self.lambda);
            let mut mean = DVector::from_vec(space.to_unit(&x0));
            let mut sigma = self.sigma0;
            let mut c = DMatrix::<f64>::identity(d, d);
            let mut pc = DVector::<f64>::zeros(d);
            let mut ps = DVector::<f64>::zeros(d);
            let mut generation = 0u64;

            loop {
                generation += 1;
                let eig = SymmetricEigen::new(c.clone());
                let sqrt_d = eig.eigenvalues.map(|v| v.max(1e-20).sqrt());
                let b = eig.eigenvectors;
                let inv_sqrt_c = &b * DMatrix::from_diagonal(&sqrt_d.map(|v| 1.0 / v)) * b.transpose();

                let mut pop: Vec<(DVector<f64>, f64)> = Vec::with_capacity(p.lambda);
                for _ in 0..p.lambda {
                    let mut x = DVector::zeros(d);
                    for attempt in 0..=self.max_resample {
                        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                        x = &mean + sigma * (&b * z.component_mul(&sqrt_d));
                        if x.iter().all(|v| (0.0..=1.0).contains(v)) || attempt == self.max_resample {
                            break;
                        }
                    }
                    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
                    let f = ev.eval(&space.from_unit(x.as_slice()))?;
                    pop.push((x, f));
                }
                pop.sort_by(|a, b| cmp_score(a.1, b.1));

                let old = mean.clone();
                mean = DVector::zeros(d);
                for (w, (x, _)) in p.weights.iter().zip(&pop) {
                    mean += *w * x;
                }
                let step = (&mean - &old) / sigma;
                ps = (1.0 - p.cs) * &ps + (p.cs * (2.0 - p.cs) * p.mu_eff).sqrt() * (&inv_sqrt_c * &step);
                let decay = 1.0 - (1.0 - p.cs).powf(2.0 * generation as f64);
                let hsig = ps.norm() / decay.sqrt() / p.chi_n < 1.4 + 2.0 / (d as f64 + 1.0);
                let h = if hsig { 1.0 } else { 0.0 };
                pc = (1.0 - p.cc) * &pc + h * (p.cc * (2.0 - p.cc) * p.mu_eff).sqrt() * &step;

                let mut rank_mu = DMatrix::<f64>::zeros(d, d);
                for (w, (x, _)) in p.weights.iter().zip(&pop).take(p.mu) {
                    let y = (x - &old) / sigma;
                    rank_mu += *w * &y * y.transpose();
                }
                let correction = (1.0 - h) * p.cc * (2.0 - p.cc);
                c = (1.0 - p.c1 - p.cmu) * &c + p.c1 * (&pc * pc.transpose() + correction * &c) + p.cmu * rank_mu;
                c = 0.5 * (&c + c.transpose());
                sigma *= ((p.cs / p.damps) * (ps.norm() / p.chi_n - 1.0)).exp();
                sigma = sigma.min(1.0);

                // Restart from a fresh uniform mean when the distribution has collapsed.
                let spread = sigma * sqrt_d.max();
                if !spread.is_finite() || spread < 1e-12 || c.iter().any(|v| !v.is_finite()) {
                    mean = DVector::from_fn(d, |_, _| rng.random::<f64>());
                    sigma = self.sigma0;
                    c = DMatrix::identity(d, d);
                    pc.fill(0.0);
                    ps.fill(0.0);
                    generation = 0;
                }
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
    use rand::SeedableRng;

    fn space(d: usize, lo: f64, hi: f64) -> SearchSpace {
        SearchSpace::new(vec![Bounds::new(lo, hi).unwrap(); d]).unwrap()
    }

    #[test]
    fn population_constants() {
        let p = Params::new(5, None);
        assert_eq!((p.lambda, p.mu), (8, 4));
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.weights.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(Params::new(1, None).lambda, 4);
    }

    #[test]
    fn sphere_in_five_dimensions() {
        let mut ev = Evaluator::new(space(5, -5.0, 5.0), Budget { max_evals: 300, stall: None }, |x| {
            Ok(x.iter().map(|v| (v - 1.0).powi(2)).sum())
        });
        ev.eval(&[-4.0, 3.0, -2.0, 4.0, 0.0]).unwrap();
        let stop = CmaEs::default().minimize(&mut ev, &mut Rng::seed_from_u64(5));
        assert_eq!(stop, Stop::Budget);
        assert!(ev.best().unwrap().score < 1e-2, "{:?}", ev.best());
    }

    #[test]
    fn quadratic_in_one_dimension() {
        let mut ev = Evaluator::new(space(1, 0.0, 10.0), Budget { max_evals: 100, stall: None }, |x| {
            Ok((x[0] - 3.0).powi(2))
        });
        ev.eval(&[9.0]).unwrap();
        CmaEs::default().minimize(&mut ev, &mut Rng::seed_from_u64(1));
        assert!((ev.best().unwrap().point[0] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn optimum_on_the_boundary() {
        let s = space(3, 0.0, 1.0);
        let mut ev = Evaluator::new(s.clone(), Budget { max_evals: 300, stall: None }, |x| {
            Ok(x.iter().map(|v| 1.0 - v).sum())
        });
        CmaEs::default().minimize(&mut ev, &mut Rng::seed_from_u64(2));
        assert!(ev.history().iter().all(|e| s.contains(&e.point)));
        assert!(ev.best().unwrap().score < 1e-2, "{:?}", ev.best());
    }
}
