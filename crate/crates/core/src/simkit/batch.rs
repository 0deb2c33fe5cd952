use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sim::norm;
use super::{simulate, ClosedLoop, Signal, SimConfig, SimError};

/// Seeded Monte Carlo batch: `x0` uniform in `[−radius, radius]^n`, and each
/// disturbance channel uniform noise on `noise` when set (zero otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    pub runs: usize,
    pub seed: u64,
    pub radius: f64,
    pub noise: Option<(f64, f64)>,
    pub cfg: SimConfig,
    /// Envelope keeps every `stride`-th sample.
    pub stride: usize,
}

impl Default for BatchSpec {
    fn default() -> Self {
        BatchSpec {
            runs: 100,
            seed: 42,
            radius: 1.0,
            noise: None,
            cfg: SimConfig::default(),
            stride: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub x0: Vec<f64>,
    pub endpoint_norm: f64,
    pub diverged: bool,
    pub max_abs_u: f64,
}

/// Per-state extremes and largest `|u|` across runs at decimated times.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub t: Vec<f64>,
    pub x_min: Vec<Vec<f64>>,
    pub x_max: Vec<Vec<f64>>,
    pub u_abs_max: Vec<f64>,
}

impl Envelope {
    fn empty(t: Vec<f64>, n: usize) -> Envelope {
        let k = t.len();
        Envelope {
            t,
            x_min: vec![vec![f64::INFINITY; n]; k],
            x_max: vec![vec![f64::NEG_INFINITY; n]; k],
            u_abs_max: vec![0.0; k],
        }
    }

    fn merge(mut self, other: Envelope) -> Envelope {
        for k in 0..self.t.len() {
            for i in 0..self.x_min[k].len() {
                self.x_min[k][i] = self.x_min[k][i].min(other.x_min[k][i]);
                self.x_max[k][i] = self.x_max[k][i].max(other.x_max[k][i]);
            }
            self.u_abs_max[k] = self.u_abs_max[k].max(other.u_abs_max[k]);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub runs: Vec<RunSummary>,
    pub envelope: Envelope,
    /// Median endpoint norm over runs that did not diverge.
    pub median_endpoint: f64,
    pub diverged: usize,
}

/// Runs are independent given their seed, so results do not depend on
/// thread scheduling.
pub fn run_batch(cl: &ClosedLoop, spec: &BatchSpec) -> Result<BatchSummary, SimError> {
    let steps = spec.cfg.validate()?;
    if spec.runs == 0 || spec.stride == 0 {
        return Err(SimError::Config("runs and stride must be positive".into()));
    }
    let n = cl.n();
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let seeds: Vec<u64> = (0..spec.runs).map(|_| master.gen()).collect();
    let grid: Vec<f64> = (0..=steps)
        .step_by(spec.stride)
        .map(|k| k as f64 * spec.cfg.dt)
        .collect();

    let results: Vec<(RunSummary, Envelope)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-spec.radius..=spec.radius))
                .collect();
            let w: Vec<Signal> = match spec.noise {
                Some((lo, hi)) => {
                    cl.w.iter()
                        .map(|_| Signal::Noise {
                            seed: rng.gen(),
                            lo,
                            hi,
                            segment: 0.01,
                        })
                        .collect()
                }
                None => Vec::new(),
            };
            let tr = simulate(cl, &x0, &w, &spec.cfg)?;
            let mut env = Envelope::empty(grid.clone(), n);
            for (j, k) in (0..tr.len()).step_by(spec.stride).enumerate() {
                for i in 0..n {
                    env.x_min[j][i] = tr.x[k][i];
                    env.x_max[j][i] = tr.x[k][i];
                }
                env.u_abs_max[j] = tr.u[k].iter().fold(0.0, |m, u| m.max(u.abs()));
            }
            let max_abs_u = tr.u.iter().flatten().fold(0.0f64, |m, u| m.max(u.abs()));
            let summary = RunSummary {
                seed,
                endpoint_norm: if tr.diverged {
                    f64::INFINITY
                } else {
                    norm(tr.final_state())
                },
                diverged: tr.diverged,
                max_abs_u,
                x0,
            };
            Ok((summary, env))
        })
        .collect::<Result<_, SimError>>()?;

    let mut runs = Vec::with_capacity(results.len());
    let mut envelope = Envelope::empty(grid, n);
    for (r, e) in results {
        runs.push(r);
        envelope = envelope.merge(e);
    }
    let mut ends: Vec<f64> = runs
        .iter()
        .filter(|r| !r.diverged)
        .map(|r| r.endpoint_norm)
        .collect();
    ends.sort_by(f64::total_cmp);
    let median_endpoint = match ends.len() {
        0 => f64::NAN,
        k if k % 2 == 1 => ends[k / 2],
        k => 0.5 * (ends[k / 2 - 1] + ends[k / 2]),
    };
    let diverged = runs.iter().filter(|r| r.diverged).count();
    Ok(BatchSummary {
        runs,
        envelope,
        median_endpoint,
        diverged,
    })
}
