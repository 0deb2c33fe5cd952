use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar disturbance signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Zero,
    Const(f64),
    /// `scale·(1(t) − 1(t − until))`.
    Step {
        until: f64,
        scale: f64,
    },
    /// `(start, value)` breakpoints sorted by start; 0 before the first.
    Piecewise(Vec<(f64, f64)>),
    /// Uniform on `[lo, hi]`, redrawn every `segment` seconds.
    Noise {
        seed: u64,
        lo: f64,
        hi: f64,
        segment: f64,
    },
}

impl Signal {
    /// The pulse `1(t) − 1(t − until)`.
    pub fn pulse(until: f64) -> Signal {
        Signal::Step { until, scale: 1.0 }
    }

    /// The disturbance protocol's uniform `[0, 1]` noise on 0.01 s segments.
    pub fn noise(seed: u64) -> Signal {
        Signal::Noise {
            seed,
            lo: 0.0,
            hi: 1.0,
            segment: 0.01,
        }
    }

    /// Fixes noise draws up to `horizon` so evaluation is a table lookup.
    pub(crate) fn sampler(&self, horizon: f64) -> Sampler {
        match self {
            Signal::Noise {
                seed,
                lo,
                hi,
                segment,
            } => {
                let n = (horizon / segment).ceil() as usize + 2;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values = (0..n).map(|_| rng.gen_range(*lo..=*hi)).collect();
                Sampler::Table {
                    segment: *segment,
                    values,
                }
            }
            other => Sampler::Direct(other.clone()),
        }
    }
}

pub(crate) enum Sampler {
    Direct(Signal),
    Table { segment: f64, values: Vec<f64> },
}

impl Sampler {
    pub(crate) fn at(&self, t: f64) -> f64 {
        match self {
            Sampler::Direct(Signal::Zero) => 0.0,
            Sampler::Direct(Signal::Const(c)) => *c,
            Sampler::Direct(Signal::Step { until, scale }) => {
                if t >= 0.0 && t < *until {
                    *scale
                } else {
                    0.0
                }
            }
            Sampler::Direct(Signal::Piecewise(pts)) => pts
                .iter()
                .take_while(|(start, _)| *start <= t)
                .last()
                .map_or(0.0, |p| p.1),
            Sampler::Direct(Signal::Noise { .. }) => unreachable!("noise is tabulated"),
            Sampler::Table { segment, values } => {
                let j = (t / segment).floor().max(0.0) as usize;
                values[j.min(values.len() - 1)]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_and_piecewise() {
        let p = Signal::Step {
            until: 2.0,
            scale: 10.0,
        }
        .sampler(5.0);
        assert_eq!((p.at(0.0), p.at(1.999), p.at(2.0)), (10.0, 10.0, 0.0));
        let w = Signal::Piecewise(vec![(1.0, 3.0), (2.0, -1.0)]).sampler(5.0);
        assert_eq!((w.at(0.5), w.at(1.5), w.at(4.0)), (0.0, 3.0, -1.0));
    }

    #[test]
    fn noise_is_seeded_and_segmented() {
        let a = Signal::noise(7).sampler(1.0);
        let b = Signal::noise(7).sampler(1.0);
        assert_eq!(a.at(0.123), b.at(0.123));
        assert_eq!(a.at(0.120), a.at(0.129));
        assert!((0.0..=1.0).contains(&a.at(0.5)));
    }
}
