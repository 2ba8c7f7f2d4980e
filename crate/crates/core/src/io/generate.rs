use crate::error::{Error, Result};
use crate::model::{Agent, Instance, PiecewiseConstantUtility};
use crate::rational::{self, Rational};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemandProfile {
    /// One draw shared by every agent.
    Identical,
    /// Independent uniform draws in `(0, supply]`.
    UniformRandom,
    /// Pareto with shape 1.5 and scale `supply / 10`, clamped to the supply.
    HeavyTailed,
}

impl FromStr for DemandProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identical" => Ok(Self::Identical),
            "uniform-random" => Ok(Self::UniformRandom),
            "heavy-tailed" => Ok(Self::HeavyTailed),
            other => Err(Error::Parameter(format!(
                "unknown demand profile {other:?} (identical, uniform-random, heavy-tailed)"
            ))),
        }
    }
}

impl fmt::Display for DemandProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identical => "identical",
            Self::UniformRandom => "uniform-random",
            Self::HeavyTailed => "heavy-tailed",
        })
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n: usize,
    pub supply: Rational,
    pub horizon: Rational,
    /// Equal-length utility segments per agent.
    pub segments: usize,
    pub profile: DemandProfile,
}

/// Demand resolution: multiples of `supply / 1000`.
const STEPS: u32 = 1000;

/// Deterministic random instance. Densities are integers in `1..=10` on
/// equal segments, normalized to total 1; demands are multiples of
/// `supply / 1000` in `[supply / 1000, supply]`.
pub fn generate_instance(config: &GeneratorConfig) -> Result<Instance> {
    if config.n == 0 || config.segments == 0 {
        return Err(Error::Parameter("n and segments must be positive".into()));
    }
    if !config.supply.is_positive() || !config.horizon.is_positive() {
        return Err(Error::Parameter("supply and horizon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unit = &config.supply / rational::int(i64::from(STEPS));
    let shared: u32 = rng.gen_range(1..=STEPS);
    let pareto = Pareto::new(0.1, 1.5).expect("valid parameters");
    let mut agents = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let steps = match config.profile {
            DemandProfile::Identical => shared,
            DemandProfile::UniformRandom => rng.gen_range(1..=STEPS),
            DemandProfile::HeavyTailed => {
                let fraction: f64 = pareto.sample(&mut rng);
                ((fraction * f64::from(STEPS)).round() as u32).clamp(1, STEPS)
            }
        };
        let densities = (0..config.segments)
            .map(|_| rational::int(rng.gen_range(1..=10)))
            .collect();
        let utility = PiecewiseConstantUtility::from_equal_segments(config.horizon.clone(), densities)?
            .normalized()
            .expect("positive densities");
        agents.push(Agent::new(
            i + 1,
            &unit * rational::int(i64::from(steps)),
            utility,
        ));
    }
    Instance::new(config.supply.clone(), config.horizon.clone(), agents)
}
