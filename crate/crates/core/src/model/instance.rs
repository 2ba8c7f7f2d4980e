use super::utility::PiecewiseConstantUtility;
use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};
use num_traits::Signed;

/// A household: constant demand (kW) and a utility density over the horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    /// External label, carried through to schedule files.
    pub id: usize,
    pub demand: Rational,
    pub utility: PiecewiseConstantUtility,
}

impl Agent {
    pub fn new(id: usize, demand: Rational, utility: PiecewiseConstantUtility) -> Self {
        Self {
            id,
            demand,
            utility,
        }
    }
}

/// Supply level, horizon and agent roster.
///
/// Agents are addressed by position (`0..n`) everywhere in the library.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    supply: Rational,
    horizon: Rational,
    agents: Vec<Agent>,
}

impl Instance {
    pub fn new(supply: Rational, horizon: Rational, agents: Vec<Agent>) -> Result<Self> {
        if !supply.is_positive() {
            return Err(Error::InvalidInstance("supply must be positive".into()));
        }
        if !horizon.is_positive() {
            return Err(Error::InvalidInstance("horizon must be positive".into()));
        }
        if agents.is_empty() {
            return Err(Error::InvalidInstance("at least one agent is required".into()));
        }
        for (i, agent) in agents.iter().enumerate() {
            if !agent.demand.is_positive() {
                return Err(Error::InvalidInstance(format!(
                    "agent {} (index {i}) has non-positive demand",
                    agent.id
                )));
            }
            if agent.demand > supply {
                return Err(Error::DemandExceedsSupply {
                    agent: agent.id,
                    demand: format_rational(&agent.demand),
                    supply: format_rational(&supply),
                });
            }
            if agent.utility.horizon() != &horizon {
                return Err(Error::InvalidInstance(format!(
                    "agent {} utility ends at {}, horizon is {}",
                    agent.id,
                    format_rational(agent.utility.horizon()),
                    format_rational(&horizon)
                )));
            }
        }
        Ok(Self {
            supply,
            horizon,
            agents,
        })
    }

    /// Agents with the given demands and uniform utilities worth 1 each.
    pub fn with_uniform_utilities(
        supply: Rational,
        horizon: Rational,
        demands: &[Rational],
    ) -> Result<Self> {
        let agents = demands
            .iter()
            .enumerate()
            .map(|(i, d)| {
                Ok(Agent::new(
                    i + 1,
                    d.clone(),
                    PiecewiseConstantUtility::uniform(horizon.clone(), crate::rational::int(1))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(supply, horizon, agents)
    }

    pub fn supply(&self) -> &Rational {
        &self.supply
    }

    pub fn horizon(&self) -> &Rational {
        &self.horizon
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &Agent {
        &self.agents[i]
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn demands(&self) -> Vec<Rational> {
        self.agents.iter().map(|a| a.demand.clone()).collect()
    }

    pub fn utilities(&self) -> impl Iterator<Item = &PiecewiseConstantUtility> {
        self.agents.iter().map(|a| &a.utility)
    }

    /// The shared demand, if every agent has the same one.
    pub fn identical_demand(&self) -> Option<&Rational> {
        let first = &self.agents[0].demand;
        self.agents.iter().all(|a| &a.demand == first).then_some(first)
    }

    pub fn total_demand(&self) -> Rational {
        self.agents.iter().map(|a| a.demand.clone()).sum()
    }

    /// Copy of the instance where each agent's utility totals exactly 1 over the horizon.
    pub fn normalize_utilities(&self) -> Result<Instance> {
        let agents = self
            .agents
            .iter()
            .map(|a| {
                let utility = a.utility.normalized().ok_or(Error::ZeroUtility(a.id))?;
                Ok(Agent::new(a.id, a.demand.clone(), utility))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance {
            supply: self.supply.clone(),
            horizon: self.horizon.clone(),
            agents,
        })
    }

    pub fn is_normalized(&self) -> bool {
        self.agents
            .iter()
            .all(|a| a.utility.total() == crate::rational::int(1))
    }
}

/// Free-function form of [`Instance::normalize_utilities`].
pub fn normalize_utilities(instance: &Instance) -> Result<Instance> {
    instance.normalize_utilities()
}
