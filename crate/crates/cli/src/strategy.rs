use clap::ValueEnum;
use fairshed::egalitarian::{egalitarian_additive, egalitarian_uniform, gfs_allocation, SetDistribution};
use fairshed::proportional::{allocate_identical_additive, allocate_uniform_identical};
use fairshed::rational::format_rational;
use fairshed::{Allocation, Error, Instance, Result};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    /// Round-robin over identical demands, uniform utilities.
    UniformIdentical,
    /// Even-Paz on copied timelines; identical demands, additive utilities.
    Evenpaz,
    /// Maximin time share over maximal feasible sets; uniform utilities.
    EgalitarianUniform,
    /// Group fair share over maximal feasible sets; uniform utilities.
    Gfs,
    /// Segment-wise maximin over maximal feasible sets; additive utilities.
    EgalitarianAdditive,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::UniformIdentical => "uniform-identical",
            Strategy::Evenpaz => "evenpaz",
            Strategy::EgalitarianUniform => "egalitarian-uniform",
            Strategy::Gfs => "gfs",
            Strategy::EgalitarianAdditive => "egalitarian-additive",
        }
    }
}

pub struct Solved {
    pub allocation: Allocation,
    pub optimal: bool,
    pub details: Value,
}

fn require_uniform(instance: &Instance, strategy: Strategy) -> Result<()> {
    if instance.utilities().all(|u| u.is_uniform()) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{} needs uniform utilities; use egalitarian-additive",
            strategy.name()
        )))
    }
}

fn shares_json(instance: &Instance, dist: &SetDistribution) -> Value {
    dist.support()
        .map(|(set, share)| {
            json!({
                "agents": set.members().iter().map(|&i| instance.agent(i).id).collect::<Vec<_>>(),
                "share": format_rational(share),
            })
        })
        .collect()
}

/// Compact rendering of the positive shares, e.g. `{1,2}:1/2 {3}:1/2`.
pub fn shares_summary(details: &Value) -> String {
    let Some(list) = details.get("shares").and_then(Value::as_array) else {
        return String::new();
    };
    list.iter()
        .map(|s| {
            let ids: Vec<String> = s["agents"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|v| v.to_string())
                .collect();
            format!("{{{}}}:{}", ids.join(","), s["share"].as_str().unwrap_or("?"))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn run(strategy: Strategy, instance: &Instance) -> Result<Solved> {
    let n = instance.n();
    match strategy {
        Strategy::UniformIdentical => {
            require_uniform(instance, strategy)?;
            Ok(Solved {
                allocation: allocate_uniform_identical(instance)?,
                optimal: true,
                details: json!({}),
            })
        }
        Strategy::Evenpaz => Ok(Solved {
            allocation: allocate_identical_additive(instance)?,
            optimal: true,
            details: json!({}),
        }),
        Strategy::EgalitarianUniform => {
            require_uniform(instance, strategy)?;
            let (dist, r) = egalitarian_uniform(instance)?;
            Ok(Solved {
                allocation: dist.to_allocation(n, instance.horizon()),
                optimal: true,
                details: json!({
                    "r": format_rational(&r),
                    "shares": shares_json(instance, &dist),
                }),
            })
        }
        Strategy::Gfs => {
            require_uniform(instance, strategy)?;
            let g = gfs_allocation(instance)?;
            let ids = |group: &Vec<usize>| -> Vec<usize> {
                group.iter().map(|&i| instance.agent(i).id).collect()
            };
            Ok(Solved {
                allocation: g.distribution.to_allocation(n, instance.horizon()),
                optimal: true,
                details: json!({
                    "r": format_rational(&g.r),
                    "shares": shares_json(instance, &g.distribution),
                    "tight_groups": g.tight_groups.iter().map(ids).collect::<Vec<_>>(),
                }),
            })
        }
        Strategy::EgalitarianAdditive => {
            let sol = egalitarian_additive(instance)?;
            Ok(Solved {
                allocation: sol.allocation,
                optimal: true,
                details: json!({
                    "r": format_rational(&sol.value),
                    "segments": sol.assignment.segment_count(),
                }),
            })
        }
    }
}
