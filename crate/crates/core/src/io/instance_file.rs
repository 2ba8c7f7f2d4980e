use crate::error::{Error, Result};
use crate::model::{Agent, Instance, PiecewiseConstantUtility};
use crate::rational::{format_rational, parse_rational, Rational};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};
use std::collections::HashSet;
use std::path::Path;

pub const SCHEMA_VERSION: u64 = 1;

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| schema(join(path, key), "missing field"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Decimals may be strings (`"0.25"`, `"1/3"`) or JSON numbers.
fn decimal(value: &Value, path: &str) -> Result<Rational> {
    let text = match value {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(schema(path, "expected a decimal string or number")),
    };
    parse_rational(&text).map_err(|e| schema(path, e.to_string()))
}

fn decimals(value: &Value, path: &str) -> Result<Vec<Rational>> {
    value
        .as_array()
        .ok_or_else(|| schema(path, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, v)| decimal(v, &format!("{path}[{i}]")))
        .collect()
}

fn utility(value: &Value, path: &str, horizon: &Rational) -> Result<PiecewiseConstantUtility> {
    let obj = value
        .as_object()
        .ok_or_else(|| schema(path, "expected an object"))?;
    let bp_path = join(path, "breakpoints");
    let breakpoints = decimals(field(obj, path, "breakpoints")?, &bp_path)?;
    let densities_path = join(path, "densities");
    let densities = decimals(field(obj, path, "densities")?, &densities_path)?;
    if breakpoints.len() < 2 {
        return Err(schema(bp_path, "need at least two breakpoints"));
    }
    if !breakpoints[0].is_zero() {
        return Err(schema(format!("{bp_path}[0]"), "first breakpoint must be 0"));
    }
    for (i, w) in breakpoints.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(schema(
                format!("{bp_path}[{}]", i + 1),
                "breakpoints must be strictly increasing",
            ));
        }
    }
    if breakpoints.last() != Some(horizon) {
        return Err(schema(
            format!("{bp_path}[{}]", breakpoints.len() - 1),
            "last breakpoint must equal the horizon",
        ));
    }
    if densities.len() + 1 != breakpoints.len() {
        return Err(schema(
            densities_path,
            format!("expected {} densities", breakpoints.len() - 1),
        ));
    }
    if let Some(i) = densities.iter().position(|d| d.is_negative()) {
        return Err(schema(format!("{densities_path}[{i}]"), "density must be non-negative"));
    }
    PiecewiseConstantUtility::new(breakpoints, densities)
}

/// Parses and validates an instance document. Agents without an `id` get
/// their 1-based position; agents without a `utility` value the horizon
/// uniformly.
pub fn instance_from_json(doc: &Value) -> Result<Instance> {
    let obj = doc
        .as_object()
        .ok_or_else(|| schema("$", "expected an object"))?;
    let version = field(obj, "", "schema_version")?
        .as_u64()
        .ok_or_else(|| schema("schema_version", "expected an integer"))?;
    if version != SCHEMA_VERSION {
        return Err(schema(
            "schema_version",
            format!("unsupported version {version}, expected {SCHEMA_VERSION}"),
        ));
    }
    let supply = decimal(field(obj, "", "supply")?, "supply")?;
    if !supply.is_positive() {
        return Err(schema("supply", "must be positive"));
    }
    let horizon = decimal(field(obj, "", "horizon")?, "horizon")?;
    if !horizon.is_positive() {
        return Err(schema("horizon", "must be positive"));
    }
    let list = field(obj, "", "agents")?
        .as_array()
        .ok_or_else(|| schema("agents", "expected an array"))?;
    if list.is_empty() {
        return Err(schema("agents", "at least one agent is required"));
    }
    let mut seen = HashSet::new();
    let mut agents = Vec::with_capacity(list.len());
    for (i, entry) in list.iter().enumerate() {
        let path = format!("agents[{i}]");
        let a = entry
            .as_object()
            .ok_or_else(|| schema(&path, "expected an object"))?;
        let id = match a.get("id") {
            None => i + 1,
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| schema(join(&path, "id"), "expected a non-negative integer"))?,
        };
        if !seen.insert(id) {
            return Err(schema(join(&path, "id"), format!("duplicate id {id}")));
        }
        let demand = decimal(field(a, &path, "demand")?, &join(&path, "demand"))?;
        if !demand.is_positive() {
            return Err(schema(join(&path, "demand"), "must be positive"));
        }
        let utility = match a.get("utility") {
            None => PiecewiseConstantUtility::uniform(horizon.clone(), Rational::one())?,
            Some(u) => utility(u, &join(&path, "utility"), &horizon)?,
        };
        agents.push(Agent::new(id, demand, utility));
    }
    Instance::new(supply, horizon, agents)
}

pub fn instance_to_json(instance: &Instance) -> Value {
    let strings = |xs: &[Rational]| -> Vec<String> { xs.iter().map(format_rational).collect() };
    json!({
        "schema_version": SCHEMA_VERSION,
        "supply": format_rational(instance.supply()),
        "horizon": format_rational(instance.horizon()),
        "agents": instance.agents().iter().map(|a| json!({
            "id": a.id,
            "demand": format_rational(&a.demand),
            "utility": {
                "breakpoints": strings(a.utility.breakpoints()),
                "densities": strings(a.utility.densities()),
            },
        })).collect::<Vec<_>>(),
    })
}

/// Reads an instance file; with `normalize`, every utility is rescaled to total 1.
pub fn load_instance(path: impl AsRef<Path>, normalize: bool) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| schema("$", format!("invalid JSON: {e}")))?;
    let instance = instance_from_json(&doc)?;
    if normalize {
        instance.normalize_utilities()
    } else {
        Ok(instance)
    }
}

pub fn save_instance(path: impl AsRef<Path>, instance: &Instance) -> Result<()> {
    let text = serde_json::to_string_pretty(&instance_to_json(instance)).expect("valid JSON");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn table_example() -> Value {
        json!({
            "schema_version": 1,
            "supply": "4",
            "horizon": 2,
            "agents": [
                {"id": 1, "demand": "2", "utility": {"breakpoints": ["0", "1", "2"], "densities": ["0.8", "0.2"]}},
                {"id": 2, "demand": "2", "utility": {"breakpoints": ["0", "1", "2"], "densities": ["0.2", "0.8"]}},
                {"id": 3, "demand": "2", "utility": {"breakpoints": ["0", "1", "2"], "densities": ["0.7", "0.3"]}},
                {"id": 4, "demand": "2", "utility": {"breakpoints": ["0", "1", "2"], "densities": ["0.3", "0.7"]}},
            ]
        })
    }

    #[test]
    fn loads_table_example() {
        let inst = instance_from_json(&table_example()).unwrap();
        assert_eq!(inst.n(), 4);
        assert_eq!(inst.supply(), &int(4));
        assert_eq!(inst.horizon(), &int(2));
        assert_eq!(inst.agent(0).utility.densities()[1], ratio(1, 5));
        assert_eq!(inst.agent(3).utility.densities()[0], ratio(3, 10));
    }

    #[test]
    fn round_trip_is_exact() {
        let inst = instance_from_json(&table_example()).unwrap();
        let normalized = inst.normalize_utilities().unwrap();
        for i in [inst, normalized] {
            assert_eq!(instance_from_json(&instance_to_json(&i)).unwrap(), i);
        }
    }

    #[test]
    fn empty_agents_rejected() {
        let doc = json!({"schema_version": 1, "supply": "1", "horizon": "1", "agents": []});
        let err = instance_from_json(&doc).unwrap_err();
        assert!(matches!(err, Error::Schema { ref path, .. } if path == "agents"));
    }

    #[test]
    fn non_monotone_breakpoints_rejected() {
        let doc = json!({"schema_version": 1, "supply": "1", "horizon": "1", "agents": [
            {"demand": "1", "utility": {"breakpoints": ["0", "2", "1"], "densities": ["1", "1"]}}
        ]});
        let err = instance_from_json(&doc).unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref path, .. } if path == "agents[0].utility.breakpoints[2]"),
            "{err}"
        );
    }

    #[test]
    fn demand_above_supply_named() {
        let doc = json!({"schema_version": 1, "supply": "1", "horizon": "1", "agents": [
            {"demand": "3/2"}
        ]});
        assert!(matches!(
            instance_from_json(&doc),
            Err(Error::DemandExceedsSupply { .. })
        ));
    }

    #[test]
    fn bad_decimal_has_path() {
        let doc = json!({"schema_version": 1, "supply": "abc", "horizon": "1", "agents": [{"demand": "1"}]});
        let err = instance_from_json(&doc).unwrap_err();
        assert!(err.to_string().starts_with("supply:"));
    }
}
