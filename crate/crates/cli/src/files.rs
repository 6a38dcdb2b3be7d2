//! Instance and distribution files.
//!
//! Every scalar is a string holding a rational (`"37/40"`) or a decimal
//! (`"0.925"`); emission always writes lowest-terms rationals with keys in
//! sorted order, so emitting a parsed canonical file reproduces it byte for
//! byte.

use contractlab::fixtures::subadditive_gap_instance;
use contractlab::rewards::RewardView;
use contractlab::{
    format_scalar, parse_scalar, ActionProfile, Contract, Instance, JointDistribution,
    ProductDistribution, RewardFunction, Scalar,
};
use serde_json::{json, Map, Value};

use crate::CliError;

type Parse<T> = Result<T, CliError>;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::parse(msg)
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, ctx: &str) -> Parse<&'a Value> {
    obj.get(key)
        .ok_or_else(|| bad(format!("{ctx}: missing \"{key}\"")))
}

fn object<'a>(v: &'a Value, ctx: &str) -> Parse<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| bad(format!("{ctx}: expected an object")))
}

fn array<'a>(v: &'a Value, ctx: &str) -> Parse<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| bad(format!("{ctx}: expected an array")))
}

fn index(v: &Value, ctx: &str) -> Parse<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| bad(format!("{ctx}: expected a non-negative integer")))
}

fn scalar(v: &Value, ctx: &str) -> Parse<Scalar> {
    match v {
        Value::String(s) => parse_scalar(s).map_err(|e| bad(format!("{ctx}: {e}"))),
        Value::Number(n) => parse_scalar(&n.to_string()).map_err(|e| bad(format!("{ctx}: {e}"))),
        _ => Err(bad(format!("{ctx}: expected a rational string"))),
    }
}

fn scalars(v: &Value, ctx: &str) -> Parse<Vec<Scalar>> {
    array(v, ctx)?
        .iter()
        .enumerate()
        .map(|(k, x)| scalar(x, &format!("{ctx}[{k}]")))
        .collect()
}

fn profile(v: &Value, ctx: &str) -> Parse<ActionProfile> {
    array(v, ctx)?
        .iter()
        .enumerate()
        .map(|(k, x)| index(x, &format!("{ctx}[{k}]")))
        .collect()
}

pub fn emit_scalar(x: &Scalar) -> Value {
    Value::String(format_scalar(x))
}

fn emit_scalars(xs: &[Scalar]) -> Value {
    Value::Array(xs.iter().map(emit_scalar).collect())
}

pub fn emit_profile(s: &ActionProfile) -> Value {
    Value::Array(s.iter().map(|j| json!(j)).collect())
}

/// Pretty JSON with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut out = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    out.push('\n');
    out
}

pub fn parse_json(text: &str, what: &str) -> Parse<Value> {
    serde_json::from_str(text).map_err(|e| bad(format!("{what}: {e}")))
}

/// Parses a formula name written by [`emit_instance`].
fn formula(name: &str) -> Parse<RewardFunction> {
    let n = name
        .strip_prefix("subadditive-gap(n=")
        .and_then(|rest| rest.strip_suffix(')'))
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| bad(format!("unknown formula reward \"{name}\"")))?;
    Ok(subadditive_gap_instance(n)?.reward().clone())
}

fn reward(v: &Value, m: usize) -> Parse<RewardFunction> {
    let obj = object(v, "reward")?;
    let kind = field(obj, "type", "reward")?
        .as_str()
        .ok_or_else(|| bad("reward.type: expected a string"))?;
    let f = match kind {
        "table" => {
            let values = scalars(field(obj, "values", "reward")?, "reward.values")?;
            RewardFunction::table(m, values)?
        }
        "additive" => {
            RewardFunction::additive(scalars(field(obj, "values", "reward")?, "reward.values")?)?
        }
        "xos" => {
            let clauses = array(field(obj, "clauses", "reward")?, "reward.clauses")?
                .iter()
                .enumerate()
                .map(|(k, c)| scalars(c, &format!("reward.clauses[{k}]")))
                .collect::<Parse<Vec<_>>>()?;
            RewardFunction::xos(m, clauses)?
        }
        "coverage" => {
            let weights = scalars(field(obj, "weights", "reward")?, "reward.weights")?;
            let covers = array(field(obj, "covers", "reward")?, "reward.covers")?
                .iter()
                .enumerate()
                .map(|(k, c)| profile(c, &format!("reward.covers[{k}]")))
                .collect::<Parse<Vec<_>>>()?;
            RewardFunction::coverage(weights, covers)?
        }
        "formula" => {
            let name = field(obj, "name", "reward")?
                .as_str()
                .ok_or_else(|| bad("reward.name: expected a string"))?;
            formula(name)?
        }
        other => return Err(bad(format!("unknown reward type \"{other}\""))),
    };
    if f.ground() != m {
        return Err(bad(format!(
            "reward covers {} actions but agents own {m}",
            f.ground()
        )));
    }
    Ok(f)
}

/// Agents must be listed by id `0..n`; action ids must be exactly `0..m`,
/// numbered consecutively in agent order.
pub fn parse_instance(text: &str) -> Parse<Instance> {
    let doc = parse_json(text, "instance")?;
    let obj = object(&doc, "instance")?;
    let mut costs = Vec::new();
    let mut seen = Vec::new();
    for (pos, agent) in array(field(obj, "agents", "instance")?, "agents")?
        .iter()
        .enumerate()
    {
        let ctx = format!("agents[{pos}]");
        let a = object(agent, &ctx)?;
        let id = index(field(a, "id", &ctx)?, &format!("{ctx}.id"))?;
        if id != pos {
            return Err(bad(format!("{ctx}: agent id {id}, expected {pos}")));
        }
        let mut own = Vec::new();
        for (k, action) in array(field(a, "actions", &ctx)?, &ctx)?.iter().enumerate() {
            let actx = format!("{ctx}.actions[{k}]");
            let act = object(action, &actx)?;
            let aid = index(field(act, "id", &actx)?, &format!("{actx}.id"))?;
            if seen.contains(&aid) {
                return Err(bad(format!("{actx}: action id {aid} is used twice")));
            }
            if aid != seen.len() {
                return Err(bad(format!(
                    "{actx}: action id {aid}, expected {} (ids run consecutively in agent order)",
                    seen.len()
                )));
            }
            seen.push(aid);
            own.push(scalar(field(act, "cost", &actx)?, &format!("{actx}.cost"))?);
        }
        costs.push(own);
    }
    let f = reward(field(obj, "reward", "instance")?, seen.len())?;
    Ok(Instance::new(costs, f)?)
}

pub fn emit_instance(inst: &Instance) -> Value {
    let agents: Vec<Value> = (0..inst.n())
        .map(|i| {
            let actions: Vec<Value> = inst
                .agent_actions(i)
                .iter()
                .map(|&j| json!({"id": j, "cost": emit_scalar(inst.cost(j))}))
                .collect();
            json!({"id": i, "actions": actions})
        })
        .collect();
    let reward = match inst.reward().view() {
        RewardView::Table(values) => json!({"type": "table", "values": emit_scalars(values)}),
        RewardView::Additive(values) => json!({"type": "additive", "values": emit_scalars(values)}),
        RewardView::Xos(clauses) => json!({
            "type": "xos",
            "clauses": clauses.iter().map(|c| emit_scalars(c)).collect::<Vec<_>>(),
        }),
        RewardView::Coverage { weights, covers } => json!({
            "type": "coverage",
            "weights": emit_scalars(weights),
            "covers": covers.iter().map(emit_profile).collect::<Vec<_>>(),
        }),
        RewardView::Formula { name } => json!({"type": "formula", "name": name}),
    };
    json!({"agents": agents, "reward": reward})
}

/// A distribution file: correlated (`support`) or independent (`product`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distribution {
    Joint(JointDistribution),
    Product(ProductDistribution),
}

impl Distribution {
    pub fn to_joint(&self, cap: u64) -> Result<JointDistribution, CliError> {
        match self {
            Distribution::Joint(d) => Ok(d.clone()),
            Distribution::Product(p) => Ok(p.to_joint(cap)?),
        }
    }
}

/// A distribution and the contract stored next to it, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributionFile {
    pub distribution: Distribution,
    pub contract: Option<Contract>,
}

fn weighted(v: &Value, key: &str, ctx: &str) -> Parse<Vec<(ActionProfile, Scalar)>> {
    array(v, ctx)?
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let ectx = format!("{ctx}[{k}]");
            let o = object(e, &ectx)?;
            Ok((
                profile(field(o, key, &ectx)?, &format!("{ectx}.{key}"))?,
                scalar(field(o, "prob", &ectx)?, &format!("{ectx}.prob"))?,
            ))
        })
        .collect()
}

pub fn parse_distribution(text: &str) -> Parse<DistributionFile> {
    let doc = parse_json(text, "distribution")?;
    let obj = object(&doc, "distribution")?;
    let distribution = match (obj.get("support"), obj.get("product")) {
        (Some(s), None) => {
            Distribution::Joint(JointDistribution::new(weighted(s, "profile", "support")?)?)
        }
        (None, Some(p)) => {
            let agents = array(p, "product")?
                .iter()
                .enumerate()
                .map(|(i, a)| weighted(a, "slice", &format!("product[{i}]")))
                .collect::<Parse<Vec<_>>>()?;
            Distribution::Product(ProductDistribution::new(agents)?)
        }
        _ => {
            return Err(bad(
                "distribution: expected exactly one of \"support\" and \"product\"",
            ))
        }
    };
    let contract = match obj.get("contract") {
        Some(c) => Some(Contract::new(scalars(c, "contract")?)?),
        None => None,
    };
    Ok(DistributionFile {
        distribution,
        contract,
    })
}

fn emit_weighted(entries: &[(ActionProfile, Scalar)], key: &str) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|(s, p)| json!({key: emit_profile(s), "prob": emit_scalar(p)}))
            .collect(),
    )
}

pub fn emit_distribution(file: &DistributionFile) -> Value {
    let mut obj = Map::new();
    match &file.distribution {
        Distribution::Joint(d) => {
            obj.insert("support".into(), emit_weighted(d.support(), "profile"));
        }
        Distribution::Product(p) => {
            obj.insert(
                "product".into(),
                Value::Array(
                    p.agents()
                        .iter()
                        .map(|a| emit_weighted(a, "slice"))
                        .collect(),
                ),
            );
        }
    }
    if let Some(a) = &file.contract {
        obj.insert("contract".into(), emit_contract(a));
    }
    Value::Object(obj)
}

pub fn emit_contract(a: &Contract) -> Value {
    emit_scalars(a.shares())
}

/// `"37/40,1/18"` or `"0.925, 0.0555"`.
pub fn parse_contract(text: &str) -> Parse<Contract> {
    let shares = text
        .split(',')
        .map(|s| parse_scalar(s.trim()).map_err(|e| bad(format!("contract: {e}"))))
        .collect::<Parse<Vec<_>>>()?;
    Ok(Contract::new(shares)?)
}

/// `"0,2"`, `"{0,2}"`, or empty for the empty profile.
pub fn parse_profile(text: &str) -> Parse<ActionProfile> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("profile: \"{s}\" is not an action id")))
        })
        .collect()
}
