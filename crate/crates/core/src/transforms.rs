//! Contract transformations: scaling, black-box lifting and
//! robustification, and the supermodular equilibrium constructions.

use std::fmt;

use num_traits::{One, Zero};

use crate::equilibria::{
    best_response_dynamics, is_cce, is_ce, is_dropout_stable, is_pne, potential_maximizer_pne,
    JointDistribution, Verdict,
};
use crate::error::{Error, Result};
use crate::model::{principal_utility, Contract, Instance};
use crate::profile::ActionProfile;
use crate::scalar::{int, ratio, Scalar};

/// Parameters of a scaling step: multiply the shares of `subset` by `gamma`
/// (adding `epsilon` when scaling for robustness) and zero everyone else.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalingParams {
    gamma: Scalar,
    subset: Vec<usize>,
    epsilon: Scalar,
}

impl ScalingParams {
    pub fn new(
        gamma: Scalar,
        subset: impl IntoIterator<Item = usize>,
        epsilon: Scalar,
    ) -> Result<Self> {
        if gamma <= Scalar::one() {
            return Err(Error::Precondition("gamma must exceed 1".into()));
        }
        if epsilon < Scalar::zero() {
            return Err(Error::Precondition("epsilon must be nonnegative".into()));
        }
        let mut subset: Vec<usize> = subset.into_iter().collect();
        subset.sort_unstable();
        subset.dedup();
        Ok(ScalingParams {
            gamma,
            subset,
            epsilon,
        })
    }

    pub fn gamma(&self) -> &Scalar {
        &self.gamma
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn epsilon(&self) -> &Scalar {
        &self.epsilon
    }

    /// `gamma * alpha_i` on the subset, zero elsewhere.
    fn scale(&self, inst: &Instance, a: &Contract) -> Result<Contract> {
        for &i in &self.subset {
            inst.check_agent(i)?;
        }
        let shares = (0..inst.n())
            .map(|i| {
                if self.subset.binary_search(&i).is_ok() {
                    &self.gamma * a.share(i)
                } else {
                    Scalar::zero()
                }
            })
            .collect();
        Contract::new(shares)
    }
}

/// Two bundles of agents, each with total reference share at most 3/4.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentPartition {
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LiftCase {
    A,
    B,
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RobustCase {
    A,
    B,
    C,
    D,
}

impl fmt::Display for LiftCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for RobustCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A contract with a PNE, the branch taken, and the guaranteed fraction of
/// the input equilibrium's principal utility.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftResult {
    pub contract: Contract,
    pub pne: ActionProfile,
    pub case: LiftCase,
    pub claimed_ratio: Scalar,
    /// Principal utility of `pne` under `contract`.
    pub principal_utility: Scalar,
    /// Principal utility of the input distribution under the input contract.
    pub benchmark: Scalar,
}

impl LiftResult {
    /// Whether the lifted utility meets the claimed fraction of the benchmark.
    pub fn meets_claim(&self) -> bool {
        self.principal_utility >= &self.claimed_ratio * &self.benchmark
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustifyResult {
    pub contract: Contract,
    pub case: RobustCase,
    /// Guaranteed fraction of the input PNE's principal utility in every CCE.
    pub claimed_ratio: Scalar,
}

fn require(verdict: Verdict, what: &str) -> Result<()> {
    match verdict.violation {
        None => Ok(()),
        Some(v) => Err(Error::Precondition(format!(
            "input is not {what}: agent {} gains by switching to {}",
            v.agent, v.deviation
        ))),
    }
}

fn require_budget(a: &Contract) -> Result<()> {
    if a.total() > Scalar::one() {
        return Err(Error::Precondition(format!("shares of {a} sum above 1")));
    }
    Ok(())
}

/// `E_D[f(∪_{i∈agents} S_i)]`.
fn expected_bundle_value(inst: &Instance, d: &JointDistribution, agents: &[usize]) -> Scalar {
    d.expectation(|s| inst.value(&inst.restrict_to_agents(s, agents)))
}

/// The agent with the largest share (first on ties), if that share exceeds 3/4.
fn dominant_agent(a: &Contract) -> Option<usize> {
    let threshold = ratio(3, 4);
    let mut best: Option<usize> = None;
    for i in 0..a.n() {
        if best.is_none_or(|b| a.share(i) > a.share(b)) {
            best = Some(i);
        }
    }
    best.filter(|&i| *a.share(i) > threshold)
}

fn single_agent_contract(n: usize, i: usize, share: Scalar) -> Result<Contract> {
    let mut shares = vec![Scalar::zero(); n];
    shares[i] = share;
    Contract::new(shares)
}

fn checked_pne(inst: &Instance, s: &ActionProfile, a: &Contract) -> Result<()> {
    if is_pne(inst, s, a)?.holds() {
        Ok(())
    } else {
        Err(Error::Internal(format!(
            "constructed profile {s} is not a PNE of {a}"
        )))
    }
}

/// Scaling for existence: scales `subset` by `gamma` and returns the
/// potential maximizer, a PNE with `f(S') >= (1 - 1/gamma) E_D[f(S_{subset})]`
/// for XOS rewards.
pub fn scale_for_existence(
    inst: &Instance,
    a: &Contract,
    d: &JointDistribution,
    params: &ScalingParams,
) -> Result<(Contract, ActionProfile)> {
    require(is_dropout_stable(inst, d, a)?, "dropout-stable")?;
    let scaled = params.scale(inst, a)?;
    let s = potential_maximizer_pne(inst, &scaled, &inst.all_actions())?;
    Ok((scaled, s))
}

/// The robustness-side scaling `gamma * alpha + epsilon` on every agent.
pub fn scale_for_robustness(a: &Contract, gamma: &Scalar, epsilon: &Scalar) -> Result<Contract> {
    Contract::new(a.shares().iter().map(|s| gamma * s + epsilon).collect())
}

/// Single-agent scaling: agent `i` gets `gamma * alpha_i`, everyone else
/// nothing; the best response over `A_i` recovers `(1 - 1/gamma) E_D[f(S_i)]`
/// for subadditive rewards.
pub fn scale_for_existence_subadditive(
    inst: &Instance,
    a: &Contract,
    d: &JointDistribution,
    i: usize,
    gamma: &Scalar,
) -> Result<(Contract, ActionProfile)> {
    inst.check_agent(i)?;
    require(is_dropout_stable(inst, d, a)?, "dropout-stable")?;
    let params = ScalingParams::new(gamma.clone(), [i], Scalar::zero())?;
    let scaled = params.scale(inst, a)?;
    let s = potential_maximizer_pne(inst, &scaled, inst.agent_mask(i))?;
    Ok((scaled, s))
}

/// Splits agents into two bundles with reference share at most 3/4 each by
/// merging the two smallest bundles (ties by smallest agent id) until two
/// remain. `b1` holds agent 0.
pub fn partition_agents(a: &Contract) -> Result<AgentPartition> {
    require_budget(a)?;
    let cap = ratio(3, 4);
    if let Some(i) = (0..a.n()).find(|&i| *a.share(i) > cap) {
        return Err(Error::Precondition(format!(
            "agent {i} has share above 3/4 in {a}"
        )));
    }
    let mut bundles: Vec<(Vec<usize>, Scalar)> =
        (0..a.n()).map(|i| (vec![i], a.share(i).clone())).collect();
    while bundles.len() > 2 {
        bundles.sort_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0[0].cmp(&y.0[0])));
        let (mut first, s1) = bundles.remove(0);
        let (second, s2) = bundles.remove(0);
        first.extend(second);
        first.sort_unstable();
        bundles.push((first, s1 + s2));
    }
    bundles.sort_by_key(|b| b.0[0]);
    let mut it = bundles.into_iter().map(|b| b.0);
    Ok(AgentPartition {
        b1: it.next().unwrap_or_default(),
        b2: it.next().unwrap_or_default(),
    })
}

struct Lifted {
    contract: Contract,
    pne: ActionProfile,
    case: LiftCase,
    claimed_ratio: Scalar,
}

/// Black-box lifting for XOS rewards: turns a CCE of `a_star` into a contract
/// and PNE keeping a constant fraction of the principal's utility.
pub fn lift_xos(
    inst: &Instance,
    a_star: &Contract,
    d_star: &JointDistribution,
) -> Result<LiftResult> {
    lift(
        inst,
        a_star,
        d_star,
        |inst, a_star, d_star| {
            let partition = partition_agents(a_star)?;
            let e1 = expected_bundle_value(inst, d_star, &partition.b1);
            let e2 = expected_bundle_value(inst, d_star, &partition.b2);
            let bundle = if e1 >= e2 { partition.b1 } else { partition.b2 };
            let params = ScalingParams::new(ratio(7, 6), bundle, Scalar::zero())?;
            let (contract, pne) = scale_for_existence(inst, a_star, d_star, &params)?;
            Ok(Lifted {
                contract,
                pne,
                case: LiftCase::C,
                claimed_ratio: ratio(1, 112),
            })
        },
        |inst, a_star, d_star, i| {
            let params =
                ScalingParams::new(int(2), (0..inst.n()).filter(|&j| j != i), Scalar::zero())?;
            let (contract, pne) = scale_for_existence(inst, a_star, d_star, &params)?;
            Ok(Lifted {
                contract,
                pne,
                case: LiftCase::B,
                claimed_ratio: ratio(1, 20),
            })
        },
    )
}

/// Lifting for subadditive rewards, through single-agent scaling; the
/// guarantee degrades linearly in the number of agents.
pub fn lift_subadditive(
    inst: &Instance,
    a_star: &Contract,
    d_star: &JointDistribution,
) -> Result<LiftResult> {
    let n = inst.n() as i64;
    let best_agent = |inst: &Instance, d: &JointDistribution, skip: Option<usize>| {
        let mut best: Option<(usize, Scalar)> = None;
        for i in (0..inst.n()).filter(|&i| Some(i) != skip) {
            let v = expected_bundle_value(inst, d, &[i]);
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    };
    lift(
        inst,
        a_star,
        d_star,
        |inst, a_star, d_star| {
            let i = best_agent(inst, d_star, None)
                .ok_or_else(|| Error::Precondition("no agents".into()))?;
            let (contract, pne) =
                scale_for_existence_subadditive(inst, a_star, d_star, i, &ratio(7, 6))?;
            Ok(Lifted {
                contract,
                pne,
                case: LiftCase::C,
                claimed_ratio: ratio(1, 56 * n),
            })
        },
        |inst, a_star, d_star, skip| {
            match best_agent(inst, d_star, Some(skip)) {
                Some(i) => {
                    let (contract, pne) =
                        scale_for_existence_subadditive(inst, a_star, d_star, i, &int(2))?;
                    Ok(Lifted {
                        contract,
                        pne,
                        case: LiftCase::B,
                        claimed_ratio: ratio(1, 20 * n),
                    })
                }
                // A lone dominant agent that fails the significance test leaves
                // nobody to scale; the empty profile at the zero contract is a PNE.
                None => Ok(Lifted {
                    contract: Contract::zero(inst.n()),
                    pne: potential_maximizer_pne(
                        inst,
                        &Contract::zero(inst.n()),
                        &ActionProfile::empty(),
                    )?,
                    case: LiftCase::B,
                    claimed_ratio: ratio(1, 20 * n),
                }),
            }
        },
    )
}

fn lift(
    inst: &Instance,
    a_star: &Contract,
    d_star: &JointDistribution,
    no_dominant: impl Fn(&Instance, &Contract, &JointDistribution) -> Result<Lifted>,
    insignificant: impl Fn(&Instance, &Contract, &JointDistribution, usize) -> Result<Lifted>,
) -> Result<LiftResult> {
    inst.check_contract(a_star)?;
    require_budget(a_star)?;
    require(is_cce(inst, d_star, a_star)?, "a CCE")?;
    let lifted = match dominant_agent(a_star) {
        Some(i) => {
            let own = expected_bundle_value(inst, d_star, &[i]);
            let rest = d_star.expectation(|s| inst.value(&inst.others(s, i)));
            let share = a_star.share(i);
            if (Scalar::one() - share) * own >= int(4) * rest {
                let contract =
                    single_agent_contract(inst.n(), i, (Scalar::one() + share) / int(2))?;
                let pne = potential_maximizer_pne(inst, &contract, inst.agent_mask(i))?;
                Lifted {
                    contract,
                    pne,
                    case: LiftCase::A,
                    claimed_ratio: ratio(4, 17),
                }
            } else {
                insignificant(inst, a_star, d_star, i)?
            }
        }
        None => no_dominant(inst, a_star, d_star)?,
    };
    checked_pne(inst, &lifted.pne, &lifted.contract)?;
    let utility = principal_utility(inst, &lifted.pne, &lifted.contract)?;
    let benchmark = a_star.residual() * d_star.expectation(|s| inst.value(s));
    Ok(LiftResult {
        contract: lifted.contract,
        pne: lifted.pne,
        case: lifted.case,
        claimed_ratio: lifted.claimed_ratio,
        principal_utility: utility,
        benchmark,
    })
}

/// Black-box robustness for submodular rewards: from a PNE `s_star` of
/// `a_star`, a contract under which every CCE keeps a constant fraction of
/// the principal's utility.
pub fn robustify_submodular(
    inst: &Instance,
    a_star: &Contract,
    s_star: &ActionProfile,
) -> Result<RobustifyResult> {
    inst.check_contract(a_star)?;
    require_budget(a_star)?;
    require(is_pne(inst, s_star, a_star)?, "a PNE")?;
    let n = inst.n();
    let f_star = inst.value(s_star);
    let residual = a_star.residual();

    let free: ActionProfile = (0..inst.m()).filter(|&j| inst.cost(j).is_zero()).collect();
    if inst.value(&free) >= ratio(2, 17) * &residual * &f_star {
        let eps = ratio(1, 2 * n.max(1) as i64);
        return Ok(RobustifyResult {
            contract: Contract::new(vec![eps; n])?,
            case: RobustCase::A,
            claimed_ratio: ratio(1, 68),
        });
    }

    if let Some(i) = dominant_agent(a_star) {
        let share = a_star.share(i);
        let own = inst.value(&inst.slice(s_star, i));
        let rest = inst.value(&inst.others(s_star, i));
        if (Scalar::one() - share) * own >= int(4) * rest {
            return Ok(RobustifyResult {
                contract: single_agent_contract(n, i, (Scalar::one() + share) / int(2))?,
                case: RobustCase::B,
                claimed_ratio: ratio(2, 17),
            });
        }
        let params = ScalingParams::new(int(2), (0..n).filter(|&j| j != i), Scalar::zero())?;
        return Ok(RobustifyResult {
            contract: params.scale(inst, a_star)?,
            case: RobustCase::C,
            claimed_ratio: ratio(1, 40),
        });
    }

    let partition = partition_agents(a_star)?;
    let v1 = inst.value(&inst.restrict_to_agents(s_star, &partition.b1));
    let v2 = inst.value(&inst.restrict_to_agents(s_star, &partition.b2));
    let bundle = if v1 >= v2 { partition.b1 } else { partition.b2 };
    let params = ScalingParams::new(ratio(7, 6), bundle, Scalar::zero())?;
    Ok(RobustifyResult {
        contract: params.scale(inst, a_star)?,
        case: RobustCase::D,
        claimed_ratio: ratio(1, 224),
    })
}

/// Binary supermodular CCE to PNE: everyone who ever acts keeps its share,
/// everyone else is paid nothing, and the union of the support is a PNE.
pub fn cce_to_pne_supermodular_binary(
    inst: &Instance,
    a: &Contract,
    d: &JointDistribution,
) -> Result<(Contract, ActionProfile)> {
    if !inst.is_binary() {
        return Err(Error::NotBinary);
    }
    require(is_cce(inst, d, a)?, "a CCE")?;
    let union = d.support_union();
    let shares = (0..inst.n())
        .map(|i| {
            if union.contains(inst.agent_actions(i)[0]) {
                a.share(i).clone()
            } else {
                Scalar::zero()
            }
        })
        .collect();
    let contract = Contract::new(shares)?;
    if !is_pne(inst, &union, &contract)?.holds() {
        return Err(Error::Precondition(format!(
            "support union {union} is not a PNE of {contract}; the reward is not supermodular"
        )));
    }
    Ok((contract, union))
}

/// Supermodular CE to PNE: best-response dynamics from the support union,
/// never dropping below it.
pub fn ce_to_pne_supermodular(
    inst: &Instance,
    a: &Contract,
    d: &JointDistribution,
) -> Result<(Contract, ActionProfile)> {
    require(is_ce(inst, d, a)?, "a CE")?;
    let union = d.support_union();
    let floor: Vec<ActionProfile> = (0..inst.n()).map(|i| inst.slice(&union, i)).collect();
    let out = best_response_dynamics(inst, &union, a, Some(&floor))?;
    checked_pne(inst, &out.profile, a)?;
    Ok((a.clone(), out.profile))
}
