//! Instances, contracts, utilities and the weighted potential.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::profile::{subsets, ActionProfile};
use crate::rewards::RewardFunction;
use crate::scalar::{format_scalar, ExtendedScalar, Scalar};

/// Enumeration caps shared by every brute-force routine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest ground set a demand query, deviation scan or profile
    /// enumeration may walk over, in bits.
    pub enumeration_bits: u32,
    /// Largest profile space an equilibrium LP may have as variables.
    pub lp_profiles: u64,
    /// Largest ground set the class testers accept, in bits.
    pub classify_bits: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration_bits: 24,
            lp_profiles: 4096,
            classify_bits: 12,
        }
    }
}

impl Limits {
    pub(crate) fn check_bits(&self, what: &'static str, bits: usize) -> Result<()> {
        if bits as u64 > self.enumeration_bits as u64 {
            Err(Error::capacity(
                what,
                bits as u64,
                self.enumeration_bits as u64,
            ))
        } else {
            Ok(())
        }
    }
}

/// A multi-agent combinatorial contracts instance.
///
/// Actions are numbered `0..m` in agent order, so agent `i` owns a contiguous
/// block of ids.
#[derive(Clone, Debug)]
pub struct Instance {
    agents: Vec<Vec<usize>>,
    owner: Vec<usize>,
    costs: Vec<Scalar>,
    masks: Vec<ActionProfile>,
    ids: Vec<usize>,
    reward: RewardFunction,
    limits: Limits,
}

impl Instance {
    /// `agent_costs[i]` lists the costs of agent `i`'s actions.
    pub fn new(agent_costs: Vec<Vec<Scalar>>, reward: RewardFunction) -> Result<Self> {
        let mut agents = Vec::with_capacity(agent_costs.len());
        let mut owner = Vec::new();
        let mut costs = Vec::new();
        let mut masks = Vec::with_capacity(agent_costs.len());
        for (i, own) in agent_costs.into_iter().enumerate() {
            let ids: Vec<usize> = (costs.len()..costs.len() + own.len()).collect();
            for c in own {
                if c.is_negative() {
                    return Err(Error::InvalidInstance(format!(
                        "action {} has negative cost {}",
                        costs.len(),
                        format_scalar(&c)
                    )));
                }
                owner.push(i);
                costs.push(c);
            }
            masks.push(ids.iter().copied().collect());
            agents.push(ids);
        }
        if reward.ground() != costs.len() {
            return Err(Error::InvalidInstance(format!(
                "reward is defined on {} actions but agents own {}",
                reward.ground(),
                costs.len()
            )));
        }
        Ok(Instance {
            agents,
            owner,
            ids: (0..costs.len()).collect(),
            costs,
            masks,
            reward,
            limits: Limits::default(),
        })
    }

    /// One action per agent, with the given costs.
    pub fn binary(costs: Vec<Scalar>, reward: RewardFunction) -> Result<Self> {
        Self::new(costs.into_iter().map(|c| vec![c]).collect(), reward)
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn m(&self) -> usize {
        self.costs.len()
    }

    pub fn is_binary(&self) -> bool {
        self.agents.iter().all(|a| a.len() == 1)
    }

    pub fn agent_actions(&self, i: usize) -> &[usize] {
        &self.agents[i]
    }

    pub fn agent_mask(&self, i: usize) -> &ActionProfile {
        &self.masks[i]
    }

    pub fn owner(&self, action: usize) -> usize {
        self.owner[action]
    }

    pub fn cost(&self, action: usize) -> &Scalar {
        &self.costs[action]
    }

    pub fn costs(&self) -> &[Scalar] {
        &self.costs
    }

    pub fn reward(&self) -> &RewardFunction {
        &self.reward
    }

    /// Every action id, as a profile.
    pub fn all_actions(&self) -> ActionProfile {
        (0..self.m()).collect()
    }

    /// `c(S)`.
    pub fn cost_of(&self, s: &ActionProfile) -> Scalar {
        s.iter().map(|j| &self.costs[j]).sum()
    }

    /// `f(S)` without bounds checking; callers validate profiles first.
    pub fn value(&self, s: &ActionProfile) -> Scalar {
        self.reward.eval(s)
    }

    /// `S_i = S ∩ A_i`.
    pub fn slice(&self, s: &ActionProfile, i: usize) -> ActionProfile {
        s.intersection(&self.masks[i])
    }

    /// `S_{-i} = S \ A_i`.
    pub fn others(&self, s: &ActionProfile, i: usize) -> ActionProfile {
        s.difference(&self.masks[i])
    }

    /// `S_{-i} ∪ T_i`.
    pub fn replace_slice(&self, s: &ActionProfile, i: usize, t: &ActionProfile) -> ActionProfile {
        self.others(s, i).union(t)
    }

    /// Union of the slices of the given agents.
    pub fn restrict_to_agents(&self, s: &ActionProfile, agents: &[usize]) -> ActionProfile {
        agents.iter().fold(ActionProfile::empty(), |acc, &i| {
            acc.union(&self.slice(s, i))
        })
    }

    pub fn check_agent(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::InvalidAgent {
                agent: i,
                n: self.n(),
            })
        }
    }

    pub fn check_profile(&self, s: &ActionProfile) -> Result<()> {
        match s.max_action() {
            Some(a) if a >= self.m() => Err(Error::InvalidProfile {
                profile: s.clone(),
                action: a,
                m: self.m(),
            }),
            _ => Ok(()),
        }
    }

    pub fn check_slice(&self, s: &ActionProfile, i: usize) -> Result<()> {
        self.check_agent(i)?;
        if s.is_subset(&self.masks[i]) {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{s} is not a subset of agent {i}'s actions {}",
                self.masks[i]
            )))
        }
    }

    pub fn check_contract(&self, a: &Contract) -> Result<()> {
        if a.n() == self.n() {
            Ok(())
        } else {
            Err(Error::InvalidContract(format!(
                "contract has {} shares for {} agents",
                a.n(),
                self.n()
            )))
        }
    }

    /// Every profile `S ⊆ A`, in increasing order, within the enumeration cap.
    pub fn profiles(&self) -> Result<impl Iterator<Item = ActionProfile> + '_> {
        self.limits.check_bits("profile enumeration", self.m())?;
        Ok(subsets(&self.ids))
    }

    /// Every deviation `T_i ⊆ A_i` of agent `i`, in increasing order.
    pub fn deviations(&self, i: usize) -> Result<impl Iterator<Item = ActionProfile> + '_> {
        self.limits
            .check_bits("per-agent deviation enumeration", self.agents[i].len())?;
        Ok(subsets(&self.agents[i]))
    }
}

/// A linear contract: agent `i` receives share `alpha_i ∈ [0, 1]` of the reward.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Contract {
    shares: Vec<Scalar>,
}

impl Contract {
    pub fn new(shares: Vec<Scalar>) -> Result<Self> {
        for (i, s) in shares.iter().enumerate() {
            if s.is_negative() || *s > Scalar::one() {
                return Err(Error::InvalidContract(format!(
                    "share of agent {i} is {}, outside [0, 1]",
                    format_scalar(s)
                )));
            }
        }
        Ok(Contract { shares })
    }

    pub fn zero(n: usize) -> Self {
        Contract {
            shares: vec![Scalar::zero(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn share(&self, i: usize) -> &Scalar {
        &self.shares[i]
    }

    pub fn shares(&self) -> &[Scalar] {
        &self.shares
    }

    /// `Σ_i alpha_i`; not constrained to be at most one.
    pub fn total(&self) -> Scalar {
        self.shares.iter().sum()
    }

    /// `1 - Σ_i alpha_i`, the principal's residual share.
    pub fn residual(&self) -> Scalar {
        Scalar::one() - self.total()
    }
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, s) in self.shares.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&format_scalar(s))?;
        }
        f.write_str(")")
    }
}

/// `u_i(S, alpha) = alpha_i f(S) - c(S_i)`.
pub fn agent_utility(inst: &Instance, s: &ActionProfile, a: &Contract, i: usize) -> Result<Scalar> {
    inst.check_agent(i)?;
    inst.check_profile(s)?;
    inst.check_contract(a)?;
    Ok(agent_utility_unchecked(inst, s, a, i))
}

pub(crate) fn agent_utility_unchecked(
    inst: &Instance,
    s: &ActionProfile,
    a: &Contract,
    i: usize,
) -> Scalar {
    a.share(i) * inst.value(s) - inst.cost_of(&inst.slice(s, i))
}

/// `u_P(S, alpha) = (1 - Σ alpha_i) f(S)`.
pub fn principal_utility(inst: &Instance, s: &ActionProfile, a: &Contract) -> Result<Scalar> {
    inst.check_profile(s)?;
    inst.check_contract(a)?;
    Ok(a.residual() * inst.value(s))
}

/// `f(S) - c(S)`.
pub fn welfare(inst: &Instance, s: &ActionProfile) -> Result<Scalar> {
    inst.check_profile(s)?;
    Ok(inst.value(s) - inst.cost_of(s))
}

/// The weighted potential `f(S) - Σ_i c(S_i) / alpha_i`.
///
/// A term with `c(S_i) = 0` contributes zero even when `alpha_i = 0`; a term
/// with `alpha_i = 0 < c(S_i)` makes the whole potential `-inf`.
pub fn potential(inst: &Instance, s: &ActionProfile, a: &Contract) -> Result<ExtendedScalar> {
    inst.check_profile(s)?;
    inst.check_contract(a)?;
    Ok(potential_unchecked(inst, s, a))
}

pub(crate) fn potential_unchecked(
    inst: &Instance,
    s: &ActionProfile,
    a: &Contract,
) -> ExtendedScalar {
    let mut phi = inst.value(s);
    for i in 0..inst.n() {
        let c = inst.cost_of(&inst.slice(s, i));
        if c.is_zero() {
            continue;
        }
        let share = a.share(i);
        if share.is_zero() {
            return ExtendedScalar::NegInfinity;
        }
        phi -= c / share;
    }
    ExtendedScalar::Finite(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::{int, ratio};

    fn p(ids: &[usize]) -> ActionProfile {
        ids.iter().copied().collect()
    }

    fn contract(shares: &[Scalar]) -> Contract {
        Contract::new(shares.to_vec()).unwrap()
    }

    #[test]
    fn agent_utility_examples() {
        let sep = fixtures::separation_example();
        let a = contract(&[ratio(1, 36), ratio(1, 36)]);
        assert_eq!(
            agent_utility(&sep, &p(&[0, 1]), &a, 0).unwrap(),
            ratio(41, 9)
        );
        assert_eq!(agent_utility(&sep, &p(&[]), &a, 1).unwrap(), int(0));

        let sup = fixtures::supermodular_gap_instance();
        let a = contract(&[ratio(37, 40), ratio(1, 18)]);
        assert_eq!(
            agent_utility(&sup, &p(&[0, 1, 2]), &a, 1).unwrap(),
            ratio(11, 36)
        );
    }

    #[test]
    fn agent_utility_rejects_unknown_agent() {
        let sep = fixtures::separation_example();
        let err = agent_utility(&sep, &p(&[]), &Contract::zero(2), 2).unwrap_err();
        assert!(matches!(err, Error::InvalidAgent { agent: 2, n: 2 }));
    }

    #[test]
    fn profiles_outside_the_ground_set_are_rejected() {
        let sep = fixtures::separation_example();
        assert!(matches!(
            welfare(&sep, &p(&[2])),
            Err(Error::InvalidProfile { action: 2, .. })
        ));
    }

    #[test]
    fn principal_utility_examples() {
        let sep = fixtures::separation_example();
        let a = contract(&[ratio(1, 20), ratio(1, 20)]);
        assert_eq!(principal_utility(&sep, &p(&[0, 1]), &a).unwrap(), int(180));
        let full = contract(&[ratio(1, 2), ratio(1, 2)]);
        assert_eq!(principal_utility(&sep, &p(&[0, 1]), &full).unwrap(), int(0));

        let sup = fixtures::supermodular_gap_instance();
        let a = contract(&[ratio(37, 40), ratio(1, 18)]);
        assert_eq!(
            principal_utility(&sup, &p(&[0, 1, 2]), &a).unwrap(),
            ratio(7, 36)
        );
    }

    #[test]
    fn welfare_examples() {
        let sup = fixtures::supermodular_gap_instance();
        assert_eq!(welfare(&sup, &p(&[0, 1, 2])).unwrap(), ratio(1, 2));
        assert_eq!(welfare(&sup, &p(&[])).unwrap(), int(0));
        assert_eq!(welfare(&sup, &p(&[0, 1])).unwrap(), ratio(-15, 4));
    }

    #[test]
    fn potential_examples() {
        let sep = fixtures::separation_example();
        let a = contract(&[ratio(1, 18), ratio(1, 18)]);
        assert_eq!(
            potential(&sep, &p(&[0, 1]), &a).unwrap(),
            ExtendedScalar::Finite(int(164))
        );
        let half = contract(&[ratio(1, 18), int(0)]);
        assert_eq!(
            potential(&sep, &p(&[0, 1]), &half).unwrap(),
            ExtendedScalar::NegInfinity
        );
        assert_eq!(
            potential(&sep, &p(&[]), &Contract::zero(2)).unwrap(),
            ExtendedScalar::Finite(int(0))
        );
    }

    #[test]
    fn zero_cost_actions_do_not_blow_up_the_potential() {
        let inst = fixtures::golden_ratio_instance(20).unwrap();
        // Agents 2 and 3 are free; with a zero contract their terms vanish.
        let phi = potential(&inst, &p(&[2, 3]), &Contract::zero(4)).unwrap();
        assert_eq!(phi, ExtendedScalar::Finite(int(0)));
    }

    #[test]
    fn contract_shares_must_lie_in_unit_interval() {
        assert!(Contract::new(vec![ratio(3, 2)]).is_err());
        assert!(Contract::new(vec![ratio(-1, 2)]).is_err());
        let a = contract(&[ratio(2, 3), ratio(2, 3)]);
        assert_eq!(a.total(), ratio(4, 3));
        assert_eq!(a.residual(), ratio(-1, 3));
    }

    #[test]
    fn instance_rejects_negative_costs_and_size_mismatch() {
        let f = RewardFunction::additive(vec![int(1), int(2)]).unwrap();
        assert!(Instance::binary(vec![int(1), int(-1)], f.clone()).is_err());
        assert!(Instance::binary(vec![int(1)], f).is_err());
    }
}
