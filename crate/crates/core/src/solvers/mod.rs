//! Exact benchmarks: equilibrium LPs over the full profile space, PNE
//! enumeration, the binary-action `g(S)` search, and contract grids.

pub mod grid;
pub mod lp;

use num_traits::{One, Signed, Zero};

use crate::equilibria::{is_pne, JointDistribution};
use crate::error::{Error, Result};
use crate::model::{principal_utility, Contract, Instance};
use crate::profile::ActionProfile;
use crate::scalar::Scalar;

use lp::{solve_lp, LinearProgram, LpOutcome, Relation, Sense};

pub use grid::{grid_search, grid_search_cells, CellResult, GapReport, Objective, Witness};

/// Which equilibrium polytope an LP ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polytope {
    Cce,
    Ce,
    Dropout,
}

/// An optimal distribution with its expected reward and principal utility.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquilibriumOptimum {
    pub distribution: JointDistribution,
    pub expected_reward: Scalar,
    pub principal_utility: Scalar,
}

/// Every profile as a bitmask, with `f` tabulated; the LP cap bounds `2^m`.
struct ProfileSpace {
    masks: Vec<u64>,
    profiles: Vec<ActionProfile>,
    values: Vec<Scalar>,
    agent_masks: Vec<u64>,
}

impl ProfileSpace {
    fn new(inst: &Instance) -> Result<Self> {
        let size = 1u128 << inst.m().min(127);
        let cap = inst.limits().lp_profiles;
        if inst.m() >= 64 || size > cap as u128 {
            return Err(Error::capacity(
                "equilibrium LP profile space",
                size.min(u64::MAX as u128) as u64,
                cap,
            ));
        }
        let masks: Vec<u64> = (0..1u64 << inst.m()).collect();
        let profiles: Vec<ActionProfile> =
            masks.iter().map(|&s| ActionProfile::from_mask(s)).collect();
        let values = profiles.iter().map(|s| inst.value(s)).collect();
        let agent_masks = (0..inst.n())
            .map(|i| inst.agent_mask(i).as_mask().expect("m < 64"))
            .collect();
        Ok(ProfileSpace {
            masks,
            profiles,
            values,
            agent_masks,
        })
    }

    fn f(&self, s: u64) -> &Scalar {
        &self.values[s as usize]
    }

    fn cost(inst: &Instance, s: u64) -> Scalar {
        (0..inst.m())
            .filter(|j| s >> j & 1 == 1)
            .map(|j| inst.cost(j))
            .sum()
    }

    /// `u_i(S_{-i} ∪ t)` with `c(t)` precomputed by the caller.
    fn utility(&self, a: &Contract, i: usize, s: u64, t: u64, cost_t: &Scalar) -> Scalar {
        let mixed = (s & !self.agent_masks[i]) | t;
        a.share(i) * self.f(mixed) - cost_t
    }

    /// All submasks of agent `i`'s action mask, in increasing order.
    fn deviations(&self, i: usize) -> Vec<u64> {
        let mask = self.agent_masks[i];
        let mut out = Vec::new();
        let mut t = 0u64;
        loop {
            out.push(t);
            if t == mask {
                break;
            }
            t = ((t | !mask).wrapping_add(1)) & mask;
        }
        out
    }
}

fn equilibrium_lp(
    inst: &Instance,
    a: &Contract,
    polytope: Polytope,
    space: &ProfileSpace,
    objective: Vec<Scalar>,
    sense: Sense,
) -> LinearProgram {
    let mut lp = LinearProgram::new(sense, objective);
    let width = space.masks.len();
    for i in 0..inst.n() {
        let own: Vec<Scalar> = space
            .masks
            .iter()
            .map(|&s| {
                let si = s & space.agent_masks[i];
                space.utility(a, i, s, si, &ProfileSpace::cost(inst, si))
            })
            .collect();
        match polytope {
            Polytope::Dropout => {
                let zero = Scalar::zero();
                let row = space
                    .masks
                    .iter()
                    .map(|&s| &own[s as usize] - space.utility(a, i, s, 0, &zero))
                    .collect();
                lp.add(row, Relation::Ge, Scalar::zero());
            }
            Polytope::Cce => {
                for t in space.deviations(i) {
                    let ct = ProfileSpace::cost(inst, t);
                    let row = space
                        .masks
                        .iter()
                        .map(|&s| &own[s as usize] - space.utility(a, i, s, t, &ct))
                        .collect();
                    lp.add(row, Relation::Ge, Scalar::zero());
                }
            }
            Polytope::Ce => {
                let devs = space.deviations(i);
                for &r in &devs {
                    for &t in &devs {
                        if t == r {
                            continue;
                        }
                        let ct = ProfileSpace::cost(inst, t);
                        let row = space
                            .masks
                            .iter()
                            .map(|&s| {
                                if s & space.agent_masks[i] == r {
                                    &own[s as usize] - space.utility(a, i, s, t, &ct)
                                } else {
                                    Scalar::zero()
                                }
                            })
                            .collect();
                        lp.add(row, Relation::Ge, Scalar::zero());
                    }
                }
            }
        }
    }
    lp.add(vec![Scalar::one(); width], Relation::Eq, Scalar::one());
    lp
}

/// Optimizes `E_D[objective(S)]` over the chosen equilibrium polytope at
/// contract `a`.
pub fn optimize_over(
    inst: &Instance,
    a: &Contract,
    polytope: Polytope,
    sense: Sense,
    objective: impl Fn(&ActionProfile) -> Scalar,
) -> Result<EquilibriumOptimum> {
    inst.check_contract(a)?;
    let space = ProfileSpace::new(inst)?;
    let weights = space.profiles.iter().map(&objective).collect();
    let lp = equilibrium_lp(inst, a, polytope, &space, weights, sense);
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x, .. } => {
            let distribution = JointDistribution::from_weights(&space.profiles, &x)?;
            let expected_reward = distribution.expectation(|s| inst.value(s));
            let principal_utility = a.residual() * &expected_reward;
            Ok(EquilibriumOptimum {
                distribution,
                expected_reward,
                principal_utility,
            })
        }
        other => Err(Error::Internal(format!(
            "{polytope:?} program at {a} reported {other:?}"
        ))),
    }
}

/// The CCE maximizing expected reward.
pub fn best_cce(inst: &Instance, a: &Contract) -> Result<EquilibriumOptimum> {
    optimize_over(inst, a, Polytope::Cce, Sense::Maximize, |s| inst.value(s))
}

/// The CCE minimizing expected reward.
pub fn worst_cce(inst: &Instance, a: &Contract) -> Result<EquilibriumOptimum> {
    optimize_over(inst, a, Polytope::Cce, Sense::Minimize, |s| inst.value(s))
}

/// The CE maximizing expected reward.
pub fn best_ce(inst: &Instance, a: &Contract) -> Result<EquilibriumOptimum> {
    optimize_over(inst, a, Polytope::Ce, Sense::Maximize, |s| inst.value(s))
}

/// Every PNE of `a` with its principal utility, best first (ties by profile).
pub fn enumerate_pne(inst: &Instance, a: &Contract) -> Result<Vec<(ActionProfile, Scalar)>> {
    inst.check_contract(a)?;
    let mut out = Vec::new();
    for s in inst.profiles()? {
        if is_pne(inst, &s, a)?.holds() {
            let u = principal_utility(inst, &s, a)?;
            out.push((s, u));
        }
    }
    out.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    Ok(out)
}

/// A set inducible as a PNE with its cheapest inducing contract and the
/// resulting principal utility `g(S)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedSet {
    pub profile: ActionProfile,
    pub contract: Contract,
    pub utility: Scalar,
}

/// `g(S)` for every non-redundant `S` of a binary-action instance.
///
/// Agent `i ∈ S` is paid `alpha_i = c_i / f(i | S \ {i})`; a zero-cost agent is
/// paid nothing. Sets where some costly agent has no positive marginal, or
/// needs a share above one, are skipped.
pub fn g_values(inst: &Instance) -> Result<Vec<InducedSet>> {
    if !inst.is_binary() {
        return Err(Error::NotBinary);
    }
    let mut out = Vec::new();
    'sets: for s in inst.profiles()? {
        let f_s = inst.value(&s);
        let mut shares = vec![Scalar::zero(); inst.n()];
        for j in s.iter() {
            let c = inst.cost(j);
            if c.is_zero() {
                continue;
            }
            let mut without = s.clone();
            without.remove(j);
            let marginal = &f_s - inst.value(&without);
            if !marginal.is_positive() {
                continue 'sets;
            }
            let share = c / marginal;
            if share > Scalar::one() {
                continue 'sets;
            }
            shares[inst.owner(j)] = share;
        }
        let contract = Contract::new(shares)?;
        let utility = contract.residual() * f_s;
        out.push(InducedSet {
            profile: s,
            contract,
            utility,
        });
    }
    Ok(out)
}

/// The best PNE over all contracts of a binary-action instance: the `g(S)`
/// maximizer, ties to the smallest set.
pub fn best_pne_binary(inst: &Instance) -> Result<InducedSet> {
    let mut best: Option<InducedSet> = None;
    for cand in g_values(inst)? {
        if best.as_ref().is_none_or(|b| cand.utility > b.utility) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::Internal("the empty set is always inducible".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::is_cce;
    use crate::fixtures;
    use crate::scalar::{int, ratio, ten_to_minus};

    fn p(ids: &[usize]) -> ActionProfile {
        ids.iter().copied().collect()
    }

    fn contract(shares: &[Scalar]) -> Contract {
        Contract::new(shares.to_vec()).unwrap()
    }

    #[test]
    fn deviation_masks_enumerate_submasks_in_order() {
        let inst = fixtures::supermodular_gap_instance();
        let space = ProfileSpace::new(&inst).unwrap();
        assert_eq!(space.deviations(0), vec![0, 1, 2, 3]);
        assert_eq!(space.deviations(1), vec![0, 4]);
    }

    #[test]
    fn worst_cce_on_the_separation_instance() {
        let sep = fixtures::separation_example();
        let a = contract(&[ratio(7, 120), int(0)]);
        let opt = worst_cce(&sep, &a).unwrap();
        assert_eq!(opt.expected_reward, int(180));
        assert_eq!(opt.principal_utility, ratio(339, 2));
        assert_eq!(opt.distribution, JointDistribution::point(p(&[0])));
    }

    #[test]
    fn best_cce_on_the_supermodular_instance() {
        let t3 = fixtures::supermodular_gap_instance();
        let (a, d) = fixtures::supermodular_gap_cce();
        let opt = best_cce(&t3, &a).unwrap();
        assert!(opt.principal_utility >= ratio(7, 45));
        assert!(is_cce(&t3, &opt.distribution, &a).unwrap().holds());
        let witness = a.residual() * d.expectation(|s| t3.value(s));
        assert_eq!(witness, ratio(7, 45));

        let ce = best_ce(&t3, &a).unwrap();
        assert!(ce.principal_utility <= opt.principal_utility);
    }

    #[test]
    fn full_shares_leave_the_principal_nothing() {
        let sep = fixtures::separation_example();
        let a = contract(&[ratio(1, 2), ratio(1, 2)]);
        assert_eq!(best_cce(&sep, &a).unwrap().principal_utility, int(0));
    }

    #[test]
    fn best_ce_reaches_the_best_pne_value() {
        let sep = fixtures::separation_example();
        let a = contract(&[ratio(1, 20), ratio(1, 20)]);
        assert_eq!(best_ce(&sep, &a).unwrap().expected_reward, int(200));
    }

    #[test]
    fn lp_space_is_capped() {
        let f = crate::rewards::RewardFunction::additive(vec![int(1); 13]).unwrap();
        let inst = Instance::binary(vec![int(1); 13], f).unwrap();
        assert!(best_cce(&inst, &Contract::zero(13))
            .unwrap_err()
            .is_capacity());
    }

    #[test]
    fn enumerate_pne_examples() {
        let sep = fixtures::separation_example();
        let a = contract(&[ratio(1, 20), ratio(1, 20)]);
        let all = enumerate_pne(&sep, &a).unwrap();
        assert_eq!(all[0], (p(&[0, 1]), int(180)));

        assert_eq!(
            enumerate_pne(&sep, &Contract::zero(2)).unwrap(),
            vec![(p(&[]), int(0))]
        );
    }

    #[test]
    fn best_pne_binary_examples() {
        let sep = fixtures::separation_example();
        let best = best_pne_binary(&sep).unwrap();
        assert_eq!(best.profile, p(&[0, 1]));
        assert_eq!(best.utility, int(180));
        assert_eq!(best.contract, contract(&[ratio(1, 20), ratio(1, 20)]));

        let golden = fixtures::golden_ratio_instance(30).unwrap();
        let best = best_pne_binary(&golden).unwrap();
        assert!(best.utility.abs() <= ten_to_minus(28));

        let small = fixtures::subadditive_gap_instance(1).unwrap();
        assert!(best_pne_binary(&small).unwrap().utility <= ratio(13, 2));
    }

    #[test]
    fn induced_sets_are_pne_of_their_contracts() {
        let t3 = fixtures::golden_ratio_instance(20).unwrap();
        for set in g_values(&t3).unwrap() {
            assert!(is_pne(&t3, &set.profile, &set.contract).unwrap().holds());
            let pnes = enumerate_pne(&t3, &set.contract).unwrap();
            assert!(pnes.iter().any(|(s, _)| *s == set.profile));
        }
    }

    #[test]
    fn g_values_reject_non_binary_instances() {
        let t3 = fixtures::supermodular_gap_instance();
        assert!(matches!(g_values(&t3), Err(Error::NotBinary)));
    }
}
