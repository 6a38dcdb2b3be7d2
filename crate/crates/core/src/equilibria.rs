//! Distributions over profiles, equilibrium verifiers, and best-response
//! dynamics.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{agent_utility_unchecked, potential_unchecked, Contract, Instance};
use crate::profile::ActionProfile;
use crate::rewards::PriceVector;
use crate::scalar::{format_scalar, ten_to_minus, ExtendedScalar, Scalar};

/// The tolerance used for fixtures whose constants are rational
/// approximations of irrationals.
pub fn default_tolerance() -> Scalar {
    ten_to_minus(30)
}

/// A finitely supported distribution over action profiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointDistribution {
    support: Vec<(ActionProfile, Scalar)>,
}

impl JointDistribution {
    /// Probabilities must be positive and sum to one; profiles must be
    /// distinct. The support is stored in increasing profile order.
    pub fn new(entries: Vec<(ActionProfile, Scalar)>) -> Result<Self> {
        let mut merged: BTreeMap<ActionProfile, Scalar> = BTreeMap::new();
        let mut total = Scalar::zero();
        for (s, p) in entries {
            if !p.is_positive() {
                return Err(Error::InvalidDistribution(format!(
                    "profile {s} has non-positive probability {}",
                    format_scalar(&p)
                )));
            }
            total += &p;
            if merged.insert(s.clone(), p).is_some() {
                return Err(Error::InvalidDistribution(format!(
                    "profile {s} listed twice"
                )));
            }
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}",
                format_scalar(&total)
            )));
        }
        Ok(JointDistribution {
            support: merged.into_iter().collect(),
        })
    }

    pub fn point(s: ActionProfile) -> Self {
        JointDistribution {
            support: vec![(s, Scalar::one())],
        }
    }

    /// Builds a distribution from LP weights, dropping zero entries.
    pub(crate) fn from_weights(profiles: &[ActionProfile], weights: &[Scalar]) -> Result<Self> {
        Self::new(
            profiles
                .iter()
                .zip(weights)
                .filter(|(_, w)| !w.is_zero())
                .map(|(s, w)| (s.clone(), w.clone()))
                .collect(),
        )
    }

    pub fn support(&self) -> &[(ActionProfile, Scalar)] {
        &self.support
    }

    pub fn expectation(&self, mut g: impl FnMut(&ActionProfile) -> Scalar) -> Scalar {
        self.support.iter().map(|(s, p)| g(s) * p).sum()
    }

    /// Union of all supported profiles.
    pub fn support_union(&self) -> ActionProfile {
        self.support
            .iter()
            .fold(ActionProfile::empty(), |acc, (s, _)| acc.union(s))
    }

    pub fn check_against(&self, inst: &Instance) -> Result<()> {
        self.support
            .iter()
            .try_for_each(|(s, _)| inst.check_profile(s))
    }
}

/// Independent per-agent mixtures over slices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductDistribution {
    agents: Vec<Vec<(ActionProfile, Scalar)>>,
}

impl ProductDistribution {
    /// `agents[i]` lists agent `i`'s slices with positive probabilities
    /// summing to one.
    pub fn new(agents: Vec<Vec<(ActionProfile, Scalar)>>) -> Result<Self> {
        for (i, mix) in agents.iter().enumerate() {
            JointDistribution::new(mix.clone()).map_err(|e| match e {
                Error::InvalidDistribution(msg) => {
                    Error::InvalidDistribution(format!("agent {i}: {msg}"))
                }
                other => other,
            })?;
        }
        Ok(ProductDistribution { agents })
    }

    /// Binary instances: agent `i` takes its single action with probability
    /// `activity[i]`.
    pub fn binary_activity(inst: &Instance, activity: &[Scalar]) -> Result<Self> {
        if !inst.is_binary() {
            return Err(Error::NotBinary);
        }
        if activity.len() != inst.n() {
            return Err(Error::InvalidDistribution(format!(
                "{} activity probabilities for {} agents",
                activity.len(),
                inst.n()
            )));
        }
        let mut agents = Vec::with_capacity(inst.n());
        for (i, q) in activity.iter().enumerate() {
            if q.is_negative() || *q > Scalar::one() {
                return Err(Error::InvalidDistribution(format!(
                    "activity of agent {i} is {}",
                    format_scalar(q)
                )));
            }
            let mut mix = Vec::new();
            let idle = Scalar::one() - q;
            if !idle.is_zero() {
                mix.push((ActionProfile::empty(), idle));
            }
            if !q.is_zero() {
                mix.push((inst.agent_mask(i).clone(), q.clone()));
            }
            agents.push(mix);
        }
        Self::new(agents)
    }

    pub fn agents(&self) -> &[Vec<(ActionProfile, Scalar)>] {
        &self.agents
    }

    /// Number of profiles in the expanded support.
    pub fn support_size(&self) -> u128 {
        self.agents
            .iter()
            .map(|mix| mix.len() as u128)
            .try_fold(1u128, |acc, k| acc.checked_mul(k))
            .unwrap_or(u128::MAX)
    }

    /// The joint distribution with product probabilities.
    pub fn to_joint(&self, cap: u64) -> Result<JointDistribution> {
        let size = self.support_size();
        if size > cap as u128 {
            return Err(Error::capacity(
                "product distribution expansion",
                size.min(u64::MAX as u128) as u64,
                cap,
            ));
        }
        let mut entries = vec![(ActionProfile::empty(), Scalar::one())];
        for mix in &self.agents {
            if mix.len() == 1 {
                let (slice, _) = &mix[0];
                for (s, _) in &mut entries {
                    *s = s.union(slice);
                }
                continue;
            }
            entries = entries
                .iter()
                .flat_map(|(s, p)| mix.iter().map(move |(slice, q)| (s.union(slice), p * q)))
                .collect();
        }
        JointDistribution::new(entries)
    }
}

/// A violated equilibrium inequality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub agent: usize,
    pub deviation: ActionProfile,
    /// The recommended slice conditioned on, for correlated equilibria.
    pub recommendation: Option<ActionProfile>,
    /// Expected utility from following (conditional, for correlated equilibria).
    pub equilibrium_side: Scalar,
    /// Expected utility from the deviation.
    pub deviation_side: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub violation: Option<Violation>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }

    fn from(violation: Option<Violation>) -> Self {
        Verdict { violation }
    }
}

fn validate(inst: &Instance, a: &Contract, d: &JointDistribution) -> Result<()> {
    inst.check_contract(a)?;
    d.check_against(inst)
}

/// Checks agent `i` against every deviation `T_i ⊆ A_i` under the (possibly
/// conditional) distribution `entries`.
fn first_profitable_deviation(
    inst: &Instance,
    entries: &[(ActionProfile, Scalar)],
    a: &Contract,
    i: usize,
    tol: &Scalar,
) -> Result<Option<Violation>> {
    let share = a.share(i);
    let eq: Scalar = entries
        .iter()
        .map(|(s, p)| agent_utility_unchecked(inst, s, a, i) * p)
        .sum();
    let others: Vec<(ActionProfile, &Scalar)> = entries
        .iter()
        .map(|(s, p)| (inst.others(s, i), p))
        .collect();
    for t in inst.deviations(i)? {
        let reward: Scalar = if share.is_zero() {
            Scalar::zero()
        } else {
            others
                .iter()
                .map(|(o, p)| inst.value(&o.union(&t)) * *p)
                .sum::<Scalar>()
                * share
        };
        let dev = reward - inst.cost_of(&t);
        if &eq + tol < dev {
            return Ok(Some(Violation {
                agent: i,
                deviation: t,
                recommendation: None,
                equilibrium_side: eq,
                deviation_side: dev,
            }));
        }
    }
    Ok(None)
}

/// Pure Nash equilibrium: no agent gains by replacing its slice.
pub fn is_pne(inst: &Instance, s: &ActionProfile, a: &Contract) -> Result<Verdict> {
    inst.check_profile(s)?;
    is_cce(inst, &JointDistribution::point(s.clone()), a)
}

/// Coarse-correlated equilibrium, exact.
pub fn is_cce(inst: &Instance, d: &JointDistribution, a: &Contract) -> Result<Verdict> {
    is_cce_tol(inst, d, a, &Scalar::zero())
}

/// Coarse-correlated equilibrium, accepting deviations that gain at most `tol`.
pub fn is_cce_tol(
    inst: &Instance,
    d: &JointDistribution,
    a: &Contract,
    tol: &Scalar,
) -> Result<Verdict> {
    validate(inst, a, d)?;
    for i in 0..inst.n() {
        if let Some(v) = first_profitable_deviation(inst, d.support(), a, i, tol)? {
            return Ok(Verdict::from(Some(v)));
        }
    }
    Ok(Verdict::from(None))
}

/// Correlated equilibrium, exact.
pub fn is_ce(inst: &Instance, d: &JointDistribution, a: &Contract) -> Result<Verdict> {
    is_ce_tol(inst, d, a, &Scalar::zero())
}

/// Correlated equilibrium: for every agent and every recommended slice, the
/// conditional distribution admits no profitable deviation.
pub fn is_ce_tol(
    inst: &Instance,
    d: &JointDistribution,
    a: &Contract,
    tol: &Scalar,
) -> Result<Verdict> {
    validate(inst, a, d)?;
    for i in 0..inst.n() {
        let mut groups: BTreeMap<ActionProfile, Vec<(ActionProfile, Scalar)>> = BTreeMap::new();
        for (s, p) in d.support() {
            groups
                .entry(inst.slice(s, i))
                .or_default()
                .push((s.clone(), p.clone()));
        }
        for (rec, mut entries) in groups {
            let marginal: Scalar = entries.iter().map(|(_, p)| p).sum();
            for (_, p) in &mut entries {
                *p /= &marginal;
            }
            if let Some(mut v) = first_profitable_deviation(inst, &entries, a, i, tol)? {
                v.recommendation = Some(rec);
                return Ok(Verdict::from(Some(v)));
            }
        }
    }
    Ok(Verdict::from(None))
}

/// Mixed Nash equilibrium, exact.
pub fn is_mne(inst: &Instance, p: &ProductDistribution, a: &Contract) -> Result<Verdict> {
    is_mne_tol(inst, p, a, &Scalar::zero())
}

/// Mixed Nash equilibrium: the product distribution, expanded, passes the
/// coarse-correlated inequality against pure deviations.
pub fn is_mne_tol(
    inst: &Instance,
    p: &ProductDistribution,
    a: &Contract,
    tol: &Scalar,
) -> Result<Verdict> {
    if p.agents().len() != inst.n() {
        return Err(Error::InvalidDistribution(format!(
            "product distribution over {} agents for {} agents",
            p.agents().len(),
            inst.n()
        )));
    }
    for (i, mix) in p.agents().iter().enumerate() {
        for (slice, _) in mix {
            inst.check_slice(slice, i)?;
        }
    }
    let cap = 1u64 << inst.limits().enumeration_bits.min(63);
    is_cce_tol(inst, &p.to_joint(cap)?, a, tol)
}

/// Dropout stability, exact.
pub fn is_dropout_stable(inst: &Instance, d: &JointDistribution, a: &Contract) -> Result<Verdict> {
    is_dropout_stable_tol(inst, d, a, &Scalar::zero())
}

/// Dropout stability: no agent gains in expectation by taking no action.
pub fn is_dropout_stable_tol(
    inst: &Instance,
    d: &JointDistribution,
    a: &Contract,
    tol: &Scalar,
) -> Result<Verdict> {
    validate(inst, a, d)?;
    for i in 0..inst.n() {
        let eq = d.expectation(|s| agent_utility_unchecked(inst, s, a, i));
        let dev = d.expectation(|s| inst.value(&inst.others(s, i))) * a.share(i);
        if &eq + tol < dev {
            return Ok(Verdict::from(Some(Violation {
                agent: i,
                deviation: ActionProfile::empty(),
                recommendation: None,
                equilibrium_side: eq,
                deviation_side: dev,
            })));
        }
    }
    Ok(Verdict::from(None))
}

/// Result of [`best_response_dynamics`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicsOutcome {
    pub profile: ActionProfile,
    pub steps: usize,
    /// The potential at the start and after every step.
    pub potentials: Vec<ExtendedScalar>,
}

/// Agent `i`'s best response to `s`: the smallest slice maximizing its
/// utility, optionally among slices containing `floor`.
fn best_response(
    inst: &Instance,
    s: &ActionProfile,
    a: &Contract,
    i: usize,
    floor: Option<&ActionProfile>,
) -> Result<(ActionProfile, Scalar)> {
    let mut best: Option<(ActionProfile, Scalar)> = None;
    for t in inst.deviations(i)? {
        if floor.is_some_and(|f| !f.is_subset(&t)) {
            continue;
        }
        let u = agent_utility_unchecked(inst, &inst.replace_slice(s, i, &t), a, i);
        if best.as_ref().is_none_or(|(_, b)| u > *b) {
            best = Some((t, u));
        }
    }
    Ok(best.expect("the full action set contains any floor"))
}

/// Round-robin strict best responses from `start` until no agent can improve.
///
/// With `floor`, agent `i` only considers slices containing `floor[i]`; if
/// such a restricted response is ever strictly worse than an unrestricted
/// one, the run stops with [`Error::FloorViolation`].
pub fn best_response_dynamics(
    inst: &Instance,
    start: &ActionProfile,
    a: &Contract,
    floor: Option<&[ActionProfile]>,
) -> Result<DynamicsOutcome> {
    inst.check_profile(start)?;
    inst.check_contract(a)?;
    if let Some(floor) = floor {
        if floor.len() != inst.n() {
            return Err(Error::Precondition(format!(
                "{} floor slices for {} agents",
                floor.len(),
                inst.n()
            )));
        }
        for (i, f) in floor.iter().enumerate() {
            inst.check_slice(f, i)?;
            if !f.is_subset(start) {
                return Err(Error::FloorViolation {
                    agent: i,
                    floor: f.clone(),
                });
            }
        }
    }
    let mut s = start.clone();
    let mut steps = 0;
    let mut potentials = vec![potential_unchecked(inst, &s, a)];
    loop {
        let mut moved = false;
        for i in 0..inst.n() {
            let current = agent_utility_unchecked(inst, &s, a, i);
            let own_floor = floor.map(|f| &f[i]);
            let (t, u) = best_response(inst, &s, a, i, own_floor)?;
            if own_floor.is_some() {
                let (_, free) = best_response(inst, &s, a, i, None)?;
                if free > u {
                    return Err(Error::FloorViolation {
                        agent: i,
                        floor: own_floor.cloned().unwrap_or_default(),
                    });
                }
            }
            if u > current {
                s = inst.replace_slice(&s, i, &t);
                steps += 1;
                potentials.push(potential_unchecked(inst, &s, a));
                moved = true;
            }
        }
        if !moved {
            return Ok(DynamicsOutcome {
                profile: s,
                steps,
                potentials,
            });
        }
    }
}

/// A global maximizer of the potential over subsets of `restrict`, found
/// with one demand query at prices `c_j / alpha_i`.
///
/// When `restrict` is a union of whole agent action sets, the result is a
/// PNE of the contract that keeps `a` on those agents and pays the others
/// nothing.
pub fn potential_maximizer_pne(
    inst: &Instance,
    a: &Contract,
    restrict: &ActionProfile,
) -> Result<ActionProfile> {
    inst.check_contract(a)?;
    inst.check_profile(restrict)?;
    let prices = PriceVector::potential_prices(inst, a);
    inst.reward()
        .demand(&prices, restrict, inst.limits().enumeration_bits)
}
