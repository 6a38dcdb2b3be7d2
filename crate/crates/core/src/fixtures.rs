//! Exact constructions of the reference instances, their known equilibria,
//! and seeded random generators for property tests.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibria::{JointDistribution, ProductDistribution};
use crate::error::{Error, Result};
use crate::model::{principal_utility, Contract, Instance};
use crate::profile::ActionProfile;
use crate::rewards::RewardFunction;
use crate::scalar::{exact_sqrt, int, pow10, ratio, Scalar};
use crate::solvers::best_pne_binary;

/// Two binary agents with `f(1) = f(2) = 180`, `f(both) = 200`, unit costs:
/// a mixed equilibrium beats every pure one.
pub fn separation_example() -> Instance {
    let f =
        RewardFunction::table(2, vec![int(0), int(180), int(180), int(200)]).expect("static table");
    Instance::binary(vec![int(1), int(1)], f).expect("static instance")
}

/// Both agents work with probability 9/10 at shares `(1/36, 1/36)`.
pub fn separation_mne() -> (Contract, ProductDistribution) {
    let inst = separation_example();
    let a = Contract::new(vec![ratio(1, 36), ratio(1, 36)]).expect("valid shares");
    let p = ProductDistribution::binary_activity(&inst, &[ratio(9, 10), ratio(9, 10)])
        .expect("valid activity");
    (a, p)
}

/// Agent 0 owns actions `{0, 1}`, agent 1 owns `{2}`; supermodular `f` whose
/// only positive-welfare set is everything.
pub fn supermodular_gap_instance() -> Instance {
    // Values by bitmask: ∅, {0}, {1}, {0,1}, {2}, {0,2}, {1,2}, {0,1,2}.
    let f = RewardFunction::table(
        3,
        vec![
            int(0),
            int(0),
            int(1),
            ratio(11, 2),
            int(0),
            int(1),
            int(1),
            int(10),
        ],
    )
    .expect("static table");
    Instance::new(vec![vec![ratio(3, 4), ratio(17, 2)], vec![ratio(1, 4)]], f)
        .expect("static instance")
}

/// A CCE with positive principal utility on [`supermodular_gap_instance`],
/// where no contract has a PNE with positive utility.
pub fn supermodular_gap_cce() -> (Contract, JointDistribution) {
    let a = Contract::new(vec![ratio(37, 40), ratio(1, 18)]).expect("valid shares");
    let everything: ActionProfile = [0, 1, 2].into_iter().collect();
    let d = JointDistribution::new(vec![
        (everything, ratio(4, 5)),
        (ActionProfile::empty(), ratio(1, 5)),
    ])
    .expect("valid distribution");
    (a, d)
}

fn require_square(n: usize) -> Result<Scalar> {
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    exact_sqrt(&int(n as i64))
        .ok_or_else(|| Error::Precondition(format!("n = {n} is not a perfect square")))
}

/// The binary subadditive family on `2n + 2` agents: ids `0` and `1` are the
/// free agents `x` and `y`, ids `2..2n+2` are the costly block whose first
/// half is `[n]`.
///
/// `f` depends on how many of `x, y` and of the block are present, and, when
/// exactly one block member is missing, on whether it came from the first half.
pub fn subadditive_gap_instance(n: usize) -> Result<Instance> {
    let root = require_square(n)?;
    let m = 2 * n + 2;
    let full = (2 * n) as i64;
    let tail = int(full - 1) / &root;
    let eval = move |s: &ActionProfile| -> Scalar {
        let a = [0usize, 1].iter().filter(|&&j| s.contains(j)).count();
        let k = s.iter().filter(|&j| j >= 2).count() as i64;
        let pick = |row: [i64; 3]| int(row[a]);
        if k == 0 {
            pick([0, 4, 5])
        } else if k < full - 1 {
            pick([2, 4, 5]) + int(k) / &root
        } else if k == full - 1 {
            let first_half_full = (2..n + 2).all(|j| s.contains(j));
            if first_half_full {
                pick([2, 5, 5]) + &tail
            } else {
                pick([3, 4, 6]) + &tail
            }
        } else {
            pick([4, 6, 7]) + &tail
        }
    };
    let f = RewardFunction::formula(m, format!("subadditive-gap(n={n})"), eval);
    let mut costs = vec![int(0), int(0)];
    costs.extend(std::iter::repeat_n(ratio(2, 3 * n as i64), 2 * n));
    Instance::binary(costs, f)
}

/// The mixed equilibrium of the subadditive family: the block always works at
/// share `4 / (9n)` each, `x` and `y` work independently with probability 1/2.
pub fn subadditive_gap_mne(n: usize) -> Result<(Contract, ProductDistribution)> {
    let inst = subadditive_gap_instance(n)?;
    let mut shares = vec![int(0), int(0)];
    shares.extend(std::iter::repeat_n(ratio(4, 9 * n as i64), 2 * n));
    let mut activity = vec![ratio(1, 2), ratio(1, 2)];
    activity.extend(std::iter::repeat_n(int(1), 2 * n));
    Ok((
        Contract::new(shares)?,
        ProductDistribution::binary_activity(&inst, &activity)?,
    ))
}

/// `(1/9)(23/4 + (2n - 1)/sqrt(n))`, the principal utility of
/// [`subadditive_gap_mne`].
pub fn subadditive_gap_mne_utility(n: usize) -> Result<Scalar> {
    let root = require_square(n)?;
    Ok((ratio(23, 4) + int(2 * n as i64 - 1) / root) / int(9))
}

/// The golden ratio truncated to `digits` decimal places:
/// `(10^d + isqrt(5 * 10^(2d))) / (2 * 10^d)`.
pub fn golden_ratio(digits: u32) -> Scalar {
    let scale = pow10(digits);
    let root = (BigInt::from(5) * &scale * &scale).sqrt();
    Scalar::new(&scale + root, BigInt::from(2) * scale)
}

/// Four binary agents, costs `(1, 1, 0, 0)`, and `f` the monotone closure of
/// `f{0,1} = 2`, `f{0,2} = f{1,3} = 1`, `f{0,1,2} = f{0,1,3} = phi + 1`.
pub fn golden_ratio_instance(digits: u32) -> Result<Instance> {
    if digits < 20 {
        return Err(Error::Precondition(format!(
            "golden ratio needs at least 20 digits, got {digits}"
        )));
    }
    let top = golden_ratio(digits) + int(1);
    let anchors: Vec<(u64, Scalar)> = vec![
        (0b0011, int(2)),
        (0b0101, int(1)),
        (0b1010, int(1)),
        (0b0111, top.clone()),
        (0b1011, top),
    ];
    let f = RewardFunction::table_from_fn(4, |s| {
        let mask = s.as_mask().expect("four actions");
        anchors
            .iter()
            .filter(|(t, _)| t & !mask == 0)
            .map(|(_, v)| v.clone())
            .max()
            .unwrap_or_else(Scalar::zero)
    })?;
    Instance::binary(vec![int(1), int(1), int(0), int(0)], f)
}

/// Agents 0 and 1 always work at share `4 / (5 phi)`; the free agents work
/// independently with probability `1 - phi/2`.
pub fn golden_ratio_mne(digits: u32) -> Result<(Contract, ProductDistribution)> {
    let inst = golden_ratio_instance(digits)?;
    let phi = golden_ratio(digits);
    let share = int(4) / (int(5) * &phi);
    let q = Scalar::one() - &phi / int(2);
    let a = Contract::new(vec![share.clone(), share, int(0), int(0)])?;
    let p = ProductDistribution::binary_activity(&inst, &[int(1), int(1), q.clone(), q])?;
    Ok((a, p))
}

/// How a catalog value is recomputed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Oracle {
    /// Direct evaluation of the model formulas.
    Evaluation,
    /// Exhaustive search over profiles or sets.
    Exhaustive,
}

/// A named expected value with the procedure that recomputes it.
#[derive(Clone, Debug)]
pub struct Expected {
    pub name: &'static str,
    pub value: Scalar,
    pub oracle: Oracle,
    recompute: fn(&Instance) -> Result<Scalar>,
}

impl Expected {
    pub fn recompute(&self, inst: &Instance) -> Result<Scalar> {
        (self.recompute)(inst)
    }
}

/// A reference instance with its parameters and known values.
#[derive(Clone, Debug)]
pub struct FixtureSpec {
    pub name: &'static str,
    pub parameter: Option<u32>,
    pub expected: Vec<Expected>,
}

impl FixtureSpec {
    pub fn build(&self) -> Result<Instance> {
        match (self.name, self.parameter) {
            ("separation", _) => Ok(separation_example()),
            ("supermodular-gap", _) => Ok(supermodular_gap_instance()),
            ("subadditive-gap", Some(n)) => subadditive_gap_instance(n as usize),
            ("golden-ratio", Some(d)) => golden_ratio_instance(d),
            (name, parameter) => Err(Error::Precondition(format!(
                "unknown fixture {name} with parameter {parameter:?}"
            ))),
        }
    }
}

fn profile(ids: &[usize]) -> ActionProfile {
    ids.iter().copied().collect()
}

/// Every reference instance with the values tests hold it to.
pub fn catalog() -> Vec<FixtureSpec> {
    vec![
        FixtureSpec {
            name: "separation",
            parameter: None,
            expected: vec![
                Expected {
                    name: "f(both)",
                    value: int(200),
                    oracle: Oracle::Evaluation,
                    recompute: |inst| inst.reward().value(&profile(&[0, 1])),
                },
                Expected {
                    name: "best PNE utility",
                    value: int(180),
                    oracle: Oracle::Exhaustive,
                    recompute: |inst| Ok(best_pne_binary(inst)?.utility),
                },
                Expected {
                    name: "MNE utility",
                    value: ratio(918, 5),
                    oracle: Oracle::Evaluation,
                    recompute: |inst| {
                        let (a, p) = separation_mne();
                        let d = p.to_joint(16)?;
                        Ok(a.residual() * d.expectation(|s| inst.value(s)))
                    },
                },
            ],
        },
        FixtureSpec {
            name: "supermodular-gap",
            parameter: None,
            expected: vec![
                Expected {
                    name: "f(everything)",
                    value: int(10),
                    oracle: Oracle::Evaluation,
                    recompute: |inst| inst.reward().value(&profile(&[0, 1, 2])),
                },
                Expected {
                    name: "CCE utility",
                    value: ratio(7, 45),
                    oracle: Oracle::Evaluation,
                    recompute: |inst| {
                        let (a, d) = supermodular_gap_cce();
                        Ok(a.residual() * d.expectation(|s| inst.value(s)))
                    },
                },
                Expected {
                    name: "utility of everything at the CCE contract",
                    value: ratio(7, 36),
                    oracle: Oracle::Evaluation,
                    recompute: |inst| {
                        let (a, _) = supermodular_gap_cce();
                        principal_utility(inst, &profile(&[0, 1, 2]), &a)
                    },
                },
            ],
        },
        FixtureSpec {
            name: "subadditive-gap",
            parameter: Some(4),
            expected: vec![
                Expected {
                    name: "f(x and the whole block)",
                    value: ratio(19, 2),
                    oracle: Oracle::Evaluation,
                    recompute: |inst| {
                        inst.reward()
                            .value(&std::iter::once(0).chain(2..10).collect())
                    },
                },
                Expected {
                    name: "MNE utility",
                    value: ratio(37, 36),
                    oracle: Oracle::Evaluation,
                    recompute: |inst| {
                        let (a, p) = subadditive_gap_mne(4)?;
                        let d = p.to_joint(16)?;
                        Ok(a.residual() * d.expectation(|s| inst.value(s)))
                    },
                },
            ],
        },
        FixtureSpec {
            name: "golden-ratio",
            parameter: Some(50),
            expected: vec![Expected {
                name: "f{0,1}",
                value: int(2),
                oracle: Oracle::Evaluation,
                recompute: |inst| inst.reward().value(&profile(&[0, 1])),
            }],
        },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RandomKind {
    Additive,
    Coverage,
    Xos,
    Supermodular,
    Table,
}

impl RandomKind {
    pub const ALL: [RandomKind; 5] = [
        RandomKind::Additive,
        RandomKind::Coverage,
        RandomKind::Xos,
        RandomKind::Supermodular,
        RandomKind::Table,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RandomKind::Additive => "additive",
            RandomKind::Coverage => "coverage",
            RandomKind::Xos => "xos",
            RandomKind::Supermodular => "supermodular",
            RandomKind::Table => "table",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Parameters of a seeded random instance; `sizes[i]` is `|A_i|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomSpec {
    pub kind: RandomKind,
    pub seed: u64,
    pub sizes: Vec<usize>,
}

impl RandomSpec {
    pub fn new(kind: RandomKind, seed: u64, sizes: Vec<usize>) -> Self {
        RandomSpec { kind, seed, sizes }
    }

    /// Every agent owns one action.
    pub fn binary(kind: RandomKind, seed: u64, n: usize) -> Self {
        Self::new(kind, seed, vec![1; n])
    }
}

/// The generator used by every seeded routine in this module.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A deterministic instance of the requested kind. Rewards are normalized and
/// monotone; coverage is submodular, supermodular is `g(w(S))` for convex
/// increasing `g`.
pub fn random_instance(spec: &RandomSpec) -> Result<Instance> {
    let m: usize = spec.sizes.iter().sum();
    if m > crate::rewards::MAX_TABLE_BITS {
        return Err(Error::capacity(
            "random instance",
            m as u64,
            crate::rewards::MAX_TABLE_BITS as u64,
        ));
    }
    let mut rng = rng(spec.seed);
    let f = match spec.kind {
        RandomKind::Additive => {
            RewardFunction::additive((0..m).map(|_| int(rng.gen_range(0..=10))).collect())?
        }
        RandomKind::Coverage => {
            let universe = m + 2;
            let weights = (0..universe).map(|_| int(rng.gen_range(1..=5))).collect();
            let covers = (0..m)
                .map(|_| {
                    let k = rng.gen_range(1..=3.min(universe));
                    rand::seq::index::sample(&mut rng, universe, k)
                        .into_iter()
                        .collect()
                })
                .collect();
            RewardFunction::coverage(weights, covers)?
        }
        RandomKind::Xos => {
            let clauses = rng.gen_range(2..=3);
            RewardFunction::xos(
                m,
                (0..clauses)
                    .map(|_| (0..m).map(|_| int(rng.gen_range(0..=6))).collect())
                    .collect(),
            )?
        }
        RandomKind::Supermodular => {
            let w: Vec<i64> = (0..m).map(|_| rng.gen_range(1..=4)).collect();
            let lin = ratio(rng.gen_range(0..=4), 2);
            let quad = ratio(rng.gen_range(1..=4), 4);
            RewardFunction::table_from_fn(m, |s| {
                let x = int(s.iter().map(|j| w[j]).sum());
                &lin * &x + &quad * &x * &x
            })?
        }
        RandomKind::Table => {
            let mut values: Vec<Scalar> = Vec::with_capacity(1 << m);
            for mask in 0u64..1 << m {
                let floor = (0..m)
                    .filter(|j| mask >> j & 1 == 1)
                    .map(|j| values[(mask & !(1 << j)) as usize].clone())
                    .max()
                    .unwrap_or_else(Scalar::zero);
                let bump = if mask == 0 { 0 } else { rng.gen_range(0..=3) };
                values.push(floor + int(bump));
            }
            RewardFunction::table(m, values)?
        }
    };
    let costs = spec
        .sizes
        .iter()
        .map(|&k| (0..k).map(|_| ratio(rng.gen_range(0..=8), 4)).collect())
        .collect();
    Instance::new(costs, f)
}

/// A random contract with shares in multiples of `1/den`, each at most `cap`
/// and summing to at most one. Agents draw in a random order so no position
/// is favored.
pub fn random_contract(rng: &mut impl Rng, n: usize, den: i64, cap: &Scalar) -> Contract {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut shares = vec![Scalar::zero(); n];
    let mut budget = den;
    for i in order {
        let limit = (cap * int(den)).floor().to_integer();
        let limit = i64::try_from(limit).unwrap_or(den).min(budget).max(0);
        let k = rng.gen_range(0..=limit);
        budget -= k;
        shares[i] = ratio(k, den);
    }
    Contract::new(shares).expect("shares lie in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{is_cce, is_mne, is_mne_tol};
    use crate::model::Limits;
    use crate::profile::subsets;
    use crate::scalar::ten_to_minus;
    use num_traits::Signed;

    #[test]
    fn catalog_values_recompute() {
        for spec in catalog() {
            let inst = spec.build().unwrap();
            for e in &spec.expected {
                assert_eq!(
                    e.recompute(&inst).unwrap(),
                    e.value,
                    "{} / {}",
                    spec.name,
                    e.name
                );
            }
        }
    }

    #[test]
    fn separation_fixture() {
        let sep = separation_example();
        assert_eq!(sep.reward().value(&profile(&[0, 1])).unwrap(), int(200));
        assert!(
            sep.reward()
                .classify(&Limits::default())
                .unwrap()
                .submodular
        );
        assert_eq!(best_pne_binary(&sep).unwrap().utility, int(180));
    }

    #[test]
    fn supermodular_fixture() {
        let t3 = supermodular_gap_instance();
        let r = t3.reward().classify(&Limits::default()).unwrap();
        assert!(r.supermodular && r.monotone);
        let positive: Vec<ActionProfile> = subsets(&[0, 1, 2])
            .filter(|s| t3.value(s) > t3.cost_of(s))
            .collect();
        assert_eq!(positive, vec![profile(&[0, 1, 2])]);
        assert_eq!(
            t3.value(&profile(&[0, 1, 2])) - t3.cost_of(&profile(&[0, 1, 2])),
            ratio(1, 2)
        );
        let (a, d) = supermodular_gap_cce();
        assert!(is_cce(&t3, &d, &a).unwrap().holds());
    }

    #[test]
    fn subadditive_family_values() {
        let inst = subadditive_gap_instance(4).unwrap();
        assert_eq!(inst.n(), 10);
        let all: ActionProfile = (0..10).collect();
        assert_eq!(inst.value(&all), int(7) + ratio(7, 2));
        assert_eq!(inst.reward().marginal(0, &ActionProfile::empty()), int(4));
        assert!(subadditive_gap_instance(3).is_err());
        assert!(subadditive_gap_instance(0).is_err());
    }

    #[test]
    fn subadditive_family_is_monotone_and_subadditive_when_small() {
        let inst = subadditive_gap_instance(1).unwrap();
        let table = inst.reward().to_table().unwrap();
        let r = table.classify(&Limits::default()).unwrap();
        assert!(r.monotone && r.subadditive && r.normalized);
        let inst = subadditive_gap_instance(4).unwrap();
        let r = inst.reward().classify(&Limits::default()).unwrap();
        assert!(r.monotone && r.subadditive);
    }

    #[test]
    fn subadditive_family_mne() {
        for n in [4, 9] {
            let inst = subadditive_gap_instance(n).unwrap();
            let (a, p) = subadditive_gap_mne(n).unwrap();
            assert!(is_mne(&inst, &p, &a).unwrap().holds());
            let d = p.to_joint(16).unwrap();
            let u = a.residual() * d.expectation(|s| inst.value(s));
            assert_eq!(u, subadditive_gap_mne_utility(n).unwrap());
        }
    }

    #[test]
    fn golden_ratio_is_accurate() {
        let phi = golden_ratio(30);
        // phi^2 = phi + 1 up to truncation error.
        let err = &phi * &phi - &phi - int(1);
        assert!(err.abs() < ten_to_minus(29));
        assert!(golden_ratio_instance(10).is_err());
    }

    #[test]
    fn golden_fixture() {
        let inst = golden_ratio_instance(30).unwrap();
        assert_eq!(inst.value(&profile(&[0, 1])), int(2));
        assert_eq!(
            inst.value(&profile(&[0, 1, 2, 3])),
            golden_ratio(30) + int(1)
        );
        assert_eq!(inst.value(&profile(&[2, 3])), int(0));
        let r = inst.reward().classify(&Limits::default()).unwrap();
        assert!(r.monotone && !r.subadditive && !r.supermodular);

        let (a, p) = golden_ratio_mne(30).unwrap();
        assert!(is_mne_tol(&inst, &p, &a, &ten_to_minus(28))
            .unwrap()
            .holds());
        let d = p.to_joint(16).unwrap();
        let u = a.residual() * d.expectation(|s| inst.value(s));
        assert!(u > ratio(1, 50) && u < ratio(1, 40));
    }

    #[test]
    fn random_kinds_land_in_their_classes() {
        let limits = Limits::default();
        let additive = random_instance(&RandomSpec::binary(RandomKind::Additive, 1, 5)).unwrap();
        assert!(additive.reward().classify(&limits).unwrap().additive);
        let coverage =
            random_instance(&RandomSpec::new(RandomKind::Coverage, 7, vec![2, 1, 3])).unwrap();
        assert_eq!(coverage.m(), 6);
        assert!(coverage.reward().classify(&limits).unwrap().submodular);
        let sup = random_instance(&RandomSpec::binary(RandomKind::Supermodular, 3, 5)).unwrap();
        assert!(sup.reward().classify(&limits).unwrap().supermodular);
    }

    #[test]
    fn random_generation_is_deterministic() {
        for kind in RandomKind::ALL {
            let spec = RandomSpec::new(kind, 11, vec![2, 2]);
            let (a, b) = (
                random_instance(&spec).unwrap(),
                random_instance(&spec).unwrap(),
            );
            assert_eq!(a.costs(), b.costs());
            for s in subsets(&[0, 1, 2, 3]) {
                assert_eq!(a.value(&s), b.value(&s));
            }
        }
    }

    #[test]
    fn random_contracts_respect_cap_and_budget() {
        let mut r = rng(5);
        for _ in 0..100 {
            let a = random_contract(&mut r, 4, 12, &ratio(1, 2));
            assert!(a.total() <= int(1));
            assert!(a.shares().iter().all(|s| *s <= ratio(1, 2)));
        }
    }
}
