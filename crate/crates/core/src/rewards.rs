//! Reward set functions: value and demand oracles, and brute-force class
//! membership testers.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Contract, Instance, Limits};
use crate::profile::{subsets, ActionProfile};
use crate::scalar::{format_scalar, Scalar};
use crate::solvers::lp::{solve_lp, LinearProgram, LpOutcome, Relation, Sense};

/// Largest ground set an explicit table may cover.
pub const MAX_TABLE_BITS: usize = 24;

type Eval = Arc<dyn Fn(&ActionProfile) -> Scalar + Send + Sync>;

/// A set function `f : 2^A -> Q` over action ids `0..ground`.
#[derive(Clone)]
pub struct RewardFunction {
    ground: usize,
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    Table(Arc<Vec<Scalar>>),
    Additive(Vec<Scalar>),
    Xos(Vec<Vec<Scalar>>),
    Coverage {
        weights: Vec<Scalar>,
        covers: Vec<ActionProfile>,
    },
    Formula {
        name: String,
        eval: Eval,
    },
}

/// Borrowed view of a reward's representation, for serialization.
#[derive(Clone, Copy)]
pub enum RewardView<'a> {
    /// Values indexed by bitmask.
    Table(&'a [Scalar]),
    Additive(&'a [Scalar]),
    Xos(&'a [Vec<Scalar>]),
    Coverage {
        weights: &'a [Scalar],
        covers: &'a [ActionProfile],
    },
    Formula {
        name: &'a str,
    },
}

fn nonnegative(values: &[Scalar], what: &str) -> Result<()> {
    match values.iter().position(|v| v.is_negative()) {
        Some(k) => Err(Error::InvalidReward(format!(
            "{what} entry {k} is negative ({})",
            format_scalar(&values[k])
        ))),
        None => Ok(()),
    }
}

impl RewardFunction {
    /// An explicit table; `values[mask]` is `f` of the set with that bitmask.
    pub fn table(ground: usize, values: Vec<Scalar>) -> Result<Self> {
        if ground > MAX_TABLE_BITS {
            return Err(Error::capacity(
                "reward table",
                ground as u64,
                MAX_TABLE_BITS as u64,
            ));
        }
        if values.len() != 1 << ground {
            return Err(Error::InvalidReward(format!(
                "table over {ground} actions needs {} values, got {}",
                1u64 << ground,
                values.len()
            )));
        }
        nonnegative(&values, "table")?;
        Ok(RewardFunction {
            ground,
            repr: Repr::Table(Arc::new(values)),
        })
    }

    /// Tabulates `eval` on every subset of `0..ground`.
    pub fn table_from_fn(ground: usize, eval: impl Fn(&ActionProfile) -> Scalar) -> Result<Self> {
        if ground > MAX_TABLE_BITS {
            return Err(Error::capacity(
                "reward table",
                ground as u64,
                MAX_TABLE_BITS as u64,
            ));
        }
        let ids: Vec<usize> = (0..ground).collect();
        Self::table(ground, subsets(&ids).map(|s| eval(&s)).collect())
    }

    pub fn additive(values: Vec<Scalar>) -> Result<Self> {
        nonnegative(&values, "additive value")?;
        Ok(RewardFunction {
            ground: values.len(),
            repr: Repr::Additive(values),
        })
    }

    /// `f(S) = max_l Σ_{j∈S} clauses[l][j]`.
    pub fn xos(ground: usize, clauses: Vec<Vec<Scalar>>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::InvalidReward("XOS needs at least one clause".into()));
        }
        for (l, clause) in clauses.iter().enumerate() {
            if clause.len() != ground {
                return Err(Error::InvalidReward(format!(
                    "clause {l} has {} entries for {ground} actions",
                    clause.len()
                )));
            }
            nonnegative(clause, "clause")?;
        }
        Ok(RewardFunction {
            ground,
            repr: Repr::Xos(clauses),
        })
    }

    /// `f(S)` is the total weight of universe elements covered by some `j ∈ S`.
    pub fn coverage(weights: Vec<Scalar>, covers: Vec<ActionProfile>) -> Result<Self> {
        nonnegative(&weights, "universe weight")?;
        for (j, c) in covers.iter().enumerate() {
            if let Some(u) = c.max_action() {
                if u >= weights.len() {
                    return Err(Error::InvalidReward(format!(
                        "action {j} covers element {u} outside a universe of {}",
                        weights.len()
                    )));
                }
            }
        }
        Ok(RewardFunction {
            ground: covers.len(),
            repr: Repr::Coverage { weights, covers },
        })
    }

    /// A closed-form rule; `eval` must be normalized and nonnegative.
    pub fn formula(
        ground: usize,
        name: impl Into<String>,
        eval: impl Fn(&ActionProfile) -> Scalar + Send + Sync + 'static,
    ) -> Self {
        RewardFunction {
            ground,
            repr: Repr::Formula {
                name: name.into(),
                eval: Arc::new(eval),
            },
        }
    }

    /// Number of actions `m` the function is defined on.
    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn view(&self) -> RewardView<'_> {
        match &self.repr {
            Repr::Table(v) => RewardView::Table(v),
            Repr::Additive(v) => RewardView::Additive(v),
            Repr::Xos(c) => RewardView::Xos(c),
            Repr::Coverage { weights, covers } => RewardView::Coverage { weights, covers },
            Repr::Formula { name, .. } => RewardView::Formula { name },
        }
    }

    /// `f(S)`, rejecting profiles with actions outside the ground set.
    pub fn value(&self, s: &ActionProfile) -> Result<Scalar> {
        match s.max_action() {
            Some(a) if a >= self.ground => Err(Error::InvalidProfile {
                profile: s.clone(),
                action: a,
                m: self.ground,
            }),
            _ => Ok(self.eval(s)),
        }
    }

    pub(crate) fn eval(&self, s: &ActionProfile) -> Scalar {
        debug_assert!(s.max_action().is_none_or(|a| a < self.ground));
        match &self.repr {
            Repr::Table(v) => {
                let mask = s.as_mask().expect("table ground is below 64");
                v[mask as usize].clone()
            }
            Repr::Additive(v) => s.iter().map(|j| &v[j]).sum(),
            Repr::Xos(clauses) => clauses
                .iter()
                .map(|c| s.iter().map(|j| &c[j]).sum::<Scalar>())
                .max()
                .expect("at least one clause"),
            Repr::Coverage { weights, covers } => s
                .iter()
                .fold(ActionProfile::empty(), |acc, j| acc.union(&covers[j]))
                .iter()
                .map(|u| &weights[u])
                .sum(),
            Repr::Formula { eval, .. } => eval(s),
        }
    }

    /// `f(j | S) = f(S ∪ {j}) - f(S)`.
    pub fn marginal(&self, j: usize, s: &ActionProfile) -> Scalar {
        let mut with = s.clone();
        with.insert(j);
        self.eval(&with) - self.eval(s)
    }

    /// A copy backed by an explicit table.
    pub fn to_table(&self) -> Result<Self> {
        match &self.repr {
            Repr::Table(_) => Ok(self.clone()),
            _ => Self::table_from_fn(self.ground, |s| self.eval(s)),
        }
    }

    /// A set maximizing `f(S) - Σ_{j∈S} p_j` over `S ⊆ restrict`, with
    /// infinite-price actions excluded; ties go to the smallest bitset.
    pub fn demand(
        &self,
        prices: &PriceVector,
        restrict: &ActionProfile,
        enumeration_bits: u32,
    ) -> Result<ActionProfile> {
        if prices.len() != self.ground {
            return Err(Error::InvalidReward(format!(
                "{} prices for {} actions",
                prices.len(),
                self.ground
            )));
        }
        if let Some(a) = restrict.max_action().filter(|&a| a >= self.ground) {
            return Err(Error::InvalidProfile {
                profile: restrict.clone(),
                action: a,
                m: self.ground,
            });
        }
        let candidates: Vec<usize> = restrict
            .iter()
            .filter(|&j| prices.get(j).is_finite())
            .collect();
        if let Repr::Additive(v) = &self.repr {
            return Ok(candidates
                .into_iter()
                .filter(|&j| match prices.get(j) {
                    Price::Finite(p) => v[j] > *p,
                    Price::Infinite => false,
                })
                .collect());
        }
        if candidates.len() as u64 > enumeration_bits as u64 {
            return Err(Error::capacity(
                "demand query",
                candidates.len() as u64,
                enumeration_bits as u64,
            ));
        }
        let mut best = ActionProfile::empty();
        let mut best_value = self.eval(&best);
        for s in subsets(&candidates).skip(1) {
            let paid: Scalar = s
                .iter()
                .map(|j| match prices.get(j) {
                    Price::Finite(p) => p.clone(),
                    Price::Infinite => unreachable!("infinite prices are filtered"),
                })
                .sum();
            let v = self.eval(&s) - paid;
            if v > best_value {
                best_value = v;
                best = s;
            }
        }
        Ok(best)
    }

    /// Exhaustive class membership report; the ground set must be within
    /// `limits.classify_bits`.
    pub fn classify(&self, limits: &Limits) -> Result<ClassReport> {
        if self.ground as u64 > limits.classify_bits as u64 {
            return Err(Error::capacity(
                "class testing",
                self.ground as u64,
                limits.classify_bits as u64,
            ));
        }
        let ids: Vec<usize> = (0..self.ground).collect();
        let values: Vec<Scalar> = subsets(&ids).map(|s| self.eval(&s)).collect();
        Ok(ClassReport::from_values(self.ground, &values))
    }
}

impl fmt::Debug for RewardFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Table(_) => "Table".to_string(),
            Repr::Additive(_) => "Additive".to_string(),
            Repr::Xos(c) => format!("Xos[{} clauses]", c.len()),
            Repr::Coverage { weights, .. } => format!("Coverage[universe {}]", weights.len()),
            Repr::Formula { name, .. } => format!("Formula[{name}]"),
        };
        write!(f, "RewardFunction({kind} over {} actions)", self.ground)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Price {
    Finite(Scalar),
    Infinite,
}

impl Price {
    pub fn is_finite(&self) -> bool {
        matches!(self, Price::Finite(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceVector(Vec<Price>);

impl PriceVector {
    pub fn new(prices: Vec<Price>) -> Result<Self> {
        for (j, p) in prices.iter().enumerate() {
            if let Price::Finite(v) = p {
                if v.is_negative() {
                    return Err(Error::InvalidReward(format!(
                        "price of action {j} is negative ({})",
                        format_scalar(v)
                    )));
                }
            }
        }
        Ok(PriceVector(prices))
    }

    pub fn finite(prices: Vec<Scalar>) -> Result<Self> {
        Self::new(prices.into_iter().map(Price::Finite).collect())
    }

    pub fn all_infinite(m: usize) -> Self {
        PriceVector(vec![Price::Infinite; m])
    }

    /// `p_j = c_j / alpha_i` for `j ∈ A_i`, with `0/0 = 0` and `c/0 = inf`.
    /// A demand set at these prices maximizes the potential.
    pub fn potential_prices(inst: &Instance, a: &Contract) -> Self {
        PriceVector(
            (0..inst.m())
                .map(|j| {
                    let (c, share) = (inst.cost(j), a.share(inst.owner(j)));
                    if c.is_zero() {
                        Price::Finite(Scalar::zero())
                    } else if share.is_zero() {
                        Price::Infinite
                    } else {
                        Price::Finite(c / share)
                    }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> &Price {
        &self.0[j]
    }
}

/// Outcome of the exhaustive class testers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassReport {
    pub monotone: bool,
    pub normalized: bool,
    pub additive: bool,
    pub submodular: bool,
    pub xos: bool,
    pub subadditive: bool,
    pub supermodular: bool,
}

impl ClassReport {
    /// `values[mask]` holds `f` of the set with that bitmask.
    fn from_values(ground: usize, values: &[Scalar]) -> Self {
        let full = (1u64 << ground) - 1;
        let f = |s: u64| &values[s as usize];
        let normalized = values[0].is_zero();

        let mut monotone = true;
        'mono: for s in 0..=full {
            for j in 0..ground {
                if s >> j & 1 == 0 && f(s | 1 << j) < f(s) {
                    monotone = false;
                    break 'mono;
                }
            }
        }

        let additive = (0..=full).all(|s| {
            *f(s)
                == (0..ground)
                    .filter(|j| s >> j & 1 == 1)
                    .map(|j| f(1 << j))
                    .sum::<Scalar>()
        });

        // Local exchange conditions; equivalent to the lattice definitions.
        let (mut submodular, mut supermodular) = (true, true);
        for s in 0..=full {
            for j in 0..ground {
                if s >> j & 1 == 1 {
                    continue;
                }
                for k in j + 1..ground {
                    if s >> k & 1 == 1 {
                        continue;
                    }
                    let lhs = f(s | 1 << j) + f(s | 1 << k);
                    let rhs = f(s | 1 << j | 1 << k) + f(s);
                    if lhs < rhs {
                        submodular = false;
                    }
                    if lhs > rhs {
                        supermodular = false;
                    }
                }
            }
        }

        let subadditive = if monotone {
            // Disjoint pairs suffice for monotone functions.
            (0..=full).all(|s| {
                let rest = full & !s;
                submasks(rest).all(|t| f(s | t) <= &(f(s) + f(t)))
            })
        } else {
            (0..=full).all(|s| (0..=full).all(|t| f(s | t) <= &(f(s) + f(t))))
        };

        // Nonnegative clauses force monotonicity and f(∅) = 0.
        let xos = monotone && normalized && (0..=full).all(|s| xos_supported(values, s));

        ClassReport {
            monotone,
            normalized,
            additive,
            submodular,
            xos,
            subadditive,
            supermodular,
        }
    }
}

fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            Some((cur - 1) & mask)
        };
        Some(cur)
    })
}

/// Whether some nonnegative additive `a` on `s` has `a(s) = f(s)` and
/// `a(u) <= f(u)` for every `u ⊆ s`. Assumes `f` monotone and normalized.
fn xos_supported(values: &[Scalar], s: u64) -> bool {
    if s == 0 {
        return true;
    }
    let f = |u: u64| &values[u as usize];
    let members: Vec<u32> = (0..64).filter(|j| s >> j & 1 == 1).collect();

    // Greedy chain marginals, which already certify submodular functions.
    let mut a = vec![Scalar::zero(); 64];
    let mut prefix = 0u64;
    for &j in &members {
        a[j as usize] = f(prefix | 1 << j) - f(prefix);
        prefix |= 1 << j;
    }
    if submasks(s).all(|u| {
        let au: Scalar = (0..64).filter(|j| u >> j & 1 == 1).map(|j| &a[j]).sum();
        &au <= f(u)
    }) {
        return true;
    }

    // Otherwise the fractional cover value of s must reach f(s).
    let subsets: Vec<u64> = submasks(s).filter(|&u| u != 0).collect();
    let mut lp = LinearProgram::new(
        Sense::Minimize,
        subsets.iter().map(|&u| f(u).clone()).collect(),
    );
    for &j in &members {
        lp.add(
            subsets
                .iter()
                .map(|&u| Scalar::from_integer((u >> j & 1).into()))
                .collect(),
            Relation::Ge,
            Scalar::from_integer(1.into()),
        );
    }
    match solve_lp(&lp) {
        Ok(LpOutcome::Optimal { value, .. }) => value >= *f(s),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::{int, ratio};

    fn p(ids: &[usize]) -> ActionProfile {
        ids.iter().copied().collect()
    }

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn value_examples() {
        let sep = fixtures::separation_example();
        assert_eq!(sep.reward().value(&p(&[0])).unwrap(), int(180));
        assert_eq!(sep.reward().value(&p(&[])).unwrap(), int(0));
        assert!(sep.reward().value(&p(&[5])).is_err());

        let t1 = fixtures::subadditive_gap_instance(4).unwrap();
        let s: ActionProfile = std::iter::once(0).chain(2..10).collect();
        assert_eq!(t1.reward().value(&s).unwrap(), ratio(19, 2));
    }

    #[test]
    fn representations_agree_on_an_additive_function() {
        let vals = vec![int(2), ratio(1, 3), int(5)];
        let add = RewardFunction::additive(vals.clone()).unwrap();
        let xos = RewardFunction::xos(3, vec![vals.clone()]).unwrap();
        let cov = RewardFunction::coverage(vals, vec![p(&[0]), p(&[1]), p(&[2])]).unwrap();
        let table = add.to_table().unwrap();
        for s in subsets(&[0, 1, 2]) {
            let v = add.eval(&s);
            assert_eq!(xos.eval(&s), v);
            assert_eq!(cov.eval(&s), v);
            assert_eq!(table.eval(&s), v);
        }
    }

    #[test]
    fn constructors_validate() {
        assert!(RewardFunction::table(2, vec![int(0); 3]).is_err());
        assert!(RewardFunction::additive(vec![int(-1)]).is_err());
        assert!(RewardFunction::xos(2, vec![]).is_err());
        assert!(RewardFunction::xos(2, vec![vec![int(1)]]).is_err());
        assert!(RewardFunction::coverage(vec![int(1)], vec![p(&[1])]).is_err());
        assert!(RewardFunction::table(25, vec![]).unwrap_err().is_capacity());
    }

    #[test]
    fn demand_examples() {
        let sep = fixtures::separation_example();
        let prices = PriceVector::finite(vec![int(18), int(18)]).unwrap();
        let all = sep.all_actions();
        assert_eq!(sep.reward().demand(&prices, &all, 24).unwrap(), p(&[0, 1]));
        let none = PriceVector::all_infinite(2);
        assert_eq!(sep.reward().demand(&none, &all, 24).unwrap(), p(&[]));

        let add = RewardFunction::additive(vec![int(5), int(3)]).unwrap();
        let prices = PriceVector::finite(vec![int(4), int(4)]).unwrap();
        assert_eq!(add.demand(&prices, &p(&[0, 1]), 24).unwrap(), p(&[0]));
    }

    #[test]
    fn demand_ties_go_to_the_smallest_set() {
        // f({0}) - 180 = 0 = f(∅): the empty set wins.
        let sep = fixtures::separation_example();
        let prices = PriceVector::finite(vec![int(180), int(1000)]).unwrap();
        assert_eq!(
            sep.reward()
                .demand(&prices, &sep.all_actions(), 24)
                .unwrap(),
            p(&[])
        );
        let add = RewardFunction::additive(vec![int(4)]).unwrap();
        let prices = PriceVector::finite(vec![int(4)]).unwrap();
        assert_eq!(add.demand(&prices, &p(&[0]), 24).unwrap(), p(&[]));
    }

    #[test]
    fn demand_respects_the_cap() {
        let f = RewardFunction::xos(30, vec![vec![int(1); 30]]).unwrap();
        let prices = PriceVector::finite(vec![int(0); 30]).unwrap();
        let all: ActionProfile = (0..30).collect();
        assert!(f.demand(&prices, &all, 24).unwrap_err().is_capacity());
        // Infinite prices shrink the search below the cap.
        let mut mixed = vec![Price::Infinite; 30];
        mixed[3] = Price::Finite(int(0));
        let prices = PriceVector::new(mixed).unwrap();
        assert_eq!(f.demand(&prices, &all, 24).unwrap(), p(&[3]));
    }

    #[test]
    fn classify_examples() {
        let sep = fixtures::separation_example()
            .reward()
            .classify(&limits())
            .unwrap();
        assert!(sep.submodular && sep.xos && sep.subadditive && sep.monotone);
        assert!(!sep.supermodular && !sep.additive);

        let t3 = fixtures::supermodular_gap_instance();
        let r = t3.reward().classify(&limits()).unwrap();
        assert!(r.supermodular && r.monotone && !r.submodular);

        let golden = fixtures::golden_ratio_instance(20).unwrap();
        let r = golden.reward().classify(&limits()).unwrap();
        assert!(!r.subadditive && !r.supermodular && r.monotone);
    }

    #[test]
    fn xos_that_is_not_submodular() {
        // max((1,1,0,0), (0,0,1,1)): adding 0 and 1 to {2} is complementary.
        let f = RewardFunction::xos(
            4,
            vec![
                vec![int(1), int(1), int(0), int(0)],
                vec![int(0), int(0), int(1), int(1)],
            ],
        )
        .unwrap();
        let r = f.classify(&limits()).unwrap();
        assert!(r.xos && r.subadditive && r.monotone && !r.submodular);
    }

    #[test]
    fn subadditive_but_not_xos() {
        // f = 1 on every nonempty subset of 3 actions except f(all) = 2: fractional
        // cover of the full set by the three pairs costs 3/2 < 2.
        let f = RewardFunction::table_from_fn(3, |s| match s.len() {
            0 => int(0),
            3 => int(2),
            _ => int(1),
        })
        .unwrap();
        let r = f.classify(&limits()).unwrap();
        assert!(r.subadditive && r.monotone && !r.xos);
    }

    #[test]
    fn classify_respects_the_cap() {
        let f = RewardFunction::additive(vec![int(1); 13]).unwrap();
        assert!(f.classify(&limits()).unwrap_err().is_capacity());
    }

    #[test]
    fn non_monotone_functions_are_flagged() {
        let f = RewardFunction::table(1, vec![int(1), int(0)]).unwrap();
        let r = f.classify(&limits()).unwrap();
        assert!(!r.monotone && !r.normalized && !r.xos);
    }
}
