//! Seeded property audits: random instances, sampled equilibria, and the
//! checks behind the acceptance suite and the `reproduce` command. Each check
//! returns `Err` describing the first violation.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::equilibria::{
    is_cce, is_ce, is_dropout_stable, is_mne, is_pne, JointDistribution, ProductDistribution,
};
use crate::fixtures::{random_contract, random_instance, rng, RandomKind, RandomSpec};
use crate::model::{agent_utility, potential, principal_utility, Contract, Instance};
use crate::profile::{subsets, ActionProfile};
use crate::scalar::{int, ratio, ExtendedScalar, Scalar};
use crate::solvers::grid::{grid_search, Objective, Witness};
use crate::solvers::lp::Sense;
use crate::solvers::{best_cce, enumerate_pne, optimize_over, worst_cce, Polytope};
use crate::transforms::{
    cce_to_pne_supermodular_binary, ce_to_pne_supermodular, lift_xos, robustify_submodular,
    scale_for_existence, scale_for_robustness, LiftCase, RobustCase, ScalingParams,
};

/// Action counts per agent with at most `max_m` actions in total.
pub fn random_sizes(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, binary: bool) -> Vec<usize> {
    let n = rng.gen_range(1..=max_n);
    let mut sizes = vec![1; n];
    if !binary {
        let mut budget = max_m.saturating_sub(n);
        for s in &mut sizes {
            let extra = rng.gen_range(0..=budget.min(2));
            *s += extra;
            budget -= extra;
        }
    }
    sizes
}

pub fn instance(
    rng: &mut ChaCha8Rng,
    kind: RandomKind,
    max_n: usize,
    max_m: usize,
    binary: bool,
) -> Instance {
    let sizes = random_sizes(rng, max_n, max_m, binary);
    random_instance(&RandomSpec::new(kind, rng.gen(), sizes)).expect("sizes within caps")
}

/// Shares in multiples of `1/12`, each at most `cap`, summing to at most one.
pub fn contract(rng: &mut ChaCha8Rng, n: usize, cap: &Scalar) -> Contract {
    random_contract(rng, n, 12, cap)
}

/// `t * d1 + (1 - t) * d2`.
pub fn mix(d1: &JointDistribution, d2: &JointDistribution, t: &Scalar) -> JointDistribution {
    let mut acc: BTreeMap<ActionProfile, Scalar> = BTreeMap::new();
    let rest = Scalar::one() - t;
    for (w, d) in [(t, d1), (&rest, d2)] {
        for (s, p) in d.support() {
            *acc.entry(s.clone()).or_insert_with(Scalar::zero) += w * p;
        }
    }
    JointDistribution::new(acc.into_iter().filter(|(_, p)| !p.is_zero()).collect())
        .expect("mixture of distributions")
}

/// A vertex of `polytope` at `a` picked by a random objective, mixed with a
/// second random vertex.
pub fn sample(
    inst: &Instance,
    a: &Contract,
    polytope: Polytope,
    rng: &mut ChaCha8Rng,
) -> JointDistribution {
    let mut vertex = || {
        let weights: Vec<Scalar> = (0..1u64 << inst.m())
            .map(|_| int(rng.gen_range(-5..=5)))
            .collect();
        optimize_over(inst, a, polytope, Sense::Maximize, |s| {
            weights[s.as_mask().expect("small instance") as usize].clone()
        })
        .expect("equilibria always exist")
        .distribution
    };
    let (d1, d2) = (vertex(), vertex());
    let t = ratio(rng.gen_range(0..=4), 4);
    mix(&d1, &d2, &t)
}

pub fn sample_dropout_stable(
    inst: &Instance,
    a: &Contract,
    rng: &mut ChaCha8Rng,
) -> JointDistribution {
    sample(inst, a, Polytope::Dropout, rng)
}

pub fn sample_cce(inst: &Instance, a: &Contract, rng: &mut ChaCha8Rng) -> JointDistribution {
    sample(inst, a, Polytope::Cce, rng)
}

pub fn principal_value(inst: &Instance, d: &JointDistribution, a: &Contract) -> Scalar {
    a.residual() * d.expectation(|s| inst.value(s))
}

pub type Check<T = ()> = Result<T, String>;

fn fail<T>(what: impl Into<String>) -> Check<T> {
    Err(what.into())
}

fn ok_or<T, E: std::fmt::Display>(r: Result<T, E>) -> Check<T> {
    r.map_err(|e| e.to_string())
}

/// The weighted-potential law on every profile and unilateral deviation.
pub fn potential_law(seed: u64, kind: RandomKind, max_m: usize) -> Check {
    let mut r = rng(seed);
    let inst = instance(&mut r, kind, 4, max_m, false);
    let a = contract(&mut r, inst.n(), &Scalar::one());
    for s in ok_or(inst.profiles())? {
        let phi = ok_or(potential(&inst, &s, &a))?;
        for i in (0..inst.n()).filter(|&i| !a.share(i).is_zero()) {
            let u = ok_or(agent_utility(&inst, &s, &a, i))?;
            for t in ok_or(inst.deviations(i))? {
                let s2 = inst.replace_slice(&s, i, &t);
                let phi2 = ok_or(potential(&inst, &s2, &a))?;
                let du = ok_or(agent_utility(&inst, &s2, &a, i))? - &u;
                let holds = match (&phi, &phi2) {
                    (ExtendedScalar::Finite(p1), ExtendedScalar::Finite(p2)) => {
                        du == a.share(i) * (p2 - p1)
                    }
                    (ExtendedScalar::NegInfinity, ExtendedScalar::NegInfinity) => true,
                    _ => false,
                };
                if !holds {
                    return fail(format!("seed {seed}: agent {i} moving {s} -> {s2} at {a}"));
                }
            }
        }
    }
    Ok(())
}

pub fn random_product(inst: &Instance, r: &mut ChaCha8Rng) -> ProductDistribution {
    let agents = (0..inst.n())
        .map(|i| {
            let slices: Vec<ActionProfile> = subsets(inst.agent_actions(i)).collect();
            let k = r.gen_range(1..=slices.len().min(2));
            let picked = rand::seq::index::sample(r, slices.len(), k);
            let first = ratio(r.gen_range(1..=3), 4);
            picked
                .into_iter()
                .enumerate()
                .map(|(pos, idx)| {
                    let p = match (k, pos) {
                        (1, _) => Scalar::one(),
                        (_, 0) => first.clone(),
                        _ => Scalar::one() - &first,
                    };
                    (slices[idx].clone(), p)
                })
                .collect()
        })
        .collect();
    ProductDistribution::new(agents).expect("probabilities sum to one")
}

/// Counts of candidates passing each verifier, most to least demanding.
#[derive(Clone, Copy, Debug, Default)]
pub struct ChainCounts {
    pub pne: usize,
    pub mne: usize,
    pub ce: usize,
    pub cce: usize,
    pub dropout: usize,
}

/// PNE ⇒ MNE ⇒ CE ⇒ CCE ⇒ dropout on point masses, random product
/// distributions and LP-sampled correlated ones.
pub fn containment_chain(seed: u64, kind: RandomKind) -> Check<ChainCounts> {
    let mut r = rng(seed);
    let inst = instance(&mut r, kind, 3, 6, false);
    let a = contract(&mut r, inst.n(), &Scalar::one());
    let mut counts = ChainCounts::default();
    let mut candidates: Vec<(Option<bool>, Option<ProductDistribution>, JointDistribution)> =
        Vec::new();
    for s in ok_or(inst.profiles())? {
        let point = ok_or(ProductDistribution::new(
            (0..inst.n())
                .map(|i| vec![(inst.slice(&s, i), Scalar::one())])
                .collect(),
        ))?;
        let pne = ok_or(is_pne(&inst, &s, &a))?.holds();
        candidates.push((Some(pne), Some(point), JointDistribution::point(s)));
    }
    for _ in 0..4 {
        let p = random_product(&inst, &mut r);
        let d = ok_or(p.to_joint(1 << 12))?;
        candidates.push((None, Some(p), d));
    }
    candidates.push((None, None, sample(&inst, &a, Polytope::Ce, &mut r)));
    candidates.push((None, None, sample_cce(&inst, &a, &mut r)));
    candidates.push((None, None, sample_dropout_stable(&inst, &a, &mut r)));
    for (pne, p, d) in &candidates {
        let pne = pne.unwrap_or(false);
        let mne = match p {
            Some(p) => ok_or(is_mne(&inst, p, &a))?.holds(),
            None => false,
        };
        let ce = ok_or(is_ce(&inst, d, &a))?.holds();
        let cce = ok_or(is_cce(&inst, d, &a))?.holds();
        let dropout = ok_or(is_dropout_stable(&inst, d, &a))?.holds();
        let verdicts = [pne, mne, ce, cce, dropout];
        if verdicts.windows(2).any(|w| w[0] && !w[1]) {
            return fail(format!(
                "seed {seed}: verdicts {verdicts:?} for {d:?} at {a}"
            ));
        }
        for (count, v) in [
            (&mut counts.pne, pne),
            (&mut counts.mne, mne),
            (&mut counts.ce, ce),
            (&mut counts.cce, cce),
            (&mut counts.dropout, dropout),
        ] {
            *count += v as usize;
        }
    }
    Ok(counts)
}

/// Scaling for existence on an XOS instance: the output is a PNE holding
/// `(1 - 1/gamma)` of the bundle's expected reward, for each gamma.
pub fn scaling_for_existence(seed: u64) -> Check {
    let mut r = rng(seed);
    let inst = instance(&mut r, RandomKind::Xos, 4, 8, false);
    let a = contract(&mut r, inst.n(), &ratio(1, 4));
    let d = sample_dropout_stable(&inst, &a, &mut r);
    let bundle: Vec<usize> = (0..inst.n()).filter(|_| r.gen_bool(0.6)).collect();
    let target = d.expectation(|s| inst.value(&inst.restrict_to_agents(s, &bundle)));
    for gamma in [ratio(7, 6), ratio(2, 1), ratio(4, 1)] {
        let params = ok_or(ScalingParams::new(
            gamma.clone(),
            bundle.clone(),
            Scalar::zero(),
        ))?;
        let (scaled, s) = ok_or(scale_for_existence(&inst, &a, &d, &params))?;
        if !ok_or(is_pne(&inst, &s, &scaled))?.holds() {
            return fail(format!("seed {seed}: {s} is not a PNE of {scaled}"));
        }
        let bound = (Scalar::one() - Scalar::one() / &gamma) * &target;
        if inst.value(&s) < bound {
            return fail(format!(
                "seed {seed}: f({s}) below the bound at gamma {gamma}"
            ));
        }
    }
    Ok(())
}

/// Lifting an LP-generated CCE on an XOS instance; returns the case taken.
pub fn lifting(seed: u64) -> Check<LiftCase> {
    let mut r = rng(seed);
    let inst = instance(&mut r, RandomKind::Xos, 3, 6, false);
    let a = contract(&mut r, inst.n(), &Scalar::one());
    let d = sample_cce(&inst, &a, &mut r);
    let out = ok_or(lift_xos(&inst, &a, &d))?;
    if !ok_or(is_pne(&inst, &out.pne, &out.contract))?.holds() {
        return fail(format!("seed {seed}: lifted profile is not a PNE"));
    }
    if out.benchmark != principal_value(&inst, &d, &a) {
        return fail(format!("seed {seed}: benchmark mismatch"));
    }
    if out.principal_utility < ratio(1, 112) * &out.benchmark {
        return fail(format!(
            "seed {seed}: ratio below 1/112 in case {}",
            out.case
        ));
    }
    if !out.meets_claim() {
        return fail(format!(
            "seed {seed}: case {} misses {} ({} vs {})",
            out.case, out.claimed_ratio, out.principal_utility, out.benchmark
        ));
    }
    Ok(out.case)
}

/// Robustifying the grid-best PNE of a coverage instance; returns the case.
pub fn robustness(seed: u64, resolution: u32) -> Check<RobustCase> {
    let mut r = rng(seed);
    let inst = instance(&mut r, RandomKind::Coverage, 3, 6, false);
    let report = ok_or(grid_search(&inst, resolution, Objective::BestPne))?;
    let best = report.best_cell();
    let Witness::Profile(s_star) = &best.witness else {
        return fail("best PNE witness is a profile");
    };
    let a_star = &best.contract;
    if a_star.total() > Scalar::one() {
        return fail(format!("seed {seed}: grid contract above budget"));
    }
    let out = ok_or(robustify_submodular(&inst, a_star, s_star))?;
    let worst = ok_or(worst_cce(&inst, &out.contract))?;
    if worst.principal_utility < ratio(1, 224) * &best.principal_utility {
        return fail(format!(
            "seed {seed}: case {} worst CCE {} below 1/224 of {}",
            out.case, worst.principal_utility, best.principal_utility
        ));
    }
    if worst.principal_utility < &out.claimed_ratio * &best.principal_utility {
        return fail(format!(
            "seed {seed}: case {} misses {}",
            out.case, out.claimed_ratio
        ));
    }
    Ok(out.case)
}

/// Every CCE at `2 alpha + 1/(2n)` keeps a quarter of a dropout-stable
/// distribution's expected reward on a coverage instance.
pub fn robust_scaling(seed: u64) -> Check {
    let mut r = rng(seed);
    let inst = instance(&mut r, RandomKind::Coverage, 3, 6, false);
    let a = contract(&mut r, inst.n(), &ratio(1, 4));
    let d = sample_dropout_stable(&inst, &a, &mut r);
    let eps = ratio(1, 2 * inst.n() as i64);
    let scaled = ok_or(scale_for_robustness(&a, &ratio(2, 1), &eps))?;
    let worst = ok_or(worst_cce(&inst, &scaled))?;
    let reference = d.expectation(|s| inst.value(s));
    if worst.expected_reward * ratio(4, 1) < reference {
        return fail(format!(
            "seed {seed}: worst CCE at {scaled} keeps less than a quarter"
        ));
    }
    Ok(())
}

/// The supermodular constructions produce PNEs no worse for the principal
/// than their input equilibria.
pub fn supermodular_constructions(seed: u64) -> Check {
    let mut r = rng(seed);
    let binary = r.gen_bool(0.5);
    let inst = instance(&mut r, RandomKind::Supermodular, 3, 6, binary);
    let a = contract(&mut r, inst.n(), &Scalar::one());
    let d = sample(&inst, &a, Polytope::Ce, &mut r);
    let before = principal_value(&inst, &d, &a);
    let mut outputs: Vec<(Contract, ActionProfile)> =
        vec![ok_or(ce_to_pne_supermodular(&inst, &a, &d))?];
    if binary {
        let cce = sample_cce(&inst, &a, &mut r);
        let (a2, s2) = ok_or(cce_to_pne_supermodular_binary(&inst, &a, &cce))?;
        if ok_or(principal_utility(&inst, &s2, &a2))? < principal_value(&inst, &cce, &a) {
            return fail(format!("seed {seed}: binary construction lost utility"));
        }
        outputs.push((a2, s2));
    }
    for (a2, s2) in &outputs {
        if !ok_or(is_pne(&inst, s2, a2))?.holds() {
            return fail(format!("seed {seed}: {s2} is not a PNE of {a2}"));
        }
    }
    if ok_or(principal_utility(&inst, &outputs[0].1, &outputs[0].0))? < before {
        return fail(format!("seed {seed}: CE construction lost utility"));
    }
    Ok(())
}

/// On binary supermodular instances the grid optima over CCEs and PNEs
/// coincide, and each cell's best CCE is matched by a PNE at the grid
/// contract that drops the never-acting agents.
pub fn supermodular_grid(seed: u64, resolution: u32) -> Check {
    let mut r = rng(seed);
    let inst = instance(&mut r, RandomKind::Supermodular, 3, 3, true);
    let cce = ok_or(grid_search(&inst, resolution, Objective::BestCce))?;
    let pne = ok_or(grid_search(&inst, resolution, Objective::BestPne))?;
    if cce.best_cell().principal_utility != pne.best_cell().principal_utility {
        return fail(format!(
            "seed {seed}: grid best CCE {} vs best PNE {}",
            cce.best_cell().principal_utility,
            pne.best_cell().principal_utility
        ));
    }
    for cell in &cce.cells {
        let Witness::Distribution(d) = &cell.witness else {
            return fail("CCE witness is a distribution");
        };
        let (a2, s2) = ok_or(cce_to_pne_supermodular_binary(&inst, &cell.contract, d))?;
        let best_here = ok_or(enumerate_pne(&inst, &a2))?
            .into_iter()
            .next()
            .map(|(_, u)| u)
            .unwrap_or_else(Scalar::zero);
        if best_here < cell.principal_utility || !ok_or(is_pne(&inst, &s2, &a2))?.holds() {
            return fail(format!(
                "seed {seed}: no matching PNE for the CCE at {}",
                cell.contract
            ));
        }
    }
    let direct = ok_or(best_cce(&inst, &pne.best_cell().contract))?;
    if direct.principal_utility < pne.best_cell().principal_utility {
        return fail(format!(
            "seed {seed}: best CCE below a PNE at the same contract"
        ));
    }
    Ok(())
}
