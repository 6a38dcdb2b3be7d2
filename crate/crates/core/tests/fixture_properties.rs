use contractlab::fixtures::{
    rng, subadditive_gap_instance, subadditive_gap_mne, subadditive_gap_mne_utility,
    supermodular_gap_cce, supermodular_gap_instance,
};
use contractlab::{exact_sqrt, int, is_cce, is_mne, ratio, ActionProfile, Instance, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;

/// The tabulated marginal `f(j | S)` of the subadditive family, `j ∉ S`.
///
/// At `n = 1` the block columns `0` and `2n - 2` coincide and neither entry
/// holds for every `j`; those cells are read off the value table instead.
fn tabulated_marginal(n: usize, j: usize, s: &ActionProfile) -> Scalar {
    let inv = int(1) / exact_sqrt(&int(n as i64)).unwrap();
    let a = [0usize, 1].iter().filter(|&&x| s.contains(x)).count();
    let k = s.iter().filter(|&x| x >= 2).count();
    let first_half = 2..n + 2;
    if j < 2 {
        let row = |v: [i64; 2]| int(v[a]);
        if k == 0 {
            row([4, 1])
        } else if k < 2 * n - 1 {
            row([2, 1])
        } else if k == 2 * n - 1 {
            if first_half.clone().all(|i| s.contains(i)) {
                row([3, 0])
            } else {
                row([1, 2])
            }
        } else {
            row([2, 1])
        }
    } else if k == 0 && n == 1 {
        if j == 2 {
            [int(3), int(2), int(1)][a].clone()
        } else {
            [int(4), int(1), int(2)][a].clone()
        }
    } else if k == 0 {
        [int(2) + &inv, inv.clone(), inv][a].clone()
    } else if k + 2 < 2 * n {
        inv
    } else if k + 2 == 2 * n {
        if first_half
            .clone()
            .filter(|&i| i != j)
            .all(|i| s.contains(i))
        {
            [inv.clone(), int(1) + &inv, inv][a].clone()
        } else {
            [int(1) + &inv, inv.clone(), int(1) + &inv][a].clone()
        }
    } else if first_half.contains(&j) {
        [int(1), int(2), int(1)][a].clone()
    } else {
        [int(2), int(1), int(2)][a].clone()
    }
}

fn check_marginals(inst: &Instance, n: usize, s: &ActionProfile) {
    for j in (0..inst.m()).filter(|&j| !s.contains(j)) {
        let mut with = s.clone();
        with.insert(j);
        assert_eq!(
            inst.value(&with) - inst.value(s),
            tabulated_marginal(n, j, s),
            "n = {n}, j = {j}, S = {s}"
        );
    }
}

#[test]
fn subadditive_family_marginals_match_the_tables() {
    let inst = subadditive_gap_instance(1).unwrap();
    for s in inst.profiles().unwrap() {
        check_marginals(&inst, 1, &s);
    }
    let inst = subadditive_gap_instance(4).unwrap();
    for s in inst.profiles().unwrap() {
        check_marginals(&inst, 4, &s);
    }
    let inst = subadditive_gap_instance(9).unwrap();
    let mut r = rng(9);
    let block: Vec<usize> = (2..20).collect();
    for _ in 0..3000 {
        let k = r.gen_range(0..=18);
        let mut s: ActionProfile = block.choose_multiple(&mut r, k).copied().collect();
        for x in [0, 1] {
            if r.gen_bool(0.5) {
                s.insert(x);
            }
        }
        check_marginals(&inst, 9, &s);
    }
}

#[test]
fn subadditive_family_mne_for_square_sizes() {
    for n in [4, 9, 25] {
        let inst = subadditive_gap_instance(n).unwrap();
        let (a, p) = subadditive_gap_mne(n).unwrap();
        assert!(is_mne(&inst, &p, &a).unwrap().holds(), "n = {n}");
        let d = p.to_joint(16).unwrap();
        let utility = a.residual() * d.expectation(|s| inst.value(s));
        assert_eq!(utility, subadditive_gap_mne_utility(n).unwrap());
    }
}

#[test]
fn supermodular_gap_distribution_is_a_cce() {
    let inst = supermodular_gap_instance();
    let (a, d) = supermodular_gap_cce();
    assert!(is_cce(&inst, &d, &a).unwrap().holds());
    assert_eq!(
        a.residual() * d.expectation(|s| inst.value(s)),
        ratio(7, 45)
    );
}
