//! Registry of reference values the library must reproduce.

use std::fmt::Write as _;

use contractlab::audit::{self, Check};
use contractlab::fixtures::{
    golden_ratio_instance, golden_ratio_mne, separation_example, separation_mne,
    subadditive_gap_instance, subadditive_gap_mne, subadditive_gap_mne_utility,
    supermodular_gap_cce, supermodular_gap_instance,
};
use contractlab::scalar::ten_to_minus;
use contractlab::solvers::grid::grid_search;
use contractlab::{
    best_pne_binary, enumerate_pne, format_scalar, g_values, int, is_cce, is_mne, is_mne_tol,
    ratio, to_f64, Contract, Instance, Objective, ProductDistribution, Scalar,
};
use num_traits::{Signed, Zero};

use crate::{CliError, Outcome};

/// Expected against computed, both as display text.
pub struct Comparison {
    pub expected: String,
    pub computed: String,
    pub matches: bool,
}

pub struct Claim {
    pub id: &'static str,
    pub summary: &'static str,
    check: fn() -> Check<Comparison>,
}

impl Claim {
    pub fn check(&self) -> Check<Comparison> {
        (self.check)()
    }
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Check<T> {
    r.map_err(|e| e.to_string())
}

fn exact(expected: Scalar, computed: Scalar) -> Comparison {
    Comparison {
        expected: format_scalar(&expected),
        computed: format_scalar(&computed),
        matches: expected == computed,
    }
}

fn mne_utility(inst: &Instance, a: &Contract, p: &ProductDistribution) -> Check<Scalar> {
    let d = e(p.to_joint(1 << 16))?;
    Ok(a.residual() * d.expectation(|s| inst.value(s)))
}

/// Seeds each property claim is run over.
const PROPERTY_SEEDS: std::ops::Range<u64> = 0..40;

fn property<T>(what: &str, check: impl Fn(u64) -> Check<T>) -> Check<Comparison> {
    let failure = PROPERTY_SEEDS.clone().map(&check).find_map(Result::err);
    Ok(Comparison {
        expected: format!(
            "{what} on {} seeds",
            PROPERTY_SEEDS.end - PROPERTY_SEEDS.start
        ),
        computed: failure.clone().unwrap_or_else(|| "no violations".into()),
        matches: failure.is_none(),
    })
}

const GOLDEN_DIGITS: u32 = 20;
const GOLDEN_TOLERANCE: u32 = 18;

pub fn registry() -> Vec<Claim> {
    vec![
        Claim {
            id: "A1-pne-180",
            summary: "separation example: best PNE utility is 180",
            check: || {
                Ok(exact(
                    int(180),
                    e(best_pne_binary(&separation_example()))?.utility,
                ))
            },
        },
        Claim {
            id: "A1-mne-183.6",
            summary: "separation example: the MNE at (1/36, 1/36) yields 918/5",
            check: || {
                let inst = separation_example();
                let (a, p) = separation_mne();
                if !e(is_mne(&inst, &p, &a))?.holds() {
                    return Err("the MNE does not verify".into());
                }
                Ok(exact(ratio(918, 5), mne_utility(&inst, &a, &p)?))
            },
        },
        Claim {
            id: "P54-cce-7/45",
            summary: "supermodular gap: the listed CCE yields 7/45",
            check: || {
                let inst = supermodular_gap_instance();
                let (a, d) = supermodular_gap_cce();
                if !e(is_cce(&inst, &d, &a))?.holds() {
                    return Err("the CCE does not verify".into());
                }
                Ok(exact(
                    ratio(7, 45),
                    a.residual() * d.expectation(|s| inst.value(s)),
                ))
            },
        },
        Claim {
            id: "P54-pne-nonpositive",
            summary: "supermodular gap: no PNE with positive utility at listed or grid contracts",
            check: || {
                let inst = supermodular_gap_instance();
                let mut best: Option<Scalar> = None;
                for (x, y) in [(37, 40), (17, 18), (9, 10), (3, 4), (1, 2), (0, 1)] {
                    let c = e(Contract::new(vec![ratio(x, y), ratio(1, 18)]))?;
                    for (_, u) in e(enumerate_pne(&inst, &c))? {
                        best = Some(best.map_or(u.clone(), |b| b.max(u)));
                    }
                }
                let grid = e(grid_search(&inst, 40, Objective::BestPne))?;
                let g = grid.best_cell().principal_utility.clone();
                let best = best.map_or(g.clone(), |b| b.max(g));
                Ok(Comparison {
                    expected: "<= 0".into(),
                    computed: format_scalar(&best),
                    matches: !best.is_positive(),
                })
            },
        },
        Claim {
            id: "P61-golden-pne-zero",
            summary: "golden-ratio instance: max g(S) over inducible sets is zero up to precision",
            check: || {
                let inst = e(golden_ratio_instance(GOLDEN_DIGITS))?;
                let best = e(g_values(&inst))?
                    .into_iter()
                    .map(|g| g.utility)
                    .max()
                    .unwrap_or_else(Scalar::zero);
                Ok(Comparison {
                    expected: format!("within 1e-{GOLDEN_TOLERANCE} of 0"),
                    computed: format!("{:.3e}", to_f64(&best)),
                    matches: best.abs() <= ten_to_minus(GOLDEN_TOLERANCE),
                })
            },
        },
        Claim {
            id: "P61-golden-mne-positive",
            summary: "golden-ratio instance: the listed MNE yields more than 1/50",
            check: || {
                let inst = e(golden_ratio_instance(GOLDEN_DIGITS))?;
                let (a, p) = e(golden_ratio_mne(GOLDEN_DIGITS))?;
                if !e(is_mne_tol(&inst, &p, &a, &ten_to_minus(GOLDEN_TOLERANCE)))?.holds() {
                    return Err("the MNE does not verify".into());
                }
                let u = mne_utility(&inst, &a, &p)?;
                Ok(Comparison {
                    expected: "> 1/50".into(),
                    computed: format!("{:.5}", to_f64(&u)),
                    matches: u > ratio(1, 50),
                })
            },
        },
        Claim {
            id: "C2-small-n-pne",
            summary: "subadditive gap at n = 1: best PNE utility is at most 13/2",
            check: || {
                let best = e(best_pne_binary(&e(subadditive_gap_instance(1))?))?.utility;
                Ok(Comparison {
                    expected: "<= 13/2".into(),
                    computed: format_scalar(&best),
                    matches: best <= ratio(13, 2),
                })
            },
        },
        Claim {
            id: "C3-mne-valid",
            summary: "subadditive gap: the listed MNE verifies with the closed-form utility",
            check: || {
                let mut expected = Vec::new();
                let mut computed = Vec::new();
                let mut matches = true;
                for n in [4, 9, 25] {
                    let inst = e(subadditive_gap_instance(n))?;
                    let (a, p) = e(subadditive_gap_mne(n))?;
                    if !e(is_mne(&inst, &p, &a))?.holds() {
                        return Err(format!("n = {n}: the MNE does not verify"));
                    }
                    let want = e(subadditive_gap_mne_utility(n))?;
                    let got = mne_utility(&inst, &a, &p)?;
                    matches &= want == got;
                    expected.push(format!("n={n}: {}", format_scalar(&want)));
                    computed.push(format!("n={n}: {}", format_scalar(&got)));
                }
                Ok(Comparison {
                    expected: expected.join(", "),
                    computed: computed.join(", "),
                    matches,
                })
            },
        },
        Claim {
            id: "T51-binary-construction",
            summary: "binary supermodular: every grid CCE is matched by a PNE",
            check: || {
                property("grid best CCE = best PNE", |s| {
                    audit::supermodular_grid(s, 6)
                })
            },
        },
        Claim {
            id: "T52-ce-construction",
            summary: "supermodular: CE and CCE constructions emit PNEs at least as good",
            check: || {
                property(
                    "verified PNE, utility kept",
                    audit::supermodular_constructions,
                )
            },
        },
        Claim {
            id: "L32-property",
            summary: "scaling for existence keeps (1 - 1/gamma) of the subset's reward",
            check: || property("PNE, reward bound", audit::scaling_for_existence),
        },
        Claim {
            id: "L36-property",
            summary: "scaling for robustness keeps 1/4 of the reference reward in every CCE",
            check: || property("worst CCE reward bound", audit::robust_scaling),
        },
    ]
}

/// Runs one claim, or every claim for `all`.
pub fn run(id: &str) -> Result<Outcome, CliError> {
    let claims: Vec<Claim> = registry()
        .into_iter()
        .filter(|c| id == "all" || c.id == id)
        .collect();
    if claims.is_empty() {
        return Err(CliError::parse(format!(
            "unknown claim \"{id}\" (see reproduce --list)"
        )));
    }
    let mut out = String::new();
    let mut passed = true;
    for claim in &claims {
        match claim.check() {
            Ok(c) => {
                passed &= c.matches;
                writeln!(
                    out,
                    "{} {}: expected {}, computed {}",
                    if c.matches { "[match]" } else { "[MISMATCH]" },
                    claim.id,
                    c.expected,
                    c.computed
                )
                .unwrap();
            }
            Err(why) => {
                passed = false;
                writeln!(out, "[ERROR] {}: {why}", claim.id).unwrap();
            }
        }
    }
    Ok(Outcome::new(passed, out))
}
