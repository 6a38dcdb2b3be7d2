//! Contract grids as a stand-in for optimizing over all contracts.

use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;

use crate::equilibria::JointDistribution;
use crate::error::{Error, Result};
use crate::model::{Contract, Instance};
use crate::profile::ActionProfile;
use crate::scalar::{ratio, Scalar};

use super::{best_cce, best_ce, enumerate_pne, worst_cce};

/// Largest number of contracts a single grid may hold.
pub const MAX_GRID_CELLS: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    BestPne,
    BestCce,
    WorstCce,
    BestCe,
}

impl Objective {
    pub const ALL: [Objective; 4] = [
        Objective::BestPne,
        Objective::BestCce,
        Objective::WorstCce,
        Objective::BestCe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Objective::BestPne => "best_pne",
            Objective::BestCce => "best_cce",
            Objective::WorstCce => "worst_cce",
            Objective::BestCe => "best_ce",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Profile(ActionProfile),
    Distribution(JointDistribution),
}

/// The objective evaluated at one contract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellResult {
    pub contract: Contract,
    pub witness: Witness,
    pub expected_reward: Scalar,
    pub principal_utility: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapReport {
    pub objective: Objective,
    /// `None` for explicit cell lists.
    pub resolution: Option<u32>,
    /// Cells in traversal order; a cell with no PNE is omitted for
    /// [`Objective::BestPne`].
    pub cells: Vec<CellResult>,
    /// Index into `cells` of the first cell with the highest principal utility.
    pub best: usize,
}

impl GapReport {
    pub fn best_cell(&self) -> &CellResult {
        &self.cells[self.best]
    }

    /// Recomputes every stored utility from the instance.
    pub fn verify(&self, inst: &Instance) -> bool {
        self.cells.iter().all(|c| {
            let reward = match &c.witness {
                Witness::Profile(s) => inst.value(s),
                Witness::Distribution(d) => d.expectation(|s| inst.value(s)),
            };
            reward == c.expected_reward && c.contract.residual() * reward == c.principal_utility
        })
    }
}

/// Contracts on `{0, 1/r, ..., 1}^n` with total share at most one, last
/// agent varying fastest.
pub fn grid_contracts(n: usize, resolution: u32) -> Result<Vec<Contract>> {
    if resolution == 0 {
        return Err(Error::Precondition(
            "grid resolution must be positive".into(),
        ));
    }
    let count = simplex_points(n as u64, resolution as u64);
    if count > MAX_GRID_CELLS {
        return Err(Error::capacity("contract grid", count, MAX_GRID_CELLS));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut steps = vec![0u32; n];
    loop {
        out.push(Contract::new(
            steps
                .iter()
                .map(|&k| ratio(k as i64, resolution as i64))
                .collect(),
        )?);
        // Odometer restricted to Σ steps <= r.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            let used: u32 = steps[..k].iter().sum();
            if used + steps[k] < resolution {
                steps[k] += 1;
                for s in &mut steps[k + 1..] {
                    *s = 0;
                }
                break;
            }
        }
    }
}

/// `C(r + n, n)`, saturating.
fn simplex_points(n: u64, r: u64) -> u64 {
    let mut acc: u128 = 1;
    for k in 1..=n as u128 {
        acc = acc * (r as u128 + k) / k;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn evaluate(inst: &Instance, a: &Contract, objective: Objective) -> Result<Option<CellResult>> {
    let from_lp = |opt: super::EquilibriumOptimum| CellResult {
        contract: a.clone(),
        witness: Witness::Distribution(opt.distribution),
        expected_reward: opt.expected_reward,
        principal_utility: opt.principal_utility,
    };
    Ok(match objective {
        Objective::BestPne => enumerate_pne(inst, a)?.into_iter().next().map(|(s, u)| {
            let reward = inst.value(&s);
            CellResult {
                contract: a.clone(),
                witness: Witness::Profile(s),
                expected_reward: reward,
                principal_utility: u,
            }
        }),
        Objective::BestCce => Some(from_lp(best_cce(inst, a)?)),
        Objective::WorstCce => Some(from_lp(worst_cce(inst, a)?)),
        Objective::BestCe => Some(from_lp(best_ce(inst, a)?)),
    })
}

/// Evaluates `objective` at every grid contract.
pub fn grid_search(inst: &Instance, resolution: u32, objective: Objective) -> Result<GapReport> {
    let cells = grid_contracts(inst.n(), resolution)?;
    let mut report = grid_search_cells(inst, &cells, objective)?;
    report.resolution = Some(resolution);
    Ok(report)
}

/// Evaluates `objective` at each listed contract, concurrently; the report
/// keeps the input order.
pub fn grid_search_cells(
    inst: &Instance,
    contracts: &[Contract],
    objective: Objective,
) -> Result<GapReport> {
    for a in contracts {
        inst.check_contract(a)?;
    }
    let evaluated: Vec<Option<CellResult>> = contracts
        .par_iter()
        .map(|a| evaluate(inst, a, objective))
        .collect::<Result<_>>()?;
    let cells: Vec<CellResult> = evaluated.into_iter().flatten().collect();
    if cells.is_empty() {
        return Err(Error::Precondition(
            "no contract produced an equilibrium".into(),
        ));
    }
    let mut best = 0;
    for (k, c) in cells.iter().enumerate() {
        if c.principal_utility > cells[best].principal_utility {
            best = k;
        }
    }
    Ok(GapReport {
        objective,
        resolution: None,
        cells,
        best,
    })
}

/// Best principal utility in a report, or zero for an empty one.
pub fn best_utility(report: &GapReport) -> Scalar {
    report
        .cells
        .get(report.best)
        .map_or_else(Scalar::zero, |c| c.principal_utility.clone())
}
