//! Dense two-phase simplex over exact rationals; Dantzig pricing with a Bland fallback on degenerate pivots.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Scalar>,
    pub relation: Relation,
    pub rhs: Scalar,
}

/// `optimize objective·x` subject to the constraints and `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Scalar>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Scalar>, value: Scalar },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Scalar>) -> Self {
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<Scalar>, relation: Relation, rhs: Scalar) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn objective_value(&self, x: &[Scalar]) -> Scalar {
        dot(&self.objective, x)
    }

    /// Whether `x` satisfies every row and the sign constraints exactly.
    pub fn is_feasible(&self, x: &[Scalar]) -> bool {
        x.len() == self.num_vars()
            && x.iter().all(|v| !v.is_negative())
            && self.constraints.iter().all(|c| {
                let lhs = dot(&c.coeffs, x);
                match c.relation {
                    Relation::Le => lhs <= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                    Relation::Ge => lhs >= c.rhs,
                }
            })
    }
}

fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter()
        .zip(b)
        .filter(|(u, v)| !u.is_zero() && !v.is_zero())
        .map(|(u, v)| u * v)
        .sum()
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.num_vars();
    for (k, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(Error::Lp(format!(
                "row {k} has {} coefficients for {n} variables",
                c.coeffs.len()
            )));
        }
    }
    Tableau::build(lp).solve(lp)
}

struct Tableau {
    rows: Vec<Vec<Scalar>>,
    rhs: Vec<Scalar>,
    basis: Vec<usize>,
    // Reduced costs of a maximization; a negative entry may enter.
    obj: Vec<Scalar>,
    obj_rhs: Scalar,
    n_struct: usize,
    // Columns at or beyond this index are artificial.
    n_real: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let rows_in: Vec<(Vec<Scalar>, Relation, Scalar)> = lp
            .constraints
            .iter()
            .map(|c| {
                // A `>=` row with zero right-hand side flips to `<=` so its
                // slack starts basic instead of needing an artificial.
                let flip = c.rhs.is_negative() || (c.rhs.is_zero() && c.relation == Relation::Ge);
                if flip {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), flipped, -&c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs.clone())
                }
            })
            .collect();
        let n_slack = rows_in.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows_in.iter().filter(|r| r.1 != Relation::Le).count();
        let n_real = n + n_slack;
        let width = n_real + n_art;

        let mut rows = Vec::with_capacity(rows_in.len());
        let mut rhs = Vec::with_capacity(rows_in.len());
        let mut basis = Vec::with_capacity(rows_in.len());
        let (mut slack, mut art) = (n, n_real);
        for (coeffs, rel, b) in rows_in {
            let mut row = coeffs;
            row.resize(width, Scalar::zero());
            match rel {
                Relation::Le => {
                    row[slack] = Scalar::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -Scalar::one();
                    slack += 1;
                    row[art] = Scalar::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = Scalar::one();
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        Tableau {
            rows,
            rhs,
            basis,
            obj: Vec::new(),
            obj_rhs: Scalar::zero(),
            n_struct: n,
            n_real,
        }
    }

    fn width(&self) -> usize {
        self.rows.first().map_or(self.n_real, Vec::len)
    }

    /// Loads `max cost·x` as the objective row, priced out against the basis.
    fn set_objective(&mut self, cost: &[Scalar]) {
        let w = self.width();
        self.obj = (0..w)
            .map(|j| cost.get(j).map_or_else(Scalar::zero, |c| -c))
            .collect();
        self.obj_rhs = Scalar::zero();
        for r in 0..self.rows.len() {
            let b = self.basis[r];
            let factor = self.obj[b].clone();
            if factor.is_zero() {
                continue;
            }
            for (o, v) in self.obj.iter_mut().zip(&self.rows[r]) {
                if !v.is_zero() {
                    *o -= &factor * v;
                }
            }
            self.obj_rhs -= &factor * &self.rhs[r];
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let inv = Scalar::one() / &self.rows[r][e];
        let support: Vec<usize> = {
            let row = &mut self.rows[r];
            let mut support = Vec::new();
            for (j, v) in row.iter_mut().enumerate() {
                if !v.is_zero() {
                    *v *= &inv;
                    support.push(j);
                }
            }
            support
        };
        self.rhs[r] *= &inv;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let pivot_rhs = self.rhs[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let factor = row[e].clone();
            for &j in &support {
                row[j] -= &factor * &pivot_row[j];
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        if !self.obj[e].is_zero() {
            let factor = self.obj[e].clone();
            for &j in &support {
                self.obj[j] -= &factor * &pivot_row[j];
            }
            self.obj_rhs -= &factor * &pivot_rhs;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = e;
    }

    /// Maximizes over columns `< limit`. Returns false when unbounded.
    ///
    /// Entering columns follow the most negative reduced cost; after a
    /// degenerate pivot Bland's rule takes over until the objective moves
    /// again, which rules out cycling.
    fn optimize(&mut self, limit: usize) -> bool {
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..limit).find(|&j| self.obj[j].is_negative())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..limit {
                    if self.obj[j].is_negative() && best.is_none_or(|b| self.obj[j] < self.obj[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else {
                return true;
            };
            let mut best: Option<(usize, Scalar)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[e].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / &row[e];
                let better = match &best {
                    None => true,
                    Some((br, bv)) => {
                        ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, step)) => {
                    bland = step.is_zero();
                    self.pivot(r, e);
                }
                None => return false,
            }
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let width = self.width();
        if width > self.n_real {
            let phase1: Vec<Scalar> = (0..width)
                .map(|j| {
                    if j >= self.n_real {
                        -Scalar::one()
                    } else {
                        Scalar::zero()
                    }
                })
                .collect();
            self.set_objective(&phase1);
            if !self.optimize(width) {
                return Err(Error::Lp("phase one reported unbounded".into()));
            }
            if self.obj_rhs.is_negative() {
                return Ok(LpOutcome::Infeasible);
            }
            self.drive_out_artificials();
            for row in &mut self.rows {
                row.truncate(self.n_real);
            }
        }

        let cost: Vec<Scalar> = match lp.sense {
            Sense::Maximize => lp.objective.clone(),
            Sense::Minimize => lp.objective.iter().map(|c| -c).collect(),
        };
        self.set_objective(&cost);
        if !self.optimize(self.n_real) {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![Scalar::zero(); self.n_struct];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.rhs[r].clone();
            }
        }
        let value = lp.objective_value(&x);
        if !lp.is_feasible(&x) {
            return Err(Error::Internal(
                "simplex vertex violates a constraint".into(),
            ));
        }
        Ok(LpOutcome::Optimal { x, value })
    }

    /// Pivots zero-level artificials out of the basis, dropping rows that
    /// turn out to be redundant.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < self.n_real {
                r += 1;
                continue;
            }
            match (0..self.n_real).find(|&j| !self.rows[r][j].is_zero()) {
                Some(e) => {
                    self.pivot(r, e);
                    r += 1;
                }
                None => {
                    self.rows.remove(r);
                    self.rhs.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }
}
