//! Exact rational simplex.
//!
//! Two-phase primal simplex over arbitrary-precision rationals with Bland's
//! pivoting rule, so every run is deterministic and cycle-free. Problem
//! variables are unrestricted in sign; they are split into nonnegative pairs
//! internally. No tolerances anywhere: a feasibility or optimality verdict is
//! exact.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) type Rat = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowRel {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    /// Dense coefficients over the problem variables.
    pub coeffs: Vec<Rat>,
    pub rel: RowRel,
    pub rhs: Rat,
}

#[derive(Debug, Clone)]
pub(crate) enum LpResult {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, point: Vec<Rat> },
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LpProblem {
    pub num_vars: usize,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<Rat>, rel: RowRel, rhs: Rat) {
        debug_assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(LpRow { coeffs, rel, rhs });
    }

    /// Maximize `objective . x` subject to the rows. Free variables.
    pub fn maximize(&self, objective: &[Rat]) -> LpResult {
        debug_assert_eq!(objective.len(), self.num_vars);
        Tableau::solve(self, objective)
    }

    /// Any feasible point, or None when the system is infeasible.
    pub fn feasible_point(&self) -> Option<Vec<Rat>> {
        let zero_obj = vec![Rat::zero(); self.num_vars];
        match self.maximize(&zero_obj) {
            LpResult::Optimal { point, .. } => Some(point),
            LpResult::Unbounded => unreachable!("zero objective cannot be unbounded"),
            LpResult::Infeasible => None,
        }
    }
}

/// Dense simplex tableau in equality standard form.
///
/// Columns: `2 * num_vars` split variables (x = pos - neg), then one slack per
/// `Le` row, then one artificial per row (phase 1 only).
struct Tableau {
    /// rows[i] has the coefficients of structural + slack + artificial columns.
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
    n_struct: usize,
    n_slack: usize,
}

impl Tableau {
    fn solve(problem: &LpProblem, objective: &[Rat]) -> LpResult {
        let m = problem.rows.len();
        let n_struct = 2 * problem.num_vars;
        let n_slack = problem
            .rows
            .iter()
            .filter(|r| matches!(r.rel, RowRel::Le))
            .count();
        let n_total = n_struct + n_slack + m;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack_idx = 0;
        for (i, row) in problem.rows.iter().enumerate() {
            let mut dense = vec![Rat::zero(); n_total];
            let flip = row.rhs.is_negative();
            for (j, c) in row.coeffs.iter().enumerate() {
                let c = if flip { -c.clone() } else { c.clone() };
                dense[2 * j] = c.clone();
                dense[2 * j + 1] = -c;
            }
            if matches!(row.rel, RowRel::Le) {
                let s = n_struct + slack_idx;
                dense[s] = if flip { -Rat::one() } else { Rat::one() };
                slack_idx += 1;
            }
            let art = n_struct + n_slack + i;
            dense[art] = Rat::one();
            rows.push(dense);
            rhs.push(if flip { -row.rhs.clone() } else { row.rhs.clone() });
            basis.push(art);
        }

        let mut t = Tableau {
            rows,
            rhs,
            basis,
            n_struct,
            n_slack,
        };

        // Phase 1: minimize the sum of artificials.
        let mut phase1 = vec![Rat::zero(); n_total];
        for slot in phase1.iter_mut().skip(n_struct + n_slack) {
            *slot = -Rat::one();
        }
        let (value, _) = t.optimize(&phase1, n_total);
        if !value.is_zero() {
            return LpResult::Infeasible;
        }
        t.evict_artificials();

        // Phase 2 over structural + slack columns only.
        let n_cols = n_struct + n_slack;
        let mut phase2 = vec![Rat::zero(); n_cols];
        for (j, c) in objective.iter().enumerate() {
            phase2[2 * j] = c.clone();
            phase2[2 * j + 1] = -c.clone();
        }
        let (value, bounded) = t.optimize(&phase2, n_cols);
        if !bounded {
            return LpResult::Unbounded;
        }
        let mut point = vec![Rat::zero(); problem.num_vars];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < t.n_struct {
                let var = b / 2;
                if b % 2 == 0 {
                    point[var] += t.rhs[i].clone();
                } else {
                    point[var] -= t.rhs[i].clone();
                }
            }
        }
        LpResult::Optimal { value, point }
    }

    /// Bland's rule simplex over the first `n_cols` columns.
    /// Returns (objective value, bounded).
    fn optimize(&mut self, obj: &[Rat], n_cols: usize) -> (Rat, bool) {
        loop {
            // Reduced costs from the current basis.
            let mut entering = None;
            for j in 0..n_cols {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut reduced = obj[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if b < obj.len() && !obj[b].is_zero() && !self.rows[i][j].is_zero() {
                        reduced -= obj[b].clone() * self.rows[i][j].clone();
                    }
                }
                if reduced.is_positive() {
                    entering = Some(j);
                    break; // Bland: lowest eligible index.
                }
            }
            let Some(j) = entering else {
                let mut value = Rat::zero();
                for (i, &b) in self.basis.iter().enumerate() {
                    if b < obj.len() && !obj[b].is_zero() {
                        value += obj[b].clone() * self.rhs[i].clone();
                    }
                }
                return (value, true);
            };

            // Ratio test; ties broken by the lowest basis index (Bland).
            let mut leaving: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if a.is_positive() {
                    let ratio = self.rhs[i].clone() / a.clone();
                    let better = match &leaving {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((i, _)) = leaving else {
                return (Rat::zero(), false);
            };
            self.pivot(i, j);
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let p = self.rows[pr][pc].clone();
        for v in self.rows[pr].iter_mut() {
            *v /= p.clone();
        }
        self.rhs[pr] /= p;
        let pivot_row = self.rows[pr].clone();
        let pivot_rhs = self.rhs[pr].clone();
        for i in 0..self.rows.len() {
            if i == pr {
                continue;
            }
            let f = self.rows[i][pc].clone();
            if f.is_zero() {
                continue;
            }
            for (k, pv) in pivot_row.iter().enumerate() {
                if !pv.is_zero() {
                    let d = pv.clone() * f.clone();
                    self.rows[i][k] -= d;
                }
            }
            self.rhs[i] -= pivot_rhs.clone() * f;
        }
        self.basis[pr] = pc;
    }

    /// After phase 1, pivot any artificial still in the basis out of it, or
    /// drop its (redundant) row when no real column is available.
    fn evict_artificials(&mut self) {
        let real = self.n_struct + self.n_slack;
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= real {
                debug_assert!(self.rhs[i].is_zero());
                let col = (0..real).find(|&j| !self.rows[i][j].is_zero());
                match col {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for row in self.rows.iter_mut() {
            row.truncate(real);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn frac(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn maximize_bounded() {
        // max x + y s.t. x <= 3, y <= 4, x + y <= 5
        let mut p = LpProblem::new(2);
        p.push(vec![rat(1), rat(0)], RowRel::Le, rat(3));
        p.push(vec![rat(0), rat(1)], RowRel::Le, rat(4));
        p.push(vec![rat(1), rat(1)], RowRel::Le, rat(5));
        match p.maximize(&[rat(1), rat(1)]) {
            LpResult::Optimal { value, point } => {
                assert_eq!(value, rat(5));
                assert_eq!(point[0].clone() + point[1].clone(), rat(5));
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_direction() {
        // max x s.t. x >= 0 (i.e. -x <= 0)
        let mut p = LpProblem::new(1);
        p.push(vec![rat(-1)], RowRel::Le, rat(0));
        assert!(matches!(p.maximize(&[rat(1)]), LpResult::Unbounded));
    }

    #[test]
    fn infeasible_system() {
        let mut p = LpProblem::new(1);
        p.push(vec![rat(1)], RowRel::Le, rat(0));
        p.push(vec![rat(-1)], RowRel::Le, rat(-1)); // x >= 1
        assert!(matches!(p.maximize(&[rat(1)]), LpResult::Infeasible));
    }

    #[test]
    fn free_variables_go_negative() {
        // max -x s.t. x >= -7/2: optimum 7/2 at x = -7/2
        let mut p = LpProblem::new(1);
        p.push(vec![rat(-1)], RowRel::Le, frac(7, 2));
        match p.maximize(&[rat(-1)]) {
            LpResult::Optimal { value, point } => {
                assert_eq!(value, frac(7, 2));
                assert_eq!(point[0], frac(-7, 2));
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn equality_rows() {
        // max y s.t. x + y = 2, x - y = 0 -> x = y = 1
        let mut p = LpProblem::new(2);
        p.push(vec![rat(1), rat(1)], RowRel::Eq, rat(2));
        p.push(vec![rat(1), rat(-1)], RowRel::Eq, rat(0));
        match p.maximize(&[rat(0), rat(1)]) {
            LpResult::Optimal { value, point } => {
                assert_eq!(value, rat(1));
                assert_eq!(point, vec![rat(1), rat(1)]);
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn redundant_rows_survive_phase1() {
        // x = 1 stated twice plus an implied inequality.
        let mut p = LpProblem::new(1);
        p.push(vec![rat(1)], RowRel::Eq, rat(1));
        p.push(vec![rat(1)], RowRel::Eq, rat(1));
        p.push(vec![rat(1)], RowRel::Le, rat(1));
        match p.maximize(&[rat(1)]) {
            LpResult::Optimal { value, .. } => assert_eq!(value, rat(1)),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn exact_fractions() {
        // max x s.t. 3x <= 1 -> x = 1/3 exactly
        let mut p = LpProblem::new(1);
        p.push(vec![rat(3)], RowRel::Le, rat(1));
        match p.maximize(&[rat(1)]) {
            LpResult::Optimal { value, point } => {
                assert_eq!(value, frac(1, 3));
                assert_eq!(point[0], frac(1, 3));
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_witness() {
        let mut p = LpProblem::new(2);
        p.push(vec![rat(1), rat(1)], RowRel::Le, rat(4));
        p.push(vec![rat(-1), rat(0)], RowRel::Le, rat(0));
        p.push(vec![rat(0), rat(-1)], RowRel::Le, rat(0));
        let a = p.maximize(&[rat(1), rat(1)]);
        let b = p.maximize(&[rat(1), rat(1)]);
        match (a, b) {
            (LpResult::Optimal { point: pa, .. }, LpResult::Optimal { point: pb, .. }) => {
                assert_eq!(pa, pb);
            }
            _ => panic!("expected optima"),
        }
    }
}
