//! Dense linear programming: problem/solution types, a deterministic
//! two-phase simplex solver, and the polyhedron type reward sets are built on.
//!
//! Everything in this crate reduces to small dense LPs (at most a few dozen
//! rows and ~10³ columns), so the solver is tuned for exact status
//! classification and reproducibility rather than speed: dense tableau,
//! largest-reduced-cost pivoting with lowest-index tie-breaking, and a
//! permanent switch to Bland's anti-cycling rule if an instance degenerates.
//! The same inputs always produce the same vertex, bit for bit, which the
//! experiment harness relies on for byte-identical result files.

use serde::Serialize;

/// Feasibility tolerance: a point satisfies a constraint if the violation,
/// relative to the row's scale, is below this.
pub const TOL_FEAS: f64 = 1e-9;

/// Pivot elements at or below this magnitude are never used; a column whose
/// only positive entries are this small signals numerical failure rather
/// than unboundedness.
pub const PIVOT_TOL: f64 = 1e-10;

/// Reduced costs above this are considered improving.
const DUAL_TOL: f64 = 1e-9;

/// Outcome classification of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    /// A finite maximizer exists; the solution holds a vertex attaining it.
    Optimal,
    /// No point satisfies all constraints.
    Infeasible,
    /// The objective is unbounded above on the feasible set.
    Unbounded,
    /// Pivoting broke down (repeated sub-tolerance pivots or iteration cap).
    NumericFailure,
}

/// A linear program in the general form
/// `maximize c·x  s.t.  A_ineq·x ≤ b_ineq,  A_eq·x = b_eq,  lower ≤ x ≤ upper`,
/// with ±∞ bounds allowed.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub a_ineq: Vec<Vec<f64>>,
    pub b_ineq: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// An empty problem over `n` free variables with a zero objective.
    pub fn new(n: usize) -> Self {
        LpProblem {
            objective: vec![0.0; n],
            a_ineq: Vec::new(),
            b_ineq: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    fn assert_consistent(&self) {
        let n = self.n_vars();
        assert_eq!(self.lower.len(), n, "lower-bound length mismatch");
        assert_eq!(self.upper.len(), n, "upper-bound length mismatch");
        assert_eq!(self.a_ineq.len(), self.b_ineq.len(), "inequality row/rhs count mismatch");
        assert_eq!(self.a_eq.len(), self.b_eq.len(), "equality row/rhs count mismatch");
        for row in self.a_ineq.iter().chain(self.a_eq.iter()) {
            assert_eq!(row.len(), n, "constraint row length mismatch");
        }
    }
}

/// Result of [`solve_lp`]. `x` and `objective_value` are meaningful only
/// when `status == Optimal`.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    fn non_optimal(status: LpStatus, n: usize) -> Self {
        LpSolution { status, x: vec![0.0; n], objective_value: f64::NAN }
    }
}

/// A polyhedron `{x : A_ineq·x ≤ b_ineq, A_eq·x = b_eq, lower ≤ x ≤ upper}`
/// with variable labels for diagnostics. Reward sets are values of this type;
/// membership is [`check_feasible`] and selection is [`optimize_over`].
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintSystem {
    pub a_ineq: Vec<Vec<f64>>,
    pub b_ineq: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub names: Vec<String>,
}

impl ConstraintSystem {
    /// An unconstrained system over `n` variables named `x0..x{n-1}`.
    pub fn new(n: usize) -> Self {
        ConstraintSystem {
            a_ineq: Vec::new(),
            b_ineq: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            names: (0..n).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn name_vars(&mut self, names: impl IntoIterator<Item = String>) {
        let names: Vec<String> = names.into_iter().collect();
        assert_eq!(names.len(), self.n_vars(), "one name per variable");
        self.names = names;
    }

    pub fn add_ineq(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.n_vars(), "row length mismatch");
        self.a_ineq.push(row);
        self.b_ineq.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.n_vars(), "row length mismatch");
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    /// Attaches an objective, yielding a solvable problem over the same polyhedron.
    pub fn to_problem(&self, objective: Vec<f64>) -> LpProblem {
        assert_eq!(objective.len(), self.n_vars(), "objective length mismatch");
        LpProblem {
            objective,
            a_ineq: self.a_ineq.clone(),
            b_ineq: self.b_ineq.clone(),
            a_eq: self.a_eq.clone(),
            b_eq: self.b_eq.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    /// Diagnostic dump of the polyhedron (all blocks and labels) as JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constraint system serializes")
    }
}

/// True iff `x` satisfies every row and bound of `cs` within `tol`.
pub fn check_feasible(cs: &ConstraintSystem, x: &[f64], tol: f64) -> bool {
    assert_eq!(x.len(), cs.n_vars(), "point dimension mismatch");
    let dot = |row: &[f64]| -> f64 { row.iter().zip(x).map(|(a, b)| a * b).sum() };
    for (row, &b) in cs.a_ineq.iter().zip(&cs.b_ineq) {
        if dot(row) > b + tol {
            return false;
        }
    }
    for (row, &b) in cs.a_eq.iter().zip(&cs.b_eq) {
        if (dot(row) - b).abs() > tol {
            return false;
        }
    }
    for ((&xj, &lo), &hi) in x.iter().zip(&cs.lower).zip(&cs.upper) {
        if xj < lo - tol || xj > hi + tol {
            return false;
        }
    }
    true
}

/// Maximizes `objective` over the polyhedron `cs`.
pub fn optimize_over(cs: &ConstraintSystem, objective: &[f64]) -> LpSolution {
    solve_lp(&cs.to_problem(objective.to_vec()))
}

// ---------------------------------------------------------------------------
// Solver internals
// ---------------------------------------------------------------------------

/// How one original variable maps into the nonnegative standard-form space:
/// `x_j = offset_j + Σ sign_k · y_k` over the column(s) owned by `j`.
struct StdColumn {
    var: usize,
    sign: f64,
}

/// Solves the LP with a two-phase dense simplex method.
///
/// Bounded variables are shifted/flipped/split into nonnegative standard
/// form; remaining finite upper bounds become explicit rows. Phase 1 drives
/// artificial variables out (classifying infeasibility), phase 2 maximizes.
/// An empty box (`lower > upper` anywhere) is reported as `Infeasible`
/// rather than panicking, since reward sets may legitimately collapse.
pub fn solve_lp(p: &LpProblem) -> LpSolution {
    p.assert_consistent();
    let n = p.n_vars();

    for j in 0..n {
        if p.lower[j] > p.upper[j] {
            return LpSolution::non_optimal(LpStatus::Infeasible, n);
        }
        assert!(!p.lower[j].is_nan() && !p.upper[j].is_nan(), "NaN bound on variable {j}");
    }

    // --- Standard-form transformation -------------------------------------
    let mut offsets = vec![0.0; n];
    let mut columns: Vec<StdColumn> = Vec::with_capacity(n + 4);
    // (column index, residual upper bound) pairs that become explicit rows.
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        if lo.is_finite() {
            offsets[j] = lo;
            columns.push(StdColumn { var: j, sign: 1.0 });
            if hi.is_finite() {
                upper_rows.push((columns.len() - 1, hi - lo));
            }
        } else if hi.is_finite() {
            // x = hi − y with y ≥ 0.
            offsets[j] = hi;
            columns.push(StdColumn { var: j, sign: -1.0 });
        } else {
            // Free variable: x = y⁺ − y⁻.
            columns.push(StdColumn { var: j, sign: 1.0 });
            columns.push(StdColumn { var: j, sign: -1.0 });
        }
    }
    let n_struct = columns.len();

    let std_row = |row: &[f64]| -> Vec<f64> {
        columns.iter().map(|c| c.sign * row[c.var]).collect()
    };
    let offset_shift = |row: &[f64]| -> f64 { row.iter().zip(&offsets).map(|(a, o)| a * o).sum() };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut is_eq: Vec<bool> = Vec::new();
    for (row, &b) in p.a_ineq.iter().zip(&p.b_ineq) {
        rows.push(std_row(row));
        rhs.push(b - offset_shift(row));
        is_eq.push(false);
    }
    for &(col, ub) in &upper_rows {
        let mut row = vec![0.0; n_struct];
        row[col] = 1.0;
        rows.push(row);
        rhs.push(ub);
        is_eq.push(false);
    }
    for (row, &b) in p.a_eq.iter().zip(&p.b_eq) {
        rows.push(std_row(row));
        rhs.push(b - offset_shift(row));
        is_eq.push(true);
    }
    let m = rows.len();

    let mut c_std = vec![0.0; n_struct];
    for (k, col) in columns.iter().enumerate() {
        c_std[k] = col.sign * p.objective[col.var];
    }

    // --- Tableau assembly ---------------------------------------------------
    // Columns: [structural | slacks | artificials], RHS kept separately ≥ 0.
    let n_slack = is_eq.iter().filter(|&&eq| !eq).count();
    let mut tableau: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut artificials: Vec<usize> = Vec::new();
    let total_cols = n_struct + n_slack + m; // artificial block is generously sized
    let mut slack_idx = 0;
    for i in 0..m {
        let mut t_row = vec![0.0; total_cols];
        let negate = rhs[i] < 0.0;
        let s = if negate { -1.0 } else { 1.0 };
        for (k, v) in rows[i].iter().enumerate() {
            t_row[k] = s * v;
        }
        let mut b_i = s * rhs[i];
        if b_i == 0.0 {
            b_i = 0.0; // normalize −0.0 so later comparisons are clean
        }
        let basic = if !is_eq[i] {
            let sc = n_struct + slack_idx;
            slack_idx += 1;
            t_row[sc] = s;
            if negate {
                // Surplus slack can't serve as a basis column; add an artificial.
                let ac = n_struct + n_slack + artificials.len();
                t_row[ac] = 1.0;
                artificials.push(ac);
                ac
            } else {
                sc
            }
        } else {
            let ac = n_struct + n_slack + artificials.len();
            t_row[ac] = 1.0;
            artificials.push(ac);
            ac
        };
        t_row.push(b_i);
        tableau.push(t_row);
        basis.push(basic);
    }
    let n_art = artificials.len();
    let used_cols = n_struct + n_slack + n_art;
    // Trim the over-allocated artificial block (keep RHS as the last entry).
    for row in tableau.iter_mut() {
        let b = *row.last().expect("rhs present");
        row.truncate(used_cols);
        row.push(b);
    }

    let mut st = Simplex { tableau, basis, n_cols: used_cols, iterations: 0 };

    // --- Phase 1 --------------------------------------------------------------
    if n_art > 0 {
        let mut phase1_cost = vec![0.0; used_cols];
        for &a in &artificials {
            phase1_cost[a] = -1.0;
        }
        // The phase-1 objective is bounded above by 0, so an "unbounded"
        // outcome can only be numerical.
        match st.run(&phase1_cost) {
            RunOutcome::Finished => {}
            RunOutcome::Unbounded | RunOutcome::Failed => {
                return LpSolution::non_optimal(LpStatus::NumericFailure, n);
            }
        }
        let infeas: f64 = st
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= n_struct + n_slack)
            .map(|(i, _)| st.rhs(i))
            .sum();
        let scale = 1.0 + rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if infeas > TOL_FEAS * scale {
            return LpSolution::non_optimal(LpStatus::Infeasible, n);
        }
        // Pivot remaining zero-level artificials out; drop genuinely redundant rows.
        let art_start = n_struct + n_slack;
        let mut drop_rows: Vec<usize> = Vec::new();
        for i in 0..st.tableau.len() {
            if st.basis[i] < art_start {
                continue;
            }
            let pivot_col = (0..art_start)
                .find(|&j| st.tableau[i][j].abs() > PIVOT_TOL);
            match pivot_col {
                Some(j) => st.pivot(i, j),
                None => drop_rows.push(i),
            }
        }
        for &i in drop_rows.iter().rev() {
            st.tableau.remove(i);
            st.basis.remove(i);
        }
        // Erase the artificial block so phase 2 can never re-enter it.
        for row in st.tableau.iter_mut() {
            let b = *row.last().expect("rhs present");
            row.truncate(art_start);
            row.push(b);
        }
        st.n_cols = art_start;
    }

    // --- Phase 2 --------------------------------------------------------------
    let mut phase2_cost = vec![0.0; st.n_cols];
    phase2_cost[..n_struct].copy_from_slice(&c_std);
    match st.run(&phase2_cost) {
        RunOutcome::Finished => {}
        RunOutcome::Unbounded => return LpSolution::non_optimal(LpStatus::Unbounded, n),
        RunOutcome::Failed => return LpSolution::non_optimal(LpStatus::NumericFailure, n),
    }

    // --- Recover the original-space vertex ------------------------------------
    let mut y = vec![0.0; n_struct];
    for (i, &b) in st.basis.iter().enumerate() {
        if b < n_struct {
            y[b] = st.rhs(i);
        }
    }
    let mut x = offsets;
    for (k, col) in columns.iter().enumerate() {
        x[col.var] += col.sign * y[k];
    }
    let objective_value: f64 = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

    // Guard against silent drift: a claimed optimum must actually be feasible.
    if !solution_feasible(p, &x) {
        return LpSolution::non_optimal(LpStatus::NumericFailure, n);
    }
    LpSolution { status: LpStatus::Optimal, x, objective_value }
}

/// Row-scaled feasibility verification of a claimed solution.
fn solution_feasible(p: &LpProblem, x: &[f64]) -> bool {
    let dot = |row: &[f64]| -> f64 { row.iter().zip(x).map(|(a, b)| a * b).sum() };
    let row_scale = |row: &[f64], b: f64| -> f64 {
        1.0 + b.abs() + row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    };
    // The simplex accumulates error across pivots; 1e3·TOL_FEAS per unit row
    // scale is far below anything the polyhedra here care about (≥ 1e-8).
    let tol = 1e3 * TOL_FEAS;
    for (row, &b) in p.a_ineq.iter().zip(&p.b_ineq) {
        if dot(row) - b > tol * row_scale(row, b) {
            return false;
        }
    }
    for (row, &b) in p.a_eq.iter().zip(&p.b_eq) {
        if (dot(row) - b).abs() > tol * row_scale(row, b) {
            return false;
        }
    }
    for ((&xj, &lo), &hi) in x.iter().zip(&p.lower).zip(&p.upper) {
        let s = 1.0 + xj.abs();
        if xj < lo - tol * s || xj > hi + tol * s {
            return false;
        }
    }
    true
}

enum RunOutcome {
    Finished,
    Unbounded,
    Failed,
}

struct Simplex {
    /// `tableau[i]` holds the row coefficients followed by the RHS.
    tableau: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_cols: usize,
    iterations: usize,
}

impl Simplex {
    fn rhs(&self, i: usize) -> f64 {
        self.tableau[i][self.n_cols]
    }

    /// Runs simplex iterations maximizing `cost·y` until no reduced cost
    /// improves, the problem proves unbounded, or pivoting breaks down.
    fn run(&mut self, cost: &[f64]) -> RunOutcome {
        let m = self.tableau.len();
        let enterable = self.n_cols;
        // Switch to Bland's rule (guaranteed finite) once Dantzig has had a
        // generous budget; hard-cap as a final numerical backstop.
        let bland_after = 500 + 20 * (m + self.n_cols);
        let hard_cap = 10 * bland_after + 10_000;
        loop {
            self.iterations += 1;
            if self.iterations > hard_cap {
                return RunOutcome::Failed;
            }
            let bland = self.iterations > bland_after;

            // Reduced costs from scratch each iteration: O(m·n), the same
            // order as one pivot, and immune to objective-row drift.
            let mut reduced: Vec<f64> = cost[..enterable].to_vec();
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = cost[b];
                if cb == 0.0 {
                    continue;
                }
                let row = &self.tableau[i];
                for (j, r) in reduced.iter_mut().enumerate() {
                    *r -= cb * row[j];
                }
            }

            // Entering candidates in preference order.
            let mut candidates: Vec<usize> = (0..enterable)
                .filter(|&j| reduced[j] > DUAL_TOL)
                .collect();
            if candidates.is_empty() {
                return RunOutcome::Finished;
            }
            if !bland {
                candidates.sort_by(|&a, &b| {
                    reduced[b].total_cmp(&reduced[a]).then(a.cmp(&b))
                });
            } // Bland: already in ascending column order.

            let mut saw_tiny_pivot = false;
            let mut entered = false;
            for &j in &candidates {
                // Ratio test over denominators above PIVOT_TOL.
                let mut best: Option<(f64, usize)> = None; // (ratio, row)
                let mut tiny = false;
                for i in 0..m {
                    let a_ij = self.tableau[i][j];
                    if a_ij > PIVOT_TOL {
                        let ratio = self.rhs(i) / a_ij;
                        let better = match best {
                            None => true,
                            Some((r, bi)) => {
                                ratio < r
                                    || (ratio == r
                                        && if bland {
                                            self.basis[i] < self.basis[bi]
                                        } else {
                                            i < bi
                                        })
                            }
                        };
                        if better {
                            best = Some((ratio, i));
                        }
                    } else if a_ij > 0.0 {
                        tiny = true;
                    }
                }
                match best {
                    Some((_, i)) => {
                        self.pivot(i, j);
                        entered = true;
                        break;
                    }
                    None if tiny => {
                        saw_tiny_pivot = true;
                        continue; // try the next candidate column
                    }
                    None => return RunOutcome::Unbounded,
                }
            }
            if !entered {
                // Every improving column was blocked by sub-tolerance pivots.
                debug_assert!(saw_tiny_pivot);
                return RunOutcome::Failed;
            }
        }
    }

    fn pivot(&mut self, pivot_row: usize, pivot_col: usize) {
        let m = self.tableau.len();
        let width = self.n_cols + 1;
        let inv = 1.0 / self.tableau[pivot_row][pivot_col];
        for v in self.tableau[pivot_row].iter_mut() {
            *v *= inv;
        }
        self.tableau[pivot_row][pivot_col] = 1.0;
        for i in 0..m {
            if i == pivot_row {
                continue;
            }
            let factor = self.tableau[i][pivot_col];
            if factor == 0.0 {
                continue;
            }
            // Split borrow: the pivot row is read-only during elimination.
            let (pr, cur) = if i < pivot_row {
                let (head, tail) = self.tableau.split_at_mut(pivot_row);
                (&tail[0], &mut head[i])
            } else {
                let (head, tail) = self.tableau.split_at_mut(i);
                (&head[pivot_row], &mut tail[0])
            };
            for k in 0..width {
                cur[k] -= factor * pr[k];
            }
            cur[pivot_col] = 0.0;
            // Keep RHS nonnegative against rounding.
            if cur[width - 1] < 0.0 && cur[width - 1] > -1e-12 {
                cur[width - 1] = 0.0;
            }
        }
        self.basis[pivot_row] = pivot_col;
    }
}
