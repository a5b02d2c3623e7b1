//! Dense maximization LPs with finite variable bounds and `≤` rows, solved by a
//! bounded-variable two-phase primal simplex.
//!
//! Nonbasic variables sit at either bound; slacks are unbounded above. Pricing is Dantzig's
//! largest reduced cost until 30 consecutive pivots fail to improve the objective, after which
//! Bland's smallest-index rule takes over for the rest of the phase.

use std::fmt::Write as _;

use thiserror::Error;

/// Minimum magnitude of a pivot element.
pub const PIVOT_TOL: f64 = 1e-9;
/// Constraint slack accepted in a returned solution.
pub const FEAS_TOL: f64 = 1e-8;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_STREAK: usize = 30;
/// Cap on enumerated integral variables in [`solve_ip_bruteforce`].
pub const MAX_INTEGRAL_VARS: usize = 25;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    RowWidth { row: usize, got: usize, expected: usize },
    #[error("variable {0} has invalid bounds")]
    Bounds(String),
    #[error("{0} integral variables exceed the brute-force limit of {MAX_INTEGRAL_VARS}")]
    TooManyIntegral(usize),
    #[error("integral variable index {0} out of range")]
    BadIndex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// `max c·x  s.t.  A x ≤ b,  lo ≤ x ≤ hi`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    rows: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> usize {
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(objective);
        for row in &mut self.rows {
            row.coeffs.push(0.0);
        }
        self.names.len() - 1
    }

    /// Adds `Σ coeff·x ≤ rhs` from sparse `(var, coeff)` terms; repeated vars accumulate.
    pub fn add_le(&mut self, terms: &[(usize, f64)], rhs: f64) -> usize {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(v, c) in terms {
            coeffs[v] += c;
        }
        self.rows.push(Constraint { coeffs, rhs });
        self.rows.len() - 1
    }

    pub fn add_row(&mut self, row: Constraint) {
        self.rows.push(row);
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for (r, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::RowWidth {
                    row: r,
                    got: row.coeffs.len(),
                    expected: n,
                });
            }
        }
        for v in 0..n {
            let (lo, hi) = (self.lower[v], self.upper[v]);
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(LpError::Bounds(self.names[v].clone()));
            }
        }
        Ok(())
    }

    /// `c·x`
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in values.iter().enumerate() {
            worst = worst.max(self.lower[v] - x).max(x - self.upper[v]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(values).map(|(a, x)| a * x).sum();
            worst = worst.max(lhs - row.rhs);
        }
        worst
    }

    /// Fixed-width text dump: one `VAR` line per variable, one `ROW` line per constraint
    /// listing its nonzero terms.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "LP {} vars {} rows (maximize)", self.num_vars(), self.num_rows());
        for v in 0..self.num_vars() {
            let _ = writeln!(
                out,
                "VAR {:>6} {:<24} {:>14.6e} {:>14.6e} {:>14.6e}",
                v, self.names[v], self.lower[v], self.upper[v], self.objective[v]
            );
        }
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "ROW {:>6} LE {:>14.6e} :", r, row.rhs);
            for (v, &a) in row.coeffs.iter().enumerate() {
                if a != 0.0 {
                    let _ = write!(out, " {:>6}*{:<.6e}", v, a);
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m × ncols` matrix `B⁻¹ [A I R]`.
    a: Vec<f64>,
    /// Values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    /// Upper bound of every column (slacks and artificials use ∞ / 0 after phase one).
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    artificial_start: usize,
}

impl Tableau {
    fn col(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.ncols + c]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * self.ncols..(r + 1) * self.ncols];
                for (dj, &arj) in d.iter_mut().zip(row) {
                    *dj -= cb * arj;
                }
            }
        }
        d
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let n = self.ncols;
        let piv = self.a[pr * n + pc];
        for c in 0..n {
            self.a[pr * n + c] /= piv;
        }
        let pivot_row: Vec<f64> = self.a[pr * n..(pr + 1) * n].to_vec();
        for r in 0..self.m {
            if r == pr {
                continue;
            }
            let f = self.a[r * n + pc];
            if f != 0.0 {
                let row = &mut self.a[r * n..(r + 1) * n];
                for (x, &p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        }
    }

    /// Runs simplex iterations on `cost` (maximize). Returns `false` on iteration limit.
    fn optimize(&mut self, cost: &[f64], phase: Phase, max_iter: usize, iterations: &mut usize) -> bool {
        let mut d = self.reduced_costs(cost);
        let mut obj = self.objective_value(cost);
        let mut stall = 0usize;
        let mut bland = false;
        loop {
            if *iterations >= max_iter {
                return false;
            }
            // entering column
            let mut enter = None;
            let mut best = 0.0;
            for c in 0..self.ncols {
                if self.is_basic[c] {
                    continue;
                }
                if phase == Phase::Two && c >= self.artificial_start {
                    continue;
                }
                if self.upper[c] <= 0.0 {
                    continue;
                }
                let improving = if self.at_upper[c] { -d[c] } else { d[c] };
                if improving > COST_TOL {
                    if bland {
                        enter = Some(c);
                        break;
                    }
                    if improving > best {
                        best = improving;
                        enter = Some(c);
                    }
                }
            }
            let Some(q) = enter else { return true };
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };

            // ratio test; theta is the step length of x_q in direction dir
            let mut theta = self.upper[q];
            let mut leave: Option<(usize, bool)> = None;
            for r in 0..self.m {
                let alpha = dir * self.col(r, q);
                let b = self.basis[r];
                let (limit, to_upper) = if alpha > PIVOT_TOL {
                    (self.beta[r] / alpha, false)
                } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[r]) / -alpha, true)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leave {
                    _ if limit < theta - 1e-12 => true,
                    Some((lr, _)) if limit <= theta + 1e-12 => {
                        if bland {
                            b < self.basis[lr]
                        } else {
                            alpha.abs() > (dir * self.col(lr, q)).abs()
                        }
                    }
                    None if limit <= theta + 1e-12 && limit < self.upper[q] => true,
                    _ => false,
                };
                if better {
                    theta = theta.min(limit);
                    leave = Some((r, to_upper));
                }
            }
            if !theta.is_finite() {
                // Unbounded cannot happen with finite variable bounds; treat as numerical failure.
                return false;
            }
            *iterations += 1;

            // update basic values
            for r in 0..self.m {
                let alpha = self.col(r, q);
                if alpha != 0.0 {
                    self.beta[r] -= dir * theta * alpha;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    let entering_value = if self.at_upper[q] { self.upper[q] - theta } else { theta };
                    self.pivot(r, q);
                    self.is_basic[out] = false;
                    self.at_upper[out] = to_upper;
                    self.is_basic[q] = true;
                    self.at_upper[q] = false;
                    self.basis[r] = q;
                    self.beta[r] = entering_value;
                    d = self.reduced_costs(cost);
                }
            }
            for r in 0..self.m {
                // clamp tiny negative noise
                if self.beta[r] < 0.0 && self.beta[r] > -1e-11 {
                    self.beta[r] = 0.0;
                }
            }
            let new_obj = self.objective_value(cost);
            if new_obj > obj + 1e-12 {
                stall = 0;
            } else {
                stall += 1;
                if stall >= DEGENERATE_STREAK {
                    bland = true;
                }
            }
            obj = new_obj;
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.ncols)
            .map(|c| if self.at_upper[c] { self.upper[c] } else { 0.0 })
            .collect();
        for r in 0..self.m {
            x[self.basis[r]] = self.beta[r];
        }
        x
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        let mut v = 0.0;
        for c in 0..self.ncols {
            if !self.is_basic[c] && self.at_upper[c] {
                v += cost[c] * self.upper[c];
            }
        }
        for r in 0..self.m {
            v += cost[self.basis[r]] * self.beta[r];
        }
        v
    }
}

/// Solves `lp` to optimality. Deterministic: identical input gives bitwise identical output.
pub fn solve_max(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check()?;
    let n = lp.num_vars();
    let m = lp.num_rows();

    // shift x = lo + x', 0 ≤ x' ≤ hi - lo
    let rhs: Vec<f64> = lp
        .rows
        .iter()
        .map(|row| row.rhs - row.coeffs.iter().zip(&lp.lower).map(|(a, l)| a * l).sum::<f64>())
        .collect();
    let negative: Vec<usize> = (0..m).filter(|&r| rhs[r] < 0.0).collect();
    let n_art = negative.len();
    let ncols = n + m + n_art;
    let artificial_start = n + m;

    let mut a = vec![0.0; m * ncols];
    let mut beta = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut art_of_row = vec![None; m];
    for (k, &r) in negative.iter().enumerate() {
        art_of_row[r] = Some(artificial_start + k);
    }
    for r in 0..m {
        let sign = if art_of_row[r].is_some() { -1.0 } else { 1.0 };
        for v in 0..n {
            a[r * ncols + v] = sign * lp.rows[r].coeffs[v];
        }
        a[r * ncols + n + r] = sign;
        beta[r] = sign * rhs[r];
        match art_of_row[r] {
            Some(c) => {
                a[r * ncols + c] = 1.0;
                basis[r] = c;
            }
            None => basis[r] = n + r,
        }
    }
    let mut upper = Vec::with_capacity(ncols);
    upper.extend((0..n).map(|v| lp.upper[v] - lp.lower[v]));
    upper.extend(std::iter::repeat(f64::INFINITY).take(m + n_art));
    let mut is_basic = vec![false; ncols];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut tab = Tableau {
        m,
        ncols,
        a,
        beta,
        basis,
        upper,
        at_upper: vec![false; ncols],
        is_basic,
        artificial_start,
    };

    let max_iter = 50 * (m + ncols) + 10_000;
    let mut iterations = 0;

    if n_art > 0 {
        let mut cost1 = vec![0.0; ncols];
        for c in cost1.iter_mut().skip(artificial_start) {
            *c = -1.0;
        }
        if !tab.optimize(&cost1, Phase::One, max_iter, &mut iterations) {
            return Ok(failed(lp, LpStatus::IterationLimit, iterations));
        }
        if tab.objective_value(&cost1) < -FEAS_TOL {
            return Ok(failed(lp, LpStatus::Infeasible, iterations));
        }
        for c in artificial_start..ncols {
            tab.upper[c] = 0.0;
        }
        for r in 0..m {
            if tab.basis[r] >= artificial_start {
                tab.beta[r] = 0.0;
            }
        }
    }

    let mut cost2 = vec![0.0; ncols];
    cost2[..n].copy_from_slice(&lp.objective);
    if !tab.optimize(&cost2, Phase::Two, max_iter, &mut iterations) {
        return Ok(failed(lp, LpStatus::IterationLimit, iterations));
    }

    let cols = tab.column_values();
    let values: Vec<f64> = (0..n)
        .map(|v| (lp.lower[v] + cols[v]).clamp(lp.lower[v], lp.upper[v]))
        .collect();
    let objective = lp.evaluate(&values);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        values,
        objective,
        iterations,
    })
}

fn failed(lp: &LinearProgram, status: LpStatus, iterations: usize) -> LpSolution {
    LpSolution {
        status,
        values: vec![0.0; lp.num_vars()],
        objective: f64::NAN,
        iterations,
    }
}

/// Exact optimum with the listed variables restricted to `{0, 1}` (their bounds must allow
/// both), remaining variables continuous. Depth-first enumeration with row-feasibility pruning;
/// each complete 0/1 assignment solves the residual LP over the continuous variables.
pub fn solve_ip_bruteforce(lp: &LinearProgram, integral_vars: &[usize]) -> Result<LpSolution, LpError> {
    lp.check()?;
    if integral_vars.len() > MAX_INTEGRAL_VARS {
        return Err(LpError::TooManyIntegral(integral_vars.len()));
    }
    if let Some(&bad) = integral_vars.iter().find(|&&v| v >= lp.num_vars()) {
        return Err(LpError::BadIndex(bad));
    }
    if integral_vars.is_empty() {
        return solve_max(lp);
    }
    let mut is_int = vec![false; lp.num_vars()];
    for &v in integral_vars {
        is_int[v] = true;
    }
    let continuous: Vec<usize> = (0..lp.num_vars()).filter(|&v| !is_int[v]).collect();

    // Minimum possible contribution of the continuous part of each row.
    let cont_min: Vec<f64> = lp
        .rows
        .iter()
        .map(|row| {
            continuous
                .iter()
                .map(|&v| {
                    let a = row.coeffs[v];
                    (a * lp.lower[v]).min(a * lp.upper[v])
                })
                .sum()
        })
        .collect();

    let mut search = IpSearch {
        lp,
        ints: integral_vars,
        continuous: &continuous,
        cont_min: &cont_min,
        fixed: vec![0.0; lp.num_vars()],
        best: None,
        iterations: 0,
    };
    let mut partial = vec![0.0; lp.num_rows()];
    search.descend(0, &mut partial);
    Ok(search
        .best
        .unwrap_or_else(|| failed(lp, LpStatus::Infeasible, search.iterations)))
}

struct IpSearch<'a> {
    lp: &'a LinearProgram,
    ints: &'a [usize],
    continuous: &'a [usize],
    cont_min: &'a [f64],
    fixed: Vec<f64>,
    best: Option<LpSolution>,
    iterations: usize,
}

impl IpSearch<'_> {
    /// `partial[r]` is the row activity of the already-fixed integral variables.
    fn descend(&mut self, depth: usize, partial: &mut Vec<f64>) {
        if depth == self.ints.len() {
            self.leaf(partial);
            return;
        }
        let v = self.ints[depth];
        for value in [0.0, 1.0] {
            if value < self.lp.lower[v] - 1e-12 || value > self.lp.upper[v] + 1e-12 {
                continue;
            }
            for (r, p) in partial.iter_mut().enumerate() {
                *p += self.lp.rows[r].coeffs[v] * value;
            }
            let rest_min = |r: usize| -> f64 {
                self.ints[depth + 1..]
                    .iter()
                    .map(|&u| {
                        let a = self.lp.rows[r].coeffs[u];
                        (a * self.lp.lower[u].max(0.0)).min(a * self.lp.upper[u].min(1.0))
                    })
                    .sum::<f64>()
            };
            let ok = (0..self.lp.num_rows())
                .all(|r| partial[r] + self.cont_min[r] + rest_min(r) <= self.lp.rows[r].rhs + FEAS_TOL);
            if ok {
                self.fixed[v] = value;
                self.descend(depth + 1, partial);
            }
            for (r, p) in partial.iter_mut().enumerate() {
                *p -= self.lp.rows[r].coeffs[v] * value;
            }
        }
    }

    fn leaf(&mut self, partial: &[f64]) {
        let lp = self.lp;
        let mut values = self.fixed.clone();
        if !self.continuous.is_empty() {
            // residual LP over the continuous variables, keeping only rows that involve them
            let mut sub = LinearProgram::new();
            for &v in self.continuous {
                sub.add_var(lp.names[v].clone(), lp.lower[v], lp.upper[v], lp.objective[v]);
            }
            for (r, row) in lp.rows.iter().enumerate() {
                let terms: Vec<(usize, f64)> = self
                    .continuous
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| row.coeffs[v] != 0.0)
                    .map(|(k, &v)| (k, row.coeffs[v]))
                    .collect();
                if terms.is_empty() {
                    if partial[r] > row.rhs + FEAS_TOL {
                        return;
                    }
                } else {
                    sub.add_le(&terms, row.rhs - partial[r]);
                }
            }
            let Ok(sol) = solve_max(&sub) else { return };
            self.iterations += sol.iterations;
            if sol.status != LpStatus::Optimal {
                return;
            }
            for (k, &v) in self.continuous.iter().enumerate() {
                values[v] = sol.values[k];
            }
        } else if lp.max_violation(&values) > FEAS_TOL {
            return;
        }
        let objective = lp.evaluate(&values);
        if self.best.as_ref().is_none_or(|b| objective > b.objective + 1e-12) {
            self.best = Some(LpSolution {
                status: LpStatus::Optimal,
                values,
                objective,
                iterations: self.iterations,
            });
        }
    }
}
