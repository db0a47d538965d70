//! Dense two-phase simplex for small standard-form programs
//! `min cᵀx  s.t.  A x = b, x ≥ 0`, using Bland's rule throughout.

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;
/// Basic values this small are degenerate; keeping them exactly zero makes
/// ratio ties exact, which Bland's anti-cycling argument relies on.
const ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    /// Pivot budget exhausted; only reachable through numerical trouble.
    IterationLimit,
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    rows: usize,
    /// Structural + artificial columns; the right-hand side sits at index `cols`.
    cols: usize,
    t: Vec<Vec<f64>>,
    /// Reduced costs; entry `cols` holds `−objective`.
    d: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.t[r][col];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (k, row) in self.t.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        let f = self.d[col];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.d[col] = 0.0;
        }
        self.basis[r] = col;
        let rhs = self.cols;
        for row in self.t.iter_mut() {
            if row[rhs].abs() < ZERO_TOL {
                row[rhs] = 0.0;
            }
        }
    }

    /// Runs Bland's rule over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> Phase {
        let budget = 50 * (self.rows + self.cols + 1);
        for _ in 0..budget {
            let Some(col) = (0..allowed).find(|&j| self.d[j] < -COST_TOL) else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.t[r][col];
                if a > PIVOT_TOL {
                    let ratio = self.t[r][self.cols].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, best)) => {
                            let tol = 1e-12 * (1.0 + best);
                            ratio < best - tol
                                || (ratio <= best + tol && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, col),
                None => return Phase::Unbounded,
            }
        }
        Phase::IterationLimit
    }
}

/// Solves `min cᵀx, A x = b, x ≥ 0` with `A` given row by row.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "rhs length");
    assert!(a.iter().all(|row| row.len() == n), "row length");

    let cols = n + m;
    let mut t = Vec::with_capacity(m);
    for (r, row) in a.iter().enumerate() {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        let mut line = vec![0.0; cols + 1];
        for (j, &v) in row.iter().enumerate() {
            line[j] = sign * v;
        }
        line[n + r] = 1.0;
        line[cols] = sign * b[r];
        t.push(line);
    }
    // phase 1: minimize the sum of artificials
    let mut d = vec![0.0; cols + 1];
    for line in &t {
        for j in 0..n {
            d[j] -= line[j];
        }
        d[cols] -= line[cols];
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        d,
        basis: (n..n + m).collect(),
    };
    if let Phase::IterationLimit = tab.optimize(cols) {
        return LpOutcome::IterationLimit;
    }
    let infeasibility = -tab.d[cols];
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > FEAS_TOL * scale {
        return LpOutcome::Infeasible;
    }

    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| tab.t[r][j].abs() > 1e-9) {
                tab.pivot(r, j);
            }
        }
    }

    // phase 2
    let mut d = vec![0.0; cols + 1];
    d[..n].copy_from_slice(c);
    for r in 0..m {
        let bc = if tab.basis[r] < n { c[tab.basis[r]] } else { 0.0 };
        if bc != 0.0 {
            for (v, tv) in d.iter_mut().zip(&tab.t[r]) {
                *v -= bc * tv;
            }
        }
    }
    for r in 0..m {
        d[tab.basis[r]] = 0.0;
    }
    tab.d = d;
    match tab.optimize(n) {
        Phase::Optimal => {}
        Phase::Unbounded => return LpOutcome::Unbounded,
        Phase::IterationLimit => return LpOutcome::IterationLimit,
    }

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.t[r][cols].max(0.0);
        }
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, objective }
}
