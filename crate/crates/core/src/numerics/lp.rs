use crate::error::{Error, Result};

/// `maximize objective·x  s.t.  eq_matrix·x = eq_rhs,  x >= lower_bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    /// Constraint rows; each row has `objective.len()` entries.
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Defaults to zero when empty.
    pub lower_bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

const PIVOT_EPS: f64 = 1e-11;

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        self.rhs[r] /= p;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                self.rows[i].iter_mut().zip(&prow).for_each(|(v, pv)| *v -= f * pv);
                self.rhs[i] -= f * prhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-12 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Primal simplex with Bland's rule over columns `< ncols`.
    fn optimize(&mut self, cost: &[f64], ncols: usize) -> Result<()> {
        let m = self.rows.len();
        // Bland's rule terminates; the cap only guards against float trouble
        for _ in 0..10_000 {
            let entering = (0..ncols).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let rc = cost[j] - (0..m).map(|i| cost[self.basis[i]] * self.rows[i][j]).sum::<f64>();
                rc > PIVOT_EPS
            });
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[i].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, c);
        }
        Err(Error::InvalidArgument("simplex iteration cap reached".into()))
    }
}

/// Dense two-phase simplex with Bland's anti-cycling rule. Returns an optimal
/// basic solution.
pub fn lp_solve(p: &LpProblem, feas_tol: f64) -> Result<LpSolution> {
    let n = p.objective.len();
    let m = p.eq_matrix.len();
    if p.eq_rhs.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: p.eq_rhs.len() });
    }
    if let Some(row) = p.eq_matrix.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: row.len() });
    }
    let lb = if p.lower_bounds.is_empty() {
        vec![0.0; n]
    } else if p.lower_bounds.len() == n {
        p.lower_bounds.clone()
    } else {
        return Err(Error::DimensionMismatch { expected: n, got: p.lower_bounds.len() });
    };

    // shift to y = x - lb >= 0 and make the right-hand side nonnegative
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, row) in p.eq_matrix.iter().enumerate() {
        let mut b = p.eq_rhs[i] - row.iter().zip(&lb).map(|(a, l)| a * l).sum::<f64>();
        let mut r = row.clone();
        if b < 0.0 {
            b = -b;
            r.iter_mut().for_each(|v| *v = -*v);
        }
        r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        rows.push(r);
        rhs.push(b);
    }
    let scale = 1.0 + rhs.iter().fold(0.0_f64, |a, b| a.max(*b));
    let mut t = Tableau { rows, rhs, basis: (n..n + m).collect() };

    // phase 1
    let mut cost1 = vec![0.0; n + m];
    cost1[n..].iter_mut().for_each(|c| *c = -1.0);
    t.optimize(&cost1, n + m)?;
    let infeas: f64 = (0..m).filter(|&i| t.basis[i] >= n).map(|i| t.rhs[i]).sum();
    if infeas > feas_tol * scale {
        return Err(Error::Infeasible);
    }
    // drive artificials out of the basis; rows that cannot pivot are redundant
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.rows[i][j].abs() > 1e-9) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    // phase 2
    let mut cost2 = p.objective.clone();
    cost2.extend(std::iter::repeat_n(0.0, m));
    t.optimize(&cost2, n)?;

    let mut x = lb;
    for (i, &j) in t.basis.iter().enumerate() {
        x[j] += t.rhs[i].max(0.0);
    }
    let value = x.iter().zip(&p.objective).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, value })
}
