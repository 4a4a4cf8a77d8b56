//! Dense two-phase simplex with Bland's rule, for small LPs.

use crate::{Error, Result};

const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;
const INFEASIBLE: &str = "infeasible";

/// `min c.x` subject to `a_ub x <= b_ub`, `a_eq x = b_eq`, `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Multipliers of the inequality rows (all `<= 0`).
    pub y_ub: Vec<f64>,
    pub y_eq: Vec<f64>,
    /// `|c.x - b.y|`.
    pub gap: f64,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows + 1` rows of `cols + 1` entries; the last row is the objective,
    /// the last column the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.at(r, c);
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, c);
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * self.t[r * w + j];
                }
            }
        }
        self.basis[r] = c;
    }

    /// Loads `cost` into the objective row as reduced costs.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        let obj = self.rows * w;
        for j in 0..w {
            self.t[obj + j] = if j < self.cols { cost[j] } else { 0.0 };
        }
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    self.t[obj + j] -= cb * self.t[r * w + j];
                }
            }
        }
    }

    /// Bland's rule over the columns `allowed` admits.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool, pivots: &mut usize) -> Result<()> {
        loop {
            let Some(c) = (0..self.cols).find(|&j| allowed(j) && self.at(self.rows, j) < -EPS) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize)> = None;
            for r in 0..self.rows {
                let a = self.at(r, c);
                if a > EPS {
                    let ratio = self.at(r, self.cols) / a;
                    let better = match best {
                        None => true,
                        Some((q, br)) => ratio < q - EPS || (ratio <= q + EPS && self.basis[r] < self.basis[br]),
                    };
                    if better {
                        best = Some((ratio, r));
                    }
                }
            }
            let Some((_, r)) = best else {
                return Err(Error::Solver(format!("unbounded objective along column {c}")));
            };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::Solver(format!(
                    "no convergence after {MAX_PIVOTS} pivots; basis {:?}, rhs {:?}",
                    self.basis,
                    (0..self.rows).map(|r| self.at(r, self.cols)).collect::<Vec<_>>()
                )));
            }
        }
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.c.len();
        let mu = self.a_ub.len();
        let me = self.a_eq.len();
        let m = mu + me;
        if self.b_ub.len() != mu || self.b_eq.len() != me {
            return Err(Error::InvalidInput("constraint and bound counts differ".into()));
        }
        if self.a_ub.iter().chain(&self.a_eq).any(|r| r.len() != n) {
            return Err(Error::InvalidInput("constraint row has the wrong width".into()));
        }
        // columns: x (n), slacks (mu), artificials (m)
        let cols = n + mu + m;
        let w = cols + 1;
        let mut t = vec![0.0; (m + 1) * w];
        let mut sign = vec![1.0; m];
        for i in 0..m {
            let (row, b) = if i < mu { (&self.a_ub[i], self.b_ub[i]) } else { (&self.a_eq[i - mu], self.b_eq[i - mu]) };
            let s = if b < 0.0 { -1.0 } else { 1.0 };
            sign[i] = s;
            for j in 0..n {
                t[i * w + j] = s * row[j];
            }
            if i < mu {
                t[i * w + n + i] = s;
            }
            t[i * w + n + mu + i] = 1.0;
            t[i * w + cols] = s * b;
        }
        let mut tab = Tableau { rows: m, cols, t, basis: (n + mu..cols).collect() };
        let art = n + mu;
        let mut pivots = 0;

        let phase1: Vec<f64> = (0..cols).map(|j| if j >= art { 1.0 } else { 0.0 }).collect();
        tab.set_objective(&phase1);
        tab.optimize(|_| true, &mut pivots)?;
        let infeas = -tab.at(m, cols);
        if infeas > 1e-9 {
            return Err(Error::Solver(format!("{INFEASIBLE}: phase one residual {infeas}")));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art {
                if let Some(c) = (0..art).find(|&j| tab.at(r, j).abs() > 1e-9) {
                    tab.pivot(r, c);
                }
            }
        }

        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(&self.c);
        tab.set_objective(&cost);
        tab.optimize(|j| j < art, &mut pivots)?;

        let mut x = vec![0.0; n];
        for r in 0..m {
            if tab.basis[r] < n {
                x[tab.basis[r]] = tab.at(r, cols);
            }
        }
        // reduced cost of artificial i is -y'_i for the sign-adjusted row
        let y: Vec<f64> = (0..m).map(|i| -sign[i] * tab.at(m, art + i)).collect();
        let value: f64 = self.c.iter().zip(&x).map(|(a, b)| a * b).sum();
        let (y_ub, y_eq) = (y[..mu].to_vec(), y[mu..].to_vec());
        let dual: f64 = self.b_ub.iter().zip(&y_ub).chain(self.b_eq.iter().zip(&y_eq)).map(|(b, y)| b * y).sum();
        let sol = LpSolution { x, value, y_ub, y_eq, gap: (value - dual).abs() };
        self.certify(&sol)?;
        Ok(sol)
    }

    /// Whether the constraints admit any point; the objective is ignored.
    pub fn feasible(&self) -> Result<bool> {
        let lp = Self { c: vec![0.0; self.c.len()], ..self.clone() };
        match lp.solve() {
            Ok(_) => Ok(true),
            Err(Error::Solver(msg)) if msg.starts_with(INFEASIBLE) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Primal and dual feasibility within `1e-9` and a duality gap of at most `1e-7`.
    pub fn certify(&self, s: &LpSolution) -> Result<()> {
        let tol = 1e-9;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let primal = s.x.iter().all(|&v| v >= -tol)
            && self.a_ub.iter().zip(&self.b_ub).all(|(r, &b)| dot(r, &s.x) <= b + tol)
            && self.a_eq.iter().zip(&self.b_eq).all(|(r, &b)| (dot(r, &s.x) - b).abs() <= tol);
        let dual_sign = s.y_ub.iter().all(|&y| y <= tol);
        let dual_rows = (0..self.c.len()).all(|j| {
            let aty: f64 = self.a_ub.iter().zip(&s.y_ub).map(|(r, y)| r[j] * y).sum::<f64>()
                + self.a_eq.iter().zip(&s.y_eq).map(|(r, y)| r[j] * y).sum::<f64>();
            aty <= self.c[j] + tol
        });
        if !(primal && dual_sign && dual_rows && s.gap <= 1e-7) {
            return Err(Error::Solver(format!(
                "certificate check failed (primal {primal}, dual sign {dual_sign}, dual rows {dual_rows}, gap {}); x = {:?}",
                s.gap, s.x
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18
        let lp = LinearProgram {
            c: vec![-3.0, -5.0],
            a_ub: vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            b_ub: vec![4.0, 12.0, 18.0],
            a_eq: vec![],
            b_eq: vec![],
        };
        let s = lp.solve().unwrap();
        assert!((s.value + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        assert!(s.gap < 1e-9);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min x + 2y st x + y = 1, -x <= -0.25
        let lp = LinearProgram {
            c: vec![1.0, 2.0],
            a_ub: vec![vec![-1.0, 0.0]],
            b_ub: vec![-0.25],
            a_eq: vec![vec![1.0, 1.0]],
            b_eq: vec![1.0],
        };
        let s = lp.solve().unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = LinearProgram { c: vec![1.0], a_ub: vec![vec![1.0]], b_ub: vec![-1.0], a_eq: vec![], b_eq: vec![] };
        assert!(matches!(inf.solve(), Err(Error::Solver(_))));
        let unb = LinearProgram { c: vec![-1.0], a_ub: vec![], b_ub: vec![], a_eq: vec![], b_eq: vec![] };
        assert!(matches!(unb.solve(), Err(Error::Solver(_))));
    }

    #[test]
    fn degenerate_redundant_rows() {
        let lp = LinearProgram {
            c: vec![1.0, 1.0],
            a_ub: vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0]],
            b_ub: vec![0.0, 0.0, 0.0],
            a_eq: vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            b_eq: vec![1.0, 2.0],
        };
        let s = lp.solve().unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }
}
