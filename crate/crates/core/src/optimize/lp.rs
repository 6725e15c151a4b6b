//! Dense two-phase simplex for the small bounded LPs of the trust-region
//! step: `min c.x  s.t.  A x <= b,  lo <= x <= hi`.
//!
//! Bland's rule prevents cycling. Problem sizes are a handful of variables
//! and rows, so the full tableau is kept.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpError {
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-11;

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        for i in 0..self.t.len() {
            if i != r {
                let f = self.t[i][c];
                if f != 0.0 {
                    for j in 0..=self.cols {
                        let delta = f * self.t[r][j];
                        self.t[i][j] -= delta;
                    }
                    self.t[i][c] = 0.0;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over the columns allowed by `usable`.
    fn optimize(&mut self, cost: &[f64], usable: &dyn Fn(usize) -> bool) -> Result<(), LpError> {
        let rows = self.t.len();
        let max_iter = 50 * (rows + self.cols) + 100;
        for _ in 0..max_iter {
            // Reduced costs: cost_j - sum_i cost_basis(i) * t[i][j].
            let entering = (0..self.cols).filter(|&j| usable(j)).find(|&j| {
                let z: f64 = (0..rows).map(|i| cost[self.basis[i]] * self.t[i][j]).sum();
                cost[j] - z < -EPS
            });
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..rows {
                let a = self.t[i][c];
                if a > EPS {
                    let ratio = self.t[i][self.cols] / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => ratio < lr - EPS || (ratio <= lr + EPS && self.basis[i] < self.basis[li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return Err(LpError::Unbounded) };
            self.pivot(r, c);
        }
        Ok(())
    }
}

pub(crate) fn solve(c: &[f64], a: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>, LpError> {
    let n = c.len();
    // Shift to y = x - lo >= 0 and turn finite upper bounds into rows.
    let mut rows: Vec<(Vec<f64>, f64)> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| (row.clone(), bi - row.iter().zip(lo).map(|(p, q)| p * q).sum::<f64>()))
        .collect();
    for i in 0..n {
        if hi[i].is_finite() {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            rows.push((row, hi[i] - lo[i]));
        }
    }
    let m = rows.len();
    let n_art = rows.iter().filter(|(_, r)| *r < 0.0).count();
    // Columns: y (n), slacks (m), artificials (n_art).
    let cols = n + m + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let mut k = 0;
    for (i, (row, rhs)) in rows.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * row[j];
        }
        t[i][n + i] = sign;
        t[i][cols] = sign * rhs;
        if *rhs < 0.0 {
            t[i][n + m + k] = 1.0;
            basis[i] = n + m + k;
            k += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let mut tab = Tableau { t, basis, cols };

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        for v in cost.iter_mut().skip(n + m) {
            *v = 1.0;
        }
        tab.optimize(&cost, &|_| true)?;
        let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n + m).map(|i| tab.t[i][cols]).sum();
        let scale = 1.0 + rows.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return Err(LpError::Infeasible);
        }
        // Drive remaining artificials (at zero) out of the basis.
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| tab.t[i][j].abs() > EPS) {
                    tab.pivot(i, j);
                }
            }
        }
    }
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(c);
    tab.optimize(&cost, &|j| j < n + m)?;

    let mut y = vec![0.0; n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            y[bv] = tab.t[i][cols];
        }
    }
    Ok(y.iter().zip(lo).zip(hi).map(|((v, l), h)| (l + v).clamp(*l, *h)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6)
        let x = solve(
            &[-3.0, -5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
            &[0.0, 0.0],
            &[f64::INFINITY, f64::INFINITY],
        )
        .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn negative_bounds_and_rhs() {
        // min x + y  s.t. -x - y <= -1 on [-2, 2]^2  ->  x + y = 1
        let x = solve(&[1.0, 1.0], &[vec![-1.0, -1.0]], &[-1.0], &[-2.0, -2.0], &[2.0, 2.0]).unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
        // min x on [-1, 1]  ->  -1
        assert_eq!(solve(&[1.0], &[], &[], &[-1.0], &[1.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let r = solve(&[0.0], &[vec![1.0]], &[-5.0], &[0.0], &[1.0]);
        assert_eq!(r, Err(LpError::Infeasible));
        let r = solve(&[-1.0], &[], &[], &[0.0], &[f64::INFINITY]);
        assert_eq!(r, Err(LpError::Unbounded));
    }

    #[test]
    fn tiny_coefficients() {
        let x = solve(
            &[0.0, 0.0, 0.0, 1.0],
            &[vec![-2.1e-9 / 57.0, -17.9 / 57.0, 54.4 / 57.0, -1.0 / 57.0]],
            &[-0.057 / 57.0],
            &[-0.0015625, -0.0015625, -2.04e-5, 0.0],
            &[0.0015625, 0.0015625, 0.0015625, f64::INFINITY],
        )
        .unwrap();
        let g = 0.057 - 17.9 * x[1] + 54.4 * x[2];
        assert!((x[3] - g).abs() < 1e-9, "{x:?}");
    }
}
