//! Dense two-phase primal simplex.
//!
//! Minimizes `c . v` over `{ v >= 0 : A v (= | <=) b }`. The tableau is
//! stored densely; this is intended for desk-scale models (up to roughly
//! 10^4 variables), where sparse machinery would buy nothing.
//!
//! Pivoting uses Bland's rule on both the entering and leaving choice: the
//! entering column is the lowest-index column with a negative reduced cost
//! (the scan stops at the first hit, so most iterations price only a prefix
//! of the columns), and ratio-test ties leave the lowest-index basic
//! variable. This cannot cycle and makes every solve bit-reproducible.
//!
//! Phase 1 starts from slack columns where possible and artificial columns
//! elsewhere, minimizing the artificial sum; no big-M terms appear anywhere.
//! Dual values are read off the final reduced-cost row at each row's initial
//! unit column, giving optimality certificates without a second solver.

use crate::error::Error;

/// Smallest pivot element magnitude the ratio test will accept.
pub const PIVOT_TOL: f64 = 1e-10;
/// Phase-1 residual above which the model is declared infeasible; also the
/// per-row feasibility guarantee of a returned solution.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Guaranteed bound on final negative reduced costs.
pub const OPTIMALITY_TOL: f64 = 1e-7;
/// Reduced-cost threshold for admitting an entering column; tighter than
/// `OPTIMALITY_TOL` so the guarantee holds with slack.
const ENTERING_TOL: f64 = 1e-9;
/// Hard pivot budget; hitting it is reported, never silently truncated.
pub const MAX_PIVOTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
}

/// A dense LP in natural form; all variables are implicitly nonnegative.
#[derive(Clone, Debug)]
pub struct DenseLp {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    /// Variables pinned to zero; their columns never enter the basis.
    pub fixed_zero: Vec<bool>,
}

impl DenseLp {
    pub fn new(objective: Vec<f64>) -> DenseLp {
        let n = objective.len();
        DenseLp {
            objective,
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            fixed_zero: vec![false; n],
        }
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Clone, Debug)]
pub struct SimplexSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    /// One dual multiplier per input row (free on `=` rows, nonpositive on
    /// `<=` rows under minimization).
    pub duals: Vec<f64>,
    pub pivots: usize,
}

struct Tableau {
    m: usize,
    n_struct: usize,
    art_start: usize,
    cols: usize,
    /// m rows of `cols + 1` entries; the last entry is the rhs.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost rows for the two phases; last entry is minus the
    /// phase objective.
    phase1: Vec<f64>,
    phase2: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    enterable: Vec<bool>,
    flipped: Vec<bool>,
    unit_col: Vec<usize>,
    pivots: usize,
    has_artificials: bool,
}

impl Tableau {
    fn build(lp: &DenseLp) -> Tableau {
        let m = lp.n_rows();
        let n = lp.n_vars();
        let flipped: Vec<bool> = lp.rhs.iter().map(|&b| b < 0.0).collect();

        let n_slack = lp.senses.iter().filter(|s| **s == Sense::Le).count();
        // A row needs an artificial unless its slack can start in the basis,
        // which requires the slack coefficient to stay +1 after flipping.
        let needs_artificial: Vec<bool> = (0..m)
            .map(|i| lp.senses[i] == Sense::Eq || flipped[i])
            .collect();
        let n_art = needs_artificial.iter().filter(|&&x| x).count();
        let art_start = n + n_slack;
        let cols = art_start + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut unit_col = Vec::with_capacity(m);
        let mut slack_at = n;
        let mut art_at = art_start;
        for i in 0..m {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            let mut row = vec![0.0; cols + 1];
            for j in 0..n {
                row[j] = sign * lp.rows[i][j];
            }
            if lp.senses[i] == Sense::Le {
                row[slack_at] = sign;
                slack_at += 1;
            }
            if needs_artificial[i] {
                row[art_at] = 1.0;
                basis.push(art_at);
                unit_col.push(art_at);
                art_at += 1;
            } else {
                // Unflipped <= row: its slack starts basic.
                basis.push(slack_at - 1);
                unit_col.push(slack_at - 1);
            }
            row[cols] = sign * lp.rhs[i];
            rows.push(row);
        }

        let mut in_basis = vec![false; cols];
        for &b in &basis {
            in_basis[b] = true;
        }
        // Artificials never (re-)enter; fixed variables never enter.
        let mut enterable = vec![true; cols];
        for j in art_start..cols {
            enterable[j] = false;
        }
        for (j, &fixed) in lp.fixed_zero.iter().enumerate() {
            if fixed {
                enterable[j] = false;
            }
        }

        // Phase-1 costs: 1 on artificials, priced out over the initial basis.
        let mut phase1 = vec![0.0; cols + 1];
        for j in art_start..cols {
            phase1[j] = 1.0;
        }
        for i in 0..m {
            if basis[i] >= art_start {
                for j in 0..=cols {
                    phase1[j] -= rows[i][j];
                }
            }
        }
        // Phase-2 costs: the real objective; initial basic columns all cost 0.
        let mut phase2 = vec![0.0; cols + 1];
        phase2[..n].copy_from_slice(&lp.objective);

        Tableau {
            m,
            n_struct: n,
            art_start,
            cols,
            rows,
            phase1,
            phase2,
            basis,
            in_basis,
            enterable,
            flipped,
            unit_col,
            pivots: 0,
            has_artificials: n_art > 0,
        }
    }

    /// Lowest-index enterable column with negative reduced cost.
    fn entering(&self, phase_one: bool) -> Option<usize> {
        let costs = if phase_one { &self.phase1 } else { &self.phase2 };
        (0..self.cols).find(|&j| {
            self.enterable[j] && !self.in_basis[j] && costs[j] < -ENTERING_TOL
        })
    }

    /// Minimum-ratio row; ties leave the lowest-index basic variable.
    fn leaving(&self, enter: usize) -> Option<usize> {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..self.m {
            let a = self.rows[i][enter];
            if a > PIVOT_TOL {
                let ratio = self.rows[i][self.cols].max(0.0) / a;
                let replace = match best {
                    None => true,
                    Some((r, var, _)) => {
                        ratio < r || (ratio == r && self.basis[i] < var)
                    }
                };
                if replace {
                    best = Some((ratio, self.basis[i], i));
                }
            }
        }
        best.map(|(_, _, i)| i)
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<(), Error> {
        if self.pivots >= MAX_PIVOTS {
            return Err(Error::PivotLimit {
                limit: MAX_PIVOTS,
                objective: -self.phase2[self.cols],
            });
        }
        self.pivots += 1;

        let piv = self.rows[row][col];
        let inv = 1.0 / piv;
        for x in self.rows[row].iter_mut() {
            *x *= inv;
        }
        self.rows[row][col] = 1.0;

        for i in 0..self.m {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for j in 0..=self.cols {
                    self.rows[i][j] -= factor * self.rows[row][j];
                }
                self.rows[i][col] = 0.0;
            }
        }
        for costs in [&mut self.phase1, &mut self.phase2] {
            let factor = costs[col];
            if factor != 0.0 {
                for j in 0..=self.cols {
                    costs[j] -= factor * self.rows[row][j];
                }
                costs[col] = 0.0;
            }
        }

        self.in_basis[self.basis[row]] = false;
        self.basis[row] = col;
        self.in_basis[col] = true;
        Ok(())
    }

    fn run(&mut self, phase_one: bool) -> Result<(), Error> {
        while let Some(enter) = self.entering(phase_one) {
            let Some(leave) = self.leaving(enter) else {
                return Err(Error::Unbounded);
            };
            self.pivot(leave, enter)?;
        }
        Ok(())
    }

    /// Pivot basic artificials out where possible; rows that cannot shed
    /// theirs are redundant and keep the artificial basic at value zero.
    fn drive_out_artificials(&mut self) -> Result<(), Error> {
        for i in 0..self.m {
            if self.basis[i] < self.art_start {
                continue;
            }
            let col = (0..self.art_start).find(|&j| {
                self.enterable[j]
                    && !self.in_basis[j]
                    && self.rows[i][j].abs() > PIVOT_TOL
            });
            if let Some(j) = col {
                self.pivot(i, j)?;
            }
        }
        Ok(())
    }
}

pub fn solve(lp: &DenseLp) -> Result<SimplexSolution, Error> {
    if lp.n_rows() == 0 || lp.n_vars() == 0 {
        return Err(Error::InvalidParameter(
            "simplex needs at least one row and one variable".into(),
        ));
    }
    for row in &lp.rows {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite coefficient in LP row".into(),
            ));
        }
    }

    let mut t = Tableau::build(lp);
    if t.has_artificials {
        t.run(true).map_err(|e| match e {
            // Phase-1 objective is bounded below by zero; an unbounded ray
            // here means the tableau is corrupt, not the model.
            Error::Unbounded => Error::Internal("phase 1 reported unbounded".into()),
            other => other,
        })?;
        let residual = -t.phase1[t.cols];
        if residual > FEASIBILITY_TOL {
            return Err(Error::Infeasible { residual });
        }
        t.drive_out_artificials()?;
    }
    t.run(false)?;

    let mut values = vec![0.0; t.n_struct];
    for i in 0..t.m {
        if t.basis[i] < t.n_struct {
            values[t.basis[i]] = t.rows[i][t.cols].max(0.0);
        }
    }
    let objective = lp
        .objective
        .iter()
        .zip(&values)
        .map(|(c, v)| c * v)
        .sum();
    let duals = (0..t.m)
        .map(|i| {
            let y_internal = -t.phase2[t.unit_col[i]];
            if t.flipped[i] {
                -y_internal
            } else {
                y_internal
            }
        })
        .collect();
    Ok(SimplexSolution {
        values,
        objective,
        duals,
        pivots: t.pivots,
    })
}
