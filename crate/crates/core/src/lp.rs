//! The fractional relaxation of the min-max clustering objective.
//!
//! Variables, in model order: `y_f` (open share per facility, declared
//! order), `x_{f,p}` (assignment share, facility-major), and a final budget
//! variable `gamma`. Constraint rows, in model order:
//!
//! 1. `sum_f y_f = k`
//! 2. `sum_f x_{f,p} = 1` for every point, in declared order
//! 3. `sum_{p in group} sum_f cost_{f,p} x_{f,p} - gamma <= 0` per group
//! 4. `x_{f,p} - y_f <= 0` for every pair, facility-major
//!
//! with every variable nonnegative and `cost_{f,p} = d(f,p)^z * w(p)`.
//! Minimizing `gamma` lower-bounds the best integral objective: any size-k
//! center set induces a feasible 0/1 point with objective equal to its
//! fair cost.

use serde::Serialize;

use crate::cost::pow_z;
use crate::error::Error;
use crate::instance::Instance;
use crate::simplex::{self, DenseLp, Sense};

/// Assignment cost coefficients larger than `OVERFLOW_RATIO` times the
/// smallest nonzero coefficient get their `x` variable pinned to zero, so a
/// handful of enormous distances cannot poison the tableau. Each point keeps
/// its cheapest pair regardless, preserving feasibility.
pub const OVERFLOW_RATIO: f64 = 1e15;

/// Residual budget accepted from the simplex before a solution is rejected
/// as corrupt; ten times the solver's own feasibility tolerance.
const SOLUTION_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowFamily {
    /// `sum_f y_f = k`
    OpenTotal,
    /// `sum_f x_{f,p} = 1`
    Assignment(usize),
    /// Group cost at most `gamma`.
    GroupBudget(usize),
    /// `x_{f,p} <= y_f`
    Link(usize, usize),
}

#[derive(Clone, Debug)]
pub struct LpModel {
    pub n_points: usize,
    pub n_facilities: usize,
    pub n_groups: usize,
    pub k: usize,
    pub z: f64,
    /// `d(f,p)^z * w(p)`, facility-major; zero for points outside any group.
    pub cost: Vec<f64>,
    pub point_group: Vec<Option<usize>>,
    pub lp: DenseLp,
    pub families: Vec<RowFamily>,
    /// Pairs pinned to zero by the overflow guard.
    pub fixed_pairs: Vec<(usize, usize)>,
    point_ids: Vec<String>,
    facility_ids: Vec<String>,
    group_names: Vec<String>,
}

impl LpModel {
    pub fn y_var(&self, f: usize) -> usize {
        f
    }

    pub fn x_var(&self, f: usize, p: usize) -> usize {
        self.n_facilities + f * self.n_points + p
    }

    pub fn gamma_var(&self) -> usize {
        self.n_facilities * (1 + self.n_points)
    }

    pub fn n_vars(&self) -> usize {
        self.gamma_var() + 1
    }

    /// Flatten a candidate solution into model variable order.
    fn variable_vector(&self, sol: &FractionalSolution) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_vars());
        v.extend_from_slice(&sol.y);
        v.extend_from_slice(&sol.x);
        v.push(sol.gamma);
        v
    }
}

/// A fractional solution in instance terms: open shares per facility,
/// assignment shares per (facility, point) pair, the budget value, and each
/// point's fractional service cost `alpha_p = sum_f x_{f,p} cost_{f,p}`.
#[derive(Clone, Debug)]
pub struct FractionalSolution {
    pub y: Vec<f64>,
    /// Facility-major, aligned with `LpModel::x_var`.
    pub x: Vec<f64>,
    pub gamma: f64,
    pub per_point_cost: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl FractionalSolution {
    pub fn x_at(&self, model: &LpModel, f: usize, p: usize) -> f64 {
        self.x[f * model.n_points + p]
    }
}

/// Worst violation per constraint family, plus variable negativity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualReport {
    pub open_total: f64,
    pub assignment: f64,
    pub group_budget: f64,
    pub link: f64,
    pub negativity: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.open_total
            .max(self.assignment)
            .max(self.group_budget)
            .max(self.link)
            .max(self.negativity)
    }
}

pub fn build_model(inst: &Instance) -> Result<LpModel, Error> {
    let point_group = inst.point_group()?; // errors when groups overlap
    let n_p = inst.n_points();
    let n_f = inst.n_facilities();

    let mut point_weight = vec![0.0; n_p];
    for g in inst.groups() {
        for (&p, &w) in g.members.iter().zip(&g.weights) {
            point_weight[p] = w;
        }
    }

    let mut cost = vec![0.0; n_f * n_p];
    for f in 0..n_f {
        for p in 0..n_p {
            if point_group[p].is_some() {
                cost[f * n_p + p] = pow_z(inst.dist_pf(f, p), inst.z()) * point_weight[p];
            }
        }
    }

    // Overflow guard: pin pairs whose coefficient dwarfs the smallest
    // nonzero one, but never a point's cheapest pair.
    let min_nonzero = cost
        .iter()
        .copied()
        .filter(|&c| c > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut fixed = vec![false; n_f * n_p];
    let mut fixed_pairs = Vec::new();
    if min_nonzero.is_finite() {
        let threshold = OVERFLOW_RATIO * min_nonzero;
        let mut cheapest = vec![0usize; n_p];
        for p in 0..n_p {
            let mut best = 0;
            for f in 1..n_f {
                if cost[f * n_p + p] < cost[best * n_p + p] {
                    best = f;
                }
            }
            cheapest[p] = best;
        }
        for f in 0..n_f {
            for p in 0..n_p {
                if cost[f * n_p + p] > threshold && cheapest[p] != f {
                    fixed[f * n_p + p] = true;
                    fixed_pairs.push((f, p));
                }
            }
        }
    }

    let n_vars = n_f + n_f * n_p + 1;
    let gamma = n_vars - 1;
    let mut objective = vec![0.0; n_vars];
    objective[gamma] = 1.0;
    let mut lp = DenseLp::new(objective);
    for (f, p) in &fixed_pairs {
        lp.fixed_zero[n_f + f * n_p + p] = true;
    }
    let mut families = Vec::new();

    let mut row = vec![0.0; n_vars];
    for f in 0..n_f {
        row[f] = 1.0;
    }
    lp.push_row(row, Sense::Eq, inst.k() as f64);
    families.push(RowFamily::OpenTotal);

    for p in 0..n_p {
        let mut row = vec![0.0; n_vars];
        for f in 0..n_f {
            row[n_f + f * n_p + p] = 1.0;
        }
        lp.push_row(row, Sense::Eq, 1.0);
        families.push(RowFamily::Assignment(p));
    }

    for (j, g) in inst.groups().iter().enumerate() {
        let mut row = vec![0.0; n_vars];
        for &p in &g.members {
            for f in 0..n_f {
                row[n_f + f * n_p + p] = cost[f * n_p + p];
            }
        }
        row[gamma] = -1.0;
        lp.push_row(row, Sense::Le, 0.0);
        families.push(RowFamily::GroupBudget(j));
    }

    for f in 0..n_f {
        for p in 0..n_p {
            let mut row = vec![0.0; n_vars];
            row[n_f + f * n_p + p] = 1.0;
            row[f] = -1.0;
            lp.push_row(row, Sense::Le, 0.0);
            families.push(RowFamily::Link(f, p));
        }
    }

    Ok(LpModel {
        n_points: n_p,
        n_facilities: n_f,
        n_groups: inst.n_groups(),
        k: inst.k(),
        z: inst.z(),
        cost,
        point_group,
        lp,
        families,
        fixed_pairs,
        point_ids: inst.point_ids().to_vec(),
        facility_ids: inst.facility_ids().to_vec(),
        group_names: inst.groups().iter().map(|g| g.name.clone()).collect(),
    })
}

pub fn solve_model(model: &LpModel) -> Result<FractionalSolution, Error> {
    let raw = simplex::solve(&model.lp)?;
    let n_f = model.n_facilities;
    let n_p = model.n_points;
    let y = raw.values[..n_f].to_vec();
    let x = raw.values[n_f..n_f + n_f * n_p].to_vec();
    let gamma = raw.values[model.gamma_var()];
    let per_point_cost = (0..n_p)
        .map(|p| (0..n_f).map(|f| x[f * n_p + p] * model.cost[f * n_p + p]).sum())
        .collect();
    let sol = FractionalSolution {
        y,
        x,
        gamma,
        per_point_cost,
        objective: raw.objective,
        duals: raw.duals,
        pivots: raw.pivots,
    };
    let residuals = check_feasibility(model, &sol);
    if residuals.max() > SOLUTION_RESIDUAL_TOL {
        return Err(Error::Internal(format!(
            "simplex returned a solution with residual {}",
            residuals.max()
        )));
    }
    Ok(sol)
}

/// Evaluate a candidate fractional solution against every model row.
pub fn check_feasibility(model: &LpModel, sol: &FractionalSolution) -> ResidualReport {
    let v = model.variable_vector(sol);
    let mut report = ResidualReport {
        open_total: 0.0,
        assignment: 0.0,
        group_budget: 0.0,
        link: 0.0,
        negativity: v.iter().fold(0.0f64, |acc, &x| acc.max(-x)),
    };
    for (i, family) in model.families.iter().enumerate() {
        let lhs: f64 = model.lp.rows[i]
            .iter()
            .zip(&v)
            .map(|(a, x)| a * x)
            .sum();
        let violation = match model.lp.senses[i] {
            Sense::Eq => (lhs - model.lp.rhs[i]).abs(),
            Sense::Le => (lhs - model.lp.rhs[i]).max(0.0),
        };
        let slot = match family {
            RowFamily::OpenTotal => &mut report.open_total,
            RowFamily::Assignment(_) => &mut report.assignment,
            RowFamily::GroupBudget(_) => &mut report.group_budget,
            RowFamily::Link(_, _) => &mut report.link,
        };
        *slot = slot.max(violation);
    }
    report
}

/// Render the model in LP text form (CPLEX-style). Index-based variable
/// names keep the output parseable; header comments map them back to ids.
pub fn write_lp_text(model: &LpModel) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    out.push_str("\\ fair clustering fractional relaxation\n");
    for (f, id) in model.facility_ids.iter().enumerate() {
        let _ = writeln!(out, "\\ y{f} = open share of facility '{id}'");
    }
    let _ = writeln!(
        out,
        "\\ x<f>_<p> = share of point p assigned to facility f; points:"
    );
    for (p, id) in model.point_ids.iter().enumerate() {
        let _ = writeln!(out, "\\   p{p} = '{id}'");
    }
    out.push_str("Minimize\n obj: gamma\nSubject To\n");

    let term = |coeff: f64, name: &str| -> String {
        if coeff < 0.0 {
            format!("-{} {}", -coeff, name)
        } else {
            format!("+{coeff} {name}")
        }
    };
    for (i, family) in model.families.iter().enumerate() {
        let mut terms = Vec::new();
        for (j, &a) in model.lp.rows[i].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let name = if j < model.n_facilities {
                format!("y{j}")
            } else if j < model.gamma_var() {
                let f = (j - model.n_facilities) / model.n_points;
                let p = (j - model.n_facilities) % model.n_points;
                format!("x{f}_{p}")
            } else {
                "gamma".to_owned()
            };
            terms.push(term(a, &name));
        }
        let label = match family {
            RowFamily::OpenTotal => "open_total".to_owned(),
            RowFamily::Assignment(p) => format!("assign_{p}"),
            RowFamily::GroupBudget(j) => format!("budget_{j}"),
            RowFamily::Link(f, p) => format!("link_{f}_{p}"),
        };
        let sense = match model.lp.senses[i] {
            Sense::Eq => "=",
            Sense::Le => "<=",
        };
        let _ = writeln!(
            out,
            " {label}: {} {sense} {}",
            terms.join(" "),
            model.lp.rhs[i]
        );
    }
    out.push_str("Bounds\n");
    for &(f, p) in &model.fixed_pairs {
        let _ = writeln!(out, " x{f}_{p} = 0");
    }
    out.push_str("End\n");
    let _ = &model.group_names; // names surface in reports, not the dump
    out
}
