//! Bundled branch-and-bound solve over LP relaxations.
//!
//! Node selection is best-bound with FIFO tie-break; branching picks the
//! most fractional free binary with lowest-index tie-break, so runs are
//! reproducible. Relaxations are solved by the minilp simplex; children
//! re-derive their relaxation from the root basis through incremental
//! variable fixes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use thiserror::Error;

use super::{MilpModel, Sense, Solution, SolveOptions, SolveStatus, VarId};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model failed validation: {0}")]
    InvalidModel(#[from] super::ModelError),
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("solver produced a solution that fails the independent audit: {0}")]
    AuditFailed(String),
}

struct Relaxation {
    problem: Problem,
    vars: Vec<minilp::Variable>,
}

fn build_relaxation(model: &MilpModel) -> Relaxation {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let obj = model.objective();
    let vars: Vec<minilp::Variable> = model
        .vars()
        .iter()
        .enumerate()
        .map(|(i, v)| problem.add_var(obj[i], (v.lb, v.ub)))
        .collect();
    for row in model.rows() {
        let expr: Vec<(minilp::Variable, f64)> =
            row.coeffs.iter().map(|&(v, c)| (vars[v.0], c)).collect();
        let op = match row.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Eq => ComparisonOp::Eq,
            Sense::Ge => ComparisonOp::Ge,
        };
        problem.add_constraint(expr, op, row.rhs);
    }
    Relaxation { problem, vars }
}

/// A pending node: the bound is inherited from the parent relaxation until
/// the node is evaluated.
struct Node {
    bound: f64,
    seq: u64,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; lower bound (then lower seq) wins.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn solve(model: &MilpModel, opts: &SolveOptions) -> Result<Solution, SolveError> {
    model.validate()?;
    let started = Instant::now();

    if model.n_vars() == 0 {
        return Ok(Solution {
            status: SolveStatus::Optimal,
            values: Vec::new(),
            objective: model.obj_offset,
            bound: model.obj_offset,
            gap: 0.0,
            nodes: 0,
            infeasibility_hint: Vec::new(),
        });
    }

    let relax = build_relaxation(model);
    let root = match relax.problem.solve() {
        Ok(s) => s,
        Err(minilp::Error::Infeasible) => return Ok(infeasible_solution(model)),
        Err(minilp::Error::Unbounded) => return Err(SolveError::Unbounded),
    };
    let root_bound = root.objective() + model.obj_offset;

    let binaries: Vec<usize> = model.free_binaries().into_iter().map(|v| v.0).collect();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if !opts.start_hint.is_empty() {
        if let Some((obj, values)) = try_hint(model, &relax, &root, &opts.start_hint, opts) {
            incumbent = Some((obj, values));
        }
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        bound: root_bound,
        seq,
        fixes: Vec::new(),
    });
    let mut nodes_explored = 0u64;
    let mut limit_hit = false;

    while let Some(node) = heap.pop() {
        // Global bound is the best of the queue; with best-bound selection
        // that is the popped node's bound.
        let global_bound = node.bound;
        if let Some((inc_obj, _)) = &incumbent {
            let gap = (inc_obj - global_bound) / 1.0f64.max(inc_obj.abs());
            if gap <= opts.rel_gap {
                return finish(
                    model,
                    incumbent,
                    global_bound,
                    nodes_explored,
                    opts,
                    SolveStatus::Optimal,
                );
            }
        }
        if let Some(limit) = opts.node_limit {
            if nodes_explored >= limit {
                limit_hit = true;
                break;
            }
        }
        if let Some(tl) = opts.time_limit {
            if started.elapsed() >= tl {
                limit_hit = true;
                break;
            }
        }
        nodes_explored += 1;

        // Re-derive this node's relaxation from the root basis.
        let mut lp = root.clone();
        let mut feasible = true;
        for &(var, val) in &node.fixes {
            match lp.fix_var(relax.vars[var], val) {
                Ok(next) => lp = next,
                Err(_) => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            continue;
        }
        let bound = lp.objective() + model.obj_offset;
        if let Some((inc_obj, _)) = &incumbent {
            if bound >= inc_obj - opts.rel_gap * 1.0f64.max(inc_obj.abs()) {
                continue;
            }
        }

        // Most fractional free binary, lowest index on ties.
        let mut branch_var: Option<(usize, f64)> = None;
        for &b in &binaries {
            if node.fixes.iter().any(|&(v, _)| v == b) {
                continue;
            }
            let x = *lp.var_value(relax.vars[b]);
            let frac = (x - x.round()).abs();
            if frac > opts.int_tol {
                let dist = (x - x.floor() - 0.5).abs();
                match branch_var {
                    None => branch_var = Some((b, dist)),
                    Some((_, best)) if dist < best - 1e-12 => branch_var = Some((b, dist)),
                    _ => {}
                }
            }
        }

        match branch_var {
            None => {
                // Integral: candidate incumbent.
                let values: Vec<f64> = (0..model.n_vars())
                    .map(|i| snap(*lp.var_value(relax.vars[i]), model, i, opts))
                    .collect();
                let obj = model.eval_objective(&values);
                if incumbent.as_ref().map_or(true, |(best, _)| obj < *best) {
                    incumbent = Some((obj, values));
                }
            }
            Some((var, _)) => {
                for val in [0.0, 1.0] {
                    seq += 1;
                    let mut fixes = node.fixes.clone();
                    fixes.push((var, val));
                    heap.push(Node {
                        bound,
                        seq,
                        fixes,
                    });
                }
            }
        }
    }

    let final_bound = heap
        .iter()
        .map(|n| n.bound)
        .fold(f64::INFINITY, f64::min)
        .min(
            incumbent
                .as_ref()
                .map(|(o, _)| *o)
                .unwrap_or(f64::INFINITY),
        );
    match (&incumbent, limit_hit) {
        (Some(_), true) => finish(
            model,
            incumbent,
            final_bound,
            nodes_explored,
            opts,
            SolveStatus::Feasible,
        ),
        (Some(_), false) => finish(
            model,
            incumbent,
            final_bound,
            nodes_explored,
            opts,
            SolveStatus::Optimal,
        ),
        (None, true) => Ok(Solution {
            status: SolveStatus::Limit,
            values: Vec::new(),
            objective: f64::INFINITY,
            bound: final_bound,
            gap: f64::INFINITY,
            nodes: nodes_explored,
            infeasibility_hint: Vec::new(),
        }),
        // Queue exhausted without an integral point: every leaf was pruned
        // as LP-infeasible.
        (None, false) => Ok(infeasible_solution(model)),
    }
}

/// Clamp within-tolerance values onto their bounds and binaries onto 0/1,
/// so downstream recursions see exact integers.
fn snap(x: f64, model: &MilpModel, idx: usize, opts: &SolveOptions) -> f64 {
    let v = &model.vars()[idx];
    let mut out = x;
    if v.kind == super::VarKind::Binary && (x - x.round()).abs() <= opts.int_tol {
        out = x.round();
    }
    if (out - v.lb).abs() <= opts.lp_tol * 1.0f64.max(v.lb.abs()) {
        out = v.lb;
    }
    if (out - v.ub).abs() <= opts.lp_tol * 1.0f64.max(v.ub.abs()) {
        out = v.ub;
    }
    out
}

fn try_hint(
    model: &MilpModel,
    relax: &Relaxation,
    root: &minilp::Solution,
    hint: &[(VarId, f64)],
    opts: &SolveOptions,
) -> Option<(f64, Vec<f64>)> {
    let mut lp = root.clone();
    for &(var, val) in hint {
        lp = lp.fix_var(relax.vars[var.0], val).ok()?;
    }
    let values: Vec<f64> = (0..model.n_vars())
        .map(|i| snap(*lp.var_value(relax.vars[i]), model, i, opts))
        .collect();
    // The hint must pin every free binary to an integer point.
    for v in model.free_binaries() {
        if (values[v.0] - values[v.0].round()).abs() > opts.int_tol {
            return None;
        }
    }
    Some((model.eval_objective(&values), values))
}

fn finish(
    model: &MilpModel,
    incumbent: Option<(f64, Vec<f64>)>,
    bound: f64,
    nodes: u64,
    opts: &SolveOptions,
    status: SolveStatus,
) -> Result<Solution, SolveError> {
    let (objective, values) = incumbent.expect("finish requires an incumbent");
    let worst = model.audit(&values, opts.lp_tol.max(1e-7) * 10.0);
    if let Some(v) = worst.first() {
        if v.amount > 1e-5 {
            return Err(SolveError::AuditFailed(format!(
                "{} violated by {:.3e}",
                v.what, v.amount
            )));
        }
    }
    let bound = bound.min(objective);
    let gap = ((objective - bound) / 1.0f64.max(objective.abs())).max(0.0);
    Ok(Solution {
        status,
        values,
        objective,
        bound,
        gap,
        nodes,
        infeasibility_hint: Vec::new(),
    })
}

fn infeasible_solution(model: &MilpModel) -> Solution {
    Solution {
        status: SolveStatus::Infeasible,
        values: Vec::new(),
        objective: f64::INFINITY,
        bound: f64::INFINITY,
        gap: f64::INFINITY,
        nodes: 0,
        infeasibility_hint: elastic_hint(model),
    }
}

/// Elastic relaxation: give every row a penalized stretch variable and
/// minimize the total stretch. Marker groups that still need stretch at the
/// optimum point at the conflicting constraint families.
fn elastic_hint(model: &MilpModel) -> Vec<String> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<minilp::Variable> = model
        .vars()
        .iter()
        .map(|v| problem.add_var(0.0, (v.lb, v.ub)))
        .collect();
    let mut stretch: Vec<(usize, minilp::Variable)> = Vec::new();
    for (i, row) in model.rows().iter().enumerate() {
        let mut expr: Vec<(minilp::Variable, f64)> =
            row.coeffs.iter().map(|&(v, c)| (vars[v.0], c)).collect();
        let s = problem.add_var(1.0, (0.0, f64::INFINITY));
        stretch.push((i, s));
        let op = match row.sense {
            Sense::Le => {
                expr.push((s, -1.0));
                ComparisonOp::Le
            }
            Sense::Ge => {
                expr.push((s, 1.0));
                ComparisonOp::Ge
            }
            Sense::Eq => {
                // One signed stretch pair for equalities.
                let s2 = problem.add_var(1.0, (0.0, f64::INFINITY));
                expr.push((s, 1.0));
                expr.push((s2, -1.0));
                stretch.push((i, s2));
                ComparisonOp::Eq
            }
        };
        problem.add_constraint(expr, op, row.rhs);
    }
    // Crossed variable bounds never reach the LP; report them directly.
    for v in model.vars() {
        if v.lb > v.ub {
            return vec![format!("bounds of {}", v.name)];
        }
    }
    let Ok(sol) = problem.solve() else {
        return vec!["unlocalized (elastic relaxation failed)".into()];
    };
    let mut groups: Vec<String> = Vec::new();
    for (row_idx, s) in &stretch {
        if *sol.var_value(*s) > 1e-6 {
            let marker = model.rows()[*row_idx].marker.to_string();
            if !groups.contains(&marker) {
                groups.push(marker);
            }
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::VarKind;

    #[test]
    fn pure_lp_matches_frozen_optimum() {
        // min -3x - 5y st x + 2y <= 14, 3x - y >= 0, x - y <= 2 over x,y >= 0.
        // Frozen optimum from the independent dense oracle: x=6, y=4, -38.
        let mut m = MilpModel::new("lp");
        let x = m.add_var("x", VarKind::Continuous, 0.0, f64::INFINITY);
        let y = m.add_var("y", VarKind::Continuous, 0.0, f64::INFINITY);
        m.add_obj(x, -3.0);
        m.add_obj(y, -5.0);
        m.add_row("r1", vec![(x, 1.0), (y, 2.0)], Sense::Le, 14.0);
        m.add_row("r2", vec![(x, 3.0), (y, -1.0)], Sense::Ge, 0.0);
        m.add_row("r3", vec![(x, 1.0), (y, -1.0)], Sense::Le, 2.0);
        let sol = solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective + 38.0).abs() < 1e-7, "{}", sol.objective);
        assert!((sol.value(x) - 6.0).abs() < 1e-7);
        assert!((sol.value(y) - 4.0).abs() < 1e-7);
    }

    #[test]
    fn five_binary_knapsack_matches_enumeration() {
        // max 10a+13b+7c+5d+9e st 3a+4b+2c+d+3e <= 7, minimized as negation.
        let w = [3.0, 4.0, 2.0, 1.0, 3.0];
        let p = [10.0, 13.0, 7.0, 5.0, 9.0];
        let mut m = MilpModel::new("knap");
        let vars: Vec<VarId> = (0..5)
            .map(|i| m.add_var(format!("b{i}"), VarKind::Binary, 0.0, 1.0))
            .collect();
        for (i, &v) in vars.iter().enumerate() {
            m.add_obj(v, -p[i]);
        }
        m.add_row(
            "cap",
            vars.iter().zip(w).map(|(&v, wi)| (v, wi)).collect(),
            Sense::Le,
            7.0,
        );
        let sol = solve(&m, &SolveOptions::default()).unwrap();
        // Exhaustive 2^5 scan.
        let mut best = f64::INFINITY;
        for mask in 0u32..32 {
            let weight: f64 = (0..5).filter(|i| mask & (1 << i) != 0).map(|i| w[i]).sum();
            if weight <= 7.0 {
                let profit: f64 = (0..5).filter(|i| mask & (1 << i) != 0).map(|i| p[i]).sum();
                best = best.min(-profit);
            }
        }
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - best).abs() < 1e-9, "{} vs {}", sol.objective, best);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let mut m = MilpModel::new("bad");
        let x = m.add_var("x", VarKind::Continuous, 1.0, 0.0);
        m.add_obj(x, 1.0);
        let err = solve(&m, &SolveOptions::default());
        assert!(matches!(err, Err(SolveError::InvalidModel(_))));
    }

    #[test]
    fn contradictory_rows_report_infeasible_with_hint() {
        let mut m = MilpModel::new("conflict");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 10.0);
        m.add_row("must_be_big", vec![(x, 1.0)], Sense::Ge, 5.0);
        m.add_row("must_be_small", vec![(x, 1.0)], Sense::Le, 1.0);
        let sol = solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(!sol.infeasibility_hint.is_empty());
    }

    #[test]
    fn scenario_permutation_leaves_objective_unchanged() {
        // Two "scenario blocks" with different costs tied by an equality;
        // swapping block order must not change the optimum.
        fn build(swap: bool) -> (MilpModel, f64) {
            let mut m = MilpModel::new("perm");
            let mut block = |m: &mut MilpModel, tag: &str, cost: f64| {
                let z = m.add_var(format!("z{tag}"), VarKind::Binary, 0.0, 1.0);
                let x = m.add_var(format!("x{tag}"), VarKind::Continuous, 0.0, 4.0);
                m.add_obj(x, cost);
                m.add_row("serve", vec![(x, 1.0), (z, 2.0)], Sense::Ge, 3.0);
                (z, x)
            };
            let (za, _) = if swap {
                block(&mut m, "b", 2.0)
            } else {
                block(&mut m, "a", 1.0)
            };
            let (zb, _) = if swap {
                block(&mut m, "a", 1.0)
            } else {
                block(&mut m, "b", 2.0)
            };
            m.add_row("tie", vec![(za, 1.0), (zb, -1.0)], Sense::Eq, 0.0);
            let sol = solve(&m, &SolveOptions::default()).unwrap();
            (m, sol.objective)
        }
        let (_, a) = build(false);
        let (_, b) = build(true);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn hint_seeds_the_incumbent() {
        let mut m = MilpModel::new("hint");
        let b = m.add_var("b", VarKind::Binary, 0.0, 1.0);
        let x = m.add_var("x", VarKind::Continuous, 0.0, 2.0);
        m.add_obj(b, 1.0);
        m.add_obj(x, 1.0);
        m.add_row("need", vec![(b, 2.0), (x, 1.0)], Sense::Ge, 2.0);
        let opts = SolveOptions {
            start_hint: vec![(b, 1.0)],
            ..Default::default()
        };
        let sol = solve(&m, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }
}
