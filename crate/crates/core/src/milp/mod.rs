//! Solver-agnostic mixed-integer linear model: a variable table, sparse
//! rows tagged with semantic markers, and a linear objective with constant
//! offset. Submodules provide the bundled branch-and-bound solve, MPS
//! export/import, and assembly of the restoration model itself.

mod assemble;
mod mps;
mod solve;

pub use assemble::{build_model, reopt_model, AssembleError, ModelContext, VarRoles};
pub use mps::{import_solution, parse_mps, write_mps, MpsError};
pub use solve::{solve, SolveError};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(&self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// One linear constraint. The marker names the semantic group the row
/// belongs to, so solutions and infeasibilities can be audited group by
/// group.
#[derive(Debug, Clone)]
pub struct Row {
    pub marker: &'static str,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("binary variable {0} must have bounds within [0,1]")]
    BinaryBounds(String),
    #[error("variable {0} is referenced by no row and has no objective weight")]
    Unreferenced(String),
    #[error("variable {0} has crossed bounds [{1}, {2}]")]
    CrossedBounds(String, f64, f64),
}

#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub name: String,
    vars: Vec<Variable>,
    rows: Vec<Row>,
    obj: Vec<f64>,
    pub obj_offset: f64,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            kind,
            lb,
            ub,
        });
        self.obj.push(0.0);
        VarId(self.vars.len() - 1)
    }

    pub fn add_obj(&mut self, var: VarId, coeff: f64) {
        self.obj[var.0] += coeff;
    }

    pub fn add_row(
        &mut self,
        marker: &'static str,
        coeffs: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row {
            marker,
            coeffs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.obj
    }

    /// Tightens a variable's bounds in place (used to fix first-stage
    /// decisions and damaged branches).
    pub fn set_bounds(&mut self, var: VarId, lb: f64, ub: f64) {
        self.vars[var.0].lb = lb;
        self.vars[var.0].ub = ub;
    }

    /// Free binaries: kind is binary and the bounds leave both values open.
    pub fn free_binaries(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary && (v.ub - v.lb) > 0.5)
            .map(|(i, _)| VarId(i))
            .collect()
    }

    pub fn n_binaries(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut referenced = vec![false; self.vars.len()];
        for row in &self.rows {
            for &(v, _) in &row.coeffs {
                referenced[v.0] = true;
            }
        }
        for (i, v) in self.vars.iter().enumerate() {
            if v.kind == VarKind::Binary && (v.lb < -1e-9 || v.ub > 1.0 + 1e-9) {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
            if v.lb > v.ub + 1e-12 {
                return Err(ModelError::CrossedBounds(v.name.clone(), v.lb, v.ub));
            }
            if !referenced[i] && self.obj[i] == 0.0 {
                return Err(ModelError::Unreferenced(v.name.clone()));
            }
        }
        Ok(())
    }

    pub fn eval_objective(&self, values: &[f64]) -> f64 {
        self.obj
            .iter()
            .zip(values)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.obj_offset
    }

    /// Independent constraint-evaluation pass: every row and every bound is
    /// checked against the given values at tolerance `tol` (scaled by the
    /// row magnitude). Returns all violations, worst first.
    pub fn audit(&self, values: &[f64], tol: f64) -> Vec<AuditViolation> {
        let mut out = Vec::new();
        for (idx, row) in self.rows.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().map(|&(v, c)| c * values[v.0]).sum();
            let scale = 1.0f64.max(row.rhs.abs());
            let gap = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            if gap > tol * scale {
                out.push(AuditViolation {
                    what: format!("row {} [{}]", idx, row.marker),
                    amount: gap,
                });
            }
        }
        for (i, v) in self.vars.iter().enumerate() {
            let x = values[i];
            let scale = 1.0f64.max(x.abs());
            if x < v.lb - tol * scale || x > v.ub + tol * scale {
                out.push(AuditViolation {
                    what: format!("bounds of {}", v.name),
                    amount: (v.lb - x).max(x - v.ub),
                });
            }
        }
        out.sort_by(|a, b| b.amount.partial_cmp(&a.amount).unwrap());
        out
    }

    /// Marker dump, one row per constraint: `row,marker,sense,rhs,nnz`.
    pub fn marker_csv(&self) -> String {
        let mut s = String::from("row,marker,sense,rhs,nnz\n");
        for (i, r) in self.rows.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                i,
                r.marker,
                r.sense.symbol(),
                r.rhs,
                r.coeffs.len()
            ));
        }
        s
    }

    /// Structural equality up to naming: kinds, bounds, rows, objective and
    /// offset all bit-equal.
    pub fn same_structure(&self, other: &Self) -> bool {
        if self.vars.len() != other.vars.len() || self.rows.len() != other.rows.len() {
            return false;
        }
        for (a, b) in self.vars.iter().zip(&other.vars) {
            if a.kind != b.kind || a.lb != b.lb || a.ub != b.ub {
                return false;
            }
        }
        for (a, b) in self.rows.iter().zip(&other.rows) {
            if a.sense != b.sense || a.rhs != b.rhs || a.coeffs != b.coeffs {
                return false;
            }
        }
        self.obj == other.obj && self.obj_offset == other.obj_offset
    }
}

#[derive(Debug, Clone)]
pub struct AuditViolation {
    pub what: String,
    pub amount: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Bundled,
    ExportOnly,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub rel_gap: f64,
    pub int_tol: f64,
    pub lp_tol: f64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<std::time::Duration>,
    pub mode: SolveMode,
    /// Optional integer assignment tried first to seed the incumbent.
    pub start_hint: Vec<(VarId, f64)>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rel_gap: 1e-4,
            int_tol: 1e-6,
            lp_tol: 1e-7,
            node_limit: Some(200_000),
            time_limit: None,
            mode: SolveMode::Bundled,
            start_hint: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal within the relative gap.
    Optimal,
    /// Feasible incumbent, limits reached before the gap closed.
    Feasible,
    Infeasible,
    /// Limits reached with no incumbent.
    Limit,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: u64,
    /// Marker groups that an elastic relaxation had to stretch; only
    /// populated when the model is infeasible.
    pub infeasibility_hint: Vec<String>,
}

impl Solution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}
