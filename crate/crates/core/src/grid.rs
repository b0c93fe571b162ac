//! Distribution-feeder data model, the radial-topology validator used both
//! to audit implemented switch states and to cross-check the optimizer, and
//! residual checks for the linearized branch-flow physics.
//!
//! Quantities are per-unit on a 1 MVA base, so per-unit power and MW
//! coincide; voltages are per-unit magnitudes.

use thiserror::Error;

pub type BusId = usize;
pub type BranchId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadClass {
    Residential,
    Commercial,
    Industrial,
}

impl LoadClass {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "residential" | "r" => Some(Self::Residential),
            "commercial" | "c" => Some(Self::Commercial),
            "industrial" | "i" => Some(Self::Industrial),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bus {
    pub label: String,
    pub feeder: usize,
    /// Base (peak-day) load before the hourly profile is applied.
    pub p_base_mw: f64,
    pub q_base_mvar: f64,
    pub class: LoadClass,
    pub critical: bool,
    /// Interruption cost, $/MWh.
    pub w_usd_per_mwh: f64,
    /// Power factor, derived from the base P/Q pair.
    pub pf: f64,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub label: String,
    pub feeder: usize,
    pub from: BusId,
    pub to: BusId,
    pub r_pu: f64,
    pub x_pu: f64,
    pub s_max_pu: f64,
    pub switchable: bool,
}

/// Dispatchable resources and local demand aggregated behind one
/// interconnection bus.
#[derive(Debug, Clone)]
pub struct Microgrid {
    pub label: String,
    pub bus: BusId,
    /// Index of the plug-in site in the transport network.
    pub site: usize,
    pub p_dg_max_mw: f64,
    pub q_dg_max_mvar: f64,
    pub e_max_mwh: f64,
    pub e_min_mwh: f64,
    pub e_init_mwh: f64,
    pub local_peak_mw: f64,
    pub local_pf: f64,
    pub class: LoadClass,
    pub c_gen_usd_per_mwh: f64,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("branch {0} references unknown bus")]
    UnknownBus(String),
    #[error("branch {0} has negative impedance")]
    NegativeImpedance(String),
    #[error("voltage bounds must satisfy v_min < v0 < v_max")]
    BadVoltageBounds,
    #[error("feeder {0} has no microgrid bus")]
    FeederWithoutSource(usize),
    #[error("power factor must lie in (0, 1], got {0}")]
    BadPowerFactor(f64),
    #[error("bus {0}: reactive-only load is not representable")]
    ReactiveOnlyLoad(String),
}

/// The complete multi-feeder distribution system. Feeders are electrically
/// separate; the topology count couples them only through the shared
/// closed-branch budget.
#[derive(Debug, Clone)]
pub struct DistributionSystem {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    /// One entry per microgrid, in microgrid order.
    pub mg_bus: Vec<BusId>,
    pub v0: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub n_feeders: usize,
    /// Branches leaving / entering each bus under the fixed file orientation.
    pub bus_out: Vec<Vec<BranchId>>,
    pub bus_in: Vec<Vec<BranchId>>,
}

impl DistributionSystem {
    pub fn new(
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        mg_bus: Vec<BusId>,
        v0: f64,
        v_min: f64,
        v_max: f64,
    ) -> Result<Self, GridError> {
        if !(v_min < v0 && v0 < v_max) {
            return Err(GridError::BadVoltageBounds);
        }
        let n = buses.len();
        let mut bus_out = vec![Vec::new(); n];
        let mut bus_in = vec![Vec::new(); n];
        for (i, b) in branches.iter().enumerate() {
            if b.from >= n || b.to >= n {
                return Err(GridError::UnknownBus(b.label.clone()));
            }
            if b.r_pu < 0.0 || b.x_pu < 0.0 {
                return Err(GridError::NegativeImpedance(b.label.clone()));
            }
            bus_out[b.from].push(i);
            bus_in[b.to].push(i);
        }
        let n_feeders = buses.iter().map(|b| b.feeder + 1).max().unwrap_or(0);
        for f in 0..n_feeders {
            if !mg_bus.iter().any(|&m| buses[m].feeder == f) {
                return Err(GridError::FeederWithoutSource(f));
            }
        }
        Ok(Self {
            buses,
            branches,
            mg_bus,
            v0,
            v_min,
            v_max,
            n_feeders,
            bus_out,
            bus_in,
        })
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    /// The radiality budget: closed branches must number buses minus
    /// microgrids.
    pub fn required_closed(&self) -> usize {
        self.n_buses() - self.mg_bus.len()
    }

    pub fn is_mg_bus(&self, b: BusId) -> bool {
        self.mg_bus.contains(&b)
    }
}

/// Switch state of every branch for one operating condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub closed: Vec<bool>,
}

impl Topology {
    pub fn all_closed(n: usize) -> Self {
        Self {
            closed: vec![true; n],
        }
    }

    pub fn open_branches(&self) -> Vec<BranchId> {
        self.closed
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Outcome of the radiality validation; empty `violations` means the
/// topology is a spanning forest with exactly one source per tree.
#[derive(Debug, Clone, Default)]
pub struct RadialReport {
    pub violations: Vec<String>,
}

impl RadialReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Disjoint-set check that the closed subgraph is a spanning forest with
/// exactly one microgrid bus per tree and the exact closed-branch count.
pub fn validate_radial(ds: &DistributionSystem, topo: &Topology) -> RadialReport {
    let mut report = RadialReport::default();
    let closed: Vec<BranchId> = topo
        .closed
        .iter()
        .enumerate()
        .filter(|(_, &c)| c)
        .map(|(i, _)| i)
        .collect();
    if closed.len() != ds.required_closed() {
        report.violations.push(format!(
            "closed-branch count {} differs from required {}",
            closed.len(),
            ds.required_closed()
        ));
    }
    let mut dsu = Dsu::new(ds.n_buses());
    for &b in &closed {
        let br = &ds.branches[b];
        if !dsu.union(br.from, br.to) {
            report
                .violations
                .push(format!("branch {} closes a cycle", br.label));
        }
    }
    let mut sources_per_root = std::collections::BTreeMap::new();
    for &m in &ds.mg_bus {
        *sources_per_root.entry(dsu.find(m)).or_insert(0usize) += 1;
    }
    for bus in 0..ds.n_buses() {
        let root = dsu.find(bus);
        match sources_per_root.get(&root) {
            None => report.violations.push(format!(
                "bus {} is in a component with no microgrid",
                ds.buses[bus].label
            )),
            Some(&1) => {}
            Some(&k) => {
                if bus == root {
                    report.violations.push(format!(
                        "component of bus {} contains {} microgrids",
                        ds.buses[bus].label, k
                    ));
                }
            }
        }
    }
    report
}

/// Per-interval electrical state used by the physics audit.
#[derive(Debug, Clone)]
pub struct PowerFlowState {
    /// Injection at each bus, MW; nonzero only where a microgrid connects.
    pub p_gen_mw: Vec<f64>,
    pub q_gen_mvar: Vec<f64>,
    pub p_restored_mw: Vec<f64>,
    pub q_restored_mvar: Vec<f64>,
    /// Signed flow on each branch under the file orientation.
    pub p_flow_mw: Vec<f64>,
    pub q_flow_mvar: Vec<f64>,
    pub v_pu: Vec<f64>,
}

impl PowerFlowState {
    pub fn zeros(ds: &DistributionSystem) -> Self {
        Self {
            p_gen_mw: vec![0.0; ds.n_buses()],
            q_gen_mvar: vec![0.0; ds.n_buses()],
            p_restored_mw: vec![0.0; ds.n_buses()],
            q_restored_mvar: vec![0.0; ds.n_buses()],
            p_flow_mw: vec![0.0; ds.n_branches()],
            q_flow_mvar: vec![0.0; ds.n_branches()],
            v_pu: vec![ds.v0; ds.n_buses()],
        }
    }
}

/// Largest absolute residual of the linearized branch-flow equations: bus
/// balances for P and Q everywhere, and the voltage-drop equality on closed
/// branches (open branches are unconstrained).
pub fn lindistflow_residual(
    ds: &DistributionSystem,
    topo: &Topology,
    state: &PowerFlowState,
) -> f64 {
    let mut worst: f64 = 0.0;
    for bus in 0..ds.n_buses() {
        let out_p: f64 = ds.bus_out[bus].iter().map(|&b| state.p_flow_mw[b]).sum();
        let in_p: f64 = ds.bus_in[bus].iter().map(|&b| state.p_flow_mw[b]).sum();
        let res_p = state.p_gen_mw[bus] - state.p_restored_mw[bus] - (out_p - in_p);
        worst = worst.max(res_p.abs());
        let out_q: f64 = ds.bus_out[bus].iter().map(|&b| state.q_flow_mvar[b]).sum();
        let in_q: f64 = ds.bus_in[bus].iter().map(|&b| state.q_flow_mvar[b]).sum();
        let res_q = state.q_gen_mvar[bus] - state.q_restored_mvar[bus] - (out_q - in_q);
        worst = worst.max(res_q.abs());
    }
    for (i, br) in ds.branches.iter().enumerate() {
        if !topo.closed[i] {
            continue;
        }
        let drop = (br.r_pu * state.p_flow_mw[i] + br.x_pu * state.q_flow_mvar[i]) / ds.v0;
        let res = state.v_pu[br.to] - state.v_pu[br.from] - drop;
        worst = worst.max(res.abs());
    }
    worst
}

/// Reactive restoration implied by the active restoration and the bus power
/// factor.
pub fn reactive_from_active(p_mw: f64, pf: f64) -> Result<f64, GridError> {
    if !(pf > 0.0 && pf <= 1.0) {
        return Err(GridError::BadPowerFactor(pf));
    }
    Ok(p_mw * pf.acos().tan())
}

/// Power factor of a P/Q pair; pure active loads have factor 1.
pub fn power_factor(p: f64, q: f64) -> Option<f64> {
    if p == 0.0 && q == 0.0 {
        return Some(1.0);
    }
    if p <= 0.0 {
        return None;
    }
    Some(p / (p * p + q * q).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bus(label: &str, feeder: usize) -> Bus {
        Bus {
            label: label.into(),
            feeder,
            p_base_mw: 0.1,
            q_base_mvar: 0.05,
            class: LoadClass::Residential,
            critical: false,
            w_usd_per_mwh: 2000.0,
            pf: 0.9,
        }
    }

    fn branch(label: &str, from: BusId, to: BusId) -> Branch {
        Branch {
            label: label.into(),
            feeder: 0,
            from,
            to,
            r_pu: 0.01,
            x_pu: 0.01,
            s_max_pu: 5.0,
            switchable: true,
        }
    }

    /// Chain 0-1-2-...-(n-1) plus a tie from 0 to n-1.
    fn ring(n: usize) -> DistributionSystem {
        let buses = (0..n).map(|i| bus(&format!("b{i}"), 0)).collect();
        let mut branches: Vec<Branch> = (0..n - 1)
            .map(|i| branch(&format!("l{i}"), i, i + 1))
            .collect();
        branches.push(branch("tie", 0, n - 1));
        DistributionSystem::new(buses, branches, vec![0], 1.0, 0.95, 1.05).unwrap()
    }

    #[test]
    fn tree_with_exact_count_is_radial() {
        let ds = ring(6);
        let mut topo = Topology::all_closed(ds.n_branches());
        topo.closed[5] = false; // open the tie
        assert!(validate_radial(&ds, &topo).ok());
    }

    #[test]
    fn extra_closed_branch_is_a_cycle() {
        let ds = ring(6);
        let topo = Topology::all_closed(ds.n_branches());
        let report = validate_radial(&ds, &topo);
        assert!(!report.ok());
        assert!(report.violations.iter().any(|v| v.contains("cycle")));
    }

    #[test]
    fn missing_source_component_is_flagged() {
        let ds = ring(6);
        let mut topo = Topology::all_closed(ds.n_branches());
        topo.closed[5] = false;
        topo.closed[2] = false; // strands buses 3..5
        let report = validate_radial(&ds, &topo);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("no microgrid")));
    }

    #[test]
    fn random_topologies_match_exhaustive_oracle() {
        let ds = ring(7);
        let n_br = ds.n_branches();
        // Walk all 2^7 switch states of the 7-branch ring.
        for mask in 0u32..(1 << n_br) {
            let topo = Topology {
                closed: (0..n_br).map(|i| mask & (1 << i) != 0).collect(),
            };
            let mine = validate_radial(&ds, &topo).ok();
            let closed: Vec<(usize, usize)> = ds
                .branches
                .iter()
                .enumerate()
                .filter(|(i, _)| topo.closed[*i])
                .map(|(_, b)| (b.from, b.to))
                .collect();
            let oracle = restoration_testkit::radiality_oracle(ds.n_buses(), &closed, &[0]).ok();
            assert_eq!(mine, oracle, "mask {mask:b}");
        }
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let ds = ring(4);
        let mut topo = Topology::all_closed(ds.n_branches());
        topo.closed[3] = false;
        let state = PowerFlowState::zeros(&ds);
        assert_eq!(lindistflow_residual(&ds, &topo, &state), 0.0);
    }

    #[test]
    fn three_bus_chain_matches_direct_solve() {
        // MG at bus 0 feeding loads at buses 1 and 2 over a chain. The
        // direct solve walks the chain: flows by downstream sums, voltages
        // by the drop equation.
        let buses = vec![bus("b0", 0), bus("b1", 0), bus("b2", 0)];
        let branches = vec![branch("l0", 0, 1), branch("l1", 1, 2)];
        let ds = DistributionSystem::new(buses, branches, vec![0], 1.0, 0.9, 1.1).unwrap();
        let topo = Topology::all_closed(2);
        let (p1, q1) = (0.08, 0.03);
        let (p2, q2) = (0.05, 0.02);
        let mut st = PowerFlowState::zeros(&ds);
        st.p_restored_mw = vec![0.0, p1, p2];
        st.q_restored_mvar = vec![0.0, q1, q2];
        st.p_gen_mw[0] = p1 + p2;
        st.q_gen_mvar[0] = q1 + q2;
        st.p_flow_mw = vec![p1 + p2, p2];
        st.q_flow_mvar = vec![q1 + q2, q2];
        st.v_pu[0] = 1.0;
        st.v_pu[1] = st.v_pu[0] + (0.01 * st.p_flow_mw[0] + 0.01 * st.q_flow_mvar[0]) / 1.0;
        st.v_pu[2] = st.v_pu[1] + (0.01 * st.p_flow_mw[1] + 0.01 * st.q_flow_mvar[1]) / 1.0;
        assert!(lindistflow_residual(&ds, &topo, &st) <= 1e-6);
        // A 1e-3 nudge on one flow shows up linearly.
        st.p_flow_mw[1] += 1e-3;
        let r = lindistflow_residual(&ds, &topo, &st);
        assert!((r - 1e-3).abs() < 1e-9, "residual {r}");
    }

    #[test]
    fn reactive_follows_power_factor() {
        assert_eq!(reactive_from_active(0.09, 1.0).unwrap(), 0.0);
        let q = reactive_from_active(0.09, 0.9).unwrap();
        assert!((q - 0.0435889894).abs() < 1e-9, "q {q}");
        assert_eq!(reactive_from_active(0.0, 0.9).unwrap(), 0.0);
        assert!(reactive_from_active(0.1, 0.0).is_err());
        assert!(reactive_from_active(0.1, 1.5).is_err());
    }

    #[test]
    fn power_factor_of_base_pairs() {
        assert_eq!(power_factor(0.0, 0.0), Some(1.0));
        assert_eq!(power_factor(0.0, 0.1), None);
        let pf = power_factor(3.0, 4.0).unwrap();
        assert!((pf - 0.6).abs() < 1e-12);
    }
}
