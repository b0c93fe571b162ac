//! Assembly of the two-stage horizon model: per-scenario routing over the
//! time-space layers, storage operation, radial reconfiguration through the
//! fictitious single-commodity flow, linearized branch-flow physics,
//! microgrid aggregation, the first-stage ties across scenarios, and the
//! expected-cost objective.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{MilpModel, Sense, SolveOptions, VarId, VarKind};
use crate::case::{MessSpec, ModelOptions, TransportWeighting};
use crate::grid::{reactive_from_active, DistributionSystem, Microgrid};
use crate::scenario::ScenarioSet;
use crate::transport::SiteId;
use crate::tsn::{ArcKind, Endpoint, TimeSpaceNetwork};

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("scenario set is empty")]
    NoScenarios,
    #[error("layer table is {0} scenarios, scenario set has {1}")]
    LayerScenarioMismatch(usize, usize),
    #[error("scenario horizon {0} shorter than model horizon {1}")]
    ShortScenario(usize, usize),
    #[error("fleet has {0} vehicles, layers carry {1}")]
    FleetMismatch(usize, usize),
    #[error("first-stage fix: no arc in the first cut matches {0}")]
    UnknownFirstStageArc(String),
}

/// Everything one horizon model is built from. Layers are indexed
/// `[scenario][vehicle]`; an empty fleet means no storage layers at all.
pub struct ModelContext<'a> {
    pub grid: &'a DistributionSystem,
    pub microgrids: &'a [Microgrid],
    pub fleet: &'a [MessSpec],
    pub scenarios: &'a ScenarioSet,
    pub layers: &'a [Vec<TimeSpaceNetwork>],
    pub horizon: usize,
    pub dt_h: f64,
    /// Stored energy of each vehicle entering the horizon, MWh.
    pub e_mess_init: &'a [f64],
    /// Stored energy of each microgrid entering the horizon, MWh.
    pub e_mg_init: &'a [f64],
    /// Microgrid local demand per interval, MW (not sheddable).
    pub mg_local_p: &'a [Vec<f64>],
    pub options: &'a ModelOptions,
}

/// Index maps from model variables back to their roles, used by audits,
/// report extraction and first-stage fixing.
#[derive(Debug, Clone, Default)]
pub struct VarRoles {
    /// `[scenario][vehicle][arc]`, aligned with the layer's arc order.
    pub zeta: Vec<Vec<Vec<VarId>>>,
    /// `[scenario][branch]`.
    pub alpha: Vec<Vec<VarId>>,
    pub p_ch: BTreeMap<(usize, usize, usize, usize), VarId>,
    pub p_dch: BTreeMap<(usize, usize, usize, usize), VarId>,
    pub i_ch: BTreeMap<(usize, usize, usize), VarId>,
    pub i_dch: BTreeMap<(usize, usize, usize), VarId>,
    /// `[scenario][vehicle][t]`.
    pub e_mess: Vec<Vec<Vec<VarId>>>,
    /// `[scenario][mg][t]`.
    pub p_dg: Vec<Vec<Vec<VarId>>>,
    pub q_dg: Vec<Vec<Vec<VarId>>>,
    pub p_g: Vec<Vec<Vec<VarId>>>,
    pub q_g: Vec<Vec<Vec<VarId>>>,
    pub e_dg: Vec<Vec<Vec<VarId>>>,
    /// `[scenario][bus][t]`.
    pub p_restored: Vec<Vec<Vec<VarId>>>,
    pub q_restored: Vec<Vec<Vec<VarId>>>,
    pub v: Vec<Vec<Vec<VarId>>>,
    /// `[scenario][branch][t]`.
    pub p_flow: Vec<Vec<Vec<VarId>>>,
    pub q_flow: Vec<Vec<Vec<VarId>>>,
    /// `[scenario][branch]` fictitious connectivity flow.
    pub fict_flow: Vec<Vec<VarId>>,
    /// `[scenario][mg]` fictitious injection.
    pub fict_inj: Vec<Vec<VarId>>,
}

/// Branches that must stay open in a scenario: down at any interval of the
/// horizon trajectory.
pub fn damaged_branches(set: &ScenarioSet, s: usize, horizon: usize) -> Vec<bool> {
    set.scenarios[s]
        .branches_up
        .iter()
        .map(|tr| tr.iter().take(horizon).any(|&up| !up))
        .collect()
}

pub fn build_model(ctx: &ModelContext) -> Result<(MilpModel, VarRoles), AssembleError> {
    let n_s = ctx.scenarios.scenarios.len();
    if n_s == 0 {
        return Err(AssembleError::NoScenarios);
    }
    if ctx.layers.len() != n_s {
        return Err(AssembleError::LayerScenarioMismatch(ctx.layers.len(), n_s));
    }
    if ctx.scenarios.horizon < ctx.horizon {
        return Err(AssembleError::ShortScenario(
            ctx.scenarios.horizon,
            ctx.horizon,
        ));
    }
    for per_s in ctx.layers {
        if per_s.len() != ctx.fleet.len() {
            return Err(AssembleError::FleetMismatch(ctx.fleet.len(), per_s.len()));
        }
    }

    let ds = ctx.grid;
    let h = ctx.horizon;
    let dt = ctx.dt_h;
    let mut m = MilpModel::new("restoration-horizon");
    let mut roles = VarRoles::default();

    // Microgrid bus lookup: bus -> mg index.
    let mut mg_at_bus: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, mg) in ctx.microgrids.iter().enumerate() {
        mg_at_bus.insert(mg.bus, i);
    }
    // Site -> mg index for holding-arc coupling.
    let mut mg_at_site: BTreeMap<SiteId, usize> = BTreeMap::new();
    for (i, mg) in ctx.microgrids.iter().enumerate() {
        mg_at_site.insert(mg.site, i);
    }

    // Big-M constants: fictitious flow is bounded by the feeder bus count;
    // the voltage disjunction by the worst possible closed-branch drop plus
    // the voltage range.
    let feeder_buses: Vec<usize> = (0..ds.n_feeders)
        .map(|f| ds.buses.iter().filter(|b| b.feeder == f).count())
        .collect();
    let m_volt = (ds.v_max - ds.v_min)
        + ds.branches
            .iter()
            .map(|b| (b.r_pu + b.x_pu) * std::f64::consts::SQRT_2 * b.s_max_pu / ds.v0)
            .fold(0.0f64, f64::max);

    let gammas: Vec<f64> = ctx.scenarios.scenarios.iter().map(|s| s.gamma).collect();

    for s in 0..n_s {
        let sc = &ctx.scenarios.scenarios[s];
        let gamma = gammas[s];
        let damaged = damaged_branches(ctx.scenarios, s, h);

        // --- routing variables and rows --------------------------------
        let mut zeta_s = Vec::with_capacity(ctx.fleet.len());
        for (w, layer) in ctx.layers[s].iter().enumerate() {
            let vars: Vec<VarId> = layer
                .arcs
                .iter()
                .enumerate()
                .map(|(a, _)| {
                    m.add_var(
                        format!("zeta[s{s},w{w},a{a}]"),
                        VarKind::Binary,
                        0.0,
                        1.0,
                    )
                })
                .collect();
            for t in 0..h {
                let cut = layer.cut_set(t).expect("t within horizon");
                let coeffs = cut.iter().map(|&a| (vars[a], 1.0)).collect();
                m.add_row("route_cut", coeffs, Sense::Eq, 1.0);
            }
            for (node, (inflow, outflow)) in layer.flows_per_node() {
                match node {
                    Endpoint::Source => {
                        let coeffs = outflow.iter().map(|&a| (vars[a], 1.0)).collect();
                        m.add_row("route_source", coeffs, Sense::Eq, 1.0);
                    }
                    Endpoint::Sink => {}
                    Endpoint::At { .. } => {
                        let mut coeffs: Vec<(VarId, f64)> =
                            inflow.iter().map(|&a| (vars[a], 1.0)).collect();
                        coeffs.extend(outflow.iter().map(|&a| (vars[a], -1.0)));
                        m.add_row("route_conservation", coeffs, Sense::Eq, 0.0);
                    }
                }
            }
            // Transportation cost on the arcs that represent road time.
            let weight = match ctx.options.transport_cost_weighting {
                TransportWeighting::Expected => gamma,
                TransportWeighting::Nominal => 1.0,
            };
            for (a, arc) in layer.arcs.iter().enumerate() {
                if arc.cost_usd != 0.0 {
                    m.add_obj(vars[a], weight * arc.cost_usd);
                }
            }
            zeta_s.push(vars);
        }

        // --- storage operation ------------------------------------------
        let mut e_mess_s = Vec::with_capacity(ctx.fleet.len());
        for (w, mess) in ctx.fleet.iter().enumerate() {
            let layer = &ctx.layers[s][w];
            // Charging variables exist exactly where a microgrid holding
            // arc exists.
            for t in 0..h {
                let mut p_ch_here: Vec<(usize, VarId)> = Vec::new();
                let mut p_dch_here: Vec<(usize, VarId)> = Vec::new();
                let mut hold_zetas: Vec<VarId> = Vec::new();
                for (&site, &g) in &mg_at_site {
                    if let Some(arc) = layer.holding_arc(site, t) {
                        let pc = m.add_var(
                            format!("Pch[s{s},w{w},m{g},t{t}]"),
                            VarKind::Continuous,
                            0.0,
                            mess.p_ch_max_mw,
                        );
                        let pd = m.add_var(
                            format!("Pdch[s{s},w{w},m{g},t{t}]"),
                            VarKind::Continuous,
                            0.0,
                            mess.p_dch_max_mw,
                        );
                        let z = zeta_s[w][arc];
                        m.add_row(
                            "mess_charge_arc",
                            vec![(pc, 1.0), (z, -mess.p_ch_max_mw)],
                            Sense::Le,
                            0.0,
                        );
                        m.add_row(
                            "mess_discharge_arc",
                            vec![(pd, 1.0), (z, -mess.p_dch_max_mw)],
                            Sense::Le,
                            0.0,
                        );
                        roles.p_ch.insert((s, w, g, t), pc);
                        roles.p_dch.insert((s, w, g, t), pd);
                        p_ch_here.push((g, pc));
                        p_dch_here.push((g, pd));
                        hold_zetas.push(z);
                    }
                }
                if !hold_zetas.is_empty() {
                    let ic = m.add_var(
                        format!("Ich[s{s},w{w},t{t}]"),
                        VarKind::Binary,
                        0.0,
                        1.0,
                    );
                    let id = m.add_var(
                        format!("Idch[s{s},w{w},t{t}]"),
                        VarKind::Binary,
                        0.0,
                        1.0,
                    );
                    let mut coeffs: Vec<(VarId, f64)> =
                        p_ch_here.iter().map(|&(_, v)| (v, 1.0)).collect();
                    coeffs.push((ic, -mess.p_ch_max_mw));
                    m.add_row("mess_charge_status", coeffs, Sense::Le, 0.0);
                    let mut coeffs: Vec<(VarId, f64)> =
                        p_dch_here.iter().map(|&(_, v)| (v, 1.0)).collect();
                    coeffs.push((id, -mess.p_dch_max_mw));
                    m.add_row("mess_discharge_status", coeffs, Sense::Le, 0.0);
                    let mut coeffs = vec![(ic, 1.0), (id, 1.0)];
                    coeffs.extend(hold_zetas.iter().map(|&z| (z, -1.0)));
                    m.add_row("mess_status_presence", coeffs, Sense::Le, 0.0);
                    roles.i_ch.insert((s, w, t), ic);
                    roles.i_dch.insert((s, w, t), id);
                }
            }
            // Energy recursion and bounds.
            let e_vars: Vec<VarId> = (0..h)
                .map(|t| {
                    m.add_var(
                        format!("Emess[s{s},w{w},t{t}]"),
                        VarKind::Continuous,
                        mess.e_cap_mwh * mess.soc_min,
                        mess.e_cap_mwh * mess.soc_max,
                    )
                })
                .collect();
            for t in 0..h {
                let mut coeffs = vec![(e_vars[t], 1.0)];
                let mut rhs = 0.0;
                if t == 0 {
                    rhs = ctx.e_mess_init[w];
                } else {
                    coeffs.push((e_vars[t - 1], -1.0));
                }
                for g in 0..ctx.microgrids.len() {
                    if let Some(&pc) = roles.p_ch.get(&(s, w, g, t)) {
                        coeffs.push((pc, -dt * mess.eta_ch));
                    }
                    if let Some(&pd) = roles.p_dch.get(&(s, w, g, t)) {
                        coeffs.push((pd, dt / mess.eta_dch));
                    }
                }
                m.add_row("mess_energy", coeffs, Sense::Eq, rhs);
            }
            e_mess_s.push(e_vars);
            let _ = layer;
        }
        roles.zeta.push(zeta_s);
        roles.e_mess.push(e_mess_s);

        // --- reconfiguration: switch states and connectivity flow -------
        let alpha_s: Vec<VarId> = ds
            .branches
            .iter()
            .enumerate()
            .map(|(b, br)| {
                let name = format!("alpha[s{s},{}]", br.label);
                if damaged[b] {
                    m.add_var(name, VarKind::Continuous, 0.0, 0.0)
                } else if !br.switchable {
                    m.add_var(name, VarKind::Continuous, 1.0, 1.0)
                } else {
                    m.add_var(name, VarKind::Binary, 0.0, 1.0)
                }
            })
            .collect();
        let fict_flow_s: Vec<VarId> = ds
            .branches
            .iter()
            .enumerate()
            .map(|(b, br)| {
                let big_m = feeder_buses[br.feeder] as f64;
                let v = m.add_var(
                    format!("fflow[s{s},{}]", br.label),
                    VarKind::Continuous,
                    -big_m,
                    big_m,
                );
                m.add_row(
                    "topo_flow_bound",
                    vec![(v, 1.0), (alpha_s[b], -big_m)],
                    Sense::Le,
                    0.0,
                );
                m.add_row(
                    "topo_flow_bound",
                    vec![(v, 1.0), (alpha_s[b], big_m)],
                    Sense::Ge,
                    0.0,
                );
                if ctx.options.strict_redundant_flow_rows {
                    m.add_row(
                        "topo_flow_bound_redundant",
                        vec![(v, 1.0), (alpha_s[b], big_m)],
                        Sense::Le,
                        2.0 * big_m,
                    );
                    m.add_row(
                        "topo_flow_bound_redundant",
                        vec![(v, 1.0), (alpha_s[b], -big_m)],
                        Sense::Ge,
                        -2.0 * big_m,
                    );
                }
                v
            })
            .collect();
        let fict_inj_s: Vec<VarId> = ctx
            .microgrids
            .iter()
            .enumerate()
            .map(|(g, _)| {
                m.add_var(
                    format!("finj[s{s},m{g}]"),
                    VarKind::Continuous,
                    1.0,
                    f64::INFINITY,
                )
            })
            .collect();
        for bus in 0..ds.n_buses() {
            let mut coeffs: Vec<(VarId, f64)> = Vec::new();
            for &b in &ds.bus_out[bus] {
                coeffs.push((fict_flow_s[b], 1.0));
            }
            for &b in &ds.bus_in[bus] {
                coeffs.push((fict_flow_s[b], -1.0));
            }
            match mg_at_bus.get(&bus) {
                Some(&g) => {
                    coeffs.push((fict_inj_s[g], -1.0));
                    m.add_row("topo_source_balance", coeffs, Sense::Eq, 0.0);
                }
                None => {
                    m.add_row("topo_balance", coeffs, Sense::Eq, -1.0);
                }
            }
        }
        m.add_row(
            "topo_count",
            alpha_s.iter().map(|&a| (a, 1.0)).collect(),
            Sense::Eq,
            ds.required_closed() as f64,
        );
        roles.alpha.push(alpha_s.clone());
        roles.fict_flow.push(fict_flow_s);
        roles.fict_inj.push(fict_inj_s);

        // --- branch-flow physics per interval ----------------------------
        let mut p_flow_s = vec![Vec::with_capacity(h); ds.n_branches()];
        let mut q_flow_s = vec![Vec::with_capacity(h); ds.n_branches()];
        let mut v_s = vec![Vec::with_capacity(h); ds.n_buses()];
        let mut p_r_s = vec![Vec::with_capacity(h); ds.n_buses()];
        let mut q_r_s = vec![Vec::with_capacity(h); ds.n_buses()];
        let mut p_g_s = vec![Vec::with_capacity(h); ctx.microgrids.len()];
        let mut q_g_s = vec![Vec::with_capacity(h); ctx.microgrids.len()];
        let mut p_dg_s = vec![Vec::with_capacity(h); ctx.microgrids.len()];
        let mut q_dg_s = vec![Vec::with_capacity(h); ctx.microgrids.len()];
        let mut e_dg_s = vec![Vec::with_capacity(h); ctx.microgrids.len()];
        for t in 0..h {
            for (b, br) in ds.branches.iter().enumerate() {
                let p = m.add_var(
                    format!("Pbr[s{s},{},t{t}]", br.label),
                    VarKind::Continuous,
                    -br.s_max_pu,
                    br.s_max_pu,
                );
                let q = m.add_var(
                    format!("Qbr[s{s},{},t{t}]", br.label),
                    VarKind::Continuous,
                    -br.s_max_pu,
                    br.s_max_pu,
                );
                let a = roles.alpha[s][b];
                let cap = br.s_max_pu;
                let root2 = std::f64::consts::SQRT_2;
                m.add_row("cap_p_hi", vec![(p, 1.0), (a, -cap)], Sense::Le, 0.0);
                m.add_row("cap_p_lo", vec![(p, 1.0), (a, cap)], Sense::Ge, 0.0);
                m.add_row("cap_q_hi", vec![(q, 1.0), (a, -cap)], Sense::Le, 0.0);
                m.add_row("cap_q_lo", vec![(q, 1.0), (a, cap)], Sense::Ge, 0.0);
                m.add_row(
                    "cap_pq_hi",
                    vec![(p, 1.0), (q, 1.0), (a, -root2 * cap)],
                    Sense::Le,
                    0.0,
                );
                m.add_row(
                    "cap_pq_lo",
                    vec![(p, 1.0), (q, 1.0), (a, root2 * cap)],
                    Sense::Ge,
                    0.0,
                );
                m.add_row(
                    "cap_pmq_hi",
                    vec![(p, 1.0), (q, -1.0), (a, -root2 * cap)],
                    Sense::Le,
                    0.0,
                );
                m.add_row(
                    "cap_pmq_lo",
                    vec![(p, 1.0), (q, -1.0), (a, root2 * cap)],
                    Sense::Ge,
                    0.0,
                );
                p_flow_s[b].push(p);
                q_flow_s[b].push(q);
            }
            for bus in 0..ds.n_buses() {
                let is_mg = mg_at_bus.contains_key(&bus);
                let (lo, hi) = if is_mg {
                    (ds.v0, ds.v0)
                } else {
                    (ds.v_min, ds.v_max)
                };
                let v = m.add_var(
                    format!("v[s{s},{},t{t}]", ds.buses[bus].label),
                    VarKind::Continuous,
                    lo,
                    hi,
                );
                v_s[bus].push(v);
                let p_d = sc.loads_mw[bus][t];
                let pr = m.add_var(
                    format!("Pr[s{s},{},t{t}]", ds.buses[bus].label),
                    VarKind::Continuous,
                    0.0,
                    p_d,
                );
                let qr = m.add_var(
                    format!("Qr[s{s},{},t{t}]", ds.buses[bus].label),
                    VarKind::Continuous,
                    0.0,
                    f64::INFINITY,
                );
                let tan_phi = ds.buses[bus].pf.acos().tan();
                m.add_row(
                    "load_power_factor",
                    vec![(qr, 1.0), (pr, -tan_phi)],
                    Sense::Eq,
                    0.0,
                );
                p_r_s[bus].push(pr);
                q_r_s[bus].push(qr);
            }
            // Voltage drop on closed branches.
            for (b, br) in ds.branches.iter().enumerate() {
                let a = roles.alpha[s][b];
                let p = p_flow_s[b][t];
                let q = q_flow_s[b][t];
                let vi = v_s[br.from][t];
                let vj = v_s[br.to][t];
                let (cr, cx) = (br.r_pu / ds.v0, br.x_pu / ds.v0);
                m.add_row(
                    "volt_drop_hi",
                    vec![(vj, 1.0), (vi, -1.0), (p, -cr), (q, -cx), (a, m_volt)],
                    Sense::Le,
                    m_volt,
                );
                m.add_row(
                    "volt_drop_lo",
                    vec![(vj, 1.0), (vi, -1.0), (p, -cr), (q, -cx), (a, -m_volt)],
                    Sense::Ge,
                    -m_volt,
                );
            }
            // Microgrid resources.
            for (g, mg) in ctx.microgrids.iter().enumerate() {
                let pdg = m.add_var(
                    format!("Pdg[s{s},m{g},t{t}]"),
                    VarKind::Continuous,
                    0.0,
                    mg.p_dg_max_mw,
                );
                let qdg = m.add_var(
                    format!("Qdg[s{s},m{g},t{t}]"),
                    VarKind::Continuous,
                    -mg.q_dg_max_mvar,
                    mg.q_dg_max_mvar,
                );
                let pg = m.add_var(
                    format!("Pg[s{s},m{g},t{t}]"),
                    VarKind::Continuous,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                );
                let qg = m.add_var(
                    format!("Qg[s{s},m{g},t{t}]"),
                    VarKind::Continuous,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                );
                let edg = m.add_var(
                    format!("Edg[s{s},m{g},t{t}]"),
                    VarKind::Continuous,
                    mg.e_min_mwh,
                    mg.e_max_mwh,
                );
                // Aggregated injection: local generation plus fleet
                // discharge minus fleet charge minus local demand.
                let mut coeffs = vec![(pg, 1.0), (pdg, -1.0)];
                for w in 0..ctx.fleet.len() {
                    if let Some(&pd) = roles.p_dch.get(&(s, w, g, t)) {
                        coeffs.push((pd, -1.0));
                    }
                    if let Some(&pc) = roles.p_ch.get(&(s, w, g, t)) {
                        coeffs.push((pc, 1.0));
                    }
                }
                m.add_row("mg_injection_p", coeffs, Sense::Eq, -ctx.mg_local_p[g][t]);
                let q_local = reactive_from_active(ctx.mg_local_p[g][t], mg.local_pf)
                    .unwrap_or(0.0);
                m.add_row(
                    "mg_injection_q",
                    vec![(qg, 1.0), (qdg, -1.0)],
                    Sense::Eq,
                    -q_local,
                );
                // Energy recursion.
                let mut coeffs = vec![(edg, 1.0), (pdg, dt)];
                let mut rhs = 0.0;
                if t == 0 {
                    rhs = ctx.e_mg_init[g];
                } else {
                    coeffs.push((e_dg_s[g][t - 1], -1.0));
                }
                m.add_row("mg_energy", coeffs, Sense::Eq, rhs);
                p_dg_s[g].push(pdg);
                q_dg_s[g].push(qdg);
                p_g_s[g].push(pg);
                q_g_s[g].push(qg);
                e_dg_s[g].push(edg);
            }
            // Bus balances.
            for bus in 0..ds.n_buses() {
                let mut coeffs: Vec<(VarId, f64)> = Vec::new();
                for &b in &ds.bus_out[bus] {
                    coeffs.push((p_flow_s[b][t], 1.0));
                }
                for &b in &ds.bus_in[bus] {
                    coeffs.push((p_flow_s[b][t], -1.0));
                }
                coeffs.push((p_r_s[bus][t], 1.0));
                if let Some(&g) = mg_at_bus.get(&bus) {
                    coeffs.push((p_g_s[g][t], -1.0));
                }
                m.add_row("flow_p_balance", coeffs, Sense::Eq, 0.0);
                let mut coeffs: Vec<(VarId, f64)> = Vec::new();
                for &b in &ds.bus_out[bus] {
                    coeffs.push((q_flow_s[b][t], 1.0));
                }
                for &b in &ds.bus_in[bus] {
                    coeffs.push((q_flow_s[b][t], -1.0));
                }
                coeffs.push((q_r_s[bus][t], 1.0));
                if let Some(&g) = mg_at_bus.get(&bus) {
                    coeffs.push((q_g_s[g][t], -1.0));
                }
                m.add_row("flow_q_balance", coeffs, Sense::Eq, 0.0);
            }
        }
        roles.p_flow.push(p_flow_s);
        roles.q_flow.push(q_flow_s);
        roles.v.push(v_s);
        roles.p_restored.push(p_r_s);
        roles.q_restored.push(q_r_s);
        roles.p_dg.push(p_dg_s);
        roles.q_dg.push(q_dg_s);
        roles.p_g.push(p_g_s);
        roles.q_g.push(q_g_s);
        roles.e_dg.push(e_dg_s);

        // --- objective: interruption, generation, battery wear -----------
        for t in 0..h {
            for bus in 0..ds.n_buses() {
                let w_cost = ds.buses[bus].w_usd_per_mwh;
                let p_d = sc.loads_mw[bus][t];
                m.add_obj(roles.p_restored[s][bus][t], -gamma * w_cost * dt);
                m.obj_offset += gamma * w_cost * p_d * dt;
            }
            for (g, mg) in ctx.microgrids.iter().enumerate() {
                m.add_obj(roles.p_dg[s][g][t], gamma * mg.c_gen_usd_per_mwh * dt);
            }
            for (w, mess) in ctx.fleet.iter().enumerate() {
                for g in 0..ctx.microgrids.len() {
                    if let Some(&pc) = roles.p_ch.get(&(s, w, g, t)) {
                        m.add_obj(pc, gamma * mess.c_bat_usd_per_mwh * dt);
                    }
                    if let Some(&pd) = roles.p_dch.get(&(s, w, g, t)) {
                        m.add_obj(pd, gamma * mess.c_bat_usd_per_mwh * dt);
                    }
                }
            }
        }
    }

    // --- first-stage ties across scenarios ------------------------------
    if n_s > 1 {
        // Routing: arcs of the first cut, matched by identity.
        for w in 0..ctx.fleet.len() {
            let mut by_identity: BTreeMap<(ArcKind, Endpoint, Endpoint), Vec<(usize, VarId)>> =
                BTreeMap::new();
            for s in 0..n_s {
                let layer = &ctx.layers[s][w];
                for a in layer.cut_set(0).expect("horizon >= 1") {
                    let arc = &layer.arcs[a];
                    by_identity
                        .entry((arc.kind, arc.tail, arc.head))
                        .or_default()
                        .push((s, roles.zeta[s][w][a]));
                }
            }
            for (_, members) in by_identity {
                if ctx.options.pairwise_nonanticipativity {
                    if members.len() < n_s {
                        for &(_, var) in &members {
                            m.add_row("tie_first_stage_route", vec![(var, 1.0)], Sense::Eq, 0.0);
                        }
                    } else {
                        for pair in members.windows(2) {
                            m.add_row(
                                "tie_first_stage_route",
                                vec![(pair[0].1, 1.0), (pair[1].1, -1.0)],
                                Sense::Eq,
                                0.0,
                            );
                        }
                    }
                } else {
                    for &(_, var) in &members {
                        let mut coeffs = vec![(var, 1.0)];
                        for &(so, vo) in &members {
                            coeffs.push((vo, -gammas[so]));
                        }
                        m.add_row("tie_first_stage_route", coeffs, Sense::Eq, 0.0);
                    }
                }
            }
        }
        // Topology: every branch state is first-stage.
        for b in 0..ds.n_branches() {
            for s in 0..n_s {
                if ctx.options.pairwise_nonanticipativity {
                    if s + 1 < n_s {
                        m.add_row(
                            "tie_first_stage_topo",
                            vec![(roles.alpha[s][b], 1.0), (roles.alpha[s + 1][b], -1.0)],
                            Sense::Eq,
                            0.0,
                        );
                    }
                } else {
                    let mut coeffs = vec![(roles.alpha[s][b], 1.0)];
                    for so in 0..n_s {
                        coeffs.push((roles.alpha[so][b], -gammas[so]));
                    }
                    m.add_row("tie_first_stage_topo", coeffs, Sense::Eq, 0.0);
                }
            }
        }
    }

    Ok((m, roles))
}

/// The decisions carried from a stochastic solve into implementation and
/// re-optimization: one first-cut arc per vehicle plus the full switch
/// state.
#[derive(Debug, Clone)]
pub struct FirstStageDecision {
    /// Per vehicle: (kind, tail, head) of the implemented first-cut arc.
    pub arcs: Vec<(ArcKind, Endpoint, Endpoint)>,
    pub closed: Vec<bool>,
}

/// Pins the first interval of a freshly built (single-scenario) model to an
/// already-implemented decision: the chosen first-cut arc is forced on, its
/// alternatives off, and every switch state is frozen.
pub fn fix_first_stage(
    model: &mut MilpModel,
    roles: &VarRoles,
    layers: &[TimeSpaceNetwork],
    decision: &FirstStageDecision,
) -> Result<(), AssembleError> {
    for (w, layer) in layers.iter().enumerate() {
        let want = decision.arcs[w];
        let cut = layer.cut_set(0).expect("horizon >= 1");
        let mut found = false;
        for a in cut {
            let arc = &layer.arcs[a];
            let var = roles.zeta[0][w][a];
            if (arc.kind, arc.tail, arc.head) == want {
                model.set_bounds(var, 1.0, 1.0);
                found = true;
            } else {
                model.set_bounds(var, 0.0, 0.0);
            }
        }
        if !found {
            return Err(AssembleError::UnknownFirstStageArc(format!(
                "vehicle {w}: {:?}",
                want
            )));
        }
    }
    for (b, &closed) in decision.closed.iter().enumerate() {
        let var = roles.alpha[0][b];
        let v = model.var(var);
        let val = if closed { 1.0 } else { 0.0 };
        // Damaged branches are already pinned open; never widen bounds.
        if v.lb <= val && val <= v.ub {
            model.set_bounds(var, val, val);
        }
    }
    Ok(())
}

/// Best-effort integer start point: every vehicle holds where it enters,
/// and the switch state is a greedy deterministic spanning forest. Returns
/// an empty hint when the structure does not admit one.
pub fn start_hint(
    ctx: &ModelContext,
    roles: &VarRoles,
) -> Vec<(VarId, f64)> {
    let mut hint: Vec<(VarId, f64)> = Vec::new();
    let n_s = ctx.scenarios.scenarios.len();
    for s in 0..n_s {
        for (w, layer) in ctx.layers[s].iter().enumerate() {
            // The hold-in-place path: source arc, then holding at the entry
            // site (when the layer kept those arcs), then the exit there.
            let Some(path) = hold_in_place_path(layer) else {
                return Vec::new();
            };
            for (a, _) in layer.arcs.iter().enumerate() {
                let on = path.contains(&a);
                hint.push((roles.zeta[s][w][a], if on { 1.0 } else { 0.0 }));
            }
            for t in 0..ctx.horizon {
                if let Some(&ic) = roles.i_ch.get(&(s, w, t)) {
                    hint.push((ic, 0.0));
                    hint.push((roles.i_dch[&(s, w, t)], 0.0));
                }
            }
        }
        let Some(closed) = greedy_forest(ctx.grid, &damaged_branches(ctx.scenarios, s, ctx.horizon))
        else {
            return Vec::new();
        };
        for (b, &c) in closed.iter().enumerate() {
            let var = roles.alpha[s][b];
            if ctx.grid.branches[b].switchable && !damaged_branches(ctx.scenarios, s, ctx.horizon)[b]
            {
                hint.push((var, if c { 1.0 } else { 0.0 }));
            }
        }
    }
    hint
}

/// Follows source -> (site,0) -> holding chain -> exit; `None` when any
/// link is missing.
fn hold_in_place_path(layer: &TimeSpaceNetwork) -> Option<Vec<usize>> {
    let mut path = Vec::new();
    let mut at: Option<(SiteId, usize)> = None;
    for (a, arc) in layer.arcs.iter().enumerate() {
        if arc.kind == ArcKind::Source {
            match arc.head {
                Endpoint::At { site, t } => {
                    path.push(a);
                    at = Some((site, t));
                }
                Endpoint::Sink => {
                    // Out-of-service layer: the single arc is the path.
                    return Some(vec![a]);
                }
                Endpoint::Source => unreachable!(),
            }
            break;
        }
    }
    let (site, mut t) = at?;
    while t < layer.horizon {
        let a = layer.holding_arc(site, t)?;
        path.push(a);
        t += 1;
    }
    let exit = layer.arcs.iter().position(|arc| {
        arc.kind == ArcKind::Exit && arc.tail == Endpoint::At { site, t: layer.horizon }
    })?;
    path.push(exit);
    Some(path)
}

/// Deterministic spanning forest: fixed-closed branches first, then
/// switchable ones in index order, skipping closures that would form a
/// cycle or join two source trees. `None` when the count cannot be met.
fn greedy_forest(ds: &DistributionSystem, damaged: &[bool]) -> Option<Vec<bool>> {
    let n = ds.n_buses();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut has_mg: Vec<bool> = vec![false; n];
    for &mb in &ds.mg_bus {
        has_mg[mb] = true;
    }
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut closed = vec![false; ds.n_branches()];
    let mut count = 0usize;
    // Two passes: forced-closed branches, then optional ones.
    for pass in 0..2 {
        for (b, br) in ds.branches.iter().enumerate() {
            if damaged[b] {
                continue;
            }
            let forced = !br.switchable;
            if (pass == 0) != forced {
                continue;
            }
            let (ra, rb) = (find(&mut parent, br.from), find(&mut parent, br.to));
            if ra == rb {
                if forced {
                    return None; // fixed branches close a cycle
                }
                continue;
            }
            if has_mg[ra] && has_mg[rb] {
                if forced {
                    return None;
                }
                continue;
            }
            parent[ra.max(rb)] = ra.min(rb);
            let root = find(&mut parent, ra);
            has_mg[root] = has_mg[ra] || has_mg[rb];
            closed[b] = true;
            count += 1;
        }
    }
    if count == ds.required_closed() {
        Some(closed)
    } else {
        None
    }
}

/// Convenience wrapper for the deterministic re-optimization: builds the
/// single-scenario model and pins the implemented first stage.
pub fn reopt_model(
    ctx: &ModelContext,
    decision: &FirstStageDecision,
) -> Result<(MilpModel, VarRoles), AssembleError> {
    let (mut model, roles) = build_model(ctx)?;
    fix_first_stage(&mut model, &roles, &ctx.layers[0], decision)?;
    Ok((model, roles))
}

/// Default solve options used across the rolling loop.
pub fn default_solve_options() -> SolveOptions {
    SolveOptions::default()
}
