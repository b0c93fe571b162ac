//! Per-vehicle, per-scenario time-space layers: nodes are (site, interval)
//! pairs plus one source and one sink, arcs encode holds, travel-time-aware
//! moves, the committed start, and end-of-horizon exits. Also provides the
//! per-interval cut-sets the routing constraints are written over, and the
//! formulation-size accounting against the virtual-node expansion.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::transport::{Site, SiteId, SiteKind};

pub type ArcId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Source,
    At { site: SiteId, t: usize },
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ArcKind {
    Source,
    Holding,
    Moving,
    Exit,
}

/// One arc of a layer. `span` is the half-open interval range of cuts the
/// arc crosses: a vehicle on this arc occupies exactly the intervals
/// `span.0 .. span.1`.
#[derive(Debug, Clone)]
pub struct Arc {
    pub kind: ArcKind,
    pub tail: Endpoint,
    pub head: Endpoint,
    pub span: (usize, usize),
    pub cost_usd: f64,
}

impl Arc {
    pub fn crosses(&self, t: usize) -> bool {
        self.span.0 <= t && t < self.span.1
    }

    pub fn head_site(&self) -> Option<SiteId> {
        match self.head {
            Endpoint::At { site, .. } => Some(site),
            _ => None,
        }
    }

    pub fn tail_site(&self) -> Option<SiteId> {
        match self.tail {
            Endpoint::At { site, .. } => Some(site),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TsnError {
    #[error("layer has no feasible source-to-sink path")]
    InfeasibleLayer,
    #[error("interval {0} outside horizon {1}")]
    CutOutOfRange(usize, usize),
    #[error("horizon must be at least one interval")]
    EmptyHorizon,
}

/// Where the vehicle enters the layer.
#[derive(Debug, Clone)]
pub enum StartSpec {
    AtSite(SiteId),
    /// Committed trip: the vehicle appears at its destination after the
    /// remaining travel time (clipped to the horizon).
    InTransit { dest: SiteId, arrival_in: u32 },
    /// Stranded at a plain intersection; per-site travel times from there.
    AtNode { to_sites: Vec<Option<u32>> },
}

/// End-of-horizon rule: anywhere at zero cost inside a rolling horizon, or
/// depot-only when the run truly ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkPolicy {
    Relaxed,
    DepotReturn,
}

/// Which arcs the operating mode admits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerShape {
    /// Full rescheduling freedom.
    Dynamic,
    /// One outbound trip at the first interval, then holding only.
    AllocationInitial,
    /// Committed allocation: hold at the chosen site for the whole horizon.
    AllocationHeld(SiteId),
}

#[derive(Debug, Clone)]
pub struct LayerInput<'a> {
    pub horizon: usize,
    pub sites: &'a [Site],
    /// Site-to-site travel time in intervals; `None` = unreachable.
    pub travel: &'a [Vec<Option<u32>>],
    pub start: StartSpec,
    pub sinks: SinkPolicy,
    pub shape: LayerShape,
    pub c_tran_usd_per_h: f64,
    pub dt_h: f64,
}

/// One immutable layer: deterministic arc order (kind, tail time, tail
/// site, head time, head site) defines the arc-to-variable bijection.
#[derive(Debug, Clone)]
pub struct TimeSpaceNetwork {
    pub horizon: usize,
    pub arcs: Vec<Arc>,
    hold_by_site_t: BTreeMap<(SiteId, usize), ArcId>,
    nodes: Vec<Endpoint>,
}

impl TimeSpaceNetwork {
    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// All nodes with at least one incident arc, sources and sinks included.
    pub fn nodes(&self) -> &[Endpoint] {
        &self.nodes
    }

    /// The holding arc at (site, t), when the layer admits one.
    pub fn holding_arc(&self, site: SiteId, t: usize) -> Option<ArcId> {
        self.hold_by_site_t.get(&(site, t)).copied()
    }

    /// Arcs crossing the cut between interval boundaries t and t+1: every
    /// source-to-sink path uses exactly one of them.
    pub fn cut_set(&self, t: usize) -> Result<Vec<ArcId>, TsnError> {
        if t >= self.horizon {
            return Err(TsnError::CutOutOfRange(t, self.horizon));
        }
        Ok(self
            .arcs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.crosses(t))
            .map(|(i, _)| i)
            .collect())
    }

    /// In-flows and out-flows per interior node, for the conservation rows.
    pub fn flows_per_node(&self) -> BTreeMap<Endpoint, (Vec<ArcId>, Vec<ArcId>)> {
        let mut map: BTreeMap<Endpoint, (Vec<ArcId>, Vec<ArcId>)> = BTreeMap::new();
        for (i, a) in self.arcs.iter().enumerate() {
            map.entry(a.head).or_default().0.push(i);
            map.entry(a.tail).or_default().1.push(i);
        }
        map
    }

    /// Text dump for inspection and golden-file comparison.
    pub fn dump(&self, sites: &[Site]) -> String {
        let name = |e: &Endpoint| match e {
            Endpoint::Source => "source".to_string(),
            Endpoint::Sink => "sink".to_string(),
            Endpoint::At { site, t } => format!("{}@{}", sites[*site].label, t),
        };
        let mut s = format!("horizon {}\n", self.horizon);
        for n in &self.nodes {
            s.push_str(&format!("node {}\n", name(n)));
        }
        for a in &self.arcs {
            s.push_str(&format!(
                "arc {:?} {} -> {} span {}..{} cost {}\n",
                a.kind,
                name(&a.tail),
                name(&a.head),
                a.span.0,
                a.span.1,
                a.cost_usd
            ));
        }
        s
    }
}

/// Builds one layer. Unreachable moves are simply absent; arcs that would
/// overrun the horizon are never generated. Fails when no source-to-sink
/// path survives pruning.
pub fn build_tsn(input: &LayerInput) -> Result<TimeSpaceNetwork, TsnError> {
    if input.horizon == 0 {
        return Err(TsnError::EmptyHorizon);
    }
    let h = input.horizon;
    let move_cost = |t: u32| input.c_tran_usd_per_h * input.dt_h * t as f64;
    let mut arcs: Vec<Arc> = Vec::new();

    // Source arcs.
    let start_site = match &input.start {
        StartSpec::AtSite(s) => {
            arcs.push(Arc {
                kind: ArcKind::Source,
                tail: Endpoint::Source,
                head: Endpoint::At { site: *s, t: 0 },
                span: (0, 0),
                cost_usd: 0.0,
            });
            Some(*s)
        }
        StartSpec::InTransit { dest, arrival_in } => {
            let arrive = *arrival_in as usize;
            if arrive >= h {
                // The committed trip outlives this horizon entirely.
                arcs.push(Arc {
                    kind: ArcKind::Source,
                    tail: Endpoint::Source,
                    head: Endpoint::Sink,
                    span: (0, h),
                    cost_usd: 0.0,
                });
                return finalize(input, arcs);
            }
            arcs.push(Arc {
                kind: ArcKind::Source,
                tail: Endpoint::Source,
                head: Endpoint::At {
                    site: *dest,
                    t: arrive,
                },
                span: (0, arrive),
                cost_usd: 0.0,
            });
            Some(*dest)
        }
        StartSpec::AtNode { to_sites } => {
            let mut any = false;
            for (site, tt) in to_sites.iter().enumerate() {
                let Some(tt) = tt else { continue };
                let arrive = (*tt).max(1) as usize;
                if arrive > h {
                    continue;
                }
                any = true;
                arcs.push(Arc {
                    kind: ArcKind::Source,
                    tail: Endpoint::Source,
                    head: Endpoint::At { site, t: arrive },
                    span: (0, arrive),
                    cost_usd: move_cost((*tt).max(1)),
                });
            }
            if !any {
                return Err(TsnError::InfeasibleLayer);
            }
            None
        }
    };

    // Holding arcs.
    let hold_sites: Vec<SiteId> = match &input.shape {
        LayerShape::Dynamic | LayerShape::AllocationInitial => (0..input.sites.len()).collect(),
        LayerShape::AllocationHeld(s) => vec![*s],
    };
    for &site in &hold_sites {
        for t in 0..h {
            arcs.push(Arc {
                kind: ArcKind::Holding,
                tail: Endpoint::At { site, t },
                head: Endpoint::At { site, t: t + 1 },
                span: (t, t + 1),
                cost_usd: 0.0,
            });
        }
    }

    // Moving arcs.
    match &input.shape {
        LayerShape::Dynamic => {
            for i in 0..input.sites.len() {
                for j in 0..input.sites.len() {
                    if i == j {
                        continue;
                    }
                    let Some(tt) = input.travel[i][j] else { continue };
                    let tt = tt.max(1);
                    for t in 0..h {
                        let arrive = t + tt as usize;
                        if arrive > h {
                            break;
                        }
                        arcs.push(Arc {
                            kind: ArcKind::Moving,
                            tail: Endpoint::At { site: i, t },
                            head: Endpoint::At { site: j, t: arrive },
                            span: (t, arrive),
                            cost_usd: move_cost(tt),
                        });
                    }
                }
            }
        }
        LayerShape::AllocationInitial => {
            let from = start_site.expect("allocation starts at a site");
            for (j, s) in input.sites.iter().enumerate() {
                if j == from || s.kind != SiteKind::Microgrid {
                    continue;
                }
                let Some(tt) = input.travel[from][j] else {
                    continue;
                };
                let tt = tt.max(1);
                if (tt as usize) <= h {
                    arcs.push(Arc {
                        kind: ArcKind::Moving,
                        tail: Endpoint::At { site: from, t: 0 },
                        head: Endpoint::At {
                            site: j,
                            t: tt as usize,
                        },
                        span: (0, tt as usize),
                        cost_usd: move_cost(tt),
                    });
                }
            }
        }
        LayerShape::AllocationHeld(_) => {}
    }

    // Exit arcs at the final boundary.
    let exit_sites: Vec<SiteId> = match (input.sinks, &input.shape) {
        (SinkPolicy::DepotReturn, LayerShape::Dynamic) => input
            .sites
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == SiteKind::Depot)
            .map(|(i, _)| i)
            .collect(),
        // Allocation layers and relaxed horizons may end anywhere.
        _ => hold_sites.clone(),
    };
    for site in exit_sites {
        arcs.push(Arc {
            kind: ArcKind::Exit,
            tail: Endpoint::At { site, t: h },
            head: Endpoint::Sink,
            span: (h, h),
            cost_usd: 0.0,
        });
    }

    finalize(input, arcs)
}

/// Fallback layer: hold at the current site for the whole horizon.
pub fn holding_layer(input: &LayerInput, site: SiteId) -> Result<TimeSpaceNetwork, TsnError> {
    if input.horizon == 0 {
        return Err(TsnError::EmptyHorizon);
    }
    let mut arcs = vec![Arc {
        kind: ArcKind::Source,
        tail: Endpoint::Source,
        head: Endpoint::At { site, t: 0 },
        span: (0, 0),
        cost_usd: 0.0,
    }];
    for t in 0..input.horizon {
        arcs.push(Arc {
            kind: ArcKind::Holding,
            tail: Endpoint::At { site, t },
            head: Endpoint::At { site, t: t + 1 },
            span: (t, t + 1),
            cost_usd: 0.0,
        });
    }
    arcs.push(Arc {
        kind: ArcKind::Exit,
        tail: Endpoint::At {
            site,
            t: input.horizon,
        },
        head: Endpoint::Sink,
        span: (input.horizon, input.horizon),
        cost_usd: 0.0,
    });
    finalize(input, arcs)
}

/// Fallback layer for a vehicle stranded with nothing reachable: it sits
/// out the horizon on a single source-to-sink arc.
pub fn out_of_service_layer(horizon: usize) -> Result<TimeSpaceNetwork, TsnError> {
    if horizon == 0 {
        return Err(TsnError::EmptyHorizon);
    }
    let arcs = vec![Arc {
        kind: ArcKind::Source,
        tail: Endpoint::Source,
        head: Endpoint::Sink,
        span: (0, horizon),
        cost_usd: 0.0,
    }];
    Ok(assemble(horizon, arcs))
}

fn finalize(input: &LayerInput, arcs: Vec<Arc>) -> Result<TimeSpaceNetwork, TsnError> {
    let pruned = prune(arcs);
    if pruned.is_empty() {
        return Err(TsnError::InfeasibleLayer);
    }
    Ok(assemble(input.horizon, pruned))
}

fn assemble(horizon: usize, mut arcs: Vec<Arc>) -> TimeSpaceNetwork {
    arcs.sort_by(|a, b| {
        (a.kind, a.span.0, a.tail, a.span.1, a.head)
            .partial_cmp(&(b.kind, b.span.0, b.tail, b.span.1, b.head))
            .unwrap()
    });
    let mut hold_by_site_t = BTreeMap::new();
    let mut nodes = BTreeSet::new();
    for (i, a) in arcs.iter().enumerate() {
        nodes.insert(a.tail);
        nodes.insert(a.head);
        if a.kind == ArcKind::Holding {
            if let Endpoint::At { site, t } = a.tail {
                hold_by_site_t.insert((site, t), i);
            }
        }
    }
    TimeSpaceNetwork {
        horizon,
        arcs,
        hold_by_site_t,
        nodes: nodes.into_iter().collect(),
    }
}

/// Keeps only arcs on some source-to-sink path: forward reachability from
/// the source intersected with backward reachability from the sink. This
/// also drops dead-end nodes entirely.
fn prune(arcs: Vec<Arc>) -> Vec<Arc> {
    let mut fwd: BTreeSet<Endpoint> = BTreeSet::new();
    fwd.insert(Endpoint::Source);
    loop {
        let mut grew = false;
        for a in &arcs {
            if fwd.contains(&a.tail) && !fwd.contains(&a.head) {
                fwd.insert(a.head);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let mut back: BTreeSet<Endpoint> = BTreeSet::new();
    back.insert(Endpoint::Sink);
    loop {
        let mut grew = false;
        for a in &arcs {
            if back.contains(&a.head) && !back.contains(&a.tail) {
                back.insert(a.tail);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    if !fwd.contains(&Endpoint::Sink) {
        return Vec::new();
    }
    arcs.into_iter()
        .filter(|a| fwd.contains(&a.tail) && back.contains(&a.head))
        .collect()
}

/// Size accounting of the arc-wise formulation against the virtual-node
/// expansion, per layer and in total.
#[derive(Debug, Clone, Copy, Default)]
pub struct FormulationCounts {
    pub binaries_proposed: i64,
    pub binaries_virtualnode: i64,
    pub constraints_proposed: i64,
    pub constraints_virtualnode: i64,
    /// Set when the closed-form virtual-node count went negative on a tiny
    /// instance; the comparison is then meaningless.
    pub suspicious: bool,
}

/// Virtual nodes a travel-time matrix would require: one per extra interval
/// of every multi-interval trip, per direction.
pub fn virtual_nodes_needed(travel: &[Vec<Option<u32>>]) -> i64 {
    let mut total = 0i64;
    for (i, row) in travel.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            if let Some(t) = t {
                total += (*t as i64 - 1).max(0);
            }
        }
    }
    total
}

/// Totals over every (vehicle, scenario) layer of one horizon model. The
/// virtual-node formulas follow the published comparison, with the
/// permutation term P(n_sites, 2) applied once per scenario.
pub fn count_formulation(
    layers: &[(&TimeSpaceNetwork, &[Vec<Option<u32>>])],
    horizon: usize,
    n_sites: usize,
    n_scenarios: usize,
) -> FormulationCounts {
    let mut c = FormulationCounts::default();
    for (tsn, travel) in layers {
        let e = tsn.n_arcs() as i64;
        let n = tsn.nodes().len() as i64;
        let dnv = virtual_nodes_needed(travel);
        c.binaries_proposed += e;
        c.constraints_proposed += n;
        c.binaries_virtualnode += e + (dnv + 1) * 2 * horizon as i64;
        c.constraints_virtualnode += n + dnv * horizon as i64;
    }
    let perm = (n_sites as i64) * (n_sites as i64 - 1);
    c.binaries_virtualnode -= perm * n_scenarios as i64;
    c.suspicious = c.binaries_virtualnode < 0 || c.constraints_virtualnode < 0;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::SiteKind;

    fn sites(n_mg: usize, n_depot: usize) -> Vec<Site> {
        let mut v = Vec::new();
        for i in 0..n_mg {
            v.push(Site {
                label: format!("m{}", i + 1),
                kind: SiteKind::Microgrid,
                node: i,
            });
        }
        for i in 0..n_depot {
            v.push(Site {
                label: format!("d{}", i + 1),
                kind: SiteKind::Depot,
                node: n_mg + i,
            });
        }
        v
    }

    fn uniform_travel(n: usize, t: u32) -> Vec<Vec<Option<u32>>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Some(0) } else { Some(t) })
                    .collect()
            })
            .collect()
    }

    fn input<'a>(
        sites: &'a [Site],
        travel: &'a [Vec<Option<u32>>],
        horizon: usize,
        start: StartSpec,
    ) -> LayerInput<'a> {
        LayerInput {
            horizon,
            sites,
            travel,
            start,
            sinks: SinkPolicy::Relaxed,
            shape: LayerShape::Dynamic,
            c_tran_usd_per_h: 80.0,
            dt_h: 1.0,
        }
    }

    #[test]
    fn long_moving_arc_exists_and_crosses_the_right_cuts() {
        // Four microgrids and a depot; the m1 -> m3 trip takes 4 intervals,
        // so departing at interval 1 lands at interval 5 of a 6-interval
        // horizon.
        let s = sites(4, 1);
        let mut travel = uniform_travel(5, 1);
        travel[0][2] = Some(4);
        travel[2][0] = Some(4);
        let inp = input(&s, &travel, 6, StartSpec::AtSite(4));
        let tsn = build_tsn(&inp).unwrap();
        let long = tsn
            .arcs
            .iter()
            .position(|a| {
                a.kind == ArcKind::Moving
                    && a.tail == Endpoint::At { site: 0, t: 1 }
                    && a.head == Endpoint::At { site: 2, t: 5 }
            })
            .expect("the 4-interval arc exists");
        // It crosses exactly the cuts of the intervals it occupies.
        let spans: Vec<usize> = (0..6).filter(|&t| tsn.arcs[long].crosses(t)).collect();
        assert_eq!(spans, vec![1, 2, 3, 4]);
        assert!(tsn.cut_set(2).unwrap().contains(&long));
        // Cost is per travel hour.
        assert_eq!(tsn.arcs[long].cost_usd, 320.0);
    }

    #[test]
    fn degenerate_horizon_leaves_only_holding_and_exit() {
        let s = sites(2, 1);
        let travel = uniform_travel(3, 2); // every trip longer than horizon
        let inp = input(&s, &travel, 1, StartSpec::AtSite(2));
        let tsn = build_tsn(&inp).unwrap();
        let kinds: Vec<ArcKind> = tsn.arcs.iter().map(|a| a.kind).collect();
        assert_eq!(kinds, vec![ArcKind::Source, ArcKind::Holding, ArcKind::Exit]);
        assert_eq!(tsn.cut_set(0).unwrap().len(), 1);
    }

    #[test]
    fn arc_count_matches_hand_enumeration() {
        // 2 sites, unit travel, horizon 3, start at site 1 (the depot).
        // Hand count: source 1; holding 2 sites x 3 intervals = 6; moving
        // (i,t)->(j,t+1) for i != j, t in 0..3 = 2*3 = 6; exits 2. Total 15.
        let s = sites(1, 1);
        let travel = uniform_travel(2, 1);
        let inp = input(&s, &travel, 3, StartSpec::AtSite(1));
        let tsn = build_tsn(&inp).unwrap();
        assert_eq!(tsn.n_arcs(), 15);
        // Every cut carries: holding x2 plus moving x2 = 4 candidates.
        for t in 0..3 {
            assert_eq!(tsn.cut_set(t).unwrap().len(), 4);
        }
        assert!(tsn.cut_set(3).is_err());
    }

    #[test]
    fn holding_arc_lies_in_exactly_its_cut() {
        let s = sites(2, 0);
        let travel = uniform_travel(2, 1);
        let inp = input(&s, &travel, 3, StartSpec::AtSite(0));
        let tsn = build_tsn(&inp).unwrap();
        let hold = tsn.holding_arc(1, 1).unwrap();
        let cuts: Vec<usize> = (0..3).filter(|&t| tsn.arcs[hold].crosses(t)).collect();
        assert_eq!(cuts, vec![1]);
    }

    #[test]
    fn span_length_equals_cut_membership_count() {
        let s = sites(3, 1);
        let mut travel = uniform_travel(4, 1);
        travel[0][1] = Some(3);
        travel[1][0] = Some(3);
        travel[0][2] = Some(2);
        travel[2][0] = Some(2);
        let inp = input(&s, &travel, 5, StartSpec::AtSite(3));
        let tsn = build_tsn(&inp).unwrap();
        for a in &tsn.arcs {
            let member = (0..5).filter(|&t| a.crosses(t)).count();
            assert_eq!(member, a.span.1 - a.span.0);
        }
    }

    #[test]
    fn in_transit_start_attaches_at_committed_arrival() {
        let s = sites(2, 1);
        let travel = uniform_travel(3, 1);
        let inp = input(
            &s,
            &travel,
            4,
            StartSpec::InTransit {
                dest: 1,
                arrival_in: 2,
            },
        );
        let tsn = build_tsn(&inp).unwrap();
        let src = &tsn.arcs[0];
        assert_eq!(src.kind, ArcKind::Source);
        assert_eq!(src.head, Endpoint::At { site: 1, t: 2 });
        // The source arc stands in for the cut coverage of intervals 0..2.
        assert!(src.crosses(0) && src.crosses(1) && !src.crosses(2));
        // An arrival beyond the horizon collapses to an out-of-service arc.
        let inp = input(
            &s,
            &travel,
            4,
            StartSpec::InTransit {
                dest: 1,
                arrival_in: 9,
            },
        );
        let tsn = build_tsn(&inp).unwrap();
        assert_eq!(tsn.n_arcs(), 1);
        assert!(tsn.arcs[0].crosses(3));
    }

    #[test]
    fn depot_return_prunes_unreachable_layers() {
        let s = sites(1, 1);
        // The microgrid cannot reach the depot.
        let travel = vec![vec![Some(0), None], vec![Some(1), Some(0)]];
        let mut inp = input(&s, &travel, 3, StartSpec::AtSite(0));
        inp.sinks = SinkPolicy::DepotReturn;
        let err = build_tsn(&inp).unwrap_err();
        assert_eq!(err, TsnError::InfeasibleLayer);
        // Holding fallback still stands up a usable layer.
        let fb = holding_layer(&inp, 0).unwrap();
        assert_eq!(fb.n_arcs(), 5);
    }

    #[test]
    fn allocation_initial_restricts_departures_to_t0() {
        let s = sites(2, 1);
        let travel = uniform_travel(3, 1);
        let mut inp = input(&s, &travel, 3, StartSpec::AtSite(2));
        inp.shape = LayerShape::AllocationInitial;
        let tsn = build_tsn(&inp).unwrap();
        for a in tsn.arcs.iter().filter(|a| a.kind == ArcKind::Moving) {
            assert_eq!(a.span.0, 0);
            assert_eq!(a.tail_site(), Some(2));
        }
    }

    #[test]
    fn counting_reduces_to_equal_on_single_interval_trips() {
        let s = sites(2, 1);
        let travel = uniform_travel(3, 1);
        let inp = input(&s, &travel, 3, StartSpec::AtSite(2));
        let tsn = build_tsn(&inp).unwrap();
        let counts = count_formulation(&[(&tsn, &travel)], 3, 3, 1);
        assert_eq!(counts.binaries_proposed, tsn.n_arcs() as i64);
        assert_eq!(counts.constraints_proposed, tsn.nodes().len() as i64);
        // All trips single-interval: no virtual nodes, and the added-node
        // term (0+1)*2*3 exactly cancels the permutation term 3*2.
        assert_eq!(virtual_nodes_needed(&travel), 0);
        assert_eq!(counts.binaries_virtualnode, counts.binaries_proposed);
    }

    #[test]
    fn virtual_node_count_matches_explicit_construction() {
        let mut travel = uniform_travel(2, 1);
        travel[0][1] = Some(3);
        travel[1][0] = Some(3);
        let mine = virtual_nodes_needed(&travel);
        let explicit = restoration_testkit::virtual_node_count(&travel) as i64;
        assert_eq!(mine, 4); // two per direction
        assert_eq!(mine, explicit);
    }

    #[test]
    fn proposed_never_exceeds_virtualnode_on_multi_interval_instances() {
        let s = sites(4, 1);
        let mut travel = uniform_travel(5, 1);
        travel[0][2] = Some(4);
        travel[2][0] = Some(4);
        travel[1][3] = Some(2);
        travel[3][1] = Some(2);
        let inp = input(&s, &travel, 6, StartSpec::AtSite(4));
        let tsn = build_tsn(&inp).unwrap();
        let counts = count_formulation(&[(&tsn, &travel)], 6, 5, 1);
        assert!(counts.binaries_proposed <= counts.binaries_virtualnode);
        assert!(counts.constraints_proposed <= counts.constraints_virtualnode);
        assert!(!counts.suspicious);
    }

    #[test]
    fn dump_is_deterministic() {
        let s = sites(2, 1);
        let travel = uniform_travel(3, 1);
        let inp = input(&s, &travel, 2, StartSpec::AtSite(2));
        let a = build_tsn(&inp).unwrap().dump(&s);
        let b = build_tsn(&inp).unwrap().dump(&s);
        assert_eq!(a, b);
        assert!(a.contains("arc Source source -> d1@0 span 0..0 cost 0"));
    }
}
