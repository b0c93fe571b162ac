//! Uncertainty machinery: normally-distributed load errors, two-state
//! availability processes for roads and branches, Monte-Carlo scenario
//! generation and simultaneous backward reduction.
//!
//! Every sampler draws from a sub-stream derived from (master seed, domain,
//! scenario index, element label), so adding an element or scenario never
//! perturbs the draws of the others and identical seeds reproduce identical
//! sets bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("reduction target {0} out of range 1..={1}")]
    BadReductionTarget(usize, usize),
    #[error("scenario file: {0}")]
    Format(String),
}

/// Predicted active power per bus and interval, in MW. Reactive power
/// follows from each bus's power factor and is derived where needed.
#[derive(Debug, Clone)]
pub struct LoadForecast {
    /// `[bus][interval]`, MW.
    pub p_mw: Vec<Vec<f64>>,
}

/// Two-state availability process for one element (road edge or feeder
/// branch): exponentially distributed up and down sojourns.
#[derive(Debug, Clone, Copy)]
pub struct AvailabilityModel {
    pub mean_up_h: f64,
    pub mean_down_h: f64,
    pub initially_up: bool,
}

/// One joint trajectory of loads and element availability.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub gamma: f64,
    /// `[bus][interval]`, MW.
    pub loads_mw: Vec<Vec<f64>>,
    /// `[edge][interval]`, true = road usable in that interval.
    pub roads_up: Vec<Vec<bool>>,
    /// `[branch][interval]`, true = branch intact in that interval.
    pub branches_up: Vec<Vec<bool>>,
}

#[derive(Debug, Clone)]
pub struct ScenarioSet {
    pub horizon: usize,
    pub bus_labels: Vec<String>,
    pub road_labels: Vec<String>,
    pub branch_labels: Vec<String>,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn total_probability(&self) -> f64 {
        self.scenarios.iter().map(|s| s.gamma).sum()
    }
}

/// Everything the generator needs for one prediction horizon.
#[derive(Debug, Clone)]
pub struct SamplingSpec<'a> {
    pub horizon: usize,
    pub dt_h: f64,
    pub forecast: &'a LoadForecast,
    pub bus_labels: &'a [String],
    /// Standard deviation as a fraction of the predicted load.
    pub load_sd_frac: f64,
    /// Treat the first interval as accurately forecast (zero spread).
    pub first_interval_exact: bool,
    pub roads: &'a [AvailabilityModel],
    pub road_labels: &'a [String],
    pub branches: &'a [AvailabilityModel],
    pub branch_labels: &'a [String],
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic per-(seed, domain, scenario, label) sub-stream.
pub fn substream(master: u64, domain: &str, scenario: u64, label: &str) -> ChaCha8Rng {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ fnv1a(domain.as_bytes()));
    s = splitmix64(s ^ scenario);
    s = splitmix64(s ^ fnv1a(label.as_bytes()));
    ChaCha8Rng::seed_from_u64(s)
}

/// One bus's realized trajectory: independent normal errors around the
/// forecast, truncated at zero. A zero forecast realizes as exactly zero.
pub fn sample_load_trajectory<R: Rng>(
    means_mw: &[f64],
    sd_frac: f64,
    first_interval_exact: bool,
    rng: &mut R,
) -> Vec<f64> {
    means_mw
        .iter()
        .enumerate()
        .map(|(t, &mean)| {
            if mean <= 0.0 || (t == 0 && first_interval_exact) {
                return mean.max(0.0);
            }
            let sd = sd_frac * mean;
            let draw = Normal::new(mean, sd)
                .map(|n| n.sample(rng))
                .unwrap_or(mean);
            draw.max(0.0)
        })
        .collect()
}

/// Discretized alternating renewal process: sample exponential sojourns in
/// continuous time, then mark interval `t` down when the element is down at
/// the interval start.
pub fn sample_availability<R: Rng>(
    model: &AvailabilityModel,
    horizon: usize,
    dt_h: f64,
    rng: &mut R,
) -> Vec<bool> {
    let mut out = Vec::with_capacity(horizon);
    let mut up = model.initially_up;
    let mut clock = 0.0f64;
    let mut next_flip = clock + sojourn(model, up, rng);
    for t in 0..horizon {
        let start = t as f64 * dt_h;
        while next_flip <= start {
            clock = next_flip;
            up = !up;
            next_flip = clock + sojourn(model, up, rng);
        }
        out.push(up);
    }
    out
}

fn sojourn<R: Rng>(model: &AvailabilityModel, up: bool, rng: &mut R) -> f64 {
    let mean = if up { model.mean_up_h } else { model.mean_down_h };
    if !mean.is_finite() {
        return f64::INFINITY;
    }
    Exp::new(1.0 / mean)
        .map(|e| e.sample(rng))
        .unwrap_or(f64::INFINITY)
}

/// `n` equiprobable joint trajectories, independent across buses and
/// elements.
pub fn generate_scenarios(spec: &SamplingSpec, n: usize, master_seed: u64) -> ScenarioSet {
    let gamma = 1.0 / n as f64;
    let scenarios = (0..n)
        .map(|s| {
            let loads_mw = spec
                .bus_labels
                .iter()
                .enumerate()
                .map(|(b, label)| {
                    let mut rng = substream(master_seed, "load", s as u64, label);
                    sample_load_trajectory(
                        &spec.forecast.p_mw[b][..spec.horizon],
                        spec.load_sd_frac,
                        spec.first_interval_exact,
                        &mut rng,
                    )
                })
                .collect();
            let roads_up = spec
                .road_labels
                .iter()
                .zip(spec.roads)
                .map(|(label, model)| {
                    let mut rng = substream(master_seed, "road", s as u64, label);
                    sample_availability(model, spec.horizon, spec.dt_h, &mut rng)
                })
                .collect();
            let branches_up = spec
                .branch_labels
                .iter()
                .zip(spec.branches)
                .map(|(label, model)| {
                    let mut rng = substream(master_seed, "branch", s as u64, label);
                    sample_availability(model, spec.horizon, spec.dt_h, &mut rng)
                })
                .collect();
            Scenario {
                gamma,
                loads_mw,
                roads_up,
                branches_up,
            }
        })
        .collect();
    ScenarioSet {
        horizon: spec.horizon,
        bus_labels: spec.bus_labels.to_vec(),
        road_labels: spec.road_labels.to_vec(),
        branch_labels: spec.branch_labels.to_vec(),
        scenarios,
    }
}

/// Weights for the reduction metric. Loads enter as energy relative to
/// `e_ref_mwh`; one availability flip counts as `w_a_mwh / e_ref_mwh`.
#[derive(Debug, Clone, Copy)]
pub struct ReductionWeights {
    pub dt_h: f64,
    /// Reference energy, normally peak system load times the interval.
    pub e_ref_mwh: f64,
    /// Weight of a single availability flag, in MWh.
    pub w_a_mwh: f64,
}

fn feature_vector(s: &Scenario, w: &ReductionWeights) -> Vec<f64> {
    let mut v = Vec::new();
    let load_scale = w.dt_h / w.e_ref_mwh;
    for bus in &s.loads_mw {
        for &p in bus {
            v.push(p * load_scale);
        }
    }
    let flag_scale = w.w_a_mwh / w.e_ref_mwh;
    for elem in s.roads_up.iter().chain(s.branches_up.iter()) {
        for &up in elem {
            v.push(if up { flag_scale } else { 0.0 });
        }
    }
    v
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Full pairwise distance matrix under the reduction metric.
pub fn distance_matrix(set: &ScenarioSet, w: &ReductionWeights) -> Vec<Vec<f64>> {
    let feats: Vec<Vec<f64>> = set
        .scenarios
        .iter()
        .map(|s| feature_vector(s, w))
        .collect();
    let n = feats.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = euclidean(&feats[i], &feats[j]);
            d[i][j] = dij;
            d[j][i] = dij;
        }
    }
    d
}

/// Simultaneous backward reduction: repeatedly delete the scenario with the
/// smallest probability-weighted distance to its nearest survivor and hand
/// its probability to that survivor. Ties resolve to the lowest index.
pub fn reduce_scenarios(
    set: &ScenarioSet,
    k: usize,
    w: &ReductionWeights,
) -> Result<ScenarioSet, ScenarioError> {
    let n = set.scenarios.len();
    if k == 0 || k > n {
        return Err(ScenarioError::BadReductionTarget(k, n));
    }
    let dist = distance_matrix(set, w);
    let (survivors, gammas) = backward_reduce(
        &dist,
        &set.scenarios.iter().map(|s| s.gamma).collect::<Vec<_>>(),
        k,
    );
    let scenarios = survivors
        .iter()
        .map(|&i| {
            let mut s = set.scenarios[i].clone();
            s.gamma = gammas[i];
            s
        })
        .collect();
    Ok(ScenarioSet {
        horizon: set.horizon,
        bus_labels: set.bus_labels.clone(),
        road_labels: set.road_labels.clone(),
        branch_labels: set.branch_labels.clone(),
        scenarios,
    })
}

/// The greedy deletion loop on a precomputed distance matrix. Returns the
/// surviving indices (ascending) and the final probability of every index
/// (zero for deleted ones).
pub fn backward_reduce(dist: &[Vec<f64>], gamma: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let n = gamma.len();
    let mut alive: Vec<bool> = vec![true; n];
    let mut g = gamma.to_vec();
    let mut n_alive = n;
    while n_alive > k {
        let mut victim = None;
        let mut best_z = f64::INFINITY;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            let dmin = nearest_alive(dist, &alive, s)
                .map(|(_, d)| d)
                .unwrap_or(0.0);
            let z = g[s] * dmin;
            if z < best_z {
                best_z = z;
                victim = Some(s);
            }
        }
        let s = victim.expect("set nonempty");
        alive[s] = false;
        n_alive -= 1;
        if let Some((nearest, _)) = nearest_alive(dist, &alive, s) {
            g[nearest] += g[s];
        }
        g[s] = 0.0;
    }
    let survivors = (0..n).filter(|&i| alive[i]).collect();
    (survivors, g)
}

fn nearest_alive(dist: &[Vec<f64>], alive: &[bool], s: usize) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &a) in alive.iter().enumerate() {
        if !a || j == s {
            continue;
        }
        let d = dist[s][j];
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((j, d));
        }
    }
    best
}

// --- columnar CSV form -----------------------------------------------------

/// Serializes the set to the columnar `scenario,interval,element,value`
/// form. Floats use the shortest round-trip representation, so a reload is
/// bit-exact.
pub fn to_csv(set: &ScenarioSet) -> String {
    let mut out = String::from("scenario,interval,element,value\n");
    for (s, sc) in set.scenarios.iter().enumerate() {
        out.push_str(&format!("{s},0,gamma,{}\n", sc.gamma));
        for (b, label) in set.bus_labels.iter().enumerate() {
            for t in 0..set.horizon {
                out.push_str(&format!("{s},{t},load:{label},{}\n", sc.loads_mw[b][t]));
            }
        }
        for (e, label) in set.road_labels.iter().enumerate() {
            for t in 0..set.horizon {
                let v = if sc.roads_up[e][t] { 1 } else { 0 };
                out.push_str(&format!("{s},{t},road:{label},{v}\n"));
            }
        }
        for (e, label) in set.branch_labels.iter().enumerate() {
            for t in 0..set.horizon {
                let v = if sc.branches_up[e][t] { 1 } else { 0 };
                out.push_str(&format!("{s},{t},branch:{label},{v}\n"));
            }
        }
    }
    out
}

pub fn from_csv(text: &str) -> Result<ScenarioSet, ScenarioError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "scenario,interval,element,value" => {}
        _ => return Err(ScenarioError::Format("missing header".into())),
    }
    struct Raw {
        gamma: f64,
        loads: std::collections::BTreeMap<String, std::collections::BTreeMap<usize, f64>>,
        roads: std::collections::BTreeMap<String, std::collections::BTreeMap<usize, bool>>,
        branches: std::collections::BTreeMap<String, std::collections::BTreeMap<usize, bool>>,
    }
    let mut raws: Vec<Raw> = Vec::new();
    let mut horizon = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, ',').collect();
        if fields.len() != 4 {
            return Err(ScenarioError::Format(format!(
                "line {}: expected 4 fields",
                lineno + 1
            )));
        }
        let err = |what: &str| ScenarioError::Format(format!("line {}: {}", lineno + 1, what));
        let s: usize = fields[0].parse().map_err(|_| err("bad scenario index"))?;
        let t: usize = fields[1].parse().map_err(|_| err("bad interval"))?;
        let value: f64 = fields[3].parse().map_err(|_| err("bad value"))?;
        while raws.len() <= s {
            raws.push(Raw {
                gamma: 0.0,
                loads: Default::default(),
                roads: Default::default(),
                branches: Default::default(),
            });
        }
        horizon = horizon.max(t + 1);
        let elem = fields[2];
        if elem == "gamma" {
            raws[s].gamma = value;
        } else if let Some(label) = elem.strip_prefix("load:") {
            raws[s]
                .loads
                .entry(label.to_string())
                .or_default()
                .insert(t, value);
        } else if let Some(label) = elem.strip_prefix("road:") {
            raws[s]
                .roads
                .entry(label.to_string())
                .or_default()
                .insert(t, value != 0.0);
        } else if let Some(label) = elem.strip_prefix("branch:") {
            raws[s]
                .branches
                .entry(label.to_string())
                .or_default()
                .insert(t, value != 0.0);
        } else {
            return Err(err("unknown element"));
        }
    }
    if raws.is_empty() {
        return Err(ScenarioError::Format("no scenarios".into()));
    }
    let bus_labels: Vec<String> = raws[0].loads.keys().cloned().collect();
    let road_labels: Vec<String> = raws[0].roads.keys().cloned().collect();
    let branch_labels: Vec<String> = raws[0].branches.keys().cloned().collect();
    let scenarios = raws
        .iter()
        .map(|r| Scenario {
            gamma: r.gamma,
            loads_mw: bus_labels
                .iter()
                .map(|l| (0..horizon).map(|t| r.loads[l][&t]).collect())
                .collect(),
            roads_up: road_labels
                .iter()
                .map(|l| (0..horizon).map(|t| r.roads[l][&t]).collect())
                .collect(),
            branches_up: branch_labels
                .iter()
                .map(|l| (0..horizon).map(|t| r.branches[l][&t]).collect())
                .collect(),
        })
        .collect();
    Ok(ScenarioSet {
        horizon,
        bus_labels,
        road_labels,
        branch_labels,
        scenarios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forecast() -> LoadForecast {
        LoadForecast {
            p_mw: vec![vec![0.1, 0.2, 0.3], vec![0.0, 0.0, 0.0]],
        }
    }

    struct SpecLabels {
        bus: Vec<String>,
        road: Vec<String>,
        branch: Vec<String>,
        road_models: Vec<AvailabilityModel>,
        branch_models: Vec<AvailabilityModel>,
    }

    fn labels() -> SpecLabels {
        SpecLabels {
            bus: vec!["f1:1".into(), "f1:2".into()],
            road: vec!["1-2".into()],
            branch: vec!["f1:1-2".into()],
            road_models: vec![AvailabilityModel {
                mean_up_h: 8.0,
                mean_down_h: 2.0,
                initially_up: true,
            }],
            branch_models: vec![AvailabilityModel {
                mean_up_h: 5.0,
                mean_down_h: 3.0,
                initially_up: false,
            }],
        }
    }

    fn spec<'a>(f: &'a LoadForecast, labels: &'a SpecLabels) -> SamplingSpec<'a> {
        SamplingSpec {
            horizon: 3,
            dt_h: 1.0,
            forecast: f,
            bus_labels: &labels.bus,
            load_sd_frac: 0.02,
            first_interval_exact: false,
            roads: &labels.road_models,
            road_labels: &labels.road,
            branches: &labels.branch_models,
            branch_labels: &labels.branch,
        }
    }

    #[test]
    fn zero_load_realizes_zero() {
        let mut rng = substream(7, "load", 0, "x");
        let tr = sample_load_trajectory(&[0.0, 0.0], 0.02, false, &mut rng);
        assert_eq!(tr, vec![0.0, 0.0]);
    }

    #[test]
    fn load_sampling_statistics() {
        // 1e5 draws of a 100 kW bus: mean within 0.1%, sd within 5% of 2%.
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for s in 0..n {
            let mut rng = substream(42, "load", s as u64, "bus");
            let v = sample_load_trajectory(&[0.1], 0.02, false, &mut rng)[0];
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let sd = (sumsq / n as f64 - mean * mean).sqrt();
        assert!((0.0999..=0.1001).contains(&mean), "mean {mean}");
        assert!((0.0019..=0.0021).contains(&sd), "sd {sd}");
    }

    #[test]
    fn same_seed_same_trajectory() {
        let f = forecast();
        let l = labels();
        let a = generate_scenarios(&spec(&f, &l), 4, 99);
        let b = generate_scenarios(&spec(&f, &l), 4, 99);
        for (x, y) in a.scenarios.iter().zip(&b.scenarios) {
            assert_eq!(x.loads_mw, y.loads_mw);
            assert_eq!(x.roads_up, y.roads_up);
            assert_eq!(x.branches_up, y.branches_up);
        }
    }

    #[test]
    fn adding_an_element_does_not_perturb_existing_streams() {
        let f = forecast();
        let mut l = labels();
        let a = generate_scenarios(&spec(&f, &l), 2, 5);
        l.road.push("2-3".into());
        l.road_models.push(AvailabilityModel {
            mean_up_h: 1.0,
            mean_down_h: 1.0,
            initially_up: true,
        });
        let b = generate_scenarios(&spec(&f, &l), 2, 5);
        for (x, y) in a.scenarios.iter().zip(&b.scenarios) {
            assert_eq!(x.loads_mw, y.loads_mw);
            assert_eq!(x.roads_up[0], y.roads_up[0]);
            assert_eq!(x.branches_up, y.branches_up);
        }
    }

    #[test]
    fn absorbing_states() {
        let mut rng = substream(1, "road", 0, "e");
        let down_forever = AvailabilityModel {
            mean_up_h: 4.0,
            mean_down_h: f64::INFINITY,
            initially_up: false,
        };
        assert_eq!(
            sample_availability(&down_forever, 5, 1.0, &mut rng),
            vec![false; 5]
        );
        let up_forever = AvailabilityModel {
            mean_up_h: f64::INFINITY,
            mean_down_h: 4.0,
            initially_up: true,
        };
        assert_eq!(
            sample_availability(&up_forever, 5, 1.0, &mut rng),
            vec![true; 5]
        );
    }

    #[test]
    fn probabilities_sum_to_one() {
        let f = forecast();
        let l = labels();
        let set = generate_scenarios(&spec(&f, &l), 1, 3);
        assert_eq!(set.scenarios[0].gamma, 1.0);
        let set = generate_scenarios(&spec(&f, &l), 10, 3);
        assert!((set.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_scenarios_merge_to_one() {
        let f = forecast();
        let l = labels();
        let mut set = generate_scenarios(&spec(&f, &l), 2, 3);
        set.scenarios[1] = set.scenarios[0].clone();
        let w = ReductionWeights {
            dt_h: 1.0,
            e_ref_mwh: 0.3,
            w_a_mwh: 0.3,
        };
        let red = reduce_scenarios(&set, 1, &w).unwrap();
        assert_eq!(red.scenarios.len(), 1);
        assert!((red.scenarios[0].gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_to_same_size_is_identity() {
        let f = forecast();
        let l = labels();
        let set = generate_scenarios(&spec(&f, &l), 5, 11);
        let w = ReductionWeights {
            dt_h: 1.0,
            e_ref_mwh: 0.3,
            w_a_mwh: 0.3,
        };
        let red = reduce_scenarios(&set, 5, &w).unwrap();
        for (a, b) in set.scenarios.iter().zip(&red.scenarios) {
            assert_eq!(a.gamma, b.gamma);
            assert_eq!(a.loads_mw, b.loads_mw);
        }
        assert!(reduce_scenarios(&set, 0, &w).is_err());
        assert!(reduce_scenarios(&set, 6, &w).is_err());
    }

    #[test]
    fn reduction_matches_stepwise_oracle() {
        let f = forecast();
        let l = labels();
        let set = generate_scenarios(&spec(&f, &l), 5, 123);
        let w = ReductionWeights {
            dt_h: 1.0,
            e_ref_mwh: 0.3,
            w_a_mwh: 0.3,
        };
        let dist = distance_matrix(&set, &w);
        let gammas: Vec<f64> = set.scenarios.iter().map(|s| s.gamma).collect();
        let (mine, g_mine) = backward_reduce(&dist, &gammas, 3);
        let (oracle, g_oracle) = restoration_testkit::backward_reduce_oracle(&dist, &gammas, 3);
        assert_eq!(mine, oracle);
        for (a, b) in g_mine.iter().zip(&g_oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let f = forecast();
        let l = labels();
        let set = generate_scenarios(&spec(&f, &l), 3, 77);
        let text = to_csv(&set);
        let back = from_csv(&text).unwrap();
        assert_eq!(back.horizon, set.horizon);
        assert_eq!(back.bus_labels, set.bus_labels);
        for (a, b) in set.scenarios.iter().zip(&back.scenarios) {
            assert_eq!(a.gamma, b.gamma);
            assert_eq!(a.loads_mw, b.loads_mw);
            assert_eq!(a.roads_up, b.roads_up);
            assert_eq!(a.branches_up, b.branches_up);
        }
        assert_eq!(to_csv(&back), text);
    }

    #[test]
    fn reduction_keeps_total_probability() {
        let f = forecast();
        let l = labels();
        let set = generate_scenarios(&spec(&f, &l), 20, 8);
        let w = ReductionWeights {
            dt_h: 1.0,
            e_ref_mwh: 0.3,
            w_a_mwh: 0.3,
        };
        let red = reduce_scenarios(&set, 4, &w).unwrap();
        assert!((red.total_probability() - 1.0).abs() < 1e-12);
    }
}
