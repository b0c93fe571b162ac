//! Brute-force reference implementations used by the test suites.
//!
//! Everything here is deliberately naive and textbook-style, independent of
//! the production code paths it cross-checks, and built only from std. The
//! LP oracle is a dense two-phase simplex with Bland's rule; the MIP oracle
//! enumerates binary assignments outright.

/// A plain statement of a mixed 0/1 linear program for the oracles. No
/// behavior beyond storage, so tests can build it from any source.
#[derive(Debug, Clone)]
pub struct LpInstance {
    pub n: usize,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    /// Minimization objective.
    pub obj: Vec<f64>,
    pub offset: f64,
    pub rows: Vec<OracleRow>,
    /// Indices of 0/1 variables (their bounds must lie within [0,1]).
    pub binaries: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct OracleRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: OracleSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64, Vec<f64>),
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;

/// Dense two-phase simplex with Bland's rule, treating every variable as
/// continuous within its bounds. Returns the minimum of `obj·x + offset`.
pub fn dense_lp(inst: &LpInstance) -> OracleOutcome {
    // Rewrite into standard form: min c·y, A y = b, y >= 0.
    // Column map per original variable: either a shifted column (x = lb + y)
    // possibly with an upper-bound row, a mirrored column (x = ub - y), or a
    // split pair (x = y+ - y-).
    enum ColMap {
        Shift(usize, f64),
        Mirror(usize, f64),
        Split(usize, usize),
    }
    let mut maps = Vec::with_capacity(inst.n);
    let mut n_cols = 0usize;
    let mut extra_rows: Vec<OracleRow> = Vec::new();
    for j in 0..inst.n {
        let (lb, ub) = (inst.lb[j], inst.ub[j]);
        if lb > ub + EPS {
            return OracleOutcome::Infeasible;
        }
        if lb.is_finite() {
            maps.push(ColMap::Shift(n_cols, lb));
            if ub.is_finite() {
                extra_rows.push(OracleRow {
                    coeffs: vec![(j, 1.0)],
                    sense: OracleSense::Le,
                    rhs: ub,
                });
            }
            n_cols += 1;
        } else if ub.is_finite() {
            maps.push(ColMap::Mirror(n_cols, ub));
            n_cols += 1;
        } else {
            maps.push(ColMap::Split(n_cols, n_cols + 1));
            n_cols += 2;
        }
    }

    let all_rows: Vec<&OracleRow> = inst.rows.iter().chain(extra_rows.iter()).collect();
    let m = all_rows.len();
    // Columns: structural | slack/surplus | artificial.
    let mut n_slack = 0usize;
    for r in &all_rows {
        if r.sense != OracleSense::Eq {
            n_slack += 1;
        }
    }
    let width = n_cols + n_slack + m;
    let mut a = vec![vec![0.0f64; width]; m];
    let mut b = vec![0.0f64; m];
    let mut slack_idx = n_cols;
    for (i, r) in all_rows.iter().enumerate() {
        let mut rhs = r.rhs;
        for &(j, coef) in &r.coeffs {
            match maps[j] {
                ColMap::Shift(col, lb) => {
                    a[i][col] += coef;
                    rhs -= coef * lb;
                }
                ColMap::Mirror(col, ub) => {
                    a[i][col] -= coef;
                    rhs -= coef * ub;
                }
                ColMap::Split(cp, cm) => {
                    a[i][cp] += coef;
                    a[i][cm] -= coef;
                }
            }
        }
        match r.sense {
            OracleSense::Le => {
                a[i][slack_idx] = 1.0;
                slack_idx += 1;
            }
            OracleSense::Ge => {
                a[i][slack_idx] = -1.0;
                slack_idx += 1;
            }
            OracleSense::Eq => {}
        }
        b[i] = rhs;
    }
    for i in 0..m {
        if b[i] < 0.0 {
            for v in a[i].iter_mut() {
                *v = -*v;
            }
            b[i] = -b[i];
        }
        a[i][n_cols + n_slack + i] = 1.0;
    }

    let mut basis: Vec<usize> = (0..m).map(|i| n_cols + n_slack + i).collect();

    // Phase 1: minimize the artificial sum.
    let mut cost1 = vec![0.0f64; width];
    for c in cost1.iter_mut().skip(n_cols + n_slack) {
        *c = 1.0;
    }
    if !simplex_loop(&mut a, &mut b, &mut basis, &cost1, n_cols + n_slack + m) {
        return OracleOutcome::Unbounded; // cannot happen in phase 1
    }
    let phase1: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= n_cols + n_slack)
        .map(|(i, _)| b[i])
        .sum();
    if phase1 > 1e-7 {
        return OracleOutcome::Infeasible;
    }

    // Phase 2: original objective; artificials may not re-enter.
    let mut cost2 = vec![0.0f64; width];
    for j in 0..inst.n {
        let c = inst.obj[j];
        match maps[j] {
            ColMap::Shift(col, _) => cost2[col] += c,
            ColMap::Mirror(col, _) => cost2[col] -= c,
            ColMap::Split(cp, cm) => {
                cost2[cp] += c;
                cost2[cm] -= c;
            }
        }
    }
    if !simplex_loop(&mut a, &mut b, &mut basis, &cost2, n_cols + n_slack) {
        return OracleOutcome::Unbounded;
    }

    let mut y = vec![0.0f64; width];
    for (i, &j) in basis.iter().enumerate() {
        y[j] = b[i];
    }
    let mut x = vec![0.0f64; inst.n];
    for j in 0..inst.n {
        x[j] = match maps[j] {
            ColMap::Shift(col, lb) => lb + y[col],
            ColMap::Mirror(col, ub) => ub - y[col],
            ColMap::Split(cp, cm) => y[cp] - y[cm],
        };
    }
    let obj: f64 = (0..inst.n).map(|j| inst.obj[j] * x[j]).sum::<f64>() + inst.offset;
    OracleOutcome::Optimal(obj, x)
}

/// Bland-rule pivoting until optimal. Columns at `forbid_from` and beyond
/// may not enter the basis. Returns false on unboundedness.
fn simplex_loop(
    a: &mut [Vec<f64>],
    b: &mut [f64],
    basis: &mut [usize],
    cost: &[f64],
    forbid_from: usize,
) -> bool {
    let m = a.len();
    if m == 0 {
        return true;
    }
    let width = a[0].len();
    let mut in_basis = vec![false; width];
    for &j in basis.iter() {
        in_basis[j] = true;
    }
    loop {
        let mut dual = vec![0.0f64; m];
        for (i, &j) in basis.iter().enumerate() {
            dual[i] = cost[j];
        }
        let mut entering = None;
        for j in 0..width.min(forbid_from) {
            if in_basis[j] {
                continue;
            }
            let mut red = cost[j];
            for i in 0..m {
                if a[i][j] != 0.0 {
                    red -= dual[i] * a[i][j];
                }
            }
            if red < -EPS {
                entering = Some(j);
                break; // Bland: lowest index
            }
        }
        let Some(je) = entering else {
            return true;
        };
        // Ratio test, Bland tie-break on basic variable index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if a[i][je] > EPS {
                let ratio = b[i] / a[i][je];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - EPS || (ratio < lr + EPS && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((li, _)) = leave else {
            return false;
        };
        in_basis[basis[li]] = false;
        in_basis[je] = true;
        pivot(a, b, li, je);
        basis[li] = je;
    }
}

fn pivot(a: &mut [Vec<f64>], b: &mut [f64], li: usize, je: usize) {
    let m = a.len();
    let p = a[li][je];
    for v in a[li].iter_mut() {
        *v /= p;
    }
    b[li] /= p;
    for i in 0..m {
        if i == li {
            continue;
        }
        let f = a[i][je];
        if f.abs() <= EPS {
            a[i][je] = 0.0;
            continue;
        }
        for j in 0..a[i].len() {
            a[i][j] -= f * a[li][j];
        }
        a[i][je] = 0.0;
        b[i] -= f * b[li];
    }
}

/// Exhaustive minimum over all 0/1 assignments of the declared binaries,
/// solving the continuous remainder with the dense simplex. Assignments
/// that already violate a purely-binary row are pruned.
pub fn enumerate_binaries_min(inst: &LpInstance) -> Option<(f64, Vec<f64>)> {
    let is_binary: Vec<bool> = {
        let mut v = vec![false; inst.n];
        for &j in &inst.binaries {
            v[j] = true;
        }
        v
    };
    let binary_rows: Vec<&OracleRow> = inst
        .rows
        .iter()
        .filter(|r| r.coeffs.iter().all(|&(j, _)| is_binary[j]))
        .collect();
    let order = inst.binaries.clone();
    let mut fixed: Vec<Option<f64>> = vec![None; inst.n];
    for &j in &order {
        if (inst.ub[j] - inst.lb[j]).abs() < 1e-12 {
            fixed[j] = Some(inst.lb[j].round());
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    recurse(inst, &order, 0, &mut fixed, &binary_rows, &mut best);
    return best;

    fn row_possible(row: &OracleRow, fixed: &[Option<f64>]) -> bool {
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for &(j, c) in &row.coeffs {
            match fixed[j] {
                Some(v) => {
                    lo += c * v;
                    hi += c * v;
                }
                None => {
                    if c > 0.0 {
                        hi += c;
                    } else {
                        lo += c;
                    }
                }
            }
        }
        match row.sense {
            OracleSense::Le => lo <= row.rhs + 1e-7,
            OracleSense::Ge => hi >= row.rhs - 1e-7,
            OracleSense::Eq => lo <= row.rhs + 1e-7 && hi >= row.rhs - 1e-7,
        }
    }

    fn recurse(
        inst: &LpInstance,
        order: &[usize],
        pos: usize,
        fixed: &mut Vec<Option<f64>>,
        binary_rows: &[&OracleRow],
        best: &mut Option<(f64, Vec<f64>)>,
    ) {
        if !binary_rows.iter().all(|r| row_possible(r, fixed)) {
            return;
        }
        if pos == order.len() {
            let mut sub = inst.clone();
            for (j, v) in fixed.iter().enumerate() {
                if let Some(v) = v {
                    sub.lb[j] = *v;
                    sub.ub[j] = *v;
                }
            }
            if let OracleOutcome::Optimal(obj, x) = dense_lp(&sub) {
                if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                    *best = Some((obj, x));
                }
            }
            return;
        }
        let j = order[pos];
        if fixed[j].is_some() {
            recurse(inst, order, pos + 1, fixed, binary_rows, best);
            return;
        }
        for v in [0.0, 1.0] {
            fixed[j] = Some(v);
            recurse(inst, order, pos + 1, fixed, binary_rows, best);
        }
        fixed[j] = None;
    }
}

/// Stepwise reference of the backward deletion rule: at every step, scan the
/// full matrix for the victim from scratch.
pub fn backward_reduce_oracle(
    dist: &[Vec<f64>],
    gamma: &[f64],
    k: usize,
) -> (Vec<usize>, Vec<f64>) {
    let n = gamma.len();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut g = gamma.to_vec();
    while alive.len() > k {
        let mut victim = alive[0];
        let mut best = f64::INFINITY;
        for &s in &alive {
            let dmin = alive
                .iter()
                .filter(|&&o| o != s)
                .map(|&o| dist[s][o])
                .fold(f64::INFINITY, f64::min);
            let z = g[s] * if dmin.is_finite() { dmin } else { 0.0 };
            if z < best {
                best = z;
                victim = s;
            }
        }
        alive.retain(|&s| s != victim);
        if let Some(&nearest) = alive
            .iter()
            .min_by(|&&a, &&b| dist[victim][a].partial_cmp(&dist[victim][b]).unwrap())
        {
            g[nearest] += g[victim];
        }
        g[victim] = 0.0;
    }
    (alive, g)
}

/// All-pairs shortest distances by Floyd-Warshall over available edges.
pub fn floyd_warshall(
    n: usize,
    edges: &[(usize, usize, u64)],
    up: &[bool],
) -> Vec<Vec<Option<u64>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (e, &(a, b, w)) in edges.iter().enumerate() {
        if up[e] {
            let cur = d[a][b];
            if cur.map_or(true, |c| w < c) {
                d[a][b] = Some(w);
                d[b][a] = Some(w);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(ik), Some(kj)) = (d[i][k], d[k][j]) {
                    if d[i][j].map_or(true, |c| ik + kj < c) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

/// Exhaustive simple-path search: minimum-length path, ties broken to the
/// lexicographically smallest node sequence. For graphs of a handful of
/// nodes only.
pub fn brute_force_shortest(
    n: usize,
    edges: &[(usize, usize, u64)],
    up: &[bool],
    from: usize,
    to: usize,
) -> Option<(u64, Vec<usize>)> {
    let mut adj = vec![Vec::new(); n];
    for (e, &(a, b, w)) in edges.iter().enumerate() {
        if up[e] {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
    }
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut visited = vec![false; n];
    let mut path = vec![from];
    dfs(&adj, to, from, 0, &mut visited, &mut path, &mut best);
    return best;

    fn dfs(
        adj: &[Vec<(usize, u64)>],
        to: usize,
        u: usize,
        dist: u64,
        visited: &mut Vec<bool>,
        path: &mut Vec<usize>,
        best: &mut Option<(u64, Vec<usize>)>,
    ) {
        if u == to {
            let better = match best {
                None => true,
                Some((bd, bp)) => dist < *bd || (dist == *bd && path[..] < bp[..]),
            };
            if better {
                *best = Some((dist, path.clone()));
            }
            return;
        }
        visited[u] = true;
        for &(v, w) in &adj[u] {
            if !visited[v] {
                path.push(v);
                dfs(adj, to, v, dist + w, visited, path, best);
                path.pop();
            }
        }
        visited[u] = false;
    }
}

/// Verdict of the exhaustive radiality check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadialityVerdict {
    pub acyclic: bool,
    pub one_source_per_component: bool,
    pub count_ok: bool,
}

impl RadialityVerdict {
    pub fn ok(&self) -> bool {
        self.acyclic && self.one_source_per_component && self.count_ok
    }
}

/// Component-by-component check of the closed subgraph: no component may
/// contain a cycle (edges >= nodes) and every component must contain exactly
/// one source bus; the closed count must equal buses minus sources.
pub fn radiality_oracle(
    n_buses: usize,
    closed_edges: &[(usize, usize)],
    sources: &[usize],
) -> RadialityVerdict {
    let mut adj = vec![Vec::new(); n_buses];
    for &(a, b) in closed_edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut comp = vec![usize::MAX; n_buses];
    let mut n_comp = 0;
    for start in 0..n_buses {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = n_comp;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = n_comp;
                    stack.push(v);
                }
            }
        }
        n_comp += 1;
    }
    let mut nodes_per = vec![0usize; n_comp];
    let mut edges_per = vec![0usize; n_comp];
    let mut sources_per = vec![0usize; n_comp];
    for c in comp.iter() {
        nodes_per[*c] += 1;
    }
    for &(a, _) in closed_edges {
        edges_per[comp[a]] += 1;
    }
    for &s in sources {
        sources_per[comp[s]] += 1;
    }
    RadialityVerdict {
        acyclic: (0..n_comp).all(|c| edges_per[c] < nodes_per[c]),
        one_source_per_component: (0..n_comp).all(|c| sources_per[c] == 1),
        count_ok: closed_edges.len() == n_buses.saturating_sub(sources.len()),
    }
}

/// Explicit construction of the virtual-node expansion for a travel-time
/// matrix: every trip spanning `t` intervals contributes `t - 1` chained
/// virtual nodes per direction. Returns the virtual node count.
pub fn virtual_node_count(travel: &[Vec<Option<u32>>]) -> usize {
    let mut nodes = Vec::new();
    for (i, row) in travel.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            if let Some(t) = t {
                for k in 1..*t {
                    nodes.push((i, j, k));
                }
            }
        }
    }
    nodes.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_oracle_solves_a_known_program() {
        // min -x - 2y s.t. x + y <= 4, x <= 3, y <= 2, x,y >= 0 -> (2,2), -6.
        let inst = LpInstance {
            n: 2,
            lb: vec![0.0, 0.0],
            ub: vec![3.0, 2.0],
            obj: vec![-1.0, -2.0],
            offset: 0.0,
            rows: vec![OracleRow {
                coeffs: vec![(0, 1.0), (1, 1.0)],
                sense: OracleSense::Le,
                rhs: 4.0,
            }],
            binaries: vec![],
        };
        match dense_lp(&inst) {
            OracleOutcome::Optimal(obj, x) => {
                assert!((obj + 6.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9);
                assert!((x[1] - 2.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lp_oracle_flags_infeasible_and_unbounded() {
        let mut inst = LpInstance {
            n: 1,
            lb: vec![1.0],
            ub: vec![0.0],
            obj: vec![1.0],
            offset: 0.0,
            rows: vec![],
            binaries: vec![],
        };
        assert_eq!(dense_lp(&inst), OracleOutcome::Infeasible);
        inst.lb = vec![f64::NEG_INFINITY];
        inst.ub = vec![f64::INFINITY];
        assert_eq!(dense_lp(&inst), OracleOutcome::Unbounded);
    }

    #[test]
    fn enumeration_solves_a_small_knapsack() {
        // max 5a+4b+3c st 2a+3b+c <= 4, stated as minimization: a=1, c=1.
        let inst = LpInstance {
            n: 3,
            lb: vec![0.0; 3],
            ub: vec![1.0; 3],
            obj: vec![-5.0, -4.0, -3.0],
            offset: 0.0,
            rows: vec![OracleRow {
                coeffs: vec![(0, 2.0), (1, 3.0), (2, 1.0)],
                sense: OracleSense::Le,
                rhs: 4.0,
            }],
            binaries: vec![0, 1, 2],
        };
        let (obj, x) = enumerate_binaries_min(&inst).unwrap();
        assert!((obj + 8.0).abs() < 1e-9);
        assert_eq!(
            x.iter().map(|v| v.round() as i32).collect::<Vec<_>>(),
            vec![1, 0, 1]
        );
    }

    #[test]
    fn free_variable_columns_recover_signed_values() {
        let inst = LpInstance {
            n: 1,
            lb: vec![f64::NEG_INFINITY],
            ub: vec![f64::INFINITY],
            obj: vec![1.0],
            offset: 2.0,
            rows: vec![OracleRow {
                coeffs: vec![(0, 1.0)],
                sense: OracleSense::Ge,
                rhs: -5.0,
            }],
            binaries: vec![],
        };
        match dense_lp(&inst) {
            OracleOutcome::Optimal(obj, x) => {
                assert!((obj - (-3.0)).abs() < 1e-9);
                assert!((x[0] + 5.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn radiality_oracle_sees_cycles_and_sources() {
        assert!(radiality_oracle(3, &[(0, 1), (1, 2)], &[0]).ok());
        assert!(!radiality_oracle(3, &[(0, 1), (1, 2), (0, 2)], &[0]).acyclic);
        let v = radiality_oracle(4, &[(0, 1), (2, 3)], &[0, 1]);
        assert!(!v.one_source_per_component);
    }
}
