//! Combinatorics of the compactified moduli space: labelled trees with
//! (based) level structure, derived edge multiplicities, stratum validity,
//! codimension and codimension-one boundary enumeration.
//!
//! Levels grow upward: an edge multiplicity `m_{αβ} > 0` means the edge is a
//! negative puncture of `α` pointing down to `β`, so `𝓛(α) > 𝓛(β)`; edges
//! with `m_{αβ} = 0` are nodes joining components of the same level.  Edge
//! multiplicities are derived from the vertex balance
//! `Σ_β m_{αβ} = Σ_{k∈Λ⁺_α} m⁺ₖ − Σ_{k∈Λ⁻_α} m⁻ₖ`, which makes every
//! component profile a balanced cover.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::moduli::MultiplicityProfile;
use crate::{Error, Result};

/// A labelled tree with (based) level structure.
///
/// `lambda_plus[v]` / `lambda_minus[v]` hold the indices of the profile's
/// positive / negative punctures carried by vertex `v`.  `levels[v]` lies in
/// `1..=L`; `base_level` is present exactly for strata of the non-quotiented
/// moduli space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelTree {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub lambda_plus: Vec<Vec<usize>>,
    pub lambda_minus: Vec<Vec<usize>>,
    pub levels: Vec<u32>,
    pub base_level: Option<u32>,
}

/// Derived, antisymmetric edge multiplicities; both orientations stored.
pub type EdgeMults = BTreeMap<(usize, usize), i64>;

impl LevelTree {
    pub fn level_count(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Number of nodes: edges joining vertices of the same level.
    pub fn node_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| self.levels[a] == self.levels[b])
            .count()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    fn is_tree(&self) -> bool {
        if self.vertex_count == 0 || self.edges.len() != self.vertex_count - 1 {
            return false;
        }
        if self
            .edges
            .iter()
            .any(|&(a, b)| a == b || a >= self.vertex_count || b >= self.vertex_count)
        {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Solves the vertex-balance linear system on a tree by leaf peeling.
/// The solution is unique; inconsistency is impossible for balanced profiles
/// and reported as an invariant violation.
pub fn derive_edge_multiplicities(
    tree: &LevelTree,
    profile: &MultiplicityProfile,
) -> Result<EdgeMults> {
    if !tree.is_tree() {
        return Err(Error::Validation(
            "level structure must be a connected tree".into(),
        ));
    }
    for (v, part) in tree.lambda_plus.iter().enumerate() {
        if part.iter().any(|&k| k >= profile.positives().len()) {
            return Err(Error::Validation(format!(
                "vertex {v} refers to a positive puncture outside the profile"
            )));
        }
    }
    for (v, part) in tree.lambda_minus.iter().enumerate() {
        if part.iter().any(|&k| k >= profile.negatives().len()) {
            return Err(Error::Validation(format!(
                "vertex {v} refers to a negative puncture outside the profile"
            )));
        }
    }

    let mut remaining_net: Vec<i64> = (0..tree.vertex_count)
        .map(|v| {
            let pos: i64 = tree.lambda_plus[v]
                .iter()
                .map(|&k| i64::from(profile.positives()[k]))
                .sum();
            let neg: i64 = tree.lambda_minus[v]
                .iter()
                .map(|&k| i64::from(profile.negatives()[k]))
                .sum();
            pos - neg
        })
        .collect();

    let adj = tree.adjacency();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut resolved: EdgeMults = BTreeMap::new();
    let mut leaves: VecDeque<usize> =
        (0..tree.vertex_count).filter(|&v| degree[v] == 1).collect();

    while let Some(alpha) = leaves.pop_front() {
        if degree[alpha] != 1 {
            continue;
        }
        let beta = *adj[alpha]
            .iter()
            .find(|&&w| !resolved.contains_key(&(alpha, w)))
            .expect("a degree-one vertex has an unresolved edge");
        let m = remaining_net[alpha];
        resolved.insert((alpha, beta), m);
        resolved.insert((beta, alpha), -m);
        remaining_net[alpha] = 0;
        remaining_net[beta] += m;
        degree[alpha] -= 1;
        degree[beta] -= 1;
        if degree[beta] == 1 {
            leaves.push_back(beta);
        }
    }

    if let Some(v) = remaining_net.iter().position(|&n| n != 0) {
        return Err(Error::Invariant(format!(
            "vertex balance failed at vertex {v} (residual {}); profile not balanced?",
            remaining_net[v]
        )));
    }
    Ok(resolved)
}

/// Positive and negative puncture multiplicities of one component: its own
/// labelled punctures plus the cross-level edges, up-edges positive and
/// down-edges negative.  Node edges carry no puncture.
pub fn vertex_punctures(
    tree: &LevelTree,
    profile: &MultiplicityProfile,
    mults: &EdgeMults,
    v: usize,
) -> (Vec<u32>, Vec<u32>) {
    let mut pos: Vec<u32> = tree.lambda_plus[v]
        .iter()
        .map(|&k| profile.positives()[k])
        .collect();
    let mut neg: Vec<u32> = tree.lambda_minus[v]
        .iter()
        .map(|&k| profile.negatives()[k])
        .collect();
    for (&(a, _b), &m) in mults.iter() {
        if a != v {
            continue;
        }
        if m > 0 {
            neg.push(m as u32);
        } else if m < 0 {
            pos.push((-m) as u32);
        }
    }
    pos.sort_unstable_by(|x, y| y.cmp(x));
    neg.sort_unstable_by(|x, y| y.cmp(x));
    (pos, neg)
}

/// Validity report for a stratum candidate.
#[derive(Debug, Clone)]
pub struct StratumReport {
    pub valid: bool,
    pub violations: Vec<String>,
}

/// Checks the stratum rules:
///
/// * structural: connected tree, `𝓛` surjective onto `1..=L`, the `Λ±`
///   partition the profile punctures, levels adjacent across edges;
/// * sign rules: `m_{αβ} > 0 ⇒ 𝓛(α) > 𝓛(β)` and `m_{αβ} = 0 ⇒` same level;
/// * every component has at least two punctures;
/// * on every level of a proper stratum there is a noncylindrical component,
///   except the base level of a based stratum;
/// * components of a proper stratum of the quotient moduli carry strictly
///   fewer than `n` punctures.
pub fn validate_stratum(tree: &LevelTree, profile: &MultiplicityProfile) -> StratumReport {
    let mut violations = Vec::new();

    let shape_ok = tree.vertex_count > 0
        && tree.lambda_plus.len() == tree.vertex_count
        && tree.lambda_minus.len() == tree.vertex_count
        && tree.levels.len() == tree.vertex_count;
    if !shape_ok {
        return StratumReport {
            valid: false,
            violations: vec!["vertex arrays have inconsistent lengths".into()],
        };
    }

    // lambda decomposition covers every puncture exactly once
    let mut pos_seen = vec![0usize; profile.positives().len()];
    let mut neg_seen = vec![0usize; profile.negatives().len()];
    for v in 0..tree.vertex_count {
        for &k in &tree.lambda_plus[v] {
            match pos_seen.get_mut(k) {
                Some(c) => *c += 1,
                None => violations.push(format!("positive puncture {k} out of range")),
            }
        }
        for &k in &tree.lambda_minus[v] {
            match neg_seen.get_mut(k) {
                Some(c) => *c += 1,
                None => violations.push(format!("negative puncture {k} out of range")),
            }
        }
    }
    if pos_seen.iter().any(|&c| c != 1) || neg_seen.iter().any(|&c| c != 1) {
        violations.push("puncture labels do not form a partition".into());
    }

    let level_count = tree.level_count();
    if level_count == 0 {
        violations.push("no levels".into());
    }
    for l in 1..=level_count {
        if !tree.levels.contains(&l) {
            violations.push(format!("level map is not surjective: level {l} empty"));
        }
    }
    if tree.levels.iter().any(|&l| l == 0) {
        violations.push("levels must start at 1".into());
    }
    if let Some(l0) = tree.base_level {
        if l0 == 0 || l0 > level_count {
            violations.push(format!("base level {l0} out of range"));
        }
    }

    let mults = match derive_edge_multiplicities(tree, profile) {
        Ok(m) => m,
        Err(e) => {
            violations.push(e.to_string());
            return StratumReport { valid: false, violations };
        }
    };

    for &(a, b) in &tree.edges {
        let la = tree.levels[a];
        let lb = tree.levels[b];
        if la.abs_diff(lb) > 1 {
            violations.push(format!("edge {a}-{b} joins non-adjacent levels {la},{lb}"));
        }
        let m = mults[&(a, b)];
        if m > 0 && la <= lb {
            violations.push(format!(
                "edge {a}-{b} has multiplicity {m} but level({a}) <= level({b})"
            ));
        }
        if m < 0 && la >= lb {
            violations.push(format!(
                "edge {a}-{b} has multiplicity {m} but level({a}) >= level({b})"
            ));
        }
        if m == 0 && la != lb {
            violations.push(format!(
                "edge {a}-{b} is a node (multiplicity 0) across distinct levels"
            ));
        }
    }

    // the profile's own punctures sit at the extreme levels: positive
    // asymptotics on the top level, negative ones on the bottom level
    for v in 0..tree.vertex_count {
        if !tree.lambda_plus[v].is_empty() && tree.levels[v] != level_count {
            violations.push(format!(
                "component {v} carries a positive puncture below the top level"
            ));
        }
        if !tree.lambda_minus[v].is_empty() && tree.levels[v] != 1 {
            violations.push(format!(
                "component {v} carries a negative puncture above the bottom level"
            ));
        }
    }

    let punctures: Vec<(Vec<u32>, Vec<u32>)> = (0..tree.vertex_count)
        .map(|v| vertex_punctures(tree, profile, &mults, v))
        .collect();
    for (v, (pos, neg)) in punctures.iter().enumerate() {
        if pos.len() + neg.len() < 2 {
            violations.push(format!("component {v} has fewer than two punctures"));
        }
    }

    let proper = level_count > 1 || tree.node_count() > 0;
    if proper {
        // a component is cylindrical iff it is an unbranched cylinder
        let cylindrical = |v: usize| {
            let (pos, neg) = &punctures[v];
            pos.len() == 1 && neg.len() == 1 && pos[0] == neg[0]
        };
        for l in 1..=level_count {
            if tree.base_level == Some(l) {
                continue;
            }
            let level_vertices: Vec<usize> = (0..tree.vertex_count)
                .filter(|&v| tree.levels[v] == l)
                .collect();
            if !level_vertices.is_empty() && level_vertices.iter().all(|&v| cylindrical(v)) {
                violations.push(format!("level {l} consists of cylinders only"));
            }
        }
        if tree.base_level.is_none() {
            let n = profile.punctures();
            for (v, (pos, neg)) in punctures.iter().enumerate() {
                if pos.len() + neg.len() >= n {
                    violations.push(format!(
                        "component {v} carries {} punctures, needs fewer than {n}",
                        pos.len() + neg.len()
                    ));
                }
            }
        }
    }

    StratumReport {
        valid: violations.is_empty(),
        violations,
    }
}

/// A validated stratum in canonical vertex labelling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub tree: LevelTree,
    /// One entry per edge, oriented as stored in `tree.edges`.
    pub edge_mults: Vec<i64>,
    pub level_count: u32,
    pub node_count: usize,
    pub codim: i64,
    pub fiber_group_order: u64,
    pub component_profiles: Vec<MultiplicityProfile>,
    pub encoding: String,
}

/// Codimension of a stratum: `L − 1 + 2N`.
pub fn codimension(level_count: u32, node_count: usize) -> i64 {
    i64::from(level_count) - 1 + 2 * (node_count as i64)
}

/// Order of the fibre-product decoration group: the product of `|m_{αβ}|`
/// over cross-level edges.
pub fn fiber_group_order(tree: &LevelTree, mults: &EdgeMults) -> u64 {
    tree.edges
        .iter()
        .map(|&(a, b)| {
            let m = mults[&(a, b)].unsigned_abs();
            if m == 0 {
                1
            } else {
                m
            }
        })
        .product()
}

impl StratumSummary {
    /// Validates the tree and assembles the summary, relabelling vertices
    /// into canonical order: sorted by (level, puncture labels).
    pub fn build(tree: &LevelTree, profile: &MultiplicityProfile) -> Result<StratumSummary> {
        let report = validate_stratum(tree, profile);
        if !report.valid {
            return Err(Error::Validation(format!(
                "invalid stratum: {}",
                report.violations.join("; ")
            )));
        }
        let mults = derive_edge_multiplicities(tree, profile)?;

        let mut order: Vec<usize> = (0..tree.vertex_count).collect();
        let sort_key = |v: usize| {
            let mut lp = tree.lambda_plus[v].clone();
            let mut lm = tree.lambda_minus[v].clone();
            lp.sort_unstable();
            lm.sort_unstable();
            let mut incident: Vec<i64> = tree
                .edges
                .iter()
                .filter_map(|&(a, b)| {
                    if a == v {
                        Some(mults[&(a, b)])
                    } else if b == v {
                        Some(mults[&(b, a)])
                    } else {
                        None
                    }
                })
                .collect();
            incident.sort_unstable();
            (std::cmp::Reverse(tree.levels[v]), lp, lm, incident)
        };
        order.sort_by_key(|&v| sort_key(v));
        let mut relabel = vec![0usize; tree.vertex_count];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }

        let mut edges: Vec<(usize, usize)> = tree
            .edges
            .iter()
            .map(|&(a, b)| {
                let (na, nb) = (relabel[a], relabel[b]);
                if na <= nb {
                    (na, nb)
                } else {
                    (nb, na)
                }
            })
            .collect();
        edges.sort_unstable();
        let canonical_tree = LevelTree {
            vertex_count: tree.vertex_count,
            edges,
            lambda_plus: order
                .iter()
                .map(|&old| {
                    let mut part = tree.lambda_plus[old].clone();
                    part.sort_unstable();
                    part
                })
                .collect(),
            lambda_minus: order
                .iter()
                .map(|&old| {
                    let mut part = tree.lambda_minus[old].clone();
                    part.sort_unstable();
                    part
                })
                .collect(),
            levels: order.iter().map(|&old| tree.levels[old]).collect(),
            base_level: tree.base_level,
        };
        let canonical_mults = derive_edge_multiplicities(&canonical_tree, profile)?;

        let level_count = canonical_tree.level_count();
        let node_count = canonical_tree.node_count();
        let component_profiles = (0..canonical_tree.vertex_count)
            .map(|v| {
                let (pos, neg) = vertex_punctures(&canonical_tree, profile, &canonical_mults, v);
                MultiplicityProfile::new(pos, neg)
            })
            .collect::<Result<Vec<_>>>()?;

        let encoding = encode(&canonical_tree, &canonical_mults);
        let edge_mults = canonical_tree
            .edges
            .iter()
            .map(|&(a, b)| canonical_mults[&(a, b)])
            .collect();
        Ok(StratumSummary {
            fiber_group_order: fiber_group_order(&canonical_tree, &canonical_mults),
            codim: codimension(level_count, node_count),
            level_count,
            node_count,
            component_profiles,
            edge_mults,
            encoding,
            tree: canonical_tree,
        })
    }
}

/// Deterministic single-line encoding of a canonical stratum.
fn encode(tree: &LevelTree, mults: &EdgeMults) -> String {
    let fmt_list = |xs: &[usize]| {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut parts = Vec::new();
    for v in 0..tree.vertex_count {
        parts.push(format!(
            "v{}:l{}[+{}][-{}]",
            v,
            tree.levels[v],
            fmt_list(&tree.lambda_plus[v]),
            fmt_list(&tree.lambda_minus[v])
        ));
    }
    for &(a, b) in &tree.edges {
        parts.push(format!("e{a}-{b}:{}", mults[&(a, b)]));
    }
    if let Some(l0) = tree.base_level {
        parts.push(format!("base{l0}"));
    }
    parts.join(" ")
}

/// Enumerates the valid two-level node-free strata of a balanced profile up
/// to vertex relabelling.  Components of positive net weight end up on level
/// 2, negative ones on level 1; connecting multiplicities are forced by
/// vertex balance.  Deterministic and duplicate-free.
pub fn enumerate_codim1(profile: &MultiplicityProfile) -> Result<Vec<StratumSummary>> {
    if !profile.balanced() {
        return Err(Error::Validation(format!(
            "profile {profile} is not balanced"
        )));
    }
    let n_pos = profile.positives().len();
    let n_neg = profile.negatives().len();
    if n_pos + n_neg <= 2 {
        return Ok(Vec::new());
    }

    let mut found: BTreeMap<String, StratumSummary> = BTreeMap::new();
    let n = profile.punctures();

    for top in 1..=n_pos {
        for bottom in 1..=n_neg {
            let vertices = top + bottom;
            let trees = bipartite_spanning_trees(top, bottom);
            if trees.is_empty() {
                continue;
            }
            let mut pos_assign = vec![0usize; n_pos];
            let mut neg_assign = vec![0usize; n_neg];
            assign_punctures(
                profile,
                top,
                bottom,
                0,
                true,
                &mut pos_assign,
                &mut neg_assign,
                &mut |pos_assign, neg_assign| {
                    let mut net = [0i64; MAX_FAST_VERTICES];
                    let mut lambda_count = [0usize; MAX_FAST_VERTICES];
                    for (k, &v) in pos_assign.iter().enumerate() {
                        net[v] += i64::from(profile.positives()[k]);
                        lambda_count[v] += 1;
                    }
                    for (k, &v) in neg_assign.iter().enumerate() {
                        net[v] -= i64::from(profile.negatives()[k]);
                        lambda_count[v] += 1;
                    }
                    for tree_edges in &trees {
                        if !fast_stratum_filter(tree_edges, &net, &lambda_count, top, vertices, n)
                        {
                            continue;
                        }
                        let tree = LevelTree {
                            vertex_count: vertices,
                            edges: tree_edges.clone(),
                            lambda_plus: group_by_vertex(pos_assign, vertices),
                            lambda_minus: group_by_vertex(neg_assign, vertices),
                            levels: (0..vertices)
                                .map(|v| if v < top { 2 } else { 1 })
                                .collect(),
                            base_level: None,
                        };
                        if let Ok(summary) = StratumSummary::build(&tree, profile) {
                            debug_assert_eq!(summary.codim, 1);
                            found.entry(summary.encoding.clone()).or_insert(summary);
                        }
                    }
                },
            );
        }
    }
    Ok(found.into_values().collect())
}

const MAX_FAST_VERTICES: usize = 16;

/// Allocation-free pre-check of one (assignment, spanning tree) candidate:
/// peels the balance system and tests the sign, puncture-count and
/// cylinder-level rules.  Survivors are re-validated on the slow path.
fn fast_stratum_filter(
    edges: &[(usize, usize)],
    net: &[i64; MAX_FAST_VERTICES],
    lambda_count: &[usize; MAX_FAST_VERTICES],
    top: usize,
    vertices: usize,
    n: usize,
) -> bool {
    if vertices > MAX_FAST_VERTICES {
        return true; // fall through to the full validation
    }
    let mut remaining = [0i64; MAX_FAST_VERTICES];
    remaining[..vertices].copy_from_slice(&net[..vertices]);
    let mut degree = [0usize; MAX_FAST_VERTICES];
    let mut resolved = [false; MAX_FAST_VERTICES];
    let mut mult = [0i64; MAX_FAST_VERTICES];
    for &(a, b) in edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    // puncture counts: every edge is a cross-level puncture for both ends
    for v in 0..vertices {
        let punctures = lambda_count[v] + degree[v];
        if punctures < 2 || punctures >= n {
            return false;
        }
    }
    // each level needs a component with at least three punctures
    let noncyl = |v: usize| lambda_count[v] + degree[v] >= 3;
    if !(0..top).any(noncyl) || !(top..vertices).any(noncyl) {
        return false;
    }
    // peel leaves to derive edge multiplicities
    let mut deg = degree;
    for _ in 0..edges.len() {
        let mut progressed = false;
        for (i, &(a, b)) in edges.iter().enumerate() {
            if resolved[i] {
                continue;
            }
            let (leaf, other) = if deg[a] == 1 {
                (a, b)
            } else if deg[b] == 1 {
                (b, a)
            } else {
                continue;
            };
            let m_leaf = remaining[leaf];
            // orient as stored: m for (a, b) is +net when a is the leaf
            mult[i] = if leaf == a { m_leaf } else { -m_leaf };
            remaining[leaf] = 0;
            remaining[other] += m_leaf;
            deg[leaf] -= 1;
            deg[other] -= 1;
            resolved[i] = true;
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    if resolved[..edges.len()].iter().any(|&r| !r) {
        return true; // malformed; let the slow path decide
    }
    if remaining[..vertices].iter().any(|&r| r != 0) {
        return false;
    }
    // cross-level edges oriented top -> bottom must carry positive
    // multiplicity
    edges
        .iter()
        .enumerate()
        .all(|(i, &(a, _))| if a < top { mult[i] > 0 } else { mult[i] < 0 })
}

fn group_by_vertex(assign: &[usize], vertices: usize) -> Vec<Vec<usize>> {
    let mut parts = vec![Vec::new(); vertices];
    for (k, &v) in assign.iter().enumerate() {
        parts[v].push(k);
    }
    parts
}

/// Recursively assigns punctures to vertices: positives surject onto the
/// `top` vertices `0..top`, negatives onto the `bottom` vertices
/// `top..top+bottom`.
#[allow(clippy::too_many_arguments)]
fn assign_punctures(
    profile: &MultiplicityProfile,
    top: usize,
    bottom: usize,
    idx: usize,
    positive_side: bool,
    pos_assign: &mut Vec<usize>,
    neg_assign: &mut Vec<usize>,
    callback: &mut impl FnMut(&[usize], &[usize]),
) {
    let count = if positive_side {
        profile.positives().len()
    } else {
        profile.negatives().len()
    };

    if idx == count {
        if positive_side {
            assign_punctures(
                profile, top, bottom, 0, false, pos_assign, neg_assign, callback,
            );
        } else {
            callback(pos_assign, neg_assign);
        }
        return;
    }
    // prune: remaining punctures must still cover the empty vertices
    let range = if positive_side {
        0..top
    } else {
        top..top + bottom
    };
    let uncovered = {
        let assigned: &[usize] = if positive_side {
            &pos_assign[..idx]
        } else {
            &neg_assign[..idx]
        };
        range.clone().filter(|v| !assigned.contains(v)).count()
    };
    if uncovered > count - idx {
        return;
    }
    for v in range {
        if positive_side {
            pos_assign[idx] = v;
        } else {
            neg_assign[idx] = v;
        }
        assign_punctures(
            profile,
            top,
            bottom,
            idx + 1,
            positive_side,
            pos_assign,
            neg_assign,
            callback,
        );
    }
}

/// All spanning trees of the complete bipartite graph on `top × bottom`
/// vertices, as edge lists `(top_vertex, top + bottom_vertex)`.
fn bipartite_spanning_trees(top: usize, bottom: usize) -> Vec<Vec<(usize, usize)>> {
    let vertices = top + bottom;
    let all_edges: Vec<(usize, usize)> = (0..top)
        .flat_map(|a| (0..bottom).map(move |b| (a, top + b)))
        .collect();
    let needed = vertices - 1;
    if all_edges.len() < needed {
        return Vec::new();
    }
    fn rec(
        all: &[(usize, usize)],
        start: usize,
        needed: usize,
        vertices: usize,
        chosen: &mut Vec<(usize, usize)>,
        trees: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if chosen.len() == needed {
            let mut parent: Vec<usize> = (0..vertices).collect();
            fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
                while parent[x] != x {
                    parent[x] = parent[parent[x]];
                    x = parent[x];
                }
                x
            }
            let mut components = vertices;
            for &(a, b) in chosen.iter() {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                    components -= 1;
                }
            }
            if components == 1 {
                trees.push(chosen.clone());
            }
            return;
        }
        if all.len() - start < needed - chosen.len() {
            return;
        }
        for i in start..all.len() {
            chosen.push(all[i]);
            rec(all, i + 1, needed, vertices, chosen, trees);
            chosen.pop();
        }
    }
    let mut trees = Vec::new();
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(needed);
    rec(&all_edges, 0, needed, vertices, &mut chosen, &mut trees);
    trees
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn profile(s: &str) -> MultiplicityProfile {
        MultiplicityProfile::parse(s).unwrap()
    }

    /// Two vertices: α carries the positive puncture of multiplicity 2, β
    /// both negatives.  Balance forces the connecting multiplicity 2 with α
    /// above β.
    #[test]
    fn two_vertex_peeling_matches_hand_solution() {
        let p = profile("2;1,1");
        let tree = LevelTree {
            vertex_count: 2,
            edges: vec![(0, 1)],
            lambda_plus: vec![vec![0], vec![]],
            lambda_minus: vec![vec![], vec![0, 1]],
            levels: vec![2, 1],
            base_level: None,
        };
        let mults = derive_edge_multiplicities(&tree, &p).unwrap();
        assert_eq!(mults[&(0, 1)], 2);
        assert_eq!(mults[&(1, 0)], -2);
        // component punctures: the Λ⁺ vertex becomes the cylinder (2;2),
        // the Λ⁻ vertex the pair of pants (2;1,1)
        assert_eq!(vertex_punctures(&tree, &p, &mults, 0), (vec![2], vec![2]));
        assert_eq!(
            vertex_punctures(&tree, &p, &mults, 1),
            (vec![2], vec![1, 1])
        );
        // as a stratum of the quotient moduli this candidate is rightly
        // rejected: its top level is a lone cylinder
        let report = validate_stratum(&tree, &p);
        assert!(!report.valid);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("cylinders only")));
    }

    #[test]
    fn single_vertex_tree_is_the_top_stratum() {
        let p = profile("2;1,1");
        let tree = LevelTree {
            vertex_count: 1,
            edges: vec![],
            lambda_plus: vec![vec![0]],
            lambda_minus: vec![vec![0, 1]],
            levels: vec![1],
            base_level: None,
        };
        let mults = derive_edge_multiplicities(&tree, &p).unwrap();
        assert!(mults.is_empty());
        let report = validate_stratum(&tree, &p);
        assert!(report.valid, "{:?}", report.violations);
        let summary = StratumSummary::build(&tree, &p).unwrap();
        assert_eq!(summary.codim, 0);
        assert_eq!(summary.fiber_group_order, 1);
    }

    /// Dense solve of the balance system as an independent check of peeling
    /// on a three-vertex path.
    #[test]
    fn path_peeling_matches_dense_solve() {
        let p = profile("4;2,1,1");
        // path 0 - 1 - 2: +4 at the top, all negatives at the bottom, a
        // bare cylinder vertex in the middle
        let tree = LevelTree {
            vertex_count: 3,
            edges: vec![(0, 1), (1, 2)],
            lambda_plus: vec![vec![0], vec![], vec![]],
            lambda_minus: vec![vec![], vec![], vec![0, 1, 2]],
            levels: vec![3, 2, 1],
            base_level: None,
        };
        let mults = derive_edge_multiplicities(&tree, &p).unwrap();

        // dense route: unknowns x01, x12 satisfy
        //   x01 = net(0) = 4;  -x01 + x12 = net(1) = 0;  -x12 = net(2) = -4
        let x01 = 4i64;
        let x12 = x01;
        assert_eq!(mults[&(0, 1)], x01);
        assert_eq!(mults[&(1, 2)], x12);
        assert_eq!(mults[&(2, 1)], -x12);
        assert_eq!(codimension(tree.level_count(), tree.node_count()), 2);
        assert_eq!(fiber_group_order(&tree, &mults), 16);
        // balance holds exactly at every vertex
        for v in 0..3 {
            let (pos, neg) = vertex_punctures(&tree, &p, &mults, v);
            let sum = |s: &[u32]| s.iter().map(|&m| i64::from(m)).sum::<i64>();
            assert_eq!(sum(&pos), sum(&neg), "vertex {v}");
        }
    }

    #[test]
    fn bottom_level_of_cylinders_is_invalid() {
        // top = pair of pants, bottom = lone cylinder
        let p = profile("2;1,1");
        let tree = LevelTree {
            vertex_count: 2,
            edges: vec![(0, 1)],
            lambda_plus: vec![vec![0], vec![]],
            lambda_minus: vec![vec![0], vec![1]],
            levels: vec![2, 1],
            base_level: None,
        };
        let report = validate_stratum(&tree, &p);
        assert!(!report.valid);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("cylinders only")));
    }

    #[test]
    fn based_stratum_with_cylinder_base_is_valid() {
        let p = profile("2;1,1");
        // base level 2 holds the trivial cylinder (2;2); the pair of pants
        // sits below it
        let tree = LevelTree {
            vertex_count: 2,
            edges: vec![(0, 1)],
            lambda_plus: vec![vec![0], vec![]],
            lambda_minus: vec![vec![], vec![0, 1]],
            levels: vec![2, 1],
            base_level: Some(2),
        };
        let report = validate_stratum(&tree, &p);
        assert!(report.valid, "{:?}", report.violations);

        // the same tree without a base level is a rejected quotient stratum
        let unbased = LevelTree { base_level: None, ..tree };
        assert!(!validate_stratum(&unbased, &p).valid);

        // base at the bottom: two cylinders each carrying one negative
        let tree = LevelTree {
            vertex_count: 3,
            edges: vec![(0, 1), (0, 2)],
            lambda_plus: vec![vec![0], vec![], vec![]],
            lambda_minus: vec![vec![], vec![0], vec![1]],
            levels: vec![2, 1, 1],
            base_level: Some(1),
        };
        let report = validate_stratum(&tree, &p);
        assert!(report.valid, "{:?}", report.violations);
    }

    #[test]
    fn codimension_formula() {
        assert_eq!(codimension(2, 0), 1);
        assert_eq!(codimension(1, 0), 0);
        assert_eq!(codimension(3, 1), 4);
    }

    #[test]
    fn enumerate_pair_of_pants_boundary_is_empty() {
        assert!(enumerate_codim1(&profile("2;1,1")).unwrap().is_empty());
        assert!(enumerate_codim1(&profile("1,1;2")).unwrap().is_empty());
    }

    #[test]
    fn enumerate_trivial_cylinder_is_empty() {
        assert!(enumerate_codim1(&profile("1;1")).unwrap().is_empty());
    }

    #[test]
    fn enumerate_four_punctures_contains_hand_built_stratum() {
        let p = profile("3;1,1,1");
        let strata = enumerate_codim1(&p).unwrap();
        assert!(!strata.is_empty());
        // hand-built: top (3;1,2) over {(2;1,1), cylinder (1;1)}
        let tree = LevelTree {
            vertex_count: 3,
            edges: vec![(0, 1), (0, 2)],
            lambda_plus: vec![vec![0], vec![], vec![]],
            lambda_minus: vec![vec![], vec![0, 1], vec![2]],
            levels: vec![2, 1, 1],
            base_level: None,
        };
        let mults = derive_edge_multiplicities(&tree, &p).unwrap();
        let mut abs: Vec<i64> = tree
            .edges
            .iter()
            .map(|&(a, b)| mults[&(a, b)].abs())
            .collect();
        abs.sort_unstable();
        assert_eq!(abs, vec![1, 2]);
        let summary = StratumSummary::build(&tree, &p).unwrap();
        assert_eq!(summary.codim, 1);
        assert!(
            strata.iter().any(|s| s.encoding == summary.encoding),
            "enumeration misses the hand-built stratum: {}",
            summary.encoding
        );
        let mut profiles: Vec<String> = summary
            .component_profiles
            .iter()
            .map(|c| c.to_cli_string())
            .collect();
        profiles.sort();
        assert_eq!(profiles, vec!["1;1", "2;1,1", "3;2,1"]);
    }

    #[test]
    fn enumerated_strata_satisfy_level_degree_conservation() {
        for p in [
            profile("3;1,1,1"),
            profile("2,2;1,1,1,1"),
            profile("4;2,1,1"),
        ] {
            let total = p.degree_positive();
            for stratum in enumerate_codim1(&p).unwrap() {
                assert_eq!(stratum.codim, 1);
                assert_eq!(stratum.level_count, 2);
                assert_eq!(stratum.node_count, 0);
                // per level, component degrees sum to the profile degree
                for level in 1..=2u32 {
                    let degree: u64 = (0..stratum.tree.vertex_count)
                        .filter(|&v| stratum.tree.levels[v] == level)
                        .map(|v| stratum.component_profiles[v].degree_positive())
                        .sum();
                    assert_eq!(degree, total, "level {level} of {}", stratum.encoding);
                }
                for c in &stratum.component_profiles {
                    assert!(c.punctures() < p.punctures());
                    assert!(c.balanced());
                }
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic_and_duplicate_free() {
        let p = profile("4;2,1,1");
        let a = enumerate_codim1(&p).unwrap();
        let b = enumerate_codim1(&p).unwrap();
        let enc_a: Vec<&str> = a.iter().map(|s| s.encoding.as_str()).collect();
        let enc_b: Vec<&str> = b.iter().map(|s| s.encoding.as_str()).collect();
        assert_eq!(enc_a, enc_b);
        let set: BTreeSet<&str> = enc_a.iter().copied().collect();
        assert_eq!(set.len(), enc_a.len());
    }
}
