//! Shelling verification, constructive shellings for 2-balls and local
//! stars, heuristic backtracking search, a brute-force oracle for small
//! complexes, and spanning trees of the face-connection graph.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mesh::{Simplex, SimplicialComplex};
use crate::scalar::Real;

/// Errors from shelling construction and search.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ShellingError {
    #[error("complex has {0} cells, above the brute-force limit {1}")]
    TooManyCells(usize, usize),
    #[error("complex is not a simplicial 2-ball: {0}")]
    Not2Ball(String),
    #[error("complex is not face-connected")]
    Disconnected,
    #[error("star of {0:?} admits no shelling within the search limits")]
    StarNotShellable(Simplex),
    #[error("no shelling found within the budget of {calls} verifier calls")]
    NotShellableWithinBudget { calls: usize },
    #[error("order is not a permutation of the cells")]
    NotAPermutation,
}

/// Per-step interface data of a verified shelling.
#[derive(Debug, Clone)]
pub struct StepInfo {
    /// The codimension-one faces of `T_m` composing the interface with the
    /// union of the earlier cells.
    pub interface_faces: Vec<Simplex>,
    /// The common intersection of the interface faces; `None` only when the
    /// interface is the whole cell boundary (sphere closing step).
    pub s_m: Option<Simplex>,
    /// Dimension of `s_m`, or `-1` for the sphere closing step.
    pub ell_m: i64,
    /// Cell indices (into the complex) of the cells of `st(s_m)` other than
    /// `T_m`; all appear earlier in the order.
    pub u_prev: Vec<usize>,
    /// Number of interface faces, equal to `n - ell_m`.
    pub shared_face_count: usize,
}

/// A verified shelling order of the top-dimensional cells.
#[derive(Debug, Clone)]
pub struct Shelling {
    /// Cell indices in shelling order.
    pub order: Vec<usize>,
    /// Interface data for steps `m = 1..=M` (index `m-1`).
    pub steps: Vec<StepInfo>,
    /// Set by [`verify_shelling`] on success.
    pub verified: bool,
}

/// Kind of shelling-order defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A maximal shared simplex is a single vertex.
    IsolatedVertex,
    /// A maximal shared simplex has positive dimension but codimension
    /// greater than one.
    LowerDimIntersection,
    /// The cell does not touch the union of the earlier cells at all.
    EmptyInterface,
    /// The star of the interface-face intersection contains a cell that
    /// appears later in the order.
    StarNotCompleted,
}

/// A rejected shelling order, with the failing step and witnesses.
#[derive(Debug, Clone)]
pub struct Violation {
    /// Index of the failing step within the order.
    pub step: usize,
    pub kind: ViolationKind,
    /// Offending simplices (isolated pieces, or the star center and the
    /// missing cell for star-completion failures).
    pub witness: Vec<Simplex>,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "step {}: {:?}, witness {:?}",
            self.step, self.kind, self.witness
        )
    }
}

/// Checks whether an order of the cells is a shelling.
///
/// For every step the intersection with the union of the earlier cells must
/// be a nonempty union of codimension-one faces of the incoming cell — an
/// isolated shared vertex or edge invalidates the step, which a check of
/// shared faces alone would miss. The star of the interface intersection
/// must already be completed by the step.
pub fn verify_shelling<R: Real>(
    c: &SimplicialComplex<R>,
    order: &[usize],
) -> Result<Shelling, Box<Violation>> {
    let m_total = c.cells().len();
    assert_eq!(order.len(), m_total, "order length mismatch");
    {
        let mut seen = vec![false; m_total];
        for &i in order {
            assert!(i < m_total && !seen[i], "order is not a permutation");
            seen[i] = true;
        }
    }
    let mut steps = Vec::with_capacity(m_total.saturating_sub(1));
    for m in 1..m_total {
        match verify_step(c, &order[..m], order[m], m) {
            Ok(info) => steps.push(info),
            Err(v) => return Err(v),
        }
    }
    Ok(Shelling {
        order: order.to_vec(),
        steps,
        verified: true,
    })
}

/// Checks a single prospective step: `cell` against the prior cells
/// `prefix`. `step` is only used for error reporting.
fn verify_step<R: Real>(
    c: &SimplicialComplex<R>,
    prefix: &[usize],
    cell: usize,
    step: usize,
) -> Result<StepInfo, Box<Violation>> {
    let n = c.n();
    let iset = c.simplicial_intersection(cell, prefix);
    if iset.is_empty() {
        return Err(Box::new(Violation {
            step,
            kind: ViolationKind::EmptyInterface,
            witness: vec![c.cells()[cell].clone()],
        }));
    }
    let faces = match iset.as_faces {
        Some(f) => f,
        None => {
            let bad: Vec<Simplex> = iset
                .shared_maximal
                .iter()
                .filter(|s| s.dim() + 1 != n)
                .cloned()
                .collect();
            let kind = if bad.iter().any(|s| s.dim() == 0) {
                ViolationKind::IsolatedVertex
            } else {
                ViolationKind::LowerDimIntersection
            };
            let witness = bad
                .iter()
                .filter(|s| s.dim() == 0)
                .chain(bad.iter().filter(|s| s.dim() > 0))
                .cloned()
                .collect();
            return Err(Box::new(Violation {
                step,
                kind,
                witness,
            }));
        }
    };
    // Common intersection of the interface faces.
    let mut s_m = Some(faces[0].clone());
    for f in &faces[1..] {
        s_m = s_m.and_then(|s| s.intersection(f));
    }
    let (ell_m, u_prev) = match &s_m {
        Some(s) => {
            // Star completion: every cell containing s, other than the
            // incoming one, must already be placed.
            let placed: HashSet<usize> = prefix.iter().copied().collect();
            let mut u_prev = Vec::new();
            for (ci, other) in c.cells().iter().enumerate() {
                if ci != cell && other.contains(s) {
                    if !placed.contains(&ci) {
                        return Err(Box::new(Violation {
                            step,
                            kind: ViolationKind::StarNotCompleted,
                            witness: vec![s.clone(), other.clone()],
                        }));
                    }
                    u_prev.push(ci);
                }
            }
            (s.dim() as i64, u_prev)
        }
        None => (-1, prefix.to_vec()),
    };
    Ok(StepInfo {
        shared_face_count: faces.len(),
        interface_faces: faces,
        s_m,
        ell_m,
        u_prev,
    })
}

/// Whether appending `cell` to `prefix` is a valid shelling step (without
/// building the full step data).
fn step_ok<R: Real>(c: &SimplicialComplex<R>, prefix: &[usize], cell: usize) -> bool {
    verify_step(c, prefix, cell, prefix.len()).is_ok()
}

/// Builds a shelling of a simplicial 2-ball by reverse construction:
/// repeatedly remove a triangle whose interface with the rest is a nonempty
/// union of edges and whose removal keeps the rest face-connected, with
/// backtracking. Such a triangle always exists for 2-balls.
pub fn shell_2_ball<R: Real>(c: &SimplicialComplex<R>) -> Result<Shelling, ShellingError> {
    if c.n() != 2 {
        return Err(ShellingError::Not2Ball(format!("dimension {}", c.n())));
    }
    if c.classify_faces().is_err() {
        return Err(ShellingError::Not2Ball("not a pseudomanifold".into()));
    }
    if c.euler_characteristic() != 1 {
        return Err(ShellingError::Not2Ball(format!(
            "Euler characteristic {}",
            c.euler_characteristic()
        )));
    }
    if !c.is_face_connected() {
        return Err(ShellingError::Not2Ball("not face-connected".into()));
    }
    let m = c.cells().len();
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut reversed = Vec::with_capacity(m);
    if !peel(c, &mut remaining, &mut reversed) {
        return Err(ShellingError::Not2Ball(
            "no removable triangle at some stage".into(),
        ));
    }
    reversed.reverse();
    verify_shelling(c, &reversed)
        .map_err(|v| ShellingError::Not2Ball(format!("constructed order rejected: {v}")))
}

/// Recursive reverse peeling used by [`shell_2_ball`].
fn peel<R: Real>(
    c: &SimplicialComplex<R>,
    remaining: &mut Vec<usize>,
    reversed: &mut Vec<usize>,
) -> bool {
    if remaining.len() == 1 {
        reversed.push(remaining[0]);
        return true;
    }
    let candidates: Vec<usize> = remaining.clone();
    for &cand in &candidates {
        let rest: Vec<usize> = remaining.iter().copied().filter(|&x| x != cand).collect();
        // Reversed shelling step: the interface of the removed cell with the
        // rest must be a union of faces, and the rest must stay connected.
        if c.simplicial_intersection(cand, &rest).as_faces.is_none() {
            continue;
        }
        if !c.restrict(&rest).is_face_connected() {
            continue;
        }
        *remaining = rest;
        reversed.push(cand);
        if peel(c, remaining, reversed) {
            return true;
        }
        reversed.pop();
        remaining.clear();
        remaining.extend_from_slice(&candidates);
    }
    false
}

/// A shelling of the local star of `s`, returned as the star subcomplex
/// together with a shelling referring to the subcomplex's cells and the
/// parent cell index of each subcomplex cell.
pub struct StarShelling<R: Real> {
    /// The star as a standalone complex.
    pub subcomplex: SimplicialComplex<R>,
    /// A verified shelling of `subcomplex`.
    pub shelling: Shelling,
    /// For each cell of `subcomplex`, its index in the parent complex.
    pub parent_cells: Vec<usize>,
}

/// Shells the local star of a simplex (dimensions up to three).
///
/// Stars of edges in 3D are ordered by rotation around the edge; all other
/// cases use the backtracking search, which the smallness of local stars
/// keeps cheap. Star shellability is guaranteed in these dimensions.
pub fn shell_star<R: Real>(
    c: &SimplicialComplex<R>,
    s: &Simplex,
) -> Result<StarShelling<R>, ShellingError> {
    let star = c
        .star(s)
        .map_err(|_| ShellingError::StarNotShellable(s.clone()))?;
    let sub = star.to_subcomplex(c);
    let parent_cells = star.cell_indices.clone();
    let m = sub.cells().len();
    if m == 1 {
        let shelling = Shelling {
            order: vec![0],
            steps: Vec::new(),
            verified: true,
        };
        return Ok(StarShelling {
            subcomplex: sub,
            shelling,
            parent_cells,
        });
    }
    // Edge rotation in 3D: cells around an edge form a path or cycle in the
    // face-connection graph; a walk from one end (or any cell, for a cycle)
    // is a shelling.
    if c.n() == 3 && s.dim() == 1 {
        if let Some(order) = rotation_order(&sub) {
            if let Ok(sh) = verify_shelling(&sub, &order) {
                return Ok(StarShelling {
                    subcomplex: sub,
                    shelling: sh,
                    parent_cells,
                });
            }
        }
    }
    // General case: backtracking over valid steps from every root.
    let mut budget = 2_000_000usize;
    for root in 0..m {
        let mut prefix = vec![root];
        if backtrack_complete(&sub, &mut prefix, m, &mut budget) {
            let sh = verify_shelling(&sub, &prefix)
                .map_err(|_| ShellingError::StarNotShellable(s.clone()))?;
            return Ok(StarShelling {
                subcomplex: sub,
                shelling: sh,
                parent_cells,
            });
        }
    }
    Err(ShellingError::StarNotShellable(s.clone()))
}

/// Orders the cells of a complex whose face-connection graph is a path or a
/// cycle by walking along it. Returns `None` for other graphs.
fn rotation_order<R: Real>(c: &SimplicialComplex<R>) -> Option<Vec<usize>> {
    let m = c.cells().len();
    let (components, edges) = c.face_connected_components();
    if components.len() != 1 {
        return None;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (a, b, _) in &edges {
        adj[*a].push(*b);
        adj[*b].push(*a);
    }
    if adj.iter().any(|nb| nb.len() > 2) {
        return None;
    }
    let start = (0..m).find(|&i| adj[i].len() == 1).unwrap_or(0);
    let mut order = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    while order.len() < m {
        let next = *adj[cur].iter().find(|&&nb| nb != prev)?;
        order.push(next);
        prev = cur;
        cur = next;
    }
    Some(order)
}

/// Depth-first completion of a shelling prefix, used by [`shell_star`].
fn backtrack_complete<R: Real>(
    c: &SimplicialComplex<R>,
    prefix: &mut Vec<usize>,
    m: usize,
    budget: &mut usize,
) -> bool {
    if prefix.len() == m {
        return true;
    }
    if *budget == 0 {
        return false;
    }
    let placed: HashSet<usize> = prefix.iter().copied().collect();
    for cand in 0..m {
        if placed.contains(&cand) {
            continue;
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        if step_ok(c, prefix, cand) {
            prefix.push(cand);
            if backtrack_complete(c, prefix, m, budget) {
                return true;
            }
            prefix.pop();
        }
    }
    false
}

/// Configuration for [`search_shelling`].
pub struct SearchConfig<'a> {
    /// RNG seed; identical seeds reproduce identical searches.
    pub seed: u64,
    /// Number of randomized candidate shellings generated per initial cell.
    pub per_root: usize,
    /// Budget in verifier calls across the whole search.
    pub budget: usize,
    /// Score of a prospective step (lower is preferred): arguments are the
    /// current prefix, the candidate cell, and its step data.
    pub step_cost: &'a dyn Fn(&[usize], usize, &StepInfo) -> f64,
    /// Final objective for a complete shelling (lower is better); the search
    /// returns the candidate minimizing it.
    pub total_cost: &'a dyn Fn(&Shelling) -> f64,
}

/// Outcome of a successful shelling search.
pub struct SearchOutcome {
    /// The best complete shelling found.
    pub shelling: Shelling,
    /// Its objective value.
    pub cost: f64,
    /// Verifier calls consumed.
    pub calls_used: usize,
    /// Number of complete shellings examined.
    pub candidates: usize,
}

/// Backtracking search for a shelling guided by a greedy score.
///
/// Starting from each initial cell, cells are appended in order of
/// increasing step cost, preferring steps that complete the star of their
/// interface intersection; randomized tie-breaking generates several
/// candidates per root. Among all complete shellings found, the one with
/// the smallest total cost wins; ties break lexicographically so results
/// are machine-independent.
pub fn search_shelling<R: Real>(
    c: &SimplicialComplex<R>,
    config: &SearchConfig,
) -> Result<SearchOutcome, ShellingError> {
    if !c.is_face_connected() {
        return Err(ShellingError::Disconnected);
    }
    let m = c.cells().len();
    let mut calls = 0usize;
    let mut best: Option<(f64, Vec<usize>, Shelling)> = None;
    let mut candidates = 0usize;

    for root in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (root as u64).wrapping_mul(0x9e37)) ;
        for _attempt in 0..config.per_root.max(1) {
            if calls >= config.budget {
                break;
            }
            let mut prefix = vec![root];
            let found = greedy_descend(c, &mut prefix, m, config, &mut rng, &mut calls);
            if found {
                if let Ok(sh) = verify_shelling(c, &prefix) {
                    let cost = (config.total_cost)(&sh);
                    candidates += 1;
                    let better = match &best {
                        None => true,
                        Some((bc, border, _)) => {
                            cost < *bc || (cost == *bc && prefix < *border)
                        }
                    };
                    if better {
                        best = Some((cost, prefix.clone(), sh));
                    }
                }
            }
        }
    }
    match best {
        Some((cost, _, shelling)) => Ok(SearchOutcome {
            shelling,
            cost,
            calls_used: calls,
            candidates,
        }),
        None => Err(ShellingError::NotShellableWithinBudget { calls }),
    }
}

/// One randomized greedy descent with backtracking.
fn greedy_descend<R: Real>(
    c: &SimplicialComplex<R>,
    prefix: &mut Vec<usize>,
    m: usize,
    config: &SearchConfig,
    rng: &mut ChaCha8Rng,
    calls: &mut usize,
) -> bool {
    if prefix.len() == m {
        return true;
    }
    if *calls >= config.budget {
        return false;
    }
    let placed: HashSet<usize> = prefix.iter().copied().collect();
    // Collect valid steps with scores.
    let mut scored: Vec<(f64, usize)> = Vec::new();
    for cand in 0..m {
        if placed.contains(&cand) {
            continue;
        }
        *calls += 1;
        if let Ok(info) = verify_step(c, prefix, cand, prefix.len()) {
            let mut cost = (config.step_cost)(prefix, cand, &info);
            // Prefer steps that close a star: they share more faces and
            // keep later interface intersections controllable.
            cost /= info.shared_face_count as f64;
            scored.push((cost, cand));
        }
        if *calls >= config.budget {
            break;
        }
    }
    scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Randomized tie-breaking: shuffle within groups of equal cost.
    let mut i = 0;
    while i < scored.len() {
        let mut j = i + 1;
        while j < scored.len() && scored[j].0 == scored[i].0 {
            j += 1;
        }
        scored[i..j].shuffle(rng);
        i = j;
    }
    for (_, cand) in scored {
        prefix.push(cand);
        if greedy_descend(c, prefix, m, config, rng, calls) {
            return true;
        }
        prefix.pop();
        if *calls >= config.budget {
            return false;
        }
    }
    false
}

/// Enumerates every valid shelling of a small complex by exhaustive search
/// with prefix pruning.
pub fn brute_force_shellings<R: Real>(
    c: &SimplicialComplex<R>,
    limit: usize,
) -> Result<Vec<Vec<usize>>, ShellingError> {
    let m = c.cells().len();
    if m > limit {
        return Err(ShellingError::TooManyCells(m, limit));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(m);
    enumerate(c, &mut prefix, m, &mut out);
    Ok(out)
}

fn enumerate<R: Real>(
    c: &SimplicialComplex<R>,
    prefix: &mut Vec<usize>,
    m: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if prefix.len() == m {
        out.push(prefix.clone());
        return;
    }
    let placed: HashSet<usize> = prefix.iter().copied().collect();
    for cand in 0..m {
        if placed.contains(&cand) {
            continue;
        }
        if prefix.is_empty() || step_ok(c, prefix, cand) {
            prefix.push(cand);
            enumerate(c, prefix, m, out);
            prefix.pop();
        }
    }
}

/// A rooted spanning tree of the face-connection graph, with cells listed
/// in visit order so every predecessor precedes its children.
#[derive(Debug, Clone)]
pub struct SpanningTree {
    /// Root cell index.
    pub root: usize,
    /// Cell indices in depth-first visit order (`order[0] == root`).
    pub order: Vec<usize>,
    /// For position `m >= 1` in `order`, the position of the predecessor
    /// cell (always `< m`); `predecessor[0] == 0`.
    pub predecessor: Vec<usize>,
}

impl SpanningTree {
    /// Depth of the tree (longest root-to-leaf path, in edges).
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.order.len()];
        let mut max = 0;
        for m in 1..self.order.len() {
            depth[m] = depth[self.predecessor[m]] + 1;
            max = max.max(depth[m]);
        }
        max
    }
}

/// Builds a depth-first spanning tree of the face-connection graph, visiting
/// cheap edges first according to `cost_model(child, parent)`; ties break by
/// cell index.
pub fn spanning_tree<R: Real>(
    c: &SimplicialComplex<R>,
    root: usize,
    cost_model: &dyn Fn(usize, usize) -> f64,
) -> Result<SpanningTree, ShellingError> {
    let m = c.cells().len();
    let (_, edges) = c.face_connected_components();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (a, b, _) in &edges {
        adj[*a].push(*b);
        adj[*b].push(*a);
    }
    let mut order = vec![root];
    let mut predecessor = vec![0usize];
    let mut position = vec![usize::MAX; m];
    position[root] = 0;
    let mut stack = vec![root];
    while let Some(cur) = stack.pop() {
        let mut children: Vec<usize> = adj[cur]
            .iter()
            .copied()
            .filter(|&nb| position[nb] == usize::MAX)
            .collect();
        children.sort_unstable();
        children.sort_by(|&a, &b| {
            cost_model(a, cur)
                .partial_cmp(&cost_model(b, cur))
                .unwrap()
                .then(a.cmp(&b))
        });
        // Depth-first: push in reverse so the cheapest child is visited next.
        for &child in children.iter().rev() {
            stack.push(child);
        }
        for &child in &children {
            if position[child] == usize::MAX {
                position[child] = order.len();
                predecessor.push(position[cur]);
                order.push(child);
            }
        }
    }
    if order.len() != m {
        return Err(ShellingError::Disconnected);
    }
    Ok(SpanningTree {
        root,
        order,
        predecessor,
    })
}
