//! Left-right planarity test with combinatorial embedding.
//!
//! The test follows the left-right characterisation of planar graphs (DFS
//! orientation, lowpoints, nesting depths and a stack of conflict pairs); the
//! embedding phase turns the resolved sides into a rotation system. A rotation
//! system is checked independently by tracing its faces and applying Euler's
//! formula, which is what [`RotationSystem::verify`] does.

use crate::graph::Graph;

const NONE: usize = usize::MAX;

/// Cyclic neighbour order at every vertex, stored as half-edges.
///
/// Half-edge `h` runs from `origin(h)` to `to[h]`; `h ^ 1` is its twin.
/// `cw[h]` is the next half-edge clockwise around the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSystem {
    to: Vec<usize>,
    cw: Vec<usize>,
    ccw: Vec<usize>,
    first: Vec<usize>,
}

impl RotationSystem {
    /// Empty embedding on `n` isolated vertices.
    pub fn new(n: usize) -> Self {
        RotationSystem {
            to: Vec::new(),
            cw: Vec::new(),
            ccw: Vec::new(),
            first: vec![NONE; n],
        }
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    pub fn n_edges(&self) -> usize {
        self.to.len() / 2
    }

    fn origin(&self, h: usize) -> usize {
        self.to[h ^ 1]
    }

    /// Next dart along the face to the left of... whichever side `cw`
    /// induces; what matters is that it is used consistently.
    fn face_next(&self, h: usize) -> usize {
        self.cw[h ^ 1]
    }

    fn push_pair(&mut self, u: usize, v: usize) -> (usize, usize) {
        let hu = self.to.len();
        self.to.extend([v, u]);
        self.cw.extend([hu, hu + 1]);
        self.ccw.extend([hu, hu + 1]);
        (hu, hu + 1)
    }

    fn insert_cw_after(&mut self, v: usize, h: usize, reference: usize) {
        if reference == NONE {
            self.cw[h] = h;
            self.ccw[h] = h;
            self.first[v] = h;
            return;
        }
        let next = self.cw[reference];
        self.cw[h] = next;
        self.ccw[h] = reference;
        self.ccw[next] = h;
        self.cw[reference] = h;
    }

    fn insert_ccw_before(&mut self, v: usize, h: usize, reference: usize) {
        let prev = self.ccw[reference];
        self.insert_cw_after(v, h, prev);
        if self.first[v] == reference {
            self.first[v] = h;
        }
    }

    fn insert_first(&mut self, v: usize, h: usize) {
        match self.first[v] {
            NONE => self.insert_cw_after(v, h, NONE),
            f => self.insert_ccw_before(v, h, f),
        }
    }

    /// Neighbours of `v` in clockwise order starting at its first half-edge.
    pub fn rotation(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let start = self.first[v];
        if start == NONE {
            return out;
        }
        let mut h = start;
        loop {
            out.push(self.to[h]);
            h = self.cw[h];
            if h == start {
                break;
            }
        }
        out
    }

    fn darts_out(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let start = self.first[v];
        if start == NONE {
            return out;
        }
        let mut h = start;
        loop {
            out.push(h);
            h = self.cw[h];
            if h == start {
                break;
            }
        }
        out
    }

    /// Number of faces traced by the rotation system.
    pub fn face_count(&self) -> usize {
        let mut seen = vec![false; self.to.len()];
        let mut faces = 0;
        for start in 0..self.to.len() {
            if seen[start] {
                continue;
            }
            faces += 1;
            let mut h = start;
            while !seen[h] {
                seen[h] = true;
                h = self.face_next(h);
            }
        }
        faces
    }

    /// Checks that this rotation system embeds `graph` in the plane: every
    /// vertex's rotation is a permutation of its neighbours, and the traced
    /// faces satisfy Euler's formula component by component.
    pub fn verify(&self, graph: &Graph) -> bool {
        if self.n() != graph.n() || self.n_edges() != graph.n_edges() {
            return false;
        }
        for v in 0..graph.n() {
            let mut rot = self.rotation(v);
            if self.darts_out(v).iter().any(|&h| self.origin(h) != v) {
                return false;
            }
            let mut nbrs = graph.neighbors(v).to_vec();
            rot.sort_unstable();
            nbrs.sort_unstable();
            if rot != nbrs {
                return false;
            }
        }
        let comps = graph.components();
        let with_edges = comps.iter().filter(|c| c.len() > 1).count();
        let isolated = comps.len() - with_edges;
        let lhs = graph.n() as i64 - graph.n_edges() as i64 + self.face_count() as i64;
        lhs == 2 * with_edges as i64 + isolated as i64
    }

    /// Looks for a face containing both `u` and `v`. Returns the dart leaving
    /// `u` and the dart leaving `v` that lie on that face.
    pub(crate) fn common_face(&self, u: usize, v: usize) -> Option<(usize, usize)> {
        for start in self.darts_out(u) {
            let mut h = start;
            loop {
                if self.origin(h) == v {
                    return Some((start, h));
                }
                h = self.face_next(h);
                if h == start {
                    break;
                }
            }
        }
        None
    }

    /// Adds edge `u`-`v` inside the face that contains darts `du` (leaving
    /// `u`) and `dv` (leaving `v`). Pass `None` for an isolated endpoint or,
    /// when joining two components, any dart of each endpoint.
    pub(crate) fn insert_edge(&mut self, u: usize, v: usize, du: Option<usize>, dv: Option<usize>) {
        let (hu, hv) = self.push_pair(u, v);
        for (x, h, d) in [(u, hu, du), (v, hv, dv)] {
            match d {
                Some(d) => self.insert_ccw_before(x, h, d),
                None => match self.first[x] {
                    NONE => self.insert_cw_after(x, h, NONE),
                    f => self.insert_ccw_before(x, h, f),
                },
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Interval {
    low: Option<usize>,
    high: Option<usize>,
}

impl Interval {
    fn is_empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ConflictPair {
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct LrState<'a> {
    adj: Vec<Vec<(usize, usize)>>,
    edges: &'a [(usize, usize)],
    oriented: Vec<bool>,
    src: Vec<usize>,
    dst: Vec<usize>,
    out: Vec<Vec<usize>>,
    height: Vec<usize>,
    parent_edge: Vec<usize>,
    lowpt: Vec<usize>,
    lowpt2: Vec<usize>,
    nesting: Vec<i64>,
    roots: Vec<usize>,
    ordered: Vec<Vec<usize>>,
    stack: Vec<ConflictPair>,
    stack_bottom: Vec<usize>,
    lowpt_edge: Vec<usize>,
    reference: Vec<Option<usize>>,
    side: Vec<i8>,
}

impl<'a> LrState<'a> {
    fn new(n: usize, edges: &'a [(usize, usize)]) -> Self {
        let m = edges.len();
        let mut adj = vec![Vec::new(); n];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adj[u].push((v, id));
            adj[v].push((u, id));
        }
        LrState {
            adj,
            edges,
            oriented: vec![false; m],
            src: vec![NONE; m],
            dst: vec![NONE; m],
            out: vec![Vec::new(); n],
            height: vec![NONE; n],
            parent_edge: vec![NONE; n],
            lowpt: vec![0; m],
            lowpt2: vec![0; m],
            nesting: vec![0; m],
            roots: Vec::new(),
            ordered: Vec::new(),
            stack: Vec::new(),
            stack_bottom: vec![0; m],
            lowpt_edge: vec![NONE; m],
            reference: vec![None; m],
            side: vec![1; m],
        }
    }

    fn orient(&mut self, v: usize) {
        let e = self.parent_edge[v];
        for k in 0..self.adj[v].len() {
            let (w, id) = self.adj[v][k];
            if self.oriented[id] {
                continue;
            }
            self.oriented[id] = true;
            self.src[id] = v;
            self.dst[id] = w;
            self.out[v].push(id);
            self.lowpt[id] = self.height[v];
            self.lowpt2[id] = self.height[v];
            if self.height[w] == NONE {
                self.parent_edge[w] = id;
                self.height[w] = self.height[v] + 1;
                self.orient(w);
            } else {
                self.lowpt[id] = self.height[w];
            }
            self.nesting[id] = 2 * self.lowpt[id] as i64;
            if self.lowpt2[id] < self.height[v] {
                self.nesting[id] += 1;
            }
            if e != NONE {
                if self.lowpt[id] < self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt[e].min(self.lowpt2[id]);
                    self.lowpt[e] = self.lowpt[id];
                } else if self.lowpt[id] > self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt[id]);
                } else {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt2[id]);
                }
            }
        }
    }

    fn conflicting(&self, i: &Interval, b: usize) -> bool {
        match i.high {
            Some(h) => self.lowpt[h] > self.lowpt[b],
            None => false,
        }
    }

    fn lowest(&self, p: &ConflictPair) -> usize {
        match (p.left.low, p.right.low) {
            (None, Some(r)) => self.lowpt[r],
            (Some(l), None) => self.lowpt[l],
            (Some(l), Some(r)) => self.lowpt[l].min(self.lowpt[r]),
            (None, None) => unreachable!("empty conflict pair on stack"),
        }
    }

    fn test(&mut self, v: usize) -> bool {
        let e = self.parent_edge[v];
        for k in 0..self.ordered[v].len() {
            let ei = self.ordered[v][k];
            let w = self.dst[ei];
            self.stack_bottom[ei] = self.stack.len();
            if self.parent_edge[w] == ei {
                if !self.test(w) {
                    return false;
                }
            } else {
                self.lowpt_edge[ei] = ei;
                self.stack.push(ConflictPair {
                    left: Interval::default(),
                    right: Interval {
                        low: Some(ei),
                        high: Some(ei),
                    },
                });
            }
            if self.lowpt[ei] < self.height[v] {
                if k == 0 {
                    self.lowpt_edge[e] = self.lowpt_edge[ei];
                } else if !self.add_constraints(ei, e) {
                    return false;
                }
            }
        }
        if e != NONE {
            self.remove_back_edges(e);
        }
        true
    }

    fn add_constraints(&mut self, ei: usize, e: usize) -> bool {
        let mut p = ConflictPair::default();
        loop {
            let mut q = self.stack.pop().expect("return edges of ei on stack");
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            let q_low = q.right.low.expect("non-empty right interval");
            if self.lowpt[q_low] > self.lowpt[e] {
                if p.right.is_empty() {
                    p.right = q.right;
                } else if let Some(l) = p.right.low {
                    self.reference[l] = q.right.high;
                }
                p.right.low = q.right.low;
            } else {
                self.reference[q_low] = Some(self.lowpt_edge[e]);
            }
            if self.stack.len() == self.stack_bottom[ei] {
                break;
            }
        }
        while let Some(top) = self.stack.last() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().expect("top exists");
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            if let Some(l) = p.right.low {
                self.reference[l] = q.right.high;
            }
            if q.right.low.is_some() {
                p.right.low = q.right.low;
            }
            if p.left.is_empty() {
                p.left = q.left;
            } else if let Some(l) = p.left.low {
                self.reference[l] = q.left.high;
            }
            p.left.low = q.left.low;
        }
        if !(p.left.is_empty() && p.right.is_empty()) {
            self.stack.push(p);
        }
        true
    }

    fn remove_back_edges(&mut self, e: usize) {
        let u = self.src[e];
        while let Some(top) = self.stack.last() {
            if self.lowest(top) != self.height[u] {
                break;
            }
            let p = self.stack.pop().expect("top exists");
            if let Some(l) = p.left.low {
                self.side[l] = -1;
            }
        }
        if let Some(mut p) = self.stack.pop() {
            while let Some(h) = p.left.high {
                if self.dst[h] != u {
                    break;
                }
                p.left.high = self.reference[h];
            }
            if p.left.high.is_none() {
                if let Some(l) = p.left.low {
                    self.reference[l] = p.right.low;
                    self.side[l] = -1;
                    p.left.low = None;
                }
            }
            while let Some(h) = p.right.high {
                if self.dst[h] != u {
                    break;
                }
                p.right.high = self.reference[h];
            }
            if p.right.high.is_none() {
                if let Some(r) = p.right.low {
                    self.reference[r] = p.left.low;
                    self.side[r] = -1;
                    p.right.low = None;
                }
            }
            self.stack.push(p);
        }
        if self.lowpt[e] < self.height[u] {
            let top = self.stack.last().expect("return edge of e on stack");
            let (hl, hr) = (top.left.high, top.right.high);
            self.reference[e] = match (hl, hr) {
                (Some(l), Some(r)) if self.lowpt[l] > self.lowpt[r] => Some(l),
                (Some(l), None) => Some(l),
                _ => hr,
            };
        }
    }

    fn sign(&mut self, e: usize) -> i8 {
        let mut chain = Vec::new();
        let mut cur = e;
        while let Some(r) = self.reference[cur] {
            chain.push(cur);
            cur = r;
        }
        for &x in chain.iter().rev() {
            let r = self.reference[x].expect("chain link");
            self.side[x] *= self.side[r];
            self.reference[x] = None;
        }
        self.side[e]
    }

    fn run_test(&mut self) -> bool {
        let n = self.adj.len();
        if n > 2 && self.edges.len() > 3 * n - 6 {
            return false;
        }
        for v in 0..n {
            if self.height[v] == NONE {
                self.height[v] = 0;
                self.roots.push(v);
                self.orient(v);
            }
        }
        self.ordered = self
            .out
            .iter()
            .map(|out| {
                let mut o = out.clone();
                o.sort_by_key(|&id| self.nesting[id]);
                o
            })
            .collect();
        for k in 0..self.roots.len() {
            let r = self.roots[k];
            if !self.test(r) {
                return false;
            }
        }
        true
    }

    fn embed(mut self) -> RotationSystem {
        let n = self.adj.len();
        let m = self.edges.len();
        for e in 0..m {
            let s = self.sign(e) as i64;
            self.nesting[e] *= s;
        }
        let mut rs = RotationSystem::new(n);
        rs.to = vec![0; 2 * m];
        rs.cw = vec![0; 2 * m];
        rs.ccw = vec![0; 2 * m];
        for e in 0..m {
            rs.to[2 * e] = self.dst[e];
            rs.to[2 * e + 1] = self.src[e];
        }
        for v in 0..n {
            let mut o = self.out[v].clone();
            o.sort_by_key(|&id| self.nesting[id]);
            let mut prev = NONE;
            for &id in &o {
                rs.insert_cw_after(v, 2 * id, prev);
                prev = 2 * id;
            }
            self.ordered[v] = o;
        }
        let mut left_ref = vec![NONE; n];
        let mut right_ref = vec![NONE; n];
        let roots = std::mem::take(&mut self.roots);
        for r in roots {
            self.embed_dfs(r, &mut rs, &mut left_ref, &mut right_ref);
        }
        rs
    }

    fn embed_dfs(
        &self,
        v: usize,
        rs: &mut RotationSystem,
        left_ref: &mut [usize],
        right_ref: &mut [usize],
    ) {
        for &ei in &self.ordered[v] {
            let w = self.dst[ei];
            if self.parent_edge[w] == ei {
                rs.insert_first(w, 2 * ei + 1);
                left_ref[v] = 2 * ei;
                right_ref[v] = 2 * ei;
                self.embed_dfs(w, rs, left_ref, right_ref);
            } else if self.side[ei] == 1 {
                rs.insert_cw_after(w, 2 * ei + 1, right_ref[w]);
            } else {
                rs.insert_ccw_before(w, 2 * ei + 1, left_ref[w]);
                left_ref[w] = 2 * ei + 1;
            }
        }
    }
}

fn checked_edges(n: usize, edges: &[(usize, usize)]) {
    debug_assert!(edges.iter().all(|&(u, v)| u < n && v < n && u != v));
}

/// Planarity of the simple graph on `n` vertices with the given edges.
pub fn check_planarity(n: usize, edges: &[(usize, usize)]) -> bool {
    checked_edges(n, edges);
    LrState::new(n, edges).run_test()
}

/// A planar embedding, or `None` if the graph is not planar.
pub fn planar_embedding(n: usize, edges: &[(usize, usize)]) -> Option<RotationSystem> {
    checked_edges(n, edges);
    let mut st = LrState::new(n, edges);
    if !st.run_test() {
        return None;
    }
    Some(st.embed())
}

/// Evidence attached to a planarity verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanarityCertificate {
    /// A rotation system whose faces satisfy Euler's formula.
    Embedding(RotationSystem),
    /// Edges of a subgraph homeomorphic to K5 or K3,3.
    Kuratowski(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanarityResult {
    pub planar: bool,
    pub certificate: PlanarityCertificate,
}

impl PlanarityResult {
    /// Re-checks the certificate against `graph`.
    pub fn validate(&self, graph: &Graph) -> bool {
        match (&self.certificate, self.planar) {
            (PlanarityCertificate::Embedding(rs), true) => rs.verify(graph),
            (PlanarityCertificate::Kuratowski(edges), false) => {
                let set = graph.edge_set();
                edges
                    .iter()
                    .all(|&(u, v)| set.contains(&(u.min(v), u.max(v))))
                    && is_kuratowski_subdivision(graph.n(), edges)
            }
            _ => false,
        }
    }
}

fn edge_pairs(graph: &Graph) -> Vec<(usize, usize)> {
    graph.edges().iter().map(|e| (e.u, e.v)).collect()
}

/// Planarity with a certificate: an embedding when planar, otherwise a
/// Kuratowski subgraph found by greedy edge deletion.
pub fn is_planar(graph: &Graph) -> PlanarityResult {
    let edges = edge_pairs(graph);
    if let Some(rs) = planar_embedding(graph.n(), &edges) {
        return PlanarityResult {
            planar: true,
            certificate: PlanarityCertificate::Embedding(rs),
        };
    }
    PlanarityResult {
        planar: false,
        certificate: PlanarityCertificate::Kuratowski(kuratowski_subgraph(graph.n(), &edges)),
    }
}

/// Minimal non-planar edge subset of a non-planar graph.
fn kuratowski_subgraph(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut kept: Vec<(usize, usize)> = edges.to_vec();
    let mut k = 0;
    while k < kept.len() {
        let mut trial = kept.clone();
        trial.remove(k);
        if !check_planarity(n, &trial) {
            kept = trial;
        } else {
            k += 1;
        }
    }
    kept
}

/// True if the edge set is a subdivision of K5 or K3,3.
pub fn is_kuratowski_subdivision(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    if adj.iter().any(|a| a.len() == 1) {
        return false;
    }
    let branch: Vec<usize> = (0..n).filter(|&v| adj[v].len() >= 3).collect();
    // Smooth degree-2 vertices: follow each path from a branch vertex.
    let mut links = Vec::new();
    for &b in &branch {
        for &start in &adj[b] {
            let (mut prev, mut cur) = (b, start);
            let mut steps = 0;
            while adj[cur].len() == 2 {
                let next = if adj[cur][0] == prev {
                    adj[cur][1]
                } else {
                    adj[cur][0]
                };
                prev = cur;
                cur = next;
                steps += 1;
                if steps > n {
                    return false;
                }
            }
            if cur == b {
                return false;
            }
            if b < cur {
                links.push((b, cur));
            }
        }
    }
    links.sort_unstable();
    let distinct = links.windows(2).all(|w| w[0] != w[1]);
    if !distinct {
        return false;
    }
    // Every vertex on a path must be accounted for: no stray cycles.
    let covered: usize = branch.len() + adj.iter().filter(|a| a.len() == 2).count();
    let touched = (0..n).filter(|&v| !adj[v].is_empty()).count();
    if covered != touched {
        return false;
    }
    let degree = |v: usize| adj[v].len();
    match branch.len() {
        5 => links.len() == 10 && branch.iter().all(|&b| degree(b) == 4),
        6 => {
            if links.len() != 9 || branch.iter().any(|&b| degree(b) != 3) {
                return false;
            }
            // bipartite check on the branch multigraph
            let idx = |v: usize| branch.iter().position(|&b| b == v).expect("branch");
            let mut colour = [u8::MAX; 6];
            colour[0] = 0;
            let mut changed = true;
            while changed {
                changed = false;
                for &(a, b) in &links {
                    let (ia, ib) = (idx(a), idx(b));
                    for (x, y) in [(ia, ib), (ib, ia)] {
                        if colour[x] != u8::MAX && colour[y] == u8::MAX {
                            colour[y] = 1 - colour[x];
                            changed = true;
                        }
                    }
                }
            }
            links.iter().all(|&(a, b)| {
                let (ca, cb) = (colour[idx(a)], colour[idx(b)]);
                ca != u8::MAX && ca != cb
            })
        }
        _ => false,
    }
}
