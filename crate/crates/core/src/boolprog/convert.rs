//! Translations between the Boolean program representations:
//!
//! * NBP → monotone circuit (reachability by repeated squaring);
//! * NBP → interval hypergraph program (vertex/edge block construction);
//! * semi-unbounded circuit → tree hypergraph program (AND-depth layout);
//! * tree hypergraph program → circuit (hyperedge splitting + per-branch
//!   reachability + merge at branching points).
//!
//! All four preserve the computed function exactly and preserve
//! monotonicity; the test suite checks both claims exhaustively on small
//! random instances.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use alloc::vec;
use core::fmt;

use super::{Circuit, Gate, Hgp, Label, Literal, Nbp, Skeleton};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConvertError {
    NotMonotone,
    NotSemiUnbounded,
    MalformedThgp,
}

impl fmt::Display for ConvertError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvertError::NotMonotone => write!(f, "conversion requires a monotone program"),
            ConvertError::NotSemiUnbounded => {
                write!(f, "conversion requires AND gates of fan-in two with negation only at inputs")
            }
            ConvertError::MalformedThgp => write!(f, "input is not a valid tree hypergraph program"),
        }
    }
}

// ---------------------------------------------------------------------------
// NBP → circuit.

/// Monotone `s`–`t` reachability unfolded into a circuit: the edge
/// relation is squared `⌈log n⌉` times.
pub fn nbp_to_circuit<V: Ord + Clone>(p: &Nbp<V>) -> Result<Circuit<V>, ConvertError> {
    if !p.is_monotone() {
        return Err(ConvertError::NotMonotone);
    }
    let n = p.vertices.max(1);
    let mut c = Circuit::new();
    let tru = c.push(Gate::Const(true));
    let fals = c.push(Gate::Const(false));
    let mut reach = vec![vec![fals; n]; n];
    for (u, row) in reach.iter_mut().enumerate() {
        row[u] = tru;
    }
    for e in &p.edges {
        let g = label_gate(&mut c, &e.label, tru, fals);
        let prev = reach[e.from][e.to];
        reach[e.from][e.to] = c.push(Gate::Or(vec![prev, g]));
    }
    let mut rounds = 0;
    while (1usize << rounds) < n {
        rounds += 1;
    }
    for _ in 0..rounds {
        let mut next = vec![vec![fals; n]; n];
        for u in 0..n {
            for v in 0..n {
                let mut ins = vec![reach[u][v]];
                for w in 0..n {
                    ins.push(c.push(Gate::And(vec![reach[u][w], reach[w][v]])));
                }
                next[u][v] = c.push(Gate::Or(ins));
            }
        }
        reach = next;
    }
    c.output = reach[p.s][p.t];
    Ok(c.pruned())
}

fn label_gate<V: Ord + Clone>(
    c: &mut Circuit<V>,
    l: &Label<V>,
    tru: usize,
    fals: usize,
) -> usize {
    match l {
        Label::Const(true) => tru,
        Label::Const(false) => fals,
        Label::Conj(lits) => {
            let ins: Vec<usize> = lits.iter().map(|lit| c.push(Gate::Input(lit.clone()))).collect();
            c.push(Gate::And(ins))
        }
    }
}

// ---------------------------------------------------------------------------
// NBP → interval HGP.

/// Block construction: `n` vertex blocks alternate with `n-1` edge blocks
/// along a path, each holding a plain and a barred copy of every NBP
/// vertex (resp. edge). Choosing an NBP edge in a block amounts to taking
/// its two hyperedges, which tile the block and leave exactly the edge's
/// label pair uncovered; vertex pairs are labelled 1 so the switch point
/// between an incoming and an outgoing hyperedge never needs covering.
pub fn nbp_to_interval_hgp<V: Ord + Clone>(p: &Nbp<V>) -> Hgp<V> {
    if p.s == p.t || p.vertices == 0 {
        // constant true: a single 1-labelled vertex and no hyperedges
        return Hgp {
            labels: vec![Label::truth()],
            hyperedges: vec![],
            skeleton: Some(Skeleton { vertices: 2, edges: vec![(0, 1)] }),
        };
    }
    // relabel vertices so the source is 0 and the target is n-1
    let n = p.vertices;
    let mut names: Vec<usize> = (0..n).collect();
    names.swap(0, p.s);
    let t_pos = names.iter().position(|&x| x == p.t).unwrap();
    names.swap(t_pos, n - 1);
    let rename = |v: usize| names.iter().position(|&x| x == v).unwrap();
    let mut edges: Vec<(usize, usize, Label<V>)> =
        p.edges.iter().map(|e| (rename(e.from), rename(e.to), e.label.clone())).collect();
    if !edges.iter().any(|(f, t, l)| *f == n - 1 && *t == n - 1 && *l == Label::Const(true)) {
        edges.push((n - 1, n - 1, Label::truth()));
    }
    let m = edges.len();

    // slot index of each copy along the path, with the first and the last
    // slot removed
    let total = 2 * n * n + 2 * m * (n - 1);
    let vslot = |block: usize, i: usize, barred: bool| -> usize {
        block * (2 * n + 2 * m) + 2 * i + usize::from(barred)
    };
    let eslot = |block: usize, i: usize, barred: bool| -> usize {
        block * (2 * n + 2 * m) + 2 * n + 2 * i + usize::from(barred)
    };
    // after removing slot 0 and slot total-1, skeleton vertex = slot - 1
    let pos = |slot: usize| -> usize {
        debug_assert!(slot > 0 && slot < total - 1);
        slot - 1
    };
    let vcount = total - 2;
    let ecount = vcount - 1;
    let mut labels: Vec<Label<V>> = vec![Label::falsity(); ecount];
    // skeleton edge k joins path vertices k and k+1, i.e. slots k+1, k+2
    for l in 0..n {
        for i in 0..n {
            let a = vslot(l, i, false);
            if a > 0 && a + 1 < total - 1 {
                labels[pos(a)] = Label::truth();
            }
        }
        if l + 1 < n {
            for (i, e) in edges.iter().enumerate() {
                let a = eslot(l, i, false);
                labels[pos(a)] = e.2.clone();
            }
        }
    }
    let interval = |a: usize, b: usize| -> BTreeSet<usize> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        (pos(lo)..pos(hi)).collect()
    };
    let mut hyperedges = Vec::new();
    for l in 0..n - 1 {
        for (i, (from, to, _)) in edges.iter().enumerate() {
            hyperedges.push(interval(vslot(l, *from, true), eslot(l, i, false)));
            hyperedges.push(interval(eslot(l, i, true), vslot(l + 1, *to, false)));
        }
    }
    let skeleton = Skeleton { vertices: vcount, edges: (0..ecount).map(|k| (k, k + 1)).collect() };
    Hgp { labels, hyperedges, skeleton: Some(skeleton) }
}

/// Exact skeleton-vertex count of [`nbp_to_interval_hgp`] after self-loop
/// padding: `2n² + 2m(n-1) - 2` for `n` vertices and `m` edges.
pub fn interval_hgp_vertex_count(n: usize, m_padded: usize) -> usize {
    2 * n * n + 2 * m_padded * (n - 1) - 2
}

// ---------------------------------------------------------------------------
// Circuit → THGP.

#[derive(Clone, Debug)]
enum WKind<V> {
    Input(Literal<V>),
    Const(bool),
    And(usize, usize),
    Or(Vec<usize>),
}

#[derive(Clone, Debug)]
struct WGate<V> {
    kind: WKind<V>,
    /// original gate index; duplicates keep it, so sorting by rank keeps
    /// the topological (root-last) order within any subcircuit
    rank: usize,
}

struct TreeBuild<V> {
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    edge_labels: Vec<Label<V>>,
    w_of: BTreeMap<usize, usize>,
    v_of: BTreeMap<usize, usize>,
    u_of: BTreeMap<usize, usize>,
}

impl<V: Ord + Clone> TreeBuild<V> {
    fn add_vertex(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    fn add_edge(&mut self, a: usize, b: usize, label: Label<V>) -> usize {
        let id = self.edges.len();
        self.adj[a].push(id);
        self.adj[b].push(id);
        self.edges.push((a, b));
        self.edge_labels.push(label);
        id
    }
}

/// Translate a semi-unbounded circuit (AND fan-in two, negation only at
/// inputs) into a tree hypergraph program computing the same function.
pub fn circuit_to_thgp<V: Ord + Clone>(c: &Circuit<V>) -> Result<Hgp<V>, ConvertError> {
    let c = normalize_for_layout(&c.pruned());
    if !c.is_semi_unbounded() {
        return Err(ConvertError::NotSemiUnbounded);
    }
    let mut wg: Vec<WGate<V>> = c
        .gates
        .iter()
        .enumerate()
        .map(|(i, g)| WGate {
            kind: match g {
                Gate::Input(l) => WKind::Input(l.clone()),
                Gate::Const(b) => WKind::Const(*b),
                Gate::And(ins) => WKind::And(ins[0], ins[1]),
                Gate::Or(ins) => WKind::Or(ins.clone()),
            },
            rank: i,
        })
        .collect();
    let root_gate = c.output;
    let all = gate_closure(&wg, &[root_gate].into_iter().collect());
    let mut tb = TreeBuild {
        adj: Vec::new(),
        edges: Vec::new(),
        edge_labels: Vec::new(),
        w_of: BTreeMap::new(),
        v_of: BTreeMap::new(),
        u_of: BTreeMap::new(),
    };
    layout(&mut wg, &mut tb, &all, None);

    let parent = orient(&tb, tb.v_of[&root_gate]);
    let mut hyperedges: Vec<BTreeSet<usize>> = Vec::new();
    for (&g, &wv) in &tb.w_of {
        let set = steiner(&tb, &parent, &[wv, tb.u_of[&g]]);
        hyperedges.push(stub_complete(&tb, set));
    }
    for (&g, &vg) in &tb.v_of {
        match wg[g].kind.clone() {
            WKind::And(a, b) => {
                let set = steiner(&tb, &parent, &[tb.v_of[&a], tb.v_of[&b], vg]);
                hyperedges.push(stub_complete(&tb, set));
            }
            WKind::Or(ins) => {
                for k in ins {
                    let set = steiner(&tb, &parent, &[tb.v_of[&k], vg]);
                    hyperedges.push(stub_complete(&tb, set));
                }
            }
            _ => {}
        }
    }
    hyperedges.sort();
    hyperedges.dedup();
    Ok(Hgp {
        labels: tb.edge_labels,
        hyperedges,
        skeleton: Some(Skeleton { vertices: tb.adj.len(), edges: tb.edges }),
    })
}

/// Empty AND/OR become constants, unary gates collapse onto their input.
fn normalize_for_layout<V: Ord + Clone>(c: &Circuit<V>) -> Circuit<V> {
    let mut out = Circuit::new();
    let mut map: Vec<usize> = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        let id = match g {
            Gate::Input(l) => out.push(Gate::Input(l.clone())),
            Gate::Const(b) => out.push(Gate::Const(*b)),
            Gate::And(ins) if ins.is_empty() => out.push(Gate::Const(true)),
            Gate::Or(ins) if ins.is_empty() => out.push(Gate::Const(false)),
            Gate::And(ins) | Gate::Or(ins) if ins.len() == 1 => map[ins[0]],
            Gate::And(ins) => {
                let v: Vec<usize> = ins.iter().map(|&i| map[i]).collect();
                out.push(Gate::And(v))
            }
            Gate::Or(ins) => {
                let mut v: Vec<usize> = ins.iter().map(|&i| map[i]).collect();
                v.sort();
                v.dedup();
                if v.len() == 1 {
                    v[0]
                } else {
                    out.push(Gate::Or(v))
                }
            }
        };
        map.push(id);
    }
    out.output = map[c.output];
    out.pruned()
}

fn gate_closure<V>(wg: &[WGate<V>], seed: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = seed.iter().copied().collect();
    while let Some(g) = stack.pop() {
        if seen.insert(g) {
            match &wg[g].kind {
                WKind::And(a, b) => {
                    stack.push(*a);
                    stack.push(*b);
                }
                WKind::Or(ins) => stack.extend(ins.iter().copied()),
                _ => {}
            }
        }
    }
    seen
}

fn and_depth<V: Clone>(wg: &[WGate<V>], g: usize, memo: &mut BTreeMap<usize, usize>) -> usize {
    if let Some(&d) = memo.get(&g) {
        return d;
    }
    let d = match wg[g].kind.clone() {
        WKind::Input(_) | WKind::Const(_) => 0,
        WKind::And(a, b) => 1 + and_depth(wg, a, memo).max(and_depth(wg, b, memo)),
        WKind::Or(ins) => ins.iter().map(|&k| and_depth(wg, k, memo)).max().unwrap_or(0),
    };
    memo.insert(g, d);
    d
}

/// Arrange the subcircuit hanging below `seeds` into a caterpillar of
/// triples: the gates of maximal AND-depth form the spine in root-to-leaf
/// order, then the tree forks into the left operands (duplicated if they
/// overlap the rest) and everything else, including seeds that did not
/// make the spine.
fn layout<V: Ord + Clone>(
    wg: &mut Vec<WGate<V>>,
    tb: &mut TreeBuild<V>,
    seeds: &BTreeSet<usize>,
    attach: Option<usize>,
) {
    let gates = &gate_closure(wg, seeds);
    let mut memo = BTreeMap::new();
    let d = gates.iter().map(|&g| and_depth(wg, g, &mut memo)).max().expect("nonempty subcircuit");
    let mut spine: Vec<usize> =
        gates.iter().copied().filter(|&g| and_depth(wg, g, &mut memo) == d).collect();
    spine.sort_by(|a, b| wg[*b].rank.cmp(&wg[*a].rank).then(b.cmp(a)));

    let mut prev_u: Option<usize> = attach;
    for &g in &spine {
        if let Some(pu) = prev_u {
            let w = tb.add_vertex();
            tb.add_edge(pu, w, Label::truth());
            tb.w_of.insert(g, w);
            let v = tb.add_vertex();
            tb.add_edge(w, v, Label::falsity());
            tb.v_of.insert(g, v);
        } else {
            let v = tb.add_vertex();
            tb.v_of.insert(g, v);
        }
        let v = tb.v_of[&g];
        let u = tb.add_vertex();
        let uv_label = match &wg[g].kind {
            WKind::Input(l) => Label::lit(l.clone()),
            WKind::Const(b) => Label::Const(*b),
            _ => Label::falsity(),
        };
        tb.add_edge(v, u, uv_label);
        tb.u_of.insert(g, u);
        prev_u = Some(u);
    }
    if d == 0 {
        return;
    }
    let spine_set: BTreeSet<usize> = spine.iter().copied().collect();
    let left_seed: BTreeSet<usize> = spine
        .iter()
        .filter_map(|&g| match &wg[g].kind {
            WKind::And(a, _) => Some(*a),
            _ => None,
        })
        .collect();
    let mut right_seed: BTreeSet<usize> = spine
        .iter()
        .filter_map(|&g| match &wg[g].kind {
            WKind::And(_, b) => Some(*b),
            _ => None,
        })
        .collect();
    for &g in &spine {
        if let WKind::Or(ins) = wg[g].kind.clone() {
            for k in ins {
                if !spine_set.contains(&k) {
                    right_seed.insert(k);
                }
            }
        }
    }
    // seeds of this level that are not on the spine hang in the right branch
    for &s in seeds {
        if !spine_set.contains(&s) {
            right_seed.insert(s);
        }
    }
    let left = gate_closure(wg, &left_seed);
    let right = gate_closure(wg, &right_seed);
    let mut left_roots = left_seed;
    if left.intersection(&right).next().is_some() {
        // duplicate the left operand subcircuit so the two branches are
        // disjoint
        let mut map: BTreeMap<usize, usize> = BTreeMap::new();
        for &g in &left {
            let copied = WGate { kind: wg[g].kind.clone(), rank: wg[g].rank };
            wg.push(copied);
            map.insert(g, wg.len() - 1);
        }
        for &ng in map.values() {
            wg[ng].kind = match wg[ng].kind.clone() {
                WKind::And(a, b) => WKind::And(map[&a], map[&b]),
                WKind::Or(ins) => WKind::Or(ins.iter().map(|k| map[k]).collect()),
                other => other,
            };
        }
        for &g in &spine {
            if let WKind::And(a, b) = wg[g].kind.clone() {
                wg[g].kind = WKind::And(map[&a], b);
            }
        }
        left_roots = left_roots.iter().map(|s| map[s]).collect();
    }
    let junction = prev_u.expect("spine nonempty");
    layout(wg, tb, &left_roots, Some(junction));
    layout(wg, tb, &right_seed, Some(junction));
}

/// Parent array for the tree rooted at `root`.
fn orient<V>(tb: &TreeBuild<V>, root: usize) -> Vec<Option<usize>> {
    let mut parent = vec![None; tb.adj.len()];
    let mut seen = vec![false; tb.adj.len()];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        for &e in &tb.adj[v] {
            let (a, b) = tb.edges[e];
            let w = if a == v { b } else { a };
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                stack.push(w);
            }
        }
    }
    parent
}

fn tree_depth(parent: &[Option<usize>], mut v: usize) -> usize {
    let mut d = 0;
    while let Some(p) = parent[v] {
        v = p;
        d += 1;
    }
    d
}

/// Edge set of the union of pairwise paths between `terminals`.
fn steiner<V>(tb: &TreeBuild<V>, parent: &[Option<usize>], terminals: &[usize]) -> BTreeSet<usize> {
    let edge_between = |a: usize, b: usize| -> usize {
        for &e in &tb.adj[a] {
            let (x, y) = tb.edges[e];
            if (x == a && y == b) || (x == b && y == a) {
                return e;
            }
        }
        unreachable!("adjacent vertices share an edge")
    };
    let mut set = BTreeSet::new();
    for i in 0..terminals.len() {
        for j in i + 1..terminals.len() {
            let (mut a, mut b) = (terminals[i], terminals[j]);
            let (mut da, mut db) = (tree_depth(parent, a), tree_depth(parent, b));
            while da > db {
                let p = parent[a].unwrap();
                set.insert(edge_between(a, p));
                a = p;
                da -= 1;
            }
            while db > da {
                let p = parent[b].unwrap();
                set.insert(edge_between(b, p));
                b = p;
                db -= 1;
            }
            while a != b {
                let pa = parent[a].unwrap();
                set.insert(edge_between(a, pa));
                a = pa;
                let pb = parent[b].unwrap();
                set.insert(edge_between(b, pb));
                b = pb;
            }
        }
    }
    set
}

/// Extend a generalized interval so every boundary vertex has degree 2: a
/// partially covered junction absorbs its missing branch edges, which are
/// all labelled 1 by construction, so the function computed is unchanged.
fn stub_complete<V: Ord + Clone>(tb: &TreeBuild<V>, mut set: BTreeSet<usize>) -> BTreeSet<usize> {
    loop {
        let mut grew = false;
        for v in 0..tb.adj.len() {
            let deg = tb.adj[v].len();
            if deg < 3 {
                continue;
            }
            let inside = tb.adj[v].iter().filter(|e| set.contains(e)).count();
            if inside > 0 && inside < deg {
                for &e in &tb.adj[v] {
                    if set.insert(e) {
                        debug_assert!(
                            tb.edge_labels[e] == Label::truth(),
                            "stub completion must only cross 1-labelled junction edges"
                        );
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            return set;
        }
    }
}

// ---------------------------------------------------------------------------
// THGP → circuit.

#[derive(Clone, Debug)]
struct Part<V> {
    edges: BTreeSet<usize>,
    label: Label<V>,
}

struct SplitTree<V> {
    verts: usize,
    edges: Vec<(usize, usize)>,
    edge_labels: Vec<Label<V>>,
    parts: Vec<Part<V>>,
}

impl<V: Ord + Clone> SplitTree<V> {
    fn adj(&self) -> Vec<Vec<usize>> {
        let mut a = vec![Vec::new(); self.verts];
        for (i, &(x, y)) in self.edges.iter().enumerate() {
            a[x].push(i);
            a[y].push(i);
        }
        a
    }

    fn other_end(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }
}

/// A maximal run of edges between two vertices of degree ≠ 2.
struct ChainT {
    verts: Vec<usize>,
    edges: Vec<usize>,
    /// `reach[a][b]` (a ≤ b): gate meaning "positions a..b of the chain
    /// can be tiled by parts lying inside the chain"
    reach: Vec<Vec<usize>>,
}

/// Compile a valid THGP into an equivalent circuit; covering all zeros is
/// recast as exactly partitioning the skeleton edges into hyperedges,
/// per-vertex singletons (usable when the vertex label is true) and, after
/// splitting, junction gadgets. The circuit is monotone whenever the
/// program is.
pub fn thgp_to_circuit<V: Ord + Clone>(p: &Hgp<V>) -> Result<Circuit<V>, ConvertError> {
    if !p.is_valid_thgp() {
        return Err(ConvertError::MalformedThgp);
    }
    let sk = p.skeleton.as_ref().unwrap();
    let mut st = SplitTree {
        verts: sk.vertices,
        edges: sk.edges.clone(),
        edge_labels: p.labels.clone(),
        parts: p
            .hyperedges
            .iter()
            .map(|h| Part { edges: h.clone(), label: Label::truth() })
            .collect(),
    };
    // split every part spanning more than one branching point
    loop {
        let adj = st.adj();
        let found = st.parts.iter().enumerate().find_map(|(i, part)| {
            let bps: Vec<usize> = (0..st.verts)
                .filter(|&v| adj[v].len() >= 3 && adj[v].iter().all(|e| part.edges.contains(e)))
                .collect();
            if bps.len() >= 2 {
                Some((i, bps[0]))
            } else {
                None
            }
        });
        let Some((pi, bp)) = found else { break };
        split_at(&mut st, pi, bp);
    }
    // singleton parts for every usable vertex label
    for e in 0..st.edges.len() {
        if st.edge_labels[e] != Label::falsity() {
            st.parts
                .push(Part { edges: [e].into_iter().collect(), label: st.edge_labels[e].clone() });
        }
    }
    Ok(build_partition_circuit(&st))
}

/// The splitting gadget: subdivide every edge at `bp` with two fresh
/// 0-labelled edges, break the part into a centre star plus one part per
/// direction, and add a coverable pair per direction for partitions that
/// skip the part.
fn split_at<V: Ord + Clone>(st: &mut SplitTree<V>, pi: usize, bp: usize) {
    let adj = st.adj();
    let incident: Vec<usize> = adj[bp].clone();
    // direction (index into `incident`) of every edge reachable from bp
    let mut dir_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (d, &e0) in incident.iter().enumerate() {
        dir_of.insert(e0, d);
        let start = st.other_end(e0, bp);
        let mut seen_v = BTreeSet::new();
        seen_v.insert(start);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &e in &adj[v] {
                let w = st.other_end(e, v);
                if w == bp {
                    continue;
                }
                dir_of.entry(e).or_insert(d);
                if seen_v.insert(w) {
                    stack.push(w);
                }
            }
        }
    }
    let spanning: Vec<usize> = st
        .parts
        .iter()
        .enumerate()
        .filter(|(i, part)| *i != pi && incident.iter().all(|e| part.edges.contains(e)))
        .map(|(i, _)| i)
        .collect();
    let old = st.parts[pi].clone();

    let mut star = BTreeSet::new();
    let mut dir_parts: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); incident.len()];
    let mut gadgets: Vec<BTreeSet<usize>> = Vec::new();
    for (d, &e0) in incident.iter().enumerate() {
        let n1 = st.verts;
        let n2 = st.verts + 1;
        st.verts += 2;
        let far = st.other_end(e0, bp);
        st.edges[e0] = (n2, far);
        let a = st.edges.len();
        st.edges.push((bp, n1));
        st.edge_labels.push(Label::falsity());
        let b = st.edges.len();
        st.edges.push((n1, n2));
        st.edge_labels.push(Label::falsity());
        star.insert(a);
        dir_parts[d].insert(b);
        dir_parts[d].insert(e0);
        gadgets.push([a, b].into_iter().collect());
        for &si in &spanning {
            st.parts[si].edges.insert(a);
            st.parts[si].edges.insert(b);
        }
    }
    for &e in &old.edges {
        if incident.contains(&e) {
            continue;
        }
        if let Some(&d) = dir_of.get(&e) {
            dir_parts[d].insert(e);
        }
    }
    st.parts[pi] = Part { edges: star, label: old.label };
    for dp in dir_parts {
        st.parts.push(Part { edges: dp, label: Label::truth() });
    }
    for g in gadgets {
        st.parts.push(Part { edges: g, label: Label::truth() });
    }
}

fn build_partition_circuit<V: Ord + Clone>(st: &SplitTree<V>) -> Circuit<V> {
    let mut c = Circuit::new();
    let tru = c.push(Gate::Const(true));
    let fals = c.push(Gate::Const(false));
    if st.edges.is_empty() {
        c.output = tru;
        return c;
    }
    let adj = st.adj();
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let label_gates: Vec<usize> = st
        .parts
        .iter()
        .map(|part| label_gate(&mut c, &part.label, tru, fals))
        .collect();

    // maximal chains between vertices of degree ≠ 2
    let mut chain_of_edge: Vec<Option<(usize, usize)>> = vec![None; st.edges.len()];
    let mut chains: Vec<ChainT> = Vec::new();
    for v in 0..st.verts {
        if deg[v] == 2 {
            continue;
        }
        for &e0 in &adj[v] {
            if chain_of_edge[e0].is_some() {
                continue;
            }
            let mut verts = vec![v];
            let mut edge_ids = Vec::new();
            let mut e = e0;
            let mut cur = v;
            loop {
                chain_of_edge[e] = Some((chains.len(), edge_ids.len()));
                edge_ids.push(e);
                let nxt = st.other_end(e, cur);
                verts.push(nxt);
                if deg[nxt] != 2 {
                    break;
                }
                e = *adj[nxt].iter().find(|&&f| f != e).unwrap();
                cur = nxt;
            }
            chains.push(ChainT { verts, edges: edge_ids, reach: Vec::new() });
        }
    }
    debug_assert!(chain_of_edge.iter().all(Option::is_some));

    for ch in &mut chains {
        let m = ch.edges.len();
        let mut reach = vec![vec![fals; m + 1]; m + 1];
        for (a, row) in reach.iter_mut().enumerate() {
            row[a] = tru;
        }
        for (pi, part) in st.parts.iter().enumerate() {
            let mut positions: Vec<usize> = Vec::new();
            let mut inside = true;
            for e in &part.edges {
                match ch.edges.iter().position(|f| f == e) {
                    Some(k) => positions.push(k),
                    None => {
                        inside = false;
                        break;
                    }
                }
            }
            if !inside || positions.is_empty() {
                continue;
            }
            positions.sort();
            let lo = positions[0];
            let hi = *positions.last().unwrap();
            if hi - lo + 1 != positions.len() {
                continue;
            }
            let prev = reach[lo][hi + 1];
            reach[lo][hi + 1] = c.push(Gate::Or(vec![prev, label_gates[pi]]));
        }
        let mut rounds = 0usize;
        while (1usize << rounds) < m.max(1) {
            rounds += 1;
        }
        for _ in 0..rounds {
            let mut next = reach.clone();
            for a in 0..=m {
                for b in a + 1..=m {
                    let mut ins = vec![reach[a][b]];
                    for mid in a + 1..b {
                        ins.push(c.push(Gate::And(vec![reach[a][mid], reach[mid][b]])));
                    }
                    next[a][b] = c.push(Gate::Or(ins));
                }
            }
            reach = next;
        }
        ch.reach = reach;
    }

    let mut span_parts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..st.verts {
        if deg[v] >= 3 {
            let list: Vec<usize> = st
                .parts
                .iter()
                .enumerate()
                .filter(|(_, part)| adj[v].iter().all(|e| part.edges.contains(e)))
                .map(|(i, _)| i)
                .collect();
            span_parts.insert(v, list);
        }
    }

    let root = (0..st.verts).find(|&v| deg[v] == 1).expect("a tree with an edge has a leaf");
    let first = st.other_end(adj[root][0], root);
    let cx = Ctx {
        st,
        adj: &adj,
        deg: &deg,
        chains: &chains,
        chain_of_edge: &chain_of_edge,
        span_parts: &span_parts,
        label_gates: &label_gates,
    };
    let mut memo = BTreeMap::new();
    let out = closed_gate(&cx, &mut memo, &mut c, root, first);
    c.output = out;
    c.pruned()
}

struct Ctx<'a, V> {
    st: &'a SplitTree<V>,
    adj: &'a [Vec<usize>],
    deg: &'a [usize],
    chains: &'a [ChainT],
    chain_of_edge: &'a [Option<(usize, usize)>],
    span_parts: &'a BTreeMap<usize, Vec<usize>>,
    label_gates: &'a [usize],
}

/// Gate meaning: the region made of edge `{x,u}` plus everything beyond
/// `u` can be exactly partitioned into parts with true labels.
fn closed_gate<V: Ord + Clone>(
    cx: &Ctx<'_, V>,
    memo: &mut BTreeMap<(usize, usize), usize>,
    c: &mut Circuit<V>,
    x: usize,
    u: usize,
) -> usize {
    if let Some(&g) = memo.get(&(x, u)) {
        return g;
    }
    let e_first = *cx.adj[x].iter().find(|&&e| cx.st.other_end(e, x) == u).unwrap();
    let (ci, k) = cx.chain_of_edge[e_first].unwrap();
    let ch = &cx.chains[ci];
    let m = ch.edges.len();
    let forward = ch.verts[k] == x;
    let pos = if forward { k } else { k + 1 };
    let steps = if forward { m - pos } else { pos };
    let w = if forward { ch.verts[m] } else { ch.verts[0] };
    // travel-order helpers: distance i from x ↦ chain index
    let edge_at = |i: usize| -> usize {
        if forward {
            ch.edges[pos + i]
        } else {
            ch.edges[pos - 1 - i]
        }
    };
    let reach = |a: usize, b: usize| -> usize {
        let (p, q) = if forward { (pos + a, pos + b) } else { (pos - b, pos - a) };
        ch.reach[p.min(q)][p.max(q)]
    };

    let gate = if cx.deg[w] == 1 {
        reach(0, steps)
    } else {
        let mut disjuncts: Vec<usize> = Vec::new();
        let incoming_edge = edge_at(steps - 1);
        for &pi in cx.span_parts.get(&w).map(Vec::as_slice).unwrap_or(&[]) {
            let part_edges = &cx.st.parts[pi].edges;
            // extent back along our chain from w
            let mut run_back = 0usize;
            while run_back < steps && part_edges.contains(&edge_at(steps - 1 - run_back)) {
                run_back += 1;
            }
            if run_back == steps {
                // the part reaches x; it must not extend past the region
                if cx.adj[x].iter().any(|e| *e != e_first && part_edges.contains(e)) {
                    continue;
                }
            }
            let boundary = steps - run_back;
            let mut ins = vec![reach(0, boundary), cx.label_gates[pi]];
            let mut usable = true;
            let mut pending: Vec<(usize, usize)> = Vec::new();
            for &e in &cx.adj[w] {
                if e == incoming_edge {
                    continue;
                }
                let (cj, k2) = cx.chain_of_edge[e].unwrap();
                let ch2 = &cx.chains[cj];
                let m2 = ch2.edges.len();
                let fwd2 = ch2.verts[k2] == w;
                let p2 = if fwd2 { k2 } else { k2 + 1 };
                let limit = if fwd2 { m2 - p2 } else { p2 };
                let edge2 = |i: usize| -> usize {
                    if fwd2 {
                        ch2.edges[p2 + i]
                    } else {
                        ch2.edges[p2 - 1 - i]
                    }
                };
                let vert2 = |i: usize| -> usize {
                    if fwd2 {
                        ch2.verts[p2 + i]
                    } else {
                        ch2.verts[p2 - i]
                    }
                };
                let mut r = 0usize;
                while r < limit && part_edges.contains(&edge2(r)) {
                    r += 1;
                }
                if r == limit {
                    let far = vert2(limit);
                    if cx.deg[far] != 1 {
                        usable = false;
                        break;
                    }
                } else {
                    pending.push((vert2(r), vert2(r + 1)));
                }
            }
            if usable {
                for (a, b) in pending {
                    let g = closed_gate(cx, memo, c, a, b);
                    ins.push(g);
                }
                disjuncts.push(c.push(Gate::And(ins)));
            }
        }
        // no part spans w: the chain is tiled up to w and each branch is
        // partitioned on its own
        let mut branch_gates = vec![reach(0, steps)];
        let branches: Vec<usize> =
            cx.adj[w].iter().copied().filter(|&e| e != incoming_edge).collect();
        for e in branches {
            let nj = cx.st.other_end(e, w);
            let g = closed_gate(cx, memo, c, w, nj);
            branch_gates.push(g);
        }
        disjuncts.push(c.push(Gate::And(branch_gates)));
        c.push(Gate::Or(disjuncts))
    };
    memo.insert((x, u), gate);
    gate
}

// ---------------------------------------------------------------------------
// Helpers shared with the rewriting compilers.

/// Rewrite a circuit so every AND has fan-in exactly two, splitting wide
/// ANDs into balanced trees (so the AND-depth grows only logarithmically).
pub fn to_semi_unbounded<V: Ord + Clone>(c: &Circuit<V>) -> Circuit<V> {
    let mut out = Circuit::new();
    let mut map: Vec<usize> = Vec::with_capacity(c.gates.len());
    fn balanced<V: Ord + Clone>(out: &mut Circuit<V>, ins: &[usize]) -> usize {
        match ins.len() {
            0 => out.push(Gate::Const(true)),
            1 => ins[0],
            2 => out.push(Gate::And(vec![ins[0], ins[1]])),
            n => {
                let (a, b) = ins.split_at(n / 2);
                let ga = balanced(out, a);
                let gb = balanced(out, b);
                out.push(Gate::And(vec![ga, gb]))
            }
        }
    }
    for g in &c.gates {
        let id = match g {
            Gate::Input(l) => out.push(Gate::Input(l.clone())),
            Gate::Const(b) => out.push(Gate::Const(*b)),
            Gate::And(ins) => {
                let v: Vec<usize> = ins.iter().map(|&i| map[i]).collect();
                balanced(&mut out, &v)
            }
            Gate::Or(ins) => {
                if ins.is_empty() {
                    out.push(Gate::Const(false))
                } else {
                    let v: Vec<usize> = ins.iter().map(|&i| map[i]).collect();
                    out.push(Gate::Or(v))
                }
            }
        };
        map.push(id);
    }
    out.output = map[c.output];
    out.pruned()
}
