//! The bounded-treewidth strategy: for ontologies of finite depth, the
//! primed tree-witness function becomes a tree hypergraph program over a
//! tree decomposition of the query. Each node carries the possible
//! data-independent descriptions of how its bag maps into a canonical
//! model (tuples of anonymous words); hyperedges tie the choices of
//! neighbouring nodes together.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::vec;

use crate::boolprog::{Hgp, Label, Literal, Skeleton};
use crate::reasoner::{Depth, TBoxIndex};
use crate::syntax::{Atom, ConjunctiveQuery, Role};

use super::shape::TreeDecomposition;
use super::TwVariable;

/// A tuple of anonymous words, one per bag position.
type WordTuple = Vec<Vec<Role>>;

/// All anonymous words of length at most `d`: a generable role followed
/// by generating successors.
pub fn word_universe(idx: &TBoxIndex, d: usize) -> Vec<Vec<Role>> {
    let mut out: Vec<Vec<Role>> = vec![vec![]];
    let mut stack: Vec<Vec<Role>> = idx.generable_roles().into_iter().map(|r| vec![r]).collect();
    while let Some(w) = stack.pop() {
        if w.len() > d {
            continue;
        }
        if w.len() < d {
            for s in idx.successors(w.last().unwrap()) {
                let mut next = w.clone();
                next.push(s.clone());
                stack.push(next);
            }
        }
        out.push(w);
    }
    out.sort();
    out
}

/// The positions of a bag: its variables padded to a fixed arity by
/// repeating the last one.
fn bag_positions(bag: &BTreeSet<String>, arity: usize) -> Vec<String> {
    let mut vs: Vec<String> = bag.iter().cloned().collect();
    if vs.is_empty() {
        vs.push(String::from("_")); // unreachable for real queries
    }
    while vs.len() < arity {
        vs.push(vs.last().unwrap().clone());
    }
    vs
}

fn compatible_with_node(
    idx: &TBoxIndex,
    q: &ConjunctiveQuery,
    positions: &[String],
    w: &WordTuple,
) -> bool {
    // repeated variables carry the same word
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if positions[i] == positions[j] && w[i] != w[j] {
                return false;
            }
        }
    }
    let bag: BTreeSet<&String> = positions.iter().collect();
    for at in &q.atoms {
        match at {
            Atom::Unary(a, z) => {
                if !bag.contains(z) {
                    continue;
                }
                for (i, p) in positions.iter().enumerate() {
                    if p == z && !w[i].is_empty() {
                        let last = w[i].last().unwrap();
                        if !idx.entails_concept(
                            &crate::syntax::ConceptExpr::Exists(last.inv()),
                            &crate::syntax::ConceptExpr::Atomic(a.clone()),
                        ) {
                            return false;
                        }
                    }
                }
            }
            Atom::Binary(r, z1, z2) => {
                if !bag.contains(z1) || !bag.contains(z2) {
                    continue;
                }
                let role = Role::new(r.clone());
                for (i, p1) in positions.iter().enumerate() {
                    if p1 != z1 {
                        continue;
                    }
                    for (j, p2) in positions.iter().enumerate() {
                        if p2 != z2 {
                            continue;
                        }
                        let (wi, wj) = (&w[i], &w[j]);
                        let ok = (wi.is_empty() && wj.is_empty())
                            || (wj.len() == wi.len() + 1
                                && wj.starts_with(wi)
                                && idx.entails_role(wj.last().unwrap(), &role))
                            || (wi.len() == wj.len() + 1
                                && wi.starts_with(wj)
                                && idx.entails_role(wi.last().unwrap(), &role.inv()));
                        if !ok {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

fn compatible_pair(
    pos_i: &[String],
    wi: &WordTuple,
    pos_j: &[String],
    wj: &WordTuple,
) -> bool {
    for (a, pa) in pos_i.iter().enumerate() {
        for (b, pb) in pos_j.iter().enumerate() {
            if pa == pb && wi[a] != wj[b] {
                return false;
            }
        }
    }
    true
}

/// Label of the tuple-selection edge for node `N` and word tuple `w`.
fn selection_label(
    q: &ConjunctiveQuery,
    positions: &[String],
    w: &WordTuple,
) -> Label<TwVariable> {
    let bag: BTreeSet<&String> = positions.iter().collect();
    let mut lits: Vec<Literal<TwVariable>> = Vec::new();
    let word_of = |z: &String| -> Option<&Vec<Role>> {
        positions.iter().position(|p| p == z).map(|i| &w[i])
    };
    for at in &q.atoms {
        let vars = at.vars();
        if !vars.iter().all(|v| bag.contains(&String::from(*v))) {
            continue;
        }
        let all_eps = vars.iter().all(|v| word_of(&String::from(*v)).is_some_and(Vec::is_empty));
        if all_eps {
            lits.push(Literal::pos(TwVariable::Atom(at.clone())));
            continue;
        }
        match at {
            Atom::Unary(_, z) => {
                let wz = word_of(z).unwrap();
                if let Some(first) = wz.first() {
                    lits.push(Literal::pos(TwVariable::Gen(z.clone(), first.clone())));
                }
            }
            Atom::Binary(_, z1, z2) if z1 == z2 => {
                let wz = word_of(z1).unwrap();
                if let Some(first) = wz.first() {
                    lits.push(Literal::pos(TwVariable::Gen(z1.clone(), first.clone())));
                }
            }
            Atom::Binary(_, z1, z2) => {
                let w1 = word_of(z1).unwrap();
                let w2 = word_of(z2).unwrap();
                let first = w1.first().or_else(|| w2.first()).cloned().expect("not all empty");
                lits.push(Literal::pos(TwVariable::Gen(z1.clone(), first.clone())));
                lits.push(Literal::pos(TwVariable::Gen(z2.clone(), first.clone())));
                lits.push(Literal::pos(TwVariable::eq(z1, z2)));
            }
        }
    }
    Label::conj(lits)
}

/// The THGP computing the primed tree-witness function for a query of
/// bounded treewidth over an ontology of finite depth.
pub struct BtwThgp {
    pub hgp: Hgp<TwVariable>,
    /// the full tuple-universe size `M` used in the size bounds
    pub tuple_universe: usize,
    /// number of decomposition nodes `L`'s underlying count
    pub nodes: usize,
}

pub fn btw_thgp(
    idx: &TBoxIndex,
    q: &ConjunctiveQuery,
    td: &TreeDecomposition,
) -> Result<BtwThgp, super::RewriteError> {
    let depth = match idx.depth() {
        Depth::Finite(d) => d,
        Depth::Omega => return Err(super::RewriteError::UnboundedDepth),
    };
    // a single-bag decomposition is padded with a duplicate bag so the
    // skeleton has at least one edge to carry the selection chains
    let padded;
    let td = if td.bags.len() == 1 {
        padded = TreeDecomposition {
            bags: vec![td.bags[0].clone(), td.bags[0].clone()],
            edges: vec![(0, 1)],
        };
        &padded
    } else {
        td
    };
    let words = word_universe(idx, depth);
    let arity = td.bags.iter().map(BTreeSet::len).max().unwrap_or(1).max(1);
    let tuple_universe = words.len().pow(arity as u32);

    let positions: Vec<Vec<String>> =
        td.bags.iter().map(|b| bag_positions(b, arity)).collect();
    // per node: the node-compatible tuples
    let mut k_sets: Vec<Vec<WordTuple>> = Vec::new();
    for pos in &positions {
        let mut tuples: Vec<WordTuple> = vec![vec![]];
        for _ in 0..arity {
            let mut next = Vec::new();
            for t in &tuples {
                for w in &words {
                    let mut t2 = t.clone();
                    t2.push(w.clone());
                    next.push(t2);
                }
            }
            tuples = next;
        }
        let compat: Vec<WordTuple> =
            tuples.into_iter().filter(|w| compatible_with_node(idx, q, pos, w)).collect();
        k_sets.push(compat);
    }

    // skeleton: decomposition nodes plus a chain of u/v pairs per side of
    // every decomposition edge
    let mut sk_edges: Vec<(usize, usize)> = Vec::new();
    let mut labels: Vec<Label<TwVariable>> = Vec::new();
    let mut vert_count = td.bags.len();
    let mut new_vertex = |vert_count: &mut usize| {
        let v = *vert_count;
        *vert_count += 1;
        v
    };
    let mut add_edge = |sk_edges: &mut Vec<(usize, usize)>,
                        labels: &mut Vec<Label<TwVariable>>,
                        a: usize,
                        b: usize,
                        l: Label<TwVariable>|
     -> usize {
        sk_edges.push((a, b));
        labels.push(l);
        sk_edges.len() - 1
    };
    // per (node, neighbour): the list of selection-edge ids and chain ids
    struct Side {
        sel_edges: Vec<usize>, // hypergraph vertex of {u^k, v^k}
        prefix: Vec<Vec<usize>>, // edges from N_i up to u^k inclusive of {v^{k-1},u^k}
        all_edges: Vec<usize>,
        last_vertex: usize, // v^{M}
    }
    let mut sides: BTreeMap<(usize, usize), Side> = BTreeMap::new();
    for &(i, j) in &td.edges {
        for (from, to) in [(i, j), (j, i)] {
            let mut prev = from;
            let mut sel_edges = Vec::new();
            let mut prefix = Vec::new();
            let mut all_edges = Vec::new();
            let mut acc: Vec<usize> = Vec::new();
            for w in &k_sets[from] {
                let u = new_vertex(&mut vert_count);
                let e1 = add_edge(&mut sk_edges, &mut labels, prev, u, Label::falsity());
                acc.push(e1);
                all_edges.push(e1);
                prefix.push(acc.clone());
                let v = new_vertex(&mut vert_count);
                let e2 = add_edge(
                    &mut sk_edges,
                    &mut labels,
                    u,
                    v,
                    selection_label(q, &positions[from], w),
                );
                sel_edges.push(e2);
                all_edges.push(e2);
                acc.push(e2);
                prev = v;
            }
            sides.insert((from, to), Side { sel_edges, prefix, all_edges, last_vertex: prev });
        }
    }
    // middle edges joining the two sides of a decomposition edge
    let mut middle: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(i, j) in &td.edges {
        let a = sides[&(i, j)].last_vertex;
        let b = sides[&(j, i)].last_vertex;
        let e = add_edge(&mut sk_edges, &mut labels, a, b, Label::falsity());
        middle.insert((i, j), e);
    }

    // hyperedges: tuple selection per node, pair compatibility per edge
    let mut hyperedges: Vec<BTreeSet<usize>> = Vec::new();
    for i in 0..td.bags.len() {
        let neighbours = td.neighbors(i);
        for (k, _w) in k_sets[i].iter().enumerate() {
            let mut h: BTreeSet<usize> = BTreeSet::new();
            for &j in &neighbours {
                // the interval from N_i to u_ij^k: all chain edges before
                // the k-th selection edge
                let side = &sides[&(i, j)];
                h.extend(side.prefix[k].iter().copied());
            }
            if neighbours.is_empty() {
                // an isolated decomposition node has no skeleton edges to
                // cover; its function contribution is handled below
                continue;
            }
            hyperedges.push(h);
        }
    }
    for &(i, j) in &td.edges {
        let side_i = &sides[&(i, j)];
        let side_j = &sides[&(j, i)];
        for (k, wk) in k_sets[i].iter().enumerate() {
            for (m, wm) in k_sets[j].iter().enumerate() {
                if !compatible_pair(&positions[i], wk, &positions[j], wm) {
                    continue;
                }
                // from v_ij^k to v_ji^m: the tail of side i after the
                // selection edge k, the middle, and the tail of side j
                let mut h: BTreeSet<usize> = BTreeSet::new();
                for &e in &side_i.all_edges[(2 * k + 2)..] {
                    h.insert(e);
                }
                for &e in &side_j.all_edges[(2 * m + 2)..] {
                    h.insert(e);
                }
                h.insert(middle[&(i, j)]);
                hyperedges.push(h);
            }
        }
    }

    let hgp = Hgp {
        labels,
        hyperedges,
        skeleton: Some(Skeleton { vertices: vert_count, edges: sk_edges }),
    };
    Ok(BtwThgp { hgp, tuple_universe, nodes: td.bags.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::ftw::{f_tw_prime, DEFAULT_SUBSET_CAP};
    use crate::rewrite::shape::treewidth_and_decomposition;
    use crate::syntax::{parse_ontology, parse_query};
    use crate::witness::enumerate_tree_witnesses;
    use std::collections::BTreeMap as StdMap;

    fn exhaustive_equal(t: &crate::syntax::Ontology, q: &ConjunctiveQuery) {
        let idx = TBoxIndex::for_query(t, q);
        let ws = enumerate_tree_witnesses(q, t).unwrap();
        let f = f_tw_prime(q, &ws, DEFAULT_SUBSET_CAP).unwrap();
        let (_, td) = treewidth_and_decomposition(q).unwrap();
        let built = btw_thgp(&idx, q, &td).unwrap();
        assert!(built.hgp.is_valid_thgp());
        let vars: Vec<TwVariable> = f.vars().union(&built.hgp.vars()).cloned().collect();
        assert!(vars.len() <= 18, "exhaustive check infeasible with {} vars", vars.len());
        for mask in 0..(1u64 << vars.len()) {
            let mut m: StdMap<TwVariable, bool> = StdMap::new();
            for (i, v) in vars.iter().enumerate() {
                m.insert(v.clone(), mask & (1 << i) != 0);
            }
            assert_eq!(
                f.eval(&m),
                built.hgp.eval_limited(&m, 4096).unwrap(),
                "assignment {m:?}"
            );
        }
    }

    #[test]
    fn depth_zero_ontology_tuples_are_all_empty() {
        let t = parse_ontology("A(x) -> B(x)\n").unwrap();
        let q = parse_query("q(x) :- B(x), P(x,y)").unwrap();
        exhaustive_equal(&t, &q);
    }

    #[test]
    fn single_existential_step() {
        let t = parse_ontology("A(x) -> exists P(x,_)\nexists P(_,x) -> B(x)\n").unwrap();
        let q = parse_query("q(x) :- P(x,y), B(y)").unwrap();
        exhaustive_equal(&t, &q);
    }

    #[test]
    fn two_step_chain() {
        let t = parse_ontology(
            "A(x) -> exists P(x,_)\nexists P(_,x) -> exists S(x,_)\n",
        )
        .unwrap();
        let q = parse_query("q(x) :- P(x,y), S(y,z)").unwrap();
        exhaustive_equal(&t, &q);
    }

    #[test]
    fn cyclic_query_with_witnesses() {
        let t = parse_ontology("A(x) -> exists P(x,_)\n").unwrap();
        let q = parse_query("q() :- P(x,y), P(z,y), R(x,z)").unwrap();
        exhaustive_equal(&t, &q);
    }
}
