//! The bounded-leaf strategy: the tree-witness function of a connected
//! tree-shaped query becomes an `s`–`t` reachability program whose layers
//! are the flat independent witness sets, ordered by precedence from a
//! fixed root vertex.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::vec;

use crate::boolprog::{Label, Literal, Nbp, NbpEdge};
use crate::syntax::{Atom, ConjunctiveQuery};
use crate::witness::TreeWitness;

use super::shape::query_shape;
use super::{RewriteError, TwVariable};

/// Where an atom sits in the query tree: the vertex (for unary and
/// reflexive atoms) or edge (for binary atoms) it occupies.
#[derive(Clone, Debug)]
enum Locus {
    Vertex(String),
    Edge(String, String),
}

struct TreeView {
    /// edges on the unique path from the root to each variable
    path_edges: BTreeMap<String, BTreeSet<(String, String)>>,
}

fn edge_key(a: &str, b: &str) -> (String, String) {
    if a < b {
        (a.into(), b.into())
    } else {
        (b.into(), a.into())
    }
}

impl TreeView {
    fn new(q: &ConjunctiveQuery, root: &str) -> Self {
        let edges = q.graph_edges();
        let mut path_edges: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        path_edges.insert(root.into(), BTreeSet::new());
        let mut queue = vec![String::from(root)];
        while let Some(v) = queue.pop() {
            let here = path_edges[&v].clone();
            for (a, b) in &edges {
                let other = if a == &v {
                    b
                } else if b == &v {
                    a
                } else {
                    continue;
                };
                if path_edges.contains_key(other) {
                    continue;
                }
                let mut p = here.clone();
                p.insert(edge_key(a, b));
                path_edges.insert(other.clone(), p);
                queue.push(other.clone());
            }
        }
        TreeView { path_edges }
    }

    /// Edges strictly between the root and the atom's locus.
    fn access_path(&self, locus: &Locus) -> Option<&BTreeSet<(String, String)>> {
        match locus {
            Locus::Vertex(v) => self.path_edges.get(v),
            Locus::Edge(a, b) => {
                let pa = self.path_edges.get(a)?;
                let pb = self.path_edges.get(b)?;
                Some(if pa.len() <= pb.len() { pa } else { pb })
            }
        }
    }
}

fn locus(at: &Atom) -> Locus {
    match at {
        Atom::Unary(_, x) => Locus::Vertex(x.clone()),
        Atom::Binary(_, x, y) if x == y => Locus::Vertex(x.clone()),
        Atom::Binary(_, x, y) => Locus::Edge(x.clone(), y.clone()),
    }
}

/// The reachability program computing the tree-witness function of a
/// connected tree-shaped query.
pub fn bounded_leaf_nbp(
    q: &ConjunctiveQuery,
    witnesses: &[TreeWitness],
) -> Result<Nbp<TwVariable>, RewriteError> {
    let shape = query_shape(q);
    if !shape.tree_shaped || !shape.connected {
        return Err(RewriteError::NotTreeShaped);
    }
    let vars = q.vars();
    let edges = q.graph_edges();
    let degree = |v: &String| edges.iter().filter(|(a, b)| a == v || b == v).count();
    let root =
        vars.iter().find(|v| degree(v) == 1).or_else(|| vars.first()).expect("nonempty query").clone();
    let view = TreeView::new(q, &root);

    let wedges: Vec<BTreeSet<(String, String)>> = witnesses
        .iter()
        .map(|w| w.graph_edges().iter().map(|(a, b)| edge_key(a, b)).collect())
        .collect();

    // a witness set is flat when no root-to-vertex path meets two of its
    // edge sets
    let flat = |set: &[usize]| -> bool {
        for p in view.path_edges.values() {
            let mut hit = 0;
            for &i in set {
                if !p.is_disjoint(&wedges[i]) {
                    hit += 1;
                    if hit > 1 {
                        return false;
                    }
                }
            }
        }
        true
    };
    let independent = |set: &[usize], j: usize| -> bool {
        set.iter().all(|&i| witnesses[i].atoms.intersection(&witnesses[j].atoms).next().is_none())
    };
    // enumerate flat independent sets
    let mut flats: Vec<Vec<usize>> = vec![Vec::new()];
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(cur) = stack.pop() {
        let from = cur.last().map_or(0, |&i| i + 1);
        for j in from..witnesses.len() {
            if independent(&cur, j) {
                let mut next = cur.clone();
                next.push(j);
                if flat(&next) {
                    flats.push(next.clone());
                    stack.push(next);
                }
            }
        }
    }

    // atom partition relative to a flat set: before (reachable from the
    // root avoiding the set), after (everything else outside the set)
    let before_after = |set: &[usize]| -> (BTreeSet<Atom>, BTreeSet<Atom>) {
        let covered: BTreeSet<&Atom> = set.iter().flat_map(|&i| witnesses[i].atoms.iter()).collect();
        let blocked: BTreeSet<(String, String)> =
            set.iter().flat_map(|&i| wedges[i].iter().cloned()).collect();
        let mut before = BTreeSet::new();
        let mut after = BTreeSet::new();
        for at in &q.atoms {
            if covered.contains(at) {
                continue;
            }
            let accessible =
                view.access_path(&locus(at)).is_some_and(|p| p.is_disjoint(&blocked));
            if accessible {
                before.insert(at.clone());
            } else {
                after.insert(at.clone());
            }
        }
        (before, after)
    };

    let conj = |atoms: &BTreeSet<Atom>| -> Label<TwVariable> {
        Label::conj(atoms.iter().map(|a| Literal::pos(TwVariable::Atom(a.clone()))).collect())
    };

    // precedence: every root path to a vertex of the later set crosses the
    // earlier one
    let precedes = |a: &[usize], b: &[usize]| -> bool {
        if a.is_empty() {
            return false;
        }
        let blocked: BTreeSet<(String, String)> =
            a.iter().flat_map(|&i| wedges[i].iter().cloned()).collect();
        for &j in b {
            for v in witnesses[j].vars() {
                match view.path_edges.get(&v) {
                    Some(p) => {
                        if p.is_disjoint(&blocked) {
                            return false;
                        }
                    }
                    None => return false,
                }
            }
        }
        true
    };

    // vertices: s, t, then u_i, v_i per flat set
    let n = flats.len();
    let s = 0;
    let t = 1;
    let u = |i: usize| 2 + 2 * i;
    let v = |i: usize| 3 + 2 * i;
    let mut nbp_edges = Vec::new();
    let mut parts: Vec<(BTreeSet<Atom>, BTreeSet<Atom>)> = Vec::new();
    for set in &flats {
        parts.push(before_after(set));
    }
    for (i, set) in flats.iter().enumerate() {
        let (before, after) = (&parts[i].0, &parts[i].1);
        nbp_edges.push(NbpEdge { from: s, to: u(i), label: conj(before) });
        nbp_edges.push(NbpEdge {
            from: u(i),
            to: v(i),
            label: Label::conj(set.iter().map(|&k| Literal::pos(TwVariable::Witness(k))).collect()),
        });
        nbp_edges.push(NbpEdge { from: v(i), to: t, label: conj(after) });
        for (j, set2) in flats.iter().enumerate() {
            if i != j && precedes(set, set2) {
                // between: beyond the earlier set but neither inside nor
                // beyond the later one
                let covered2: BTreeSet<&Atom> =
                    set2.iter().flat_map(|&k| witnesses[k].atoms.iter()).collect();
                let between: BTreeSet<Atom> = parts[i]
                    .1
                    .iter()
                    .filter(|at| !covered2.contains(*at) && !parts[j].1.contains(*at))
                    .cloned()
                    .collect();
                nbp_edges.push(NbpEdge { from: v(i), to: u(j), label: conj(&between) });
            }
        }
    }
    Ok(Nbp { vertices: 2 + 2 * n, edges: nbp_edges, s, t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::ftw::{f_tw, DEFAULT_SUBSET_CAP};
    use crate::syntax::{parse_ontology, parse_query};
    use crate::witness::enumerate_tree_witnesses;
    use std::collections::BTreeMap as StdMap;

    #[test]
    fn no_witness_query_gives_the_trivial_chain() {
        let t = parse_ontology("").unwrap();
        let q = parse_query("q(x,y) :- P(x,y)").unwrap();
        let ws = enumerate_tree_witnesses(&q, &t).unwrap();
        let p = bounded_leaf_nbp(&q, &ws).unwrap();
        // single flat set (the empty one): s → u → v → t with all atoms up
        // front
        assert_eq!(p.vertices, 4);
        assert_eq!(p.edges.len(), 3);
        let before = &p.edges.iter().find(|e| e.from == p.s).unwrap().label;
        match before {
            Label::Conj(lits) => assert_eq!(lits.len(), 1),
            other => panic!("unexpected label {other:?}"),
        }
    }

    #[test]
    fn nbp_equals_f_tw_on_golden_query() {
        let t = parse_ontology(
            "P(x,y) -> R(x,y)\n\
             P(x,y) -> U(y,x)\n\
             A(x) -> exists P(x,_)\n\
             exists P(_,x) -> exists S(x,_)\n\
             exists S(_,x) -> exists R(x,_)\n\
             exists S(_,x) -> exists T(_,x)\n\
             exists P(_,x) -> B(x)\n",
        )
        .unwrap();
        let q = parse_query("q(x1,x2) :- P(y2,y1), S(y1,y3), R(y2,x1), S(y4,y3), T(y5,y3), U(y4,x2)")
            .unwrap();
        let ws = enumerate_tree_witnesses(&q, &t).unwrap();
        let f = f_tw(&q, &ws, DEFAULT_SUBSET_CAP).unwrap();
        let p = bounded_leaf_nbp(&q, &ws).unwrap();
        let vars: Vec<TwVariable> = f.vars().union(&p.vars()).cloned().collect();
        assert!(vars.len() <= 16, "exhaustive check stays feasible");
        for mask in 0..(1u32 << vars.len()) {
            let mut m: StdMap<TwVariable, bool> = StdMap::new();
            for (i, v) in vars.iter().enumerate() {
                m.insert(v.clone(), mask & (1 << i) != 0);
            }
            assert_eq!(f.eval(&m), p.eval(&m), "assignment {m:?}");
        }
    }
}
