//! The depth-one strategy: a recursive positive-existential rewriting.
//! A separator bag of a tree decomposition is guessed to map into the
//! core; every independent set of witnesses with interior inside the bag
//! contributes a disjunct asserting the surviving atoms, the witness
//! formulas, and recursive rewritings of the components left over.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::vec;

use crate::reasoner::{Depth, TBoxIndex};
use crate::syntax::{Atom, ConjunctiveQuery, Ontology};
use crate::witness::{enumerate_tree_witnesses_capped, TreeWitness, DEFAULT_WITNESS_CAP};

use super::atoms::{atom_rewriting, exists_rewriting};
use super::shape::{treewidth_and_decomposition_limited, TreeDecomposition};
use super::{FreshVars, PeBody, PeQuery, RewriteError};

/// The recursive rewriting; requires ontology depth at most one.
pub fn rewrite_pe_depth1(t: &Ontology, q: &ConjunctiveQuery) -> Result<PeQuery, RewriteError> {
    let idx = TBoxIndex::for_query(t, q);
    match idx.depth() {
        Depth::Finite(d) if d <= 1 => {}
        Depth::Finite(d) => {
            return Err(RewriteError::DepthExceeded { depth: Some(d), needed: 1 })
        }
        Depth::Omega => return Err(RewriteError::DepthExceeded { depth: None, needed: 1 }),
    }
    let mut fresh = FreshVars::new(q.vars());
    let body = rewrite_rec(t, &idx, q, &mut fresh, 0)?;
    Ok(PeQuery { answer_vars: q.answer_vars.clone(), body })
}

fn rewrite_rec(
    t: &Ontology,
    idx: &TBoxIndex,
    q: &ConjunctiveQuery,
    fresh: &mut FreshVars,
    depth_guard: usize,
) -> Result<PeBody, RewriteError> {
    assert!(depth_guard < 64, "separator recursion must terminate");
    if q.atoms.is_empty() {
        return Ok(PeBody::And(vec![]));
    }
    let witnesses = enumerate_tree_witnesses_capped(q, t, DEFAULT_WITNESS_CAP)?;
    // with depth one, interiors are singletons and pairwise distinct
    debug_assert!(witnesses.iter().all(|w| w.interior.len() == 1));
    let separator = choose_separator(q)?;
    let avars: BTreeSet<String> = q.answer_vars.iter().cloned().collect();

    // witnesses whose interior point lies in the separator
    let local: Vec<&TreeWitness> =
        witnesses.iter().filter(|w| w.interior.iter().all(|v| separator.contains(v))).collect();
    let mut disjuncts: Vec<PeBody> = Vec::new();
    for omega in independent_selections(&local) {
        let covered: BTreeSet<&Atom> = omega.iter().flat_map(|w| w.atoms.iter()).collect();
        let border: BTreeSet<String> = {
            let mut b: BTreeSet<String> = separator
                .iter()
                .filter(|u| !omega.iter().any(|w| w.interior.contains(*u)))
                .cloned()
                .collect();
            for w in &omega {
                b.extend(w.roots.iter().cloned());
            }
            b
        };
        let inner_set: BTreeSet<String> = separator.union(&border).cloned().collect();
        let mut conj: Vec<PeBody> = Vec::new();
        // surviving atoms inside the separator-and-border region
        for at in &q.atoms {
            if covered.contains(at) {
                continue;
            }
            if at.vars().iter().all(|v| inner_set.contains(*v)) {
                conj.push(atom_rewriting(idx, at, fresh));
            }
        }
        // witness formulas
        for w in &omega {
            conj.push(witness_pe(idx, w, fresh));
        }
        // recursive components over the remaining atoms
        let rest: BTreeSet<Atom> = q
            .atoms
            .iter()
            .filter(|at| !at.vars().iter().all(|v| inner_set.contains(*v)))
            .cloned()
            .collect();
        for comp in component_queries(q, &rest, &border, &avars) {
            conj.push(rewrite_rec(t, idx, &comp, fresh, depth_guard + 1)?);
        }
        // bind the separator-and-border variables that are not answered
        let bound: Vec<String> =
            inner_set.iter().filter(|v| !avars.contains(*v)).cloned().collect();
        let inner = PeBody::And(conj);
        disjuncts.push(if bound.is_empty() {
            inner
        } else {
            PeBody::Exists(bound, Box::new(inner))
        });
    }
    Ok(PeBody::Or(disjuncts))
}

/// `⋁_ρ (ρ_ρ(z0) ∧ roots = z0)` for one witness.
fn witness_pe(idx: &TBoxIndex, w: &TreeWitness, fresh: &mut FreshVars) -> PeBody {
    let mut ds = Vec::new();
    for g in &w.generators {
        if let Some(z0) = w.roots.iter().next() {
            let mut conj = vec![exists_rewriting(idx, g, z0, fresh)];
            for z in w.roots.iter().skip(1) {
                conj.push(PeBody::Eq(z0.clone(), z.clone()));
            }
            ds.push(PeBody::And(conj));
        } else {
            let z = fresh.next("w");
            ds.push(PeBody::Exists(vec![z.clone()], Box::new(exists_rewriting(idx, g, &z, fresh))));
        }
    }
    PeBody::Or(ds)
}

/// The centroid bag of a minimum-width decomposition: removing it splits
/// the decomposition into halves. If the centroid holds no atom at all,
/// fall back to the bag covering the most atoms, which guarantees the
/// recursion sheds at least one atom per level.
fn choose_separator(q: &ConjunctiveQuery) -> Result<BTreeSet<String>, RewriteError> {
    let (_, td) = treewidth_and_decomposition_limited(q, 24)
        .map_err(|e| RewriteError::TreewidthTooLarge { width: e.vars, limit: e.limit })?;
    let atoms_inside = |bag: &BTreeSet<String>| {
        q.atoms.iter().filter(|at| at.vars().iter().all(|v| bag.contains(*v))).count()
    };
    let n = td.bags.len();
    if n == 1 {
        return Ok(td.bags[0].clone());
    }
    let mut best: Option<(usize, usize)> = None; // (max component size, bag)
    for v in 0..n {
        let largest = components_without(&td, v).into_iter().map(|c| c.len()).max().unwrap_or(0);
        if best.is_none() || largest < best.unwrap().0 {
            best = Some((largest, v));
        }
    }
    let centroid = &td.bags[best.unwrap().1];
    if atoms_inside(centroid) > 0 {
        return Ok(centroid.clone());
    }
    let fat = td.bags.iter().max_by_key(|b| atoms_inside(b)).unwrap();
    Ok(fat.clone())
}

fn components_without(td: &TreeDecomposition, v: usize) -> Vec<Vec<usize>> {
    let n = td.bags.len();
    let mut seen = vec![false; n];
    seen[v] = true;
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for y in td.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                    stack.push(y);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Independent subsets of the local witnesses (as references).
fn independent_selections<'a>(local: &[&'a TreeWitness]) -> Vec<Vec<&'a TreeWitness>> {
    let mut out: Vec<Vec<&TreeWitness>> = vec![Vec::new()];
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(cur) = stack.pop() {
        let from = cur.last().map_or(0, |&i| i + 1);
        for j in from..local.len() {
            if cur
                .iter()
                .all(|&i| local[i].atoms.intersection(&local[j].atoms).next().is_none())
            {
                let mut next = cur.clone();
                next.push(j);
                out.push(next.iter().map(|&i| local[i]).collect());
                stack.push(next);
            }
        }
    }
    out
}

/// Split the remaining atoms into classes connected outside the border,
/// each becoming a subquery whose answer variables are its pinned (border
/// or answered) variables.
fn component_queries(
    q: &ConjunctiveQuery,
    rest: &BTreeSet<Atom>,
    border: &BTreeSet<String>,
    avars: &BTreeSet<String>,
) -> Vec<ConjunctiveQuery> {
    // union-find over free (non-border) variables through shared atoms
    let free_vars: Vec<String> = rest
        .iter()
        .flat_map(|a| a.vars())
        .map(String::from)
        .filter(|v| !border.contains(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&String, usize> =
        free_vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..free_vars.len()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // connect through any query atom whose endpoints are both free
    for at in &q.atoms {
        let vs: Vec<&str> = at.vars();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let (a, b) = (String::from(vs[i]), String::from(vs[j]));
                if let (Some(&x), Some(&y)) = (index.get(&a), index.get(&b)) {
                    let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                    if rx != ry {
                        parent[rx] = ry;
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<Atom>> = BTreeMap::new();
    for at in rest {
        let rep = at
            .vars()
            .iter()
            .map(String::from)
            .find(|v| !border.contains(v))
            .map(|v| find(&mut parent, index[&v]))
            .expect("atoms outside the region have a free variable");
        groups.entry(rep).or_default().insert(at.clone());
    }
    groups
        .into_values()
        .map(|atoms| {
            let vars: BTreeSet<String> =
                atoms.iter().flat_map(|a| a.vars()).map(String::from).collect();
            let answer_vars: Vec<String> = vars
                .iter()
                .filter(|v| border.contains(*v) || avars.contains(*v))
                .cloned()
                .collect();
            ConjunctiveQuery { answer_vars, atoms }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::certain_answers_brute;
    use crate::exec::eval_pe;
    use crate::syntax::{parse_data, parse_ontology, parse_query};

    #[test]
    fn no_existential_heads_reduces_to_atom_rewriting() {
        let t = parse_ontology("A(x) -> B(x)\n").unwrap();
        let q = parse_query("q(x) :- B(x), P(x,y)").unwrap();
        let pe = rewrite_pe_depth1(&t, &q).unwrap();
        let a = parse_data("A(a). P(a,b). B(c). P(c,d).").unwrap();
        assert_eq!(eval_pe(&pe, &a), certain_answers_brute(&t, &a, &q));
    }

    #[test]
    fn depth_one_witness_fold() {
        let t = parse_ontology("A(x) -> exists P(x,_)\nexists P(_,x) -> B(x)\n").unwrap();
        let q = parse_query("q(x) :- P(x,y), B(y)").unwrap();
        let pe = rewrite_pe_depth1(&t, &q).unwrap();
        for abox in ["A(a).", "P(a,b).", "P(a,b). B(b).", "B(b)."] {
            let a = parse_data(abox).unwrap();
            assert_eq!(eval_pe(&pe, &a), certain_answers_brute(&t, &a, &q), "data {abox}");
        }
    }

    #[test]
    fn depth_two_is_rejected() {
        let t = parse_ontology(
            "A(x) -> exists P(x,_)\nexists P(_,x) -> exists S(x,_)\n",
        )
        .unwrap();
        let q = parse_query("q(x) :- P(x,y)").unwrap();
        assert!(matches!(
            rewrite_pe_depth1(&t, &q),
            Err(RewriteError::DepthExceeded { depth: Some(2), needed: 1 })
        ));
    }

    #[test]
    fn boolean_detached_witness() {
        let t = parse_ontology("B(x) -> exists P(x,_)\nexists P(_,x) -> A(x)\n").unwrap();
        let q = parse_query("q() :- A(y)").unwrap();
        let pe = rewrite_pe_depth1(&t, &q).unwrap();
        for abox in ["B(b).", "A(a).", "C(c)."] {
            let a = parse_data(abox).unwrap();
            assert_eq!(eval_pe(&pe, &a), certain_answers_brute(&t, &a, &q), "data {abox}");
        }
    }
}
