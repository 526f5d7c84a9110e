//! Tree witnesses: the fragments of a query that can fold into the
//! anonymous part of a canonical model.
//!
//! A witness is a pair of disjoint variable sets `(roots, interior)` with a
//! nonempty interior avoiding the answer variables, such that the atoms
//! touching the interior use only root and interior variables, and the
//! induced subquery maps homomorphically into the tree generated by some
//! role with all roots going to the tree's root individual.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::canonical::{build_generator_model, find_homomorphisms, CanonicalModel};
use crate::reasoner::TBoxIndex;
use crate::syntax::{Atom, ConjunctiveQuery, Ontology, Role};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TreeWitness {
    pub roots: BTreeSet<String>,
    pub interior: BTreeSet<String>,
    /// the induced subquery: all atoms involving an interior variable
    pub atoms: BTreeSet<Atom>,
    /// roles whose generated tree accommodates the subquery
    pub generators: BTreeSet<Role>,
}

impl TreeWitness {
    pub fn vars(&self) -> BTreeSet<String> {
        self.roots.union(&self.interior).cloned().collect()
    }

    /// Graph edges of the induced subquery.
    pub fn graph_edges(&self) -> BTreeSet<(String, String)> {
        let mut e = BTreeSet::new();
        for at in &self.atoms {
            if let Atom::Binary(_, x, y) = at {
                if x != y {
                    let (a, b) = if x < y { (x, y) } else { (y, x) };
                    e.insert((a.clone(), b.clone()));
                }
            }
        }
        e
    }
}

/// Enumeration gave up: more candidates than the configured cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessOverflow {
    pub cap: usize,
}

pub const DEFAULT_WITNESS_CAP: usize = 10_000;

/// All tree witnesses of `q` w.r.t. `T`, with full generator sets.
pub fn enumerate_tree_witnesses(
    q: &ConjunctiveQuery,
    t: &Ontology,
) -> Result<Vec<TreeWitness>, WitnessOverflow> {
    enumerate_tree_witnesses_capped(q, t, DEFAULT_WITNESS_CAP)
}

pub fn enumerate_tree_witnesses_capped(
    q: &ConjunctiveQuery,
    t: &Ontology,
    cap: usize,
) -> Result<Vec<TreeWitness>, WitnessOverflow> {
    let idx = TBoxIndex::for_query(t, q);
    let evars: Vec<String> = q.existential_vars();
    // candidate interiors grow from a seed variable: whenever an atom leaves
    // the current root/interior split, the outside variable is classified
    // either as a root or as more interior.
    let mut candidates: BTreeSet<BTreeSet<String>> = BTreeSet::new();
    for seed in &evars {
        let mut interior = BTreeSet::new();
        interior.insert(seed.clone());
        grow(q, &evars, interior, &mut candidates, cap)?;
        if candidates.len() > cap {
            return Err(WitnessOverflow { cap });
        }
    }
    // validate each candidate against every role that can actually label an
    // anonymous edge of some chase; other roles never generate a tree, so a
    // witness for them could never participate in a fold
    let generators: Vec<Role> = idx.generable_roles().into_iter().collect();
    let mut models: BTreeMap<Role, CanonicalModel> = BTreeMap::new();
    let mut out = Vec::new();
    for interior in candidates {
        let atoms: BTreeSet<Atom> =
            q.atoms.iter().filter(|at| at.vars().iter().any(|v| interior.contains(*v))).cloned().collect();
        let vars: BTreeSet<String> =
            atoms.iter().flat_map(|a| a.vars()).map(String::from).collect();
        let roots: BTreeSet<String> = vars.difference(&interior).cloned().collect();
        let sub = ConjunctiveQuery { answer_vars: Vec::new(), atoms: atoms.clone() };
        let mut gens = BTreeSet::new();
        for g in &generators {
            let m = models
                .entry(g.clone())
                .or_insert_with(|| build_generator_model(t, g, q.atoms.len().max(1)));
            if maps_into_generator(&sub, m, &roots, &interior) {
                gens.insert(g.clone());
            }
        }
        if !gens.is_empty() {
            out.push(TreeWitness { roots, interior, atoms, generators: gens });
        }
    }
    out.sort();
    out.dedup();
    if out.len() > cap {
        return Err(WitnessOverflow { cap });
    }
    Ok(out)
}

/// Close `interior` under "atoms touching the interior stay inside": any
/// variable of such an atom is either declared a root (always allowed) or
/// joins the interior (only for existential variables). Both branches are
/// explored, so every valid split is reached.
fn grow(
    q: &ConjunctiveQuery,
    evars: &[String],
    interior: BTreeSet<String>,
    candidates: &mut BTreeSet<BTreeSet<String>>,
    cap: usize,
) -> Result<(), WitnessOverflow> {
    if candidates.contains(&interior) {
        return Ok(());
    }
    if candidates.len() >= cap {
        return Err(WitnessOverflow { cap });
    }
    candidates.insert(interior.clone());
    for at in &q.atoms {
        if !at.vars().iter().any(|v| interior.contains(*v)) {
            continue;
        }
        for v in at.vars() {
            if !interior.contains(v) && evars.iter().any(|e| e == v) {
                let mut bigger = interior.clone();
                bigger.insert(String::from(v));
                grow(q, evars, bigger, candidates, cap)?;
            }
        }
    }
    Ok(())
}

/// Is there a homomorphism of the induced subquery into the generator tree
/// sending every root to the tree's root individual and every interior
/// variable to an anonymous element?
fn maps_into_generator(
    sub: &ConjunctiveQuery,
    m: &CanonicalModel,
    roots: &BTreeSet<String>,
    interior: &BTreeSet<String>,
) -> bool {
    let root_id = match m.individuals().next() {
        Some((id, _)) => id,
        None => return false,
    };
    let mut bind: BTreeMap<String, usize> = BTreeMap::new();
    for r in roots {
        bind.insert(r.clone(), root_id);
    }
    find_homomorphisms(sub, m, &bind)
        .into_iter()
        .any(|h| interior.iter().all(|v| !m.elements[h[v]].is_individual()))
}

/// Pairwise atom-disjointness of a set of witnesses.
pub fn independent(ws: &[&TreeWitness]) -> bool {
    for i in 0..ws.len() {
        for j in i + 1..ws.len() {
            if ws[i].atoms.intersection(&ws[j].atoms).next().is_some() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_ontology, parse_query};

    fn kb0() -> (Ontology, ConjunctiveQuery) {
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
        (t, q)
    }

    fn vs(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn kb0_has_exactly_three_witnesses() {
        let (t, q) = kb0();
        let ws = enumerate_tree_witnesses(&q, &t).unwrap();
        assert_eq!(ws.len(), 3);
        let find = |interior: &BTreeSet<String>| ws.iter().find(|w| &w.interior == interior).unwrap();
        let t1 = find(&vs(&["y1", "y3", "y4", "y5"]));
        assert_eq!(t1.roots, vs(&["x2", "y2"]));
        assert_eq!(t1.generators, [Role::new("P")].into_iter().collect());
        let t2 = find(&vs(&["y3", "y5"]));
        assert_eq!(t2.roots, vs(&["y1", "y4"]));
        assert_eq!(t2.generators, [Role::new("S")].into_iter().collect());
        let t3 = find(&vs(&["y5"]));
        assert_eq!(t3.roots, vs(&["y3"]));
        assert_eq!(t3.generators, [Role::inverse("T")].into_iter().collect());
    }

    #[test]
    fn no_existential_variables_no_witnesses() {
        let t = parse_ontology("A(x) -> exists P(x,_)\n").unwrap();
        let q = parse_query("q(x,y) :- P(x,y)").unwrap();
        assert!(enumerate_tree_witnesses(&q, &t).unwrap().is_empty());
    }

    #[test]
    fn kb0_pairwise_overlaps() {
        let (t, q) = kb0();
        let ws = enumerate_tree_witnesses(&q, &t).unwrap();
        // every pair shares an atom, so no pair is independent
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(!independent(&[&ws[i], &ws[j]]));
            }
            assert!(independent(&[&ws[i]]));
        }
        assert!(independent(&[]));
    }

    #[test]
    fn witnesses_with_shared_root_structure() {
        // both arms of the query fold onto the single anonymous P-child,
        // with x and z pinned to the root individual
        let t = parse_ontology("A(x) -> exists P(x,_)\n").unwrap();
        let q = parse_query("q() :- P(x,y), P(z,y)").unwrap();
        let ws = enumerate_tree_witnesses(&q, &t).unwrap();
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].interior, vs(&["y"]));
        assert_eq!(ws[0].roots, vs(&["x", "z"]));
        assert!(ws[0].generators.contains(&Role::new("P")));
    }

    #[test]
    fn detached_boolean_witness_has_empty_roots() {
        let t = parse_ontology("B(x) -> exists P(x,_)\nexists P(_,x) -> A(x)\n").unwrap();
        let q = parse_query("q() :- A(y)").unwrap();
        let ws = enumerate_tree_witnesses(&q, &t).unwrap();
        assert_eq!(ws.len(), 1);
        assert!(ws[0].roots.is_empty());
        assert_eq!(ws[0].interior, vs(&["y"]));
        assert!(ws[0].generators.contains(&Role::new("P")));
    }

    #[test]
    fn generator_homomorphisms_replay() {
        let (t, q) = kb0();
        for w in enumerate_tree_witnesses(&q, &t).unwrap() {
            let sub = ConjunctiveQuery { answer_vars: Vec::new(), atoms: w.atoms.clone() };
            for g in &w.generators {
                let m = build_generator_model(&t, g, q.atoms.len());
                assert!(maps_into_generator(&sub, &m, &w.roots, &w.interior));
            }
        }
    }
}

