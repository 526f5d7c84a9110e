//! The tree-witness functions `f_tw` and `f_tw'` and the primitive
//! evaluation function they bound.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::vec;

use crate::boolprog::Formula;
use crate::canonical::certain_answers_brute;
use crate::syntax::{Atom, ConjunctiveQuery, DataInstance, Fact, Ontology};
use crate::witness::TreeWitness;

use super::{RewriteError, TwVariable};

pub const DEFAULT_SUBSET_CAP: usize = 10_000;

/// Independent subsets of the witness list, by index.
pub fn independent_subsets(
    witnesses: &[TreeWitness],
    cap: usize,
) -> Result<Vec<Vec<usize>>, RewriteError> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    fn extend(
        witnesses: &[TreeWitness],
        current: &[usize],
        from: usize,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<(), RewriteError> {
        for i in from..witnesses.len() {
            if current
                .iter()
                .all(|&j| witnesses[i].atoms.intersection(&witnesses[j].atoms).next().is_none())
            {
                let mut next = current.to_vec();
                next.push(i);
                out.push(next.clone());
                if out.len() > cap {
                    return Err(RewriteError::SubsetOverflow { cap });
                }
                extend(witnesses, &next, i + 1, out, cap)?;
            }
        }
        Ok(())
    }
    extend(witnesses, &[], 0, &mut out, cap)?;
    Ok(out)
}

/// The tree-witness function: one disjunct per independent witness set,
/// asserting the remaining atoms and the chosen witnesses.
pub fn f_tw(
    q: &ConjunctiveQuery,
    witnesses: &[TreeWitness],
    cap: usize,
) -> Result<Formula<TwVariable>, RewriteError> {
    let subsets = independent_subsets(witnesses, cap)?;
    let mut disjuncts = Vec::new();
    for subset in subsets {
        let covered: BTreeSet<&Atom> =
            subset.iter().flat_map(|&i| witnesses[i].atoms.iter()).collect();
        let mut conj: Vec<Formula<TwVariable>> = q
            .atoms
            .iter()
            .filter(|a| !covered.contains(a))
            .map(|a| Formula::Var(TwVariable::Atom(a.clone())))
            .collect();
        for &i in &subset {
            conj.push(Formula::Var(TwVariable::Witness(i)));
        }
        disjuncts.push(Formula::And(conj));
    }
    Ok(Formula::Or(disjuncts))
}

/// The variant replacing each witness variable by equalities over its
/// variables and a choice of generating role.
pub fn f_tw_prime(
    q: &ConjunctiveQuery,
    witnesses: &[TreeWitness],
    cap: usize,
) -> Result<Formula<TwVariable>, RewriteError> {
    let subsets = independent_subsets(witnesses, cap)?;
    let mut disjuncts = Vec::new();
    for subset in subsets {
        let covered: BTreeSet<&Atom> =
            subset.iter().flat_map(|&i| witnesses[i].atoms.iter()).collect();
        let mut conj: Vec<Formula<TwVariable>> = q
            .atoms
            .iter()
            .filter(|a| !covered.contains(a))
            .map(|a| Formula::Var(TwVariable::Atom(a.clone())))
            .collect();
        for &i in &subset {
            conj.push(witness_formula(&witnesses[i]));
        }
        disjuncts.push(Formula::And(conj));
    }
    Ok(Formula::Or(disjuncts))
}

/// `⋀_{z,z'∈t} p_{z=z'} ∧ ⋁_ρ ⋀_{z∈t} p_z^ρ` for a single witness.
pub fn witness_formula(w: &TreeWitness) -> Formula<TwVariable> {
    let vars: Vec<String> = w.vars().into_iter().collect();
    let mut conj = Vec::new();
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            conj.push(Formula::Var(TwVariable::eq(&vars[i], &vars[j])));
        }
    }
    let gens: Vec<Formula<TwVariable>> = w
        .generators
        .iter()
        .map(|g| {
            Formula::And(
                vars.iter()
                    .map(|z| Formula::Var(TwVariable::Gen(z.clone(), g.clone())))
                    .collect(),
            )
        })
        .collect();
    conj.push(Formula::Or(gens));
    Formula::And(conj)
}

/// The single-individual data instance induced by a predicate valuation.
pub fn primitive_instance(gamma: &BTreeMap<String, bool>, unary: &BTreeSet<String>) -> DataInstance {
    let mut facts = BTreeSet::new();
    for (p, &v) in gamma {
        if !v {
            continue;
        }
        if unary.contains(p) {
            facts.insert(Fact::Unary(p.clone(), "a".to_string()));
        } else {
            facts.insert(Fact::Binary(p.clone(), "a".to_string(), "a".to_string()));
        }
    }
    DataInstance { facts }
}

/// The primitive evaluation function: is the all-`a` tuple certain over
/// the loop instance induced by `gamma`?
pub fn f_prim(t: &Ontology, q: &ConjunctiveQuery, gamma: &BTreeMap<String, bool>) -> bool {
    let mut unary = t.unary_sig();
    unary.extend(q.unary_sig());
    let a = primitive_instance(gamma, &unary);
    let answers = certain_answers_brute(t, &a, q);
    let tuple: Vec<String> = q.answer_vars.iter().map(|_| "a".to_string()).collect();
    if a.inds().is_empty() && !q.answer_vars.is_empty() {
        return false;
    }
    answers.contains(&tuple)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_ontology, parse_query};
    use crate::witness::enumerate_tree_witnesses;

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

    #[test]
    fn kb0_f_tw_has_four_disjuncts() {
        // all witness pairs overlap, so the independent sets are the empty
        // set and the three singletons
        let (t, q) = kb0();
        let ws = enumerate_tree_witnesses(&q, &t).unwrap();
        let f = f_tw(&q, &ws, DEFAULT_SUBSET_CAP).unwrap();
        match &f {
            Formula::Or(ds) => assert_eq!(ds.len(), 4),
            other => panic!("expected a disjunction, got {other:?}"),
        }
    }

    #[test]
    fn no_witnesses_single_disjunct() {
        let t = parse_ontology("A(x) -> B(x)\n").unwrap();
        let q = parse_query("q(x) :- B(x)").unwrap();
        let f = f_tw(&q, &[], DEFAULT_SUBSET_CAP).unwrap();
        match &f {
            Formula::Or(ds) => {
                assert_eq!(ds.len(), 1);
                match &ds[0] {
                    Formula::And(cs) => assert_eq!(cs.len(), 1),
                    other => panic!("unexpected disjunct {other:?}"),
                }
            }
            other => panic!("expected a disjunction, got {other:?}"),
        }
    }

    #[test]
    fn homomorphism_assignment_satisfies_f_tw() {
        // the known embedding folds the big witness and keeps R(y2,x1) in
        // the core
        let (t, q) = kb0();
        let ws = enumerate_tree_witnesses(&q, &t).unwrap();
        let f = f_tw(&q, &ws, DEFAULT_SUBSET_CAP).unwrap();
        let big = ws
            .iter()
            .position(|w| w.interior.len() == 4)
            .expect("the four-variable witness exists");
        let mut asg: BTreeMap<TwVariable, bool> = BTreeMap::new();
        asg.insert(TwVariable::Witness(big), true);
        asg.insert(
            TwVariable::Atom(Atom::Binary("R".into(), "y2".into(), "x1".into())),
            true,
        );
        assert!(f.eval(&asg));
        // and f_tw' under the same configuration, using the witness's
        // equalities and generator
        let fp = f_tw_prime(&q, &ws, DEFAULT_SUBSET_CAP).unwrap();
        let mut asg2: BTreeMap<TwVariable, bool> = BTreeMap::new();
        asg2.insert(
            TwVariable::Atom(Atom::Binary("R".into(), "y2".into(), "x1".into())),
            true,
        );
        let w = &ws[big];
        let vars: Vec<String> = w.vars().into_iter().collect();
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                asg2.insert(TwVariable::eq(&vars[i], &vars[j]), true);
            }
        }
        for g in &w.generators {
            for z in &vars {
                asg2.insert(TwVariable::Gen(z.clone(), g.clone()), true);
            }
        }
        assert!(fp.eval(&asg2));
    }

    #[test]
    fn f_prim_constant_valuations() {
        let (t, q) = kb0();
        let mut gamma: BTreeMap<String, bool> = BTreeMap::new();
        for p in ["A", "B", "P", "R", "S", "T", "U"] {
            gamma.insert(p.to_string(), false);
        }
        assert!(!f_prim(&t, &q, &gamma));
        for v in gamma.values_mut() {
            *v = true;
        }
        assert!(f_prim(&t, &q, &gamma));
    }
}
