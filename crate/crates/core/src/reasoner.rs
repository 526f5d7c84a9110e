//! Entailment between roles and basic concepts, ontology depth, and KB
//! consistency.
//!
//! All of it is driven by a [`TBoxIndex`]: the reflexive-transitive closure
//! of the role-inclusion graph (closed under inversion) and of the concept
//! graph it induces. The index is built once per ontology and shared; every
//! compiler and evaluator in the crate queries it, never the raw axioms.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::syntax::{Atom, Axiom, ConceptExpr, ConjunctiveQuery, DataInstance, Fact, Ontology, Role};

/// Ontology depth: the largest anonymous path length over all data
/// instances, or `Omega` when unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Depth {
    Finite(usize),
    Omega,
}

/// Precomputed entailment closure for one ontology (plus, optionally, the
/// signature of a query; predicates unknown to the ontology entail only
/// themselves).
#[derive(Clone, Debug)]
pub struct TBoxIndex {
    pub ontology: Ontology,
    /// every role over the indexed signature, both polarities
    pub roles: Vec<Role>,
    unary: BTreeSet<String>,
    /// `role_up[r]` = all `r'` with `T ⊨ r ⊑ r'` (reflexive).
    role_up: BTreeMap<Role, BTreeSet<Role>>,
    /// `concept_up[c]` = all `c'` with `T ⊨ c ⊑ c'` (reflexive).
    concept_up: BTreeMap<ConceptExpr, BTreeSet<ConceptExpr>>,
    /// anonymous successor relation: `succ[r]` are the roles generating the
    /// children of an element whose incoming role is `r`.
    succ: BTreeMap<Role, Vec<Role>>,
}

fn closure<T: Ord + Clone>(nodes: &[T], edges: &BTreeMap<T, BTreeSet<T>>) -> BTreeMap<T, BTreeSet<T>> {
    // straightforward per-node DFS; signatures are small
    let mut up = BTreeMap::new();
    for n in nodes {
        let mut seen: BTreeSet<T> = BTreeSet::new();
        let mut stack = alloc::vec![n.clone()];
        while let Some(x) = stack.pop() {
            if seen.insert(x.clone()) {
                if let Some(next) = edges.get(&x) {
                    for y in next {
                        stack.push(y.clone());
                    }
                }
            }
        }
        up.insert(n.clone(), seen);
    }
    up
}

impl TBoxIndex {
    pub fn new(t: &Ontology) -> Self {
        Self::with_extra_signature(t, &BTreeSet::new(), &BTreeSet::new())
    }

    /// Index `t` together with predicates of a query that may be missing
    /// from the ontology signature.
    pub fn for_query(t: &Ontology, q: &ConjunctiveQuery) -> Self {
        Self::with_extra_signature(t, &q.unary_sig(), &q.binary_sig())
    }

    pub fn with_extra_signature(
        t: &Ontology,
        extra_unary: &BTreeSet<String>,
        extra_binary: &BTreeSet<String>,
    ) -> Self {
        let mut unary = t.unary_sig();
        unary.extend(extra_unary.iter().cloned());
        let mut binary = t.binary_sig();
        binary.extend(extra_binary.iter().cloned());

        let mut roles = Vec::new();
        for b in &binary {
            roles.push(Role::new(b.clone()));
            roles.push(Role::inverse(b.clone()));
        }

        // role graph: r ⊑ r' and inv(r) ⊑ inv(r') per role inclusion
        let mut redges: BTreeMap<Role, BTreeSet<Role>> = BTreeMap::new();
        for ax in &t.axioms {
            if let Axiom::RoleIncl(l, r) = ax {
                redges.entry(l.clone()).or_default().insert(r.clone());
                redges.entry(l.inv()).or_default().insert(r.inv());
            }
        }
        let role_up = closure(&roles, &redges);

        // concept graph: declared inclusions plus ∃r ⊑ ∃r' induced by roles
        let mut concepts: Vec<ConceptExpr> = unary.iter().cloned().map(ConceptExpr::Atomic).collect();
        for r in &roles {
            concepts.push(ConceptExpr::Exists(r.clone()));
        }
        let mut cedges: BTreeMap<ConceptExpr, BTreeSet<ConceptExpr>> = BTreeMap::new();
        for ax in &t.axioms {
            if let Axiom::ConceptIncl(l, r) = ax {
                cedges.entry(l.clone()).or_default().insert(r.clone());
            }
        }
        for (r, ups) in &role_up {
            for r2 in ups {
                if r != r2 {
                    cedges
                        .entry(ConceptExpr::Exists(r.clone()))
                        .or_default()
                        .insert(ConceptExpr::Exists(r2.clone()));
                }
            }
        }
        let concept_up = closure(&concepts, &cedges);

        let mut index = TBoxIndex {
            ontology: t.clone(),
            roles,
            unary,
            role_up,
            concept_up,
            succ: BTreeMap::new(),
        };
        let mut succ = BTreeMap::new();
        for r in index.roles.clone() {
            let required: BTreeSet<Role> = index
                .concepts_above(&ConceptExpr::Exists(r.inv()))
                .into_iter()
                .filter_map(|c| match c {
                    ConceptExpr::Exists(s) => Some(s),
                    ConceptExpr::Atomic(_) => None,
                })
                .collect();
            succ.insert(r.clone(), index.generated_among(&required, |s| index.entails_role(&r.inv(), s)));
        }
        index.succ = succ;
        index
    }

    /// `T ⊨ ∀x,y (r1(x,y) → r2(x,y))`.
    pub fn entails_role(&self, r1: &Role, r2: &Role) -> bool {
        if r1 == r2 {
            return true;
        }
        self.role_up.get(r1).is_some_and(|s| s.contains(r2))
    }

    /// `T ⊨ ∀x (c1(x) → c2(x))`.
    pub fn entails_concept(&self, c1: &ConceptExpr, c2: &ConceptExpr) -> bool {
        if c1 == c2 {
            return true;
        }
        self.concept_up.get(c1).is_some_and(|s| s.contains(c2))
    }

    /// Upward closure of a concept, including itself.
    pub fn concepts_above(&self, c: &ConceptExpr) -> BTreeSet<ConceptExpr> {
        self.concept_up.get(c).cloned().unwrap_or_else(|| {
            let mut s = BTreeSet::new();
            s.insert(c.clone());
            s
        })
    }

    /// All concepts entailing `c`, i.e. the downward closure. Used by the
    /// per-atom rewriting.
    pub fn concepts_below(&self, c: &ConceptExpr) -> Vec<ConceptExpr> {
        let mut out = Vec::new();
        for (d, ups) in &self.concept_up {
            if ups.contains(c) {
                out.push(d.clone());
            }
        }
        if !out.contains(c) {
            out.push(c.clone());
        }
        out
    }

    /// All roles entailing `r`.
    pub fn roles_below(&self, r: &Role) -> Vec<Role> {
        let mut out = Vec::new();
        for (s, ups) in &self.role_up {
            if ups.contains(r) {
                out.push(s.clone());
            }
        }
        if !out.contains(r) {
            out.push(r.clone());
        }
        out
    }

    pub fn all_roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn unary_names(&self) -> &BTreeSet<String> {
        &self.unary
    }

    /// Successor roles in the anonymous part: an element reached by `r`
    /// gets one fresh child per role in `succ(r)`.
    pub fn successors(&self, r: &Role) -> &[Role] {
        self.succ.get(r).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The subset of `required` that actually spawns children: roles whose
    /// existential requirement is not already witnessed, minimal under the
    /// role hierarchy (a generated child witnesses everything above its
    /// role).
    fn generated_among(
        &self,
        required: &BTreeSet<Role>,
        witnessed: impl Fn(&Role) -> bool,
    ) -> Vec<Role> {
        let unwitnessed: Vec<&Role> = required.iter().filter(|s| !witnessed(s)).collect();
        let mut out = Vec::new();
        for s in &unwitnessed {
            let mut minimal = true;
            for s2 in &unwitnessed {
                if s2 != s && self.entails_role(s2, s) && !self.entails_role(s, s2) {
                    minimal = false;
                    break;
                }
            }
            if minimal {
                out.push((*s).clone());
            }
        }
        out
    }

    /// Entailed concept set of an individual: base concepts from its facts,
    /// closed upward.
    pub fn individual_concepts(&self, a: &DataInstance, ind: &str) -> BTreeSet<ConceptExpr> {
        let mut base = Vec::new();
        for f in &a.facts {
            match f {
                Fact::Unary(p, x) if x == ind => base.push(ConceptExpr::Atomic(p.clone())),
                Fact::Binary(p, x, y) => {
                    if x == ind {
                        base.push(ConceptExpr::Exists(Role::new(p.clone())));
                    }
                    if y == ind {
                        base.push(ConceptExpr::Exists(Role::inverse(p.clone())));
                    }
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        for c in base {
            out.extend(self.concepts_above(&c));
        }
        out
    }

    /// Roles entailed on the ordered pair `(x, y)` of individuals.
    pub fn pair_roles(&self, a: &DataInstance, x: &str, y: &str) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        for f in &a.facts {
            if let Fact::Binary(p, s, t) = f {
                if s == x && t == y {
                    out.extend(self.roles_above(&Role::new(p.clone())));
                }
                if t == x && s == y {
                    out.extend(self.roles_above(&Role::inverse(p.clone())));
                }
            }
        }
        out
    }

    pub fn roles_above(&self, r: &Role) -> BTreeSet<Role> {
        self.role_up.get(r).cloned().unwrap_or_else(|| {
            let mut s = BTreeSet::new();
            s.insert(r.clone());
            s
        })
    }

    /// First-generation roles at an individual: entailed existential
    /// requirements without an asserted witness, minimal in the hierarchy.
    pub fn generated_at_individual(&self, a: &DataInstance, ind: &str) -> Vec<Role> {
        let required: BTreeSet<Role> = self
            .individual_concepts(a, ind)
            .into_iter()
            .filter_map(|c| match c {
                ConceptExpr::Exists(r) => Some(r),
                ConceptExpr::Atomic(_) => None,
            })
            .collect();
        let inds = a.inds();
        self.generated_among(&required, |s| {
            inds.iter().any(|b| self.pair_roles(a, ind, b).contains(s))
        })
    }

    /// Every role that can label an anonymous edge somewhere in the chase of
    /// some data instance over the indexed signature.
    pub fn generable_roles(&self) -> BTreeSet<Role> {
        // seed with the first-generation roles of every single-fact instance
        let mut frontier: BTreeSet<Role> = BTreeSet::new();
        for seed in self.seed_concepts() {
            let required: BTreeSet<Role> = self
                .concepts_above(&seed)
                .into_iter()
                .filter_map(|c| match c {
                    ConceptExpr::Exists(r) => Some(r),
                    ConceptExpr::Atomic(_) => None,
                })
                .collect();
            let witnessed = |s: &Role| match &seed {
                ConceptExpr::Exists(r) => self.entails_role(r, s),
                ConceptExpr::Atomic(_) => false,
            };
            frontier.extend(self.generated_among(&required, witnessed));
        }
        self.successor_closure(frontier)
    }

    /// Roles labelling anonymous edges in the chase of this instance.
    pub fn generated_roles_for(&self, a: &DataInstance) -> BTreeSet<Role> {
        let mut frontier: BTreeSet<Role> = BTreeSet::new();
        for ind in a.inds() {
            frontier.extend(self.generated_at_individual(a, &ind));
        }
        self.successor_closure(frontier)
    }

    fn successor_closure(&self, frontier: BTreeSet<Role>) -> BTreeSet<Role> {
        let mut all = BTreeSet::new();
        let mut stack: Vec<Role> = frontier.into_iter().collect();
        while let Some(r) = stack.pop() {
            if all.insert(r.clone()) {
                for s in self.successors(&r) {
                    stack.push(s.clone());
                }
            }
        }
        all
    }

    fn seed_concepts(&self) -> Vec<ConceptExpr> {
        let mut seeds: Vec<ConceptExpr> =
            self.unary.iter().cloned().map(ConceptExpr::Atomic).collect();
        for r in &self.roles {
            seeds.push(ConceptExpr::Exists(r.clone()));
        }
        seeds
    }

    /// Depth of the ontology: longest generable word over all instances.
    pub fn depth(&self) -> Depth {
        let start: BTreeSet<Role> = {
            let mut s = BTreeSet::new();
            for seed in self.seed_concepts() {
                let required: BTreeSet<Role> = self
                    .concepts_above(&seed)
                    .into_iter()
                    .filter_map(|c| match c {
                        ConceptExpr::Exists(r) => Some(r),
                        ConceptExpr::Atomic(_) => None,
                    })
                    .collect();
                let witnessed = |x: &Role| match &seed {
                    ConceptExpr::Exists(r) => self.entails_role(r, x),
                    ConceptExpr::Atomic(_) => false,
                };
                s.extend(self.generated_among(&required, witnessed));
            }
            s
        };
        if start.is_empty() {
            return Depth::Finite(0);
        }
        // longest path in the successor graph from any start role;
        // a reachable cycle means depth ω
        let mut longest: BTreeMap<Role, usize> = BTreeMap::new();
        let mut on_stack: BTreeSet<Role> = BTreeSet::new();
        let mut cyclic = false;
        fn visit(
            idx: &TBoxIndex,
            r: &Role,
            longest: &mut BTreeMap<Role, usize>,
            on_stack: &mut BTreeSet<Role>,
            cyclic: &mut bool,
        ) -> usize {
            if *cyclic {
                return 0;
            }
            if let Some(&d) = longest.get(r) {
                return d;
            }
            if !on_stack.insert(r.clone()) {
                *cyclic = true;
                return 0;
            }
            let mut best = 0;
            for s in idx.successors(r).to_vec() {
                let d = visit(idx, &s, longest, on_stack, cyclic);
                if *cyclic {
                    return 0;
                }
                best = best.max(d);
            }
            on_stack.remove(r);
            longest.insert(r.clone(), best + 1);
            best + 1
        }
        let mut best = 0;
        for r in &start {
            let d = visit(self, r, &mut longest, &mut on_stack, &mut cyclic);
            if cyclic {
                return Depth::Omega;
            }
            best = best.max(d);
        }
        Depth::Finite(best)
    }

    /// Satisfiability of `(T, A)`. Checks every disjointness axiom against
    /// the entailed concept sets of individuals, the entailed role sets of
    /// asserted pairs, and the types of anonymous elements reachable in any
    /// chase over this instance.
    pub fn is_consistent(&self, a: &DataInstance) -> bool {
        let disj_c: Vec<(&ConceptExpr, &ConceptExpr)> = self
            .ontology
            .axioms
            .iter()
            .filter_map(|ax| match ax {
                Axiom::ConceptDisj(l, r) => Some((l, r)),
                _ => None,
            })
            .collect();
        let disj_r: Vec<(&Role, &Role)> = self
            .ontology
            .axioms
            .iter()
            .filter_map(|ax| match ax {
                Axiom::RoleDisj(l, r) => Some((l, r)),
                _ => None,
            })
            .collect();
        if disj_c.is_empty() && disj_r.is_empty() {
            return true;
        }
        let inds = a.inds();
        for ind in &inds {
            let types = self.individual_concepts(a, ind);
            for (l, r) in &disj_c {
                if types.contains(l) && types.contains(r) {
                    return false;
                }
            }
        }
        for x in &inds {
            for y in &inds {
                let roles = self.pair_roles(a, x, y);
                if roles.is_empty() {
                    continue;
                }
                for (l, r) in &disj_r {
                    if roles.contains(l) && roles.contains(r) {
                        return false;
                    }
                }
            }
        }
        // anonymous part: the type of an element is fixed by its incoming role
        for g in self.generated_roles_for(a) {
            let types = self.concepts_above(&ConceptExpr::Exists(g.inv()));
            for (l, r) in &disj_c {
                if types.contains(l) && types.contains(r) {
                    return false;
                }
            }
            let edge = self.roles_above(&g);
            for (l, r) in &disj_r {
                if edge.contains(l) && edge.contains(r) {
                    return false;
                }
            }
        }
        true
    }
}

/// Convenience wrappers matching the operation names used elsewhere.
pub fn entails_role(idx: &TBoxIndex, r1: &Role, r2: &Role) -> bool {
    idx.entails_role(r1, r2)
}

pub fn entails_concept(idx: &TBoxIndex, c1: &ConceptExpr, c2: &ConceptExpr) -> bool {
    idx.entails_concept(c1, c2)
}

pub fn ontology_depth(t: &Ontology) -> Depth {
    TBoxIndex::new(t).depth()
}

pub fn is_consistent(t: &Ontology, a: &DataInstance) -> bool {
    TBoxIndex::new(t).is_consistent(a)
}

/// Signature-extended index for answering `q` over `T`: the usual entry
/// point for the compilers.
pub fn index_for(t: &Ontology, q: &ConjunctiveQuery) -> TBoxIndex {
    TBoxIndex::for_query(t, q)
}

/// `T, A ⊨ A(ind)` for a unary predicate.
pub fn entailed_unary_fact(idx: &TBoxIndex, a: &DataInstance, pred: &str, ind: &str) -> bool {
    idx.individual_concepts(a, ind).contains(&ConceptExpr::Atomic(pred.into()))
}

/// `T, A ⊨ r(x, y)` for individuals.
pub fn entailed_role_fact(idx: &TBoxIndex, a: &DataInstance, r: &Role, x: &str, y: &str) -> bool {
    idx.pair_roles(a, x, y).contains(r)
}

/// Atoms this query mentions; used to seed indexes from query signatures.
pub fn query_atom_concept(atom: &Atom) -> Option<ConceptExpr> {
    match atom {
        Atom::Unary(p, _) => Some(ConceptExpr::Atomic(p.clone())),
        Atom::Binary(_, _, _) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_data, parse_ontology};

    fn kb0_t() -> Ontology {
        parse_ontology(
            "P(x,y) -> R(x,y)\n\
             P(x,y) -> U(y,x)\n\
             A(x) -> exists P(x,_)\n\
             exists P(_,x) -> exists S(x,_)\n\
             exists S(_,x) -> exists R(x,_)\n\
             exists S(_,x) -> exists T(_,x)\n\
             exists P(_,x) -> B(x)\n",
        )
        .unwrap()
    }

    #[test]
    fn role_entailment() {
        let idx = TBoxIndex::new(&kb0_t());
        assert!(idx.entails_role(&Role::new("P"), &Role::new("R")));
        assert!(idx.entails_role(&Role::new("P"), &Role::inverse("U")));
        assert!(idx.entails_role(&Role::inverse("P"), &Role::new("U")));
        assert!(idx.entails_role(&Role::new("S"), &Role::new("S")));
        assert!(!idx.entails_role(&Role::new("R"), &Role::new("P")));
    }

    #[test]
    fn concept_entailment() {
        let idx = TBoxIndex::new(&kb0_t());
        assert!(idx.entails_concept(
            &ConceptExpr::Exists(Role::inverse("P")),
            &ConceptExpr::Exists(Role::new("S"))
        ));
        assert!(idx.entails_concept(&ConceptExpr::Atomic("A".into()), &ConceptExpr::Atomic("A".into())));
        // A reaches ∃P, ∃R, ∃U⁻ but never B
        assert!(idx.entails_concept(&ConceptExpr::Atomic("A".into()), &ConceptExpr::Exists(Role::new("R"))));
        assert!(idx
            .entails_concept(&ConceptExpr::Atomic("A".into()), &ConceptExpr::Exists(Role::inverse("U"))));
        assert!(!idx.entails_concept(&ConceptExpr::Atomic("A".into()), &ConceptExpr::Atomic("B".into())));
    }

    #[test]
    fn depth_of_kb0_is_three() {
        assert_eq!(ontology_depth(&kb0_t()), Depth::Finite(3));
    }

    #[test]
    fn empty_ontology_has_depth_zero() {
        assert_eq!(ontology_depth(&Ontology::default()), Depth::Finite(0));
    }

    #[test]
    fn looping_generator_is_omega() {
        let t = parse_ontology("A(x) -> exists P(x,_)\nexists P(_,x) -> exists P(x,_)\n").unwrap();
        assert_eq!(ontology_depth(&t), Depth::Omega);
    }

    #[test]
    fn consistency() {
        let t = kb0_t();
        let a = parse_data("A(a). R(a,c).").unwrap();
        assert!(is_consistent(&t, &a));
        let t2 = parse_ontology("A(x), B(x) -> false\n").unwrap();
        let bad = parse_data("A(a). B(a).").unwrap();
        assert!(!is_consistent(&t2, &bad));
        let ok = parse_data("A(a). B(b).").unwrap();
        assert!(is_consistent(&t2, &ok));
    }

    #[test]
    fn anonymous_inconsistency_detected() {
        // the generated child of a P-edge is forced into both B and C
        let t = parse_ontology(
            "A(x) -> exists P(x,_)\n\
             exists P(_,x) -> B(x)\n\
             exists P(_,x) -> C(x)\n\
             B(x), C(x) -> false\n",
        )
        .unwrap();
        let a = parse_data("A(a).").unwrap();
        assert!(!is_consistent(&t, &a));
        // but a KB that never triggers the generator is fine
        let b = parse_data("D(a).").unwrap();
        assert!(is_consistent(&t, &b));
    }

    #[test]
    fn depth_bound_respects_size() {
        let t = kb0_t();
        if let Depth::Finite(d) = ontology_depth(&t) {
            assert!(d <= 2 * t.size());
        } else {
            panic!("kb0 has finite depth");
        }
    }
}
