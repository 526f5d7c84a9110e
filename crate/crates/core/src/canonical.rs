//! Materialised canonical models (the chase) and homomorphism search over
//! them; together they form the brute-force certain-answer oracle that every
//! other engine is tested against.
//!
//! Elements are either individuals or words `a·r1…rn` of roles hanging off
//! an individual. A word extends by `r'` when the type induced by `inv(r)`
//! requires `∃r'`, the requirement is not witnessed by the incoming edge,
//! and `r'` is minimal in the role hierarchy among such requirements; the
//! first letter additionally requires the absence of an asserted witness.
//! Every word therefore satisfies the usual generating side conditions of
//! the chase, and the model embeds into every model of the KB.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::reasoner::{Depth, TBoxIndex};
use crate::syntax::{Atom, ConceptExpr, ConjunctiveQuery, DataInstance, Fact, Ontology, Role};

/// Identifier of a model element; indexes into [`CanonicalModel::elements`].
pub type ElemId = usize;

/// An individual (empty word) or an anonymous element `base·word`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChaseElement {
    pub base: String,
    pub word: Vec<Role>,
}

impl ChaseElement {
    pub fn is_individual(&self) -> bool {
        self.word.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = self.base.clone();
        for r in &self.word {
            s.push('.');
            s.push_str(&format!("{r}"));
        }
        s
    }
}

/// A depth-bounded materialisation of the chase.
#[derive(Clone, Debug)]
pub struct CanonicalModel {
    pub elements: Vec<ChaseElement>,
    /// `unary_ext[A]` = elements satisfying `A`.
    pub unary_ext: BTreeMap<String, BTreeSet<ElemId>>,
    /// forward adjacency: `out[e][P]` = elements `f` with `P(e,f)`.
    pub out: BTreeMap<ElemId, BTreeMap<String, BTreeSet<ElemId>>>,
    /// backward adjacency: `inn[e][P]` = elements `f` with `P(f,e)`.
    pub inn: BTreeMap<ElemId, BTreeMap<String, BTreeSet<ElemId>>>,
    pub depth_bound: usize,
    /// true iff the ontology depth is finite and at most `depth_bound`,
    /// so the model is the whole chase.
    pub complete: bool,
}

impl CanonicalModel {
    pub fn element_id(&self, e: &ChaseElement) -> Option<ElemId> {
        self.elements.iter().position(|x| x == e)
    }

    pub fn individuals(&self) -> impl Iterator<Item = (ElemId, &ChaseElement)> {
        self.elements.iter().enumerate().filter(|(_, e)| e.is_individual())
    }

    pub fn in_unary(&self, pred: &str, e: ElemId) -> bool {
        self.unary_ext.get(pred).is_some_and(|s| s.contains(&e))
    }

    pub fn has_edge(&self, pred: &str, x: ElemId, y: ElemId) -> bool {
        self.out.get(&x).and_then(|m| m.get(pred)).is_some_and(|s| s.contains(&y))
    }

    fn add_edge(&mut self, pred: &str, x: ElemId, y: ElemId) {
        self.out.entry(x).or_default().entry(pred.to_string()).or_default().insert(y);
        self.inn.entry(y).or_default().entry(pred.to_string()).or_default().insert(x);
    }

    /// Anonymous elements have exactly one parent: their word minus the
    /// last role.
    pub fn parent(&self, e: ElemId) -> Option<ElemId> {
        let el = &self.elements[e];
        if el.is_individual() {
            return None;
        }
        let mut w = el.word.clone();
        w.pop();
        self.element_id(&ChaseElement { base: el.base.clone(), word: w })
    }
}

/// Inconsistent input to an operation requiring a consistent KB.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InconsistentKb;

/// Materialise the chase of `(T, A)` down to `depth_bound`.
pub fn build_canonical(
    idx: &TBoxIndex,
    a: &DataInstance,
    depth_bound: usize,
) -> Result<CanonicalModel, InconsistentKb> {
    if !idx.is_consistent(a) {
        return Err(InconsistentKb);
    }
    let inds: Vec<String> = a.inds().into_iter().collect();
    let mut model = CanonicalModel {
        elements: Vec::new(),
        unary_ext: BTreeMap::new(),
        out: BTreeMap::new(),
        inn: BTreeMap::new(),
        depth_bound,
        complete: match idx.depth() {
            Depth::Finite(d) => d <= depth_bound,
            Depth::Omega => false,
        },
    };
    let mut ids: BTreeMap<ChaseElement, ElemId> = BTreeMap::new();
    fn intern(
        ids: &mut BTreeMap<ChaseElement, ElemId>,
        model: &mut CanonicalModel,
        e: ChaseElement,
    ) -> ElemId {
        if let Some(&i) = ids.get(&e) {
            return i;
        }
        let i = model.elements.len();
        model.elements.push(e.clone());
        ids.insert(e, i);
        i
    }

    for ind in &inds {
        let id = intern(&mut ids, &mut model, ChaseElement { base: ind.clone(), word: vec![] });
        for c in idx.individual_concepts(a, ind) {
            if let ConceptExpr::Atomic(p) = c {
                model.unary_ext.entry(p).or_default().insert(id);
            }
        }
    }
    // asserted pairs, closed under the role hierarchy
    for x in &inds {
        for y in &inds {
            let roles = idx.pair_roles(a, x, y);
            if roles.is_empty() {
                continue;
            }
            let xi = ids[&ChaseElement { base: x.clone(), word: vec![] }];
            let yi = ids[&ChaseElement { base: y.clone(), word: vec![] }];
            for r in roles {
                if !r.inverted {
                    model.add_edge(&r.name, xi, yi);
                }
            }
        }
    }
    // anonymous part, breadth-first so parents exist before children
    let mut queue: Vec<ElemId> = Vec::new();
    if depth_bound > 0 {
        for ind in &inds {
            let pid = ids[&ChaseElement { base: ind.clone(), word: vec![] }];
            for r in idx.generated_at_individual(a, ind) {
                let child = ChaseElement { base: ind.clone(), word: vec![r] };
                let cid = intern(&mut ids, &mut model, child);
                attach(idx, &mut model, pid, cid);
                queue.push(cid);
            }
        }
    }
    while let Some(eid) = queue.pop() {
        let el = model.elements[eid].clone();
        if el.word.len() >= depth_bound {
            continue;
        }
        let last = el.word.last().expect("anonymous element").clone();
        for r in idx.successors(&last).to_vec() {
            let mut w = el.word.clone();
            w.push(r);
            let cid = intern(&mut ids, &mut model, ChaseElement { base: el.base.clone(), word: w });
            attach(idx, &mut model, eid, cid);
            queue.push(cid);
        }
    }
    Ok(model)
}

/// Label a fresh anonymous child `cid` of `pid` with its concept/role types.
fn attach(idx: &TBoxIndex, model: &mut CanonicalModel, pid: ElemId, cid: ElemId) {
    let gen_role = model.elements[cid].word.last().expect("child").clone();
    for c in idx.concepts_above(&ConceptExpr::Exists(gen_role.inv())) {
        if let ConceptExpr::Atomic(p) = c {
            model.unary_ext.entry(p).or_default().insert(cid);
        }
    }
    for p in idx.roles_above(&gen_role) {
        if !p.inverted {
            model.add_edge(&p.name, pid, cid);
        } else {
            model.add_edge(&p.name, cid, pid);
        }
    }
}

/// The canonical model of `(T ∪ {A_r(x) → ∃y r(x,y)}, {A_r(a)})`, used to
/// validate tree witnesses. The marker predicate is kept out of the result's
/// signature maps, so the model looks like a bare generator tree.
pub fn build_generator_model(t: &Ontology, generator: &Role, depth_bound: usize) -> CanonicalModel {
    let mut t2 = t.clone();
    let marker = fresh_marker(t);
    t2.axioms.push(crate::syntax::Axiom::ConceptIncl(
        ConceptExpr::Atomic(marker.clone()),
        ConceptExpr::Exists(generator.clone()),
    ));
    let idx = TBoxIndex::new(&t2);
    let a = DataInstance::new([Fact::Unary(marker.clone(), "a".to_string())]);
    let mut m = build_canonical(&idx, &a, depth_bound).expect("generator KB is consistent");
    m.unary_ext.remove(&marker);
    m
}

fn fresh_marker(t: &Ontology) -> String {
    let used = t.unary_sig();
    let mut name = "GEN".to_string();
    while used.contains(&name) {
        name.push('_');
    }
    name
}

/// All homomorphisms from `q` into `m` extending `bind`, as total maps.
/// Exhaustive backtracking; variables are tried in order of decreasing
/// degree in the query graph, candidates in element-creation order.
pub fn find_homomorphisms(
    q: &ConjunctiveQuery,
    m: &CanonicalModel,
    bind: &BTreeMap<String, ElemId>,
) -> Vec<BTreeMap<String, ElemId>> {
    let vars = order_vars(q);
    let mut partial: BTreeMap<String, ElemId> = bind.clone();
    let mut out = Vec::new();
    // pre-check atoms fully bound by `bind`
    search(q, m, &vars, 0, &mut partial, &mut out);
    out
}

fn order_vars(q: &ConjunctiveQuery) -> Vec<String> {
    let mut degree: BTreeMap<String, usize> = BTreeMap::new();
    for v in q.vars() {
        degree.insert(v, 0);
    }
    for (x, y) in q.graph_edges() {
        *degree.get_mut(&x).unwrap() += 1;
        *degree.get_mut(&y).unwrap() += 1;
    }
    let mut vars = q.vars();
    vars.sort_by(|a, b| degree[b].cmp(&degree[a]).then(a.cmp(b)));
    vars
}

fn consistent_so_far(
    q: &ConjunctiveQuery,
    m: &CanonicalModel,
    partial: &BTreeMap<String, ElemId>,
    just_bound: &str,
) -> bool {
    for at in &q.atoms {
        if !at.mentions(just_bound) {
            continue;
        }
        match at {
            Atom::Unary(p, x) => {
                if let Some(&e) = partial.get(x) {
                    if !m.in_unary(p, e) {
                        return false;
                    }
                }
            }
            Atom::Binary(p, x, y) => {
                if let (Some(&ex), Some(&ey)) = (partial.get(x), partial.get(y)) {
                    if !m.has_edge(p, ex, ey) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn search(
    q: &ConjunctiveQuery,
    m: &CanonicalModel,
    vars: &[String],
    i: usize,
    partial: &mut BTreeMap<String, ElemId>,
    out: &mut Vec<BTreeMap<String, ElemId>>,
) {
    if i == vars.len() {
        out.push(partial.clone());
        return;
    }
    let v = &vars[i];
    if partial.contains_key(v) {
        if consistent_so_far(q, m, partial, v) {
            search(q, m, vars, i + 1, partial, out);
        }
        return;
    }
    // candidate narrowing: use an adjacent already-bound variable if any
    let candidates = candidates_for(q, m, partial, v);
    for e in candidates {
        partial.insert(v.clone(), e);
        if consistent_so_far(q, m, partial, v) {
            search(q, m, vars, i + 1, partial, out);
        }
        partial.remove(v);
    }
}

fn candidates_for(
    q: &ConjunctiveQuery,
    m: &CanonicalModel,
    partial: &BTreeMap<String, ElemId>,
    v: &str,
) -> Vec<ElemId> {
    for at in &q.atoms {
        if let Atom::Binary(p, x, y) = at {
            if x == v && x != y {
                if let Some(&ey) = partial.get(y) {
                    let set = m.inn.get(&ey).and_then(|mm| mm.get(p));
                    return set.map(|s| s.iter().copied().collect()).unwrap_or_default();
                }
            }
            if y == v && x != y {
                if let Some(&ex) = partial.get(x) {
                    let set = m.out.get(&ex).and_then(|mm| mm.get(p));
                    return set.map(|s| s.iter().copied().collect()).unwrap_or_default();
                }
            }
        }
    }
    (0..m.elements.len()).collect()
}

/// Word-length bound guaranteeing completeness of the brute-force oracle:
/// any homomorphism can be assumed to use words no longer than this.
pub fn answer_depth_bound(t: &Ontology, q: &ConjunctiveQuery) -> usize {
    2 * t.size() + q.size()
}

/// Certain answers by materialising the chase and searching homomorphisms.
/// Inconsistent KBs yield every tuple over the individuals.
pub fn certain_answers_brute(
    t: &Ontology,
    a: &DataInstance,
    q: &ConjunctiveQuery,
) -> BTreeSet<Vec<String>> {
    let idx = TBoxIndex::for_query(t, q);
    certain_answers_brute_with(&idx, a, q, answer_depth_bound(t, q))
}

pub fn certain_answers_brute_with(
    idx: &TBoxIndex,
    a: &DataInstance,
    q: &ConjunctiveQuery,
    depth_bound: usize,
) -> BTreeSet<Vec<String>> {
    let inds: Vec<String> = a.inds().into_iter().collect();
    if !idx.is_consistent(a) {
        return all_tuples(&inds, q.answer_vars.len());
    }
    let bound = match idx.depth() {
        Depth::Finite(d) => d.min(depth_bound),
        Depth::Omega => depth_bound,
    };
    let m = build_canonical(idx, a, bound).expect("consistency checked");
    let mut out = BTreeSet::new();
    for h in find_homomorphisms(q, &m, &BTreeMap::new()) {
        let tuple: Vec<String> = q
            .answer_vars
            .iter()
            .map(|v| m.elements[h[v]].clone())
            .filter(|e| e.is_individual())
            .map(|e| e.base)
            .collect();
        if tuple.len() == q.answer_vars.len() {
            out.insert(tuple);
        }
    }
    out
}

pub fn all_tuples(inds: &[String], n: usize) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    if n == 0 {
        if !inds.is_empty() || n == 0 {
            out.insert(Vec::new());
        }
        return out;
    }
    if inds.is_empty() {
        return out;
    }
    let mut stack = vec![Vec::new()];
    while let Some(cur) = stack.pop() {
        if cur.len() == n {
            out.insert(cur);
            continue;
        }
        for i in inds {
            let mut next = cur.clone();
            next.push(i.clone());
            stack.push(next);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_data, parse_ontology, parse_query};

    fn kb0() -> (Ontology, DataInstance, ConjunctiveQuery) {
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
        let a = parse_data("A(a). R(a,c).").unwrap();
        let q = parse_query("q(x1,x2) :- P(y2,y1), S(y1,y3), R(y2,x1), S(y4,y3), T(y5,y3), U(y4,x2)")
            .unwrap();
        (t, a, q)
    }

    fn elem(base: &str, word: &[&str]) -> ChaseElement {
        ChaseElement {
            base: base.into(),
            word: word
                .iter()
                .map(|w| {
                    if let Some(name) = w.strip_suffix('-') {
                        Role::inverse(name)
                    } else {
                        Role::new(*w)
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn kb0_chase_has_expected_anonymous_elements() {
        let (t, a, q) = kb0();
        let idx = TBoxIndex::for_query(&t, &q);
        let m = build_canonical(&idx, &a, 4).unwrap();
        let mut anon: Vec<String> =
            m.elements.iter().filter(|e| !e.is_individual()).map(|e| e.render()).collect();
        anon.sort();
        assert_eq!(anon, vec!["a.P", "a.P.S", "a.P.S.R", "a.P.S.T-"]);
        assert!(m.complete);
        // aP is in the extension of B
        let ap = m.element_id(&elem("a", &["P"])).unwrap();
        assert!(m.in_unary("B", ap));
    }

    #[test]
    fn kb0_edges_out_of_a() {
        let (t, a, q) = kb0();
        let idx = TBoxIndex::for_query(&t, &q);
        let m = build_canonical(&idx, &a, 4).unwrap();
        let a_id = m.element_id(&elem("a", &[])).unwrap();
        let c_id = m.element_id(&elem("c", &[])).unwrap();
        let ap = m.element_id(&elem("a", &["P"])).unwrap();
        assert!(m.has_edge("R", a_id, c_id));
        assert!(m.has_edge("P", a_id, ap));
        assert!(m.has_edge("R", a_id, ap));
        assert!(m.has_edge("U", ap, a_id));
        assert!(!m.has_edge("P", a_id, c_id));
    }

    #[test]
    fn empty_ontology_chase_is_the_data() {
        let t = Ontology::default();
        let a = parse_data("A(a). P(a,b).").unwrap();
        let idx = TBoxIndex::new(&t);
        let m = build_canonical(&idx, &a, 5).unwrap();
        assert_eq!(m.elements.len(), 2);
        assert!(m.complete);
    }

    #[test]
    fn generator_model_single_child() {
        let t = Ontology::default();
        let m = build_generator_model(&t, &Role::new("P"), 3);
        assert_eq!(m.elements.len(), 2);
        let a_id = m.element_id(&elem("a", &[])).unwrap();
        let ap = m.element_id(&elem("a", &["P"])).unwrap();
        assert!(m.has_edge("P", a_id, ap));
    }

    #[test]
    fn kb0_homomorphism_matches_known_embedding() {
        let (t, a, q) = kb0();
        let idx = TBoxIndex::for_query(&t, &q);
        let m = build_canonical(&idx, &a, 4).unwrap();
        let mut bind = BTreeMap::new();
        bind.insert("x1".to_string(), m.element_id(&elem("c", &[])).unwrap());
        bind.insert("x2".to_string(), m.element_id(&elem("a", &[])).unwrap());
        let homs = find_homomorphisms(&q, &m, &bind);
        let expected: BTreeMap<String, ElemId> = [
            ("x1", elem("c", &[])),
            ("x2", elem("a", &[])),
            ("y1", elem("a", &["P"])),
            ("y2", elem("a", &[])),
            ("y3", elem("a", &["P", "S"])),
            ("y4", elem("a", &["P"])),
            ("y5", elem("a", &["P", "S", "T-"])),
        ]
        .into_iter()
        .map(|(v, e)| (v.to_string(), m.element_id(&e).unwrap()))
        .collect();
        assert!(homs.contains(&expected));
    }

    #[test]
    fn kb0_certain_answers() {
        let (t, a, q) = kb0();
        let ans = certain_answers_brute(&t, &a, &q);
        let expected: BTreeSet<Vec<String>> =
            [vec!["c".to_string(), "a".to_string()]].into_iter().collect();
        assert_eq!(ans, expected);
    }

    #[test]
    fn boolean_query_over_empty_data() {
        let t = parse_ontology("A(x) -> exists P(x,_)\n").unwrap();
        let a = DataInstance::default();
        let q = parse_query("q() :- A(y)").unwrap();
        assert!(certain_answers_brute(&t, &a, &q).is_empty());
    }

    #[test]
    fn inconsistent_kb_returns_all_tuples() {
        let t = parse_ontology("A(x), B(x) -> false\n").unwrap();
        let a = parse_data("A(a). B(a). C(b).").unwrap();
        let q = parse_query("q(x) :- C(x)").unwrap();
        let ans = certain_answers_brute(&t, &a, &q);
        assert_eq!(ans.len(), 2);
    }

    #[test]
    fn single_atom_homomorphism() {
        let t = Ontology::default();
        let a = parse_data("A(a). B(b).").unwrap();
        let q = parse_query("q(x) :- A(x)").unwrap();
        let ans = certain_answers_brute(&t, &a, &q);
        assert_eq!(ans, [vec!["a".to_string()]].into_iter().collect());
    }

    #[test]
    fn anonymous_forest_has_unique_parents() {
        let (t, a, q) = kb0();
        let idx = TBoxIndex::for_query(&t, &q);
        let m = build_canonical(&idx, &a, 4).unwrap();
        for (i, e) in m.elements.iter().enumerate() {
            if !e.is_individual() {
                assert!(m.parent(i).is_some());
            }
        }
    }

    #[test]
    fn words_satisfy_generating_side_conditions() {
        let (t, a, q) = kb0();
        let idx = TBoxIndex::for_query(&t, &q);
        let m = build_canonical(&idx, &a, 4).unwrap();
        for e in &m.elements {
            if e.word.is_empty() {
                continue;
            }
            let first = &e.word[0];
            assert!(idx
                .individual_concepts(&a, &e.base)
                .contains(&ConceptExpr::Exists(first.clone())));
            for b in a.inds() {
                assert!(!idx.pair_roles(&a, &e.base, &b).contains(first));
            }
            for i in 0..e.word.len() - 1 {
                let r = &e.word[i];
                let r2 = &e.word[i + 1];
                assert!(idx
                    .entails_concept(&ConceptExpr::Exists(r.inv()), &ConceptExpr::Exists(r2.clone())));
                assert!(!idx.entails_role(&r.inv(), r2));
            }
        }
    }
}
