//! Shared helpers for the integration tests: seeded random Boolean
//! programs and exhaustive assignment enumeration.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use owlql_core::boolprog::{Circuit, Gate, Hgp, Label, Literal, Nbp, NbpEdge, Skeleton};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn var(i: usize) -> String {
    format!("x{i}")
}

/// Every assignment over the given variables.
pub fn all_assignments(vars: &BTreeSet<String>) -> Vec<BTreeMap<String, bool>> {
    let vs: Vec<&String> = vars.iter().collect();
    let mut out = Vec::new();
    for mask in 0..(1u32 << vs.len()) {
        let mut m = BTreeMap::new();
        for (i, v) in vs.iter().enumerate() {
            m.insert((*v).clone(), mask & (1 << i) != 0);
        }
        out.push(m);
    }
    out
}

pub fn random_label(r: &mut ChaCha8Rng, nvars: usize, allow_negation: bool) -> Label<String> {
    match r.gen_range(0..10) {
        0 => Label::falsity(),
        1 | 2 => Label::truth(),
        _ => {
            let k = r.gen_range(1..=2);
            let lits = (0..k)
                .map(|_| Literal {
                    var: var(r.gen_range(0..nvars)),
                    negated: allow_negation && r.gen_bool(0.3),
                })
                .collect();
            Label::conj(lits)
        }
    }
}

pub fn random_nbp(r: &mut ChaCha8Rng, max_vertices: usize, nvars: usize, monotone: bool) -> Nbp<String> {
    let n = r.gen_range(2..=max_vertices);
    let mut edges = Vec::new();
    let m = r.gen_range(1..=2 * n);
    for _ in 0..m {
        edges.push(NbpEdge {
            from: r.gen_range(0..n),
            to: r.gen_range(0..n),
            label: random_label(r, nvars, !monotone),
        });
    }
    Nbp { vertices: n, edges, s: 0, t: n - 1 }
}

/// Random semi-unbounded circuit: AND fan-in two, OR unbounded, literals
/// at the inputs.
pub fn random_semi_unbounded_circuit(
    r: &mut ChaCha8Rng,
    max_gates: usize,
    nvars: usize,
    monotone: bool,
) -> Circuit<String> {
    let mut c = Circuit::new();
    let n_inputs = r.gen_range(1..=nvars);
    for i in 0..n_inputs {
        c.push(Gate::Input(Literal {
            var: var(i),
            negated: !monotone && r.gen_bool(0.25),
        }));
    }
    if r.gen_bool(0.2) {
        c.push(Gate::Const(r.gen_bool(0.5)));
    }
    while c.gates.len() < max_gates {
        let avail = c.gates.len();
        if r.gen_bool(0.5) {
            let a = r.gen_range(0..avail);
            let b = r.gen_range(0..avail);
            c.push(Gate::And(vec![a, b]));
        } else {
            let k = r.gen_range(1..=3.min(avail));
            let mut ins: Vec<usize> = Vec::new();
            for _ in 0..k {
                ins.push(r.gen_range(0..avail));
            }
            ins.sort();
            ins.dedup();
            c.push(Gate::Or(ins));
        }
    }
    c.output = c.gates.len() - 1;
    c.pruned()
}

/// Random tree skeleton with `edges` edges.
pub fn random_tree(r: &mut ChaCha8Rng, edges: usize) -> Skeleton {
    let vertices = edges + 1;
    let mut es = Vec::new();
    for v in 1..vertices {
        let p = r.gen_range(0..v);
        es.push((p, v));
    }
    Skeleton { vertices, edges: es }
}

/// Random valid THGP: random tree, random labels, random generalized
/// intervals repaired until their boundary vertices have degree two.
pub fn random_thgp(r: &mut ChaCha8Rng, max_edges: usize, nvars: usize, monotone: bool) -> Hgp<String> {
    let n_edges = r.gen_range(1..=max_edges);
    let sk = random_tree(r, n_edges);
    let labels: Vec<Label<String>> =
        (0..sk.edges.len()).map(|_| random_label(r, nvars, !monotone)).collect();
    let n_hyper = r.gen_range(0..=sk.edges.len() + 1);
    let mut hyperedges = Vec::new();
    for _ in 0..n_hyper {
        let k = r.gen_range(1..=3);
        let terminals: Vec<usize> = (0..k).map(|_| r.gen_range(0..sk.vertices)).collect();
        if let Some(h) = valid_interval(&sk, &terminals) {
            if !h.is_empty() {
                hyperedges.push(h);
            }
        }
    }
    hyperedges.sort();
    hyperedges.dedup();
    let p = Hgp { labels, hyperedges, skeleton: Some(sk) };
    assert!(p.is_valid_thgp(), "generator must produce valid programs");
    p
}

/// Generalized interval of the terminal set, expanded at junctions until
/// every boundary vertex has degree 2.
pub fn valid_interval(sk: &Skeleton, terminals: &[usize]) -> Option<BTreeSet<usize>> {
    // parent array from vertex 0
    let mut parent: Vec<Option<usize>> = vec![None; sk.vertices];
    let mut order = vec![0usize];
    let mut seen = vec![false; sk.vertices];
    seen[0] = true;
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        i += 1;
        for (e, &(a, b)) in sk.edges.iter().enumerate() {
            let _ = e;
            let w = if a == v { b } else if b == v { a } else { continue };
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                order.push(w);
            }
        }
    }
    let depth = |mut v: usize| {
        let mut d = 0;
        while let Some(p) = parent[v] {
            v = p;
            d += 1;
        }
        d
    };
    let edge_between = |a: usize, b: usize| {
        sk.edges.iter().position(|&(x, y)| (x == a && y == b) || (x == b && y == a)).unwrap()
    };
    let mut set: BTreeSet<usize> = BTreeSet::new();
    for i in 0..terminals.len() {
        for j in i + 1..terminals.len() {
            let (mut a, mut b) = (terminals[i], terminals[j]);
            let (mut da, mut db) = (depth(a), depth(b));
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
    // repair junction boundaries
    loop {
        let mut grew = false;
        for v in 0..sk.vertices {
            let inc = sk.incident(v);
            let inside = inc.iter().filter(|e| set.contains(e)).count();
            if inside > 0 && inside < inc.len() && inc.len() != 2 {
                for e in inc {
                    if set.insert(e) {
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }
    Some(set)
}
