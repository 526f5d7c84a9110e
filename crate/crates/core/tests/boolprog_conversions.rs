//! Exhaustive differential tests for the Boolean program conversions:
//! every translation must compute the same function as its source on all
//! assignments, and must preserve monotonicity.

mod common;

use common::*;
use owlql_core::boolprog::convert::{interval_hgp_vertex_count, to_semi_unbounded};
use owlql_core::boolprog::{
    circuit_to_thgp, nbp_to_circuit, nbp_to_interval_hgp, thgp_to_circuit, Gate, Label, Literal,
    Nbp, NbpEdge,
};

#[test]
fn nbp_to_circuit_is_equivalent() {
    for seed in 0..40 {
        let mut r = rng(seed);
        let p = random_nbp(&mut r, 8, 5, true);
        let c = nbp_to_circuit(&p).unwrap();
        assert!(c.is_monotone());
        for m in all_assignments(&p.vars()) {
            assert_eq!(p.eval(&m), c.eval(&m), "seed {seed}: assignment {m:?}");
        }
    }
}

#[test]
fn nbp_to_circuit_trivial_cases() {
    let single = Nbp {
        vertices: 2,
        edges: vec![NbpEdge { from: 0, to: 1, label: Label::lit(Literal::pos("x".to_string())) }],
        s: 0,
        t: 1,
    };
    let c = nbp_to_circuit(&single).unwrap();
    let mut m = std::collections::BTreeMap::new();
    m.insert("x".to_string(), true);
    assert!(c.eval(&m));
    m.insert("x".to_string(), false);
    assert!(!c.eval(&m));

    let disconnected = Nbp::<String> { vertices: 2, edges: vec![], s: 0, t: 1 };
    assert!(!nbp_to_circuit(&disconnected).unwrap().eval(&std::collections::BTreeMap::new()));

    let neged = Nbp {
        vertices: 2,
        edges: vec![NbpEdge { from: 0, to: 1, label: Label::lit(Literal::neg("x".to_string())) }],
        s: 0,
        t: 1,
    };
    assert!(nbp_to_circuit(&neged).is_err());
}

#[test]
fn nbp_to_interval_hgp_is_equivalent() {
    for seed in 0..40 {
        let mut r = rng(1000 + seed);
        let monotone = seed % 2 == 0;
        let p = random_nbp(&mut r, 5, 5, monotone);
        let h = nbp_to_interval_hgp(&p);
        assert!(h.is_valid_interval_hgp(), "seed {seed}: invalid interval HGP");
        if monotone {
            assert!(h.is_monotone());
        }
        for m in all_assignments(&p.vars()) {
            assert_eq!(
                p.eval(&m),
                h.eval_limited(&m, 4096).unwrap(),
                "seed {seed}: assignment {m:?}"
            );
        }
    }
}

#[test]
fn nbp_to_interval_hgp_block_count_is_exact() {
    for seed in 0..10 {
        let mut r = rng(2000 + seed);
        let p = random_nbp(&mut r, 5, 4, true);
        let padded = p.edges.len()
            + usize::from(!p
                .edges
                .iter()
                .any(|e| e.from == p.t && e.to == p.t && e.label == Label::Const(true)));
        let h = nbp_to_interval_hgp(&p);
        assert_eq!(
            h.skeleton.as_ref().unwrap().vertices,
            interval_hgp_vertex_count(p.vertices, padded)
        );
    }
}

#[test]
fn constant_true_nbp_yields_constant_program() {
    let p = Nbp::<String> { vertices: 1, edges: vec![], s: 0, t: 0 };
    let h = nbp_to_interval_hgp(&p);
    for m in all_assignments(&Default::default()) {
        assert!(h.eval(&m).unwrap());
    }
}

#[test]
fn circuit_to_thgp_is_equivalent() {
    for seed in 0..40 {
        let mut r = rng(3000 + seed);
        let monotone = seed % 2 == 0;
        let c = random_semi_unbounded_circuit(&mut r, 12, 5, monotone);
        let h = circuit_to_thgp(&c).unwrap();
        assert!(h.is_valid_thgp(), "seed {seed}: invalid THGP");
        if monotone {
            assert!(h.is_monotone());
        }
        for m in all_assignments(&c.vars()) {
            assert_eq!(
                c.eval(&m),
                h.eval_limited(&m, 4096).unwrap(),
                "seed {seed}: assignment {m:?}"
            );
        }
    }
}

#[test]
fn single_and_gate_thgp() {
    let mut c = owlql_core::boolprog::Circuit::new();
    let a = c.push(Gate::Input(Literal::pos("a".to_string())));
    let b = c.push(Gate::Input(Literal::pos("b".to_string())));
    c.output = c.push(Gate::And(vec![a, b]));
    let h = circuit_to_thgp(&c).unwrap();
    for m in all_assignments(&c.vars()) {
        assert_eq!(c.eval(&m), h.eval(&m).unwrap());
    }
}

#[test]
fn wide_and_is_rejected_until_binarized() {
    let mut c = owlql_core::boolprog::Circuit::new();
    let a = c.push(Gate::Input(Literal::pos("a".to_string())));
    let b = c.push(Gate::Input(Literal::pos("b".to_string())));
    let d = c.push(Gate::Input(Literal::pos("d".to_string())));
    c.output = c.push(Gate::And(vec![a, b, d]));
    assert!(circuit_to_thgp(&c).is_err());
    let c2 = to_semi_unbounded(&c);
    let h = circuit_to_thgp(&c2).unwrap();
    for m in all_assignments(&c.vars()) {
        assert_eq!(c.eval(&m), c2.eval(&m));
        assert_eq!(c.eval(&m), h.eval(&m).unwrap());
    }
}

#[test]
fn thgp_to_circuit_is_equivalent() {
    for seed in 0..40 {
        let mut r = rng(4000 + seed);
        let monotone = seed % 2 == 0;
        let p = random_thgp(&mut r, 7, 5, monotone);
        let c = thgp_to_circuit(&p).unwrap();
        if monotone {
            assert!(c.is_monotone());
        }
        for m in all_assignments(&p.vars()) {
            assert_eq!(
                p.eval_limited(&m, 4096).unwrap(),
                c.eval(&m),
                "seed {seed}: assignment {m:?}"
            );
        }
    }
}

#[test]
fn circuit_thgp_round_trip_preserves_function() {
    for seed in 0..30 {
        let mut r = rng(5000 + seed);
        let c = random_semi_unbounded_circuit(&mut r, 10, 4, true);
        let h = circuit_to_thgp(&c).unwrap();
        let c2 = thgp_to_circuit(&h).unwrap();
        for m in all_assignments(&c.vars()) {
            assert_eq!(c.eval(&m), c2.eval(&m), "seed {seed}: assignment {m:?}");
        }
    }
}

#[test]
fn interval_thgp_from_small_nbp_compiles_back() {
    for seed in 0..10 {
        let mut r = rng(6000 + seed);
        let p = random_nbp(&mut r, 3, 4, true);
        let h = nbp_to_interval_hgp(&p);
        let c = thgp_to_circuit(&h).unwrap();
        for m in all_assignments(&p.vars()) {
            assert_eq!(p.eval(&m), c.eval(&m), "seed {seed}");
        }
    }
}

#[test]
fn all_one_labels_accept_everywhere() {
    let mut r = rng(7000);
    for _ in 0..5 {
        let mut p = random_thgp(&mut r, 6, 4, true);
        for l in p.labels.iter_mut() {
            *l = Label::truth();
        }
        let c = thgp_to_circuit(&p).unwrap();
        for m in all_assignments(&p.vars()) {
            assert!(c.eval(&m));
            assert!(p.eval(&m).unwrap());
        }
    }
}
