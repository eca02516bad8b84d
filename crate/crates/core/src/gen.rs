//! Random formulas, structures, databases and programs for differential
//! testing and benchmarks.

use std::collections::BTreeSet;

use rand::{Rng, RngExt};

use crate::ctl::Formula;
use crate::datalog::{Atom, Bound, FactStore, Literal, Program, Rule, SymbolTable, Term, Value};
use crate::kripke::{KripkeStructure, RelationalDatabase};
use crate::std_bridge::{ctl_to_std, StdProgram};

/// Which operators a generated formula may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaClass {
    Any,
    /// `true`, atoms, `!`, `&`, `EX`, `EU`, `E~U`.
    Enf,
    /// Negation only on atoms and `true`.
    Pnf,
}

/// A formula of AST depth at most `depth` over atoms `0 .. atoms`.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, atoms: usize, depth: usize, class: FormulaClass) -> Formula {
    // Negated leaves have depth 2.
    let leaf = |rng: &mut R| -> Formula {
        let k = rng.random_range(0..atoms + 2);
        let negate = class == FormulaClass::Pnf && depth >= 2;
        match k {
            k if k < atoms => Formula::Atom(k),
            k if k == atoms && negate && atoms > 0 => Formula::not(Formula::Atom(rng.random_range(0..atoms))),
            k if k == atoms + 1 && class == FormulaClass::Any => Formula::False,
            k if k == atoms + 1 && negate => Formula::not(Formula::True),
            _ => Formula::True,
        }
    };
    if depth <= 1 || rng.random_bool(0.2) {
        return leaf(rng);
    }
    let sub = |rng: &mut R| random_formula(rng, atoms, depth - 1, class);
    match class {
        FormulaClass::Enf => match rng.random_range(0..5) {
            0 => Formula::not(sub(rng)),
            1 => Formula::and(sub(rng), sub(rng)),
            2 => Formula::ex(sub(rng)),
            3 => Formula::eu(sub(rng), sub(rng)),
            _ => Formula::eut(sub(rng), sub(rng)),
        },
        FormulaClass::Pnf => match rng.random_range(0..8) {
            0 => Formula::and(sub(rng), sub(rng)),
            1 => Formula::or(sub(rng), sub(rng)),
            2 => Formula::ex(sub(rng)),
            3 => Formula::ax(sub(rng)),
            4 => Formula::eu(sub(rng), sub(rng)),
            5 => Formula::au(sub(rng), sub(rng)),
            6 => Formula::eut(sub(rng), sub(rng)),
            _ => Formula::aut(sub(rng), sub(rng)),
        },
        FormulaClass::Any => match rng.random_range(0..9) {
            0 => Formula::not(sub(rng)),
            1 => Formula::and(sub(rng), sub(rng)),
            2 => Formula::or(sub(rng), sub(rng)),
            3 => Formula::ex(sub(rng)),
            4 => Formula::ax(sub(rng)),
            5 => Formula::eu(sub(rng), sub(rng)),
            6 => Formula::au(sub(rng), sub(rng)),
            7 => Formula::eut(sub(rng), sub(rng)),
            _ => Formula::aut(sub(rng), sub(rng)),
        },
    }
}

/// `count` distinct formulas; gives up after `50 * count` draws.
pub fn formula_corpus<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    atoms: usize,
    depth: usize,
    class: FormulaClass,
) -> Vec<Formula> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..count * 50 {
        if out.len() == count {
            break;
        }
        let f = random_formula(rng, atoms, depth, class);
        if seen.insert(format!("{f:?}")) {
            out.push(f);
        }
    }
    out
}

/// An operator tree of depth at most `depth`.
pub fn random_std<R: Rng + ?Sized>(rng: &mut R, atoms: usize, depth: usize) -> StdProgram {
    let f = random_formula(rng, atoms, depth, FormulaClass::Enf);
    ctl_to_std(&f, atoms).expect("generated formulas are in ENF")
}

/// A total structure on `states` states; `max_outdegree` caps successors.
pub fn random_structure<R: Rng + ?Sized>(
    rng: &mut R,
    states: usize,
    atoms: usize,
    max_outdegree: Option<usize>,
) -> KripkeStructure {
    let cap = max_outdegree.unwrap_or(states).clamp(1, states.max(1));
    let mut edges = Vec::new();
    for s in 0..states as u32 {
        let deg = rng.random_range(1..=cap);
        let mut succ = BTreeSet::new();
        while succ.len() < deg {
            succ.insert(rng.random_range(0..states as u32));
        }
        edges.extend(succ.into_iter().map(|t| (s, t)));
    }
    let labels: Vec<Vec<bool>> = (0..states).map(|_| (0..atoms).map(|_| rng.random_bool(0.5)).collect()).collect();
    KripkeStructure::numbered(states, edges, atoms, |s, a| labels[s as usize][a]).expect("valid by construction")
}

/// A structure with about `edges` transitions and every state of
/// outdegree at least one, for benchmarks.
pub fn random_large_structure<R: Rng + ?Sized>(rng: &mut R, edges: usize, atoms: usize) -> KripkeStructure {
    let states = (edges / 4).max(1);
    let mut list: Vec<(u32, u32)> = (0..states as u32).map(|s| (s, rng.random_range(0..states as u32))).collect();
    while list.len() < edges {
        list.push((rng.random_range(0..states as u32), rng.random_range(0..states as u32)));
    }
    let labels: Vec<Vec<bool>> = (0..states).map(|_| (0..atoms).map(|_| rng.random_bool(0.3)).collect()).collect();
    KripkeStructure::numbered(states, list, atoms, |s, a| labels[s as usize][a]).expect("valid by construction")
}

/// A database over `R` and `P0 ..` with up to `max_constants` constants;
/// `R` need not be total.
pub fn random_database<R: Rng + ?Sized>(rng: &mut R, max_constants: usize, atoms: usize) -> RelationalDatabase {
    let n = rng.random_range(1..=max_constants.max(1));
    let names: Vec<String> = (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let mut d = RelationalDatabase::new(atoms);
    let density = rng.random_range(0.0..0.6);
    for a in &names {
        for b in &names {
            if rng.random_bool(density) {
                d.add_r(a, b).expect("single form");
            }
        }
    }
    for i in 0..atoms {
        for a in &names {
            if rng.random_bool(0.4) {
                d.add_unary(i, a);
            }
        }
    }
    d
}

/// A random stratified program over `E/2` and `U/1` with IDB predicates
/// `Q0 ..`, together with a random database. Negation only reaches
/// predicates defined earlier. With `counters`, some rules count along `E`.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, counters: bool) -> (Program, FactStore) {
    let idb = rng.random_range(1..=4);
    let arity: Vec<usize> = (0..idb).map(|_| rng.random_range(1..=2)).collect();
    let vars = ["X", "Y", "Z"];
    let mut rules = Vec::new();
    for q in 0..idb {
        for _ in 0..rng.random_range(1..=3) {
            let mut body = Vec::new();
            let mut bound: BTreeSet<&str> = BTreeSet::new();
            for _ in 0..rng.random_range(1..=3) {
                let pick = rng.random_range(0..3 + q + 1);
                let (pred, ar) = match pick {
                    0 | 1 => ("E".to_string(), 2),
                    2 => ("U".to_string(), 1),
                    k => {
                        let j = (k - 3).min(q);
                        (format!("Q{j}"), arity[j])
                    }
                };
                let args: Vec<&str> = (0..ar).map(|_| vars[rng.random_range(0..3)]).collect();
                bound.extend(&args);
                body.push(Literal::Pos(Atom::vars(&pred, &args)));
            }
            let bound: Vec<&str> = bound.into_iter().collect();
            if q > 0 && rng.random_bool(0.4) {
                let j = rng.random_range(0..q);
                let args: Vec<&str> = (0..arity[j]).map(|_| bound[rng.random_range(0..bound.len())]).collect();
                body.push(Literal::Neg(Atom::vars(&format!("Q{j}"), &args)));
            }
            if rng.random_bool(0.2) {
                let args: Vec<&str> = (0..2).map(|_| bound[rng.random_range(0..bound.len())]).collect();
                body.push(Literal::Neg(Atom::vars("E", &args)));
            }
            let head: Vec<&str> = (0..arity[q]).map(|_| bound[rng.random_range(0..bound.len())]).collect();
            rules.push(Rule::new(Atom::vars(&format!("Q{q}"), &head), body));
        }
    }
    if counters {
        rules.push(Rule::new(Atom::new("K", vec![Term::var("X"), Term::Int(1)]), vec![Literal::Pos(Atom::vars("U", &["X"]))]));
        rules.push(Rule::new(
            Atom::new("K", vec![Term::var("X"), Term::var("N")]),
            vec![
                Literal::Pos(Atom::vars("E", &["X", "Y"])),
                Literal::Pos(Atom::new("K", vec![Term::var("Y"), Term::Minus("N".into(), 1)])),
                Literal::Le("N".into(), Bound::CMax),
            ],
        ));
        rules.push(Rule::new(
            Atom::vars("Q0", &vec!["X"; arity[0]]),
            vec![Literal::Pos(Atom::new("K", vec![Term::var("X"), Term::var("N")])), Literal::Le("N".into(), Bound::Int(2))],
        ));
    }
    let goal = format!("Q{}", idb - 1);
    let n = rng.random_range(1..=5);
    let mut symbols = SymbolTable::default();
    let ids: Vec<u32> = (0..n).map(|i| symbols.intern(&((b'a' + i as u8) as char).to_string())).collect();
    let mut store = FactStore::with_symbols(symbols);
    store.declare("E", 2).expect("fresh");
    store.declare("U", 1).expect("fresh");
    for &a in &ids {
        for &b in &ids {
            if rng.random_bool(0.3) {
                store.insert("E", [Value::Sym(a), Value::Sym(b)].into_iter().collect()).expect("interned");
            }
        }
        if rng.random_bool(0.5) {
            store.insert("U", [Value::Sym(a)].into_iter().collect()).expect("interned");
        }
    }
    (Program::new(rules, &goal), store)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::datalog::check_safety;

    #[test]
    fn generators_respect_their_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            assert!(random_formula(&mut rng, 2, 4, FormulaClass::Enf).is_enf());
            let f = random_formula(&mut rng, 2, 3, FormulaClass::Pnf);
            assert!(f.is_pnf() && f.depth() <= 3);
            assert!(random_structure(&mut rng, 4, 2, Some(2)).max_outdegree() <= 2);
            let counters = rng.random_bool(0.5);
            let (p, _) = random_program(&mut rng, counters);
            check_safety(&p).unwrap();
        }
        assert_eq!(formula_corpus(&mut rng, 100, 2, 4, FormulaClass::Enf).len(), 100);
    }
}
