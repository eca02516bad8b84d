use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::ast::{Literal, Program};
use super::DatalogError;

/// An arc from a body predicate to the head predicate of some rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arc {
    pub from: String,
    pub to: String,
    pub negated: bool,
}

/// The predicate dependency graph restricted to IDB predicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<String>,
    pub arcs: BTreeSet<Arc>,
}

fn all_arcs(p: &Program) -> BTreeSet<Arc> {
    let mut arcs = BTreeSet::new();
    for r in &p.rules {
        for l in &r.body {
            let (a, negated) = match l {
                Literal::Pos(a) => (a, false),
                Literal::Neg(a) => (a, true),
                Literal::Le(..) => continue,
            };
            arcs.insert(Arc { from: a.pred.clone(), to: r.head.pred.clone(), negated });
        }
    }
    arcs
}

pub fn dependency_graph(p: &Program) -> DependencyGraph {
    let nodes: BTreeSet<String> = p.idb_predicates().into_iter().map(String::from).collect();
    let arcs = all_arcs(p).into_iter().filter(|a| nodes.contains(&a.from)).collect();
    DependencyGraph { nodes, arcs }
}

/// A stratum number for every predicate of a program, EDB predicates included.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stratification {
    pub strata: BTreeMap<String, usize>,
}

impl Stratification {
    pub fn get(&self, pred: &str) -> Option<usize> {
        self.strata.get(pred).copied()
    }

    pub fn max(&self) -> usize {
        self.strata.values().copied().max().unwrap_or(0)
    }

    /// Predicates grouped by stratum, lowest first.
    pub fn layers(&self) -> Vec<Vec<String>> {
        let mut layers = vec![Vec::new(); self.max() + 1];
        for (p, &s) in &self.strata {
            layers[s].push(p.clone());
        }
        layers
    }

    /// Whether this assignment respects every rule of `p`.
    pub fn is_valid_for(&self, p: &Program) -> bool {
        all_arcs(p).iter().all(|a| match (self.get(&a.from), self.get(&a.to)) {
            (Some(b), Some(h)) => if a.negated { h > b } else { h >= b },
            _ => false,
        })
    }
}

/// The minimal stratification: each predicate sits at the largest number of
/// negated arcs on any dependency path into it. Fails when some cycle passes
/// through a negated arc.
pub fn stratify(p: &Program) -> Result<Stratification, DatalogError> {
    let arcs = all_arcs(p);
    let mut g: DiGraph<&str, bool> = DiGraph::new();
    let mut idx: HashMap<&str, NodeIndex> = HashMap::new();
    for (pred, _) in p.predicates() {
        idx.insert(pred, g.add_node(pred));
    }
    for a in &arcs {
        g.add_edge(idx[a.from.as_str()], idx[a.to.as_str()], a.negated);
    }
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; g.node_count()];
    for (c, members) in sccs.iter().enumerate() {
        for &n in members {
            comp[n.index()] = c;
        }
    }
    for a in arcs.iter().filter(|a| a.negated) {
        let (f, t) = (idx[a.from.as_str()], idx[a.to.as_str()]);
        if comp[f.index()] == comp[t.index()] {
            return Err(DatalogError::NotStratifiable { cycle: negative_cycle(&g, t, f) });
        }
    }
    // tarjan_scc yields components in reverse topological order.
    let mut level = vec![0usize; sccs.len()];
    for c in (0..sccs.len()).rev() {
        for &n in &sccs[c] {
            for e in g.edges_directed(n, petgraph::Direction::Outgoing) {
                use petgraph::visit::EdgeRef;
                let d = comp[e.target().index()];
                if d != c {
                    let need = level[c] + usize::from(*e.weight());
                    level[d] = level[d].max(need);
                }
            }
        }
    }
    let strata = idx
        .iter()
        .map(|(&pred, &n)| (pred.to_string(), level[comp[n.index()]]))
        .collect();
    Ok(Stratification { strata })
}

/// A path `from -> ... -> to` followed by the negated arc back to `from`.
fn negative_cycle(g: &DiGraph<&str, bool>, from: NodeIndex, to: NodeIndex) -> Vec<String> {
    let mut prev: HashMap<NodeIndex, NodeIndex> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            break;
        }
        for m in g.neighbors(n) {
            if seen.insert(m) {
                prev.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    path.push(from);
    path.into_iter().map(|n| g[n].to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    #[test]
    fn three_rule_example() {
        let p = parse_program("A :- !B.\nB :- !C.\nC :- D.").unwrap();
        let s = stratify(&p).unwrap();
        assert_eq!(s.get("C"), Some(0));
        assert_eq!(s.get("D"), Some(0));
        assert_eq!(s.get("B"), Some(1));
        assert_eq!(s.get("A"), Some(2));
        assert!(s.is_valid_for(&p));
    }

    #[test]
    fn self_negation_is_rejected() {
        let p = parse_program("G(X) :- P(X), !G(X).").unwrap();
        match stratify(&p) {
            Err(DatalogError::NotStratifiable { cycle }) => assert_eq!(cycle, ["G", "G"]),
            other => panic!("{other:?}"),
        }
        let p = parse_program("A(X) :- P(X), !B(X).\nB(X) :- A(X).").unwrap();
        match stratify(&p) {
            Err(DatalogError::NotStratifiable { cycle }) => assert_eq!(cycle, ["A", "B", "A"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn graph_arcs() {
        let g = dependency_graph(&parse_program("G(X) :- B(X).\nB(X) :- P(X).").unwrap());
        assert!(g.arcs.contains(&Arc { from: "B".into(), to: "G".into(), negated: false }));
        assert_eq!(g.arcs.len(), 1);
        let g = dependency_graph(&parse_program("G(X) :- P(X), !B(X).\nB(X) :- P(X).").unwrap());
        assert_eq!(g.arcs.iter().next().unwrap().negated, true);
        let g = dependency_graph(&parse_program("G(X) :- P(X).").unwrap());
        assert!(g.arcs.is_empty());
        assert_eq!(g.nodes, BTreeSet::from(["G".to_string()]));
    }

    #[test]
    fn recursion_through_positive_arcs_shares_a_stratum() {
        let p = parse_program("T(X,Y) :- R(X,Y).\nT(X,Y) :- R(X,Z), T(Z,Y).\nN(X) :- R(X,Y), !T(X,X).").unwrap();
        let s = stratify(&p).unwrap();
        assert_eq!((s.get("T"), s.get("N")), (Some(0), Some(1)));
        let mut bad = s.clone();
        bad.strata.insert("N".into(), 0);
        assert!(!bad.is_valid_for(&p));
    }
}
