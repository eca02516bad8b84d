//! Total Kripke structures with a fixed number of states, one per
//! isomorphism class.
//!
//! A structure on `n` states is coded by an edge mask (bit `i*n + j` for the
//! edge `i -> j`) and a label mask (bit `s*atoms + a` when atom `a` holds at
//! state `s`). The representative of a class is the member whose
//! `(edges, labels)` pair is least.

use crate::ctl::AtomId;
use crate::kripke::{KripkeStructure, StateId};

/// Structures beyond this many states are not enumerated; the count of
/// edge relations alone is `2^(n*n)`.
pub const MAX_ENUM_STATES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StructureCode {
    pub states: usize,
    pub edges: u64,
    pub labels: u64,
    pub atoms: usize,
}

impl StructureCode {
    pub fn edges(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        let n = self.states;
        (0..n * n).filter(move |b| self.edges >> b & 1 == 1).map(move |b| ((b / n) as StateId, (b % n) as StateId))
    }

    pub fn holds(&self, s: StateId, a: AtomId) -> bool {
        self.labels >> (s as usize * self.atoms + a) & 1 == 1
    }

    /// States `s0 ..`, atoms `p0 ..`.
    pub fn to_kripke(&self) -> KripkeStructure {
        KripkeStructure::numbered(self.states, self.edges(), self.atoms, |s, a| self.holds(s, a))
            .expect("codes describe valid structures")
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                go(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(n), n, &mut out);
    out
}

fn permute_edges(edges: u64, n: usize, p: &[usize]) -> u64 {
    let mut out = 0;
    let mut rest = edges;
    while rest != 0 {
        let b = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        out |= 1 << (p[b / n] * n + p[b % n]);
    }
    out
}

fn permute_labels(labels: u64, atoms: usize, p: &[usize]) -> u64 {
    let mut out = 0;
    let mut rest = labels;
    while rest != 0 {
        let b = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        out |= 1 << (p[b / atoms] * atoms + b % atoms);
    }
    out
}

fn is_total(edges: u64, n: usize) -> bool {
    let row = (1u64 << n) - 1;
    (0..n).all(|i| edges >> (i * n) & row != 0)
}

/// A representative edge relation with the permutations that fix it.
#[derive(Debug, Clone)]
pub struct EdgeClass {
    pub states: usize,
    pub edges: u64,
    automorphisms: Vec<Vec<usize>>,
}

impl EdgeClass {
    /// Representative label masks of the structures over this relation, in
    /// increasing order.
    pub fn label_masks(&self, atoms: usize) -> impl Iterator<Item = u64> + '_ {
        let bits = self.states * atoms;
        assert!(bits < 64, "too many label bits");
        (0..1u64 << bits).filter(move |&l| self.automorphisms.iter().all(|p| permute_labels(l, atoms, p) >= l))
    }

    pub fn structures(&self, atoms: usize) -> impl Iterator<Item = StructureCode> + '_ {
        self.label_masks(atoms).map(move |labels| StructureCode { states: self.states, edges: self.edges, labels, atoms })
    }
}

/// Total edge relations on `n` states up to isomorphism, by increasing mask.
pub fn edge_classes(n: usize) -> Vec<EdgeClass> {
    assert!((1..=MAX_ENUM_STATES).contains(&n), "state count {n} outside 1..={MAX_ENUM_STATES}");
    let perms = permutations(n);
    let mut out = Vec::new();
    'mask: for edges in 0..1u64 << (n * n) {
        if !is_total(edges, n) {
            continue;
        }
        let mut automorphisms = Vec::new();
        for p in &perms {
            let q = permute_edges(edges, n, p);
            if q < edges {
                continue 'mask;
            }
            if q == edges {
                automorphisms.push(p.clone());
            }
        }
        out.push(EdgeClass { states: n, edges, automorphisms });
    }
    out
}

/// Every total structure with `1 ..= max_states` states over `atoms` atoms,
/// one per isomorphism class, ordered by state count, edges, then labels.
pub fn total_structures(max_states: usize, atoms: usize) -> Vec<StructureCode> {
    (1..=max_states).flat_map(|n| edge_classes(n).into_iter().flat_map(|c| c.structures(atoms).collect::<Vec<_>>())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        // Total relations on one and two states: 1 and 6 up to isomorphism.
        assert_eq!(edge_classes(1).len(), 1);
        assert_eq!(edge_classes(2).len(), 6);
        assert_eq!(total_structures(1, 1).len(), 2);
        let two: Vec<_> = total_structures(2, 0).into_iter().filter(|c| c.states == 2).collect();
        assert_eq!(two.len(), 6);
        assert!(total_structures(3, 1).iter().all(|c| c.to_kripke().is_total()));
    }

    #[test]
    fn representatives_are_distinct_classes() {
        // Brute force: canonical form by trying every permutation.
        for n in 1..=3 {
            let perms = permutations(n);
            let canon = |c: &StructureCode| {
                perms
                    .iter()
                    .map(|p| (permute_edges(c.edges, n, p), permute_labels(c.labels, c.atoms, p)))
                    .min()
                    .unwrap()
            };
            let reps: Vec<_> = total_structures(n, 1).into_iter().filter(|c| c.states == n).collect();
            let mut all = std::collections::BTreeSet::new();
            for edges in 0..1u64 << (n * n) {
                if is_total(edges, n) {
                    for labels in 0..1u64 << n {
                        all.insert(canon(&StructureCode { states: n, edges, labels, atoms: 1 }));
                    }
                }
            }
            assert_eq!(reps.len(), all.len());
            assert!(reps.iter().all(|c| canon(c) == (c.edges, c.labels)));
        }
    }
}
