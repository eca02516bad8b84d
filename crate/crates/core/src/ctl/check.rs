use std::collections::VecDeque;

use crate::kripke::{KripkeStructure, StateId};

use super::formula::Formula;
use super::state_set::StateSet;
use super::CtlError;

pub(crate) fn validate(k: &KripkeStructure, f: &Formula) -> Result<(), CtlError> {
    if f.atom_count() > k.ap().len() {
        return Err(CtlError::UnknownAtom { atom: f.atom_count() - 1, declared: k.ap().len() });
    }
    if let Some(s) = k.first_dead_end() {
        return Err(CtlError::NotTotal { state: k.state_name(s).to_string() });
    }
    Ok(())
}

/// Computes the truth set `f[K]` bottom-up over the subformulas of `f`.
///
/// Runs in `O(|K| * |f|)`. `k` must be total and declare every atom `f` uses.
pub fn model_check(k: &KripkeStructure, f: &Formula) -> Result<StateSet, CtlError> {
    validate(k, f)?;
    let mut mc = Checker { k, pred: None };
    Ok(mc.eval(f))
}

struct Checker<'a> {
    k: &'a KripkeStructure,
    pred: Option<(Vec<u32>, Vec<StateId>)>,
}

impl Checker<'_> {
    fn n(&self) -> usize {
        self.k.num_states()
    }

    fn preds(&mut self) -> &(Vec<u32>, Vec<StateId>) {
        if self.pred.is_none() {
            self.pred = Some(self.k.predecessors_csr());
        }
        self.pred.as_ref().unwrap()
    }

    fn eval(&mut self, f: &Formula) -> StateSet {
        use Formula::*;
        let n = self.n();
        match f {
            True => StateSet::full(n),
            False => StateSet::empty(n),
            Atom(a) => self.k.atom_states(*a).clone(),
            Not(g) => self.eval(g).complement(),
            And(l, r) => {
                let mut s = self.eval(l);
                s.intersect_with(&self.eval(r));
                s
            }
            Or(l, r) => {
                let mut s = self.eval(l);
                s.union_with(&self.eval(r));
                s
            }
            ExistsNext(g) => {
                let t = self.eval(g);
                self.states_where(|k, s| k.successors(s).iter().any(|&x| t.contains(x)))
            }
            ForallNext(g) => {
                let t = self.eval(g);
                self.states_where(|k, s| k.successors(s).iter().all(|&x| t.contains(x)))
            }
            ExistsUntil(l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                self.eu(&a, b)
            }
            ForallUntil(l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                self.au(&a, &b)
            }
            ExistsUntilTilde(l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                self.eut(&a, &b)
            }
            ForallUntilTilde(l, r) => {
                // A[a ~U b] = !E[!a U !b]
                let (a, b) = (self.eval(l), self.eval(r));
                self.eu(&a.complement(), b.complement()).complement()
            }
        }
    }

    fn states_where(&self, test: impl Fn(&KripkeStructure, StateId) -> bool) -> StateSet {
        StateSet::from_states(self.n(), (0..self.n() as StateId).filter(|&s| test(self.k, s)))
    }

    /// Least fixpoint: backward search from `seed` through `through`-states.
    fn eu(&mut self, through: &StateSet, seed: StateSet) -> StateSet {
        let mut result = seed;
        let mut queue: VecDeque<StateId> = result.iter().collect();
        let (off, src) = self.preds();
        while let Some(t) = queue.pop_front() {
            for &s in &src[off[t as usize] as usize..off[t as usize + 1] as usize] {
                if through.contains(s) && result.insert(s) {
                    queue.push_back(s);
                }
            }
        }
        result
    }

    /// A state joins once it satisfies `a` and all of its successors are in.
    fn au(&mut self, a: &StateSet, b: &StateSet) -> StateSet {
        let mut remaining: Vec<u32> = (0..self.n() as StateId).map(|s| self.k.outdegree(s) as u32).collect();
        let mut result = b.clone();
        let mut queue: VecDeque<StateId> = result.iter().collect();
        let (off, src) = self.preds();
        while let Some(t) = queue.pop_front() {
            for &s in &src[off[t as usize] as usize..off[t as usize + 1] as usize] {
                if result.contains(s) || !a.contains(s) {
                    continue;
                }
                remaining[s as usize] -= 1;
                if remaining[s as usize] == 0 {
                    result.insert(s);
                    queue.push_back(s);
                }
            }
        }
        result
    }

    /// `E[a ~U b]`: some path stays in `b` forever, or stays in `b` up to and
    /// including an `a`-state. That is `E[b U (a & b | EG b)]`.
    fn eut(&mut self, a: &StateSet, b: &StateSet) -> StateSet {
        let eg = self.eg(b);
        let mut seed = a.clone();
        seed.intersect_with(b);
        seed.union_with(&eg);
        self.eu(b, seed)
    }

    /// Greatest fixpoint: repeatedly drop `b`-states with no successor left in the set.
    fn eg(&mut self, b: &StateSet) -> StateSet {
        let mut set = b.clone();
        let mut live: Vec<u32> = (0..self.n() as StateId)
            .map(|s| self.k.successors(s).iter().filter(|&&x| b.contains(x)).count() as u32)
            .collect();
        let mut queue: VecDeque<StateId> = set.iter().filter(|&s| live[s as usize] == 0).collect();
        for &s in &queue {
            set.remove(s);
        }
        let (off, src) = self.preds();
        while let Some(t) = queue.pop_front() {
            for &s in &src[off[t as usize] as usize..off[t as usize + 1] as usize] {
                if !set.contains(s) {
                    continue;
                }
                live[s as usize] -= 1;
                if live[s as usize] == 0 {
                    set.remove(s);
                    queue.push_back(s);
                }
            }
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctl::parse_formula_in;
    use crate::kripke::parse_kripke;

    fn truth(k: &str, f: &str) -> Vec<String> {
        let k = parse_kripke(k).unwrap();
        let f = parse_formula_in(f, k.ap()).unwrap();
        model_check(&k, &f).unwrap().iter().map(|s| k.state_name(s).to_string()).collect()
    }

    const AB: &str = "ap p\nstate a\nstate b p\nedge a b\nedge b b";

    #[test]
    fn spec_examples() {
        assert_eq!(truth(AB, "true"), ["a", "b"]);
        assert_eq!(truth(AB, "E[ true U p ]"), ["a", "b"]);
        assert_eq!(truth(AB, "E[ false ~U p ]"), ["b"]);
    }

    #[test]
    fn operators_on_a_small_structure() {
        // a -> b, a -> c, b -> b, c -> a ; p at a,b ; q at c
        let k = "ap p q\nstate a p\nstate b p\nstate c q\nedge a b\nedge a c\nedge b b\nedge c a";
        assert_eq!(truth(k, "EX q"), ["a"]);
        assert_eq!(truth(k, "AX p"), ["b", "c"]);
        assert_eq!(truth(k, "A[ p U q ]"), ["c"]);
        assert_eq!(truth(k, "E[ p U q ]"), ["a", "c"]);
        assert_eq!(truth(k, "E[ false ~U p ]"), ["a", "b"]);
        assert_eq!(truth(k, "A[ false ~U p ]"), ["b"]);
        assert_eq!(truth(k, "E[ q ~U p ]"), ["a", "b"]);
        assert_eq!(truth(k, "A[ q ~U !q ]"), ["b"]);
        assert_eq!(truth(k, "A[ true ~U q ]"), ["c"]);
    }

    #[test]
    fn errors() {
        let k = parse_kripke(AB).unwrap();
        assert!(matches!(
            model_check(&k, &Formula::atom(1)),
            Err(CtlError::UnknownAtom { atom: 1, declared: 1 })
        ));
        let dead = parse_kripke("state a\nstate b\nedge a b").unwrap();
        match model_check(&dead, &Formula::True) {
            Err(CtlError::NotTotal { state }) => assert_eq!(state, "b"),
            other => panic!("{other:?}"),
        }
    }
}
