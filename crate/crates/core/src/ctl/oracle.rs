use crate::kripke::{KripkeStructure, StateId};

use super::check::validate;
use super::formula::Formula;
use super::state_set::StateSet;
use super::CtlError;

pub const DEFAULT_ORACLE_BOUND: usize = 6;

/// Truth set by brute force over lassos, independent of [`super::model_check`].
///
/// A lasso is a simple path `v0 .. vk` plus one edge from `vk` back to some
/// `vj`. On a finite structure every path property used here is witnessed
/// (or refuted) by a lasso, and positions past `k` repeat states already
/// seen, so checking positions `0..=k` decides `U` and `~U`.
pub fn truth_oracle(k: &KripkeStructure, f: &Formula) -> Result<StateSet, CtlError> {
    truth_oracle_bounded(k, f, DEFAULT_ORACLE_BOUND)
}

pub fn truth_oracle_bounded(k: &KripkeStructure, f: &Formula, bound: usize) -> Result<StateSet, CtlError> {
    if k.num_states() > bound {
        return Err(CtlError::OracleBound { states: k.num_states(), bound });
    }
    validate(k, f)?;
    let lassos: Vec<Vec<Vec<StateId>>> = (0..k.num_states() as StateId).map(|s| lassos_from(k, s)).collect();
    Ok(Oracle { k, lassos }.eval(f))
}

/// All lassos starting at `s`, each as its state sequence followed by the
/// index the last state loops back to.
fn lassos_from(k: &KripkeStructure, s: StateId) -> Vec<Vec<StateId>> {
    let mut out = Vec::new();
    let mut path = vec![s];
    extend(k, &mut path, &mut out);
    out
}

fn extend(k: &KripkeStructure, path: &mut Vec<StateId>, out: &mut Vec<Vec<StateId>>) {
    let last = *path.last().unwrap();
    for &t in k.successors(last) {
        if let Some(j) = path.iter().position(|&x| x == t) {
            let mut lasso = path.clone();
            lasso.push(j as StateId);
            out.push(lasso);
        } else {
            path.push(t);
            extend(k, path, out);
            path.pop();
        }
    }
}

struct Oracle<'a> {
    k: &'a KripkeStructure,
    lassos: Vec<Vec<Vec<StateId>>>,
}

enum PathOp {
    Next,
    Until,
    UntilTilde,
}

impl Oracle<'_> {
    fn eval(&self, f: &Formula) -> StateSet {
        use Formula::*;
        let n = self.k.num_states();
        let all = 0..n as StateId;
        let set = |pred: &dyn Fn(StateId) -> bool| StateSet::from_states(n, all.clone().filter(|&s| pred(s)));
        match f {
            True => set(&|_| true),
            False => set(&|_| false),
            Atom(a) => set(&|s| self.k.holds(s, *a)),
            Not(g) => {
                let t = self.eval(g);
                set(&|s| !t.contains(s))
            }
            And(l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                set(&|s| a.contains(s) && b.contains(s))
            }
            Or(l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                set(&|s| a.contains(s) || b.contains(s))
            }
            ExistsNext(g) => self.quantified(true, PathOp::Next, &StateSet::empty(n), &self.eval(g)),
            ForallNext(g) => self.quantified(false, PathOp::Next, &StateSet::empty(n), &self.eval(g)),
            ExistsUntil(l, r) => self.quantified(true, PathOp::Until, &self.eval(l), &self.eval(r)),
            ForallUntil(l, r) => self.quantified(false, PathOp::Until, &self.eval(l), &self.eval(r)),
            ExistsUntilTilde(l, r) => self.quantified(true, PathOp::UntilTilde, &self.eval(l), &self.eval(r)),
            ForallUntilTilde(l, r) => self.quantified(false, PathOp::UntilTilde, &self.eval(l), &self.eval(r)),
        }
    }

    fn quantified(&self, exists: bool, op: PathOp, a: &StateSet, b: &StateSet) -> StateSet {
        let n = self.k.num_states();
        StateSet::from_states(
            n,
            (0..n as StateId).filter(|&s| {
                let mut paths = self.lassos[s as usize].iter().map(|l| path_holds(&op, a, b, &l[..l.len() - 1]));
                if exists {
                    paths.any(|x| x)
                } else {
                    paths.all(|x| x)
                }
            }),
        )
    }
}

/// Evaluates the path formula on the distinct positions of a lasso.
fn path_holds(op: &PathOp, a: &StateSet, b: &StateSet, states: &[StateId]) -> bool {
    match op {
        PathOp::Next => b.contains(states.get(1).copied().unwrap_or_else(|| states[0])),
        // some i with b at i and a at every earlier position
        PathOp::Until => {
            for &s in states {
                if b.contains(s) {
                    return true;
                }
                if !a.contains(s) {
                    return false;
                }
            }
            false
        }
        // every i where b fails has some earlier position with a
        PathOp::UntilTilde => {
            let mut seen_a = false;
            for &s in states {
                if !b.contains(s) && !seen_a {
                    return false;
                }
                seen_a |= a.contains(s);
            }
            true
        }
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
        truth_oracle(&k, &f).unwrap().iter().map(|s| k.state_name(s).to_string()).collect()
    }

    #[test]
    fn spec_examples() {
        let one = "state s p\nedge s s";
        assert_eq!(truth(one, "EX p"), ["s"]);
        assert_eq!(truth(one, "A[ p ~U p ]"), ["s"]);
        let swap = "state a p\nstate b\nedge a b\nedge b a";
        assert!(truth(swap, "E[ false ~U p ]").is_empty());
    }

    #[test]
    fn next_on_a_self_loop_lasso() {
        // The lasso "s, back to 0" has one distinct position; its successor is s itself.
        let k = "state s\nstate t p\nedge s s\nedge s t\nedge t t";
        assert_eq!(truth(k, "EX p"), ["s", "t"]);
        assert_eq!(truth(k, "AX p"), ["t"]);
    }

    #[test]
    fn bound_is_enforced() {
        let text: String = (0..7).map(|i| format!("state s{i}\nedge s{i} s{i}\n")).collect();
        let k = parse_kripke(&text).unwrap();
        assert!(matches!(
            truth_oracle(&k, &Formula::True),
            Err(CtlError::OracleBound { states: 7, bound: 6 })
        ));
        assert_eq!(truth_oracle_bounded(&k, &Formula::True, 7).unwrap().len(), 7);
    }
}
