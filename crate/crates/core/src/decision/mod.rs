//! Evaluation of STD programs through model checking, and bounded searches
//! for satisfying structures and containment counterexamples.

mod enumerate;

use rayon::prelude::*;

use crate::ctl::{model_check, CtlError, Formula, StateSet};
use crate::datalog::{FactStore, Value};
use crate::kripke::{db_to_kripke, domain_of, kripke_to_db, KripkeError, KripkeStructure, RelationalDatabase, StateId};
use crate::std_bridge::{std_to_ctl, StdProgram};

pub use enumerate::{edge_classes, total_structures, EdgeClass, StructureCode, MAX_ENUM_STATES};

/// A structure and one of its states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub structure: KripkeStructure,
    pub state: StateId,
}

impl Witness {
    /// The witness as a database over `R` and `P0 ..`.
    pub fn database(&self) -> RelationalDatabase {
        kripke_to_db(&self.structure)
    }

    pub fn state_name(&self) -> &str {
        self.structure.state_name(self.state)
    }
}

/// How far a search went.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBound {
    /// Largest state count enumerated.
    pub searched: usize,
    /// State count that makes the search complete, `2^|f|` (saturating).
    pub sufficient: u128,
}

impl SearchBound {
    fn new(searched: usize, f: &Formula) -> SearchBound {
        let size = u32::try_from(f.size()).unwrap_or(u32::MAX);
        SearchBound { searched, sufficient: 1u128.checked_shl(size).filter(|_| size < 128).unwrap_or(u128::MAX) }
    }

    /// Whether the search covered every structure that could matter.
    pub fn is_complete(&self) -> bool {
        self.searched as u128 >= self.sufficient
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundedVerdict {
    /// For satisfiability, the property holds and `witness` shows it. For
    /// containment, no counterexample exists within `bound`.
    Holds { witness: Option<Witness>, bound: SearchBound },
    /// A state in the left truth set and outside the right one.
    CounterexampleFound(Witness),
    /// No satisfying structure within `bound`.
    ExhaustedBound(SearchBound),
}

impl BoundedVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            BoundedVerdict::Holds { .. } => "holds",
            BoundedVerdict::CounterexampleFound(_) => "counterexample",
            BoundedVerdict::ExhaustedBound(_) => "exhausted",
        }
    }
}

/// The first structure (in enumeration order) where `f` holds somewhere,
/// with the least such state.
fn find_model(f: &Formula, max_states: usize) -> Result<Option<Witness>, CtlError> {
    let atoms = f.atom_count();
    for n in 1..=max_states.min(MAX_ENUM_STATES) {
        let classes = edge_classes(n);
        let found = classes.par_iter().map(|class| -> Result<Option<Witness>, CtlError> {
            for code in class.structures(atoms) {
                let k = code.to_kripke();
                if let Some(s) = model_check(&k, f)?.iter().next() {
                    return Ok(Some(Witness { structure: k, state: s }));
                }
            }
            Ok(None)
        });
        if let Some(hit) = found.find_map_first(|r| r.transpose()) {
            return hit.map(Some);
        }
    }
    Ok(None)
}

/// Searches total structures of up to `max_states` states (at most
/// [`MAX_ENUM_STATES`]) for a state satisfying `f`.
pub fn bounded_satisfiable(f: &Formula, max_states: usize) -> Result<BoundedVerdict, CtlError> {
    let bound = SearchBound::new(max_states.clamp(1, MAX_ENUM_STATES), f);
    Ok(match find_model(f, max_states.max(1))? {
        Some(w) => BoundedVerdict::Holds { witness: Some(w), bound },
        None => BoundedVerdict::ExhaustedBound(bound),
    })
}

/// Searches for a state in `f1`'s truth set and outside `f2`'s, i.e. a model
/// of `f1 & !f2`.
pub fn bounded_contained(f1: &Formula, f2: &Formula, max_states: usize) -> Result<BoundedVerdict, CtlError> {
    let diff = Formula::and(f1.clone(), Formula::not(f2.clone()));
    let bound = SearchBound::new(max_states.clamp(1, MAX_ENUM_STATES), &diff);
    Ok(match find_model(&diff, max_states.max(1))? {
        Some(w) => BoundedVerdict::CounterexampleFound(w),
        None => BoundedVerdict::Holds { witness: None, bound },
    })
}

/// Containment of STD programs through their formulas. A counterexample's
/// [`Witness::database`] is a database where `p1`'s goal exceeds `p2`'s.
pub fn std_contained(p1: &StdProgram, p2: &StdProgram, max_states: usize) -> Result<BoundedVerdict, CtlError> {
    bounded_contained(&std_to_ctl(p1), &std_to_ctl(p2), max_states)
}

/// Whether some database gives `p` a nonempty goal, searched up to
/// `max_states` states.
pub fn std_satisfiable(p: &StdProgram, max_states: usize) -> Result<BoundedVerdict, CtlError> {
    bounded_satisfiable(&std_to_ctl(p), max_states)
}

/// `phi & !E[true U psi1]`: satisfiable exactly when the `B` predicate of the
/// until-tilde subprogram for `phi` with left operand `psi1` is.
pub fn b_sat_reduction(phi: &Formula, psi1: &Formula) -> Formula {
    Formula::and(phi.clone(), Formula::not(Formula::eu(Formula::True, psi1.clone())))
}

#[derive(Debug, thiserror::Error)]
pub enum ViaCtlError {
    #[error(transparent)]
    Kripke(#[from] KripkeError),
    #[error(transparent)]
    Ctl(#[from] CtlError),
}

/// Goal facts of `p` on `d`, computed by model checking the formula of `p`
/// on the structure of `d`'s total closure. The store holds only `G`.
pub fn evaluate_std_via_ctl(p: &StdProgram, d: &RelationalDatabase) -> Result<FactStore, ViaCtlError> {
    let d = d.with_unary_count(d.unary_count().max(p.atom_count));
    let store = d.to_fact_store();
    let mut out = FactStore::with_symbols(store.symbols().clone());
    out.declare("G", 1).expect("fresh store");
    if domain_of(&d).is_empty() {
        return Ok(out);
    }
    let k = db_to_kripke(&d)?;
    let truth: StateSet = model_check(&k, &std_to_ctl(p))?;
    for s in truth.iter() {
        let c = d.constant_id(k.state_name(s)).expect("states are constants");
        out.insert("G", [Value::Sym(c)].into_iter().collect()).expect("interned");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctl::{parse_formula, parse_formula_in, to_enf, to_pnf, AtomTable};
    use crate::datalog::evaluate;
    use crate::kripke::parse_database;
    use crate::std_bridge::{ctl_to_std, flatten};

    fn f(text: &str) -> Formula {
        parse_formula_in(text, &AtomTable::from_names(["p", "q"])).unwrap()
    }

    #[test]
    fn satisfiability_examples() {
        let BoundedVerdict::Holds { witness: Some(w), .. } = bounded_satisfiable(&Formula::True, 3).unwrap() else {
            panic!()
        };
        assert_eq!(w.structure.num_states(), 1);
        assert!(w.structure.has_edge(0, 0));
        let BoundedVerdict::ExhaustedBound(b) = bounded_satisfiable(&f("p & !p"), 3).unwrap() else { panic!() };
        assert_eq!(b.searched, 3);
        assert!(!b.is_complete());
        let BoundedVerdict::Holds { witness: Some(w), .. } = bounded_satisfiable(&f("EX p & !p"), 3).unwrap() else {
            panic!()
        };
        assert_eq!(w.structure.num_states(), 2);
        assert!(model_check(&w.structure, &f("EX p & !p")).unwrap().contains(w.state));
        assert!(SearchBound::new(8, &Formula::atom(0)).is_complete());
    }

    #[test]
    fn containment_examples() {
        assert_eq!(bounded_contained(&f("q"), &f("E[ true U q ]"), 3).unwrap().kind(), "holds");
        let BoundedVerdict::CounterexampleFound(w) = bounded_contained(&f("E[ true U q ]"), &f("q"), 3).unwrap() else {
            panic!()
        };
        assert_eq!(w.structure.num_states(), 2);
        assert!(model_check(&w.structure, &f("E[ true U q ]")).unwrap().contains(w.state));
        assert!(!model_check(&w.structure, &f("q")).unwrap().contains(w.state));
        assert_eq!(bounded_contained(&f("EX p"), &f("EX p"), 2).unwrap().kind(), "holds");

        let std = |t: &str| ctl_to_std(&to_enf(&f(t)), 2).unwrap();
        assert_eq!(std_contained(&std("p & q"), &std("p"), 3).unwrap().kind(), "holds");
        let BoundedVerdict::CounterexampleFound(w) = std_contained(&std("p"), &std("p & q"), 3).unwrap() else {
            panic!()
        };
        let d = w.database().to_fact_store();
        let g1 = evaluate(&flatten(&std("p")), &d).unwrap().unary_names("G");
        let g2 = evaluate(&flatten(&std("p & q")), &d).unwrap().unary_names("G");
        assert!(!g1.is_subset(&g2));
    }

    #[test]
    fn b_reduction() {
        let r = b_sat_reduction(&f("E[ p ~U q ]"), &f("p"));
        assert_eq!(r, f("E[ p ~U q ] & !E[ true U p ]"));
        let (g, _) = parse_formula("E[ false ~U p ]").unwrap();
        let r = b_sat_reduction(&g, &Formula::False);
        assert_eq!(bounded_satisfiable(&r, 2).unwrap().kind(), "holds");
        assert_eq!(bounded_satisfiable(&to_pnf(&r), 2).unwrap().kind(), "holds");
    }

    #[test]
    fn via_ctl_examples() {
        let d = parse_database("P0(a).").unwrap();
        let p = ctl_to_std(&Formula::atom(0), 1).unwrap();
        assert_eq!(evaluate_std_via_ctl(&p, &d).unwrap().unary_names("G"), ["a".to_string()].into());
        let d = parse_database("R(a,b).\nP0(b).").unwrap();
        let p = ctl_to_std(&Formula::ex(Formula::atom(0)), 1).unwrap();
        let got = evaluate_std_via_ctl(&p, &d).unwrap().unary_names("G");
        assert_eq!(got, ["a".to_string(), "b".to_string()].into());
        assert_eq!(got, evaluate(&flatten(&p), &d.to_fact_store()).unwrap().unary_names("G"));
    }
}
