use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ctl::{AtomTable, StateSet};
use crate::datalog::{parse_facts, Database, FactStore, SymbolTable, Tuple, Value};

use super::structure::{KripkeStructure, StateId};
use super::KripkeError;

pub type ConstId = u32;

/// The set of constants mentioned by a database's facts.
pub type DomainSet = BTreeSet<ConstId>;

pub type Pairs = BTreeSet<(ConstId, ConstId)>;

/// The binary part of a Kripke-schema database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BinaryRelations {
    /// One accessibility relation `R`.
    Single { r: Pairs },
    /// Left/right children `S0`, `S1` of an outdegree-2 structure.
    Split { s0: Pairs, s1: Pairs },
    /// First child `S0` and next sibling `Next`, for unbounded outdegree.
    FirstChild { s0: Pairs, next: Pairs },
}

impl BinaryRelations {
    pub fn form_name(&self) -> &'static str {
        match self {
            BinaryRelations::Single { .. } => "R",
            BinaryRelations::Split { .. } => "S0/S1",
            BinaryRelations::FirstChild { .. } => "S0/Next",
        }
    }

    /// Each relation with its predicate name.
    pub fn named(&self) -> Vec<(&'static str, &Pairs)> {
        match self {
            BinaryRelations::Single { r } => vec![("R", r)],
            BinaryRelations::Split { s0, s1 } => vec![("S0", s0), ("S1", s1)],
            BinaryRelations::FirstChild { s0, next } => vec![("S0", s0), ("Next", next)],
        }
    }
}

/// A database over a Kripke schema: one binary part plus unary `P_0 .. P_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationalDatabase {
    constants: SymbolTable,
    binary: BinaryRelations,
    unary: Vec<BTreeSet<ConstId>>,
    /// Names of the atoms that `P_i` stands for.
    atoms: AtomTable,
    universe: Option<BTreeSet<ConstId>>,
}

impl RelationalDatabase {
    /// An empty single-`R` database with `n` unary relations.
    pub fn new(unary_count: usize) -> Self {
        Self::with_binary(BinaryRelations::Single { r: Pairs::new() }, unary_count)
    }

    pub fn with_binary(binary: BinaryRelations, unary_count: usize) -> Self {
        RelationalDatabase {
            constants: SymbolTable::new(),
            binary,
            unary: vec![BTreeSet::new(); unary_count],
            atoms: AtomTable::numbered(unary_count),
            universe: None,
        }
    }

    pub fn constants(&self) -> &[String] {
        self.constants.names()
    }

    pub fn constant(&self, id: ConstId) -> &str {
        self.constants.name(id)
    }

    pub fn constant_id(&self, name: &str) -> Option<ConstId> {
        self.constants.get(name)
    }

    /// Returns the id of `name`, adding it if new.
    pub fn intern(&mut self, name: &str) -> ConstId {
        self.constants.intern(name)
    }

    pub fn binary(&self) -> &BinaryRelations {
        &self.binary
    }

    pub fn binary_mut(&mut self) -> &mut BinaryRelations {
        &mut self.binary
    }

    /// The `R` relation; `None` for split forms.
    pub fn r(&self) -> Option<&Pairs> {
        match &self.binary {
            BinaryRelations::Single { r } => Some(r),
            _ => None,
        }
    }

    pub fn unary(&self) -> &[BTreeSet<ConstId>] {
        &self.unary
    }

    pub fn unary_count(&self) -> usize {
        self.unary.len()
    }

    pub fn atoms(&self) -> &AtomTable {
        &self.atoms
    }

    /// Renames the atoms behind `P_0 .. P_{n-1}`.
    pub fn set_atoms(&mut self, atoms: AtomTable) -> Result<(), KripkeError> {
        if atoms.len() != self.unary.len() {
            return Err(KripkeError::Invalid(format!(
                "{} atom names for {} unary relations",
                atoms.len(),
                self.unary.len()
            )));
        }
        self.atoms = atoms;
        Ok(())
    }

    pub fn universe(&self) -> Option<&BTreeSet<ConstId>> {
        self.universe.as_ref()
    }

    pub fn set_universe(&mut self, universe: Option<BTreeSet<ConstId>>) {
        self.universe = universe;
    }

    /// Adds `R(a, b)`; fails unless the database is in single-`R` form.
    pub fn add_r(&mut self, a: &str, b: &str) -> Result<(), KripkeError> {
        let (x, y) = (self.intern(a), self.intern(b));
        match &mut self.binary {
            BinaryRelations::Single { r } => {
                r.insert((x, y));
                Ok(())
            }
            other => Err(KripkeError::WrongForm { expected: "R", found: other.form_name() }),
        }
    }

    /// Adds `P_i(a)`, growing the unary list if needed.
    pub fn add_unary(&mut self, i: usize, a: &str) {
        let x = self.intern(a);
        while self.unary.len() <= i {
            self.unary.push(BTreeSet::new());
            self.atoms.intern(&format!("p{}", self.unary.len() - 1));
        }
        self.unary[i].insert(x);
    }

    /// Keeps `P_0 .. P_{n-1}`, adding empty relations or dropping extra ones.
    pub fn with_unary_count(&self, n: usize) -> RelationalDatabase {
        let mut d = self.clone();
        d.unary.resize(n, BTreeSet::new());
        let mut atoms = AtomTable::new();
        for i in 0..n {
            match self.atoms.name(i) {
                Some(name) => atoms.intern(name),
                None => atoms.intern(&format!("p{i}")),
            };
        }
        d.atoms = atoms;
        d
    }

    /// Number of facts.
    pub fn len(&self) -> usize {
        self.binary.named().iter().map(|(_, r)| r.len()).sum::<usize>()
            + self.unary.iter().map(BTreeSet::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the structural invariants of the S0/S1 form.
    pub fn validate(&self) -> Result<(), KripkeError> {
        let functional = |rel: &Pairs, name: &str| -> Result<(), KripkeError> {
            let mut prev: Option<ConstId> = None;
            for &(a, _) in rel {
                if prev == Some(a) {
                    return Err(KripkeError::Invalid(format!(
                        "`{}` has two {name}-children",
                        self.constant(a)
                    )));
                }
                prev = Some(a);
            }
            Ok(())
        };
        match &self.binary {
            BinaryRelations::Single { .. } => Ok(()),
            BinaryRelations::Split { s0, s1 } => {
                if let Some(&(a, b)) = s0.intersection(s1).next() {
                    return Err(KripkeError::Invalid(format!(
                        "({}, {}) is in both S0 and S1",
                        self.constant(a),
                        self.constant(b)
                    )));
                }
                functional(s0, "S0")?;
                functional(s1, "S1")
            }
            BinaryRelations::FirstChild { s0, next } => {
                functional(s0, "S0")?;
                functional(next, "Next")
            }
        }
    }

    /// The facts loaded for evaluation, without going through a
    /// [`FactStore`]. Symbol ids equal constant ids.
    pub fn to_database(&self) -> Database {
        let mut rels: Vec<(String, usize, Vec<u32>)> = self
            .binary
            .named()
            .into_iter()
            .map(|(name, rel)| (name.to_string(), 2, rel.iter().flat_map(|&(a, b)| [a, b]).collect()))
            .collect();
        for (i, p) in self.unary.iter().enumerate() {
            rels.push((format!("P{i}"), 1, p.iter().copied().collect()));
        }
        Database::from_rows(self.constants.clone(), rels).expect("constants are interned")
    }

    /// Facts as a [`FactStore`] with predicates `R` (or `S0`/`S1`/`Next`) and
    /// `P0 .. P{n-1}`. Symbol ids equal constant ids.
    pub fn to_fact_store(&self) -> FactStore {
        let mut store = FactStore::with_symbols(self.constants.clone());
        for (name, rel) in self.binary.named() {
            store.declare(name, 2).expect("fresh store");
            for &(a, b) in rel {
                let t: Tuple = [Value::Sym(a), Value::Sym(b)].into_iter().collect();
                store.insert(name, t).expect("interned");
            }
        }
        for (i, p) in self.unary.iter().enumerate() {
            let name = format!("P{i}");
            store.declare(&name, 1).expect("fresh store");
            for &a in p {
                store.insert(&name, [Value::Sym(a)].into_iter().collect()).expect("interned");
            }
        }
        store
    }

    /// Reads a store containing only Kripke-schema predicates.
    ///
    /// Constant ids follow the store's symbol ids; counter values are read as
    /// constants named by their digits.
    pub fn from_fact_store(store: &FactStore) -> Result<Self, KripkeError> {
        let mut constants = store.symbols().clone();
        let mut numeric: HashMap<u32, ConstId> = HashMap::new();
        let mut id_of = |v: Value| -> ConstId {
            match v {
                Value::Sym(s) => s,
                Value::Num(n) => *numeric.entry(n).or_insert_with(|| constants.intern(&n.to_string())),
            }
        };
        let mut binaries: BTreeMap<&str, Pairs> = BTreeMap::new();
        let mut unaries: BTreeMap<usize, BTreeSet<ConstId>> = BTreeMap::new();
        for pred in store.predicates() {
            let arity = store.arity(pred).unwrap_or(0);
            let rows = store.relation(pred).into_iter().flatten();
            let unary_index = pred
                .strip_prefix('P')
                .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
                .and_then(|d| d.parse::<usize>().ok());
            match (pred, unary_index) {
                ("R" | "S0" | "S1" | "Next", _) if arity == 2 => {
                    let v = binaries.entry(pred).or_default();
                    for t in rows {
                        v.insert((id_of(t[0]), id_of(t[1])));
                    }
                }
                (_, Some(i)) if arity == 1 => {
                    let v = unaries.entry(i).or_default();
                    for t in rows {
                        v.insert(id_of(t[0]));
                    }
                }
                _ => {
                    return Err(KripkeError::Invalid(format!(
                        "`{pred}`/{arity} is not a Kripke-schema predicate"
                    )))
                }
            }
        }
        let mut take = |p: &str| binaries.remove(p);
        let (r, s0, s1, next) = (take("R"), take("S0"), take("S1"), take("Next"));
        let binary = match (r, s0, s1, next) {
            (Some(r), None, None, None) => BinaryRelations::Single { r },
            (None, s0, None, Some(next)) => BinaryRelations::FirstChild { s0: s0.unwrap_or_default(), next },
            (None, None, None, None) => BinaryRelations::Single { r: Pairs::new() },
            (None, s0, s1, None) => BinaryRelations::Split {
                s0: s0.unwrap_or_default(),
                s1: s1.unwrap_or_default(),
            },
            _ => return Err(KripkeError::Invalid("mixed binary relation forms (R, S0/S1, S0/Next)".into())),
        };
        let n = unaries.keys().next_back().map_or(0, |&i| i + 1);
        let mut d = RelationalDatabase::with_binary(binary, n);
        d.constants = constants;
        for (i, rows) in unaries {
            d.unary[i] = rows;
        }
        d.validate()?;
        Ok(d)
    }

    pub fn render(&self) -> String {
        self.to_fact_store().render()
    }
}

/// Parses the database fact format (`R(a,b).`, `P0(a).`, `S0(a,b).`, ...).
pub fn parse_database(text: &str) -> Result<RelationalDatabase, KripkeError> {
    let store = parse_facts(text).map_err(|e| KripkeError::Facts(e.to_string()))?;
    RelationalDatabase::from_fact_store(&store)
}

/// `h_s`: states become constants, transitions become `R`, and `P_i` holds
/// the states labelled with atom `i`. Constant ids equal state ids.
pub fn kripke_to_db(k: &KripkeStructure) -> RelationalDatabase {
    let r: Pairs = k.edges().collect();
    let unary = (0..k.ap().len())
        .map(|a| k.atom_states(a).iter().collect())
        .collect();
    RelationalDatabase {
        constants: SymbolTable::from_names(k.state_names()),
        binary: BinaryRelations::Single { r },
        unary,
        atoms: k.ap().clone(),
        universe: None,
    }
}

/// The constants occurring in any fact. An explicit universe is ignored.
pub fn domain_of(d: &RelationalDatabase) -> DomainSet {
    let mut w = DomainSet::new();
    for (_, rel) in d.binary.named() {
        for &(a, b) in rel {
            w.insert(a);
            w.insert(b);
        }
    }
    for p in &d.unary {
        w.extend(p.iter().copied());
    }
    w
}

/// Adds a self-loop at every domain element without an `R`-successor.
pub fn total_closure(d: &RelationalDatabase) -> Result<RelationalDatabase, KripkeError> {
    let BinaryRelations::Single { r } = &d.binary else {
        return Err(KripkeError::WrongForm { expected: "R", found: d.binary.form_name() });
    };
    let has_succ: BTreeSet<ConstId> = r.iter().map(|&(a, _)| a).collect();
    let mut closed = r.clone();
    for x in domain_of(d) {
        if !has_succ.contains(&x) {
            closed.insert((x, x));
        }
    }
    Ok(RelationalDatabase { binary: BinaryRelations::Single { r: closed }, ..d.clone() })
}

/// `f_d`: the total closure read as a Kripke structure over the domain.
///
/// States appear in constant-id order; atoms are named by the database's atom table.
pub fn db_to_kripke(d: &RelationalDatabase) -> Result<KripkeStructure, KripkeError> {
    let closed = total_closure(d)?;
    let domain: Vec<ConstId> = domain_of(d).into_iter().collect();
    if domain.is_empty() {
        return Err(KripkeError::EmptyStructure);
    }
    let mut state_of = vec![u32::MAX; d.constants.len()];
    for (i, &c) in domain.iter().enumerate() {
        state_of[c as usize] = i as StateId;
    }
    let names = domain.iter().map(|&c| d.constant(c).to_string()).collect();
    let mut edges: Vec<(StateId, StateId)> = closed
        .r()
        .expect("single form")
        .iter()
        .map(|&(a, b)| (state_of[a as usize], state_of[b as usize]))
        .collect();
    edges.sort_unstable();
    let n = domain.len();
    let labels = d
        .unary
        .iter()
        .map(|p| StateSet::from_states(n, p.iter().map(|&c| state_of[c as usize])))
        .collect();
    Ok(KripkeStructure::from_sorted_edges(names, &edges, d.atoms.clone(), labels))
}

/// How the children of a state are ordered when assigning S0/S1 or siblings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum ChildOrder {
    /// Lexicographic by state name.
    #[default]
    ByName,
    ByNameDescending,
    /// Ascending by `rank[state]`, ties broken by state id.
    Ranked(Vec<u32>),
}

impl ChildOrder {
    fn sorted(&self, k: &KripkeStructure, children: &[StateId]) -> Vec<StateId> {
        let mut c = children.to_vec();
        match self {
            ChildOrder::ByName => c.sort_by(|&a, &b| k.state_name(a).cmp(k.state_name(b))),
            ChildOrder::ByNameDescending => c.sort_by(|&a, &b| k.state_name(b).cmp(k.state_name(a))),
            ChildOrder::Ranked(rank) => c.sort_by_key(|&s| (rank.get(s as usize).copied().unwrap_or(u32::MAX), s)),
        }
        c
    }
}

fn base_db(k: &KripkeStructure, binary: BinaryRelations) -> RelationalDatabase {
    RelationalDatabase {
        binary,
        ..kripke_to_db(&KripkeStructure::from_sorted_edges(
            k.state_names().to_vec(),
            &[],
            k.ap().clone(),
            (0..k.ap().len()).map(|a| k.atom_states(a).clone()).collect(),
        ))
    }
}

/// Encodes a total structure of outdegree at most 2 with `S0` (first child
/// under `order`) and `S1` (second child, if any).
pub fn split_outdegree2(k: &KripkeStructure, order: &ChildOrder) -> Result<RelationalDatabase, KripkeError> {
    let (mut s0, mut s1) = (Pairs::new(), Pairs::new());
    for s in 0..k.num_states() as StateId {
        let children = order.sorted(k, k.successors(s));
        match children.as_slice() {
            [] => return Err(KripkeError::NoSuccessor { state: k.state_name(s).to_string() }),
            [a] => {
                s0.insert((s, *a));
            }
            [a, b] => {
                s0.insert((s, *a));
                s1.insert((s, *b));
            }
            more => {
                return Err(KripkeError::OutdegreeTooLarge {
                    state: k.state_name(s).to_string(),
                    degree: more.len(),
                })
            }
        }
    }
    Ok(base_db(k, BinaryRelations::Split { s0, s1 }))
}

/// First-child / next-sibling encoding of a total structure.
///
/// `Next` is a property of the child alone, so every state must have the
/// same next sibling (or none) under each parent that lists it.
pub fn first_child_next_sibling(
    k: &KripkeStructure,
    order: &ChildOrder,
) -> Result<RelationalDatabase, KripkeError> {
    let (mut s0, mut next) = (Pairs::new(), Pairs::new());
    let mut sibling: Vec<Option<Option<StateId>>> = vec![None; k.num_states()];
    for s in 0..k.num_states() as StateId {
        let children = order.sorted(k, k.successors(s));
        let Some(&first) = children.first() else {
            return Err(KripkeError::NoSuccessor { state: k.state_name(s).to_string() });
        };
        s0.insert((s, first));
        for (i, &c) in children.iter().enumerate() {
            let after = children.get(i + 1).copied();
            match sibling[c as usize] {
                None => sibling[c as usize] = Some(after),
                Some(prev) if prev == after => {}
                Some(_) => {
                    return Err(KripkeError::AmbiguousSibling { state: k.state_name(c).to_string() })
                }
            }
            if let Some(d) = after {
                next.insert((c, d));
            }
        }
    }
    Ok(base_db(k, BinaryRelations::FirstChild { s0, next }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::parse_kripke;

    fn names(d: &RelationalDatabase, set: &BTreeSet<ConstId>) -> Vec<String> {
        set.iter().map(|&c| d.constant(c).to_string()).collect()
    }

    fn pairs(d: &RelationalDatabase, rel: &Pairs) -> Vec<(String, String)> {
        rel.iter().map(|&(a, b)| (d.constant(a).into(), d.constant(b).into())).collect()
    }

    #[test]
    fn h_s_examples() {
        let k = parse_kripke("state a p\nedge a a").unwrap();
        let d = kripke_to_db(&k);
        assert_eq!(pairs(&d, d.r().unwrap()), [("a".into(), "a".into())]);
        assert_eq!(names(&d, &d.unary()[0]), ["a"]);

        let k = parse_kripke("ap p q\nstate a\nstate b\nedge a b\nedge b a").unwrap();
        let d = kripke_to_db(&k);
        assert!(d.unary().iter().all(BTreeSet::is_empty));
        assert_eq!(d.r().unwrap().len(), 2);

        let k = parse_kripke("state a\nstate b p\nedge a b\nedge b b").unwrap();
        let d = kripke_to_db(&k);
        assert_eq!(d.render(), "P0(b).\nR(a,b).\nR(b,b).\n");
    }

    #[test]
    fn f_d_and_closure_examples() {
        let d = parse_database("P0(a).").unwrap();
        let k = db_to_kripke(&d).unwrap();
        assert_eq!(k.edges().collect::<Vec<_>>(), vec![(0, 0)]);
        assert!(k.holds(0, 0));

        let d = parse_database("R(a,b).").unwrap();
        let c = total_closure(&d).unwrap();
        assert_eq!(pairs(&c, c.r().unwrap()), [("a".into(), "b".into()), ("b".into(), "b".into())]);
        assert_eq!(db_to_kripke(&d).unwrap().num_edges(), 2);

        let d = parse_database("R(a,b).\nR(b,a).").unwrap();
        assert_eq!(total_closure(&d).unwrap(), d);
        assert_eq!(total_closure(&total_closure(&d).unwrap()).unwrap(), d);

        assert!(matches!(db_to_kripke(&RelationalDatabase::new(1)), Err(KripkeError::EmptyStructure)));
    }

    #[test]
    fn domain_examples() {
        let d = parse_database("R(a,b).\nP0(c).").unwrap();
        assert_eq!(names(&d, &domain_of(&d)), ["a", "b", "c"]);
        assert!(domain_of(&RelationalDatabase::new(2)).is_empty());
        let d = parse_database("R(a,a).").unwrap();
        assert_eq!(names(&d, &domain_of(&d)), ["a"]);
    }

    #[test]
    fn universe_surplus_is_ignored() {
        let mut d = parse_database("R(a,b).").unwrap();
        let z = d.intern("z");
        d.set_universe(Some(BTreeSet::from([0, 1, z])));
        assert_eq!(domain_of(&d).len(), 2);
        assert_eq!(db_to_kripke(&d).unwrap().num_states(), 2);
    }

    #[test]
    fn round_trip_through_db() {
        let k = parse_kripke("ap p q\nstate a q\nstate b p\nedge a b\nedge b a\nedge b b").unwrap();
        assert_eq!(db_to_kripke(&kripke_to_db(&k)).unwrap(), k);
    }

    #[test]
    fn split_examples() {
        let k = parse_kripke("state a\nstate c\nstate b\nedge a b\nedge a c\nedge b b\nedge c a").unwrap();
        let d = split_outdegree2(&k, &ChildOrder::ByName).unwrap();
        let BinaryRelations::Split { s0, s1 } = d.binary() else { panic!() };
        assert_eq!(
            pairs(&d, s0),
            [("a".into(), "b".into()), ("c".into(), "a".into()), ("b".into(), "b".into())]
        );
        assert_eq!(pairs(&d, s1), [("a".into(), "c".into())]);
        d.validate().unwrap();

        let rev = split_outdegree2(&k, &ChildOrder::ByNameDescending).unwrap();
        let BinaryRelations::Split { s0, .. } = rev.binary() else { panic!() };
        assert!(s0.contains(&(0, 1)));

        let k3 = parse_kripke("state a\nstate b\nstate c\nstate d\nedge a b\nedge a c\nedge a d\nedge b b\nedge c c\nedge d d").unwrap();
        match split_outdegree2(&k3, &ChildOrder::ByName) {
            Err(KripkeError::OutdegreeTooLarge { state, degree: 3 }) => assert_eq!(state, "a"),
            other => panic!("{other:?}"),
        }
        let dead = parse_kripke("state a\nstate b\nedge a b").unwrap();
        assert!(matches!(split_outdegree2(&dead, &ChildOrder::ByName), Err(KripkeError::NoSuccessor { .. })));
    }

    #[test]
    fn split_database_parses_back() {
        let d = parse_database("S0(a,b).\nS1(a,c).\nS0(b,b).\nS0(c,c).\nP1(c).").unwrap();
        assert!(matches!(d.binary(), BinaryRelations::Split { .. }));
        assert_eq!(d.unary_count(), 2);
        assert!(parse_database("S0(a,b).\nS1(a,b).").is_err());
        assert!(parse_database("S0(a,b).\nS0(a,c).").is_err());
        assert!(parse_database("R(a,b).\nS0(a,b).").is_err());
        assert!(parse_database("Q(a).").is_err());
    }

    #[test]
    fn sibling_encoding() {
        let k = parse_kripke(
            "state a\nstate b\nstate c\nstate d\nstate e\nedge a b\nedge a c\nedge a d\nedge b e\nedge c e\nedge d e\nedge e e",
        )
        .unwrap();
        let d = first_child_next_sibling(&k, &ChildOrder::ByName).unwrap();
        let BinaryRelations::FirstChild { s0, next } = d.binary() else { panic!() };
        assert_eq!(s0.len(), 5);
        assert_eq!(pairs(&d, next), [("b".into(), "c".into()), ("c".into(), "d".into())]);

        let clash = parse_kripke(
            "state a\nstate b\nstate c\nstate d\nstate e\nedge a b\nedge a c\nedge d b\nedge d e\nedge b b\nedge c c\nedge e e",
        ).unwrap();
        assert!(matches!(
            first_child_next_sibling(&clash, &ChildOrder::ByName),
            Err(KripkeError::AmbiguousSibling { .. })
        ));
    }
}
