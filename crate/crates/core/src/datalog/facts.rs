use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use smallvec::SmallVec;

use super::DatalogError;

/// A ground value: an interned symbol or a counter integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Sym(u32),
    Num(u32),
}

pub type Tuple = SmallVec<[Value; 2]>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `names` in order. Duplicates map to their first id.
    pub fn from_names<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        let mut t = Self::new();
        for n in names {
            t.intern(n.as_ref());
        }
        t
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Ground facts grouped by predicate.
#[derive(Debug, Clone, Default)]
pub struct FactStore {
    symbols: SymbolTable,
    relations: BTreeMap<String, (usize, BTreeSet<Tuple>)>,
}

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_symbols(symbols: SymbolTable) -> Self {
        FactStore { symbols, relations: BTreeMap::new() }
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn intern(&mut self, name: &str) -> Value {
        Value::Sym(self.symbols.intern(name))
    }

    /// Records `pred` with the given arity even if it has no facts.
    pub fn declare(&mut self, pred: &str, arity: usize) -> Result<(), DatalogError> {
        match self.relations.get(pred) {
            Some(&(a, _)) if a != arity => Err(DatalogError::ArityMismatch {
                pred: pred.to_string(),
                expected: a,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(pred.to_string(), (arity, BTreeSet::new()));
                Ok(())
            }
        }
    }

    pub fn insert(&mut self, pred: &str, tuple: Tuple) -> Result<bool, DatalogError> {
        if let Some(Value::Sym(s)) = tuple.iter().find(|v| matches!(v, Value::Sym(s) if *s as usize >= self.symbols.len())) {
            return Err(DatalogError::Invalid(format!("symbol id {s} is not interned")));
        }
        self.declare(pred, tuple.len())?;
        Ok(self.relations.get_mut(pred).unwrap().1.insert(tuple))
    }

    /// Inserts a fact whose arguments are all symbols, interning them.
    pub fn insert_syms(&mut self, pred: &str, args: &[&str]) -> Result<bool, DatalogError> {
        let tuple = args.iter().map(|a| self.intern(a)).collect();
        self.insert(pred, tuple)
    }

    pub fn relation(&self, pred: &str) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(pred).map(|(_, t)| t)
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.relations.get(pred).map(|&(a, _)| a)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    /// Total number of facts, `|D|`.
    pub fn len(&self) -> usize {
        self.relations.values().map(|(_, t)| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value_name(&self, v: Value) -> String {
        match v {
            Value::Sym(s) => self.symbols.name(s).to_string(),
            Value::Num(n) => n.to_string(),
        }
    }

    /// Names of the first column of a unary relation.
    pub fn unary_names(&self, pred: &str) -> BTreeSet<String> {
        self.relation(pred)
            .into_iter()
            .flatten()
            .filter_map(|t| t.first().map(|&v| self.value_name(v)))
            .collect()
    }

    /// A symbol-table-independent view, for comparing stores built separately.
    pub fn canonical(&self) -> BTreeMap<String, BTreeSet<Vec<String>>> {
        self.relations
            .iter()
            .map(|(p, (_, tuples))| {
                let rows = tuples
                    .iter()
                    .map(|t| t.iter().map(|&v| self.render_value(v)).collect())
                    .collect();
                (p.clone(), rows)
            })
            .collect()
    }

    fn render_value(&self, v: Value) -> String {
        match v {
            Value::Sym(s) => self.symbols.name(s).to_string(),
            Value::Num(n) => format!("#{n}"),
        }
    }

    /// Equal facts, ignoring symbol numbering and empty relations.
    pub fn same_facts(&self, other: &FactStore) -> bool {
        let strip = |m: BTreeMap<String, BTreeSet<Vec<String>>>| {
            m.into_iter().filter(|(_, v)| !v.is_empty()).collect::<BTreeMap<_, _>>()
        };
        strip(self.canonical()) == strip(other.canonical())
    }

    /// One `Pred(a,b).` line per fact, sorted by predicate then tuple.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (pred, (_, tuples)) in &self.relations {
            let mut rows: Vec<Vec<String>> = tuples
                .iter()
                .map(|t| t.iter().map(|&v| self.value_name(v)).collect())
                .collect();
            rows.sort();
            for row in rows {
                let _ = writeln!(out, "{pred}({}).", row.join(","));
            }
        }
        out
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Parses one ground fact per line: `R(a,b).`, `P0(a).`, `C(a,3).`.
///
/// All-digit arguments become counter values; anything else is a symbol.
/// Blank lines and lines starting with `%` or `#` are skipped.
pub fn parse_facts(text: &str) -> Result<FactStore, DatalogError> {
    let mut store = FactStore::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('%') || s.starts_with('#') {
            continue;
        }
        let err = |message: &str| DatalogError::Syntax { line, col: 1, message: message.to_string() };
        let s = s.strip_suffix('.').ok_or_else(|| err("fact must end with `.`"))?.trim_end();
        let (pred, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| err("missing `)`"))?;
                let args: Vec<&str> = if inner.trim().is_empty() {
                    vec![]
                } else {
                    inner.split(',').map(str::trim).collect()
                };
                (s[..open].trim(), args)
            }
            None => (s, vec![]),
        };
        if pred.is_empty() || !pred.chars().all(is_word_char) {
            return Err(err(&format!("invalid predicate `{pred}`")));
        }
        let mut tuple = Tuple::new();
        for a in args {
            if a.is_empty() || !a.chars().all(is_word_char) {
                return Err(err(&format!("invalid constant `{a}`")));
            }
            if a.chars().all(|c| c.is_ascii_digit()) {
                let n = a.parse().map_err(|_| err(&format!("integer `{a}` out of range")))?;
                tuple.push(Value::Num(n));
            } else {
                tuple.push(store.intern(a));
            }
        }
        store.insert(pred, tuple).map_err(|e| match e {
            DatalogError::ArityMismatch { pred, expected, found } => DatalogError::Syntax {
                line,
                col: 1,
                message: format!("`{pred}` used with arity {found}, earlier {expected}"),
            },
            other => other,
        })?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_render_round_trip() {
        let s = parse_facts("% db\nR(a,b).\nP0(b).\nC(a, 3).\nR(a,b).\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.render(), "C(a,3).\nP0(b).\nR(a,b).\n");
        let again = parse_facts(&s.render()).unwrap();
        assert!(again.same_facts(&s));
        assert_eq!(s.unary_names("P0"), BTreeSet::from(["b".to_string()]));
    }

    #[test]
    fn arity_conflict_is_an_error() {
        assert!(matches!(parse_facts("R(a,b).\nR(a)."), Err(DatalogError::Syntax { line: 2, .. })));
        assert!(parse_facts("R(a,b)").is_err());
        assert!(parse_facts("R(a-b).").is_err());
    }

    #[test]
    fn same_facts_ignores_numbering() {
        let mut a = FactStore::new();
        a.insert_syms("P", &["x"]).unwrap();
        a.insert_syms("P", &["y"]).unwrap();
        let mut b = FactStore::new();
        b.insert_syms("P", &["y"]).unwrap();
        b.insert_syms("P", &["x"]).unwrap();
        b.declare("Q", 1).unwrap();
        assert!(a.same_facts(&b));
    }
}
