use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;

use super::ast::{Atom, Bound, Literal, Program, Rule, Term};
use super::check::{analyze, check_safety, Sort};
use super::facts::{FactStore, SymbolTable, Tuple, Value};
use super::stratify::{stratify, Stratification};
use super::DatalogError;

type Row = SmallVec<[u32; 4]>;

/// Single-column indexes are plain vectors when values stay below this.
const DENSE_LIMIT: u32 = 1 << 24;
/// Relations wider than this are never indexed.
const MAX_INDEXED_ARITY: usize = 8;

fn pack(a: u32, b: u32) -> u64 {
    (u64::from(a) << 32) | u64::from(b)
}

enum Dedup {
    Nullary,
    Bits(Vec<u64>),
    Pair(FxHashSet<u64>),
    Wide(FxHashSet<Row>),
}

/// Tuples of one relation, stored flat in insertion order.
struct Rel {
    arity: usize,
    rows: Vec<u32>,
    len: usize,
    dedup: Dedup,
}

impl Rel {
    fn new(arity: usize) -> Rel {
        let dedup = match arity {
            0 => Dedup::Nullary,
            1 => Dedup::Bits(Vec::new()),
            2 => Dedup::Pair(FxHashSet::default()),
            _ => Dedup::Wide(FxHashSet::default()),
        };
        Rel { arity, rows: Vec::new(), len: 0, dedup }
    }

    fn row(&self, i: usize) -> &[u32] {
        &self.rows[i * self.arity..(i + 1) * self.arity]
    }

    fn contains(&self, t: &[u32]) -> bool {
        match &self.dedup {
            Dedup::Nullary => self.len > 0,
            Dedup::Bits(b) => {
                let v = t[0] as usize;
                b.get(v / 64).is_some_and(|w| (w >> (v % 64)) & 1 == 1)
            }
            Dedup::Pair(s) => s.contains(&pack(t[0], t[1])),
            Dedup::Wide(s) => s.contains(t),
        }
    }

    fn insert(&mut self, t: &[u32]) -> bool {
        let fresh = match &mut self.dedup {
            Dedup::Nullary => self.len == 0,
            Dedup::Bits(b) => {
                let v = t[0] as usize;
                if b.len() <= v / 64 {
                    b.resize(v / 64 + 1, 0);
                }
                let m = 1u64 << (v % 64);
                let fresh = b[v / 64] & m == 0;
                b[v / 64] |= m;
                fresh
            }
            Dedup::Pair(s) => s.insert(pack(t[0], t[1])),
            Dedup::Wide(s) => s.insert(Row::from_slice(t)),
        };
        if fresh {
            match t {
                [a] => self.rows.push(*a),
                _ => self.rows.extend_from_slice(t),
            }
            self.len += 1;
        }
        fresh
    }
}

fn mask_cols(mask: u32) -> SmallVec<[usize; 4]> {
    (0..32).filter(|c| mask >> c & 1 == 1).collect()
}

const NIL: u32 = u32::MAX;

/// Row ids grouped by the values of some columns. Each group is a chain
/// through `next`, newest row first.
struct Index {
    heads: Heads,
    next: Vec<u32>,
}

enum Heads {
    Dense(Vec<u32>),
    Packed(FxHashMap<u64, u32>),
    Wide(FxHashMap<Row, u32>),
}

impl Index {
    fn new(width: usize, dense: bool) -> Index {
        let heads = match width {
            1 if dense => Heads::Dense(Vec::new()),
            1 | 2 => Heads::Packed(FxHashMap::default()),
            _ => Heads::Wide(FxHashMap::default()),
        };
        Index { heads, next: Vec::new() }
    }

    /// Ids must be added in increasing order without gaps.
    fn add(&mut self, key: &[u32], id: u32) {
        debug_assert_eq!(id as usize, self.next.len());
        let prev = match &mut self.heads {
            Heads::Dense(v) => {
                let k = key[0] as usize;
                if v.len() <= k {
                    v.resize(k + 1, NIL);
                }
                std::mem::replace(&mut v[k], id)
            }
            Heads::Packed(m) => m.insert(pack_key(key), id).unwrap_or(NIL),
            Heads::Wide(m) => m.insert(Row::from_slice(key), id).unwrap_or(NIL),
        };
        self.next.push(prev);
    }

    fn first(&self, key: &[u32]) -> u32 {
        match &self.heads {
            Heads::Dense(v) => v.get(key[0] as usize).copied().unwrap_or(NIL),
            Heads::Packed(m) => m.get(&pack_key(key)).copied().unwrap_or(NIL),
            Heads::Wide(m) => m.get(key).copied().unwrap_or(NIL),
        }
    }
}

fn pack_key(key: &[u32]) -> u64 {
    match key {
        [a] => u64::from(*a),
        [a, b] => pack(*a, *b),
        _ => unreachable!("wide keys use the row map"),
    }
}

fn key_of(row: &[u32], cols: &[usize], buf: &mut Row) {
    buf.clear();
    buf.extend(cols.iter().map(|&c| row[c]));
}

struct EdbRel {
    rel: Rel,
    sorts: Vec<Option<Sort>>,
    max_value: u32,
    indexes: Vec<OnceLock<Index>>,
}

impl EdbRel {
    fn new(arity: usize, sorts: Vec<Option<Sort>>, tuples: impl Iterator<Item = Row>) -> EdbRel {
        let mut rel = Rel::new(arity);
        let mut max_value = 0;
        for t in tuples {
            max_value = t.iter().copied().fold(max_value, u32::max);
            rel.insert(&t);
        }
        let slots = if arity <= MAX_INDEXED_ARITY { 1 << arity } else { 0 };
        EdbRel { rel, sorts, max_value, indexes: (0..slots).map(|_| OnceLock::new()).collect() }
    }

    fn index(&self, mask: u32) -> &Index {
        self.indexes[mask as usize].get_or_init(|| {
            let cols = mask_cols(mask);
            let mut idx = Index::new(cols.len(), self.max_value < DENSE_LIMIT);
            let mut key = Row::new();
            for i in 0..self.rel.len {
                key_of(self.rel.row(i), &cols, &mut key);
                idx.add(&key, i as u32);
            }
            idx
        })
    }
}

/// Input relations prepared for repeated evaluation.
///
/// Indexes are built on first use and shared by every later evaluation.
pub struct Database {
    symbols: SymbolTable,
    rels: BTreeMap<String, EdbRel>,
}

impl Database {
    pub fn from_facts(store: &FactStore) -> Result<Database, DatalogError> {
        let mut rels = BTreeMap::new();
        for pred in store.predicates() {
            let arity = store.arity(pred).expect("listed predicate");
            let tuples = store.relation(pred).expect("listed predicate");
            let mut sorts = vec![None; arity];
            for t in tuples {
                for (pos, v) in t.iter().enumerate() {
                    let s = match v {
                        Value::Sym(_) => Sort::Sym,
                        Value::Num(_) => Sort::Num,
                    };
                    match sorts[pos] {
                        Some(prev) if prev != s => {
                            return Err(DatalogError::SortConflict { pred: pred.to_string(), pos })
                        }
                        _ => sorts[pos] = Some(s),
                    }
                }
            }
            let rows = tuples.iter().map(|t| t.iter().map(|v| raw(*v)).collect());
            rels.insert(pred.to_string(), EdbRel::new(arity, sorts, rows));
        }
        Ok(Database { symbols: store.symbols().clone(), rels })
    }

    /// Relations whose values are all symbol ids of `symbols`, as flat rows.
    pub fn from_rows(
        symbols: SymbolTable,
        relations: impl IntoIterator<Item = (String, usize, Vec<u32>)>,
    ) -> Result<Database, DatalogError> {
        let mut rels = BTreeMap::new();
        for (pred, arity, flat) in relations {
            if (arity == 0 && !flat.is_empty()) || (arity > 0 && flat.len() % arity != 0) {
                return Err(DatalogError::Invalid(format!("rows of `{pred}` do not divide into arity {arity}")));
            }
            if let Some(&v) = flat.iter().find(|&&v| v as usize >= symbols.len()) {
                return Err(DatalogError::Invalid(format!("symbol id {v} is not interned")));
            }
            let sorts = vec![if flat.is_empty() { None } else { Some(Sort::Sym) }; arity];
            let rows = flat.chunks(arity.max(1)).map(Row::from_slice);
            let rel = if arity == 0 { EdbRel::new(0, sorts, std::iter::empty()) } else { EdbRel::new(arity, sorts, rows) };
            if rels.insert(pred.clone(), rel).is_some() {
                return Err(DatalogError::Invalid(format!("relation `{pred}` given twice")));
            }
        }
        Ok(Database { symbols, rels })
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    /// Total number of facts.
    pub fn len(&self) -> usize {
        self.rels.values().map(|r| r.rel.len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn relation_len(&self, pred: &str) -> Option<usize> {
        self.rels.get(pred).map(|r| r.rel.len)
    }
}

fn raw(v: Value) -> u32 {
    match v {
        Value::Sym(s) | Value::Num(s) => s,
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Upper end of the counter range `1..=c_max`. Required by programs
    /// with `N-k` terms or `<=` constraints.
    pub c_max: Option<u32>,
    /// Evaluate in this order instead of the minimal stratification.
    pub stratification: Option<Stratification>,
}

#[derive(Debug, Clone, Copy)]
enum Src {
    Edb(usize),
    Idb(usize),
    Empty,
}

#[derive(Debug, Clone, Copy)]
enum KeySrc {
    Slot(usize),
    Lit(u32),
    SlotMinus(usize, u32),
}

#[derive(Debug, Clone, Copy)]
enum ArgOp {
    Bind(usize, usize),
    Eq(usize, KeySrc),
    BindPlus(usize, usize, u32),
}

#[derive(Debug)]
enum Step {
    Scan { src: Src, delta: bool, ops: Vec<ArgOp> },
    Lookup { src: Src, mask: u32, key: SmallVec<[KeySrc; 2]>, ops: Vec<ArgOp> },
    Check { src: Src, args: SmallVec<[KeySrc; 4]>, negated: bool },
    Le { slot: usize, bound: u32 },
}

#[derive(Debug)]
struct Plan {
    steps: Vec<Step>,
    head: usize,
    head_args: SmallVec<[KeySrc; 4]>,
    head_num: SmallVec<[bool; 4]>,
    slots: usize,
}

struct IdbRel {
    rel: Rel,
    indexes: Vec<(u32, SmallVec<[usize; 4]>, Index)>,
}

impl IdbRel {
    fn insert(&mut self, t: &[u32]) {
        if self.rel.insert(t) {
            let id = (self.rel.len - 1) as u32;
            let mut key = Row::new();
            for (_, cols, idx) in &mut self.indexes {
                key_of(t, cols, &mut key);
                idx.add(&key, id);
            }
        }
    }

    fn index(&self, mask: u32) -> &Index {
        &self.indexes.iter().find(|(m, _, _)| *m == mask).expect("index registered at compile time").2
    }
}

struct Compiler<'a> {
    edb_ids: &'a HashMap<&'a str, usize>,
    idb_ids: &'a HashMap<&'a str, usize>,
    consts: &'a HashMap<&'a str, u32>,
    sorts: &'a HashMap<&'a str, Vec<Sort>>,
    c_max: Option<u32>,
    needed: BTreeSet<(usize, u32)>,
}

impl Compiler<'_> {
    fn src(&self, pred: &str) -> Src {
        if let Some(&i) = self.idb_ids.get(pred) {
            Src::Idb(i)
        } else if let Some(&i) = self.edb_ids.get(pred) {
            Src::Edb(i)
        } else {
            Src::Empty
        }
    }

    fn lit(&self, t: &Term) -> Option<KeySrc> {
        match t {
            Term::Const(c) => Some(KeySrc::Lit(self.consts[c.as_str()])),
            Term::Int(n) => Some(KeySrc::Lit(*n)),
            _ => None,
        }
    }

    /// The value of `t` if every variable it mentions is bound.
    fn known(&self, t: &Term, vars: &HashMap<&str, usize>) -> Option<KeySrc> {
        match t {
            Term::Var(v) => vars.get(v.as_str()).map(|&s| KeySrc::Slot(s)),
            Term::Minus(v, k) => vars.get(v.as_str()).map(|&s| KeySrc::SlotMinus(s, *k)),
            _ => self.lit(t),
        }
    }

    fn bound(&self, b: Bound) -> Result<u32, DatalogError> {
        match b {
            Bound::Int(n) => Ok(n),
            Bound::CMax => self.c_max.ok_or(DatalogError::CounterNeedsSucc),
        }
    }

    /// Places the delta literal first (if any), then repeatedly the first
    /// positive literal sharing a bound variable, falling back to written
    /// order. Filters go in as soon as their variables are bound.
    fn compile<'r>(&mut self, r: &'r Rule, delta: Option<usize>) -> Result<Plan, DatalogError> {
        let mut vars: HashMap<&'r str, usize> = HashMap::new();
        let mut steps = Vec::new();
        let mut placed = vec![false; r.body.len()];
        let mut first = delta;
        loop {
            self.place_filters(r, &mut placed, &vars, &mut steps)?;
            let next = first.take().or_else(|| {
                let open = |i: &usize| !placed[*i] && matches!(r.body[*i], Literal::Pos(_));
                let connected = (0..r.body.len()).filter(open).find(|&i| {
                    let Literal::Pos(a) = &r.body[i] else { unreachable!() };
                    a.args.iter().any(|t| self.known(t, &vars).is_some())
                });
                connected.or_else(|| (0..r.body.len()).find(open))
            });
            let Some(i) = next else { break };
            placed[i] = true;
            let Literal::Pos(a) = &r.body[i] else { unreachable!("only positive literals are joined") };
            steps.push(self.join(a, delta == Some(i), &mut vars));
        }
        debug_assert!(placed.iter().all(|&p| p));
        let head_args = r
            .head
            .args
            .iter()
            .map(|t| {
                self.known(t, &vars)
                    .filter(|k| !matches!(k, KeySrc::SlotMinus(..)))
                    .ok_or_else(|| DatalogError::MalformedCounter(format!("`{t}` in the head of `{}`", r.head)))
            })
            .collect::<Result<_, _>>()?;
        let head_sorts = &self.sorts[r.head.pred.as_str()];
        Ok(Plan {
            steps,
            head: self.idb_ids[r.head.pred.as_str()],
            head_args,
            head_num: head_sorts.iter().map(|&s| s == Sort::Num).collect(),
            slots: vars.len(),
        })
    }

    fn place_filters(
        &mut self,
        r: &Rule,
        placed: &mut [bool],
        vars: &HashMap<&str, usize>,
        steps: &mut Vec<Step>,
    ) -> Result<(), DatalogError> {
        for (i, l) in r.body.iter().enumerate() {
            if placed[i] {
                continue;
            }
            match l {
                Literal::Neg(a) => {
                    let args: Option<SmallVec<[KeySrc; 4]>> = a.args.iter().map(|t| self.known(t, vars)).collect();
                    if let Some(args) = args {
                        placed[i] = true;
                        steps.push(Step::Check { src: self.src(&a.pred), args, negated: true });
                    }
                }
                Literal::Le(v, b) => {
                    if let Some(&slot) = vars.get(v.as_str()) {
                        placed[i] = true;
                        steps.push(Step::Le { slot, bound: self.bound(*b)? });
                    }
                }
                Literal::Pos(_) => {}
            }
        }
        Ok(())
    }

    fn join<'r>(&mut self, a: &'r Atom, delta: bool, vars: &mut HashMap<&'r str, usize>) -> Step {
        let src = self.src(&a.pred);
        let mut key_cols = Vec::new();
        let mut ops = Vec::new();
        for (col, t) in a.args.iter().enumerate() {
            if let Some(k) = self.known(t, vars) {
                key_cols.push((col, k));
            }
        }
        if key_cols.len() == a.arity() && !delta {
            return Step::Check { src, args: key_cols.into_iter().map(|(_, k)| k).collect(), negated: false };
        }
        let indexed = !delta && !key_cols.is_empty() && a.arity() <= MAX_INDEXED_ARITY;
        if !indexed {
            ops.extend(key_cols.iter().map(|&(c, k)| ArgOp::Eq(c, k)));
        }
        for (col, t) in a.args.iter().enumerate() {
            if key_cols.iter().any(|&(c, _)| c == col) {
                continue;
            }
            let (v, k) = match t {
                Term::Var(v) => (v.as_str(), 0),
                Term::Minus(v, k) => (v.as_str(), *k),
                _ => unreachable!("literal terms are always known"),
            };
            match (vars.get(v).copied(), k) {
                (Some(s), 0) => ops.push(ArgOp::Eq(col, KeySrc::Slot(s))),
                (Some(s), k) => ops.push(ArgOp::Eq(col, KeySrc::SlotMinus(s, k))),
                (None, k) => {
                    let s = vars.len();
                    vars.insert(v, s);
                    ops.push(if k == 0 { ArgOp::Bind(col, s) } else { ArgOp::BindPlus(col, s, k) });
                }
            }
        }
        if !indexed {
            return Step::Scan { src, delta, ops };
        }
        let mask = key_cols.iter().fold(0u32, |m, &(c, _)| m | 1 << c);
        if let Src::Idb(i) = src {
            self.needed.insert((i, mask));
        }
        Step::Lookup { src, mask, key: key_cols.into_iter().map(|(_, k)| k).collect(), ops }
    }
}

struct Exec<'a> {
    edb: &'a [&'a EdbRel],
    idb: &'a [IdbRel],
    delta: &'a [(usize, usize)],
    c_max: Option<u32>,
}

impl Exec<'_> {
    fn rel(&self, src: Src) -> Option<&Rel> {
        match src {
            Src::Edb(i) => Some(&self.edb[i].rel),
            Src::Idb(i) => Some(&self.idb[i].rel),
            Src::Empty => None,
        }
    }

    fn value(k: KeySrc, slots: &[u32]) -> Option<u32> {
        match k {
            KeySrc::Slot(s) => Some(slots[s]),
            KeySrc::Lit(v) => Some(v),
            KeySrc::SlotMinus(s, k) => slots[s].checked_sub(k),
        }
    }

    fn apply(&self, ops: &[ArgOp], row: &[u32], slots: &mut [u32]) -> bool {
        for &op in ops {
            match op {
                ArgOp::Bind(c, s) => slots[s] = row[c],
                ArgOp::Eq(c, k) => {
                    if Self::value(k, slots) != Some(row[c]) {
                        return false;
                    }
                }
                ArgOp::BindPlus(c, s, k) => {
                    let Some(v) = row[c].checked_add(k) else { return false };
                    if self.c_max.is_some_and(|m| v > m) {
                        return false;
                    }
                    slots[s] = v;
                }
            }
        }
        true
    }

    fn run(&self, plan: &Plan, i: usize, slots: &mut [u32], out: &mut Vec<u32>) {
        let Some(step) = plan.steps.get(i) else {
            self.emit(plan, slots, out);
            return;
        };
        match step {
            Step::Scan { src, delta, ops } => {
                let Some(rel) = self.rel(*src) else { return };
                let range = match (*delta, src) {
                    (true, Src::Idb(j)) => self.delta[*j].0..self.delta[*j].1,
                    _ => 0..rel.len,
                };
                for r in range {
                    if self.apply(ops, rel.row(r), slots) {
                        self.run(plan, i + 1, slots, out);
                    }
                }
            }
            Step::Lookup { src, mask, key, ops } => {
                let mut k: SmallVec<[u32; 4]> = SmallVec::new();
                for &ks in key {
                    match Self::value(ks, slots) {
                        Some(v) => k.push(v),
                        None => return,
                    }
                }
                let (rel, idx) = match *src {
                    Src::Edb(j) => (&self.edb[j].rel, self.edb[j].index(*mask)),
                    Src::Idb(j) => (&self.idb[j].rel, self.idb[j].index(*mask)),
                    Src::Empty => return,
                };
                let mut r = idx.first(&k);
                while r != NIL {
                    if self.apply(ops, rel.row(r as usize), slots) {
                        self.run(plan, i + 1, slots, out);
                    }
                    r = idx.next[r as usize];
                }
            }
            Step::Check { src, args, negated } => {
                let mut t: SmallVec<[u32; 4]> = SmallVec::new();
                let mut present = true;
                for &a in args {
                    match Self::value(a, slots) {
                        Some(v) => t.push(v),
                        None => present = false,
                    }
                }
                present = present && self.rel(*src).is_some_and(|r| r.contains(&t));
                if present != *negated {
                    self.run(plan, i + 1, slots, out);
                }
            }
            Step::Le { slot, bound } => {
                if slots[*slot] <= *bound {
                    self.run(plan, i + 1, slots, out);
                }
            }
        }
    }

    fn emit(&self, plan: &Plan, slots: &[u32], out: &mut Vec<u32>) {
        let start = out.len();
        for (c, &a) in plan.head_args.iter().enumerate() {
            let v = Self::value(a, slots).expect("head terms never subtract");
            if let Some(m) = self.c_max {
                if plan.head_num[c] && !(1..=m).contains(&v) {
                    out.truncate(start);
                    return;
                }
            }
            out.push(v);
        }
        if plan.head_args.is_empty() {
            if self.idb[plan.head].rel.len == 0 {
                out.push(0);
            }
        } else if self.idb[plan.head].rel.contains(&out[start..]) {
            out.truncate(start);
        }
    }
}

/// The result of evaluating a program: input relations plus every derived
/// relation.
pub struct Evaluation<'d> {
    db: &'d Database,
    goal: String,
    overlay: Vec<String>,
    idb_ids: BTreeMap<String, usize>,
    idb: Vec<IdbRel>,
    sorts: BTreeMap<String, Vec<Sort>>,
}

impl Evaluation<'_> {
    pub fn goal(&self) -> &str {
        &self.goal
    }

    fn rel(&self, pred: &str) -> Option<&Rel> {
        match self.idb_ids.get(pred) {
            Some(&i) => Some(&self.idb[i].rel),
            None => self.db.rels.get(pred).map(|r| &r.rel),
        }
    }

    /// Raw tuples of `pred`, in insertion order.
    pub fn tuples(&self, pred: &str) -> Option<Vec<Vec<u32>>> {
        self.rel(pred).map(|r| (0..r.len).map(|i| r.row(i).to_vec()).collect())
    }

    pub fn contains(&self, pred: &str, tuple: &[u32]) -> bool {
        self.rel(pred).is_some_and(|r| r.arity == tuple.len() && r.contains(tuple))
    }

    /// First-column values of `pred`.
    pub fn unary_ids(&self, pred: &str) -> BTreeSet<u32> {
        match self.rel(pred) {
            Some(r) if r.arity > 0 => (0..r.len).map(|i| r.row(i)[0]).collect(),
            _ => BTreeSet::new(),
        }
    }

    pub fn goal_ids(&self) -> BTreeSet<u32> {
        self.unary_ids(&self.goal)
    }

    pub fn goal_names(&self) -> BTreeSet<String> {
        self.goal_ids().into_iter().map(|id| self.symbol_name(id).to_string()).collect()
    }

    /// Name of a symbol id, including constants introduced by rules.
    pub fn symbol_name(&self, id: u32) -> &str {
        let n = self.db.symbols.len();
        if (id as usize) < n {
            self.db.symbols.name(id)
        } else {
            &self.overlay[id as usize - n]
        }
    }

    pub fn to_fact_store(&self) -> FactStore {
        let mut symbols = self.db.symbols.clone();
        for s in &self.overlay {
            symbols.intern(s);
        }
        let mut store = FactStore::with_symbols(symbols);
        let preds = self.db.rels.keys().chain(self.idb_ids.keys());
        for pred in preds {
            let rel = self.rel(pred).expect("listed predicate");
            let sorts: Vec<Sort> = match (self.sorts.get(pred), self.db.rels.get(pred)) {
                (Some(s), _) => s.clone(),
                (None, Some(e)) => e.sorts.iter().map(|s| s.unwrap_or(Sort::Sym)).collect(),
                (None, None) => vec![Sort::Sym; rel.arity],
            };
            store.declare(pred, rel.arity).expect("one arity per predicate");
            for i in 0..rel.len {
                let t: Tuple = rel
                    .row(i)
                    .iter()
                    .zip(&sorts)
                    .map(|(&v, s)| if *s == Sort::Num { Value::Num(v) } else { Value::Sym(v) })
                    .collect();
                store.insert(pred, t).expect("symbols interned");
            }
        }
        store
    }
}

fn check_stratification(p: &Program, s: &Stratification) -> Result<(), DatalogError> {
    if s.is_valid_for(p) {
        return Ok(());
    }
    for r in &p.rules {
        let single = Program::new(vec![r.clone()], &p.goal);
        if !s.is_valid_for(&single) {
            return Err(DatalogError::InvalidStratification(r.to_string()));
        }
    }
    Err(DatalogError::InvalidStratification(String::new()))
}

/// Bottom-up evaluation, one stratum at a time, semi-naive within a stratum.
pub fn run<'d>(p: &Program, db: &'d Database, opts: &EvalOptions) -> Result<Evaluation<'d>, DatalogError> {
    check_safety(p)?;
    if opts.c_max == Some(0) {
        return Err(DatalogError::Invalid("c_max must be at least 1".into()));
    }
    if opts.c_max.is_none() && p.uses_counters() {
        return Err(DatalogError::CounterNeedsSucc);
    }
    let idb_preds = p.idb_predicates();
    if let Some(pred) = idb_preds.iter().find(|q| db.rels.get(**q).is_some_and(|r| r.rel.len > 0)) {
        return Err(DatalogError::EdbIdbCollision { pred: pred.to_string() });
    }
    let edb_schema = db
        .rels
        .iter()
        .filter(|(name, _)| !idb_preds.contains(name.as_str()))
        .map(|(name, r)| (name.clone(), (r.rel.arity, r.sorts.clone())))
        .collect();
    let schema = analyze(p, &edb_schema)?;
    let strat = match &opts.stratification {
        Some(s) => {
            check_stratification(p, s)?;
            s.clone()
        }
        None => stratify(p)?,
    };

    let mut consts: HashMap<&str, u32> = HashMap::new();
    let mut overlay: Vec<String> = Vec::new();
    for r in &p.rules {
        for a in std::iter::once(&r.head).chain(r.body.iter().filter_map(Literal::atom)) {
            for t in &a.args {
                if let Term::Const(c) = t {
                    if !consts.contains_key(c.as_str()) {
                        let id = db.symbols.get(c).unwrap_or_else(|| {
                            overlay.push(c.clone());
                            (db.symbols.len() + overlay.len() - 1) as u32
                        });
                        consts.insert(c, id);
                    }
                }
            }
        }
    }

    let idb_names: Vec<&str> = idb_preds.iter().copied().collect();
    let idb_ids: HashMap<&str, usize> = idb_names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let edb_list: Vec<&EdbRel> = db.rels.values().collect();
    let edb_ids: HashMap<&str, usize> = db
        .rels
        .keys()
        .enumerate()
        .filter(|(_, n)| !idb_ids.contains_key(n.as_str()))
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let sorts: HashMap<&str, Vec<Sort>> =
        schema.preds.iter().map(|(n, s)| (n.as_str(), s.sorts.clone())).collect();
    let mut comp = Compiler {
        edb_ids: &edb_ids,
        idb_ids: &idb_ids,
        consts: &consts,
        sorts: &sorts,
        c_max: opts.c_max,
        needed: BTreeSet::new(),
    };

    let layers = strat.max() + 1;
    let mut full_plans: Vec<Vec<Plan>> = (0..layers).map(|_| Vec::new()).collect();
    let mut delta_plans: Vec<Vec<Plan>> = (0..layers).map(|_| Vec::new()).collect();
    for r in &p.rules {
        let level = strat.get(&r.head.pred).expect("stratification covers every predicate");
        full_plans[level].push(comp.compile(r, None)?);
        for (i, l) in r.body.iter().enumerate() {
            if let Literal::Pos(a) = l {
                if idb_ids.contains_key(a.pred.as_str()) && strat.get(&a.pred) == Some(level) {
                    delta_plans[level].push(comp.compile(r, Some(i))?);
                }
            }
        }
    }

    let dense = db.rels.values().all(|r| r.max_value < DENSE_LIMIT)
        && p.rules.iter().all(|r| {
            std::iter::once(&r.head)
                .chain(r.body.iter().filter_map(Literal::atom))
                .all(|a| a.args.iter().all(|t| !matches!(t, Term::Int(n) if *n >= DENSE_LIMIT)))
        })
        && opts.c_max.is_none_or(|m| m < DENSE_LIMIT)
        && db.symbols.len() + overlay.len() < DENSE_LIMIT as usize;
    let mut idb: Vec<IdbRel> = idb_names
        .iter()
        .map(|n| IdbRel { rel: Rel::new(sorts[n].len()), indexes: Vec::new() })
        .collect();
    for &(i, mask) in &comp.needed {
        let cols = mask_cols(mask);
        let index = Index::new(cols.len(), dense);
        idb[i].indexes.push((mask, cols, index));
    }

    let mut delta = vec![(0usize, 0usize); idb.len()];
    for level in 0..layers {
        let mut plans: &[Plan] = &full_plans[level];
        loop {
            let mut pending: Vec<(usize, Vec<u32>)> = Vec::new();
            {
                let exec = Exec { edb: &edb_list, idb: &idb, delta: &delta, c_max: opts.c_max };
                for plan in plans {
                    let mut out = Vec::new();
                    let mut slots = vec![0u32; plan.slots];
                    exec.run(plan, 0, &mut slots, &mut out);
                    if !out.is_empty() {
                        pending.push((plan.head, out));
                    }
                }
            }
            let before: Vec<usize> = idb.iter().map(|r| r.rel.len).collect();
            for (head, rows) in pending {
                let arity = idb[head].rel.arity;
                if arity == 0 {
                    idb[head].insert(&[]);
                } else {
                    for t in rows.chunks(arity) {
                        idb[head].insert(t);
                    }
                }
            }
            let mut grew = false;
            for (i, r) in idb.iter().enumerate() {
                delta[i] = (before[i], r.rel.len);
                grew |= r.rel.len > before[i];
            }
            if !grew || delta_plans[level].is_empty() {
                break;
            }
            plans = &delta_plans[level];
        }
    }

    Ok(Evaluation {
        db,
        goal: p.goal.clone(),
        overlay,
        idb_ids: idb_names.iter().map(|n| (n.to_string(), idb_ids[n])).collect(),
        idb,
        sorts: schema.preds.into_iter().filter(|(_, s)| s.idb).map(|(n, s)| (n, s.sorts)).collect(),
    })
}

/// Evaluates a stratified program without counters. The result holds the
/// input facts and every derived relation.
pub fn evaluate(p: &Program, d: &FactStore) -> Result<FactStore, DatalogError> {
    let db = Database::from_facts(d)?;
    Ok(run(p, &db, &EvalOptions::default())?.to_fact_store())
}

/// Evaluates a program whose counters range over `1..=c_max`.
pub fn evaluate_succ(p: &Program, d: &FactStore, c_max: u32) -> Result<FactStore, DatalogError> {
    let db = Database::from_facts(d)?;
    let opts = EvalOptions { c_max: Some(c_max), stratification: None };
    Ok(run(p, &db, &opts)?.to_fact_store())
}

/// Evaluates strata in the order given by `s`, which must be valid for `p`.
pub fn evaluate_with_stratification(
    p: &Program,
    d: &FactStore,
    s: &Stratification,
) -> Result<FactStore, DatalogError> {
    let db = Database::from_facts(d)?;
    let opts = EvalOptions { c_max: None, stratification: Some(s.clone()) };
    Ok(run(p, &db, &opts)?.to_fact_store())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{parse_facts, parse_program};

    fn names(store: &FactStore, pred: &str) -> Vec<String> {
        let mut rows: Vec<String> = store
            .relation(pred)
            .into_iter()
            .flatten()
            .map(|t| t.iter().map(|&v| store.value_name(v)).collect::<Vec<_>>().join(","))
            .collect();
        rows.sort();
        rows
    }

    #[test]
    fn copy_rule() {
        let out = evaluate(&parse_program("G(X) :- P(X).").unwrap(), &parse_facts("P(a).").unwrap()).unwrap();
        assert_eq!(names(&out, "G"), ["a"]);
        assert_eq!(names(&out, "P"), ["a"]);
    }

    #[test]
    fn transitive_closure() {
        let p = parse_program("T(X,Y) :- R(X,Y).\nT(X,Y) :- R(X,Z), T(Z,Y).").unwrap();
        let out = evaluate(&p, &parse_facts("R(a,b).\nR(b,c).").unwrap()).unwrap();
        assert_eq!(names(&out, "T"), ["a,b", "a,c", "b,c"]);
    }

    #[test]
    fn until_tilde_cycle() {
        let p = parse_program(
            "G1(X) :- W(X).\nG2(X) :- W(X), !G1(X).\nG3(X) :- P0(X).\nG(X) :- G2(X), G3(X).\nG(X) :- B(X,X).\n\
             G(X) :- G3(X), R(X,Y), G(Y).\nB(X,Y) :- G3(X), R(X,Y), G3(Y).\nB(X,Y) :- G3(X), R(X,U), B(U,Y).\n\
             W(X) :- R(X,Y).\nW(X) :- R(Y,X).\nW(X) :- P0(X).",
        )
        .unwrap();
        let out = evaluate(&p, &parse_facts("R(a,b).\nR(b,a).\nP0(a).\nP0(b).").unwrap()).unwrap();
        assert_eq!(names(&out, "G"), ["a", "b"]);
        let out = evaluate(&p, &parse_facts("R(a,b).\nR(b,a).\nP0(a).").unwrap()).unwrap();
        assert!(names(&out, "G").is_empty());
    }

    #[test]
    fn stratified_negation() {
        let p = parse_program("A :- !B.\nB :- !C.\nC :- D.").unwrap();
        let out = evaluate(&p, &FactStore::new()).unwrap();
        assert_eq!(out.relation("A").unwrap().len(), 0);
        assert_eq!(out.relation("B").unwrap().len(), 1);
        let out = evaluate(&p, &parse_facts("D.").unwrap()).unwrap();
        assert_eq!(out.relation("A").unwrap().len(), 1);
        assert_eq!(out.relation("D").unwrap().len(), 1);
    }

    #[test]
    fn counters() {
        let p = parse_program(
            "C(X,1) :- G2(X), S0(X,Y), !2S(X), G2(Y).\n\
             C(X,N) :- G2(X), S0(X,Y), !2S(X), C(Y,N-1), N <= cmax.\n\
             2S(X) :- S0(X,Y), S1(X,Z).\nG2(X) :- P0(X).",
        )
        .unwrap();
        let d = parse_facts("S0(a,a).\nP0(a).\nS1(b,b).").unwrap();
        let out = evaluate_succ(&p, &d, 1).unwrap();
        assert_eq!(names(&out, "C"), ["a,1"]);
        let out = evaluate_succ(&p, &d, 3).unwrap();
        assert_eq!(names(&out, "C"), ["a,1", "a,2", "a,3"]);
        assert_eq!(evaluate(&p, &d).unwrap_err(), DatalogError::CounterNeedsSucc);
    }

    #[test]
    fn head_counter_outside_range_does_not_fire() {
        let p = parse_program("C(X,5) :- P(X).\nD(X,1) :- P(X).").unwrap();
        let out = evaluate_succ(&p, &parse_facts("P(a).").unwrap(), 3).unwrap();
        assert!(names(&out, "C").is_empty());
        assert_eq!(names(&out, "D"), ["a,1"]);
    }

    #[test]
    fn rule_constants_and_errors() {
        let p = parse_program("G(X) :- R(X,c).\nH(d) :- R(X,Y).").unwrap();
        let out = evaluate(&p, &parse_facts("R(a,c).\nR(b,a).").unwrap()).unwrap();
        assert_eq!(names(&out, "G"), ["a"]);
        assert_eq!(names(&out, "H"), ["d"]);

        let p = parse_program("P(X) :- Q(X).").unwrap();
        assert!(matches!(
            evaluate(&p, &parse_facts("P(a).\nQ(a).").unwrap()),
            Err(DatalogError::EdbIdbCollision { .. })
        ));
        let p = parse_program("G(X) :- R(X).").unwrap();
        assert!(matches!(evaluate(&p, &parse_facts("R(a,b).").unwrap()), Err(DatalogError::ArityMismatch { .. })));
        let p = parse_program("G(X) :- P(X), !G(X).").unwrap();
        assert!(matches!(evaluate(&p, &parse_facts("P(a).").unwrap()), Err(DatalogError::NotStratifiable { .. })));
    }

    #[test]
    fn repeated_variables_and_shared_database() {
        let p = parse_program("L(X) :- R(X,X).\nS(X,Y) :- R(X,Y), R(Y,X).").unwrap();
        let store = parse_facts("R(a,a).\nR(a,b).\nR(b,a).\nR(b,c).").unwrap();
        let db = Database::from_facts(&store).unwrap();
        for _ in 0..2 {
            let ev = run(&p, &db, &EvalOptions::default()).unwrap();
            let l: BTreeSet<String> = ev.unary_ids("L").into_iter().map(|i| ev.symbol_name(i).to_string()).collect();
            assert_eq!(l, BTreeSet::from(["a".to_string()]));
            assert_eq!(ev.tuples("S").unwrap().len(), 3);
        }
    }

    #[test]
    fn explicit_stratification() {
        let p = parse_program("A :- !B.\nB :- !C.\nC :- D.").unwrap();
        let mut s = stratify(&p).unwrap();
        s.strata.insert("A".into(), 5);
        let out = evaluate_with_stratification(&p, &FactStore::new(), &s).unwrap();
        assert!(out.same_facts(&evaluate(&p, &FactStore::new()).unwrap()));
        s.strata.insert("B".into(), 0);
        assert!(matches!(
            evaluate_with_stratification(&p, &FactStore::new(), &s),
            Err(DatalogError::InvalidStratification(_))
        ));
    }
}
