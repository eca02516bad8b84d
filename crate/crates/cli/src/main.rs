use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ctl_datalog::bench::{bench_routes, render_csv, BenchError};
use ctl_datalog::ctl::{model_check, parse_formula_with, render_formula, to_enf, to_pnf, AtomTable, Formula};
use ctl_datalog::datalog::{evaluate, evaluate_succ, parse_facts, parse_program, render_program, FactStore, Program};
use ctl_datalog::decision::{
    bounded_contained, bounded_satisfiable, evaluate_std_via_ctl, std_contained, BoundedVerdict, SearchBound, Witness,
};
use ctl_datalog::kripke::{parse_database, parse_kripke, render_kripke, total_closure, KripkeStructure};
use ctl_datalog::std_bridge::{ctl_to_std, flatten, recognize_std, render_sexpr, std_to_ctl, StdProgram};
use ctl_datalog::tds_bridge::{ctl_to_tds, flatten_tds};

/// Exit code for a broken internal invariant. Usage and input errors exit
/// with 2, as clap does.
const INVARIANT: u8 = 3;

/// Marks an error as an internal invariant violation.
#[derive(Debug)]
struct Invariant(String);

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for Invariant {}

#[derive(Parser)]
#[command(name = "ctldl", version, about = "CTL model checking and its Datalog translations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FormulaArg {
    /// Formula text, e.g. `E[ p U q ] & !AX r`.
    #[arg(long, conflicts_with = "formula_file")]
    formula: Option<String>,
    /// File holding the formula.
    #[arg(long)]
    formula_file: Option<PathBuf>,
}

impl FormulaArg {
    fn text(&self) -> Result<String> {
        match (&self.formula, &self.formula_file) {
            (Some(t), _) => Ok(t.clone()),
            (None, Some(p)) => read(p),
            (None, None) => bail!("give --formula or --formula-file"),
        }
    }

    /// Parses against `table`, adding atoms it does not know.
    fn parse(&self, table: &mut AtomTable) -> Result<Formula> {
        let text = self.text()?;
        parse_formula_with(text.trim(), table).context("parsing formula")
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Ctl2std,
    Ctl2tds,
    Std2ctl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Datalog,
    ViaCtl,
    Succ,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Enf,
    Pnf,
}

#[derive(Subcommand)]
enum Command {
    /// Translate between formulas and programs.
    Translate {
        direction: Direction,
        #[command(flatten)]
        formula: FormulaArg,
        /// Program file (std2ctl).
        #[arg(long)]
        program: Option<PathBuf>,
        /// Counter bound written into the rules for A[. ~U .] (ctl2tds).
        #[arg(long)]
        c_max: Option<u32>,
        /// Write here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Evaluate a program on a database and print the goal facts.
    Eval {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long, value_enum, default_value = "datalog")]
        engine: Engine,
        /// Counter bound for `succ`; defaults to the number of constants.
        #[arg(long)]
        c_max: Option<u32>,
    },
    /// Print the states of a structure where a formula holds.
    Mc {
        #[arg(long)]
        kripke: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Add a self-loop at every constant without a successor.
    Closure {
        #[arg(long)]
        db: PathBuf,
    },
    /// Rewrite a formula into existential or positive normal form.
    Normalize {
        #[arg(long, value_enum)]
        form: Form,
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Search small structures for a model.
    Sat {
        #[command(flatten)]
        formula: FormulaArg,
        /// Largest number of states to try.
        #[arg(long, default_value_t = 3)]
        bound: usize,
    },
    /// Search small structures for a state in the left truth set and
    /// outside the right one.
    Contains {
        #[arg(long, required_unless_present = "p1")]
        f1: Option<String>,
        #[arg(long, required_unless_present = "p2")]
        f2: Option<String>,
        /// STD program file, instead of --f1.
        #[arg(long, conflicts_with = "f1")]
        p1: Option<PathBuf>,
        #[arg(long, conflicts_with = "f2")]
        p2: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        bound: usize,
    },
    /// Formula to ENF, to an STD program, and back.
    Roundtrip {
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Time via-ctl against direct evaluation on random structures.
    Bench {
        /// Comma-separated transition counts; empty prints only the header.
        #[arg(long, default_value = "1000,2000,4000,8000,16000")]
        sizes: String,
        #[arg(long, default_value = "E[ p U q ]")]
        formula: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Atom names as a comment line, so `P_i` can be read back as a name.
fn atoms_comment(atoms: &AtomTable) -> String {
    let names: Vec<String> = atoms.names().iter().enumerate().map(|(i, n)| format!("P{i}={n}")).collect();
    format!("% atoms: {}\n", names.join(" "))
}

/// Reads back the names written by [`atoms_comment`], or `p0 ..`.
fn atoms_from_comment(text: &str, n: usize) -> AtomTable {
    let mut named: Vec<Option<String>> = vec![None; n];
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix("% atoms:") {
            for pair in rest.split_whitespace() {
                if let Some((p, name)) = pair.split_once('=') {
                    if let Some(i) = p.strip_prefix('P').and_then(|i| i.parse::<usize>().ok()) {
                        if i < n {
                            named[i] = Some(name.to_string());
                        }
                    }
                }
            }
        }
    }
    let mut t = AtomTable::new();
    for (i, name) in named.into_iter().enumerate() {
        let name = name.filter(|nm| t.get(nm).is_none()).unwrap_or_else(|| format!("p{i}"));
        t.intern(&name);
    }
    t
}

fn load_std(path: &Path) -> Result<(StdProgram, AtomTable)> {
    let text = read(path)?;
    let prog = parse_program(&text).with_context(|| format!("parsing {}", path.display()))?;
    let p = recognize_std(&prog).with_context(|| format!("{} is not an STD program", path.display()))?;
    let atoms = atoms_from_comment(&text, p.atom_count);
    Ok((p, atoms))
}

fn goal_facts(store: &FactStore, goal: &str) -> String {
    let mut only = FactStore::with_symbols(store.symbols().clone());
    if let (Some(arity), Some(rel)) = (store.arity(goal), store.relation(goal)) {
        only.declare(goal, arity).expect("fresh store");
        for t in rel {
            only.insert(goal, t.clone()).expect("same symbols");
        }
    }
    only.render()
}

/// The witness with its atoms renamed after `atoms`.
fn render_witness(w: &Witness, atoms: &AtomTable) -> Result<String> {
    let k = &w.structure;
    let mut table = AtomTable::new();
    for a in 0..k.ap().len() {
        match atoms.name(a) {
            Some(n) => table.intern(n),
            None => table.intern(&format!("p{a}")),
        };
    }
    let labels = (0..k.ap().len()).map(|a| k.atom_states(a).clone()).collect();
    let renamed = KripkeStructure::new(k.state_names().to_vec(), k.edges(), table, labels)?;
    Ok(format!("state: {}\n{}", w.state_name(), render_kripke(&renamed)))
}

fn bound_note(b: &SearchBound) -> String {
    let complete = if b.is_complete() { "complete" } else { "not complete" };
    format!("searched up to {} states ({complete}; {} would suffice)", b.searched, b.sufficient)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Translate { direction, formula, program, c_max, output } => {
            let text = match direction {
                Direction::Ctl2std => {
                    let mut atoms = AtomTable::new();
                    let f = to_enf(&formula.parse(&mut atoms)?);
                    let p = ctl_to_std(&f, atoms.len())?;
                    format!("{}{}", atoms_comment(&atoms), render_program(&flatten(&p)))
                }
                Direction::Ctl2tds => {
                    let mut atoms = AtomTable::new();
                    let f = to_pnf(&formula.parse(&mut atoms)?);
                    let n = atoms.len().max(1);
                    let p = ctl_to_tds(&f, n)?;
                    let c_max = match c_max {
                        Some(c) => c,
                        None if p.uses_counters() => bail!("A[. ~U .] needs --c-max (the number of states)"),
                        None => 1,
                    };
                    format!("{}{}", atoms_comment(&atoms), render_program(&flatten_tds(&p, c_max)?))
                }
                Direction::Std2ctl => {
                    let path = program.context("std2ctl needs --program")?;
                    let (p, atoms) = load_std(&path)?;
                    format!("{}\n", render_formula(&std_to_ctl(&p), &atoms))
                }
            };
            emit(&text, output.as_deref())?;
            Ok(0)
        }
        Command::Eval { program, db, engine, c_max } => {
            let db_text = read(&db)?;
            let out = match engine {
                Engine::Datalog | Engine::Succ => {
                    let prog: Program = parse_program(&read(&program)?).context("parsing program")?;
                    let store = parse_facts(&db_text).context("parsing database")?;
                    let result = match engine {
                        Engine::Succ => {
                            let c = c_max.unwrap_or(store.symbols().len() as u32).max(1);
                            evaluate_succ(&prog, &store, c)?
                        }
                        _ => evaluate(&prog, &store)?,
                    };
                    goal_facts(&result, &prog.goal)
                }
                Engine::ViaCtl => {
                    let (p, _) = load_std(&program)?;
                    let d = parse_database(&db_text).context("parsing database")?;
                    let result = evaluate_std_via_ctl(&p, &d)?;
                    goal_facts(&result, "G")
                }
            };
            print!("{out}");
            Ok(0)
        }
        Command::Mc { kripke, formula } => {
            let k = parse_kripke(&read(&kripke)?).context("parsing structure")?;
            let mut atoms = k.ap().clone();
            let f = formula.parse(&mut atoms)?;
            let k = k.with_atom_count(atoms.len());
            for s in model_check(&k, &f)?.iter() {
                println!("{}", k.state_name(s));
            }
            Ok(0)
        }
        Command::Closure { db } => {
            let d = parse_database(&read(&db)?).context("parsing database")?;
            print!("{}", total_closure(&d)?.render());
            Ok(0)
        }
        Command::Normalize { form, formula } => {
            let mut atoms = AtomTable::new();
            let f = formula.parse(&mut atoms)?;
            let g = match form {
                Form::Enf => to_enf(&f),
                Form::Pnf => to_pnf(&f),
            };
            println!("{}", render_formula(&g, &atoms));
            Ok(0)
        }
        Command::Sat { formula, bound } => {
            let mut atoms = AtomTable::new();
            let f = formula.parse(&mut atoms)?;
            match bounded_satisfiable(&f, bound)? {
                BoundedVerdict::Holds { witness: Some(w), .. } => {
                    println!("satisfiable");
                    print!("{}", render_witness(&w, &atoms)?);
                    Ok(0)
                }
                BoundedVerdict::ExhaustedBound(b) => {
                    println!("no model found; {}", bound_note(&b));
                    Ok(1)
                }
                other => Err(Invariant(format!("unexpected satisfiability verdict `{}`", other.kind())).into()),
            }
        }
        Command::Contains { f1, f2, p1, p2, bound } => {
            let mut atoms = AtomTable::new();
            let verdict = match (p1, p2) {
                (Some(p1), Some(p2)) => {
                    let (a, names) = load_std(&p1)?;
                    let (b, _) = load_std(&p2)?;
                    atoms = names;
                    if a.atom_count != b.atom_count {
                        let n = a.atom_count.max(b.atom_count);
                        let widen = |p: StdProgram| ctl_to_std(&std_to_ctl(&p), n);
                        std_contained(&widen(a)?, &widen(b)?, bound)?
                    } else {
                        std_contained(&a, &b, bound)?
                    }
                }
                (None, None) => {
                    let parse = |t: &str, atoms: &mut AtomTable| parse_formula_with(t, atoms).context("parsing formula");
                    let a = parse(f1.as_deref().context("give --f1 or --p1")?, &mut atoms)?;
                    let b = parse(f2.as_deref().context("give --f2 or --p2")?, &mut atoms)?;
                    bounded_contained(&a, &b, bound)?
                }
                _ => bail!("compare two formulas (--f1/--f2) or two programs (--p1/--p2)"),
            };
            match verdict {
                BoundedVerdict::CounterexampleFound(w) => {
                    println!("not contained");
                    print!("{}", render_witness(&w, &atoms)?);
                    Ok(1)
                }
                BoundedVerdict::Holds { bound, .. } => {
                    println!("contained; {}", bound_note(&bound));
                    Ok(0)
                }
                other => Err(Invariant(format!("unexpected containment verdict `{}`", other.kind())).into()),
            }
        }
        Command::Roundtrip { formula } => {
            let mut atoms = AtomTable::new();
            let enf = to_enf(&formula.parse(&mut atoms)?);
            let p = ctl_to_std(&enf, atoms.len())?;
            let prog = flatten(&p);
            let back = std_to_ctl(&recognize_std(&prog)?);
            println!("enf: {}", render_formula(&enf, &atoms));
            println!("std: {}", render_sexpr(&p, Some(&atoms)));
            print!("{}", render_program(&prog));
            println!("recovered: {}", render_formula(&back, &atoms));
            if back != enf {
                return Err(Invariant("recovered formula differs from the ENF input".into()).into());
            }
            Ok(0)
        }
        Command::Bench { sizes, formula, seed, repeats } => {
            let sizes: Vec<usize> = sizes
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().with_context(|| format!("bad size `{s}`")))
                .collect::<Result<_>>()?;
            let mut atoms = AtomTable::new();
            let f = to_enf(&parse_formula_with(&formula, &mut atoms).context("parsing formula")?);
            let rows = bench_routes(&f, &sizes, seed, repeats)?;
            print!("{}", render_csv(&rows));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let broken = e.downcast_ref::<Invariant>().is_some()
                || matches!(e.downcast_ref::<BenchError>(), Some(BenchError::Disagreement(_)));
            let code = if broken { INVARIANT } else { 2 };
            ExitCode::from(code)
        }
    }
}
