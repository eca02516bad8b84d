//! Wall-clock comparison of the two ways to evaluate an STD program.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::ctl::Formula;
use crate::datalog::{evaluate, DatalogError};
use crate::decision::{evaluate_std_via_ctl, ViaCtlError};
use crate::gen::random_large_structure;
use crate::kripke::kripke_to_db;
use crate::std_bridge::{ctl_to_std, flatten, StdError};

pub const ROUTES: [&str; 2] = ["via-ctl", "datalog"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// Transitions in the structure.
    pub size: usize,
    pub route: &'static str,
    /// Median over the repeats.
    pub millis: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Std(#[from] StdError),
    #[error(transparent)]
    ViaCtl(#[from] ViaCtlError),
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error("routes disagree at size {0}")]
    Disagreement(usize),
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Times both routes for `f` on one random structure per size (seeded by
/// `seed`), taking the median of `repeats` runs. Also checks that the
/// routes return the same goal facts.
pub fn bench_routes(f: &Formula, sizes: &[usize], seed: u64, repeats: usize) -> Result<Vec<BenchRow>, BenchError> {
    let atoms = f.atom_count().max(1);
    let p = ctl_to_std(f, atoms)?;
    let prog = flatten(&p);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &size in sizes {
        let d = kripke_to_db(&random_large_structure(&mut rng, size, atoms));
        let store = d.to_fact_store();
        let mut via = Vec::new();
        let mut direct = Vec::new();
        let mut answers = None;
        for _ in 0..repeats.max(1) {
            let t = Instant::now();
            let a = evaluate_std_via_ctl(&p, &d)?;
            via.push(t.elapsed().as_secs_f64() * 1e3);
            let t = Instant::now();
            let b = evaluate(&prog, &store)?;
            direct.push(t.elapsed().as_secs_f64() * 1e3);
            answers = Some((a.unary_names("G"), b.unary_names("G")));
        }
        if let Some((a, b)) = answers {
            if a != b {
                return Err(BenchError::Disagreement(size));
            }
        }
        rows.push(BenchRow { size, route: ROUTES[0], millis: median(via) });
        rows.push(BenchRow { size, route: ROUTES[1], millis: median(direct) });
    }
    Ok(rows)
}

/// CSV with header `size,route,millis`.
pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("size,route,millis\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.3}\n", r.size, r.route, r.millis));
    }
    out
}
