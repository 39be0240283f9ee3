use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use steiner_core::gen::{gen_random, GenParams, Planted};
use steiner_core::oracle::{brute_force, Restriction, MAX_ORACLE_EDGES};
use steiner_core::weight::format_rational;
use steiner_core::{Error, Graph, Rational, TerminalSpec, Weight};

use crate::commands::{
    default_components, directed_run, forest_run, parse_epsilon, read_instance, tree_run, CliError, DirectedRun, Status,
};
use crate::report::{emit, Record};

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Instance files; a generated suite is used when none are given.
    pub instances: Vec<PathBuf>,
    /// Instances per kind in the generated suite.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "1")]
    pub epsilon: String,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Append every cell's record to this JSON-lines file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Tree,
    Forest,
    Directed,
}

struct Item {
    id: String,
    graph: Graph,
    spec: TerminalSpec,
}

impl Item {
    fn kind(&self) -> Kind {
        if self.graph.is_directed() {
            Kind::Directed
        } else if self.spec.is_forest() {
            Kind::Forest
        } else {
            Kind::Tree
        }
    }
}

/// Planted instances small enough for the brute-force oracle.
fn generated_suite(count: usize, seed: u64) -> Result<Vec<Item>, CliError> {
    let mut items = Vec::new();
    for i in 0..count {
        let s = seed.wrapping_add(i as u64);
        for (kind, directed, forest) in [("tree", false, false), ("forest", false, true), ("directed", true, false)] {
            let mut params = GenParams::new(7, if directed { 3 } else { 4 }, s);
            params.extra_edges = 5;
            params.directed = directed;
            params.forest = forest;
            params.planted = Some(Planted { p: i % 3, c: 1 + i % 2 });
            let x = gen_random(&params)?;
            items.push(Item { id: format!("gen-{kind}-{s}"), graph: x.graph, spec: x.spec });
        }
    }
    Ok(items)
}

struct Optimum {
    /// Unrestricted optimum.
    best: Option<Weight>,
    /// Optimum within the solver's parameters, the comparison point of the claimed ratio.
    restricted: Option<Weight>,
}

fn optimum(item: &Item, p: usize) -> Optimum {
    if item.graph.edge_count() > MAX_ORACLE_EDGES {
        return Optimum { best: None, restricted: None };
    }
    let restrict = match item.kind() {
        Kind::Forest => Restriction::new(p, default_components(&item.spec)),
        _ => Restriction::steiner(p),
    };
    Optimum {
        best: brute_force(&item.graph, &item.spec, Restriction::none()).ok().map(|r| r.cost),
        restricted: brute_force(&item.graph, &item.spec, restrict).ok().map(|r| r.cost),
    }
}

fn solvers(kind: Kind) -> [&'static str; 2] {
    match kind {
        Kind::Tree => ["epas-st", "exact-st"],
        Kind::Forest => ["epas-sf", "exact-sf"],
        Kind::Directed => ["epas-dst", "exact-dst"],
    }
}

fn run_cell(item: &Item, solver: &str, eps: &Rational, p: usize, opt: &Optimum) -> (Record, bool) {
    let mut rec = Record::new(&item.id, solver);
    let exact = solver.starts_with("exact");
    let start = Instant::now();
    let result = match item.kind() {
        Kind::Tree => tree_run(&item.graph, &item.spec, eps, p, exact).map(DirectedRun::Solved),
        Kind::Forest => forest_run(&item.graph, &item.spec, eps, p, None, exact).map(DirectedRun::Solved),
        Kind::Directed => directed_run(&item.graph, &item.spec, eps, p, exact),
    };
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut violation = false;
    match result {
        Ok(DirectedRun::Solved(run)) => {
            run.fill(&mut rec);
            if let Some(best) = &opt.best {
                rec.set_oracle(&run.solution.cost, best);
            }
            if let (Some(r), Some(claimed)) = (&opt.restricted, &run.claimed_ratio) {
                violation = !run.guarantee_void && run.solution.cost > r * claimed;
            }
        }
        Ok(DirectedRun::CertifiedNo(why)) => {
            rec.status = "certified-no".into();
            // a certified no is wrong when a solution within the budget exists
            violation = opt.restricted.is_some();
            rec.message = Some(why);
        }
        Err(Error::Infeasible(why)) => {
            rec.status = "infeasible".into();
            violation = opt.best.is_some();
            rec.message = Some(why);
        }
        Err(e) => {
            rec.status = "error".into();
            rec.message = Some(e.to_string());
        }
    }
    (rec, violation)
}

#[derive(Default)]
struct Row {
    cells: usize,
    solved: usize,
    certified_no: usize,
    errors: usize,
    ratios: Vec<f64>,
    violations: usize,
}

pub fn table(records: &[(Record, bool)]) -> String {
    let mut rows: BTreeMap<&str, Row> = BTreeMap::new();
    for (rec, violation) in records {
        let row = rows.entry(rec.solver.as_str()).or_default();
        row.cells += 1;
        match rec.status.as_str() {
            "solved" => row.solved += 1,
            "certified-no" => row.certified_no += 1,
            "error" => row.errors += 1,
            _ => {}
        }
        row.ratios.extend(rec.ratio);
        row.violations += usize::from(*violation);
    }
    let mut out = format!(
        "{:<10} {:>6} {:>7} {:>13} {:>7} {:>11} {:>10} {:>11}\n",
        "solver", "cells", "solved", "certified-no", "errors", "mean-ratio", "max-ratio", "violations"
    );
    for (solver, row) in rows {
        let (mean, max) = if row.ratios.is_empty() {
            ("-".to_string(), "-".to_string())
        } else {
            let mean = row.ratios.iter().sum::<f64>() / row.ratios.len() as f64;
            let max = row.ratios.iter().copied().fold(f64::MIN, f64::max);
            (format!("{mean:.4}"), format!("{max:.4}"))
        };
        out += &format!(
            "{:<10} {:>6} {:>7} {:>13} {:>7} {:>11} {:>10} {:>11}\n",
            solver, row.cells, row.solved, row.certified_no, row.errors, mean, max, row.violations
        );
    }
    out
}

pub fn run(a: &BenchArgs) -> Result<Status, CliError> {
    let eps = parse_epsilon(&a.epsilon)?;
    let items = if a.instances.is_empty() {
        generated_suite(a.count, a.seed)?
    } else {
        a.instances
            .iter()
            .map(|path| {
                let (graph, spec) = read_instance(path)?;
                Ok(Item { id: path.display().to_string(), graph, spec })
            })
            .collect::<Result<Vec<_>, CliError>>()?
    };
    let optima: Vec<Optimum> = items.par_iter().map(|item| optimum(item, a.p)).collect();
    let cells: Vec<(usize, &str)> =
        items.iter().enumerate().flat_map(|(i, item)| solvers(item.kind()).map(|s| (i, s))).collect();
    let records: Vec<(Record, bool)> =
        cells.par_iter().map(|&(i, solver)| run_cell(&items[i], solver, &eps, a.p, &optima[i])).collect();
    for (i, opt) in optima.iter().enumerate().filter(|_| a.report.is_some()) {
        let mut rec = Record::new(&items[i].id, "oracle");
        match &opt.best {
            Some(best) => rec.set_cost(best),
            None => rec.status = "unavailable".into(),
        }
        rec.message = opt.restricted.as_ref().map(|r| format!("restricted optimum {}", format_rational(r)));
        emit(a.report.as_deref(), &rec).map_err(|source| CliError::Io { path: "<report>".into(), source })?;
    }
    for (rec, _) in records.iter().filter(|_| a.report.is_some()) {
        emit(a.report.as_deref(), rec).map_err(|source| CliError::Io { path: "<report>".into(), source })?;
    }
    print!("{}", table(&records));
    let violations = records.iter().filter(|(_, v)| *v).count();
    Ok(if violations == 0 { Status::Solved } else { Status::Failed })
}
