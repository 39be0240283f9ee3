use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use steiner_core::directed::{
    claimed_ratio, epas_directed, lift_directed_solution, reduce_directed, DirectedOutcome, DirectedReduction,
    DirectedTrace,
};
use steiner_core::exact::dreyfus_wagner_directed;
use steiner_core::gen::{
    gen_dominating_set_reduction, gen_gap_composition, gen_random, GenParams, Planted, SetCoverInstance,
};
use steiner_core::io::{parse_instance, parse_solution, write_instance, write_solution, SolutionHeader};
use steiner_core::kernel::{
    lift_kernel_solution, st_to_sf, subset_union_kernel, KernelInstance, KernelOptions, Rounding, SfVariant,
};
use steiner_core::oracle::{brute_force, Restriction};
use steiner_core::pipeline::{epas_pipeline_forest, epas_pipeline_tree, exact_forest, exact_tree, finish_forest};
use steiner_core::star::{compute_thresholds, reduce_forest, ContractionTrace};
use steiner_core::weight::{format_rational, int, parse_rational};
use steiner_core::{Error, Graph, Rational, Solution, TerminalSpec, VertexId};

use crate::report::{emit, Record};
use crate::{Common, GenCommand, SolveArgs};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "STEINER_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Core(Error::Infeasible(_)) => 2,
            CliError::Core(Error::Contract(_)) => 1,
            _ => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Solved,
    /// Bench found a ratio violation.
    Failed,
    Infeasible,
    CertifiedNo,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Solved => 0,
            Status::Failed => 1,
            Status::Infeasible => 2,
            Status::CertifiedNo => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn configure_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer")))?;
    if n == 0 {
        return usage(format!("{WORKERS_ENV} must be a positive integer"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_instance(path: &Path) -> CliResult<(Graph, TerminalSpec)> {
    parse_instance(&read(path)?).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
    write(path, &(text + "\n"))
}

fn output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn report(path: Option<&Path>, record: &Record) -> CliResult<()> {
    emit(path, record).map_err(|source| CliError::Io { path: path.unwrap_or(Path::new("<stderr>")).to_path_buf(), source })
}

pub fn parse_epsilon(text: &str) -> CliResult<Rational> {
    let eps = parse_rational(text).map_err(|_| CliError::Usage(format!("bad epsilon {text:?}")))?;
    if eps <= int(0) {
        return usage("epsilon must be positive");
    }
    Ok(eps)
}

fn instance_id(path: &Path) -> String {
    path.display().to_string()
}

/// A finished solver run before it is written out.
pub struct Run {
    pub solution: Solution,
    pub claimed_ratio: Option<Rational>,
    pub guarantee_void: bool,
    pub contractions: Option<usize>,
    pub residual_terminals: Option<usize>,
    pub tau: Option<u64>,
}

impl Run {
    pub fn exact(solution: Solution) -> Self {
        Run {
            solution,
            claimed_ratio: Some(int(1)),
            guarantee_void: false,
            contractions: None,
            residual_terminals: None,
            tau: None,
        }
    }

    pub fn header(&self) -> SolutionHeader {
        SolutionHeader {
            value: self.solution.cost,
            claimed_ratio: self.claimed_ratio,
            guarantee_void: self.guarantee_void,
        }
    }

    pub fn fill(&self, rec: &mut Record) {
        rec.set_cost(&self.solution.cost);
        rec.claimed_ratio = self.claimed_ratio.as_ref().map(format_rational);
        rec.guarantee_void = self.guarantee_void;
        rec.contractions = self.contractions;
        rec.residual_terminals = self.residual_terminals;
        rec.tau = self.tau;
    }
}

pub fn tree_run(g: &Graph, spec: &TerminalSpec, eps: &Rational, p: usize, exact: bool) -> steiner_core::Result<Run> {
    let terms = spec.terminals();
    if exact {
        return exact_tree(g, &terms).map(Run::exact);
    }
    let run = epas_pipeline_tree(g, &terms, eps, p)?;
    Ok(Run {
        contractions: Some(run.contractions()),
        residual_terminals: Some(run.residual_terminals()),
        tau: Some(run.tau()),
        guarantee_void: run.guarantee_void,
        claimed_ratio: Some(run.claimed_ratio),
        solution: run.solution,
    })
}

pub fn default_components(spec: &TerminalSpec) -> usize {
    spec.pair_classes().len().max(1)
}

pub fn forest_run(
    g: &Graph,
    spec: &TerminalSpec,
    eps: &Rational,
    p: usize,
    c: Option<usize>,
    exact: bool,
) -> steiner_core::Result<Run> {
    if exact {
        return exact_forest(g, spec, c).map(Run::exact);
    }
    let run = epas_pipeline_forest(g, spec, eps, p, c.unwrap_or_else(|| default_components(spec)))?;
    Ok(Run {
        contractions: Some(run.contractions()),
        residual_terminals: Some(run.residual_terminals()),
        tau: Some(run.tau()),
        guarantee_void: run.guarantee_void,
        claimed_ratio: Some(run.claimed_ratio),
        solution: run.solution,
    })
}

pub enum DirectedRun {
    Solved(Run),
    CertifiedNo(String),
}

pub fn directed_run(g: &Graph, spec: &TerminalSpec, eps: &Rational, p: usize, exact: bool) -> steiner_core::Result<DirectedRun> {
    let Some(root) = spec.root() else {
        return Err(Error::Input("directed instances need a Root line".into()));
    };
    if exact {
        return dreyfus_wagner_directed(g, &spec.terminals(), root).map(|s| DirectedRun::Solved(Run::exact(s)));
    }
    Ok(match epas_directed(g, spec, p, eps)? {
        DirectedOutcome::CertifiedNo(why) => DirectedRun::CertifiedNo(why),
        DirectedOutcome::Solved { solution, trace } => DirectedRun::Solved(Run {
            solution,
            claimed_ratio: Some(claimed_ratio(eps)),
            guarantee_void: false,
            contractions: Some(trace.steps.len()),
            residual_terminals: Some(trace.residual_terminals()),
            tau: None,
        }),
    })
}

fn oracle_ratio(g: &Graph, spec: &TerminalSpec, rec: &mut Record) {
    match brute_force(g, spec, Restriction::none()) {
        Ok(best) => {
            let cost = rec.cost.as_deref().and_then(|c| parse_rational(c).ok()).unwrap_or(best.cost);
            rec.set_oracle(&cost, &best.cost);
        }
        Err(e) => rec.message = Some(format!("oracle unavailable: {e}")),
    }
}

/// Writes the solution and report for a solver result.
fn conclude(
    common: &Common,
    g: &Graph,
    spec: &TerminalSpec,
    mut rec: Record,
    start: Instant,
    result: steiner_core::Result<DirectedRun>,
    with_oracle: bool,
) -> CliResult<Status> {
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let status = match result {
        Ok(DirectedRun::Solved(run)) => {
            run.fill(&mut rec);
            if with_oracle {
                oracle_ratio(g, spec, &mut rec);
            }
            output(common.output.as_deref(), &write_solution(g, &run.solution.edges, &run.header()))?;
            Status::Solved
        }
        Ok(DirectedRun::CertifiedNo(why)) => {
            eprintln!("certified no: {why}");
            rec.status = "certified-no".into();
            rec.message = Some(why);
            Status::CertifiedNo
        }
        Err(Error::Infeasible(why)) => {
            eprintln!("infeasible: {why}");
            rec.status = "infeasible".into();
            rec.message = Some(why);
            Status::Infeasible
        }
        Err(e) => {
            rec.status = "error".into();
            rec.message = Some(e.to_string());
            report(common.report.as_deref(), &rec)?;
            return Err(e.into());
        }
    };
    report(common.report.as_deref(), &rec)?;
    Ok(status)
}

pub fn solve_st(a: &SolveArgs) -> CliResult<Status> {
    let (g, spec) = read_instance(&a.common.instance)?;
    if g.is_directed() || spec.is_forest() {
        return usage("solve-st expects an undirected instance with a Terminals section");
    }
    let eps = parse_epsilon(&a.epsilon)?;
    let rec = Record::new(&instance_id(&a.common.instance), if a.exact { "exact-st" } else { "epas-st" });
    let start = Instant::now();
    let result = tree_run(&g, &spec, &eps, a.p, a.exact).map(DirectedRun::Solved);
    conclude(&a.common, &g, &spec, rec, start, result, a.with_oracle)
}

pub fn solve_sf(a: &SolveArgs, c: Option<usize>) -> CliResult<Status> {
    let (g, spec) = read_instance(&a.common.instance)?;
    if g.is_directed() || !spec.is_forest() {
        return usage("solve-sf expects an undirected instance with a Pairs section");
    }
    let eps = parse_epsilon(&a.epsilon)?;
    let rec = Record::new(&instance_id(&a.common.instance), if a.exact { "exact-sf" } else { "epas-sf" });
    let start = Instant::now();
    let result = forest_run(&g, &spec, &eps, a.p, c, a.exact).map(DirectedRun::Solved);
    conclude(&a.common, &g, &spec, rec, start, result, a.with_oracle)
}

pub fn solve_dst(a: &SolveArgs) -> CliResult<Status> {
    let (g, spec) = read_instance(&a.common.instance)?;
    if !g.is_directed() {
        return usage("solve-dst expects an instance with Arcs");
    }
    let eps = parse_epsilon(&a.epsilon)?;
    let rec = Record::new(&instance_id(&a.common.instance), if a.exact { "exact-dst" } else { "epas-dst" });
    let start = Instant::now();
    let result = directed_run(&g, &spec, &eps, a.p, a.exact);
    conclude(&a.common, &g, &spec, rec, start, result, a.with_oracle)
}

/// What `lift` needs besides the original instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TraceFile {
    Forest { trace: ContractionTrace },
    Directed { trace: DirectedTrace },
    Kernel { options: KernelOptions, kernel: KernelInstance },
}

pub fn reduce(
    instance: &Path,
    epsilon: &str,
    p: usize,
    c: Option<usize>,
    out: &Path,
    trace_path: &Path,
    report_path: Option<&Path>,
) -> CliResult<Status> {
    let (g, spec) = read_instance(instance)?;
    let eps = parse_epsilon(epsilon)?;
    let mut rec = Record::new(&instance_id(instance), "reduce");
    let start = Instant::now();
    let file = if g.is_directed() {
        match reduce_directed(&g, &spec, p, &eps)? {
            DirectedReduction::CertifiedNo(why) => {
                eprintln!("certified no: {why}");
                rec.status = "certified-no".into();
                rec.message = Some(why);
                rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                report(report_path, &rec)?;
                return Ok(Status::CertifiedNo);
            }
            DirectedReduction::Reduced(trace) => {
                rec.contractions = Some(trace.steps.len());
                rec.residual_terminals = Some(trace.residual_terminals());
                TraceFile::Directed { trace }
            }
        }
    } else {
        let (h, sf, c) = if spec.is_forest() {
            let c = c.unwrap_or_else(|| default_components(&spec));
            (g.clone(), spec.clone(), c)
        } else {
            let (h, sf) = st_to_sf(&g, &spec.terminals(), SfVariant::Plain)?;
            (h, sf, 1)
        };
        let thresholds = compute_thresholds(eps / int(2), p, c)?;
        let trace = reduce_forest(&h, &sf, &thresholds)?;
        rec.contractions = Some(trace.steps.len());
        rec.residual_terminals = Some(trace.reduced_spec.terminal_count());
        rec.tau = Some(trace.thresholds.tau);
        rec.guarantee_void = trace.guarantee_void();
        TraceFile::Forest { trace }
    };
    let (rg, rspec) = match &file {
        TraceFile::Forest { trace } => (&trace.reduced, &trace.reduced_spec),
        TraceFile::Directed { trace } => (&trace.reduced, &trace.reduced_spec),
        TraceFile::Kernel { .. } => unreachable!(),
    };
    write(out, &write_instance(rg, rspec, "reduced"))?;
    write_json(trace_path, &file)?;
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    report(report_path, &rec)?;
    Ok(Status::Solved)
}

pub struct KernelizeArgs {
    pub instance: PathBuf,
    pub subset_size: usize,
    pub epsilon: String,
    pub rounding: String,
    pub max_subsets: u64,
    pub out: PathBuf,
    pub provenance: PathBuf,
    pub report: Option<PathBuf>,
}

pub fn parse_rounding(text: &str) -> CliResult<Rounding> {
    match text {
        "none" => Ok(Rounding::None),
        "auto" => Ok(Rounding::Auto),
        step => match parse_rational(step) {
            Ok(s) if s >= int(0) => Ok(Rounding::Step(s)),
            _ => usage(format!("rounding must be none, auto or a non-negative step, not {step:?}")),
        },
    }
}

pub fn kernelize(a: &KernelizeArgs) -> CliResult<Status> {
    let (g, spec) = read_instance(&a.instance)?;
    let mut options = KernelOptions::new(a.subset_size, parse_epsilon(&a.epsilon)?);
    options.rounding = parse_rounding(&a.rounding)?;
    options.max_subsets = a.max_subsets;
    let mut rec = Record::new(&instance_id(&a.instance), "kernelize");
    let start = Instant::now();
    let kernel = subset_union_kernel(&g, &spec, &options)?;
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    rec.residual_terminals = Some(kernel.spec.terminal_count());
    rec.message = Some(format!(
        "{} vertices, {} edges, step {}, {} subsets solved, {} vertices pruned",
        kernel.graph.vertex_count(),
        kernel.graph.edge_count(),
        format_rational(&kernel.step),
        kernel.subsets_solved,
        kernel.pruned_vertices
    ));
    write(&a.out, &write_instance(&kernel.graph, &kernel.spec, "kernel"))?;
    write_json(&a.provenance, &TraceFile::Kernel { options, kernel })?;
    report(a.report.as_deref(), &rec)?;
    Ok(Status::Solved)
}

fn kernel_ratio(options: &KernelOptions, kernel: &KernelInstance, spec: &TerminalSpec) -> Option<Rational> {
    if options.subset_size < spec.terminal_count() {
        // guarantee depends on the subset size in a way we do not certify
        return None;
    }
    Some(if kernel.step == int(0) { int(1) } else { int(1) + options.epsilon })
}

pub fn lift(instance: &Path, trace_path: &Path, solution: &Path, out: Option<&Path>) -> CliResult<Status> {
    let (g, spec) = read_instance(instance)?;
    let file: TraceFile = serde_json::from_str(&read(trace_path)?)
        .map_err(|source| CliError::Json { path: trace_path.to_path_buf(), source })?;
    let text = read(solution)?;
    let parse = |reduced: &Graph| {
        parse_solution(&text, reduced).map_err(|source| CliError::File { path: solution.to_path_buf(), source })
    };
    let (lifted, claimed, void) = match &file {
        TraceFile::Forest { trace } => {
            let (edges, header) = parse(&trace.reduced)?;
            let sf = if spec.is_forest() { spec.clone() } else { st_to_sf(&g, &spec.terminals(), SfVariant::Plain)?.1 };
            let sol = finish_forest(&g, &sf, trace, &edges)?;
            let ratio = int(1) + trace.thresholds.epsilon * int(2);
            (sol, Some(ratio), trace.guarantee_void() || header.guarantee_void)
        }
        TraceFile::Directed { trace } => {
            let (edges, header) = parse(&trace.reduced)?;
            let sol = lift_directed_solution(&g, &spec, trace, &edges)?;
            (sol, Some(claimed_ratio(&trace.epsilon)), header.guarantee_void)
        }
        TraceFile::Kernel { options, kernel } => {
            let (edges, header) = parse(&kernel.graph)?;
            let sol = lift_kernel_solution(&g, kernel, &edges)?;
            (sol, kernel_ratio(options, kernel, &spec), header.guarantee_void)
        }
    };
    let header = SolutionHeader { value: lifted.cost, claimed_ratio: claimed, guarantee_void: void };
    output(out, &write_solution(&g, &lifted.edges, &header))?;
    Ok(Status::Solved)
}

pub fn oracle(common: &Common, max_steiner: Option<usize>, max_components: Option<usize>) -> CliResult<Status> {
    let (g, spec) = read_instance(&common.instance)?;
    let rec = Record::new(&instance_id(&common.instance), "oracle");
    let start = Instant::now();
    let restrict = Restriction { max_steiner, max_components };
    let result = brute_force(&g, &spec, restrict).map(|best| DirectedRun::Solved(Run::exact(Solution::from_edges(&g, best.witness))));
    conclude(common, &g, &spec, rec, start, result, false)
}

fn sidecar(output: &Path) -> PathBuf {
    output.with_extension("meta.json")
}

/// Simple graph with `n` vertices and `m` distinct random edges.
pub fn random_simple_graph(n: usize, m: usize, seed: u64) -> CliResult<Graph> {
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    if m > all.len() {
        return usage(format!("a simple graph on {n} vertices has at most {} edges", all.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    let mut chosen = all[..m].to_vec();
    chosen.sort_unstable();
    Ok(Graph::from_edges(false, n, chosen.into_iter().map(|(u, v)| (u, v, int(1))))?)
}

fn min_dominating_set(h: &Graph) -> usize {
    let n = h.id_bound();
    let mut closed: Vec<u64> = (0..n).map(|v| 1 << v).collect();
    for e in h.edges() {
        closed[e.u] |= 1 << e.v;
        closed[e.v] |= 1 << e.u;
    }
    let full = (1u64 << n) - 1;
    (0u64..1 << n)
        .filter(|s| (0..n).filter(|v| s >> v & 1 == 1).fold(0, |acc, v| acc | closed[v]) == full)
        .map(|s| s.count_ones() as usize)
        .min()
        .unwrap_or(0)
}

fn min_cover(inst: &SetCoverInstance) -> Option<usize> {
    let m = inst.m();
    let full: BTreeSet<usize> = (0..inst.n).collect();
    (0u64..1 << m)
        .filter(|s| {
            let covered: BTreeSet<usize> = (0..m).filter(|j| s >> j & 1 == 1).flat_map(|j| inst.sets[j].iter().copied()).collect();
            covered == full
        })
        .map(|s| s.count_ones() as usize)
        .min()
}

pub fn generate(cmd: GenCommand) -> CliResult<Status> {
    match cmd {
        GenCommand::Random {
            n,
            terminals,
            extra_edges,
            min_weight,
            max_weight,
            directed,
            tree,
            planted_p,
            planted_c,
            seed,
            output,
        } => {
            let params = GenParams {
                n,
                extra_edges: extra_edges.unwrap_or(n),
                weight_range: (min_weight, max_weight),
                directed,
                forest: !tree && !directed,
                terminals,
                planted: planted_p.map(|p| Planted { p, c: planted_c }),
                seed,
            };
            let x = gen_random(&params)?;
            write(&output, &write_instance(&x.graph, &x.spec, &format!("random-{seed}")))?;
            let meta = json!({
                "generator": "random",
                "params": params,
                "planted_edges": x.planted_edges,
                "planted_cost": x.planted_cost.as_ref().map(format_rational),
            });
            write_json(&sidecar(&output), &meta)?;
        }
        GenCommand::DominatingSet { n, m, seed, output } => {
            if n == 0 || n > 20 {
                return usage("dominating set generator supports 1 to 20 vertices");
            }
            let h = random_simple_graph(n, m, seed)?;
            let (g, spec) = gen_dominating_set_reduction(&h)?;
            write(&output, &write_instance(&g, &spec, &format!("dominating-set-{seed}")))?;
            let edges: Vec<(VertexId, VertexId)> = h.edges().iter().map(|e| (e.u, e.v)).collect();
            let meta = json!({
                "generator": "dominating-set",
                "n": n,
                "m": m,
                "seed": seed,
                "h_edges": edges,
                "min_dominating_set": min_dominating_set(&h),
            });
            write_json(&sidecar(&output), &meta)?;
        }
        GenCommand::Gap { n, m, b, gamma, t, singletons, seed, output } => {
            if n == 0 || m == 0 || t == 0 || m > 20 {
                return usage("gap composition needs n, t >= 1 and 1 <= m <= 20");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let instances: Vec<SetCoverInstance> = (0..t)
                .map(|_| {
                    if singletons {
                        SetCoverInstance::singletons(n, m, b)
                    } else {
                        let sets = (0..m)
                            .map(|_| {
                                let mut s: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                                s.insert(rng.gen_range(0..n));
                                s
                            })
                            .collect();
                        SetCoverInstance::new(n, sets, b)
                    }
                })
                .collect::<steiner_core::Result<_>>()?;
            let comp = gen_gap_composition(&instances, gamma)?;
            write(&output, &write_instance(&comp.graph, &comp.spec, &format!("gap-{seed}")))?;
            let covers: Vec<Option<usize>> = instances.iter().map(min_cover).collect();
            let meta = json!({
                "generator": "gap-composition",
                "seed": seed,
                "gamma": gamma,
                "d": comp.d,
                "c_yes": comp.c_yes,
                "no_lower": comp.no_lower,
                "instances": instances,
                "min_covers": covers,
                "yes_side": covers.iter().any(|c| c.is_some_and(|c| c <= b)),
                "no_side": covers.iter().all(|c| c.map_or(true, |c| c >= gamma * b)),
            });
            write_json(&sidecar(&output), &meta)?;
        }
    }
    Ok(Status::Solved)
}
