use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crlab::experiment::{
    cells_to_csv, check_expectations, emit_svg, parse_expectations, run_bench, Runner,
};
use crlab::families::{build_concealer_graph, build_family, FamilyKind};
use crlab::gadgets::{build_and, build_concealer, build_dead_end, build_unidirectional, Gadget};
use crlab::online::{adversary_build, OracleSubject, Subject};
use crlab::setcover::{check_bracket, SetCoverInstance};
use crlab::{naive_stable, refine_strategy, refine_worklist, ColoredGraph, FullRefinement, PolicyKind};

#[derive(Parser)]
#[command(name = "crlab", version, about = "Color refinement laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a family graph or a gadget in the text format.
    Gen(GenArgs),
    /// Refine a graph file under a policy and report its cost.
    Refine(RefineArgs),
    /// Measure cost per edge over a grid of families, k and policies.
    Bench(BenchArgs),
    /// Build a concealer graph on which a policy is slow.
    Adversary(AdversaryArgs),
    /// Run the set-cover reduction on an instance file.
    Setcover(SetcoverArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Family name: concealer, stack-adv, queue-adv, pq-max-adv, pq-min-adv.
    #[arg(long, conflicts_with = "gadget", required_unless_present = "gadget")]
    family: Option<FamilyKind>,
    #[arg(long, requires = "family")]
    k: Option<u32>,
    /// Correct pair per concealer level, comma separated.
    #[arg(long, value_delimiter = ',')]
    correct: Option<Vec<u32>>,
    /// Gadget spec: and:<i>, unidirectional, dead-end, concealer:<i>:<correct>.
    #[arg(long)]
    gadget: Option<String>,
    #[arg(short, long)]
    output: PathBuf,
    /// Role map path; defaults to the output path with `.roles` appended.
    #[arg(long)]
    roles: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    graph: PathBuf,
    /// A worklist policy, or `full` for one full round per step.
    #[arg(long, default_value = "smallest-stack")]
    policy: String,
    /// Write the step trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    families: Vec<FamilyKind>,
    /// Inclusive range `min..max`, or a single k.
    #[arg(long)]
    k: String,
    #[arg(long, value_delimiter = ',', required = true)]
    policies: Vec<Runner>,
    /// Verdict file (`<family> <policy> bounded|growing` per line); a
    /// failing verdict exits with status 2.
    #[arg(long)]
    expect: Option<PathBuf>,
}

#[derive(Args)]
struct AdversaryArgs {
    /// A worklist policy or `fast-oracle`.
    #[arg(long)]
    policy: String,
    #[arg(long)]
    k: u32,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SetcoverArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Dummy element count; defaults to the squared instance size.
    #[arg(long)]
    dummies: Option<usize>,
    /// Compare the optimal sequence cost with the cover size; a cost
    /// outside the bracket exits with status 2.
    #[arg(long)]
    check: bool,
}

/// Result of a subcommand that ran to completion.
enum Outcome {
    Ok,
    Regression,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Refine(a) => refine(a),
        Command::Bench(a) => bench(a),
        Command::Adversary(a) => adversary(a),
        Command::Setcover(a) => setcover(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Regression) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn roles_path(output: &Path, roles: Option<PathBuf>) -> PathBuf {
    roles.unwrap_or_else(|| {
        let mut p = output.as_os_str().to_owned();
        p.push(".roles");
        PathBuf::from(p)
    })
}

fn parse_gadget(spec: &str) -> Result<Gadget> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<u32>().with_context(|| format!("bad number `{s}` in gadget spec"));
    Ok(match parts[..] {
        ["and", i] => build_and(num(i)?)?,
        ["unidirectional"] => build_unidirectional(),
        ["dead-end"] => build_dead_end(),
        ["concealer", i] => build_concealer(num(i)?, 0)?,
        ["concealer", i, c] => build_concealer(num(i)?, num(c)?)?,
        _ => bail!("unknown gadget spec `{spec}`"),
    })
}

fn gen(a: GenArgs) -> Result<Outcome> {
    if let Some(spec) = a.gadget {
        let g = parse_gadget(&spec)?;
        write(&a.output, &g.to_text(&g.role_coloring(&[]))?)?;
        println!("{spec}: {} vertices, {} edges", g.vertex_count, g.edge_count());
        return Ok(Outcome::Ok);
    }
    let family = a.family.expect("clap enforces family or gadget");
    let k = a.k.context("--k is required with --family")?;
    let (graph, descriptor) = match (family, a.correct) {
        (FamilyKind::Concealer, Some(correct)) => build_concealer_graph(k, &correct)?,
        (_, Some(_)) => bail!("--correct only applies to the concealer family"),
        (_, None) => build_family(family, k)?,
    };
    write(&a.output, &graph.to_text())?;
    write(&roles_path(&a.output, a.roles), &descriptor.roles_text())?;
    println!("{family} k={k}: {} vertices, {} edges", graph.vertex_count(), graph.edge_count());
    Ok(Outcome::Ok)
}

fn read_graph(path: &Path) -> Result<ColoredGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ColoredGraph::from_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn refine(a: RefineArgs) -> Result<Outcome> {
    let graph = read_graph(&a.graph)?;
    let initial = graph.initial_partition();
    let report = if a.policy == "full" {
        refine_strategy(&graph, &initial, &mut FullRefinement).map_err(|f| f.error)?
    } else {
        let policy: PolicyKind = a.policy.parse()?;
        refine_worklist(&graph, &initial, policy)?
    };
    let stable = naive_stable(&graph, &initial);
    if !report.final_partition.same_classes(&stable) {
        bail!("final partition differs from the stable partition");
    }
    println!("policy {}", report.strategy);
    println!("n {} m {}", report.n, report.m);
    println!("classes {}", report.final_partition.class_count());
    println!("steps {}", report.step_count);
    println!("total_cost {}", report.total_cost);
    println!("cost_per_edge {:.4}", report.cost_per_edge());
    if let Some(path) = a.trace {
        write(&path, &report.to_text(&graph, &initial))?;
    }
    Ok(Outcome::Ok)
}

fn parse_k_range(s: &str) -> Result<std::ops::RangeInclusive<u32>> {
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo.parse::<u32>()?, hi.trim_start_matches('=').parse::<u32>()?),
        None => {
            let k = s.parse::<u32>()?;
            (k, k)
        }
    };
    if lo > hi {
        bail!("empty k range `{s}`");
    }
    Ok(lo..=hi)
}

fn bench(a: BenchArgs) -> Result<Outcome> {
    let ks = parse_k_range(&a.k).with_context(|| format!("bad --k `{}`", a.k))?;
    let cells = run_bench(&a.families, ks, &a.policies)?;
    write(&a.csv, &cells_to_csv(&cells)?)?;
    if let Some(svg) = &a.svg {
        write(svg, &emit_svg(&cells))?;
    }
    for c in &cells {
        println!("{} k={} {}: cost_per_edge {:.3}", c.family, c.k, c.policy, c.cost_per_edge);
    }
    let Some(path) = a.expect else { return Ok(Outcome::Ok) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let failed = check_expectations(&cells, &parse_expectations(&text)?);
    for (e, fit) in &failed {
        let observed = fit.map_or("too few cells".to_string(), |f| {
            format!("first {:.3} last {:.3} min {:.3} max {:.3}", f.first, f.last, f.min, f.max)
        });
        println!("REGRESSION {} {} expected {:?}: {observed}", e.family, e.policy, e.verdict);
    }
    Ok(if failed.is_empty() { Outcome::Ok } else { Outcome::Regression })
}

fn adversary(a: AdversaryArgs) -> Result<Outcome> {
    let subject: Box<dyn Subject> = if a.policy == "fast-oracle" {
        Box::new(OracleSubject)
    } else {
        Box::new(a.policy.parse::<PolicyKind>()?)
    };
    let out = adversary_build(subject.as_ref(), a.k)?;
    write(&a.output, &out.graph.to_text())?;
    write(&roles_path(&a.output, None), &out.descriptor.roles_text())?;
    let indices: Vec<String> = out.descriptor.correct_indices.iter().map(u32::to_string).collect();
    println!("correct_indices {}", indices.join(" "));
    println!("runs {}", out.runs);
    println!("cost_per_edge {:.4}", out.report.cost_per_edge());
    Ok(Outcome::Ok)
}

fn setcover(a: SetcoverArgs) -> Result<Outcome> {
    let text = fs::read_to_string(&a.instance).with_context(|| format!("reading {}", a.instance.display()))?;
    let instance = SetCoverInstance::parse(&text)?;
    let dummies = a.dummies.unwrap_or_else(|| instance.default_dummies());
    let check = check_bracket(&instance, dummies)?;
    println!("n_star {}", check.n_star);
    println!("greedy {}", check.greedy_size);
    println!("dummies {}", check.dummies);
    println!("optimal_cost {}", check.optimal.cost);
    println!("quotient {}", check.quotient);
    let verdict = if check.within { "within" } else { "outside" };
    println!("bracket {verdict}");
    Ok(if a.check && !check.within { Outcome::Regression } else { Outcome::Ok })
}
