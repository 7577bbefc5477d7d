//! Benchmark cells, CSV and SVG output, and growth verdicts.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::families::{build_family, FamilyKind};
use crate::online::{fast_oracle_strategy, OnlineError};
use crate::refine::{refine_strategy_with, refine_worklist_with, FullRefinement, NoObserver, RunOptions};
use crate::worklist::PolicyKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("unknown runner `{0}`")]
    UnknownRunner(String),
    #[error("cell {family} k={k} {runner}: {message}")]
    Cell { family: FamilyKind, k: u32, runner: String, message: String },
    #[error("growth fit needs at least {needed} cells, got {got}")]
    TooFewCells { needed: usize, got: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error("expectations line {line}: {message}")]
    Expectation { line: usize, message: String },
}

/// A worklist policy or one of the strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Runner {
    Policy(PolicyKind),
    /// The depth-first oracle schedule; concealer graphs only.
    FastOracle,
    /// A full 1-WL round per step.
    Full,
}

impl std::fmt::Display for Runner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Runner::Policy(p) => write!(f, "{p}"),
            Runner::FastOracle => f.write_str("fast-oracle"),
            Runner::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Runner {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fast-oracle" => Ok(Runner::FastOracle),
            "full" => Ok(Runner::Full),
            _ => s
                .parse::<PolicyKind>()
                .map(Runner::Policy)
                .map_err(|_| ExperimentError::UnknownRunner(s.to_string())),
        }
    }
}

/// One measured (family, k, runner) combination. Field order is the CSV
/// column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub family: String,
    pub k: u32,
    pub n: usize,
    pub m: usize,
    pub policy: String,
    pub total_cost: u64,
    pub cost_per_edge: f64,
    pub wall_ms: f64,
}

pub const CSV_HEADER: &str = "family,k,n,m,policy,total_cost,cost_per_edge,wall_ms";

/// Runs one cell.
pub fn run_cell(family: FamilyKind, k: u32, runner: Runner) -> Result<BenchCell, ExperimentError> {
    let cell_err = |message: String| ExperimentError::Cell { family, k, runner: runner.to_string(), message };
    let (graph, descriptor) = build_family(family, k).map_err(|e| cell_err(e.to_string()))?;
    let initial = graph.initial_partition();
    let options = RunOptions {
        skip_steps: true,
        initial_depths: Some(descriptor.initial_depths(&initial)),
        ..RunOptions::default()
    };
    let start = Instant::now();
    let report = match runner {
        Runner::Policy(p) => refine_worklist_with(&graph, &initial, p, &options, &mut NoObserver)
            .map_err(|e| cell_err(e.to_string()))?,
        Runner::FastOracle => {
            let mut oracle = fast_oracle_strategy(&descriptor).map_err(|e: OnlineError| cell_err(e.to_string()))?;
            refine_strategy_with(&graph, &initial, &mut oracle, &options, &mut NoObserver)
                .map_err(|f| cell_err(f.error.to_string()))?
        }
        Runner::Full => refine_strategy_with(&graph, &initial, &mut FullRefinement, &options, &mut NoObserver)
            .map_err(|f| cell_err(f.error.to_string()))?,
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
    Ok(BenchCell {
        family: family.to_string(),
        k,
        n: report.n,
        m: report.m,
        policy: runner.to_string(),
        total_cost: report.total_cost,
        cost_per_edge: report.cost_per_edge(),
        wall_ms: (wall_ms * 1000.0).round() / 1000.0,
    })
}

/// All cells of the grid, sorted by (family, k, policy) with names compared
/// as strings.
pub fn run_bench(
    families: &[FamilyKind],
    ks: std::ops::RangeInclusive<u32>,
    runners: &[Runner],
) -> Result<Vec<BenchCell>, ExperimentError> {
    let mut cells = Vec::new();
    for &family in families {
        for k in ks.clone() {
            for &runner in runners {
                cells.push(run_cell(family, k, runner)?);
            }
        }
    }
    sort_cells(&mut cells);
    Ok(cells)
}

pub fn sort_cells(cells: &mut [BenchCell]) {
    cells.sort_by(|a, b| (&a.family, a.k, &a.policy).cmp(&(&b.family, b.k, &b.policy)));
}

pub fn cells_to_csv(cells: &[BenchCell]) -> Result<String, ExperimentError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    if cells.is_empty() {
        writer
            .write_record(CSV_HEADER.split(','))
            .map_err(|e| ExperimentError::Csv(e.to_string()))?;
    }
    for cell in cells {
        writer.serialize(cell).map_err(|e| ExperimentError::Csv(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| ExperimentError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ExperimentError::Csv(e.to_string()))
}

pub fn cells_from_csv(text: &str) -> Result<Vec<BenchCell>, ExperimentError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| ExperimentError::Csv(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(ExperimentError::Csv(format!("unexpected header, want `{CSV_HEADER}`")));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<BenchCell>, _>>()
        .map_err(|e| ExperimentError::Csv(e.to_string()))
}

/// Least-squares fit of cost_per_edge against k with the two verdicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// max/min ≤ 2.
    pub bounded: bool,
    /// Strictly increasing and last ≥ 2·first.
    pub growing: bool,
    pub first: f64,
    pub last: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Growing,
    Neither,
}

impl GrowthFit {
    pub fn verdict(&self) -> Verdict {
        if self.growing {
            Verdict::Growing
        } else if self.bounded {
            Verdict::Bounded
        } else {
            Verdict::Neither
        }
    }
}

pub const MIN_FIT_POINTS: usize = 4;

/// Fits `(k, cost_per_edge)` points, which must be sorted by k.
pub fn fit_growth(points: &[(u32, f64)]) -> Result<GrowthFit, ExperimentError> {
    if points.len() < MIN_FIT_POINTS {
        return Err(ExperimentError::TooFewCells { needed: MIN_FIT_POINTS, got: points.len() });
    }
    let len = points.len() as f64;
    let mean_k = points.iter().map(|p| p.0 as f64).sum::<f64>() / len;
    let mean_c = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = points.iter().map(|p| (p.0 as f64 - mean_k) * (p.1 - mean_c)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 as f64 - mean_k).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let values: Vec<f64> = points.iter().map(|p| p.1).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = values[0];
    let last = values[values.len() - 1];
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    Ok(GrowthFit {
        slope,
        intercept: mean_c - slope * mean_k,
        bounded: (min > 0.0 && max / min <= 2.0) || max == 0.0,
        growing: increasing && last >= 2.0 * first,
        first,
        last,
        min,
        max,
    })
}

/// Fit of one (family, policy) series out of a cell list.
pub fn fit_series(cells: &[BenchCell], family: &str, policy: &str) -> Result<GrowthFit, ExperimentError> {
    let mut points: Vec<(u32, f64)> = cells
        .iter()
        .filter(|c| c.family == family && c.policy == policy)
        .map(|c| (c.k, c.cost_per_edge))
        .collect();
    points.sort_by_key(|p| p.0);
    fit_growth(&points)
}

/// A pinned verdict: `<family> <policy> bounded|growing`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub family: String,
    pub policy: String,
    pub verdict: Verdict,
}

pub fn parse_expectations(text: &str) -> Result<Vec<Expectation>, ExperimentError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| ExperimentError::Expectation { line: i + 1, message: message.to_string() };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [family, policy, verdict] = fields[..] else {
            return Err(err("expected `<family> <policy> <verdict>`"));
        };
        let verdict = match verdict {
            "bounded" => Verdict::Bounded,
            "growing" => Verdict::Growing,
            _ => return Err(err("verdict must be `bounded` or `growing`")),
        };
        out.push(Expectation { family: family.to_string(), policy: policy.to_string(), verdict });
    }
    Ok(out)
}

/// Expectations whose series is present in `cells` but whose verdict does
/// not hold, with the observed fit.
pub fn check_expectations(
    cells: &[BenchCell],
    expectations: &[Expectation],
) -> Vec<(Expectation, Option<GrowthFit>)> {
    let mut failed = Vec::new();
    for e in expectations {
        if !cells.iter().any(|c| c.family == e.family && c.policy == e.policy) {
            continue;
        }
        let fit = fit_series(cells, &e.family, &e.policy).ok();
        let holds = match (e.verdict, fit) {
            (Verdict::Bounded, Some(f)) => f.bounded,
            (Verdict::Growing, Some(f)) => f.growing,
            _ => false,
        };
        if !holds {
            failed.push((e.clone(), fit));
        }
    }
    failed
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// cost_per_edge against k, one polyline per series. Series are keyed by
/// policy, or by family and policy when several families are present.
pub fn emit_svg(cells: &[BenchCell]) -> String {
    let mut sorted = cells.to_vec();
    sort_cells(&mut sorted);
    let families: std::collections::BTreeSet<&str> = sorted.iter().map(|c| c.family.as_str()).collect();
    let label = |c: &BenchCell| {
        if families.len() > 1 {
            format!("{} {}", c.family, c.policy)
        } else {
            c.policy.clone()
        }
    };
    let mut series: std::collections::BTreeMap<String, Vec<(u32, f64)>> = Default::default();
    for c in &sorted {
        series.entry(label(c)).or_default().push((c.k, c.cost_per_edge));
    }
    let (k_min, k_max) = sorted
        .iter()
        .fold((u32::MAX, 0), |(lo, hi), c| (lo.min(c.k), hi.max(c.k)));
    let (k_min, k_max) = if sorted.is_empty() { (0, 1) } else { (k_min, k_max.max(k_min + 1)) };
    let y_max = sorted.iter().map(|c| c.cost_per_edge).fold(0.0, f64::max).max(1.0).ceil();
    let x_of = |k: u32| MARGIN + (k - k_min) as f64 / (k_max - k_min) as f64 * (SVG_W - 2.0 * MARGIN);
    let y_of = |v: f64| SVG_H - MARGIN - v / y_max * (SVG_H - 2.0 * MARGIN);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#).unwrap();
    let (x0, y0, x1, y1) = (MARGIN, SVG_H - MARGIN, SVG_W - MARGIN, MARGIN);
    writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#).unwrap();
    writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">k</text>"#, SVG_W / 2.0, SVG_H - 10.0).unwrap();
    writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">cost per edge</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0
    )
    .unwrap();
    if !sorted.is_empty() {
        for k in k_min..=k_max {
            writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{k}</text>"#, x_of(k), y0 + 16.0).unwrap();
        }
    }
    for tick in 0..=4 {
        let v = y_max * tick as f64 / 4.0;
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, x0 - 6.0, y_of(v) + 4.0).unwrap();
    }
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points.iter().map(|&(k, v)| format!("{:.1},{:.1}", x_of(k), y_of(v))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" ")).unwrap();
        let ly = MARGIN + 16.0 * i as f64;
        writeln!(
            out,
            r#"<g class="legend"><rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{name}</text></g>"#,
            x1 - 140.0,
            ly - 9.0,
            x1 - 125.0,
            ly
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(family: &str, k: u32, policy: &str, cpe: f64) -> BenchCell {
        BenchCell {
            family: family.into(),
            k,
            n: 10,
            m: 20,
            policy: policy.into(),
            total_cost: (cpe * 20.0) as u64,
            cost_per_edge: cpe,
            wall_ms: 0.125,
        }
    }

    #[test]
    fn fits() {
        let flat = fit_growth(&[(6, 5.0), (7, 5.0), (8, 5.0), (9, 5.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert_eq!(flat.verdict(), Verdict::Bounded);
        let up = fit_growth(&[(6, 4.0), (7, 6.0), (8, 8.0), (9, 10.0)]).unwrap();
        assert!((up.slope - 2.0).abs() < 1e-12);
        assert_eq!(up.verdict(), Verdict::Growing);
        assert!(!up.bounded);
        assert_eq!(
            fit_growth(&[(1, 1.0)]),
            Err(ExperimentError::TooFewCells { needed: 4, got: 1 })
        );
    }

    #[test]
    fn runner_names() {
        for r in ["stack", "hybrid:4", "fast-oracle", "full"] {
            assert_eq!(r.parse::<Runner>().unwrap().to_string(), r);
        }
        assert!("bogus".parse::<Runner>().is_err());
    }

    #[test]
    fn bench_grid_and_csv_round_trip() {
        let runners = [Runner::Policy(PolicyKind::Queue), Runner::Policy(PolicyKind::SmallestNewStack)];
        let cells = run_bench(&[FamilyKind::StackAdv], 3..=4, &runners).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].policy, "queue");
        assert_eq!(cells[1].policy, "smallest-stack");
        let text = cells_to_csv(&cells).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(cells_from_csv(&text).unwrap(), cells);
        assert_eq!(cells_from_csv(&cells_to_csv(&[]).unwrap()).unwrap(), vec![]);
        let again = run_cell(FamilyKind::StackAdv, 4, runners[0]).unwrap();
        assert_eq!(again.total_cost, cells[2].total_cost);
    }

    #[test]
    fn oracle_cells_only_on_concealer_graphs() {
        assert!(run_cell(FamilyKind::Concealer, 3, Runner::FastOracle).is_ok());
        let err = run_cell(FamilyKind::StackAdv, 3, Runner::FastOracle).unwrap_err();
        assert!(matches!(err, ExperimentError::Cell { k: 3, .. }));
    }

    #[test]
    fn svg_is_deterministic_with_one_legend_entry_per_series() {
        let empty = emit_svg(&[]);
        assert!(empty.contains("<line") && !empty.contains("polyline"));
        let cells = vec![cell("stack-adv", 6, "queue", 7.0), cell("stack-adv", 7, "queue", 8.0), cell("stack-adv", 6, "stack", 4.0)];
        let svg = emit_svg(&cells);
        assert_eq!(svg.matches("class=\"legend\"").count(), 2);
        let mut shuffled = cells.clone();
        shuffled.reverse();
        assert_eq!(emit_svg(&shuffled), svg);
    }

    #[test]
    fn expectations() {
        let text = "# pinned\nstack-adv queue growing\nstack-adv stack bounded # ok\nqueue-adv queue bounded\n";
        let exp = parse_expectations(text).unwrap();
        assert_eq!(exp.len(), 3);
        let cells: Vec<BenchCell> = (6..10)
            .flat_map(|k| [cell("stack-adv", k, "queue", k as f64), cell("stack-adv", k, "stack", 4.0)])
            .collect();
        let failed = check_expectations(&cells, &exp);
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].0.policy, "queue");
        assert!(parse_expectations("a b c d").is_err());
        assert!(parse_expectations("a b fast").is_err());
    }
}
