//! Parameters and bodies of the individual subcommands.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use steplab::back_forth::{init_session, run, sweep, sweep_csv, verify};
use steplab::balls::{l1_four_ball_probe_with, l1_two_ball_witness, strongly_extreme_probe, two_unit_decomposition, FourBallReport, StepFn};
use steplab::davis::{gauge_with, nearest_extreme_distances, nearest_table_csv, sandwich_check_with, DavisModel, GaugeOptions, NetOptions};
use steplab::dense_sets::{build_rado, build_rado_capped, gen_no_repeated_distance, has_repeated_distance, rado_size, NoRepeatParams, DEFAULT_POINT_CAP};
use steplab::graph::{dichotomy_report_with, export_graph, sample_graph_with, ExportFormat, PointTable};
use steplab::numerics::distance_lt;
use steplab::rng::stream_rng;
use steplab::step_iso::{
    apply_coordinatewise, c0_counterexample, check_step_isometry, check_step_isometry_large,
    enumerate_step_isometric_bijections_with, forced_coordinate_witness, CoordinateStepIso, ForcedCoordinate, StepIsoMap1D,
};
use steplab::suite::{gen, junit_xml, run_suite, Kernel};
use steplab::{Exec, NormSpec, Rational, Vector};

use crate::parse::{parse_points, parse_vector, List, Rat};
use crate::{CliError, CliResult, Experiment, RunOutput, SideFile};

fn rat(v: &Option<Rat>, num: i64, den: i64) -> Rational {
    v.as_ref().map_or_else(|| Rational::new(num, den), |r| r.0.clone())
}

fn norm(v: &Option<String>, default: &str) -> CliResult<NormSpec> {
    let s = v.as_deref().unwrap_or(default);
    let n: NormSpec = s.parse()?;
    n.validate()?;
    Ok(n)
}

fn required<'a>(v: &'a Option<String>, name: &str) -> CliResult<&'a str> {
    v.as_deref().ok_or_else(|| CliError::config(format!("--{name} is required")))
}

fn points(v: &Option<String>, name: &str, base: usize) -> CliResult<Vec<Vector>> {
    parse_points(required(v, name)?, base).map_err(|e| CliError::config(format!("--{name}: {e}")))
}

fn rational_pow_sum(v: &Vector, p: u32) -> Rational {
    v.iter().map(|(_, x)| x.abs().pow(p)).sum()
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RadoBuildArgs {
    /// Number of stages [default: 2].
    #[arg(long)]
    pub stages: Option<u32>,
    /// Refuse to build more points than this [default: 100000].
    #[arg(long)]
    pub cap: Option<u64>,
}

impl Experiment for RadoBuildArgs {
    const NAME: &'static str = "rado-build";

    fn run(&self, _exec: Exec) -> CliResult<RunOutput> {
        let stages = self.stages.unwrap_or(2);
        let cap = self.cap.unwrap_or(DEFAULT_POINT_CAP);
        let rado = build_rado_capped(stages, cap)?;
        let mut out = RunOutput {
            config: json!({ "stages": stages, "cap": cap }),
            results: json!({
                "points": rado.len(),
                "stage_counts": rado.stage_counts(),
            }),
            ..Default::default()
        };
        out.check("points_well_formed", rado.points().iter().all(|p| p.is_well_formed()));
        out.check("size_matches_count", rado.len() as u64 == rado_size(stages));
        out.files.push(SideFile::new("rado.jsonl", rado.to_jsonl()));
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SampleGraphArgs {
    /// Point set: rado or grid [default: rado].
    #[arg(long)]
    pub source: Option<String>,
    /// Stages of the dense set when source is rado [default: 2].
    #[arg(long)]
    pub stages: Option<u32>,
    /// Grid spacing when source is grid [default: 1/10].
    #[arg(long)]
    pub grid_step: Option<Rat>,
    /// Grid covers [0, grid-max] [default: 3].
    #[arg(long)]
    pub grid_max: Option<Rat>,
    /// l1, l2, lN or linf [default: l2].
    #[arg(long)]
    pub norm: Option<String>,
    /// Edge probability as num/den [default: 1/2].
    #[arg(long)]
    pub p: Option<Rat>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// json, dot or graphml [default: json].
    #[arg(long)]
    pub format: Option<String>,
}

impl Experiment for SampleGraphArgs {
    const NAME: &'static str = "sample-graph";

    fn run(&self, exec: Exec) -> CliResult<RunOutput> {
        let source = self.source.clone().unwrap_or_else(|| "rado".into());
        let stages = self.stages.unwrap_or(2);
        let step = rat(&self.grid_step, 1, 10);
        let max = rat(&self.grid_max, 3, 1);
        let table = match source.as_str() {
            "rado" => PointTable::from_rado(&build_rado(stages)?),
            "grid" => PointTable::grid_1d(&step, &max)?,
            other => return Err(CliError::config(format!("unknown source {other:?}"))),
        };
        let norm = norm(&self.norm, "l2")?;
        let p = rat(&self.p, 1, 2);
        let seed = self.seed.unwrap_or(0);
        let format = self.format.clone().unwrap_or_else(|| "json".into());
        let (fmt, ext) = match format.as_str() {
            "json" => (ExportFormat::Json, "json"),
            "dot" => (ExportFormat::Dot, "dot"),
            "graphml" => (ExportFormat::GraphMl, "graphml"),
            other => return Err(CliError::config(format!("unknown format {other:?}"))),
        };
        let g = sample_graph_with(&table, &norm, &p, seed, exec)?;
        let mut eligible = true;
        for (u, v) in g.edges() {
            eligible &= distance_lt(table.get(u)?, table.get(v)?, &Rational::one(), &norm)?;
        }
        let mut config = json!({ "source": source, "norm": norm.to_string(), "p": p, "seed": seed, "format": format });
        if source == "rado" {
            config["stages"] = json!(stages);
        } else {
            config["grid_step"] = json!(step);
            config["grid_max"] = json!(max);
        }
        let mut out = RunOutput {
            config,
            results: json!({ "points": table.len(), "edges": g.edge_count() }),
            ..Default::default()
        };
        out.check("edges_below_distance_one", eligible);
        out.files.push(SideFile::new(format!("graph.{ext}"), export_graph(&g, fmt)));
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BackAndForthArgs {
    /// Stages of the dense set [default: 2].
    #[arg(long)]
    pub stages: Option<u32>,
    /// Edge probability [default: 1/2].
    #[arg(long)]
    pub p: Option<Rat>,
    /// Seeds of the two graphs [default: 1,2].
    #[arg(long)]
    pub seeds: Option<List<u64>>,
    /// Step attempts before stopping [default: 10].
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// l1, l2, lN or linf [default: l2].
    #[arg(long)]
    pub norm: Option<String>,
    /// Also run this many independent seed pairs (2k+1, 2k+2) [default: 0].
    #[arg(long)]
    pub sweep_pairs: Option<u64>,
}

impl Experiment for BackAndForthArgs {
    const NAME: &'static str = "back-and-forth";

    fn run(&self, exec: Exec) -> CliResult<RunOutput> {
        let stages = self.stages.unwrap_or(2);
        let p = rat(&self.p, 1, 2);
        let seeds = self.seeds.clone().map_or(vec![1, 2], |l| l.0);
        let [s1, s2] = seeds[..] else {
            return Err(CliError::config("--seeds takes exactly two values"));
        };
        let max_steps = self.max_steps.unwrap_or(10);
        let norm = norm(&self.norm, "l2")?;
        let sweep_pairs = self.sweep_pairs.unwrap_or(0);

        let rado = build_rado(stages)?;
        let table = PointTable::from_rado(&rado);
        let g1 = sample_graph_with(&table, &norm, &p, s1, exec)?;
        let g2 = sample_graph_with(&table, &norm, &p, s2, exec)?;
        let mut session = init_session(&rado, &g1, &g2)?;
        let transcript = run(&mut session, max_steps)?;
        let report = verify(&session);

        let mut out = RunOutput {
            config: json!({
                "stages": stages, "p": p, "seeds": [s1, s2], "max_steps": max_steps,
                "norm": norm.to_string(), "sweep_pairs": sweep_pairs,
            }),
            results: json!({
                "points": rado.len(),
                "steps_attempted": transcript.records.len(),
                "steps_achieved": transcript.steps_achieved(),
                "accepted": transcript.accepted,
                "stall": transcript.stall.as_ref().map(|s| s.label()),
                "all_verified": transcript.all_verified,
                "verify": report,
            }),
            ..Default::default()
        };
        out.check("every_accepted_step_verified", transcript.all_verified);
        out.check("final_map_verified", report.all_pass());
        out.files.push(SideFile::new("transcript.jsonl", transcript.to_jsonl()));

        if sweep_pairs > 0 {
            let graphs = (0..sweep_pairs)
                .map(|k| {
                    Ok((
                        sample_graph_with(&table, &norm, &p, 2 * k + 1, exec)?,
                        sample_graph_with(&table, &norm, &p, 2 * k + 2, exec)?,
                    ))
                })
                .collect::<steplab::Result<Vec<_>>>()?;
            let rows = sweep(&rado, &graphs, max_steps, exec)?;
            let mean = rows.iter().map(|r| r.steps_achieved as f64).sum::<f64>() / rows.len() as f64;
            out.results["sweep"] = json!({ "pairs": rows.len(), "mean_steps": mean });
            out.files.push(SideFile::new("sweep.csv", sweep_csv(&rows)));
        }
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DichotomyArgs {
    /// Grid spacing [default: 1/20].
    #[arg(long)]
    pub grid_step: Option<Rat>,
    /// Grid covers [0, grid-max] [default: 3].
    #[arg(long)]
    pub grid_max: Option<Rat>,
    /// Edge probability [default: 1].
    #[arg(long)]
    pub p: Option<Rat>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest k examined, at least 2 [default: 3].
    #[arg(long)]
    pub k_max: Option<u32>,
    /// l1, l2, lN or linf [default: l2].
    #[arg(long)]
    pub norm: Option<String>,
}

impl Experiment for DichotomyArgs {
    const NAME: &'static str = "dichotomy";

    fn run(&self, exec: Exec) -> CliResult<RunOutput> {
        let step = rat(&self.grid_step, 1, 20);
        let max = rat(&self.grid_max, 3, 1);
        let p = rat(&self.p, 1, 1);
        let seed = self.seed.unwrap_or(0);
        let k_max = self.k_max.unwrap_or(3);
        let norm = norm(&self.norm, "l2")?;
        let table = PointTable::grid_1d(&step, &max)?;
        let g = sample_graph_with(&table, &norm, &p, seed, exec)?;
        let rows = dichotomy_report_with(&g, &table, k_max, exec)?;

        let mut csv = String::from("k,pairs_tested,norm_close_graph_far,graph_close_norm_far,violation_rate\n");
        let mut json_rows = Vec::new();
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                r.k, r.pairs_tested, r.norm_close_graph_far, r.graph_close_norm_far, r.violation_rate()
            ));
            json_rows.push(json!({
                "k": r.k,
                "pairs_tested": r.pairs_tested,
                "norm_close_graph_far": r.norm_close_graph_far,
                "graph_close_norm_far": r.graph_close_norm_far,
                "violation_rate": r.violation_rate(),
            }));
        }
        let mut out = RunOutput {
            config: json!({
                "grid_step": step, "grid_max": max, "p": p, "seed": seed, "k_max": k_max, "norm": norm.to_string(),
            }),
            results: json!({ "points": table.len(), "edges": g.edge_count(), "rows": json_rows }),
            ..Default::default()
        };
        // a path of k edges spans norm distance below k, whatever p is
        out.check("graph_close_implies_norm_close", rows.iter().all(|r| r.graph_close_norm_far == 0));
        if p == Rational::one() {
            out.check("no_violations_at_p_one", rows.iter().all(|r| r.violations() == 0));
        }
        out.files.push(SideFile::new("dichotomy.csv", csv));
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CheckStepIsoArgs {
    /// Points separated by `;`, each dense (`1/2,0,3`) or sparse (`1:1/2,3:3`); indices start at 1.
    #[arg(long)]
    pub points: Option<String>,
    /// Images in the same format; overrides --map.
    #[arg(long)]
    pub images: Option<String>,
    /// c0, identity, or a step map such as `0:0,1/3:2/3,1:1;sign=1;offset=0` [default: c0].
    #[arg(long)]
    pub map: Option<String>,
    /// l1, l2, lN or linf [default: linf].
    #[arg(long)]
    pub norm: Option<String>,
    /// Only compare floors up to m0 − 1.
    #[arg(long)]
    pub m0: Option<u64>,
}

impl Experiment for CheckStepIsoArgs {
    const NAME: &'static str = "check-step-iso";

    fn run(&self, _exec: Exec) -> CliResult<RunOutput> {
        let pts = points(&self.points, "points", 1)?;
        let norm = norm(&self.norm, "linf")?;
        let map = self.map.clone().unwrap_or_else(|| "c0".into());
        let images = match &self.images {
            Some(_) => points(&self.images, "images", 1)?,
            None => match map.as_str() {
                "c0" => pts.iter().map(c0_counterexample).collect(),
                "identity" => pts.clone(),
                spec => {
                    let h: StepIsoMap1D = spec.parse()?;
                    let m = CoordinateStepIso::with_default(BTreeMap::new(), BTreeMap::new(), h)?;
                    pts.iter().map(|v| apply_coordinatewise(&m, v)).collect::<steplab::Result<_>>()?
                }
            },
        };
        let result = match self.m0 {
            Some(m0) => check_step_isometry_large(&pts, &images, &norm, m0)?,
            None => check_step_isometry(&pts, &images, &norm)?,
        };
        let mut out = RunOutput {
            config: json!({
                "points": pts, "images": self.images.as_ref().map(|_| &images), "map": map,
                "norm": norm.to_string(), "m0": self.m0,
            }),
            results: json!({ "images": images, "result": result }),
            ..Default::default()
        };
        out.check("step_isometry", result.is_ok());
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EnumerateStepIsoArgs {
    /// Up to 8 points separated by `;`; indices start at 1.
    #[arg(long)]
    pub points: Option<String>,
    /// l1, l2, lN or linf [default: l2].
    #[arg(long)]
    pub norm: Option<String>,
}

impl Experiment for EnumerateStepIsoArgs {
    const NAME: &'static str = "enumerate-step-iso";

    fn run(&self, exec: Exec) -> CliResult<RunOutput> {
        let pts = points(&self.points, "points", 1)?;
        let norm = norm(&self.norm, "l2")?;
        let found = enumerate_step_isometric_bijections_with(&pts, &norm, exec)?;
        let identity: Vec<usize> = (0..pts.len()).collect();
        let mut out = RunOutput {
            config: json!({ "points": pts, "norm": norm.to_string() }),
            results: json!({ "count": found.len(), "bijections": found }),
            ..Default::default()
        };
        out.check("identity_found", found.contains(&identity));
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct C0CounterexampleArgs {
    /// Check ‖T(e_n/(n+1))‖ for n up to this [default: 50].
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Random finite subsets to test [default: 500].
    #[arg(long)]
    pub subsets: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Experiment for C0CounterexampleArgs {
    const NAME: &'static str = "c0-counterexample";

    fn run(&self, _exec: Exec) -> CliResult<RunOutput> {
        let n_max = self.n_max.unwrap_or(50);
        let subsets = self.subsets.unwrap_or(500);
        let seed = self.seed.unwrap_or(0);
        if n_max == 0 {
            return Err(CliError::config("--n-max must be positive"));
        }

        let mut values = Vec::new();
        let mut exact = true;
        for n in 1..=n_max {
            let image = c0_counterexample(&Vector::from_pairs([(n as usize, Rational::new(1, n as i64 + 1))]));
            let sup = image.iter().map(|(_, v)| v.abs()).max().unwrap_or_default();
            let expected = Rational::one() - Rational::new(1, n as i64 + 1);
            exact &= sup == expected;
            values.push(json!({ "n": n, "norm": sup, "expected": expected }));
        }

        let mut rng = stream_rng(seed, 0);
        let mut violations = 0u64;
        let mut first_violation = None;
        for _ in 0..subsets {
            let d = rng.gen_range(1..=6);
            let count = rng.gen_range(2..=6);
            let pts = gen::distinct_vectors(&mut rng, count, d, 8, 3);
            let imgs: Vec<Vector> = pts.iter().map(c0_counterexample).collect();
            let res = check_step_isometry(&pts, &imgs, &NormSpec::LInfinity)?;
            if !res.is_ok() {
                violations += 1;
                first_violation.get_or_insert_with(|| json!({ "points": pts, "result": res }));
            }
        }

        let mut out = RunOutput {
            config: json!({ "n_max": n_max, "subsets": subsets, "seed": seed }),
            results: json!({
                "values": values,
                "subsets_checked": subsets,
                "violations": violations,
                "first_violation": first_violation,
            }),
            ..Default::default()
        };
        out.check("norms_exact", exact);
        out.check("step_isometry_on_subsets", violations == 0);
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ForcedCoordinateArgs {
    /// Compute coordinates 1..=n-max [default: 50].
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Values of ε, at least two below 1/(n+1) [default: 1/1000,1/10000].
    #[arg(long)]
    pub eps: Option<List<Rat>>,
}

impl Experiment for ForcedCoordinateArgs {
    const NAME: &'static str = "forced-coordinate";

    fn run(&self, _exec: Exec) -> CliResult<RunOutput> {
        let n_max = self.n_max.unwrap_or(50);
        if n_max == 0 {
            return Err(CliError::config("--n-max must be positive"));
        }
        let eps: Vec<Rational> = match &self.eps {
            Some(l) => l.0.iter().map(|r| r.0.clone()).collect(),
            None => vec![Rational::new(1, 1000), Rational::new(1, 10_000)],
        };
        let mut rows = Vec::new();
        let mut all_match = true;
        for n in 1..=n_max {
            let w = forced_coordinate_witness(n, &eps)?;
            let expected = Rational::one() - Rational::new(1, n as i64 + 1);
            all_match &= w == ForcedCoordinate::Point { value: expected.clone() };
            rows.push(json!({ "n": n, "witness": w, "expected": expected }));
        }
        let mut out = RunOutput {
            config: json!({ "n_max": n_max, "eps": eps }),
            results: json!({ "coordinates": rows }),
            ..Default::default()
        };
        out.check("coordinate_is_one_minus_reciprocal", all_match);
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct L1BallsArgs {
    /// Radii for the four-ball probe [default: 1/2,1/4].
    #[arg(long)]
    pub delta: Option<List<Rat>>,
    /// Cells of the step-function grid, even [default: 64].
    #[arg(long)]
    pub m: Option<usize>,
    /// Samples per radius [default: 100000].
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random (λ, μ) pairs for the two-ball witness [default: 50].
    #[arg(long)]
    pub pairs: Option<u64>,
}

impl Experiment for L1BallsArgs {
    const NAME: &'static str = "l1-balls";

    fn run(&self, exec: Exec) -> CliResult<RunOutput> {
        let deltas: Vec<Rational> = match &self.delta {
            Some(l) => l.0.iter().map(|r| r.0.clone()).collect(),
            None => vec![Rational::new(1, 2), Rational::new(1, 4)],
        };
        let m = self.m.unwrap_or(64);
        let samples = self.samples.unwrap_or(100_000);
        let seed = self.seed.unwrap_or(9);
        let pairs = self.pairs.unwrap_or(50);

        let mut rng = stream_rng(seed, u64::MAX);
        let mut witnesses = Vec::new();
        let mut two_ball_ok = true;
        for _ in 0..pairs {
            let cells = 2 * rng.gen_range(1..=8usize);
            let lambda = Rational::new(rng.gen_range(1..=98), 100);
            let mu = &lambda + &((Rational::one() - &lambda) * Rational::new(rng.gen_range(1..=99), 100));
            let f = StepFn::new(vec![&lambda * &Rational::integer(2); cells])?;
            match l1_two_ball_witness(&f, &mu) {
                Ok(w) => witnesses.push(json!({ "lambda": w.lambda, "mu": w.mu, "cells": cells, "split_cell": w.split_cell })),
                Err(e) => {
                    two_ball_ok = false;
                    witnesses.push(json!({ "lambda": lambda, "mu": mu, "cells": cells, "error": e.to_string() }));
                }
            }
        }

        let mut reports = Vec::new();
        for d in &deltas {
            reports.push(l1_four_ball_probe_with(d, m, samples, seed, exec)?);
        }
        let mut csv = format!("{}\n", FourBallReport::csv_header());
        for r in &reports {
            csv.push_str(&r.csv_row());
            csv.push('\n');
        }
        let below = reports.iter().all(|r| r.violations == 0 && r.max_norm < r.delta);

        let mut out = RunOutput {
            config: json!({ "delta": deltas, "m": m, "samples": samples, "seed": seed, "pairs": pairs }),
            results: json!({ "two_ball": witnesses, "four_ball": reports }),
            ..Default::default()
        };
        out.check("two_ball_identities", two_ball_ok);
        out.check("four_ball_norm_below_delta", below);
        out.files.push(SideFile::new("probe.csv", csv));
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TwoUnitArgs {
    /// Decompose this vector (indices from 1) instead of random ones.
    #[arg(long)]
    pub x: Option<String>,
    /// Exponents to draw from [default: 2,3,4]; the first is used with --x.
    #[arg(long)]
    pub p: Option<List<u32>>,
    /// Dimension with --x, largest dimension otherwise [default: 10, or the support of x].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Random vectors when --x is absent [default: 100].
    #[arg(long)]
    pub count: Option<u64>,
    /// Residual tolerance [default: 1/1000000000].
    #[arg(long)]
    pub tol: Option<Rat>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Experiment for TwoUnitArgs {
    const NAME: &'static str = "two-unit";

    fn run(&self, _exec: Exec) -> CliResult<RunOutput> {
        let ps = self.p.clone().map_or(vec![2, 3, 4], |l| l.0);
        if ps.is_empty() {
            return Err(CliError::config("--p is empty"));
        }
        let tol = rat(&self.tol, 1, 1_000_000_000);
        let seed = self.seed.unwrap_or(0);
        let count = self.count.unwrap_or(100);

        let mut cases: Vec<(Vector, usize, u32)> = Vec::new();
        let config;
        if let Some(x) = &self.x {
            let x = parse_vector(x, 1).map_err(|e| CliError::config(format!("--x: {e}")))?;
            let dim = self.dim.unwrap_or_else(|| x.max_index().unwrap_or(1).max(2));
            config = json!({ "x": x, "p": ps[0], "dim": dim, "tol": tol });
            cases.push((x, dim, ps[0]));
        } else {
            let max_dim = self.dim.unwrap_or(10);
            if max_dim < 2 {
                return Err(CliError::config("--dim must be at least 2"));
            }
            config = json!({ "p": ps, "dim": max_dim, "count": count, "tol": tol, "seed": seed });
            let mut rng = stream_rng(seed, 0);
            for _ in 0..count {
                let p = ps[rng.gen_range(0..ps.len())];
                let dim = rng.gen_range(2..=max_dim);
                let raw = gen::vector(&mut rng, dim, 20, 1);
                let x = if rational_pow_sum(&raw, p) >= Rational::one() {
                    raw.scale(&Rational::new(1, dim as i64 + 1))
                } else {
                    raw
                };
                cases.push((x, dim, p));
            }
        }

        let t = tol.to_f64();
        let mut rows = Vec::new();
        let mut within = true;
        for (x, dim, p) in &cases {
            let r = two_unit_decomposition(x, *dim, *p, &tol)?;
            within &= r.norm_residual <= t && r.distance_residual <= t;
            rows.push(json!({
                "x": x, "dim": dim, "p": p,
                "y": r.y, "y_f64": r.y.to_f64_dense(dim + 1)[1..].to_vec(),
                "norm_residual": r.norm_residual, "distance_residual": r.distance_residual,
                "iterations": r.iterations,
            }));
        }
        let mut out = RunOutput { config, results: json!({ "decompositions": rows }), ..Default::default() };
        out.check("residuals_within_tol", within);
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct StronglyExtremeArgs {
    /// Dimension of ℓ∞^d [default: 3].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Ball enlargement δ [default: 1/4].
    #[arg(long)]
    pub delta: Option<Rat>,
    /// [default: 10000]
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Experiment for StronglyExtremeArgs {
    const NAME: &'static str = "strongly-extreme";

    fn run(&self, _exec: Exec) -> CliResult<RunOutput> {
        let dim = self.dim.unwrap_or(3);
        let delta = rat(&self.delta, 1, 4);
        let samples = self.samples.unwrap_or(10_000);
        let seed = self.seed.unwrap_or(0);
        let rep = strongly_extreme_probe(dim, &delta, samples, seed)?;
        let mut out = RunOutput {
            config: json!({ "dim": dim, "delta": delta, "samples": samples, "seed": seed }),
            results: json!(rep),
            ..Default::default()
        };
        out.check("intersection_within_bounds", rep.passed());
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DavisGaugeArgs {
    /// Vector with indices from 0, dense or sparse [default: 1,1/2].
    #[arg(long)]
    pub x: Option<String>,
    /// Truncation: F holds e0 + e_k/(2k) and e0 − e_k/(2k+1) for k ≤ n [default: 10].
    #[arg(long)]
    pub n: Option<usize>,
    /// Target duality gap [default: 1/10000].
    #[arg(long)]
    pub tol: Option<Rat>,
    /// [default: 20]
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Iterations per restart [default: 10000].
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn gauge_options(restarts: Option<usize>, iterations: Option<usize>, seed: Option<u64>) -> GaugeOptions {
    let d = GaugeOptions::default();
    GaugeOptions {
        restarts: restarts.unwrap_or(d.restarts),
        iterations: iterations.unwrap_or(d.iterations),
        seed: seed.unwrap_or(d.seed),
    }
}

impl Experiment for DavisGaugeArgs {
    const NAME: &'static str = "davis-gauge";

    fn run(&self, _exec: Exec) -> CliResult<RunOutput> {
        let x = parse_vector(self.x.as_deref().unwrap_or("1,1/2"), 0).map_err(|e| CliError::config(format!("--x: {e}")))?;
        let n = self.n.unwrap_or(10);
        let tol = rat(&self.tol, 1, 10_000);
        let opts = gauge_options(self.restarts, self.iterations, self.seed);
        let model = DavisModel::new(n)?;
        let g = gauge_with(&x, &model, &tol, &opts)?;
        let s = sandwich_check_with(&x, &model, &tol, &opts)?;
        let certificate = json!({
            "x": x, "truncation": n, "upper": g.value, "alpha": g.alpha,
            "slab_part": g.slab_part, "lower": g.lower, "dual": g.dual,
        });
        let mut out = RunOutput {
            config: json!({ "x": x, "n": n, "tol": tol, "options": opts }),
            results: json!({
                "upper": g.value, "lower": g.lower, "gap": g.gap(),
                "converged": g.converged, "iterations": g.iterations, "sandwich": s,
            }),
            ..Default::default()
        };
        out.check("sandwich", s.passed);
        out.check("bounds_ordered", g.lower <= g.value + tol.to_f64());
        let mut bytes = serde_json::to_vec_pretty(&certificate).expect("certificate serializes");
        bytes.push(b'\n');
        out.files.push(SideFile::new("certificate.json", bytes));
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DavisTableArgs {
    /// Truncation, at least 2 [default: 10].
    #[arg(long)]
    pub n: Option<usize>,
    /// [default: 1/10000]
    #[arg(long)]
    pub tol: Option<Rat>,
    /// Net angles per coordinate plane [default: 8].
    #[arg(long)]
    pub angles: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Experiment for DavisTableArgs {
    const NAME: &'static str = "davis-table";

    fn run(&self, exec: Exec) -> CliResult<RunOutput> {
        let n = self.n.unwrap_or(10);
        let tol = rat(&self.tol, 1, 10_000);
        let net = NetOptions { angles: self.angles.unwrap_or(NetOptions::default().angles) };
        let opts = gauge_options(self.restarts, self.iterations, self.seed);
        let model = DavisModel::new(n)?;
        let rows = nearest_extreme_distances(&model, &tol, &net, &opts, exec)?;
        let isolated: Vec<&str> = rows.iter().filter(|r| r.isolated).map(|r| r.label.as_str()).collect();
        let t = tol.to_f64();
        let partners_ok = rows.iter().all(|r| (r.partner_gamma - r.partner_expected).abs() <= t);
        let mut out = RunOutput {
            config: json!({ "n": n, "tol": tol, "net": net, "options": opts }),
            results: json!({ "isolated": isolated, "rows": rows }),
            ..Default::default()
        };
        out.check("only_top_pair_isolated", isolated == ["e0+e1/2", "-(e0+e1/2)"]);
        out.check("partner_distances", partners_ok);
        out.files.push(SideFile::new("table.csv", nearest_table_csv(&rows)));
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct NoRepeatGenArgs {
    /// [default: 2]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Points to generate [default: 10].
    #[arg(long)]
    pub count: Option<usize>,
    /// l1, l2, lN or linf [default: l2].
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest coordinate denominator [default: 16].
    #[arg(long)]
    pub denom_bound: Option<u32>,
    /// Candidate draws before giving up [default: 1000 per point].
    #[arg(long)]
    pub max_attempts: Option<u64>,
}

impl Experiment for NoRepeatGenArgs {
    const NAME: &'static str = "no-repeat-gen";

    fn run(&self, _exec: Exec) -> CliResult<RunOutput> {
        let norm = norm(&self.norm, "l2")?;
        let mut params = NoRepeatParams::new(
            self.dim.unwrap_or(2),
            self.count.unwrap_or(10),
            norm.clone(),
            self.seed.unwrap_or(0),
            self.denom_bound.unwrap_or(16),
        );
        if let Some(a) = self.max_attempts {
            params.max_attempts = a;
        }
        let pts = gen_no_repeated_distance(&params)?;
        let repeat = has_repeated_distance(&pts, &norm)?;
        let jsonl: String = pts
            .iter()
            .map(|v| serde_json::to_string(v).expect("vectors serialize") + "\n")
            .collect();
        let mut out = RunOutput {
            config: json!({
                "dim": params.dim, "count": params.count, "norm": norm.to_string(), "seed": params.seed,
                "denom_bound": params.denom_bound, "max_attempts": params.max_attempts,
            }),
            results: json!({ "points": pts.len() }),
            ..Default::default()
        };
        out.check("distances_distinct", repeat.is_none());
        out.files.push(SideFile::new("points.jsonl", jsonl));
        Ok(out)
    }
}

#[derive(clap::Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SuiteArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Check ids or id prefixes to run, comma separated.
    #[arg(long)]
    pub filter: Option<List<String>>,
}

impl Experiment for SuiteArgs {
    const NAME: &'static str = "suite";

    fn run(&self, exec: Exec) -> CliResult<RunOutput> {
        let seed = self.seed.unwrap_or(0);
        let filter = self.filter.as_ref().map(|l| l.0.clone());
        let report = run_suite(filter.as_deref(), seed, Kernel::default(), exec);
        if !report.unknown_filters.is_empty() {
            return Err(CliError::config(format!("unknown check ids: {}", report.unknown_filters.join(", "))));
        }
        let summary: BTreeMap<&str, bool> = report.results.iter().map(|r| (r.id.as_str(), r.outcome.passed)).collect();
        let mut out = RunOutput {
            config: json!({ "seed": seed, "filter": filter }),
            results: json!({
                "checks_run": report.results.len(),
                "outcomes": summary,
                "uncovered_anchors": report.uncovered_anchors,
            }),
            ..Default::default()
        };
        out.check("suite_passed", report.passed);
        let mut json = serde_json::to_vec_pretty(&report).expect("suite report serializes");
        json.push(b'\n');
        out.files.push(SideFile::new("suite.json", json));
        out.files.push(SideFile::new("junit.xml", junit_xml(&report)));
        Ok(out)
    }
}
