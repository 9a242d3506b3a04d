//! Registry of executable lemma checks.
//!
//! Each check is tagged hard (exact claims, any failure fails the suite) or
//! statistical (rates are reported; only an explicit hard bound can fail).
//! The suite also refuses to pass when an in-scope anchor has no check.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::back_forth::{init_session, run};
use crate::balls::{l1_four_ball_probe_with, l1_two_ball_witness, strongly_extreme_probe, two_unit_decomposition, StepFn};
use crate::davis::{gauge_with, sandwich_check_with, DavisModel, GaugeOptions};
use crate::dense_sets::{build_rado, gen_q, has_repeated_distance, rado_size};
use crate::error::Result;
use crate::exec::Exec;
use crate::graph::{dichotomy_report_with, sample_graph_with, PointTable};
use crate::numerics::{distance_key, floor_distance, NormSpec, Rational, Vector};
use crate::rng::{keyed_u64, stream_rng};
use crate::step_iso::{
    apply_coordinatewise, c0_counterexample, check_step_isometry, check_step_isometry_large,
    decompose_coordinatewise, enumerate_step_isometric_bijections_with, forced_coordinate_witness,
    next_permutation, CoordinateStepIso, Decomposition, ForcedCoordinate, Sign, StepIsoMap1D,
};

/// Anchors every suite run must cover.
pub const IN_SCOPE_ANCHORS: &[&str] = &[
    "graph-distance-dichotomy",
    "step-isometry-definition",
    "integer-distance-preservation",
    "large-distance-promotion",
    "c0-non-extension",
    "strongly-extreme-two-ball",
    "l1-two-ball",
    "l1-four-ball",
    "coordinatewise-decomposition",
    "lattice-isometry",
    "two-unit-sum",
    "rado-construction",
    "back-and-forth",
    "renorming-gauge",
];

pub type FloorFn = fn(&Vector, &Vector, &NormSpec) -> Result<u64>;

/// Primitives the checks route through, replaceable for mutation testing.
#[derive(Clone, Copy)]
pub struct Kernel {
    pub floor_distance: FloorFn,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel { floor_distance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Hard,
    Statistical,
}

pub struct CheckCtx {
    pub seed: u64,
    pub kernel: Kernel,
    pub exec: Exec,
    pub trials: u32,
}

impl CheckCtx {
    fn rng(&self, id: &str) -> ChaCha8Rng {
        let tag = id.bytes().fold(0u64, |h, b| keyed_u64(h, b as u64, 0));
        stream_rng(self.seed, tag)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub trials: u64,
    pub failures: u64,
    pub witnesses: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

const MAX_WITNESSES: usize = 5;

impl CheckOutcome {
    fn new() -> Self {
        CheckOutcome { passed: true, ..Default::default() }
    }

    fn trial(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.trials += 1;
        if !ok {
            self.fail(witness());
        }
    }

    fn fail(&mut self, witness: String) {
        self.passed = false;
        self.failures += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness);
        }
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }
}

pub struct LemmaCheck {
    pub id: &'static str,
    pub anchor: &'static str,
    pub kind: CheckKind,
    pub description: &'static str,
    pub trials: u32,
    pub run: fn(&CheckCtx) -> Result<CheckOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub anchor: String,
    pub kind: CheckKind,
    pub description: String,
    pub outcome: CheckOutcome,
}

impl CheckResult {
    /// Statistical checks only count against the suite through `passed`, which
    /// they set solely for explicit hard bounds.
    pub fn blocking_failure(&self) -> bool {
        !self.outcome.passed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub filter: Option<Vec<String>>,
    pub results: Vec<CheckResult>,
    pub uncovered_anchors: Vec<String>,
    pub unknown_filters: Vec<String>,
    pub passed: bool,
}

pub fn registry() -> Vec<LemmaCheck> {
    vec![
        LemmaCheck {
            id: "graph-distance-dichotomy/path-bound",
            anchor: "graph-distance-dichotomy",
            kind: CheckKind::Hard,
            description: "a path of k edges never joins points at norm distance >= k",
            trials: 6,
            run: check_path_bound,
        },
        LemmaCheck {
            id: "graph-distance-dichotomy/violation-rate",
            anchor: "graph-distance-dichotomy",
            kind: CheckKind::Statistical,
            description: "rate of pairs with norm distance < k but graph distance > k",
            trials: 3,
            run: check_dichotomy_rate,
        },
        LemmaCheck {
            id: "step-isometry-definition/checker-vs-enumeration",
            anchor: "step-isometry-definition",
            kind: CheckKind::Hard,
            description: "pairwise floor checking agrees with brute-force enumeration",
            trials: 40,
            run: check_checker_vs_enumeration,
        },
        LemmaCheck {
            id: "integer-distance-preservation/piecewise-linear",
            anchor: "integer-distance-preservation",
            kind: CheckKind::Hard,
            description: "piecewise-linear step-isometries of the line keep integer gaps exactly",
            trials: 500,
            run: check_integer_distances,
        },
        LemmaCheck {
            id: "large-distance-promotion/implication",
            anchor: "large-distance-promotion",
            kind: CheckKind::Hard,
            description: "every step-isometry passes the large-distance check for all thresholds",
            trials: 100,
            run: check_large_implication,
        },
        LemmaCheck {
            id: "large-distance-promotion/search",
            anchor: "large-distance-promotion",
            kind: CheckKind::Statistical,
            description: "how often random perturbations pass only the large-distance check",
            trials: 200,
            run: check_large_search,
        },
        LemmaCheck {
            id: "c0-non-extension/forced-coordinate",
            anchor: "c0-non-extension",
            kind: CheckKind::Hard,
            description: "the ball argument forces coordinate n to 1 - 1/(n+1), and T moves e_n/(n+1) there",
            trials: 30,
            run: check_c0_forced,
        },
        LemmaCheck {
            id: "c0-non-extension/step-isometry",
            anchor: "c0-non-extension",
            kind: CheckKind::Hard,
            description: "T is a step-isometry on random finite subsets of rational c00",
            trials: 100,
            run: check_c0_step_iso,
        },
        LemmaCheck {
            id: "strongly-extreme-two-ball/all-ones",
            anchor: "strongly-extreme-two-ball",
            kind: CheckKind::Hard,
            description: "the all-ones vector certifies small two-ball intersections in l_inf^d",
            trials: 3,
            run: check_strongly_extreme,
        },
        LemmaCheck {
            id: "l1-two-ball/witness",
            anchor: "l1-two-ball",
            kind: CheckKind::Hard,
            description: "the split witnesses meet all five exact norm equalities",
            trials: 50,
            run: check_l1_two_ball,
        },
        LemmaCheck {
            id: "l1-four-ball/probe",
            anchor: "l1-four-ball",
            kind: CheckKind::Hard,
            description: "no sampled function in the four-ball intersection reaches norm delta",
            trials: 20_000,
            run: check_l1_four_ball,
        },
        LemmaCheck {
            id: "coordinatewise-decomposition/recovery",
            anchor: "coordinatewise-decomposition",
            kind: CheckKind::Hard,
            description: "probing T(lambda e_k) recovers random coordinate-wise maps",
            trials: 20,
            run: check_decomposition,
        },
        LemmaCheck {
            id: "coordinatewise-decomposition/step-isometry",
            anchor: "coordinatewise-decomposition",
            kind: CheckKind::Hard,
            description: "coordinate-wise maps are step-isometries of l_inf^d",
            trials: 60,
            run: check_coordinatewise_step_iso,
        },
        LemmaCheck {
            id: "lattice-isometry/integer-points",
            anchor: "lattice-isometry",
            kind: CheckKind::Hard,
            description: "coordinate-wise step-isometries fixing 0 act isometrically on integer points",
            trials: 60,
            run: check_lattice,
        },
        LemmaCheck {
            id: "two-unit-sum/bisection",
            anchor: "two-unit-sum",
            kind: CheckKind::Hard,
            description: "points of the open unit ball split as a sum of two unit vectors",
            trials: 60,
            run: check_two_unit,
        },
        LemmaCheck {
            id: "rado-construction/stages",
            anchor: "rado-construction",
            kind: CheckKind::Hard,
            description: "staged enumeration has the predicted sizes, indices and supports",
            trials: 3,
            run: check_rado,
        },
        LemmaCheck {
            id: "back-and-forth/soundness",
            anchor: "back-and-forth",
            kind: CheckKind::Hard,
            description: "every accepted extension keeps properties 1-3 and exact distances",
            trials: 4,
            run: check_back_and_forth,
        },
        LemmaCheck {
            id: "renorming-gauge/extreme-points",
            anchor: "renorming-gauge",
            kind: CheckKind::Hard,
            description: "gauge of every point of F is 1, certified from both sides",
            trials: 1,
            run: check_gauge_extreme,
        },
        LemmaCheck {
            id: "renorming-gauge/sandwich",
            anchor: "renorming-gauge",
            kind: CheckKind::Hard,
            description: "(2/3)|x|_2 <= gauge(x) <= 2|x|_2 on random x",
            trials: 20,
            run: check_gauge_sandwich,
        },
    ]
}

pub fn run_suite(filter: Option<&[String]>, seed: u64, kernel: Kernel, exec: Exec) -> SuiteReport {
    run_suite_with(&registry(), filter, seed, kernel, exec)
}

/// Run `checks` (optionally only ids or anchors named in `filter`).
pub fn run_suite_with(
    checks: &[LemmaCheck],
    filter: Option<&[String]>,
    seed: u64,
    kernel: Kernel,
    exec: Exec,
) -> SuiteReport {
    let covered: BTreeSet<&str> = checks.iter().map(|c| c.anchor).collect();
    let uncovered_anchors: Vec<String> = IN_SCOPE_ANCHORS
        .iter()
        .filter(|a| !covered.contains(*a))
        .map(|a| a.to_string())
        .collect();
    let unknown_filters: Vec<String> = filter
        .unwrap_or_default()
        .iter()
        .filter(|f| !checks.iter().any(|c| c.id == f.as_str() || c.anchor == f.as_str()))
        .cloned()
        .collect();
    let selected: Vec<&LemmaCheck> = checks
        .iter()
        .filter(|c| filter.is_none_or(|f| f.iter().any(|x| x == c.id || x == c.anchor)))
        .collect();
    let mut results = exec.map_slice(&selected, |c| {
        let ctx = CheckCtx { seed, kernel, exec: Exec::Sequential, trials: c.trials };
        let outcome = match (c.run)(&ctx) {
            Ok(o) => o,
            Err(e) => {
                let mut o = CheckOutcome::new();
                o.fail(format!("error: {e}"));
                o
            }
        };
        CheckResult {
            id: c.id.to_string(),
            anchor: c.anchor.to_string(),
            kind: c.kind,
            description: c.description.to_string(),
            outcome,
        }
    });
    results.sort_by(|a, b| a.id.cmp(&b.id));
    let passed = uncovered_anchors.is_empty()
        && unknown_filters.is_empty()
        && results.iter().all(|r| !r.blocking_failure());
    SuiteReport {
        seed,
        filter: filter.map(|f| f.to_vec()),
        results,
        uncovered_anchors,
        unknown_filters,
        passed,
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn junit_xml(report: &SuiteReport) -> String {
    let failures = report.results.iter().filter(|r| r.blocking_failure()).count();
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<testsuite name=\"steplab-suite\" tests=\"{}\" failures=\"{}\">\n",
        report.results.len(),
        failures + report.uncovered_anchors.len()
    ));
    for r in &report.results {
        out.push_str(&format!(
            "  <testcase classname=\"{}\" name=\"{}\">",
            xml_escape(&r.anchor),
            xml_escape(&r.id)
        ));
        if r.blocking_failure() {
            out.push_str(&format!(
                "\n    <failure message=\"{} failing trials\">{}</failure>\n  ",
                r.outcome.failures,
                xml_escape(&r.outcome.witnesses.join("\n"))
            ));
        }
        out.push_str("</testcase>\n");
    }
    for a in &report.uncovered_anchors {
        out.push_str(&format!(
            "  <testcase classname=\"coverage\" name=\"{}\">\n    <failure message=\"no registered check\"/>\n  </testcase>\n",
            xml_escape(a)
        ));
    }
    out.push_str("</testsuite>\n");
    out
}

/// Random inputs shared by the suite and the test crates.
pub mod gen {
    use super::*;

    pub fn rational<R: Rng>(rng: &mut R, max_den: i64, max_abs: i64) -> Rational {
        let b = rng.gen_range(1..=max_den);
        Rational::new(rng.gen_range(-max_abs * b..=max_abs * b), b)
    }

    /// Distinct sorted values `k/den` strictly inside `(0, 1)`.
    fn interior<R: Rng>(rng: &mut R, count: usize, den: i64) -> Vec<Rational> {
        let mut picks = BTreeSet::new();
        while picks.len() < count {
            picks.insert(rng.gen_range(1..den));
        }
        picks.into_iter().map(|k| Rational::new(k, den)).collect()
    }

    /// A random increasing breakpoint map with sign and offset.
    pub fn step_iso_map<R: Rng>(rng: &mut R, with_offset: bool) -> StepIsoMap1D {
        let inner = rng.gen_range(0..4usize);
        let ts = interior(rng, inner, 12);
        let gs = interior(rng, inner, 12);
        let mut bps = vec![(Rational::zero(), Rational::zero())];
        bps.extend(ts.into_iter().zip(gs));
        bps.push((Rational::one(), Rational::one()));
        let sign = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
        let offset = if with_offset { rational(rng, 6, 3) } else { Rational::zero() };
        StepIsoMap1D::new(bps, sign, offset).expect("generated breakpoints are increasing")
    }

    pub fn coordinate_map<R: Rng>(rng: &mut R, d: usize) -> CoordinateStepIso {
        let mut targets: Vec<usize> = (1..=d).collect();
        for i in (1..targets.len()).rev() {
            targets.swap(i, rng.gen_range(0..=i));
        }
        let permutation = (1..=d).zip(targets).collect();
        let maps = (1..=d).map(|i| (i, step_iso_map(rng, false))).collect();
        CoordinateStepIso::new(permutation, maps).expect("shuffle is a permutation")
    }

    pub fn vector<R: Rng>(rng: &mut R, d: usize, max_den: i64, max_abs: i64) -> Vector {
        Vector::from_pairs((1..=d).map(|i| (i, rational(rng, max_den, max_abs))))
    }

    pub fn distinct_vectors<R: Rng>(rng: &mut R, count: usize, d: usize, max_den: i64, max_abs: i64) -> Vec<Vector> {
        let mut out: Vec<Vector> = Vec::with_capacity(count);
        while out.len() < count {
            let v = vector(rng, d, max_den, max_abs);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

fn check_path_bound(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let table = PointTable::grid_1d(&Rational::new(1, 10), &Rational::integer(3))?;
    for t in 0..ctx.trials {
        let p = Rational::new(1 + t as i64 % 4, 4);
        let seed = keyed_u64(ctx.seed, t as u64, 1);
        let g = sample_graph_with(&table, &NormSpec::l2(), &p, seed, ctx.exec)?;
        for row in dichotomy_report_with(&g, &table, 3, ctx.exec)? {
            out.trial(row.graph_close_norm_far == 0, || {
                format!("p={p} seed={seed} k={}: {} pairs", row.k, row.graph_close_norm_far)
            });
        }
    }
    Ok(out)
}

fn check_dichotomy_rate(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    for (label, step) in [("0.2", Rational::new(1, 5)), ("0.1", Rational::new(1, 10))] {
        let table = PointTable::grid_1d(&step, &Rational::integer(3))?;
        let mut rate = 0.0;
        for t in 0..ctx.trials {
            let g = sample_graph_with(&table, &NormSpec::l2(), &Rational::new(1, 2), keyed_u64(ctx.seed, t as u64, 2), ctx.exec)?;
            rate += dichotomy_report_with(&g, &table, 2, ctx.exec)?[0].violation_rate();
            out.trials += 1;
        }
        out.metric(&format!("k2_rate_step_{label}"), rate / ctx.trials.max(1) as f64);
    }
    Ok(out)
}

fn line_points(xs: &[Rational]) -> Vec<Vector> {
    xs.iter().map(|x| Vector::from_pairs([(1, x.clone())])).collect()
}

fn check_checker_vs_enumeration(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("checker-vs-enumeration");
    for _ in 0..ctx.trials {
        let n = rng.gen_range(1..=5);
        let pts = line_points(&(0..n).map(|_| gen::rational(&mut rng, 3, 3)).collect::<Vec<_>>());
        let mut uniq = pts.clone();
        uniq.sort();
        uniq.dedup();
        let pts = uniq;
        let norm = NormSpec::l2();
        let enumerated: BTreeSet<Vec<usize>> =
            enumerate_step_isometric_bijections_with(&pts, &norm, Exec::Sequential)?.into_iter().collect();
        // oracle: kernel floor matrix, every permutation
        let n = pts.len();
        let mut floors = vec![vec![0u64; n]; n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    floors[a][b] = (ctx.kernel.floor_distance)(&pts[a], &pts[b], &norm)?;
                }
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut oracle = BTreeSet::new();
        loop {
            let keeps = (0..n).all(|a| (0..n).all(|b| a == b || floors[perm[a]][perm[b]] == floors[a][b]));
            let images: Vec<Vector> = perm.iter().map(|&k| pts[k].clone()).collect();
            let checker = check_step_isometry(&pts, &images, &norm)?.is_ok();
            out.trial(keeps == checker, || format!("checker and kernel disagree on {perm:?}"));
            if keeps {
                oracle.insert(perm.clone());
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        out.trial(oracle == enumerated, || format!("enumeration differs for {} points", n));
    }
    Ok(out)
}

fn check_integer_distances(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("integer-distances");
    let norm = NormSpec::l1();
    for _ in 0..ctx.trials {
        let h = gen::step_iso_map(&mut rng, true);
        let x = gen::rational(&mut rng, 12, 5);
        let k = rng.gen_range(0..=10i64);
        let y = &x + &Rational::integer(k);
        let (hx, hy) = (h.eval(&x), h.eval(&y));
        let gap = (&hy - &hx).abs();
        let floor = (ctx.kernel.floor_distance)(
            &Vector::from_pairs([(1, hx.clone())]),
            &Vector::from_pairs([(1, hy.clone())]),
            &norm,
        )?;
        out.trial(gap == Rational::integer(k) && floor == k as u64, || {
            format!("h = {h}, x = {x}, k = {k}: |h(x+k) - h(x)| = {gap}, floor = {floor}")
        });
    }
    Ok(out)
}

fn check_large_implication(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("large-implication");
    let norm = NormSpec::LInfinity;
    for _ in 0..ctx.trials {
        let d = rng.gen_range(1..=3);
        let map = gen::coordinate_map(&mut rng, d);
        let pts = gen::distinct_vectors(&mut rng, 5, d, 4, 3);
        let imgs: Vec<Vector> = pts.iter().map(|v| apply_coordinatewise(&map, v)).collect::<Result<_>>()?;
        let m0 = rng.gen_range(1..=4);
        let full = check_step_isometry(&pts, &imgs, &norm)?.is_ok();
        let large = check_step_isometry_large(&pts, &imgs, &norm, m0)?.is_ok();
        out.trial(full && large, || format!("coordinate map failed (full={full}, large m0={m0}: {large})"));
    }
    Ok(out)
}

fn check_large_search(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("large-search");
    let norm = NormSpec::l2();
    let mut large_only = 0u64;
    for _ in 0..ctx.trials {
        let pts = gen::distinct_vectors(&mut rng, 4, 2, 3, 3);
        let imgs: Vec<Vector> = pts
            .iter()
            .map(|v| v + &gen::vector(&mut rng, 2, 4, 1).scale(&Rational::new(1, 2)))
            .collect();
        let mut seen = imgs.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != imgs.len() {
            continue;
        }
        out.trials += 1;
        let full = check_step_isometry(&pts, &imgs, &norm)?.is_ok();
        let large = check_step_isometry_large(&pts, &imgs, &norm, 3)?.is_ok();
        if large && !full {
            large_only += 1;
        }
        if full && !large {
            out.fail("full step-isometry failed the large-distance check".into());
        }
    }
    out.metric("large_only_rate", large_only as f64 / out.trials.max(1) as f64);
    Ok(out)
}

fn check_c0_forced(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let grid = [Rational::new(1, 1000), Rational::new(1, 10_000)];
    for n in 1..=ctx.trials as u64 {
        let expected = Rational::one() - Rational::new(1, n as i64 + 1);
        let forced = forced_coordinate_witness(n, &grid)?;
        out.trial(forced == ForcedCoordinate::Point { value: expected.clone() }, || {
            format!("n = {n}: {forced:?}")
        });
        let image = c0_counterexample(&Vector::from_pairs([(n as usize, Rational::new(1, n as i64 + 1))]));
        let sup = image.iter().map(|(_, v)| v.abs()).max().unwrap_or_default();
        out.trial(sup == expected, || format!("n = {n}: |T(e_n/(n+1))| = {sup}"));
    }
    Ok(out)
}

fn check_c0_step_iso(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("c0-step-iso");
    let norm = NormSpec::LInfinity;
    for _ in 0..ctx.trials {
        let d = rng.gen_range(1..=6);
        let count = rng.gen_range(2..=6);
        let pts = gen::distinct_vectors(&mut rng, count, d, 8, 3);
        let imgs: Vec<Vector> = pts.iter().map(c0_counterexample).collect();
        let res = check_step_isometry(&pts, &imgs, &norm)?;
        out.trial(res.is_ok(), || format!("{res:?}"));
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let f1 = (ctx.kernel.floor_distance)(&pts[a], &pts[b], &norm)?;
                let f2 = (ctx.kernel.floor_distance)(&imgs[a], &imgs[b], &norm)?;
                out.trial(f1 == f2, || format!("floors {f1} vs {f2}"));
            }
        }
    }
    Ok(out)
}

fn check_strongly_extreme(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    for (t, delta) in [Rational::new(1, 4), Rational::new(1, 10), Rational::new(1, 2)]
        .iter()
        .enumerate()
        .take(ctx.trials as usize)
    {
        let rep = strongly_extreme_probe(t + 2, delta, 2000, keyed_u64(ctx.seed, t as u64, 3))?;
        out.trial(rep.passed(), || format!("{rep:?}"));
        out.metric(&format!("max_pair_distance_delta_{delta}"), rep.max_pair_distance.to_f64());
    }
    Ok(out)
}

fn check_l1_two_ball(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("l1-two-ball");
    for _ in 0..ctx.trials {
        let m = 2 * rng.gen_range(1..=8usize);
        // lambda in (0, 1): f constant 2·lambda
        let lambda = Rational::new(rng.gen_range(1..=98), 100);
        let mu = &lambda + &((Rational::one() - &lambda) * Rational::new(rng.gen_range(1..=99), 100));
        let f = StepFn::new(vec![&lambda * &Rational::integer(2); m])?;
        let res = l1_two_ball_witness(&f, &mu);
        out.trial(res.is_ok(), || format!("lambda = {lambda}, mu = {mu}: {res:?}"));
    }
    Ok(out)
}

fn check_l1_four_ball(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    for delta in [Rational::new(1, 2), Rational::new(1, 4)] {
        let rep = l1_four_ball_probe_with(&delta, 16, ctx.trials as u64, ctx.seed, ctx.exec)?;
        out.trials += rep.samples;
        if rep.violations > 0 {
            out.fail(format!("delta = {delta}: {} samples with norm >= delta", rep.violations));
        }
        out.metric(&format!("max_norm_delta_{delta}"), rep.max_norm.to_f64());
    }
    Ok(out)
}

fn check_decomposition(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("decomposition");
    let probes: Vec<Rational> = (0..=12).map(|k| Rational::new(k, 12)).collect();
    for _ in 0..ctx.trials {
        let d = rng.gen_range(1..=4);
        let map = gen::coordinate_map(&mut rng, d);
        let t = |v: &Vector| apply_coordinatewise(&map, v).expect("map fixes 0");
        match decompose_coordinatewise(&t, d, &probes)? {
            Decomposition::Coordinatewise(found) => {
                let same = (1..=d).all(|i| {
                    found.source_of(i) == map.source_of(i) && found.map_for(i).simplified() == map.map_for(i).simplified()
                });
                out.trial(same, || format!("recovered a different map for d = {d}"));
            }
            Decomposition::NotCoordinatewise { witness, .. } => {
                out.fail(format!("rejected a coordinate-wise map at {witness:?}"));
            }
        }
    }
    Ok(out)
}

fn check_coordinatewise_step_iso(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("coordinatewise-step-iso");
    let norm = NormSpec::LInfinity;
    for _ in 0..ctx.trials {
        let d = rng.gen_range(1..=4);
        let map = gen::coordinate_map(&mut rng, d);
        let pts = gen::distinct_vectors(&mut rng, 5, d, 6, 3);
        let imgs: Vec<Vector> = pts.iter().map(|v| apply_coordinatewise(&map, v)).collect::<Result<_>>()?;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let f1 = (ctx.kernel.floor_distance)(&pts[a], &pts[b], &norm)?;
                let f2 = (ctx.kernel.floor_distance)(&imgs[a], &imgs[b], &norm)?;
                out.trial(f1 == f2, || format!("pair ({a}, {b}): floors {f1} vs {f2}"));
            }
        }
    }
    Ok(out)
}

fn check_lattice(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("lattice");
    for t in 0..ctx.trials {
        let norm = if t % 2 == 0 { NormSpec::LInfinity } else { NormSpec::l1() };
        let d = rng.gen_range(1..=4);
        let map = gen::coordinate_map(&mut rng, d);
        let pts: Vec<Vector> = (0..4)
            .map(|_| Vector::from_pairs((1..=d).map(|i| (i, Rational::integer(rng.gen_range(-4..=4))))))
            .collect();
        let imgs: Vec<Vector> = pts.iter().map(|v| apply_coordinatewise(&map, v)).collect::<Result<_>>()?;
        out.trial(imgs.iter().all(|v| v.iter().all(|(_, x)| x.is_integer())), || {
            "image of a lattice point left the lattice".into()
        });
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let same = distance_key(&pts[a], &pts[b], &norm)? == distance_key(&imgs[a], &imgs[b], &norm)?;
                out.trial(same, || format!("{norm}: distance changed on lattice pair ({a}, {b})"));
            }
        }
    }
    Ok(out)
}

fn check_two_unit(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("two-unit");
    let tol = Rational::new(1, 1_000_000_000);
    for _ in 0..ctx.trials {
        let p = rng.gen_range(2..=4u32);
        let dim = rng.gen_range(2..=10usize);
        let raw = gen::vector(&mut rng, dim, 20, 1);
        let power: Rational = raw.iter().map(|(_, v)| v.abs().pow(p)).sum();
        // shrink into the open unit ball
        let x = if power >= Rational::one() { raw.scale(&Rational::new(1, dim as i64 + 1)) } else { raw };
        let res = two_unit_decomposition(&x, dim, p, &tol)?;
        out.trial(res.norm_residual <= 1e-9 && res.distance_residual <= 1e-9, || {
            format!("p = {p}, dim = {dim}: residuals {:e}, {:e}", res.norm_residual, res.distance_residual)
        });
    }
    Ok(out)
}

fn check_rado(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    for stages in 1..=ctx.trials.min(3) {
        let rado = build_rado(stages)?;
        out.trial(rado.len() as u64 == rado_size(stages), || format!("stage {stages}: size {}", rado.len()));
        out.trial(
            rado.points().iter().enumerate().all(|(k, p)| p.index == k + 1 && p.is_well_formed()),
            || format!("stage {stages}: malformed point"),
        );
        let mut vs: Vec<&Vector> = rado.points().iter().map(|p| &p.vector).collect();
        vs.sort();
        vs.dedup();
        out.trial(vs.len() == rado.len(), || format!("stage {stages}: repeated point"));
    }
    let q2 = gen_q(2);
    out.trial(q2.len() == 9, || format!("|Q_2| = {}", q2.len()));
    let rado = build_rado(2)?;
    let first: Vec<Vector> = rado.points().iter().take(12).map(|p| p.vector.clone()).collect();
    // the staged set is full of repeated distances; record that it is detected
    out.trial(has_repeated_distance(&first, &NormSpec::l2())?.is_some(), || {
        "no repeated distance among the first Rado points".into()
    });
    Ok(out)
}

fn check_back_and_forth(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let rado = build_rado(2)?;
    let table = PointTable::from_rado(&rado);
    let mut steps = 0usize;
    for t in 0..ctx.trials as u64 {
        let p = Rational::new(1, 2);
        let g1 = sample_graph_with(&table, &NormSpec::l2(), &p, keyed_u64(ctx.seed, t, 4), ctx.exec)?;
        let g2 = sample_graph_with(&table, &NormSpec::l2(), &p, keyed_u64(ctx.seed, t, 5), ctx.exec)?;
        let mut session = init_session(&rado, &g1, &g2)?;
        let tr = run(&mut session, 10)?;
        steps += tr.steps_achieved();
        out.trial(tr.all_verified, || format!("trial {t}: an accepted step failed verification"));
    }
    out.metric("mean_steps", steps as f64 / ctx.trials.max(1) as f64);
    Ok(out)
}

fn check_gauge_extreme(_ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let model = DavisModel::new(3)?;
    let tol = Rational::new(1, 1_000_000);
    for f in model.f_points() {
        let g = gauge_with(f, &model, &tol, &GaugeOptions::default())?;
        out.trial((g.value - 1.0).abs() <= 1e-6 && (g.lower - 1.0).abs() <= 1e-6, || {
            format!("{f:?}: bounds [{}, {}]", g.lower, g.value)
        });
    }
    Ok(out)
}

fn check_gauge_sandwich(ctx: &CheckCtx) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let mut rng = ctx.rng("gauge-sandwich");
    let model = DavisModel::new(4)?;
    let tol = Rational::new(1, 10_000);
    let opts = GaugeOptions { restarts: 6, iterations: 2000, seed: ctx.seed };
    for _ in 0..ctx.trials {
        let x = Vector::from_pairs((0..=4).map(|i| (i, gen::rational(&mut rng, 10, 2))));
        let rep = sandwich_check_with(&x, &model, &tol, &opts)?;
        out.trial(rep.passed, || format!("{x:?}: {rep:?}"));
    }
    Ok(out)
}
