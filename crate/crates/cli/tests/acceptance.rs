//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed. Exits
//! non-zero if a criterion fails, unless it is listed in `EXPECTED_FAIL`,
//! and also if a listed criterion starts passing.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use steplab::back_forth::{init_session, verify, StepOutcome};
use steplab::balls::{l1_four_ball_probe, l1_two_ball_witness, two_unit_decomposition, StepFn};
use steplab::davis::{dual_lower_bound, gauge_with, nearest_extreme_distances, sandwich_check_with, DavisModel, GaugeOptions, NetOptions};
use steplab::dense_sets::build_rado;
use steplab::graph::{dichotomy_report, sample_graph, PointTable};
use steplab::rng::stream_rng;
use steplab::step_iso::{
    c0_counterexample, check_step_isometry, enumerate_step_isometric_bijections, forced_coordinate_witness,
    ForcedCoordinate,
};
use steplab::suite::gen;
use steplab::{NormSpec, Rational, Vector};

/// The p = 1 grid diagnostic cannot hold on a discrete grid: with spacing
/// 1/20 no grid midpoint splits a gap of 39/20 into two gaps below one.
const EXPECTED_FAIL: &[u32] = &[10];

type Criterion = (u32, &'static str, Duration, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn rng(tag: u64) -> ChaCha8Rng {
    stream_rng(0x00AC_CE97, tag)
}

// Independent floor oracle for the sup norm, straight from the coordinates.
fn sup_floor(x: &Vector, y: &Vector) -> Rational {
    (x - y).iter().map(|(_, v)| v.abs()).max().unwrap_or_default().floor()
}

fn criterion_1() -> Verdict {
    let mut exact = 0;
    for n in 1..=50i64 {
        let image = c0_counterexample(&Vector::from_pairs([(n as usize, r(1, n + 1))]));
        let sup = image.iter().map(|(_, v)| v.abs()).max().unwrap_or_default();
        if sup == Rational::one() - r(1, n + 1) {
            exact += 1;
        }
    }
    let mut rng = rng(1);
    let mut violations = 0;
    let mut oracle_disagreements = 0;
    for _ in 0..500 {
        let d = rng.gen_range(1..=6);
        let count = rng.gen_range(2..=6);
        let pts = gen::distinct_vectors(&mut rng, count, d, 8, 3);
        let imgs: Vec<Vector> = pts.iter().map(c0_counterexample).collect();
        let ok = check_step_isometry(&pts, &imgs, &NormSpec::LInfinity).unwrap().is_ok();
        let mut oracle = true;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                oracle &= sup_floor(&pts[a], &pts[b]) == sup_floor(&imgs[a], &imgs[b]);
            }
        }
        violations += usize::from(!ok);
        oracle_disagreements += usize::from(ok != oracle);
    }
    verdict(
        exact == 50 && violations == 0 && oracle_disagreements == 0,
        format!("{exact}/50 norms exact, {violations} violations in 500 subsets, {oracle_disagreements} oracle disagreements"),
    )
}

fn criterion_2() -> Verdict {
    let grid = [r(1, 1000), r(1, 10_000), r(1, 100_000)];
    let mut wrong = Vec::new();
    for n in 1..=50u64 {
        let expected = Rational::one() - r(1, n as i64 + 1);
        match forced_coordinate_witness(n, &grid) {
            Ok(ForcedCoordinate::Point { value }) if value == expected => {}
            other => wrong.push(format!("n={n}: {other:?}")),
        }
    }
    verdict(wrong.is_empty(), format!("{}/50 exact {}", 50 - wrong.len(), wrong.join("; ")))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn criterion_3() -> Verdict {
    let mut rng = rng(3);
    let mut mismatches = 0;
    let mut nontrivial = 0;
    for trial in 0..100 {
        let d = if trial % 2 == 0 { 1 } else { 2 };
        let count = rng.gen_range(2..=6);
        let pts = gen::distinct_vectors(&mut rng, count, d, 3, 2);
        let norm = NormSpec::LInfinity;
        let all = permutations(pts.len());
        let filtered: BTreeSet<Vec<usize>> = all
            .iter()
            .filter(|p| {
                let imgs: Vec<Vector> = p.iter().map(|&i| pts[i].clone()).collect();
                check_step_isometry(&pts, &imgs, &norm).unwrap().is_ok()
            })
            .cloned()
            .collect();
        let oracle: BTreeSet<Vec<usize>> = all
            .iter()
            .filter(|p| {
                (0..pts.len()).all(|a| {
                    (a + 1..pts.len()).all(|b| sup_floor(&pts[a], &pts[b]) == sup_floor(&pts[p[a]], &pts[p[b]]))
                })
            })
            .cloned()
            .collect();
        let enumerated: BTreeSet<Vec<usize>> = enumerate_step_isometric_bijections(&pts, &norm).unwrap().into_iter().collect();
        if filtered != enumerated || filtered != oracle {
            mismatches += 1;
        }
        nontrivial += usize::from(filtered.len() > 1);
    }
    verdict(mismatches == 0, format!("{mismatches} mismatches in 100 sets, {nontrivial} with non-identity bijections"))
}

fn criterion_4() -> Verdict {
    let mut rng = rng(4);
    let mut failures = 0;
    for _ in 0..1000 {
        let h = gen::step_iso_map(&mut rng, true);
        let x = gen::rational(&mut rng, 30, 20);
        let k = rng.gen_range(0..=10);
        let y = &x + &Rational::integer(k);
        if (h.eval(&y) - h.eval(&x)).abs() != Rational::integer(k) {
            failures += 1;
        }
    }
    verdict(failures == 0, format!("{failures} failures in 1000 trials"))
}

fn l2_key(x: &Vector, y: &Vector) -> Rational {
    (x - y).iter().map(|(_, v)| v * v).sum()
}

fn criterion_5() -> Verdict {
    let rado = build_rado(2).unwrap();
    let table = PointTable::from_rado(&rado);
    let p = r(1, 2);
    let g1 = sample_graph(&table, &NormSpec::l2(), &p, 1).unwrap();
    let g2 = sample_graph(&table, &NormSpec::l2(), &p, 2).unwrap();
    let mut session = init_session(&rado, &g1, &g2).unwrap();
    let mut accepted = 0;
    let mut verified = 0;
    let mut stall = None;
    for _ in 0..10 {
        match session.step() {
            StepOutcome::Extended { .. } => {
                accepted += 1;
                let report = verify(&session);
                let pairs: Vec<(usize, usize)> = session.sigma().iter().map(|(&i, &j)| (i, j)).collect();
                let mut distances = true;
                for (a, &(i, j)) in pairs.iter().enumerate() {
                    for &(i2, j2) in &pairs[a + 1..] {
                        let (x, x2) = (rado.vector(i).unwrap(), rado.vector(i2).unwrap());
                        let (y, y2) = (rado.vector(j).unwrap(), rado.vector(j2).unwrap());
                        distances &= l2_key(x, x2) == l2_key(y, y2);
                    }
                }
                verified += usize::from(report.all_pass() && distances);
            }
            StepOutcome::Stalled(reason) => {
                stall = Some(reason.label());
                break;
            }
        }
    }
    let enough = accepted >= 3 || stall == Some("no_candidate_in_truncation");
    verdict(
        verified == accepted && enough,
        format!("{verified}/{accepted} accepted steps verified, stall: {}", stall.unwrap_or("none")),
    )
}

fn l1(v: &[Rational]) -> Rational {
    v.iter().map(Rational::abs).sum::<Rational>() / Rational::integer(v.len() as i64)
}

fn diff(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn criterion_6() -> Verdict {
    let mut rng = rng(6);
    let mut two_ball_ok = 0;
    for _ in 0..50 {
        let cells = 2 * rng.gen_range(1..=8usize);
        let lambda = r(rng.gen_range(1..=98), 100);
        let mu = &lambda + &((Rational::one() - &lambda) * r(rng.gen_range(1..=99), 100));
        let f = StepFn::new(vec![&lambda * &Rational::integer(2); cells]).unwrap();
        let Ok(w) = l1_two_ball_witness(&f, &mu) else { continue };
        let (g1, g2, fv) = (w.g1.values(), w.g2.values(), f.values());
        let ok = l1(g1) == mu
            && l1(g2) == mu
            && l1(&diff(g1, fv)) == mu
            && l1(&diff(g2, fv)) == mu
            && l1(&diff(g1, g2)) == &mu * &Rational::integer(2);
        two_ball_ok += usize::from(ok);
    }
    let mut detail = format!("two-ball {two_ball_ok}/50");
    let mut four_ball_ok = true;
    for delta in [r(1, 2), r(1, 4)] {
        let rep = l1_four_ball_probe(&delta, 64, 100_000, 9).unwrap();
        four_ball_ok &= rep.violations == 0 && rep.max_norm < delta;
        detail += &format!(
            "; delta {delta}: max |f| {:.4} over {} hits, {} exceptions",
            rep.max_norm.to_f64(),
            rep.in_intersection,
            rep.violations
        );
    }
    verdict(two_ball_ok == 50 && four_ball_ok, detail)
}

fn lp_f64(v: &[f64], p: u32) -> f64 {
    v.iter().map(|x| x.abs().powi(p as i32)).sum::<f64>().powf(1.0 / p as f64)
}

fn criterion_7() -> Verdict {
    let mut rng = rng(7);
    let tol = r(1, 1_000_000_000);
    let mut worst = 0f64;
    for _ in 0..100 {
        let p = rng.gen_range(2..=4u32);
        let dim = rng.gen_range(2..=10usize);
        let raw = gen::vector(&mut rng, dim, 20, 1);
        let power: Rational = raw.iter().map(|(_, v)| v.abs().pow(p)).sum();
        let x = if power >= Rational::one() { raw.scale(&r(1, dim as i64 + 1)) } else { raw };
        let res = two_unit_decomposition(&x, dim, p, &tol).unwrap();
        let y = res.y.to_f64_dense(dim + 1);
        let xf = x.to_f64_dense(dim + 1);
        let xy: Vec<f64> = xf.iter().zip(&y).map(|(a, b)| a - b).collect();
        worst = worst.max((lp_f64(&y, p) - 1.0).abs()).max((lp_f64(&xy, p) - 1.0).abs());
    }
    let half = Vector::from_pairs([(1, r(1, 2))]);
    let y = two_unit_decomposition(&half, 2, 2, &tol).unwrap().y.to_f64_dense(3);
    let example = (y[1] - 0.25).abs().max((y[2] - 15f64.sqrt() / 4.0).abs());
    verdict(
        worst <= 1e-9 && example <= 1e-9,
        format!("worst residual {worst:.2e}, (1/2, 0) example off by {example:.2e}"),
    )
}

fn criterion_8() -> Verdict {
    let tol = r(1, 10_000);
    let opts = GaugeOptions::default();
    let model = DavisModel::new(10).unwrap();
    let mut f_worst = 0f64;
    for f in model.f_points() {
        let g = gauge_with(f, &model, &tol, &opts).unwrap();
        f_worst = f_worst.max((g.value - 1.0).abs()).max((g.lower - 1.0).abs());
    }
    let small = DavisModel::new(3).unwrap();
    let mut grid_worst = 0f64;
    for f in small.f_points() {
        let lb = dual_lower_bound(f, &small, 20_000).unwrap();
        grid_worst = grid_worst.max(1.0 - lb);
    }

    let mut rng = rng(8);
    let mut sandwich_fail = 0;
    for _ in 0..100 {
        let x = gen::vector(&mut rng, 11, 10, 3).relabel(|i| i - 1);
        let rep = sandwich_check_with(&x, &model, &tol, &opts).unwrap();
        sandwich_fail += usize::from(!rep.passed);
    }

    let rows = nearest_extreme_distances(&model, &tol, &NetOptions::default(), &opts, steplab::Exec::default()).unwrap();
    let isolated: Vec<&str> = rows.iter().filter(|r| r.isolated).map(|r| r.label.as_str()).collect();
    let mut partner_worst = 0f64;
    for k in 2..=10 {
        for label in [format!("e0+e{k}/{}", 2 * k), format!("e0-e{k}/{}", 2 * k + 1)] {
            let row = rows.iter().find(|r| r.label == label).expect("row present");
            let expected = 1.0 / (2 * k) as f64 + 1.0 / (2 * k + 1) as f64;
            partner_worst = partner_worst.max((row.partner_gamma - expected).abs());
        }
    }
    let t = 1e-4;
    verdict(
        f_worst <= t && grid_worst <= t && sandwich_fail == 0 && isolated == ["e0+e1/2", "-(e0+e1/2)"] && partner_worst <= t,
        format!(
            "gamma(F) off by {f_worst:.1e}, grid lower bound off by {grid_worst:.1e}, {sandwich_fail} sandwich failures, isolated {isolated:?}, partner error {partner_worst:.1e}"
        ),
    )
}

/// One small config per subcommand.
const CLI_RUNS: &[(&str, &str)] = &[
    ("rado-build", "stages = 2\n"),
    ("sample-graph", "stages = 2\np = \"1/2\"\nseed = 3\nformat = \"graphml\"\n"),
    ("back-and-forth", "stages = 2\np = \"1/2\"\nseeds = \"1,2\"\nmax-steps = 10\nsweep-pairs = 3\n"),
    ("dichotomy", "grid-step = \"1/10\"\np = \"1/2\"\nseed = 4\n"),
    ("check-step-iso", "points = \"1/2,1/3;1,2;0,3/2\"\nmap = \"c0\"\n"),
    ("enumerate-step-iso", "points = \"0;1/3;1;4/3\"\nnorm = \"l1\"\n"),
    ("c0-counterexample", "n-max = 20\nsubsets = 50\nseed = 5\n"),
    ("forced-coordinate", "n-max = 20\n"),
    ("l1-balls", "m = 16\nsamples = 2000\npairs = 10\n"),
    ("two-unit", "count = 20\nseed = 6\n"),
    ("strongly-extreme", "dim = 3\nsamples = 2000\nseed = 7\n"),
    ("davis-gauge", "x = \"1,1/3,-1/4\"\nn = 4\nrestarts = 4\niterations = 2000\n"),
    ("davis-table", "n = 4\nrestarts = 4\niterations = 2000\n"),
    ("no-repeat-gen", "dim = 2\ncount = 8\nseed = 8\n"),
    ("suite", "seed = 1\nfilter = [\"c0-non-extension\", \"rado-construction\"]\n"),
];

fn run_cli(args: &[&str], out: &Path) -> (i32, serde_json::Value, Vec<(String, Vec<u8>)>) {
    let status = Command::new(env!("CARGO_BIN_EXE_steplab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("STEPLAB_OUT")
        .output()
        .expect("binary runs");
    let code = status.status.code().unwrap_or(-1);
    let text = std::fs::read_to_string(out.join("report.json")).unwrap_or_default();
    let mut report: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
    if let Some(obj) = report.as_object_mut() {
        obj.remove("wall_time_ms");
    }
    let mut files = Vec::new();
    if let Ok(entries) = std::fs::read_dir(out) {
        for e in entries.flatten() {
            let name = e.file_name().to_string_lossy().into_owned();
            if name != "report.json" && e.path().is_file() {
                files.push((name, std::fs::read(e.path()).unwrap()));
            }
        }
    }
    files.sort();
    (code, report, files)
}

fn criterion_9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut sweep_configs = Vec::new();
    for (k, (cmd, toml)) in CLI_RUNS.iter().enumerate() {
        let cfg = dir.path().join(format!("{cmd}.toml"));
        std::fs::write(&cfg, toml).unwrap();
        let cfg_s = cfg.to_str().unwrap();
        let a = run_cli(&[cmd, "--config", cfg_s], &dir.path().join(format!("{cmd}-a")));
        let b = run_cli(&[cmd, "--config", cfg_s], &dir.path().join(format!("{cmd}-b")));
        if a != b || a.1.is_null() {
            differing.push(cmd.to_string());
        }
        if k < 3 {
            let with_cmd = dir.path().join(format!("sweep-{cmd}.toml"));
            std::fs::write(&with_cmd, format!("command = \"{cmd}\"\n{toml}")).unwrap();
            sweep_configs.push(with_cmd.to_str().unwrap().to_string());
        }
    }
    let mut sweep_args = vec!["sweep"];
    sweep_args.extend(sweep_configs.iter().map(String::as_str));
    let a = run_cli(&sweep_args, &dir.path().join("sweep-a"));
    let b = run_cli(&sweep_args, &dir.path().join("sweep-b"));
    let child = |d: &str, c: &str| run_cli(&[], &dir.path().join(d).join(c)).1;
    let children_same = ["000-rado-build", "001-sample-graph", "002-back-and-forth"]
        .iter()
        .all(|c| !child("sweep-a", c).is_null() && child("sweep-a", c) == child("sweep-b", c));
    if a != b || a.1.is_null() || !children_same {
        differing.push("sweep".into());
    }
    verdict(
        differing.is_empty(),
        format!("{} commands run twice, differing: {differing:?}", CLI_RUNS.len() + 1),
    )
}

fn k2_rate(step: Rational, p: &Rational, seed: u64) -> f64 {
    let table = PointTable::grid_1d(&step, &Rational::integer(3)).unwrap();
    let g = sample_graph(&table, &NormSpec::l2(), p, seed).unwrap();
    dichotomy_report(&g, &table, 2).unwrap()[0].violation_rate()
}

fn criterion_10() -> Verdict {
    let table = PointTable::grid_1d(&r(1, 20), &Rational::integer(3)).unwrap();
    let g = sample_graph(&table, &NormSpec::l2(), &Rational::one(), 0).unwrap();
    let rows = dichotomy_report(&g, &table, 3).unwrap();
    let hard: Vec<String> = rows
        .iter()
        .map(|row| format!("k={}: {} violations, {} path-bound breaches", row.k, row.violations(), row.graph_close_norm_far))
        .collect();
    let p_one_clean = rows.iter().all(|row| row.violations() == 0);
    let path_bound = rows.iter().all(|row| row.graph_close_norm_far == 0);

    let half = r(1, 2);
    let mut monotone = 0;
    let mut rates = Vec::new();
    for seed in 0..5 {
        let rs: Vec<f64> = [r(1, 5), r(1, 10), r(1, 20)].into_iter().map(|s| k2_rate(s, &half, seed)).collect();
        monotone += usize::from(rs[0] > rs[1] && rs[1] > rs[2]);
        rates.push(format!("[{:.3} {:.3} {:.3}]", rs[0], rs[1], rs[2]));
    }
    verdict(
        p_one_clean && path_bound,
        format!(
            "p=1: {}; p=1/2 k=2 rates {} decreasing in {monotone}/5 seeds (reported only)",
            hard.join(", "),
            rates.join(" ")
        ),
    )
}

fn main() {
    // `cargo test -- --list` and similar probes expect no work
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 10] = [
        (1, "c0 counterexample exactness", Duration::from_secs(10), criterion_1),
        (2, "non-extension witness", Duration::from_secs(5), criterion_2),
        (3, "step-isometry oracle equivalence", Duration::from_secs(30), criterion_3),
        (4, "integer-distance preservation", Duration::from_secs(60), criterion_4),
        (5, "back-and-forth soundness", Duration::from_secs(20), criterion_5),
        (6, "L1 ball lemmas", Duration::from_secs(60), criterion_6),
        (7, "two-unit decomposition", Duration::from_secs(10), criterion_7),
        (8, "renorming gauge", Duration::from_secs(120), criterion_8),
        (9, "CLI determinism", Duration::from_secs(30), criterion_9),
        (10, "dichotomy diagnostic", Duration::from_secs(60), criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= budget;
        let status = if pass { "PASS" } else { "FAIL" };
        let known = EXPECTED_FAIL.contains(&id);
        let note = match (pass, known) {
            (false, true) => " [expected failure]",
            (true, true) => " [unexpected pass]",
            _ => "",
        };
        println!(
            "criterion {id:>2} {status} {name} ({:.1}s of {}s){note}: {}",
            elapsed.as_secs_f64(),
            budget.as_secs(),
            v.detail
        );
        if pass == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected outcomes for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
