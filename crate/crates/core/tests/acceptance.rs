//! Acceptance checks. Run with `cargo test --test acceptance`; prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use passrate::classifier::{
    nonzero_predictors, predict_all, read_model, risk, risk_gradient, train, Norm, RiskKind, TrainingOptions,
};
use passrate::dominant::{agreement, dominant_subdivision, grid_dominant};
use passrate::evaluation::{cohens_kappa, geometric_grid, majority_baseline, stratified_split};
use passrate::features::{standardize, FeatureMatrix};
use passrate::geometry::Point;
use passrate::labels::{
    aggregate_to_three, check_class_counts, ground_truth, merge_labels, read_class_counts, read_labels, LabelSet,
    Rating, Scheme, ThreeClass,
};
use passrate::match_data::PlayerState;
use passrate::motion::{MotionModel, TimeStepGrid, DEFAULT_A_MAX, DEFAULT_V_MAX};

type Outcome = Result<String, String>;

const HALF_L: f64 = 52.5;
const HALF_W: f64 = 34.0;
const CELL: f64 = 0.5;

fn cell_centres() -> Vec<Point> {
    let nx = (2.0 * HALF_L / CELL).round() as usize;
    let ny = (2.0 * HALF_W / CELL).round() as usize;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push(Point::new(-HALF_L + CELL * (i as f64 + 0.5), -HALF_W + CELL * (j as f64 + 0.5)));
        }
    }
    out
}

/// Keeps the part of `poly` where `(p - m) . n <= 0`.
fn clip_half_plane(poly: &[(f64, f64)], m: (f64, f64), n: (f64, f64)) -> Vec<(f64, f64)> {
    let side = |p: (f64, f64)| (p.0 - m.0) * n.0 + (p.1 - m.1) * n.1;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

fn inside_convex(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let mut sign = 0.0f64;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let c = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if c.abs() < 1e-12 {
            continue;
        }
        if sign == 0.0 {
            sign = c.signum();
        } else if c.signum() != sign {
            return false;
        }
    }
    true
}

/// Voronoi cells of `sites` clipped to the pitch, by half-plane intersection.
fn voronoi_cells(sites: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    let rect = vec![(-HALF_L, -HALF_W), (HALF_L, -HALF_W), (HALF_L, HALF_W), (-HALF_L, HALF_W)];
    sites
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut cell = rect.clone();
            for (j, &o) in sites.iter().enumerate() {
                if i != j {
                    let m = ((s.0 + o.0) / 2.0, (s.1 + o.1) / 2.0);
                    cell = clip_half_plane(&cell, m, (o.0 - s.0, o.1 - s.1));
                }
            }
            cell
        })
        .collect()
}

fn random_point(rng: &mut ChaCha8Rng, margin: f64) -> Point {
    Point::new(
        rng.gen_range(-HALF_L + margin..HALF_L - margin),
        rng.gen_range(-HALF_W + margin..HALF_W - margin),
    )
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut states = BTreeMap::new();
    let mut sites = Vec::new();
    while sites.len() < 22 {
        let p = random_point(&mut rng, 1.0);
        if sites.iter().all(|&(x, y): &(f64, f64)| Point::new(x, y).dist(p) > 2.0) {
            sites.push((p.x, p.y));
            states.insert(sites.len() as u32, PlayerState::at_rest(p));
        }
    }
    let start = Instant::now();
    let model = MotionModel::circle(DEFAULT_V_MAX, DEFAULT_A_MAX);
    let sub = dominant_subdivision(&states, &model, &TimeStepGrid::default(), 32).map_err(|e| e.to_string())?;
    let cells = voronoi_cells(&sites);
    let centres = cell_centres();
    let mut same = 0usize;
    for c in &centres {
        let oracle = cells.iter().position(|cell| inside_convex(cell, (c.x, c.y))).map(|i| i as u32 + 1);
        if oracle.is_some() && sub.owner_at(*c) == oracle {
            same += 1;
        }
    }
    let elapsed = start.elapsed();
    let share = same as f64 / centres.len() as f64;
    let msg = format!("agreement {:.4} over {} cells in {:.2?}", share, centres.len(), elapsed);
    if share >= 0.99 && elapsed < Duration::from_secs(5) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2() -> Outcome {
    let model = MotionModel::ellipse(DEFAULT_V_MAX, DEFAULT_A_MAX);
    let grid = TimeStepGrid::default();
    let mut worst = (1.0f64, 0u64);
    let mut slowest = Duration::ZERO;
    let mut failures = Vec::new();
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.gen_range(2..=22u32);
        let mut states = BTreeMap::new();
        for id in 1..=n {
            let pos = random_point(&mut rng, 0.5);
            let speed = rng.gen_range(0.0..=7.0);
            let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            states.insert(id, PlayerState::moving(pos, Point::from_polar(speed, heading)));
        }
        let start = Instant::now();
        let sub = match dominant_subdivision(&states, &model, &grid, 32) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        let oracle = grid_dominant(&states, &model, &grid, CELL).map_err(|e| e.to_string())?;
        let share = agreement(&sub, &oracle);
        if share < worst.0 {
            worst = (share, seed);
        }
        if share < 0.95 || elapsed >= Duration::from_secs(1) {
            failures.push(format!("seed {seed}: {n} players, agreement {share:.4}, {elapsed:.2?}"));
        }
    }
    let msg = format!(
        "worst agreement {:.4} (instance {}), slowest frame {:.2?}",
        worst.0, worst.1, slowest
    );
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", failures.join("; ")))
    }
}

fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> (Vec<Vec<f64>>, Vec<usize>, Vec<f64>) {
    let x = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let y = (0..m).map(|_| rng.gen_range(1..=k)).collect();
    let theta = (0..k * (n + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (x, y, theta)
}

const RISKS: [RiskKind; 3] = [RiskKind::Mle, RiskKind::Arithmetic, RiskKind::Quadratic];

fn criterion_3() -> Outcome {
    let (k, n, m, h) = (3, 5, 40, 1e-6);
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, theta) = random_problem(&mut rng, m, n, k);
        for kind in RISKS {
            let g = risk_gradient(kind, &x, &y, k, &theta).map_err(|e| e.to_string())?;
            let mut diff = 0.0;
            let mut scale = 0.0;
            for i in 0..theta.len() {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (risk(kind, &x, &y, k, &up).unwrap() - risk(kind, &x, &y, k, &down).unwrap()) / (2.0 * h);
                diff += (g[i] - fd).powi(2);
                scale += fd.powi(2);
            }
            worst = worst.max(diff.sqrt() / scale.sqrt().max(1e-12));
        }
    }
    let msg = format!("max relative error {worst:.2e} over 60 gradients");
    if worst < 1e-5 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Outcome {
    let (k, n) = (3, 5);
    let mut balanced_gap = 0.0f64;
    let mut order_ok = true;
    let mut zero_gap = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let (x, mut y, theta) = random_problem(&mut rng, 42, n, k);
        let r = |kind, y: &[usize], t: &[f64]| risk(kind, &x, y, k, t).unwrap();
        let (ra, rq) = (r(RiskKind::Arithmetic, &y, &theta), r(RiskKind::Quadratic, &y, &theta));
        order_ok &= rq >= ra - 1e-15 && ra >= 0.0;
        zero_gap = zero_gap.max((r(RiskKind::Mle, &y, &vec![0.0; theta.len()]) - (k as f64).ln()).abs());

        for (i, v) in y.iter_mut().enumerate() {
            *v = 1 + i % k;
        }
        y.shuffle(&mut rng);
        balanced_gap = balanced_gap.max((r(RiskKind::Arithmetic, &y, &theta) - r(RiskKind::Mle, &y, &theta)).abs());
    }
    let msg = format!(
        "balanced |R_A - R_L| max {balanced_gap:.1e}, R_Q >= R_A >= 0 {}, theta=0 |R_L - ln k| max {zero_gap:.1e}",
        if order_ok { "holds" } else { "violated" }
    );
    if balanced_gap < 1e-12 && order_ok && zero_gap < 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a: Vec<usize> = (0..10_000).map(|_| rng.gen_range(1..=3)).collect();
    let self_k = cohens_kappa(&a, &a).map_err(|e| e.to_string())?.kappa;
    let mut b = a.clone();
    b.shuffle(&mut rng);
    let shuffled = cohens_kappa(&a, &b).map_err(|e| e.to_string())?.kappa;

    // 20 items, both raters split 10/10, 14 agreements
    let x: Vec<usize> = (0..20).map(|i| if i < 10 { 1 } else { 2 }).collect();
    let y: Vec<usize> = (0..20).map(|i| if i < 7 || (10..13).contains(&i) { 1 } else { 2 }).collect();
    let hand = cohens_kappa(&x, &y).map_err(|e| e.to_string())?;
    let msg = format!(
        "self {self_k}, shuffled {shuffled:.4}, hand table p_o {:.3} p_e {:.3} kappa {:.12}",
        hand.p_o, hand.p_e, hand.kappa
    );
    if self_k == 1.0
        && shuffled.abs() < 0.05
        && (hand.p_o - 0.7).abs() < 1e-12
        && (hand.p_e - 0.5).abs() < 1e-12
        && (hand.kappa - 0.4).abs() < 1e-12
    {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct Pipeline {
    features: FeatureMatrix,
    y: Vec<usize>,
}

fn cli(args: &[&str]) -> Result<String, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["passrate"];
    full.extend_from_slice(args);
    let code = passrate::cli::run(full, &mut out, &mut err);
    if code == 0 {
        Ok(String::from_utf8_lossy(&out).into_owned())
    } else {
        Err(format!("`{}` exited {code}: {}", args.join(" "), String::from_utf8_lossy(&err).trim()))
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("temp paths are UTF-8")
}

fn three_class_labels(fm: &FeatureMatrix, truth: &LabelSet) -> Vec<usize> {
    fm.rows
        .iter()
        .map(|r| Scheme::Three.class_of(truth.ratings[&r.pass_index]))
        .collect()
}

fn criterion_7(root: &Path) -> (Outcome, Option<Pipeline>) {
    let start = Instant::now();
    let dir = root.join("match");
    let run = || -> Result<(String, Pipeline), String> {
        let features = root.join("features.csv");
        let model = root.join("model.txt");
        let labels = dir.join("labels.csv");
        let generated = cli(&["generate", "--seed", "42", "--noise", "0.1", "--out", path_str(&dir)])?;
        cli(&["featurize", path_str(&dir), "--out", path_str(&features)])?;
        cli(&["train", path_str(&features), path_str(&labels), "--risk", "mle", "--norm", "l2", "--out", path_str(&model)])?;
        cli(&["evaluate", path_str(&model), path_str(&features), path_str(&labels)])?;

        let fm = FeatureMatrix::read_csv(&features).map_err(|e| e.to_string())?;
        if fm.n_rows() < 600 {
            return Err(format!("only {} passes: {}", fm.n_rows(), generated.trim()));
        }
        let truth = ground_truth(&read_labels(&labels).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let y = three_class_labels(&fm, &truth);
        let (_, test) = stratified_split(&y, 0.2, 42).map_err(|e| e.to_string())?;
        let model = read_model(&model).map_err(|e| e.to_string())?;
        let rows: Vec<Vec<f64>> = test.iter().map(|&i| model.prepare(&fm.rows[i].values).unwrap()).collect();
        let truth_test: Vec<usize> = test.iter().map(|&i| y[i]).collect();
        let pred = predict_all(&model, &rows).map_err(|e| e.to_string())?;
        let acc = pred.iter().zip(&truth_test).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64;
        let base = majority_baseline(&truth_test);
        let msg = format!(
            "{} passes, lambda {:.3e}, held-out accuracy {:.3} vs majority {:.3} (+{:.1} pp)",
            fm.n_rows(),
            model.lambda,
            acc,
            base,
            100.0 * (acc - base)
        );
        let pipeline = Pipeline {
            features: fm,
            y,
        };
        if acc - base >= 0.10 {
            Ok((msg, pipeline))
        } else {
            Err(msg)
        }
    };
    match run() {
        Ok((msg, pipeline)) => {
            let elapsed = start.elapsed();
            let msg = format!("{msg}, {:.0?} total", elapsed);
            if elapsed < Duration::from_secs(600) {
                (Ok(msg), Some(pipeline))
            } else {
                (Err(msg), Some(pipeline))
            }
        }
        Err(e) => (Err(e), None),
    }
}

fn criterion_6(pipeline: Option<&Pipeline>) -> Outcome {
    let p = pipeline.ok_or("no planted-signal features (end-to-end run failed)")?;
    let (train_idx, _) = stratified_split(&p.y, 0.2, 42).map_err(|e| e.to_string())?;
    let subset = FeatureMatrix {
        rows: train_idx.iter().map(|&i| p.features.rows[i].clone()).collect(),
        catalog_version: p.features.catalog_version.clone(),
        standardization: None,
    };
    let x = standardize(&subset).map_err(|e| e.to_string())?.to_rows();
    let y: Vec<usize> = train_idx.iter().map(|&i| p.y[i]).collect();
    let mut counts = Vec::new();
    for lambda in geometric_grid(1e-3, 1.0, 10) {
        let (mut model, _) =
            train(&x, &y, 3, RiskKind::Mle, Norm::L1, lambda, &TrainingOptions::default()).map_err(|e| e.to_string())?;
        model.feature_names = passrate::features::CATALOG.iter().map(|e| e.name.to_string()).collect();
        counts.push(nonzero_predictors(&model, 0.0).len());
    }
    let msg = format!("non-zero predictors over lambda 1e-3..1: {counts:?}");
    if counts.windows(2).all(|w| w[1] <= w[0]) && counts.last() == Some(&0) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8(root: &Path) -> Outcome {
    let set = |r: Rating| {
        let mut s = LabelSet::new("x");
        s.ratings.insert(0, r);
        s
    };
    let merged = |a, b| merge_labels(&set(a), &set(b)).unwrap().ratings[&0];
    use Rating::*;
    let merges = merged(SlightlyGood, SlightlyGood) == SlightlyGood
        && merged(VeryGood, SlightlyGood) == SlightlyGood
        && merged(SlightlyGood, SlightlyBad) == SlightlyGood;
    let aggregates = aggregate_to_three(VeryGood) == ThreeClass::Good && aggregate_to_three(SlightlyBad) == ThreeClass::Ok;

    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/six_class_counts.csv");
    let report = cli(&["agree", "--class-counts", path_str(&fixture), "--expected-total", "2932"])?;
    let check = check_class_counts(&read_class_counts(&fixture).map_err(|e| e.to_string())?, Some(2932))
        .map_err(|e| e.to_string())?;
    let counts: Vec<usize> = check.counts.values().copied().collect();
    let three: Vec<usize> = check.three_class.values().copied().collect();

    let bad = root.join("tampered.csv");
    std::fs::write(&bad, std::fs::read_to_string(&fixture).unwrap().replace("1829", "1830")).unwrap();
    let tampered_rejected = cli(&["agree", "--class-counts", path_str(&bad), "--expected-total", "2932"]).is_err();

    let msg = format!(
        "merge examples {}, aggregation examples {}, six-class counts {:?} total {} (three-class {:?}), tampered table {}",
        if merges { "ok" } else { "wrong" },
        if aggregates { "ok" } else { "wrong" },
        counts,
        check.total,
        three,
        if tampered_rejected { "rejected" } else { "accepted" }
    );
    if merges
        && aggregates
        && counts == [24, 171, 1829, 604, 257, 47]
        && report.contains("1829")
        && tampered_rejected
    {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_small_pipeline(root: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let dir = root.join("match");
    let features = root.join("features.csv");
    let model = root.join("model.txt");
    let report = root.join("report");
    let labels = dir.join("labels.csv");
    cli(&["generate", "--seed", "9", "--duration-steps", "1200", "--out", path_str(&dir)])?;
    cli(&["featurize", path_str(&dir), "--out", path_str(&features)])?;
    cli(&["train", path_str(&features), path_str(&labels), "--norm", "l1", "--out", path_str(&model)])?;
    cli(&["evaluate", path_str(&model), path_str(&features), path_str(&labels), "--report-dir", path_str(&report)])?;
    let mut files = Vec::new();
    for p in [
        dir.join("trajectories.csv"),
        dir.join("events.csv"),
        dir.join("teams.csv"),
        labels,
        features,
        model,
        report.join("confusion.csv"),
        report.join("metrics.csv"),
        report.join("summary.txt"),
    ] {
        let name = p.strip_prefix(root).unwrap().display().to_string();
        files.push((name, std::fs::read(&p).map_err(|e| format!("{}: {e}", p.display()))?));
    }
    Ok(files)
}

fn criterion_9(root: &Path) -> Outcome {
    let first = run_small_pipeline(&root.join("run1"))?;
    let second = run_small_pipeline(&root.join("run2"))?;
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.1 != b.1)
        .map(|(a, _)| a.0.as_str())
        .collect();
    if differing.is_empty() {
        Ok(format!("{} files byte-identical across two runs", first.len()))
    } else {
        Err(format!("files differ: {differing:?}"))
    }
}

fn report(n: usize, name: &str, outcome: &Outcome) -> bool {
    match outcome {
        Ok(msg) => {
            println!("criterion {n} PASS  {name}: {msg}");
            true
        }
        Err(msg) => {
            println!("criterion {n} FAIL  {name}: {msg}");
            false
        }
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let mut ok = true;
    ok &= report(1, "Voronoi equivalence", &criterion_1());
    ok &= report(2, "grid-oracle agreement", &criterion_2());
    ok &= report(3, "gradient checks", &criterion_3());
    ok &= report(4, "risk identities", &criterion_4());
    ok &= report(5, "kappa properties", &criterion_5());
    let (end_to_end, pipeline) = criterion_7(root);
    ok &= report(6, "l1 sparsity path", &criterion_6(pipeline.as_ref()));
    ok &= report(7, "end-to-end recovery", &end_to_end);
    ok &= report(8, "label-rule fidelity", &criterion_8(root));
    std::fs::create_dir_all(root.join("det")).unwrap();
    ok &= report(9, "determinism", &criterion_9(&root.join("det")));
    if !ok {
        std::process::exit(1);
    }
}
