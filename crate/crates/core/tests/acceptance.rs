//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the pass/fail lines are
//! always printed by `cargo test`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use secreq::balance::{smote, LabeledMatrix, Origin};
use secreq::corpus::{synthesize_corpus, Corpus, Label, SynthConfig};
use secreq::evaluate::{
    check_isolation, cohen_kappa, cross_project_folds, f_beta, fit_on_rows, run_cross_project, tokenize_corpus,
    PipelineConfig, ReportFormat,
};
use secreq::forest::{fit_forest, HyperParams, MaxFeatures, Node};
use secreq::seed;
use secreq::textproc::{stem, TokenStream};
use secreq::tune::{random_search, SearchOptions, SearchSpace};
use secreq::vectorize::{fit_features, transform, SparseVector, TfidfMode};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    ensure(start.elapsed() <= budget, || {
        format!("took {:.1?}, budget {budget:?}", start.elapsed())
    })
}

fn labels_of(corpus: &Corpus) -> Vec<Label> {
    corpus.requirements().iter().map(|r| r.label.unwrap()).collect()
}

// 1 ---------------------------------------------------------------------

fn fbeta_reproduction() -> Outcome {
    let (p, r) = (87.6, 80.2);
    let got = [f_beta(p, r, 1.0), f_beta(p, r, 0.5), f_beta(p, r, 2.0)];
    for (g, want) in got.iter().zip([83.7, 86.0, 81.6]) {
        ensure((g - want).abs() <= 0.05, || format!("F = {g}, expected {want} ± 0.05"))?;
    }
    for beta in [1.0, 0.5, 2.0] {
        let f = f_beta(90.1, 90.1, beta);
        ensure(f == 90.1, || format!("P = R = 90.1 gave F{beta} = {f}"))?;
    }
    Ok(format!("F1 {:.2}, F0.5 {:.2}, F2 {:.2}; P=R=90.1 exact", got[0], got[1], got[2]))
}

// 2 ---------------------------------------------------------------------

fn tfidf_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n_terms = rng.gen_range(1..=30u32) as usize;
        let n_docs = rng.gen_range(1..=10u32) as usize;
        let docs: Vec<Vec<String>> = (0..n_docs)
            .map(|_| {
                let len = rng.gen_range(1..=12u32);
                (0..len).map(|_| format!("t{}", rng.gen_range(0..n_terms as u32))).collect()
            })
            .collect();
        let streams: Vec<TokenStream> = docs.iter().map(|d| TokenStream::new(d.clone())).collect();
        let space = fit_features(&streams, TfidfMode::Plain).map_err(|e| e.to_string())?;

        // Dense brute force, keyed by term.
        let n = n_docs as f64;
        let mut df: BTreeMap<&str, f64> = BTreeMap::new();
        for d in &docs {
            for t in d.iter().map(String::as_str).collect::<BTreeSet<_>>() {
                *df.entry(t).or_default() += 1.0;
            }
        }
        ensure(df.len() == space.len(), || "vocabulary size differs".into())?;
        let mut probe = docs.clone();
        probe.push(vec!["t0".into(), "unseen".into(), "t1".into(), "t0".into()]);
        for d in &probe {
            let v = transform(&TokenStream::new(d.clone()), &space, false);
            let dense = v.to_dense(space.len());
            for (term, &dft) in &df {
                let tf = d.iter().filter(|t| t == term).count() as f64 / d.len() as f64;
                let want = tf * (n / dft).ln();
                let i = space.index_of(term).ok_or_else(|| format!("{term} missing"))?;
                worst = worst.max((dense[i] - want).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("20 corpora, max deviation {worst:.1e}"))
}

// 3 ---------------------------------------------------------------------

fn porter_stemmer() -> Outcome {
    let start = Instant::now();
    let voc = include_str!("data/porter_voc.txt");
    let out = include_str!("data/porter_output.txt");
    let mut n = 0;
    for (w, want) in voc.lines().zip(out.lines()) {
        let got = stem(w);
        ensure(got == want, || format!("{w} -> {got}, expected {want}"))?;
        n += 1;
    }
    ensure(n == voc.lines().count() && n == out.lines().count(), || "file length mismatch".into())?;
    for (w, want) in [("security", "secur"), ("authorization", "author")] {
        ensure(stem(w) == want, || format!("{w} -> {}", stem(w)))?;
    }
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("{n} vocabulary words; security->secur, authorization->author"))
}

// 4 ---------------------------------------------------------------------

fn segment_residual(s: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 == 0.0 {
        0.0
    } else {
        let dot: f64 = s.iter().zip(a).zip(&ab).map(|((si, ai), d)| (si - ai) * d).sum();
        (dot / len2).clamp(0.0, 1.0)
    };
    s.iter()
        .zip(a)
        .zip(&ab)
        .map(|((si, ai), d)| (si - ai - t * d).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn smote_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(4);
    let mut synthetics = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..50u64 {
        let dims = rng.gen_range(1..=6u32) as usize;
        let n_min = rng.gen_range(1..=8u32) as usize;
        let n_maj = n_min + rng.gen_range(1..=25u32) as usize;
        let minority = if rng.gen_bool(0.5) { Label::Positive } else { Label::Negative };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n_min + n_maj {
            xs.push(
                (0..dims)
                    .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) })
                    .collect::<Vec<f64>>(),
            );
            ys.push(if i < n_min {
                minority
            } else if minority == Label::Positive {
                Label::Negative
            } else {
                Label::Positive
            });
        }
        let m = LabeledMatrix::from_dense(&xs, &ys).map_err(|e| e.to_string())?;
        let k = rng.gen_range(1..=6u32) as usize;
        let out = smote(&m, k, trial).map_err(|e| e.to_string())?;
        ensure(out.count(Label::Positive) == out.count(Label::Negative), || {
            format!("trial {trial}: not balanced")
        })?;
        ensure(out.len() == 2 * n_maj, || format!("trial {trial}: wrong size"))?;
        let minority_rows: Vec<Vec<f64>> = xs[..n_min].to_vec();
        for row in out.rows() {
            match row.origin {
                Origin::Real { row: r } => {
                    ensure(row.vector.to_dense(dims) == xs[r], || format!("trial {trial}: real row changed"))?;
                }
                Origin::Synthetic => {
                    synthetics += 1;
                    ensure(row.label == minority, || format!("trial {trial}: synthetic majority row"))?;
                    let s = row.vector.to_dense(dims);
                    let mut best = f64::INFINITY;
                    for a in &minority_rows {
                        for b in &minority_rows {
                            best = best.min(segment_residual(&s, a, b));
                        }
                    }
                    worst = worst.max(best);
                }
            }
        }
    }
    ensure(worst < 1e-9, || format!("synthetic row off every segment by {worst:e}"))?;

    // Isolation: folds pass the origin check, and a leaked row is caught.
    let corpus = synthesize_corpus(&SynthConfig::new(4, 3, 30, 0.2)).map_err(|e| e.to_string())?;
    let config = PipelineConfig {
        params: HyperParams {
            n_estimators: 5,
            ..HyperParams::default()
        },
        ..PipelineConfig::default()
    };
    let tokens = tokenize_corpus(&corpus, &config);
    let labels = labels_of(&corpus);
    for fold in cross_project_folds(&corpus).map_err(|e| e.to_string())? {
        let (_, balanced) = fit_on_rows(&tokens, &labels, &fold.train, &config, 1).map_err(|e| e.to_string())?;
        check_isolation(&balanced, &fold.train, &fold.test, &fold.id).map_err(|e| e.to_string())?;
        let mut leaky = fold.train.clone();
        leaky.push(fold.test[0]);
        let (_, leaked) = fit_on_rows(&tokens, &labels, &leaky, &config, 1).map_err(|e| e.to_string())?;
        ensure(
            check_isolation(&leaked, &fold.train, &fold.test, &fold.id).is_err(),
            || "leaked test row not detected".into(),
        )?;
    }
    run_cross_project(&corpus, &config, None).map_err(|e| e.to_string())?;
    within_budget(start, Duration::from_secs(5))?;
    Ok(format!(
        "50 matrices balanced, {synthetics} synthetic rows, max segment residual {worst:.1e}; fold isolation holds"
    ))
}

// 5 ---------------------------------------------------------------------

fn gini(neg: f64, pos: f64) -> f64 {
    let n = neg + pos;
    if n == 0.0 {
        return 0.0;
    }
    1.0 - (neg / n).powi(2) - (pos / n).powi(2)
}

/// Exhaustive best stump: (feature, threshold, impurity decrease).
fn stump_oracle(xs: &[Vec<f64>], ys: &[bool]) -> Option<(usize, f64, f64)> {
    let n = ys.len() as f64;
    let pos = ys.iter().filter(|&&y| y).count() as f64;
    let parent = gini(n - pos, pos);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..xs[0].len() {
        let mut values: Vec<f64> = xs.iter().map(|x| x[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let (mut ln, mut lp, mut rn, mut rp) = (0.0, 0.0, 0.0, 0.0);
            for (x, &y) in xs.iter().zip(ys) {
                match (x[f] <= t, y) {
                    (true, true) => lp += 1.0,
                    (true, false) => ln += 1.0,
                    (false, true) => rp += 1.0,
                    (false, false) => rn += 1.0,
                }
            }
            let child = ((ln + lp) * gini(ln, lp) + (rn + rp) * gini(rn, rp)) / n;
            let gain = parent - child;
            // Scan order is (feature, threshold) ascending, so only a clearly
            // larger gain replaces.
            if best.is_none_or(|(_, _, g)| gain > g + 1e-12) {
                best = Some((f, t, gain));
            }
        }
    }
    best
}

fn forest_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(5);
    let err = |e: secreq::Error| e.to_string();

    // (a) one unlimited tree memorises consistent data.
    let xs: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..6).map(|_| if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect())
        .collect();
    let ys: Vec<Label> = (0..300).map(|_| Label::from_bool(rng.gen_bool(0.3))).collect();
    let m = LabeledMatrix::from_dense(&xs, &ys).map_err(err)?;
    let single = HyperParams {
        n_estimators: 1,
        max_depth: None,
        bootstrap: false,
        ..HyperParams::default()
    };
    let f = fit_forest(&m, &single).map_err(err)?;
    let correct = m.rows().iter().filter(|r| f.predict(&r.vector).label == r.label).count();
    ensure(correct == m.len(), || format!("(a) training accuracy {correct}/{}", m.len()))?;

    // (b) stumps against the exhaustive oracle.
    let stump = HyperParams {
        n_estimators: 1,
        max_features: MaxFeatures::All,
        max_depth: Some(1),
        bootstrap: false,
        ..HyperParams::default()
    };
    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(4..=8u32) as usize;
        let d = rng.gen_range(1..=3u32) as usize;
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| if rng.gen_bool(0.3) { 0.0 } else { (rng.gen_range(1..=20u32) as f64) / 20.0 })
                    .collect()
            })
            .collect();
        let ys: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if ys.iter().all(|&y| y) || ys.iter().all(|&y| !y) {
            continue;
        }
        checked += 1;
        let labels: Vec<Label> = ys.iter().map(|&y| Label::from_bool(y)).collect();
        let m = LabeledMatrix::from_dense(&xs, &labels).map_err(err)?;
        let forest = fit_forest(&m, &stump).map_err(err)?;
        let tree = &forest.trees()[0];
        match (stump_oracle(&xs, &ys), &tree.nodes()[0]) {
            (None, Node::Leaf { .. }) => {}
            (Some((of, ot, _)), Node::Split { feature, threshold, .. }) => {
                ensure(of == *feature && (ot - threshold).abs() < 1e-12, || {
                    format!("(b) stump split ({feature}, {threshold}), oracle ({of}, {ot}) on {xs:?} {ys:?}")
                })?;
            }
            (o, node) => return Err(format!("(b) oracle {o:?} vs root {node:?}")),
        }
    }

    // (c) importances sum to one; a constant feature gets nothing.
    let xs: Vec<Vec<f64>> = (0..200)
        .map(|_| vec![rng.gen_range(0.0..1.0), 0.5, rng.gen_range(0.0..1.0), 0.0])
        .collect();
    let ys: Vec<Label> = xs.iter().map(|x| Label::from_bool(x[0] + 0.3 * x[2] > 0.7)).collect();
    let m = LabeledMatrix::from_dense(&xs, &ys).map_err(err)?;
    let f = fit_forest(&m, &HyperParams::default().with_seed(5)).map_err(err)?;
    let imp = f.importances();
    let sum: f64 = imp.iter().sum();
    ensure((sum - 1.0).abs() <= 1e-9, || format!("(c) importances sum to {sum}"))?;
    ensure(imp[1] == 0.0 && imp[3] == 0.0, || format!("(c) constant features scored {imp:?}"))?;

    // (d) two blobs, 80/20 hold-out.
    let blob = |rng: &mut rand_chacha::ChaCha8Rng, c: f64| -> Vec<f64> {
        (0..2)
            .map(|_| (c + (0..4).map(|_| rng.gen_range(-0.1..0.1)).sum::<f64>()).max(0.001))
            .collect()
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..500 {
        let positive = i % 2 == 0;
        xs.push(blob(&mut rng, if positive { 0.7 } else { 0.3 }));
        ys.push(Label::from_bool(positive));
    }
    let train = LabeledMatrix::from_dense(&xs[..400], &ys[..400]).map_err(err)?;
    let f = fit_forest(&train, &HyperParams::default().with_seed(6)).map_err(err)?;
    let hits = xs[400..]
        .iter()
        .zip(&ys[400..])
        .filter(|(x, y)| f.predict(&SparseVector::from_dense(x).unwrap()).label == **y)
        .count();
    let acc = hits as f64 / 100.0;
    ensure(acc >= 0.95, || format!("(d) two-blob accuracy {acc}"))?;
    within_budget(start, Duration::from_secs(30))?;
    Ok(format!(
        "(a) 300/300 train rows; (b) 100 stumps match oracle; (c) sum {sum:.12}; (d) hold-out accuracy {acc:.2}"
    ))
}

// 6 ---------------------------------------------------------------------

fn protocol_integrity() -> Outcome {
    let err = |e: secreq::Error| e.to_string();
    let corpus = synthesize_corpus(&SynthConfig::new(6, 10, 40, 0.2)).map_err(err)?;
    let reqs = corpus.requirements();
    let folds = cross_project_folds(&corpus).map_err(err)?;
    ensure(folds.len() == 10, || format!("{} folds", folds.len()))?;
    for f in &folds {
        let train: BTreeSet<&str> = f.train.iter().map(|&i| reqs[i].spec_id.as_str()).collect();
        let test: BTreeSet<&str> = f.test.iter().map(|&i| reqs[i].spec_id.as_str()).collect();
        ensure(train.is_disjoint(&test), || format!("fold {}: specs overlap", f.id))?;
        ensure(test.len() == 1 && test.contains(f.id.as_str()), || format!("fold {}: test specs {test:?}", f.id))?;
        ensure(f.train.len() + f.test.len() == reqs.len(), || format!("fold {}: rows lost", f.id))?;
    }
    let config = PipelineConfig {
        params: HyperParams {
            n_estimators: 20,
            ..HyperParams::default()
        },
        seed: 6,
        ..PipelineConfig::default()
    };
    let report = run_cross_project(&corpus, &config, None).map_err(err)?;
    ensure(report.folds.len() == 10, || "report fold count".into())?;

    // Random search on vectorised training rows.
    let small = synthesize_corpus(&SynthConfig::new(6, 3, 30, 0.2)).map_err(err)?;
    let tokens = tokenize_corpus(&small, &config);
    let space = fit_features(&tokens, TfidfMode::Plain).map_err(err)?;
    let mut m = LabeledMatrix::new(space.len());
    for (i, (t, l)) in tokens.iter().zip(labels_of(&small)).enumerate() {
        m.push_real(transform(t, &space, false), l, i).map_err(err)?;
    }
    let opts = SearchOptions {
        iterations: 100,
        inner_k: 3,
        seed: 6,
        ..SearchOptions::default()
    };
    let result = random_search(&m, &SearchSpace::default(), &opts).map_err(err)?;
    ensure(result.fits == 300, || format!("{} fits", result.fits))?;
    ensure(result.trials.len() == 100, || format!("{} trials", result.trials.len()))?;
    Ok(format!(
        "10 folds with disjoint specs; random search {} trials, {} fits",
        result.trials.len(),
        result.fits
    ))
}

// 7 ---------------------------------------------------------------------

fn desk_scale_experiment() -> Outcome {
    let start = Instant::now();
    let err = |e: secreq::Error| e.to_string();
    let corpus = synthesize_corpus(&SynthConfig::new(42, 10, 300, 0.2)).map_err(err)?;
    ensure(corpus.len() == 3000 && corpus.positive_count() == 600, || "corpus shape".into())?;
    let config = PipelineConfig {
        params: HyperParams::tuned(),
        seed: 42,
        ..PipelineConfig::default()
    };
    let report = run_cross_project(&corpus, &config, None).map_err(err)?;
    let table = report.render(ReportFormat::Table).map_err(err)?;
    println!("{table}");
    let a = report.averages;
    ensure(a.f1 >= 80.0 && a.precision >= 85.0, || {
        format!("average F1 {:.1}, precision {:.1}", a.f1, a.precision)
    })?;
    within_budget(start, Duration::from_secs(600))?;
    Ok(format!(
        "average F1 {:.1} (>= 80), precision {:.1} (>= 85), recall {:.1} in {:.0?}",
        a.f1,
        a.precision,
        a.recall,
        start.elapsed()
    ))
}

// 8 ---------------------------------------------------------------------

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_secreq"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut compared = 0;
    fs::write(
        d.join("space.json"),
        r#"{"n_estimators":[5,9],"max_features":["sqrt","log2"],"max_depth":[null,6],"bootstrap":[true]}"#,
    )
    .map_err(|e| e.to_string())?;
    for (run, jobs) in [("a", "1"), ("b", "3")] {
        let out = |name: &str| format!("{run}/{name}");
        let g = |name: &str| -> Vec<String> {
            ["--seed", "8", "--jobs", jobs, "--out"]
                .iter()
                .map(|s| s.to_string())
                .chain([out(name)])
                .collect()
        };
        let call = |name: &str, rest: &[&str]| -> Result<(), String> {
            let mut args = g(name);
            args.extend(rest.iter().map(|s| s.to_string()));
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            run_cli(d, &refs)
        };
        call("synth", &["synth", "--specs", "4", "--reqs-per-spec", "40"])?;
        let corpus = out("synth/corpus.csv");
        call("train", &["train", &corpus, "--trees", "30"])?;
        call("predict", &["predict", &corpus, "--model", &out("train/model.json")])?;
        call("loso", &["crossval", &corpus, "--trees", "15"])?;
        call("holdout", &["--format", "csv", "crossval", &corpus, "--trees", "15", "--split", "holdout"])?;
        call("tune", &["tune", &corpus, "--iterations", "3", "--space", "space.json"])?;
        call("audit", &["audit", &corpus])?;
    }
    for sub in ["synth", "train", "predict", "loso", "holdout", "tune", "audit"] {
        let a = d.join("a").join(sub);
        for entry in fs::read_dir(&a).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            let other = d.join("b").join(sub).join(path.file_name().unwrap());
            let (x, y) = (fs::read(&path), fs::read(&other));
            ensure(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || {
                format!("{} differs between runs", path.display())
            })?;
            compared += 1;
        }
    }
    Ok(format!("{compared} output files byte-identical across two runs with --jobs 1 and 3"))
}

// 9 ---------------------------------------------------------------------

fn kappa() -> Outcome {
    let start = Instant::now();
    let err = |e: secreq::Error| e.to_string();
    let a = [true, false, true, false, true, true];
    ensure(cohen_kappa(&a, &a).map_err(err)?.value == 1.0, || "identical lists".into())?;
    let k0 = cohen_kappa(&[true, false, true, false], &[true, true, false, false]).map_err(err)?;
    ensure(k0.value == 0.0, || format!("hand example gave {}", k0.value))?;
    let mut rng = seed::rng(9);
    let x: Vec<bool> = (0..10_000).map(|_| rng.gen_bool(0.5)).collect();
    let y: Vec<bool> = (0..10_000).map(|_| rng.gen_bool(0.5)).collect();
    let kr = cohen_kappa(&x, &y).map_err(err)?.value;
    ensure(kr.abs() <= 0.05, || format!("independent labelings gave {kr}"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("identical 1, hand example 0, independent {kr:+.4}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("F-beta reproduction", fbeta_reproduction),
        ("TF-IDF oracle equivalence", tfidf_oracle),
        ("Porter stemmer", porter_stemmer),
        ("SMOTE properties", smote_properties),
        ("forest correctness", forest_correctness),
        ("protocol integrity", protocol_integrity),
        ("desk-scale cross-project experiment", desk_scale_experiment),
        ("determinism", determinism),
        ("Cohen's kappa", kappa),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
