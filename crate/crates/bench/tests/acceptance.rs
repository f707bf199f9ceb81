//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use forge_bench::report::GROUND_METRICS;
use forge_bench::sampling::{neyman_allocation, plan_samples, SampleSpec, StratumInput};
use forge_bench::{aggregate, cochran_sample_size, run_strategy, ReuseStrategy, RunConfig};
use forge_core::automaton::{build_nfa_with, NfaOptions, DEFAULT_COVERING_CAP};
use forge_core::metrics::{semantic_similarity, semantic_similarity_ast};
use forge_core::ted::tree_edit_distance;
use forge_core::{
    accuracy, build_nfa, parse, safe_match, syntactic_distance, MatchConfig, MatchMode, Verdict,
};
use forge_store::{run_query, EntryId, Provenance, Query, QueryOptions, Source, Store, StoreBuilder};
use forge_testkit::corpus::REDOS_PATTERNS;
use forge_testkit::{all_strings, exhaustive_ted, oracle_match, random_pattern, GenConfig, Tree};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ABC: [char; 3] = ['a', 'b', 'c'];
const ABC01: [char; 5] = ['a', 'b', 'c', '0', '1'];

// Runtime bounds.
const ACCURACY_ORACLE_LIMIT: Duration = Duration::from_secs(60);
const EQUIVALENCE_LIMIT: Duration = Duration::from_secs(300);
const QUERY_SOUNDNESS_LIMIT: Duration = Duration::from_secs(600);
const LOOPBACK_LIMIT: Duration = Duration::from_secs(5);
const DESK_SCALE_LIMIT: Duration = Duration::from_secs(120);
const THROUGHPUT_LIMIT: Duration = Duration::from_secs(60);
/// Slack over the per-match wall cap for a single pathological evaluation.
const REDOS_MATCH_SLACK: Duration = Duration::from_millis(150);
/// Bound on the whole adversarial query.
const REDOS_QUERY_LIMIT: Duration = Duration::from_secs(10);

// Exact-value tolerances: all zero.
const SIMILARITY_TOLERANCE: f64 = 0.0;
const COVERAGE_TOLERANCE: f64 = 0.0;
const ACCURACY_TOLERANCE: f64 = 0.0;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn deterministic() -> MatchConfig {
    MatchConfig::with_budget(1_000_000)
}

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn accuracy_oracle() -> Check {
    let cfg = GenConfig { max_depth: 4, ..GenConfig::full(&ABC01) };
    let pool = all_strings(&ABC01, 3);
    let mut r = rng(1);
    for task in 0..1_000 {
        let p = random_pattern(&mut r, &cfg);
        let ast = parse(&p).map_err(|e| format!("{p}: {e}"))?;
        let np = r.gen_range(0..=4);
        let nn = r.gen_range(1..=4);
        let pos: Vec<String> = (0..np).map(|_| pool.choose(&mut r).unwrap().clone()).collect();
        let neg: Vec<String> = (0..nn).map(|_| pool.choose(&mut r).unwrap().clone()).collect();
        for (mode, full) in [(MatchMode::Partial, false), (MatchMode::Full, true)] {
            let got = accuracy(&ast, &pos, &neg, mode, &deterministic()).map_err(|e| e.to_string())?;
            let want = pos.iter().filter(|x| oracle_match(&ast, x, full)).count()
                + neg.iter().filter(|x| !oracle_match(&ast, x, full)).count();
            let want = want as f64 / (pos.len() + neg.len()) as f64;
            ensure!(
                (got.value - want).abs() <= ACCURACY_TOLERANCE,
                "task {task} {p:?} {mode:?}: {} vs {want}",
                got.value
            );
        }
    }
    Ok("1000 tasks x 2 modes agree with the reference matcher".into())
}

fn nfa_matcher_equivalence() -> Check {
    let strings = all_strings(&ABC, 6);
    let mut r = rng(2);
    for i in 0..500 {
        let p = random_pattern(&mut r, &GenConfig::regular(&ABC));
        let ast = parse(&p).map_err(|e| e.to_string())?;
        let nfa = build_nfa(&ast).map_err(|e| format!("{p}: {e}"))?;
        let by_nfa: BTreeSet<&String> = strings.iter().filter(|x| nfa.accepts_str(x)).collect();
        let by_vm: BTreeSet<&String> = strings
            .iter()
            .filter(|x| safe_match(&ast, x, MatchMode::Full, &deterministic()).verdict == Verdict::Match)
            .collect();
        ensure!(by_nfa == by_vm, "pattern {i} {p:?}: sets differ");
    }
    Ok(format!("500 patterns, {} strings each", strings.len()))
}

fn ted_axioms() -> Check {
    let cfg = GenConfig::full(&ABC01);
    let mut r = rng(3);
    for i in 0..1_000 {
        let a = parse(&random_pattern(&mut r, &cfg)).unwrap();
        let b = parse(&random_pattern(&mut r, &cfg)).unwrap();
        let c = parse(&random_pattern(&mut r, &cfg)).unwrap();
        let d = syntactic_distance;
        ensure!(d(&a, &a) == 0, "identity fails on triple {i}");
        ensure!(d(&a, &b) == d(&b, &a), "symmetry fails on triple {i}");
        ensure!(d(&a, &c) <= d(&a, &b) + d(&b, &c), "triangle fails on triple {i}");
    }
    let ab = syntactic_distance(&parse("a").unwrap(), &parse("b").unwrap());
    ensure!(ab == 1, "TED(a, b) = {ab}");
    let small = GenConfig { max_depth: 3, ..cfg };
    let mut pairs = 0;
    while pairs < 100 {
        let a = parse(&random_pattern(&mut r, &small)).unwrap();
        let b = parse(&random_pattern(&mut r, &small)).unwrap();
        if a.node_count() > 6 || b.node_count() > 6 {
            continue;
        }
        let fast = tree_edit_distance(a.root(), b.root());
        let slow = exhaustive_ted(&Tree::from_ast(a.root()), &Tree::from_ast(b.root()));
        ensure!(fast == slow, "{} vs {}: {fast} != {slow}", a.render(), b.render());
        pairs += 1;
    }
    Ok("1000 triples, TED(a,b)=1, 100 exhaustive pairs".into())
}

fn similarity_bounds() -> Check {
    let cfg = GenConfig::regular(&ABC);
    let mut r = rng(4);
    for i in 0..500 {
        let a = build_nfa(&parse(&random_pattern(&mut r, &cfg)).unwrap()).unwrap();
        let b = build_nfa(&parse(&random_pattern(&mut r, &cfg)).unwrap()).unwrap();
        let v = semantic_similarity(&a, &b, DEFAULT_COVERING_CAP);
        ensure!((0.0..=1.0).contains(&v), "pair {i}: {v}");
        let same = semantic_similarity(&a, &a, DEFAULT_COVERING_CAP);
        ensure!((same - 1.0).abs() <= SIMILARITY_TOLERANCE, "pair {i}: self-similarity {same}");
    }
    let sim = |x: &str, y: &str| {
        semantic_similarity_ast(&parse(x).unwrap(), &parse(y).unwrap(), DEFAULT_COVERING_CAP)
    };
    let ab = sim("^a$", "^b$");
    ensure!(ab.is_some_and(|v| (v - 0.0).abs() <= SIMILARITY_TOLERANCE), "^a$ vs ^b$: {ab:?}");
    let opt = sim("^ab?$", "^a$");
    ensure!(opt.is_some_and(|v| (v - 0.5).abs() <= SIMILARITY_TOLERANCE), "^ab?$ vs ^a$: {opt:?}");
    Ok("500 pairs in [0,1], self = 1.0, 0.0 and 0.5 fixtures".into())
}

fn covering_soundness() -> Check {
    let mut r = rng(5);
    let mut done = 0;
    let mut empty = 0;
    while done < 500 {
        let p = random_pattern(&mut r, &GenConfig::regular(&ABC01));
        let nfa = build_nfa_with(&parse(&p).unwrap(), &NfaOptions::default()).unwrap();
        ensure!(nfa.is_trimmed(), "{p:?} not trimmed");
        let cover = nfa.covering_strings(usize::MAX);
        if nfa.accepts().next().is_none() {
            // An empty language has no transitions to cover.
            ensure!(cover.is_empty(), "{p:?}: strings for an empty language");
            empty += 1;
            continue;
        }
        for x in &cover {
            ensure!(nfa.accepts_str(x), "{p:?}: covering string {x:?} rejected");
        }
        let c = nfa.coverage(&cover, &[]);
        ensure!((c - 1.0).abs() <= COVERAGE_TOLERANCE, "{p:?}: coverage {c}");
        done += 1;
    }
    Ok(format!("500 patterns ({empty} empty-language patterns skipped)"))
}

fn random_query(store: &Store, regular: &[EntryId], r: &mut ChaCha8Rng) -> Query {
    loop {
        let e = store.get(*regular.choose(r).unwrap()).unwrap();
        let cover = e.compiled.as_ref().unwrap().nfa().unwrap().covering_strings(50);
        if cover.is_empty() {
            continue;
        }
        let k = r.gen_range(1..=3);
        let positives: Vec<String> = cover.choose_multiple(r, k).cloned().collect();
        let negatives: Vec<String> = (0..r.gen_range(0..=3))
            .map(|_| forge_testkit::random_example(r))
            .filter(|n| !positives.contains(n))
            .collect();
        let mut q = Query::new(positives, negatives).unwrap();
        q.mode = if r.gen_bool(0.5) { MatchMode::Partial } else { MatchMode::Full };
        return q;
    }
}

fn query_soundness(store: &Store) -> Check {
    let regular: Vec<EntryId> = store
        .scan(None)
        .filter(|e| e.compiled.as_ref().unwrap().nfa().is_some())
        .map(|e| e.entry.id)
        .collect();
    let mut opts = QueryOptions::default();
    opts.settings.match_config = deterministic();
    let mut r = rng(6);
    let mut returned = 0;
    let mut pruned = 0;
    for i in 0..200 {
        let mut q = random_query(store, &regular, &mut r);
        let plain = run_query(&store.view(), &q, &opts);
        q.prefilter = true;
        let filtered = run_query(&store.view(), &q, &opts);
        let a: BTreeSet<EntryId> = plain.candidates.iter().map(|c| c.entry.id).collect();
        let b: BTreeSet<EntryId> = filtered.candidates.iter().map(|c| c.entry.id).collect();
        ensure!(a == b, "query {i}: prefiltered result differs ({} vs {})", a.len(), b.len());
        for c in &plain.candidates {
            let ast = parse(&c.entry.pattern).unwrap();
            let acc = accuracy(&ast, q.positives(), q.negatives(), q.mode, &deterministic()).unwrap();
            ensure!(acc.value == 1.0, "query {i}: {} re-verifies at {}", c.entry.pattern, acc.value);
        }
        returned += a.len();
        pruned += filtered.stats.prefiltered;
    }
    Ok(format!("200 queries, {returned} candidates re-verified, {pruned} entries pruned by prefilter"))
}

fn redos_containment() -> Check {
    let mut b = StoreBuilder::new();
    let patterns: Vec<&str> = REDOS_PATTERNS.iter().copied().chain(["a+", "^a+!$", r"\w+", "b"]).collect();
    for (i, p) in patterns.iter().enumerate() {
        b.add(p, Provenance { source: Source::SoPost, origin: i.to_string() }).unwrap();
    }
    let store = Store::from_entries(b.into_entries());
    let attack = format!("{}!", "a".repeat(32));
    let cfg = MatchConfig::default();
    let cap = cfg.wall_cap.expect("default wall cap");
    let mut pathological = 0;
    for p in REDOS_PATTERNS {
        let out = safe_match(&parse(p).unwrap(), &attack, MatchMode::Partial, &cfg);
        ensure!(out.elapsed <= cap + REDOS_MATCH_SLACK, "{p}: {:?} exceeds the cap", out.elapsed);
        if out.verdict == Verdict::Timeout {
            pathological += 1;
        }
    }
    ensure!(pathological >= 3, "only {pathological} pathological evaluations timed out");
    let q = Query::new(vec![attack.clone()], Vec::new()).unwrap();
    let started = Instant::now();
    let out = run_query(&store.view(), &q, &QueryOptions::default());
    let took = started.elapsed();
    ensure!(took <= REDOS_QUERY_LIMIT, "query took {took:?}");
    ensure!(out.stats.timeouts >= pathological, "timeouts {} < {pathological}", out.stats.timeouts);
    let got: BTreeSet<&str> = out.candidates.iter().map(|c| c.entry.pattern.as_str()).collect();
    ensure!(got.contains("a+") && got.contains("^a+!$"), "benign candidates missing: {got:?}");
    Ok(format!("{pathological} timeouts, query finished in {} ms", took.as_millis()))
}

const LOOPBACK_CANDIDATE: &str = r"^127(?:\.(?:25[0-5]|2[0-4][\d]|[01]?[\d][\d]?)){3}$";
const LOOPBACK_GROUND: &str = r"^127\.([0-9]{1,3})\.([0-9]{1,3})\.([0-9]{1,3})$";

fn loopback_fixture() -> Check {
    let positives = s(&["127.0.0.1", "127.1.2.3"]);
    let negatives = s(&["128.0.0.1", "127.0.0.999"]);
    let ast = parse(LOOPBACK_CANDIDATE).unwrap();
    let reference = positives.iter().all(|x| oracle_match(&ast, x, false))
        && negatives.iter().all(|x| !oracle_match(&ast, x, false));
    ensure!(reference, "reference matcher rejects the constructed suite");
    let mut b = StoreBuilder::new();
    for (i, p) in [LOOPBACK_CANDIDATE, LOOPBACK_GROUND, r"^\d+$", r"\d+\.\d+", "localhost"].iter().enumerate() {
        b.add(p, Provenance { source: Source::OssProject, origin: i.to_string() }).unwrap();
    }
    let store = Store::from_entries(b.into_entries());
    let q = Query::new(positives, negatives).unwrap();
    let out = run_query(&store.view(), &q, &QueryOptions::default());
    let hit = out.candidates.iter().find(|c| c.entry.pattern == LOOPBACK_CANDIDATE);
    ensure!(hit.is_some_and(|c| c.bundle.accuracy == 1.0), "candidate not returned at accuracy 1.0");
    Ok(format!("{} candidate(s)", out.candidates.len()))
}

fn sampling_math() -> Check {
    let inf = cochran_sample_size(None, 1.96, 0.5, 0.05).map_err(|e| e.to_string())?;
    let fin = cochran_sample_size(Some(10_000), 1.96, 0.5, 0.05).map_err(|e| e.to_string())?;
    ensure!(inf == 385 && fin == 371, "cochran gave {inf} and {fin}");
    // Hand computation: weights 40*2=80, 40*1=40, 20*4=80 over 200; n=25 gives
    // 10, 5, 10 exactly. n=26 gives 10.4, 5.2, 10.4, so the one extra unit goes
    // to the first of the tied largest remainders.
    let strata = [
        StratumInput { size: 40, sd: 2.0 },
        StratumInput { size: 40, sd: 1.0 },
        StratumInput { size: 20, sd: 4.0 },
    ];
    let a25 = neyman_allocation(&strata, 25).map_err(|e| e.to_string())?;
    let a26 = neyman_allocation(&strata, 26).map_err(|e| e.to_string())?;
    ensure!(a25 == vec![10, 5, 10] && a26 == vec![11, 5, 10], "neyman gave {a25:?} and {a26:?}");
    let tasks = common::task_population(3_000, 17);
    let eval = SampleSpec { confidence: 0.95, margin: 0.05 };
    let abl = SampleSpec { confidence: 0.90, margin: 0.10 };
    let p1 = plan_samples(&tasks, eval, Some(abl), 7).map_err(|e| e.to_string())?;
    let p2 = plan_samples(&tasks, eval, Some(abl), 7).map_err(|e| e.to_string())?;
    ensure!(p1 == p2, "same seed gave different plans");
    let e: BTreeSet<&String> = p1.evaluation.iter().collect();
    let a: BTreeSet<&String> = p1.ablation.iter().collect();
    ensure!(e.is_disjoint(&a), "evaluation and ablation overlap");
    let want_eval: usize = p1.strata.iter().map(|s| s.evaluation).sum();
    ensure!(
        e.len() == want_eval && e.len() == eval.size(tasks.len()).unwrap(),
        "evaluation size {}",
        e.len()
    );
    ensure!(a.len() == abl.size(tasks.len()).unwrap(), "ablation size {}", a.len());
    let p3 = plan_samples(&tasks, eval, Some(abl), 8).map_err(|e| e.to_string())?;
    ensure!(p3.evaluation != p1.evaluation, "seed has no effect");
    Ok(format!(
        "385/371, Neyman exact, {} + {} disjoint draws over {} strata",
        e.len(),
        a.len(),
        p1.strata.len()
    ))
}

fn leakage_guard(store: &Store) -> Check {
    let mut tasks = common::classic_tasks();
    tasks.extend(common::derived_tasks(store, 80, 23));
    ensure!(tasks.len() == 100, "{} tasks", tasks.len());
    let in_store = tasks.iter().filter(|t| store.find(&t.ground_truth).is_some()).count();
    ensure!(in_store == 100, "only {in_store} ground truths are in the corpus");
    let strategy = ReuseStrategy::new(store);
    let records =
        run_strategy(&strategy, &tasks, &RunConfig { max_candidates: Some(50), ..Default::default() });
    let leaked = records.iter().filter(|r| r.leaked).count();
    ensure!(leaked == 0, "{leaked} tasks saw their ground truth");
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    ensure!(errors == 0, "{errors} strategy errors");
    Ok("100 tasks, 0 leaks".into())
}

fn desk_scale(store: &Store) -> Check {
    ensure!(store.len() == 1_000, "corpus has {} entries", store.len());
    let tasks = common::classic_tasks();
    ensure!(tasks.len() == 20, "{} tasks", tasks.len());
    let records = run_strategy(&ReuseStrategy::new(store), &tasks, &RunConfig::default());
    let report = aggregate(&records);
    let s = &report.strategies["reuse"];
    ensure!(s.success_rate == 1.0, "success rate {}", s.success_rate);
    for metric in [
        "accuracy",
        "semantic_similarity",
        "compose_time_ms",
        "candidate_count",
        "pattern_length",
        "feature_count",
        "ted_to_ground",
        "nfa_size",
    ] {
        ensure!(s.distributions.contains_key(metric), "no distribution for {metric}");
    }
    for metric in GROUND_METRICS {
        ensure!(s.ground_differences.contains_key(metric), "no ground difference for {metric}");
    }
    ensure!(s.variances.contains_key("pattern_length"), "no per-task variance");
    ensure!(!s.success_by_suite_size.is_empty(), "no success-by-suite-size rows");
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| e.to_string())?;
    let csv = String::from_utf8(csv).unwrap();
    for stat in ["p10", "median", "p90"] {
        ensure!(csv.contains(&format!(",{stat},")), "CSV lacks {stat}");
    }
    let median = s.distributions["candidate_count"].median;
    Ok(format!("success 1.0 on 20 tasks, median {median} candidates"))
}

fn throughput(store: &Store) -> Check {
    let q = Query::new(
        s(&["user@example.com", "a.b@mail.org", "x_y@test.net"]),
        s(&["user@", "@example.com", "plain text"]),
    )
    .unwrap();
    ensure!(q.positives().len() + q.negatives().len() == 6, "task size");
    ensure!(!q.prefilter, "prefilter must be off for the unoptimized scan");
    let started = Instant::now();
    let out = run_query(&store.view(), &q, &QueryOptions::default());
    let took = started.elapsed();
    ensure!(took <= THROUGHPUT_LIMIT, "scan took {took:?}");
    Ok(format!(
        "{} entries scanned in {} ms on {} threads, {} candidates",
        out.stats.scanned,
        took.as_millis(),
        rayon::current_num_threads(),
        out.stats.matched
    ))
}

fn run(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let started = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let took = started.elapsed();
    let result = match (result, limit) {
        (Ok(_), Some(l)) if took > l => Err(format!("took {took:?}, limit {l:?}")),
        (r, _) => r,
    };
    let secs = took.as_secs_f64();
    match &result {
        Ok(detail) => println!("PASS  {name}  [{secs:.2}s]  {detail}"),
        Err(why) => println!("FAIL  {name}  [{secs:.2}s]  {why}"),
    }
    result.is_ok()
}

fn main() {
    let mut ok = true;
    ok &= run("accuracy oracle", Some(ACCURACY_ORACLE_LIMIT), accuracy_oracle);
    ok &= run("automaton-matcher equivalence", Some(EQUIVALENCE_LIMIT), nfa_matcher_equivalence);
    ok &= run("TED axioms", None, ted_axioms);
    ok &= run("semantic similarity bounds", None, similarity_bounds);
    ok &= run("covering-string soundness", None, covering_soundness);

    let started = Instant::now();
    let big = common::synthetic_store(100_000, 42);
    let build = started.elapsed();
    println!("      (100,000-entry synthetic corpus built in {:.2}s)", build.as_secs_f64());
    ok &= run("query soundness and prefilter completeness", Some(QUERY_SOUNDNESS_LIMIT), || {
        query_soundness(&big)
    });
    ok &= run("ReDoS containment", None, redos_containment);
    ok &= run("loopback reuse fixture", Some(LOOPBACK_LIMIT), loopback_fixture);
    ok &= run("sampling math", None, sampling_math);

    let curated = common::curated_store(1_000);
    ok &= run("benchmark leakage guard", None, || leakage_guard(&curated));
    ok &= run("desk-scale end-to-end", Some(DESK_SCALE_LIMIT), || desk_scale(&curated));
    ok &= run("throughput proxy", Some(THROUGHPUT_LIMIT), || throughput(&big));

    if !ok {
        std::process::exit(1);
    }
}
