mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use forge_bench::sampling::{neyman_allocation, stratify, StratumInput};
use forge_bench::{
    aggregate, cochran_sample_size, load_tasks, plan_samples, run_strategy, run_task, write_tasks,
    ExternalStrategy, ReuseStrategy, RunConfig, SampleSpec, Strategy,
};
use forge_core::MatchMode;
use forge_store::{Source, Store, StoreBuilder};
use proptest::prelude::*;

fn external(script: &str, timeout_ms: u64) -> ExternalStrategy {
    ExternalStrategy {
        name: "ext".into(),
        program: "sh".into(),
        args: vec!["-c".into(), script.into()],
        timeout: Duration::from_millis(timeout_ms),
    }
}

#[test]
fn external_adapter_round_trip() {
    let task = &common::classic_tasks()[0];
    let s = external(
        r#"cat > /dev/null; printf '%s\n' '{"candidates": ["^\\S+@\\S+$", "("], "first_success_ms": 4}'"#,
        5_000,
    );
    let c = s.compose(task, MatchMode::Partial).unwrap();
    assert_eq!(c.candidates, vec![r"^\S+@\S+$", "("]);
    assert_eq!(c.first_success, Some(Duration::from_millis(4)));
    let r = run_task(&s, task, &RunConfig::default());
    assert_eq!(r.invalid_candidates, 1);
    assert!(r.error.is_none());
}

#[test]
fn external_adapter_sees_the_request() {
    let task = &common::classic_tasks()[0];
    // Echo the first positive back as a literal candidate.
    let script = r#"python3 -c 'import json,re,sys; r=json.load(sys.stdin); print(json.dumps({"candidates": [re.escape(r["positives"][0])]}))' 2>/dev/null || { cat > /dev/null; echo '{"candidates": []}'; }"#;
    let c = external(script, 10_000).compose(task, MatchMode::Partial).unwrap();
    assert!(c.candidates.len() <= 1);
}

#[test]
fn external_adapter_failures() {
    let task = &common::classic_tasks()[0];
    let bad_json = external("cat > /dev/null; echo not json", 5_000).compose(task, MatchMode::Partial);
    assert!(bad_json.unwrap_err().starts_with("invalid response"));
    let nonzero = external("cat > /dev/null; exit 3", 5_000).compose(task, MatchMode::Partial);
    assert!(nonzero.unwrap_err().starts_with("exited with"));
    let started = Instant::now();
    let slow = external("exec sleep 10", 200).compose(task, MatchMode::Partial);
    assert!(slow.unwrap_err().starts_with("timed out"));
    assert!(started.elapsed() < Duration::from_secs(5));
    let r = run_task(&external("exit 1", 5_000), task, &RunConfig::default());
    assert!(!r.success && r.error.as_deref().unwrap().starts_with("strategy-error:"));
}

#[test]
fn reuse_on_classic_fixtures() {
    let store = common::curated_store(300);
    let tasks = common::classic_tasks();
    let records = run_strategy(&ReuseStrategy::new(&store), &tasks, &RunConfig::default());
    assert_eq!(records.len(), 20);
    assert!(records.iter().all(|r| !r.leaked && r.error.is_none()));
    let ids: Vec<&str> = records.iter().map(|r| r.task_id.as_str()).collect();
    let want: Vec<&str> = tasks.iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, want);
    let oss = ReuseStrategy::only(&store, Source::OssProject);
    let restricted = run_strategy(&oss, &tasks, &RunConfig::default());
    for (all, some) in records.iter().zip(&restricted) {
        assert!(some.candidate_count <= all.candidate_count);
    }
}

#[test]
fn task_files_round_trip() {
    let tasks = common::classic_tasks();
    let mut buf = Vec::new();
    write_tasks(&mut buf, &tasks).unwrap();
    let back = load_tasks(buf.as_slice()).unwrap();
    assert_eq!(back.tasks, tasks);
}

#[test]
fn persisted_store_gives_same_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = StoreBuilder::new();
    b.ingest_reader(common::CLASSIC_CORPUS.as_bytes(), None).unwrap();
    b.write(dir.path(), 4).unwrap();
    let on_disk = Store::open(dir.path()).unwrap();
    let mut b = StoreBuilder::new();
    b.ingest_reader(common::CLASSIC_CORPUS.as_bytes(), None).unwrap();
    let in_memory = Store::from_entries(b.into_entries());
    let tasks = common::classic_tasks();
    let a = run_strategy(&ReuseStrategy::new(&on_disk), &tasks, &RunConfig::default());
    let b = run_strategy(&ReuseStrategy::new(&in_memory), &tasks, &RunConfig::default());
    let strip = |rs: &[forge_bench::TaskRecord]| -> Vec<(String, usize, bool)> {
        rs.iter().map(|r| (r.task_id.clone(), r.candidate_count, r.success)).collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neyman_sums_to_n(
        strata in prop::collection::vec((1usize..200, 0.0f64..10.0), 1..12),
        frac in 0.0f64..=1.0,
    ) {
        let inputs: Vec<StratumInput> = strata.iter().map(|&(size, sd)| StratumInput { size, sd }).collect();
        let total: usize = inputs.iter().map(|s| s.size).sum();
        let n = (total as f64 * frac).floor() as usize;
        let alloc = neyman_allocation(&inputs, n).unwrap();
        prop_assert_eq!(alloc.iter().sum::<usize>(), n);
        for (a, s) in alloc.iter().zip(&inputs) {
            prop_assert!(*a <= s.size);
        }
    }

    #[test]
    fn strata_partition_tasks(n in 1usize..400, seed in any::<u64>()) {
        let tasks = common::task_population(n, seed);
        let strata = stratify(&tasks).unwrap();
        let mut seen = BTreeSet::new();
        for members in strata.members.values() {
            for &i in members {
                prop_assert!(seen.insert(i));
            }
        }
        prop_assert_eq!(seen.len(), n);
    }

    #[test]
    fn cochran_monotone(a in 1u64..1_000_000, b in 1u64..1_000_000, e in 0.01f64..0.2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = cochran_sample_size(Some(lo), 1.96, 0.5, e).unwrap();
        let large = cochran_sample_size(Some(hi), 1.96, 0.5, e).unwrap();
        let limit = cochran_sample_size(None, 1.96, 0.5, e).unwrap();
        prop_assert!(small <= large && large <= limit);
        prop_assert!(small <= lo);
        let tighter = cochran_sample_size(Some(hi), 1.96, 0.5, e / 2.0).unwrap();
        prop_assert!(tighter >= large);
    }

    #[test]
    fn plans_are_disjoint(n in 200usize..1500, seed in any::<u64>()) {
        let tasks = common::task_population(n, seed);
        let eval = SampleSpec { confidence: 0.95, margin: 0.05 };
        let abl = SampleSpec { confidence: 0.90, margin: 0.10 };
        let plan = plan_samples(&tasks, eval, Some(abl), seed).unwrap();
        let e: BTreeSet<&String> = plan.evaluation.iter().collect();
        let a: BTreeSet<&String> = plan.ablation.iter().collect();
        prop_assert!(e.is_disjoint(&a));
        prop_assert_eq!(e.len(), eval.size(n).unwrap());
        prop_assert_eq!(a.len(), abl.size(n).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn aggregate_ignores_order(seed in any::<u64>()) {
        let store = common::curated_store(200);
        let tasks = common::classic_tasks();
        let mut records = run_strategy(&ReuseStrategy::new(&store), &tasks, &RunConfig::default());
        for r in &mut records {
            r.compose_time_ms = 1.0;
        }
        let before = aggregate(&records);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(records.as_mut_slice(), &mut rng);
        prop_assert_eq!(aggregate(&records), before);
    }
}
