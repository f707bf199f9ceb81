#![allow(dead_code)]

use std::collections::HashSet;

use forge_bench::{load_tasks, CompositionTask, TaskSource};
use forge_core::{parse, safe_match, MatchConfig, MatchMode, Verdict};
use forge_store::{Provenance, Source, Store, StoreBuilder};
use forge_testkit::{random_example, synthetic_corpus};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CLASSIC_TASKS: &str = include_str!("../../fixtures/classic_tasks.jsonl");
pub const CLASSIC_CORPUS: &str = include_str!("../../fixtures/classic_corpus.jsonl");

pub fn classic_tasks() -> Vec<CompositionTask> {
    let report = load_tasks(CLASSIC_TASKS.as_bytes()).expect("fixture tasks load");
    assert!(report.excluded.is_empty() && report.malformed_lines == 0);
    report.tasks
}

pub fn add_synthetic(b: &mut StoreBuilder, n: usize, seed: u64) {
    for e in synthetic_corpus(n, seed) {
        let source: Source = e.source.parse().unwrap();
        b.add(&e.pattern, Provenance { source, origin: e.origin }).unwrap();
    }
}

pub fn synthetic_store(n: usize, seed: u64) -> Store {
    let mut b = StoreBuilder::new();
    add_synthetic(&mut b, n, seed);
    Store::from_entries(b.into_entries())
}

/// The hand-written fixture corpus topped up with synthetic entries to
/// exactly `size` distinct patterns.
pub fn curated_store(size: usize) -> Store {
    let mut b = StoreBuilder::new();
    b.ingest_reader(CLASSIC_CORPUS.as_bytes(), None).unwrap();
    let mut extra = 0;
    let mut seed = 0;
    while b.len() < size {
        for e in synthetic_corpus(size, 1_000 + seed) {
            if b.len() >= size {
                break;
            }
            let source: Source = e.source.parse().unwrap();
            b.add(&e.pattern, Provenance { source, origin: e.origin }).unwrap();
            extra += 1;
        }
        seed += 1;
    }
    assert!(extra > 0);
    Store::from_entries(b.into_entries())
}

fn partial(pattern: &str, s: &str) -> Verdict {
    let ast = parse(pattern).unwrap();
    safe_match(&ast, s, MatchMode::Partial, &MatchConfig::with_budget(1_000_000)).verdict
}

/// Tasks whose ground truth is a regular corpus entry: positives are its
/// covering strings, negatives random strings it rejects.
pub fn derived_tasks(store: &Store, n: usize, seed: u64) -> Vec<CompositionTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<_> =
        store.scan(None).filter(|e| e.compiled.as_ref().unwrap().nfa().is_some()).collect();
    pool.shuffle(&mut rng);
    let mut out = Vec::new();
    let mut used = HashSet::new();
    for e in pool {
        if out.len() == n {
            break;
        }
        let cover = e.compiled.as_ref().unwrap().nfa().unwrap().covering_strings(20);
        if cover.is_empty() || !used.insert(e.entry.id) {
            continue;
        }
        let k = rng.gen_range(1..=cover.len().min(4));
        let positives: Vec<String> = cover.choose_multiple(&mut rng, k).cloned().collect();
        let mut negatives = Vec::new();
        for _ in 0..40 {
            let s = random_example(&mut rng);
            if !positives.contains(&s)
                && !negatives.contains(&s)
                && partial(&e.entry.pattern, &s) == Verdict::NoMatch
            {
                negatives.push(s);
                if negatives.len() == 3 {
                    break;
                }
            }
        }
        if negatives.is_empty() {
            continue;
        }
        out.push(CompositionTask {
            id: format!("derived-{}", e.entry.id),
            ground_truth: e.entry.pattern.clone(),
            positives,
            negatives,
            source: if rng.gen_bool(0.5) { TaskSource::Oss } else { TaskSource::Regexlib },
            mode: None,
        });
    }
    assert_eq!(out.len(), n, "not enough derivable tasks");
    out
}

/// A population of tasks with varied suite sizes and ratios for sampling.
pub fn task_population(n: usize, seed: u64) -> Vec<CompositionTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let p = rng.gen_range(1..=12);
            let q = rng.gen_range(1..=12);
            CompositionTask {
                id: format!("task-{i:05}"),
                ground_truth: "a".into(),
                positives: (0..p).map(|j| format!("p{j}")).collect(),
                negatives: (0..q).map(|j| format!("n{j}")).collect(),
                source: if rng.gen_bool(0.6) { TaskSource::Oss } else { TaskSource::Regexlib },
                mode: None,
            }
        })
        .collect()
}
