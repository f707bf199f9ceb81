//! Stratified sampling of benchmark tasks: Cochran sample size, quartile
//! strata, Neyman allocation and seeded disjoint draws.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::stats::{percentile, variance};
use crate::task::{CompositionTask, TaskSource};
use crate::BenchError;

/// Slack for float error before rounding sizes that should be integral.
const ROUNDING_SLACK: f64 = 1e-9;

/// Two-sided standard normal quantile for a confidence level.
pub fn z_for_confidence(confidence: f64) -> Result<f64, BenchError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(BenchError::Domain(format!("confidence {confidence} not in (0, 1)")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// Cochran's sample size. The infinite-population size `n0` is rounded up
/// to a whole sample before the finite-population correction is applied.
/// `population` of `None` is the infinite-population limit.
pub fn cochran_sample_size(population: Option<u64>, z: f64, p: f64, margin: f64) -> Result<u64, BenchError> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(BenchError::Domain(format!("margin {margin} not in (0, 1)")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(BenchError::Domain(format!("proportion {p} not in (0, 1)")));
    }
    if !(z.is_finite() && z > 0.0) {
        return Err(BenchError::Domain(format!("z {z} must be positive")));
    }
    let n0 = (z * z * p * (1.0 - p) / (margin * margin) - ROUNDING_SLACK).ceil();
    match population {
        None => Ok(n0 as u64),
        Some(0) => Err(BenchError::Domain("population must be at least 1".into())),
        Some(big_n) => {
            let n = n0 / (1.0 + (n0 - 1.0) / big_n as f64);
            Ok(((n - ROUNDING_SLACK).ceil() as u64).min(big_n))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StratumKey {
    pub source: TaskSource,
    /// 1 to 4.
    pub test_count_quartile: u8,
    /// 1 to 4.
    pub ratio_quartile: u8,
}

/// Quartile cut points; a value equal to a cut point falls in the lower
/// quartile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles(pub [f64; 3]);

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        Some(Self([percentile(values, 0.25)?, percentile(values, 0.5)?, percentile(values, 0.75)?]))
    }

    pub fn bucket(&self, v: f64) -> u8 {
        self.0.iter().position(|&q| v <= q).map_or(4, |i| i as u8 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub test_count: Quartiles,
    pub ratio: Quartiles,
    /// Task indices per stratum, in input order.
    pub members: BTreeMap<StratumKey, Vec<usize>>,
}

pub fn stratify(tasks: &[CompositionTask]) -> Option<Strata> {
    let counts: Vec<f64> = tasks.iter().map(|t| t.suite_size() as f64).collect();
    let ratios: Vec<f64> = tasks.iter().map(CompositionTask::positive_ratio).collect();
    let test_count = Quartiles::of(&counts)?;
    let ratio = Quartiles::of(&ratios)?;
    let mut members: BTreeMap<StratumKey, Vec<usize>> = BTreeMap::new();
    for (i, t) in tasks.iter().enumerate() {
        let key = StratumKey {
            source: t.source,
            test_count_quartile: test_count.bucket(counts[i]),
            ratio_quartile: ratio.bucket(ratios[i]),
        };
        members.entry(key).or_default().push(i);
    }
    Some(Strata { test_count, ratio, members })
}

/// Size and within-stratum standard deviation of the allocation variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumInput {
    pub size: usize,
    pub sd: f64,
}

/// Neyman allocation of `n` over strata, rounded by largest remainder.
/// Strata whose share exceeds their size are capped and the excess is
/// spread over the rest. Where every remaining weight is zero the
/// allocation falls back to proportional.
pub fn neyman_allocation(strata: &[StratumInput], n: usize) -> Result<Vec<usize>, BenchError> {
    let total: usize = strata.iter().map(|s| s.size).sum();
    if n > total {
        return Err(BenchError::Infeasible(format!("sample of {n} from a population of {total}")));
    }
    let mut alloc = vec![0usize; strata.len()];
    let mut capped = vec![false; strata.len()];
    let mut remaining = n;
    loop {
        let active: Vec<usize> = (0..strata.len()).filter(|&h| !capped[h] && strata[h].size > 0).collect();
        if remaining == 0 || active.is_empty() {
            break;
        }
        let mut weights: Vec<f64> = active.iter().map(|&h| strata[h].size as f64 * strata[h].sd).collect();
        if weights.iter().sum::<f64>() <= 0.0 {
            weights = active.iter().map(|&h| strata[h].size as f64).collect();
        }
        let sum: f64 = weights.iter().sum();
        let ideal: Vec<f64> = weights.iter().map(|w| remaining as f64 * w / sum).collect();
        let over: Vec<usize> = active
            .iter()
            .zip(&ideal)
            .filter(|(&h, &x)| x > strata[h].size as f64 + ROUNDING_SLACK)
            .map(|(&h, _)| h)
            .collect();
        if !over.is_empty() {
            for h in over {
                alloc[h] = strata[h].size;
                capped[h] = true;
                remaining -= strata[h].size;
            }
            continue;
        }
        let floors: Vec<usize> = ideal.iter().map(|x| (x + ROUNDING_SLACK).floor() as usize).collect();
        let mut order: Vec<usize> = (0..active.len()).collect();
        let frac = |i: usize| ideal[i] - floors[i] as f64;
        order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
        let mut left = remaining - floors.iter().sum::<usize>();
        for (i, &h) in active.iter().enumerate() {
            alloc[h] = floors[i];
        }
        for i in order {
            if left == 0 {
                break;
            }
            let h = active[i];
            if alloc[h] < strata[h].size {
                alloc[h] += 1;
                left -= 1;
            }
        }
        break;
    }
    debug_assert_eq!(alloc.iter().sum::<usize>(), n);
    Ok(alloc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumPlan {
    pub key: StratumKey,
    pub size: usize,
    pub sd: f64,
    pub evaluation: usize,
    pub ablation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub population: usize,
    pub seed: u64,
    pub test_count_quartiles: Quartiles,
    pub ratio_quartiles: Quartiles,
    pub strata: Vec<StratumPlan>,
    pub evaluation: Vec<String>,
    pub ablation: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub confidence: f64,
    pub margin: f64,
}

impl SampleSpec {
    pub fn size(&self, population: usize) -> Result<usize, BenchError> {
        let z = z_for_confidence(self.confidence)?;
        Ok(cochran_sample_size(Some(population as u64), z, 0.5, self.margin)? as usize)
    }
}

/// Draws per-stratum samples without replacement. Ablation tasks come from
/// what the evaluation draw left, so the two sets never share a task.
pub fn draw_samples(
    tasks: &[CompositionTask],
    strata: &Strata,
    evaluation: &[usize],
    ablation: &[usize],
    seed: u64,
) -> Result<(Vec<String>, Vec<String>), BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eval_ids = Vec::new();
    let mut abl_ids = Vec::new();
    for (h, (key, members)) in strata.members.iter().enumerate() {
        let (e, a) = (evaluation[h], ablation[h]);
        if e + a > members.len() {
            return Err(BenchError::Infeasible(format!(
                "stratum {key:?} has {} tasks, asked for {e} + {a}",
                members.len()
            )));
        }
        let mut pool = members.clone();
        pool.sort_by(|&x, &y| tasks[x].id.cmp(&tasks[y].id));
        pool.shuffle(&mut rng);
        eval_ids.extend(pool[..e].iter().map(|&i| tasks[i].id.clone()));
        abl_ids.extend(pool[e..e + a].iter().map(|&i| tasks[i].id.clone()));
    }
    Ok((eval_ids, abl_ids))
}

/// Full sampling procedure over the retained tasks.
pub fn plan_samples(
    tasks: &[CompositionTask],
    evaluation: SampleSpec,
    ablation: Option<SampleSpec>,
    seed: u64,
) -> Result<SamplePlan, BenchError> {
    let strata = stratify(tasks).ok_or_else(|| BenchError::Infeasible("no tasks to sample".into()))?;
    let inputs: Vec<StratumInput> = strata
        .members
        .values()
        .map(|m| {
            let counts: Vec<f64> = m.iter().map(|&i| tasks[i].suite_size() as f64).collect();
            StratumInput { size: m.len(), sd: variance(&counts).unwrap_or(0.0).sqrt() }
        })
        .collect();
    let n_eval = evaluation.size(tasks.len())?;
    let eval_alloc = neyman_allocation(&inputs, n_eval)?;
    let abl_alloc = match ablation {
        Some(spec) => {
            let n = spec.size(tasks.len())?;
            let rest: Vec<StratumInput> = inputs
                .iter()
                .zip(&eval_alloc)
                .map(|(s, &e)| StratumInput { size: s.size - e, sd: s.sd })
                .collect();
            neyman_allocation(&rest, n)?
        }
        None => vec![0; inputs.len()],
    };
    let (eval_ids, abl_ids) = draw_samples(tasks, &strata, &eval_alloc, &abl_alloc, seed)?;
    let plans = strata
        .members
        .keys()
        .zip(&inputs)
        .enumerate()
        .map(|(h, (key, s))| StratumPlan {
            key: *key,
            size: s.size,
            sd: s.sd,
            evaluation: eval_alloc[h],
            ablation: abl_alloc[h],
        })
        .collect();
    Ok(SamplePlan {
        population: tasks.len(),
        seed,
        test_count_quartiles: strata.test_count,
        ratio_quartiles: strata.ratio,
        strata: plans,
        evaluation: eval_ids,
        ablation: abl_ids,
    })
}
