//! F1 and Adjusted Rand Index scoring, and per-stratum aggregation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llmclient::{parse_structured_answer, InferenceResult, ParsedAnswer, Status};
use crate::promptgen::{Concept, PromptInstance, PromptTruth, TaskKind};
use crate::transforms::MutationKind;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("ground truth is empty")]
    EmptyTruth,
    #[error("partitions cover different elements")]
    UniverseMismatch,
    #[error("an element appears in two blocks of one partition")]
    OverlappingBlocks,
    #[error("answer shape does not match prompt {0}")]
    VariantMismatch(String),
    #[error("score for unknown prompt {0}")]
    DanglingScore(String),
    #[error("transport failure for prompt {0} cannot be scored")]
    Unscorable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    F1,
    Ari,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::Ari => "ari",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Components {
    F1 {
        tp: usize,
        fp: usize,
        fn_: usize,
    },
    /// Pair counts from the contingency table.
    Ari {
        n: usize,
        index: u64,
        sum_rows: u64,
        sum_cols: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub prompt_id: String,
    pub model_name: String,
    pub metric: Metric,
    pub value: f64,
    pub components: Components,
    /// Answer was malformed and scored as an empty prediction.
    pub malformed: bool,
}

fn f1_value(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Returns (f1, components). Empty truth is an error.
pub fn f1_sets<T: Ord>(predicted: &BTreeSet<T>, truth: &BTreeSet<T>) -> Result<(f64, Components), EvalError> {
    if truth.is_empty() {
        return Err(EvalError::EmptyTruth);
    }
    let tp = predicted.intersection(truth).count();
    let fp = predicted.len() - tp;
    let fn_ = truth.len() - tp;
    Ok((f1_value(tp, fp, fn_), Components::F1 { tp, fp, fn_ }))
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn block_index<T: Ord + Clone>(blocks: &[BTreeSet<T>]) -> Result<BTreeMap<T, usize>, EvalError> {
    let mut index = BTreeMap::new();
    for (i, b) in blocks.iter().enumerate() {
        for x in b {
            if index.insert(x.clone(), i).is_some() {
                return Err(EvalError::OverlappingBlocks);
            }
        }
    }
    Ok(index)
}

/// Adjusted Rand Index from the contingency table. When both partitions are
/// all-singletons or both are a single block the adjustment is 0/0; that
/// case is defined as 1.0.
pub fn ari<T: Ord + Clone>(a: &[BTreeSet<T>], b: &[BTreeSet<T>]) -> Result<(f64, Components), EvalError> {
    let ia = block_index(a)?;
    let ib = block_index(b)?;
    if !ia.keys().eq(ib.keys()) {
        return Err(EvalError::UniverseMismatch);
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (x, &row) in &ia {
        *table.entry((row, ib[x])).or_default() += 1;
    }
    let index: u64 = table.values().map(|&c| choose2(c)).sum();
    let sum_rows: u64 = a.iter().map(|blk| choose2(blk.len() as u64)).sum();
    let sum_cols: u64 = b.iter().map(|blk| choose2(blk.len() as u64)).sum();
    let n = ia.len();
    let components = Components::Ari { n, index, sum_rows, sum_cols };
    let total = choose2(n as u64) as f64;
    let (sa, sb) = (sum_rows as f64, sum_cols as f64);
    let expected = if total == 0.0 { 0.0 } else { sa * sb / total };
    let max = (sa + sb) / 2.0;
    if max == expected {
        return Ok((1.0, components));
    }
    Ok(((index as f64 - expected) / (max - expected), components))
}

/// Restricts a predicted partition to the truth's universe and puts any
/// method the model left out into its own block.
pub fn align_partition(predicted: &[BTreeSet<String>], truth: &[BTreeSet<String>]) -> Vec<BTreeSet<String>> {
    let universe: BTreeSet<&String> = truth.iter().flatten().collect();
    let mut out: Vec<BTreeSet<String>> = predicted
        .iter()
        .map(|b| b.iter().filter(|m| universe.contains(m)).cloned().collect::<BTreeSet<_>>())
        .filter(|b| !b.is_empty())
        .collect();
    let covered: BTreeSet<String> = out.iter().flatten().cloned().collect();
    for m in universe {
        if !covered.contains(m) {
            out.push([m.clone()].into());
        }
    }
    out
}

fn yes_indices(labels: &[bool]) -> BTreeSet<usize> {
    labels.iter().enumerate().filter(|(_, &y)| y).map(|(i, _)| i).collect()
}

/// Scores one answer. `None` is a malformed answer and scores 0.
pub fn score_prompt(
    p: &PromptInstance,
    model_name: &str,
    answer: Option<&ParsedAnswer>,
) -> Result<ScoreRecord, EvalError> {
    let mismatch = || EvalError::VariantMismatch(p.id.clone());
    let record = |metric, value, components| ScoreRecord {
        prompt_id: p.id.clone(),
        model_name: model_name.to_string(),
        metric,
        value,
        components,
        malformed: answer.is_none(),
    };
    match (&p.ground_truth, answer) {
        (PromptTruth::Partition { blocks }, None) => {
            let n = blocks.iter().map(BTreeSet::len).sum();
            Ok(record(Metric::Ari, 0.0, Components::Ari { n, index: 0, sum_rows: 0, sum_cols: 0 }))
        }
        (PromptTruth::Partition { blocks }, Some(ParsedAnswer::Partition(pred))) => {
            let (v, c) = ari(&align_partition(pred, blocks), blocks)?;
            Ok(record(Metric::Ari, v, c))
        }
        (PromptTruth::Assertions { labels, .. }, ans) => {
            let predicted = match ans {
                None => BTreeSet::new(),
                Some(ParsedAnswer::Labels(l)) if l.len() == labels.len() => yes_indices(l),
                Some(_) => return Err(mismatch()),
            };
            let truth = yes_indices(labels);
            let (v, c) = if truth.is_empty() {
                // all-negative list: only an all-"no" answer is right
                let fp = predicted.len();
                (if fp == 0 && ans.is_some() { 1.0 } else { 0.0 }, Components::F1 { tp: 0, fp, fn_: 0 })
            } else {
                f1_sets(&predicted, &truth)?
            };
            Ok(record(Metric::F1, v, c))
        }
        (PromptTruth::RelatedSet { names, .. }, ans) => {
            let empty = BTreeSet::new();
            let predicted = match ans {
                None => &empty,
                Some(ParsedAnswer::Names(n)) => n,
                Some(_) => return Err(mismatch()),
            };
            let (v, c) = f1_sets(predicted, names)?;
            Ok(record(Metric::F1, v, c))
        }
        (PromptTruth::CoupledPairs { pairs }, ans) => {
            let empty = BTreeSet::new();
            let predicted = match ans {
                None => &empty,
                Some(ParsedAnswer::Pairs(ps)) => ps,
                Some(_) => return Err(mismatch()),
            };
            let (v, c) = f1_sets(predicted, pairs)?;
            Ok(record(Metric::F1, v, c))
        }
        (PromptTruth::Partition { .. }, Some(_)) => Err(mismatch()),
    }
}

/// Parses a persisted response and scores it. Transport failures are not scorable.
pub fn score_response(p: &PromptInstance, r: &InferenceResult) -> Result<ScoreRecord, EvalError> {
    if r.status == Status::TransportFailure {
        return Err(EvalError::Unscorable(p.id.clone()));
    }
    let n_labels = match &p.ground_truth {
        PromptTruth::Assertions { labels, .. } => labels.len(),
        _ => 0,
    };
    let parsed = parse_structured_answer(&r.answer_text, p.concept, p.task, n_labels).ok();
    score_prompt(p, &r.model_name, parsed.as_ref())
}

/// Which optional keys split strata. Concept, task, model and metric always do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupBy {
    pub transform_kind: bool,
    pub distortion: bool,
}

impl GroupBy {
    pub const ALL: GroupBy = GroupBy { transform_kind: true, distortion: true };
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StratumKey {
    pub concept: Concept,
    pub task: TaskKind,
    pub transform_kind: Option<MutationKind>,
    /// Tenths for coupling, level for cohesion.
    pub distortion: Option<u32>,
    pub model: String,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub key: StratumKey,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

pub const REPORT_COLUMNS: [&str; 9] =
    ["concept", "task", "transform_kind", "distortion", "model", "metric", "mean", "std", "n"];

pub(crate) fn distortion_label(concept: Concept, step: Option<u32>) -> String {
    match (concept, step) {
        (_, None) => "all".into(),
        (Concept::Coupling, Some(s)) => format!("{:.1}", s as f64 / 10.0),
        (Concept::Cohesion, Some(s)) => s.to_string(),
    }
}

impl StratumReport {
    pub fn csv_row(&self) -> Vec<String> {
        let k = &self.key;
        vec![
            k.concept.to_string(),
            k.task.to_string(),
            k.transform_kind.map_or("all".into(), |t| t.as_str().to_string()),
            distortion_label(k.concept, k.distortion),
            k.model.clone(),
            k.metric.as_str().into(),
            format!("{:.6}", self.mean),
            format!("{:.6}", self.std),
            self.n.to_string(),
        ]
    }
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Macro average per stratum: every prompt counts once. Rows come out in key order.
pub fn aggregate(
    scores: &[ScoreRecord],
    prompts: &[PromptInstance],
    group_by: GroupBy,
) -> Result<Vec<StratumReport>, EvalError> {
    let by_id: BTreeMap<&str, &PromptInstance> = prompts.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut groups: BTreeMap<StratumKey, Vec<f64>> = BTreeMap::new();
    for s in scores {
        let p = by_id.get(s.prompt_id.as_str()).ok_or_else(|| EvalError::DanglingScore(s.prompt_id.clone()))?;
        let key = StratumKey {
            concept: p.concept,
            task: p.task,
            transform_kind: group_by.transform_kind.then_some(p.transform_kind),
            distortion: group_by.distortion.then(|| p.distortion_step()),
            model: s.model_name.clone(),
            metric: s.metric,
        };
        groups.entry(key).or_default().push(s.value);
    }
    Ok(groups
        .into_iter()
        .map(|(key, values)| {
            let (mean, std) = mean_std(&values);
            StratumReport { key, mean, std, n: values.len() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::tests::synthetic;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(blocks: &[&[u32]]) -> Vec<BTreeSet<u32>> {
        blocks.iter().map(|b| b.iter().copied().collect()).collect()
    }

    fn s(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    /// Pair-counting form: agreement counts over all element pairs.
    fn brute_ari(labels_a: &[usize], labels_b: &[usize]) -> f64 {
        let n = labels_a.len();
        let (mut ss, mut sd, mut ds, mut dd) = (0f64, 0f64, 0f64, 0f64);
        for i in 0..n {
            for j in i + 1..n {
                match (labels_a[i] == labels_a[j], labels_b[i] == labels_b[j]) {
                    (true, true) => ss += 1.0,
                    (true, false) => sd += 1.0,
                    (false, true) => ds += 1.0,
                    (false, false) => dd += 1.0,
                }
            }
        }
        let denom = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
        if denom == 0.0 {
            1.0
        } else {
            2.0 * (ss * dd - sd * ds) / denom
        }
    }

    /// All set partitions of 0..n as restricted growth strings.
    fn all_labelings(n: usize) -> Vec<Vec<usize>> {
        fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            let next = prefix.iter().max().map_or(0, |m| m + 1);
            for l in 0..=next {
                prefix.push(l);
                grow(prefix, n, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        grow(&mut Vec::new(), n, &mut out);
        out
    }

    fn blocks_of(labels: &[usize]) -> Vec<BTreeSet<usize>> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![BTreeSet::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            blocks[l].insert(i);
        }
        blocks
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_sets(&s(&["a", "b"]), &s(&["a", "b"])).unwrap().0, 1.0);
        // tp=1 fp=0 fn=1 → 2/(2+0+1)
        let (v, c) = f1_sets(&s(&["a"]), &s(&["a", "b"])).unwrap();
        assert_eq!(c, Components::F1 { tp: 1, fp: 0, fn_: 1 });
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1_sets(&s(&[]), &s(&["a"])).unwrap().0, 0.0);
        assert_eq!(f1_sets(&s(&["a"]), &s(&[])), Err(EvalError::EmptyTruth));
    }

    #[test]
    fn ari_examples() {
        assert_eq!(ari(&p(&[&[1, 2], &[3]]), &p(&[&[1, 2], &[3]])).unwrap().0, 1.0);
        // Σ C(nij,2)=0, ΣC(ai,2)=ΣC(bj,2)=1, C(3,2)=3 → (0 − 1/3)/(1 − 1/3)
        let (v, c) = ari(&p(&[&[1, 2], &[3]]), &p(&[&[1], &[2, 3]])).unwrap();
        assert_eq!(c, Components::Ari { n: 3, index: 0, sum_rows: 1, sum_cols: 1 });
        assert!((v + 0.5).abs() < 1e-12);
        assert_eq!(ari(&p(&[&[1], &[2], &[3]]), &p(&[&[3], &[1], &[2]])).unwrap().0, 1.0);
        assert_eq!(ari(&p(&[&[1, 2, 3]]), &p(&[&[1, 2, 3]])).unwrap().0, 1.0);
        assert_eq!(ari(&p(&[&[1, 2]]), &p(&[&[1, 3]])), Err(EvalError::UniverseMismatch));
        assert_eq!(ari(&p(&[&[1, 2], &[2]]), &p(&[&[1, 2]])), Err(EvalError::OverlappingBlocks));
    }

    #[test]
    fn ari_matches_pair_counting_exhaustively() {
        for n in 1..=6 {
            let all = all_labelings(n);
            for a in &all {
                for b in &all {
                    let fast = ari(&blocks_of(a), &blocks_of(b)).unwrap().0;
                    let slow = brute_ari(a, b);
                    assert!((fast - slow).abs() <= 1e-12, "n={n} {a:?} {b:?}: {fast} vs {slow}");
                }
                assert_eq!(ari(&blocks_of(a), &blocks_of(a)).unwrap().0, 1.0);
            }
        }
    }

    #[test]
    fn random_partitions_average_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 1000;
        let total: f64 = (0..trials)
            .map(|_| {
                let ka = rng.random_range(2..=10);
                let kb = rng.random_range(2..=10);
                let a: Vec<usize> = (0..200).map(|_| rng.random_range(0..ka)).collect();
                let b: Vec<usize> = (0..200).map(|_| rng.random_range(0..kb)).collect();
                ari(&blocks_of(&a), &blocks_of(&b)).unwrap().0
            })
            .sum();
        assert!((total / trials as f64).abs() <= 0.05);
    }

    fn labeling(max_n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (1..=max_n)
            .prop_flat_map(|n| (proptest::collection::vec(0..4usize, n), proptest::collection::vec(0..4usize, n)))
    }

    proptest! {
        #[test]
        fn ari_symmetric_and_bounded((a, b) in labeling(30)) {
            let (ab, _) = ari(&blocks_of(&a), &blocks_of(&b)).unwrap();
            let (ba, _) = ari(&blocks_of(&b), &blocks_of(&a)).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }

        #[test]
        fn ari_label_invariant((a, b) in labeling(20), shift in 1usize..5, seed: u64) {
            let base = ari(&blocks_of(&a), &blocks_of(&b)).unwrap().0;
            // rename block labels in one partition, relabel elements consistently in both
            let relabeled: Vec<usize> = a.iter().map(|l| (l + shift) % 4).collect();
            let mut perm: Vec<usize> = (0..a.len()).collect();
            rand::seq::SliceRandom::shuffle(&mut perm[..], &mut ChaCha8Rng::seed_from_u64(seed));
            let mut pa = vec![0; a.len()];
            let mut pb = vec![0; a.len()];
            for (i, &to) in perm.iter().enumerate() {
                pa[to] = relabeled[i];
                pb[to] = b[i];
            }
            let mut blocks_a = blocks_of(&pa);
            blocks_a.reverse();
            let moved = ari(&blocks_a, &blocks_of(&pb)).unwrap().0;
            prop_assert!((base - moved).abs() < 1e-12);
        }

        #[test]
        fn f1_bounds(pred in proptest::collection::btree_set(0u8..12, 0..8), truth in proptest::collection::btree_set(0u8..12, 1..8)) {
            let (v, _) = f1_sets(&pred, &truth).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v == 1.0, pred == truth);
        }
    }

    #[test]
    fn score_examples() {
        let mut guided = synthetic("g".into(), Concept::Coupling, TaskKind::GuidedGeneration, 3, 10);
        guided.ground_truth = PromptTruth::RelatedSet { seed: "A".into(), names: s(&["B"]) };
        let r = score_prompt(&guided, "m", Some(&ParsedAnswer::Names(s(&["B", "C"])))).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
        let r = score_prompt(&guided, "m", None).unwrap();
        assert_eq!((r.value, r.malformed), (0.0, true));
        assert_eq!(
            score_prompt(&guided, "m", Some(&ParsedAnswer::Labels(vec![true]))),
            Err(EvalError::VariantMismatch("g".into()))
        );

        let mut open = synthetic("o".into(), Concept::Cohesion, TaskKind::OpenEndedGeneration, 2, 10);
        let truth = vec![s(&["a", "b"]), s(&["c"])];
        open.ground_truth = PromptTruth::Partition { blocks: truth.clone() };
        let r = score_prompt(&open, "m", Some(&ParsedAnswer::Partition(truth))).unwrap();
        assert_eq!((r.metric, r.value), (Metric::Ari, 1.0));
        // omitted method becomes a singleton, unknown names are dropped
        let r = score_prompt(&open, "m", Some(&ParsedAnswer::Partition(vec![s(&["a", "b", "zz"])]))).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(score_prompt(&open, "m", None).unwrap().value, 0.0);

        let mut ver = synthetic("v".into(), Concept::Coupling, TaskKind::Verification, 1, 10);
        ver.ground_truth = PromptTruth::Assertions {
            pairs: vec![("A".into(), "B".into()), ("A".into(), "C".into())],
            labels: vec![true, false],
        };
        assert_eq!(score_prompt(&ver, "m", Some(&ParsedAnswer::Labels(vec![true, false]))).unwrap().value, 1.0);
        // yes-class F1: tp=1 fp=1 → 2/3
        let r = score_prompt(&ver, "m", Some(&ParsedAnswer::Labels(vec![true, true]))).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_examples() {
        let prompts: Vec<_> = (1..=9)
            .flat_map(|step| {
                (0..2)
                    .map(move |i| synthetic(format!("c{step}-{i}"), Concept::Coupling, TaskKind::Verification, step, 5))
            })
            .collect();
        let scores: Vec<ScoreRecord> = prompts
            .iter()
            .enumerate()
            .map(|(i, p)| ScoreRecord {
                prompt_id: p.id.clone(),
                model_name: "m".into(),
                metric: Metric::F1,
                value: if i % 2 == 0 { 1.0 } else { 0.5 },
                components: Components::F1 { tp: 0, fp: 0, fn_: 0 },
                malformed: false,
            })
            .collect();
        let rows = aggregate(&scores, &prompts, GroupBy::ALL).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.n == 2 && r.mean == 0.75 && r.std == 0.25));
        assert_eq!(rows[2].csv_row()[3], "0.3");

        let single = aggregate(&scores[..1], &prompts, GroupBy::ALL).unwrap();
        assert_eq!((single[0].mean, single[0].n), (1.0, 1));

        let pooled = aggregate(&scores, &prompts, GroupBy { transform_kind: false, distortion: false }).unwrap();
        assert_eq!(pooled.len(), 1);
        assert_eq!(pooled[0].csv_row()[2..4], ["all".to_string(), "all".to_string()]);

        let mut stray = scores[0].clone();
        stray.prompt_id = "ghost".into();
        assert_eq!(aggregate(&[stray], &prompts, GroupBy::ALL), Err(EvalError::DanglingScore("ghost".into())));
    }
}
