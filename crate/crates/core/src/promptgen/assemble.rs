use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    distortion_ratio, render_template, Concept, PromptError, PromptInstance, PromptTruth, Provenance, TaskKind,
    TemplateSet,
};
use crate::corpus::{apply_edits, parse_class_text, SpanEdit};
use crate::sampling::count_tokens;
use crate::transforms::{GroundTruth, MutationKind, MutationRecord};

#[derive(Debug, Clone)]
pub struct PromptContext {
    pub templates: TemplateSet,
    /// Positive (and negative) assertions per verification prompt, at most.
    pub verification_pairs: usize,
}

impl Default for PromptContext {
    fn default() -> Self {
        PromptContext { templates: TemplateSet::default(), verification_pairs: 2 }
    }
}

fn simple(qualified: &str) -> &str {
    qualified.rsplit('.').next().unwrap_or(qualified)
}

/// Up to `k` positives and as many negatives, shuffled together.
fn balanced_assertions(
    positives: &[(String, String)],
    negatives: &[(String, String)],
    k: usize,
    rng: &mut impl Rng,
) -> (Vec<(String, String)>, Vec<bool>) {
    let k = k.min(positives.len()).min(negatives.len());
    let mut items: Vec<((String, String), bool)> = Vec::with_capacity(2 * k);
    for (pool, label) in [(positives, true), (negatives, false)] {
        for i in rand::seq::index::sample(rng, pool.len(), k) {
            let (a, b) = pool[i].clone();
            let pair = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            items.push((pair, label));
        }
    }
    items.shuffle(rng);
    items.into_iter().unzip()
}

fn pair_list(pairs: &[(String, String)]) -> String {
    pairs.iter().enumerate().map(|(i, (a, b))| format!("{}. {a} and {b}", i + 1)).collect::<Vec<_>>().join("\n")
}

fn ensure_closure(prompt: &str, truth: &PromptTruth) -> Result<(), PromptError> {
    for name in truth.entities() {
        let found = prompt.match_indices(name).any(|(i, _)| {
            let word = |c: char| c.is_alphanumeric() || c == '_' || c == '$';
            !prompt[..i].ends_with(word) && !prompt[i + name.len()..].starts_with(word)
        });
        if !found {
            return Err(PromptError::MissingGroundTruthEntity(name.to_string()));
        }
    }
    Ok(())
}

fn finish(
    ctx: &PromptContext,
    concept: Concept,
    task: TaskKind,
    mut bindings: BTreeMap<&'static str, String>,
    code: String,
    truth: &PromptTruth,
) -> Result<String, PromptError> {
    bindings.insert("code", code);
    if let PromptTruth::Assertions { pairs, .. } = truth {
        bindings.insert("pair_list", pair_list(pairs));
    }
    if let PromptTruth::RelatedSet { seed, .. } = truth {
        bindings.insert("seed", seed.clone());
    }
    let text = render_template(ctx.templates.get(concept, task), &bindings)?;
    ensure_closure(&text, truth)?;
    Ok(text)
}

/// Mutated classes plus distractors, in shuffled order, with task-specific truth.
/// `distractors` holds `(qualified name, prepared text)`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_coupling_prompt(
    ctx: &PromptContext,
    id: String,
    record: &MutationRecord,
    distractors: &[(String, String)],
    task: TaskKind,
    requested_ratio: f64,
    shuffle_seed: u64,
) -> Result<PromptInstance, PromptError> {
    let GroundTruth::CoupledPairs { pairs } = &record.ground_truth else {
        return Err(PromptError::WrongRecordKind(record.id.clone()));
    };
    let consumer = record.consumer.as_deref().ok_or_else(|| PromptError::WrongRecordKind(record.id.clone()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);

    let mut items: Vec<(&str, &str)> = record.prompt_classes.iter().map(|(q, t)| (q.as_str(), t.as_str())).collect();
    let n_core = items.len();
    items.extend(distractors.iter().map(|(q, t)| (q.as_str(), t.as_str())));
    let mut seen = BTreeSet::new();
    for (q, _) in &items {
        if !seen.insert(simple(q)) {
            return Err(PromptError::DuplicateName(simple(q).to_string()));
        }
    }
    items.shuffle(&mut rng);

    let truth_pairs: BTreeSet<(String, String)> =
        pairs.iter().map(|(a, b)| crate::transforms::canonical_pair(simple(a).into(), simple(b).into())).collect();
    let truth = match task {
        TaskKind::OpenEndedGeneration => PromptTruth::CoupledPairs { pairs: truth_pairs },
        TaskKind::GuidedGeneration => {
            let seed = simple(consumer).to_string();
            let names = truth_pairs
                .iter()
                .filter_map(|(a, b)| match (a == &seed, b == &seed) {
                    (true, _) => Some(b.clone()),
                    (_, true) => Some(a.clone()),
                    _ => None,
                })
                .collect();
            PromptTruth::RelatedSet { seed, names }
        }
        TaskKind::Verification => {
            let positives: Vec<(String, String)> = truth_pairs.iter().cloned().collect();
            let distractor_names: Vec<&str> = distractors.iter().map(|(q, _)| simple(q)).collect();
            let mut negatives = Vec::new();
            for (i, a) in distractor_names.iter().enumerate() {
                negatives.push(((*a).to_string(), simple(consumer).to_string()));
                for b in &distractor_names[i + 1..] {
                    negatives.push(((*a).to_string(), (*b).to_string()));
                }
            }
            let (pairs, labels) = balanced_assertions(&positives, &negatives, ctx.verification_pairs, &mut rng);
            if pairs.is_empty() {
                return Err(PromptError::ClassTooSmall(consumer.to_string()));
            }
            PromptTruth::Assertions { pairs, labels }
        }
    };

    let code = items.iter().map(|(_, t)| t.trim_end()).collect::<Vec<_>>().join("\n\n");
    let prompt = finish(ctx, Concept::Coupling, task, BTreeMap::new(), code, &truth)?;
    let achieved = distortion_ratio(distractors.len(), n_core + distractors.len())?;
    Ok(PromptInstance {
        id,
        concept: Concept::Coupling,
        task,
        transform_kind: record.kind,
        distortion_requested: requested_ratio,
        distortion_achieved: achieved,
        token_count: count_tokens(&prompt),
        prompt,
        ground_truth: truth,
        shuffle_seed,
        provenance: Provenance {
            project_id: record.project_id.clone(),
            record_id: record.id.clone(),
            distractors: distractors.iter().map(|(q, _)| q.clone()).collect(),
            entities: items.iter().map(|(q, _)| simple(q).to_string()).collect(),
        },
    })
}

/// Permutes method declarations among their own positions in the class body.
pub fn shuffle_methods(class_text: &str, rng: &mut impl Rng) -> Result<String, PromptError> {
    let class = parse_class_text(class_text).map_err(crate::transforms::TransformError::from)?;
    let slots: Vec<_> = class.methods.iter().map(|m| m.decl_span).collect();
    let mut order: Vec<usize> = (0..slots.len()).collect();
    order.shuffle(rng);
    let edits: Vec<SpanEdit> =
        slots.iter().zip(&order).map(|(slot, &from)| SpanEdit::new(*slot, slots[from].slice(class_text))).collect();
    apply_edits(class_text, &edits).map_err(|e| PromptError::Transform(e.into()))
}

pub fn assemble_cohesion_prompt(
    ctx: &PromptContext,
    id: String,
    record: &MutationRecord,
    task: TaskKind,
    shuffle_seed: u64,
) -> Result<PromptInstance, PromptError> {
    let (GroundTruth::MethodPartition { blocks }, Some(name)) = (&record.ground_truth, &record.generated_class) else {
        return Err(PromptError::WrongRecordKind(record.id.clone()));
    };
    if record.kind != MutationKind::Cohesion {
        return Err(PromptError::WrongRecordKind(record.id.clone()));
    }
    let text = record.prompt_classes.get(name).ok_or_else(|| PromptError::WrongRecordKind(record.id.clone()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let code = shuffle_methods(text, &mut rng)?;
    let blocks: Vec<BTreeSet<String>> = blocks.iter().map(|b| b.methods.clone()).collect();

    let truth = match task {
        TaskKind::OpenEndedGeneration => PromptTruth::Partition { blocks: blocks.clone() },
        TaskKind::GuidedGeneration => {
            let seeds: Vec<(&String, &BTreeSet<String>)> =
                blocks.iter().filter(|b| b.len() >= 2).flat_map(|b| b.iter().map(move |m| (m, b))).collect();
            if seeds.is_empty() {
                return Err(PromptError::ClassTooSmall(name.clone()));
            }
            let (seed, block) = seeds[rng.random_range(0..seeds.len())];
            let names = block.iter().filter(|m| *m != seed).cloned().collect();
            PromptTruth::RelatedSet { seed: seed.clone(), names }
        }
        TaskKind::Verification => {
            let mut positives = Vec::new();
            let mut negatives = Vec::new();
            for (i, a) in blocks.iter().enumerate() {
                let a: Vec<&String> = a.iter().collect();
                for (x, m) in a.iter().enumerate() {
                    for n in &a[x + 1..] {
                        positives.push(((*m).clone(), (*n).clone()));
                    }
                    for b in &blocks[i + 1..] {
                        for n in b {
                            negatives.push(((*m).clone(), n.clone()));
                        }
                    }
                }
            }
            if positives.is_empty() || negatives.is_empty() {
                return Err(PromptError::ClassTooSmall(name.clone()));
            }
            let (pairs, labels) = balanced_assertions(&positives, &negatives, ctx.verification_pairs, &mut rng);
            PromptTruth::Assertions { pairs, labels }
        }
    };

    let prompt = finish(ctx, Concept::Cohesion, task, BTreeMap::new(), code, &truth)?;
    let level = (blocks.len() - 1) as f64;
    Ok(PromptInstance {
        id,
        concept: Concept::Cohesion,
        task,
        transform_kind: record.kind,
        distortion_requested: level,
        distortion_achieved: level,
        token_count: count_tokens(&prompt),
        prompt,
        ground_truth: truth,
        shuffle_seed,
        provenance: Provenance {
            project_id: record.project_id.clone(),
            record_id: record.id.clone(),
            distractors: Vec::new(),
            entities: blocks.iter().flatten().cloned().collect(),
        },
    })
}
