//! Length-stratified sampling over the task × distortion × length-bin grid.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::promptgen::{Concept, PromptInstance, TaskKind};

/// Maximal runs of alphanumeric/underscore characters count once each; every
/// other non-whitespace character counts on its own.
pub fn count_tokens(text: &str) -> usize {
    let mut count = 0;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            if !in_word {
                count += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if !c.is_whitespace() {
                count += 1;
            }
        }
    }
    count
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SamplingError {
    #[error("cannot compute quartiles of an empty population")]
    EmptyPopulation,
}

/// 25th, 50th and 75th percentiles with linear interpolation between order statistics.
pub fn quartiles(counts: &[usize]) -> Result<(f64, f64, f64), SamplingError> {
    if counts.is_empty() {
        return Err(SamplingError::EmptyPopulation);
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let at = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(sorted.len() - 1);
        let frac = pos - lo as f64;
        sorted[lo] as f64 + frac * (sorted[hi] as f64 - sorted[lo] as f64)
    };
    Ok((at(0.25), at(0.5), at(0.75)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Quartiles {
    /// 1: below Q1; 2: [Q1, Q2]; 3: (Q2, Q3]; 4: above Q3.
    pub fn bin(&self, tokens: usize) -> u8 {
        let t = tokens as f64;
        if t < self.q1 {
            1
        } else if t <= self.q2 {
            2
        } else if t <= self.q3 {
            3
        } else {
            4
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub concept: Concept,
    pub task: TaskKind,
    /// Tenths of the coupling ratio, or the cohesion level.
    pub distortion: u32,
    pub bin: u8,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}/{}", self.concept, self.task, self.distortion, self.bin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    /// Quartiles are global within each concept's population.
    pub quartiles: BTreeMap<Concept, Quartiles>,
    pub per_cell: usize,
    /// Cell → ids of every candidate prompt in it.
    pub cells: BTreeMap<CellKey, Vec<String>>,
}

impl SamplingGrid {
    pub fn build(pool: &[PromptInstance], per_cell: usize) -> Result<Self, SamplingError> {
        let mut quartile_map = BTreeMap::new();
        for concept in Concept::ALL {
            let counts: Vec<usize> = pool.iter().filter(|p| p.concept == concept).map(|p| p.token_count).collect();
            if counts.is_empty() {
                continue;
            }
            let (q1, q2, q3) = quartiles(&counts)?;
            quartile_map.insert(concept, Quartiles { q1, q2, q3 });
        }
        if quartile_map.is_empty() {
            return Err(SamplingError::EmptyPopulation);
        }
        let mut grid = SamplingGrid { quartiles: quartile_map, per_cell, cells: BTreeMap::new() };
        for p in pool {
            let key = grid.cell_of(p);
            grid.cells.entry(key).or_default().push(p.id.clone());
        }
        for ids in grid.cells.values_mut() {
            ids.sort();
        }
        Ok(grid)
    }

    pub fn cell_of(&self, p: &PromptInstance) -> CellKey {
        CellKey {
            concept: p.concept,
            task: p.task,
            distortion: p.distortion_step(),
            bin: self.quartiles[&p.concept].bin(p.token_count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPrompt {
    #[serde(flatten)]
    pub prompt: PromptInstance,
    pub bin_index: u8,
    pub cell_key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFill {
    pub cell: String,
    pub available: usize,
    pub drawn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub quartiles: BTreeMap<Concept, Quartiles>,
    pub per_cell: usize,
    pub total_sampled: usize,
    pub cells: Vec<CellFill>,
    pub underfull_cells: usize,
}

/// Draws `min(per_cell, |cell|)` prompts without replacement from every cell.
/// Output is ordered by cell key, then prompt id.
pub fn stratified_sample<R: Rng + ?Sized>(
    pool: &[PromptInstance],
    per_cell: usize,
    rng: &mut R,
) -> Result<(Vec<SampledPrompt>, SamplingReport), SamplingError> {
    let grid = SamplingGrid::build(pool, per_cell)?;
    let by_id: BTreeMap<&str, &PromptInstance> = pool.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut out = Vec::new();
    let mut fills = Vec::new();
    for (key, ids) in &grid.cells {
        let take = per_cell.min(ids.len());
        if take < per_cell {
            tracing::warn!(cell = %key, available = ids.len(), per_cell, "under-full sampling cell");
        }
        let mut picked: Vec<&String> =
            rand::seq::index::sample(rng, ids.len(), take).into_iter().map(|i| &ids[i]).collect();
        picked.sort();
        for id in picked {
            out.push(SampledPrompt {
                prompt: by_id[id.as_str()].clone(),
                bin_index: key.bin,
                cell_key: key.to_string(),
            });
        }
        fills.push(CellFill { cell: key.to_string(), available: ids.len(), drawn: take });
    }
    let report = SamplingReport {
        quartiles: grid.quartiles.clone(),
        per_cell,
        total_sampled: out.len(),
        underfull_cells: fills.iter().filter(|f| f.drawn < per_cell).count(),
        cells: fills,
    };
    Ok((out, report))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::promptgen::{PromptTruth, Provenance};
    use crate::transforms::MutationKind;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn synthetic(id: String, concept: Concept, task: TaskKind, step: u32, tokens: usize) -> PromptInstance {
        let distortion = match concept {
            Concept::Coupling => step as f64 / 10.0,
            Concept::Cohesion => step as f64,
        };
        PromptInstance {
            id,
            concept,
            task,
            transform_kind: MutationKind::Did,
            distortion_requested: distortion,
            distortion_achieved: distortion,
            prompt: String::new(),
            ground_truth: PromptTruth::CoupledPairs { pairs: Default::default() },
            token_count: tokens,
            shuffle_seed: 0,
            provenance: Provenance {
                project_id: "p".into(),
                record_id: "r".into(),
                distractors: vec![],
                entities: vec![],
            },
        }
    }

    /// Every (task, step) gets `per` prompts with token counts 1..=per, which puts
    /// exactly per/4 of them in each length bin.
    pub(crate) fn full_grid(concept: Concept, per: usize) -> Vec<PromptInstance> {
        let mut pool = Vec::new();
        for task in TaskKind::ALL {
            for step in 1..=9 {
                for t in 1..=per {
                    pool.push(synthetic(format!("{concept}-{task}-{step}-{t:04}"), concept, task, step, t));
                }
            }
        }
        pool
    }

    #[test]
    fn token_examples() {
        assert_eq!(count_tokens(""), 0);
        // hand split: class | Foo | { | }
        assert_eq!(count_tokens("class Foo { }"), 4);
        assert_eq!(count_tokens("a.b(c_d);"), 7);
        let s = "int x = 42;";
        assert_eq!(count_tokens(s), count_tokens(s));
    }

    #[test]
    fn quartile_examples() {
        assert_eq!(quartiles(&[10, 20, 30, 40]), Ok((17.5, 25.0, 32.5)));
        assert_eq!(quartiles(&[5, 5, 5, 5]), Ok((5.0, 5.0, 5.0)));
        assert_eq!(quartiles(&[7]), Ok((7.0, 7.0, 7.0)));
        assert_eq!(quartiles(&[]), Err(SamplingError::EmptyPopulation));
    }

    #[test]
    fn boundary_bins() {
        let q = Quartiles { q1: 10.0, q2: 20.0, q3: 30.0 };
        assert_eq!([9, 10, 20, 21, 30, 31].map(|t| q.bin(t)), [1, 2, 2, 3, 3, 4]);
    }

    #[test]
    fn full_grid_sizes() {
        let pool = full_grid(Concept::Coupling, 400);
        let (s, report) = stratified_sample(&pool, 100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.len(), 3 * 9 * 4 * 100);
        assert_eq!(report.underfull_cells, 0);
        let (s, _) = stratified_sample(&pool, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.len(), 216);
    }

    #[test]
    fn shortfall_draws_everything() {
        let pool: Vec<_> =
            (0..40).map(|i| synthetic(format!("p{i:02}"), Concept::Cohesion, TaskKind::Verification, 3, 50)).collect();
        let (s, report) = stratified_sample(&pool, 100, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.len(), 40);
        assert_eq!(report.underfull_cells, 1);
    }

    proptest! {
        #[test]
        fn sample_respects_cells(tokens in proptest::collection::vec(1usize..500, 1..120), per in 1usize..6, seed: u64) {
            let pool: Vec<_> = tokens
                .iter()
                .enumerate()
                .map(|(i, t)| synthetic(format!("p{i:03}"), Concept::Coupling, TaskKind::ALL[i % 3], (i % 9) as u32 + 1, *t))
                .collect();
            let (a, _) = stratified_sample(&pool, per, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let (b, _) = stratified_sample(&pool, per, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            let grid = SamplingGrid::build(&pool, per).unwrap();
            let mut seen = std::collections::BTreeSet::new();
            let mut per_cell_count: BTreeMap<String, usize> = BTreeMap::new();
            for s in &a {
                prop_assert!(seen.insert(s.prompt.id.clone()));
                let key = grid.cell_of(&s.prompt);
                prop_assert_eq!(key.to_string(), s.cell_key.clone());
                prop_assert_eq!(key.bin, s.bin_index);
                *per_cell_count.entry(s.cell_key.clone()).or_default() += 1;
            }
            prop_assert!(per_cell_count.values().all(|&n| n <= per));
        }
    }
}
