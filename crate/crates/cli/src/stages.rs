use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Component, Path, PathBuf};

use designprobe_core::analysis::{
    build_dependency_graph, cohesive_pool, compute_yalcom, find_injection_sites, select_distractors_from,
    CohesionReport, DependencyCluster, DependencyGraph, InjectionSite,
};
use designprobe_core::corpus::{load_project, resolve_hierarchy, ClassKind, ClassModel, SourceProject, TypeHierarchy};
use designprobe_core::evaluation::{aggregate, score_response, EvalError, GroupBy, ScoreRecord, REPORT_COLUMNS};
use designprobe_core::llmclient::{
    read_responses, run_batch, Backend, HttpBackend, InferenceResult, MockBackend, RateLimiter, ResponseLog,
    RetryPolicy, Status,
};
use designprobe_core::promptgen::{
    assemble_cohesion_prompt, assemble_coupling_prompt, distractor_count_for, PromptContext, PromptInstance, TaskKind,
    TemplateSet,
};
use designprobe_core::sampling::{stratified_sample, SampledPrompt};
use designprobe_core::seed::{derive_seed, rng_for};
use designprobe_core::traces::{trace_report, trace_stats, TRACE_REPORT_COLUMNS};
use designprobe_core::transforms::{
    apply_coupling, prepare_distractor, synthesize_incohesive, CohesionInjectionConfig, MutationKind, MutationRecord,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::*;
use crate::config::{hash_json, PipelineConfig};
use crate::{Stage, StageError, StageProduct};

/// The configuration keys a stage's output depends on, hashed into its input fingerprint.
pub(crate) fn settings_fingerprint(stage: Stage, cfg: &PipelineConfig) -> Result<String, StageError> {
    let value = match stage {
        Stage::Ingest => json!({ "corpus": corpus_fingerprint(&cfg.corpus_paths)? }),
        Stage::Analyze => json!({ "emit_graph": cfg.emit_graph }),
        Stage::Mutate => json!({
            "seed": cfg.master_seed,
            "n_per_source": cfg.n_per_source,
            "levels": cfg.cohesion_levels,
            "variants": cfg.cohesion_variants,
        }),
        Stage::GenPrompts => json!({
            "seed": cfg.master_seed,
            "ratios": cfg.coupling_ratios,
            "verification_pairs": cfg.verification_pairs,
            "templates": TemplateSet::load(cfg.template_dir.as_deref())
                .map_err(|e| StageError::ConfigInvalid(e.to_string()))?
                .fingerprint_text(),
        }),
        Stage::Sample => json!({ "seed": cfg.master_seed, "per_cell": cfg.per_cell }),
        Stage::Infer => json!({ "model": cfg.model_spec(), "mock": cfg.mock, "seed": cfg.master_seed }),
        Stage::Evaluate | Stage::TraceStats => json!({}),
    };
    Ok(hash_json(&value))
}

/// Path and content hash of every `.java` file under the corpus roots.
fn corpus_fingerprint(roots: &[PathBuf]) -> Result<Vec<(String, String)>, StageError> {
    let mut out = Vec::new();
    for root in roots {
        if !root.is_dir() {
            return Err(StageError::MissingInputs(vec![root.clone()]));
        }
        for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(|e| StageError::Failed(e.to_string()))?;
            if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "java") {
                out.push((entry.path().display().to_string(), file_sha256(entry.path())?));
            }
        }
    }
    Ok(out)
}

pub(crate) fn run(stage: Stage, cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    match stage {
        Stage::Ingest => ingest(cfg),
        Stage::Analyze => analyze(cfg),
        Stage::Mutate => mutate(cfg),
        Stage::GenPrompts => gen_prompts(cfg),
        Stage::Sample => sample(cfg),
        Stage::Infer => infer(cfg),
        Stage::Evaluate => evaluate(cfg),
        Stage::TraceStats => traces(cfg),
    }
}

fn product(outputs: Vec<&'static str>, summary: String) -> StageProduct {
    StageProduct { outputs, complete: true, summary }
}

fn ingest(cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    let mut projects = Vec::new();
    for root in &cfg.corpus_paths {
        let project = load_project(root).map_err(|e| StageError::Failed(e.to_string()))?;
        resolve_hierarchy(&project).map_err(|e| StageError::Failed(format!("{}: {e}", project.id)))?;
        projects.push(project);
    }
    let out = &cfg.output_dir;
    write_json(&out.join(CORPUS), &projects)?;
    let skipped: String = projects.iter().map(SourceProject::skipped_listing).collect();
    std::fs::write(out.join(SKIPPED_UNITS), skipped)?;
    let classes: usize = projects.iter().map(|p| p.classes().count()).sum();
    let skipped: usize = projects.iter().map(|p| p.skipped.len()).sum();
    Ok(product(
        vec![CORPUS, SKIPPED_UNITS],
        format!("{} projects, {classes} classes, {skipped} units skipped", projects.len()),
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectAnalysis {
    pub project_id: String,
    pub graph: DependencyGraph,
    pub clusters: Vec<DependencyCluster>,
    pub injection_sites: Vec<InjectionSite>,
    pub cohesion: Vec<CohesionReport>,
    /// Qualified names of fully cohesive concrete classes, sorted.
    pub cohesive_pool: Vec<String>,
}

fn load_inputs(cfg: &PipelineConfig) -> Result<(Vec<SourceProject>, Vec<ProjectAnalysis>), StageError> {
    let projects: Vec<SourceProject> = read_json(&cfg.output_dir.join(CORPUS))?;
    let analyses: Vec<ProjectAnalysis> = read_json(&cfg.output_dir.join(ANALYSIS))?;
    if projects.len() != analyses.len() || projects.iter().zip(&analyses).any(|(p, a)| p.id != a.project_id) {
        return Err(StageError::Failed(format!("{ANALYSIS} does not match {CORPUS}; rerun analyze")));
    }
    Ok((projects, analyses))
}

fn hierarchy(project: &SourceProject) -> Result<TypeHierarchy, StageError> {
    resolve_hierarchy(project).map_err(|e| StageError::Failed(format!("{}: {e}", project.id)))
}

fn analyze(cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    let projects: Vec<SourceProject> = read_json(&cfg.output_dir.join(CORPUS))?;
    let mut analyses = Vec::new();
    for project in &projects {
        let h = hierarchy(project)?;
        let graph = build_dependency_graph(project);
        let mut pool: Vec<String> = cohesive_pool(project).into_iter().map(|c| c.qualified_name.clone()).collect();
        pool.sort();
        analyses.push(ProjectAnalysis {
            project_id: project.id.clone(),
            clusters: graph.clusters(),
            injection_sites: find_injection_sites(project, &h),
            cohesion: project.classes().filter_map(|c| compute_yalcom(c).ok()).collect(),
            cohesive_pool: pool,
            graph,
        });
    }
    let out = &cfg.output_dir;
    write_json(&out.join(ANALYSIS), &analyses)?;
    let mut outputs = vec![ANALYSIS];
    if cfg.emit_graph {
        let mut tsv = String::from("project\tfrom\tto\tkind\n");
        for a in &analyses {
            for line in a.graph.to_edge_list().lines() {
                tsv.push_str(&format!("{}\t{line}\n", a.project_id));
            }
        }
        std::fs::write(out.join(GRAPH), tsv)?;
        outputs.push(GRAPH);
    }
    let sites: usize = analyses.iter().map(|a| a.injection_sites.len()).sum();
    let pool: usize = analyses.iter().map(|a| a.cohesive_pool.len()).sum();
    Ok(product(outputs, format!("{sites} injection sites, {pool} classes in the cohesive pool")))
}

#[derive(Debug, Serialize)]
struct Failure {
    project_id: String,
    what: String,
    error: String,
}

const COHESION_ATTEMPTS: usize = 20;

/// Outcome of one independent job; jobs run in parallel and are collected in order.
type Job<T> = Result<T, Failure>;

fn split<T>(results: Vec<Vec<Job<T>>>) -> (Vec<T>, Vec<Failure>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for r in results.into_iter().flatten() {
        match r {
            Ok(v) => ok.push(v),
            Err(f) => failed.push(f),
        }
    }
    (ok, failed)
}

fn mutate(cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    let (projects, analyses) = load_inputs(cfg)?;
    let mut results: Vec<Vec<Job<MutationRecord>>> = Vec::new();
    for (project, analysis) in projects.iter().zip(&analyses) {
        let h = hierarchy(project)?;
        let fail = |what: String, error: String| Failure { project_id: project.id.clone(), what, error };

        results.extend(
            analysis
                .injection_sites
                .par_iter()
                .map(|site| {
                    MutationKind::COUPLING
                        .into_iter()
                        .map(|kind| {
                            let label = format!(
                                "mutate/{}/{}/{}/{}",
                                project.id,
                                kind.as_str(),
                                site.class_name,
                                site.callable_id
                            );
                            apply_coupling(kind, project, &h, site, derive_seed(cfg.master_seed, &label)).map_err(|e| {
                                fail(
                                    format!("{} {}::{}", kind.as_str(), site.class_name, site.callable_id),
                                    e.to_string(),
                                )
                            })
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        );

        let pool: Vec<_> = analysis.cohesive_pool.iter().filter_map(|q| project.class(q)).collect();
        let jobs: Vec<(usize, usize, &ClassModel)> = cfg
            .cohesion_levels
            .iter()
            .flat_map(|&level| (0..cfg.cohesion_variants).map(move |v| (level, v)))
            .flat_map(|(level, v)| pool.iter().map(move |&t| (level, v, t)))
            .collect();
        results.extend(
            jobs.par_iter()
                .map(|&(level, variant, target)| {
                    let what = || format!("cohesion level {level} target {}", target.qualified_name);
                    let label = format!("cohesion/{}/{}/{level}/{variant}", project.id, target.qualified_name);
                    let mut rng = rng_for(cfg.master_seed, &label);
                    let candidates: Vec<_> = pool
                        .iter()
                        .filter(|c| c.qualified_name != target.qualified_name)
                        .filter(|c| !h.shares_ancestor(&c.qualified_name, &target.qualified_name))
                        .copied()
                        .collect();
                    if candidates.len() < level {
                        return vec![Err(fail(what(), format!("only {} source candidates", candidates.len())))];
                    }
                    let mut last_error = String::new();
                    for _ in 0..COHESION_ATTEMPTS {
                        let sources: Vec<_> = rand::seq::index::sample(&mut rng, candidates.len(), level)
                            .into_iter()
                            .map(|i| candidates[i])
                            .collect();
                        let mut inj = CohesionInjectionConfig::new(level, rng.random());
                        inj.n_per_source = cfg.n_per_source;
                        match synthesize_incohesive(&project.id, target, &sources, &inj, &h) {
                            Ok(r) => return vec![Ok(r)],
                            Err(e) => last_error = e.to_string(),
                        }
                    }
                    vec![Err(fail(what(), last_error))]
                })
                .collect::<Vec<_>>(),
        );
    }
    let (records, failures) = split(results);
    let out = &cfg.output_dir;
    write_jsonl(&out.join(MUTATIONS), &records)?;
    write_mutation_dirs(&out.join(MUTATION_DIR), &records)?;
    write_jsonl(&out.join(MUTATION_LOG), &failures)?;
    let coupling = records.iter().filter(|r| r.kind.is_coupling()).count();
    Ok(product(
        vec![MUTATIONS, MUTATION_LOG],
        format!("{coupling} coupling and {} cohesion records, {} failures", records.len() - coupling, failures.len()),
    ))
}

/// `<dir>/<record-id>/` holding each edited unit at its project-relative path plus `record.json`.
fn write_mutation_dirs(dir: &Path, records: &[MutationRecord]) -> Result<(), StageError> {
    if dir.exists() {
        std::fs::remove_dir_all(dir)?;
    }
    for r in records {
        let root = dir.join(&r.id);
        for (path, text) in &r.edited_units {
            let rel: PathBuf = path.components().filter(|c| matches!(c, Component::Normal(_))).collect();
            let target = root.join(rel);
            std::fs::create_dir_all(target.parent().unwrap_or(&root))?;
            std::fs::write(target, text)?;
        }
        std::fs::create_dir_all(&root)?;
        write_json(&root.join("record.json"), r)?;
    }
    Ok(())
}

fn simple(q: &str) -> &str {
    q.rsplit('.').next().unwrap_or(q)
}

fn task_slug(task: TaskKind) -> &'static str {
    match task {
        TaskKind::Verification => "ver",
        TaskKind::GuidedGeneration => "gui",
        TaskKind::OpenEndedGeneration => "ope",
    }
}

fn distractor_candidate(c: &ClassModel) -> bool {
    !c.is_test && !matches!(c.kind, ClassKind::Interface | ClassKind::AbstractClass)
}

fn gen_prompts(cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    let (projects, analyses) = load_inputs(cfg)?;
    let records: Vec<MutationRecord> = read_jsonl(&cfg.output_dir.join(MUTATIONS))?;
    let templates =
        TemplateSet::load(cfg.template_dir.as_deref()).map_err(|e| StageError::ConfigInvalid(e.to_string()))?;
    let ctx = PromptContext { templates, verification_pairs: cfg.verification_pairs };

    // Prompt-ready text of every class that may serve as a distractor, keyed by project.
    let mut distractor_text: HashMap<&str, HashMap<&str, String>> = HashMap::new();
    for project in &projects {
        let candidates: Vec<&ClassModel> = project.classes().filter(|c| distractor_candidate(c)).collect();
        let texts = candidates
            .par_iter()
            .map(|c| {
                prepare_distractor(c)
                    .map(|t| (c.qualified_name.as_str(), t))
                    .map_err(|e| StageError::Failed(format!("{}: {e}", c.qualified_name)))
            })
            .collect::<Result<HashMap<_, _>, _>>()?;
        distractor_text.insert(project.id.as_str(), texts);
    }
    let by_id: HashMap<&str, (&SourceProject, &ProjectAnalysis)> =
        projects.iter().zip(&analyses).map(|(p, a)| (p.id.as_str(), (p, a))).collect();
    if let Some(r) = records.iter().find(|r| !by_id.contains_key(r.project_id.as_str())) {
        return Err(StageError::Failed(format!("record {} names unknown project {}", r.id, r.project_id)));
    }

    let results: Vec<Vec<Job<PromptInstance>>> = records
        .par_iter()
        .map(|record| {
            let (project, analysis) = by_id[record.project_id.as_str()];
            let texts = &distractor_text[project.id.as_str()];
            let fail = |what: String, e: &dyn std::fmt::Display| Failure {
                project_id: project.id.clone(),
                what,
                error: e.to_string(),
            };
            let mut out = Vec::new();
            if !record.kind.is_coupling() {
                for task in TaskKind::ALL {
                    let id = format!("{}-{}", record.id, task_slug(task));
                    let seed = derive_seed(cfg.master_seed, &format!("shuffle/{id}"));
                    out.push(assemble_cohesion_prompt(&ctx, id.clone(), record, task, seed).map_err(|e| fail(id, &e)));
                }
                return out;
            }

            let core_names: BTreeSet<&str> = record.prompt_classes.keys().map(|q| simple(q)).collect();
            let mutated: BTreeSet<String> = record.touched_classes.iter().cloned().collect();
            let eligible = |q: &str| {
                project
                    .class(q)
                    .is_some_and(|c| distractor_candidate(c) && !core_names.contains(c.simple_name.as_str()))
            };
            for &ratio in &cfg.coupling_ratios {
                let step = (ratio * 10.0).round() as u32;
                let (want, _) = distractor_count_for(ratio, record.prompt_classes.len());
                let mut rng = rng_for(cfg.master_seed, &format!("distractors/{}/{step}", record.id));
                let picked = match select_distractors_from(
                    &analysis.graph,
                    &analysis.clusters,
                    &mutated,
                    want,
                    eligible,
                    &mut rng,
                ) {
                    Ok(p) => p,
                    Err(e) => {
                        out.push(Err(fail(format!("{} ratio {ratio}", record.id), &e)));
                        continue;
                    }
                };
                let distractors: Vec<(String, String)> = picked
                    .into_iter()
                    .map(|q| {
                        let text = texts[q.as_str()].clone();
                        (q, text)
                    })
                    .collect();
                for task in TaskKind::ALL {
                    let id = format!("{}-r{step}-{}", record.id, task_slug(task));
                    let seed = derive_seed(cfg.master_seed, &format!("shuffle/{id}"));
                    out.push(
                        assemble_coupling_prompt(&ctx, id.clone(), record, &distractors, task, ratio, seed)
                            .map_err(|e| fail(id, &e)),
                    );
                }
            }
            out
        })
        .collect();
    let (prompts, shortfalls) = split(results);

    let out = &cfg.output_dir;
    write_jsonl(&out.join(PROMPTS), &prompts)?;
    write_jsonl(&out.join(PROMPT_LOG), &shortfalls)?;
    Ok(product(vec![PROMPTS, PROMPT_LOG], format!("{} prompts, {} shortfalls", prompts.len(), shortfalls.len())))
}

fn sample(cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    let pool: Vec<PromptInstance> = read_jsonl(&cfg.output_dir.join(PROMPTS))?;
    let mut rng = rng_for(cfg.master_seed, "sample");
    let (drawn, report) =
        stratified_sample(&pool, cfg.per_cell, &mut rng).map_err(|e| StageError::Failed(e.to_string()))?;
    write_jsonl(&cfg.output_dir.join(SAMPLE), &drawn)?;
    write_json(&cfg.output_dir.join(SAMPLING_REPORT), &report)?;
    Ok(product(
        vec![SAMPLE, SAMPLING_REPORT],
        format!("{} prompts drawn, {} under-full cells", report.total_sampled, report.underfull_cells),
    ))
}

fn load_sample(cfg: &PipelineConfig) -> Result<Vec<PromptInstance>, StageError> {
    let sampled: Vec<SampledPrompt> = read_jsonl(&cfg.output_dir.join(SAMPLE))?;
    Ok(sampled.into_iter().map(|s| s.prompt).collect())
}

fn infer(cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    let prompts = load_sample(cfg)?;
    let spec = cfg.model_spec();
    let backend: Box<dyn Backend> = match cfg.mock {
        Some(mode) => Box::new(MockBackend::new(mode, derive_seed(cfg.master_seed, "mock"))),
        None => Box::new(HttpBackend::new(&spec).map_err(|e| StageError::ConfigInvalid(e.to_string()))?),
    };
    let mut log = ResponseLog::open(&cfg.output_dir.join(RESPONSES), &spec.model_name)?;
    let limiter = RateLimiter::per_minute(spec.rate_limit_per_minute);
    let summary = run_batch(&prompts, &spec, backend.as_ref(), &RetryPolicy::default(), &limiter, &mut log)?;
    Ok(StageProduct {
        outputs: vec![RESPONSES],
        complete: summary.failed == 0,
        summary: format!(
            "{}: {} ok, {} malformed, {} transport failures, {} already done",
            spec.model_name, summary.ok, summary.malformed, summary.failed, summary.skipped
        ),
    })
}

/// Responses for prompts in the sample, excluding transport failures.
fn sampled_responses(
    cfg: &PipelineConfig,
    prompts: &[PromptInstance],
) -> Result<Vec<(InferenceResult, usize)>, StageError> {
    let index: BTreeMap<&str, usize> = prompts.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let mut out = Vec::new();
    let mut failed = 0;
    for r in read_responses(&cfg.output_dir.join(RESPONSES))? {
        let Some(&i) = index.get(r.prompt_id.as_str()) else { continue };
        if r.status == Status::TransportFailure {
            failed += 1;
            continue;
        }
        out.push((r, i));
    }
    if failed > 0 {
        tracing::warn!(failed, "responses with transport failures are left unscored; rerun infer");
    }
    Ok(out)
}

fn evaluate(cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    let prompts = load_sample(cfg)?;
    let responses = sampled_responses(cfg, &prompts)?;
    let scores: Vec<ScoreRecord> = responses
        .iter()
        .map(|(r, i)| score_response(&prompts[*i], r))
        .collect::<Result<_, EvalError>>()
        .map_err(|e| StageError::Failed(e.to_string()))?;
    let out = &cfg.output_dir;
    write_jsonl(&out.join(SCORES), &scores)?;
    let fail = |e: EvalError| StageError::Failed(e.to_string());
    let full = aggregate(&scores, &prompts, GroupBy::ALL).map_err(fail)?;
    write_csv(&out.join(REPORT), &REPORT_COLUMNS, full.iter().map(|r| r.csv_row()))?;
    let pooled = aggregate(&scores, &prompts, GroupBy { transform_kind: false, distortion: true }).map_err(fail)?;
    write_csv(&out.join(REPORT_POOLED), &REPORT_COLUMNS, pooled.iter().map(|r| r.csv_row()))?;
    let malformed = scores.iter().filter(|s| s.malformed).count();
    Ok(product(
        vec![SCORES, REPORT, REPORT_POOLED],
        format!("{} scores ({malformed} malformed), {} strata", scores.len(), full.len()),
    ))
}

fn traces(cfg: &PipelineConfig) -> Result<StageProduct, StageError> {
    let prompts = load_sample(cfg)?;
    let responses = sampled_responses(cfg, &prompts)?;
    let stats = responses
        .iter()
        .map(|(r, i)| trace_stats(r, &prompts[*i]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| StageError::Failed(e.to_string()))?;
    let rows = trace_report(&stats, &prompts).map_err(|e| StageError::Failed(e.to_string()))?;
    let out = &cfg.output_dir;
    write_jsonl(&out.join(TRACE_STATS), &stats)?;
    write_csv(&out.join(TRACE_REPORT), &TRACE_REPORT_COLUMNS, rows.iter().map(|r| r.csv_row()))?;
    Ok(product(vec![TRACE_STATS, TRACE_REPORT], format!("{} traces, {} groups", stats.len(), rows.len())))
}
