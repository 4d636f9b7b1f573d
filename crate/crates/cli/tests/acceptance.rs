//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest
//! harness so the lines are printed on success too.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use designprobe_cli::artifacts::*;
use designprobe_cli::{run_stage, PipelineConfig, ProjectAnalysis, Stage};
use designprobe_core::analysis::{compute_yalcom, find_injection_sites, method_graph, DependencyGraph};
use designprobe_core::corpus::{parse_unit, resolve_hierarchy, SourceProject};
use designprobe_core::evaluation::{ari, Metric, ScoreRecord};
use designprobe_core::llmclient::MockMode;
use designprobe_core::promptgen::{Concept, PromptInstance, TaskKind};
use designprobe_core::sampling::{stratified_sample, SampledPrompt};
use designprobe_core::seed::rng_for;
use designprobe_core::traces::entity_coverage;
use designprobe_core::transforms::{apply_coupling, object_creations_of, GroundTruth, MutationKind, MutationRecord};
use rand::Rng;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus/shop")
}

fn config(out: &Path, mock: MockMode) -> PipelineConfig {
    PipelineConfig {
        corpus_paths: vec![fixture()],
        output_dir: out.to_path_buf(),
        mock: Some(mock),
        per_cell: 100,
        ..PipelineConfig::default()
    }
}

fn run_through(cfg: &PipelineConfig, last: Stage) {
    for stage in Stage::ALL.into_iter().take_while(|s| *s <= last) {
        run_stage(stage, cfg).unwrap_or_else(|e| panic!("{}: {e}", stage.name()));
    }
}

static SHARED: OnceLock<(tempfile::TempDir, Duration)> = OnceLock::new();

/// One full oracle run followed by a random-mock run into the same directory.
fn shared_run() -> &'static Path {
    SHARED
        .get_or_init(|| {
            let start = Instant::now();
            let dir = tempfile::tempdir().unwrap();
            run_through(&config(dir.path(), MockMode::Oracle), Stage::TraceStats);
            run_through(&config(dir.path(), MockMode::Random), Stage::TraceStats);
            (dir, start.elapsed())
        })
        .0
        .path()
}

fn jsonl<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Vec<T> {
    read_jsonl(&dir.join(name)).unwrap()
}

fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    reader.records().map(|r| header.iter().cloned().zip(r.unwrap().iter().map(String::from)).collect()).collect()
}

// 1

fn grid_arithmetic() {
    let dir = shared_run();
    let pool: Vec<PromptInstance> = jsonl(dir, PROMPTS);

    // A pool where every (concept, task, step, bin) cell holds exactly 100 prompts:
    // token counts 1..=400 per (concept, task, step) put 100 in each quartile bin.
    let templates: BTreeMap<(Concept, TaskKind), &PromptInstance> =
        pool.iter().map(|p| ((p.concept, p.task), p)).collect();
    assert_eq!(templates.len(), 6);
    let mut full = Vec::new();
    for (&(concept, task), &base) in &templates {
        for step in 1..=9u32 {
            for tokens in 1..=400usize {
                let mut p = base.clone();
                p.id = format!("{concept}-{task}-{step}-{tokens}");
                p.distortion_requested = match concept {
                    Concept::Coupling => step as f64 / 10.0,
                    Concept::Cohesion => step as f64,
                };
                p.token_count = tokens;
                full.push(p);
            }
        }
    }
    for (per_cell, expected) in [(100, 10_800), (2, 216)] {
        let start = Instant::now();
        let (drawn, report) = stratified_sample(&full, per_cell, &mut rng_for(1, "grid")).unwrap();
        assert!(start.elapsed() < Duration::from_secs(10));
        assert_eq!(report.underfull_cells, 0);
        for concept in [Concept::Coupling, Concept::Cohesion] {
            let n = drawn.iter().filter(|s| s.prompt.concept == concept).count();
            assert_eq!(n, expected, "{concept} per_cell={per_cell}");
        }
    }

    // The fixture pool cannot fill every cell; each cell yields min(per_cell, available).
    let start = Instant::now();
    let (drawn, report) = stratified_sample(&pool, 2, &mut rng_for(1, "grid")).unwrap();
    assert!(start.elapsed() < Duration::from_secs(10));
    let expected: usize = report.cells.iter().map(|c| c.available.min(2)).sum();
    assert_eq!(drawn.len(), expected);
    assert!(drawn.len() <= 2 * 216);
}

// 2

fn transformation_soundness() {
    let dir = shared_run();
    let projects: Vec<SourceProject> = read_json(&dir.join(CORPUS)).unwrap();
    let project = &projects[0];
    let records: Vec<MutationRecord> = jsonl(dir, MUTATIONS);
    let failures = std::fs::read_to_string(dir.join(MUTATION_LOG)).unwrap();
    assert!(failures.trim().is_empty(), "mutation failures:\n{failures}");

    let mut per_kind: BTreeMap<MutationKind, usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.kind.is_coupling()) {
        *per_kind.entry(r.kind).or_default() += 1;
        let consumer_name = r.consumer.as_deref().unwrap();
        let mut consumer = None;
        for (path, text) in &r.edited_units {
            let classes = parse_unit(path, text).unwrap_or_else(|e| panic!("{} {}: {e}", r.id, path.display()));
            consumer = consumer.or_else(|| classes.into_iter().find(|c| c.qualified_name == consumer_name));
        }
        let consumer = consumer.unwrap_or_else(|| panic!("{}: consumer not in edited units", r.id));
        let mutated = consumer.callable(r.mutated_callable.as_ref().unwrap()).unwrap();
        let original = project.class(consumer_name).unwrap();
        let site = original.callable(r.site.as_ref().unwrap()).unwrap();
        match r.kind {
            MutationKind::Did => assert!(mutated.parameters.is_empty(), "{}", r.id),
            MutationKind::Uid => {
                let sig = |text: &str, m: &designprobe_core::corpus::MethodModel| {
                    text[m.decl_span.start..m.body_span.unwrap().start].to_string()
                };
                assert_eq!(sig(&consumer.text, mutated), sig(&original.text, site), "{}", r.id);
            }
            MutationKind::Idd => {
                let implementors: BTreeSet<&str> = r
                    .chosen_implementations
                    .values()
                    .flat_map(|q| [q.as_str(), q.rsplit('.').next().unwrap()])
                    .collect();
                assert!(!implementors.is_empty());
                let created: Vec<String> = object_creations_of(&consumer.text).into_iter().map(|(t, _)| t).collect();
                assert!(created.iter().all(|t| !implementors.contains(t.as_str())), "{}: {created:?}", r.id);
            }
            MutationKind::Cohesion => unreachable!(),
        }
    }
    for kind in MutationKind::COUPLING {
        assert!(per_kind.get(&kind).copied().unwrap_or(0) > 0, "no {} records", kind.as_str());
    }

    // Every site and kind succeeds when applied directly, within the time budget.
    let start = Instant::now();
    let hierarchy = resolve_hierarchy(project).unwrap();
    let sites = find_injection_sites(project, &hierarchy);
    for site in &sites {
        for kind in MutationKind::COUPLING {
            apply_coupling(kind, project, &hierarchy, site, 11).unwrap();
        }
    }
    assert_eq!(per_kind.values().sum::<usize>(), 3 * sites.len());
    assert!(start.elapsed() < Duration::from_secs(30));
}

// 3

fn cohesion_synthesis() {
    let dir = shared_run();
    let records: Vec<MutationRecord> = jsonl(dir, MUTATIONS);
    let prompts: Vec<PromptInstance> = jsonl(dir, PROMPTS);
    let level_of: BTreeMap<&str, u32> = prompts
        .iter()
        .filter(|p| p.concept == Concept::Cohesion)
        .map(|p| (p.provenance.record_id.as_str(), p.distortion_step()))
        .collect();
    let mut levels = BTreeSet::new();
    for r in records.iter().filter(|r| r.kind == MutationKind::Cohesion) {
        let level = level_of[r.id.as_str()] as usize;
        levels.insert(level);
        let name = r.generated_class.as_deref().unwrap();
        let suffix = name.strip_prefix("GeneratedClass").unwrap();
        assert!(suffix.len() == 8 && suffix.chars().all(|c| matches!(c, '0'..='9' | 'a'..='f')), "{name}");

        let (path, text) = r.edited_units.iter().next().unwrap();
        let class = parse_unit(path, text).unwrap().remove(0);
        let report = compute_yalcom(&class).unwrap();
        assert!(report.component_count() > level, "{} level {level}: {} components", r.id, report.component_count());
        assert!(report.yalcom > 0.0);

        let GroundTruth::MethodPartition { blocks } = &r.ground_truth else { panic!("{}", r.id) };
        assert_eq!(blocks.len(), level + 1);
        let block_of: BTreeMap<&str, usize> =
            blocks.iter().enumerate().flat_map(|(i, b)| b.methods.iter().map(move |m| (m.as_str(), i))).collect();
        let graph = method_graph(&class);
        for &(a, b) in &graph.edges {
            let (ma, mb) = (graph.methods[a].name.as_str(), graph.methods[b].name.as_str());
            assert_eq!(block_of.get(ma), block_of.get(mb), "{}: cross-block edge {ma} - {mb}", r.id);
        }
    }
    assert_eq!(levels, (1..=9).collect());
}

// 4

/// Pair-counting ARI, written independently of the contingency form.
fn brute_ari(a: &[usize], b: &[usize]) -> f64 {
    let (mut both, mut neither, mut only_a, mut only_b) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => both += 1.0,
                (false, false) => neither += 1.0,
                (true, false) => only_a += 1.0,
                (false, true) => only_b += 1.0,
            }
        }
    }
    let den = (neither + only_b) * (only_b + both) + (neither + only_a) * (only_a + both);
    if den == 0.0 {
        1.0
    } else {
        2.0 * (neither * both - only_a * only_b) / den
    }
}

/// Every set partition of 0..n as a restricted growth string.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                let next = p.iter().max().map_or(0, |m| m + 1);
                (0..=next).map(move |l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    out
}

fn blocks(labels: &[usize]) -> Vec<BTreeSet<usize>> {
    let mut m: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        m.entry(l).or_default().insert(i);
    }
    m.into_values().collect()
}

fn ari_oracle() {
    let start = Instant::now();
    for n in 1..=6 {
        let all = partitions(n);
        for a in &all {
            for b in &all {
                let got = ari(&blocks(a), &blocks(b)).unwrap().0;
                let want = brute_ari(a, b);
                assert!((got - want).abs() <= 1e-12, "{a:?} {b:?}: {got} vs {want}");
            }
            assert_eq!(ari(&blocks(a), &blocks(a)).unwrap().0, 1.0);
        }
    }
    let mut rng = rng_for(7, "ari-random");
    let mut total = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=10);
        let a: Vec<usize> = (0..200).map(|_| rng.random_range(0..k)).collect();
        let b: Vec<usize> = (0..200).map(|_| rng.random_range(0..k)).collect();
        total += ari(&blocks(&a), &blocks(&b)).unwrap().0;
    }
    let mean = total / 1000.0;
    assert!(mean.abs() <= 0.05, "random mean ARI {mean}");
    assert!(start.elapsed() < Duration::from_secs(120));
}

// 5

fn distortion_fidelity() {
    let dir = shared_run();
    let analyses: Vec<ProjectAnalysis> = read_json(&dir.join(ANALYSIS)).unwrap();
    let graphs: BTreeMap<&str, &DependencyGraph> = analyses.iter().map(|a| (a.project_id.as_str(), &a.graph)).collect();
    let records: BTreeMap<String, MutationRecord> =
        jsonl::<MutationRecord>(dir, MUTATIONS).into_iter().map(|r| (r.id.clone(), r)).collect();
    let prompts: Vec<PromptInstance> = jsonl(dir, PROMPTS);
    let mut ratios = BTreeSet::new();
    for p in prompts.iter().filter(|p| p.concept == Concept::Coupling) {
        let record = &records[&p.provenance.record_id];
        let total = record.prompt_classes.len() + p.provenance.distractors.len();
        assert!(
            (p.distortion_achieved - p.distortion_requested).abs() <= 1.0 / total as f64 + 1e-12,
            "{}: requested {} achieved {}",
            p.id,
            p.distortion_requested,
            p.distortion_achieved
        );
        assert_eq!(p.distortion_achieved, p.provenance.distractors.len() as f64 / total as f64);
        ratios.insert(p.distortion_step());
        let graph = graphs[p.provenance.project_id.as_str()];
        for d in &p.provenance.distractors {
            for m in &record.touched_classes {
                assert!(!graph.transitively_depends(d, m).unwrap(), "{}: {d} reaches {m}", p.id);
                assert!(!graph.transitively_depends(m, d).unwrap(), "{}: {m} reaches {d}", p.id);
            }
        }
    }
    assert_eq!(ratios, (1..=9).collect());
}

// 6

fn oracle_closure() {
    let dir = shared_run();
    assert!(SHARED.get().unwrap().1 < Duration::from_secs(300));
    let rows = csv_rows(&dir.join(REPORT));
    let oracle: Vec<_> = rows.iter().filter(|r| r["model"] == "mock-oracle").collect();
    assert!(!oracle.is_empty());
    for r in &oracle {
        assert_eq!(r["mean"], "1.000000", "{r:?}");
    }
    let metrics: BTreeSet<&str> = oracle.iter().map(|r| r["metric"].as_str()).collect();
    assert_eq!(metrics, BTreeSet::from(["ari", "f1"]));

    let sample: Vec<SampledPrompt> = jsonl(dir, SAMPLE);
    let open_cohesion: BTreeSet<&str> = sample
        .iter()
        .filter(|s| s.prompt.concept == Concept::Cohesion && s.prompt.task == TaskKind::OpenEndedGeneration)
        .map(|s| s.prompt.id.as_str())
        .collect();
    let scores: Vec<ScoreRecord> = jsonl(dir, SCORES);
    let random: Vec<f64> = scores
        .iter()
        .filter(|s| s.model_name == "mock-random" && open_cohesion.contains(s.prompt_id.as_str()))
        .inspect(|s| assert_eq!(s.metric, Metric::Ari))
        .map(|s| s.value)
        .collect();
    assert!(random.len() >= 200, "only {} random open-ended cohesion scores", random.len());
    let mean = random.iter().sum::<f64>() / random.len() as f64;
    assert!((-0.1..=0.1).contains(&mean), "random mean ARI {mean} over {}", random.len());
}

// 7

fn determinism() {
    let a = shared_run();
    let b = tempfile::tempdir().unwrap();
    run_through(&config(b.path(), MockMode::Oracle), Stage::Sample);
    for f in [PROMPTS, SAMPLE] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        assert!(x == y, "{f} differs between runs");
    }
}

// 8

fn trace_analytics() {
    let names: Vec<String> = (0..12).map(|i| format!("Entity{i}")).collect();
    for n in 1..=names.len() {
        for k in 0..=n {
            let trace = names[..k].iter().map(|e| format!("check {e};")).collect::<Vec<_>>().join(" ");
            let (mentioned, total, coverage) = entity_coverage(&trace, &names[..n]).unwrap();
            assert_eq!((mentioned, total), (k, n));
            assert_eq!(coverage, k as f64 / n as f64);
        }
    }

    let dir = shared_run();
    let rows = csv_rows(&dir.join(TRACE_REPORT));
    for model in ["mock-oracle", "mock-random"] {
        for concept in ["coupling", "cohesion"] {
            let groups: BTreeSet<(String, String)> = rows
                .iter()
                .filter(|r| r["model"] == model && r["concept"] == concept)
                .map(|r| (r["task"].clone(), r["distortion"].clone()))
                .collect();
            assert_eq!(groups.len(), 27, "{model} {concept}");
            let tasks: BTreeSet<&str> = groups.iter().map(|g| g.0.as_str()).collect();
            assert_eq!(tasks.len(), 3);
        }
    }
    for r in rows.iter().filter(|r| r["model"] == "mock-oracle") {
        assert_eq!(r["mean_coverage"], "1.000000", "{r:?}");
    }
}

fn main() {
    let criteria: [(&str, fn()); 8] = [
        ("grid arithmetic", grid_arithmetic),
        ("transformation soundness", transformation_soundness),
        ("cohesion synthesis", cohesion_synthesis),
        ("ARI oracle equivalence", ari_oracle),
        ("distortion fidelity", distortion_fidelity),
        ("end-to-end oracle closure", oracle_closure),
        ("determinism", determinism),
        ("trace analytics", trace_analytics),
    ];
    let start = Instant::now();
    shared_run();
    println!("pipeline runs (oracle, then random mock): {:.2}s", start.elapsed().as_secs_f64());
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {}: PASS  {name} ({secs:.2}s)", i + 1),
            Err(_) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.2}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
