//! One function per subcommand. Each reads its inputs, delegates to the
//! library and writes its outputs plus a run manifest into the output dir.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use sensegap::annotation::{
    agreement, aggregate as aggregate_judgments, generate_instances, gold_from_aggregation, read_instances,
    read_judgments, shuffle_instances, summarize, write_instances, AgreementTable, AnnotationInstance,
    AnnotationSummary, InstanceMajority, Judgment, UsageStatus,
};
use sensegap::corpus::{
    find_usages, sample_random_phase1, CorpusSource, CorpusTag, Lemmatizer, LowercaseLemmatizer, TableLemmatizer,
    Usage,
};
use sensegap::detector::{rank_and_select, Candidate, Label, PredictionRecord};
use sensegap::evaluation::report::{render_grid, render_round_table, render_summary};
use sensegap::evaluation::{GoldAssignment, GoldRecord};
use sensegap::inventory::{inventory_stats, parse_so_dump_with, parse_wordnet_dump, SoOptions, SourceTag};
use sensegap::pipeline::{self, Context, PipelineError};
use sensegap::representation::provider::embed_all;
use sensegap::representation::store::{write_manifest, write_requests};
use sensegap::representation::{
    EmbeddingProvider, EmbeddingRequest, EmbeddingVector, Language, ManifestEntry, MockProvider, ModelConfig,
    ProviderError, StoreProvider, VectorStore,
};
use sensegap::SenseInventory;

use crate::config::{parse_model, RunConfig, Schema};
use crate::io::{jsonl, read_jsonl, read_text, require, Outputs};
use crate::UsageError;

/// The configured embedding provider.
enum Provider {
    Mock(MockProvider),
    Store(StoreProvider),
}

impl EmbeddingProvider for Provider {
    fn dim(&self) -> usize {
        match self {
            Provider::Mock(p) => p.dim(),
            Provider::Store(p) => p.dim(),
        }
    }

    fn embed_batch(&self, requests: &[EmbeddingRequest]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        match self {
            Provider::Mock(p) => p.embed_batch(requests),
            Provider::Store(p) => p.embed_batch(requests),
        }
    }
}

fn provider(cfg: &RunConfig) -> Result<Provider> {
    let choice = cfg
        .provider
        .as_deref()
        .ok_or_else(|| UsageError("no embedding provider: pass --provider mock:DIM or store:PATH".into()))?;
    if let Some(dim) = choice.strip_prefix("mock:") {
        let dim: usize = dim.parse().map_err(|_| UsageError(format!("bad mock dimension in {choice:?}")))?;
        let p = MockProvider::new(dim).ok_or_else(|| UsageError("mock dimension must be at least 2".into()))?;
        Ok(Provider::Mock(p))
    } else if let Some(path) = choice.strip_prefix("store:") {
        let path = Path::new(path);
        require(path)?;
        let store = VectorStore::read(path).with_context(|| format!("reading vector store {}", path.display()))?;
        Ok(Provider::Store(StoreProvider::new(store)))
    } else {
        Err(UsageError(format!("unknown provider {choice:?} (expected mock:DIM or store:PATH)")).into())
    }
}

/// Hashes the vector store backing a `store:` provider as a run input.
fn provider_input(out: &mut Outputs, cfg: &RunConfig) -> Result<()> {
    match cfg.provider.as_deref().and_then(|s| s.strip_prefix("store:")) {
        Some(path) => out.input(Path::new(path)),
        None => Ok(()),
    }
}

/// Provider failures are retriable once the missing vectors are exported.
fn pipeline_error(e: PipelineError) -> anyhow::Error {
    match e {
        PipelineError::Provider(p) | PipelineError::Embed(sensegap::representation::embed::EmbedError::Provider(p)) => {
            anyhow::anyhow!("{p} (retriable: export the missing vectors and rerun)")
        }
        other => other.into(),
    }
}

fn lemmatizer(cfg: &RunConfig) -> Result<Box<dyn Lemmatizer>> {
    match &cfg.lemmatizer {
        Some(p) => {
            require(p)?;
            Ok(Box::new(TableLemmatizer::from_tsv(&read_text(p)?)?))
        }
        None => Ok(Box::new(LowercaseLemmatizer)),
    }
}

fn load_inventory(path: &Path) -> Result<SenseInventory> {
    require(path)?;
    SenseInventory::from_canonical(&read_text(path)?).with_context(|| format!("reading inventory {}", path.display()))
}

fn load_usages(path: &Path) -> Result<Vec<Usage>> {
    require(path)?;
    read_jsonl(path)
}

fn context<'a>(cfg: &RunConfig, inv: &'a SenseInventory, lem: &'a dyn Lemmatizer) -> Context<'a> {
    Context {
        inventory: inv,
        lemmatizer: lem,
        language: Language::from_tag(&cfg.language),
        primary_only: cfg.primary_only,
        batch_size: cfg.batch_size,
    }
}

fn models(cfg: &RunConfig, source: SourceTag) -> Result<Vec<ModelConfig>> {
    if cfg.models.is_empty() {
        return Err(UsageError("no models: pass --model NAME (or `all`) or set `models` in the config".into()).into());
    }
    let mut out: Vec<ModelConfig> = Vec::new();
    for name in &cfg.models {
        let batch = if name.eq_ignore_ascii_case("all") {
            ModelConfig::grid(source)
        } else {
            let m = parse_model(name)?;
            m.validate(source).map_err(|e| UsageError(format!("model {name}: {e}")))?;
            vec![m]
        };
        for m in batch {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    Ok(out)
}

pub fn ingest(cfg: &RunConfig, inventory: &Path) -> Result<()> {
    let schema = cfg
        .schema
        .ok_or_else(|| UsageError("no schema: pass --schema wordnet|so or set `schema` in the config".into()))?;
    require(inventory)?;
    let mut out = Outputs::new(cfg.output_dir()?, "ingest")?;
    out.input(inventory)?;
    let raw = read_text(inventory)?;
    let parsed = match schema {
        Schema::Wordnet => parse_wordnet_dump(&raw),
        Schema::So => parse_so_dump_with(
            &raw,
            SoOptions {
                include_sub_entries: cfg.include_sub_entries,
            },
        ),
    }
    .with_context(|| format!("parsing {}", inventory.display()))?;
    for w in &parsed.warnings {
        warn!("{w}");
    }
    let stats = inventory_stats(&parsed.inventory).to_key_value();
    print!("{stats}");
    out.write("inventory.jsonl", parsed.inventory.to_canonical())?;
    out.write("stats.txt", &stats)?;
    out.write("ingest-warnings.txt", parsed.warnings.iter().map(|w| format!("{w}\n")).collect::<String>())?;
    info!("{} headwords, {} senses", parsed.inventory.len(), parsed.inventory.sense_count());
    out.finish(&cfg.to_toml(), cfg.seed)
}

pub fn stats(cfg: &RunConfig, inventory: &Path) -> Result<()> {
    let inv = load_inventory(inventory)?;
    let stats = inventory_stats(&inv).to_key_value();
    print!("{stats}");
    if let Some(dir) = &cfg.output {
        let mut out = Outputs::new(dir, "stats")?;
        out.input(inventory)?;
        out.write("stats.txt", &stats)?;
        out.finish(&cfg.to_toml(), cfg.seed)?;
    }
    Ok(())
}

pub fn sample(cfg: &RunConfig, inventory: &Path, corpora: &[String]) -> Result<()> {
    let mut sources = Vec::new();
    for c in corpora {
        let (tag, path) = c
            .split_once('=')
            .ok_or_else(|| UsageError(format!("corpus {c:?}: expected TAG=PATH")))?;
        let tag: CorpusTag = tag.parse().map_err(UsageError)?;
        let path = PathBuf::from(path);
        require(&path)?;
        sources.push((tag, path));
    }
    let inv = load_inventory(inventory)?;
    let lem = lemmatizer(cfg)?;
    let mut out = Outputs::new(cfg.output_dir()?, "sample")?;
    out.input(inventory)?;

    let mut all: Vec<Usage> = Vec::new();
    for (tag, path) in &sources {
        out.input(path)?;
        let text = read_text(path)?;
        let source = CorpusSource {
            tag: *tag,
            language_tag: cfg.language.clone(),
        };
        let found = find_usages(text.lines(), &inv, lem.as_ref(), &source);
        info!("{}: {} usages in {} sentences", path.display(), found.len(), text.lines().count());
        all.extend(found);
    }
    let mut seen = BTreeSet::new();
    for u in &all {
        if !seen.insert(u.usage_id.as_str()) {
            bail!("duplicate usage id {} (two corpora with the same tag?)", u.usage_id);
        }
    }

    let mut sampled = Vec::new();
    let mut report = String::from("corpus\tusages\theadwords_found\theadwords_searched\tshortfall\n");
    let tags: BTreeSet<CorpusTag> = sources.iter().map(|(t, _)| *t).collect();
    for tag in tags {
        let of_tag: Vec<Usage> = all.iter().filter(|u| u.corpus_tag == tag).cloned().collect();
        let s = sample_random_phase1(&of_tag, &inv, cfg.seed, &cfg.sampling);
        if s.shortfall {
            warn!("{tag}: only {} headwords with usages", s.headwords_found);
        }
        let _ = writeln!(
            report,
            "{tag}\t{}\t{}\t{}\t{}",
            s.usages.len(),
            s.headwords_found,
            s.headwords_searched,
            s.shortfall
        );
        sampled.extend(s.usages);
    }
    print!("{report}");
    out.write("usages.jsonl", jsonl(&all))?;
    out.write("sample.jsonl", jsonl(&sampled))?;
    out.write("sample.tsv", report)?;
    out.finish(&cfg.to_toml(), cfg.seed)
}

pub fn embed(cfg: &RunConfig, inventory: &Path, usages_path: &Path) -> Result<()> {
    let inv = load_inventory(inventory)?;
    let usages = load_usages(usages_path)?;
    let models = models(cfg, inv.source_tag())?;
    let provider = cfg.provider.as_ref().map(|_| provider(cfg)).transpose()?;
    let lem = lemmatizer(cfg)?;
    let ctx = context(cfg, &inv, lem.as_ref());
    let mut out = Outputs::new(cfg.output_dir()?, "embed")?;
    out.input(inventory)?;
    out.input(usages_path)?;
    provider_input(&mut out, cfg)?;

    let mut requests: BTreeMap<String, EmbeddingRequest> = BTreeMap::new();
    for m in &models {
        for r in pipeline::collect_requests(&ctx, &usages, m)? {
            requests.insert(r.request_id.clone(), r);
        }
    }
    let requests: Vec<EmbeddingRequest> = requests.into_values().collect();
    let manifest: Vec<ManifestEntry> = requests.iter().map(ManifestEntry::for_request).collect();
    write_requests(&out.path("requests.jsonl"), &requests)?;
    write_manifest(&out.path("vectors.manifest.jsonl"), &manifest)?;
    out.record("requests.jsonl")?;
    out.record("vectors.manifest.jsonl")?;
    info!("{} requests for {} models", requests.len(), models.len());

    match &provider {
        Some(Provider::Store(p)) => {
            let missing: Vec<&EmbeddingRequest> =
                requests.iter().filter(|r| !p.store().contains(&r.content_hash())).collect();
            if !missing.is_empty() {
                warn!("{} of {} requests are not in the vector store", missing.len(), requests.len());
            }
            out.write("missing.jsonl", jsonl(&missing))?;
        }
        Some(p) => {
            let vectors = embed_all(p, &requests, cfg.batch_size)?;
            let mut store = VectorStore::new(p.dim());
            for (r, v) in requests.iter().zip(vectors) {
                store.insert(r.content_hash(), v.into_inner())?;
            }
            store.write(&out.path("vectors.store"))?;
            out.record("vectors.store")?;
            info!("{} vectors of dimension {}", store.len(), store.dim());
        }
        None => {}
    }
    out.finish(&cfg.to_toml(), cfg.seed)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub test_f: f64,
    pub test_f_std: f64,
    pub train_f: f64,
    pub random_test_f: f64,
    pub frequency_test_f: Option<f64>,
    pub threshold: f64,
}

/// Outcome of `select`: every model's scores and the best one.
#[derive(Debug, Serialize, Deserialize)]
pub struct Selection {
    pub best: String,
    pub threshold: f64,
    pub models: Vec<ModelScore>,
}

pub fn select(cfg: &RunConfig, inventory: &Path, usages_path: &Path, gold_path: &Path) -> Result<()> {
    let inv = load_inventory(inventory)?;
    let usages = load_usages(usages_path)?;
    require(gold_path).map_err(|_| UsageError(format!("gold file not found: {}", gold_path.display())))?;
    let gold = GoldAssignment::from_records(read_jsonl::<GoldRecord>(gold_path)?);
    gold.validate(&inv)?;
    if gold.is_empty() {
        bail!("gold file {} has no usages", gold_path.display());
    }
    let models = models(cfg, inv.source_tag())?;
    let eval = cfg.eval_config();
    eval.validate().map_err(|e| UsageError(e.to_string()))?;
    let provider = provider(cfg)?;
    let lem = lemmatizer(cfg)?;
    let ctx = context(cfg, &inv, lem.as_ref());
    let mut out = Outputs::new(cfg.output_dir()?, "select")?;
    out.input(inventory)?;
    out.input(usages_path)?;
    out.input(gold_path)?;
    provider_input(&mut out, cfg)?;

    let mut scores = Vec::new();
    let mut summary = String::new();
    let mut cells = Vec::new();
    for m in &models {
        let report = pipeline::cross_validate(&ctx, &usages, &gold, m, &eval, &provider).map_err(pipeline_error)?;
        let name = m.name();
        let mut tables = String::new();
        for r in &report.rounds {
            let _ = writeln!(tables, "# round {} ({} usages, {} unassigned)", r.round + 1, r.usages, r.unassigned);
            tables.push_str(&render_round_table(r));
        }
        out.write(&format!("cv/{name}.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        out.write(&format!("cv/{name}.tsv"), tables)?;
        summary.push_str(&render_summary(&name, &report));
        summary.push('\n');
        cells.push((*m, report.test_f.mean));
        scores.push(ModelScore {
            model: name,
            test_f: report.test_f.mean,
            test_f_std: report.test_f.std,
            train_f: report.train_f.mean,
            random_test_f: report.random_test_f.mean,
            frequency_test_f: report.frequency_test_f.map(|f| f.mean),
            threshold: report.mean_threshold,
        });
    }
    // first model wins ties
    let best = scores
        .iter()
        .fold(None::<&ModelScore>, |b, s| match b {
            Some(b) if b.test_f >= s.test_f => Some(b),
            _ => Some(s),
        })
        .map(|b| (b.model.clone(), b.threshold))
        .expect("at least one model");
    let selection = Selection {
        best: best.0,
        threshold: best.1,
        models: scores,
    };
    print!("{summary}");
    println!("best\t{}\tthreshold={:.3}", selection.best, selection.threshold);
    out.write("summary.tsv", summary)?;
    out.write("grid.tsv", render_grid(&cells))?;
    out.write("selection.json", serde_json::to_string_pretty(&selection)? + "\n")?;
    out.finish(&cfg.to_toml(), cfg.seed)
}

/// Model and threshold for `predict`/`candidates`: flags, then a selection
/// file, then the config. The choice is written back into `cfg`.
pub fn resolve_model(
    cfg: &mut RunConfig,
    model: Option<String>,
    threshold: Option<f64>,
    from_selection: Option<PathBuf>,
) -> Result<ModelConfig> {
    let selection = match &from_selection {
        Some(p) => {
            require(p)?;
            let s: Selection =
                serde_json::from_str(&read_text(p)?).with_context(|| format!("reading selection {}", p.display()))?;
            Some(s)
        }
        None => None,
    };
    let name = model
        .or_else(|| selection.as_ref().map(|s| s.best.clone()))
        .or_else(|| match cfg.models.as_slice() {
            [one] => Some(one.clone()),
            _ => None,
        })
        .ok_or_else(|| UsageError("no model: pass --model NAME or --from-selection PATH".into()))?;
    let threshold = threshold
        .or_else(|| selection.as_ref().map(|s| s.threshold))
        .or(cfg.threshold)
        .ok_or_else(|| UsageError("no threshold: pass --threshold T or --from-selection PATH".into()))?;
    let mut m = parse_model(&name)?;
    m.threshold = threshold;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(UsageError(format!("threshold {threshold} outside [0, 1]")).into());
    }
    cfg.models = vec![m.name()];
    cfg.threshold = Some(threshold);
    Ok(m)
}

fn check_model(m: &ModelConfig, inv: &SenseInventory) -> Result<(), UsageError> {
    m.validate(inv.source_tag()).map_err(|e| UsageError(format!("model {}: {e}", m.name())))
}

fn instances_for(cfg: &RunConfig, inv: &SenseInventory, usages: &[Usage], order: &[&str]) -> Vec<AnnotationInstance> {
    let by_id: BTreeMap<&str, &Usage> = usages.iter().map(|u| (u.usage_id.as_str(), u)).collect();
    let chosen: Vec<Usage> = order.iter().filter_map(|id| by_id.get(id).map(|u| (*u).clone())).collect();
    let mut instances = generate_instances(&chosen, inv, cfg.primary_only);
    shuffle_instances(&mut instances, cfg.seed);
    instances
}

fn instances_tsv(instances: &[AnnotationInstance]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_instances(&mut buf, instances)?;
    Ok(buf)
}

pub fn predict(cfg: &RunConfig, inventory: &Path, usages_path: &Path, model: ModelConfig) -> Result<()> {
    let inv = load_inventory(inventory)?;
    check_model(&model, &inv)?;
    let usages = load_usages(usages_path)?;
    let provider = provider(cfg)?;
    let lem = lemmatizer(cfg)?;
    let ctx = context(cfg, &inv, lem.as_ref());
    let mut out = Outputs::new(cfg.output_dir()?, "predict")?;
    out.input(inventory)?;
    out.input(usages_path)?;
    provider_input(&mut out, cfg)?;

    let preds = pipeline::predict_usages(&ctx, &usages, &model, &provider).map_err(pipeline_error)?;
    let view = ctx.view(model.sense_mode.kind());
    let selected = rank_and_select(&preds, &view, cfg.selection.max_per_headword, cfg.selection.sample_size);
    let candidates = pipeline::build_candidates(&ctx, &selected, &usages);
    let order: Vec<&str> = selected.iter().map(|p| p.usage_id.as_str()).collect();
    let instances = instances_for(cfg, &inv, &usages, &order);

    let headwords: BTreeSet<&str> = usages.iter().map(|u| u.headword.as_str()).collect();
    let unassigned = preds.iter().filter(|p| p.label == Label::Unassigned && !p.unrepresentable).count();
    let unrepresentable = preds.iter().filter(|p| p.unrepresentable).count();
    let cand_headwords: BTreeSet<&str> = selected.iter().map(|p| p.headword.as_str()).collect();
    info!(
        "{}: {} usages of {} headwords, {unassigned} unassigned, {unrepresentable} unrepresentable; \
         {} candidates of {} headwords, {} instances",
        model.name(),
        usages.len(),
        headwords.len(),
        candidates.len(),
        cand_headwords.len(),
        instances.len()
    );
    out.write("predictions.jsonl", jsonl(&preds))?;
    out.write("candidates.jsonl", jsonl(&candidates))?;
    out.write("instances.tsv", instances_tsv(&instances)?)?;
    out.finish(&cfg.to_toml(), cfg.seed)
}

pub fn candidates(
    cfg: &RunConfig,
    inventory: &Path,
    usages_path: &Path,
    predictions: &Path,
    model: ModelConfig,
) -> Result<()> {
    let inv = load_inventory(inventory)?;
    check_model(&model, &inv)?;
    let usages = load_usages(usages_path)?;
    require(predictions)?;
    let preds: Vec<PredictionRecord> = read_jsonl(predictions)?;
    let lem = lemmatizer(cfg)?;
    let ctx = context(cfg, &inv, lem.as_ref());
    let mut out = Outputs::new(cfg.output_dir()?, "candidates")?;
    out.input(inventory)?;
    out.input(usages_path)?;
    out.input(predictions)?;

    // relabel under the requested threshold
    let preds: Vec<PredictionRecord> = preds
        .into_iter()
        .map(|p| {
            let nearest = p.nearest_sense_id.clone().zip(p.nearest_similarity);
            PredictionRecord::new(p.usage_id, p.headword, nearest, model.threshold)
        })
        .collect();
    let view = ctx.view(model.sense_mode.kind());
    let selected = rank_and_select(&preds, &view, cfg.selection.max_per_headword, cfg.selection.sample_size);
    let candidates = pipeline::build_candidates(&ctx, &selected, &usages);
    info!("{} candidates from {} predictions", candidates.len(), preds.len());
    out.write("candidates.jsonl", jsonl(&candidates))?;
    out.finish(&cfg.to_toml(), cfg.seed)
}

pub fn instances(cfg: &RunConfig, inventory: &Path, usages_path: &Path, candidates: Option<&Path>) -> Result<()> {
    let inv = load_inventory(inventory)?;
    let usages = load_usages(usages_path)?;
    let mut out = Outputs::new(cfg.output_dir()?, "instances")?;
    out.input(inventory)?;
    out.input(usages_path)?;
    let chosen: Vec<Candidate>;
    let order: Vec<&str> = match candidates {
        Some(p) => {
            require(p)?;
            out.input(p)?;
            chosen = read_jsonl(p)?;
            chosen.iter().map(|c| c.prediction.usage_id.as_str()).collect()
        }
        None => usages.iter().map(|u| u.usage_id.as_str()).collect(),
    };
    let instances = instances_for(cfg, &inv, &usages, &order);
    info!("{} instances for {} usages", instances.len(), order.len());
    out.write("instances.tsv", instances_tsv(&instances)?)?;
    out.finish(&cfg.to_toml(), cfg.seed)
}

#[derive(Debug, Serialize)]
struct AggregateReport {
    summary: BTreeMap<String, AnnotationSummary>,
    /// `None` when fewer than two annotators judged the selection.
    agreement: BTreeMap<String, Option<AgreementTable>>,
    unknown_instances: Vec<String>,
}

fn majority_code(m: InstanceMajority) -> &'static str {
    match m {
        InstanceMajority::Fits => "1",
        InstanceMajority::DoesNotFit => "0",
        InstanceMajority::Excluded => "excluded",
    }
}

fn status_code(s: UsageStatus) -> &'static str {
    match s {
        UsageStatus::Assigned => "assigned",
        UsageStatus::Unassigned => "unassigned",
        UsageStatus::Excluded => "excluded",
    }
}

pub fn aggregate(cfg: &RunConfig, instances_path: &Path, judgment_paths: &[PathBuf]) -> Result<()> {
    require(instances_path)?;
    for p in judgment_paths {
        require(p)?;
    }
    let mut out = Outputs::new(cfg.output_dir()?, "aggregate")?;
    out.input(instances_path)?;
    let instances = read_instances(std::fs::File::open(instances_path)?)
        .with_context(|| format!("reading {}", instances_path.display()))?;
    let mut judgments: Vec<Judgment> = Vec::new();
    for p in judgment_paths {
        out.input(p)?;
        let js = read_judgments(std::fs::File::open(p)?).with_context(|| format!("reading {}", p.display()))?;
        judgments.extend(js);
    }

    let agg = aggregate_judgments(&instances, &judgments);
    for id in &agg.unknown_instances {
        warn!("judgment for unknown instance {id}; ignored");
    }
    let known: BTreeSet<&str> = instances.iter().map(|i| i.instance_id.as_str()).collect();
    let judgments: Vec<Judgment> =
        judgments.into_iter().filter(|j| known.contains(j.instance_id.as_str())).collect();

    let tag_of: BTreeMap<&str, CorpusTag> = instances.iter().map(|i| (i.instance_id.as_str(), i.corpus_tag)).collect();
    let mut selections: Vec<(String, Option<CorpusTag>)> = vec![("all".into(), None)];
    let tags: BTreeSet<CorpusTag> = instances.iter().map(|i| i.corpus_tag).collect();
    selections.extend(tags.into_iter().map(|t| (t.to_string(), Some(t))));

    let mut report = AggregateReport {
        summary: BTreeMap::new(),
        agreement: BTreeMap::new(),
        unknown_instances: agg.unknown_instances.clone(),
    };
    for (name, tag) in &selections {
        let keep_tag = |t: CorpusTag| tag.is_none_or(|x| x == t);
        let s = summarize(&instances, &judgments, &agg, |i| keep_tag(i.corpus_tag));
        let a = agreement(&judgments, |id| tag_of.get(id).is_some_and(|t| keep_tag(*t))).ok();
        report.summary.insert(name.clone(), s);
        report.agreement.insert(name.clone(), a);
    }

    let mut text = String::from(
        "selection\tinstances\tfits\tdoes_not_fit\tcannot_decide\texcluded_instances\tusages\texcluded_usages\tassigned\tunassigned\tunassigned_pct\talpha\n",
    );
    for (name, s) in &report.summary {
        let alpha = report.agreement[name]
            .as_ref()
            .and_then(|a| a.full.alpha)
            .map_or_else(|| "-".to_string(), |a| format!("{a:.3}"));
        let pct = s.unassigned_pct.map_or_else(|| "-".to_string(), |p| format!("{p:.1}"));
        let _ = writeln!(
            text,
            "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{pct}\t{alpha}",
            s.instances,
            s.judgments_fits,
            s.judgments_does_not_fit,
            s.judgments_cannot_decide,
            s.excluded_instances,
            s.usages,
            s.excluded_usages,
            s.assigned,
            s.unassigned
        );
    }
    print!("{text}");

    let majorities: String = std::iter::once("instance_id\tmajority\n".to_string())
        .chain(agg.instance_majority.iter().map(|(id, m)| format!("{id}\t{}\n", majority_code(*m))))
        .collect();
    let statuses: String = std::iter::once("usage_id\tstatus\n".to_string())
        .chain(agg.usage_status.iter().map(|(id, s)| format!("{id}\t{}\n", status_code(*s))))
        .collect();
    let gold = gold_from_aggregation(&instances, &agg);

    out.write("aggregate.json", serde_json::to_string_pretty(&report)? + "\n")?;
    out.write("aggregate.tsv", text)?;
    out.write("majorities.tsv", majorities)?;
    out.write("usage_status.tsv", statuses)?;
    out.write("gold.jsonl", jsonl(&gold.records()))?;
    out.finish(&cfg.to_toml(), cfg.seed)
}
