//! The pipeline stages. Each stage reads its upstream artifacts from the work
//! directory, writes its outputs there, and finishes with a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use guwen_core::corpus::io::{read_corpus_text, to_jsonl, LineError};
use guwen_core::corpus::{corpus_stats, CharMapTable, Cleaner, CorpusRecord};
use guwen_core::eval::{
    build_benchmark, evaluate_zero_shot, exclude_benchmark, run_ablation_matrix, translate_all, AblationSetup,
    BenchmarkSplit,
};
use guwen_core::model::{checkpoint, final_epoch_loss, loss_log_csv, noised_views, prepare_pairs, train, ModelParams, Phase};
use guwen_core::noising::Tokenizer;
use guwen_core::{alignment_coverage, Lexicon};
use serde_json::json;

use crate::config::RunConfig;
use crate::manifest::{file_digest, sha256_hex, Manifest};
use crate::CliError;

pub const CLEAN: &str = "clean.jsonl";
pub const CLEAN_STATS: &str = "clean.stats.json";
pub const DEDUP: &str = "dedup.jsonl";
pub const DEDUP_DROPPED: &str = "dedup.dropped.jsonl";
pub const DEDUP_STATS: &str = "dedup.stats.json";
pub const ALIGN: &str = "align.jsonl";
pub const ALIGN_STATS: &str = "align.stats.json";
pub const BENCHMARK_INDEX: &str = "benchmark.json";
pub const TRAIN_POOL: &str = "train_pool.jsonl";
pub const CHECKPOINT: &str = "model.ckpt";
pub const TOKENIZER: &str = "tokenizer.tsv";
pub const LOSS_LOG: &str = "loss_log.csv";
pub const TRAIN_SUMMARY: &str = "train.json";
pub const NOISED_EXAMPLES: &str = "noised_examples.jsonl";
pub const EVAL_JSON: &str = "eval.json";
pub const EVAL_TABLE: &str = "eval.txt";
pub const ABLATION_JSON: &str = "ablation.json";
pub const ABLATION_TABLE: &str = "ablation.txt";

/// Resolved configuration plus the configuration as written, which is what
/// manifests record so that they do not depend on where the run lives.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub written: RunConfig,
}

impl Context {
    pub fn new(written: RunConfig, base: &Path) -> Self {
        Self { cfg: written.resolved(base), written }
    }

    /// Load `config` (defaults when absent) and apply command-line overrides.
    pub fn load(config: Option<&Path>, seed: Option<u64>, threads: Option<usize>) -> Result<Self, CliError> {
        let (mut written, base) = match config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
                (RunConfig::parse(&text)?, base.to_path_buf())
            }
            None => (RunConfig::default(), PathBuf::from(".")),
        };
        if let Some(s) = seed {
            written.seed = s;
        }
        if let Some(t) = threads {
            written.threads = t;
        }
        written.validate()?;
        Ok(Self::new(written, &base))
    }

    pub fn work_dir(&self) -> &Path {
        &self.cfg.paths.work_dir
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.work_dir().join(name)
    }

    fn require(&self, name: &str, what: &str, stage: &str) -> Result<PathBuf, CliError> {
        let path = self.artifact(name);
        if path.is_file() {
            Ok(path)
        } else {
            Err(CliError::MissingArtifact { what: what.into(), path, stage: stage.into() })
        }
    }

    fn cleaner(&self) -> Result<Cleaner, CliError> {
        let trad = match &self.cfg.paths.trad2simp {
            Some(p) => CharMapTable::load(p)?,
            None => CharMapTable::bundled_trad2simp(),
        };
        let punct = match &self.cfg.paths.punct {
            Some(p) => CharMapTable::load(p)?,
            None => CharMapTable::bundled_punct(),
        };
        Ok(Cleaner::new(&trad, &punct))
    }

    fn lexicon(&self) -> Result<Lexicon, CliError> {
        Ok(match &self.cfg.paths.lexicon {
            Some(p) => Lexicon::load(p)?,
            None => Lexicon::bundled(),
        })
    }
}

/// What a stage reports back to the caller.
#[derive(Debug, Default)]
pub struct StageOutcome {
    /// Plain log lines.
    pub messages: Vec<String>,
    /// Record-level problems that were skipped.
    pub record_errors: Vec<LineError>,
}

impl StageOutcome {
    pub fn success(&self) -> bool {
        self.record_errors.is_empty()
    }
}

/// Inputs and outputs of one run, hashed as they are registered.
struct Ledger<'a> {
    ctx: &'a Context,
    stage: &'static str,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl<'a> Ledger<'a> {
    fn new(ctx: &'a Context, stage: &'static str) -> Result<Self, CliError> {
        let dir = ctx.work_dir();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { ctx, stage, inputs: BTreeMap::new(), outputs: BTreeMap::new() })
    }

    fn input_file(&mut self, key: impl Into<String>, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(key.into(), file_digest(path)?);
        Ok(())
    }

    /// Work-directory artifact consumed by this stage.
    fn input(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.ctx.artifact(name);
        self.input_file(name, &path)
    }

    fn optional_input(&mut self, key: &str, path: Option<&Path>) -> Result<(), CliError> {
        match path {
            Some(p) => self.input_file(key, p),
            None => {
                self.inputs.insert(key.into(), "bundled".into());
                Ok(())
            }
        }
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.ctx.artifact(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    /// Register a file some other writer produced.
    fn produced(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.ctx.artifact(name);
        self.outputs.insert(name.into(), file_digest(&path)?);
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        Manifest {
            stage: self.stage.into(),
            version: crate::manifest::VERSION.into(),
            seed: self.ctx.written.seed,
            threads: self.ctx.written.threads,
            config: self.ctx.written.clone(),
            inputs: self.inputs,
            outputs: self.outputs,
        }
        .write(self.ctx.work_dir())
    }
}

fn pretty(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json value serialises");
    s.push('\n');
    s.into_bytes()
}

fn read_records(path: &Path, out: &mut StageOutcome) -> Result<Vec<CorpusRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let name = path.file_name().map(Path::new).unwrap_or(path);
    let read = read_corpus_text(name, &text, &Default::default());
    out.record_errors.extend(read.errors);
    Ok(read.records)
}

fn char_count(records: &[CorpusRecord]) -> usize {
    records.iter().map(|r| r.source.chars().count() + r.target.as_deref().map_or(0, |t| t.chars().count())).sum()
}

/// Pipe `text` through `sh -c cmd` and return its standard output.
fn run_hook(cmd: &str, text: &str) -> Result<String, CliError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| CliError::Hook(e.to_string()))?;
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let input = text.to_string();
    let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
    let output = child.wait_with_output().map_err(|e| CliError::Hook(e.to_string()))?;
    writer
        .join()
        .map_err(|_| CliError::Hook("stdin writer panicked".into()))?
        .map_err(|e| CliError::Hook(e.to_string()))?;
    if !output.status.success() {
        return Err(CliError::Hook(format!("`{cmd}` exited with {}", output.status)));
    }
    String::from_utf8(output.stdout).map_err(|e| CliError::Hook(e.to_string()))
}

/// Clean every input record. Malformed lines are skipped and reported.
pub fn clean(ctx: &Context) -> Result<StageOutcome, CliError> {
    let cfg = &ctx.cfg;
    if cfg.paths.input.is_empty() {
        return Err(CliError::Config("paths.input lists no files".into()));
    }
    let cleaner = ctx.cleaner()?;
    let defaults = cfg.plain_text_defaults();
    let mut out = StageOutcome::default();
    let mut ledger = Ledger::new(ctx, "clean")?;
    ledger.optional_input("trad2simp", cfg.paths.trad2simp.as_deref())?;
    ledger.optional_input("punct", cfg.paths.punct.as_deref())?;

    let mut records = Vec::new();
    for (path, written) in cfg.paths.input.iter().zip(&ctx.written.paths.input) {
        let raw = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ledger.inputs.insert(format!("input:{}", written.display()), sha256_hex(raw.as_bytes()));
        let text = match &cfg.paths.punct_hook {
            Some(cmd) => run_hook(cmd, &raw)?,
            None => raw,
        };
        // Ids and error locations use the path as written, so they do not
        // depend on where the run lives.
        let read = read_corpus_text(written, &text, &defaults);
        out.record_errors.extend(read.errors);
        records.extend(read.records);
    }
    let before = char_count(&records);
    for r in &mut records {
        r.source = cleaner.clean(&r.source);
        r.target = r.target.as_deref().map(|t| cleaner.clean(t));
    }
    let after = char_count(&records);
    if let Some(r) = records
        .iter()
        .find(|r| !cleaner.is_clean(&r.source) || !r.target.as_deref().is_none_or(|t| cleaner.is_clean(t)))
    {
        return Err(CliError::Audit(format!("record {} is not clean after cleaning", r.id)));
    }

    ledger.put(CLEAN, to_jsonl(&records).as_bytes())?;
    let stats = json!({
        "records": records.len(),
        "malformed_lines": out.record_errors.len(),
        "chars_before": before,
        "chars_after": after,
        "corpus": corpus_stats(&records),
        "errors": out.record_errors,
    });
    ledger.put(CLEAN_STATS, &pretty(&stats))?;
    ledger.finish()?;
    out.messages.push(format!(
        "clean: {} records from {} file(s), characters {before} -> {after}",
        records.len(),
        cfg.paths.input.len()
    ));
    Ok(out)
}

pub fn dedup(ctx: &Context) -> Result<StageOutcome, CliError> {
    let input = ctx.require(CLEAN, "cleaned corpus", "clean")?;
    let mut out = StageOutcome::default();
    let records = read_records(&input, &mut out)?;
    let mut ledger = Ledger::new(ctx, "dedup")?;
    ledger.input(CLEAN)?;
    let result = guwen_core::deduplicate(&records, &ctx.cfg.dedup_config())?;
    ledger.put(DEDUP, to_jsonl(&result.kept).as_bytes())?;
    ledger.put(DEDUP_DROPPED, to_jsonl(&result.dropped).as_bytes())?;
    let stats = json!({
        "before": records.len(),
        "after": result.kept.len(),
        "dropped": result.dropped.len(),
    });
    ledger.put(DEDUP_STATS, &pretty(&stats))?;
    ledger.finish()?;
    out.messages.push(format!(
        "dedup: kept {} of {} records, {} near-duplicates dropped",
        result.kept.len(),
        records.len(),
        result.dropped.len()
    ));
    Ok(out)
}

pub fn align_stats(ctx: &Context) -> Result<StageOutcome, CliError> {
    let input = ctx.require(DEDUP, "de-duplicated corpus", "dedup")?;
    let mut out = StageOutcome::default();
    let records = read_records(&input, &mut out)?;
    let lex = ctx.lexicon()?;
    let mut ledger = Ledger::new(ctx, "align-stats")?;
    ledger.input(DEDUP)?;
    ledger.optional_input("lexicon", ctx.cfg.paths.lexicon.as_deref())?;

    let parallel: Vec<CorpusRecord> = records.iter().filter(|r| r.is_parallel()).cloned().collect();
    let pairs = prepare_pairs(&parallel, &lex)?;
    let lines: Vec<_> = pairs.iter().map(|p| json!({"id": p.id, "pairs": p.alignment.to_index_pairs()})).collect();
    ledger.put(ALIGN, to_jsonl(&lines).as_bytes())?;
    let aligned: usize = pairs.iter().map(|p| p.alignment.len()).sum();
    let coverage = if parallel.is_empty() { None } else { Some(alignment_coverage(&parallel, &lex)?) };
    let stats = json!({
        "records": records.len(),
        "parallel": parallel.len(),
        "monolingual": records.len() - parallel.len(),
        "lexicon_words": lex.len(),
        "aligned_pairs": aligned,
        "coverage": coverage,
    });
    ledger.put(ALIGN_STATS, &pretty(&stats))?;
    ledger.finish()?;
    out.messages.push(format!(
        "align-stats: {aligned} aligned characters over {} parallel records",
        parallel.len()
    ));
    Ok(out)
}

fn split_file(set: &str, part: &str) -> String {
    format!("benchmark/{set}.{part}.jsonl")
}

pub fn benchmark(ctx: &Context) -> Result<StageOutcome, CliError> {
    let input = ctx.require(DEDUP, "de-duplicated corpus", "dedup")?;
    let mut out = StageOutcome::default();
    let records = read_records(&input, &mut out)?;
    let mut ledger = Ledger::new(ctx, "benchmark")?;
    ledger.input(DEDUP)?;

    let parallel: Vec<CorpusRecord> = records.into_iter().filter(|r| r.is_parallel()).collect();
    let sets: Vec<(String, Vec<CorpusRecord>)> = ctx
        .cfg
        .benchmark
        .sets
        .iter()
        .map(|name| (name.clone(), parallel.iter().filter(|r| &r.origin == name).cloned().collect()))
        .collect();
    let splits = build_benchmark(&sets, ctx.cfg.seed)?;
    let mut index = Vec::new();
    for s in &splits {
        for (part, rs) in [("train", &s.train), ("valid", &s.valid), ("test", &s.test)] {
            ledger.put(&split_file(&s.name, part), to_jsonl(rs).as_bytes())?;
        }
        index.push(json!({"name": s.name, "train": s.train.len(), "valid": s.valid.len(), "test": s.test.len()}));
    }
    let (pool, removed) =
        if ctx.cfg.benchmark.exclude_from_training { exclude_benchmark(&parallel, &splits) } else { (parallel, 0) };
    ledger.put(TRAIN_POOL, to_jsonl(&pool).as_bytes())?;
    ledger.put(BENCHMARK_INDEX, &pretty(&json!({"seed": ctx.cfg.seed, "sets": index, "excluded_from_training": removed})))?;
    ledger.finish()?;
    out.messages.push(format!(
        "benchmark: {} set(s), training pool {} records ({removed} excluded)",
        splits.len(),
        pool.len()
    ));
    Ok(out)
}

fn load_benchmark(ctx: &Context, ledger: &mut Ledger, out: &mut StageOutcome) -> Result<Vec<BenchmarkSplit>, CliError> {
    let index_path = ctx.require(BENCHMARK_INDEX, "benchmark index", "benchmark")?;
    ledger.input(BENCHMARK_INDEX)?;
    let text = fs::read_to_string(&index_path).map_err(|e| CliError::io(&index_path, e))?;
    let index: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::io(&index_path, e))?;
    let names: Vec<String> = index["sets"]
        .as_array()
        .ok_or_else(|| CliError::io(&index_path, "missing \"sets\" array"))?
        .iter()
        .filter_map(|s| s["name"].as_str().map(str::to_string))
        .collect();
    let mut splits = Vec::new();
    for name in names {
        let mut parts = Vec::new();
        for part in ["train", "valid", "test"] {
            let file = split_file(&name, part);
            let path = ctx.require(&file, "benchmark split", "benchmark")?;
            ledger.input(&file)?;
            parts.push(read_records(&path, out)?);
        }
        let test = parts.pop().expect("three parts");
        let valid = parts.pop().expect("three parts");
        let train = parts.pop().expect("three parts");
        splits.push(BenchmarkSplit { name, train, valid, test });
    }
    Ok(splits)
}

pub fn train_model(ctx: &Context) -> Result<StageOutcome, CliError> {
    let pool_path = ctx.require(TRAIN_POOL, "training pool", "benchmark")?;
    let mut out = StageOutcome::default();
    let pool = read_records(&pool_path, &mut out)?;
    let lex = ctx.lexicon()?;
    let mut ledger = Ledger::new(ctx, "train")?;
    ledger.input(TRAIN_POOL)?;
    ledger.optional_input("lexicon", ctx.cfg.paths.lexicon.as_deref())?;

    let tok = Tokenizer::build(&pool)?;
    let pairs = prepare_pairs(&pool, &lex)?;
    let tc = ctx.cfg.train_config();
    let init = ModelParams::init(ctx.cfg.hyperparams(tok.size()), ctx.cfg.seed)?;
    let result = train(init, &pairs, &tok, &tc)?;

    let ckpt = ctx.artifact(CHECKPOINT);
    checkpoint::save(&result.params, &ckpt)?;
    ledger.produced(CHECKPOINT)?;
    ledger.produced(&format!("{CHECKPOINT}.manifest"))?;
    ledger.put(TOKENIZER, tok.to_tsv().as_bytes())?;
    ledger.put(LOSS_LOG, loss_log_csv(&result.log).as_bytes())?;

    let mut views = Vec::new();
    for p in pairs.iter().filter(|p| !result.skipped_too_long.contains(&p.id)) {
        let (das, dmlm) = noised_views(p, &tok, &tc, 0)?;
        views.push(json!({"id": p.id, "das": das, "dmlm": dmlm}));
    }
    ledger.put(NOISED_EXAMPLES, to_jsonl(&views).as_bytes())?;

    let translation_steps = result.log.iter().filter(|r| r.phase == Phase::Translation).count();
    let summary = json!({
        "records": pool.len(),
        "vocab_size": tok.size(),
        "num_parameters": result.params.num_parameters(),
        "params_checksum": result.params.checksum(),
        "steps": result.log.len(),
        "translation_steps": translation_steps,
        "final_multitask_loss": final_epoch_loss(&result.log, Phase::Multitask),
        "final_translation_loss": final_epoch_loss(&result.log, Phase::Translation),
        "substitution_rate": result.noise_stats.substitution_rate(),
        "noise_stats": result.noise_stats,
        "skipped_too_long": result.skipped_too_long,
    });
    ledger.put(TRAIN_SUMMARY, &pretty(&summary))?;
    ledger.finish()?;
    out.messages.push(format!(
        "train: {} steps over {} records, {} skipped as too long",
        result.log.len(),
        pairs.len(),
        summary["skipped_too_long"].as_array().map_or(0, Vec::len)
    ));
    Ok(out)
}

fn load_model(ctx: &Context, ledger: &mut Ledger) -> Result<(ModelParams, Tokenizer), CliError> {
    let ckpt = ctx.require(CHECKPOINT, "checkpoint", "train")?;
    let tok_path = ctx.require(TOKENIZER, "tokenizer", "train")?;
    ledger.input(CHECKPOINT)?;
    ledger.input(TOKENIZER)?;
    let params = checkpoint::load(&ckpt)?;
    let text = fs::read_to_string(&tok_path).map_err(|e| CliError::io(&tok_path, e))?;
    let tok = Tokenizer::from_tsv(&text)?;
    if tok.size() != params.hyperparams().vocab_size {
        return Err(CliError::Audit(format!(
            "tokenizer has {} entries but the checkpoint vocabulary is {}",
            tok.size(),
            params.hyperparams().vocab_size
        )));
    }
    Ok((params, tok))
}

/// Translate one sentence per line of `text`. Lines that are empty after
/// cleaning, or too long for the model, give an empty output line; the
/// latter are reported.
pub fn translate(ctx: &Context, label: &str, text: &str) -> Result<(StageOutcome, String), CliError> {
    let mut ledger = Ledger::new(ctx, "translate")?;
    let (params, tok) = load_model(ctx, &mut ledger)?;
    ledger.inputs.insert(format!("input:{label}"), sha256_hex(text.as_bytes()));
    let cleaner = ctx.cleaner()?;
    let max_len = params.hyperparams().max_len;
    let mut out = StageOutcome::default();

    let lines: Vec<String> = text.lines().map(|l| cleaner.clean(l)).collect();
    let mut todo = Vec::new();
    for (i, l) in lines.iter().enumerate() {
        let n = l.chars().count();
        if n > max_len {
            out.record_errors.push(LineError {
                path: label.into(),
                line: i + 1,
                message: format!("sentence has {n} characters, the model accepts {max_len}"),
            });
        } else if n > 0 {
            todo.push(i);
        }
    }
    let sources: Vec<&str> = todo.iter().map(|&i| lines[i].as_str()).collect();
    let hyps = translate_all(&params, &tok, &sources, &ctx.cfg.decode_config())?;
    let mut results = vec![String::new(); lines.len()];
    for (i, h) in todo.into_iter().zip(hyps) {
        results[i] = h;
    }
    let mut rendered = String::new();
    for r in &results {
        rendered.push_str(r);
        rendered.push('\n');
    }
    ledger.outputs.insert("stdout".into(), sha256_hex(rendered.as_bytes()));
    ledger.finish()?;
    out.messages.push(format!("translate: {} of {} lines translated", sources.len(), lines.len()));
    Ok((out, rendered))
}

pub fn evaluate(ctx: &Context) -> Result<StageOutcome, CliError> {
    let mut out = StageOutcome::default();
    let mut ledger = Ledger::new(ctx, "evaluate")?;
    let (params, tok) = load_model(ctx, &mut ledger)?;
    let splits = load_benchmark(ctx, &mut ledger, &mut out)?;
    if splits.is_empty() {
        return Err(CliError::Config("benchmark.sets is empty, nothing to evaluate".into()));
    }
    let report = evaluate_zero_shot(&params, &tok, &splits, &ctx.cfg.decode_config())?;
    let mut json = report.to_json();
    json.push('\n');
    ledger.put(EVAL_JSON, json.as_bytes())?;
    let table = report.render_table();
    ledger.put(EVAL_TABLE, table.as_bytes())?;
    ledger.finish()?;
    out.messages.push(table.trim_end().to_string());
    Ok(out)
}

pub fn ablate(ctx: &Context) -> Result<StageOutcome, CliError> {
    let pool_path = ctx.require(TRAIN_POOL, "training pool", "benchmark")?;
    let mut out = StageOutcome::default();
    let mut ledger = Ledger::new(ctx, "ablate")?;
    ledger.input(TRAIN_POOL)?;
    ledger.optional_input("lexicon", ctx.cfg.paths.lexicon.as_deref())?;
    let pool = read_records(&pool_path, &mut out)?;
    let splits = load_benchmark(ctx, &mut ledger, &mut out)?;
    if splits.is_empty() {
        return Err(CliError::Config("benchmark.sets is empty, nothing to evaluate".into()));
    }
    let eval_sets: Vec<(String, Vec<CorpusRecord>)> = splits.into_iter().map(|s| (s.name, s.test)).collect();
    let tok = Tokenizer::build(&pool)?;
    let pairs = prepare_pairs(&pool, &ctx.lexicon()?)?;
    let mut tc = ctx.cfg.train_config();
    if let Some(e) = ctx.cfg.ablation.epochs {
        tc.schedule.epochs = e;
    }
    let setup = AblationSetup {
        pairs: &pairs,
        tokenizer: &tok,
        hyperparams: ctx.cfg.hyperparams(tok.size()),
        train: tc,
        decode: ctx.cfg.decode_config(),
        eval_sets: &eval_sets,
    };
    let report = run_ablation_matrix(&setup, &ctx.cfg.ablation_variants()?, ctx.cfg.seed)?;
    let mut json = report.to_json();
    json.push('\n');
    ledger.put(ABLATION_JSON, json.as_bytes())?;
    let table = report.render_table();
    ledger.put(ABLATION_TABLE, table.as_bytes())?;
    ledger.finish()?;
    out.messages.push(table.trim_end().to_string());
    Ok(out)
}
