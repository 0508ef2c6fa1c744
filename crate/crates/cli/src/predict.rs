use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use causex::corpus::{tag_pos, tokens_to_json, Message, PosTagger};
use causex::pipeline::{evaluate_pipeline, run_pipeline, EvalReport, PipelineMode, PipelineOutput};
use causex::segmenter::{segment, ConnectiveLexicon, DiscourseArgument};

use crate::io::{load_corpus, load_pipeline, open_input, open_output, read_batch, write_json_line};

const BATCH: usize = 256;

/// `[[first, last], ...]` token ranges.
fn argument_ranges(args: &[DiscourseArgument]) -> Value {
    Value::Array(args.iter().map(|a| json!([a.first, a.last])).collect())
}

fn argument_details(message: &Message, args: &[DiscourseArgument]) -> Value {
    Value::Array(
        args.iter()
            .map(|a| {
                json!({
                    "text": a.text(message),
                    "kind": a.kind,
                    "connective": a.opens_with_connective,
                })
            })
            .collect(),
    )
}

fn insert_arguments(obj: &mut Map<String, Value>, message: &Message, args: &[DiscourseArgument]) {
    obj.insert("arguments".into(), argument_ranges(args));
    obj.insert("argument_details".into(), argument_details(message, args));
}

/// Moves a gold value aside so the prediction can take its key.
fn keep_gold(obj: &mut Map<String, Value>, key: &str) {
    if let Some(v) = obj.get(key).filter(|v| !v.is_null()).cloned() {
        obj.entry(format!("gold_{key}")).or_insert(v);
    }
}

pub fn annotate(mut obj: Map<String, Value>, out: &PipelineOutput) -> Value {
    keep_gold(&mut obj, "causality");
    keep_gold(&mut obj, "explanation_span");
    let m = &out.message;
    let chosen = out.explanation_indices();
    let span = match (chosen.first(), chosen.last()) {
        (Some(&a), Some(&b)) => json!([m.tokens[out.arguments[a].first].start, m.tokens[out.arguments[b].last].end]),
        _ => Value::Null,
    };
    obj.insert("tokens".into(), tokens_to_json(&m.tokens));
    obj.insert("causality".into(), json!(out.causal));
    obj.insert("explanation_span".into(), if out.causal { span } else { Value::Null });
    insert_arguments(&mut obj, m, &out.arguments);
    obj.insert("explanations".into(), json!(chosen));
    obj.insert("cp_margin".into(), json!(out.cp_margin));
    Value::Object(obj)
}

/// Pool capped by `CAUSE_PIPELINE_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CAUSE_PIPELINE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("CAUSE_PIPELINE_THREADS=`{v}` is not a thread count"))?;
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    Ok(b.build()?)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// JSONL messages; `-` reads stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides the mode stored in the model.
    #[arg(long)]
    pub mode: Option<PipelineMode>,
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let model = load_pipeline(&args.model, &args.embeddings)?;
    let mode = args.mode.unwrap_or(model.config.pipeline_mode);
    let pool = thread_pool()?;
    let mut lines = open_input(&args.input)?.lines();
    let mut out = open_output(args.output.as_ref())?;
    let mut line_no = 0;
    loop {
        let batch = read_batch(&mut lines, &mut line_no, BATCH)?;
        if batch.is_empty() {
            break;
        }
        let annotated: Vec<Value> = pool.install(|| {
            batch
                .into_par_iter()
                .map(|r| {
                    let o = run_pipeline(&r.message, &model, mode)
                        .with_context(|| format!("message `{}`", r.message.id))?;
                    Ok(annotate(r.object, &o))
                })
                .collect::<Result<_>>()
        })?;
        for v in &annotated {
            write_json_line(&mut out, v)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// One connective per line; replaces the built-in list.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Tag untagged tokens with this model's tagger (needs --embeddings).
    #[arg(long, requires = "embeddings")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

pub fn segment_cmd(args: &SegmentArgs) -> Result<()> {
    let (tagger, model_lexicon) = match (&args.model, &args.embeddings) {
        (Some(m), Some(e)) => {
            let p = load_pipeline(m, e)?;
            (p.tagger, Some(p.lexicon))
        }
        _ => (PosTagger::default(), None),
    };
    let lexicon = match &args.lexicon {
        Some(p) => ConnectiveLexicon::load(p)?,
        None => model_lexicon.unwrap_or_default(),
    };
    let mut lines = open_input(&args.input)?.lines();
    let mut out = open_output(args.output.as_ref())?;
    let mut line_no = 0;
    loop {
        let batch = read_batch(&mut lines, &mut line_no, BATCH)?;
        if batch.is_empty() {
            break;
        }
        for mut r in batch {
            r.message.tokens =
                tag_pos(&r.message.tokens, &tagger).with_context(|| format!("message `{}`", r.message.id))?;
            let arguments = segment(&r.message, &lexicon);
            r.object.insert("tokens".into(), tokens_to_json(&r.message.tokens));
            insert_arguments(&mut r.object, &r.message, &arguments);
            write_json_line(&mut out, &Value::Object(r.object))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Labeled JSONL corpus.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub mode: Option<PipelineMode>,
    /// Print the report as JSON instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn metrics_table(name: &str, r: &EvalReport) -> String {
    format!(
        "{name:<5} P {:.4}  R {:.4}  F1 {:.4}  (pos F1 {:.4}, neg F1 {:.4}; n={})",
        r.weighted_precision,
        r.weighted_recall,
        r.weighted_f1,
        r.positive.f1,
        r.negative.f1,
        r.positive.support + r.negative.support
    )
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let model = load_pipeline(&args.model, &args.embeddings)?;
    let mode = args.mode.unwrap_or(model.config.pipeline_mode);
    let corpus = load_corpus(&args.input)?;
    let e = evaluate_pipeline(&model, &corpus, mode)?;
    if let Some(p) = &args.report {
        std::fs::write(p, serde_json::to_string_pretty(&e)?).with_context(|| format!("writing {}", p.display()))?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&e)?);
    } else {
        println!("mode: {}", serde_json::to_value(mode)?.as_str().unwrap_or_default());
        println!("{}", metrics_table("CP", &e.cp));
        println!("{}", metrics_table("CEI", &e.cei));
        println!(
            "messages {}, CEI invoked {}, unalignable gold spans {}",
            e.messages, e.cei_invocations, e.unalignable
        );
    }
    Ok(())
}
