use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use causex::analysis::{cause_word_report, cohens_d, cp_ratio_table, pearson_r, TermScore};
use causex::pipeline::run_pipeline;

use crate::io::{load_corpus, load_pipeline, open_output};
use crate::predict::thread_pool;

#[derive(Debug, Args)]
pub struct DemographicsArgs {
    /// JSONL posts with `user_id`.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV with `user_id`, `age` and a group column.
    #[arg(long)]
    pub demographics: PathBuf,
    #[arg(long, default_value = "group")]
    pub group_column: String,
    /// Use the corpus causality labels instead of a model.
    #[arg(long, conflicts_with = "model")]
    pub gold: bool,
    #[arg(long, requires = "embeddings")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Users with fewer posts are left out.
    #[arg(long, default_value_t = 1)]
    pub min_posts: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

struct Person {
    age: f64,
    group: String,
}

fn read_demographics(args: &DemographicsArgs) -> Result<BTreeMap<String, Person>> {
    let path = &args.demographics;
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| anyhow!("{}: no `{name}` column", path.display()))
    };
    let (iu, ia, ig) = (col("user_id")?, col("age")?, col(&args.group_column)?);
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let age: f64 = rec[ia]
            .trim()
            .parse()
            .with_context(|| format!("{} row {}: bad age `{}`", path.display(), i + 2, &rec[ia]))?;
        out.insert(
            rec[iu].trim().to_string(),
            Person {
                age,
                group: rec[ig].trim().to_string(),
            },
        );
    }
    Ok(out)
}

pub fn demographics(args: &DemographicsArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let people = read_demographics(args)?;
    let flags: Vec<bool> = match (&args.model, &args.embeddings, args.gold) {
        (_, _, true) => corpus
            .iter()
            .map(|m| m.gold_causality.ok_or_else(|| anyhow!("message `{}` has no causality label", m.id)))
            .collect::<Result<_>>()?,
        (Some(model), Some(emb), false) => {
            let model = load_pipeline(model, emb)?;
            let mode = model.config.pipeline_mode;
            thread_pool()?.install(|| {
                corpus
                    .messages
                    .par_iter()
                    .map(|m| Ok(run_pipeline(m, &model, mode)?.causal))
                    .collect::<Result<_>>()
            })?
        }
        _ => bail!("pass --gold or --model with --embeddings"),
    };
    let mut posts = Vec::new();
    for (m, causal) in corpus.iter().zip(flags) {
        let user = m
            .user_id
            .clone()
            .ok_or_else(|| anyhow!("message `{}` has no user_id", m.id))?;
        posts.push((user, causal));
    }
    let table: Vec<_> = cp_ratio_table(&posts)
        .into_iter()
        .filter(|u| u.n_posts >= args.min_posts && people.contains_key(&u.user_id))
        .collect();

    let ages: Vec<f64> = table.iter().map(|u| people[&u.user_id].age).collect();
    let ratios: Vec<f64> = table.iter().map(|u| u.cp_ratio).collect();
    let age_r = pearson_r(&ages, &ratios).map_err(|e| e.to_string());

    let groups: BTreeSet<&str> = table.iter().map(|u| people[&u.user_id].group.as_str()).collect();
    let d = if groups.len() == 2 {
        let names: Vec<&str> = groups.into_iter().collect();
        let of = |g: &str| -> Vec<f64> {
            table
                .iter()
                .filter(|u| people[&u.user_id].group == g)
                .map(|u| u.cp_ratio)
                .collect()
        };
        json!({
            "groups": names,
            "d": cohens_d(&of(names[0]), &of(names[1])).map_err(|e| e.to_string()).ok(),
        })
    } else {
        json!({ "groups": groups, "d": null, "note": "needs exactly two groups" })
    };

    let users: Vec<_> = table
        .iter()
        .map(|u| {
            let p = &people[&u.user_id];
            json!({
                "user_id": u.user_id,
                "n_posts": u.n_posts,
                "n_causal": u.n_causal,
                "cp_ratio": u.cp_ratio,
                "age": p.age,
                "group": p.group,
            })
        })
        .collect();
    let report = json!({
        "source": if args.gold { "gold" } else { "model" },
        "n_users": table.len(),
        "age_pearson_r": age_r.as_ref().ok(),
        "age_pearson_error": age_r.as_ref().err(),
        "group_cohens_d": d,
        "users": users,
    });
    let mut out = open_output(args.output.as_ref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct LogOddsArgs {
    /// JSONL reviews with `label` = negative | positive.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    /// Total mass of the informative Dirichlet prior.
    #[arg(long, default_value_t = 500.0)]
    pub prior_mass: f64,
    /// Print JSON instead of TSV.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn tsv_rows(out: &mut dyn Write, list: &str, scores: &[TermScore]) -> Result<()> {
    for (i, s) in scores.iter().enumerate() {
        writeln!(
            out,
            "{list}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
            i + 1,
            s.term,
            s.z_score,
            s.delta,
            s.count_i,
            s.count_j
        )?;
    }
    Ok(())
}

pub fn log_odds(args: &LogOddsArgs) -> Result<()> {
    let model = load_pipeline(&args.model, &args.embeddings)?;
    let reviews = load_corpus(&args.input)?;
    let report = cause_word_report(&reviews, &model, args.top_k, args.prior_mass)?;
    let mut out = open_output(args.output.as_ref())?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        writeln!(out, "list\trank\tterm\tz\tdelta\tcount_negative\tcount_positive")?;
        tsv_rows(&mut out, "ce", &report.ce)?;
        tsv_rows(&mut out, "non_ce", &report.non_ce)?;
    }
    out.flush()?;
    Ok(())
}
