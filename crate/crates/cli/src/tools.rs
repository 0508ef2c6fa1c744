use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use causex::corpus::save_jsonl;
use causex::neural::{gradient_check, EmbeddingTable, NeuralExample, NeuralModel, Task, Variant};
use causex::pipeline::{mcnemar, mcnemar_counts};
use causex::synth::{demographics_csv, generate as synth_generate, split_corpus, strip_pos, SynthConfig};

use crate::io::{load_corpus, open_input};

#[derive(Debug, Args)]
pub struct McNemarArgs {
    /// Predictions of system A (output of `predict`).
    #[arg(long, required_unless_present = "counts")]
    pub a: Option<PathBuf>,
    /// Predictions of system B.
    #[arg(long, required_unless_present = "counts")]
    pub b: Option<PathBuf>,
    /// Labeled corpus; messages are matched by id.
    #[arg(long, required_unless_present = "counts")]
    pub gold: Option<PathBuf>,
    /// Discordant counts `B,C` instead of prediction files.
    #[arg(long, conflicts_with_all = ["a", "b", "gold"])]
    pub counts: Option<String>,
}

fn predictions(path: &Path) -> Result<HashMap<String, bool>> {
    let mut out = HashMap::new();
    for (i, line) in open_input(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?;
        let id = match &v["id"] {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => bail!("{} line {}: missing id", path.display(), i + 1),
        };
        let c = v["causality"]
            .as_bool()
            .ok_or_else(|| anyhow!("{} line {}: missing causality", path.display(), i + 1))?;
        out.insert(id, c);
    }
    Ok(out)
}

pub fn mcnemar_cmd(args: &McNemarArgs) -> Result<()> {
    let result = if let Some(counts) = &args.counts {
        let (b, c) = counts
            .split_once(',')
            .ok_or_else(|| anyhow!("--counts expects B,C"))?;
        mcnemar_counts(b.trim().parse()?, c.trim().parse()?)
    } else {
        let (pa, pb, gold) = (args.a.as_ref().unwrap(), args.b.as_ref().unwrap(), args.gold.as_ref().unwrap());
        let a = predictions(pa)?;
        let b = predictions(pb)?;
        let corpus = load_corpus(gold)?;
        let (mut va, mut vb, mut vg) = (Vec::new(), Vec::new(), Vec::new());
        for m in &corpus {
            let g = m
                .gold_causality
                .ok_or_else(|| anyhow!("message `{}` has no causality label", m.id))?;
            let x = a.get(&m.id).ok_or_else(|| anyhow!("`{}` missing from {}", m.id, pa.display()))?;
            let y = b.get(&m.id).ok_or_else(|| anyhow!("`{}` missing from {}", m.id, pb.display()))?;
            va.push(*x);
            vb.push(*y);
            vg.push(g);
        }
        mcnemar(&va, &vb, &vg)?
    };
    println!("b (A right, B wrong) {}", result.b);
    println!("c (A wrong, B right) {}", result.c);
    println!("chi2 {:.6}", result.statistic);
    println!("p {:.6}", result.p_value);
    Ok(())
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    /// Random instances per task and variant.
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 4)]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub embedding_dim: usize,
    #[arg(long, default_value_t = 3e-4)]
    pub eps: f64,
    /// Exit nonzero when any error reaches this value.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

pub fn gradcheck(args: &GradcheckArgs) -> Result<()> {
    println!("seed: {}", args.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let vocab = ["a", "b", "c", "d", "e", "f", "unseen1", "unseen2"];
    let mut failed = false;
    for task in [Task::Cp, Task::Cei] {
        for variant in Variant::ALL {
            let mut worst: f64 = 0.0;
            for k in 0..args.instances {
                let mut emb = EmbeddingTable::new(args.embedding_dim);
                for w in &vocab[..6] {
                    let v = (0..args.embedding_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                    emb.insert(w, v)?;
                }
                let model = NeuralModel::new(task, variant, Arc::new(emb), args.hidden_dim, 0.0, args.seed + k as u64)?;
                let n_args = rng.random_range(1..=4);
                let arguments: Vec<Vec<String>> = (0..n_args)
                    .map(|_| {
                        let len = rng.random_range(1..=5);
                        (0..len).map(|_| vocab.choose(&mut rng).unwrap().to_string()).collect()
                    })
                    .collect();
                let labels = match task {
                    Task::Cp => vec![rng.random()],
                    Task::Cei => (0..n_args).map(|_| rng.random()).collect(),
                };
                let ex = NeuralExample { arguments, labels };
                worst = worst.max(gradient_check(&model, &ex, args.eps)?);
            }
            let ok = worst < args.tolerance;
            failed |= !ok;
            println!(
                "{:<4} {:<9} max relative error {worst:.3e} {}",
                format!("{task:?}").to_lowercase(),
                variant.name(),
                if ok { "ok" } else { "FAIL" }
            );
        }
    }
    if failed {
        bail!("gradient check exceeded tolerance {}", args.tolerance);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub messages: usize,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub users: usize,
    #[arg(long, default_value_t = 25)]
    pub embedding_dim: usize,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub validation_fraction: f64,
}

pub fn generate(args: &GenerateArgs) -> Result<()> {
    println!("seed: {}", args.seed);
    let data = synth_generate(&SynthConfig {
        n_messages: args.messages,
        n_users: args.users,
        embedding_dim: args.embedding_dim,
        seed: args.seed,
        ..SynthConfig::default()
    })?;
    let (train, val, test) = split_corpus(&data.corpus, args.train_fraction, args.validation_fraction, args.seed)?;
    let dir = &args.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    save_jsonl(dir.join("train.jsonl"), &train)?;
    save_jsonl(dir.join("validation.jsonl"), &val)?;
    // Held-out messages lose their tags so evaluation exercises the tagger.
    save_jsonl(dir.join("test.jsonl"), &strip_pos(&test))?;
    save_jsonl(dir.join("all.jsonl"), &data.corpus)?;
    std::fs::write(dir.join("embeddings.txt"), data.embeddings.to_text())?;
    std::fs::write(dir.join("demographics.csv"), demographics_csv(&data.users))?;
    let mut out = std::io::stdout();
    writeln!(
        out,
        "wrote {} train, {} validation, {} test messages to {}",
        train.len(),
        val.len(),
        test.len(),
        dir.display()
    )?;
    Ok(())
}
