//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use causex::analysis::{cohens_d, log_odds_dirichlet, pearson_r};
use causex::corpus::{Message, Tag, Token};
use causex::features::FeatureVector;
use causex::linsvm::{train_svm_traced, SvmConfig};
use causex::features::FeatureSpace;
use causex::model_file::{from_bytes, to_bytes};
use causex::neural::{gradient_check, EmbeddingTable, NeuralExample, NeuralModel, Task, Variant};
use causex::pipeline::{
    evaluate, evaluate_pipeline, mcnemar_counts, run_pipeline, train_pipeline, CeiTraining, PipelineMode,
    RunConfig,
};
use causex::segmenter::{segment, sentence_spans, ArgumentKind, ConnectiveLexicon};
use causex::synth::{generate, split_corpus, strip_pos, SynthConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let el = start.elapsed();
    (el < limit, format!("{:.1}s", el.as_secs_f64()))
}

// 1

fn random_example(rng: &mut ChaCha8Rng, task: Task, vocab: &[&str]) -> NeuralExample {
    let n_args = rng.random_range(1..=4);
    let arguments: Vec<Vec<String>> = (0..n_args)
        .map(|_| {
            let len = rng.random_range(1..=5);
            (0..len).map(|_| vocab.choose(rng).unwrap().to_string()).collect()
        })
        .collect();
    let labels = match task {
        Task::Cp => vec![rng.random()],
        Task::Cei => (0..n_args).map(|_| rng.random()).collect(),
    };
    NeuralExample { arguments, labels }
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let vocab = ["a", "b", "c", "d", "e", "f", "oov1", "oov2"];
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    for task in [Task::Cp, Task::Cei] {
        for variant in Variant::ALL {
            for k in 0..20 {
                let dim = rng.random_range(2..=5);
                let mut emb = EmbeddingTable::new(dim);
                for w in &vocab[..6] {
                    emb.insert(w, (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
                }
                let hidden = rng.random_range(2..=8);
                let model = NeuralModel::new(task, variant, Arc::new(emb), hidden, 0.3, 100 + k).unwrap();
                let ex = random_example(&mut rng, task, &vocab);
                worst = worst.max(gradient_check(&model, &ex, 3e-4).unwrap());
                instances += 1;
            }
        }
    }
    let (fast, t) = within(start, Duration::from_secs(120));
    outcome(
        worst < 1e-4 && fast,
        format!("{instances} instances at eps 3e-4, max relative error {worst:.2e}, {t}"),
    )
}

// 2

fn tagged(pieces: &[(&str, Tag)]) -> Message {
    let mut text = String::new();
    let mut tokens = Vec::new();
    for (i, (w, tag)) in pieces.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        let start = text.len();
        text.push_str(w);
        tokens.push(Token {
            text: w.to_string(),
            pos: Some(*tag),
            start,
            end: text.len(),
        });
    }
    let mut m = Message::new("m", text);
    m.tokens = tokens;
    m
}

fn spans(m: &Message, lex: &ConnectiveLexicon) -> Vec<String> {
    segment(m, lex).iter().map(|a| a.text(m).to_string()).collect()
}

fn segmentation_examples(lex: &ConnectiveLexicon) -> Result<(), String> {
    use Tag::*;
    let fig = tagged(&[
        ("My", Determiner),
        ("parser", Noun),
        ("failed", Verb),
        ("because", Preposition),
        ("I", Pronoun),
        ("always", Adverb),
        ("have", Verb),
        ("bugs", Noun),
        (".", Punctuation),
    ]);
    let fruit = tagged(&[
        ("I", Pronoun),
        ("like", Verb),
        ("apple", Noun),
        ("and", CoordConj),
        ("banana", Noun),
    ]);
    let mut sad = Message::new("m", "My test result... :(");
    for (t, tag) in sad.tokens.iter_mut().zip([Determiner, Noun, Noun, Punctuation, Emoticon]) {
        t.pos = Some(tag);
    }
    let cases: [(&Message, &[&str]); 3] = [
        (&fig, &["My parser failed", "because I always have bugs ."]),
        (&fruit, &["I like apple and banana"]),
        (&sad, &["My test result...", ":("]),
    ];
    for (m, want) in cases {
        let got = spans(m, lex);
        if got != want {
            return Err(format!("`{}` segmented as {got:?}", m.raw_text));
        }
    }
    let kinds: Vec<ArgumentKind> = segment(&sad, lex).iter().map(|a| a.kind).collect();
    if kinds != [ArgumentKind::Plain, ArgumentKind::Emoji] {
        return Err(format!("emoji example kinds {kinds:?}"));
    }
    Ok(())
}

const FUZZ_POOL: &[(&str, Tag)] = &[
    ("i", Tag::Pronoun),
    ("they", Tag::Pronoun),
    ("bus", Tag::Noun),
    ("work", Tag::Noun),
    ("missed", Tag::Verb),
    ("is", Tag::Verb),
    ("love", Tag::Verb),
    ("the", Tag::Determiner),
    ("very", Tag::Adverb),
    ("happy", Tag::Adjective),
    ("because", Tag::Preposition),
    ("cuz", Tag::Preposition),
    ("but", Tag::CoordConj),
    ("and", Tag::CoordConj),
    ("so", Tag::Preposition),
    ("as a result", Tag::Other),
    ("if", Tag::Preposition),
    ("lol", Tag::Interjection),
    (",", Tag::Punctuation),
    (",", Tag::Punctuation),
    (".", Tag::Punctuation),
    ("!", Tag::Punctuation),
    ("...", Tag::Punctuation),
    (":(", Tag::Emoticon),
    (":)", Tag::Emoticon),
    ("<3", Tag::Emoticon),
];

fn check_invariants(m: &Message, lex: &ConnectiveLexicon) -> Result<(), String> {
    let args = segment(m, lex);
    let n = m.tokens.len();
    if args != segment(m, lex) {
        return Err("segmentation is not deterministic".into());
    }
    let mut next = 0;
    for a in &args {
        if a.first != next || a.last < a.first || a.last >= n {
            return Err(format!("arguments do not partition the tokens: {args:?}"));
        }
        next = a.last + 1;
        let all_e = m.tokens[a.range()].iter().all(|t| t.pos == Some(Tag::Emoticon));
        if (a.kind == ArgumentKind::Emoji) != all_e {
            return Err(format!("kind mismatch for tokens {}..={}", a.first, a.last));
        }
        if a.opens_with_connective.is_some() {
            let (s, e) = sentence_spans(m)
                .into_iter()
                .find(|(s, e)| (*s..*e).contains(&a.first))
                .unwrap();
            let len = a.opens_with_connective.as_ref().unwrap().split(' ').count();
            let before = m.tokens[s..a.first].iter().any(|t| t.is_verb());
            let after = m.tokens[(a.first + len).min(e)..e].iter().any(|t| t.is_verb());
            if !(before && after) {
                return Err(format!("connective at {} lacks a verb on one side", a.first));
            }
        }
    }
    if next != n {
        return Err("arguments do not cover the message".into());
    }
    // Every maximal emoticon run is exactly one argument.
    let mut i = 0;
    while i < n {
        if m.tokens[i].pos == Some(Tag::Emoticon) {
            let mut j = i;
            while j + 1 < n && m.tokens[j + 1].pos == Some(Tag::Emoticon) {
                j += 1;
            }
            if !args.iter().any(|a| a.first == i && a.last == j) {
                return Err(format!("emoticon run {i}..={j} is not one argument"));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(())
}

fn segmentation_suite() -> Outcome {
    let start = Instant::now();
    let lex = ConnectiveLexicon::default();
    if let Err(e) = segmentation_examples(&lex) {
        return outcome(false, e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for k in 0..10_000 {
        let len = rng.random_range(1..=25);
        let pieces: Vec<(&str, Tag)> = (0..len).map(|_| *FUZZ_POOL.choose(&mut rng).unwrap()).collect();
        // Multi-word entries are split into single tokens sharing the tag.
        let expanded: Vec<(&str, Tag)> = pieces
            .iter()
            .flat_map(|(w, t)| w.split(' ').map(move |p| (p, *t)))
            .collect();
        let m = tagged(&expanded);
        if let Err(e) = check_invariants(&m, &lex) {
            return outcome(false, format!("fuzz case {k} `{}`: {e}", m.raw_text));
        }
    }
    let (fast, t) = within(start, Duration::from_secs(60));
    outcome(fast, format!("3 examples exact, 10000 fuzzed messages, {t}"))
}

// 3

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let data = generate(&SynthConfig::default()).unwrap();
    let (train, val, test) = split_corpus(&data.corpus, 0.7, 0.1, 13).unwrap();
    let test = strip_pos(&test);
    let emb = Arc::new(data.embeddings);

    let config = RunConfig::default();
    let (causal_only, _) = train_pipeline(&config, &train, Some(&val), emb.clone()).unwrap();
    let two_stage = evaluate_pipeline(&causal_only, &test, PipelineMode::TwoStage).unwrap();

    let all_config = RunConfig {
        cei_training_mode: CeiTraining::All,
        pipeline_mode: PipelineMode::CeiOnly,
        ..config
    };
    let (all, _) = train_pipeline(&all_config, &train, Some(&val), emb).unwrap();
    let cei_only = evaluate_pipeline(&all, &test, PipelineMode::CeiOnly).unwrap();

    let (cp, cei, base) = (two_stage.cp.weighted_f1, two_stage.cei.weighted_f1, cei_only.cei.weighted_f1);
    let (fast, t) = within(start, Duration::from_secs(600));
    outcome(
        cp >= 0.95 && cei >= 0.95 && cei >= base && fast,
        format!(
            "{} test messages: CP F1 {cp:.4}, CEI F1 {cei:.4}, CEI_all-only F1 {base:.4}, {t}",
            test.len()
        ),
    )
}

// 4

fn metric_oracles() -> Outcome {
    let mut failures = Vec::new();
    let r = evaluate(&[true, false, false, false], &[true, true, false, false]).unwrap();
    let checks = [
        ("class-1 F1", r.positive.f1, 2.0 / 3.0, 1e-12),
        ("class-0 F1", r.negative.f1, 0.8, 1e-12),
        ("weighted F1", r.weighted_f1, 11.0 / 15.0, 1e-12),
    ];
    for (name, got, want, tol) in checks {
        if (got - want).abs() > tol {
            failures.push(format!("{name} {got} != {want}"));
        }
    }
    let m = mcnemar_counts(10, 2);
    if (m.statistic - 4.0833).abs() > 1e-4 || (m.p_value - 0.0433).abs() > 1e-3 {
        failures.push(format!("mcnemar {} {}", m.statistic, m.p_value));
    }
    let stats = [
        ("pearson", pearson_r(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5),
        ("pearson+", pearson_r(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0),
        ("pearson-", pearson_r(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap(), -1.0),
        ("cohens_d", cohens_d(&[0.0, 2.0], &[-1.0, 1.0]).unwrap(), 0.5f64.sqrt()),
        ("cohens_d same", cohens_d(&[1.0, 3.0], &[1.0, 3.0]).unwrap(), 0.0),
    ];
    for (name, got, want) in stats {
        if (got - want).abs() > 1e-9 {
            failures.push(format!("{name} {got} != {want}"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("weighted F1 {:.4}, chi2 {:.4}, p {:.4}", r.weighted_f1, m.statistic, m.p_value)
        } else {
            failures.join("; ")
        },
    )
}

// 5

/// Direct transcription of the formula, one word at a time.
fn brute_log_odds(yi: f64, ni: f64, yj: f64, nj: f64, a: f64, a0: f64) -> (f64, f64) {
    let oi = (yi + a) / (ni + a0 - yi - a);
    let oj = (yj + a) / (nj + a0 - yj - a);
    let delta = oi.ln() - oj.ln();
    let var = 1.0 / (yi + a) + 1.0 / (yj + a);
    (delta, delta / var.sqrt())
}

fn log_odds_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for table in 0..100 {
        let vocab = rng.random_range(2..=40);
        let mut ci = BTreeMap::new();
        let mut cj = BTreeMap::new();
        let mut prior = BTreeMap::new();
        for w in 0..vocab {
            let term = format!("w{w}");
            ci.insert(term.clone(), rng.random_range(0..50u64));
            cj.insert(term.clone(), rng.random_range(0..50u64));
            prior.insert(term, rng.random_range(0.01..20.0));
        }
        ci.insert("w0".into(), 1 + ci["w0"]);
        cj.insert("w0".into(), 1 + cj["w0"]);
        let ni: u64 = ci.values().sum();
        let nj: u64 = cj.values().sum();
        let a0: f64 = prior.values().sum();
        let r = log_odds_dirichlet(&ci, &cj, &prior).unwrap();
        for s in &r.scores {
            let (d, z) = brute_log_odds(
                ci[&s.term] as f64,
                ni as f64,
                cj[&s.term] as f64,
                nj as f64,
                prior[&s.term],
                a0,
            );
            worst = worst.max((d - s.delta).abs()).max((z - s.z_score).abs());
        }
        let swapped = log_odds_dirichlet(&cj, &ci, &prior).unwrap();
        for s in &r.scores {
            if swapped.get(&s.term).unwrap().delta != -s.delta {
                return outcome(false, format!("table {table}: swapping groups does not negate `{}`", s.term));
            }
        }
        let same = log_odds_dirichlet(&ci, &ci, &prior).unwrap();
        if same.scores.iter().any(|s| s.delta != 0.0) {
            return outcome(false, format!("table {table}: identical groups give nonzero delta"));
        }
    }
    outcome(worst <= 1e-9, format!("100 tables, max deviation {worst:.2e}"))
}

// 6

fn determinism_and_persistence() -> Outcome {
    let data = generate(&SynthConfig {
        n_messages: 400,
        seed: 7,
        ..SynthConfig::default()
    })
    .unwrap();
    let (train, _, probe) = split_corpus(&data.corpus, 0.7, 0.05, 7).unwrap();
    let probe: Vec<Message> = strip_pos(&probe).iter().take(100).cloned().collect();
    let emb = Arc::new(data.embeddings);
    let config = RunConfig {
        epochs: 3,
        hidden_dim: Some(8),
        ..RunConfig::default()
    };
    let (a, _) = train_pipeline(&config, &train, None, emb.clone()).unwrap();
    let (b, _) = train_pipeline(&config, &train, None, emb.clone()).unwrap();
    let bytes_a = to_bytes(&a).unwrap();
    if bytes_a != to_bytes(&b).unwrap() {
        return outcome(false, "same seed produced different model files");
    }
    let loaded = from_bytes(&bytes_a, emb).unwrap();
    if to_bytes(&loaded).unwrap() != bytes_a {
        return outcome(false, "reserialized model differs");
    }
    for m in &probe {
        for mode in [PipelineMode::TwoStage, PipelineMode::CeiOnly] {
            let x = run_pipeline(m, &a, mode).unwrap();
            let y = run_pipeline(m, &loaded, mode).unwrap();
            if x != y || x.cp_margin.to_bits() != y.cp_margin.to_bits() {
                return outcome(false, format!("prediction differs on `{}`", m.id));
            }
        }
    }
    outcome(
        true,
        format!("{} bytes, identical across runs; {} probe messages agree", bytes_a.len(), probe.len()),
    )
}

// 7

fn svm_sanity() -> Outcome {
    let mut x = Vec::new();
    let mut y = Vec::new();
    // 20 points; each carries two of five class-specific features.
    for i in 0..20 {
        let pos = i % 2 == 0;
        let mut fv = FeatureVector::new();
        for k in [i % 5, (i + 2) % 5] {
            fv.set(format!("{}{k}", if pos { "p" } else { "n" }), 1.0);
        }
        x.push(fv);
        y.push(pos);
    }
    let space = FeatureSpace::fit(&x);
    let config = SvmConfig {
        epochs: 100,
        ..SvmConfig::default()
    };
    let trace = train_svm_traced(&x, &y, &space, &config, true).unwrap();
    let correct = x.iter().zip(&y).filter(|(xi, &yi)| trace.model.predict(xi).0 == yi).count();
    let worst_rise = trace
        .objective
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        correct == x.len() && worst_rise <= 1e-6,
        format!(
            "training accuracy {correct}/{}, largest epoch-to-epoch objective change {worst_rise:.2e}",
            x.len()
        ),
    )
}

fn main() {
    // Honour `cargo test -- --list` and filters used by the default harness.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("gradient fidelity", gradient_fidelity),
        ("segmentation suite", segmentation_suite),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("metric oracles", metric_oracles),
        ("log-odds oracle", log_odds_oracle),
        ("determinism and persistence", determinism_and_persistence),
        ("svm sanity", svm_sanity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += !o.pass as usize;
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
