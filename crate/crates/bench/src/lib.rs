//! Shared fixtures for the benchmarks.

use causex::features::extract_message_features;
use causex::synth::{generate, SynthConfig, SynthData};
use causex::{segment, ConnectiveLexicon, FeatureVector, SentimentLexicon};

pub fn synth(n_messages: usize) -> SynthData {
    generate(&SynthConfig {
        n_messages,
        seed: 13,
        ..SynthConfig::default()
    })
    .expect("synthetic corpus")
}

/// Feature vectors and causality labels for every message.
pub fn labeled_features(data: &SynthData) -> (Vec<FeatureVector>, Vec<bool>) {
    let lexicon = ConnectiveLexicon::default();
    let sentiment = SentimentLexicon::default();
    data.corpus
        .iter()
        .map(|m| {
            let args = segment(m, &lexicon);
            let fv = extract_message_features(m, &args, &sentiment).expect("features");
            (fv, m.gold_causality.unwrap_or(false))
        })
        .unzip()
}
