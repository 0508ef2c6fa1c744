//! `causex`: segment, train, predict and analyze causal explanations in
//! social-media messages.

mod analyze;
mod config;
mod io;
mod predict;
mod tools;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "causex", version, about = "Causality prediction and causal explanation identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split messages into discourse arguments.
    Segment(predict::SegmentArgs),
    /// Train the tagger, causality SVM and explanation LSTM; write a model file.
    Train(train::TrainArgs),
    /// Annotate messages with causality and explanation arguments.
    Predict(predict::PredictArgs),
    /// Score a model on a labeled corpus.
    Eval(predict::EvalArgs),
    /// McNemar's test between two systems' causality predictions.
    Mcnemar(tools::McNemarArgs),
    /// Compare backpropagated and finite-difference gradients.
    Gradcheck(tools::GradcheckArgs),
    /// Per-user causality rates against age and a two-way grouping.
    AnalyzeDemographics(analyze::DemographicsArgs),
    /// Words tied to negative reviews inside and outside explanations.
    AnalyzeLogodds(analyze::LogOddsArgs),
    /// Write the seeded synthetic corpus, embeddings and demographics.
    Generate(tools::GenerateArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Segment(a) => predict::segment_cmd(&a),
        Command::Train(a) => train::train(&a),
        Command::Predict(a) => predict::predict(&a),
        Command::Eval(a) => predict::eval(&a),
        Command::Mcnemar(a) => tools::mcnemar_cmd(&a),
        Command::Gradcheck(a) => tools::gradcheck(&a),
        Command::AnalyzeDemographics(a) => analyze::demographics(&a),
        Command::AnalyzeLogodds(a) => analyze::log_odds(&a),
        Command::Generate(a) => tools::generate(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
