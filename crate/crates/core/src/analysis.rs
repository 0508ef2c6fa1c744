//! Per-user causality rates, association statistics, and informative
//! Dirichlet log-odds for words inside and outside causal explanations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Tag};
use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, PipelineMode, PipelineModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStats {
    pub user_id: String,
    pub n_posts: usize,
    pub n_causal: usize,
    pub cp_ratio: f64,
}

/// One row per user, sorted by user id.
pub fn cp_ratio_table(posts: &[(String, bool)]) -> Vec<UserStats> {
    let mut acc: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (user, causal) in posts {
        let e = acc.entry(user).or_default();
        e.0 += 1;
        e.1 += *causal as usize;
    }
    acc.into_iter()
        .map(|(u, (n, c))| UserStats {
            user_id: u.to_string(),
            n_posts: n,
            n_causal: c,
            cp_ratio: c as f64 / n as f64,
        })
        .collect()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InvalidParameter("pearson_r needs at least 3 points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Standardized mean difference with the pooled sample standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidParameter("cohens_d needs at least 2 values per group".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((mean(a) - mean(b)) / pooled)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: String,
    pub delta: f64,
    pub variance: f64,
    pub z_score: f64,
    pub count_i: u64,
    pub count_j: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogOddsResult {
    /// Sorted by z-score, highest first (most associated with group i).
    pub scores: Vec<TermScore>,
    pub total_i: u64,
    pub total_j: u64,
    pub prior_total: f64,
}

impl LogOddsResult {
    pub fn get(&self, term: &str) -> Option<&TermScore> {
        self.scores.iter().find(|s| s.term == term)
    }

    pub fn top(&self, k: usize) -> &[TermScore] {
        &self.scores[..k.min(self.scores.len())]
    }
}

/// Prior proportional to the combined counts, scaled to total `mass`.
pub fn scaled_prior(
    counts_i: &BTreeMap<String, u64>,
    counts_j: &BTreeMap<String, u64>,
    mass: f64,
) -> Result<BTreeMap<String, f64>> {
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter("prior mass must be positive".into()));
    }
    let mut combined: BTreeMap<String, f64> = BTreeMap::new();
    for (t, &c) in counts_i.iter().chain(counts_j) {
        *combined.entry(t.clone()).or_default() += c as f64;
    }
    let total: f64 = combined.values().sum();
    if total == 0.0 {
        return Err(Error::InvalidParameter("no counts to build a prior from".into()));
    }
    combined.values_mut().for_each(|v| *v *= mass / total);
    Ok(combined)
}

/// Log-odds ratio of each term between groups i and j with an informative
/// Dirichlet prior, and its z-score.
pub fn log_odds_dirichlet(
    counts_i: &BTreeMap<String, u64>,
    counts_j: &BTreeMap<String, u64>,
    prior: &BTreeMap<String, f64>,
) -> Result<LogOddsResult> {
    if let Some((term, _)) = prior.iter().find(|(_, &a)| !(a > 0.0 && a.is_finite())) {
        return Err(Error::NonPositivePrior { term: term.clone() });
    }
    if prior.len() < 2 {
        // A single-term vocabulary has infinite odds.
        return Err(Error::InvalidParameter("prior needs at least two terms".into()));
    }
    let n_i: u64 = counts_i.values().sum();
    let n_j: u64 = counts_j.values().sum();
    if n_i == 0 || n_j == 0 {
        return Err(Error::InvalidParameter("both groups need at least one count".into()));
    }
    let a0: f64 = prior.values().sum();
    let mut terms: Vec<&String> = counts_i.keys().chain(counts_j.keys()).collect();
    terms.sort();
    terms.dedup();
    let mut scores = Vec::with_capacity(terms.len());
    for term in terms {
        let a = *prior
            .get(term)
            .ok_or_else(|| Error::NonPositivePrior { term: term.clone() })?;
        let yi = counts_i.get(term).copied().unwrap_or(0);
        let yj = counts_j.get(term).copied().unwrap_or(0);
        let (fi, fj) = (yi as f64, yj as f64);
        let delta = ((fi + a) / (n_i as f64 + a0 - fi - a)).ln() - ((fj + a) / (n_j as f64 + a0 - fj - a)).ln();
        let variance = 1.0 / (fi + a) + 1.0 / (fj + a);
        scores.push(TermScore {
            term: term.clone(),
            delta,
            variance,
            z_score: delta / variance.sqrt(),
            count_i: yi,
            count_j: yj,
        });
    }
    scores.sort_by(|x, y| y.z_score.total_cmp(&x.z_score).then_with(|| x.term.cmp(&y.term)));
    Ok(LogOddsResult {
        scores,
        total_i: n_i,
        total_j: n_j,
        prior_total: a0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseWordReport {
    /// Terms inside predicted explanations, most negative-associated first.
    pub ce: Vec<TermScore>,
    /// Terms in all other arguments.
    pub non_ce: Vec<TermScore>,
}

fn polarity(label: Option<&str>) -> Option<bool> {
    match label?.to_ascii_lowercase().as_str() {
        "negative" | "neg" => Some(true),
        "positive" | "pos" => Some(false),
        _ => None,
    }
}

/// Unigrams and bigrams of lexical tokens.
fn ngrams(words: &[String]) -> impl Iterator<Item = String> + '_ {
    words
        .iter()
        .cloned()
        .chain(words.windows(2).map(|w| w.join(" ")))
}

/// Runs the two-stage pipeline over polarity-labeled reviews and ranks terms
/// by association with negative reviews, separately inside and outside
/// predicted causal explanations. Messages without a polarity label are
/// skipped.
pub fn cause_word_report(
    reviews: &Corpus,
    model: &PipelineModel,
    top_k: usize,
    prior_mass: f64,
) -> Result<CauseWordReport> {
    if top_k == 0 {
        return Ok(CauseWordReport {
            ce: Vec::new(),
            non_ce: Vec::new(),
        });
    }
    // [inside explanation][negative review]
    let mut counts: [[BTreeMap<String, u64>; 2]; 2] = Default::default();
    for m in reviews {
        let Some(negative) = polarity(m.label.as_deref()) else {
            continue;
        };
        let out = run_pipeline(m, model, PipelineMode::TwoStage)?;
        for (arg, &is_expl) in out.arguments.iter().zip(&out.explanations) {
            let words: Vec<String> = arg
                .tokens(&out.message)
                .iter()
                .filter(|t| {
                    !matches!(
                        t.pos,
                        Some(Tag::Punctuation | Tag::Emoticon | Tag::Url | Tag::Mention)
                    )
                })
                .map(|t| t.text.to_lowercase())
                .collect();
            let bucket = &mut counts[is_expl as usize][negative as usize];
            for g in ngrams(&words) {
                *bucket.entry(g).or_default() += 1;
            }
        }
    }
    let rank = |pair: &[BTreeMap<String, u64>; 2]| -> Result<Vec<TermScore>> {
        let (neg, pos) = (&pair[1], &pair[0]);
        let prior = scaled_prior(neg, pos, prior_mass)?;
        let mut r = log_odds_dirichlet(neg, pos, &prior)?.scores;
        r.truncate(top_k);
        Ok(r)
    };
    Ok(CauseWordReport {
        ce: rank(&counts[1])?,
        non_ce: rank(&counts[0])?,
    })
}
