//! Execution rate, accuracy, AUC, and output distributions over a run.
//!
//! AUC treats each answer as a score (TRUE = 1.0, UNKNOWN = 0.5, FALSE = 0.0)
//! and is the Mann-Whitney statistic of those scores against the labels, with
//! ties counted as half.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Verdict;
use crate::pipeline::ItemOutcome;

/// Recorded in every report so readers know how AUC was computed.
pub const AUC_SCORING: &str = "TRUE=1.0 UNKNOWN=0.5 FALSE=0.0, midrank ties";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no outcomes to score")]
    EmptyRun,
    #[error("AUC needs both label classes")]
    SingleClass,
    #[error("cannot write {path}: {source}")]
    WriteFailure {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read report {path}: {reason}")]
    ReadFailure { path: PathBuf, reason: String },
}

/// A model answer paired with the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Judgement {
    pub verdict: Verdict,
    pub label: bool,
}

impl Judgement {
    pub fn new(verdict: Verdict, label: bool) -> Self {
        Judgement { verdict, label }
    }
}

pub fn score(v: Verdict) -> f64 {
    match v {
        Verdict::True => 1.0,
        Verdict::Unknown => 0.5,
        Verdict::False => 0.0,
    }
}

/// An exact fraction `hits / total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub hits: u64,
    pub total: u64,
}

impl Rate {
    pub fn value(self) -> f64 {
        self.hits as f64 / self.total as f64
    }

    /// Percentage rounded half-up to two decimals, computed in integers.
    pub fn percent_2dp(self) -> String {
        let hundredths = (self.hits * 20_000 + self.total) / (2 * self.total);
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

/// Rounds a non-negative value half-up to `decimals` places.
pub fn round_half_up(value: f64, decimals: u32) -> String {
    let scale = 10f64.powi(decimals as i32);
    // absorb binary representation error so that e.g. 0.945 rounds up
    let scaled = (value * scale * (1.0 + 1e-12) + 0.5).floor();
    format!("{:.*}", decimals as usize, scaled / scale)
}

pub fn execution_rate(judgements: &[Judgement]) -> Result<Rate, MetricsError> {
    if judgements.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    let hits = judgements
        .iter()
        .filter(|j| j.verdict != Verdict::Unknown)
        .count();
    Ok(Rate {
        hits: hits as u64,
        total: judgements.len() as u64,
    })
}

pub fn accuracy(judgements: &[Judgement]) -> Result<Rate, MetricsError> {
    if judgements.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    let hits = judgements.iter().filter(|j| j.verdict.matches(j.label)).count();
    Ok(Rate {
        hits: hits as u64,
        total: judgements.len() as u64,
    })
}

/// Rank-sum AUC of arbitrary scores; tied scores share their mean rank.
pub fn auc_from_scores(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    assert_eq!(scores.len(), labels.len(), "one label per score");
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (0-based) share the midrank
        let midrank = (start + end + 1) as f64 / 2.0;
        let tied_positives = order[start..end].iter().filter(|&&i| labels[i]).count();
        positive_rank_sum += midrank * tied_positives as f64;
        start = end;
    }
    let (p, n) = (positives as f64, negatives as f64);
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

pub fn auc(judgements: &[Judgement]) -> Result<f64, MetricsError> {
    let scores: Vec<f64> = judgements.iter().map(|j| score(j.verdict)).collect();
    let labels: Vec<bool> = judgements.iter().map(|j| j.label).collect();
    auc_from_scores(&scores, &labels)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerCounts {
    #[serde(rename = "TRUE")]
    pub true_: u64,
    #[serde(rename = "FALSE")]
    pub false_: u64,
    #[serde(rename = "UNKNOWN")]
    pub unknown: u64,
}

impl AnswerCounts {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::True => self.true_ += 1,
            Verdict::False => self.false_ += 1,
            Verdict::Unknown => self.unknown += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_ + self.false_ + self.unknown
    }
}

/// Answer counts split by ground-truth label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distribution {
    pub label_true: AnswerCounts,
    pub label_false: AnswerCounts,
}

impl Distribution {
    pub fn total(&self) -> u64 {
        self.label_true.total() + self.label_false.total()
    }

    /// Ratio of the rarer to the more frequent of the TRUE and FALSE answers;
    /// 1.0 is perfectly balanced, 0.0 means only one of them was ever given.
    pub fn answer_balance(&self) -> f64 {
        let t = self.label_true.true_ + self.label_false.true_;
        let f = self.label_true.false_ + self.label_false.false_;
        match t.max(f) {
            0 => 0.0,
            hi => t.min(f) as f64 / hi as f64,
        }
    }
}

pub fn distribution(judgements: &[Judgement]) -> Distribution {
    let mut d = Distribution::default();
    for j in judgements {
        if j.label {
            d.label_true.add(j.verdict);
        } else {
            d.label_false.add(j.verdict);
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub config_digest: String,
    /// Id of the fixed one-shot example used for every item.
    pub example_id: Option<String>,
    pub auc_scoring: String,
    pub n: u64,
    pub executed: u64,
    pub correct: u64,
    pub execution_rate: f64,
    pub accuracy: f64,
    /// `None` when only one label class is present.
    pub auc: Option<f64>,
    pub distribution: Distribution,
    pub outcomes: Vec<ItemOutcome>,
}

impl RunReport {
    /// Aggregates outcomes after sorting them by record id.
    pub fn build(
        label: impl Into<String>,
        config_digest: impl Into<String>,
        example_id: Option<String>,
        mut outcomes: Vec<ItemOutcome>,
    ) -> Result<RunReport, MetricsError> {
        outcomes.sort_by(|a, b| a.id.cmp(&b.id));
        let judgements: Vec<Judgement> = outcomes.iter().map(ItemOutcome::judgement).collect();
        let exec = execution_rate(&judgements)?;
        let acc = accuracy(&judgements)?;
        let auc = match auc(&judgements) {
            Ok(v) => Some(v),
            Err(MetricsError::SingleClass) => None,
            Err(e) => return Err(e),
        };
        Ok(RunReport {
            label: label.into(),
            config_digest: config_digest.into(),
            example_id,
            auc_scoring: AUC_SCORING.to_string(),
            n: exec.total,
            executed: exec.hits,
            correct: acc.hits,
            execution_rate: exec.value(),
            accuracy: acc.value(),
            auc,
            distribution: distribution(&judgements),
            outcomes,
        })
    }

    pub fn execution(&self) -> Rate {
        Rate {
            hits: self.executed,
            total: self.n,
        }
    }

    pub fn correctness(&self) -> Rate {
        Rate {
            hits: self.correct,
            total: self.n,
        }
    }

    /// Copy with latencies and checker timings zeroed, for comparing runs.
    pub fn without_volatile(&self) -> RunReport {
        let mut r = self.clone();
        for o in &mut r.outcomes {
            o.latency_ms = 0;
            if let Some(c) = &mut o.checker {
                c.elapsed = Default::default();
            }
        }
        r
    }

    /// `Execution Rate(%)  Accuracy(%)  AUC` cells, two decimals each.
    pub fn table_cells(&self) -> [String; 3] {
        [
            self.execution().percent_2dp(),
            self.correctness().percent_2dp(),
            self.auc
                .map(|a| round_half_up(a, 2))
                .unwrap_or_else(|| "n/a".into()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Machine,
    Table,
}

/// One row per run.
pub fn render_table(reports: &[RunReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.label.len())
        .chain(["Approach".len()])
        .max()
        .unwrap_or(0);
    let mut out = format!(
        "{:<width$}  Execution Rate(%)  Accuracy(%)  AUC\n",
        "Approach"
    );
    for r in reports {
        let [exec, acc, auc] = r.table_cells();
        writeln!(out, "{:<width$}  {exec}  {acc}  {auc}", r.label).unwrap();
    }
    out
}

/// `run,label,TRUE,FALSE,UNKNOWN` rows for external plotting.
pub fn distribution_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("run,label,TRUE,FALSE,UNKNOWN\n");
    for r in reports {
        for (label, c) in [
            ("true", r.distribution.label_true),
            ("false", r.distribution.label_false),
        ] {
            writeln!(out, "{},{label},{},{},{}", r.label, c.true_, c.false_, c.unknown).unwrap();
        }
    }
    out
}

pub fn render_machine(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn emit_report(report: &RunReport, path: &Path, format: ReportFormat) -> Result<(), MetricsError> {
    let body = match format {
        ReportFormat::Machine => render_machine(report),
        ReportFormat::Table => render_table(std::slice::from_ref(report)),
    };
    fs::write(path, body).map_err(|source| MetricsError::WriteFailure {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_report(path: &Path) -> Result<RunReport, MetricsError> {
    let fail = |reason: String| MetricsError::ReadFailure {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| fail(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn j(v: Verdict, label: bool) -> Judgement {
        Judgement::new(v, label)
    }

    /// Exhaustive (positive, negative) pair count.
    fn pair_auc(js: &[Judgement]) -> f64 {
        let pos: Vec<f64> = js.iter().filter(|x| x.label).map(|x| score(x.verdict)).collect();
        let neg: Vec<f64> = js.iter().filter(|x| !x.label).map(|x| score(x.verdict)).collect();
        let mut wins = 0.0;
        for p in &pos {
            for n in &neg {
                if p > n {
                    wins += 1.0;
                } else if p == n {
                    wins += 0.5;
                }
            }
        }
        wins / (pos.len() * neg.len()) as f64
    }

    fn repeat(v: Verdict, label: bool, n: usize) -> Vec<Judgement> {
        vec![j(v, label); n]
    }

    #[test]
    fn execution_rate_examples() {
        let mut js = repeat(Verdict::True, true, 189);
        js.extend(repeat(Verdict::Unknown, false, 11));
        assert_eq!(execution_rate(&js).unwrap().percent_2dp(), "94.50");
        let mut js = repeat(Verdict::True, true, 199);
        js.push(j(Verdict::Unknown, true));
        assert_eq!(execution_rate(&js).unwrap().percent_2dp(), "99.50");
        assert_eq!(execution_rate(&repeat(Verdict::Unknown, true, 5)).unwrap().value(), 0.0);
        assert!(matches!(execution_rate(&[]), Err(MetricsError::EmptyRun)));
    }

    #[test]
    fn accuracy_examples() {
        let mut js = repeat(Verdict::True, true, 182);
        js.extend(repeat(Verdict::True, false, 18));
        assert_eq!(accuracy(&js).unwrap().value(), 0.91);
        let mut js = repeat(Verdict::False, false, 152);
        js.extend(repeat(Verdict::False, true, 48));
        assert_eq!(accuracy(&js).unwrap().percent_2dp(), "76.00");
        assert_eq!(accuracy(&repeat(Verdict::Unknown, true, 3)).unwrap().value(), 0.0);
    }

    #[test]
    fn auc_examples() {
        let mut js = repeat(Verdict::True, true, 4);
        js.extend(repeat(Verdict::False, false, 3));
        assert_eq!(auc(&js).unwrap(), 1.0);
        let mut js = repeat(Verdict::Unknown, true, 4);
        js.extend(repeat(Verdict::Unknown, false, 3));
        assert_eq!(auc(&js).unwrap(), 0.5);
        assert!(matches!(auc(&repeat(Verdict::True, true, 3)), Err(MetricsError::SingleClass)));
    }

    #[test]
    fn distribution_examples() {
        let mut js = repeat(Verdict::True, true, 100);
        js.extend(repeat(Verdict::True, false, 100));
        let d = distribution(&js);
        assert_eq!(d.label_true, AnswerCounts { true_: 100, false_: 0, unknown: 0 });
        assert_eq!(d.label_false, AnswerCounts { true_: 100, false_: 0, unknown: 0 });
        assert_eq!(distribution(&[]), Distribution::default());
        assert_eq!(d.answer_balance(), 0.0);
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(0.945, 2), "0.95");
        assert_eq!(round_half_up(0.9449, 2), "0.94");
        assert_eq!(round_half_up(0.125, 2), "0.13");
        assert_eq!(round_half_up(1.0, 2), "1.00");
        assert_eq!(Rate { hits: 1, total: 8 }.percent_2dp(), "12.50");
        assert_eq!(Rate { hits: 1, total: 3 }.percent_2dp(), "33.33");
        assert_eq!(Rate { hits: 2, total: 3 }.percent_2dp(), "66.67");
        assert_eq!(Rate { hits: 1, total: 80_000 }.percent_2dp(), "0.00");
        assert_eq!(Rate { hits: 1, total: 20_000 }.percent_2dp(), "0.01");
    }

    fn verdict() -> impl Strategy<Value = Verdict> {
        prop_oneof![Just(Verdict::True), Just(Verdict::False), Just(Verdict::Unknown)]
    }

    fn judgements() -> impl Strategy<Value = Vec<Judgement>> {
        prop::collection::vec((verdict(), any::<bool>()).prop_map(|(v, l)| j(v, l)), 2..80)
            .prop_filter("both classes", |js| {
                js.iter().any(|x| x.label) && js.iter().any(|x| !x.label)
            })
    }

    proptest! {
        #[test]
        fn auc_matches_pair_counting(js in judgements()) {
            prop_assert!((auc(&js).unwrap() - pair_auc(&js)).abs() < 1e-12);
        }

        #[test]
        fn accuracy_bounded_by_execution(js in judgements()) {
            prop_assert!(accuracy(&js).unwrap().hits <= execution_rate(&js).unwrap().hits);
        }

        #[test]
        fn auc_invariant_under_monotone_transform(js in judgements()) {
            let labels: Vec<bool> = js.iter().map(|x| x.label).collect();
            let scores: Vec<f64> = js.iter().map(|x| (3.0 * score(x.verdict)).exp() - 7.0).collect();
            let a = auc_from_scores(&scores, &labels).unwrap();
            prop_assert!((a - auc(&js).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn swapping_labels_complements_auc(js in judgements()) {
            let swapped: Vec<Judgement> = js.iter().map(|x| j(x.verdict, !x.label)).collect();
            prop_assert!((auc(&swapped).unwrap() - (1.0 - auc(&js).unwrap())).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariant(js in judgements(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = js.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(execution_rate(&js).unwrap(), execution_rate(&shuffled).unwrap());
            prop_assert_eq!(accuracy(&js).unwrap(), accuracy(&shuffled).unwrap());
            prop_assert_eq!(distribution(&js), distribution(&shuffled));
        }

        #[test]
        fn percent_is_half_up(hits in 0u64..1000, extra in 1u64..1000) {
            let total = hits + extra;
            // decimal long division as an independent reference
            let scaled = hits * 10_000;
            let (q, r) = (scaled / total, scaled % total);
            let hundredths = if 2 * r >= total { q + 1 } else { q };
            let expected = format!("{}.{:02}", hundredths / 100, hundredths % 100);
            prop_assert_eq!(Rate { hits, total }.percent_2dp(), expected);
        }
    }
}
