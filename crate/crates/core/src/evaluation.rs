//! Splits, cross-validation, confusion matrices, per-class metrics and
//! Cohen's kappa.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::{predict_all, train, Norm, RiskKind, TrainingOptions};
use crate::error::{Error, Result};

/// Indices of each distinct label, labels ascending, each list shuffled.
fn shuffled_classes(y: &[usize], seed: u64) -> Vec<Vec<usize>> {
    let labels: BTreeSet<usize> = y.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels
        .into_iter()
        .map(|c| {
            let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
            idx.shuffle(&mut rng);
            idx
        })
        .collect()
}

/// Holds out `round(m_j * test_fraction)` examples of every class, at least
/// one when the class has two or more. Both index lists are sorted.
pub fn stratified_split(y: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!("test fraction must be in [0, 1), got {test_fraction}")));
    }
    if y.is_empty() {
        return Err(Error::TooFewExamples("no examples to split".into()));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for idx in shuffled_classes(y, seed) {
        let m = idx.len();
        let mut take = (m as f64 * test_fraction).round() as usize;
        if test_fraction > 0.0 && m >= 2 {
            take = take.max(1);
        }
        let take = take.min(m.saturating_sub(1));
        test.extend_from_slice(&idx[..take]);
        train.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Partitions `0..y.len()` into `folds` sets. Stratified folds deal each
/// shuffled class round-robin, continuing the deal across classes.
pub fn kfold(y: &[usize], folds: usize, seed: u64, stratified: bool) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > y.len() {
        return Err(Error::TooFewExamples(format!(
            "{} examples cannot fill {folds} folds",
            y.len()
        )));
    }
    let order: Vec<usize> = if stratified {
        shuffled_classes(y, seed).concat()
    } else {
        let mut all: Vec<usize> = (0..y.len()).collect();
        all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        all
    };
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in order.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Rows are ground truth, columns predictions; classes are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub k: usize,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> usize {
        self.counts[truth - 1][predicted - 1]
    }

    pub fn to_csv(&self, names: &[&str]) -> String {
        let name = |j: usize| names.get(j).map_or_else(|| (j + 1).to_string(), |s| s.to_string());
        let mut s = String::from("truth\\predicted");
        for j in 0..self.k {
            write!(s, ",{}", name(j)).unwrap();
        }
        s.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            s.push_str(&name(i));
            for c in row {
                write!(s, ",{c}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut counts = vec![vec![0; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label == 0 || label > k {
                return Err(Error::LabelRange { label, k });
            }
        }
        counts[t - 1][p - 1] += 1;
    }
    Ok(ConfusionMatrix { k, counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    /// Classes whose precision had a zero denominator (never predicted).
    pub precision_undefined: Vec<bool>,
    /// Classes whose recall had a zero denominator (absent from the truth).
    pub recall_undefined: Vec<bool>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den > 0.0 {
        (num / den, false)
    } else {
        (0.0, true)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let k = cm.k;
    let diag: Vec<f64> = (0..k).map(|j| cm.counts[j][j] as f64).collect();
    let row: Vec<f64> = (0..k).map(|j| cm.counts[j].iter().sum::<usize>() as f64).collect();
    let col: Vec<f64> = (0..k).map(|j| cm.counts.iter().map(|r| r[j]).sum::<usize>() as f64).collect();

    let (precision, precision_undefined): (Vec<f64>, Vec<bool>) = (0..k).map(|j| ratio(diag[j], col[j])).unzip();
    let (recall, recall_undefined): (Vec<f64>, Vec<bool>) = (0..k).map(|j| ratio(diag[j], row[j])).unzip();
    let f1: Vec<f64> = (0..k)
        .map(|j| ratio(2.0 * precision[j] * recall[j], precision[j] + recall[j]).0)
        .collect();

    let present: Vec<usize> = (0..k).filter(|&j| row[j] > 0.0).collect();
    let mean = |v: &[f64]| present.iter().map(|&j| v[j]).sum::<f64>() / present.len() as f64;
    Ok(MetricReport {
        accuracy: diag.iter().sum::<f64>() / total as f64,
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
    })
}

impl MetricReport {
    pub fn to_csv(&self, names: &[&str]) -> String {
        let mut s = String::from("class,precision,recall,f1,precision_undefined,recall_undefined\n");
        for j in 0..self.precision.len() {
            let name = names.get(j).map_or_else(|| (j + 1).to_string(), |n| n.to_string());
            writeln!(
                s,
                "{name},{:.6},{:.6},{:.6},{},{}",
                self.precision[j], self.recall[j], self.f1[j], self.precision_undefined[j], self.recall_undefined[j]
            )
            .unwrap();
        }
        writeln!(s, "macro,{:.6},{:.6},{:.6},,", self.macro_precision, self.macro_recall, self.macro_f1).unwrap();
        writeln!(s, "accuracy,{:.6},,,,", self.accuracy).unwrap();
        s
    }

    /// Plain-text table: one row per class, then macro means and accuracy.
    pub fn summary(&self, names: &[&str], title: &str) -> String {
        let mut s = String::new();
        writeln!(s, "{title}").unwrap();
        writeln!(s, "{:<14} {:>9} {:>9} {:>9}", "Class", "Precision", "Recall", "F1").unwrap();
        for j in 0..self.precision.len() {
            let name = names.get(j).map_or_else(|| (j + 1).to_string(), |n| n.to_string());
            let flag = if self.precision_undefined[j] || self.recall_undefined[j] { " *" } else { "" };
            writeln!(
                s,
                "{name:<14} {:>9.3} {:>9.3} {:>9.3}{flag}",
                self.precision[j], self.recall[j], self.f1[j]
            )
            .unwrap();
        }
        writeln!(
            s,
            "{:<14} {:>9.3} {:>9.3} {:>9.3}",
            "Macro", self.macro_precision, self.macro_recall, self.macro_f1
        )
        .unwrap();
        writeln!(s, "{:<14} {:>9.3}", "Accuracy", self.accuracy).unwrap();
        if self.precision_undefined.iter().chain(&self.recall_undefined).any(|&u| u) {
            writeln!(s, "* zero denominator; value reported as 0").unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaReport {
    pub kappa: f64,
    pub p_o: f64,
    pub p_e: f64,
}

pub fn cohens_kappa(a: &[usize], b: &[usize]) -> Result<KappaReport> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::TooFewExamples("kappa needs at least one item".into()));
    }
    let m = a.len() as f64;
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / m;
    let labels: BTreeSet<usize> = a.iter().chain(b).copied().collect();
    let p_e: f64 = labels
        .iter()
        .map(|&c| {
            let fa = a.iter().filter(|&&x| x == c).count() as f64 / m;
            let fb = b.iter().filter(|&&x| x == c).count() as f64 / m;
            fa * fb
        })
        .sum();
    let kappa = if p_e >= 1.0 { 1.0 } else { (p_o - p_e) / (1.0 - p_e) };
    Ok(KappaReport { kappa, p_o, p_e })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn kappa_matrix(labelings: &[(String, Vec<usize>)]) -> Result<KappaMatrix> {
    let n = labelings.len();
    let mut values = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let k = cohens_kappa(&labelings[i].1, &labelings[j].1)?.kappa;
            values[i][j] = k;
            values[j][i] = k;
        }
    }
    Ok(KappaMatrix {
        names: labelings.iter().map(|(name, _)| name.clone()).collect(),
        values,
    })
}

impl KappaMatrix {
    pub fn render(&self) -> String {
        let width = self.names.iter().map(String::len).max().unwrap_or(0).max(6);
        let mut s = format!("{:width$}", "");
        for name in &self.names {
            write!(s, " {name:>width$}").unwrap();
        }
        s.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            write!(s, "{:width$}", self.names[i]).unwrap();
            for (j, v) in row.iter().enumerate() {
                if i == j {
                    write!(s, " {:>width$}", "self").unwrap();
                } else {
                    write!(s, " {v:>width$.3}").unwrap();
                }
            }
            s.push('\n');
        }
        s
    }
}

/// `count` values spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let r = (hi / lo).ln() / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { hi } else { lo * (r * i as f64).exp() })
                .collect()
        }
    }
}

/// Mean fold scores for every candidate lambda.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub mean_accuracy: Vec<f64>,
    pub mean_macro_f1: Vec<f64>,
    /// Highest mean accuracy; ties go to the larger lambda.
    pub best_lambda: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
    risk: RiskKind,
    norm: Norm,
    lambdas: &[f64],
    folds: usize,
    seed: u64,
    options: &TrainingOptions,
) -> Result<CvResult> {
    if lambdas.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    let fold_sets = kfold(y, folds, seed, true)?;
    let jobs: Vec<(usize, usize)> = (0..lambdas.len())
        .flat_map(|l| (0..fold_sets.len()).map(move |f| (l, f)))
        .collect();
    let scores: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(l, f)| {
            let held = &fold_sets[f];
            let mut in_fold = vec![false; y.len()];
            for &i in held {
                in_fold[i] = true;
            }
            let pick = |keep: bool| -> (Vec<Vec<f64>>, Vec<usize>) {
                (0..y.len())
                    .filter(|&i| in_fold[i] != keep)
                    .map(|i| (x[i].clone(), y[i]))
                    .unzip()
            };
            let (xt, yt) = pick(true);
            let (xv, yv) = pick(false);
            let (model, _) = train(&xt, &yt, k, risk, norm, lambdas[l], options)?;
            let pred = predict_all(&model, &xv)?;
            let report = metrics(&confusion(&yv, &pred, k)?)?;
            Ok((report.accuracy, report.macro_f1))
        })
        .collect::<Result<_>>()?;

    let nf = fold_sets.len() as f64;
    let mean = |l: usize, pick: fn(&(f64, f64)) -> f64| {
        scores[l * fold_sets.len()..(l + 1) * fold_sets.len()].iter().map(pick).sum::<f64>() / nf
    };
    let mean_accuracy: Vec<f64> = (0..lambdas.len()).map(|l| mean(l, |s| s.0)).collect();
    let mean_macro_f1: Vec<f64> = (0..lambdas.len()).map(|l| mean(l, |s| s.1)).collect();
    let mut best = 0;
    for l in 1..lambdas.len() {
        let better = mean_accuracy[l] > mean_accuracy[best]
            || (mean_accuracy[l] == mean_accuracy[best] && lambdas[l] > lambdas[best]);
        if better {
            best = l;
        }
    }
    Ok(CvResult {
        lambdas: lambdas.to_vec(),
        mean_accuracy,
        mean_macro_f1,
        best_lambda: lambdas[best],
    })
}

/// Share of the most frequent label.
pub fn majority_baseline(y: &[usize]) -> f64 {
    let labels: BTreeSet<usize> = y.iter().copied().collect();
    let best = labels
        .iter()
        .map(|&c| y.iter().filter(|&&v| v == c).count())
        .max()
        .unwrap_or(0);
    if y.is_empty() {
        0.0
    } else {
        best as f64 / y.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(counts: &[usize]) -> Vec<usize> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c + 1, n))
            .collect()
    }

    #[test]
    fn split_rounding_rule() {
        let y = labels(&[10, 40, 50]);
        let (train, test) = stratified_split(&y, 0.2, 7).unwrap();
        let per_class = |idx: &[usize], c| idx.iter().filter(|&&i| y[i] == c).count();
        assert_eq!([1, 2, 3].map(|c| per_class(&test, c)), [2, 8, 10]);
        assert_eq!(train.len() + test.len(), 100);
        assert_eq!(stratified_split(&y, 0.2, 7).unwrap(), (train, test));
        assert!(stratified_split(&y, 0.0, 7).unwrap().1.is_empty());
    }

    #[test]
    fn folds_are_balanced() {
        let y = labels(&[50, 50]);
        let folds = kfold(&y, 10, 3, true).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 10);
            assert_eq!(f.iter().filter(|&&i| y[i] == 1).count(), 5);
        }
        let loo = kfold(&y[..10], 10, 3, false).unwrap();
        assert!(loo.iter().all(|f| f.len() == 1));
        assert!(kfold(&y[..5], 10, 3, true).is_err());
    }

    #[test]
    fn metric_hand_case() {
        let cm = ConfusionMatrix {
            k: 2,
            counts: vec![vec![8, 2], vec![3, 7]],
        };
        let r = metrics(&cm).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.precision[0], 8.0 / 11.0);
        assert_eq!(r.recall[0], 0.8);
    }

    #[test]
    fn never_predicted_class_is_flagged() {
        let cm = confusion(&[1, 2, 2], &[2, 2, 2], 2).unwrap();
        let r = metrics(&cm).unwrap();
        assert_eq!(r.precision[0], 0.0);
        assert!(r.precision_undefined[0]);
        assert!(r.macro_f1.is_finite());
        assert!(matches!(confusion(&[3], &[1], 2), Err(Error::LabelRange { .. })));
    }

    #[test]
    fn kappa_hand_table() {
        // 35 (1,1), 35 (2,2), 15 (1,2), 15 (2,1)
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in [(1, 1, 35), (2, 2, 35), (1, 2, 15), (2, 1, 15)] {
            a.extend(std::iter::repeat_n(x, n));
            b.extend(std::iter::repeat_n(y, n));
        }
        let r = cohens_kappa(&a, &b).unwrap();
        assert_eq!(r.p_e, 0.5);
        assert!((r.kappa - 0.4).abs() < 1e-12);
        assert_eq!(cohens_kappa(&[2, 2], &[2, 2]).unwrap().kappa, 1.0);
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(1e-4, 1.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[2] - 1e-2).abs() < 1e-15);
        assert!((g[4] - 1.0).abs() < 1e-12);
    }
}
