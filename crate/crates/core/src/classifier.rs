//! Softmax (multinomial logistic) regression with class-balanced risks and
//! l1/l2 penalties, trained by proximal gradient descent.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{Standardization, CATALOG, CATALOG_VERSION};

const FORMAT_HEADER: &str = "passrate-mlr 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskKind {
    Mle,
    Arithmetic,
    Quadratic,
}

impl RiskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskKind::Mle => "mle",
            RiskKind::Arithmetic => "arith",
            RiskKind::Quadratic => "quad",
        }
    }
}

impl fmt::Display for RiskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mle" => Ok(RiskKind::Mle),
            "arith" | "arithmetic" => Ok(RiskKind::Arithmetic),
            "quad" | "quadratic" => Ok(RiskKind::Quadratic),
            other => Err(format!("unknown risk {other:?} (expected mle, arith or quad)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn p(self) -> u8 {
        match self {
            Norm::L1 => 1,
            Norm::L2 => 2,
        }
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            other => Err(format!("unknown norm {other:?} (expected l1 or l2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingOptions {
    pub max_iters: usize,
    /// Initial step; backtracking halves it until the step is accepted.
    pub step_size: f64,
    pub tolerance: f64,
    /// Unused by the deterministic solver; kept so option sets are reproducible.
    pub seed: u64,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        TrainingOptions {
            max_iters: 2000,
            step_size: 1.0,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl TrainingOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.step_size.is_finite()
            && self.step_size > 0.0
            && self.tolerance.is_finite()
            && self.tolerance > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training options {self:?}")))
        }
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Classes in `1..=k` without a training example.
    pub empty_classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlrModel {
    pub k: usize,
    pub n: usize,
    /// Row-major `k × (n + 1)`; the last column of each row is the bias.
    pub theta: Vec<f64>,
    pub catalog_version: String,
    pub risk_kind: RiskKind,
    pub norm: Norm,
    pub lambda: f64,
    pub feature_names: Vec<String>,
    /// Applied to raw feature rows before scoring, when present.
    pub standardization: Option<Standardization>,
}

impl MlrModel {
    pub fn zeros(k: usize, n: usize) -> Self {
        MlrModel {
            k,
            n,
            theta: vec![0.0; k * (n + 1)],
            catalog_version: CATALOG_VERSION.to_string(),
            risk_kind: RiskKind::Mle,
            norm: Norm::L2,
            lambda: 0.0,
            feature_names: default_names(n),
            standardization: None,
        }
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.theta[class * (self.n + 1) + feature]
    }

    pub fn bias(&self, class: usize) -> f64 {
        self.theta[class * (self.n + 1) + self.n]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            })
        }
    }

    /// Standardizes a raw row with the stored statistics, if any.
    pub fn prepare(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.check_input(raw)?;
        Ok(match &self.standardization {
            Some(st) => raw
                .iter()
                .enumerate()
                .map(|(j, &v)| if st.stds[j] > 0.0 { (v - st.means[j]) / st.stds[j] } else { 0.0 })
                .collect(),
            None => raw.to_vec(),
        })
    }
}

fn default_names(n: usize) -> Vec<String> {
    if n == CATALOG.len() {
        CATALOG.iter().map(|e| e.name.to_string()).collect()
    } else {
        (1..=n).map(|j| format!("x{j}")).collect()
    }
}

fn logits(theta: &[f64], k: usize, x: &[f64]) -> Vec<f64> {
    let w = x.len() + 1;
    (0..k)
        .map(|c| {
            let row = &theta[c * w..(c + 1) * w];
            row[..x.len()].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[x.len()]
        })
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `-log softmax(z)[c]`, stable for large logits.
fn log_loss(z: &[f64], c: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - z[c]
}

pub fn softmax_probs(model: &MlrModel, x: &[f64]) -> Result<Vec<f64>> {
    model.check_input(x)?;
    Ok(softmax(&logits(&model.theta, model.k, x)))
}

/// Most probable class, 1-based; ties go to the lowest class.
pub fn predict(model: &MlrModel, x: &[f64]) -> Result<usize> {
    let p = softmax_probs(model, x)?;
    let mut best = 0;
    for (c, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = c;
        }
    }
    Ok(best + 1)
}

pub fn predict_all(model: &MlrModel, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
    rows.iter().map(|x| predict(model, x)).collect()
}

/// Examples per class; `counts[j - 1]` is the count of class `j`.
pub fn class_counts(y: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0; k];
    for &label in y {
        if label == 0 || label > k {
            return Err(Error::LabelRange { label, k });
        }
        counts[label - 1] += 1;
    }
    Ok(counts)
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    k: usize,
    n: usize,
    counts: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [usize], k: usize, theta_len: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::TooFewExamples("no training examples".into()));
        }
        if k < 2 {
            return Err(Error::Precondition(format!("need at least 2 classes, got {k}")));
        }
        let n = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: bad.len(),
            });
        }
        if theta_len != k * (n + 1) {
            return Err(Error::Dimension {
                expected: k * (n + 1),
                got: theta_len,
            });
        }
        let counts = class_counts(y, k)?;
        Ok(Problem { x, y, k, n, counts })
    }

    fn populated(&self) -> f64 {
        self.counts.iter().filter(|&&c| c > 0).count() as f64
    }

    /// Per-example losses.
    fn losses(&self, theta: &[f64]) -> Vec<f64> {
        self.x
            .iter()
            .zip(self.y)
            .map(|(x, &c)| log_loss(&logits(theta, self.k, x), c - 1))
            .collect()
    }

    /// Mean loss of each class (0 for empty classes).
    fn class_losses(&self, losses: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.k];
        for (&l, &c) in losses.iter().zip(self.y) {
            sums[c - 1] += l;
        }
        sums.iter()
            .zip(&self.counts)
            .map(|(&s, &m)| if m > 0 { s / m as f64 } else { 0.0 })
            .collect()
    }

    fn risk_from(&self, kind: RiskKind, losses: &[f64]) -> f64 {
        match kind {
            RiskKind::Mle => losses.iter().sum::<f64>() / losses.len() as f64,
            RiskKind::Arithmetic => self.class_losses(losses).iter().sum::<f64>() / self.populated(),
            RiskKind::Quadratic => {
                let sq: f64 = self.class_losses(losses).iter().map(|l| l * l).sum();
                (sq / self.populated()).sqrt()
            }
        }
    }

    fn risk(&self, kind: RiskKind, theta: &[f64]) -> f64 {
        self.risk_from(kind, &self.losses(theta))
    }

    /// Weight of each example's loss in the risk's first-order expansion.
    fn example_weights(&self, kind: RiskKind, losses: &[f64]) -> Vec<f64> {
        let kp = self.populated();
        match kind {
            RiskKind::Mle => vec![1.0 / self.y.len() as f64; self.y.len()],
            RiskKind::Arithmetic => self.y.iter().map(|&c| 1.0 / (kp * self.counts[c - 1] as f64)).collect(),
            RiskKind::Quadratic => {
                let per_class = self.class_losses(losses);
                let r = (per_class.iter().map(|l| l * l).sum::<f64>() / kp).sqrt();
                if r == 0.0 {
                    return vec![0.0; self.y.len()];
                }
                self.y
                    .iter()
                    .map(|&c| per_class[c - 1] / (kp * r * self.counts[c - 1] as f64))
                    .collect()
            }
        }
    }

    fn gradient(&self, kind: RiskKind, theta: &[f64]) -> Vec<f64> {
        let losses = self.losses(theta);
        let weights = self.example_weights(kind, &losses);
        let w = self.n + 1;
        let mut grad = vec![0.0; theta.len()];
        for ((x, &c), &wt) in self.x.iter().zip(self.y).zip(&weights) {
            if wt == 0.0 {
                continue;
            }
            let p = softmax(&logits(theta, self.k, x));
            for (j, pj) in p.iter().enumerate() {
                let coef = wt * (pj - f64::from(u8::from(j == c - 1)));
                let row = &mut grad[j * w..(j + 1) * w];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += coef * xi;
                }
                row[self.n] += coef;
            }
        }
        grad
    }
}

/// Empirical risk of `theta` on `(x, y)`; labels are 1-based.
pub fn risk(kind: RiskKind, x: &[Vec<f64>], y: &[usize], k: usize, theta: &[f64]) -> Result<f64> {
    Ok(Problem::new(x, y, k, theta.len())?.risk(kind, theta))
}

/// Analytic gradient of [`risk`] with respect to `theta`.
pub fn risk_gradient(kind: RiskKind, x: &[Vec<f64>], y: &[usize], k: usize, theta: &[f64]) -> Result<Vec<f64>> {
    Ok(Problem::new(x, y, k, theta.len())?.gradient(kind, theta))
}

fn penalty(theta: &[f64], n: usize, norm: Norm) -> f64 {
    let w = n + 1;
    let weights = theta.iter().enumerate().filter(|(i, _)| i % w != n).map(|(_, v)| *v);
    match norm {
        Norm::L1 => weights.map(f64::abs).sum(),
        Norm::L2 => weights.map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// Proximal map of `t * lambda * norm` over the non-bias entries.
fn prox(theta: &mut [f64], n: usize, norm: Norm, t: f64) {
    if t <= 0.0 {
        return;
    }
    let w = n + 1;
    match norm {
        Norm::L1 => {
            for (i, v) in theta.iter_mut().enumerate() {
                if i % w != n {
                    let m = (v.abs() - t).max(0.0);
                    *v = if m > 0.0 { v.signum() * m } else { 0.0 };
                }
            }
        }
        Norm::L2 => {
            let len = penalty(theta, n, Norm::L2);
            let scale = if len > t { 1.0 - t / len } else { 0.0 };
            for (i, v) in theta.iter_mut().enumerate() {
                if i % w != n {
                    *v = if scale > 0.0 { *v * scale } else { 0.0 };
                }
            }
        }
    }
}

/// Minimizes `risk + lambda * ||theta||_p` (bias excluded from the norm)
/// from a zero start.
pub fn train(
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
    risk_kind: RiskKind,
    norm: Norm,
    lambda: f64,
    options: &TrainingOptions,
) -> Result<(MlrModel, TrainReport)> {
    options.validate()?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be a non-negative number, got {lambda}")));
    }
    let n = x.first().map_or(0, Vec::len);
    let problem = Problem::new(x, y, k, k * (n + 1))?;
    if x.len() < k {
        return Err(Error::TooFewExamples(format!("{} examples for {k} classes", x.len())));
    }

    let mut theta = vec![0.0; k * (n + 1)];
    let mut risk_now = problem.risk(risk_kind, &theta);
    let mut j_now = risk_now;
    let mut step = options.step_size;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iters {
        iterations += 1;
        let grad = problem.gradient(risk_kind, &theta);
        let mut accepted = None;
        while step > 1e-14 {
            let mut cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            prox(&mut cand, n, norm, step * lambda);
            let diff: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let lin: f64 = grad.iter().zip(&diff).map(|(g, d)| g * d).sum();
            let sq: f64 = diff.iter().map(|d| d * d).sum();
            let risk_cand = problem.risk(risk_kind, &cand);
            if risk_cand <= risk_now + lin + sq / (2.0 * step) + 1e-15 {
                accepted = Some((cand, risk_cand, sq));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, risk_cand, sq)) = accepted else {
            converged = true;
            break;
        };
        let j_cand = risk_cand + lambda * penalty(&cand, n, norm);
        let moved = sq.sqrt() / step;
        if j_cand <= j_now {
            theta = cand;
            risk_now = risk_cand;
            let progress = j_now - j_cand;
            j_now = j_cand;
            if moved < options.tolerance || progress <= options.tolerance * 1e-3 * j_now.abs().max(1e-12) {
                converged = true;
                break;
            }
        } else {
            if moved < options.tolerance {
                converged = true;
                break;
            }
            step *= 0.5;
            continue;
        }
        step *= 1.5;
    }

    let model = MlrModel {
        k,
        n,
        theta,
        catalog_version: CATALOG_VERSION.to_string(),
        risk_kind,
        norm,
        lambda,
        feature_names: default_names(n),
        standardization: None,
    };
    let report = TrainReport {
        objective: j_now,
        iterations,
        converged,
        empty_classes: problem
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(j, _)| j + 1)
            .collect(),
    };
    Ok((model, report))
}

/// Features with any class weight above `tol` in magnitude, largest first.
pub fn nonzero_predictors(model: &MlrModel, tol: f64) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = (0..model.n)
        .filter_map(|f| {
            let max = (0..model.k).map(|c| model.weight(c, f).abs()).fold(0.0, f64::max);
            (max > tol).then(|| (model.feature_names[f].clone(), max))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn model_to_string(model: &MlrModel) -> String {
    let mut s = String::new();
    writeln!(s, "{FORMAT_HEADER}").unwrap();
    writeln!(s, "k {}", model.k).unwrap();
    writeln!(s, "n {}", model.n).unwrap();
    writeln!(s, "catalog_version {}", model.catalog_version).unwrap();
    writeln!(s, "risk {}", model.risk_kind).unwrap();
    writeln!(s, "norm {}", model.norm.p()).unwrap();
    writeln!(s, "lambda {:.16e}", model.lambda).unwrap();
    writeln!(s, "features {}", model.feature_names.join(",")).unwrap();
    if let Some(st) = &model.standardization {
        writeln!(s, "means {}", fmt_row(&st.means)).unwrap();
        writeln!(s, "stds {}", fmt_row(&st.stds)).unwrap();
    }
    writeln!(s, "theta").unwrap();
    for row in model.theta.chunks(model.n + 1) {
        writeln!(s, "{}", fmt_row(row)).unwrap();
    }
    s
}

fn parse_row(line: usize, text: &str, expected: usize) -> Result<Vec<f64>> {
    let row: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::schema(line, format!("bad number {t:?}"))))
        .collect::<Result<_>>()?;
    if row.len() != expected {
        return Err(Error::schema(line, format!("expected {expected} values, got {}", row.len())));
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::schema(line, "non-finite value"));
    }
    Ok(row)
}

pub fn model_from_str(text: &str) -> Result<MlrModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, FORMAT_HEADER)) => {}
        _ => return Err(Error::schema(1, format!("expected {FORMAT_HEADER:?}"))),
    }
    let mut field = |key: &str| -> Result<(usize, String)> {
        let (line, l) = lines.next().ok_or_else(|| Error::schema(0, format!("missing {key}")))?;
        let rest = l
            .strip_prefix(key)
            .filter(|r| r.is_empty() || r.starts_with(' '))
            .ok_or_else(|| Error::schema(line, format!("expected {key}")))?;
        Ok((line, rest.trim().to_string()))
    };
    let num = |(line, v): (usize, String)| -> Result<usize> {
        v.parse().map_err(|_| Error::schema(line, format!("bad integer {v:?}")))
    };
    let k = num(field("k")?)?;
    let n = num(field("n")?)?;
    let catalog_version = field("catalog_version")?.1;
    let (line, r) = field("risk")?;
    let risk_kind: RiskKind = r.parse().map_err(|e: String| Error::schema(line, e))?;
    let (line, p) = field("norm")?;
    let norm: Norm = p.parse().map_err(|e: String| Error::schema(line, e))?;
    let (line, l) = field("lambda")?;
    let lambda: f64 = l.parse().map_err(|_| Error::schema(line, format!("bad lambda {l:?}")))?;
    let (line, names) = field("features")?;
    let feature_names: Vec<String> = if n == 0 {
        Vec::new()
    } else {
        names.split(',').map(str::to_string).collect()
    };
    if feature_names.len() != n {
        return Err(Error::schema(line, format!("expected {n} feature names")));
    }
    if k < 2 {
        return Err(Error::schema(2, "k must be at least 2"));
    }
    let (line, next) = lines.next().ok_or_else(|| Error::schema(0, "missing theta"))?;
    let mut standardization = None;
    let theta_line = if let Some(rest) = next.strip_prefix("means") {
        let means = parse_row(line, rest, n)?;
        let (line, l) = lines.next().ok_or_else(|| Error::schema(0, "missing stds"))?;
        let rest = l.strip_prefix("stds").ok_or_else(|| Error::schema(line, "expected stds"))?;
        let stds = parse_row(line, rest, n)?;
        standardization = Some(Standardization { means, stds });
        lines.next().ok_or_else(|| Error::schema(0, "missing theta"))?
    } else {
        (line, next)
    };
    if theta_line.1 != "theta" {
        return Err(Error::schema(theta_line.0, "expected theta"));
    }
    let mut theta = Vec::with_capacity(k * (n + 1));
    for _ in 0..k {
        let (line, l) = lines.next().ok_or_else(|| Error::schema(0, "missing theta row"))?;
        theta.extend(parse_row(line, l, n + 1)?);
    }
    Ok(MlrModel {
        k,
        n,
        theta,
        catalog_version,
        risk_kind,
        norm,
        lambda,
        feature_names,
        standardization,
    })
}

pub fn write_model(model: &MlrModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<MlrModel> {
    model_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let p = softmax(&[3f64.ln(), 0.0]);
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
        let shifted = softmax(&[3f64.ln() + 1000.0, 1000.0]);
        assert!((shifted[0] - 0.75).abs() < 1e-12);
        let model = MlrModel::zeros(4, 2);
        assert_eq!(softmax_probs(&model, &[1.0, -2.0]).unwrap(), vec![0.25; 4]);
        assert_eq!(predict(&model, &[1.0, -2.0]).unwrap(), 1);
        assert!(matches!(predict(&model, &[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn single_example_gradient() {
        let x = vec![vec![2.0, -1.0]];
        let g = risk_gradient(RiskKind::Mle, &x, &[1], 2, &[0.0; 6]).unwrap();
        assert_eq!(&g[..3], &[-1.0, 0.5, -0.5]);
        assert_eq!(&g[3..], &[1.0, -0.5, 0.5]);
    }

    #[test]
    fn l2_prox_shrinks_block() {
        let mut t = vec![3.0, 4.0, 7.0];
        prox(&mut t, 2, Norm::L2, 2.5);
        assert_eq!(t, vec![1.5, 2.0, 7.0]);
        prox(&mut t, 2, Norm::L2, 10.0);
        assert_eq!(t, vec![0.0, 0.0, 7.0]);
    }

    #[test]
    fn model_text_round_trip() {
        let mut model = MlrModel::zeros(3, 2);
        model.theta = vec![0.1, -1.0 / 3.0, 2.5e-17, 1e300, -0.0, 7.0, 1.0, 2.0, 3.0];
        model.lambda = 0.1;
        model.standardization = Some(Standardization {
            means: vec![1.0 / 7.0, 2.0],
            stds: vec![0.5, 0.0],
        });
        let back = model_from_str(&model_to_string(&model)).unwrap();
        assert_eq!(back, model);
    }
}
