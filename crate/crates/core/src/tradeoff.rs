//! λ sweeps: fit, train a linear head, evaluate utility and invariance.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{InvarianceMetric, ResolvedKernels, SplitName};
use crate::data::{Attribute, Dataset};
use crate::dependence::{dep_from_embedding, dpv, kcc_factor, DependenceReport, KccSide};
use crate::kernels::{factor_points, GramFactor};
use crate::solver::{EncoderModel, FitContext};
use crate::{Error, Result};

pub const DEFAULT_HEAD_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Task {
    Classification { num_classes: usize },
    Regression { dim: usize },
}

impl Task {
    pub fn of(attr: &Attribute) -> Task {
        match attr {
            Attribute::Categorical { labels, .. } => Task::Classification {
                num_classes: labels.len(),
            },
            Attribute::Continuous { values, .. } => Task::Regression { dim: values.ncols() },
        }
    }

    fn outputs(self) -> usize {
        match self {
            Task::Classification { num_classes } => num_classes,
            Task::Regression { dim } => dim,
        }
    }
}

/// `ŷ = Wᵀ z + b`, fitted by ridge least squares with an unpenalized intercept.
/// Classification fits one-hot targets and predicts the arg-max (lowest index
/// on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub task: Task,
    /// `r × k`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

fn targets(y: &Attribute, task: Task) -> Result<DMatrix<f64>> {
    match (y, task) {
        (Attribute::Categorical { codes, .. }, Task::Classification { num_classes }) => {
            let mut t = DMatrix::zeros(codes.len(), num_classes);
            for (i, &c) in codes.iter().enumerate() {
                if c >= num_classes {
                    return Err(Error::param("y", format!("class code {c} outside 0..{num_classes}")));
                }
                t[(i, c)] = 1.0;
            }
            Ok(t)
        }
        (Attribute::Continuous { values, .. }, Task::Regression { dim }) if values.ncols() == dim => Ok(values.clone()),
        _ => Err(Error::param("y", "target does not match the head task")),
    }
}

/// Trains the head in closed form.
pub fn train_target_head(z: &DMatrix<f64>, y: &Attribute, task: Task, ridge: f64) -> Result<LinearHead> {
    let n = z.nrows();
    if n == 0 {
        return Err(Error::Empty("train_target_head"));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "train_target_head targets",
            expected: n,
            found: y.len(),
        });
    }
    if !(ridge >= 0.0) {
        return Err(Error::param("ridge", "must be non-negative"));
    }
    let t = targets(y, task)?;
    let r = z.ncols();
    let k = task.outputs();
    let t_mean = t.row_mean().transpose();
    if r == 0 || z.iter().all(|&v| v == 0.0) {
        return Ok(LinearHead {
            task,
            weights: DMatrix::zeros(r, k),
            bias: t_mean,
        });
    }
    let z_mean = z.row_mean().transpose();
    let zc = crate::kernels::center_factor(z);
    let tc = crate::kernels::center_factor(&t);
    let mut gram = zc.transpose() * &zc;
    for i in 0..r {
        gram[(i, i)] += ridge;
    }
    let rhs = zc.transpose() * tc;
    let weights = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Format(e.to_string()))?,
    };
    let bias = t_mean - weights.transpose() * z_mean;
    Ok(LinearHead { task, weights, bias })
}

impl LinearHead {
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Raw scores, one row per sample.
    pub fn scores(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "head input",
                expected: self.input_dim(),
                found: z.ncols(),
            });
        }
        let mut s = z * &self.weights;
        for mut row in s.row_iter_mut() {
            row += self.bias.transpose();
        }
        Ok(s)
    }

    /// Class predictions (classification only).
    pub fn predict_classes(&self, z: &DMatrix<f64>) -> Result<Vec<usize>> {
        let s = self.scores(z)?;
        Ok(s.row_iter()
            .map(|row| {
                let mut best = 0;
                for j in 1..row.len() {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect())
    }

    /// Accuracy for classification, negative mean squared error for regression.
    pub fn utility(&self, z: &DMatrix<f64>, y: &Attribute) -> Result<f64> {
        match self.task {
            Task::Classification { .. } => {
                let codes = y.codes().ok_or_else(|| Error::param("y", "expected categorical targets"))?;
                let pred = self.predict_classes(z)?;
                let hits = pred.iter().zip(codes).filter(|(p, c)| p == c).count();
                Ok(hits as f64 / codes.len() as f64)
            }
            Task::Regression { .. } => Ok(-self.mse(z, y)?),
        }
    }

    pub fn mse(&self, z: &DMatrix<f64>, y: &Attribute) -> Result<f64> {
        let t = targets(y, self.task)?;
        let s = self.scores(z)?;
        Ok((s - t).norm_squared() / (z.nrows() * self.task.outputs()) as f64)
    }
}

/// One point of the trade-off curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub lambda: f64,
    pub r_opt: usize,
    pub dep_zy: f64,
    pub dep_zs: f64,
    pub objective: f64,
    pub utility: f64,
    pub invariance: f64,
    pub split: SplitName,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub config_digest: String,
    pub points: Vec<TradeoffPoint>,
}

pub const CURVE_COLUMNS: [&str; 8] = ["lambda", "r_opt", "dep_zy", "dep_zs", "objective", "utility", "invariance", "split"];

impl TradeoffCurve {
    pub fn split_points(&self, split: SplitName) -> impl Iterator<Item = &TradeoffPoint> {
        self.points.iter().filter(move |p| p.split == split)
    }

    pub fn to_csv(&self) -> String {
        let mut out = CURVE_COLUMNS.join(",");
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:?},{},{:?},{:?},{:?},{:?},{:?},{}",
                p.lambda, p.r_opt, p.dep_zy, p.dep_zs, p.objective, p.utility, p.invariance, p.split
            );
        }
        out
    }

    /// Parses the CSV form; `gamma` is not stored there and reads back as NaN,
    /// the digest as empty.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty curve file".into()))?;
        if header.trim() != CURVE_COLUMNS.join(",") {
            return Err(Error::Format(format!("unexpected curve header `{header}`")));
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| Error::Format(format!("curve row {}: bad {what}", i + 1));
            if f.len() != CURVE_COLUMNS.len() {
                return Err(bad("field count"));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad(CURVE_COLUMNS[k]));
            let split = match f[7] {
                "train" => SplitName::Train,
                "val" => SplitName::Val,
                "test" => SplitName::Test,
                _ => return Err(bad("split")),
            };
            points.push(TradeoffPoint {
                lambda: num(0)?,
                r_opt: f[1].parse().map_err(|_| bad("r_opt"))?,
                dep_zy: num(2)?,
                dep_zs: num(3)?,
                objective: num(4)?,
                utility: num(5)?,
                invariance: num(6)?,
                split,
                gamma: f64::NAN,
            });
        }
        Ok(Self {
            config_digest: String::new(),
            points,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        } else {
            Self::from_csv(&text)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Panel {
    UtilityInvariance,
    DepyDeps,
    InvarianceDeps,
    RoptLambda,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::UtilityInvariance, Panel::DepyDeps, Panel::InvarianceDeps, Panel::RoptLambda];

    pub fn name(self) -> &'static str {
        match self {
            Panel::UtilityInvariance => "utility-invariance",
            Panel::DepyDeps => "depy-deps",
            Panel::InvarianceDeps => "invariance-deps",
            Panel::RoptLambda => "ropt-lambda",
        }
    }

    pub fn parse(s: &str) -> Option<Panel> {
        Panel::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Column names `(x, y)`.
    pub fn axes(self) -> (&'static str, &'static str) {
        match self {
            Panel::UtilityInvariance => ("invariance", "utility"),
            Panel::DepyDeps => ("dep_zs", "dep_zy"),
            Panel::InvarianceDeps => ("dep_zs", "invariance"),
            Panel::RoptLambda => ("one_minus_lambda", "r_opt"),
        }
    }

    fn coords(self, p: &TradeoffPoint) -> (f64, f64) {
        match self {
            Panel::UtilityInvariance => (p.invariance, p.utility),
            Panel::DepyDeps => (p.dep_zs, p.dep_zy),
            Panel::InvarianceDeps => (p.dep_zs, p.invariance),
            Panel::RoptLambda => (1.0 - p.lambda, p.r_opt as f64),
        }
    }
}

/// Two-column CSV for one panel, restricted to one split.
pub fn plot_data(curve: &TradeoffCurve, panel: Panel, split: SplitName) -> String {
    let (xa, ya) = panel.axes();
    let mut out = format!("{xa},{ya}\n");
    for p in curve.split_points(split) {
        let (x, y) = panel.coords(p);
        let _ = writeln!(out, "{x:?},{y:?}");
    }
    out
}

/// Invariance measure actually used for a dataset.
pub fn invariance_kind(metric: InvarianceMetric, task: Task, s: &Attribute) -> InvarianceMetric {
    match metric {
        InvarianceMetric::Auto => {
            if s.is_categorical() && matches!(task, Task::Classification { .. }) {
                InvarianceMetric::Dpv
            } else {
                InvarianceMetric::Kcc
            }
        }
        m => m,
    }
}

enum InvarianceCache {
    Kcc { side: KccSide<f64> },
    Dpv { groups: Vec<usize> },
}

/// Preprocessed split data with the factors reused for every λ.
pub struct EvalSplit {
    pub name: SplitName,
    pub x: DMatrix<f64>,
    pub y: Attribute,
    pub s: Attribute,
    pub factor_y: GramFactor<f64>,
    pub factor_s: GramFactor<f64>,
    invariance: InvarianceCache,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub pivot_tol: f64,
    pub kcc_reg: f64,
    pub metric: InvarianceMetric,
}

impl EvalSplit {
    /// `data` must already be preprocessed; `kernels` are the ones resolved on
    /// the training split.
    pub fn new(name: SplitName, data: &Dataset, kernels: &ResolvedKernels, task: Task, settings: &EvalSettings) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("evaluation split"));
        }
        let factor_y = factor_points(&data.y.kernel_points(), &kernels.y, settings.pivot_tol)?;
        let factor_s = factor_points(&data.s.kernel_points(), &kernels.s, settings.pivot_tol)?;
        let invariance = match invariance_kind(settings.metric, task, &data.s) {
            InvarianceMetric::Dpv => {
                let groups = data
                    .s
                    .codes()
                    .ok_or_else(|| Error::param("invariance", "dpv requires a categorical attribute"))?
                    .to_vec();
                if !matches!(task, Task::Classification { .. }) {
                    return Err(Error::param("invariance", "dpv requires a classification target"));
                }
                InvarianceCache::Dpv { groups }
            }
            _ => {
                let points = if data.s.is_categorical() {
                    one_hot(&data.s)
                } else {
                    data.s.kernel_points()
                };
                InvarianceCache::Kcc {
                    side: KccSide::new(&kcc_factor(&points)?, settings.kcc_reg)?,
                }
            }
        };
        Ok(Self {
            name,
            x: data.x.clone(),
            y: data.y.clone(),
            s: data.s.clone(),
            factor_y,
            factor_s,
            invariance,
        })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn one_hot(attr: &Attribute) -> DMatrix<f64> {
    match attr {
        Attribute::Categorical { codes, labels, .. } => {
            let mut m = DMatrix::zeros(codes.len(), labels.len());
            for (i, &c) in codes.iter().enumerate() {
                m[(i, c)] = 1.0;
            }
            m
        }
        Attribute::Continuous { values, .. } => values.clone(),
    }
}

/// Metrics of a fitted model and head on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: DependenceReport,
    pub utility: f64,
    pub invariance: f64,
}

pub fn evaluate_full(model: &EncoderModel<f64>, head: &LinearHead, split: &EvalSplit) -> Result<Evaluation> {
    let z = model.encode(&split.x)?;
    let dep_zy = dep_from_embedding(&z, &split.factor_y)?;
    let dep_zs = dep_from_embedding(&z, &split.factor_s)?;
    let utility = head.utility(&z, &split.y)?;
    let (invariance, kcc_zs, dpv_v) = match &split.invariance {
        InvarianceCache::Kcc { side } => {
            let v = if z.ncols() == 0 { 0.0 } else { side.kcc(&kcc_factor(&z)?)? };
            (v, Some(v), None)
        }
        InvarianceCache::Dpv { groups } => {
            let v = dpv(&head.predict_classes(&z)?, groups, None)?;
            (v, None, Some(v))
        }
    };
    Ok(Evaluation {
        report: DependenceReport {
            dep_zs,
            dep_zy,
            hsic_zs: None,
            kcc_zs,
            dpv: dpv_v,
        },
        utility,
        invariance,
    })
}

/// Trade-off point of `model` with `head` on `split`.
pub fn evaluate(model: &EncoderModel<f64>, head: &LinearHead, split: &EvalSplit) -> Result<TradeoffPoint> {
    let e = evaluate_full(model, head, split)?;
    Ok(TradeoffPoint {
        lambda: model.lambda(),
        r_opt: model.r(),
        dep_zy: e.report.dep_zy,
        dep_zs: e.report.dep_zs,
        objective: model.objective(),
        utility: e.utility,
        invariance: e.invariance,
        split: split.name,
        gamma: model.gamma(),
    })
}

pub struct SweepSettings<'a> {
    pub lambdas: &'a [f64],
    pub gammas: &'a [f64],
    pub head_ridge: f64,
    pub task: Task,
}

/// A fitted point of the sweep.
#[derive(Debug, Clone)]
pub struct SweepFit {
    pub model: EncoderModel<f64>,
    pub head: LinearHead,
}

pub struct SweepResult {
    pub curve: TradeoffCurve,
    pub fits: Vec<SweepFit>,
}

/// Fits every λ on the training data and evaluates the requested splits.
///
/// With several γ candidates, the γ with the best utility on `validation` is
/// kept (first on ties).
pub fn sweep(
    ctx: &FitContext<f64>,
    train: &Dataset,
    validation: Option<&Dataset>,
    splits: &[&EvalSplit],
    settings: &SweepSettings<'_>,
    config_digest: &str,
) -> Result<SweepResult> {
    if settings.gammas.is_empty() {
        return Err(Error::param("gamma", "no candidate values"));
    }
    let mut prev = None;
    for &l in settings.lambdas {
        if !(0.0..=crate::solver::LAMBDA_MAX).contains(&l) || prev.is_some_and(|p| l <= p) {
            return Err(Error::param("lambda_grid", "values must be increasing within [0, 1 - 1e-6]"));
        }
        prev = Some(l);
    }
    let mut points = Vec::new();
    let mut fits = Vec::new();
    for &lambda in settings.lambdas {
        let with_context = |e: Error| Error::AtLambda {
            lambda,
            source: Box::new(e),
        };
        let mut best: Option<(f64, SweepFit)> = None;
        for &gamma in settings.gammas {
            let fit = ctx.fit(lambda, gamma, None).map_err(with_context)?;
            let z = fit.model.encode(&train.x).map_err(with_context)?;
            let head = train_target_head(&z, &train.y, settings.task, settings.head_ridge).map_err(with_context)?;
            let score = match (validation, settings.gammas.len()) {
                (Some(val), n) if n > 1 => fit
                    .model
                    .encode(&val.x)
                    .and_then(|zv| head.utility(&zv, &val.y))
                    .map_err(with_context)?,
                _ => 0.0,
            };
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, SweepFit { model: fit.model, head }));
            }
        }
        let (_, chosen) = best.expect("at least one gamma");
        log::info!("lambda = {lambda:.6}: r = {}, gamma = {}", chosen.model.r(), chosen.model.gamma());
        for split in splits {
            points.push(evaluate(&chosen.model, &chosen.head, split).map_err(with_context)?);
        }
        fits.push(chosen);
    }
    Ok(SweepResult {
        curve: TradeoffCurve {
            config_digest: config_digest.to_string(),
            points,
        },
        fits,
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap_or(std::cmp::Ordering::Equal));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KernelConfig;
    use crate::data::gen_gaussian_toy;
    use crate::dependence::dep_emp;
    use crate::kernels::gram_matrix;
    use crate::solver::{fit_context, KernelContext};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn classes(codes: Vec<usize>, k: usize) -> Attribute {
        Attribute::Categorical {
            codes,
            labels: (0..k).map(|c| c.to_string()).collect(),
            name: "y".into(),
        }
    }

    fn continuous(values: DMatrix<f64>) -> Attribute {
        let names = (0..values.ncols()).map(|j| format!("y{j}")).collect();
        Attribute::Continuous { values, names }
    }

    #[test]
    fn separable_classes() {
        let z = DMatrix::from_column_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let y = classes(vec![0, 0, 0, 1, 1, 1], 2);
        let task = Task::of(&y);
        let head = train_target_head(&z, &y, task, 1e-6).unwrap();
        assert_eq!(head.utility(&z, &y).unwrap(), 1.0);
        assert_eq!(head.predict_classes(&z).unwrap(), vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn zero_embedding_gives_majority() {
        let y = classes(vec![2, 1, 2, 0, 2], 3);
        let head = train_target_head(&DMatrix::zeros(5, 2), &y, Task::of(&y), 1e-6).unwrap();
        assert_eq!(head.predict_classes(&DMatrix::from_element(5, 2, 7.0)).unwrap(), vec![2; 5]);
        assert!((head.utility(&DMatrix::zeros(5, 2), &y).unwrap() - 0.6).abs() < 1e-15);
        let empty = train_target_head(&DMatrix::zeros(5, 0), &y, Task::of(&y), 1e-6).unwrap();
        assert!((empty.utility(&DMatrix::zeros(5, 0), &y).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ties_pick_lowest_class() {
        let y = classes(vec![0, 1], 2);
        let head = train_target_head(&DMatrix::zeros(2, 1), &y, Task::of(&y), 0.0).unwrap();
        assert_eq!(head.predict_classes(&DMatrix::zeros(1, 1)).unwrap(), vec![0]);
    }

    fn regression(n: usize, r: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(n, r, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let t = DMatrix::from_fn(n, 2, |i, j| z[(i, 0)] * (j as f64 + 1.0) - z[(i, r - 1)] + 0.1 * rng.random::<f64>() + 3.0);
        (z, t)
    }

    #[test]
    fn regression_matches_augmented_normal_equations() {
        let (n, r, ridge) = (40, 4, 0.3);
        let (z, t) = regression(n, r, 1);
        let head = train_target_head(&z, &continuous(t.clone()), Task::Regression { dim: 2 }, ridge).unwrap();
        let mut a = DMatrix::zeros(r + 1, r + 1);
        let mut rhs = DMatrix::zeros(r + 1, 2);
        let aug = DMatrix::from_fn(n, r + 1, |i, j| if j < r { z[(i, j)] } else { 1.0 });
        a.copy_from(&(aug.transpose() * &aug));
        for i in 0..r {
            a[(i, i)] += ridge;
        }
        rhs.copy_from(&(aug.transpose() * &t));
        let sol = a.lu().solve(&rhs).unwrap();
        assert!((head.weights.clone() - sol.rows(0, r)).amax() < 1e-8);
        assert!((head.bias.transpose() - sol.row(r)).amax() < 1e-8);
    }

    #[test]
    fn centered_regression_matches_plain_normal_equations() {
        let (z, t) = regression(30, 3, 2);
        let zc = crate::kernels::center_factor(&z);
        let tc = crate::kernels::center_factor(&t);
        let ridge = 0.05;
        let head = train_target_head(&zc, &continuous(tc.clone()), Task::Regression { dim: 2 }, ridge).unwrap();
        let oracle = (zc.transpose() * &zc + DMatrix::identity(3, 3) * ridge).try_inverse().unwrap() * zc.transpose() * &tc;
        assert!((head.weights.clone() - oracle).amax() < 1e-8);
        assert!(head.bias.amax() < 1e-12);
        let mse = head.mse(&zc, &continuous(tc.clone())).unwrap();
        assert!((head.utility(&zc, &continuous(tc)).unwrap() + mse).abs() < 1e-15);
    }

    #[test]
    fn head_errors() {
        let y = classes(vec![0, 1, 1], 2);
        assert!(train_target_head(&DMatrix::zeros(2, 1), &y, Task::of(&y), 0.0).is_err());
        assert!(train_target_head(&DMatrix::zeros(3, 1), &y, Task::Regression { dim: 1 }, 0.0).is_err());
        assert!(train_target_head(&DMatrix::zeros(3, 1), &y, Task::of(&y), -1.0).is_err());
        let head = train_target_head(&DMatrix::zeros(3, 1), &y, Task::of(&y), 0.0).unwrap();
        assert!(head.scores(&DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn metric_dispatch() {
        let cls = Task::Classification { num_classes: 2 };
        let reg = Task::Regression { dim: 1 };
        let cat = classes(vec![0, 1], 2);
        let cont = continuous(DMatrix::zeros(2, 1));
        assert_eq!(invariance_kind(InvarianceMetric::Auto, cls, &cat), InvarianceMetric::Dpv);
        assert_eq!(invariance_kind(InvarianceMetric::Auto, cls, &cont), InvarianceMetric::Kcc);
        assert_eq!(invariance_kind(InvarianceMetric::Auto, reg, &cat), InvarianceMetric::Kcc);
        assert_eq!(invariance_kind(InvarianceMetric::Kcc, cls, &cat), InvarianceMetric::Kcc);
    }

    fn point(lambda: f64, split: SplitName) -> TradeoffPoint {
        TradeoffPoint {
            lambda,
            r_opt: 3,
            dep_zy: 0.1 + lambda,
            dep_zs: 1.0 / 3.0,
            objective: -2.5e-7,
            utility: 0.75,
            invariance: 0.2,
            split,
            gamma: 1e-3,
        }
    }

    #[test]
    fn curve_round_trips() {
        let curve = TradeoffCurve {
            config_digest: "abc".into(),
            points: vec![point(0.0, SplitName::Train), point(0.1, SplitName::Test)],
        };
        let csv = curve.to_csv();
        assert!(csv.starts_with("lambda,r_opt,dep_zy,dep_zs,objective,utility,invariance,split\n"));
        let back = TradeoffCurve::from_csv(&csv).unwrap();
        assert_eq!(back.points.len(), 2);
        for (a, b) in back.points.iter().zip(&curve.points) {
            assert!(a.gamma.is_nan());
            assert_eq!(TradeoffPoint { gamma: b.gamma, ..a.clone() }, b.clone());
        }
        let json: TradeoffCurve = serde_json::from_str(&curve.to_json()).unwrap();
        assert_eq!(json, curve);
        assert!(TradeoffCurve::from_csv("lambda\n").is_err());
        assert!(TradeoffCurve::from_csv(&csv.replace("test", "holdout")).is_err());
    }

    #[test]
    fn plot_panels() {
        let curve = TradeoffCurve {
            config_digest: String::new(),
            points: vec![point(0.25, SplitName::Test), point(0.5, SplitName::Train)],
        };
        assert_eq!(plot_data(&curve, Panel::RoptLambda, SplitName::Test), "one_minus_lambda,r_opt\n0.75,3.0\n");
        assert_eq!(plot_data(&curve, Panel::UtilityInvariance, SplitName::Train), "invariance,utility\n0.2,0.75\n");
        for p in Panel::ALL {
            assert_eq!(Panel::parse(p.name()), Some(p));
        }
        assert_eq!(Panel::parse("other"), None);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        let v = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]);
        assert!((v - 4.5 / 22.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }

    struct Toy {
        data: Dataset,
        ctx: FitContext<f64>,
        split: EvalSplit,
        task: Task,
    }

    fn toy(n: usize, seed: u64) -> Toy {
        let data = gen_gaussian_toy(n, seed).unwrap();
        let cfg = KernelConfig::default();
        let kernels = cfg.resolve(&data).unwrap();
        let ctx = fit_context(&data, &cfg).unwrap();
        let task = Task::of(&data.y);
        let settings = EvalSettings {
            pivot_tol: cfg.pivot_tol,
            kcc_reg: 1e-3,
            metric: InvarianceMetric::Auto,
        };
        let split = EvalSplit::new(SplitName::Train, &data, &kernels, task, &settings).unwrap();
        Toy { data, ctx, split, task }
    }

    #[test]
    fn empty_encoder_evaluation() {
        let t = toy(60, 1);
        let model = t.ctx.fit(0.5, 1e-3, Some(0)).unwrap().model;
        let z = model.encode(&t.data.x).unwrap();
        let head = train_target_head(&z, &t.data.y, t.task, 1e-6).unwrap();
        let p = evaluate(&model, &head, &t.split).unwrap();
        let codes = t.data.y.codes().unwrap();
        let majority = (0..16).map(|c| codes.iter().filter(|&&v| v == c).count()).max().unwrap();
        assert!((p.utility - majority as f64 / 60.0).abs() < 1e-15);
        assert_eq!(p.dep_zs, 0.0);
        assert_eq!(p.r_opt, 0);
        assert_eq!(p.invariance, 0.0);
    }

    #[test]
    fn evaluation_matches_solver_and_standalone_metrics() {
        let t = toy(90, 2);
        let fit0 = t.ctx.fit(0.0, 1e-3, None).unwrap();
        let z0 = fit0.model.encode(&t.data.x).unwrap();
        let head0 = train_target_head(&z0, &t.data.y, t.task, 1e-6).unwrap();
        let p0 = evaluate(&fit0.model, &head0, &t.split).unwrap();
        assert!((p0.dep_zy - fit0.model.objective()).abs() <= 1e-6 * p0.dep_zy, "{} vs {}", p0.dep_zy, fit0.model.objective());

        let mid = t.ctx.fit(0.5, 1e-3, None).unwrap().model;
        let z = mid.encode(&t.data.x).unwrap();
        let head = train_target_head(&z, &t.data.y, t.task, 1e-6).unwrap();
        let p = evaluate(&mid, &head, &t.split).unwrap();
        let KernelContext::Exact { spec, train_points } = mid.kernel_ctx() else { unreachable!() };
        let kx = gram_matrix(train_points, spec).unwrap();
        let standalone = dep_emp(mid.theta(), &kx, &t.split.factor_s).unwrap();
        assert!((p.dep_zs - standalone).abs() <= 1e-10 * standalone.max(1e-300), "{} vs {standalone}", p.dep_zs);
        assert!((0.0..=1.0).contains(&p.invariance));
    }

    #[test]
    fn single_lambda_sweep() {
        let t = toy(60, 3);
        let settings = SweepSettings {
            lambdas: &[0.0],
            gammas: &[1e-3],
            head_ridge: 1e-6,
            task: t.task,
        };
        let res = sweep(&t.ctx, &t.data, None, &[&t.split], &settings, "d").unwrap();
        assert_eq!(res.curve.points.len(), 1);
        assert_eq!(res.curve.points[0].r_opt, t.ctx.dim());
        let z = res.fits[0].model.encode(&t.data.x).unwrap();
        let direct = train_target_head(&z, &t.data.y, t.task, 1e-6).unwrap();
        assert_eq!(res.curve.points[0].utility, direct.utility(&z, &t.data.y).unwrap());
        assert_eq!(res.curve.config_digest, "d");
    }

    #[test]
    fn sweep_rejects_bad_grid_and_reports_lambda() {
        let t = toy(40, 4);
        let mk = |lambdas: &'static [f64], gammas: &'static [f64]| SweepSettings {
            lambdas,
            gammas,
            head_ridge: 1e-6,
            task: t.task,
        };
        assert!(sweep(&t.ctx, &t.data, None, &[&t.split], &mk(&[0.5, 0.1], &[1e-3]), "").is_err());
        assert!(sweep(&t.ctx, &t.data, None, &[&t.split], &mk(&[0.5], &[]), "").is_err());
        match sweep(&t.ctx, &t.data, None, &[&t.split], &mk(&[0.0, 0.25], &[-1.0]), "") {
            Err(Error::AtLambda { lambda, .. }) => assert_eq!(lambda, 0.0),
            other => panic!("unexpected {:?}", other.err()),
        }
    }

    #[test]
    fn gamma_selection_uses_validation() {
        let t = toy(60, 5);
        let val = gen_gaussian_toy(60, 6).unwrap();
        let settings = SweepSettings {
            lambdas: &[0.0, 0.5],
            gammas: &[1e-4, 1e-2, 1.0],
            head_ridge: 1e-6,
            task: t.task,
        };
        let res = sweep(&t.ctx, &t.data, Some(&val), &[&t.split], &settings, "").unwrap();
        for (fit, p) in res.fits.iter().zip(&res.curve.points) {
            let mut best = f64::NEG_INFINITY;
            let mut best_gamma = 0.0;
            for &g in settings.gammas {
                let m = t.ctx.fit(p.lambda, g, None).unwrap().model;
                let h = train_target_head(&m.encode(&t.data.x).unwrap(), &t.data.y, t.task, 1e-6).unwrap();
                let u = h.utility(&m.encode(&val.x).unwrap(), &val.y).unwrap();
                if u > best {
                    best = u;
                    best_gamma = g;
                }
            }
            assert_eq!(fit.model.gamma(), best_gamma);
            assert_eq!(p.gamma, best_gamma);
        }
    }
}
