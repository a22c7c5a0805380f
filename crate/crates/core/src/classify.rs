//! Binary classification of graph collections with L2-regularized logistic
//! regression and stratified cross-validation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::Catalog;
use crate::census::{census, CensusMethod, FrequencyVector};
use crate::efrw::{fit_lambda, BackboneCurve, FitOptions};
use crate::error::{Error, Result};
use crate::features::{global_features, GlobalFeatures};
use crate::graph::Graph;

/// Which feature blocks to use. Blocks are concatenated in the order
/// edges, triads, quads, R_G, R_lambda, global.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FeatureSpec {
    pub edges: bool,
    pub triads: bool,
    pub quads: bool,
    pub r_g: bool,
    pub r_lambda: bool,
    pub global: bool,
}

impl FeatureSpec {
    /// Rows of the standard comparison table.
    pub const TABLE_ROWS: [&'static str; 11] = [
        "Edges",
        "Triads",
        "Triads + R_G",
        "Triads + R_lambda",
        "Quads",
        "Quads + R_G",
        "Quads + R_lambda",
        "Global",
        "Global + Triads",
        "Global + Quads",
        "Global + Quads + R_lambda",
    ];

    /// Census size residuals are taken against: the largest census in the spec, else 3.
    pub fn residual_k(&self) -> usize {
        if self.quads {
            4
        } else {
            3
        }
    }

    pub fn needs_census(&self, k: usize) -> bool {
        match k {
            3 => self.triads || ((self.r_g || self.r_lambda) && self.residual_k() == 3),
            4 => self.quads,
            _ => false,
        }
    }

    pub fn dimension(&self) -> usize {
        let census = |k| Catalog::shared(k).expect("catalog sizes 3 and 4 exist").len();
        let r = census(self.residual_k());
        self.edges as usize
            + self.triads as usize * census(3)
            + self.quads as usize * census(4)
            + self.r_g as usize * r
            + self.r_lambda as usize * r
            + self.global as usize * GlobalFeatures::LEN
    }

    pub fn is_empty(&self) -> bool {
        *self == FeatureSpec::default()
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = FeatureSpec::default();
        for part in s.split('+') {
            let token: String = part
                .trim()
                .to_lowercase()
                .chars()
                .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
                .collect();
            match token.as_str() {
                "edges" | "edge" => spec.edges = true,
                "triads" | "triad" => spec.triads = true,
                "quads" | "quad" => spec.quads = true,
                "rg" | "rgnp" => spec.r_g = true,
                "rlambda" | "rλ" | "rl" => spec.r_lambda = true,
                "global" => spec.global = true,
                "all" => {
                    spec = FeatureSpec {
                        edges: true,
                        triads: true,
                        quads: true,
                        r_g: true,
                        r_lambda: true,
                        global: true,
                    }
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "unknown feature block '{}' in '{s}'",
                        part.trim()
                    )))
                }
            }
        }
        if spec.is_empty() {
            return Err(Error::InvalidInput("feature spec selects nothing".into()));
        }
        Ok(spec)
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (self.global, "Global"),
            (self.edges, "Edges"),
            (self.triads, "Triads"),
            (self.quads, "Quads"),
            (self.r_g, "R_G"),
            (self.r_lambda, "R_lambda"),
        ];
        let parts: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, s)| *s).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Per-graph quantities from which any feature vector can be assembled.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSummary {
    pub n: usize,
    pub density: f64,
    pub triads: Option<FrequencyVector>,
    pub quads: Option<FrequencyVector>,
    /// Global features divided by `n`.
    pub global: Option<Vec<f64>>,
}

impl GraphSummary {
    pub fn new(g: &Graph, spec: &FeatureSpec, seed: u64) -> Result<GraphSummary> {
        let method = CensusMethod::default();
        let scale = g.n().max(1) as f64;
        Ok(GraphSummary {
            n: g.n(),
            density: g.edge_density()?,
            triads: if spec.needs_census(3) {
                Some(census(g, 3, method, seed)?)
            } else {
                None
            },
            quads: if spec.needs_census(4) {
                Some(census(g, 4, method, seed)?)
            } else {
                None
            },
            global: spec
                .global
                .then(|| global_features(g).to_vec().iter().map(|x| x / scale).collect()),
        })
    }

    fn census(&self, k: usize) -> Result<&FrequencyVector> {
        match k {
            3 => self.triads.as_ref(),
            4 => self.quads.as_ref(),
            _ => None,
        }
        .ok_or_else(|| Error::InvalidInput(format!("summary lacks the {k}-node census")))
    }
}

/// `y - pi(nu(p, lambda), lambda)`, with the point masses on the empty or
/// complete class at `p = 0` or `p = 1`.
fn residual(y: &FrequencyVector, p: f64, curve: &BackboneCurve) -> Result<Vec<f64>> {
    let d = y.values.len();
    let model = if p <= 0.0 || p >= 1.0 {
        let mut e = vec![0.0; d];
        e[if p <= 0.0 { 0 } else { d - 1 }] = 1.0;
        e
    } else {
        curve.at_density(p)?
    };
    Ok(y.values.iter().zip(&model).map(|(a, b)| a - b).collect())
}

/// Backbone curves for the residual blocks of a spec.
pub struct Backbones {
    gnp: Option<BackboneCurve>,
    fitted: Option<BackboneCurve>,
}

impl Backbones {
    pub fn new(spec: &FeatureSpec, lambda: Option<f64>) -> Result<Backbones> {
        let catalog = Catalog::shared(spec.residual_k())?;
        let fitted = if spec.r_lambda {
            let lambda = lambda.ok_or_else(|| {
                Error::InvalidInput("R_lambda features need a fitted lambda".into())
            })?;
            Some(BackboneCurve::new(catalog, lambda)?)
        } else {
            None
        };
        Ok(Backbones {
            gnp: if spec.r_g {
                Some(BackboneCurve::new(catalog, 0.0)?)
            } else {
                None
            },
            fitted,
        })
    }
}

/// Feature vector of a summarized graph.
pub fn features_from_summary(
    s: &GraphSummary,
    spec: &FeatureSpec,
    backbones: &Backbones,
) -> Result<Vec<f64>> {
    let mut v = Vec::with_capacity(spec.dimension());
    if spec.edges {
        v.push(s.density);
    }
    if spec.triads {
        v.extend(&s.census(3)?.values);
    }
    if spec.quads {
        v.extend(&s.census(4)?.values);
    }
    let y = || s.census(spec.residual_k());
    if let Some(curve) = &backbones.gnp {
        v.extend(residual(y()?, s.density, curve)?);
    }
    if let Some(curve) = &backbones.fitted {
        v.extend(residual(y()?, s.density, curve)?);
    }
    if spec.global {
        let g = s
            .global
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("summary lacks global features".into()))?;
        v.extend(g);
    }
    Ok(v)
}

/// Feature vector of `g` under `spec`; `lambda` is the backbone for R_lambda.
pub fn assemble_features(
    g: &Graph,
    spec: &FeatureSpec,
    lambda: Option<f64>,
    seed: u64,
) -> Result<Vec<f64>> {
    let summary = GraphSummary::new(g, spec, seed)?;
    features_from_summary(&summary, spec, &Backbones::new(spec, lambda)?)
}

/// Least-residual lambda for a pool of summaries, ignoring empty and complete graphs.
pub fn fit_pooled_lambda(
    summaries: &[&GraphSummary],
    k: usize,
    options: &FitOptions,
) -> Result<f64> {
    let mut ys = Vec::new();
    let mut ps = Vec::new();
    for s in summaries {
        if s.density > 0.0 && s.density < 1.0 {
            ys.push(s.census(k)?.clone());
            ps.push(s.density);
        }
    }
    Ok(fit_lambda(&ys, &ps, k, options)?.lambda)
}

/// Feature vectors with binary labels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<LabeledDataset> {
        if features.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature vectors but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(d) = features.first().map(Vec::len) {
            if features.iter().any(|x| x.len() != d) {
                return Err(Error::InvalidDataset("feature vectors differ in length".into()));
            }
        }
        Ok(LabeledDataset { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Fold index of each instance. Each class is shuffled and dealt round-robin,
/// continuing from where the previous class stopped, so per-fold class counts
/// differ by at most one.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < folds {
        return Err(Error::InvalidDataset(format!(
            "{} instances cannot fill {folds} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// Fitted model: standardization followed by a linear score.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl LogisticModel {
    pub fn probability(&self, x: &[f64]) -> f64 {
        let z: f64 = self.intercept
            + x.iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .zip(&self.weights)
                .map(|(((x, m), s), w)| w * (x - m) / s)
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.probability(x) >= 0.5
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> f64 {
        let correct = data
            .features
            .iter()
            .zip(&data.labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        correct as f64 / data.len() as f64
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized log-likelihood `sum_i [y_i z_i - log(1 + e^{z_i})] - reg/2 |w|^2`
/// with `z_i = b + w . x_i`; the intercept `b = params[d]` is not penalized.
pub fn penalized_log_likelihood(params: &[f64], x: &[Vec<f64>], y: &[bool], reg: f64) -> f64 {
    let d = params.len() - 1;
    let w = &params[..d];
    let mut total = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let z = params[d] + xi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        total += if yi { z } else { 0.0 } - softplus(z);
    }
    total - 0.5 * reg * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`penalized_log_likelihood`].
pub fn penalized_gradient(params: &[f64], x: &[Vec<f64>], y: &[bool], reg: f64) -> Vec<f64> {
    let d = params.len() - 1;
    let mut g = vec![0.0; d + 1];
    for (xi, &yi) in x.iter().zip(y) {
        let z = params[d] + xi.iter().zip(&params[..d]).map(|(a, b)| a * b).sum::<f64>();
        let r = yi as u8 as f64 - sigmoid(z);
        for (gj, xj) in g.iter_mut().zip(xi) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    for (gj, wj) in g.iter_mut().zip(&params[..d]) {
        *gj -= reg * wj;
    }
    g
}

/// Settings for [`train_logistic`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions {
    pub regularization: f64,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            regularization: 1.0,
            gradient_tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

/// Maximizes the penalized log-likelihood on standardized features.
///
/// Ascent steps follow the Newton direction, halved until the objective
/// improves; a plain gradient step is used when the Hessian is singular.
pub fn train_logistic(train: &LabeledDataset, options: &TrainOptions) -> Result<LogisticModel> {
    if !(options.regularization >= 0.0) {
        return Err(Error::InvalidParameter("regularization must be non-negative".into()));
    }
    let positives = train.labels.iter().filter(|&&y| y).count();
    if positives < 2 || train.len() - positives < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 instances of each class, got {positives} and {}",
            train.len() - positives
        )));
    }
    let d = train.dimension();
    let n = train.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| train.features.iter().map(|x| x[j]).sum::<f64>() / n)
        .collect();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let var = train.features.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 1e-24 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let x: Vec<Vec<f64>> = train
        .features
        .iter()
        .map(|xi| (0..d).map(|j| (xi[j] - mean[j]) / scale[j]).collect())
        .collect();
    let y = &train.labels;
    let reg = options.regularization;

    let mut params = vec![0.0; d + 1];
    let mut value = penalized_log_likelihood(&params, &x, y, reg);
    let mut iterations = 0;
    let mut grad = penalized_gradient(&params, &x, y, reg);
    let mut norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    while norm > options.gradient_tolerance && iterations < options.max_iterations {
        iterations += 1;
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        for xi in &x {
            let z = params[d] + xi.iter().zip(&params[..d]).map(|(a, b)| a * b).sum::<f64>();
            let s = sigmoid(z);
            let w = s * (1.0 - s);
            for a in 0..=d {
                let xa = if a < d { xi[a] } else { 1.0 };
                for b in a..=d {
                    let xb = if b < d { xi[b] } else { 1.0 };
                    h[(a, b)] += w * xa * xb;
                }
            }
        }
        for a in 0..=d {
            if a < d {
                h[(a, a)] += reg;
            }
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        let g = DVector::from_vec(grad.clone());
        let direction = match h.cholesky() {
            Some(c) => c.solve(&g),
            None => g / n,
        };
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = params
                .iter()
                .zip(direction.iter())
                .map(|(p, s)| p + step * s)
                .collect();
            let v = penalized_log_likelihood(&trial, &x, y, reg);
            if v >= value || step < 1e-12 {
                if v >= value {
                    params = trial;
                    value = v;
                }
                break;
            }
            step *= 0.5;
        }
        let next = penalized_gradient(&params, &x, y, reg);
        let next_norm = next.iter().map(|g| g * g).sum::<f64>().sqrt();
        let stalled = step < 1e-12 && next_norm >= norm;
        grad = next;
        norm = next_norm;
        if stalled {
            break;
        }
    }
    Ok(LogisticModel {
        mean,
        scale,
        intercept: params[d],
        weights: params[..d].to_vec(),
        iterations,
        gradient_norm: norm,
    })
}

/// Mean and standard error of per-fold test accuracies.
#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
    /// Fitted lambda per fold when R_lambda is in the spec.
    pub lambdas: Vec<f64>,
}

impl CvReport {
    fn new(fold_accuracies: Vec<f64>, lambdas: Vec<f64>) -> CvReport {
        let (mean, std_error) = mean_and_std_error(&fold_accuracies);
        CvReport {
            fold_accuracies,
            mean,
            std_error,
            lambdas,
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Settings for [`cross_validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub train: TrainOptions,
    pub fit: FitOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: 5,
            train: TrainOptions::default(),
            fit: FitOptions::default(),
        }
    }
}

/// Cross-validated accuracy on fixed feature vectors.
pub fn cross_validate_features(
    data: &LabeledDataset,
    options: &CvOptions,
    seed: u64,
) -> Result<CvReport> {
    let folds = stratified_folds(&data.labels, options.folds, seed)?;
    let accuracies = (0..options.folds)
        .into_par_iter()
        .map(|f| {
            let (train, test): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| folds[i] != f);
            let model = train_logistic(&data.subset(&train), &options.train)?;
            Ok(model.accuracy(&data.subset(&test)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CvReport::new(accuracies, Vec::new()))
}

/// Cross-validated accuracy of `spec` on summarized graphs. Standardization
/// and the R_lambda backbone are fit on each fold's training graphs only;
/// lambda is fit on those graphs pooled, without labels.
pub fn cross_validate(
    summaries: &[GraphSummary],
    labels: &[bool],
    spec: &FeatureSpec,
    options: &CvOptions,
    seed: u64,
) -> Result<CvReport> {
    if summaries.len() != labels.len() {
        return Err(Error::InvalidDataset(format!(
            "{} graphs but {} labels",
            summaries.len(),
            labels.len()
        )));
    }
    let folds = stratified_folds(labels, options.folds, seed)?;
    let fixed = if spec.r_lambda {
        None
    } else {
        Some(Backbones::new(spec, None)?)
    };
    let features_with = |backbones: &Backbones| -> Result<Vec<Vec<f64>>> {
        summaries
            .par_iter()
            .map(|s| features_from_summary(s, spec, backbones))
            .collect()
    };
    let shared = fixed.as_ref().map(features_with).transpose()?;
    let mut accuracies = Vec::with_capacity(options.folds);
    let mut lambdas = Vec::new();
    for f in 0..options.folds {
        let (train, test): (Vec<usize>, Vec<usize>) =
            (0..summaries.len()).partition(|&i| folds[i] != f);
        let features = match &shared {
            Some(x) => x.clone(),
            None => {
                let pool: Vec<&GraphSummary> = train.iter().map(|&i| &summaries[i]).collect();
                let lambda = fit_pooled_lambda(&pool, spec.residual_k(), &options.fit)?;
                lambdas.push(lambda);
                features_with(&Backbones::new(spec, Some(lambda))?)?
            }
        };
        let data = LabeledDataset::new(features, labels.to_vec())?;
        let model = train_logistic(&data.subset(&train), &options.train)?;
        accuracies.push(model.accuracy(&data.subset(&test)));
    }
    Ok(CvReport::new(accuracies, lambdas))
}

/// Random equal-size subsets of two collections: indices into each.
pub fn balanced_subsample(a: usize, b: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let m = a.min(b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |len: usize| {
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(&mut rng);
        idx.truncate(m);
        idx.sort_unstable();
        idx
    };
    let ia = pick(a);
    let ib = pick(b);
    (ia, ib)
}

/// Equal-size subsets of two collections with matching density histograms:
/// within each bin of width `bin_width`, the same number of members is
/// drawn at random from each side.
pub fn density_matched_subsample(
    a: &[f64],
    b: &[f64],
    bin_width: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let bins = (1.0 / bin_width).ceil() as usize + 1;
    let bin = |p: f64| ((p / bin_width).floor() as usize).min(bins - 1);
    let mut by_bin_a = vec![Vec::new(); bins];
    let mut by_bin_b = vec![Vec::new(); bins];
    for (i, &p) in a.iter().enumerate() {
        by_bin_a[bin(p)].push(i);
    }
    for (i, &p) in b.iter().enumerate() {
        by_bin_b[bin(p)].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ia, mut ib) = (Vec::new(), Vec::new());
    for (mut xa, mut xb) in by_bin_a.into_iter().zip(by_bin_b) {
        let m = xa.len().min(xb.len());
        xa.shuffle(&mut rng);
        xb.shuffle(&mut rng);
        ia.extend_from_slice(&xa[..m]);
        ib.extend_from_slice(&xb[..m]);
    }
    ia.sort_unstable();
    ib.sort_unstable();
    Ok((ia, ib))
}
