//! Edge formation random walk with triadic closure on `k`-node classes.
//!
//! Rates are in units of the deletion rate, which is fixed at 1. An absent
//! pair whose endpoints share `c` neighbors forms at rate `nu + c * lambda`;
//! every present edge is deleted at rate 1. The generator uses the column
//! convention: `rates[(to, from)]` is the rate from `from` to `to`, and each
//! column sums to zero, so the stationary distribution solves `Q pi = 0`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::catalog::Catalog;
use crate::census::{CensusMode, FrequencyVector};
use crate::error::{Error, Result};

/// Lower end of the bracket searched for `nu`.
pub const NU_MIN: f64 = 1e-6;
/// Upper end of the bracket searched for `nu`.
pub const NU_MAX: f64 = 1e6;

const NU_GRID_PER_DECADE: usize = 10;
const DENSITY_TOLERANCE: f64 = 1e-11;

/// Parameters of the walk on `k`-node graphs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateModel {
    pub k: usize,
    /// Edge formation rate relative to deletion.
    pub nu: f64,
    /// Extra formation rate per 3-node path an added edge would close.
    pub lambda: f64,
}

impl RateModel {
    pub fn new(k: usize, nu: f64, lambda: f64) -> Result<RateModel> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        Ok(RateModel { k, nu, lambda })
    }
}

/// Transition-rate matrix over the catalog classes.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrix {
    pub dimension: usize,
    pub rates: DMatrix<f64>,
}

/// The generator split by parameter: `Q = nu * formation + lambda * closure + deletion`.
#[derive(Clone, Debug)]
pub struct RateTables {
    k: usize,
    formation: DMatrix<f64>,
    closure: DMatrix<f64>,
    deletion: DMatrix<f64>,
    edge_fractions: Vec<f64>,
}

impl RateTables {
    pub fn new(catalog: &Catalog) -> RateTables {
        let d = catalog.len();
        let mut formation = DMatrix::zeros(d, d);
        let mut closure = DMatrix::zeros(d, d);
        let mut deletion = DMatrix::zeros(d, d);
        let t = catalog.transitions();
        for a in &t.additions {
            let m = a.multiplicity as f64;
            formation[(a.to, a.from)] += m;
            formation[(a.from, a.from)] -= m;
            let c = m * a.closed_paths as f64;
            closure[(a.to, a.from)] += c;
            closure[(a.from, a.from)] -= c;
        }
        for r in &t.deletions {
            let m = r.multiplicity as f64;
            deletion[(r.to, r.from)] += m;
            deletion[(r.from, r.from)] -= m;
        }
        RateTables {
            k: catalog.k(),
            formation,
            closure,
            deletion,
            edge_fractions: catalog.edge_fractions(),
        }
    }

    pub fn generator(&self, nu: f64, lambda: f64) -> GeneratorMatrix {
        let rates = &self.formation * nu + &self.closure * lambda + &self.deletion;
        GeneratorMatrix {
            dimension: rates.nrows(),
            rates,
        }
    }

    /// Stationary class distribution at rates `(nu, lambda)`.
    pub fn stationary(&self, nu: f64, lambda: f64) -> Result<Vec<f64>> {
        solve_stationary(&self.generator(nu, lambda))
    }

    /// Expected edge density of a class distribution.
    pub fn density_of(&self, pi: &[f64]) -> f64 {
        self.edge_fractions.iter().zip(pi).map(|(s, x)| s * x).sum()
    }
}

/// Generator of the walk for `model` on `catalog`'s classes.
pub fn build_generator(catalog: &Catalog, model: &RateModel) -> Result<GeneratorMatrix> {
    if catalog.k() != model.k {
        return Err(Error::InvalidInput(format!(
            "model is for k = {}, catalog for k = {}",
            model.k,
            catalog.k()
        )));
    }
    Ok(RateTables::new(catalog).generator(model.nu, model.lambda))
}

fn solve_stationary(q: &GeneratorMatrix) -> Result<Vec<f64>> {
    let d = q.dimension;
    let mut a = q.rates.clone();
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("stationary system is singular".into()))?;
    let scale = q.rates.abs().max().max(1.0);
    let residual = (&q.rates * &pi).amax();
    if !(residual <= 1e-10 * scale) || pi.iter().any(|&x| x < -1e-12) {
        return Err(Error::Numerical(format!(
            "stationary solve failed: residual {residual:e}, min entry {:e}",
            pi.min()
        )));
    }
    let mut pi: Vec<f64> = pi.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(pi)
}

/// The unique probability vector with `Q pi = 0`.
pub fn stationary_distribution(q: &GeneratorMatrix) -> Result<FrequencyVector> {
    let values = solve_stationary(q)?;
    let k = (0..=crate::catalog::MAX_CATALOG_K)
        .find(|&k| Catalog::shared(k).is_ok_and(|c| c.len() == q.dimension))
        .ok_or_else(|| Error::InvalidInput(format!("no catalog has {} classes", q.dimension)))?;
    Ok(FrequencyVector {
        k,
        values,
        mode: CensusMode::Exact,
        sample_count: 0,
    })
}

/// Stationary distributions at fixed `lambda`, indexed by edge density.
///
/// The density of the stationary distribution is tabulated on a log-spaced
/// `nu` grid over `[NU_MIN, NU_MAX]`, then each requested density is refined
/// inside its grid bracket.
#[derive(Clone, Debug)]
pub struct BackboneCurve {
    tables: RateTables,
    lambda: f64,
    log_nu: Vec<f64>,
    density: Vec<f64>,
}

impl BackboneCurve {
    pub fn new(catalog: &Catalog, lambda: f64) -> Result<BackboneCurve> {
        RateModel::new(catalog.k(), 1.0, lambda)?;
        let tables = RateTables::new(catalog);
        let (lo, hi) = (NU_MIN.ln(), NU_MAX.ln());
        let steps = ((NU_MAX / NU_MIN).log10().round() as usize) * NU_GRID_PER_DECADE;
        let log_nu: Vec<f64> = (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .collect();
        let density = log_nu
            .iter()
            .map(|&l| Ok(tables.density_of(&tables.stationary(l.exp(), lambda)?)))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(w) = density.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Numerical(format!(
                "stationary density is not monotone in nu at nu = {:e} (lambda = {lambda})",
                log_nu[w].exp()
            )));
        }
        Ok(BackboneCurve {
            tables,
            lambda,
            log_nu,
            density,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> usize {
        self.tables.k
    }

    /// `nu` whose stationary distribution has edge density `p`.
    pub fn nu_for_density(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "density must lie strictly inside (0, 1), got {p}"
            )));
        }
        let last = self.density.len() - 1;
        if p < self.density[0] || p > self.density[last] {
            return Err(Error::Numerical(format!(
                "density {p} is outside the range reachable with nu in [{NU_MIN:e}, {NU_MAX:e}]"
            )));
        }
        let hi_idx = self.density.partition_point(|&d| d < p).clamp(1, last);
        let (mut a, mut b) = (self.log_nu[hi_idx - 1], self.log_nu[hi_idx]);
        let (mut fa, mut fb) = (self.density[hi_idx - 1] - p, self.density[hi_idx] - p);
        if fa.abs() <= DENSITY_TOLERANCE {
            return Ok(a.exp());
        }
        if fb.abs() <= DENSITY_TOLERANCE {
            return Ok(b.exp());
        }
        // Illinois false position, falling back to bisection on slow progress.
        let (mut da, mut db) = (fa + p, fb + p);
        let mut side = 0i8;
        for iter in 0..200 {
            let c = if iter % 8 == 7 {
                0.5 * (a + b)
            } else {
                (a * fb - b * fa) / (fb - fa)
            };
            let pi = self.tables.stationary(c.exp(), self.lambda)?;
            let dc = self.tables.density_of(&pi);
            if dc < da - 1e-12 || dc > db + 1e-12 {
                return Err(Error::Numerical(format!(
                    "stationary density is not monotone in nu near nu = {:e}",
                    c.exp()
                )));
            }
            let fc = dc - p;
            if fc.abs() <= DENSITY_TOLERANCE || (b - a).abs() < 1e-15 {
                return Ok(c.exp());
            }
            if fc < 0.0 {
                a = c;
                fa = fc;
                da = dc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = c;
                fb = fc;
                db = dc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        Err(Error::Numerical(format!("nu search for density {p} did not converge")))
    }

    /// Stationary distribution whose edge density is `p`.
    pub fn at_density(&self, p: f64) -> Result<Vec<f64>> {
        let nu = self.nu_for_density(p)?;
        self.tables.stationary(nu, self.lambda)
    }
}

/// `nu` such that the stationary distribution at `(nu, lambda)` has edge density `p`.
pub fn nu_for_density(k: usize, p: f64, lambda: f64) -> Result<f64> {
    BackboneCurve::new(Catalog::shared(k)?, lambda)?.nu_for_density(p)
}

/// `pi_k(nu(p, lambda), lambda)` as a frequency vector.
pub fn backbone_point(k: usize, p: f64, lambda: f64) -> Result<FrequencyVector> {
    let values = BackboneCurve::new(Catalog::shared(k)?, lambda)?.at_density(p)?;
    Ok(FrequencyVector {
        k,
        values,
        mode: CensusMode::Exact,
        sample_count: 0,
    })
}

/// `y - pi_k(nu(p, lambda), lambda)`; `lambda = 0` gives the residual against `G(k, p)`.
pub fn backbone_residual(y: &FrequencyVector, p: f64, lambda: f64) -> Result<Vec<f64>> {
    let model = backbone_point(y.k, p, lambda)?;
    Ok(y.values.iter().zip(&model.values).map(|(a, b)| a - b).collect())
}

/// Settings for [`fit_lambda`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub lambda_max: f64,
    pub grid_step: f64,
    pub tolerance: f64,
    /// Sum squared residual norms instead of plain norms.
    pub squared: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lambda_max: 20.0,
            grid_step: 0.25,
            tolerance: 1e-4,
            squared: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaFit {
    pub lambda: f64,
    pub objective: f64,
    pub objective_at_zero: f64,
}

/// Sum over graphs of `||pi_k(nu(p_i, lambda), lambda) - y_i||`.
pub fn fit_objective(
    frequencies: &[FrequencyVector],
    densities: &[f64],
    k: usize,
    lambda: f64,
    squared: bool,
) -> Result<f64> {
    check_fit_input(frequencies, densities, k)?;
    ObjectiveEval::new(densities).evaluate(frequencies, k, lambda, squared)
}

fn check_fit_input(frequencies: &[FrequencyVector], densities: &[f64], k: usize) -> Result<()> {
    if frequencies.is_empty() {
        return Err(Error::InvalidInput("cannot fit lambda to an empty collection".into()));
    }
    if frequencies.len() != densities.len() {
        return Err(Error::InvalidInput(format!(
            "{} frequency vectors but {} densities",
            frequencies.len(),
            densities.len()
        )));
    }
    let dim = Catalog::shared(k)?.len();
    if let Some(y) = frequencies.iter().find(|y| y.k != k || y.values.len() != dim) {
        return Err(Error::InvalidInput(format!(
            "frequency vector for k = {} does not match k = {k}",
            y.k
        )));
    }
    if let Some(p) = densities.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::InvalidInput(format!("density {p} is not inside (0, 1)")));
    }
    Ok(())
}

/// Distinct densities of a collection, so each model point is solved once.
struct ObjectiveEval {
    unique: Vec<f64>,
    slot: Vec<usize>,
}

impl ObjectiveEval {
    fn new(densities: &[f64]) -> Self {
        let mut map = BTreeMap::new();
        for p in densities {
            let len = map.len();
            map.entry(p.to_bits()).or_insert(len);
        }
        let mut unique = vec![0.0; map.len()];
        for (&bits, &i) in &map {
            unique[i] = f64::from_bits(bits);
        }
        let slot = densities.iter().map(|p| map[&p.to_bits()]).collect();
        ObjectiveEval { unique, slot }
    }

    fn evaluate(&self, ys: &[FrequencyVector], k: usize, lambda: f64, squared: bool) -> Result<f64> {
        let curve = BackboneCurve::new(Catalog::shared(k)?, lambda)?;
        let points = self
            .unique
            .par_iter()
            .map(|&p| curve.at_density(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(ys
            .iter()
            .zip(&self.slot)
            .map(|(y, &s)| {
                let sq: f64 = y
                    .values
                    .iter()
                    .zip(&points[s])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if squared {
                    sq
                } else {
                    sq.sqrt()
                }
            })
            .sum())
    }
}

/// Least-residual `lambda` for a collection: coarse grid scan over
/// `[0, lambda_max]`, then golden-section refinement around the best grid point.
pub fn fit_lambda(
    frequencies: &[FrequencyVector],
    densities: &[f64],
    k: usize,
    options: &FitOptions,
) -> Result<LambdaFit> {
    check_fit_input(frequencies, densities, k)?;
    let eval = ObjectiveEval::new(densities);
    let objective = |lambda: f64| eval.evaluate(frequencies, k, lambda, options.squared);

    let steps = (options.lambda_max / options.grid_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * options.grid_step).collect();
    let values = grid.iter().map(|&l| objective(l)).collect::<Result<Vec<f64>>>()?;
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let objective_at_zero = values[0];

    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(steps)];
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (objective(x1)?, objective(x2)?);
    while hi - lo > options.tolerance {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = objective(x2)?;
        }
    }
    let (mut lambda, mut value) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if values[best] < value {
        lambda = grid[best];
        value = values[best];
    }
    if objective_at_zero <= value {
        lambda = 0.0;
        value = objective_at_zero;
    }
    Ok(LambdaFit {
        lambda,
        objective: value,
        objective_at_zero,
    })
}
