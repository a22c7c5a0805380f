//! Linear programs over `k`-node subgraph frequencies at fixed edge density.
//!
//! Homomorphism inequalities (Kruskal-Katona, Moon-Moser, Sidorenko) are
//! rewritten as linear constraints on the frequency vector through injective
//! homomorphism densities, together with their images under complementation.
//! All constraints are the large-graph limits; finite graphs satisfy them up
//! to `O(1/n)`.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::catalog::{factorial, Catalog};
use crate::census::FrequencyVector;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::lp::{exact_rational, Feasible, LpError, Optimum, Problem, Scalar};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Coefficients `c` with `c . x = t_inj(f, G)` for `x` the `k`-node frequency vector of `G`.
pub fn hom_to_frequency_coeffs(f: &Graph, catalog: &Catalog) -> Result<Vec<BigRational>> {
    let j = f.n();
    let k = catalog.k();
    if j > k {
        return Err(Error::InvalidInput(format!(
            "pattern has {j} nodes, catalog is for k = {k}"
        )));
    }
    let level = catalog.level(j);
    let fi = level.class_of(f)?;
    let jf = int(factorial(j));
    let on_level: Vec<BigRational> = level
        .classes
        .iter()
        .map(|c| int(level.ext(fi, c.index)) * int(c.aut) / jf.clone())
        .collect();
    Ok((0..catalog.len())
        .map(|h| {
            on_level
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(fp, a)| a.clone() * catalog.subgraph_ratio(j, fp, h))
                .fold(BigRational::zero(), |acc, v| acc + v)
        })
        .collect())
}

/// One linear constraint `coeffs . x (<= | =) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<BigRational>,
    /// Right-hand side used by the solvers; a dyadic rounding when `exact` is false.
    pub rhs: BigRational,
    pub rhs_value: f64,
    /// Whether `rhs` equals the mathematical right-hand side.
    pub exact: bool,
    pub tag: String,
}

impl Constraint {
    fn new(coeffs: Vec<BigRational>, rhs: Bound, tag: String) -> Constraint {
        Constraint {
            coeffs,
            rhs_value: rhs.value,
            exact: rhs.exact.is_some(),
            rhs: rhs.exact.unwrap_or_else(|| exact_rational(rhs.value)),
            tag,
        }
    }

    fn negated(mut self) -> Constraint {
        self.coeffs.iter_mut().for_each(|c| *c = -c.clone());
        self.rhs = -self.rhs;
        self.rhs_value = -self.rhs_value;
        self
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(x)
            .map(|(c, v)| c.to_f64().unwrap_or(f64::NAN) * v)
            .sum()
    }
}

/// A right-hand side known exactly or only as a float.
struct Bound {
    exact: Option<BigRational>,
    value: f64,
}

impl Bound {
    fn exact(r: BigRational) -> Bound {
        Bound {
            value: r.to_f64().unwrap_or(f64::NAN),
            exact: Some(r),
        }
    }
}

fn pow(p: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * p.clone())
}

fn exact_sqrt(p: &BigRational) -> Option<BigRational> {
    let (n, d) = (p.numer(), p.denom());
    if n.is_negative() {
        return None;
    }
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| BigRational::new(sn, sd))
}

/// `p^(r/2)`.
fn half_power(p: &BigRational, r: usize) -> Bound {
    if r % 2 == 0 {
        return Bound::exact(pow(p, r / 2));
    }
    match exact_sqrt(p) {
        Some(s) => Bound::exact(pow(&s, r)),
        None => Bound {
            exact: None,
            value: p.to_f64().unwrap_or(f64::NAN).powf(r as f64 / 2.0),
        },
    }
}

/// `A x = b`, `C x <= d` over the `k`-node classes at edge density `p`.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub k: usize,
    pub p: BigRational,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
}

/// Sidorenko instances on exactly `j` nodes: forests with at least two
/// edges, `C_4` and `K_{2,3}`.
fn sidorenko_patterns(catalog: &Catalog, j: usize) -> Vec<Graph> {
    let special: Vec<Graph> = match j {
        4 => vec![Graph::cycle(4)],
        5 => vec![Graph::complete_bipartite(2, 3)],
        _ => vec![],
    };
    let special: Vec<_> = special.iter().map(|g| g.canonical_code().expect("small graph")).collect();
    catalog
        .level(j)
        .classes
        .iter()
        .filter(|c| {
            let g = &c.representative;
            let forest = g.edge_count() + g.components().len() == g.n();
            (forest && g.edge_count() >= 2) || special.contains(&c.code)
        })
        .map(|c| c.representative.clone())
        .collect()
}

/// Constraints stated for a graph of density `q`, before complementation.
fn direct_constraints(catalog: &Catalog, q: &BigRational) -> Result<Vec<Constraint>> {
    let k = catalog.k();
    let mut out = Vec::new();
    for r in 3..=k {
        let clique = hom_to_frequency_coeffs(&Graph::complete(r), catalog)?;
        out.push(Constraint::new(
            clique.clone(),
            half_power(q, r),
            format!("kruskal-katona K{r}"),
        ));
        if *q >= rat(r as i64 - 2, r as i64 - 1) {
            let bound = (1..r).fold(BigRational::one(), |acc, i| {
                acc * (BigRational::one() - int(i as u64) * (BigRational::one() - q.clone()))
            });
            out.push(Constraint::new(clique, Bound::exact(bound), format!("moon-moser K{r}")).negated());
        }
    }
    for j in 3..=k {
        for f in sidorenko_patterns(catalog, j) {
            let code = f.canonical_code()?;
            out.push(
                Constraint::new(
                    hom_to_frequency_coeffs(&f, catalog)?,
                    Bound::exact(pow(q, f.edge_count())),
                    format!("sidorenko {j}:{code}"),
                )
                .negated(),
            );
        }
    }
    Ok(out)
}

/// The system at edge density `p`. Every inequality is stored in `<=` form.
pub fn assemble_constraints(k: usize, p: &BigRational) -> Result<ConstraintSystem> {
    if !(3..=5).contains(&k) {
        return Err(Error::UnsupportedSize {
            size: k,
            reason: "constraint systems are built for 3 <= k <= 5",
        });
    }
    if p.is_negative() || *p > BigRational::one() {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let catalog = Catalog::shared(k)?;
    let d = catalog.len();
    let equalities = vec![
        Constraint::new(vec![BigRational::one(); d], Bound::exact(BigRational::one()), "simplex".into()),
        Constraint::new(
            hom_to_frequency_coeffs(&Graph::complete(2), catalog)?,
            Bound::exact(p.clone()),
            "density".into(),
        ),
    ];
    let mut inequalities = direct_constraints(catalog, p)?;
    let q = BigRational::one() - p.clone();
    for c in direct_constraints(catalog, &q)? {
        let mut coeffs = vec![BigRational::zero(); d];
        for (h, v) in c.coeffs.iter().enumerate() {
            coeffs[catalog.complement_of(h)] = v.clone();
        }
        inequalities.push(Constraint {
            coeffs,
            tag: format!("complement of {}", c.tag),
            ..c
        });
    }
    let mut seen = HashSet::new();
    inequalities.retain(|c| seen.insert((c.coeffs.clone(), c.rhs.clone())));
    Ok(ConstraintSystem {
        k,
        p: p.clone(),
        equalities,
        inequalities,
    })
}

/// Arithmetic used by the LP.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolveMode {
    /// Rational simplex; float right-hand sides enter as their exact dyadic values.
    Exact,
    Float,
    /// Exact for `k <= 4`, float for `k = 5`.
    #[default]
    Auto,
}

impl SolveMode {
    fn resolve(self, k: usize) -> SolveMode {
        match self {
            SolveMode::Auto if k <= 4 => SolveMode::Exact,
            SolveMode::Auto => SolveMode::Float,
            m => m,
        }
    }
}

/// Min and max of one class frequency, with the inequalities tight at each optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassBounds {
    pub class: usize,
    pub lower: f64,
    pub upper: f64,
    /// Set in exact mode.
    pub lower_exact: Option<BigRational>,
    pub upper_exact: Option<BigRational>,
    pub lower_point: Vec<f64>,
    pub upper_point: Vec<f64>,
    pub lower_active: Vec<String>,
    pub upper_active: Vec<String>,
}

trait FromConstraint: Scalar {
    fn coefficient(c: &BigRational) -> Self;
    fn rhs(c: &Constraint) -> Self;
}

impl FromConstraint for f64 {
    fn coefficient(c: &BigRational) -> Self {
        c.to_f64().unwrap_or(f64::NAN)
    }

    fn rhs(c: &Constraint) -> Self {
        c.rhs_value
    }
}

impl FromConstraint for BigRational {
    fn coefficient(c: &BigRational) -> Self {
        c.clone()
    }

    fn rhs(c: &Constraint) -> Self {
        c.rhs.clone()
    }
}

fn to_problem<T: FromConstraint>(system: &ConstraintSystem) -> Problem<T> {
    let row = |c: &Constraint| (c.coeffs.iter().map(T::coefficient).collect(), T::rhs(c));
    Problem {
        vars: system.equalities[0].coeffs.len(),
        eq: system.equalities.iter().map(row).collect(),
        le: system.inequalities.iter().map(row).collect(),
    }
}

fn phase_one<T: FromConstraint>(system: &ConstraintSystem) -> Result<Feasible<T>> {
    let problem = to_problem::<T>(system);
    match problem.feasible().map_err(lp_error)? {
        Ok(f) => Ok(f),
        Err(report) => Err(Error::Infeasible(
            report
                .eq_rows
                .iter()
                .map(|&i| system.equalities[i].tag.clone())
                .chain(report.le_rows.iter().map(|&i| system.inequalities[i].tag.clone()))
                .collect(),
        )),
    }
}

fn lp_error(e: LpError) -> Error {
    Error::Numerical(format!("linear program failed: {e:?}"))
}

/// Point, active tags, and a feasibility check to `1e-9`.
fn finish<T: Scalar>(system: &ConstraintSystem, opt: &Optimum<T>) -> Result<(Vec<f64>, Vec<String>)> {
    let x: Vec<f64> = opt.x.iter().map(Scalar::as_f64).collect();
    let tol = 1e-9;
    for c in &system.equalities {
        if (c.lhs(&x) - c.rhs_value).abs() > tol {
            return Err(Error::Numerical(format!("optimum violates {}", c.tag)));
        }
    }
    for c in &system.inequalities {
        if c.lhs(&x) - c.rhs_value > tol {
            return Err(Error::Numerical(format!("optimum violates {}", c.tag)));
        }
    }
    if x.iter().any(|&v| v < -tol) {
        return Err(Error::Numerical("optimum has a negative frequency".into()));
    }
    let active = opt
        .slacks
        .iter()
        .zip(&system.inequalities)
        .filter(|(s, _)| s.as_f64().abs() <= tol)
        .map(|(_, c)| c.tag.clone())
        .collect();
    Ok((x, active))
}

fn bounds_with<T: FromConstraint>(
    system: &ConstraintSystem,
    feasible: &Feasible<T>,
    class: usize,
    as_exact: impl Fn(&T) -> Option<BigRational>,
) -> Result<ClassBounds> {
    let d = system.equalities[0].coeffs.len();
    let mut objective = vec![T::zero(); d];
    objective[class] = T::one();
    let lo = feasible.minimize(&objective).map_err(lp_error)?;
    let hi = feasible.maximize(&objective).map_err(lp_error)?;
    let (lower_point, lower_active) = finish(system, &lo)?;
    let (upper_point, upper_active) = finish(system, &hi)?;
    Ok(ClassBounds {
        class,
        lower: lo.value.as_f64(),
        upper: hi.value.as_f64(),
        lower_exact: as_exact(&lo.value),
        upper_exact: as_exact(&hi.value),
        lower_point,
        upper_point,
        lower_active,
        upper_active,
    })
}

/// Bounds for every class of the system, sharing one feasible basis.
pub fn solve_all_bounds(system: &ConstraintSystem, mode: SolveMode) -> Result<Vec<ClassBounds>> {
    let d = system.equalities[0].coeffs.len();
    match mode.resolve(system.k) {
        SolveMode::Exact => {
            let f = phase_one::<BigRational>(system)?;
            (0..d).map(|c| bounds_with(system, &f, c, |v| Some(v.clone()))).collect()
        }
        _ => {
            let f = phase_one::<f64>(system)?;
            (0..d).map(|c| bounds_with(system, &f, c, |_| None)).collect()
        }
    }
}

/// Min and max of the frequency of `class`.
pub fn solve_bounds(system: &ConstraintSystem, class: usize, mode: SolveMode) -> Result<ClassBounds> {
    let d = system.equalities[0].coeffs.len();
    if class >= d {
        return Err(Error::InvalidInput(format!("class {class} out of range for {d} classes")));
    }
    match mode.resolve(system.k) {
        SolveMode::Exact => bounds_with(system, &phase_one::<BigRational>(system)?, class, |v| {
            Some(v.clone())
        }),
        _ => bounds_with(system, &phase_one::<f64>(system)?, class, |_| None),
    }
}

/// Simplest rational within `tol` of `x` (continued-fraction convergents).
pub fn simplest_rational(x: f64, tol: f64) -> BigRational {
    let mut h = (BigInt::one(), BigInt::zero());
    let mut kk = (BigInt::zero(), BigInt::one());
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = BigInt::from(a as i64);
        let hn = &ai * &h.0 + &h.1;
        let kn = &ai * &kk.0 + &kk.1;
        h = (hn, h.0);
        kk = (kn, kk.0);
        let approx = BigRational::new(h.0.clone(), kk.0.clone());
        if (approx.to_f64().unwrap_or(f64::NAN) - x).abs() <= tol || rest == a {
            return approx;
        }
        rest = 1.0 / (rest - a);
        if !rest.is_finite() {
            return approx;
        }
    }
    exact_rational(x)
}

/// `steps` evenly spaced exact densities from 0 to 1.
pub fn density_grid(steps: usize) -> Vec<BigRational> {
    match steps {
        0 => vec![],
        1 => vec![BigRational::zero()],
        _ => (0..steps).map(|i| rat(i as i64, steps as i64 - 1)).collect(),
    }
}

/// Lower and upper curves of one class over a density grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundEnvelope {
    pub k: usize,
    pub class: usize,
    pub p_grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Active inequalities at the lower and upper optimum of each grid point.
    pub lower_binding: Vec<Vec<String>>,
    pub upper_binding: Vec<Vec<String>>,
}

/// Envelopes of every class over the given exact densities.
pub fn envelopes(k: usize, grid: &[BigRational], mode: SolveMode) -> Result<Vec<BoundEnvelope>> {
    let d = Catalog::shared(k)?.len();
    let per_point = grid
        .par_iter()
        .map(|p| solve_all_bounds(&assemble_constraints(k, p)?, mode))
        .collect::<Result<Vec<_>>>()?;
    let p_grid: Vec<f64> = grid.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
    Ok((0..d)
        .map(|c| BoundEnvelope {
            k,
            class: c,
            p_grid: p_grid.clone(),
            lower: per_point.iter().map(|b| b[c].lower).collect(),
            upper: per_point.iter().map(|b| b[c].upper).collect(),
            lower_binding: per_point.iter().map(|b| b[c].lower_active.clone()).collect(),
            upper_binding: per_point.iter().map(|b| b[c].upper_active.clone()).collect(),
        })
        .collect())
}

/// Envelope of `class`; grid values are read as the simplest rationals within `1e-12`.
pub fn bound_envelope(k: usize, class: usize, p_grid: &[f64]) -> Result<BoundEnvelope> {
    if let Some(p) = p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("grid value {p} is outside [0, 1]")));
    }
    let d = Catalog::shared(k)?.len();
    if class >= d {
        return Err(Error::InvalidInput(format!("class {class} out of range for {d} classes")));
    }
    let grid: Vec<BigRational> = p_grid.iter().map(|&p| simplest_rational(p, 1e-12)).collect();
    let per_point = grid
        .par_iter()
        .map(|p| solve_bounds(&assemble_constraints(k, p)?, class, SolveMode::Auto))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundEnvelope {
        k,
        class,
        p_grid: p_grid.to_vec(),
        lower: per_point.iter().map(|b| b.lower).collect(),
        upper: per_point.iter().map(|b| b.upper).collect(),
        lower_binding: per_point.iter().map(|b| b.lower_active.clone()).collect(),
        upper_binding: per_point.iter().map(|b| b.upper_active.clone()).collect(),
    })
}

/// Slack of one constraint at a point; negative means violated.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintCheck {
    pub tag: String,
    pub equality: bool,
    pub slack: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointReport {
    pub checks: Vec<ConstraintCheck>,
}

impl PointReport {
    pub fn violations(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| c.violated)
    }

    pub fn is_feasible(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// Default tolerance for checking points.
pub const CHECK_TOLERANCE: f64 = 1e-6;

/// Tolerance for the census of an `n`-node graph: `max(1e-6, 5 / n)`.
pub fn finite_size_tolerance(n: usize) -> f64 {
    CHECK_TOLERANCE.max(5.0 / n as f64)
}

/// Slack of every constraint at `(y, p)`; violations beyond `tolerance` are flagged.
pub fn check_point(y: &FrequencyVector, p: f64, tolerance: f64) -> Result<PointReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let system = assemble_constraints(y.k, &simplest_rational(p, 1e-15))?;
    if y.values.len() != system.equalities[0].coeffs.len() {
        return Err(Error::InvalidInput("frequency vector does not match the catalog".into()));
    }
    let x = &y.values;
    let mut checks: Vec<ConstraintCheck> = system
        .equalities
        .iter()
        .map(|c| {
            let slack = -(c.lhs(x) - c.rhs_value).abs();
            ConstraintCheck {
                tag: c.tag.clone(),
                equality: true,
                slack,
                violated: slack < -tolerance,
            }
        })
        .collect();
    checks.extend(system.inequalities.iter().map(|c| {
        let slack = c.rhs_value - c.lhs(x);
        ConstraintCheck {
            tag: c.tag.clone(),
            equality: false,
            slack,
            violated: slack < -tolerance,
        }
    }));
    checks.extend(x.iter().enumerate().map(|(i, &v)| ConstraintCheck {
        tag: format!("nonnegative x{i}"),
        equality: false,
        slack: v,
        violated: v < -tolerance,
    }));
    Ok(PointReport { checks })
}
