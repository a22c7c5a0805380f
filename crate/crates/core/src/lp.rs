//! Dense two-phase tableau simplex with Bland's rule, generic over the scalar
//! field so the same code runs in `f64` and in exact rationals.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Ordered field the simplex runs over.
pub trait Scalar: Clone + Debug + PartialOrd + Signed + Send + Sync {
    /// Values within this distance of zero are treated as zero.
    fn tolerance() -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn as_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-11
    }

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational value of a finite float.
pub fn exact_rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

fn positive<T: Scalar>(x: &T) -> bool {
    *x > T::tolerance()
}

fn negative<T: Scalar>(x: &T) -> bool {
    *x < -T::tolerance()
}

/// `A_eq x = b_eq`, `A_le x <= b_le`, `x >= 0`.
#[derive(Clone, Debug, Default)]
pub struct Problem<T> {
    pub vars: usize,
    pub eq: Vec<(Vec<T>, T)>,
    pub le: Vec<(Vec<T>, T)>,
}

/// Which rows keep an artificial variable positive when no feasible point exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Infeasible {
    pub eq_rows: Vec<usize>,
    pub le_rows: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RowKind {
    Eq(usize),
    Le(usize),
}

/// A basic feasible tableau, ready for any objective.
#[derive(Clone, Debug)]
pub struct Feasible<T> {
    vars: usize,
    /// Columns: structural, then one slack per `le` row.
    columns: usize,
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    le_count: usize,
}

/// Optimum of one objective.
#[derive(Clone, Debug)]
pub struct Optimum<T> {
    pub value: T,
    pub x: Vec<T>,
    /// Slack of every `le` row at the optimum.
    pub slacks: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpError {
    Unbounded,
    IterationLimit,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// Reduced costs for maximization; optimal when none is negative.
    cost: Vec<T>,
    value: T,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / p.clone();
            }
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            self.rhs[i] = self.rhs[i].clone() - f * pivot_rhs.clone();
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            self.value = self.value.clone() - f * pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Bland's rule iterations over the first `usable` columns.
    fn optimize(&mut self, usable: usize) -> Result<(), LpError> {
        let limit = 50_000;
        for _ in 0..limit {
            let Some(c) = (0..usable).find(|&j| negative(&self.cost[j])) else {
                return Ok(());
            };
            let mut best: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !positive(a) {
                    continue;
                }
                let ratio = self.rhs[r].clone() / a.clone();
                let better = match &best {
                    None => true,
                    Some((br, bv)) => {
                        ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(LpError::Unbounded),
            }
        }
        Err(LpError::IterationLimit)
    }
}

impl<T: Scalar> Problem<T> {
    /// Phase one: find a basic feasible point or the rows that block one.
    pub fn feasible(&self) -> Result<std::result::Result<Feasible<T>, Infeasible>, LpError> {
        let n = self.vars;
        let le_count = self.le.len();
        let columns = n + le_count;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut kinds = Vec::new();
        let mut basis = Vec::new();
        let mut needs_artificial = Vec::new();
        for (i, (a, b)) in self.le.iter().enumerate() {
            let mut row: Vec<T> = a.clone();
            row.resize(columns, T::zero());
            row[n + i] = T::one();
            let flip = negative(b);
            if flip {
                row.iter_mut().for_each(|v| *v = -v.clone());
            }
            rows.push(row);
            rhs.push(if flip { -b.clone() } else { b.clone() });
            kinds.push(RowKind::Le(i));
            needs_artificial.push(flip);
            basis.push(n + i);
        }
        for (i, (a, b)) in self.eq.iter().enumerate() {
            let mut row: Vec<T> = a.clone();
            row.resize(columns, T::zero());
            let flip = negative(b);
            if flip {
                row.iter_mut().for_each(|v| *v = -v.clone());
            }
            rows.push(row);
            rhs.push(if flip { -b.clone() } else { b.clone() });
            kinds.push(RowKind::Eq(i));
            needs_artificial.push(true);
            basis.push(usize::MAX);
        }
        let artificial_rows: Vec<usize> = (0..rows.len()).filter(|&r| needs_artificial[r]).collect();
        let total = columns + artificial_rows.len();
        for row in rows.iter_mut() {
            row.resize(total, T::zero());
        }
        for (a, &r) in artificial_rows.iter().enumerate() {
            rows[r][columns + a] = T::one();
            basis[r] = columns + a;
        }
        // Maximize minus the sum of artificials.
        let mut cost = vec![T::zero(); total];
        let mut value = T::zero();
        for &r in &artificial_rows {
            for (cj, v) in cost.iter_mut().zip(&rows[r]) {
                *cj = cj.clone() - v.clone();
            }
            value = value - rhs[r].clone();
        }
        for a in 0..artificial_rows.len() {
            cost[columns + a] = T::zero();
        }
        let mut t = Tableau {
            rows,
            rhs,
            basis,
            cost,
            value,
        };
        t.optimize(total)?;
        if negative(&t.value) {
            let mut report = Infeasible {
                eq_rows: Vec::new(),
                le_rows: Vec::new(),
            };
            for (r, &b) in t.basis.iter().enumerate() {
                if b >= columns && positive(&t.rhs[r]) {
                    match kinds[artificial_rows[b - columns]] {
                        RowKind::Eq(i) => report.eq_rows.push(i),
                        RowKind::Le(i) => report.le_rows.push(i),
                    }
                }
            }
            report.eq_rows.sort_unstable();
            report.le_rows.sort_unstable();
            return Ok(Err(report));
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= columns {
                match (0..columns).find(|&j| !t.rows[r][j].is_zero() && !(t.rows[r][j].abs() <= T::tolerance())) {
                    Some(j) => t.pivot(r, j),
                    None => {
                        t.rows.remove(r);
                        t.rhs.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for row in t.rows.iter_mut() {
            row.truncate(columns);
        }
        Ok(Ok(Feasible {
            vars: n,
            columns,
            rows: t.rows,
            rhs: t.rhs,
            basis: t.basis,
            le_count,
        }))
    }
}

impl<T: Scalar> Feasible<T> {
    /// Maximizes `c . x` starting from this basis.
    pub fn maximize(&self, c: &[T]) -> Result<Optimum<T>, LpError> {
        let mut cost: Vec<T> = (0..self.columns)
            .map(|j| if j < self.vars { -c[j].clone() } else { T::zero() })
            .collect();
        let mut value = T::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.vars && !c[b].is_zero() {
                let cb = c[b].clone();
                for (cj, v) in cost.iter_mut().zip(&self.rows[r]) {
                    if !v.is_zero() {
                        *cj = cj.clone() + cb.clone() * v.clone();
                    }
                }
                value = value + cb.clone() * self.rhs[r].clone();
            }
        }
        let mut t = Tableau {
            rows: self.rows.clone(),
            rhs: self.rhs.clone(),
            basis: self.basis.clone(),
            cost,
            value,
        };
        t.optimize(self.columns)?;
        let mut full = vec![T::zero(); self.columns];
        for (r, &b) in t.basis.iter().enumerate() {
            full[b] = t.rhs[r].clone();
        }
        Ok(Optimum {
            value: t.value,
            x: full[..self.vars].to_vec(),
            slacks: full[self.vars..self.vars + self.le_count].to_vec(),
        })
    }

    pub fn minimize(&self, c: &[T]) -> Result<Optimum<T>, LpError> {
        let neg: Vec<T> = c.iter().map(|v| -v.clone()).collect();
        let mut opt = self.maximize(&neg)?;
        opt.value = -opt.value;
        Ok(opt)
    }
}
