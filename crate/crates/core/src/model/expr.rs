use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Coefficients with magnitude below this are dropped by [`LinExpr::canonical`].
pub const ZERO_COEFF: f64 = 1e-12;

/// Handle to a column of a [`Model`](super::Model).
///
/// The handle remembers which model issued it so that mixing handles across
/// models is caught at constraint-registration time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarRef {
    pub(crate) model: u64,
    pub(crate) index: u32,
}

impl VarRef {
    pub fn index(self) -> usize {
        self.index as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const FREE: Bounds = Bounds {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const NONNEG: Bounds = Bounds {
        lo: 0.0,
        hi: f64::INFINITY,
    };
    pub const UNIT: Bounds = Bounds { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        Bounds { lo, hi }
    }

    pub fn fixed(v: f64) -> Self {
        Bounds { lo: v, hi: v }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Affine expression `Σ coef·var + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub(crate) terms: Vec<(VarRef, f64)>,
    pub(crate) constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(var: VarRef, coef: f64) -> Self {
        LinExpr {
            terms: vec![(var, coef)],
            constant: 0.0,
        }
    }

    pub fn terms(&self) -> &[(VarRef, f64)] {
        &self.terms
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.abs() < ZERO_COEFF)
    }

    pub fn add_term(&mut self, var: VarRef, coef: f64) -> &mut Self {
        self.terms.push((var, coef));
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    /// Adds `scale · other` in place.
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.terms
            .extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    /// Merges duplicate variables and drops near-zero coefficients.
    pub fn canonical(&self) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(VarRef, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| c.abs() >= ZERO_COEFF);
        LinExpr {
            terms: merged,
            constant: self.constant,
        }
    }

    /// Evaluates the expression at a primal point indexed by variable index.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(v, c)| c * values[v.index()])
                .sum::<f64>()
    }

    /// Sum of `|coef · value|` over the terms, a scale for relative residuals.
    pub fn magnitude(&self, values: &[f64]) -> f64 {
        self.constant.abs()
            + self
                .terms
                .iter()
                .map(|(v, c)| (c * values[v.index()]).abs())
                .sum::<f64>()
    }
}

impl From<VarRef> for LinExpr {
    fn from(v: VarRef) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.add_scaled(rhs, 1.0);
    }
}

impl SubAssign<&LinExpr> for LinExpr {
    fn sub_assign(&mut self, rhs: &LinExpr) {
        self.add_scaled(rhs, -1.0);
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        for (_, c) in &mut self.terms {
            *c *= k;
        }
        self.constant *= k;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Add<VarRef> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, v: VarRef) -> LinExpr {
        self.add_term(v, 1.0);
        self
    }
}

impl Sub<VarRef> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, v: VarRef) -> LinExpr {
        self.add_term(v, -1.0);
        self
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, c: f64) -> LinExpr {
        self.constant += c;
        self
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, c: f64) -> LinExpr {
        self.constant -= c;
        self
    }
}

impl Mul<f64> for VarRef {
    type Output = LinExpr;
    fn mul(self, k: f64) -> LinExpr {
        LinExpr::term(self, k)
    }
}

impl Sub for VarRef {
    type Output = LinExpr;
    fn sub(self, rhs: VarRef) -> LinExpr {
        LinExpr::from(self) - rhs
    }
}

impl Add for VarRef {
    type Output = LinExpr;
    fn add(self, rhs: VarRef) -> LinExpr {
        LinExpr::from(self) + rhs
    }
}
