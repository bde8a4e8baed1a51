use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use super::coeff::{Coeff, GaussianRational};
use super::PolyError;

/// Exponent multi-index, one entry per variable.
pub type Exponent = Vec<u32>;

/// Multivariate polynomial in canonical form: a sorted map from exponent to a
/// nonzero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C = Complex64> {
    num_vars: usize,
    terms: BTreeMap<Exponent, C>,
}

/// Polynomial in the affine coordinates of a chart.
pub type AffinePoly<C = Complex64> = Polynomial<C>;

impl<C: Coeff> Polynomial<C> {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: C) -> Self {
        Self::monomial(vec![0; num_vars], c)
    }

    pub fn var(num_vars: usize, k: usize) -> Result<Self, PolyError> {
        if k >= num_vars {
            return Err(PolyError::VariableOutOfRange { index: k, num_vars });
        }
        let mut e = vec![0; num_vars];
        e[k] = 1;
        Ok(Self::monomial(e, C::one()))
    }

    pub fn monomial(exponent: Exponent, c: C) -> Self {
        let mut p = Self::zero(exponent.len());
        if !c.is_zero() {
            p.terms.insert(exponent, c);
        }
        p
    }

    /// Sums duplicate exponents and drops zeros.
    pub fn from_terms(num_vars: usize, terms: impl IntoIterator<Item = (Exponent, C)>) -> Self {
        let mut p = Self::zero(num_vars);
        for (e, c) in terms {
            assert_eq!(e.len(), num_vars, "exponent length must equal num_vars");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Exponent, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&e) {
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(e, sum);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &[u32]) -> C {
        self.terms.get(e).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest total degree of a stored term; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// `Some(d)` when every term has total degree `d`.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(|e| e.iter().sum::<u32>());
        let d = degs.next()?;
        degs.all(|x| x == d).then_some(d)
    }

    /// Largest exponent of `k` appearing in any term.
    pub fn degree_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|e| e[k]).max().unwrap_or(0)
    }

    fn check_same_vars(&self, other: &Self) -> Result<(), PolyError> {
        if self.num_vars != other.num_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars,
                got: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_vars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-C::one())
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.num_vars);
        }
        Self::from_terms(
            self.num_vars,
            self.terms
                .iter()
                .map(|(e, a)| (e.clone(), a.clone() * c.clone())),
        )
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_vars(other)?;
        let mut out = Self::zero(self.num_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.num_vars, C::one());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base).expect("same vars");
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).expect("same vars");
            }
        }
        acc
    }

    pub fn eval(&self, z: &[C]) -> Result<C, PolyError> {
        if z.len() != self.num_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars,
                got: z.len(),
            });
        }
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (zi, &k) in z.iter().zip(e) {
                for _ in 0..k {
                    m = m * zi.clone();
                }
            }
            acc = acc + m;
        }
        Ok(acc)
    }

    pub fn partial(&self, k: usize) -> Result<Self, PolyError> {
        if k >= self.num_vars {
            return Err(PolyError::VariableOutOfRange {
                index: k,
                num_vars: self.num_vars,
            });
        }
        Ok(Self::from_terms(
            self.num_vars,
            self.terms.iter().filter(|(e, _)| e[k] > 0).map(|(e, c)| {
                let mut e2 = e.clone();
                e2[k] -= 1;
                (e2, c.clone() * C::from_i64(e[k] as i64))
            }),
        ))
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_terms(
            self.num_vars,
            self.terms.iter().map(|(e, c)| (e.clone(), f(c))),
        )
    }

    pub fn to_c64(&self) -> Polynomial<Complex64> {
        self.map_coeffs(|c| c.to_c64())
    }

    /// Drops variable `k`, keeping only the terms where it does not occur.
    pub fn restrict_to_zero(&self, k: usize) -> Self {
        Self::from_terms(
            self.num_vars - 1,
            self.terms.iter().filter(|(e, _)| e[k] == 0).map(|(e, c)| {
                let mut e2 = e.clone();
                e2.remove(k);
                (e2, c.clone())
            }),
        )
    }

    /// Exact division; `Err(NotDivisible)` when a nonzero remainder appears.
    ///
    /// Uses lexicographic leading terms, which decides divisibility for a
    /// single divisor.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self, PolyError> {
        self.check_same_vars(divisor)?;
        let (lead_e, lead_c) = divisor
            .terms
            .iter()
            .next_back()
            .map(|(e, c)| (e.clone(), c.clone()))
            .ok_or(PolyError::NotDivisible)?;
        let mut rem = self.clone();
        let mut quot = Self::zero(self.num_vars);
        while let Some((e, c)) = rem
            .terms
            .iter()
            .next_back()
            .map(|(e, c)| (e.clone(), c.clone()))
        {
            if e.iter().zip(&lead_e).any(|(a, b)| a < b) {
                return Err(PolyError::NotDivisible);
            }
            let qe: Exponent = e.iter().zip(&lead_e).map(|(a, b)| a - b).collect();
            let q = Self::monomial(qe, c / lead_c.clone());
            rem = rem.sub(&q.mul(divisor)?)?;
            quot = quot.add(&q)?;
        }
        Ok(quot)
    }
}

impl<C: Coeff> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().rev().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", c.literal())?;
            for (k, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*z{k}")?,
                    _ => write!(f, "*z{k}^{p}")?,
                }
            }
        }
        Ok(())
    }
}

/// Homogeneous polynomial in `n + 1` variables `z0..zn`; a section of `O(degree)`
/// over `P^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPoly<C = Complex64> {
    degree: u32,
    poly: Polynomial<C>,
}

impl<C: Coeff> HomogeneousPoly<C> {
    /// Wraps `poly`, which must be homogeneous of `degree` (the zero
    /// polynomial is accepted for any degree).
    pub fn new(poly: Polynomial<C>, degree: u32) -> Result<Self, PolyError> {
        for e in poly.terms.keys() {
            let d: u32 = e.iter().sum();
            if d != degree {
                return Err(PolyError::Inhomogeneous {
                    expected: degree,
                    found: d,
                });
            }
        }
        Ok(Self { degree, poly })
    }

    /// Infers the degree; the zero polynomial gets degree 0.
    pub fn from_poly(poly: Polynomial<C>) -> Result<Self, PolyError> {
        let degree = poly
            .terms
            .keys()
            .next()
            .map(|e| e.iter().sum())
            .unwrap_or(0);
        Self::new(poly, degree)
    }

    pub fn zero(num_vars: usize, degree: u32) -> Self {
        Self {
            degree,
            poly: Polynomial::zero(num_vars),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn num_vars(&self) -> usize {
        self.poly.num_vars
    }

    pub fn poly(&self) -> &Polynomial<C> {
        &self.poly
    }

    pub fn into_poly(self) -> Polynomial<C> {
        self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C)> {
        self.poly.terms()
    }

    pub fn eval(&self, z: &[C]) -> Result<C, PolyError> {
        self.poly.eval(z)
    }

    pub fn partial(&self, k: usize) -> Result<Self, PolyError> {
        let p = self.poly.partial(k)?;
        Ok(Self {
            degree: self.degree.saturating_sub(1),
            poly: p,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        if self.degree != other.degree {
            return Err(PolyError::DegreeMismatch {
                expected: self.degree,
                got: other.degree,
            });
        }
        Ok(Self {
            degree: self.degree,
            poly: self.poly.add(&other.poly)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.scale(&-C::one()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        Ok(Self {
            degree: self.degree + other.degree,
            poly: self.poly.mul(&other.poly)?,
        })
    }

    pub fn scale(&self, c: &C) -> Self {
        Self {
            degree: self.degree,
            poly: self.poly.scale(c),
        }
    }

    pub fn div_exact(&self, divisor: &Self) -> Result<Self, PolyError> {
        if divisor.degree > self.degree {
            return Err(PolyError::NotDivisible);
        }
        Ok(Self {
            degree: self.degree - divisor.degree,
            poly: self.poly.div_exact(&divisor.poly)?,
        })
    }

    /// Chart trivialization: `Q(w) = P(z) / z_chart^deg` with `w` the remaining
    /// coordinates divided by `z_chart`, in increasing index order.
    pub fn dehomogenize(&self, chart: usize) -> Result<AffinePoly<C>, PolyError> {
        if chart >= self.num_vars() {
            return Err(PolyError::VariableOutOfRange {
                index: chart,
                num_vars: self.num_vars(),
            });
        }
        Ok(Polynomial::from_terms(
            self.num_vars() - 1,
            self.poly.terms.iter().map(|(e, c)| {
                let mut e2 = e.clone();
                e2.remove(chart);
                (e2, c.clone())
            }),
        ))
    }

    /// Restriction to the hyperplane `z0 = 0`, as a form in `z1..zn`.
    pub fn leading_form(&self) -> Self {
        Self {
            degree: self.degree,
            poly: self.poly.restrict_to_zero(0),
        }
    }

    /// `P(A y)` for a square matrix `A` given row-major (`z_i = Σ_j A[i][j] y_j`).
    pub fn substitute_linear(&self, a: &[Vec<C>]) -> Result<Self, PolyError> {
        let nv = self.num_vars();
        if a.len() != nv || a.iter().any(|r| r.len() != nv) {
            return Err(PolyError::DimensionMismatch {
                expected: nv,
                got: a.len(),
            });
        }
        let linear: Vec<Polynomial<C>> = a
            .iter()
            .map(|row| {
                Polynomial::from_terms(
                    nv,
                    row.iter().enumerate().map(|(j, c)| {
                        let mut e = vec![0; nv];
                        e[j] = 1;
                        (e, c.clone())
                    }),
                )
            })
            .collect();
        let mut out = Polynomial::zero(nv);
        for (e, c) in self.poly.terms() {
            let mut m = Polynomial::constant(nv, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    m = m.mul(&linear[i].pow(k))?;
                }
            }
            out = out.add(&m)?;
        }
        Self::new(out, self.degree)
    }

    pub fn to_c64(&self) -> HomogeneousPoly<Complex64> {
        HomogeneousPoly {
            degree: self.degree,
            poly: self.poly.to_c64(),
        }
    }
}

impl HomogeneousPoly<GaussianRational> {
    pub fn to_float(&self) -> HomogeneousPoly<Complex64> {
        self.to_c64()
    }
}

impl<C: Coeff> fmt::Display for HomogeneousPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.poly.fmt(f)
    }
}

/// All exponent vectors of total degree `degree` in `num_vars` variables, in
/// descending lexicographic order.
pub fn monomials(num_vars: usize, degree: u32) -> Vec<Exponent> {
    fn rec(prefix: &mut Exponent, left: usize, remaining: u32, out: &mut Vec<Exponent>) {
        if left == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            rec(prefix, left - 1, remaining - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if num_vars == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(
        &mut Vec::with_capacity(num_vars),
        num_vars,
        degree,
        &mut out,
    );
    out
}

/// Dense homogeneous polynomial with independent standard complex Gaussian
/// coefficients.
pub fn random_homogeneous<R: Rng + ?Sized>(
    num_vars: usize,
    degree: u32,
    rng: &mut R,
) -> HomogeneousPoly<Complex64> {
    let terms = monomials(num_vars, degree)
        .into_iter()
        .map(|e| (e, random_c64(rng)))
        .collect::<Vec<_>>();
    HomogeneousPoly::new(Polynomial::from_terms(num_vars, terms), degree).expect("homogeneous")
}

/// Dense homogeneous polynomial with small random Gaussian-integer coefficients.
pub fn random_homogeneous_integer<R: Rng + ?Sized>(
    num_vars: usize,
    degree: u32,
    bound: i64,
    rng: &mut R,
) -> HomogeneousPoly<GaussianRational> {
    let terms = monomials(num_vars, degree)
        .into_iter()
        .map(|e| {
            let re = rng.random_range(-bound..=bound);
            let im = rng.random_range(-bound..=bound);
            (
                e,
                GaussianRational::new(
                    num_rational::BigRational::from_integer(re.into()),
                    num_rational::BigRational::from_integer(im.into()),
                ),
            )
        })
        .collect::<Vec<_>>();
    HomogeneousPoly::new(Polynomial::from_terms(num_vars, terms), degree).expect("homogeneous")
}

/// Standard complex Gaussian (`E|z|² = 1`).
pub fn random_c64<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Flattened polynomial for repeated floating evaluation with gradients.
#[derive(Clone, Debug)]
pub struct FastPoly {
    num_vars: usize,
    max_exp: usize,
    terms: Vec<(Vec<u32>, Complex64)>,
}

impl FastPoly {
    pub fn new(p: &Polynomial<Complex64>) -> Self {
        let max_exp = p
            .terms()
            .flat_map(|(e, _)| e.iter().copied())
            .max()
            .unwrap_or(0) as usize;
        Self {
            num_vars: p.num_vars(),
            max_exp,
            terms: p.terms().map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn powers(&self, w: &[Complex64]) -> Vec<Vec<Complex64>> {
        w.iter()
            .map(|&x| {
                let mut v = Vec::with_capacity(self.max_exp + 1);
                let mut acc = Complex64::new(1.0, 0.0);
                for _ in 0..=self.max_exp {
                    v.push(acc);
                    acc *= x;
                }
                v
            })
            .collect()
    }

    pub fn value(&self, w: &[Complex64]) -> Complex64 {
        debug_assert_eq!(w.len(), self.num_vars);
        let pw = self.powers(w);
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .enumerate()
                    .fold(*c, |acc, (k, &p)| acc * pw[k][p as usize])
            })
            .sum()
    }

    /// Value and holomorphic gradient `∂/∂w_k`.
    pub fn value_grad(&self, w: &[Complex64], grad: &mut [Complex64]) -> Complex64 {
        debug_assert_eq!(w.len(), self.num_vars);
        let pw = self.powers(w);
        grad.iter_mut().for_each(|g| *g = Complex64::zero());
        let mut val = Complex64::zero();
        for (e, c) in &self.terms {
            let mut m = *c;
            for (k, &p) in e.iter().enumerate() {
                m *= pw[k][p as usize];
            }
            val += m;
            for (k, g) in grad.iter_mut().enumerate() {
                let p = e[k] as usize;
                if p == 0 {
                    continue;
                }
                let mut d = *c * p as f64;
                for (j, &q) in e.iter().enumerate() {
                    let q = q as usize;
                    d *= if j == k { pw[j][q - 1] } else { pw[j][q] };
                }
                *g += d;
            }
        }
        val
    }

    /// Sum of coefficient magnitudes, used to scale residual tolerances.
    pub fn coeff_l1(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }
}
