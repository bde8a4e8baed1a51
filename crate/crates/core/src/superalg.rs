//! Pointwise graded algebra for `Ω^{(i,j)}(Λ^k V ⊗ Λ^l V*)` fibers.
//!
//! A basis element is `dw_I ∧ dw̄_J ⊗ e_K ⊗ e^L` with strictly increasing index
//! tuples, stored as four bitmasks. Products order the factors as holomorphic
//! forms, antiholomorphic forms, `V`, `V*`. Form generators anticommute with
//! each other, bundle generators anticommute with each other, and a form
//! generator commutes with a bundle generator.
//!
//! The pairing between `Λ^k V` and `Λ^k V*` is `(e_K, e^L) = δ_{K,L}` on
//! increasing tuples, and contraction is defined by the adjunction
//!
//! ```text
//! (u ⌟ θ, ν*) = (-1)^{(i+j)l + (p+q)♯u + l(l-1)/2} (u, θ ∧ ν*)
//! ```
//!
//! for `u ∈ Ω^{(i,j)}(Λ^k V)`, `θ ∈ Ω^{(p,q)}(Λ^l V*)` and `♯u = i + j + k`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::Zero;
use thiserror::Error;

/// Largest supported fiber dimension.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degree mismatch: V-degree {vec} against V*-degree {covec}")]
    DegreeMismatch { vec: usize, covec: usize },
    #[error("contraction needs k >= l, got k = {k}, l = {l}")]
    ContractionDegree { k: usize, l: usize },
    #[error("operand has the wrong shape: {0}")]
    WrongShape(&'static str),
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
}

/// One basis element `dw_I ∧ dw̄_J ⊗ e_K ⊗ e^L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BasisKey {
    pub hol: u16,
    pub anti: u16,
    pub vec: u16,
    pub covec: u16,
}

/// Bidegree and bundle degrees `(i, j, k, l)`.
pub type Block = (usize, usize, usize, usize);

impl BasisKey {
    pub fn block(&self) -> Block {
        (
            self.hol.count_ones() as usize,
            self.anti.count_ones() as usize,
            self.vec.count_ones() as usize,
            self.covec.count_ones() as usize,
        )
    }

    /// `♯ = i + j + k - l`.
    pub fn grading(&self) -> i32 {
        let (i, j, k, l) = self.block();
        (i + j + k) as i32 - l as i32
    }

    pub fn from_indices(hol: &[usize], anti: &[usize], vec: &[usize], covec: &[usize]) -> Self {
        Self {
            hol: mask(hol),
            anti: mask(anti),
            vec: mask(vec),
            covec: mask(covec),
        }
    }
}

fn mask(idx: &[usize]) -> u16 {
    idx.iter().fold(0u16, |m, &i| m | (1 << i))
}

/// Parity of the number of pairs `(x ∈ a, y ∈ b)` with `x > y`: the sign of
/// merging the increasing tuple `a` followed by `b` into increasing order.
fn merge_parity(a: u16, b: u16) -> u32 {
    let mut count = 0;
    let mut bb = b;
    while bb != 0 {
        let y = bb.trailing_zeros();
        bb &= bb - 1;
        let above = if y >= 15 {
            0
        } else {
            a & !((1u16 << (y + 1)) - 1)
        };
        count += above.count_ones();
    }
    count & 1
}

/// Sign and key of the product of two basis elements, or `None` when a
/// generator repeats.
pub fn basis_product(a: &BasisKey, b: &BasisKey) -> Option<(f64, BasisKey)> {
    if a.hol & b.hol != 0 || a.anti & b.anti != 0 || a.vec & b.vec != 0 || a.covec & b.covec != 0 {
        return None;
    }
    let mut parity = 0;
    // (hol_a anti_a)(hol_b anti_b) -> hol_b crosses anti_a
    parity += b.hol.count_ones() * a.anti.count_ones();
    // (vec_a covec_a)(vec_b covec_b) -> vec_b crosses covec_a
    parity += b.vec.count_ones() * a.covec.count_ones();
    parity += merge_parity(a.hol, b.hol);
    parity += merge_parity(a.anti, b.anti);
    parity += merge_parity(a.vec, b.vec);
    parity += merge_parity(a.covec, b.covec);
    let sign = if parity & 1 == 0 { 1.0 } else { -1.0 };
    Some((
        sign,
        BasisKey {
            hol: a.hol | b.hol,
            anti: a.anti | b.anti,
            vec: a.vec | b.vec,
            covec: a.covec | b.covec,
        },
    ))
}

/// Fiber element of `⊕ Ω^{(i,j)}(Λ^k V ⊗ Λ^l V*)` with `dim M = rank V = n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperTensor {
    n: usize,
    terms: BTreeMap<BasisKey, Complex64>,
}

impl SuperTensor {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_DIM, "dimension {n} exceeds {MAX_DIM}");
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(n: usize, c: Complex64) -> Self {
        Self::basis(n, BasisKey::default(), c)
    }

    pub fn basis(n: usize, key: BasisKey, c: Complex64) -> Self {
        let mut t = Self::zero(n);
        t.add_term(key, c);
        t
    }

    /// `c · dw_I ∧ dw̄_J ⊗ e_K ⊗ e^L`; index lists need not be sorted, the
    /// permutation sign is applied. Repeated indices give zero.
    pub fn element(
        n: usize,
        hol: &[usize],
        anti: &[usize],
        vec: &[usize],
        covec: &[usize],
        c: Complex64,
    ) -> Result<Self, AlgebraError> {
        let mut out = Self::scalar(n, c);
        let gens = hol
            .iter()
            .map(|&i| (0, i))
            .chain(anti.iter().map(|&i| (1, i)))
            .chain(vec.iter().map(|&i| (2, i)))
            .chain(covec.iter().map(|&i| (3, i)));
        for (family, i) in gens {
            if i >= n {
                return Err(AlgebraError::IndexOutOfRange { index: i, n });
            }
            let m = 1u16 << i;
            let key = match family {
                0 => BasisKey {
                    hol: m,
                    ..Default::default()
                },
                1 => BasisKey {
                    anti: m,
                    ..Default::default()
                },
                2 => BasisKey {
                    vec: m,
                    ..Default::default()
                },
                _ => BasisKey {
                    covec: m,
                    ..Default::default()
                },
            };
            out = out.wedge(&Self::basis(n, key, Complex64::new(1.0, 0.0)))?;
        }
        Ok(out)
    }

    pub fn dw(n: usize, a: usize) -> Self {
        Self::basis(
            n,
            BasisKey {
                hol: 1 << a,
                ..Default::default()
            },
            Complex64::new(1.0, 0.0),
        )
    }

    pub fn dw_bar(n: usize, a: usize) -> Self {
        Self::basis(
            n,
            BasisKey {
                anti: 1 << a,
                ..Default::default()
            },
            Complex64::new(1.0, 0.0),
        )
    }

    pub fn e(n: usize, i: usize) -> Self {
        Self::basis(
            n,
            BasisKey {
                vec: 1 << i,
                ..Default::default()
            },
            Complex64::new(1.0, 0.0),
        )
    }

    pub fn e_dual(n: usize, i: usize) -> Self {
        Self::basis(
            n,
            BasisKey {
                covec: 1 << i,
                ..Default::default()
            },
            Complex64::new(1.0, 0.0),
        )
    }

    fn add_term(&mut self, key: BasisKey, c: Complex64) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(Complex64::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &BasisKey) -> Complex64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Populated blocks `(i, j, k, l)`.
    pub fn blocks(&self) -> Vec<Block> {
        let mut b: Vec<Block> = self.terms.keys().map(|k| k.block()).collect();
        b.sort_unstable();
        b.dedup();
        b
    }

    /// The component in block `(i, j, k, l)`.
    pub fn block(&self, block: Block) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.block() == block)
                .map(|(k, c)| (*k, *c))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn check_dim(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.n != other.n {
            return Err(AlgebraError::DimensionMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, *c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            out.add_term(*k, c * s);
        }
        out
    }

    /// Graded product with Koszul signs.
    pub fn wedge(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.n);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                if let Some((sign, key)) = basis_product(ka, kb) {
                    out.add_term(key, ca * cb * sign);
                }
            }
        }
        Ok(out)
    }

    /// `self^{∧p}`.
    pub fn wedge_pow(&self, p: usize) -> Self {
        let mut acc = Self::scalar(self.n, Complex64::new(1.0, 0.0));
        for _ in 0..p {
            acc = acc.wedge(self).expect("same dimension");
        }
        acc
    }

    /// Dual pairing `(α ⊗ e_K, β ⊗ e^L) = δ_{K,L} α ∧ β`. `self` must carry no
    /// `V*` factors and `t` no `V` factors; every term of `self` must have the
    /// same `V`-degree as every term of `t`.
    pub fn dual_pair(&self, t: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(t)?;
        if self.terms.keys().any(|k| k.covec != 0) {
            return Err(AlgebraError::WrongShape(
                "left operand of dual_pair has V* factors",
            ));
        }
        if t.terms.keys().any(|k| k.vec != 0) {
            return Err(AlgebraError::WrongShape(
                "right operand of dual_pair has V factors",
            ));
        }
        let mut out = Self::zero(self.n);
        for (ku, cu) in &self.terms {
            for (kt, ct) in &t.terms {
                let (k, l) = (ku.vec.count_ones() as usize, kt.covec.count_ones() as usize);
                if k != l {
                    return Err(AlgebraError::DegreeMismatch { vec: k, covec: l });
                }
                if ku.vec != kt.covec {
                    continue;
                }
                let a = BasisKey {
                    hol: ku.hol,
                    anti: ku.anti,
                    ..Default::default()
                };
                let b = BasisKey {
                    hol: kt.hol,
                    anti: kt.anti,
                    ..Default::default()
                };
                if let Some((sign, key)) = basis_product(&a, &b) {
                    out.add_term(key, cu * ct * sign);
                }
            }
        }
        Ok(out)
    }

    /// Contraction `u ⌟ θ` (see the module docs for the sign).
    pub fn contract(&self, theta: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(theta)?;
        if self.terms.keys().any(|k| k.covec != 0) {
            return Err(AlgebraError::WrongShape(
                "contracted element has V* factors",
            ));
        }
        if theta.terms.keys().any(|k| k.vec != 0) {
            return Err(AlgebraError::WrongShape(
                "contracting element has V factors",
            ));
        }
        let mut out = Self::zero(self.n);
        for (ku, cu) in &self.terms {
            let (i, j, k, _) = ku.block();
            let sharp_u = i + j + k;
            for (kt, ct) in &theta.terms {
                let (p, q, _, l) = kt.block();
                if k < l {
                    return Err(AlgebraError::ContractionDegree { k, l });
                }
                if kt.covec & !ku.vec != 0 {
                    continue;
                }
                let rest = ku.vec & !kt.covec;
                let exponent = (i + j) * l + (p + q) * sharp_u + l * (l.saturating_sub(1)) / 2;
                // e^L ∧ e^M = (-1)^{merge(L, M)} e^K
                let exponent = exponent + merge_parity(kt.covec, rest) as usize;
                let a = BasisKey {
                    hol: ku.hol,
                    anti: ku.anti,
                    ..Default::default()
                };
                let b = BasisKey {
                    hol: kt.hol,
                    anti: kt.anti,
                    ..Default::default()
                };
                if let Some((sign, form)) = basis_product(&a, &b) {
                    let s = if exponent.is_multiple_of(2) { sign } else { -sign };
                    out.add_term(BasisKey { vec: rest, ..form }, cu * ct * s);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for SuperTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let idx = |m: u16| -> Vec<usize> { (0..16).filter(|i| m & (1 << i) != 0).collect() };
        for (n, (k, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for a in idx(k.hol) {
                write!(f, " dw{}", a + 1)?;
            }
            for a in idx(k.anti) {
                write!(f, " dw̄{}", a + 1)?;
            }
            for a in idx(k.vec) {
                write!(f, " e{}", a + 1)?;
            }
            for a in idx(k.covec) {
                write!(f, " e^{}", a + 1)?;
            }
        }
        Ok(())
    }
}

/// `S = scalar_part + one_form_part` with the one-form part in block
/// `(0, 1, 0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SForm {
    pub scalar_part: Complex64,
    one_form_part: SuperTensor,
}

impl SForm {
    pub fn new(scalar_part: Complex64, one_form_part: SuperTensor) -> Result<Self, AlgebraError> {
        if one_form_part
            .terms
            .keys()
            .any(|k| k.block() != (0, 1, 0, 1))
        {
            return Err(AlgebraError::WrongShape(
                "S one-form part must lie in block (0,1,0,1)",
            ));
        }
        Ok(Self {
            scalar_part,
            one_form_part,
        })
    }

    /// Builds the one-form part `Σ_{b,i} coeffs[b][i] dw̄_b ⊗ e^i`.
    pub fn from_matrix(scalar_part: Complex64, coeffs: &[Vec<Complex64>]) -> Self {
        let n = coeffs.len();
        let mut one = SuperTensor::zero(n);
        for (b, row) in coeffs.iter().enumerate() {
            for (i, c) in row.iter().enumerate() {
                one.add_term(
                    BasisKey {
                        anti: 1 << b,
                        covec: 1 << i,
                        ..Default::default()
                    },
                    *c,
                );
            }
        }
        Self {
            scalar_part,
            one_form_part: one,
        }
    }

    pub fn one_form_part(&self) -> &SuperTensor {
        &self.one_form_part
    }

    pub fn n(&self) -> usize {
        self.one_form_part.n
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            scalar_part: self.scalar_part * s,
            one_form_part: self.one_form_part.scale(Complex64::new(s, 0.0)),
        }
    }
}

/// `e^S = e^{S0} Σ_{p ≤ n} S1^{∧p} / p!`; higher powers vanish.
pub fn exp_s(s: &SForm) -> SuperTensor {
    let n = s.n();
    let mut out = SuperTensor::zero(n);
    let mut power = SuperTensor::scalar(n, Complex64::new(1.0, 0.0));
    let mut factorial = 1.0;
    for p in 0..=n {
        if p > 0 {
            power = power.wedge(&s.one_form_part).expect("same dimension");
            factorial *= p as f64;
        }
        out = out
            .add(&power.scale(Complex64::new(1.0 / factorial, 0.0)))
            .expect("same dimension");
    }
    out.scale(s.scalar_part.exp())
}

fn top_key(n: usize) -> BasisKey {
    let full = if n == 16 { u16::MAX } else { (1u16 << n) - 1 };
    BasisKey {
        hol: full,
        anti: full,
        vec: 0,
        covec: 0,
    }
}

fn check_psi(psi: &SuperTensor) -> Result<(), AlgebraError> {
    let n = psi.n;
    if psi.terms.keys().any(|k| k.block() != (n, 0, n, 0)) {
        return Err(AlgebraError::WrongShape("psi must lie in block (n,0,n,0)"));
    }
    Ok(())
}

/// The `(n, n)` scalar component of `ψ ⌟ E`, as a tensor in block `(n,n,0,0)`.
pub fn top_pairing(psi: &SuperTensor, e: &SuperTensor) -> Result<SuperTensor, AlgebraError> {
    check_psi(psi)?;
    let n = psi.n;
    Ok(psi.contract(e)?.block((n, n, 0, 0)))
}

/// Coefficient of `dw_1 ∧ … ∧ dw_n ∧ dw̄_1 ∧ … ∧ dw̄_n` in `top_pairing`.
pub fn top_coefficient(pairing: &SuperTensor) -> Complex64 {
    pairing.coeff(&top_key(pairing.n))
}

/// `e^{S0} ψ ⌟ (S1^{∧n} / n!)`, the only part of `ψ ⌟ e^S` of bidegree `(n, n)`.
pub fn top_pairing_shortcut(psi: &SuperTensor, s: &SForm) -> Result<SuperTensor, AlgebraError> {
    check_psi(psi)?;
    let n = psi.n;
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let top = s
        .one_form_part
        .wedge_pow(n)
        .scale(Complex64::new(1.0 / fact, 0.0));
    Ok(psi
        .contract(&top)?
        .block((n, n, 0, 0))
        .scale(s.scalar_part.exp()))
}
