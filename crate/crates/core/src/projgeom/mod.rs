//! The data `(M, V, h, s, ψ)` on `M = P^n` with `V = O(d_1) ⊕ … ⊕ O(d_n)`.
//!
//! Chart `α` is `{z_α ≠ 0}` with affine coordinates `w_j = z_j / z_α` for
//! `j ≠ α` in increasing order. The local frame `e^{(α)}_i` of `O(d_i)`
//! corresponds to the monomial `z_α^{d_i}`, so a section `s_i` has chart value
//! `s_i(z) / z_α^{d_i}`, and `ψ ∈ Γ(K ⊗ det V) ≅ Γ(O(D))`, `D = Σ d_i − n − 1`,
//! is `(−1)^α H(z) / z_α^D · dw ⊗ e_1 ∧ … ∧ e_n` on chart `α`.

mod curve;
mod metric;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::polycore::{random_c64, FastPoly, HomogeneousPoly, PolyError};
use crate::superalg::{self, SForm, SuperTensor};

pub use curve::{CurveLocus, CurvePoint, RViS};
pub use metric::{CurvatureValue, MetricJet};

use metric::MetricTerm;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("invalid section: {0}")]
    InvalidSection(String),
    #[error("invalid psi: {0}")]
    InvalidPsi(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<Complex64>),
    #[error("t must be positive, got {0}")]
    NonPositiveT(f64),
    #[error("chart {chart} out of range for P^{n}")]
    BadChart { chart: usize, n: usize },
    #[error("point has wrong dimension: expected {expected}, got {got}")]
    BadPoint { expected: usize, got: usize },
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("non-transversal point: normal derivative {0:e}")]
    NonTransversal(f64),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `V = ⊕ O(d_i)` of rank `n` over `P^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleSpec {
    pub n: usize,
    pub degrees: Vec<u32>,
}

impl BundleSpec {
    pub fn new(n: usize, degrees: Vec<u32>) -> Result<Self, GeomError> {
        if n == 0 || n > superalg::MAX_DIM {
            return Err(GeomError::InvalidBundle(format!("n = {n} out of range")));
        }
        if degrees.len() != n {
            return Err(GeomError::InvalidBundle(format!(
                "{} degrees given for rank {n}",
                degrees.len()
            )));
        }
        if degrees.contains(&0) {
            return Err(GeomError::InvalidBundle("degrees must be >= 1".into()));
        }
        Ok(Self { n, degrees })
    }

    /// `D = Σ d_i − n − 1`, the degree of `ψ`.
    pub fn psi_degree(&self) -> i64 {
        self.degrees.iter().map(|&d| d as i64).sum::<i64>() - self.n as i64 - 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionSpec {
    pub components: Vec<HomogeneousPoly>,
}

impl SectionSpec {
    pub fn new(bundle: &BundleSpec, components: Vec<HomogeneousPoly>) -> Result<Self, GeomError> {
        if components.len() != bundle.n {
            return Err(GeomError::InvalidSection(format!(
                "{} components for rank {}",
                components.len(),
                bundle.n
            )));
        }
        for (i, (c, &d)) in components.iter().zip(&bundle.degrees).enumerate() {
            if c.num_vars() != bundle.n + 1 {
                return Err(GeomError::InvalidSection(format!(
                    "component {i} has {} variables, expected {}",
                    c.num_vars(),
                    bundle.n + 1
                )));
            }
            if !c.is_zero() && c.degree() != d {
                return Err(GeomError::InvalidSection(format!(
                    "component {i} has degree {}, expected {d}",
                    c.degree()
                )));
            }
        }
        if components.iter().all(|c| c.is_zero()) {
            return Err(GeomError::InvalidSection(
                "section is identically zero".into(),
            ));
        }
        Ok(Self { components })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsiSpec {
    pub h: HomogeneousPoly,
}

impl PsiSpec {
    pub fn new(bundle: &BundleSpec, h: HomogeneousPoly) -> Result<Self, GeomError> {
        let d = bundle.psi_degree();
        if d < 0 {
            return Err(GeomError::InvalidPsi(format!(
                "deg psi = sum(d_i) - n - 1 = {d} < 0: the space of sections is empty"
            )));
        }
        if h.num_vars() != bundle.n + 1 {
            return Err(GeomError::InvalidPsi(format!(
                "psi has {} variables, expected {}",
                h.num_vars(),
                bundle.n + 1
            )));
        }
        if !h.is_zero() && h.degree() as i64 != d {
            return Err(GeomError::InvalidPsi(format!(
                "deg psi must equal sum(d_i) - n - 1 = {d}, got {}",
                h.degree()
            )));
        }
        Ok(Self { h })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetricSpec {
    FubiniStudy,
    /// Fubini–Study plus `H_ab = ε·conj(f)·q·ρ^{−(d_a+d_b)}` in every chart,
    /// where `f = s_{f_index}`; vanishes on `{f = 0}`.
    Perturbed {
        epsilon: f64,
        pair: (usize, usize),
        q: HomogeneousPoly,
        f_index: usize,
    },
}

/// A point of `P^n` with its preferred chart (largest `|z_α|`).
#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint {
    z: Vec<Complex64>,
    chart: usize,
}

impl ProjPoint {
    pub fn new(z: Vec<Complex64>) -> Option<Self> {
        let (chart, max) = z
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(max > 0.0 && max.is_finite()) {
            return None;
        }
        Some(Self { z, chart })
    }

    pub fn from_affine(chart: usize, w: &[Complex64]) -> Self {
        let mut z = w.to_vec();
        z.insert(chart, Complex64::new(1.0, 0.0));
        Self::new(z).expect("finite affine point")
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn chart(&self) -> usize {
        self.chart
    }

    /// Affine coordinates in chart `alpha`, or `None` if `z_alpha = 0`.
    pub fn affine(&self, alpha: usize) -> Option<Vec<Complex64>> {
        let za = *self.z.get(alpha)?;
        if za.norm() == 0.0 {
            return None;
        }
        Some(
            self.z
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != alpha)
                .map(|(_, &c)| c / za)
                .collect(),
        )
    }

    /// Affine coordinates in the preferred chart.
    pub fn preferred_affine(&self) -> Vec<Complex64> {
        self.affine(self.chart).expect("preferred chart is nonzero")
    }
}

/// A Fubini–Study-uniform point of `P^n` (projected complex Gaussian).
pub fn sample_fs_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ProjPoint {
    loop {
        let z: Vec<Complex64> = (0..=n).map(|_| random_c64(rng)).collect();
        if let Some(p) = ProjPoint::new(z) {
            return p;
        }
    }
}

/// `n!/π^n · ρ^{−(n+1)}`: Fubini–Study probability density against Lebesgue
/// measure `Π dx_k dy_k` in any affine chart.
pub fn fs_density(w: &[Complex64]) -> f64 {
    let n = w.len();
    let rho = 1.0 + w.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    fact / std::f64::consts::PI.powi(n as i32) / rho.powi(n as i32 + 1)
}

/// `(−1)^{n(n−1)/2}(−2i)^n`: converts the coefficient of
/// `dw_1…dw_n dw̄_1…dw̄_n` into a density against `Π dx_k dy_k`.
pub fn lebesgue_factor(n: usize) -> Complex64 {
    let sign = if (n * (n.max(1) - 1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Complex64::new(0.0, -2.0).powu(n as u32) * sign
}

/// Holomorphic Jacobian `∂w^{(to)}/∂w^{(from)}` of the chart transition at
/// `p`; rows index the `to` coordinates, columns the `from` coordinates.
pub fn transition_jacobian(p: &ProjPoint, from: usize, to: usize) -> Option<DMatrix<Complex64>> {
    let z0 = p.z();
    let zf = z0[from];
    let zt = z0[to];
    if zf.norm() == 0.0 || zt.norm() == 0.0 {
        return None;
    }
    let z: Vec<Complex64> = z0.iter().map(|&c| c / zf).collect();
    let zt = z[to];
    let rows: Vec<usize> = (0..z.len()).filter(|&j| j != to).collect();
    let cols: Vec<usize> = (0..z.len()).filter(|&k| k != from).collect();
    Some(DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        let (j, k) = (rows[r], cols[c]);
        let mut v = Complex64::new(0.0, 0.0);
        if j == k {
            v += 1.0 / zt;
        }
        if k == to {
            v -= z[j] / (zt * zt);
        }
        v
    }))
}

#[derive(Clone, Debug)]
struct Chart {
    s: Vec<FastPoly>,
    psi: FastPoly,
    terms: Vec<MetricTerm>,
}

/// Validated instance with per-chart trivializations.
#[derive(Clone, Debug)]
pub struct Geometry {
    bundle: BundleSpec,
    section: SectionSpec,
    psi: PsiSpec,
    metric: MetricSpec,
    charts: Vec<Chart>,
    top_sign: Complex64,
}

/// Number of Fubini–Study points at which a perturbed metric is certified.
pub const METRIC_CERT_SAMPLES: usize = 1000;
const METRIC_CERT_SEED: u64 = 0x5eed_4e77;

impl Geometry {
    pub fn new(
        bundle: BundleSpec,
        section: SectionSpec,
        psi: PsiSpec,
        metric: MetricSpec,
    ) -> Result<Self, GeomError> {
        let n = bundle.n;
        if let MetricSpec::Perturbed {
            epsilon,
            pair,
            q,
            f_index,
        } = &metric
        {
            let (a, b) = *pair;
            if !(epsilon.is_finite() && *epsilon > 0.0) {
                return Err(GeomError::InvalidMetric("epsilon must be positive".into()));
            }
            if a >= n || b >= n || a == b {
                return Err(GeomError::InvalidMetric(format!("bad pair ({a}, {b})")));
            }
            if *f_index >= n {
                return Err(GeomError::InvalidMetric(format!(
                    "f_index {f_index} out of range"
                )));
            }
            let f = &section.components[*f_index];
            if f.is_zero() || f.degree() != bundle.degrees[a] {
                return Err(GeomError::InvalidMetric(format!(
                    "section component {f_index} must be nonzero of degree d_{a} = {}",
                    bundle.degrees[a]
                )));
            }
            if q.num_vars() != n + 1 || (!q.is_zero() && q.degree() != bundle.degrees[b]) {
                return Err(GeomError::InvalidMetric(format!(
                    "q must be a form of degree d_{b} = {} in {} variables",
                    bundle.degrees[b],
                    n + 1
                )));
            }
        }
        let mut charts = Vec::with_capacity(n + 1);
        for alpha in 0..=n {
            let fast = |p: &HomogeneousPoly| -> Result<FastPoly, GeomError> {
                Ok(FastPoly::new(&p.dehomogenize(alpha)?))
            };
            let s = section
                .components
                .iter()
                .map(fast)
                .collect::<Result<Vec<_>, _>>()?;
            let mut terms: Vec<MetricTerm> = bundle
                .degrees
                .iter()
                .enumerate()
                .map(|(i, &d)| MetricTerm::diagonal(i, d))
                .collect();
            if let MetricSpec::Perturbed {
                epsilon,
                pair: (a, b),
                q,
                f_index,
            } = &metric
            {
                let f0 = fast(&section.components[*f_index])?;
                let q0 = fast(q)?;
                let m = bundle.degrees[*a] + bundle.degrees[*b];
                terms.push(MetricTerm::new(
                    *a,
                    *b,
                    *epsilon,
                    Some(q0.clone()),
                    Some(f0.clone()),
                    m,
                ));
                terms.push(MetricTerm::new(*b, *a, *epsilon, Some(f0), Some(q0), m));
            }
            charts.push(Chart {
                s,
                psi: fast(&psi.h)?,
                terms,
            });
        }
        let idx: Vec<usize> = (0..n).collect();
        let probe = SuperTensor::element(n, &idx, &[], &idx, &[], Complex64::new(1.0, 0.0))
            .expect("valid indices");
        let unit = SForm::from_matrix(
            Complex64::new(0.0, 0.0),
            &(0..n)
                .map(|b| {
                    (0..n)
                        .map(|i| Complex64::new(if b == i { 1.0 } else { 0.0 }, 0.0))
                        .collect()
                })
                .collect::<Vec<_>>(),
        );
        let top_sign = superalg::top_coefficient(
            &superalg::top_pairing_shortcut(&probe, &unit).expect("psi shape"),
        );
        let geom = Self {
            bundle,
            section,
            psi,
            metric,
            charts,
            top_sign,
        };
        geom.certify_metric()?;
        Ok(geom)
    }

    fn certify_metric(&self) -> Result<(), GeomError> {
        if matches!(self.metric, MetricSpec::FubiniStudy) {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(METRIC_CERT_SEED);
        for _ in 0..METRIC_CERT_SAMPLES {
            let p = sample_fs_point(self.n(), &mut rng);
            let w = p.preferred_affine();
            let h = self.metric_matrix(p.chart(), &w)?;
            if !is_positive_definite(&h) {
                return Err(GeomError::NotPositiveDefinite(p.z().to_vec()));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.bundle.n
    }

    pub fn bundle(&self) -> &BundleSpec {
        &self.bundle
    }

    pub fn section(&self) -> &SectionSpec {
        &self.section
    }

    pub fn psi(&self) -> &PsiSpec {
        &self.psi
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    fn chart(&self, alpha: usize, w: &[Complex64]) -> Result<&Chart, GeomError> {
        let n = self.n();
        let c = self
            .charts
            .get(alpha)
            .ok_or(GeomError::BadChart { chart: alpha, n })?;
        if w.len() != n {
            return Err(GeomError::BadPoint {
                expected: n,
                got: w.len(),
            });
        }
        Ok(c)
    }

    /// Hermitian metric matrix `H_ij = h(e_i, e_j)` in the chart frame.
    pub fn metric_matrix(
        &self,
        chart: usize,
        w: &[Complex64],
    ) -> Result<DMatrix<Complex64>, GeomError> {
        let c = self.chart(chart, w)?;
        Ok(metric::metric_value(self.n(), &c.terms, w))
    }

    /// Value, first and mixed second derivatives of `H`.
    pub fn metric_jet(&self, chart: usize, w: &[Complex64]) -> Result<MetricJet, GeomError> {
        let c = self.chart(chart, w)?;
        Ok(metric::metric_jet(self.n(), &c.terms, w))
    }

    /// Section values in the chart frame and `|s|² = Σ H_ij s_i conj(s_j)`.
    pub fn s_value_and_norm(
        &self,
        chart: usize,
        w: &[Complex64],
    ) -> Result<(Vec<Complex64>, f64), GeomError> {
        let c = self.chart(chart, w)?;
        let s: Vec<Complex64> = c.s.iter().map(|p| p.value(w)).collect();
        let h = metric::metric_value(self.n(), &c.terms, w);
        Ok((s.clone(), hermitian_norm_sqr(&h, &s)))
    }

    /// Holomorphic Jacobian `∂s_i/∂w_a` of the chart section.
    pub fn ds(&self, chart: usize, w: &[Complex64]) -> Result<DMatrix<Complex64>, GeomError> {
        let c = self.chart(chart, w)?;
        let n = self.n();
        let mut j = DMatrix::zeros(n, n);
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        for (i, p) in c.s.iter().enumerate() {
            p.value_grad(w, &mut grad);
            for a in 0..n {
                j[(i, a)] = grad[a];
            }
        }
        Ok(j)
    }

    /// Alias of [`Geometry::ds`] for points of `Z`.
    pub fn ds_on_z(&self, chart: usize, p: &[Complex64]) -> Result<DMatrix<Complex64>, GeomError> {
        self.ds(chart, p)
    }

    /// Coefficient of `dw_1 ∧ … ∧ dw_n ⊗ e_1 ∧ … ∧ e_n` in chart `chart`.
    pub fn psi_coefficient(&self, chart: usize, w: &[Complex64]) -> Result<Complex64, GeomError> {
        let c = self.chart(chart, w)?;
        let v = c.psi.value(w);
        Ok(if chart.is_multiple_of(2) { v } else { -v })
    }

    pub fn psi_tensor(&self, chart: usize, w: &[Complex64]) -> Result<SuperTensor, GeomError> {
        let idx: Vec<usize> = (0..self.n()).collect();
        let h = self.psi_coefficient(chart, w)?;
        Ok(SuperTensor::element(self.n(), &idx, &[], &idx, &[], h).expect("valid indices"))
    }

    /// `S/(2t)` at `w`: scalar `−|s|²/2t` and one-form `−(1/2t) ∂̄⟨·, s⟩` with
    /// `⟨·, s⟩ = Σ_i (Σ_j H_ij conj(s_j)) e^i`.
    pub fn s_form(&self, chart: usize, w: &[Complex64], t: f64) -> Result<SForm, GeomError> {
        let (scalar, one) = self.s_form_parts(chart, w, t)?;
        Ok(SForm::from_matrix(scalar, &one))
    }

    /// `S/(2t)` as the scalar and the matrix `A[b][i]` of `dw̄_b ⊗ e^i`.
    pub fn s_form_parts(
        &self,
        chart: usize,
        w: &[Complex64],
        t: f64,
    ) -> Result<(Complex64, Vec<Vec<Complex64>>), GeomError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(GeomError::NonPositiveT(t));
        }
        let c = self.chart(chart, w)?;
        let n = self.n();
        let jet = metric::metric_first_jet(n, &c.terms, w);
        let mut s = vec![Complex64::new(0.0, 0.0); n];
        let mut ds = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (i, p) in c.s.iter().enumerate() {
            s[i] = p.value_grad(w, &mut ds[i]);
        }
        let k = -1.0 / (2.0 * t);
        let norm = hermitian_norm_sqr(&jet.h, &s);
        let mut one = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (b, row) in one.iter_mut().enumerate() {
            for (i, entry) in row.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += jet.dh_bar[b][(i, j)] * s[j].conj() + jet.h[(i, j)] * ds[j][b].conj();
                }
                *entry = acc * k;
            }
        }
        Ok((Complex64::new(norm * k, 0.0), one))
    }

    /// The `(n, n)` coefficient of `ψ ⌟ e^{S/2t}` on `dw_1…dw_n dw̄_1…dw̄_n`,
    /// computed through the full graded algebra.
    pub fn top_form(&self, chart: usize, w: &[Complex64], t: f64) -> Result<Complex64, GeomError> {
        let s = self.s_form(chart, w, t)?;
        let psi = self.psi_tensor(chart, w)?;
        let e = superalg::exp_s(&s);
        let top = superalg::top_pairing(&psi, &e).expect("psi shape");
        Ok(superalg::top_coefficient(&top))
    }

    /// Same as [`Geometry::top_form`] through `S1^{∧n}/n! = det(A)·dw̄ ⊗ e^{1..n}`.
    pub fn top_form_fast(
        &self,
        chart: usize,
        w: &[Complex64],
        t: f64,
    ) -> Result<Complex64, GeomError> {
        let (scalar, one) = self.s_form_parts(chart, w, t)?;
        let n = self.n();
        let a = DMatrix::from_fn(n, n, |b, i| one[b][i]);
        Ok(self.psi_coefficient(chart, w)? * a.determinant() * scalar.exp() * self.top_sign)
    }

    /// `ψ ⌟ e^{S/2t}` as a density against `Π dx_k dy_k` in the chart.
    pub fn top_density(
        &self,
        chart: usize,
        w: &[Complex64],
        t: f64,
    ) -> Result<Complex64, GeomError> {
        Ok(self.top_form_fast(chart, w, t)? * lebesgue_factor(self.n()))
    }

    /// Chern curvature of `(V, h)` at `w`.
    pub fn chern_curvature(
        &self,
        chart: usize,
        w: &[Complex64],
    ) -> Result<CurvatureValue, GeomError> {
        let jet = self.metric_jet(chart, w)?;
        Ok(CurvatureValue::from_jet(&jet))
    }
}

/// Smallest eigenvalue of a Hermitian matrix is positive (relative to the largest).
pub fn is_positive_definite(h: &DMatrix<Complex64>) -> bool {
    let ev = h.symmetric_eigenvalues();
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    max > 0.0 && min > 1e-12 * max
}

fn hermitian_norm_sqr(h: &DMatrix<Complex64>, s: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            acc += h[(i, j)] * s[i] * s[j].conj();
        }
    }
    acc.re
}

#[cfg(test)]
mod tests;
