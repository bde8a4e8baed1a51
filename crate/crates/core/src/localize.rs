//! Monte Carlo evaluation of `((−1)^n/(2πi)^n) ∫ ψ ⌟ e^{S/2t}` over `P^n`,
//! ball-restricted local masses, and the curve-localized term for
//! `V = O(d) ⊕ O(k)` on `P^2` with section `(f, 0)`.
//!
//! Randomness is drawn from one ChaCha8 stream per chunk of [`CHUNK`]
//! samples, and reductions run in sample order, so results do not depend on
//! the number of threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

use crate::polycore::random_c64;
use crate::projgeom::{
    fs_density, lebesgue_factor, sample_fs_point, CurveLocus, GeomError, Geometry, ProjPoint,
};
use crate::superalg::{self, SForm, SuperTensor};
use crate::syszero::{self, SolveError};

pub const CHUNK: usize = 1024;
pub const MIN_SAMPLES: usize = 1000;
/// Sheets with `|∂f/∂w_2|` below this are rejected and the base point resampled.
pub const BRANCH_TOL: f64 = 1e-6;
const MAX_REJECTION_RATE: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalizeError {
    #[error("t must be positive, got {0}")]
    NonPositiveT(f64),
    #[error("at least {MIN_SAMPLES} samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("t = {t} is not small against radius^2 = {r2}")]
    TooWide { t: f64, r2: f64 },
    #[error("another zero lies within twice the radius (distance {0})")]
    OverlappingBalls(f64),
    #[error("the curve is singular")]
    SingularCurve,
    #[error("too many base samples rejected near branch points ({0})")]
    TooManyRejections(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: [f64; 2],
    pub std_error: f64,
    pub samples: usize,
    pub t: f64,
    pub seed: u64,
}

impl IntegralEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveTerm {
    pub component: usize,
    pub value: [f64; 2],
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    /// Base points redrawn because a sheet came too close to a branch point.
    pub rejections: usize,
    /// Largest `|integrand|` (per sheet, as a density in the base plane).
    pub max_abs: f64,
    /// Mean of `Σ_sheets |integrand| / base density`.
    pub l1_mass: f64,
    pub sheets: usize,
}

impl CurveTerm {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }
}

/// `(−1)^n / (2πi)^n`.
pub fn prefactor(n: usize) -> Complex64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Complex64::new(sign, 0.0) / Complex64::new(0.0, 2.0 * PI).powu(n as u32)
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Draws `samples` values with `f(rng)` in per-chunk streams, in parallel.
fn chunked<T, F>(samples: usize, seed: u64, f: F) -> Result<Vec<T>, LocalizeError>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T, LocalizeError> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<T>, LocalizeError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(samples);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Mean and standard error of complex samples, summed in order.
pub fn mean_and_error(xs: &[Complex64]) -> (Complex64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().fold(Complex64::new(0.0, 0.0), |a, &x| a + x) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_t(t: f64) -> Result<(), LocalizeError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(LocalizeError::NonPositiveT(t))
    }
}

/// `((−1)^n/(2πi)^n) ∫_{P^n} ψ ⌟ e^{S/2t}` by FS-uniform Monte Carlo.
pub fn virtual_residue_mc(
    geom: &Geometry,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<IntegralEstimate, LocalizeError> {
    check_t(t)?;
    if samples < MIN_SAMPLES {
        return Err(LocalizeError::TooFewSamples(samples));
    }
    let n = geom.n();
    let pre = prefactor(n);
    let xs = chunked(samples, seed, |rng| {
        let p = sample_fs_point(n, rng);
        let w = p.preferred_affine();
        Ok(geom.top_density(p.chart(), &w, t)? * pre / fs_density(&w))
    })?;
    let (mean, se) = mean_and_error(&xs);
    Ok(IntegralEstimate {
        value: [mean.re, mean.im],
        std_error: se,
        samples,
        t,
        seed,
    })
}

/// Volume of the radius-`r` ball in `C^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    PI.powi(n as i32) * r.powi(2 * n as i32) / fact
}

fn uniform_in_ball<R: Rng + ?Sized>(n: usize, r: f64, rng: &mut R) -> Vec<Complex64> {
    loop {
        let g: Vec<Complex64> = (0..n).map(|_| random_c64(rng)).collect();
        let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let scale = r * u.powf(1.0 / (2 * n) as f64) / norm;
        return g.into_iter().map(|c| c * scale).collect();
    }
}

/// The same integral restricted to the chart ball of radius `radius` around
/// the zero `p` (in `p`'s preferred chart).
pub fn local_mass(
    geom: &Geometry,
    p: &ProjPoint,
    t: f64,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<IntegralEstimate, LocalizeError> {
    check_t(t)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(LocalizeError::BadRadius(radius));
    }
    if t > radius * radius {
        return Err(LocalizeError::TooWide {
            t,
            r2: radius * radius,
        });
    }
    if samples < MIN_SAMPLES {
        return Err(LocalizeError::TooFewSamples(samples));
    }
    let chart = p.chart();
    let center = p.preferred_affine();
    let zs = syszero::solve_square_system(&syszero::affine_system(geom.section()), seed)?;
    for q in zs.points.iter().chain(&zs.defective) {
        let Some(w) = ProjPoint::from_affine(0, &q.w).affine(chart) else {
            continue;
        };
        let d = w
            .iter()
            .zip(&center)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if d > 1e-8 * (1.0 + radius) && d < 2.0 * radius {
            return Err(LocalizeError::OverlappingBalls(d));
        }
    }
    let n = geom.n();
    let scale = prefactor(n) * ball_volume(n, radius);
    let xs = chunked(samples, seed, |rng| {
        let off = uniform_in_ball(n, radius, rng);
        let w: Vec<Complex64> = center.iter().zip(&off).map(|(a, b)| a + b).collect();
        Ok(geom.top_density(chart, &w, t)? * scale)
    })?;
    let (mean, se) = mean_and_error(&xs);
    Ok(IntegralEstimate {
        value: [mean.re, mean.im],
        std_error: se,
        samples,
        t,
        seed,
    })
}

/// `((−1)/(2πi)) ∫_C ψ ⌟ e^{S/2t}` for the flat model `s = w`, `h ≡ 1`,
/// `ψ = dw ⊗ e_1`, by polar quadrature of the graded-algebra integrand.
pub fn flat_gaussian_mass(t: f64) -> Result<Complex64, LocalizeError> {
    check_t(t)?;
    let psi = SuperTensor::dw(1, 0)
        .wedge(&SuperTensor::e(1, 0))
        .expect("n = 1");
    let r_max = (80.0 * t).sqrt();
    let (nr, nt) = (4000, 8);
    let dr = r_max / nr as f64;
    let dth = 2.0 * PI / nt as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..nr {
        let r = (i as f64 + 0.5) * dr;
        for j in 0..nt {
            let w = Complex64::from_polar(r, j as f64 * dth);
            let k = -1.0 / (2.0 * t);
            // ⟨·, s⟩ = conj(w) e^1, so ∂̄⟨·, s⟩ = dw̄ ⊗ e^1
            let s = SForm::from_matrix(
                Complex64::new(k * w.norm_sqr(), 0.0),
                &[vec![Complex64::new(k, 0.0)]],
            );
            let top = superalg::top_pairing(&psi, &superalg::exp_s(&s)).expect("psi shape");
            acc += superalg::top_coefficient(&top) * lebesgue_factor(1) * r * dr * dth;
        }
    }
    Ok(acc * prefactor(1))
}

/// `1 / det_N((1 + R)/(−2πi)) = (−2πi)(1 − R)` for a rank-one normal bundle,
/// with `R = r dw̄ ⊗ e^1` on the curve.
pub fn det_n_inverse_term(r: Complex64) -> SuperTensor {
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let rv = SuperTensor::dw_bar(1, 0)
        .wedge(&SuperTensor::e_dual(1, 0))
        .expect("n = 1")
        .scale(r);
    SuperTensor::scalar(1, -two_pi_i)
        .add(&rv.scale(two_pi_i))
        .expect("n = 1")
}

/// Coefficient of `dw_p ∧ dw̄_p` in `(ψ/det ds) ⌟ det_N(...)^{−1}` on `Z`,
/// parameterized by `w_p` in `chart`, times `(−1)^2/(2πi)^2`.
pub fn curve_integrand(
    ex: &CurveLocus,
    chart: usize,
    w: &[Complex64],
    param: usize,
) -> Result<Complex64, LocalizeError> {
    let cp = ex.curve_point(chart, w, param)?;
    let psi = SuperTensor::dw(1, 0)
        .wedge(&SuperTensor::e(1, 0))
        .expect("n = 1")
        .scale(cp.psi_over_det_ds);
    let form = psi
        .contract(&det_n_inverse_term(cp.r_restricted))
        .expect("shapes match");
    Ok(form.coeff(&crate::superalg::BasisKey {
        hol: 1,
        anti: 1,
        vec: 0,
        covec: 0,
    }) * prefactor(2))
}

/// Coefficients of `f(w_1, y)` in `y` (ascending) for the chart-0 form of `f`.
struct Sheets {
    terms: Vec<(u32, u32, Complex64)>,
    deg: usize,
}

impl Sheets {
    fn new(ex: &CurveLocus) -> Result<Self, LocalizeError> {
        let f = ex.geometry().section().components[ex.f_index()]
            .dehomogenize(0)
            .map_err(GeomError::from)?;
        let terms: Vec<(u32, u32, Complex64)> = f.terms().map(|(e, c)| (e[0], e[1], *c)).collect();
        let deg = terms.iter().map(|t| t.1 as usize).max().unwrap_or(0);
        if deg == 0 {
            return Err(LocalizeError::Unsupported(
                "curve has no sheets over the w1-line".into(),
            ));
        }
        Ok(Self { terms, deg })
    }

    fn roots(&self, x: Complex64) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.deg + 1];
        for &(a, b, k) in &self.terms {
            c[b as usize] += k * x.powu(a);
        }
        syszero::univariate_roots(&c)
    }
}

/// Certifies that `{f = 0}` is smooth: `f` and its partials have no common zero.
pub fn curve_is_smooth(ex: &CurveLocus, seed: u64) -> Result<bool, LocalizeError> {
    let f = &ex.geometry().section().components[ex.f_index()];
    let mut forms = vec![f.clone()];
    for k in 0..3 {
        forms.push(f.partial(k).map_err(GeomError::from)?);
    }
    Ok(!syszero::has_common_projective_zero(&forms, seed)?)
}

struct BaseSample {
    value: Complex64,
    abs: f64,
    max_abs: f64,
    rejections: usize,
}

/// `∫_Z (ψ/det ds) ⌟ det_N((1 + R^{V}_s)/(−2πi))^{−1}` times `(−1)^2/(2πi)^2`,
/// by Monte Carlo over the FS-distributed base `w_1` and a root solve for the
/// sheets `w_2` above it.
pub fn curve_localized_term(
    geom: &Geometry,
    base_samples: usize,
    seed: u64,
) -> Result<CurveTerm, LocalizeError> {
    if base_samples < MIN_SAMPLES {
        return Err(LocalizeError::TooFewSamples(base_samples));
    }
    let ex = CurveLocus::new(geom)?;
    if !curve_is_smooth(&ex, seed)? {
        return Err(LocalizeError::SingularCurve);
    }
    let sheets = Sheets::new(&ex)?;
    let xs = chunked(base_samples, seed, |rng| {
        let mut rejections = 0;
        loop {
            if rejections > MAX_REJECTION_RATE {
                return Err(LocalizeError::TooManyRejections(rejections));
            }
            let x = random_c64(rng) / random_c64(rng);
            let roots = sheets.roots(x);
            let mut value = Complex64::new(0.0, 0.0);
            let mut abs = 0.0;
            let mut max_abs: f64 = 0.0;
            let mut ok = true;
            for y in roots {
                let w = [x, y];
                let (_, g) = ex.f_grad(0, &w)?;
                if g[1].norm() < BRANCH_TOL {
                    ok = false;
                    break;
                }
                let v = curve_integrand(&ex, 0, &w, 0)? * lebesgue_factor(1);
                value += v;
                abs += v.norm();
                max_abs = max_abs.max(v.norm());
            }
            if !ok {
                rejections += 1;
                continue;
            }
            let density = fs_density(&[x]);
            return Ok(BaseSample {
                value: value / density,
                abs: abs / density,
                max_abs,
                rejections,
            });
        }
    })?;
    let values: Vec<Complex64> = xs.iter().map(|s| s.value).collect();
    let (mean, se) = mean_and_error(&values);
    Ok(CurveTerm {
        component: 0,
        value: [mean.re, mean.im],
        std_error: se,
        samples: base_samples,
        seed,
        rejections: xs.iter().map(|s| s.rejections).sum(),
        max_abs: xs.iter().map(|s| s.max_abs).fold(0.0, f64::max),
        l1_mass: xs.iter().map(|s| s.abs).sum::<f64>() / base_samples as f64,
        sheets: sheets.deg,
    })
}
