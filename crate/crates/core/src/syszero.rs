//! Isolated zeros of square polynomial systems by total-degree homotopy
//! continuation, plus a few certification helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::polycore::{
    random_c64, random_homogeneous, AffinePoly, FastPoly, HomogeneousPoly, Polynomial,
};
use crate::projgeom::SectionSpec;

pub const MAX_VARS: usize = 4;
pub const MAX_BEZOUT: usize = 200;
/// Normalized residual accepted for a returned zero.
pub const CERT_TOL: f64 = 1e-9;
pub const CLUSTER_RADIUS: f64 = 1e-6;
/// Reciprocal condition number below which a zero is called singular.
pub const SINGULAR_RCOND: f64 = 1e-10;
const DIVERGENCE_RADIUS: f64 = 1e8;
const MAX_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-13;
/// Corrector updates below this (relative) count as converged.
const ROUNDOFF: f64 = 1e-13;
const RETRIES: u64 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("system has {got} equations in {vars} unknowns")]
    NotSquare { got: usize, vars: usize },
    #[error("system too large: {0}")]
    TooLarge(String),
    #[error("equation {0} is constant")]
    ConstantEquation(usize),
    #[error("{failed} of {total} paths failed after {attempts} attempts")]
    PathFailure {
        failed: usize,
        total: usize,
        attempts: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroPoint {
    pub w: Vec<Complex64>,
    /// `max_i |f_i(p)| / (‖f_i‖_1 · max(1, |p|)^{d_i})`.
    pub residual: f64,
    pub det_j: f64,
    /// `σ_max / σ_min` of the Jacobian.
    pub condition: f64,
    /// Number of paths that ended here.
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSet {
    /// Certified simple zeros in path order.
    pub points: Vec<ZeroPoint>,
    /// Clustered or singular endpoints.
    pub defective: Vec<ZeroPoint>,
    pub bezout_count: usize,
    /// Paths that diverged to infinity.
    pub missing_paths: usize,
    /// The homotopy constant of the accepted attempt.
    pub gamma: Complex64,
}

impl ZeroSet {
    pub fn is_clean(&self) -> bool {
        self.defective.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    /// `max_i |f_i(p)|`.
    pub residual: f64,
    pub normalized_residual: f64,
    pub det_j: f64,
    /// One Newton step reduces the residual at least tenfold.
    pub newton_contracts: bool,
}

struct System {
    f: Vec<FastPoly>,
    degrees: Vec<u32>,
    l1: Vec<f64>,
}

impl System {
    fn new(f: &[AffinePoly]) -> Result<Self, SolveError> {
        let n = f.len();
        if f.iter().any(|p| p.num_vars() != n) {
            return Err(SolveError::NotSquare {
                got: n,
                vars: f.iter().map(|p| p.num_vars()).max().unwrap_or(0),
            });
        }
        let f: Vec<FastPoly> = f.iter().map(FastPoly::new).collect();
        let degrees: Vec<u32> = f.iter().map(|p| p.total_degree()).collect();
        if let Some(i) = degrees.iter().position(|&d| d == 0) {
            return Err(SolveError::ConstantEquation(i));
        }
        let l1 = f.iter().map(|p| p.coeff_l1()).collect();
        Ok(Self { f, degrees, l1 })
    }

    fn n(&self) -> usize {
        self.f.len()
    }

    fn eval(&self, z: &[Complex64], val: &mut DVector<Complex64>, jac: &mut DMatrix<Complex64>) {
        let n = self.n();
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        for (i, p) in self.f.iter().enumerate() {
            val[i] = p.value_grad(z, &mut grad);
            for k in 0..n {
                jac[(i, k)] = grad[k];
            }
        }
    }

    fn normalized_residual(&self, z: &[Complex64], val: &DVector<Complex64>) -> f64 {
        let scale = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1.0);
        (0..self.n())
            .map(|i| {
                val[i].norm()
                    / (self.l1[i].max(f64::MIN_POSITIVE) * scale.powi(self.degrees[i] as i32))
            })
            .fold(0.0, f64::max)
    }
}

fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

enum PathEnd {
    Finite(Vec<Complex64>),
    Diverged,
    Failed,
}

struct Homotopy<'a> {
    sys: &'a System,
    gamma: Complex64,
}

impl Homotopy<'_> {
    /// `H = (1−τ)γ g + τ f` with `g_i = z_i^{d_i} − 1`; returns `H`, `H_z`, `H_τ`.
    fn eval(
        &self,
        z: &[Complex64],
        tau: f64,
    ) -> (DVector<Complex64>, DMatrix<Complex64>, DVector<Complex64>) {
        let n = self.sys.n();
        let mut fv = DVector::zeros(n);
        let mut fj = DMatrix::zeros(n, n);
        self.sys.eval(z, &mut fv, &mut fj);
        let mut h = DVector::zeros(n);
        let mut ht = DVector::zeros(n);
        let mut hz = fj * Complex64::new(tau, 0.0);
        let s = self.gamma * (1.0 - tau);
        for i in 0..n {
            let d = self.sys.degrees[i];
            let zd1 = z[i].powu(d - 1);
            let g = zd1 * z[i] - 1.0;
            h[i] = s * g + fv[i] * tau;
            ht[i] = fv[i] - self.gamma * g;
            hz[(i, i)] += s * zd1 * d as f64;
        }
        (h, hz, ht)
    }

    fn track(&self, start: Vec<Complex64>) -> PathEnd {
        let mut z = start;
        let mut tau: f64 = 0.0;
        let mut dt: f64 = 0.02;
        let mut streak = 0;
        for _ in 0..200_000 {
            if tau >= 1.0 - 1e-12 {
                return self.refine(z);
            }
            dt = dt.min(1.0 - tau);
            match self.step(&z, tau, dt) {
                Some(z1) => {
                    z = z1;
                    tau = if dt >= 1.0 - tau { 1.0 } else { tau + dt };
                    streak += 1;
                    if streak >= 3 {
                        dt = (dt * 2.0).min(MAX_STEP);
                        streak = 0;
                    }
                    if norm(&z) > DIVERGENCE_RADIUS {
                        return PathEnd::Diverged;
                    }
                }
                None => {
                    dt *= 0.5;
                    streak = 0;
                    if dt < MIN_STEP {
                        return if tau > 0.9 || norm(&z) > 1e4 {
                            PathEnd::Diverged
                        } else {
                            PathEnd::Failed
                        };
                    }
                }
            }
        }
        PathEnd::Failed
    }

    fn step(&self, z: &[Complex64], tau: f64, dt: f64) -> Option<Vec<Complex64>> {
        let (_, hz, ht) = self.eval(z, tau);
        let dz = hz.lu().solve(&(-ht))?;
        let t1 = (tau + dt).min(1.0);
        let mut z1: Vec<Complex64> = z.iter().zip(dz.iter()).map(|(a, b)| a + b * dt).collect();
        let scale = 1.0 + norm(&z1);
        let mut last = f64::INFINITY;
        for k in 0..3 {
            let (h, hz, _) = self.eval(&z1, t1);
            let delta = hz.lu().solve(&h)?;
            let dn = delta.norm();
            if !dn.is_finite()
                || (k == 0 && dn > 0.1 * scale)
                || (dn > last && dn > ROUNDOFF * scale)
            {
                return None;
            }
            for (a, d) in z1.iter_mut().zip(delta.iter()) {
                *a -= d;
            }
            last = dn;
            if dn <= ROUNDOFF * scale {
                break;
            }
        }
        (last <= 1e-7 * scale).then_some(z1)
    }

    fn refine(&self, mut z: Vec<Complex64>) -> PathEnd {
        let n = self.sys.n();
        let mut val = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, n);
        for _ in 0..10 {
            self.sys.eval(&z, &mut val, &mut jac);
            let Some(delta) = jac.clone().lu().solve(&val) else {
                break;
            };
            if !delta.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                break;
            }
            for (a, d) in z.iter_mut().zip(delta.iter()) {
                *a -= d;
            }
        }
        if norm(&z) > DIVERGENCE_RADIUS || !z.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return PathEnd::Diverged;
        }
        PathEnd::Finite(z)
    }
}

fn start_point(degrees: &[u32], mut index: usize) -> Vec<Complex64> {
    degrees
        .iter()
        .map(|&d| {
            let k = index % d as usize;
            index /= d as usize;
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64)
        })
        .collect()
}

fn singular_values(j: &DMatrix<Complex64>) -> (f64, f64) {
    let sv = j.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (max, min)
}

fn describe(sys: &System, w: Vec<Complex64>, multiplicity: usize) -> ZeroPoint {
    let n = sys.n();
    let mut val = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, n);
    sys.eval(&w, &mut val, &mut jac);
    let (smax, smin) = singular_values(&jac);
    ZeroPoint {
        residual: sys.normalized_residual(&w, &val),
        det_j: jac.determinant().norm(),
        condition: if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        },
        w,
        multiplicity,
    }
}

struct Attempt {
    set: ZeroSet,
    failed: usize,
}

fn attempt(sys: &System, gamma: Complex64) -> Attempt {
    let bezout: usize = sys.degrees.iter().map(|&d| d as usize).product();
    let hom = Homotopy { sys, gamma };
    let ends: Vec<PathEnd> = (0..bezout)
        .into_par_iter()
        .map(|k| hom.track(start_point(&sys.degrees, k)))
        .collect();
    let mut failed = 0;
    let mut missing = 0;
    // clusters in path order: (representative, multiplicity)
    let mut clusters: Vec<(Vec<Complex64>, usize)> = Vec::new();
    for end in ends {
        match end {
            PathEnd::Failed => failed += 1,
            PathEnd::Diverged => missing += 1,
            PathEnd::Finite(z) => {
                let r = CLUSTER_RADIUS * norm(&z).max(1.0);
                let hit = clusters.iter_mut().find(|(c, _)| {
                    c.iter()
                        .zip(&z)
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                        <= r
                });
                match hit {
                    Some(c) => c.1 += 1,
                    None => clusters.push((z, 1)),
                }
            }
        }
    }
    let mut points = Vec::new();
    let mut defective = Vec::new();
    for (z, mult) in clusters {
        let p = describe(sys, z, mult);
        if mult == 1 && p.residual <= CERT_TOL && p.condition.recip() > SINGULAR_RCOND {
            points.push(p);
        } else if mult == 1 && p.residual > CERT_TOL && norm(&p.w) > 1e6 {
            missing += 1;
        } else {
            defective.push(p);
        }
    }
    Attempt {
        set: ZeroSet {
            points,
            defective,
            bezout_count: bezout,
            missing_paths: missing,
            gamma,
        },
        failed,
    }
}

fn gamma_for(seed: u64, attempt: u64) -> Complex64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    let g = random_c64(&mut rng);
    g / g.norm()
}

/// All isolated zeros of the square system `f = 0` in `C^n`.
pub fn solve_square_system(f: &[AffinePoly], seed: u64) -> Result<ZeroSet, SolveError> {
    let n = f.len();
    if n == 0 || n > MAX_VARS {
        return Err(SolveError::TooLarge(format!(
            "n = {n}, supported 1..={MAX_VARS}"
        )));
    }
    let sys = System::new(f)?;
    let bezout: usize = sys.degrees.iter().map(|&d| d as usize).product();
    if bezout > MAX_BEZOUT {
        return Err(SolveError::TooLarge(format!(
            "Bezout number {bezout} > {MAX_BEZOUT}"
        )));
    }
    let mut best: Option<Attempt> = None;
    for k in 0..RETRIES {
        let a = attempt(&sys, gamma_for(seed, k));
        let clean = a.failed == 0 && a.set.defective.is_empty() && a.set.missing_paths == 0;
        let key = |x: &Attempt| (x.failed, x.set.defective.len(), x.set.missing_paths);
        let better = match &best {
            None => true,
            Some(b) => key(&a) < key(b),
        };
        if better {
            best = Some(a);
        }
        if clean {
            break;
        }
    }
    let best = best.expect("at least one attempt");
    if best.failed > 0 {
        return Err(SolveError::PathFailure {
            failed: best.failed,
            total: bezout,
            attempts: RETRIES,
        });
    }
    Ok(best.set)
}

/// Residual, Jacobian determinant and Newton contraction at `p`.
pub fn certify_zero(f: &[AffinePoly], p: &[Complex64]) -> Result<Certificate, SolveError> {
    let sys = System::new(f)?;
    let n = sys.n();
    let mut val = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, n);
    sys.eval(p, &mut val, &mut jac);
    let residual = val.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let det_j = jac.determinant().norm();
    let newton_contracts = if residual == 0.0 {
        det_j > 0.0
    } else {
        match jac.clone().lu().solve(&val) {
            Some(delta) if det_j > 0.0 => {
                let q: Vec<Complex64> = p.iter().zip(delta.iter()).map(|(a, d)| a - d).collect();
                let mut v2 = DVector::zeros(n);
                sys.eval(&q, &mut v2, &mut jac);
                let after = v2.iter().map(|c| c.norm()).fold(0.0, f64::max);
                // at roundoff level no further contraction is possible
                let floor = sys.normalized_residual(p, &val) <= 1e-13
                    && sys.normalized_residual(&q, &v2) <= 1e-13;
                after * 10.0 <= residual || floor
            }
            _ => false,
        }
    };
    Ok(Certificate {
        residual,
        normalized_residual: sys.normalized_residual(p, &val),
        det_j,
        newton_contracts,
    })
}

/// Roots of `Σ c_k x^k` (ascending coefficients) by Aberth–Ehrlich iteration
/// with a Newton polish.
pub fn univariate_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &a in monic.iter().rev() {
            dp = dp * x + p;
            p = p * x + a;
        }
        (p, dp)
    };
    // Fujiwara bound
    let radius = (0..deg)
        .map(|k| {
            let v = monic[k].norm() / if k == 0 { 2.0 } else { 1.0 };
            v.powf(1.0 / (deg - k) as f64)
        })
        .fold(0.0, f64::max)
        * 2.0;
    let radius = radius.max(1e-12);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4,
            )
        })
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if w.re.is_finite() && w.im.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / z[i].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval(*r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            *r -= step;
        }
    }
    z
}

/// Whether the homogeneous forms (all in `m + 1` variables) have a common
/// zero on `P^m`, decided numerically by solving `m` random combinations and
/// testing every form at the solutions.
pub fn has_common_projective_zero(
    forms: &[HomogeneousPoly],
    seed: u64,
) -> Result<bool, SolveError> {
    let Some(nv) = forms.first().map(|f| f.num_vars()) else {
        return Ok(true);
    };
    let m = nv - 1;
    let live: Vec<&HomogeneousPoly> = forms.iter().filter(|f| !f.is_zero()).collect();
    if live.iter().any(|f| f.degree() == 0) {
        return Ok(false);
    }
    if live.len() <= m {
        return Ok(true);
    }
    if m == 0 {
        return Ok(false);
    }
    let top = live.iter().map(|f| f.degree()).max().unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let a: Vec<Vec<Complex64>> = (0..nv)
        .map(|_| (0..nv).map(|_| random_c64(&mut rng)).collect())
        .collect();
    let combos: Vec<HomogeneousPoly> = (0..m)
        .map(|_| {
            live.iter()
                .map(|f| {
                    random_homogeneous(nv, top - f.degree(), &mut rng)
                        .mul(f)
                        .expect("same variables")
                })
                .reduce(|x, y| x.add(&y).expect("same degree"))
                .expect("nonempty")
        })
        .collect();
    // z = A (1, u)
    let affine: Vec<AffinePoly> = combos
        .iter()
        .map(|g| g.substitute_linear(&a).and_then(|h| h.dehomogenize(0)))
        .collect::<Result<_, _>>()
        .expect("square substitution");
    let zs = solve_square_system(&affine, seed)?;
    let fast: Vec<(FastPoly, f64, u32)> = live
        .iter()
        .map(|f| {
            let fp = FastPoly::new(f.poly());
            let l1 = fp.coeff_l1();
            (fp, l1, f.degree())
        })
        .collect();
    let hit = zs.points.iter().chain(&zs.defective).any(|p| {
        let mut y = vec![Complex64::new(1.0, 0.0)];
        y.extend_from_slice(&p.w);
        let mut z: Vec<Complex64> = (0..nv)
            .map(|i| (0..nv).map(|j| a[i][j] * y[j]).sum())
            .collect();
        let zn = norm(&z);
        z.iter_mut().for_each(|c| *c /= zn);
        fast.iter().all(|(f, l1, _)| f.value(&z).norm() / l1 < 1e-6)
    });
    Ok(hit)
}

/// Leading forms `s_i(0, z_1, …, z_n)` as forms on the hyperplane at infinity.
pub fn leading_forms(s: &SectionSpec) -> Vec<HomogeneousPoly> {
    s.components.iter().map(|c| c.leading_form()).collect()
}

/// True iff `s` has no zero on the hyperplane `z_0 = 0`, so that all of `Z`
/// lies in chart 0. A failed numerical decision counts as a zero at infinity.
pub fn zeros_at_infinity_check(s: &SectionSpec) -> bool {
    matches!(
        has_common_projective_zero(&leading_forms(s), 0x1f),
        Ok(false)
    )
}

/// The chart-0 system `s_i(1, w)`.
pub fn affine_system(s: &SectionSpec) -> Vec<AffinePoly> {
    s.components
        .iter()
        .map(|c| {
            c.dehomogenize(0)
                .unwrap_or_else(|_| Polynomial::zero(c.num_vars() - 1))
        })
        .collect()
}
