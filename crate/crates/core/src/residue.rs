//! Local Grothendieck residues `H/det J`, the Euler–Jacobi vanishing sum, and
//! Cayley–Bacharach checks in floating and exact arithmetic.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::polycore::{
    gaussian_from_c64, monomials, random_c64, random_homogeneous, rationalize_c64, AffinePoly,
    Coeff, Exponent, FastPoly, GaussianRational, HomogeneousPoly, PolyError, Polynomial,
};
use crate::projgeom::{GeomError, Geometry, ProjPoint, SectionSpec};
use crate::syszero::{self, SolveError, ZeroSet};

/// Reciprocal condition number below which a Jacobian counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-12;
/// Relative singular-value cutoff for vanishing-space extraction.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidueError {
    #[error("singular Jacobian at {0:?}")]
    Singular(Vec<Complex64>),
    #[error("the section has zeros on the hyperplane at infinity")]
    ZerosAtInfinity,
    #[error("{0} defective (multiple or singular) zeros")]
    Defective(usize),
    #[error("found {found} finite zeros, expected {expected}")]
    MissingZeros { found: usize, expected: usize },
    #[error("points are not distinct")]
    NotDistinct,
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("exact path unavailable: {0}")]
    NotExact(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    /// Chart-0 affine coordinates as `[re, im]` pairs.
    pub point: Vec<[f64; 2]>,
    pub value: [f64; 2],
}

impl LedgerEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }

    pub fn coordinates(&self) -> Vec<Complex64> {
        self.point
            .iter()
            .map(|p| Complex64::new(p[0], p[1]))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidueLedger {
    pub entries: Vec<LedgerEntry>,
    pub total: [f64; 2],
    /// `|total| / Σ |entry|`.
    pub relative_vanishing: f64,
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

impl ResidueLedger {
    /// Sorts entries by coordinates and sums in that order.
    pub fn new(mut entries: Vec<LedgerEntry>) -> Self {
        entries.sort_by(|a, b| {
            a.point
                .iter()
                .flatten()
                .zip(b.point.iter().flatten())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut total = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for e in &entries {
            total += e.value();
            mass += e.value().norm();
        }
        let relative_vanishing = if mass > 0.0 { total.norm() / mass } else { 0.0 };
        Self {
            entries,
            total: pair(total),
            relative_vanishing,
        }
    }

    pub fn total(&self) -> Complex64 {
        Complex64::new(self.total[0], self.total[1])
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|e| e.value().norm()).sum()
    }
}

fn jacobian(f: &[FastPoly], p: &[Complex64]) -> DMatrix<Complex64> {
    let n = p.len();
    let mut j = DMatrix::zeros(n, n);
    let mut g = vec![Complex64::new(0.0, 0.0); n];
    for (i, fi) in f.iter().enumerate() {
        fi.value_grad(p, &mut g);
        for k in 0..n {
            j[(i, k)] = g[k];
        }
    }
    j
}

fn is_singular(j: &DMatrix<Complex64>) -> bool {
    let sv = j.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    !(max > 0.0 && min > SINGULAR_RCOND * max)
}

/// `h(p) / det(∂f/∂w)(p)` for an affine system.
pub fn local_residue_affine(
    f: &[AffinePoly],
    h: &AffinePoly,
    p: &[Complex64],
) -> Result<Complex64, ResidueError> {
    let fast: Vec<FastPoly> = f.iter().map(FastPoly::new).collect();
    let j = jacobian(&fast, p);
    if is_singular(&j) {
        return Err(ResidueError::Singular(p.to_vec()));
    }
    Ok(FastPoly::new(h).value(p) / j.determinant())
}

/// Local residue of `ψ/s` at a simple zero `p` given in chart `chart`.
pub fn local_residue(
    geom: &Geometry,
    chart: usize,
    p: &[Complex64],
) -> Result<Complex64, ResidueError> {
    let j = geom.ds(chart, p)?;
    if is_singular(&j) {
        return Err(ResidueError::Singular(p.to_vec()));
    }
    Ok(geom.psi_coefficient(chart, p)? / j.determinant())
}

/// Residue ledger of `h / f` over every zero of an affine system. No degree
/// hypothesis is checked, so this also serves negative controls.
pub fn residue_ledger_affine(
    f: &[AffinePoly],
    h: &AffinePoly,
    seed: u64,
) -> Result<(ResidueLedger, ZeroSet), ResidueError> {
    let zs = syszero::solve_square_system(f, seed)?;
    if !zs.defective.is_empty() {
        return Err(ResidueError::Defective(zs.defective.len()));
    }
    let fast: Vec<FastPoly> = f.iter().map(FastPoly::new).collect();
    let hf = FastPoly::new(h);
    let mut entries = Vec::with_capacity(zs.points.len());
    for p in &zs.points {
        let j = jacobian(&fast, &p.w);
        if is_singular(&j) {
            return Err(ResidueError::Singular(p.w.clone()));
        }
        entries.push(LedgerEntry {
            point: p.w.iter().map(|&c| pair(c)).collect(),
            value: pair(hf.value(&p.w) / j.determinant()),
        });
    }
    Ok((ResidueLedger::new(entries), zs))
}

/// Euler–Jacobi ledger `Σ_p H(p)/det ds(p)` over all zeros in chart 0.
pub fn global_residue_sum(geom: &Geometry, seed: u64) -> Result<ResidueLedger, ResidueError> {
    if !syszero::zeros_at_infinity_check(geom.section()) {
        return Err(ResidueError::ZerosAtInfinity);
    }
    let f = syszero::affine_system(geom.section());
    let h = geom.psi().h.dehomogenize(0)?;
    let (ledger, zs) = residue_ledger_affine(&f, &h, seed)?;
    if zs.points.len() != zs.bezout_count {
        return Err(ResidueError::MissingZeros {
            found: zs.points.len(),
            expected: zs.bezout_count,
        });
    }
    Ok(ledger)
}

fn unit(z: &[Complex64]) -> Vec<Complex64> {
    let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    z.iter().map(|c| c / n).collect()
}

fn monomial_value(e: &Exponent, z: &[Complex64]) -> Complex64 {
    e.iter().zip(z).map(|(&k, &c)| c.powu(k)).product()
}

/// Forms of degree `m` vanishing at every point, as a basis of the null space
/// of the evaluation matrix (SVD with relative cutoff [`RANK_TOL`]).
pub fn cb_vanishing_space(points: &[ProjPoint], m: u32) -> Vec<HomogeneousPoly> {
    let Some(nv) = points.first().map(|p| p.z().len()) else {
        return Vec::new();
    };
    let mons = monomials(nv, m);
    let cols = mons.len();
    let rows = points.len().max(cols);
    let mut a = DMatrix::<Complex64>::zeros(rows, cols);
    for (r, p) in points.iter().enumerate() {
        let z = unit(p.z());
        for (c, e) in mons.iter().enumerate() {
            a[(r, c)] = monomial_value(e, &z);
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested V^H");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= RANK_TOL * smax.max(f64::MIN_POSITIVE) || smax == 0.0 {
            let terms = mons
                .iter()
                .enumerate()
                .map(|(c, e)| (e.clone(), vt[(k, c)].conj()));
            let poly = Polynomial::from_terms(nv, terms);
            basis.push(HomogeneousPoly::new(poly, m).expect("homogeneous by construction"));
        }
    }
    basis
}

/// `|φ(p)| / (‖φ‖₂ · max(1, ‖p‖)^m)` with `p` as given.
pub fn normalized_value(phi: &HomogeneousPoly, z: &[Complex64]) -> f64 {
    let coeff_norm = phi.terms().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
    if coeff_norm == 0.0 {
        return 0.0;
    }
    let pn = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    phi.eval(z).map(|v| v.norm()).unwrap_or(f64::NAN) / (coeff_norm * pn.powi(phi.degree() as i32))
}

/// Null space over an exact field by reduced row echelon form.
pub fn exact_null_space<C: Coeff>(mut rows: Vec<Vec<C>>, cols: usize) -> Vec<Vec<C>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = C::one() / rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let factor = rows[i][c].clone();
                for k in 0..cols {
                    let sub = factor.clone() * rows[r][k].clone();
                    rows[i][k] = rows[i][k].clone() - sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![C::zero(); cols];
            v[fc] = C::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -rows[i][fc].clone();
            }
            v
        })
        .collect()
}

/// Exact vanishing space of degree-`m` forms at Gaussian-rational points.
pub fn cb_vanishing_space_exact(
    points: &[Vec<GaussianRational>],
    m: u32,
) -> Vec<HomogeneousPoly<GaussianRational>> {
    let Some(nv) = points.first().map(|p| p.len()) else {
        return Vec::new();
    };
    let mons = monomials(nv, m);
    let rows: Vec<Vec<GaussianRational>> = points
        .iter()
        .map(|p| {
            mons.iter()
                .map(|e| {
                    e.iter()
                        .zip(p)
                        .fold(GaussianRational::one(), |acc, (&k, c)| {
                            (0..k).fold(acc, |a, _| a * c.clone())
                        })
                })
                .collect()
        })
        .collect();
    exact_null_space(rows, mons.len())
        .into_iter()
        .map(|v| {
            let poly = Polynomial::from_terms(nv, mons.iter().cloned().zip(v));
            HomogeneousPoly::new(poly, m).expect("homogeneous by construction")
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CbReport {
    pub d: u32,
    pub e: u32,
    pub points: Vec<Vec<[f64; 2]>>,
    /// Dimension of the vanishing space for each held-out point.
    pub space_dims: Vec<usize>,
    /// Largest normalized value of a vanishing form at its held-out point.
    pub max_residual: f64,
    /// Same quantity after replacing one of the other points by a random point.
    pub negative_control: f64,
    /// Whether a random coordinate change was needed.
    pub coordinate_changes: usize,
}

fn random_unitary_like(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Complex64>> {
    let m = DMatrix::from_fn(n, n, |_, _| random_c64(rng));
    let q = m.qr().q();
    (0..n)
        .map(|i| (0..n).map(|j| q[(i, j)]).collect())
        .collect()
}

/// Intersection points of two plane curves, in homogeneous coordinates, after
/// a random coordinate change whenever chart 0 misses some of them.
pub fn intersect_plane_curves(
    f: &HomogeneousPoly,
    g: &HomogeneousPoly,
    seed: u64,
) -> Result<(Vec<ProjPoint>, usize), ResidueError> {
    if f.num_vars() != 3 || g.num_vars() != 3 {
        return Err(ResidueError::Unsupported(
            "plane curves need 3 variables".into(),
        ));
    }
    let expected = (f.degree() * g.degree()) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_err = ResidueError::MissingZeros { found: 0, expected };
    for attempt in 0..4 {
        let a: Vec<Vec<Complex64>> = if attempt == 0 {
            (0..3)
                .map(|i| {
                    (0..3)
                        .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                        .collect()
                })
                .collect()
        } else {
            random_unitary_like(&mut rng, 3)
        };
        let sys = [
            f.substitute_linear(&a)?.dehomogenize(0)?,
            g.substitute_linear(&a)?.dehomogenize(0)?,
        ];
        let zs = match syszero::solve_square_system(&sys, seed.wrapping_add(attempt as u64)) {
            Ok(z) => z,
            Err(e) => {
                last_err = e.into();
                continue;
            }
        };
        if !zs.defective.is_empty() {
            last_err = ResidueError::Defective(zs.defective.len());
            continue;
        }
        if zs.points.len() != expected {
            last_err = ResidueError::MissingZeros {
                found: zs.points.len(),
                expected,
            };
            continue;
        }
        let pts = zs
            .points
            .iter()
            .map(|p| {
                let y = [Complex64::new(1.0, 0.0), p.w[0], p.w[1]];
                let z: Vec<Complex64> = (0..3)
                    .map(|i| (0..3).map(|j| a[i][j] * y[j]).sum())
                    .collect();
                ProjPoint::new(unit(&z)).expect("nonzero")
            })
            .collect();
        return Ok((pts, attempt));
    }
    Err(last_err)
}

/// Classical Cayley–Bacharach: forms of degree `d + e − 3` through all but one
/// intersection point of `f` and `g` vanish at the remaining one.
pub fn cayley_bacharach_verify(
    f: &HomogeneousPoly,
    g: &HomogeneousPoly,
    seed: u64,
) -> Result<CbReport, ResidueError> {
    let (d, e) = (f.degree(), g.degree());
    if d + e < 3 {
        return Err(ResidueError::Unsupported(format!("d + e = {} < 3", d + e)));
    }
    let (points, changes) = intersect_plane_curves(f, g, seed)?;
    let m = d + e - 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xcb);
    let mut space_dims = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut negative_control: f64 = 0.0;
    for k in 0..points.len() {
        let others: Vec<ProjPoint> = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, p)| p.clone())
            .collect();
        let basis = cb_vanishing_space(&others, m);
        space_dims.push(basis.len());
        for phi in &basis {
            max_residual = max_residual.max(normalized_value(phi, points[k].z()));
        }
        let mut replaced = others.clone();
        let j = rng.random_range(0..replaced.len().max(1));
        if !replaced.is_empty() {
            replaced[j] = crate::projgeom::sample_fs_point(2, &mut rng);
        }
        for phi in &cb_vanishing_space(&replaced, m) {
            negative_control = negative_control.max(normalized_value(phi, points[k].z()));
        }
    }
    Ok(CbReport {
        d,
        e,
        points: points
            .iter()
            .map(|p| p.z().iter().map(|&c| pair(c)).collect())
            .collect(),
        space_dims,
        max_residual,
        negative_control,
        coordinate_changes: changes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactCbReport {
    pub num_points: usize,
    pub space_dims: Vec<usize>,
    /// Every vanishing form is exactly zero at its held-out point.
    pub all_zero: bool,
}

fn exact_eval(p: &HomogeneousPoly<GaussianRational>, z: &[GaussianRational]) -> GaussianRational {
    p.eval(z).expect("dimensions match")
}

fn projectively_equal(a: &[GaussianRational], b: &[GaussianRational]) -> bool {
    (0..a.len())
        .all(|i| (0..a.len()).all(|j| a[i].clone() * b[j].clone() == a[j].clone() * b[i].clone()))
}

/// Exact Cayley–Bacharach over `Q(i)` at the given intersection points, which
/// are first verified to be distinct exact zeros of `f` and `g`.
pub fn cayley_bacharach_exact(
    f: &HomogeneousPoly<GaussianRational>,
    g: &HomogeneousPoly<GaussianRational>,
    points: &[Vec<GaussianRational>],
) -> Result<ExactCbReport, ResidueError> {
    let (d, e) = (f.degree(), g.degree());
    if d + e < 3 {
        return Err(ResidueError::Unsupported(format!("d + e = {} < 3", d + e)));
    }
    if points.len() != (d * e) as usize {
        return Err(ResidueError::MissingZeros {
            found: points.len(),
            expected: (d * e) as usize,
        });
    }
    for p in points {
        if !exact_eval(f, p).is_zero() || !exact_eval(g, p).is_zero() {
            return Err(ResidueError::NotExact(
                "a point is not an exact common zero".into(),
            ));
        }
    }
    for i in 0..points.len() {
        for j in 0..i {
            if projectively_equal(&points[i], &points[j]) {
                return Err(ResidueError::NotDistinct);
            }
        }
    }
    let m = d + e - 3;
    let mut space_dims = Vec::new();
    let mut all_zero = true;
    for k in 0..points.len() {
        let others: Vec<Vec<GaussianRational>> = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, p)| p.clone())
            .collect();
        let basis = cb_vanishing_space_exact(&others, m);
        space_dims.push(basis.len());
        all_zero &= basis
            .iter()
            .all(|phi| exact_eval(phi, &points[k]).is_zero());
    }
    Ok(ExactCbReport {
        num_points: points.len(),
        space_dims,
        all_zero,
    })
}

/// Rationalizes floating intersection points (scaled so the largest
/// coordinate is 1) and checks them exactly against `f` and `g`.
pub fn rational_intersection_points(
    f: &HomogeneousPoly<GaussianRational>,
    g: &HomogeneousPoly<GaussianRational>,
    seed: u64,
    max_den: u64,
) -> Result<Vec<Vec<GaussianRational>>, ResidueError> {
    let (pts, _) = intersect_plane_curves(&f.to_float(), &g.to_float(), seed)?;
    pts.iter()
        .map(|p| {
            let z = p.z();
            let lead = z[p.chart()];
            let q: Option<Vec<GaussianRational>> = z
                .iter()
                .map(|&c| rationalize_c64(c / lead, max_den))
                .collect();
            let q = q.ok_or_else(|| ResidueError::NotExact("coordinate is not finite".into()))?;
            if !exact_eval(f, &q).is_zero() || !exact_eval(g, &q).is_zero() {
                return Err(ResidueError::NotExact(format!(
                    "intersection point {:?} is not rational with denominator <= {max_den}",
                    z
                )));
            }
            Ok(q)
        })
        .collect()
}

/// A random product-of-lines instance over `Z`: `f = Π L_i`, `g = Π M_j`
/// with the `d·e` intersection points `L_i × M_j`.
pub struct LineInstance {
    pub f: HomogeneousPoly<GaussianRational>,
    pub g: HomogeneousPoly<GaussianRational>,
    pub points: Vec<Vec<GaussianRational>>,
}

fn int(v: i64) -> GaussianRational {
    GaussianRational::new(BigRational::from_integer(v.into()), BigRational::zero())
}

fn line_poly(l: &[i64; 3]) -> HomogeneousPoly<GaussianRational> {
    let terms = (0..3).map(|k| {
        let mut e = vec![0; 3];
        e[k] = 1;
        (e, int(l[k]))
    });
    HomogeneousPoly::new(Polynomial::from_terms(3, terms), 1).expect("linear")
}

fn cross(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl LineInstance {
    pub fn random<R: Rng>(d: u32, e: u32, rng: &mut R) -> Self {
        loop {
            let mut line = || -> [i64; 3] {
                [
                    rng.random_range(-9..=9),
                    rng.random_range(-9..=9),
                    rng.random_range(-9..=9),
                ]
            };
            let ls: Vec<[i64; 3]> = (0..d).map(|_| line()).collect();
            let ms: Vec<[i64; 3]> = (0..e).map(|_| line()).collect();
            let pts: Vec<[i64; 3]> = ls
                .iter()
                .flat_map(|l| ms.iter().map(move |m| cross(l, m)))
                .collect();
            let exact: Vec<Vec<GaussianRational>> = pts
                .iter()
                .map(|p| p.iter().map(|&v| int(v)).collect())
                .collect();
            if pts.iter().any(|p| p.iter().all(|&v| v == 0)) {
                continue;
            }
            // distinct points and no point on a third line
            let distinct =
                (0..exact.len()).all(|i| (0..i).all(|j| !projectively_equal(&exact[i], &exact[j])));
            let general = pts.iter().all(|p| {
                ls.iter()
                    .chain(&ms)
                    .filter(|l| l[0] * p[0] + l[1] * p[1] + l[2] * p[2] == 0)
                    .count()
                    == 2
            });
            if !(distinct && general) {
                continue;
            }
            let f = ls
                .iter()
                .map(line_poly)
                .reduce(|a, b| a.mul(&b).expect("same vars"))
                .expect("d >= 1");
            let g = ms
                .iter()
                .map(line_poly)
                .reduce(|a, b| a.mul(&b).expect("same vars"))
                .expect("e >= 1");
            return Self {
                f,
                g,
                points: exact,
            };
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneralizedCbReport {
    /// Zeros of `s` on the curve `{f = 0}`.
    pub curve_points: usize,
    /// Zeros of `u = g = 0` off the curve.
    pub isolated_points: usize,
    pub psi_divisible_by_curve: bool,
    /// Residue ledger of `ψ/s` over the isolated points only.
    pub point_ledger: ResidueLedger,
    /// Cayley–Bacharach residual for `φ` of degree `deg u + deg g − 3`.
    pub cb_residual: f64,
    /// Relative point-ledger total for a random `ψ` not divisible by `f`.
    pub negative_control: f64,
}

/// Checks the point-supported residue identity for `s = (f·u, g)` on `P^2`,
/// where `{f = 0}` is a curve in `Z` whose contribution is suppressed by
/// `ψ = f·φ`.
pub fn generalized_cb_check(
    section: &SectionSpec,
    curve: &HomogeneousPoly,
    psi: &HomogeneousPoly,
    seed: u64,
) -> Result<GeneralizedCbReport, ResidueError> {
    if section.components.len() != 2 || curve.num_vars() != 3 {
        return Err(ResidueError::Unsupported(
            "generalized check supports s = (f*u, g) on P^2".into(),
        ));
    }
    let fu = &section.components[0];
    let g = &section.components[1];
    let u = approx_quotient(fu, curve).ok_or_else(|| {
        ResidueError::Unsupported(
            "first section component is not divisible by the curve polynomial".into(),
        )
    })?;
    if !syszero::zeros_at_infinity_check(section) {
        return Err(ResidueError::ZerosAtInfinity);
    }
    let f_aff = [fu.dehomogenize(0)?, g.dehomogenize(0)?];
    let zs = syszero::solve_square_system(&f_aff, seed)?;
    if !zs.defective.is_empty() {
        return Err(ResidueError::Defective(zs.defective.len()));
    }
    let expected_iso = (u.degree() * g.degree()) as usize;
    let curve_fast = FastPoly::new(&curve.dehomogenize(0)?);
    let u_fast = FastPoly::new(&u.dehomogenize(0)?);
    let scale = |w: &[Complex64]| w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let mut iso = Vec::new();
    let mut on_curve = 0;
    for p in &zs.points {
        let s = scale(&p.w);
        let fv =
            curve_fast.value(&p.w).norm() / (curve_fast.coeff_l1() * s.powi(curve.degree() as i32));
        let uv = u_fast.value(&p.w).norm() / (u_fast.coeff_l1() * s.powi(u.degree() as i32));
        if fv <= uv {
            on_curve += 1;
        } else {
            iso.push(p.w.clone());
        }
    }
    if iso.len() != expected_iso {
        return Err(ResidueError::MissingZeros {
            found: iso.len(),
            expected: expected_iso,
        });
    }
    let fast_s: Vec<FastPoly> = f_aff.iter().map(FastPoly::new).collect();
    let ledger_for = |h: &HomogeneousPoly| -> Result<ResidueLedger, ResidueError> {
        let hf = FastPoly::new(&h.dehomogenize(0)?);
        let mut entries = Vec::new();
        for w in &iso {
            let j = jacobian(&fast_s, w);
            if is_singular(&j) {
                return Err(ResidueError::Singular(w.clone()));
            }
            entries.push(LedgerEntry {
                point: w.iter().map(|&c| pair(c)).collect(),
                value: pair(hf.value(w) / j.determinant()),
            });
        }
        Ok(ResidueLedger::new(entries))
    };
    let point_ledger = ledger_for(psi)?;
    let psi_divisible =
        psi.is_zero() || approx_quotient(psi, curve).is_some() || divides_numerically(curve, psi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6cb);
    let control = random_homogeneous(3, psi.degree().max(fu.degree() + g.degree() - 3), &mut rng);
    let negative_control = ledger_for(&control)?.relative_vanishing;
    let m = u.degree() + g.degree();
    let cb_residual = if m >= 3 {
        let pts: Vec<ProjPoint> = iso.iter().map(|w| ProjPoint::from_affine(0, w)).collect();
        let mut worst: f64 = 0.0;
        for k in 0..pts.len() {
            let others: Vec<ProjPoint> = pts
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, p)| p.clone())
                .collect();
            let z = unit(pts[k].z());
            for phi in cb_vanishing_space(&others, m - 3) {
                worst = worst.max(normalized_value(&phi, &z));
            }
        }
        worst
    } else {
        0.0
    };
    Ok(GeneralizedCbReport {
        curve_points: on_curve,
        isolated_points: iso.len(),
        psi_divisible_by_curve: psi_divisible,
        point_ledger,
        cb_residual,
        negative_control,
    })
}

/// Long division in floating point, discarding remainder terms at roundoff
/// level relative to the dividend.
pub fn approx_quotient(p: &HomogeneousPoly, d: &HomogeneousPoly) -> Option<HomogeneousPoly> {
    if d.is_zero() || d.degree() > p.degree() || d.num_vars() != p.num_vars() {
        return None;
    }
    let nv = p.num_vars();
    let tol = 1e-12
        * p.terms()
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
    let (lead_e, lead_c) = d.terms().last().map(|(e, c)| (e.clone(), *c))?;
    let purge = |q: Polynomial| {
        Polynomial::from_terms(
            nv,
            q.terms()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(e, c)| (e.clone(), *c)),
        )
    };
    let mut rem = p.poly().clone();
    let mut quot = Polynomial::zero(nv);
    for _ in 0..10_000 {
        let Some((e, c)) = rem.terms().last().map(|(e, c)| (e.clone(), *c)) else {
            return HomogeneousPoly::new(quot, p.degree() - d.degree()).ok();
        };
        if e.iter().zip(&lead_e).any(|(a, b)| a < b) {
            return None;
        }
        let q = Polynomial::monomial(
            e.iter().zip(&lead_e).map(|(a, b)| a - b).collect(),
            c / lead_c,
        );
        rem = purge(rem.sub(&q.mul(d.poly()).ok()?).ok()?);
        quot = quot.add(&q).ok()?;
    }
    None
}

/// Floating divisibility test: `ψ` vanishes on sample points of `{f = 0}`.
fn divides_numerically(curve: &HomogeneousPoly, psi: &HomogeneousPoly) -> bool {
    let Ok(cf) = curve.dehomogenize(0) else {
        return false;
    };
    let Ok(pf) = psi.dehomogenize(0) else {
        return false;
    };
    let (cf, pf) = (FastPoly::new(&cf), FastPoly::new(&pf));
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1f);
    let mut checked = 0;
    for _ in 0..50 {
        let w1 = random_c64(&mut rng);
        // coefficients of f(w1, ·) in w2, via interpolation on roots of unity
        let deg = curve.degree() as usize;
        let samples: Vec<Complex64> = (0..=deg)
            .map(|k| {
                cf.value(&[
                    w1,
                    Complex64::from_polar(
                        1.0,
                        2.0 * std::f64::consts::PI * k as f64 / (deg + 1) as f64,
                    ),
                ])
            })
            .collect();
        let coeffs: Vec<Complex64> = (0..=deg)
            .map(|j| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        v * Complex64::from_polar(
                            1.0,
                            -2.0 * std::f64::consts::PI * (j * k) as f64 / (deg + 1) as f64,
                        )
                    })
                    .sum::<Complex64>()
                    / (deg + 1) as f64
            })
            .collect();
        for w2 in syszero::univariate_roots(&coeffs) {
            let s = (1.0 + w1.norm_sqr() + w2.norm_sqr()).sqrt();
            if pf.value(&[w1, w2]).norm()
                > 1e-8 * pf.coeff_l1().max(1e-300) * s.powi(psi.degree() as i32)
            {
                return false;
            }
            checked += 1;
        }
    }
    checked > 0
}

/// Converts a floating polynomial to the exact backend (lossless on dyadics).
pub fn to_exact(p: &HomogeneousPoly) -> Option<HomogeneousPoly<GaussianRational>> {
    let terms: Option<Vec<(Exponent, GaussianRational)>> = p
        .terms()
        .map(|(e, c)| gaussian_from_c64(*c).map(|q| (e.clone(), q)))
        .collect();
    HomogeneousPoly::new(Polynomial::from_terms(p.num_vars(), terms?), p.degree()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::{parse_homogeneous, parse_poly};
    use crate::projgeom::{BundleSpec, MetricSpec, PsiSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn geometry(n: usize, degrees: &[u32], section: &[&str], psi: &str) -> Geometry {
        let bundle = BundleSpec::new(n, degrees.to_vec()).unwrap();
        let comps = section
            .iter()
            .map(|s| parse_poly(s, n + 1).unwrap())
            .collect();
        let section = SectionSpec::new(&bundle, comps).unwrap();
        let psi = PsiSpec::new(&bundle, parse_poly(psi, n + 1).unwrap()).unwrap();
        Geometry::new(bundle, section, psi, MetricSpec::FubiniStudy).unwrap()
    }

    #[test]
    fn local_residue_examples() {
        let g = geometry(1, &[2], &["z0*z1"], "1");
        assert_eq!(local_residue(&g, 0, &[c(0.0, 0.0)]).unwrap(), c(1.0, 0.0));
        let g = geometry(1, &[2], &["z1^2 - z0^2"], "1");
        assert_eq!(local_residue(&g, 0, &[c(1.0, 0.0)]).unwrap(), c(0.5, 0.0));
        let g = geometry(1, &[2], &["z1^2"], "1");
        assert!(matches!(
            local_residue(&g, 0, &[c(0.0, 0.0)]),
            Err(ResidueError::Singular(_))
        ));
    }

    #[test]
    fn local_residue_is_chart_invariant() {
        let g = geometry(
            2,
            &[2, 3],
            &["z1^2 - z0*z2 + 0.5*z1*z2", "z2^3 - 2*z0^2*z1 + z1^3"],
            "z0^2 + 3*z1*z2 - 0.5i*z2^2",
        );
        let ledger = global_residue_sum(&g, 3).unwrap();
        for e in &ledger.entries {
            let p = ProjPoint::from_affine(0, &e.coordinates());
            for alpha in 1..3 {
                let Some(w) = p.affine(alpha) else { continue };
                let r = local_residue(&g, alpha, &w).unwrap();
                assert!((r - e.value()).norm() <= 1e-10 * e.value().norm().max(1e-12));
            }
        }
    }

    #[test]
    fn p1_ledger() {
        let g = geometry(1, &[2], &["z1^2 - z0^2"], "1");
        let l = global_residue_sum(&g, 1).unwrap();
        assert_eq!(l.entries.len(), 2);
        assert!((l.entries[0].value() + 0.5).norm() < 1e-14);
        assert!((l.entries[1].value() - 0.5).norm() < 1e-14);
        assert!(l.total().norm() < 1e-14);
    }

    #[test]
    fn euler_jacobi_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..5 {
            let f: Vec<AffinePoly> = [3u32, 3]
                .iter()
                .map(|&d| random_homogeneous(3, d, &mut rng).dehomogenize(0).unwrap())
                .collect();
            let h = random_homogeneous(3, 3, &mut rng).dehomogenize(0).unwrap();
            let (l, _) = residue_ledger_affine(&f, &h, trial).unwrap();
            assert_eq!(l.entries.len(), 9);
            assert!(l.relative_vanishing <= 1e-8, "{}", l.relative_vanishing);
            let h_bad = random_homogeneous(3, 4, &mut rng).dehomogenize(0).unwrap();
            let (l, _) = residue_ledger_affine(&f, &h_bad, trial).unwrap();
            assert!(l.relative_vanishing > 1e-3);
        }
    }

    #[test]
    fn ledger_is_order_independent_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f: Vec<AffinePoly> = [2u32, 3]
            .iter()
            .map(|&d| random_homogeneous(3, d, &mut rng).dehomogenize(0).unwrap())
            .collect();
        let h = random_homogeneous(3, 2, &mut rng).dehomogenize(0).unwrap();
        let (a, _) = residue_ledger_affine(&f, &h, 1).unwrap();
        let (b, _) = residue_ledger_affine(&f, &h, 99).unwrap();
        assert!((a.total() - b.total()).norm() <= 1e-12);
        let mut rev = a.entries.clone();
        rev.reverse();
        assert_eq!(ResidueLedger::new(rev).total, a.total);
        let lambda = c(0.5, -2.0);
        let (s, _) = residue_ledger_affine(&f, &h.scale(&lambda), 1).unwrap();
        for (x, y) in s.entries.iter().zip(&a.entries) {
            assert!((x.value() - y.value() * lambda).norm() <= 1e-15 * (1.0 + x.value().norm()));
        }
    }

    #[test]
    fn zeros_at_infinity_are_rejected() {
        let g = geometry(2, &[2, 2], &["z1*z2 + z0^2", "z1^2 + z0*z2"], "z0");
        assert_eq!(
            global_residue_sum(&g, 0),
            Err(ResidueError::ZerosAtInfinity)
        );
    }

    fn pts(zs: &[[f64; 3]]) -> Vec<ProjPoint> {
        zs.iter()
            .map(|z| ProjPoint::new(z.iter().map(|&x| c(x, 0.0)).collect()).unwrap())
            .collect()
    }

    #[test]
    fn vanishing_space_examples() {
        assert_eq!(cb_vanishing_space(&pts(&[[1.0, 2.0, 3.0]]), 1).len(), 2);
        assert_eq!(
            cb_vanishing_space(
                &pts(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
                1
            )
            .len(),
            0
        );
        let collinear = pts(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        let basis = cb_vanishing_space(&collinear, 1);
        assert_eq!(basis.len(), 1);
        for p in &collinear {
            assert!(normalized_value(&basis[0], p.z()) < 1e-14);
        }
        // 8 of the 9 points of a cubic pencil
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_homogeneous(3, 3, &mut rng);
        let g = random_homogeneous(3, 3, &mut rng);
        let (points, _) = intersect_plane_curves(&f, &g, 5).unwrap();
        assert_eq!(cb_vanishing_space(&points[..8], 3).len(), 2);
    }

    #[test]
    fn exact_null_space_matches_float() {
        let q = |v: i64| int(v);
        let rows = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]];
        let ns = exact_null_space(rows, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let s = v[0].clone() + q(2) * v[1].clone() + q(3) * v[2].clone();
            assert!(s.is_zero());
        }
    }

    #[test]
    fn cayley_bacharach_float() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (d, e) in [(2, 2), (2, 3), (3, 3)] {
            let f = random_homogeneous(3, d, &mut rng);
            let g = random_homogeneous(3, e, &mut rng);
            let r = cayley_bacharach_verify(&f, &g, 7).unwrap();
            assert_eq!(r.points.len(), (d * e) as usize);
            assert!(r.max_residual <= 1e-8, "({d},{e}): {}", r.max_residual);
            if (d, e) == (3, 3) {
                assert!(r.space_dims.iter().all(|&k| k == 2));
                assert!(r.negative_control > 1e-3);
            }
        }
    }

    #[test]
    fn cayley_bacharach_exact_lines() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (d, e) in [(2, 2), (2, 3), (3, 3)] {
            let inst = LineInstance::random(d, e, &mut rng);
            let r = cayley_bacharach_exact(&inst.f, &inst.g, &inst.points).unwrap();
            assert!(r.all_zero);
            // float path on the same instance
            let fr = cayley_bacharach_verify(&inst.f.to_float(), &inst.g.to_float(), 9).unwrap();
            assert!(fr.max_residual <= 1e-10);
            assert_eq!(
                r.space_dims.iter().sum::<usize>(),
                fr.space_dims.iter().sum::<usize>()
            );
        }
    }

    #[test]
    fn exact_points_from_a_scenario() {
        let f = parse_homogeneous::<GaussianRational>("z1^2 - z0^2", 3).unwrap();
        let g = parse_homogeneous::<GaussianRational>("z2^2 - 4*z0^2", 3).unwrap();
        let pts = rational_intersection_points(&f, &g, 1, 1_000_000).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(cayley_bacharach_exact(&f, &g, &pts).unwrap().all_zero);
        let f = parse_homogeneous::<GaussianRational>("z1^2 - 2*z0^2", 3).unwrap();
        assert!(matches!(
            rational_intersection_points(&f, &g, 1, 1000),
            Err(ResidueError::NotExact(_))
        ));
    }

    #[test]
    fn generalized_check() {
        // s = (f*u, g) with f a conic, u a line, g a conic on P^2
        let f = parse_poly("z1^2 + z2^2 - 2*z0^2 + 0.3*z1*z2", 3).unwrap();
        let u = parse_poly("z1 - 0.5*z2 + 0.2*z0", 3).unwrap();
        let g = parse_poly("z1*z2 - z0^2 + 0.7*z2^2 - 0.1*z0*z1", 3).unwrap();
        let bundle = BundleSpec::new(2, vec![3, 2]).unwrap();
        let section = SectionSpec::new(&bundle, vec![f.mul(&u).unwrap(), g.clone()]).unwrap();
        // deg psi = 3 + 2 - 3 = 2 = deg f + deg phi with deg phi = 0
        let psi = f.scale(&c(1.5, -0.5));
        let r = generalized_cb_check(&section, &f, &psi, 3).unwrap();
        assert_eq!(r.curve_points, 4);
        assert_eq!(r.isolated_points, 2);
        assert!(r.psi_divisible_by_curve);
        assert!(r.point_ledger.relative_vanishing <= 1e-8);
        assert!(r.negative_control > 1e-3);
        let not_div = parse_poly("z0*z1 + z2^2", 3).unwrap();
        let r = generalized_cb_check(&section, &f, &not_div, 3).unwrap();
        assert!(!r.psi_divisible_by_curve);
        assert!(r.point_ledger.relative_vanishing > 1e-3);
        let bad_curve = parse_poly("z1^2 - z0*z2", 3).unwrap();
        assert!(matches!(
            generalized_cb_check(&section, &bad_curve, &psi, 3),
            Err(ResidueError::Unsupported(_))
        ));
    }
}
