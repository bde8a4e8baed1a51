//! Metric entries of the form `c · A(w) · conj(B(w)) · ρ^{−m}` with `A`, `B`
//! holomorphic and `ρ = 1 + |w|²`, differentiated in closed form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::polycore::FastPoly;

#[derive(Clone, Debug)]
pub(crate) struct MetricTerm {
    i: usize,
    j: usize,
    c: f64,
    a: Option<FastPoly>,
    b: Option<FastPoly>,
    m: u32,
}

impl MetricTerm {
    pub(crate) fn diagonal(i: usize, d: u32) -> Self {
        Self {
            i,
            j: i,
            c: 1.0,
            a: None,
            b: None,
            m: d,
        }
    }

    pub(crate) fn new(
        i: usize,
        j: usize,
        c: f64,
        a: Option<FastPoly>,
        b: Option<FastPoly>,
        m: u32,
    ) -> Self {
        Self { i, j, c, a, b, m }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn eval(p: &Option<FastPoly>, w: &[Complex64], grad: &mut [Complex64]) -> Complex64 {
    match p {
        Some(p) => p.value_grad(w, grad),
        None => {
            grad.iter_mut().for_each(|g| *g = ZERO);
            ONE
        }
    }
}

fn rho(w: &[Complex64]) -> f64 {
    1.0 + w.iter().map(|c| c.norm_sqr()).sum::<f64>()
}

pub(crate) fn metric_value(n: usize, terms: &[MetricTerm], w: &[Complex64]) -> DMatrix<Complex64> {
    let r = rho(w);
    let mut h = DMatrix::zeros(n, n);
    let mut ga = vec![ZERO; n];
    let mut gb = vec![ZERO; n];
    for t in terms {
        let a = eval(&t.a, w, &mut ga);
        let b = eval(&t.b, w, &mut gb);
        h[(t.i, t.j)] += a * b.conj() * (t.c * r.powi(-(t.m as i32)));
    }
    h
}

/// `H` with `∂_a H` and `∂_{b̄} H` (index `[a]`/`[b]`) and, when requested,
/// `∂_{b̄}∂_a H` (index `[a][b]`).
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub h: DMatrix<Complex64>,
    pub dh: Vec<DMatrix<Complex64>>,
    pub dh_bar: Vec<DMatrix<Complex64>>,
    pub ddh: Vec<Vec<DMatrix<Complex64>>>,
}

fn jet(n: usize, terms: &[MetricTerm], w: &[Complex64], second: bool) -> MetricJet {
    let r = rho(w);
    let zero = DMatrix::zeros(n, n);
    let mut out = MetricJet {
        h: zero.clone(),
        dh: vec![zero.clone(); n],
        dh_bar: vec![zero.clone(); n],
        ddh: if second {
            vec![vec![zero; n]; n]
        } else {
            Vec::new()
        },
    };
    let mut ga = vec![ZERO; n];
    let mut gb = vec![ZERO; n];
    for t in terms {
        let a = eval(&t.a, w, &mut ga);
        let b = eval(&t.b, w, &mut gb);
        let m = t.m as f64;
        let p0 = t.c * r.powi(-(t.m as i32));
        let p1 = t.c * r.powi(-(t.m as i32) - 1);
        let p2 = t.c * r.powi(-(t.m as i32) - 2);
        let ab = a * b.conj();
        let idx = (t.i, t.j);
        out.h[idx] += ab * p0;
        for k in 0..n {
            out.dh[k][idx] += ga[k] * b.conj() * p0 - ab * w[k].conj() * (m * p1);
            out.dh_bar[k][idx] += a * gb[k].conj() * p0 - ab * w[k] * (m * p1);
        }
        if second {
            for (ka, row) in out.ddh.iter_mut().enumerate() {
                for (kb, entry) in row.iter_mut().enumerate() {
                    let delta = if ka == kb { p1 } else { 0.0 };
                    entry[idx] += ga[ka] * gb[kb].conj() * p0
                        - ga[ka] * b.conj() * w[kb] * (m * p1)
                        - a * gb[kb].conj() * w[ka].conj() * (m * p1)
                        - ab * (w[ka].conj() * w[kb] * (-(m + 1.0) * p2) + delta) * m;
                }
            }
        }
    }
    out
}

pub(crate) fn metric_first_jet(n: usize, terms: &[MetricTerm], w: &[Complex64]) -> MetricJet {
    jet(n, terms, w, false)
}

pub(crate) fn metric_jet(n: usize, terms: &[MetricTerm], w: &[Complex64]) -> MetricJet {
    jet(n, terms, w, true)
}

/// Curvature `R = ∂̄(G^{−1}∂G)`, `G = H^T`, stored as `R[i][j][a][b]`: the
/// `e_i ⊗ e^j` component along `dw_a ∧ dw̄_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureValue {
    n: usize,
    r: Vec<Complex64>,
}

impl CurvatureValue {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            r: vec![ZERO; n * n * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize, a: usize, b: usize) -> usize {
        ((i * self.n + j) * self.n + a) * self.n + b
    }

    pub fn get(&self, i: usize, j: usize, a: usize, b: usize) -> Complex64 {
        self.r[self.index(i, j, a, b)]
    }

    pub fn set(&mut self, i: usize, j: usize, a: usize, b: usize, v: Complex64) {
        let k = self.index(i, j, a, b);
        self.r[k] = v;
    }

    /// Endomorphism coefficient matrix along `dw_a ∧ dw̄_b`.
    pub fn component(&self, a: usize, b: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j, a, b))
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn from_jet(jet: &MetricJet) -> Self {
        let n = jet.h.nrows();
        let g = jet.h.transpose();
        let g_inv = g.clone().try_inverse().expect("metric is invertible");
        let mut out = Self::zero(n);
        for a in 0..n {
            let theta_a = &g_inv * jet.dh[a].transpose();
            for b in 0..n {
                let m = -(&g_inv * jet.dh_bar[b].transpose()) * &theta_a
                    + &g_inv * jet.ddh[a][b].transpose();
                for i in 0..n {
                    for j in 0..n {
                        out.set(i, j, a, b, -m[(i, j)]);
                    }
                }
            }
        }
        out
    }
}
