//! Ingredients of the curve-localized formula for `V = L ⊕ V_1` on `P^2` with
//! section `(f, 0)`: the normal data of `Z = {f = 0}`, the endomorphism
//! `R^{V_1}_s = −(ds)^{−1} P^{Im ds} R(·, j_*) P^{V_1}` and `ψ / det ds`.

use num_complex::Complex64;

use super::{GeomError, Geometry, MetricSpec};

/// Smallest `|∂f|` accepted at a curve point.
pub const TRANSVERSALITY_TOL: f64 = 1e-12;

/// `R^{V_1}_s` at a point of `Z` as the ambient `(0,1)`-form
/// `Σ_b beta[b] dw̄_b ⊗ e^{V}`, acting on `N` by scalars.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RViS {
    pub beta: [Complex64; 2],
}

impl RViS {
    /// Coefficient of `dw̄_p` after restricting to `Z` parameterized by
    /// `w_p`, where `dw_q = κ dw_p` along `Z`.
    pub fn restrict(&self, param: usize, kappa: Complex64) -> Complex64 {
        self.beta[param] + self.beta[1 - param] * kappa.conj()
    }
}

/// Everything needed to assemble the curve integrand at one point of `Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    /// Parameterizing coordinate `p ∈ {0, 1}` of the chart.
    pub param: usize,
    /// `dw_q/dw_p` along `Z`.
    pub kappa: Complex64,
    /// Coefficient of `dw_p ⊗ e_V` in `ψ / det ds`.
    pub psi_over_det_ds: Complex64,
    /// Coefficient of `dw̄_p ⊗ e^V` in `R^{V_1}_s` restricted to `Z`.
    pub r_restricted: Complex64,
}

/// View of a [`Geometry`] as an instance `V = O(d_F) ⊕ O(d_V)` on `P^2` with
/// section `s_V ≡ 0`.
#[derive(Clone, Copy, Debug)]
pub struct CurveLocus<'a> {
    geom: &'a Geometry,
    f_index: usize,
    v_index: usize,
}

impl<'a> CurveLocus<'a> {
    pub fn new(geom: &'a Geometry) -> Result<Self, GeomError> {
        if geom.n() != 2 {
            return Err(GeomError::Unsupported(format!(
                "curve localization needs n = 2, got {}",
                geom.n()
            )));
        }
        let comps = &geom.section().components;
        let f_index = match geom.metric() {
            MetricSpec::Perturbed { f_index, .. } => *f_index,
            MetricSpec::FubiniStudy => comps.iter().position(|c| !c.is_zero()).unwrap_or(0),
        };
        let v_index = 1 - f_index;
        if !comps[v_index].is_zero() || comps[f_index].is_zero() {
            return Err(GeomError::Unsupported(format!(
                "section must have the form (f, 0) with f in summand {f_index}"
            )));
        }
        Ok(Self {
            geom,
            f_index,
            v_index,
        })
    }

    pub fn geometry(&self) -> &'a Geometry {
        self.geom
    }

    pub fn f_index(&self) -> usize {
        self.f_index
    }

    pub fn v_index(&self) -> usize {
        self.v_index
    }

    /// Chart value and gradient of `f`.
    pub fn f_grad(
        &self,
        chart: usize,
        w: &[Complex64],
    ) -> Result<(Complex64, [Complex64; 2]), GeomError> {
        let c = self.geom.chart(chart, w)?;
        let mut g = [Complex64::new(0.0, 0.0); 2];
        let v = c.s[self.f_index].value_grad(w, &mut g);
        Ok((v, g))
    }

    /// `ν = conj(∂f)/|∂f|²`, so `df(ν) = 1`.
    pub fn normal_vector(
        &self,
        chart: usize,
        w: &[Complex64],
    ) -> Result<[Complex64; 2], GeomError> {
        let (_, g) = self.f_grad(chart, w)?;
        let norm = g[0].norm_sqr() + g[1].norm_sqr();
        if norm.sqrt() < TRANSVERSALITY_TOL {
            return Err(GeomError::NonTransversal(norm.sqrt()));
        }
        Ok([g[0].conj() / norm, g[1].conj() / norm])
    }

    /// `dw_q/dw_p = −∂_p f / ∂_q f` along `Z`.
    pub fn kappa(
        &self,
        chart: usize,
        w: &[Complex64],
        param: usize,
    ) -> Result<Complex64, GeomError> {
        let (_, g) = self.f_grad(chart, w)?;
        let q = 1 - param;
        if g[q].norm() < TRANSVERSALITY_TOL {
            return Err(GeomError::NonTransversal(g[q].norm()));
        }
        Ok(-g[param] / g[q])
    }

    /// `R^{V}_s` with the normal slot filled by `ν`: `β_b = −Σ_a R[F][V][a][b] ν_a`.
    pub fn r_vi_s(&self, chart: usize, w: &[Complex64]) -> Result<RViS, GeomError> {
        let nu = self.normal_vector(chart, w)?;
        let r = self.geom.chern_curvature(chart, w)?;
        let mut beta = [Complex64::new(0.0, 0.0); 2];
        for (b, slot) in beta.iter_mut().enumerate() {
            *slot = -(0..2)
                .map(|a| r.get(self.f_index, self.v_index, a, b) * nu[a])
                .sum::<Complex64>();
        }
        Ok(RViS { beta })
    }

    /// `Σ R[F][V][a][b] τ_a conj(τ_b)` for a tangent `τ` of `Z`; zero on `Z`.
    pub fn tangent_curvature(
        &self,
        chart: usize,
        w: &[Complex64],
        param: usize,
    ) -> Result<Complex64, GeomError> {
        let kappa = self.kappa(chart, w, param)?;
        let mut tau = [Complex64::new(0.0, 0.0); 2];
        tau[param] = Complex64::new(1.0, 0.0);
        tau[1 - param] = kappa;
        let r = self.geom.chern_curvature(chart, w)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                acc += r.get(self.f_index, self.v_index, a, b) * tau[a] * tau[b].conj();
            }
        }
        Ok(acc)
    }

    /// Coefficient `c` of `ψ / det ds = c dw_p ⊗ e_V` on `Z` parameterized by
    /// `w_p`: writes `ψ = c dw_p ∧ df ⊗ e_F ∧ e_V`.
    pub fn psi_over_det_ds(
        &self,
        chart: usize,
        w: &[Complex64],
        param: usize,
    ) -> Result<Complex64, GeomError> {
        let (_, g) = self.f_grad(chart, w)?;
        let q = 1 - param;
        if g[q].norm() < TRANSVERSALITY_TOL {
            return Err(GeomError::NonTransversal(g[q].norm()));
        }
        let h = self.geom.psi_coefficient(chart, w)?;
        // dw_0∧dw_1 = dw_0∧df/∂_1f = −dw_1∧df/∂_0f
        let form_sign = if param == 0 { 1.0 } else { -1.0 };
        let frame_sign = if self.f_index == 0 { 1.0 } else { -1.0 };
        Ok(h * (form_sign * frame_sign) / g[q])
    }

    pub fn curve_point(
        &self,
        chart: usize,
        w: &[Complex64],
        param: usize,
    ) -> Result<CurvePoint, GeomError> {
        let kappa = self.kappa(chart, w, param)?;
        Ok(CurvePoint {
            param,
            kappa,
            psi_over_det_ds: self.psi_over_det_ds(chart, w, param)?,
            r_restricted: self.r_vi_s(chart, w)?.restrict(param, kappa),
        })
    }
}
