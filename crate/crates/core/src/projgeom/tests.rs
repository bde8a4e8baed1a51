use super::*;
use crate::polycore::{parse_poly, random_homogeneous};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn geometry(
    n: usize,
    degrees: &[u32],
    section: &[&str],
    psi: &str,
    metric: MetricSpec,
) -> Geometry {
    let bundle = BundleSpec::new(n, degrees.to_vec()).unwrap();
    let comps = section
        .iter()
        .map(|s| parse_poly(s, n + 1).unwrap())
        .collect();
    let section = SectionSpec::new(&bundle, comps).unwrap();
    let psi = PsiSpec::new(&bundle, parse_poly(psi, n + 1).unwrap()).unwrap();
    Geometry::new(bundle, section, psi, metric).unwrap()
}

fn perturbed(eps: f64, q: &str) -> MetricSpec {
    MetricSpec::Perturbed {
        epsilon: eps,
        pair: (0, 1),
        q: parse_poly(q, 3).unwrap(),
        f_index: 0,
    }
}

fn curve_case(eps: f64) -> Geometry {
    let metric = if eps == 0.0 {
        MetricSpec::FubiniStudy
    } else {
        perturbed(eps, "z0^2 + (0.3+0.2i)*z1*z2 - 0.5i*z2^2 + 0.4*z0*z1")
    };
    geometry(
        2,
        &[2, 2],
        &["z1^2 + 0.7*z2^2 - z0^2 + 0.3*z0*z1", "0"],
        "z0 + 2*z1 - 0.5i*z2",
        metric,
    )
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Wirtinger derivatives `(∂_k F, ∂_{k̄} F)` of a matrix-valued function by
/// central differences.
fn wirtinger<F>(f: F, w: &[Complex64], k: usize, h: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>)
where
    F: Fn(&[Complex64]) -> DMatrix<Complex64>,
{
    let shift = |d: Complex64| {
        let mut v = w.to_vec();
        v[k] += d;
        f(&v)
    };
    let dx = (shift(c(h, 0.0)) - shift(c(-h, 0.0))) / c(2.0 * h, 0.0);
    let dy = (shift(c(0.0, h)) - shift(c(0.0, -h))) / c(2.0 * h, 0.0);
    let d = (&dx - &dy * I) / c(2.0, 0.0);
    let db = (&dx + &dy * I) / c(2.0, 0.0);
    (d, db)
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[test]
fn validation() {
    assert!(BundleSpec::new(2, vec![1]).is_err());
    assert!(BundleSpec::new(1, vec![0]).is_err());
    let b = BundleSpec::new(2, vec![1, 1]).unwrap();
    assert!(PsiSpec::new(&b, parse_poly("1", 3).unwrap()).is_err());
    let b = BundleSpec::new(2, vec![2, 2]).unwrap();
    assert!(PsiSpec::new(&b, parse_poly("z0^2", 3).unwrap()).is_err());
    assert!(PsiSpec::new(&b, parse_poly("z0", 3).unwrap()).is_ok());
    assert!(SectionSpec::new(
        &b,
        vec![parse_poly("0", 3).unwrap(), parse_poly("0", 3).unwrap()]
    )
    .is_err());
    assert!(SectionSpec::new(
        &b,
        vec![parse_poly("z0", 3).unwrap(), parse_poly("z1^2", 3).unwrap()]
    )
    .is_err());
}

#[test]
fn perturbed_metric_validation() {
    let bundle = BundleSpec::new(2, vec![2, 2]).unwrap();
    let section = SectionSpec::new(
        &bundle,
        vec![
            parse_poly("z1^2 - z0^2", 3).unwrap(),
            parse_poly("0", 3).unwrap(),
        ],
    )
    .unwrap();
    let psi = PsiSpec::new(&bundle, parse_poly("z0", 3).unwrap()).unwrap();
    let bad_q = MetricSpec::Perturbed {
        epsilon: 0.1,
        pair: (0, 1),
        q: parse_poly("z0", 3).unwrap(),
        f_index: 0,
    };
    assert!(matches!(
        Geometry::new(bundle.clone(), section.clone(), psi.clone(), bad_q),
        Err(GeomError::InvalidMetric(_))
    ));
    let huge = MetricSpec::Perturbed {
        epsilon: 50.0,
        pair: (0, 1),
        q: parse_poly("z0^2", 3).unwrap(),
        f_index: 0,
    };
    let res = Geometry::new(bundle, section, psi, huge);
    assert!(
        matches!(res, Err(GeomError::NotPositiveDefinite(_))),
        "{res:?}"
    );
}

#[test]
fn fubini_study_metric_examples() {
    let g = geometry(1, &[2], &["z1^2 - z0^2"], "1", MetricSpec::FubiniStudy);
    let h = g.metric_matrix(0, &[c(0.0, 0.0)]).unwrap();
    assert_eq!(h[(0, 0)], c(1.0, 0.0));

    let g = geometry(
        2,
        &[1, 2],
        &["z1", "z2^2 - z0^2"],
        "0",
        MetricSpec::FubiniStudy,
    );
    let w = [c(0.6, 0.0), c(0.0, 0.8)];
    let h = g.metric_matrix(0, &w).unwrap();
    assert!((h[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    assert!((h[(1, 1)] - c(0.25, 0.0)).norm() < 1e-15);
    assert_eq!(h[(0, 1)], c(0.0, 0.0));
}

#[test]
fn perturbed_metric_is_hermitian_and_orthogonal_on_z() {
    let g = curve_case(0.05);
    let mut r = rng(3);
    for _ in 0..100 {
        let p = sample_fs_point(2, &mut r);
        let h = g.metric_matrix(p.chart(), &p.preferred_affine()).unwrap();
        assert!(max_abs(&(&h - h.adjoint())) < 1e-15);
        assert!(h[(0, 1)].norm() > 0.0);
    }
    // f = w1^2 + 0.7 w2^2 - 1 + 0.3 w1 vanishes at w1 = 1, w2 = sqrt(-0.3/0.7)
    let w = [c(1.0, 0.0), c(0.0, (0.3f64 / 0.7).sqrt())];
    let h = g.metric_matrix(0, &w).unwrap();
    assert!(h[(0, 1)].norm() < 1e-15 && h[(1, 0)].norm() < 1e-15);
}

#[test]
fn section_norm_examples() {
    let g = geometry(1, &[2], &["z0*z1"], "1", MetricSpec::FubiniStudy);
    let mut r = rng(4);
    for _ in 0..50 {
        let w = [random_c64(&mut r)];
        let (_, norm) = g.s_value_and_norm(0, &w).unwrap();
        let a = w[0].norm_sqr();
        assert!((norm - a / (1.0 + a).powi(2)).abs() < 1e-14);
    }
    let g = geometry(1, &[2], &["z1^2 - z0^2"], "1", MetricSpec::FubiniStudy);
    let (s, norm) = g.s_value_and_norm(0, &[c(1.0, 0.0)]).unwrap();
    assert_eq!(s[0], c(0.0, 0.0));
    assert_eq!(norm, 0.0);
}

fn chart_pairs(g: &Geometry, p: &ProjPoint) -> Vec<(usize, Vec<Complex64>)> {
    (0..=g.n())
        .filter_map(|a| p.affine(a).map(|w| (a, w)))
        .collect()
}

#[test]
fn section_norm_is_chart_invariant() {
    let mut r = rng(5);
    let geoms = [
        geometry(1, &[2], &["z0*z1 + 0.3*z1^2"], "1", MetricSpec::FubiniStudy),
        curve_case(0.05),
    ];
    for g in &geoms {
        for _ in 0..500 {
            let p = sample_fs_point(g.n(), &mut r);
            let vals: Vec<f64> = chart_pairs(g, &p)
                .iter()
                .map(|(a, w)| g.s_value_and_norm(*a, w).unwrap().1)
                .collect();
            for v in &vals {
                assert!(
                    (v - vals[0]).abs() <= 1e-10 * vals[0].abs().max(1e-300) + 1e-15,
                    "{vals:?}"
                );
            }
        }
    }
}

#[test]
fn metric_jet_matches_finite_differences() {
    let g = curve_case(0.05);
    let mut r = rng(6);
    for _ in 0..100 {
        let p = sample_fs_point(2, &mut r);
        let (a, w) = (p.chart(), p.preferred_affine());
        let jet = g.metric_jet(a, &w).unwrap();
        for k in 0..2 {
            let (d, db) = wirtinger(|v| g.metric_matrix(a, v).unwrap(), &w, k, 1e-5);
            assert!(max_abs(&(&d - &jet.dh[k])) < 1e-8);
            assert!(max_abs(&(&db - &jet.dh_bar[k])) < 1e-8);
            for ka in 0..2 {
                let (_, ddb) =
                    wirtinger(|v| g.metric_jet(a, v).unwrap().dh[ka].clone(), &w, k, 1e-5);
                assert!(max_abs(&(&ddb - &jet.ddh[ka][k])) < 1e-8);
            }
        }
    }
}

#[test]
fn s_form_matches_finite_differences() {
    let g = curve_case(0.05);
    let mut r = rng(7);
    let t = 0.7;
    for _ in 0..200 {
        let p = sample_fs_point(2, &mut r);
        let (a, w) = (p.chart(), p.preferred_affine());
        let (scalar, one) = g.s_form_parts(a, &w, t).unwrap();
        let (_, norm) = g.s_value_and_norm(a, &w).unwrap();
        assert!((scalar - c(-norm / (2.0 * t), 0.0)).norm() < 1e-14);
        let inner = |v: &[Complex64]| {
            let (s, _) = g.s_value_and_norm(a, v).unwrap();
            let h = g.metric_matrix(a, v).unwrap();
            DMatrix::from_fn(2, 1, |i, _| {
                (0..2).map(|j| h[(i, j)] * s[j].conj()).sum::<Complex64>()
            })
        };
        for b in 0..2 {
            let (_, db) = wirtinger(inner, &w, b, 1e-5);
            for i in 0..2 {
                let expected = db[(i, 0)] * (-1.0 / (2.0 * t));
                assert!(
                    (one[b][i] - expected).norm() < 1e-6,
                    "{} vs {}",
                    one[b][i],
                    expected
                );
            }
        }
    }
}

#[test]
fn s_form_at_a_zero() {
    // FS, n = 2: at a zero, A[b][i] = -(1/2t) h_i conj(∂_b s_i)
    let g = geometry(
        2,
        &[1, 2],
        &["z1 - z0", "z2^2 - 4*z0^2"],
        "0",
        MetricSpec::FubiniStudy,
    );
    let w = [c(1.0, 0.0), c(2.0, 0.0)];
    let t = 0.25;
    let (scalar, one) = g.s_form_parts(0, &w, t).unwrap();
    assert_eq!(scalar, c(0.0, 0.0));
    let rho: f64 = 1.0 + 1.0 + 4.0;
    let ds = g.ds(0, &w).unwrap();
    let h = [rho.powi(-1), rho.powi(-2)];
    for b in 0..2 {
        for i in 0..2 {
            let expected = ds[(i, b)].conj() * (-h[i] / (2.0 * t));
            assert!((one[b][i] - expected).norm() < 1e-15);
        }
    }
    assert!(g.s_form(0, &w, 0.0).is_err());
    assert!(g.s_form(0, &w, -1.0).is_err());
}

#[test]
fn ds_examples() {
    let g = geometry(
        2,
        &[2, 2],
        &["z0*z1", "z0*z2"],
        "z0",
        MetricSpec::FubiniStudy,
    );
    let j = g.ds_on_z(0, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert_eq!(j, DMatrix::identity(2, 2));
    let g = geometry(
        2,
        &[2, 1],
        &["z1^2 - z0^2", "z2"],
        "0",
        MetricSpec::FubiniStudy,
    );
    let j = g.ds_on_z(0, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert_eq!(
        j,
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(1.0, 0.0)]))
    );
    let g = curve_case(0.0);
    let w = [c(1.0, 0.0), c(0.0, (0.3f64 / 0.7).sqrt())];
    let j = g.ds_on_z(0, &w).unwrap();
    assert_eq!(j[(1, 0)], c(0.0, 0.0));
    assert_eq!(j[(1, 1)], c(0.0, 0.0));
    assert_eq!(j.rank(1e-12), 1);
}

#[test]
fn fubini_study_curvature() {
    for d in 2..=5u32 {
        let sect = format!("z1^{d}");
        let psi = format!("z0^{}", d - 2);
        let g = geometry(1, &[d], &[sect.as_str()], &psi, MetricSpec::FubiniStudy);
        let r = g.chern_curvature(0, &[c(0.0, 0.0)]).unwrap();
        assert!((r.get(0, 0, 0, 0) - c(d as f64, 0.0)).norm() < 1e-14);
        let w = [c(0.3, -0.4)];
        let r = g.chern_curvature(0, &w).unwrap();
        assert!((r.get(0, 0, 0, 0) - c(d as f64 / 1.25f64.powi(2), 0.0)).norm() < 1e-14);
    }
    let g = geometry(2, &[1, 3], &["z1", "z2^3"], "z0", MetricSpec::FubiniStudy);
    let mut rr = rng(8);
    for _ in 0..100 {
        let p = sample_fs_point(2, &mut rr);
        let r = g.chern_curvature(p.chart(), &p.preferred_affine()).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(r.get(0, 1, a, b), c(0.0, 0.0));
                assert_eq!(r.get(1, 0, a, b), c(0.0, 0.0));
            }
        }
    }
}

/// Curvature from finite differences of the metric alone.
fn curvature_oracle(g: &Geometry, chart: usize, w: &[Complex64]) -> CurvatureValue {
    let n = g.n();
    let h = 1e-4;
    let theta = |v: &[Complex64], a: usize| {
        let gm = g.metric_matrix(chart, v).unwrap().transpose();
        let (d, _) = wirtinger(|u| g.metric_matrix(chart, u).unwrap().transpose(), v, a, h);
        gm.try_inverse().unwrap() * d
    };
    let mut out = CurvatureValue::zero(n);
    for a in 0..n {
        for b in 0..n {
            let (_, db) = wirtinger(|v| theta(v, a), w, b, h);
            for i in 0..n {
                for j in 0..n {
                    out.set(i, j, a, b, -db[(i, j)]);
                }
            }
        }
    }
    out
}

#[test]
fn curvature_matches_finite_difference_oracle() {
    let g = curve_case(0.05);
    let mut r = rng(9);
    for _ in 0..100 {
        let p = sample_fs_point(2, &mut r);
        let (a, w) = (p.chart(), p.preferred_affine());
        let analytic = g.chern_curvature(a, &w).unwrap();
        let oracle = curvature_oracle(&g, a, &w);
        for i in 0..2 {
            for j in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        let d = (analytic.get(i, j, x, y) - oracle.get(i, j, x, y)).norm();
                        assert!(d < 1e-5, "R[{i}][{j}][{x}][{y}] off by {d}");
                    }
                }
            }
        }
    }
}

#[test]
fn perturbed_curvature_tends_to_fubini_study() {
    let fs = curve_case(0.0);
    let pert = curve_case(1e-12);
    let mut r = rng(10);
    for _ in 0..100 {
        let p = sample_fs_point(2, &mut r);
        let (a, w) = (p.chart(), p.preferred_affine());
        let r0 = fs.chern_curvature(a, &w).unwrap();
        let r1 = pert.chern_curvature(a, &w).unwrap();
        let mut diff: f64 = 0.0;
        for idx in 0..16 {
            let (i, j, x, y) = (idx >> 3, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1);
            diff = diff.max((r0.get(i, j, x, y) - r1.get(i, j, x, y)).norm());
        }
        assert!(diff <= 1e-8);
    }
}

#[test]
fn curvature_is_metric_skew() {
    // h(R e_j, e_k) + conj-swap: M_jk(a,b) = Σ_i R[i][j][a][b] H_ik is Hermitian
    // under (j,a) <-> (k,b) with conjugation.
    let g = curve_case(0.05);
    let mut r = rng(11);
    for _ in 0..100 {
        let p = sample_fs_point(2, &mut r);
        let (a, w) = (p.chart(), p.preferred_affine());
        let rv = g.chern_curvature(a, &w).unwrap();
        let h = g.metric_matrix(a, &w).unwrap();
        let m = |j: usize, k: usize, x: usize, y: usize| -> Complex64 {
            (0..2).map(|i| rv.get(i, j, x, y) * h[(i, k)]).sum()
        };
        for j in 0..2 {
            for k in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        let d = (m(j, k, x, y) - m(k, j, y, x).conj()).norm();
                        assert!(d < 1e-8, "skew defect {d}");
                    }
                }
            }
        }
    }
}

#[test]
fn transition_jacobian_matches_finite_differences() {
    let mut r = rng(12);
    for _ in 0..50 {
        let p = sample_fs_point(3, &mut r);
        for from in 0..4 {
            for to in 0..4 {
                let j = transition_jacobian(&p, from, to).unwrap();
                let w = p.affine(from).unwrap();
                let map = |v: &[Complex64]| {
                    let q = ProjPoint::from_affine(from, v);
                    DMatrix::from_vec(3, 1, q.affine(to).unwrap())
                };
                for k in 0..3 {
                    let (d, db) = wirtinger(map, &w, k, 1e-6);
                    assert!(max_abs(&db) < 1e-7);
                    for row in 0..3 {
                        assert!(
                            (d[(row, 0)] - j[(row, k)]).norm() < 1e-7 * (1.0 + j[(row, k)].norm())
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn psi_transforms_as_a_section() {
    // ψ^{(α)} = ψ^{(0)} · det(∂w^{(0)}/∂w^{(α)}) · Π (z_0/z_α)^{d_i}
    let mut r = rng(13);
    for (n, degrees) in [(1usize, vec![3u32]), (2, vec![2, 3]), (3, vec![2, 2, 2])] {
        let bundle = BundleSpec::new(n, degrees.clone()).unwrap();
        let comps = degrees
            .iter()
            .map(|&d| random_homogeneous(n + 1, d, &mut r))
            .collect();
        let section = SectionSpec::new(&bundle, comps).unwrap();
        let h = random_homogeneous(n + 1, bundle.psi_degree() as u32, &mut r);
        let psi = PsiSpec::new(&bundle, h).unwrap();
        let g = Geometry::new(bundle, section, psi, MetricSpec::FubiniStudy).unwrap();
        for _ in 0..50 {
            let p = sample_fs_point(n, &mut r);
            let psi0 = g.psi_coefficient(0, &p.affine(0).unwrap()).unwrap();
            for alpha in 1..=n {
                let psia = g.psi_coefficient(alpha, &p.affine(alpha).unwrap()).unwrap();
                let jac = transition_jacobian(&p, alpha, 0).unwrap().determinant();
                let ratio = p.z()[0] / p.z()[alpha];
                let frame: Complex64 = degrees.iter().map(|&d| ratio.powu(d)).product();
                let expected = psi0 * jac * frame;
                assert!((psia - expected).norm() <= 1e-10 * expected.norm().max(1e-300));
            }
        }
    }
}

#[test]
fn top_density_is_chart_invariant() {
    let mut r = rng(14);
    let geoms = [
        geometry(1, &[2], &["z1^2 - z0^2"], "1", MetricSpec::FubiniStudy),
        geometry(
            2,
            &[2, 2],
            &["z1^2 - z0^2", "z2^2 - 4*z0^2"],
            "z0 + z1 + z2",
            MetricSpec::FubiniStudy,
        ),
        curve_case(0.05),
    ];
    for g in &geoms {
        for _ in 0..200 {
            let p = sample_fs_point(g.n(), &mut r);
            let t = 0.5 + r.random::<f64>();
            let d0 = g.top_density(0, &p.affine(0).unwrap(), t).unwrap();
            for alpha in 1..=g.n() {
                let da = g.top_density(alpha, &p.affine(alpha).unwrap(), t).unwrap();
                let jac = transition_jacobian(&p, 0, alpha)
                    .unwrap()
                    .determinant()
                    .norm_sqr();
                let back = da * jac;
                assert!(
                    (back - d0).norm() <= 1e-9 * d0.norm().max(1e-200),
                    "{back} vs {d0}"
                );
            }
        }
    }
}

#[test]
fn fast_top_form_matches_graded_algebra() {
    let mut r = rng(15);
    let geoms = [
        geometry(1, &[2], &["z1^2 - z0^2"], "1", MetricSpec::FubiniStudy),
        curve_case(0.05),
        geometry(
            3,
            &[2, 2, 2],
            &["z1^2 - z0^2", "z2^2 - z0*z1", "z3^2 - z2*z0"],
            "z0*z3 + z1^2",
            MetricSpec::FubiniStudy,
        ),
    ];
    for g in &geoms {
        for _ in 0..100 {
            let p = sample_fs_point(g.n(), &mut r);
            let (a, w) = (p.chart(), p.preferred_affine());
            let slow = g.top_form(a, &w, 0.8).unwrap();
            let fast = g.top_form_fast(a, &w, 0.8).unwrap();
            assert!((slow - fast).norm() <= 1e-12 * slow.norm().max(1e-300));
        }
    }
}

/// A point of `Z = {f = 0}` near `w1` in chart 0, by Newton in `w2`.
fn point_on_curve(ex: &CurveLocus, w1: Complex64, start: Complex64) -> Option<[Complex64; 2]> {
    let mut w = [w1, start];
    for _ in 0..60 {
        let (v, g) = ex.f_grad(0, &w).unwrap();
        if g[1].norm() < 1e-8 {
            return None;
        }
        w[1] -= v / g[1];
    }
    let (v, _) = ex.f_grad(0, &w).unwrap();
    (v.norm() < 1e-12).then_some(w)
}

fn curve_points(ex: &CurveLocus, count: usize, seed: u64) -> Vec<[Complex64; 2]> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        if let Some(p) = point_on_curve(ex, random_c64(&mut r), random_c64(&mut r) * 2.0) {
            out.push(p);
        }
    }
    out
}

#[test]
fn r_vi_s_vanishes_for_fubini_study() {
    let g = curve_case(0.0);
    let ex = CurveLocus::new(&g).unwrap();
    for w in curve_points(&ex, 100, 16) {
        let r = ex.r_vi_s(0, &w).unwrap();
        assert_eq!(r.beta, [c(0.0, 0.0); 2]);
    }
}

#[test]
fn r_vi_s_is_nonzero_and_well_defined_for_perturbed_metric() {
    let g = curve_case(0.05);
    let ex = CurveLocus::new(&g).unwrap();
    let mut max_val: f64 = 0.0;
    for w in curve_points(&ex, 200, 17) {
        let r = ex.r_vi_s(0, &w).unwrap();
        max_val = max_val.max(r.restrict(0, ex.kappa(0, &w, 0).unwrap()).norm());
        for param in 0..2 {
            assert!(ex.tangent_curvature(0, &w, param).unwrap().norm() < 1e-8);
        }
        // changing ν by a tangent vector leaves the restricted form unchanged
        let kappa = ex.kappa(0, &w, 0).unwrap();
        let rv = g.chern_curvature(0, &w).unwrap();
        let tau = [c(1.0, 0.0), kappa];
        let shift: Complex64 = (0..2)
            .flat_map(|a| (0..2).map(move |b| (a, b)))
            .map(|(a, b)| rv.get(0, 1, a, b) * tau[a] * [c(1.0, 0.0), kappa][b].conj())
            .sum();
        assert!(shift.norm() < 1e-8);
    }
    assert!(max_val > 1e-4, "max |R| = {max_val}");
}

#[test]
fn r_vi_s_is_linear_in_epsilon() {
    let g1 = curve_case(0.01);
    let g5 = curve_case(0.05);
    let ex1 = CurveLocus::new(&g1).unwrap();
    let ex5 = CurveLocus::new(&g5).unwrap();
    for w in curve_points(&ex1, 50, 18) {
        let k = ex1.kappa(0, &w, 0).unwrap();
        let a1 = ex1.r_vi_s(0, &w).unwrap().restrict(0, k);
        let a5 = ex5.r_vi_s(0, &w).unwrap().restrict(0, k);
        assert!((a5 - a1 * 5.0).norm() <= 1e-9 * a5.norm().max(1e-12));
    }
}

#[test]
fn psi_over_det_ds_examples() {
    let g = geometry(
        2,
        &[1, 3],
        &["z2", "0"],
        "z0 + 2*z1 + 3*z2",
        MetricSpec::FubiniStudy,
    );
    let ex = CurveLocus::new(&g).unwrap();
    for x in [c(0.0, 0.0), c(0.5, -1.0), c(2.0, 3.0)] {
        let v = ex.psi_over_det_ds(0, &[x, c(0.0, 0.0)], 0).unwrap();
        assert!((v - (x * 2.0 + 1.0)).norm() < 1e-14);
    }
    // along the w1-axis ∂f/∂w1 = 0, so w2 cannot parameterize Z
    assert!(matches!(
        ex.psi_over_det_ds(0, &[c(1.0, 0.0), c(0.0, 0.0)], 1),
        Err(GeomError::NonTransversal(_))
    ));

    let g = curve_case(0.05);
    let ex = CurveLocus::new(&g).unwrap();
    for w in curve_points(&ex, 50, 19) {
        let c0 = ex.psi_over_det_ds(0, &w, 0).unwrap();
        let c1 = ex.psi_over_det_ds(0, &w, 1).unwrap();
        // c0 dw1 = c1 dw2 = c1 κ dw1
        assert!((c0 - c1 * ex.kappa(0, &w, 0).unwrap()).norm() <= 1e-12 * c0.norm());
        let doubled = ex.psi_over_det_ds(0, &w, 0).unwrap() * 2.0;
        assert!((doubled - c0 * 2.0).norm() == 0.0);
    }
}

#[test]
fn psi_over_det_ds_is_chart_invariant() {
    let g = curve_case(0.05);
    let ex = CurveLocus::new(&g).unwrap();
    let d_v = g.bundle().degrees[ex.v_index()];
    for w in curve_points(&ex, 100, 20) {
        let p = ProjPoint::from_affine(0, &w);
        let z = p.z();
        let grad = {
            let f = &g.section().components[ex.f_index()];
            (0..3)
                .map(|k| f.partial(k).unwrap().eval(z).unwrap())
                .collect::<Vec<_>>()
        };
        // homogeneous tangent T = z × ∇f
        let t = [
            z[1] * grad[2] - z[2] * grad[1],
            z[2] * grad[0] - z[0] * grad[2],
            z[0] * grad[1] - z[1] * grad[0],
        ];
        let dw =
            |alpha: usize, j: usize| (t[j] * z[alpha] - z[j] * t[alpha]) / (z[alpha] * z[alpha]);
        let coords = |alpha: usize| -> Vec<usize> { (0..3).filter(|&j| j != alpha).collect() };
        let c0 = ex.psi_over_det_ds(0, &w, 0).unwrap();
        let dw0 = dw(0, coords(0)[0]);
        for alpha in 1..3 {
            let wa = p.affine(alpha).unwrap();
            for param in 0..2 {
                let Ok(ca) = ex.psi_over_det_ds(alpha, &wa, param) else {
                    continue;
                };
                let dwa = dw(alpha, coords(alpha)[param]);
                let frame = (z[0] / z[alpha]).powu(d_v);
                let expected = c0 * frame * dw0 / dwa;
                assert!(
                    (ca - expected).norm() <= 1e-9 * expected.norm(),
                    "{ca} vs {expected}"
                );
            }
        }
    }
}

#[test]
fn curve_locus_requires_the_supported_shape() {
    let g = geometry(
        2,
        &[2, 2],
        &["z1^2 - z0^2", "z2^2 - z0^2"],
        "z0",
        MetricSpec::FubiniStudy,
    );
    assert!(matches!(
        CurveLocus::new(&g),
        Err(GeomError::Unsupported(_))
    ));
    let g = geometry(1, &[2], &["z1^2 - z0^2"], "1", MetricSpec::FubiniStudy);
    assert!(matches!(
        CurveLocus::new(&g),
        Err(GeomError::Unsupported(_))
    ));
}
