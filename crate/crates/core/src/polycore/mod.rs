//! Homogeneous polynomials over exact or floating complex coefficients.
//!
//! A degree-`d` section of `O(d)` on `P^n` is a homogeneous polynomial in
//! `z0..zn`; on the chart `z_a ≠ 0` it is represented by `F(z) / z_a^d`.

mod coeff;
mod parse;
mod poly;

use num_complex::Complex64;
use thiserror::Error;

pub use coeff::{gaussian_from_c64, rationalize, rationalize_c64, Coeff, GaussianRational};
pub use parse::{parse_homogeneous, parse_homogeneous_with_degree, parse_polynomial};
pub use poly::{
    monomials, random_c64, random_homogeneous, random_homogeneous_integer, AffinePoly, Exponent,
    FastPoly, HomogeneousPoly, Polynomial,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("inhomogeneous polynomial: found a term of degree {found}, expected {expected}")]
    Inhomogeneous { expected: u32, found: u32 },
    #[error("variable index z{index} out of range for {num_vars} variables")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: u32, got: u32 },
    #[error("polynomial is not divisible")]
    NotDivisible,
}

/// Parses a homogeneous polynomial with double-precision coefficients.
pub fn parse_poly(text: &str, num_vars: usize) -> Result<HomogeneousPoly<Complex64>, PolyError> {
    parse_homogeneous(text, num_vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_simple_quadric() {
        let p = parse_poly("z0^2 + z1*z2", 3).unwrap();
        assert_eq!(p.degree(), 2);
        let terms: Vec<_> = p.terms().map(|(e, c)| (e.clone(), *c)).collect();
        assert_eq!(terms.len(), 2);
        assert_eq!(p.poly().coeff(&[2, 0, 0]), c(1.0, 0.0));
        assert_eq!(p.poly().coeff(&[0, 1, 1]), c(1.0, 0.0));
    }

    #[test]
    fn cancellation_gives_empty_zero() {
        let p = parse_poly("z0 - z0", 1).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.terms().count(), 0);
    }

    #[test]
    fn rejects_inhomogeneous() {
        let err = parse_poly("z0^2 + z1", 2).unwrap_err();
        assert!(matches!(err, PolyError::Inhomogeneous { .. }));
    }

    #[test]
    fn rejects_out_of_range_variable() {
        let err = parse_poly("z3", 3).unwrap_err();
        assert_eq!(
            err,
            PolyError::VariableOutOfRange {
                index: 3,
                num_vars: 3
            }
        );
    }

    #[test]
    fn reports_syntax_position() {
        match parse_poly("z0 + * z1", 2).unwrap_err() {
            PolyError::Syntax { pos, .. } => assert_eq!(pos, 5),
            e => panic!("unexpected {e:?}"),
        }
        match parse_poly("(z0 + z1", 2).unwrap_err() {
            PolyError::Syntax { pos, .. } => assert_eq!(pos, 8),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            parse_poly("z0 $ z1", 2),
            Err(PolyError::Syntax { pos: 3, .. })
        ));
    }

    #[test]
    fn complex_and_rational_literals() {
        let p = parse_homogeneous::<GaussianRational>("(1/2 - 3i)*z0 + 2.5i*z1 + i*z1", 2).unwrap();
        let q = |a: i64, b: i64| num_rational::BigRational::new(a.into(), b.into());
        assert_eq!(
            p.poly().coeff(&[1, 0]),
            GaussianRational::new(q(1, 2), q(-3, 1))
        );
        assert_eq!(
            p.poly().coeff(&[0, 1]),
            GaussianRational::new(q(0, 1), q(7, 2))
        );
        let f = parse_poly("1e-3*z0 + 2E2*z1", 2).unwrap();
        assert_eq!(f.poly().coeff(&[1, 0]), c(1e-3, 0.0));
        assert_eq!(f.poly().coeff(&[0, 1]), c(200.0, 0.0));
    }

    #[test]
    fn eval_examples() {
        let p = parse_poly("z0*z1", 2).unwrap();
        assert_eq!(p.eval(&[c(2.0, 0.0), c(3.0, 0.0)]).unwrap(), c(6.0, 0.0));
        let p = parse_poly("z0^2+z1^2", 2).unwrap();
        assert_eq!(
            p.eval(&[c(0.0, 1.0), c(1.0, 0.0)]).unwrap(),
            Complex64::zero()
        );
        assert!(matches!(
            p.eval(&[c(1.0, 0.0)]),
            Err(PolyError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn partial_examples() {
        let p = parse_poly("z0^3", 2).unwrap();
        let d = p.partial(0).unwrap();
        assert_eq!(d.degree(), 2);
        assert_eq!(d.poly().coeff(&[2, 0]), c(3.0, 0.0));
        assert_eq!(d.terms().count(), 1);
        let p = parse_poly("z1^2", 2).unwrap();
        assert!(p.partial(0).unwrap().is_zero());
        assert!(matches!(
            p.partial(2),
            Err(PolyError::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn dehomogenize_examples() {
        let p = parse_poly("z0^2+z1^2", 2).unwrap();
        let q = p.dehomogenize(0).unwrap();
        assert_eq!(q, parse_polynomial::<Complex64>("1 + z0^2", 1).unwrap());
        let p = parse_poly("z1", 2).unwrap();
        let q = p.dehomogenize(1).unwrap();
        assert_eq!(q, Polynomial::constant(1, c(1.0, 0.0)));
        assert!(p.dehomogenize(2).is_err());
    }

    #[test]
    fn euler_identity_on_random_polys() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let nv = 2 + trial % 4;
            let deg = (trial % 6) as u32;
            let p = random_homogeneous(nv, deg, &mut rng);
            let z: Vec<_> = (0..nv).map(|_| random_c64(&mut rng)).collect();
            let lhs: Complex64 = (0..nv)
                .map(|k| z[k] * p.partial(k).unwrap().eval(&z).unwrap())
                .sum();
            let rhs = p.eval(&z).unwrap() * deg as f64;
            assert!(
                (lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()) * 10.0,
                "trial {trial}"
            );
        }
    }

    #[test]
    fn exact_division() {
        let f = parse_homogeneous::<GaussianRational>("z0 + 2*z1", 3).unwrap();
        let u = parse_homogeneous::<GaussianRational>("z1*z2 - 1/3*z0^2", 3).unwrap();
        let fu = f.mul(&u).unwrap();
        assert_eq!(fu.div_exact(&f).unwrap(), u);
        let g = parse_homogeneous::<GaussianRational>("z2^3", 3).unwrap();
        assert_eq!(g.div_exact(&f), Err(PolyError::NotDivisible));
    }

    #[test]
    fn leading_form_drops_z0() {
        let p = parse_poly("z0*z1 + z2^2 - 3*z1*z2", 3).unwrap();
        let l = p.leading_form();
        assert_eq!(l.num_vars(), 2);
        assert_eq!(l.poly(), parse_poly("z1^2 - 3*z0*z1", 2).unwrap().poly());
    }

    #[test]
    fn substitute_linear_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = random_homogeneous(3, 3, &mut rng);
        let a: Vec<Vec<Complex64>> = (0..3)
            .map(|_| (0..3).map(|_| random_c64(&mut rng)).collect())
            .collect();
        let q = p.substitute_linear(&a).unwrap();
        let y: Vec<_> = (0..3).map(|_| random_c64(&mut rng)).collect();
        let z: Vec<_> = (0..3)
            .map(|i| (0..3).map(|j| a[i][j] * y[j]).sum())
            .collect();
        let lhs = q.eval(&y).unwrap();
        let rhs = p.eval(&z).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn fast_poly_gradient_matches_partials() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_homogeneous(3, 4, &mut rng).dehomogenize(0).unwrap();
        let fp = FastPoly::new(&p);
        let w = [random_c64(&mut rng), random_c64(&mut rng)];
        let mut g = [Complex64::zero(); 2];
        let v = fp.value_grad(&w, &mut g);
        assert!((v - p.eval(&w).unwrap()).norm() < 1e-12);
        for k in 0..2 {
            let d = p.partial(k).unwrap().eval(&w).unwrap();
            assert!((g[k] - d).norm() < 1e-12);
        }
    }

    fn arb_c64() -> impl Strategy<Value = Complex64> {
        (-1e3f64..1e3, -1e3f64..1e3).prop_map(|(a, b)| Complex64::new(a, b))
    }

    fn arb_poly(nv: usize, deg: u32) -> impl Strategy<Value = HomogeneousPoly<Complex64>> {
        let mons = monomials(nv, deg);
        let len = mons.len();
        proptest::collection::vec((arb_c64(), proptest::bool::weighted(0.6)), len).prop_map(
            move |cs| {
                let terms = mons
                    .iter()
                    .cloned()
                    .zip(cs)
                    .filter(|(_, (_, keep))| *keep)
                    .map(|(e, (c, _))| (e, c));
                HomogeneousPoly::new(Polynomial::from_terms(nv, terms), deg).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(p in arb_poly(3, 3)) {
            let text = p.to_string();
            let q = parse_homogeneous_with_degree::<Complex64>(&text, 3, 3).unwrap();
            prop_assert_eq!(p, q);
        }

        #[test]
        fn exact_print_parse_round_trip(coeffs in proptest::collection::vec((-50i64..50, 1i64..9, -50i64..50), 6)) {
            let q = |a: i64, b: i64| num_rational::BigRational::new(a.into(), b.into());
            let terms = monomials(3, 2).into_iter().zip(coeffs).map(|(e, (a, b, im))| (e, GaussianRational::new(q(a, b), q(im, b))));
            let p = HomogeneousPoly::new(Polynomial::from_terms(3, terms), 2).unwrap();
            let back = parse_homogeneous_with_degree::<GaussianRational>(&p.to_string(), 3, 2).unwrap();
            prop_assert_eq!(p, back);
        }

        #[test]
        fn homogeneity(p in arb_poly(3, 4), z in proptest::collection::vec(arb_c64(), 3), lam in arb_c64()) {
            let scaled: Vec<_> = z.iter().map(|x| lam * x).collect();
            let lhs = p.eval(&scaled).unwrap();
            let rhs = lam.powu(4) * p.eval(&z).unwrap();
            let scale: f64 = p.terms().map(|(_, c)| c.norm()).sum::<f64>()
                * (lam.norm() * z.iter().map(|x| x.norm()).fold(1.0, f64::max)).powi(4);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1e-300));
        }

        #[test]
        fn distributive_exact(a in proptest::collection::vec(-9i64..9, 3), b in proptest::collection::vec(-9i64..9, 3), r in proptest::collection::vec(-9i64..9, 6)) {
            let mk = |v: &[i64], deg: u32| {
                let terms = monomials(3, deg).into_iter().zip(v).map(|(e, &x)| (e, GaussianRational::from_i64(x)));
                Polynomial::from_terms(3, terms)
            };
            let (p, q, s) = (mk(&a, 1), mk(&b, 1), mk(&r, 2));
            let lhs = p.add(&q).unwrap().mul(&s).unwrap();
            let rhs = p.mul(&s).unwrap().add(&q.mul(&s).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn distributive_float(p in arb_poly(3, 2), q in arb_poly(3, 2), r in arb_poly(3, 1), z in proptest::collection::vec(arb_c64(), 3)) {
            let lhs = p.add(&q).unwrap().mul(&r).unwrap();
            let rhs = p.mul(&r).unwrap().add(&q.mul(&r).unwrap()).unwrap();
            let (a, b) = (lhs.eval(&z).unwrap(), rhs.eval(&z).unwrap());
            let scale = 1e9 * z.iter().map(|x| x.norm()).fold(1.0, f64::max).powi(3);
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }

        #[test]
        fn dehomogenize_consistency(p in arb_poly(3, 3), w in proptest::collection::vec(arb_c64(), 2)) {
            let q = p.dehomogenize(0).unwrap();
            let z = [Complex64::new(1.0, 0.0), w[0], w[1]];
            let a = q.eval(&w).unwrap();
            let b = p.eval(&z).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }
}
