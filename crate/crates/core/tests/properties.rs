use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::sync::OnceLock;
use strata_sigma::abel::AbelMap;
use strata_sigma::addition::stratum_addition_sides;
use strata_sigma::curve::{CurveSpec, Sheet};
use strata_sigma::periods::compute_periods;
use strata_sigma::scaled::Scaled;
use strata_sigma::sigma::{lattice_decompose, natural_index, SigmaContext};
use strata_sigma::theta::{theta, Characteristic, ThetaQuery};

struct Fixture {
    curve: CurveSpec,
    ctx: SigmaContext,
}

fn fixture(lam: &[f64]) -> Fixture {
    let curve = CurveSpec::from_real(lam).unwrap();
    let pd = compute_periods(&curve).unwrap();
    let ctx = SigmaContext::new(&curve, &pd).unwrap();
    Fixture { curve, ctx }
}

fn genus_two() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| fixture(&[0.0, 9.0, 0.0, -10.0, 0.0]))
}

fn genus_three() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| fixture(&[0.0, -36.0, 0.0, 49.0, 0.0, -14.0, 0.0]))
}

fn fixtures() -> [&'static Fixture; 2] {
    [genus_two(), genus_three()]
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn lattice_point(f: &Fixture, a: &[f64], b: &[f64]) -> Vec<C64> {
    let g = f.ctx.genus();
    f.ctx.periods.lattice_vector(&a[..g], &b[..g]).iter().copied().collect()
}

/// A point with `|x|` between 1.2 and 3 times the largest branch modulus.
fn curve_point(f: &Fixture, r: f64, phi: f64, plus: bool) -> strata_sigma::curve::DivisorPoint {
    let m = f.curve.max_branch_modulus();
    let sheet = if plus { Sheet::Plus } else { Sheet::Minus };
    f.curve.point(C64::from_polar(m * (1.2 + 1.8 * r), phi), sheet)
}

fn is_integral(v: &[f64], tol: f64) -> bool {
    v.iter().all(|x| (x - x.round()).abs() < tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaled_products_match_plain_arithmetic(
        a in (-3.0f64..3.0, -3.0f64..3.0), b in (-3.0f64..3.0, -3.0f64..3.0), s in -50.0f64..50.0
    ) {
        let za = C64::new(a.0, a.1);
        let zb = C64::new(b.0, b.1);
        prop_assume!(za.norm() > 1e-3 && zb.norm() > 1e-3);
        let x = Scaled::new(za, s);
        let y = Scaled::new(zb, -s);
        prop_assert!(rel((x * y).to_complex(), za * zb) < 1e-13);
        prop_assert!(rel((x / Scaled::new(zb, s)).to_complex(), za / zb) < 1e-13);
        prop_assert!(rel(x.add(&y).to_complex(), y.add(&x).to_complex()) < 1e-15);
    }

    #[test]
    fn natural_index_is_the_stated_progression(g in 1usize..9, n in 0usize..10) {
        let r = natural_index(g, n);
        if n > g + 1 {
            prop_assert!(r.is_err());
        } else {
            let idx = r.unwrap();
            if n == 0 {
                prop_assert!(idx.is_sentinel());
            } else if n >= g {
                prop_assert!(idx.indices.is_empty());
            } else {
                prop_assert_eq!(idx.indices[0], n + 1);
                prop_assert!(idx.indices.windows(2).all(|w| w[1] == w[0] + 2));
                let last = *idx.indices.last().unwrap();
                prop_assert_eq!(last, if (g - n) % 2 == 1 { g } else { g - 1 });
            }
        }
    }

    #[test]
    fn theta_shifts_by_integers_and_modulus(
        z in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 2),
        k in 0usize..2,
        odd in any::<bool>(),
    ) {
        let f = genus_two();
        let t: &DMatrix<C64> = &f.ctx.periods.modulus;
        let chr = if odd {
            Characteristic::new(vec![0.5, 0.5], vec![0.5, 0.0])
        } else {
            Characteristic::new(vec![0.5, 0.0], vec![0.0, 0.5])
        };
        let z: Vec<C64> = z.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let eval = |w: &[C64]| theta(&ThetaQuery { z: w, modulus: t, characteristic: &chr, eps: 1e-15, derivatives: &[] }).unwrap().to_complex();
        let base = eval(&z);
        let mut zi = z.clone();
        zi[k] += 1.0;
        let want = base * C64::new(0.0, 2.0 * std::f64::consts::PI * chr.a[k]).exp();
        prop_assert!(rel(eval(&zi), want) < 1e-12);
        let zt: Vec<C64> = (0..2).map(|i| z[i] + t[(i, k)]).collect();
        let expo = C64::new(0.0, -std::f64::consts::PI) * t[(k, k)] - C64::new(0.0, 2.0 * std::f64::consts::PI) * (z[k] + chr.b[k]);
        prop_assert!(rel(eval(&zt), base * expo.exp()) < 1e-12);
    }

    #[test]
    fn lattice_coordinates_round_trip(a in prop::collection::vec(-2.0f64..2.0, 3), b in prop::collection::vec(-2.0f64..2.0, 3)) {
        for f in fixtures() {
            let g = f.ctx.genus();
            let u = lattice_point(f, &a, &b);
            let (p, q) = lattice_decompose(&u, &f.ctx.periods).unwrap();
            for i in 0..g {
                prop_assert!((p[i] - a[i]).abs() < 1e-10 && (q[i] - b[i]).abs() < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sigma_obeys_translation_law_for_lattice_combinations(
        a in prop::collection::vec(-0.5f64..0.5, 3),
        b in prop::collection::vec(-0.5f64..0.5, 3),
        l1 in prop::collection::vec(-2i64..3, 3),
        l2 in prop::collection::vec(-2i64..3, 3),
    ) {
        for f in fixtures() {
            let g = f.ctx.genus();
            let direct = f.ctx.clone().with_reduction(false);
            let u = lattice_point(f, &a, &b);
            let ell = f.ctx.periods.lattice_vector(
                &l1[..g].iter().map(|&v| v as f64).collect::<Vec<_>>(),
                &l2[..g].iter().map(|&v| v as f64).collect::<Vec<_>>(),
            );
            let shifted: Vec<C64> = (0..g).map(|i| u[i] + ell[i]).collect();
            let lhs = direct.sigma(&shifted).unwrap();
            let rhs = f.ctx.transform_factor(&u, &l1[..g], &l2[..g]) * direct.sigma(&u).unwrap();
            prop_assert!(lhs.sub(&rhs).abs() / lhs.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_shift_has_unit_factor(a in prop::collection::vec(-0.5f64..0.5, 3), b in prop::collection::vec(-0.5f64..0.5, 3)) {
        for f in fixtures() {
            let g = f.ctx.genus();
            let u = lattice_point(f, &a, &b);
            let one = f.ctx.transform_factor(&u, &vec![0; g], &vec![0; g]).to_complex();
            prop_assert!((one - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn wp_is_symmetric_and_periodic(a in prop::collection::vec(-0.45f64..0.45, 3), b in prop::collection::vec(-0.45f64..0.45, 3), k in 0usize..6) {
        for f in fixtures() {
            let g = f.ctx.genus();
            let u = lattice_point(f, &a, &b);
            let mut l1 = vec![0.0; g];
            let mut l2 = vec![0.0; g];
            if k % 2 == 0 { l1[(k / 2) % g] = 1.0 } else { l2[(k / 2) % g] = -1.0 }
            let ell = f.ctx.periods.lattice_vector(&l1, &l2);
            let shifted: Vec<C64> = (0..g).map(|i| u[i] + ell[i]).collect();
            for i in 1..=g {
                for j in i..=g {
                    let w = f.ctx.wp(&u, i, j).unwrap();
                    prop_assert!(rel(w, f.ctx.wp(&u, j, i).unwrap()) < 1e-10);
                    prop_assert!(rel(w, f.ctx.wp(&shifted, i, j).unwrap()) < 1e-8);
                }
            }
        }
    }

    #[test]
    fn involution_negates_modulo_lattice(r in 0.0f64..1.0, phi in 0.0f64..6.28, plus in any::<bool>(), angle in 0.0f64..6.28) {
        for f in fixtures() {
            let map = AbelMap::new(&f.curve);
            let p = curve_point(f, r, phi, plus);
            let u = map.point_via(&p, angle).unwrap();
            let v = map.point(&p.involution()).unwrap();
            let sum: Vec<C64> = u.iter().zip(v.iter()).map(|(a, b)| a + b).collect();
            let (s1, s2) = lattice_decompose(&sum, &f.ctx.periods).unwrap();
            prop_assert!(is_integral(&s1, 1e-8) && is_integral(&s2, 1e-8));
        }
    }

    #[test]
    fn routes_differ_by_lattice_vectors(r in 0.0f64..1.0, phi in 0.0f64..6.28, plus in any::<bool>(), angle in 0.0f64..6.28) {
        for f in fixtures() {
            let map = AbelMap::new(&f.curve);
            let p = curve_point(f, r, phi, plus);
            let u = map.point(&p).unwrap();
            let w = map.point_via(&p, angle).unwrap();
            let d: Vec<C64> = u.iter().zip(w.iter()).map(|(a, b)| a - b).collect();
            let (s1, s2) = lattice_decompose(&d, &f.ctx.periods).unwrap();
            prop_assert!(is_integral(&s1, 1e-8) && is_integral(&s2, 1e-8));
        }
    }

    #[test]
    fn divisor_image_is_additive(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..6.28, any::<bool>()), 3)) {
        let f = genus_three();
        let map = AbelMap::new(&f.curve);
        let ps: Vec<_> = pts.iter().map(|&(r, phi, s)| curve_point(f, r, phi, s)).collect();
        prop_assume!(strata_sigma::abel::check_generic(&f.curve, &ps).is_ok());
        let total = map.divisor(&ps).unwrap();
        let mut sum = vec![C64::new(0.0, 0.0); 3];
        for p in &ps {
            for (s, v) in sum.iter_mut().zip(map.point(p).unwrap()) {
                *s += v;
            }
        }
        for i in 0..3 {
            prop_assert!((total[i] - sum[i]).norm() <= 1e-10 * (1.0 + sum[i].norm()));
        }
    }

    #[test]
    fn stratum_ratio_is_symmetric_in_each_group(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..6.28, any::<bool>()), 4)) {
        let f = genus_three();
        let map = AbelMap::new(&f.curve);
        let ps: Vec<_> = pts.iter().map(|&(r, phi, s)| curve_point(f, r, phi, s)).collect();
        prop_assume!(strata_sigma::abel::check_generic(&f.curve, &ps).is_ok());
        prop_assume!(ps.iter().enumerate().all(|(i, p)| ps[..i].iter().all(|q| (q.x - p.x).norm() > 0.5)));
        let (a, _) = stratum_addition_sides(&f.ctx, &map, &ps[..2], &ps[2..]).unwrap();
        let (b, _) = stratum_addition_sides(&f.ctx, &map, &[ps[1], ps[0]], &[ps[3], ps[2]]).unwrap();
        prop_assert!(rel(a, b) < 1e-10);
    }
}
