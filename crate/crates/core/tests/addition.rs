use num_complex::Complex64 as C64;
use std::sync::OnceLock;
use strata_sigma::abel::AbelMap;
use strata_sigma::addition::*;
use strata_sigma::curve::CurveSpec;
use strata_sigma::periods::compute_periods;
use strata_sigma::sampling::PointSampler;
use strata_sigma::sigma::SigmaContext;

struct Fixture {
    curve: CurveSpec,
    ctx: SigmaContext,
}

fn genus(g: usize) -> &'static Fixture {
    static F: [OnceLock<Fixture>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    F[g - 1].get_or_init(|| {
        let lam: &[f64] = match g {
            1 => &[0.0, -1.0, 0.0],
            2 => &[0.0, 9.0, 0.0, -10.0, 0.0],
            _ => &[0.0, -36.0, 0.0, 49.0, 0.0, -14.0, 0.0],
        };
        let curve = CurveSpec::from_real(lam).unwrap();
        let pd = compute_periods(&curve).unwrap();
        let ctx = SigmaContext::new(&curve, &pd).unwrap();
        Fixture { curve, ctx }
    })
}

#[test]
fn genus_two_single_points_give_the_coordinate_difference() {
    let f = genus(2);
    let map = AbelMap::new(&f.curve);
    let mut s = PointSampler::new(&f.curve, 21);
    for _ in 0..5 {
        let p = s.points(2);
        let (lhs, _) = stratum_addition_sides(&f.ctx, &map, &p[..1], &p[1..]).unwrap();
        assert!((lhs.norm() - (p[1].x - p[0].x).norm()).abs() <= 1e-6 * lhs.norm());
    }
}

#[test]
fn genus_two_pair_against_one_gives_the_master_polynomial() {
    let f = genus(2);
    let map = AbelMap::new(&f.curve);
    let mut s = PointSampler::new(&f.curve, 22);
    for _ in 0..5 {
        let p = s.points(3);
        let (lhs, _) = stratum_addition_sides(&f.ctx, &map, &p[..2], &p[2..]).unwrap();
        let f2 = (p[2].x - p[0].x) * (p[2].x - p[1].x);
        assert!((lhs.norm() - f2.norm()).abs() <= 1e-6 * lhs.norm());
    }
}

#[test]
fn swapped_roles_also_satisfy_the_identity() {
    for g in [2, 3] {
        let f = genus(g);
        let map = AbelMap::new(&f.curve);
        let mut s = PointSampler::new(&f.curve, 23);
        for (m, n) in admissible_cells(g) {
            let p = s.points(m + n);
            let (lhs, rhs) = stratum_addition_sides(&f.ctx, &map, &p[..m], &p[m..]).unwrap();
            let (lhs_s, rhs_s) = stratum_addition_sides(&f.ctx, &map, &p[m..], &p[..m]).unwrap();
            assert!(sign_fit(lhs, rhs).1 < 1e-6);
            assert!(sign_fit(lhs_s, rhs_s).1 < 1e-6);
            // the double product is antisymmetric in each pair
            let sign = if (m * n) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((rhs_s - rhs * sign).norm() <= 1e-12 * rhs.norm());
        }
    }
}

#[test]
fn left_side_is_lattice_invariant() {
    let f = genus(3);
    let map = AbelMap::new(&f.curve);
    let mut s = PointSampler::new(&f.curve, 24);
    let p = s.points(3);
    let u = map.divisor(&p[..2]).unwrap();
    let v = map.divisor(&p[2..]).unwrap();
    let ratio = |u: &[C64]| {
        let up: Vec<C64> = (0..3).map(|i| u[i] + v[i]).collect();
        let um: Vec<C64> = (0..3).map(|i| u[i] - v[i]).collect();
        let top = f.ctx.sigma_natural(&up, 3).unwrap() * f.ctx.sigma_natural(&um, 3).unwrap();
        let bottom = f.ctx.sigma_natural(u, 2).unwrap().powi(2) * f.ctx.sigma_natural(&v, 1).unwrap().powi(2);
        (top / bottom).to_complex()
    };
    let base = ratio(&u);
    for j in 0..6 {
        let mut l1 = vec![0.0; 3];
        let mut l2 = vec![0.0; 3];
        if j < 3 { l1[j] = 1.0 } else { l2[j - 3] = 1.0 }
        let ell = f.ctx.periods.lattice_vector(&l1, &l2);
        let shifted: Vec<C64> = (0..3).map(|i| u[i] + ell[i]).collect();
        assert!((ratio(&shifted) - base).norm() <= 1e-8 * base.norm());
    }
}

#[test]
fn audit_resolves_every_documented_conflict() {
    let entries: Vec<AuditEntry> = (1..=3)
        .map(|g| AuditEntry { name: format!("g{g}"), curve: &genus(g).curve, ctx: &genus(g).ctx })
        .collect();
    let (table, _) = sign_audit(&entries, 4, 1e-6, 7).unwrap();
    table.validate().unwrap();
    assert!(table.verdict);
    let labels: Vec<&str> = table.conflicts.iter().map(|c| c.label.as_str()).collect();
    for want in ["one_point_vs_stratum", "master_vs_stratum", "division_vs_stratum", "elliptic_classical_vs_stratum"] {
        assert!(labels.contains(&want), "{want}");
    }
    for c in &table.conflicts {
        assert_ne!(c.winner, "inconsistent");
    }
}

#[test]
fn split_cells_are_reported_as_inconsistent() {
    let table = SignAuditTable {
        cells: vec![AuditCell {
            curve: "x".into(),
            genus: 2,
            cell: (1, 1),
            s_predicted: 1,
            s_emp: None,
            status: "INCONSISTENT".into(),
            max_residual: 0.0,
            predictions: PredictedSigns::predict(2, 1, 1, &ParityTable { genus: 2, exponents: vec![0, 1] }),
        }],
        parities: vec![],
        conflicts: vec![],
        verdict: false,
    };
    assert!(matches!(table.validate(), Err(strata_sigma::Error::InconsistentCell { genus: 2, m: 1, n: 1 })));
}

#[test]
fn master_polynomial_identities_genus_two() {
    let f = genus(2);
    let r = master_polynomial_check(&f.curve, &f.ctx, 4, 1e-6, 9).unwrap();
    assert!(r.verdict, "{}", r.max_residual);
}

#[test]
fn classical_genus_two_formula() {
    let f = genus(2);
    let r = genus_two_addition_check(&f.curve, &f.ctx, 4, 1e-6, 9).unwrap();
    assert!(r.verdict, "{r:?}");
}

#[test]
fn inadmissible_cells_are_rejected() {
    let f = genus(2);
    assert!(stratum_addition_check(&f.curve, &f.ctx, 2, 2, 1, 1e-6, 1).is_err());
    assert!(stratum_addition_check(&f.curve, &f.ctx, 0, 1, 1, 1e-6, 1).is_err());
}
