mod common;

use common::{real_half_periods, WeierstrassSigma};
use num_complex::Complex64 as C64;
use std::path::PathBuf;
use std::time::Instant;
use strata_sigma::abel::{stratum1_expansion_check, AbelMap};
use strata_sigma::addition::*;
use strata_sigma::checks::{derivative_check, quasi_periodicity_check};
use strata_sigma::curve::CurveSpec;
use strata_sigma::harness::{read_corpus, run, Command, CurveSource, RunConfig};
use strata_sigma::periods::{compute_periods, PeriodData};
use strata_sigma::sampling::PointSampler;
use strata_sigma::sigma::SigmaContext;

const SEED: u64 = 7;

struct Entry {
    name: String,
    curve: CurveSpec,
    pd: PeriodData,
    ctx: SigmaContext,
    setup_seconds: f64,
}

struct Outcome {
    criterion: usize,
    pass: bool,
    expected_failure: bool,
    detail: String,
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(slow: bool) -> Vec<Entry> {
    read_corpus(&corpus_dir())
        .unwrap()
        .into_iter()
        .filter(|(_, c)| slow || c.genus() <= 3)
        .map(|(name, curve)| {
            let t = Instant::now();
            let pd = compute_periods(&curve).unwrap();
            let ctx = SigmaContext::new(&curve, &pd).unwrap();
            Entry {
                name,
                curve,
                pd,
                ctx,
                setup_seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn criterion1(entries: &[Entry]) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for e in entries {
        let ok = e.pd.legendre_residual <= 1e-10 && e.pd.min_imag_eigenvalue > 0.0 && e.setup_seconds < 10.0;
        pass &= ok;
        notes.push(format!("{} legendre {:.1e} {:.2}s", e.name, e.pd.legendre_residual, e.setup_seconds));
    }
    let g1 = entries.iter().find(|e| e.curve.genus() == 1).unwrap();
    let br = g1.curve.branch_points();
    let (w1, w3) = real_half_periods(br[2].re, br[1].re, br[0].re);
    let agm = ((g1.pd.omega1[(0, 0)] - C64::new(0.0, -w3)).norm() / w3)
        .max((g1.pd.omega2[(0, 0)] - C64::new(w1, 0.0)).norm() / w1);
    pass &= agm <= 1e-11;
    notes.push(format!("AGM {agm:.1e}"));
    Outcome {
        criterion: 1,
        pass,
        expected_failure: false,
        detail: notes.join(", "),
    }
}

fn criterion2(entries: &[Entry]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for e in entries {
        let r = quasi_periodicity_check(&e.curve, &e.ctx, 10, 1e-8, SEED).unwrap();
        pass &= r.verdict;
        worst = worst.max(r.max_residual);
    }
    Outcome {
        criterion: 2,
        pass,
        expected_failure: false,
        detail: format!("max relative residual {worst:.1e} over all levels and generators"),
    }
}

fn criterion3(entries: &[Entry]) -> Vec<Outcome> {
    let mut pass = true;
    let mut stated_y = true;
    let mut notes = Vec::new();
    for e in entries {
        let s1 = stratum1_expansion_check(&e.curve, &[4e-3, 2e-3, 1e-3]).unwrap();
        pass &= s1.pass;
        stated_y &= (s1.y_limit[0] - s1.stated_y_coefficient).abs() <= 1e-4 && s1.y_limit[1].abs() <= 1e-4;
        let p = sigma_expansion_check(&e.curve, &e.ctx, SEED).unwrap();
        pass &= p.verdict;
        let zeros: Vec<String> = p
            .levels
            .iter()
            .map(|l| format!("n={} order {:.3} zeros {}/{:?}", l.level, l.slope, l.zeros_at_origin, l.zeros_at_involution))
            .collect();
        notes.push(format!(
            "{}: x slope {:.4} y slope {:.4} y limit {:.6}; {}",
            e.name,
            s1.x_slope,
            s1.y_slope,
            s1.y_limit[0],
            zeros.join(", ")
        ));
    }
    vec![
        Outcome {
            criterion: 3,
            pass,
            expected_failure: false,
            detail: format!("orders, sigma coefficients, zero counts, y coefficient -1; {}", notes.join(" | ")),
        },
        Outcome {
            criterion: 3,
            pass: stated_y,
            expected_failure: true,
            detail: "stated coefficient +1 of y u_g^(2g+1); the limit is -1 on every curve".into(),
        },
    ]
}

fn criteria4and5(entries: &[Entry]) -> Vec<Outcome> {
    let audit: Vec<AuditEntry> = entries
        .iter()
        .filter(|e| e.curve.genus() <= 3)
        .map(|e| AuditEntry {
            name: e.name.clone(),
            curve: &e.curve,
            ctx: &e.ctx,
        })
        .collect();
    let mut pass4 = true;
    let mut notes4 = Vec::new();
    let t0 = Instant::now();
    let (table, reports) = sign_audit(&audit, 20, 1e-6, SEED).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    for r in reports.iter().filter(|r| r.genus >= 2) {
        pass4 &= r.verdict && r.unanimous && r.trials.len() == 20;
        notes4.push(format!("g{} {:?} s={:?} {:.1e}", r.genus, r.cell, r.cell_sign, r.max_residual));
    }
    pass4 &= elapsed < 180.0;

    let consistent = table.validate().is_ok();
    let g1 = table.cells.iter().find(|c| c.genus == 1).unwrap();
    let classical = g1.s_emp.is_some() && g1.s_emp == g1.predictions.elliptic_classical;
    let g1e = entries.iter().find(|e| e.curve.genus() == 1).unwrap();
    let oracle = WeierstrassSigma::new(4.0, 0.0, 90);
    let map = AbelMap::new(&g1e.curve);
    let mut sampler = PointSampler::new(&g1e.curve, SEED);
    let mut e2e: f64 = 0.0;
    for _ in 0..10 {
        let p = sampler.points(2);
        let (lhs, _) = stratum_addition_sides(&g1e.ctx, &map, &p[..1], &p[1..]).unwrap();
        let u = map.point(&p[0]).unwrap()[0];
        let v = map.point(&p[1]).unwrap()[0];
        let want = oracle.wp(v) - oracle.wp(u);
        e2e = e2e.max((lhs - want).norm() / want.norm());
    }
    let has = |label: &str, g: usize| table.conflicts.iter().any(|c| c.label == label && c.genus == g && c.winner != "inconsistent");
    let adjudicated = has("one_point_vs_stratum", 2) && has("one_point_vs_stratum", 3) && has("master_vs_stratum", 3) && has("division_vs_stratum", 2) && has("division_vs_stratum", 3);
    let winners: Vec<String> = table
        .conflicts
        .iter()
        .filter(|c| c.label != "elliptic_printed_vs_stratum")
        .map(|c| format!("{} g{} {:?}: {}", c.label, c.genus, c.cell, c.winner))
        .collect();
    vec![
        Outcome {
            criterion: 4,
            pass: pass4,
            expected_failure: false,
            detail: format!("{:.1}s; {}", elapsed, notes4.join(", ")),
        },
        Outcome {
            criterion: 5,
            pass: consistent && classical && e2e <= 1e-8 && adjudicated,
            expected_failure: false,
            detail: format!(
                "no inconsistent cell {consistent}, g1 sign matches the classical formula {classical}, oracle {e2e:.1e}; {}",
                winners.join(", ")
            ),
        },
    ]
}

fn criterion6(entries: &[Entry]) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for e in entries.iter().filter(|e| (2..=3).contains(&e.curve.genus())) {
        let r = master_polynomial_check(&e.curve, &e.ctx, 10, 1e-6, SEED).unwrap();
        pass &= r.verdict;
        notes.push(format!("{} {:.1e}", e.name, r.max_residual));
    }
    Outcome {
        criterion: 6,
        pass,
        expected_failure: false,
        detail: notes.join(", "),
    }
}

fn criterion7(entries: &[Entry]) -> Outcome {
    let e = entries.iter().find(|e| e.curve.genus() == 2).unwrap();
    let r = genus_two_addition_check(&e.curve, &e.ctx, 10, 1e-6, SEED).unwrap();
    Outcome {
        criterion: 7,
        pass: r.verdict,
        expected_failure: false,
        detail: format!(
            "residual {:.1e}, coincidence ratio error {:.1e}, slopes {:.4}/{:.4}",
            r.max_residual, r.coincidence_ratio_error, r.coincidence_slopes[0], r.coincidence_slopes[1]
        ),
    }
}

fn criterion8(entries: &[Entry]) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for e in entries {
        let r = derivative_check(&e.ctx, 10, 1e-5, SEED).unwrap();
        pass &= r.verdict;
        notes.push(format!("{} {:.1e} ({} records)", e.name, r.max_residual, r.records.len()));
    }
    Outcome {
        criterion: 8,
        pass,
        expected_failure: false,
        detail: notes.join(", "),
    }
}

fn criterion9() -> Outcome {
    let mut verify = RunConfig::new(Command::Verify, CurveSource::File(corpus_dir().join("g2.json")));
    verify.trials = 6;
    let mut audit = RunConfig::new(Command::Audit, CurveSource::Corpus(corpus_dir()));
    audit.trials = 4;
    let mut same = true;
    for cfg in [verify, audit] {
        let a = run(&cfg).unwrap().to_json();
        let b = run(&cfg).unwrap().to_json();
        same &= a == b;
    }
    Outcome {
        criterion: 9,
        pass: same,
        expected_failure: false,
        detail: "verify and audit reports byte-identical across repeated runs".into(),
    }
}

fn main() {
    let slow = std::env::var("STRATA_SIGMA_SLOW").is_ok_and(|v| v == "1");
    let entries = load(slow);
    let mut outcomes = vec![criterion1(&entries), criterion2(&entries)];
    outcomes.extend(criterion3(&entries));
    outcomes.extend(criteria4and5(&entries));
    outcomes.push(criterion6(&entries));
    outcomes.push(criterion7(&entries));
    outcomes.push(criterion8(&entries));
    outcomes.push(criterion9());
    let mut unexpected = 0;
    for o in &outcomes {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && o.expected_failure { " [recorded, unattainable as stated]" } else { "" };
        println!("criterion {}: {tag}{note}: {}", o.criterion, o.detail);
        if !o.pass && !o.expected_failure {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance criteria failed");
        std::process::exit(1);
    }
}
