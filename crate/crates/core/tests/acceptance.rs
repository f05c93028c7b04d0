//! One pass/fail line per acceptance criterion, at the pinned tolerances.

mod common;

use std::f64::consts::TAU;
use std::time::Instant;

use common::{benchmarks, brute_force_g, log_spaced, zi, ORIGIN};
use qfreq::covering::{covering_count, theorem_bound_report, CoveringConfig};
use qfreq::curve::AlgebraicCurve;
use qfreq::frequency::Frequency;
use qfreq::graph_dirichlet::{
    boundary_trace, build_disk_mesh, compare_frequency_discrete, initial_labels, minimize,
};
use qfreq::singular::{classify_d_q, find_singular_candidates, full_multiplicity_points};
use qfreq::{metric_g, QPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn random_qpoint(rng: &mut ChaCha8Rng, q: usize) -> QPoint {
    let values: Vec<Vec<f64>> = (0..q)
        .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    QPoint::new(&values).unwrap()
}

fn ac1_metric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for q in 2..=6 {
        for _ in 0..1000 {
            let a = random_qpoint(&mut rng, q);
            let b = random_qpoint(&mut rng, q);
            worst = worst.max((metric_g(&a, &b).unwrap() - brute_force_g(&a, &b)).abs());
        }
    }
    (worst <= 1e-12, format!("max |G - brute force| = {worst:.3e} over 5000 pairs"))
}

fn ac2_homogeneous() -> Outcome {
    let radii = log_spaced(0.05, 2.0, 20);
    let mut worst: f64 = 0.0;
    for (q, p) in [(2, 1), (3, 1), (3, 2), (4, 1)] {
        let curve = AlgebraicCurve::homogeneous(q, p).unwrap();
        let profile = Frequency::new(&curve).profile(ORIGIN, &radii).unwrap();
        for i in &profile.frequency {
            worst = worst.max((i.unwrap() - p as f64 / q as f64).abs());
        }
    }
    (worst <= 1e-4, format!("max |I - p/Q| = {worst:.3e} at 20 radii, 4 curves"))
}

fn ac3_monotone() -> Outcome {
    let radii = log_spaced(0.01, 2.0, 40);
    let mut curves: Vec<(String, AlgebraicCurve)> = [0.05, 0.1, 0.3]
        .iter()
        .map(|&e| (format!("g_{e}"), AlgebraicCurve::make_g_eps(e).unwrap()))
        .collect();
    for e in [1e-3, 1e-2] {
        curves.push((format!("f_{e}"), AlgebraicCurve::make_f_eps(e, &zi()).unwrap()));
    }
    let mut worst = f64::INFINITY;
    let mut at = String::new();
    for (name, curve) in &curves {
        let profile = Frequency::new(curve).profile(ORIGIN, &radii).unwrap();
        let i: Vec<f64> = profile.frequency.iter().map(|v| v.unwrap()).collect();
        for k in 1..i.len() {
            if i[k] - i[k - 1] < worst {
                worst = i[k] - i[k - 1];
                at = format!("{name} at r = {:.4}", radii[k]);
            }
        }
    }
    (worst >= -1e-6, format!("smallest step I(r_k+1) - I(r_k) = {worst:.3e} ({at})"))
}

fn ac4_identity() -> Outcome {
    let curve = AlgebraicCurve::make_g_eps(0.3).unwrap();
    let m = Frequency::new(&curve).monotonicity_check(ORIGIN, 0.5, 1.5).unwrap();
    let tol = 1e-3 * (1.0 + m.lhs.abs());
    (
        m.residual <= tol,
        format!("lhs = {:.9}, rhs = {:.9}, |lhs - rhs| = {:.3e} (tol {tol:.3e})", m.lhs, m.rhs, m.residual),
    )
}

fn ac5_example_g() -> Outcome {
    let i = |eps: f64| Frequency::new(&AlgebraicCurve::make_g_eps(eps).unwrap()).frequency(ORIGIN, 2.0).unwrap();
    let (small, large) = (i(0.01), i(0.1));
    (
        (0.9..=1.0).contains(&small) && (small - 1.0).abs() < (large - 1.0).abs(),
        format!("I_0.01(0,2) = {small:.9}, I_0.1(0,2) = {large:.9}"),
    )
}

fn ac6_example_f() -> Outcome {
    let curve = AlgebraicCurve::make_f_eps(1e-3, &zi()).unwrap();
    let i = Frequency::new(&curve).frequency(ORIGIN, 2.0).unwrap();
    let records = classify_d_q(&curve, &find_singular_candidates(&curve, ORIGIN, 1.0).unwrap()).unwrap();
    let full: Vec<_> = records.iter().filter(|r| r.is_full_multiplicity).collect();
    let origin_only = full.len() == 1 && full[0].location() == ORIGIN;
    let partial_ok = zi().iter().all(|z| {
        records
            .iter()
            .any(|r| (r.location() - z).norm() < 1e-8 && !r.is_full_multiplicity && r.cluster_size == 2)
    });
    (
        (0.45..=0.55).contains(&i) && origin_only && partial_ok && records.len() == 4,
        format!(
            "I(0,2) = {i:.6}, {} full-multiplicity point(s), z_i partial with cluster size 2: {partial_ok}",
            full.len()
        ),
    )
}

fn ac7_lower_bound() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut at = String::new();
    let mut points = 0;
    for b in benchmarks() {
        let q = b.curve.degree_w() as f64;
        let records = classify_d_q(&b.curve, &find_singular_candidates(&b.curve, ORIGIN, 1.0).unwrap()).unwrap();
        for r in records.iter().filter(|r| r.is_full_multiplicity) {
            points += 1;
            let margin = r.small_scale_frequency.unwrap() - (1.0 / q - 1e-2);
            if margin < worst {
                worst = margin;
                at = format!("{} at {}", b.name, r.location());
            }
        }
    }
    (worst >= 0.0 && points > 0, format!("{points} points, smallest I(x,0+) - (1/Q - 0.01) = {worst:.4} ({at})"))
}

fn ac8_poincare() -> Outcome {
    let radii = [0.05, 0.25, 0.5, 1.0, 2.0];
    let mut worst = f64::INFINITY;
    let mut at = String::new();
    for b in benchmarks() {
        let freq = Frequency::new(&b.curve);
        for x in full_multiplicity_points(&b.curve, ORIGIN, 1.0).unwrap() {
            for r in radii {
                let p = freq.verify_poincare(x, r).unwrap();
                for s in [p.first.slack, p.second.slack] {
                    if s < worst {
                        worst = s;
                        at = format!("{} at {x}, r = {r}", b.name);
                    }
                }
            }
        }
    }
    let mut equality: f64 = 0.0;
    for q in 2..=4 {
        let curve = AlgebraicCurve::homogeneous(q, 1).unwrap();
        for r in radii {
            let p = Frequency::new(&curve).verify_poincare(ORIGIN, r).unwrap();
            equality = equality.max(p.first.slack.abs()).max(p.second.slack.abs());
        }
    }
    (
        worst >= -1e-6 && equality <= 1e-3,
        format!("smallest slack {worst:.3e} ({at}); largest |slack| on w^Q = z: {equality:.3e}"),
    )
}

fn ac9_covering() -> Outcome {
    let config = CoveringConfig::default();
    let bound = (4.0 / (config.lambda * config.lambda) + 1e-9).floor() as usize;
    let trace = covering_count(&AlgebraicCurve::make_g_eps(0.1).unwrap(), &config).unwrap();
    let levels_ok = trace.levels.iter().all(|l| l.balls <= bound);
    let n0 = trace.initial_count();
    let cert = (n0 as u128) <= (bound as u128).pow(trace.xi_sum as u32);
    let hom = covering_count(&AlgebraicCurve::homogeneous(2, 1).unwrap(), &config).unwrap();
    (
        n0 == 2 && levels_ok && cert && trace.check().is_ok() && hom.initial_count() == 1 && hom.xi_sum == 0,
        format!(
            "g_0.1: N_0 = {n0}, max J = {}, sum xi = {}, {n0} <= {bound}^{}: {cert}; w^2 = z: N_0 = {}, sum xi = {}",
            trace.levels.iter().map(|l| l.balls).max().unwrap_or(0),
            trace.xi_sum,
            trace.xi_sum,
            hom.initial_count(),
            hom.xi_sum
        ),
    )
}

fn ac10_fitted_base() -> Outcome {
    let report = theorem_bound_report(&AlgebraicCurve::make_g_eps(0.1).unwrap(), &CoveringConfig::default()).unwrap();
    let b = report.fitted_base;
    let holds = (report.count as f64) <= b.powf(report.frequency) * (1.0 + 1e-12);
    (
        b.is_finite() && holds && report.count == 2,
        format!("count = {}, I(0,2) = {:.6}, fitted base = {b:.6}", report.count, report.frequency),
    )
}

fn ac11_discrete() -> Outcome {
    let start = Instant::now();
    let curve = AlgebraicCurve::homogeneous(2, 1).unwrap();
    let mesh = build_disk_mesh(40).unwrap();
    let boundary = boundary_trace(&curve, &mesh).unwrap();
    let result = minimize(&mesh, &initial_labels(&mesh, &boundary).unwrap(), 500).unwrap();
    let rings: Vec<f64> = (1..=40).map(|k| mesh.ring_radius(k)).filter(|r| (0.3..=0.9).contains(r)).collect();
    let profile = compare_frequency_discrete(&mesh, &result.labels, &rings).unwrap();
    let worst = profile
        .frequency
        .iter()
        .map(|i| (i.unwrap() - 0.5).abs())
        .fold(0.0, f64::max);
    let rel = (result.energy - TAU).abs() / TAU;
    let secs = start.elapsed().as_secs_f64();
    (
        rel <= 0.05 && worst <= 0.1 && secs <= 300.0,
        format!(
            "energy = {:.6} ({:.2}% from 2 pi), max |I - 1/2| on [0.3, 0.9] = {worst:.4}, {secs:.1} s",
            result.energy,
            100.0 * rel
        ),
    )
}

fn ac12_growth() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pairs: Vec<(f64, f64)> = (0..10)
        .map(|_| {
            let a = rng.random_range(0.05f64.ln()..2.0f64.ln()).exp();
            let b = rng.random_range(0.05f64.ln()..2.0f64.ln()).exp();
            (a.min(b), a.max(b))
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut at = String::new();
    let mut equality: f64 = 0.0;
    for b in benchmarks() {
        let freq = Frequency::new(&b.curve);
        for &(r, t) in &pairs {
            let g = freq.verify_growth_bounds(ORIGIN, r, t).unwrap();
            for q in [g.height_lower, g.height_upper, g.energy_lower, g.energy_upper] {
                if q.slack < worst {
                    worst = q.slack;
                    at = format!("{} at (r, t) = ({r:.4}, {t:.4})", b.name);
                }
                if b.homogeneous {
                    equality = equality.max(q.slack.abs());
                }
            }
        }
    }
    (
        worst >= -1e-6 && equality <= 1e-4,
        format!("smallest slack {worst:.3e} ({at}); largest |slack| on homogeneous curves {equality:.3e}"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("AC1 metric equals brute-force assignment", ac1_metric),
        ("AC2 homogeneous curves have constant frequency", ac2_homogeneous),
        ("AC3 frequency is nondecreasing", ac3_monotone),
        ("AC4 monotonicity identity", ac4_identity),
        ("AC5 g_eps limit", ac5_example_g),
        ("AC6 f_eps limit and classification", ac6_example_f),
        ("AC7 small-scale frequency lower bound", ac7_lower_bound),
        ("AC8 Poincare chain", ac8_poincare),
        ("AC9 covering certificate", ac9_covering),
        ("AC10 fitted base", ac10_fitted_base),
        ("AC11 discrete minimizer benchmark", ac11_discrete),
        ("AC12 growth sandwiches", ac12_growth),
    ];
    let outcomes: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria.iter().map(|(_, check)| scope.spawn(check)).collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut failed = Vec::new();
    for ((name, _), (pass, detail)) in criteria.iter().zip(outcomes) {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
