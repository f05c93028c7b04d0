use num_complex::Complex64;
use qfreq::covering::{annulus_empty_check, theorem_bound_report};
use qfreq::frequency::{Frequency, Inequality, LOG_DERIVATIVE_TOL};
use qfreq::graph_dirichlet::{build_disk_mesh_with, Weights};
use qfreq::graph_dirichlet::{boundary_trace, compare_frequency_discrete, initial_labels, minimize};
use qfreq::io::{csv_bytes, fmt17, write_atomically};
use qfreq::singular::{classify_d_q, count_d_q, find_singular_candidates, full_multiplicity_points, records_csv};

use crate::config::RunConfig;
use crate::Failure;

/// Slack allowed when checking that sampled `I` is nondecreasing.
const MONOTONE_SLACK: f64 = 1e-6;
/// Relative tolerance of the integrated monotonicity identity.
const IDENTITY_TOL: f64 = 1e-3;
/// Range of mesh rings at which the discrete minimizer's frequency is reported.
const DISCRETE_RANGE: (f64, f64) = (0.3, 0.9);

fn plot_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale x\n\
         set xlabel 'r'\n\
         set ylabel 'I(x, r)'\n\
         plot '{csv_name}' using 1:4 with linespoints\n"
    )
}

pub fn frequency(config: &RunConfig) -> Result<(), Failure> {
    let profile = Frequency::with_options(&config.curve, config.options).profile(config.center, &config.radii)?;
    profile.write_csv(&config.out.join("profile.csv"))?;
    write_atomically(&config.out.join("profile.gp"), plot_script("profile.csv").as_bytes())?;
    let last = profile.radii.len() - 1;
    match profile.frequency[last] {
        Some(i) => println!("I({}) = {}", profile.radii[last], i),
        None => println!("I({}) undefined: degenerate height", profile.radii[last]),
    }
    Ok(())
}

pub fn singular(config: &RunConfig, radius: f64) -> Result<(), Failure> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Failure::Usage(format!("radius must be positive, got {radius}")));
    }
    let candidates = find_singular_candidates(&config.curve, config.center, radius)?;
    let records = classify_d_q(&config.curve, &candidates)?;
    write_atomically(&config.out.join("singular.csv"), &records_csv(&records)?)?;
    let full = records.iter().filter(|r| r.is_full_multiplicity).count();
    let count = count_d_q(&config.curve, 0.5)?;
    println!("records={} full={} count_B_1/2={}", records.len(), full, count);
    Ok(())
}

pub fn count(config: &RunConfig) -> Result<(), Failure> {
    let report = theorem_bound_report(&config.curve, &config.covering)?;
    let trace = &report.trace;
    trace.write_csv(&config.out.join("covering.csv"))?;
    trace.check()?;

    let lambda = config.covering.lambda;
    let mut miscalibrated = Vec::new();
    for level in &trace.levels {
        let center = Complex64::new(level.center[0], level.center[1]);
        let check = annulus_empty_check(&config.curve, center, lambda.powi(level.level as i32), &config.covering)?;
        if check.miscalibrated() {
            miscalibrated.push(format!(
                "level {}: drop {:.6e} <= delta {} but Q-points {:?} lie in the annulus",
                level.level, check.drop, config.covering.delta, check.detected
            ));
        }
    }
    if !report.chain.lower_holds {
        miscalibrated.push(format!(
            "delta * sum xi = {:.6e} exceeds the summed frequency drops {:.6e}",
            report.chain.lower, report.chain.drop_sum
        ));
    }
    if !miscalibrated.is_empty() {
        return Err(Failure::Invariant(format!("delta is miscalibrated: {}", miscalibrated.join("; "))));
    }
    if !report.chain.telescopes {
        return Err(Failure::Invariant(format!(
            "summed drops {:.6e} exceed {} * I = {:.6e}",
            report.chain.drop_sum,
            report.chain.multiplicity,
            report.chain.multiplicity as f64 * report.chain.top_frequency
        )));
    }
    println!(
        "count={} I02={} fitted_base={} cert={:e} sum_xi={} certified={}",
        report.count,
        fmt17(report.frequency),
        fmt17(report.fitted_base),
        report.proof_bound,
        trace.xi_sum,
        trace.certified()
    );
    Ok(())
}

struct Row {
    check: &'static str,
    center: Complex64,
    r: f64,
    t: f64,
    /// Negative when the check fails.
    margin: f64,
}

impl Row {
    fn inequality(check: &'static str, center: Complex64, r: f64, t: f64, q: &Inequality) -> Self {
        let margin = q.slack + qfreq::frequency::INEQUALITY_SLACK;
        Self { check, center, r, t, margin }
    }
}

pub fn verify(config: &RunConfig, corrupt_profile: bool) -> Result<(), Failure> {
    let freq = Frequency::with_options(&config.curve, config.options);
    let x = config.center;
    let radii = &config.radii;
    let mut rows = Vec::new();

    let mut profile = freq.profile(x, radii)?;
    if corrupt_profile {
        let last = profile.radii.len() - 1;
        profile.energy[last] *= 0.5;
        profile.frequency[last] = profile.frequency[last].map(|i| 0.5 * i);
    }
    let values = profile
        .frequency
        .iter()
        .zip(radii)
        .map(|(i, &r)| {
            i.ok_or(Failure::Numeric(format!("degenerate height at r = {r}")))
        })
        .collect::<Result<Vec<f64>, Failure>>()?;
    for k in 1..radii.len() {
        rows.push(Row {
            check: "nondecreasing",
            center: x,
            r: radii[k - 1],
            t: radii[k],
            margin: values[k] - values[k - 1] + MONOTONE_SLACK,
        });
    }
    for k in 1..radii.len() {
        let m = freq.monotonicity_check(x, radii[k - 1], radii[k])?;
        rows.push(Row {
            check: "identity",
            center: x,
            r: m.s,
            t: m.t,
            margin: IDENTITY_TOL * (1.0 + m.lhs.abs()) - m.residual,
        });
        let g = freq.verify_growth_bounds(x, radii[k - 1], radii[k])?;
        rows.push(Row {
            check: "log_derivative",
            center: x,
            r: g.r,
            t: g.t,
            margin: LOG_DERIVATIVE_TOL - g.log_derivative_error,
        });
        rows.push(Row::inequality("height_lower", x, g.r, g.t, &g.height_lower));
        rows.push(Row::inequality("height_upper", x, g.r, g.t, &g.height_upper));
        rows.push(Row::inequality("energy_lower", x, g.r, g.t, &g.energy_lower));
        rows.push(Row::inequality("energy_upper", x, g.r, g.t, &g.energy_upper));
    }

    let rmax = radii[radii.len() - 1];
    let mut q_points = full_multiplicity_points(&config.curve, x, rmax)?;
    let fiber = config.curve.eval_fiber(x)?;
    let tol = 1e-7 * config.curve.scale();
    if fiber.fiber_diameter() <= tol && fiber.max_value_norm() <= tol && !q_points.contains(&x) {
        q_points.insert(0, x);
    }
    for &y in &q_points {
        for &r in radii {
            let p = freq.verify_poincare(y, r)?;
            rows.push(Row::inequality("poincare_first", y, r, r, &p.first));
            rows.push(Row::inequality("poincare_second", y, r, r, &p.second));
        }
    }

    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            vec![
                row.check.to_string(),
                fmt17(row.center.re),
                fmt17(row.center.im),
                fmt17(row.r),
                fmt17(row.t),
                fmt17(row.margin),
                (row.margin >= 0.0).to_string(),
            ]
        })
        .collect();
    write_atomically(
        &config.out.join("verify.csv"),
        &csv_bytes(&["check", "center_re", "center_im", "r", "t", "margin", "passed"], &table)?,
    )?;

    let failed = rows.iter().filter(|r| !(r.margin >= 0.0)).count();
    let worst = rows
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("at least one check");
    let describe = format!(
        "{} at center {} (r = {}, t = {}): margin {:e}",
        worst.check, worst.center, worst.r, worst.t, worst.margin
    );
    if failed > 0 {
        return Err(Failure::Invariant(format!("{failed} of {} checks failed; worst: {describe}", rows.len())));
    }
    println!("checks={} failed=0 q_points={} worst: {describe}", rows.len(), q_points.len());
    Ok(())
}

pub fn minimize_cmd(config: &RunConfig, resolution: usize, max_iterations: usize, weights: Weights) -> Result<(), Failure> {
    let mesh = build_disk_mesh_with(resolution, weights).map_err(|e| match e {
        qfreq::Error::Domain(m) => Failure::Usage(m),
        other => other.into(),
    })?;
    let boundary = boundary_trace(&config.curve, &mesh)?;
    let start = initial_labels(&mesh, &boundary)?;
    if max_iterations == 0 {
        eprintln!("warning: iteration cap 0, writing the initialization unchanged");
    }
    let result = minimize(&mesh, &start, max_iterations)?;
    if max_iterations > 0 && !result.converged {
        eprintln!("warning: not converged after {max_iterations} iterations");
    }
    write_atomically(&config.out.join("labels.csv"), &result.labels.to_csv()?)?;
    result.write_log_csv(&config.out.join("convergence.csv"))?;
    let rings: Vec<f64> = (1..=resolution)
        .map(|k| mesh.ring_radius(k))
        .filter(|r| (DISCRETE_RANGE.0..=DISCRETE_RANGE.1).contains(r))
        .collect();
    let discrete = compare_frequency_discrete(&mesh, &result.labels, &rings)?;
    discrete.write_csv(&config.out.join("discrete_profile.csv"))?;
    println!(
        "energy={} iterations={} converged={}",
        fmt17(result.energy),
        result.log.len() - 1,
        result.converged
    );
    Ok(())
}
