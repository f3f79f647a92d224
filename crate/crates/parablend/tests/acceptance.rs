//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::time::{Duration, Instant};

use parablend::dynamics::{Construction, FamilyHandle, FamilyParams};
use parablend::hyperbolic::{
    continue_coded_orbit, continue_fixed_point, graph_transform_manifold, inclination_test, ManifoldBase, Side,
};
use parablend::ifs_blender::{
    factorized_reachable_set, jet_coverage_certificate, limit_set_cover, standard_blender, y_series, BlenderBranch,
    Parablender, SymbolWord, TargetBox,
};
use parablend::jets::Jet;
use parablend::paratangency::{default_tolerance, greedy_code, paratangency_verdict, random_admissible_family};
use parablend::sink_forge::{dissipation_check, flatten_experiment, sink_experiment};
use parablend::sweep::{run_sweep, write_csv, SweepConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);
/// CSV bytes, sink counts and grid abscissae of one sweep.
type SweepRun = (Vec<u8>, Vec<usize>, Vec<f64>);

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{out}; took {took:.1?}, limit {limit:?}"));
    }
    Ok(format!("{out}; {took:.1?}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn jet_arithmetic() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let e = common::random_expr(&mut rng, 2, 4);
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        worst = worst.max(common::finite_difference_error(&e, &x, 1e-4));
    }
    ensure(worst <= 1e-6, || format!("relative error {worst:.2e}"))?;
    Ok(format!("worst relative error {worst:.2e}"))
}

fn blender_interval() -> Check {
    let depth = 20;
    let cover = limit_set_cover(&standard_blender(), depth).map_err(|e| e.to_string())?;
    let limit = 2.0 * (2.0f64 / 3.0).powi(depth as i32);
    ensure(cover.within(limit), || format!("bound {:.3e} > {limit:.3e}", cover.hausdorff_bound))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let branches: Vec<BlenderBranch> = [1.0, -1.0]
            .into_iter()
            .map(|sign| {
                let frequency = rng.gen_range(0.5..2.0);
                let wobble = rng.gen_range(-0.005..0.005);
                BlenderBranch {
                    sign,
                    shift: rng.gen_range(-0.005..0.005),
                    wobble,
                    frequency,
                    phase: rng.gen_range(0.0..std::f64::consts::TAU),
                }
            })
            .collect();
        ensure(branches.iter().all(|b| b.c1_size() <= 0.01), || "perturbation too large".into())?;
        let c = limit_set_cover(&branches, depth).map_err(|e| e.to_string())?;
        ensure(c.within(0.05), || format!("perturbed bound {:.3e}", c.hausdorff_bound))?;
        worst = worst.max(c.hausdorff_bound);
    }
    Ok(format!("bound {:.3e}, perturbed {worst:.3e}", cover.hausdorff_bound))
}

fn parablender_coverage() -> Check {
    // Box fixed by the N = 14 enumeration run (ε = 0.1): covered with 5329 cells.
    let target = TargetBox::new(vec![-0.5, -0.15], vec![0.5, 0.15]);
    let ifs = Parablender::new(1, 1, 0.1);
    let set = factorized_reachable_set(&ifs, 14).map_err(|e| e.to_string())?;
    let plain = jet_coverage_certificate(&set, &target);
    ensure(plain.is_covered(), || format!("unperturbed: {plain:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut shifted = ifs.clone();
    for o in shifted.offsets.iter_mut() {
        *o = if rng.gen_bool(0.5) { 0.005 } else { -0.005 };
    }
    let set = factorized_reachable_set(&shifted, 14).map_err(|e| e.to_string())?;
    let moved = jet_coverage_certificate(&set, &target);
    ensure(moved.is_covered(), || format!("offsets {:?}: {moved:?}", shifted.offsets))?;
    Ok("box [-0.5,0.5]x[-0.15,0.15] covered with and without offsets".into())
}

fn greedy_paratangency() -> Check {
    let depth = 40;
    let tol = default_tolerance(depth);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut smallest = f64::INFINITY;
    let mut largest_value = 0.0f64;
    for d in 0..=2 {
        let h = FamilyHandle::build(FamilyParams::new(Construction::Base, 1, d)).map_err(|e| e.to_string())?;
        let eps = h.epsilon();
        for trial in 0..100 {
            let family = random_admissible_family(1, d, eps, &[0.0], &mut rng);
            let trace = greedy_code(&h, &family, depth).map_err(|e| format!("d={d} trial {trial}: {e}"))?;
            for (i, s) in trace.steps.iter().enumerate() {
                ensure(s.margins.holds(), || format!("d={d} trial {trial} step {i}: {:?}", s.margins))?;
                // After the first pullback the minimum is at most (3/2)(1/3).
                if i > 0 {
                    largest_value = largest_value.max(2.0 / 3.0 - s.margins.value);
                }
            }
            smallest = smallest.min(trace.smallest_margin());
            let eta = trace.eta.as_ref().ok_or("missing offset jet")?;
            let verdict = paratangency_verdict(eta, |_| tol);
            ensure(verdict.iter().all(|v| *v), || format!("d={d} trial {trial}: {:?}", eta.derivatives()))?;
        }
    }
    ensure(largest_value <= 0.5 + 1e-12, || format!("largest |min| {largest_value}"))?;
    Ok(format!("smallest margin {smallest:.3e}, largest |min| after step 0 {largest_value:.15}"))
}

fn model_self_consistency() -> Check {
    let h = FamilyHandle::build(FamilyParams::new(Construction::Base, 1, 1)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let len = rng.gen_range(1..=4);
        let period: Vec<Vec<i8>> = (0..len)
            .map(|_| (0..2).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect())
            .collect();
        let a0 = [rng.gen_range(-0.5..0.5)];
        let word = SymbolWord::new(period.clone()).map_err(|e| e.to_string())?;
        let orbit = continue_coded_orbit(&h, &word, &a0, 1).map_err(|e| e.to_string())?;
        let m = graph_transform_manifold(&h, ManifoldBase::Coded(&orbit), Side::Unstable, 1).map_err(|e| e.to_string())?;
        let long = SymbolWord::periodic(&period, 120).map_err(|e| e.to_string())?;
        let series = y_series(&long, h.epsilon(), &Jet::parameters(1, &a0)).map_err(|e| e.to_string())?.jet;
        for (a, b) in m.height().taylor().iter().zip(series.taylor()) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("height mismatch {worst:.2e}"))?;
    Ok(format!("largest height mismatch {worst:.2e}"))
}

fn flattening() -> Check {
    let mut norms = Vec::new();
    for e in 3..=6 {
        let alpha = 2f64.powi(-e);
        let run = flatten_experiment(1, 2, alpha, 11).map_err(|e| e.to_string())?;
        ensure(run.outside_identical, || format!("alpha 2^-{e}: changed outside 2α"))?;
        ensure(run.max_residual() <= 1e-7, || format!("alpha 2^-{e}: residual {:.2e}", run.max_residual()))?;
        norms.push(run.report.norm);
    }
    let slopes: Vec<f64> = norms.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    ensure(slopes.iter().all(|s| *s >= 0.9), || format!("log-slopes {slopes:?}"))?;
    Ok(format!("norms {norms:.3?}, log-slopes {slopes:.2?}"))
}

fn sink_creation() -> Check {
    let run = sink_experiment(1, 12, 1.0 / 16.0, 11, 5, 20).map_err(|e| e.to_string())?;
    let worst_modulus = run
        .grid
        .iter()
        .flat_map(|g| g.sinks.iter().filter(|s| s.period == 14).flat_map(|s| s.moduli()))
        .fold(0.0f64, f64::max);
    let worst_norm = run.certificates.iter().map(|c| c.norm).fold(0.0f64, f64::max);
    ensure(run.passed(), || {
        format!(
            "grid without sinks: {:?}, certificates holding: {}",
            run.grid.iter().filter(|g| g.sinks.is_empty()).map(|g| g.a).collect::<Vec<_>>(),
            run.certificates.iter().filter(|c| c.holds()).count()
        )
    })?;
    Ok(format!(
        "period {} at 11 points, largest modulus {worst_modulus:.2e}, {} boxes, largest norm {worst_norm:.3}",
        run.plan.period,
        run.certificates.len()
    ))
}

fn dissipation() -> Check {
    let mut out = Vec::new();
    for d in 1..=3 {
        let h = FamilyHandle::build(FamilyParams::new(Construction::Dissipative, 1, d)).map_err(|e| e.to_string())?;
        let omega = continue_fixed_point(&h, &h.saddle(), &[0.0], 0).map_err(|e| e.to_string())?;
        let r = dissipation_check(&omega, d);
        let dp = d as i32;
        let expected = 4f64.powi(dp + 1) * 4f64.powi(-(dp + 2) * (dp + 2));
        ensure((r.determinant - expected).abs() <= 1e-12 * expected, || {
            format!("d={d}: det {:e} vs {expected:e}", r.determinant)
        })?;
        ensure(r.holds() && r.line_field_margin > 0.0, || format!("d={d}: {r:?}"))?;
        out.push(format!("d={d} det {:.3e}", r.determinant));
    }
    Ok(out.join(", "))
}

fn sweep_localization() -> Check {
    let cfg = SweepConfig::default();
    let csv = |cfg: &SweepConfig| -> Result<SweepRun, String> {
        let rep = run_sweep(cfg).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_csv(&rep, &mut buf).map_err(|e| e.to_string())?;
        Ok((buf, rep.rows.iter().map(|r| r.sinks).collect(), rep.rows.iter().map(|r| r.a[0]).collect()))
    };
    let (first, counts, grid) = csv(&cfg)?;
    let (second, _, _) = csv(&cfg)?;
    ensure(first == second, || "CSV differs between runs".into())?;
    let lattice = parablend::sweep::lattice_points(cfg.alpha, cfg.depth, 1).map_err(|e| e.to_string())?;
    ensure(lattice.len() == 8, || format!("{} lattice points", lattice.len()))?;
    let window = cfg.window();
    for (i, a0) in lattice.iter().enumerate() {
        let mut toggled = cfg.clone();
        toggled.disabled = vec![i];
        let (_, changed, _) = csv(&toggled)?;
        let mut inside_changes = 0;
        for ((a, before), after) in grid.iter().zip(&counts).zip(&changed) {
            if before != after {
                ensure((a - a0[0]).abs() < window, || format!("window {i} changed a = {a}"))?;
                inside_changes += 1;
            }
        }
        ensure(inside_changes > 0, || format!("window {i} had no effect"))?;
    }
    Ok(format!("{} grid points, 8 windows localized", grid.len()))
}

fn inclination() -> Check {
    let h = FamilyHandle::build(FamilyParams::new(Construction::Base, 1, 1)).map_err(|e| e.to_string())?;
    let omega = continue_fixed_point(&h, &h.saddle(), &[0.0], 0).map_err(|e| e.to_string())?;
    let target = graph_transform_manifold(&h, ManifoldBase::Fixed(&omega), Side::Unstable, 0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let mut seed = target.clone();
        seed.coeffs[0] = Jet::constant(1, 0, rng.gen_range(-0.03..0.03));
        seed.coeffs[1] = Jet::constant(1, 0, rng.gen_range(-0.15..0.15));
        let steps = inclination_test(&h, &seed, &target, 6).map_err(|e| format!("seed {trial}: {e}"))?;
        for pair in steps[1..].windows(2) {
            if pair[0].distance.c1 < 1e-12 {
                break;
            }
            worst = worst.max(pair[1].distance.c1 / pair[0].distance.c1);
        }
    }
    ensure(worst <= 0.75, || format!("decay factor {worst:.3}"))?;
    Ok(format!("largest decay factor {worst:.3e}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("jet arithmetic", Duration::from_secs(5), jet_arithmetic),
        ("blender interval", Duration::from_secs(10), blender_interval),
        ("parablender coverage", Duration::from_secs(60), parablender_coverage),
        ("greedy paratangency", Duration::from_secs(30), greedy_paratangency),
        ("model self-consistency", Duration::MAX, model_self_consistency),
        ("flattening", Duration::MAX, flattening),
        ("sink creation", Duration::from_secs(120), sink_creation),
        ("dissipation margins", Duration::MAX, dissipation),
        ("sweep determinism and localization", Duration::MAX, sweep_localization),
        ("inclination", Duration::MAX, inclination),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        match timed(limit, check) {
            Ok(detail) => println!("PASS {}: {name} ({detail})", i + 1),
            Err(detail) => {
                println!("FAIL {}: {name} ({detail})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
