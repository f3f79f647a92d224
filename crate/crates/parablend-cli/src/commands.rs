use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context};
use parablend::dynamics::{Construction, FamilyHandle, FamilyParams};
use parablend::ifs_blender::{
    factorized_reachable_set, jet_coverage_certificate, limit_set_cover, standard_blender, CoverageRecord, Parablender,
    TargetBox,
};
use parablend::paratangency::{
    default_tolerance, greedy_code, paratangency_verdict, random_admissible_family, sampled_chart_verdicts,
};
use parablend::sink_forge::{flatten_experiment, sink_experiment};
use parablend::sweep::{emit_plots, export_report, import_json, run_sweep, ExportFormat, SweepConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::FileConfig;
use crate::{FlattenArgs, IfsCoverageArgs, ParatangencyArgs, ReportArgs, SinksArgs, SweepArgs};

pub struct Outcome {
    pub passed: bool,
    pub value: Value,
}

pub fn emit(o: &Outcome, path: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(&json!({ "passed": o.passed, "result": o.value }))?;
    println!("{text}");
    if let Some(p) = path {
        std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

pub fn ifs_coverage(file: &FileConfig, args: &IfsCoverageArgs) -> anyhow::Result<Outcome> {
    let cfg = &file.ifs_coverage;
    let depth = args.depth.unwrap_or(cfg.depth);
    let cover = limit_set_cover(&standard_blender(), depth)?;
    let limit = 2.0 * (2.0f64 / 3.0).powi(depth as i32);
    let mut passed = cover.within(limit);
    let mut value = json!({
        "depth": depth,
        "hausdorff_bound": cover.hausdorff_bound,
        "limit": limit,
        "union_distance": cover.union_distance,
        "cylinder_diameter": cover.cylinder_diameter,
        "intervals": cover.intervals.len(),
    });
    if let Some(jet_depth) = args.jet_depth.or(cfg.jet_depth) {
        let k = args.k.unwrap_or(cfg.k);
        let d = args.d.unwrap_or(cfg.d);
        let eps = args.epsilon.unwrap_or(cfg.epsilon);
        let (Some(lower), Some(upper)) = (
            args.lower.clone().or_else(|| cfg.lower.clone()),
            args.upper.clone().or_else(|| cfg.upper.clone()),
        ) else {
            bail!("jet coverage needs --lower and --upper");
        };
        let set = factorized_reachable_set(&Parablender::new(k, d, eps), jet_depth)?;
        let target = TargetBox::new(lower, upper);
        let outcome = jet_coverage_certificate(&set, &target);
        passed &= outcome.is_covered();
        value["jet"] = serde_json::to_value(CoverageRecord::new(&target, jet_depth, eps, &outcome))?;
        value["jet_outcome"] = serde_json::to_value(&outcome)?;
    }
    Ok(Outcome { passed, value })
}

pub fn paratangency(file: &FileConfig, args: &ParatangencyArgs) -> anyhow::Result<Outcome> {
    let cfg = &file.paratangency;
    let k = args.k.unwrap_or(cfg.k);
    let d = args.d.unwrap_or(cfg.d);
    let eps = args.epsilon.unwrap_or(cfg.epsilon);
    let depth = args.depth.unwrap_or(cfg.depth);
    let seed = args.seed.unwrap_or(cfg.seed);
    let h = FamilyHandle::build(FamilyParams::new(Construction::Base, k, d).epsilon(eps))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = random_admissible_family(k, d, eps, &vec![0.0; k], &mut rng);
    let trace = greedy_code(&h, &family, depth)?;
    let margins_hold = trace.steps.iter().all(|s| s.margins.holds());
    let (verdict, charts, eta) = match &trace.eta {
        Some(eta) => (
            paratangency_verdict(eta, default_tolerance),
            sampled_chart_verdicts(eta, default_tolerance, eps, seed),
            eta.derivatives().to_vec(),
        ),
        None => (Vec::new(), Vec::new(), Vec::new()),
    };
    let passed = margins_hold && verdict.iter().all(|v| *v) && charts.iter().flatten().all(|v| *v);
    let word: Vec<String> = trace
        .word
        .iter()
        .map(|l| l.iter().map(|s| if *s > 0 { '+' } else { '-' }).collect())
        .collect();
    Ok(Outcome {
        passed,
        value: json!({
            "k": k, "d": d, "epsilon": eps, "depth": depth, "seed": seed,
            "word": word,
            "smallest_margin": trace.smallest_margin(),
            "eta_derivatives": eta,
            "tolerance": default_tolerance(depth),
            "verdict": verdict,
            "chart_verdicts": charts,
        }),
    })
}

pub fn flatten(file: &FileConfig, args: &FlattenArgs) -> anyhow::Result<Outcome> {
    let cfg = &file.flatten;
    let d = args.d.unwrap_or(cfg.d);
    let alpha = args.alpha.unwrap_or(cfg.alpha);
    let power = args.power.or(cfg.power).unwrap_or(d as u32 + 1);
    let samples = args.samples.unwrap_or(cfg.samples);
    let run = flatten_experiment(d, power, alpha, samples)?;
    Ok(Outcome {
        passed: run.passed(),
        value: json!({
            "d": d, "power": power,
            "max_residual": run.max_residual(),
            "outside_identical": run.outside_identical,
            "report": run.report,
            "residuals": run.residuals,
        }),
    })
}

pub fn sinks(file: &FileConfig, args: &SinksArgs) -> anyhow::Result<Outcome> {
    let cfg = &file.sinks;
    let run = sink_experiment(
        args.d.unwrap_or(cfg.d),
        args.n.unwrap_or(cfg.n),
        args.alpha.unwrap_or(cfg.alpha),
        args.grid.unwrap_or(cfg.grid),
        args.boxes.unwrap_or(cfg.boxes),
        args.max_period.unwrap_or(cfg.max_period),
    )?;
    Ok(Outcome {
        passed: run.passed(),
        value: serde_json::to_value(&run)?,
    })
}

pub fn sweep(file: &FileConfig, args: &SweepArgs) -> anyhow::Result<Outcome> {
    let mut cfg: SweepConfig = file.sweep.clone().unwrap_or_default();
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = args.$field.clone() { cfg.$field = v; })* };
    }
    set!(k, d, epsilon, depth, alpha, n, seed, disabled);
    if args.grid.is_some() {
        cfg.grid = args.grid;
    }
    if args.control {
        cfg.perturb = false;
    }
    if args.no_trapping {
        cfg.trapping = false;
    }
    for (slot, arg) in [
        (&mut cfg.output.csv, &args.csv),
        (&mut cfg.output.svg, &args.svg),
        (&mut cfg.output.certificates, &args.certificates),
    ] {
        if arg.is_some() {
            *slot = arg.clone();
        }
    }
    cfg.validate()?;
    let rep = run_sweep(&cfg)?;
    let mut written = Vec::new();
    if let Some(p) = &cfg.output.csv {
        written.extend(export_report(&rep, ExportFormat::Csv, p)?);
    }
    for p in [&cfg.output.json, &cfg.output.certificates].into_iter().flatten() {
        written.extend(export_report(&rep, ExportFormat::Json, p)?);
    }
    if let Some(p) = &cfg.output.svg {
        emit_plots(&rep, p)?;
        written.push(p.clone());
    }
    let failures: Vec<usize> = rep.lattice.iter().filter(|l| l.error.is_some()).map(|l| l.index).collect();
    let passed = if cfg.perturb {
        failures.is_empty() && rep.lattice.iter().all(|l| l.trapping.as_ref().is_none_or(|t| t.holds))
    } else {
        rep.rows.iter().all(|r| r.sinks == 0)
    };
    Ok(Outcome {
        passed,
        value: json!({
            "grid_points": rep.rows.len(),
            "lattice": rep.lattice,
            "coverage": rep.coverage,
            "thickened_coverage": rep.thickened_coverage,
            "failed_windows": failures,
            "written": written,
        }),
    })
}

pub fn report(args: &ReportArgs) -> anyhow::Result<Outcome> {
    let input = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let rep = import_json(BufReader::new(input))?;
    let mut written = Vec::new();
    if let Some(p) = &args.csv {
        written.extend(export_report(&rep, ExportFormat::Csv, p)?);
    }
    if let Some(p) = &args.svg {
        emit_plots(&rep, p)?;
        written.push(p.clone());
    }
    Ok(Outcome {
        passed: true,
        value: json!({
            "grid_points": rep.rows.len(),
            "coverage": rep.coverage,
            "thickened_coverage": rep.thickened_coverage,
            "written": written,
        }),
    })
}
