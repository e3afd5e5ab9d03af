use std::io::Write;
use std::path::Path;
use std::time::Instant;

use sabnn_core::data::Dataset;
use sabnn_core::eval::{evaluate, sampled_sharpness, EigenOptions, EvalOptions, EvalReport, SharpnessOptions};
use sabnn_core::flatness::{
    gibbs_oracle, gibbs_posterior_grid, pac_bayes_bound_terms, total_variation, BoundInputs, GeometryKind, GibbsGrid,
};
use sabnn_core::models::{Activation, MlpSpec};
use sabnn_core::rng::{stream, Stream};
use sabnn_core::trainers::{train, Method, TrainConfig};

use crate::args::{BoundArgs, EvalArgs, GibbsArgs, SharpnessArgs, TrainArgs};
use crate::checkpoint::{Checkpoint, FORMAT_VERSION};
use crate::config_file::ConfigFile;
use crate::error::{usage, CliError, CliResult};
use crate::source::{DataSpec, Source, Split};

/// Radius used when `--rho` is not given: the SAM default, with smaller radii for the
/// variational methods and smaller still under the `|μ|/σ` geometry.
pub fn default_rho(method: Method, geometry: GeometryKind) -> f64 {
    match (method.is_variational(), geometry) {
        (true, GeometryKind::MuOverSigma) => 5e-4,
        (true, GeometryKind::Identity) => 5e-3,
        _ => 0.05,
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn parse_hidden(s: &str) -> CliResult<Vec<usize>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|w| w.trim().parse::<usize>().map_err(|_| usage(format!("--hidden: invalid width {w:?}"))))
        .collect()
}

/// Resolved inputs of a training run.
pub struct TrainPlan {
    pub config: TrainConfig,
    pub spec: MlpSpec,
    pub data: DataSpec,
    pub out: std::path::PathBuf,
    pub warnings: Vec<String>,
}

pub fn plan_train(args: &TrainArgs) -> CliResult<TrainPlan> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let d = TrainConfig::default();
    let method = file.pick_or(args.method, "method", d.method)?;
    let mut geometry = file.pick_or(args.geometry, "geometry", d.geometry)?;
    let mut warnings = Vec::new();
    if geometry == GeometryKind::MuOverSigma && !method.is_variational() {
        warnings.push(format!("geometry mu-over-sigma needs a learned σ; method {method} falls back to identity"));
        geometry = GeometryKind::Identity;
    }
    let config = TrainConfig {
        method,
        flat: file.switch(args.flat, "flat")?,
        geometry,
        rho: file.pick_or(args.rho, "rho", default_rho(method, geometry))?,
        lambda: file.pick(args.lambda, "lambda")?,
        learning_rate: file.pick_or(args.lr, "lr", d.learning_rate)?,
        lr_schedule: file.pick_or(args.lr_schedule, "lr-schedule", d.lr_schedule)?,
        epochs: file.pick_or(args.epochs, "epochs", d.epochs)?,
        batch_size: file.pick_or(args.batch_size, "batch-size", d.batch_size)?,
        seed: file.pick_or(args.seed, "seed", d.seed)?,
        prior_tau: file.pick_or(args.prior_tau, "prior-tau", d.prior_tau)?,
        log_sigma_init: file.pick_or(args.log_sigma_init, "log-sigma-init", d.log_sigma_init)?,
        mc_train_samples: file.pick_or(args.mc_train_samples, "mc-train-samples", d.mc_train_samples)?,
        sgld_temperature: file.pick(args.sgld_temperature, "sgld-temperature")?,
        swag_start_epoch: file.pick(args.swag_start_epoch, "swag-start-epoch")?,
        swag_rank: file.pick_or(args.swag_rank, "swag-rank", d.swag_rank)?,
        ensemble_size: file.pick_or(args.ensemble_size, "ensemble-size", d.ensemble_size)?,
        keep_prob: file.pick_or(args.keep_prob, "keep-prob", d.keep_prob)?,
    };
    let hidden = parse_hidden(&file.pick_or(args.hidden.clone(), "hidden", "16,16".to_string())?)?;
    let activation = file.pick_or(args.activation, "activation", Activation::Relu)?;
    let source: Source = file.pick(args.data.data.clone(), "data")?.ok_or_else(|| usage("--data is required"))?;
    let data = DataSpec {
        source,
        train_fraction: file.pick(args.data.train_fraction, "train-fraction")?,
        split_seed: file.pick_or(args.data.split_seed, "split-seed", 0)?,
    };
    let out = file
        .pick(args.out.as_ref().map(|p| p.display().to_string()), "out")?
        .ok_or_else(|| usage("--out is required"))?
        .into();
    file.finish()?;
    if !config.prior_tau.is_finite() {
        return Err(usage("--prior-tau must be finite"));
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    // widths need the data dimensions, so the spec is completed in `run_train`
    let spec = MlpSpec::uniform(std::iter::once(1).chain(hidden.iter().copied()).chain([2]).collect(), activation)
        .map_err(|e| usage(format!("--hidden: {e}")))?;
    Ok(TrainPlan { config, spec, data, out, warnings })
}

fn spec_for(template: &MlpSpec, ds: &Dataset) -> CliResult<MlpSpec> {
    let mut widths = template.widths().to_vec();
    widths[0] = ds.dim();
    *widths.last_mut().expect("at least two widths") = ds.num_classes();
    Ok(MlpSpec::new(widths, template.activations().to_vec())?)
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let plan = plan_train(args)?;
    for w in &plan.warnings {
        writeln!(err, "warning: {w}").map_err(io)?;
    }
    let ds = plan.data.load(Split::Train)?;
    let spec = spec_for(&plan.spec, &ds)?;
    let start = Instant::now();
    let trained = train(&plan.config, &spec, &ds)?;
    let elapsed = start.elapsed().as_secs_f64();
    let ck = Checkpoint {
        format_version: FORMAT_VERSION,
        method: plan.config.method,
        seed: plan.config.seed,
        config: plan.config,
        spec,
        data: plan.data,
        fingerprint: ds.fingerprint(),
        payload: trained.model,
    };
    ck.save(&plan.out)?;
    for w in &plan.warnings {
        writeln!(out, "warning: {w}").map_err(io)?;
    }
    let final_loss = trained.epoch_losses.last().copied().unwrap_or(f64::NAN);
    writeln!(out, "method {}{}", if ck.config.flat { "flat-" } else { "" }, ck.method).map_err(io)?;
    writeln!(out, "final_train_loss {final_loss:.10}").map_err(io)?;
    writeln!(out, "wall_time_s {elapsed:.3}").map_err(io)?;
    writeln!(out, "checkpoint {}", plan.out.display()).map_err(io)?;
    Ok(())
}

/// Loads the evaluation rows for a checkpoint; a different source must match its shape.
fn eval_data(ck: &Checkpoint, data: Option<&Source>, split: Option<Split>) -> CliResult<Dataset> {
    let split = split.unwrap_or(if ck.data.train_fraction.is_some() { Split::Test } else { Split::Train });
    let spec = match data {
        Some(src) => DataSpec { source: src.clone(), ..ck.data.clone() },
        None => ck.data.clone(),
    };
    let ds = spec.load(split)?;
    if ds.dim() != ck.fingerprint.d || ds.num_classes() != ck.fingerprint.num_classes {
        return Err(CliError::Runtime(format!(
            "dataset has {} features and {} classes; checkpoint was trained on {} and {}",
            ds.dim(),
            ds.num_classes(),
            ck.fingerprint.d,
            ck.fingerprint.num_classes
        )));
    }
    Ok(ds)
}

pub fn eval_report(args: &EvalArgs) -> CliResult<EvalReport> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let d = EvalOptions::default();
    let n_samples = file.pick_or(args.n_samples, "n-samples", d.n_samples)?;
    let ece_bins = file.pick_or(args.ece_bins, "ece-bins", d.ece_bins)?;
    let seed = file.pick_or(args.seed, "seed", d.seed)?;
    let sharpness_rho = file.pick(args.sharpness_rho, "sharpness-rho")?;
    let eigs = file.pick(args.eigs, "eigs")?;
    let data = file.pick(args.data.clone(), "data")?;
    let split = file.pick(args.split, "split")?;
    file.finish()?;
    if n_samples == 0 || ece_bins == 0 {
        return Err(usage("--n-samples and --ece-bins must be positive"));
    }
    let ck = Checkpoint::load(&args.checkpoint)?;
    let ds = eval_data(&ck, data.as_ref(), split)?;
    let options = EvalOptions {
        n_samples,
        ece_bins,
        seed,
        sharpness: sharpness_rho.map(|rho| SharpnessOptions { rho, ..Default::default() }),
        eigen: eigs.map(|k| EigenOptions { k, ..Default::default() }),
    };
    Ok(evaluate(&ck.payload, &ck.spec, &ds, &options)?)
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let report = eval_report(args)?;
    writeln!(out, "accuracy {:.10}", report.accuracy).map_err(io)?;
    writeln!(out, "nll {:.10}", report.nll).map_err(io)?;
    writeln!(out, "ece {:.10}", report.ece).map_err(io)?;
    writeln!(out, "n_samples {}", report.n_ensemble_samples).map_err(io)?;
    if let Some(s) = report.sharpness {
        writeln!(out, "sharpness {s:.10}").map_err(io)?;
    }
    if let Some(e) = &report.eigenvalues {
        for (i, v) in e.values.iter().enumerate() {
            writeln!(out, "lambda{} {v:.10}", i + 1).map_err(io)?;
        }
        writeln!(out, "lambda_ratio {:.10}", e.ratio).map_err(io)?;
    }
    if let Some(path) = &args.reliability_out {
        std::fs::write(path, report.reliability.to_csv())?;
        writeln!(out, "reliability {}", path.display()).map_err(io)?;
    }
    Ok(())
}

pub fn cmd_sharpness(args: &SharpnessArgs, out: &mut dyn Write) -> CliResult<()> {
    if !(args.rho > 0.0) || args.samples == 0 || args.steps == 0 {
        return Err(usage("--rho, --samples and --steps must be positive"));
    }
    let ck = Checkpoint::load(&args.checkpoint)?;
    let ds = eval_data(&ck, args.data.as_ref(), args.split)?;
    let values = sampled_sharpness(
        &ck.payload,
        &ck.spec,
        &ds,
        args.rho,
        args.samples,
        args.steps,
        &mut stream(args.seed, Stream::Sharpness),
    )?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "model {i} sharpness {v:.10}").map_err(io)?;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    writeln!(out, "mean {mean:.10}").map_err(io)?;
    Ok(())
}

pub fn cmd_bound(args: &BoundArgs, out: &mut dyn Write) -> CliResult<()> {
    let inputs = BoundInputs { omega: args.omega, ..BoundInputs::new(args.k, args.n, args.r, args.rho, args.delta) };
    let t = pac_bayes_bound_terms(&inputs).map_err(|e| usage(e.to_string()))?;
    writeln!(out, "covering_log {}", t.covering_log).map_err(io)?;
    writeln!(out, "sigma {}", t.sigma).map_err(io)?;
    writeln!(out, "inv_sqrt_n {}", t.inv_sqrt_n).map_err(io)?;
    writeln!(out, "omega_term {}", t.omega_term).map_err(io)?;
    writeln!(out, "sqrt_term {}", t.sqrt_term).map_err(io)?;
    writeln!(out, "total {}", t.total).map_err(io)?;
    Ok(())
}

/// Grid rows and optional coordinates.
pub fn read_grid(path: &Path) -> CliResult<(GibbsGrid, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut labels = Vec::new();
    let mut loss = Vec::new();
    let mut prior = Vec::new();
    let mut coords = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("label")) {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |what: &str| CliError::Runtime(format!("grid row {}: {what}", i + 1));
        if cells.len() < 3 {
            return Err(bad("expected label,loss,prior[,coords...]"));
        }
        labels.push(cells[0].to_string());
        loss.push(cells[1].parse::<f64>().map_err(|_| bad("invalid loss"))?);
        prior.push(cells[2].parse::<f64>().map_err(|_| bad("invalid prior"))?);
        coords.push(
            cells[3..]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| bad("invalid coordinate")))
                .collect::<CliResult<Vec<f64>>>()?,
        );
    }
    Ok((GibbsGrid::from_weights(labels, loss, prior)?, coords))
}

pub fn cmd_gibbs(args: &GibbsArgs, out: &mut dyn Write) -> CliResult<()> {
    let (mut grid, coords) = read_grid(&args.grid)?;
    if let Some(rho) = args.sharpen_rho {
        let d = coords.first().map_or(0, Vec::len);
        if d == 0 || coords.iter().any(|c| c.len() != d) {
            return Err(usage("--sharpen-rho needs the same number of coordinates on every grid row"));
        }
        grid = grid.sharpened(&coords, rho)?;
    }
    let closed = gibbs_posterior_grid(&grid, args.lambda)?;
    let oracle = if args.no_oracle { None } else { Some(gibbs_oracle(&grid, args.lambda, args.resolution)?) };
    writeln!(out, "label,loss,prior,closed_form{}", if oracle.is_some() { ",oracle" } else { "" }).map_err(io)?;
    for i in 0..grid.len() {
        write!(out, "{},{},{},{}", grid.labels()[i], grid.loss()[i], grid.prior()[i], closed[i]).map_err(io)?;
        if let Some(o) = &oracle {
            write!(out, ",{}", o[i]).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    if let Some(o) = &oracle {
        writeln!(out, "total_variation {}", total_variation(&closed, o)).map_err(io)?;
    }
    Ok(())
}
