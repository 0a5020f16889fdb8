use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cavityforge::config::{FitConfig, RunConfig};
use cavityforge::constants::PhysicalConstants;
use cavityforge::design::{self, DesignPoint, DesignTemplate, SweepRanges};
use cavityforge::fit::{self, FitResult};
use cavityforge::stack::EmitterSpec;
use cavityforge::{csvio, dispersion, report, synth, tmm, Error, Result};

/// Open-microcavity simulation, cavity-QED figures of merit and fitting.
#[derive(Parser)]
#[command(name = "cavityforge", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, conflicts_with = "paper_baseline")]
    config: Option<PathBuf>,
    /// Use the bundled configuration of the measured cavity.
    #[arg(long, global = true)]
    paper_baseline: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CAVITYFORGE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resonance wavelength versus air gap, as CSV.
    Dispersion(DispersionArgs),
    /// Coupling report (JSON) at the ZPL-resonant air gap.
    Report(OutArg),
    /// Normalised |E| along the optical axis at the ZPL resonance, as CSV.
    Profile(OutArg),
    /// Fit a data file and print the result as JSON.
    Fit(FitArgs),
    /// Evaluate design candidates (CSV) and their Pareto set (JSON).
    Design(DesignArgs),
    /// Write a seeded synthetic data set as CSV.
    Synth(SynthArgs),
    /// Print the active configuration as JSON.
    ShowConfig(OutArg),
}

#[derive(Args)]
struct OutArg {
    /// Output file (default: stdout).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DispersionArgs {
    #[arg(long)]
    l_min_nm: Option<f64>,
    #[arg(long)]
    l_max_nm: Option<f64>,
    #[arg(long)]
    l_step_nm: Option<f64>,
    #[arg(long)]
    lambda_min_nm: Option<f64>,
    #[arg(long)]
    lambda_max_nm: Option<f64>,
    #[arg(long)]
    max_transverse_order: Option<u32>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitKind {
    Voigt,
    Lorentzian,
    Gaussian,
    Lifetime,
    G2,
}

#[derive(Args)]
struct FitArgs {
    kind: FitKind,
    /// CSV with a `quantity_unit` header.
    data: PathBuf,
    #[arg(long)]
    irf_sigma_ns: Option<f64>,
    #[arg(long)]
    fit_window_start_ns: Option<f64>,
    #[arg(long)]
    irf_center_ns: Option<f64>,
    #[arg(long)]
    pulse_period_ns: Option<f64>,
    #[arg(long)]
    window_ns: Option<f64>,
    #[arg(long)]
    normalization_delay_ns: Option<f64>,
    #[arg(long)]
    zero_delay_ns: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct DesignArgs {
    /// One point instead of the configured grid, e.g. `t_d_nm=132 L_nm=637`.
    #[arg(long, num_args = 2, value_names = ["t_d_nm=..", "L_nm=.."])]
    single: Option<Vec<String>>,
    /// Membrane thicknesses (nm) overriding the configured grid.
    #[arg(long, value_delimiter = ',')]
    t_d_nm: Option<Vec<f64>>,
    /// Air gaps (nm) overriding the configured grid.
    #[arg(long = "l-nm", value_delimiter = ',')]
    l_nm: Option<Vec<f64>>,
    /// Debye-Waller fraction for the predictions.
    #[arg(long)]
    debye_waller: Option<f64>,
    /// Pareto summary output (default: next to --out, else stderr).
    #[arg(long)]
    pareto: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Zpl2Resonance,
    Zpl6Lateral,
    RateDetuning,
    Decay,
    DecayPurcell,
    G2,
    G2Poissonian,
}

#[derive(Args)]
struct SynthArgs {
    kind: SynthKind,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Dispersion(a) => dispersion_cmd(required(cfg)?, a),
        Command::Report(o) => {
            let r = report::run_report(&required(cfg)?)?;
            emit(&o.out, &report::to_json(&r)?)
        }
        Command::Profile(o) => {
            let cfg = required(cfg)?;
            let lambda = cfg.emitter.zpl_wavelength_nm;
            let cavity = tmm::tune_to_wavelength(&cfg.cavity()?, lambda, lambda / 4.0)?;
            let p = tmm::field_profile(&cavity, lambda)?;
            emit(&o.out, &csvio::field_profile_csv(&p)?)
        }
        Command::Fit(a) => fit_cmd(cfg.map(|c| c.fit).unwrap_or_default(), a),
        Command::Design(a) => design_cmd(cfg, a),
        Command::Synth(a) => synth_cmd(a),
        Command::ShowConfig(o) => emit(&o.out, &(required(cfg)?.to_json() + "\n")),
    }
}

fn load_config(cli: &Cli) -> Result<Option<RunConfig>> {
    match (&cli.config, cli.paper_baseline) {
        (Some(p), _) => RunConfig::load(p).map(Some),
        (None, true) => Ok(Some(RunConfig::paper_baseline())),
        (None, false) => Ok(None),
    }
}

fn required(cfg: Option<RunConfig>) -> Result<RunConfig> {
    cfg.ok_or_else(|| Error::Config("this command needs --config <file> or --paper-baseline".into()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<u8> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn dispersion_cmd(cfg: RunConfig, a: DispersionArgs) -> Result<u8> {
    let mut d = cfg
        .dispersion
        .ok_or_else(|| Error::Config("configuration has no dispersion section".into()))?;
    d.l_min_nm = a.l_min_nm.unwrap_or(d.l_min_nm);
    d.l_max_nm = a.l_max_nm.unwrap_or(d.l_max_nm);
    d.l_step_nm = a.l_step_nm.unwrap_or(d.l_step_nm);
    d.lambda_min_nm = a.lambda_min_nm.unwrap_or(d.lambda_min_nm);
    d.lambda_max_nm = a.lambda_max_nm.unwrap_or(d.lambda_max_nm);
    d.max_transverse_order = a.max_transverse_order.unwrap_or(d.max_transverse_order);
    let grid = dispersion::air_gap_grid(d.l_min_nm, d.l_max_nm, d.l_step_nm)?;
    let branches = dispersion::dispersion_map(&cfg.cavity()?, &grid, d.window(), d.options())?;
    emit(&a.out.out, &csvio::dispersion_csv(&branches)?)
}

fn fit_cmd(mut opts: FitConfig, a: FitArgs) -> Result<u8> {
    opts.irf_sigma_ns = a.irf_sigma_ns.unwrap_or(opts.irf_sigma_ns);
    opts.fit_window_start_ns = a.fit_window_start_ns.unwrap_or(opts.fit_window_start_ns);
    opts.irf_center_ns = a.irf_center_ns.unwrap_or(opts.irf_center_ns);
    opts.pulse_period_ns = a.pulse_period_ns.unwrap_or(opts.pulse_period_ns);
    opts.g2_window_ns = a.window_ns.unwrap_or(opts.g2_window_ns);
    opts.normalization_delay_ns = a.normalization_delay_ns.or(opts.normalization_delay_ns);
    opts.zero_delay_ns = a.zero_delay_ns.unwrap_or(opts.zero_delay_ns);

    let series = csvio::read_series_path(&a.data)?;
    #[derive(Serialize)]
    struct Output<'a> {
        x_unit: &'a str,
        y_unit: &'a str,
        #[serde(flatten)]
        fit: &'a FitResult,
    }
    let (x_unit, y_unit) = (series.x_unit.clone(), series.y_unit.clone());
    let result = match a.kind {
        FitKind::Voigt => fit::fit_voigt(&series)?,
        FitKind::Lorentzian => fit::fit_lorentzian(&series)?,
        FitKind::Gaussian => fit::fit_gaussian(&series)?,
        FitKind::Lifetime => {
            let h = csvio::histogram_from_series(series, opts.irf_sigma_ns, opts.fit_window_start_ns)?
                .with_irf_center(opts.irf_center_ns);
            fit::fit_lifetime(&h)?
        }
        FitKind::G2 => {
            let r = fit::g2_pulse_areas(&csvio::to_ns(series)?, opts.g2_options())?;
            return emit(&a.out.out, &(serde_json::to_string_pretty(&r)? + "\n"));
        }
    };
    let text = serde_json::to_string_pretty(&Output {
        x_unit: &x_unit,
        y_unit: &y_unit,
        fit: &result,
    })? + "\n";
    emit(&a.out.out, &text)?;
    if result.converged {
        Ok(0)
    } else {
        eprintln!("warning: fit did not converge; estimates written anyway");
        Ok(4)
    }
}

fn parse_single(items: &[String]) -> Result<(f64, f64)> {
    let mut t = None;
    let mut l = None;
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got '{item}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("'{v}' is not a number")))?;
        match k.trim() {
            "t_d_nm" => t = Some(v),
            "L_nm" | "l_nm" => l = Some(v),
            other => return Err(Error::InvalidInput(format!("unknown design key '{other}'"))),
        }
    }
    match (t, l) {
        (Some(t), Some(l)) => Ok((t, l)),
        _ => Err(Error::InvalidInput("--single needs t_d_nm=.. and L_nm=..".into())),
    }
}

fn design_cmd(cfg: Option<RunConfig>, a: DesignArgs) -> Result<u8> {
    let sweep_cfg = cfg.as_ref().and_then(|c| c.sweep.clone());
    let base_emitter = cfg.as_ref().map_or_else(EmitterSpec::nv_center, |c| c.emitter.clone());
    let constants = cfg.as_ref().map_or(PhysicalConstants::CODATA, |c| c.constants);
    let template = sweep_cfg.as_ref().map_or_else(DesignTemplate::default, |s| s.template.clone());
    let dw = a
        .debye_waller
        .or(sweep_cfg.as_ref().map(|s| s.debye_waller))
        .unwrap_or(EmitterSpec::DW_DESIGN);
    let emitter = base_emitter.with_debye_waller(dw);
    emitter.validate()?;

    let mut ranges = match (&a.single, &sweep_cfg) {
        (Some(items), _) => {
            let (t, l) = parse_single(items)?;
            SweepRanges {
                t_d_nm: vec![t],
                l_nm: vec![l],
                terminations: vec![None],
            }
        }
        (None, Some(s)) => s.ranges(),
        (None, None) => SweepRanges {
            t_d_nm: vec![],
            l_nm: vec![],
            terminations: vec![None],
        },
    };
    if let Some(t) = a.t_d_nm {
        ranges.t_d_nm = t;
    }
    if let Some(l) = a.l_nm {
        ranges.l_nm = l;
    }
    let result = design::sweep(&ranges, &template, &emitter, &constants)?;
    emit(&a.out.out, &csvio::design_csv(&result)?)?;

    #[derive(Serialize)]
    struct ParetoSummary<'a> {
        valid_rows: usize,
        invalid_rows: usize,
        pareto: Vec<&'a DesignPoint>,
        template: &'a DesignTemplate,
        emitter: &'a EmitterSpec,
    }
    let valid = result.rows.iter().filter(|r| r.point.is_some()).count();
    let summary = ParetoSummary {
        valid_rows: valid,
        invalid_rows: result.rows.len() - valid,
        pareto: result.pareto.iter().filter_map(|&i| result.rows[i].point.as_ref()).collect(),
        template: &result.template,
        emitter: &result.emitter,
    };
    let json = report::to_json(&summary)?;
    let pareto_path = a.pareto.or_else(|| a.out.out.as_deref().map(pareto_sibling));
    match pareto_path {
        Some(p) => fs::write(p, json)?,
        None => eprint!("{json}"),
    }
    Ok(0)
}

fn pareto_sibling(p: &Path) -> PathBuf {
    p.with_extension("pareto.json")
}

fn synth_cmd(a: SynthArgs) -> Result<u8> {
    let text = match a.kind {
        SynthKind::Zpl2Resonance => csvio::series_csv(&synth::zpl2_resonance(a.seed)?, "delta_l_pm", "pl_arb")?,
        SynthKind::Zpl6Lateral => csvio::series_csv(&synth::zpl6_lateral(a.seed)?, "delta_x_um", "rate_per_s")?,
        SynthKind::RateDetuning => csvio::series_csv(&synth::rate_vs_detuning(a.seed)?, "delta_l_nm", "rate_per_s")?,
        SynthKind::Decay => csvio::histogram_csv(&synth::decay_histogram(&synth::DecaySpec::bulk(), Some(a.seed), 0.0)?)?,
        SynthKind::DecayPurcell => csvio::histogram_csv(&synth::decay_histogram(
            &synth::DecaySpec::purcell_enhanced(),
            Some(a.seed),
            0.0,
        )?)?,
        SynthKind::G2 => csvio::series_csv(
            &synth::g2_histogram(&synth::G2Spec::single_emitter(), Some(a.seed))?,
            "delay_ns",
            "coincidences_counts",
        )?,
        SynthKind::G2Poissonian => csvio::series_csv(
            &synth::g2_histogram(&synth::G2Spec::poissonian(), Some(a.seed))?,
            "delay_ns",
            "coincidences_counts",
        )?,
    };
    emit(&a.out.out, &text)
}
