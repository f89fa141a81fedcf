//! Command-line interface of the `optoread` binary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::calib::{stark_attenuation, thermal_calibration, vna_efficiency, StarkDataset, VnaRecord};
use crate::chain::{
    fixture_noise_equivalent_power, noise_budget, signal_photons, snr, ChainConfig, NoiseBudget, ReadoutPath,
};
use crate::device::{default_paper_device, load_device_params, DeviceParams};
use crate::error::{Error, Result};
use crate::estimate::{
    fit_bimodal_gaussian, fit_damped_cosine, fit_exponential, fit_line, fit_lorentzian, fit_notch_resonator,
    FitResult,
};
use crate::experiments::{builtin_scenario_names, parse_override, run_scenario, set_dotted, Scenario};
use crate::units::{photon_energy, watts_to_dbm};

#[derive(Debug, Parser)]
#[command(name = "optoread", version, about = "Simulate, calibrate and fit optical qubit readout")]
pub struct Cli {
    /// Maximum number of worker threads (default: all cores). Results do not
    /// depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a shipped scenario or a scenario file and write its outputs.
    Simulate(SimulateArgs),
    /// Run a calibration procedure on measured or synthetic data.
    Calibrate {
        #[command(subcommand)]
        which: CalibrateCommand,
    },
    /// Fit a model to data from a CSV file.
    Fit(FitArgs),
    /// Print the added-noise budget of a readout chain.
    Budget(BudgetArgs),
    /// List the shipped scenarios.
    ListScenarios,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Shipped scenario name or path to a scenario JSON file.
    #[arg(long, value_name = "NAME|PATH")]
    pub scenario: String,
    /// Device parameter file replacing the scenario's device.
    #[arg(long, value_name = "FILE")]
    pub device: Option<PathBuf>,
    /// Master seed replacing the scenario's.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a resolved-config value, e.g. `chain.pump.power_w=31e-6`.
    /// Repeatable; the key must exist.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output root; the run goes into `<out>/<scenario name>/`.
    #[arg(long, value_name = "DIR", default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CalibrateCommand {
    /// Line attenuation from a Stark-shift dataset
    /// (CSV columns `power_dbm,qubit_freq_hz`).
    Stark {
        /// Stark-shift dataset CSV.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Device parameter file (default: the shipped device).
        #[arg(long, value_name = "FILE")]
        device: Option<PathBuf>,
        /// Added to the fitted attenuation (dB).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        offset_db: f64,
        /// Write the JSON result here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Thermal noise equivalent power from a calibration tone.
    Thermal {
        /// Tone power at room temperature (dBm).
        #[arg(long, allow_negative_numbers = true)]
        tone_dbm: f64,
        /// Input line attenuation (dB).
        #[arg(long, allow_negative_numbers = true)]
        attenuation_db: f64,
        /// Measured tone-to-thermal-noise ratio (dB).
        #[arg(long, allow_negative_numbers = true)]
        snr_db: f64,
        /// Write the JSON result here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Conversion efficiency from a four-port scattering record (CSV
    /// columns `frequency_hz` and `s_eo_re,s_eo_im,s_oe_re,s_oe_im,
    /// s_ee_re,s_ee_im,s_oo_re,s_oo_im`).
    Vna {
        /// Scattering record CSV.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Sideband correction 2α (default: the device's value).
        #[arg(long)]
        two_alpha: Option<f64>,
        /// Device parameter file (default: the shipped device).
        #[arg(long, value_name = "FILE")]
        device: Option<PathBuf>,
        /// Write the JSON result here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    /// `y = a + b·x`; columns x, y.
    Line,
    /// Lorentzian peak or dip; columns x, y.
    Lorentzian,
    /// Exponential decay; columns t (s), y.
    Exponential,
    /// Damped cosine; columns t (s), y.
    DampedCosine,
    /// Notch resonator; columns frequency (Hz), real, imaginary.
    Notch,
    /// Two equal-width Gaussians; one column of samples.
    Bimodal,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Model to fit.
    #[arg(long, value_enum)]
    pub model: FitModel,
    /// CSV with a header row; only the leading columns are read.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Write the JSON result here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Microwave,
    Optical,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Device parameter file (default: the shipped device).
    #[arg(long, value_name = "FILE")]
    pub device: Option<PathBuf>,
    /// Readout path whose defaults are used.
    #[arg(long, value_enum, default_value = "microwave")]
    pub path: PathArg,
    /// Override a chain value, e.g. `chain.pump.power_w=31e-6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Write the JSON result here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Per-component noise densities (dBm/Hz); `None` for a zero component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentDensities {
    pub shot: Option<f64>,
    pub thermal: Option<f64>,
    pub amplifier: Option<f64>,
    pub excess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub chain: ChainConfig,
    pub budget: NoiseBudget,
    pub components_dbm_per_hz: ComponentDensities,
    pub signal_photons: f64,
    pub snr: f64,
    /// Thermal noise equivalent power of the calibration fixture (dBm).
    pub thermal_noise_equivalent_power_dbm: f64,
    /// Thermal microwave emission of the transducer (dBm); reported only.
    pub transducer_thermal_emission_dbm: f64,
}

/// Component-wise added noise of `cfg`, in photons and dBm/Hz.
pub fn budget_report(dev: &DeviceParams, cfg: &ChainConfig) -> Result<BudgetReport> {
    cfg.validate()?;
    let b = noise_budget(dev, cfg, cfg.transduction_efficiency)?;
    let quantum = photon_energy(cfg.readout_omega());
    let density = |n: f64| (n > 0.0).then(|| watts_to_dbm(n * quantum).map(|p| p.0)).transpose();
    let n_sig = signal_photons(cfg);
    Ok(BudgetReport {
        chain: cfg.clone(),
        budget: b,
        components_dbm_per_hz: ComponentDensities {
            shot: density(b.shot_photons)?,
            thermal: density(b.thermal_photons)?,
            amplifier: density(b.amplifier_photons)?,
            excess: density(b.excess_photons)?,
        },
        signal_photons: n_sig,
        snr: snr(n_sig, b.total_photons),
        thermal_noise_equivalent_power_dbm: watts_to_dbm(fixture_noise_equivalent_power(&dev.thermal)?)?.0,
        transducer_thermal_emission_dbm: dev.transducer.thermal_emission_dbm,
    })
}

fn load_device(path: &Option<PathBuf>) -> Result<DeviceParams> {
    match path {
        Some(p) => load_device_params(p),
        None => Ok(default_paper_device()),
    }
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter().map(|s| parse_override(s)).collect()
}

fn open_input(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::InvalidArgument(format!("cannot open {}: {e}", path.display())))
}

/// Leading `n` numeric columns of a CSV with a header row.
fn read_columns(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut cols = vec![Vec::new(); n];
    let mut reader = csv::Reader::from_reader(open_input(path)?);
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < n {
            return Err(Error::validation(
                format!("{} row {}", path.display(), line + 2),
                format!("needs {n} columns, found {}", rec.len()),
            ));
        }
        for (k, col) in cols.iter_mut().enumerate() {
            let v: f64 = rec[k].trim().parse().map_err(|_| {
                Error::validation(
                    format!("{} row {} column {}", path.display(), line + 2, k + 1),
                    format!("{:?} is not a number", &rec[k]),
                )
            })?;
            col.push(v);
        }
    }
    Ok(cols)
}

fn emit(value: &Value, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => crate::experiments::write_json(p, value),
        None => {
            let mut text = serde_json::to_string_pretty(value).expect("serializable");
            text.push('\n');
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("writing to standard output", e))
        }
    }
}

fn named(result: &FitResult, names: &[&str]) -> Value {
    let params: serde_json::Map<String, Value> = names
        .iter()
        .zip(result.params.iter().zip(&result.sigma))
        .map(|(n, (v, s))| (n.to_string(), json!({"value": v, "sigma": s})))
        .collect();
    json!({
        "parameters": params,
        "converged": result.converged,
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
    })
}

/// Outcome of a command that ran: `Ok(true)` if it succeeded, `Ok(false)`
/// for a completed computation whose result is not usable (such as a fit
/// that did not converge).
fn run_fit(args: &FitArgs) -> Result<bool> {
    let (value, ok) = match args.model {
        FitModel::Bimodal => {
            let c = read_columns(&args.input, 1)?;
            let b = fit_bimodal_gaussian(&c[0])?;
            let mut v = named(&b.result, &["mu0", "mu1", "sigma", "weight"]);
            v["snr"] = json!(b.snr);
            v["delta_chi2"] = json!(b.delta_chi2);
            v["degenerate"] = json!(b.degenerate);
            v["n_bins"] = json!(b.n_bins);
            (v, b.result.converged && !b.degenerate)
        }
        FitModel::Notch => {
            let c = read_columns(&args.input, 3)?;
            let s: Vec<Complex64> = c[1].iter().zip(&c[2]).map(|(&re, &im)| Complex64::new(re, im)).collect();
            let r = fit_notch_resonator(&c[0], &s)?;
            let v = named(&r, &["f0_hz", "kappa_ee_hz", "kappa_ei_hz", "amplitude", "phase", "delay_s"]);
            (v, r.converged)
        }
        m => {
            let c = read_columns(&args.input, 2)?;
            let (x, y) = (&c[0], &c[1]);
            let (r, names): (FitResult, &[&str]) = match m {
                FitModel::Line => (fit_line(x, y)?, &["intercept", "slope"]),
                FitModel::Lorentzian => (fit_lorentzian(x, y)?, &["center", "fwhm", "amplitude", "offset"]),
                FitModel::Exponential => (fit_exponential(x, y)?, &["t1_s", "amplitude", "offset"]),
                FitModel::DampedCosine => (
                    fit_damped_cosine(x, y)?,
                    &["t2_star_s", "detuning_rad_per_s", "phase", "amplitude", "offset"],
                ),
                FitModel::Notch | FitModel::Bimodal => unreachable!(),
            };
            let ok = r.converged;
            (named(&r, names), ok)
        }
    };
    let mut value = value;
    value["model"] = json!(format!("{:?}", args.model).to_lowercase());
    emit(&value, &args.out)?;
    if !ok {
        eprintln!("optoread: fit did not converge or is not identifiable");
    }
    Ok(ok)
}

fn run_calibrate(which: &CalibrateCommand) -> Result<bool> {
    match which {
        CalibrateCommand::Stark {
            input,
            device,
            offset_db,
            out,
        } => {
            let dev = load_device(device)?;
            let ds = StarkDataset::from_csv_reader(open_input(input)?)?;
            let cal = stark_attenuation(&dev, &ds, *offset_db)?;
            for w in &cal.warnings {
                eprintln!("optoread: warning: {w:?}");
            }
            emit(&serde_json::to_value(&cal).expect("serializable"), out)?;
            Ok(true)
        }
        CalibrateCommand::Thermal {
            tone_dbm,
            attenuation_db,
            snr_db,
            out,
        } => {
            for (name, v) in [("--tone-dbm", tone_dbm), ("--attenuation-db", attenuation_db), ("--snr-db", snr_db)] {
                if !v.is_finite() {
                    return Err(Error::validation(name, "must be finite"));
                }
            }
            let cal = thermal_calibration(*tone_dbm, *attenuation_db, *snr_db);
            emit(&serde_json::to_value(cal).expect("serializable"), out)?;
            Ok(true)
        }
        CalibrateCommand::Vna {
            input,
            two_alpha,
            device,
            out,
        } => {
            let two_alpha = match two_alpha {
                Some(a) => *a,
                None => load_device(device)?.setup.vna_two_alpha,
            };
            let rec = VnaRecord::from_csv_reader(open_input(input)?, two_alpha)?;
            let eta = vna_efficiency(&rec)?;
            let rows: Vec<Value> = rec
                .frequencies_hz
                .iter()
                .zip(&eta)
                .map(|(f, e)| {
                    json!({
                        "frequency_hz": f,
                        "eta": e,
                        "eta_db": e.filter(|v| *v > 0.0).map(|v| 10.0 * v.log10()),
                    })
                })
                .collect();
            emit(&json!({"two_alpha": two_alpha, "efficiency": rows}), out)?;
            Ok(true)
        }
    }
}

fn run_budget(args: &BudgetArgs) -> Result<bool> {
    let dev = load_device(&args.device)?;
    let cfg = match args.path {
        PathArg::Microwave => ChainConfig::microwave_default(&dev),
        PathArg::Optical => ChainConfig::optical_default(&dev),
    };
    let mut v = json!({ "chain": cfg });
    for (k, raw) in parse_overrides(&args.overrides)? {
        set_dotted(&mut v, &k, &raw)?;
    }
    let cfg: ChainConfig = serde_json::from_value(v["chain"].take())
        .map_err(|e| Error::Schema(format!("chain: {e}")))?;
    if args.path == PathArg::Optical && cfg.path != ReadoutPath::Optical {
        eprintln!("optoread: note: chain.path overridden to {:?}", cfg.path);
    }
    let report = budget_report(&dev, &cfg)?;
    emit(&serde_json::to_value(&report).expect("serializable"), &args.out)?;
    Ok(true)
}

fn run_simulate(args: &SimulateArgs) -> Result<bool> {
    let overrides = parse_overrides(&args.overrides)?;
    let device = args.device.as_ref().map(load_device_params).transpose()?;
    let mut scenario = Scenario::find(&args.scenario, device.as_ref())?;
    if let Some(seed) = args.seed {
        scenario.seed.master_seed = seed;
    }
    let scenario = scenario.with_overrides(&overrides)?;
    let (dir, report) = run_scenario(&scenario, &args.out)?;
    let summary = json!({
        "run_dir": dir.display().to_string(),
        "scenario": report.scenario,
        "results": report.results,
    });
    emit(&summary, &None)?;
    Ok(true)
}

pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Calibrate { which } => run_calibrate(which),
        Command::Fit(a) => run_fit(a),
        Command::Budget(a) => run_budget(a),
        Command::ListScenarios => {
            let mut out = std::io::stdout();
            for name in builtin_scenario_names() {
                writeln!(out, "{name}").map_err(|e| Error::io("writing to standard output", e))?;
            }
            Ok(true)
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit status:
/// 0 on success, 1 for usage and validation errors, 2 for failures during
/// computation.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("optoread: error: --threads must be positive");
            return 1;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("optoread: error: {e}");
            return 2;
        }
    }
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("optoread: error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
