//! `freecorr` command-line front end.
//!
//! Exit codes: 0 ok, 1 a check failed, 2 bad configuration, 3 numeric failure.

mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use freecorr::measures::{
    catalog_with_points, quadrature_moments, reconstruct_density, SpectralMeasure, CATALOG_NAMES, DEFAULT_CATALOG_POINTS,
    FUNCTIONAL_NAMES,
};
use freecorr::models::{model, MODEL_NAMES};
use freecorr::momentengine::{
    correction2_hc, hc_infinitesimal_cumulants, higher_corrections_hc, quantized_cumulants, schur_correction1,
    schur_lln_moments,
};
use freecorr::rmtmc::{fit_expansion, genus_check, EnsembleSpec, MCReport};
use freecorr::verify::{
    check_dk_eigenrelation, check_dk_expansion_equivalence, check_dk_schur_eigenrelation, eigenrelation_batch,
    expansion_batch, schur_exact_sweep, CheckReport, SpectrumPoint, TestFunction,
};
use freecorr::{AsymptoticInput, ExpansionResult, Side, TruncatedSeries};

use output::{fmt, strip_unset, Format, Output};

#[derive(Parser)]
#[command(name = "freecorr", version, about = "Moments, 1/N corrections and spectral measures from asymptotic transforms")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Job file (JSON); flags given on the command line override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Suppress stdout (files are still written).
    #[arg(long, global = true)]
    quiet: bool,
    /// Write `<command>.json` and `<command>.csv` into this directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Moment expansion: LLN moments and correction orders.
    Moments(ExpansionArgs),
    /// Free cumulant rows feeding the expansion.
    Cumulants(ExpansionArgs),
    /// Density and atoms of a limit or correction measure.
    Density(DensityArgs),
    /// Exact small-N operator identities.
    Verify(VerifyArgs),
    /// Monte Carlo fit of the 1/N expansion.
    Mc(McArgs),
    /// List named models, closed-form measures and functionals.
    Examples(ExamplesArgs),
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
struct ExpansionArgs {
    /// Named model (see `examples`).
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    params: Option<Vec<f64>>,
    /// Series input file: {"side", "series": [{"center", "coeffs"}], "epsilon"}.
    #[arg(long, conflicts_with = "model")]
    input: Option<PathBuf>,
    /// Highest moment K.
    #[arg(short, long)]
    k: Option<usize>,
    /// Correction order n.
    #[arg(short = 'n', long)]
    order: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
struct DensityArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    params: Option<Vec<f64>>,
    /// Closed-form measure instead of a reconstruction.
    #[arg(long, conflicts_with = "model")]
    catalog: Option<String>,
    /// 0 for the limit measure, 1 for the 1/N correction.
    #[arg(short = 'n', long)]
    order: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hi: Option<f64>,
    /// Distance above the real axis for the Stieltjes inversion.
    #[arg(long)]
    eta: Option<f64>,
    /// Moments of the result reported up to this order.
    #[arg(short, long)]
    k: Option<usize>,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum Check {
    DkHc,
    DkSchur,
    Expansion,
    EigenBatch,
    SchurSweep,
    ExpansionBatch,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
struct VerifyArgs {
    #[arg(value_enum)]
    check: Option<Check>,
    /// Spectrum (dk-hc) or signature (dk-schur).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Option<Vec<f64>>,
    /// Checks run for every order up to K.
    #[arg(short, long)]
    k: Option<usize>,
    /// Power-sum test function for `expansion` (constant when absent).
    #[arg(long)]
    power: Option<usize>,
    /// Exact rational arithmetic for dk-schur.
    #[arg(long)]
    #[serde(default)]
    exact: bool,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    lambda1_max: Option<i64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
struct McArgs {
    /// gue, wishart or genus.
    #[arg(long)]
    ensemble: Option<String>,
    /// sigma for gue, lambda for wishart.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    params: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    spikes: Option<Vec<f64>>,
    /// Full ensemble description (JSON), instead of --ensemble.
    #[arg(long, conflicts_with = "ensemble")]
    spec: Option<PathBuf>,
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    /// Highest power of 1/N in the fit (1 or 2).
    #[arg(long)]
    fit_order: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest acceptable |z|.
    #[arg(long)]
    bound: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
struct ExamplesArgs {}

#[derive(Deserialize)]
struct Job {
    #[serde(flatten)]
    command: Command,
    format: Option<Format>,
    #[serde(default)]
    quiet: bool,
    out_dir: Option<PathBuf>,
}

enum Failure {
    Config(anyhow::Error),
    Numeric(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        use freecorr::Error as E;
        match e.downcast_ref::<E>() {
            Some(E::Numeric(_) | E::ZeroConstantTerm | E::NonPositiveLog(_)) => Failure::Numeric(e),
            _ => Failure::Config(e),
        }
    }
}

impl From<freecorr::Error> for Failure {
    fn from(e: freecorr::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric failure: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn load_job(cli: &Cli) -> Result<Job> {
    let mut base = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str::<Value>(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => json!({}),
    };
    let obj = base.as_object_mut().ok_or_else(|| anyhow!("config must be a JSON object"))?;
    if let Some(cmd) = &cli.command {
        let overlay = strip_unset(serde_json::to_value(cmd)?);
        if let (Some(a), Some(b)) = (obj.get("command"), overlay.get("command")) {
            if a != b {
                bail!("config command {a} conflicts with subcommand {b}");
            }
        }
        for (k, v) in overlay.as_object().expect("commands serialize to objects") {
            obj.insert(k.clone(), v.clone());
        }
    }
    if let Some(f) = cli.format {
        obj.insert("format".into(), serde_json::to_value(f)?);
    }
    if cli.quiet {
        obj.insert("quiet".into(), Value::Bool(true));
    }
    if let Some(d) = &cli.out_dir {
        obj.insert("out_dir".into(), serde_json::to_value(d)?);
    }
    if !obj.contains_key("command") {
        bail!("no command given (use a subcommand or a config with \"command\")");
    }
    serde_json::from_value(base).context("invalid job")
}

fn run(cli: Cli) -> std::result::Result<bool, Failure> {
    let job = load_job(&cli).map_err(Failure::Config)?;
    let echo = strip_unset(serde_json::to_value(&job.command).map_err(anyhow::Error::from)?);
    let out = match &job.command {
        Command::Moments(a) => cmd_moments(a, echo)?,
        Command::Cumulants(a) => cmd_cumulants(a, echo)?,
        Command::Density(a) => cmd_density(a, echo)?,
        Command::Verify(a) => cmd_verify(a, echo)?,
        Command::Mc(a) => cmd_mc(a, echo)?,
        Command::Examples(_) => cmd_examples(echo)?,
    };
    out.emit(job.format.unwrap_or(Format::Json), job.quiet, job.out_dir.as_deref()).map_err(Failure::Config)?;
    Ok(out.pass.unwrap_or(true))
}

fn k_or(k: Option<usize>, default: usize) -> Result<usize> {
    let k = k.unwrap_or(default);
    if k == 0 {
        bail!("K must be at least 1");
    }
    Ok(k)
}

/// Model names as accepted on the command line; the closed-form name of the
/// discrete BBP example is accepted as an alias.
fn resolve_model(name: &str, params: &[f64]) -> Result<freecorr::models::Model> {
    let name = match name {
        "dbbp" => "plancherel-dbbp",
        other => other,
    };
    Ok(model(name, params)?)
}

/// Input jets `Psi_0..Psi_n`, padded with zero series.
fn expansion_input(a: &ExpansionArgs, k: usize, default_n: usize) -> Result<(AsymptoticInput, usize)> {
    match (&a.model, &a.input) {
        (Some(name), None) => {
            let n = a.order.unwrap_or(default_n);
            let m = resolve_model(name, a.params.as_deref().unwrap_or(&[]))?;
            Ok((m.input(n, k)?, n))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut input: AsymptoticInput = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            input = AsymptoticInput::new(input.side, input.series, input.epsilon)?;
            let n = a.order.unwrap_or(input.series.len() - 1);
            let order = input.series[0].order();
            while input.series.len() <= n {
                input.series.push(TruncatedSeries::zero(input.side.center(), order));
            }
            input.series.truncate(n + 1);
            Ok((input, n))
        }
        _ => bail!("give exactly one of --model or --input"),
    }
}

fn cmd_moments(a: &ExpansionArgs, echo: Value) -> Result<Output> {
    let k = k_or(a.k, 6)?;
    let (input, n) = expansion_input(a, k, 1)?;
    let s = &input.series;
    let (result, nu2) = match input.side {
        Side::Hc => {
            let r = higher_corrections_hc(&input, k)?;
            let nu = if n >= 2 { Some(correction2_hc(&s[0], &s[1], &s[2], k)?.1) } else { None };
            (r, nu)
        }
        Side::Schur => {
            if n > 1 {
                bail!("the Schur side supports correction order n <= 1, got {n}");
            }
            let mut orders = vec![schur_lln_moments(&s[0], k)?];
            if n == 1 {
                orders.push(schur_correction1(&s[0], &s[1], k)?);
            }
            let scales = ["1", "N^-1"][..=n].iter().map(|s| s.to_string()).collect();
            (ExpansionResult { side: Some(Side::Schur), scales, orders }, None)
        }
    };
    let mut header: Vec<String> = vec!["k".into()];
    header.extend((0..result.orders.len()).map(|j| format!("order_{j}")));
    if nu2.is_some() {
        header.push("nu_2".into());
    }
    let rows = (0..k)
        .map(|i| {
            let mut r = vec![(i + 1).to_string()];
            r.extend(result.orders.iter().map(|o| fmt(o[i])));
            if let Some(nu) = &nu2 {
                r.push(fmt(nu[i]));
            }
            r
        })
        .collect();
    let mut value = serde_json::to_value(&result)?;
    if let Some(nu) = &nu2 {
        value["nu_2"] = serde_json::to_value(nu)?;
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(Output::new("moments", echo, value)?.table(&header, rows))
}

fn cmd_cumulants(a: &ExpansionArgs, echo: Value) -> Result<Output> {
    let k = k_or(a.k, 6)?;
    let (input, _) = expansion_input(a, k, 1)?;
    let s = &input.series;
    let table = match input.side {
        Side::Hc => hc_infinitesimal_cumulants(s, k)?,
        Side::Schur => {
            let zero = TruncatedSeries::zero(1.0, s[0].order());
            quantized_cumulants(&s[0], s.get(1).unwrap_or(&zero), k)?
        }
    };
    let header: Vec<String> = std::iter::once("m".to_string()).chain((0..table.rows.len()).map(|j| format!("order_{j}"))).collect();
    let rows = (0..k)
        .map(|i| std::iter::once((i + 1).to_string()).chain(table.rows.iter().map(|r| fmt(r[i]))).collect())
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(Output::new("cumulants", echo, &table)?.table(&header, rows))
}

fn cmd_density(a: &DensityArgs, echo: Value) -> Result<Output> {
    let k = k_or(a.k, 6)?;
    let params = a.params.as_deref().unwrap_or(&[]);
    let measure: SpectralMeasure = match (&a.model, &a.catalog) {
        (Some(name), None) => {
            let m = resolve_model(name, params)?;
            let kf = match a.order.unwrap_or(0) {
                0 => m.k_function_lln(),
                1 => m.k_function_correction(),
                n => bail!("density order must be 0 or 1, got {n}"),
            };
            let points = a.points.unwrap_or(400);
            if points < 2 {
                bail!("need at least 2 grid points");
            }
            let (lo, hi) = match (a.lo, a.hi, kf.support()?) {
                (Some(lo), Some(hi), _) => (lo, hi),
                (lo, hi, Some((s, t))) => {
                    let pad = 0.05 * (t - s);
                    (lo.unwrap_or(s - pad), hi.unwrap_or(t + pad))
                }
                _ => bail!("the measure has no continuous part; give --lo and --hi"),
            };
            if !(hi > lo) {
                bail!("empty grid range [{lo}, {hi}]");
            }
            let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
            reconstruct_density(&kf, &grid, a.eta.unwrap_or(1e-3))?
        }
        (None, Some(name)) => catalog_with_points(name, params, a.points.unwrap_or(DEFAULT_CATALOG_POINTS))?,
        _ => bail!("give exactly one of --model or --catalog"),
    };
    if let Some(m) = measure.mismatch.filter(|&m| m > 5e-2) {
        eprintln!("warning: reconstruction misses the engine moments by {m:.3e}; part of the measure is not a density or atom");
    }
    let moments = quadrature_moments(&measure, k);
    let mut rows: Vec<Vec<String>> =
        measure.grid.iter().zip(&measure.density).map(|(t, d)| vec!["density".into(), fmt(*t), fmt(*d)]).collect();
    rows.extend(measure.atoms.iter().map(|(x, w)| vec!["atom".into(), fmt(*x), fmt(*w)]));
    let mut value = serde_json::to_value(&measure)?;
    value["total_mass"] = json!(moments[0]);
    value["moments"] = json!(moments[1..]);
    Ok(Output::new("density", echo, value)?.table(&["kind", "t", "value"], rows))
}

const DEFAULT_X: [f64; 8] = [0.5, 1.25, 2.0, 3.5, -0.75, 0.375, 1.5, 2.25];

fn report(check: String, err: f64, tol: f64) -> CheckReport {
    CheckReport { check, instances: 1, max_rel_err: err, pass: err <= tol }
}

fn cmd_verify(a: &VerifyArgs, echo: Value) -> Result<Output> {
    let check = a.check.ok_or_else(|| anyhow!("verify needs a check name"))?;
    let k = k_or(a.k, 3)?;
    let seed = a.seed.unwrap_or(0);
    let points = |n: usize| -> Result<Vec<f64>> {
        match &a.x {
            Some(x) => Ok(x.clone()),
            None if n <= DEFAULT_X.len() => Ok(DEFAULT_X[..n].to_vec()),
            None => bail!("give --x for N > {}", DEFAULT_X.len()),
        }
    };
    let reports: Vec<CheckReport> = match check {
        Check::DkHc | Check::DkSchur => {
            let lambda = a.lambda.clone().ok_or_else(|| anyhow!("--lambda is required"))?;
            let p = SpectrumPoint::new(lambda.clone(), points(lambda.len())?)?;
            (1..=k)
                .map(|j| {
                    Ok(if check == Check::DkHc {
                        report(format!("dk-hc k={j}"), check_dk_eigenrelation(&p, j)?, 1e-8)
                    } else {
                        let tol = if a.exact { 0.0 } else { 1e-9 };
                        report(format!("dk-schur k={j}"), check_dk_schur_eigenrelation(&p, j, a.exact)?, tol)
                    })
                })
                .collect::<Result<_>>()?
        }
        Check::Expansion => {
            let x = points(a.lambda.as_ref().map_or(3, Vec::len))?;
            let f = match a.power {
                Some(p) => TestFunction::power_sum(x.len(), p),
                None => TestFunction::constant(),
            };
            (1..=k)
                .map(|j| Ok(report(format!("expansion k={j}"), check_dk_expansion_equivalence(&x, j, &f)?, 1e-9)))
                .collect::<Result<_>>()?
        }
        Check::EigenBatch => vec![eigenrelation_batch(a.instances.unwrap_or(50), a.n_max.unwrap_or(4), k, seed)?],
        Check::SchurSweep => vec![schur_exact_sweep(a.lambda1_max.unwrap_or(3), a.n_max.unwrap_or(3), k)?],
        Check::ExpansionBatch => vec![expansion_batch(a.instances.unwrap_or(50), seed)?],
    };
    let pass = reports.iter().all(|r| r.pass);
    let rows = reports
        .iter()
        .map(|r| vec![r.check.clone(), r.instances.to_string(), fmt(r.max_rel_err), r.pass.to_string()])
        .collect();
    let mut out = Output::new("verify", echo, &reports)?.table(&["check", "instances", "max_rel_err", "pass"], rows);
    out.pass = Some(pass);
    Ok(out)
}

fn cmd_mc(a: &McArgs, echo: Value) -> Result<Output> {
    let k = k_or(a.k, 4)?;
    let grid = a.grid.clone().unwrap_or_else(|| vec![64, 128, 256, 512]);
    let samples = a.samples.unwrap_or(2000);
    let seed = a.seed.unwrap_or(0);
    let bound = a.bound.unwrap_or(3.0);
    let params = a.params.as_deref().unwrap_or(&[]);
    let spec = match (&a.spec, a.ensemble.as_deref()) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(serde_json::from_str::<EnsembleSpec>(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        (None, Some("gue")) => Some(EnsembleSpec::gue(params.first().copied().unwrap_or(1.0))),
        (None, Some("wishart")) => {
            let l = *params.first().ok_or_else(|| anyhow!("wishart needs --params lambda"))?;
            Some(EnsembleSpec::wishart(l))
        }
        (None, Some("genus")) => None,
        (None, Some(other)) => bail!("unknown ensemble {other} (gue, wishart, genus)"),
        _ => bail!("give exactly one of --ensemble or --spec"),
    };
    let reports: Vec<MCReport> = match spec {
        Some(s) => {
            let s = match &a.spikes {
                Some(t) => s.with_spikes(t),
                None => s,
            };
            s.validate()?;
            fit_expansion(&s, k, &grid, samples, a.fit_order.unwrap_or(1), seed)?
        }
        None => genus_check(k, &grid, samples, seed)?,
    };
    let pass = reports.iter().all(|r| r.within(bound).unwrap_or(true));
    let width = reports.first().map_or(0, |r| r.coeffs.len());
    let mut header = vec!["k".to_string()];
    for prefix in ["coeff", "std_err", "prediction", "z"] {
        header.extend(reports.first().map_or(vec![], |r| r.powers.iter().map(|p| format!("{prefix}_{p}")).collect()));
    }
    let rows = reports
        .iter()
        .map(|r| {
            let mut row = vec![r.k.to_string()];
            row.extend(r.coeffs.iter().map(|c| fmt(*c)));
            row.extend((0..width).map(|i| fmt(r.std_err(i))));
            for opt in [&r.predictions, &r.z_scores] {
                match opt {
                    Some(v) => row.extend(v.iter().map(|x| fmt(*x))),
                    None => row.extend(std::iter::repeat_n(String::new(), width)),
                }
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = Output::new("mc", echo, &reports)?.table(&header, rows);
    out.pass = Some(pass);
    Ok(out)
}

fn cmd_examples(echo: Value) -> Result<Output> {
    let list = |kind: &str, names: &[(&str, &str)]| -> Vec<Vec<String>> {
        names.iter().map(|(n, p)| vec![kind.to_string(), n.to_string(), p.to_string()]).collect()
    };
    let as_json = |names: &[(&str, &str)]| -> Value {
        names.iter().map(|(n, p)| json!({"name": n, "params": p})).collect()
    };
    let result = json!({
        "models": as_json(MODEL_NAMES),
        "catalog": as_json(CATALOG_NAMES),
        "functionals": as_json(FUNCTIONAL_NAMES),
    });
    let mut rows = list("model", MODEL_NAMES);
    rows.extend(list("catalog", CATALOG_NAMES));
    rows.extend(list("functional", FUNCTIONAL_NAMES));
    Ok(Output::new("examples", echo, result)?.table(&["kind", "name", "params"], rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_errors_map_to_exit_three() {
        let e = anyhow::Error::from(freecorr::Error::Numeric("no root".into())).context("density");
        assert!(matches!(Failure::from(e), Failure::Numeric(_)));
        let e = anyhow::Error::from(freecorr::Error::InvalidParameter("k".into()));
        assert!(matches!(Failure::from(e), Failure::Config(_)));
        assert!(matches!(Failure::from(anyhow!("bad flag")), Failure::Config(_)));
    }
}
