//! Command-line parsing, flat config files and command dispatch.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::detection::{DetectionScheme, MIN_CURVE_POINTS};
use crate::error::{config, usage, Error, Result};
use crate::source::K_MAX;
use crate::sweep::{cmd_critical, cmd_interference, cmd_preset, cmd_visibility, Format, GainRange, Method, Preset, SweepRequest};
use crate::validate::{cmd_validate, Level};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pdc-visibility", version, about = "Interference visibility datasets for bright squeezed vacuum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Visibility as a function of the gain K.
    Visibility(SweepArgs),
    /// Interference curves over the analyzer phase difference.
    Interference(SweepArgs),
    /// Critical gains, critical transmitivity and the visibility benchmark.
    Critical(OutputArgs),
    /// Oracle-versus-closed-form checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Default, Args)]
pub struct OutputArgs {
    /// csv or json (csv prints a plain table for reports).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SweepArgs {
    /// linear, onoff, hybrid or multiport.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub k_start: Option<f64>,
    #[arg(long)]
    pub k_stop: Option<f64>,
    #[arg(long)]
    pub k_steps: Option<usize>,
    /// Comma-separated transmitivities for the hybrid scheme.
    #[arg(long)]
    pub tau: Option<String>,
    /// Comma-separated port counts for the multiport scheme.
    #[arg(long)]
    pub ports: Option<String>,
    #[arg(long)]
    pub delta_steps: Option<usize>,
    /// Pair-number cutoff for the numeric method (default: chosen from the tail bound).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// fig2, fig3, fig4 or fig6.
    #[arg(long)]
    pub preset: Option<String>,
    /// closed (default) or numeric.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Default, Args)]
pub struct ValidateArgs {
    /// fast (default) or full.
    #[arg(long)]
    pub level: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Reads a flat `key = value` file. Blank lines and `#` comments are ignored;
/// keys may use `-` or `_`.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config(format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(config(format!("line {}: empty key", i + 1)));
        }
        map.insert(key, v.trim().trim_matches('"').to_string());
    }
    Ok(map)
}

struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn new(config_path: Option<&Path>, allowed: &[&str]) -> Result<Self> {
        let values = match config_path {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        if let Some(k) = values.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(config(format!("unknown config key '{k}'")));
        }
        Ok(Settings { values })
    }

    fn string(&self, cli: &Option<String>, key: &str) -> Option<String> {
        cli.clone().or_else(|| self.values.get(key).cloned())
    }

    fn parsed<T: std::str::FromStr + Clone>(&self, cli: &Option<T>, key: &str) -> Result<Option<T>> {
        if cli.is_some() {
            return Ok(cli.clone());
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| config(format!("invalid value '{s}' for {key}"))),
        }
    }

    fn path(&self, cli: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        cli.clone().or_else(|| self.values.get(key).map(PathBuf::from))
    }
}

const SWEEP_KEYS: &[&str] = &[
    "scheme", "k-start", "k-stop", "k-steps", "tau", "ports", "delta-steps", "n-max", "preset", "method", "jobs",
    "format", "out",
];

fn parse_format(s: Option<String>) -> Result<Format> {
    match s.as_deref() {
        None | Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        Some(other) => Err(usage(format!("unknown format '{other}' (expected csv or json)"))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| usage(format!("invalid {what} '{}'", p.trim())))
        })
        .collect()
}

fn schemes_for(name: &str, tau: Option<String>, ports: Option<String>) -> Result<Vec<DetectionScheme>> {
    match name {
        "linear" => Ok(vec![DetectionScheme::linear()]),
        "onoff" => Ok(vec![DetectionScheme::onoff()]),
        "hybrid" => {
            let list = tau.ok_or_else(|| usage("the hybrid scheme needs --tau"))?;
            parse_list::<f64>(&list, "transmitivity")?
                .into_iter()
                .map(DetectionScheme::hybrid)
                .collect()
        }
        "multiport" => {
            let list = ports.ok_or_else(|| usage("the multiport scheme needs --ports"))?;
            parse_list::<u32>(&list, "port count")?
                .into_iter()
                .map(DetectionScheme::multiport)
                .collect()
        }
        other => Err(usage(format!(
            "unknown scheme '{other}' (expected linear, onoff, hybrid or multiport)"
        ))),
    }
}

struct SweepPlan {
    request: SweepRequest,
    jobs: Option<usize>,
    format: Format,
    out: Option<PathBuf>,
}

fn plan_sweep(args: &SweepArgs, interference: bool) -> Result<SweepPlan> {
    let s = Settings::new(args.output.config.as_deref(), SWEEP_KEYS)?;
    let preset = s.string(&args.preset, "preset").map(|p| Preset::parse(&p)).transpose()?;
    let mut request = match preset {
        Some(p) => {
            if p.is_visibility() == interference {
                let cmd = if p.is_visibility() { "visibility" } else { "interference" };
                return Err(usage(format!("preset {} belongs to the {cmd} command", p.name())));
            }
            SweepRequest::preset(p)
        }
        None => {
            let scheme = s
                .string(&args.scheme, "scheme")
                .ok_or_else(|| usage("--scheme or --preset is required"))?;
            let schemes = schemes_for(&scheme, s.string(&args.tau, "tau"), s.string(&args.ports, "ports"))?;
            let (start, stop, steps) = if interference { (0.5, 1.5, 3) } else { (0.0, K_MAX, 61) };
            let start = s.parsed(&args.k_start, "k-start")?.unwrap_or(start);
            let stop = s.parsed(&args.k_stop, "k-stop")?.unwrap_or(stop);
            let steps = s.parsed(&args.k_steps, "k-steps")?.unwrap_or(steps);
            let gains = GainRange::new(start, stop, steps)?;
            SweepRequest::new(schemes, gains)?
        }
    };
    if preset.is_some() {
        for (flag, set) in [
            ("scheme", args.scheme.is_some() || s.values.contains_key("scheme")),
            ("k-start", args.k_start.is_some() || s.values.contains_key("k-start")),
            ("k-stop", args.k_stop.is_some() || s.values.contains_key("k-stop")),
            ("k-steps", args.k_steps.is_some() || s.values.contains_key("k-steps")),
            ("tau", args.tau.is_some() || s.values.contains_key("tau")),
            ("ports", args.ports.is_some() || s.values.contains_key("ports")),
        ] {
            if set {
                return Err(usage(format!("--{flag} cannot be combined with --preset")));
            }
        }
    }
    if let Some(d) = s.parsed(&args.delta_steps, "delta-steps")? {
        request.delta_steps = d;
    }
    request.n_max = s.parsed(&args.n_max, "n-max")?;
    request.method = match s.string(&args.method, "method").as_deref() {
        None | Some("closed") => Method::Closed,
        Some("numeric") => Method::Numeric,
        Some(other) => return Err(usage(format!("unknown method '{other}' (expected closed or numeric)"))),
    };
    if request.method == Method::Closed && request.n_max.is_some() {
        return Err(usage("--n-max only applies to --method numeric"));
    }
    if !interference && request.method == Method::Numeric && request.delta_steps < MIN_CURVE_POINTS {
        return Err(usage(format!("--delta-steps must be at least {MIN_CURVE_POINTS}")));
    }
    let jobs = s.parsed(&args.jobs, "jobs")?;
    if jobs == Some(0) {
        return Err(usage("--jobs must be at least 1"));
    }
    Ok(SweepPlan {
        request,
        jobs,
        format: parse_format(s.string(&args.output.format, "format"))?,
        out: s.path(&args.output.out, "out"),
    })
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| config(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| config(format!("cannot write output: {e}"))),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) => EXIT_VALIDATION,
        Error::Usage(_) | Error::Config(_) | Error::Undefined(_) => EXIT_USAGE,
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Visibility(args) => {
            let plan = plan_sweep(&args, false)?;
            let data = if plan.request.preset.is_some() {
                cmd_preset(&plan.request, plan.jobs)?
            } else {
                cmd_visibility(&plan.request, plan.jobs)?
            };
            emit(&data.render(plan.format), plan.out.as_deref(), stdout)?;
        }
        Command::Interference(args) => {
            let plan = plan_sweep(&args, true)?;
            let data = cmd_interference(&plan.request, plan.jobs)?;
            emit(&data.render(plan.format), plan.out.as_deref(), stdout)?;
        }
        Command::Critical(args) => {
            let s = Settings::new(args.config.as_deref(), &["format", "out"])?;
            let report = cmd_critical();
            let text = match parse_format(s.string(&args.format, "format"))? {
                Format::Csv => report.to_text(),
                Format::Json => report.to_json(),
            };
            emit(&text, s.path(&args.out, "out").as_deref(), stdout)?;
        }
        Command::Validate(args) => {
            let s = Settings::new(args.output.config.as_deref(), &["level", "format", "out"])?;
            let level = Level::parse(s.string(&args.level, "level").as_deref().unwrap_or("fast"))?;
            let report = cmd_validate(level);
            let text = match parse_format(s.string(&args.output.format, "format"))? {
                Format::Csv => report.to_text(),
                Format::Json => report.to_json(),
            };
            emit(&text, s.path(&args.output.out, "out").as_deref(), stdout)?;
            if !report.passed() {
                return Ok(EXIT_VALIDATION);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
