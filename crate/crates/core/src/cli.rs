//! Command-line front end for the benchmark sweeps and constant calculators.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    costabel_dauge_beta, discrete_infsup, named_domain_beta, stability_constants, Domain,
};
use crate::assembly::Projection;
use crate::error::{Error, Result};
use crate::experiments::{run, ExperimentConfig};
use crate::fe_spaces::{DofMap, ElementFamily};
use crate::mesh::Mesh;

#[derive(Debug, Parser)]
#[command(name = "ncstokes", version, about = "Nonconforming Stokes benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// f = grad p with exact velocity zero.
    GradientTest(SweepArgs),
    /// Manufactured trigonometric solution and convergence rates.
    TrigTest(SweepArgs),
    /// Discrete inf-sup value by a dense eigensolve.
    Infsup(InfsupArgs),
    /// Inf-sup bounds and stability constants.
    Constants(ConstantsArgs),
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// `cr` or `fs`.
    #[arg(long)]
    pub element: Option<String>,
    /// Comma-separated subset of `none,rt`.
    #[arg(long)]
    pub projection: Option<String>,
    /// Comma-separated viscosities.
    #[arg(long)]
    pub nu: Option<String>,
    /// Comma-separated grid resolutions.
    #[arg(long)]
    pub n: Option<String>,
    /// CSV output file; the table goes to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InfsupArgs {
    #[arg(long, default_value = "cr")]
    pub element: String,
    /// Comma-separated grid resolutions.
    #[arg(long, default_value = "4")]
    pub n: String,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    /// ball, square, stretched, l-shape or cross.
    #[arg(long)]
    pub domain: Option<String>,
    /// Aspect ratio for stretched, L-shaped and cross-shaped domains.
    #[arg(long)]
    pub k: Option<f64>,
    /// Inner and outer radii for the star-shaped bound.
    #[arg(long, requires = "radius")]
    pub rho: Option<f64>,
    #[arg(long, requires = "rho")]
    pub radius: Option<f64>,
    /// C_div directly, instead of 1/beta.
    #[arg(long)]
    pub cdiv: Option<f64>,
    /// Interpolation constant of the discrete case.
    #[arg(long)]
    pub cnc: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("bad value '{t}' for {key}")))
        })
        .collect()
}

fn parse_element(s: &str) -> Result<ElementFamily> {
    match s.trim() {
        "cr" => Ok(ElementFamily::CrouzeixRaviart),
        "fs" => Ok(ElementFamily::FortinSoulie),
        other => Err(Error::Config(format!("unknown element '{other}'"))),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim().to_string();
        if !["element", "projection", "nu", "n", "output"].contains(&k.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

/// Merges flags over the config file over the defaults of `trig`.
pub fn sweep_config(args: &SweepArgs, trig: bool) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => HashMap::new(),
    };
    let get = |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).cloned());
    let element = parse_element(&get(&args.element, "element").unwrap_or_else(|| "cr".into()))?;
    let mut cfg = if trig {
        ExperimentConfig::trig_default(element)
    } else {
        ExperimentConfig::gradient_default(element)
    };
    if let Some(p) = get(&args.projection, "projection") {
        cfg.projections = parse_list::<Projection>("projection", &p)?;
    }
    if let Some(nu) = get(&args.nu, "nu") {
        cfg.nus = parse_list("nu", &nu)?;
    }
    if let Some(n) = get(&args.n, "n") {
        cfg.levels = parse_list("n", &n)?;
    }
    let output = args
        .output
        .clone()
        .or_else(|| file.get("output").map(PathBuf::from));
    cfg.validate()?;
    Ok((cfg, output))
}

/// Runs a parsed command and returns its stdout text.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::GradientTest(a) | Command::TrigTest(a) => {
            let trig = matches!(cli.command, Command::TrigTest(_));
            let (cfg, output) = sweep_config(a, trig)?;
            let report = run(&cfg)?;
            let mut out = report.to_table();
            match output {
                Some(path) => std::fs::write(&path, report.to_csv())?,
                None => {
                    out.push('\n');
                    out.push_str(&report.to_csv());
                }
            }
            Ok(out)
        }
        Command::Infsup(a) => {
            let element = parse_element(&a.element)?;
            let pressure = element.pressure_pair().expect("velocity element");
            let mut out = String::new();
            for n in parse_list::<usize>("n", &a.n)? {
                if n == 0 {
                    return Err(Error::Config("grid resolution must be at least 1".into()));
                }
                let mesh = Mesh::structured_unit_square(n)?;
                let vel = DofMap::new(&mesh, element);
                let pres = DofMap::new(&mesh, pressure);
                let beta = discrete_infsup(&mesh, &vel, &pres)?;
                let _ = writeln!(out, "element={element} n={n} beta_T={beta:.6}");
            }
            Ok(out)
        }
        Command::Constants(a) => constants(a),
    }
}

fn constants(a: &ConstantsArgs) -> Result<String> {
    let mut out = String::new();
    let mut beta = None;
    if let (Some(rho), Some(r)) = (a.rho, a.radius) {
        let b = costabel_dauge_beta(rho, r)?;
        let _ = writeln!(out, "star-shaped bound: beta >= {b:.5} (simplified {:.5})", rho / (2.0 * r));
        beta = Some(b);
    }
    if let Some(d) = &a.domain {
        let b = named_domain_beta(d.parse::<Domain>()?, a.k)?;
        let _ = writeln!(out, "domain {d}: beta >= {b:.5}");
        beta = Some(b);
    }
    let c_div = match (a.cdiv, beta) {
        (Some(c), _) => c,
        (None, Some(b)) => 1.0 / b,
        (None, None) => {
            return Err(Error::Config("give --domain, --rho/--radius or --cdiv".into()))
        }
    };
    let r = stability_constants(c_div, a.nu, a.cnc)?;
    let _ = writeln!(out, "C_div = {:.4}", r.c_div);
    let _ = writeln!(out, "C_min = {:.6}", r.c_min);
    let _ = writeln!(out, "C_max = {:.6}", r.c_max);
    let _ = writeln!(out, "C_stab = {} (nu = {})", fmt_sig(r.c_stab), r.nu);
    Ok(out)
}

fn fmt_sig(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}

/// 0 on success, 1 for solver failures, 2 for invalid input.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Dimension { .. } | Error::UnsupportedDegree(_) => 2,
        _ => 1,
    }
}
