//! Command-line front end.
//!
//! Exit codes: 0 when the design is accepted, 3 when some direction (or
//! `G_N`) exceeds its threshold, 1 on any error. Every run writes
//! `manifest.json` into its output directory; `replay` re-executes it.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::designs::{self, Design, Rescale};
use crate::error::{argument, Error, Result};
use crate::global_stat::{self, GnQuantileTable, Lookup, DEFAULT_GN_STEP_DEG, TABLE_LEVELS};
use crate::gof::StatKind;
use crate::radar::{self, RadarScan, DEFAULT_RESOLUTION_3D_DEG, DEFAULT_RESOLUTION_DEG};
use crate::render::{self, FigureSpec, HeatmapMode};

pub const EXIT_ACCEPT: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_REJECT: u8 = 3;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const THREADS_ENV: &str = "UNIRADAR_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "uniradar",
    version,
    about = "Directional uniformity diagnostics for space-filling designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Scan every direction (2-D/3-D) or every coordinate pair/triplet.
    Radar(RadarArgs),
    /// Global ratio statistic G_N of a 2-D design against a quantile table.
    Gn(GnArgs),
    /// Simulate a G_N quantile table.
    GnTable(GnTableArgs),
    /// Re-run the configuration recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Uniform,
    Halton,
    Oa49,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[group(skip)]
pub struct InputArgs {
    /// CSV file with one point per row.
    #[arg(long, required_unless_present = "gen", conflicts_with = "gen")]
    pub input: Option<PathBuf>,
    /// Built-in design generator.
    #[arg(long, value_enum)]
    pub gen: Option<Generator>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// 1-based Halton dimension indices, e.g. 14,15.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Halton start offset.
    #[arg(long, default_value_t = 0)]
    pub skip: u64,
    /// Map each input column's observed range onto [-1, 1].
    #[arg(long)]
    pub rescale: bool,
}

impl InputArgs {
    pub fn load(&self) -> Result<Design> {
        if let Some(path) = &self.input {
            let rescale = if self.rescale {
                Rescale::Observed
            } else {
                Rescale::None
            };
            return designs::load_csv_with(path, &rescale);
        }
        let need_n = || self.n.ok_or_else(|| argument("--n is required with --gen"));
        match self.gen {
            Some(Generator::Uniform) => {
                let d = self
                    .d
                    .ok_or_else(|| argument("--d is required with --gen uniform"))?;
                designs::gen_uniform(need_n()?, d, self.seed)
            }
            Some(Generator::Halton) => {
                let dims = match (&self.dims, self.d) {
                    (Some(dims), _) => dims.clone(),
                    (None, Some(d)) => (1..=d).collect(),
                    (None, None) => {
                        return Err(argument("--dims or --d is required with --gen halton"))
                    }
                };
                designs::gen_halton(need_n()?, &dims, self.skip)
            }
            Some(Generator::Oa49) => {
                if self.n.is_some_and(|n| n != 49) {
                    return Err(argument("the oa49 generator always has 49 points"));
                }
                Ok(designs::gen_linear_oa49())
            }
            None => Err(argument("one of --input or --gen is required")),
        }
    }
}

fn parse_level(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(format!("level must lie in (0, 1), got {p}"))
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RadarArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Angular step in degrees (theta; also phi unless --phi-resolution).
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub phi_resolution: Option<f64>,
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
    #[arg(long, default_value_t = StatKind::Ks)]
    pub stat: StatKind,
    /// Scan coordinate pairs (2) or triplets (3) instead of the full space.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub arity: Option<u8>,
    #[arg(long, default_value = "uniradar-out")]
    pub out: PathBuf,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "json,csv,svg"
    )]
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_GN_STEP_DEG)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
    /// Quantile table CSV (with a .json sidecar); the bundled table otherwise.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value = "uniradar-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json,svg")]
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GnTableArgs {
    /// Largest N; rows are 1..=n-max unless --n-values is given.
    #[arg(long, default_value_t = 100)]
    pub n_max: usize,
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long, default_value_t = global_stat::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value_t = DEFAULT_GN_STEP_DEG)]
    pub resolution: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "uniradar-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    /// A manifest.json written by an earlier run.
    pub manifest: PathBuf,
    /// Output directory; the recorded one otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: Command,
}

impl Command {
    fn out_dir(&self) -> &Path {
        match self {
            Command::Radar(a) => &a.out,
            Command::Gn(a) => &a.out,
            Command::GnTable(a) => &a.out,
            Command::Replay(a) => a.out.as_deref().unwrap_or(Path::new(".")),
        }
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        match self {
            Command::Radar(a) => a.out = dir,
            Command::Gn(a) => a.out = dir,
            Command::GnTable(a) => a.out = dir,
            Command::Replay(a) => a.out = Some(dir),
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Command::Radar(a) => a.input.seed,
            Command::Gn(a) => a.input.seed,
            Command::GnTable(a) => a.seed,
            Command::Replay(_) => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Accept => EXIT_ACCEPT,
            Verdict::Reject => EXIT_REJECT,
        }
    }

    fn from_rejected(rejected: bool) -> Self {
        if rejected {
            Verdict::Reject
        } else {
            Verdict::Accept
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_ACCEPT
            });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ERROR);
    }
    match execute(cli.command) {
        Ok(v) => ExitCode::from(v.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        argument(format!(
            "{THREADS_ENV} must be a positive integer, got '{raw}'"
        ))
    })?;
    if threads == 0 {
        return Err(argument(format!("{THREADS_ENV} must be positive")));
    }
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn execute(command: Command) -> Result<Verdict> {
    match command {
        Command::Replay(args) => replay(&args),
        cmd => {
            let out = cmd.out_dir().to_path_buf();
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let verdict = match &cmd {
                Command::Radar(a) => cmd_radar(a)?,
                Command::Gn(a) => cmd_gn(a)?,
                Command::GnTable(a) => cmd_gn_table(a)?,
                Command::Replay(_) => unreachable!(),
            };
            write_manifest(&cmd)?;
            Ok(verdict)
        }
    }
}

fn write_manifest(cmd: &Command) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cmd.seed(),
        config: cmd.clone(),
    };
    write_file(
        &cmd.out_dir().join(MANIFEST_FILE),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )
}

fn replay(args: &ReplayArgs) -> Result<Verdict> {
    let text = fs::read_to_string(&args.manifest).map_err(|e| Error::io(&args.manifest, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let mut cmd = manifest.config;
    if let Some(out) = &args.out {
        cmd.set_out_dir(out.clone());
    }
    execute(cmd)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn figure(title: String) -> FigureSpec {
    FigureSpec {
        title,
        ..FigureSpec::default()
    }
}

pub fn cmd_radar(args: &RadarArgs) -> Result<Verdict> {
    let design = args.input.load()?;
    let wants = |f| args.formats.contains(&f);
    let out = &args.out;
    let arity = args.arity.map(usize::from);
    let d = design.dim();
    let direct = match arity {
        None => true,
        Some(k) => k == d,
    };
    if direct && d == 2 {
        let res = args.resolution.unwrap_or(DEFAULT_RESOLUTION_DEG);
        let scan = radar::radar2d(&design, res, args.level, args.stat)?;
        if wants(OutputFormat::Json) {
            write_file(&out.join("radar.json"), &scan.to_json()?)?;
        }
        if wants(OutputFormat::Csv) {
            write_file(&out.join("radar.csv"), &scan.to_csv())?;
        }
        if wants(OutputFormat::Svg) {
            let title = format!("{} radar: {}", args.stat, design.label());
            write_file(
                &out.join("radar.svg"),
                &render::plot_radar2d(&scan, &figure(title))?,
            )?;
            write_file(
                &out.join("design.svg"),
                &render::plot_design2d(&design, &figure(design.label().to_string()))?,
            )?;
        }
        let (theta, v) = scan.max();
        report(
            scan.exceeds(),
            &format!("max {} = {v:.6} at theta = {theta} deg", args.stat),
            scan.critical,
        );
        return Ok(Verdict::from_rejected(scan.exceeds()));
    }
    if direct && d == 3 {
        let res = args.resolution.unwrap_or(DEFAULT_RESOLUTION_3D_DEG);
        let phi_res = args.phi_resolution.unwrap_or(res);
        let scan = radar::radar3d_with(&design, res, phi_res, args.level, args.stat)?;
        if wants(OutputFormat::Json) {
            write_file(&out.join("radar.json"), &scan.to_json()?)?;
        }
        if wants(OutputFormat::Csv) {
            write_file(&out.join("radar.csv"), &scan.to_csv())?;
        }
        if wants(OutputFormat::Svg) {
            let title = format!("-log10 p ({}): {}", args.stat, design.label());
            let heat =
                render::plot_radar3d_heatmap(&scan, &figure(title), HeatmapMode::PvalueLog10)?;
            write_file(&out.join("radar_heatmap.svg"), &heat)?;
            let pins = render::plot_radar3d_pins(&scan, &figure(design.label().to_string()))?;
            write_file(&out.join("radar_pins.svg"), &pins)?;
        }
        let (t, p, v) = scan.max();
        report(
            scan.exceeds(),
            &format!(
                "max {} = {v:.6} at (theta, phi) = ({t}, {p}) deg",
                args.stat
            ),
            scan.critical,
        );
        return Ok(Verdict::from_rejected(scan.exceeds()));
    }
    let k = match arity {
        Some(k) => k,
        None if d == 1 => return Err(argument("radar needs a design of dimension >= 2")),
        None => {
            return Err(argument(format!(
                "design has dimension {d}; pass --arity 2 or 3"
            )))
        }
    };
    if args.phi_resolution.is_some() {
        eprintln!("warning: --phi-resolution is ignored for subspace scans");
    }
    let default_res = if k == 2 {
        DEFAULT_RESOLUTION_DEG
    } else {
        DEFAULT_RESOLUTION_3D_DEG
    };
    let scans = radar::scan_subspaces(
        &design,
        k,
        args.resolution.unwrap_or(default_res),
        args.level,
        args.stat,
    )?;
    if wants(OutputFormat::Json) {
        write_file(
            &out.join("subspaces.json"),
            &serde_json::to_string_pretty(&scans)?,
        )?;
    }
    for s in &scans {
        let tag: Vec<String> = s.coords.iter().map(usize::to_string).collect();
        let stem = format!("radar_{}", tag.join("_"));
        if wants(OutputFormat::Csv) {
            let csv = match &s.scan {
                RadarScan::Planar(p) => p.to_csv(),
                RadarScan::Spatial(p) => p.to_csv(),
            };
            write_file(&out.join(format!("{stem}.csv")), &csv)?;
        }
        if wants(OutputFormat::Svg) && s.rejected {
            let title = format!("coordinates {}", tag.join(","));
            let svg = match &s.scan {
                RadarScan::Planar(p) => render::plot_radar2d(p, &figure(title))?,
                RadarScan::Spatial(p) => {
                    render::plot_radar3d_heatmap(p, &figure(title), HeatmapMode::PvalueLog10)?
                }
            };
            write_file(&out.join(format!("{stem}.svg")), &svg)?;
        }
    }
    let rejected: Vec<String> = scans
        .iter()
        .filter(|s| s.rejected)
        .map(|s| {
            format!(
                "({})",
                s.coords
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect();
    let any = !rejected.is_empty();
    if any {
        println!(
            "reject: {} of {} subspaces exceed: {}",
            rejected.len(),
            scans.len(),
            rejected.join(" ")
        );
    } else {
        println!(
            "accept: none of {} subspaces exceeds its critical value",
            scans.len()
        );
    }
    Ok(Verdict::from_rejected(any))
}

fn report(rejected: bool, what: &str, critical: f64) {
    let (word, cmp) = if rejected {
        ("reject", ">")
    } else {
        ("accept", "<=")
    };
    println!("{word}: {what} {cmp} critical {critical:.6}");
}

#[derive(Debug, Clone, Serialize)]
struct GnReport {
    #[serde(flatten)]
    result: global_stat::GnResult,
    level: f64,
    threshold: f64,
    table_n: usize,
    rejected: bool,
}

pub fn cmd_gn(args: &GnArgs) -> Result<Verdict> {
    let design = args.input.load()?;
    let table = match &args.table {
        Some(p) => GnQuantileTable::load(p)?,
        None => GnQuantileTable::bundled(),
    };
    let result = global_stat::gn(&design, args.resolution)?;
    let (threshold, lookup) = table.threshold(design.n(), args.level)?;
    let table_n = match lookup {
        Lookup::Clamped { used_n } => {
            eprintln!(
                "warning: N = {} beyond the table; using the N = {used_n} row",
                design.n()
            );
            used_n
        }
        _ => design.n(),
    };
    let rejected = result.g > threshold;
    if args.formats.contains(&OutputFormat::Json) {
        let report = GnReport {
            result,
            level: args.level,
            threshold,
            table_n,
            rejected,
        };
        write_file(
            &args.out.join("gn.json"),
            &(serde_json::to_string_pretty(&report)? + "\n"),
        )?;
    }
    if args.formats.contains(&OutputFormat::Svg) {
        write_file(
            &args.out.join("design.svg"),
            &render::plot_design2d(&design, &figure(design.label().to_string()))?,
        )?;
    }
    let (word, cmp) = if rejected {
        ("reject", ">")
    } else {
        ("accept", "<=")
    };
    println!(
        "{word}: G = {:.4} (sup {:.6} at {} deg, inf {:.6} at {} deg) {cmp} g_N({}) = {threshold:.4}",
        result.g, result.sup_value, result.sup_theta_deg, result.inf_value, result.inf_theta_deg, args.level
    );
    Ok(Verdict::from_rejected(rejected))
}

pub fn cmd_gn_table(args: &GnTableArgs) -> Result<Verdict> {
    let n_values = match &args.n_values {
        Some(v) => v.clone(),
        None => (1..=args.n_max).collect(),
    };
    let levels = args.levels.clone().unwrap_or_else(|| TABLE_LEVELS.to_vec());
    let table = global_stat::gn_table(
        &n_values,
        &levels,
        args.replicates,
        args.resolution,
        args.seed,
    )?;
    write_file(&args.out.join("gn_table.csv"), &table.to_csv())?;
    write_file(
        &args.out.join("gn_table.json"),
        &(table.meta_json()? + "\n"),
    )?;
    println!(
        "wrote {} rows x {} levels ({} replicates, seed {}) to {}",
        table.n_values.len(),
        table.levels.len(),
        table.replicates,
        table.seed,
        args.out.join("gn_table.csv").display()
    );
    Ok(Verdict::Accept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("uniradar").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn parses_radar_flags() {
        let Command::Radar(a) =
            parse(&["radar", "--gen", "halton", "--n", "250", "--dims", "14,15"])
        else {
            panic!()
        };
        assert_eq!(a.input.dims, Some(vec![14, 15]));
        assert_eq!(a.level, 0.95);
        assert_eq!(
            a.formats,
            vec![OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg]
        );
        let d = a.input.load().unwrap();
        assert_eq!((d.n(), d.dim()), (250, 2));
    }

    #[test]
    fn exactly_one_source() {
        let both = ["uniradar", "radar", "--gen", "oa49", "--input", "x.csv"];
        assert!(Cli::try_parse_from(both).is_err());
        assert!(Cli::try_parse_from(["uniradar", "radar"]).is_err());
        assert!(
            Cli::try_parse_from(["uniradar", "radar", "--gen", "oa49", "--level", "1.5"]).is_err()
        );
        assert!(
            Cli::try_parse_from(["uniradar", "radar", "--gen", "oa49", "--arity", "4"]).is_err()
        );
    }

    #[test]
    fn manifest_round_trip() {
        let cmd = parse(&[
            "gn", "--gen", "uniform", "--n", "10", "--d", "2", "--seed", "7",
        ]);
        let m = Manifest {
            tool: "uniradar".into(),
            version: "0".into(),
            seed: cmd.seed(),
            config: cmd.clone(),
        };
        let back: Manifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back.config, cmd);
        assert_eq!(back.seed, 7);
    }

    #[test]
    fn generator_requirements() {
        let Command::Radar(a) = parse(&["radar", "--gen", "uniform", "--n", "5"]) else {
            panic!()
        };
        assert!(a.input.load().is_err());
        let Command::Radar(a) = parse(&["radar", "--gen", "oa49", "--n", "50"]) else {
            panic!()
        };
        assert!(a.input.load().is_err());
        let Command::Radar(a) = parse(&["radar", "--gen", "halton", "--n", "5", "--d", "3"]) else {
            panic!()
        };
        assert_eq!(a.input.load().unwrap().dim(), 3);
    }
}
