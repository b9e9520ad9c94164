//! `pasf` — filter design, Bode export, streaming separation, Kalman
//! separation and the built-in scenarios.
//!
//! Exit codes: 0 on success, 1 when the input is invalid, 2 when a run fails.
//! Failures print one line `error: kind=<kind> message=<text>` on stderr.

use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pasf_core::design::{parse_coefficients, write_coefficients, FirBands};
use pasf_core::kfpasf::KfPasfHistories;
use pasf_core::montecarlo::run_replicas;
use nalgebra::DVector;
use pasf_core::scenario::{self, ModelFile, Scenario, DEFAULT_SEED};
use pasf_core::table::{format_row, write_text, Table};
use pasf_core::{
    bode_table, make_complementary, Error, FilterCoefficientsF64, FilterDesign, FrequencyGrid, KfPasf, Pasf,
    SeparationSpec,
};

#[derive(Parser)]
#[command(name = "pasf", version, about = "Periodic/aperiodic separation filters")]
struct Cli {
    /// Seed for every noise source.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Emit a matplotlib script next to scenario output (default).
    #[arg(long, global = true, overrides_with = "no_plot_script")]
    plot_script: bool,

    #[arg(long, global = true, overrides_with = "plot_script")]
    no_plot_script: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Geometry {
    /// Separation frequency ρ̃ in rad/s.
    #[arg(long)]
    rho_tilde: f64,
    /// Period Π in samples.
    #[arg(long)]
    period: usize,
    /// Sampling time T in seconds.
    #[arg(long)]
    dt: f64,
}

#[derive(Args, Clone, Copy)]
struct FirOptions {
    /// Passband edge in rad/sample of the lifted axis (default ρ).
    #[arg(long)]
    passband_edge: Option<f64>,
    /// Stopband edge in rad/sample of the lifted axis (default min(π, 3ρ)).
    #[arg(long)]
    stopband_edge: Option<f64>,
    /// Stopband weight relative to the passband.
    #[arg(long, default_value_t = 1.0)]
    weight_ratio: f64,
}

impl FirOptions {
    fn bands(&self) -> Result<FirBands, Error> {
        let edges = match (self.passband_edge, self.stopband_edge) {
            (None, None) => None,
            (Some(p), Some(s)) => Some((p, s)),
            _ => {
                return Err(Error::InvalidArgument(
                    "give both --passband-edge and --stopband-edge, or neither".into(),
                ))
            }
        };
        Ok(FirBands {
            edges,
            weight_ratio: self.weight_ratio,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Realization {
    Iir,
    Fir,
    ComplementaryIir,
    ComplementaryFir,
}

#[derive(Args, Clone, Copy)]
struct DesignChoice {
    #[arg(long, value_enum, default_value = "iir")]
    realization: Realization,
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[command(flatten)]
    fir: FirOptions,
}

impl DesignChoice {
    fn design(&self) -> Result<FilterDesign, Error> {
        let bands = self.fir.bands()?;
        Ok(match self.realization {
            Realization::Iir => FilterDesign::Iir { order: self.order },
            Realization::ComplementaryIir => FilterDesign::ComplementaryIir { order: self.order },
            Realization::Fir => FilterDesign::Fir {
                order: self.order,
                bands,
            },
            Realization::ComplementaryFir => FilterDesign::ComplementaryFir {
                order: self.order,
                bands,
            },
        })
    }

    fn spec(&self, g: &Geometry) -> Result<SeparationSpec<f64>, Error> {
        let iir = matches!(self.realization, Realization::Iir | Realization::ComplementaryIir);
        match SeparationSpec::new(g.rho_tilde, g.period, g.dt) {
            Err(Error::OutOfBand(_)) if iir => SeparationSpec::wide_band(g.rho_tilde, g.period, g.dt),
            other => other,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Bilinear IIR pair; writes <label>_periodic.coef and <label>_aperiodic.coef.
    DesignIir {
        #[command(flatten)]
        geometry: Geometry,
        #[arg(long)]
        order: usize,
    },
    /// Equiripple FIR pair; writes <label>_periodic.coef and <label>_aperiodic.coef.
    DesignFir {
        #[command(flatten)]
        geometry: Geometry,
        #[arg(long)]
        order: usize,
        #[command(flatten)]
        fir: FirOptions,
    },
    /// Complementary aperiodic-pass filter 1 - F_p of a periodic-pass coefficient file.
    Complement {
        input: PathBuf,
        /// Output file (default: <out-dir>/<input stem>_complement.coef).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Bode table (omega, gain_db, phase_deg) of a coefficient file.
    Bode {
        input: PathBuf,
        #[arg(long)]
        points: Option<usize>,
        /// Lowest frequency in rad/s.
        #[arg(long)]
        start: Option<f64>,
        /// Highest frequency in rad/s (default π/T).
        #[arg(long)]
        stop: Option<f64>,
        #[arg(long)]
        linear: bool,
        /// Output file (default: <out-dir>/<input stem>_bode.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Streams a CSV with columns t,x through a separator; writes t,x,xp,xa
    /// to stdout or --output.
    Separate {
        input: PathBuf,
        #[command(flatten)]
        geometry: Geometry,
        #[command(flatten)]
        design: DesignChoice,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Kalman separation of a CSV with columns t,u_1..u_p,y_1..y_m.
    ///
    /// Row k holds y(t_k) and the input applied from t_k on, so the step for
    /// row k uses the input of row k-1 (zero before the first row).
    Kfpasf {
        input: PathBuf,
        /// TOML file with matrices a, b, c, q, r and optional p0.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        geometry: Geometry,
        #[command(flatten)]
        design: DesignChoice,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Runs a built-in scenario (sec51..sec54) or a scenario file.
    Scenario {
        name: String,
        /// Independent runs with seeds seed, seed+1, …; each goes to seed_<s>/.
        #[arg(long, default_value_t = 1)]
        replicas: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("bad usage");
            eprintln!("error: kind=usage message={}", one_line(first.trim_start_matches("error: ")));
            eprintln!("try 'pasf --help'");
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} message={}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_coefficients(path: &Path) -> Result<FilterCoefficientsF64, Error> {
    parse_coefficients(&read_text(path)?, &path.display().to_string())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "filter".into(), |s| s.to_string_lossy().into_owned())
}

fn write_pair(out_dir: &Path, label: &str, p: &FilterCoefficientsF64, a: &FilterCoefficientsF64) -> Result<(), Error> {
    write_text(&out_dir.join(format!("{label}_periodic.coef")), &write_coefficients(p))?;
    write_text(&out_dir.join(format!("{label}_aperiodic.coef")), &write_coefficients(a))
}

/// CSV output to a file, or to stdout when no path is given.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
            let f = std::fs::File::create(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

fn require_columns(table: &Table, source: &Path, want: &[&str]) -> Result<(), Error> {
    for (i, w) in want.iter().enumerate() {
        if table.header.get(i).map(String::as_str) != Some(*w) {
            return Err(Error::Parse {
                path: source.display().to_string(),
                line: 1,
                message: format!("expected column {} to be '{w}', header is {:?}", i + 1, table.header),
            });
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let out_dir = &cli.out_dir;
    let plot = !cli.no_plot_script;
    match &cli.command {
        Command::DesignIir { geometry, order } => {
            let choice = DesignChoice {
                realization: Realization::Iir,
                order: *order,
                fir: FirOptions {
                    passband_edge: None,
                    stopband_edge: None,
                    weight_ratio: 1.0,
                },
            };
            let design = choice.design()?;
            let (p, a) = design.design(&choice.spec(geometry)?)?;
            write_pair(out_dir, &design.label(), &p, &a)
        }
        Command::DesignFir { geometry, order, fir } => {
            let choice = DesignChoice {
                realization: Realization::Fir,
                order: *order,
                fir: *fir,
            };
            let design = choice.design()?;
            let (p, a) = design.design(&choice.spec(geometry)?)?;
            write_pair(out_dir, &design.label(), &p, &a)
        }
        Command::Complement { input, output } => {
            let p = read_coefficients(input)?;
            let a = make_complementary(&p)?;
            let path = output
                .clone()
                .unwrap_or_else(|| out_dir.join(format!("{}_complement.coef", stem(input))));
            write_text(&path, &write_coefficients(&a))
        }
        Command::Bode {
            input,
            points,
            start,
            stop,
            linear,
            output,
        } => {
            let c = read_coefficients(input)?;
            let start = start.unwrap_or(FrequencyGrid::DEFAULT_START);
            let stop = stop.unwrap_or(std::f64::consts::PI / c.sampling_time());
            let points = points.unwrap_or(FrequencyGrid::DEFAULT_POINTS);
            let grid = if *linear {
                FrequencyGrid::Linear { start, stop, points }
            } else {
                FrequencyGrid::Log { start, stop, points }
            };
            let table = bode_table(&c, &grid)?;
            let path = output
                .clone()
                .unwrap_or_else(|| out_dir.join(format!("{}_bode.csv", stem(input))));
            write_text(&path, &table.to_csv())
        }
        Command::Separate {
            input,
            geometry,
            design,
            output,
        } => {
            let table = Table::read(input)?;
            require_columns(&table, input, &["t", "x"])?;
            let mut pasf = Pasf::from_design(design.design()?, &design.spec(geometry)?)?;
            let mut w = sink(output.as_deref())?;
            let err = io_err(output.as_deref());
            writeln!(w, "t,x,xp,xa").map_err(&err)?;
            for row in &table.rows {
                let (xp, xa) = pasf.step(row[1])?;
                writeln!(w, "{}", format_row(&[row[0], row[1], xp, xa])).map_err(&err)?;
            }
            w.flush().map_err(&err)
        }
        Command::Kfpasf {
            input,
            model,
            geometry,
            design,
            output,
        } => {
            let (model, p0) = ModelFile::from_toml_str(&read_text(model)?, &model.display().to_string())?.into_parts()?;
            let (n, p, m) = (model.state_dim(), model.input_dim(), model.output_dim());
            let table = Table::read(input)?;
            let mut want = vec!["t".to_string()];
            want.extend((1..=p).map(|i| format!("u_{i}")));
            want.extend((1..=m).map(|i| format!("y_{i}")));
            require_columns(&table, input, &want.iter().map(String::as_str).collect::<Vec<_>>())?;
            if table.header.len() != want.len() {
                return Err(Error::Parse {
                    path: input.display().to_string(),
                    line: 1,
                    message: format!("expected exactly the columns {want:?}"),
                });
            }
            let recipe = design.design()?;
            let spec = design.spec(geometry)?;
            let depth = recipe.order() * geometry.period;
            let mut kf = KfPasf::uniform(model, recipe, &spec, KfPasfHistories::zeros(n, depth), p0)?;

            let mut w = sink(output.as_deref())?;
            let err = io_err(output.as_deref());
            let mut header = vec!["t".to_string()];
            for prefix in ["y", "xhat", "xp_hat", "xa_hat"] {
                let k = if prefix == "y" { m } else { n };
                header.extend((1..=k).map(|i| format!("{prefix}_{i}")));
            }
            header.push("trP".into());
            writeln!(w, "{}", header.join(",")).map_err(&err)?;
            let mut u_prev = DVector::zeros(p);
            for row in &table.rows {
                let y = DVector::from_column_slice(&row[1 + p..]);
                let rec = kf.step(&u_prev, &y)?;
                let mut out = vec![row[0]];
                out.extend(y.iter());
                out.extend(rec.x_pa.iter());
                out.extend(rec.x_p.iter());
                out.extend(rec.x_a.iter());
                out.push(rec.p.trace());
                writeln!(w, "{}", format_row(&out)).map_err(&err)?;
                u_prev = DVector::from_column_slice(&row[1..1 + p]);
            }
            w.flush().map_err(&err)
        }
        Command::Scenario { name, replicas } => {
            let sc = Scenario::resolve(name)?;
            if *replicas == 0 {
                return Err(Error::InvalidArgument("--replicas must be at least 1".into()));
            }
            if *replicas == 1 {
                let out = scenario::run_scenario(&sc, cli.seed)?;
                out.write(out_dir, plot)?;
                return Ok(());
            }
            let seeds: Vec<u64> = (0..*replicas).map(|k| cli.seed.wrapping_add(k)).collect();
            let runs = run_replicas(&seeds, |s| {
                let out = scenario::run_scenario(&sc, s)?;
                out.write(&out_dir.join(format!("seed_{s}")), plot)?;
                Ok(out.metrics)
            })?;
            let names: Vec<String> = runs[0].iter().map(|(n, _)| n.clone()).collect();
            let mut merged = Table::new(std::iter::once("seed".to_string()).chain(names));
            for (s, metrics) in seeds.iter().zip(runs) {
                let mut row = vec![*s as f64];
                row.extend(metrics.into_iter().map(|(_, v)| v));
                merged.push(row);
            }
            merged.write(&out_dir.join("replicas.csv"))
        }
    }
}
