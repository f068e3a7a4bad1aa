use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use formnorm::config::{RunConfig, CONFIG_ENV};
use formnorm::corpus::{build_form, default_corpus};
use formnorm::domain::{Domain, Shape};
use formnorm::error::{Error, Result};
use formnorm::norms::{luxemburg_or_infinite, oscillation_norm, OscillationNormSpec, Samples};
use formnorm::report::Status;
use formnorm::selftest::run_selftest;
use formnorm::suite::{run_suite, write_reports};
use formnorm::weights::Weight;
use formnorm::young::YoungFunction;

#[derive(Parser)]
#[command(name = "formnorm", version, about = "Orlicz, BMO and Lipschitz norms of differential forms")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one norm of one form.
    Norm(NormArgs),
    /// Run the verification suite and emit reports.
    Verify(VerifyArgs),
    /// Run the exact-identity battery.
    Selftest,
    /// Inspect the corpus.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// List corpus entries with their tags.
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        output: Format,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Kind {
    Lp,
    Luxemburg,
    Bmo,
    Lipschitz,
}

#[derive(Args)]
struct NormArgs {
    /// Form spec, e.g. `poly:x1`, `const:dx1`, `form:1:x2;0`, `corpus:trigonometric`.
    #[arg(long)]
    form: String,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value = "power:2")]
    phi: String,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of balls in the family.
    #[arg(long)]
    balls: Option<usize>,
    /// Weight spec, e.g. `power:0.5`.
    #[arg(long)]
    weight: Option<String>,
    /// `box:<lower>:<upper>` or `ball:<centre>:<radius>`, comma-separated coordinates.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    ball_resolution: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    output: Format,
    /// Directory for report.json and report.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    grid_resolution: Option<usize>,
    #[arg(long)]
    ball_resolution: Option<usize>,
    #[arg(long)]
    no_stability: bool,
    /// Run only these verifiers.
    #[arg(long = "verifier")]
    verifiers: Vec<String>,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn parse_coords(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("`{v}` is not a number"))))
        .collect()
}

fn parse_domain(s: &str, resolution: usize) -> Result<Domain> {
    let parts: Vec<&str> = s.split(':').collect();
    let shape = match parts.as_slice() {
        ["box", lo, hi] => Shape::Box { lower: parse_coords(lo)?, upper: parse_coords(hi)? },
        ["ball", c, r] => Shape::Ball {
            center: parse_coords(c)?,
            radius: r.trim().parse().map_err(|_| Error::InvalidInput(format!("`{r}` is not a radius")))?,
        },
        _ => return Err(Error::InvalidInput(format!("domain `{s}` is not box:<lower>:<upper> or ball:<centre>:<radius>"))),
    };
    Domain::new(shape, resolution)
}

fn cmd_norm(args: &NormArgs, mut config: RunConfig) -> Result<String> {
    if let Some(r) = args.resolution {
        config.grid_resolution = r;
    }
    if let Some(r) = args.ball_resolution {
        config.ball_resolution = r;
    }
    let domain = match &args.domain {
        Some(d) => parse_domain(d, config.grid_resolution)?,
        None => config.build_domain()?,
    };
    let u = build_form(&args.form, &domain)?;
    let weight = args.weight.as_ref().map(|w| Weight::new(w.parse()?, &domain)).transpose()?;
    let samples = || Samples::modulus(&u, &domain, weight.as_ref());
    let line = match args.kind {
        Kind::Lp => {
            if !(args.p >= 1.0) {
                return Err(Error::InvalidInput(format!("Lᵖ norm needs p ≥ 1, got {}", args.p)));
            }
            format!("kind=lp p={} value={}", args.p, samples()?.lp(args.p))
        }
        Kind::Luxemburg => {
            let phi = YoungFunction::parse(&args.phi)?;
            let (v, _) = luxemburg_or_infinite(&samples()?, &phi)?;
            format!("kind=luxemburg phi={phi} value={v}")
        }
        Kind::Bmo | Kind::Lipschitz => {
            let phi = YoungFunction::parse(&args.phi)?;
            let sigma = args.sigma.unwrap_or(config.sigma);
            let count = args.balls.unwrap_or(config.ball_count);
            let spec = if args.kind == Kind::Bmo {
                OscillationNormSpec::bmo(sigma, count)?
            } else {
                OscillationNormSpec::lipschitz(args.k.unwrap_or(config.k), sigma, count)?
            };
            let norm = oscillation_norm(&u, &phi, &spec, weight.as_ref(), &config.homotopy_settings())?;
            let name = if args.kind == Kind::Bmo { "bmo" } else { "lipschitz" };
            let center: Vec<String> = norm.argmax.center.iter().map(|c| c.to_string()).collect();
            format!(
                "kind={name} phi={phi} value={} argmax_center={} argmax_radius={}",
                norm.value,
                center.join(","),
                norm.argmax.radius
            )
        }
    };
    Ok(line)
}

fn cmd_verify(args: &VerifyArgs, mut config: RunConfig) -> Result<(String, bool)> {
    if let Some(r) = args.grid_resolution {
        config.grid_resolution = r;
    }
    if let Some(r) = args.ball_resolution {
        config.ball_resolution = r;
    }
    if args.no_stability {
        config.stability = false;
    }
    if !args.verifiers.is_empty() {
        config.verifiers = args.verifiers.clone();
    }
    config.validate()?;
    let report = run_suite(&config)?;
    let dir = args.out_dir.clone().or_else(|| config.output_dir.clone().map(PathBuf::from));
    if let Some(dir) = dir {
        write_reports(&report, &dir)?;
    }
    let text = match args.output {
        Format::Csv => report.to_csv()?,
        Format::Json | Format::Text => report.to_json(),
    };
    Ok((text, report.status != Status::Fail))
}

fn cmd_corpus_list(config: &RunConfig, output: Format) -> Result<String> {
    let domain = config.build_domain()?;
    let corpus = default_corpus(&domain)?;
    Ok(match output {
        Format::Json => {
            let rows: Vec<_> = corpus
                .iter()
                .map(|e| serde_json::json!({"id": e.id, "spec": e.provenance, "tags": e.tags, "partner": e.partner.is_some()}))
                .collect();
            serde_json::to_string_pretty(&rows).expect("rows serialize")
        }
        Format::Csv => {
            let mut s = String::from("id,degree,closed,smoothness,spec\n");
            for e in &corpus {
                s.push_str(&format!(
                    "{},{},{},{:?},\"{}\"\n",
                    e.id, e.tags.degree, e.tags.closed, e.tags.smoothness, e.provenance
                ));
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for e in &corpus {
                s.push_str(&format!(
                    "{:<22} degree={} closed={:<5} {:<9} {}\n",
                    e.id,
                    e.tags.degree,
                    e.tags.closed,
                    format!("{:?}", e.tags.smoothness).to_lowercase(),
                    e.provenance
                ));
            }
            s
        }
    })
}

fn usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::InvalidInput(_) | Error::Parse { .. } | Error::InvalidDegree(_) | Error::Io(_)
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli.config).and_then(|config| match &cli.command {
        Command::Norm(args) => cmd_norm(args, config).map(|s| (s, true)),
        Command::Verify(args) => cmd_verify(args, config),
        Command::Selftest => run_selftest(&config).map(|r| (r.table(), r.passed())),
        Command::Corpus { action: CorpusAction::List { output } } => cmd_corpus_list(&config, *output).map(|s| (s, true)),
    });
    match result {
        Ok((text, ok)) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
