use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vofrac_cli::{parse_ladder, run_study, CliError, StudySpec};

/// Convergence, agreement and scaling studies for variable-order
/// sub-diffusion solvers.
#[derive(Debug, Parser)]
#[command(name = "vofrac", version)]
struct Args {
    /// Key-value config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// temporal_order, spacetime_order, scaling, agreement, kernel_certify or coefficient_audit.
    #[arg(long)]
    study: Option<String>,

    /// example1_2d, example2_3d or scalar_ode.
    #[arg(long)]
    problem: Option<String>,

    /// direct or fast.
    #[arg(long)]
    scheme: Option<String>,

    /// Mesh rungs as m:n,m:n,... (bare n for scalar problems).
    #[arg(long)]
    ladder: Option<String>,

    /// dt2, default, or a fixed value.
    #[arg(long)]
    epsilon: Option<String>,

    /// Exponential-sum node rule: certified or nominal.
    #[arg(long)]
    ladder_rule: Option<String>,

    /// Order function: sin4, const:<a> or table:<t>:<a>,...
    #[arg(long)]
    order: Option<String>,

    /// Refuse rungs needing more stored scalars than this.
    #[arg(long)]
    max_storage: Option<usize>,

    /// Run rungs concurrently (not allowed for timing studies).
    #[arg(long)]
    parallel_rungs: bool,

    /// CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Markdown table destination.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

fn build_spec(args: &Args) -> Result<StudySpec, CliError> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(path.display().to_string(), e))?;
            StudySpec::from_config_text(&text)?
        }
        None => {
            let kind = args
                .study
                .as_deref()
                .ok_or_else(|| CliError::Config("--study or --config is required".into()))?;
            let mut s = StudySpec::new(
                kind.parse()?,
                vofrac_cli::ProblemId::Example1_2d,
                Vec::new(),
            );
            if let Some(l) = &args.ladder {
                s.ladder = parse_ladder(l)?;
            }
            s
        }
    };
    let pairs = [
        ("study", &args.study),
        ("problem", &args.problem),
        ("scheme", &args.scheme),
        ("ladder", &args.ladder),
        ("epsilon", &args.epsilon),
        ("ladder_rule", &args.ladder_rule),
        ("order", &args.order),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            spec.set(key, v)?;
        }
    }
    if let Some(cap) = args.max_storage {
        spec.max_storage = Some(cap);
    }
    spec.parallel_rungs |= args.parallel_rungs;
    if let Some(p) = &args.out {
        spec.out = Some(p.clone());
    }
    if let Some(p) = &args.markdown {
        spec.markdown = Some(p.clone());
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = build_spec(&args).and_then(|spec| {
        let report = run_study(&spec)?;
        let title = format!("{} / {} / {}", spec.kind, spec.problem, spec.scheme);
        let md = report.to_markdown(&title);
        print!("{md}");
        if let Some(path) = &spec.out {
            report.write_csv(path)?;
        }
        if let Some(path) = &spec.markdown {
            std::fs::write(path, &md).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        }
        for row in report.rows.iter().filter(|r| r.failure.is_some()) {
            eprintln!(
                "rung {}:{} failed: {}",
                row.m,
                row.n,
                row.failure.as_deref().unwrap_or("")
            );
        }
        Ok(!report.any_failed())
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
