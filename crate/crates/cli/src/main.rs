use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclab_cli::config::Level;
use fraclab_cli::runner::verify_output;
use fraclab_cli::{
    build_report, combined_exit_code, deterministic_from_env, init_threads_from_env, pretty_report, run_configs,
    verify_suite, write_outputs, VerifyOptions, EXIT_PASS,
};

#[derive(Parser)]
#[command(
    name = "fraclab",
    version,
    about = "Fractional conductivity experiments and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from config files; independent configs run concurrently.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output directory, overriding the config's `outdir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite.
    Verify {
        /// Add 2D checks and refinement sweeps.
        #[arg(long)]
        full: bool,
        /// Also write report.json and trace.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Multiply C_{n,s} in every kernel (mutation testing).
        #[arg(long, default_value_t = 1.0, hide = true)]
        cns_factor: f64,
    },
    /// Pretty-print the report in an output directory.
    Report { outdir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads_from_env() {
        eprintln!("fraclab: {}", e.reason());
        return ExitCode::from(e.exit_code() as u8);
    }
    let code = match cli.command {
        Command::Run { configs, out } => {
            let runs = run_configs(&configs, out.as_deref());
            for r in &runs {
                let status = r.report["status"].as_str().unwrap_or("?");
                match r.report["reason"].as_str() {
                    Some(reason) => println!(
                        "{}: {status} ({reason}) -> {}",
                        r.config_path.display(),
                        r.outdir.display()
                    ),
                    None => println!("{}: {status} -> {}", r.config_path.display(), r.outdir.display()),
                }
            }
            combined_exit_code(&runs.iter().map(|r| r.exit_code).collect::<Vec<_>>())
        }
        Command::Verify { full, out, cns_factor } => {
            let level = if full { Level::Full } else { Level::Fast };
            let start = std::time::Instant::now();
            let criteria = verify_suite(level, VerifyOptions { cns_factor });
            let output = verify_output(level, criteria);
            let elapsed = (!deterministic_from_env()).then(|| start.elapsed().as_secs_f64());
            let (report, mut code) = build_report("verify", None, &Ok(output.clone()), elapsed);
            print!("{}", fraclab_cli::report::pretty(&report));
            for c in output.criteria.iter().filter(|c| !c.pass) {
                eprintln!("fraclab: failed invariant {}", c.name);
            }
            if let Some(dir) = out {
                if let Err(e) = write_outputs(&dir, &report, Some(&output), false) {
                    eprintln!("fraclab: {}", e.reason());
                    code = code.max(e.exit_code());
                }
            }
            code
        }
        Command::Report { outdir } => match pretty_report(&outdir) {
            Ok(text) => {
                print!("{text}");
                EXIT_PASS
            }
            Err(e) => {
                eprintln!("fraclab: {}", e.reason());
                e.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
