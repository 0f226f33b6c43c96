use std::path::PathBuf;
use std::process::ExitCode;

use allee_herd::equilibria::{classify_case, find_equilibria};
use allee_herd::io::{
    field_table, parse_config, parse_config_str, split_override, Config, NormalFormKind, OutDir,
};
use allee_herd::local;
use allee_herd::normal_form::{hopf_normal_form, pitchfork_normal_form};
use allee_herd::reproduce::{curves_table, dispersion_table, region_table, reproduce, Figure};
use allee_herd::simulate::run;
use allee_herd::spatial::LinearizationAtE31;
use allee_herd::Error;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

const THREADS_VAR: &str = "ALLEE_HERD_THREADS";

#[derive(Parser)]
#[command(name = "allee-herd", version, about = "Predator-prey model with Allee effect and herd behaviour")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set params.theta=0.7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// All equilibria and their case.
    Equilibria(Common),
    /// Stability of every equilibrium.
    Classify(Common),
    /// Hopf and Turing curves plus dispersion relation.
    Curves(Common),
    /// Turing instability test and mode selection at E31.
    TuringTest(Common),
    /// Hopf or pitchfork normal form.
    NormalForm(Common),
    /// Integrate the reaction-diffusion system.
    Simulate(Common),
    /// Region map over a (theta, d2) grid.
    Scan(Common),
    /// Rebuild a reference figure and compare against its values.
    Reproduce {
        /// Figure id, e.g. fig2b or nf-hopf0. Falls back to `reproduce.figure`.
        figure: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Lib(Error),
    Tolerance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn load(c: &Common) -> Result<Config, Error> {
    let pairs = c
        .overrides
        .iter()
        .map(|s| split_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    match &c.config {
        Some(path) => parse_config(path, &pairs),
        None => parse_config_str("{}", &pairs),
    }
}

fn missing(section: &str) -> Error {
    Error::config(&format!("#/{section}"), "section required for this subcommand")
}

fn execute(cmd: Command) -> Result<(), Failure> {
    let (common, figure) = match &cmd {
        Command::Reproduce { figure, common } => (common, figure.clone()),
        Command::Equilibria(c)
        | Command::Classify(c)
        | Command::Curves(c)
        | Command::TuringTest(c)
        | Command::NormalForm(c)
        | Command::Simulate(c)
        | Command::Scan(c) => (c, None),
    };
    let cfg = load(common)?;

    match &cmd {
        Command::Equilibria(_) => {
            let p = cfg.params()?;
            let out = OutDir::create(&common.out)?;
            out.json(
                "equilibria.json",
                &json!({ "params": p, "case": classify_case(&p), "equilibria": find_equilibria(&p) }),
            )?;
        }
        Command::Classify(_) => {
            let p = cfg.params()?;
            let verdicts = find_equilibria(&p)
                .iter()
                .map(|e| {
                    let v = local::classify(e, &p)?;
                    Ok(json!({ "equilibrium": e, "verdict": v }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            OutDir::create(&common.out)?.json("classify.json", &json!({ "params": p, "verdicts": verdicts }))?;
        }
        Command::Curves(_) => {
            let p = cfg.params()?;
            let sec = cfg.curves.clone().unwrap_or_default();
            let curves = curves_table(&p, &sec.d2.values())?;
            let thetas = if sec.dispersion_thetas.is_empty() { vec![p.theta] } else { sec.dispersion_thetas.clone() };
            let disp = dispersion_table(&p, &thetas, sec.x_max, sec.x_samples)?;
            let out = OutDir::create(&common.out)?;
            out.csv("curves.csv", &curves)?;
            out.csv("dispersion.csv", &disp)?;
        }
        Command::TuringTest(_) => {
            let p = cfg.params()?;
            let l = LinearizationAtE31::new(&p)?;
            let modes = (0..=l.k_star()).map(|k| l.mode(k)).collect::<Vec<_>>();
            OutDir::create(&common.out)?.json(
                "turing_test.json",
                &json!({
                    "params": p,
                    "test": l.turing_instability_test(),
                    "mode_selection": l.mode_selection()?,
                    "region": l.region_label(4 * l.k_star() + 4),
                    "modes": modes,
                }),
            )?;
        }
        Command::NormalForm(_) => {
            let base = cfg.params()?;
            let sec = cfg.normal_form.clone().ok_or_else(|| missing("normal_form"))?;
            let mut p = base;
            p.d2 = sec.d2.unwrap_or(base.d2);
            p.theta = sec.theta.unwrap_or(base.theta);
            let out = OutDir::create(&common.out)?;
            match sec.kind {
                NormalFormKind::Hopf => {
                    out.json("normal_form.json", &hopf_normal_form(sec.s, p.d2, p.theta, &p)?)?;
                }
                NormalFormKind::Pitchfork => {
                    out.json("normal_form.json", &pitchfork_normal_form(sec.s, p.d2, p.theta, &p, sec.sign)?)?;
                }
            }
        }
        Command::Simulate(_) => {
            let p = cfg.params()?;
            let sec = cfg.simulate.clone().ok_or_else(|| missing("simulate"))?;
            let rc = sec.run_config(p)?;
            let res = run(&rc)?;
            let out = OutDir::create(&common.out)?;
            out.csv("u.csv", &field_table(&res.snapshots, &rc.grid, true))?;
            out.csv("v.csv", &field_table(&res.snapshots, &rc.grid, false))?;
            out.json(
                "manifest.json",
                &json!({
                    "config": cfg.to_file(),
                    "resolved": rc,
                    "files": { "prey": "u.csv", "predator": "v.csv" },
                    "summary": res.summary,
                }),
            )?;
        }
        Command::Scan(_) => {
            let p = cfg.params()?;
            let sec = cfg.scan.clone().ok_or_else(|| missing("scan"))?;
            let (table, summary) = region_table(&p, &sec.theta.values(), &sec.d2.values())?;
            let out = OutDir::create(&common.out)?;
            out.csv("regions.csv", &table)?;
            out.json("diagram.json", &summary)?;
        }
        Command::Reproduce { .. } => {
            let id = figure
                .or_else(|| cfg.reproduce.as_ref().map(|r| r.figure.clone()))
                .ok_or_else(|| missing("reproduce"))?;
            let fig: Figure = id.parse()?;
            let rep = reproduce(fig)?;
            let out = OutDir::create(common.out.join(fig.id()))?;
            for (name, table) in &rep.tables {
                out.csv(name, table)?;
            }
            out.json("report.json", &rep.summary_json())?;
            if !rep.passed() {
                return Err(Failure::Tolerance(rep.diff_table()));
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(raw) = std::env::var(THREADS_VAR) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::config("#", format!("{THREADS_VAR} must be a positive integer, got '{raw}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Precondition(e.to_string()))?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_config() => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().map_err(Failure::Lib).and_then(|_| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Tolerance(table)) => {
            eprintln!("reproduction outside tolerance:\n{table}");
            ExitCode::from(4)
        }
    }
}
