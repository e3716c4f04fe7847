use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bgk_imex::tableau::{resolve, CorrectionVariant};
use bgk_imex_cli::config::{parse_switch, Settings};
use bgk_imex_cli::experiments::{
    accuracy, broadwell, check_tableau, entropy_run, mixed, sod, stability, AccuracyParams, BroadwellParams,
    InitKind, KineticOptions, MixedParams, SodParams, DEFAULT_Z2,
};
use bgk_imex::imex_bgk::diagnostics_csv;
use bgk_imex::setups::inconsistent_initial;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bgk-imex", version, about = "Corrected IMEX-RK experiments for the BGK and Broadwell models")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in scheme name or path to a JSON tableau
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Knudsen number(s), comma separated
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    eps: Option<Vec<f64>>,
    /// Number(s) of cells, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    nx: Option<Vec<usize>>,
    /// Velocity nodes [default: 150]
    #[arg(long, global = true)]
    nv: Option<usize>,
    /// Velocity cutoff [default: 15]
    #[arg(long, global = true)]
    vmax: Option<f64>,
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Positivity limiter (on|off)
    #[arg(long, global = true, value_parser = parse_switch)]
    limiter: Option<bool>,
    /// JSON file with any of the above; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Fn,
    Fnp1,
}

#[derive(Subcommand)]
enum Command {
    /// Order conditions and positivity analysis of a tableau
    CheckTableau {
        /// Scheme name or JSON file (overrides --scheme)
        name: Option<String>,
        #[arg(long, default_value_t = 2)]
        order: u8,
        #[arg(long, value_enum, default_value = "fn")]
        variant: Variant,
    },
    /// Self-convergence orders on smooth periodic data
    Accuracy {
        #[arg(long)]
        init: Option<InitKind>,
    },
    /// Shock tube with negative-cell counting
    Sod,
    /// Mixed kinetic/fluid regime against an explicit reference
    Mixed,
    /// Boundaries of the linear stability region
    Stability {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z2: Option<Vec<f64>>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Entropy series with first-order upwind transport
    Entropy {
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Broadwell model run
    Broadwell {
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn settings(cli: &Cli) -> Result<Settings> {
    let c = &cli.common;
    let mut flags = Settings {
        scheme: c.scheme.clone(),
        eps: c.eps.clone(),
        nx: c.nx.clone(),
        nv: c.nv,
        vmax: c.vmax,
        t_end: c.t_end,
        limiter: c.limiter,
        threads: c.threads,
        out: c.out.clone(),
        ..Settings::default()
    };
    match &cli.command {
        Command::Accuracy { init } => flags.init = *init,
        Command::Stability { z2, resolution } => {
            flags.z2 = z2.clone();
            flags.resolution = *resolution;
        }
        Command::Entropy { steps } | Command::Broadwell { steps } => flags.steps = *steps,
        _ => {}
    }
    let base = match &c.config {
        Some(p) => Settings::from_json_file(p)?,
        None => Settings::default(),
    };
    Ok(base.overridden_by(flags))
}

fn opts(s: &Settings, limiter_default: bool) -> KineticOptions {
    KineticOptions {
        nv: s.nv.unwrap_or(150),
        vmax: s.vmax.unwrap_or(15.0),
        limiter: s.limiter.unwrap_or(limiter_default),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn tag(x: f64) -> String {
    format!("{x:e}")
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let s = settings(cli)?;
    if let Some(n) = s.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out = s.out_dir();
    match &cli.command {
        Command::CheckTableau { name, order, variant } => {
            let scheme = name.clone().unwrap_or_else(|| s.scheme_or("scheme_a"));
            let variant = match variant {
                Variant::Fn => CorrectionVariant::FstarFn,
                Variant::Fnp1 => CorrectionVariant::FstarFnp1,
            };
            let r = check_tableau(&scheme, *order, variant)?;
            print!("{}", r.text());
            Ok(r.passed())
        }
        Command::Accuracy { .. } => {
            let scheme = resolve(&s.scheme_or("scheme_a"))?;
            let p = AccuracyParams {
                scheme,
                eps: s.eps.clone().unwrap_or_else(|| vec![1.0]),
                nx: s.nx.clone().unwrap_or_else(|| vec![40, 80, 160]),
                init: s.init.unwrap_or(InitKind::Inconsistent),
                t_end: s.t_end.unwrap_or(0.1),
                cfl: 0.5,
                opts: opts(&s, false),
            };
            let r = accuracy(&p)?;
            print!("{}", r.csv());
            write(&out, &format!("accuracy_{}.csv", r.scheme), &r.csv())?;
            let ok = r.rows.iter().all(|row| row.error.map_or(true, f64::is_finite))
                && r.rows.iter().all(|row| row.order.map_or(true, |o| o > 0.0));
            println!("{}: errors finite and decreasing", verdict(ok));
            Ok(ok)
        }
        Command::Sod => {
            let scheme = resolve(&s.scheme_or("scheme_a"))?;
            let feasible = bgk_imex::tableau::scheme_cfl(&scheme).is_some();
            let mut p = SodParams::new(scheme, s.one_eps(1e-6)?);
            p.nx = s.one_nx(80)?;
            p.t_end = s.t_end.unwrap_or(0.3);
            p.opts = opts(&s, true);
            let r = sod(&p)?;
            let stem = format!("sod_{}_{}", r.scheme, tag(r.eps));
            write(&out, &format!("{stem}_diagnostics.csv"), &diagnostics_csv(&r.diagnostics))?;
            write(&out, &format!("{stem}_counts.csv"), &r.counts_csv())?;
            write(&out, &format!("{stem}_snapshot.csv"), &r.snapshot)?;
            println!("max negative cells: {}", r.max_negative_cells());
            if feasible {
                let ok = !r.any_negative();
                println!("{}: no negative values at any stage", verdict(ok));
                Ok(ok)
            } else {
                println!("scheme is not positivity-feasible; negative counts are informational");
                Ok(true)
            }
        }
        Command::Mixed => {
            let mut p = MixedParams::new(resolve(&s.scheme_or("scheme_a"))?);
            p.nx = s.one_nx(40)?;
            p.nx_ref = 2 * p.nx;
            p.t_end = s.t_end.unwrap_or(0.5);
            p.opts = opts(&s, true);
            let r = mixed(&p)?;
            write(&out, "mixed_ap.csv", &r.ap.snapshot_csv())?;
            write(&out, "mixed_reference.csv", &r.reference.snapshot_csv())?;
            println!(
                "relative L2 difference: rho {:.3e}, u {:.3e}, T {:.3e}",
                r.rel_l2[0], r.rel_l2[1], r.rel_l2[2]
            );
            println!("{}: all within 5%", verdict(r.passed()));
            Ok(r.passed())
        }
        Command::Stability { .. } => {
            let t = resolve(&s.scheme_or("scheme_a"))?;
            let z2 = s.z2.clone().unwrap_or_else(|| DEFAULT_Z2.to_vec());
            let r = stability(&t, &z2, s.resolution.unwrap_or(400))?;
            write(&out, &format!("stability_{}.csv", r.scheme), &r.csv)?;
            println!("{}: stable sets nested", verdict(r.nested));
            Ok(r.nested)
        }
        Command::Entropy { .. } => {
            let t = resolve(&s.scheme_or("scheme_a"))?;
            let o = opts(&s, true);
            let eps = s.one_eps(1e-2)?;
            let f0 = inconsistent_initial(s.one_nx(40)?, &o.grid()?)?;
            let r = entropy_run(&t, f0, eps, s.steps.unwrap_or(200), 0.9)?;
            write(&out, &format!("entropy_{}_{}.csv", s.scheme_or("scheme_a"), tag(eps)), &r.csv())?;
            println!("largest one-step increase: {:e}", r.max_increase());
            println!("{}: entropy non-increasing", verdict(r.monotone()));
            Ok(r.monotone())
        }
        Command::Broadwell { .. } => {
            let p = BroadwellParams {
                scheme: resolve(&s.scheme_or("scheme_a"))?,
                eps: s.one_eps(1.0)?,
                nx: s.one_nx(80)?,
                steps: s.steps.unwrap_or(100),
                fraction: 0.5,
                limiter: s.limiter.unwrap_or(true),
            };
            let r = broadwell(&p)?;
            let stem = format!("broadwell_{}_{}", s.scheme_or("scheme_a"), tag(p.eps));
            write(&out, &format!("{stem}_diagnostics.csv"), &r.csv())?;
            write(&out, &format!("{stem}_snapshot.csv"), &r.snapshot)?;
            let mut ok = r.positive() && r.max_drift() <= 1e-12;
            if p.eps <= 1e-8 && r.records.len() > 1 {
                ok &= r.records[1].closure_residual <= 1e-6;
            }
            println!("{}: positivity, conservation and closure checks", verdict(ok));
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
