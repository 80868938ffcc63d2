//! `frtsim`: run fault ride-through scenarios and check them against a
//! grid-code envelope.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use statcom_frt::report::RunReport;
use statcom_frt::sim::{grid_code_check, run_scenario, GridCodeReport};
use statcom_frt::{trace, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(name = "frtsim", version, about = "STATCOM fault ride-through simulator")]
struct Cli {
    /// Scenario file (TOML). Omitted keys take preset values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bundled preset used when no config file is given.
    #[arg(long, global = true, default_value = "paper")]
    preset: String,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include controller internals in CSV output.
    #[arg(long, global = true)]
    verbose: bool,
    /// Reserved; recorded in reports only.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured scenario.
    Run,
    /// Run the scenario with and without the STATCOM.
    Compare,
    /// Check a trace (or a fresh run) against the ride-through envelope.
    Check {
        /// CSV trace with `time[s]` and `v_pcc[pu]` columns.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a grid of parameter variations, e.g. `--set network.fault_resistance=0.2,0.4`.
    Sweep {
        #[arg(long = "set", required = true)]
        set: Vec<String>,
    },
}

struct Ctx {
    cfg: ScenarioConfig,
    out: PathBuf,
    verbose: bool,
    seed: Option<u64>,
}

fn load(cli: &Cli) -> Result<Ctx> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ScenarioConfig::preset(&cli.preset)?,
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let verbose = cli.verbose || cfg.output.verbose;
    Ok(Ctx {
        out: cfg.output.dir.clone(),
        cfg,
        verbose,
        seed: cli.seed,
    })
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Run one configuration and write `<stem>.csv` and `<stem>.json`.
fn execute(cfg: &ScenarioConfig, out: &Path, stem: &str, verbose: bool, seed: Option<u64>) -> Result<RunReport> {
    let result = run_scenario(cfg)?;
    let report = RunReport::new(cfg, &result, seed);
    trace::write_csv_file(&result.series, out.join(format!("{stem}.csv")), verbose)?;
    report.write(out.join(format!("{stem}.json")))?;
    Ok(report)
}

fn print_summary(label: &str, r: &RunReport) {
    let m = &r.metrics;
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    println!("{label}");
    println!("  pcc voltage        min {:.3} / max {:.3} pu", m.v_min, m.v_max);
    println!("  fault minimum      {} pu", opt(m.v_min_during_fault));
    println!("  recovery (0.98 pu) {} s, settling (±2%) {} s", opt(m.recovery_time), opt(m.settling_time));
    println!("  max deviation      {:.3} pu (post-fault {:.3})", m.max_deviation, m.max_post_fault_deviation);
    println!("  statcom q          peak {:.2} Mvar, post-fault mean {} Mvar", m.peak_q_statcom, opt(m.post_fault_mean_q_statcom));
    println!("  grid               mean p {:.2} MW, post-fault mean q {} Mvar", m.mean_p_grid, opt(m.post_fault_mean_q_grid));
    println!("  grid code          {:?}", r.grid_code.verdict);
    match &r.divergence {
        Some(d) => println!(
            "  divergence         {} at t = {:.4} s{}",
            d.quantity,
            d.time,
            if r.expect_unstable { " (expected)" } else { "" }
        ),
        None => println!("  divergence         none"),
    }
}

fn print_violations(report: &GridCodeReport) {
    for v in &report.violations {
        println!(
            "  violation in {}: t = {:.4}..{:.4} s, v = {:.4} pu, bound {:.4} pu, margin {:.4} pu",
            v.region, v.t_from, v.t_to, v.worst_voltage, v.worst_bound, v.worst_margin
        );
    }
}

fn cmd_run(ctx: &Ctx) -> Result<bool> {
    let stem = slug(&ctx.cfg.name);
    let r = execute(&ctx.cfg, &ctx.out, &stem, ctx.verbose, ctx.seed)?;
    print_summary(&ctx.cfg.name, &r);
    println!("wrote {}", ctx.out.join(format!("{stem}.csv")).display());
    Ok(!r.unexpected_divergence())
}

fn cmd_compare(ctx: &Ctx) -> Result<bool> {
    let mut with = ctx.cfg.clone();
    with.statcom.enabled = true;
    let mut without = ctx.cfg.clone();
    without.statcom.enabled = false;
    without.simulation.expect_unstable = true;
    let base = slug(&ctx.cfg.name);
    let (a, b) = std::thread::scope(|s| {
        let ha = s.spawn(|| execute(&with, &ctx.out, &format!("{base}_statcom"), ctx.verbose, ctx.seed));
        let hb = s.spawn(|| execute(&without, &ctx.out, &format!("{base}_no_statcom"), ctx.verbose, ctx.seed));
        (ha.join(), hb.join())
    });
    let a = a.map_err(|_| anyhow::anyhow!("run with STATCOM panicked"))??;
    let b = b.map_err(|_| anyhow::anyhow!("run without STATCOM panicked"))??;
    print_summary("with STATCOM", &a);
    print_summary("without STATCOM", &b);
    let with_dev = a.metrics.max_post_fault_deviation.max(1e-12);
    let ratio = b.metrics.max_post_fault_deviation / with_dev;
    let ratio_total = b.metrics.max_deviation / with_dev;
    println!("post-fault deviation ratio (without / with): {ratio:.2}");
    println!("whole-run deviation without / post-fault with: {ratio_total:.2}");
    let summary = serde_json::json!({
        "with_statcom": a,
        "without_statcom": b,
        "post_fault_deviation_ratio": ratio,
        "deviation_ratio": ratio_total,
    });
    std::fs::write(ctx.out.join(format!("{base}_compare.json")), serde_json::to_string_pretty(&summary)?)?;
    Ok(!a.unexpected_divergence())
}

fn cmd_check(ctx: &Ctx, trace_path: Option<&Path>) -> Result<bool> {
    let report = match trace_path {
        Some(p) => {
            let ts = trace::read_csv_file(p).with_context(|| format!("reading {}", p.display()))?;
            grid_code_check(&ts, &ctx.cfg.envelope, &ctx.cfg.fault)
        }
        None => {
            let result = run_scenario(&ctx.cfg)?;
            grid_code_check(&result.series, &ctx.cfg.envelope, &ctx.cfg.fault)
        }
    };
    println!(
        "grid code: {:?} ({} samples checked, minimum margin {})",
        report.verdict,
        report.checked_samples,
        report.min_margin.map_or("-".into(), |m| format!("{m:.4} pu"))
    );
    print_violations(&report);
    Ok(report.passed())
}

fn parse_set(spec: &str) -> Result<(String, Vec<String>)> {
    let Some((key, values)) = spec.split_once('=') else {
        bail!("--set expects key=v1,v2,..., got `{spec}`");
    };
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
    if values.iter().any(|v| v.is_empty()) {
        bail!("empty value in `{spec}`");
    }
    Ok((key.trim().to_string(), values))
}

fn cmd_sweep(ctx: &Ctx, sets: &[String]) -> Result<bool> {
    let axes = sets.iter().map(|s| parse_set(s)).collect::<Result<Vec<_>>>()?;
    let mut cases = vec![(ctx.cfg.clone(), Vec::<(String, String)>::new())];
    for (key, values) in &axes {
        let mut next = Vec::new();
        for (cfg, assigned) in &cases {
            for v in values {
                let c = cfg.with_override(key, v).with_context(|| format!("--set {key}={v}"))?;
                let mut a = assigned.clone();
                a.push((key.clone(), v.clone()));
                next.push((c, a));
            }
        }
        cases = next;
    }
    let base = slug(&ctx.cfg.name);
    let reports: Vec<Result<RunReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .enumerate()
            .map(|(k, (cfg, _))| {
                let stem = format!("{base}_sweep_{k:03}");
                s.spawn(move || execute(cfg, &ctx.out, &stem, ctx.verbose, ctx.seed))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("sweep case panicked"))))
            .collect()
    });
    let mut ok = true;
    let mut rows = Vec::new();
    for (k, ((_, assigned), r)) in cases.iter().zip(reports).enumerate() {
        let r = r?;
        let label: Vec<String> = assigned.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!(
            "{k:03} {:<40} v_min {:.3} dev {:.3} grid code {:?}{}",
            label.join(" "),
            r.metrics.v_min,
            r.metrics.max_post_fault_deviation,
            r.grid_code.verdict,
            if r.divergence.is_some() { " diverged" } else { "" }
        );
        ok &= !r.unexpected_divergence();
        rows.push(serde_json::json!({
            "case": k,
            "overrides": assigned.iter().map(|(k, v)| (k.clone(), v.clone())).collect::<std::collections::BTreeMap<_, _>>(),
            "metrics": r.metrics,
            "grid_code": r.grid_code.verdict,
            "diverged": r.divergence.is_some(),
        }));
    }
    std::fs::write(ctx.out.join(format!("{base}_sweep.json")), serde_json::to_string_pretty(&rows)?)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(&cli).and_then(|ctx| {
        std::fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
        match &cli.command {
            Command::Run => cmd_run(&ctx),
            Command::Compare => cmd_compare(&ctx),
            Command::Check { trace } => cmd_check(&ctx, trace.as_deref()),
            Command::Sweep { set } => cmd_sweep(&ctx, set),
        }
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
