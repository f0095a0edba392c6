//! Command-line front end: scenario simulation, stationary solving,
//! cross-validation, sweeps, rate-matched experiments, and calibration.

use anyhow::Context;
use clap::{Parser, Subcommand};
use popdyn::calib::{
    compute_residuals, fit_families, read_posts_csv, write_kappa_surface_csv,
    grid_search_system_params, DEFAULT_FAMILIES,
};
use popdyn::harness::{run_scenario, sweep, table3_experiment, validate};
use popdyn::model::check_ergodicity;
use popdyn::scenario::Scenario;
use popdyn::solver::{default_grid, distribution_moments, solve_stationary, Grid};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "popdyn", about = "Jump-decay popularity model toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and report competition metrics.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the stationary level-crossing equation per influencer.
    Solve {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Cross-validate Monte Carlo occupation CDFs against the solver.
    Validate {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run a scenario across a list of parameter values.
    Sweep {
        config: PathBuf,
        /// Parameter path, e.g. system.gamma, shared.cv, shared.lambda1.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rate-matched first-place-probability matrix across phi values.
    Table3 {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.2, 0.3])]
        phis: Vec<f64>,
        /// Target posting rate (posts/day) for lambda1 adaptation.
        #[arg(long, default_value_t = 4.0)]
        target_rate: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit system and per-influencer parameters from a posts CSV.
    Calibrate {
        posts: PathBuf,
        #[arg(long = "gamma-grid", value_delimiter = ',')]
        gamma_grid: Vec<f64>,
        #[arg(long = "theta-grid", value_delimiter = ',')]
        theta_grid: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Report the ergodicity verdict for each influencer.
    Check { config: PathBuf },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, out } => {
            let sc = Scenario::from_path(&config)?;
            let report = run_scenario(&sc, false, Some(&out))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Solve { config, out } => {
            let sc = Scenario::from_path(&config)?;
            let sys = sc.system_params()?;
            std::fs::create_dir_all(&out)?;
            let mut w = csv::Writer::from_path(out.join("pdf.csv"))?;
            w.write_record(["influencer_id", "y", "f", "F"])?;
            for (i, inf) in sc.influencers.iter().enumerate() {
                let grid = match &sc.solver {
                    Some(s) => Grid::log_spaced(s.ymin, s.ymax, s.nodes)?,
                    None => default_grid(&sys, inf),
                };
                let (tol, max_iter) = sc
                    .solver
                    .as_ref()
                    .map(|s| (s.tol, s.max_iter))
                    .unwrap_or((1e-8, 4000));
                let sol = solve_stationary(&sys, inf, &grid, tol, max_iter)
                    .with_context(|| format!("influencer {i}"))?;
                let (mean, var) = distribution_moments(&sol.density);
                println!(
                    "influencer {i}: mean {mean:.4e}, sd {:.4e}, {} iterations",
                    var.sqrt(),
                    sol.diagnostics.iterations
                );
                let cdf = sol.density.cdf();
                for (k, &y) in grid.nodes().iter().enumerate() {
                    w.write_record([
                        i.to_string(),
                        format!("{y:.6e}"),
                        format!("{:.6e}", sol.density.f[k]),
                        format!("{:.6e}", cdf[k]),
                    ])?;
                }
            }
            w.flush()?;
        }
        Command::Validate { config, out } => {
            let sc = Scenario::from_path(&config)?;
            let rows = validate(&sc, Some(&out))?;
            let mut all_pass = true;
            for r in &rows {
                println!(
                    "influencer {}: KS = {:.4} ({})",
                    r.influencer,
                    r.ks,
                    if r.pass { "pass" } else { "FAIL" }
                );
                all_pass &= r.pass;
            }
            if !all_pass {
                anyhow::bail!("validation failed");
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            anyhow::ensure!(!values.is_empty(), "--values must be nonempty");
            let sc = Scenario::from_path(&config)?;
            let (rows, failures) = sweep(&sc, &param, &values, Some(&out))?;
            println!("{} rows written to {}", rows.len(), out.join("sweep.csv").display());
            for (value, err) in failures {
                eprintln!("cell {param}={value} failed: {err}");
            }
        }
        Command::Table3 {
            config,
            phis,
            target_rate,
            out,
        } => {
            let sc = Scenario::from_path(&config)?;
            let res = table3_experiment(&sc, &phis, target_rate, Some(&out))?;
            for (k, phi) in res.phis.iter().enumerate() {
                let col: Vec<String> =
                    res.pi1[k].iter().map(|p| format!("{p:.3}")).collect();
                println!("phi = {phi}: pi1 = [{}]", col.join(", "));
            }
        }
        Command::Calibrate {
            posts,
            gamma_grid,
            theta_grid,
            out,
        } => {
            let data = read_posts_csv(&posts)?;
            let res = grid_search_system_params(&data, &gamma_grid, &theta_grid, &DEFAULT_FAMILIES)?;
            std::fs::create_dir_all(&out)?;
            write_kappa_surface_csv(out.join("kappa_surface.csv"), &res.surface)?;
            // Per-influencer fit report: every candidate family at the
            // optimum, plus the chosen one.
            let mut report = Vec::new();
            for ds in &data {
                let residuals = compute_residuals(ds, res.best_gamma, res.best_theta)?;
                let (fits, best) = fit_families(&residuals.values, &DEFAULT_FAMILIES)?;
                report.push(serde_json::json!({
                    "influencer": ds.influencer,
                    "chosen_family": fits[best].family,
                    "beta_hat": fits[best].beta_hat,
                    "cv_hat": fits[best].cv_hat,
                    "candidates": fits,
                }));
            }
            let doc = serde_json::json!({
                "best_gamma": res.best_gamma,
                "best_theta": res.best_theta,
                "influencers": report,
            });
            std::fs::write(out.join("fit_report.json"), serde_json::to_string_pretty(&doc)?)?;
            println!(
                "best gamma = {:.6}, best theta = {:.2}; report in {}",
                res.best_gamma,
                res.best_theta,
                out.display()
            );
        }
        Command::Check { config } => {
            let sc = Scenario::from_path(&config)?;
            let sys = sc.system_params()?;
            for (i, inf) in sc.influencers.iter().enumerate() {
                let v = check_ergodicity(&sys, inf);
                println!(
                    "influencer {i}: {:?} (theta+phi = {:.3})",
                    v.status, v.theta_plus_phi
                );
            }
        }
    }
    Ok(())
}
