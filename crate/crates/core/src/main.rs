use clap::{Args, Parser, Subcommand};
use hsfc::config::{HalfLineSpec, OrderSpec, RunConfig};
use hsfc::function_algebra::HalfLineFunction;
use hsfc::hs_calculus::{char_one_check, hs_apply_extended, QuadratureSpec};
use hsfc::operator_core::{fit_resolvent_bound, write_matrix, BoundGrid};
use hsfc::seeley::{default_cutoff, seeley_coefficients, seeley_extend};
use hsfc::smt_harness::{
    convergence_table, error_ratios, run_batch, standard_cases, write_csv, SmtCase,
};
use hsfc::{Error, Result};
use serde_json::json;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hsfc", version, about = "Matrix functions from the Helffer-Sjöstrand formula")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the number of refinement levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Taylor order: `auto` or an integer.
    #[arg(long)]
    n: Option<OrderSpec>,
    /// Write outputs into this directory instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a one-line JSON summary.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute φ(H) for the configured function and operator.
    Apply(Common),
    /// Check spectral mapping in the eigenbasis; exit code 1 on any failure.
    VerifySmt {
        #[command(flatten)]
        common: Common,
        /// Run the built-in (function × operator) suite instead of the config pair.
        #[arg(long)]
        suite: bool,
        /// Pass when both defects are within factor · tol · κ(P).
        #[arg(long, default_value_t = 10.0)]
        factor: f64,
    },
    /// Error against the exact oracle per refinement level, as CSV.
    ConvergenceTable(Common),
    /// Print exact extension coefficients and dump the extension as CSV.
    SeeleyExtend {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
        /// Highest derivative in the dump.
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
    /// Fit ‖(z-H)^{-1}‖ ≤ c |Im z|^{-1} (<z>/|Im z|)^α on a grid.
    FitBound(Common),
    /// Check χ_{[lo,hi],ε}(H) = I for an interval around the spectrum.
    CharOne {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Half-height of the rectangle contour.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
    },
}

impl Common {
    fn load(&self) -> Result<(RunConfig, QuadratureSpec)> {
        let cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut quad = cfg.quad;
        if let Some(t) = self.tol {
            quad.tol = t;
        }
        if let Some(l) = self.levels {
            quad.levels = l;
        }
        quad.validate()?;
        Ok((cfg, quad))
    }

    fn order(&self, cfg: &RunConfig) -> OrderSpec {
        self.n.unwrap_or(cfg.n)
    }

    /// Write `text` to `out/name`, or to stdout without `--out`.
    fn emit(&self, name: &str, text: &str) -> Result<()> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), text)?;
                Ok(())
            }
            None => {
                io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn csv_string<T: serde::Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn apply(c: &Common) -> Result<bool> {
    let (cfg, quad) = c.load()?;
    let phi = cfg.function()?.build_extended()?;
    let op = cfg.operator()?;
    let n = c.order(&cfg).resolve(&op.h)?;
    let r = hs_apply_extended(&phi, &op.h, n, &quad)?;
    let oracle_error = op
        .test
        .as_ref()
        .map(|t| (&r.value - &t.oracle_apply_extended(&phi)).frobenius());
    c.emit("result.txt", &write_matrix(&r.value))?;
    if c.json {
        println!(
            "{}",
            json!({
                "levels": r.levels_used, "estimate": r.error_estimate, "n": r.n_used,
                "cells": r.cells, "converged": r.converged, "oracle_error": oracle_error,
            })
        );
    } else {
        println!("{}", r.summary_line());
        if let Some(e) = oracle_error {
            println!("oracle_error={e:.3e}");
        }
    }
    Ok(true)
}

fn verify(c: &Common, suite: bool, factor: f64) -> Result<bool> {
    let (cfg, quad) = c.load()?;
    let cases = if suite {
        standard_cases()?
    } else {
        let spec = cfg.function()?;
        let op = cfg.operator()?;
        let t = op.require_test()?.clone();
        vec![SmtCase {
            operator_id: format!("d={}", t.dim()),
            function_id: spec.build()?.label().to_string(),
            phi: spec.build_extended()?,
            operator: t,
        }]
    };
    // one order for the whole batch: the largest any operator asks for
    let n = match c.order(&cfg) {
        OrderSpec::Fixed(n) => n,
        auto => cases
            .iter()
            .map(|s| auto.resolve(s.operator.h()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(2),
    };
    let (reports, summary) = run_batch(&cases, n, &quad, factor)?;
    c.emit("smt.csv", &csv_string(&reports)?)?;
    if c.json {
        println!("{}", serde_json::to_string(&summary).map_err(|e| Error::Io(e.to_string()))?);
    } else {
        println!(
            "cases={} failures={} worst_scaled_defect={:.3e}",
            summary.cases, summary.failures, summary.worst_scaled_defect
        );
    }
    Ok(summary.failures == 0)
}

fn convergence(c: &Common) -> Result<bool> {
    let (cfg, quad) = c.load()?;
    let f = cfg.function()?.build()?;
    let op = cfg.operator()?;
    let t = op.require_test()?;
    let n = c.order(&cfg).resolve(t.h())?;
    let rows = convergence_table(&f, t, n, &quad, quad.levels)?;
    c.emit("convergence.csv", &csv_string(&rows)?)?;
    let ratios = error_ratios(&rows);
    if c.json {
        println!("{}", json!({ "n": n, "ratios": ratios, "final_error": rows.last().map(|r| r.error) }));
    } else {
        let text: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
        println!("n={n} ratios={}", text.join(","));
    }
    Ok(true)
}

fn seeley(c: &Common, k: usize, from: f64, to: f64, points: usize, order: usize) -> Result<bool> {
    let (cfg, _) = c.load()?;
    let f = cfg
        .half_line
        .as_ref()
        .map_or_else(|| HalfLineFunction::exp_decay(1.0, 1), HalfLineSpec::build);
    let coeffs = seeley_coefficients(k)?;
    for (i, (a, b)) in coeffs.a().iter().zip(coeffs.b()).enumerate() {
        println!("a_{i} = {a}  b_{i} = {b}");
    }
    let ext = seeley_extend(&f, &coeffs, &default_cutoff())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x".to_string()];
    for r in 0..=order {
        header.push(format!("d{r}_re"));
        header.push(format!("d{r}_im"));
    }
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    let steps = points.max(2) - 1;
    for i in 0..=steps {
        let x = from + (to - from) * i as f64 / steps as f64;
        let mut rec = vec![format!("{x:.17e}")];
        for d in ext.derivatives(x, order)? {
            rec.push(format!("{:.17e}", d.re));
            rec.push(format!("{:.17e}", d.im));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    let text = String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?;
    c.emit("seeley.csv", &text)?;
    Ok(true)
}

fn fit_bound(c: &Common) -> Result<bool> {
    let (cfg, _) = c.load()?;
    let op = cfg.operator()?;
    let (lo, hi) = op.enclosure();
    let fit = fit_resolvent_bound(&op.h, &BoundGrid::around(lo, hi))?;
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("bound_samples.csv"), csv_string(&fit.samples)?)?;
    }
    if c.json {
        println!(
            "{}",
            json!({ "c": fit.c, "alpha": fit.alpha, "recommended_n": fit.recommended_order(), "samples": fit.samples.len() })
        );
    } else {
        println!("c={:.6} alpha={:.6} recommended_n={}", fit.c, fit.alpha, fit.recommended_order());
    }
    Ok(true)
}

fn char_one(c: &Common, lo: f64, hi: f64, eps: f64, delta: f64) -> Result<bool> {
    let (cfg, quad) = c.load()?;
    let op = cfg.operator()?;
    let rep = char_one_check(&op.h, op.enclosure(), lo, hi, eps, delta, &quad)?;
    let ok = rep.deviation() <= quad.tol;
    if c.json {
        println!("{}", serde_json::to_string(&rep).map_err(|e| Error::Io(e.to_string()))?);
    } else {
        println!(
            "area_deviation={:.3e} contour_deviation={:.3e} contour_nodes={}",
            rep.area_deviation, rep.contour_deviation, rep.contour_nodes
        );
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Apply(c) => apply(&c),
        Command::VerifySmt { common, suite, factor } => verify(&common, suite, factor),
        Command::ConvergenceTable(c) => convergence(&c),
        Command::SeeleyExtend {
            common,
            k,
            from,
            to,
            points,
            order,
        } => seeley(&common, k, from, to, points, order),
        Command::FitBound(c) => fit_bound(&c),
        Command::CharOne {
            common,
            lo,
            hi,
            eps,
            delta,
        } => char_one(&common, lo, hi, eps, delta),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
