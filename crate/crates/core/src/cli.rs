//! Command-line front end. `run` returns the process exit code:
//! 0 pass, 2 configuration error, 3 runtime or numeric error, 4 check
//! failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::clt::{run_experiment, KRule};
use crate::config::ExperimentConfig;
use crate::error::Error;
use crate::functionals::build_functional_table;
use crate::lemmas::{run_lemma_suite, suite_csv, LemmaId, SuiteGrid};
use crate::manifest::{write_atomic, RunManifest};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "tailsum",
    version,
    about = "Tail functionals and extreme-sum limit checks"
)]
pub struct Cli {
    /// Experiment configuration (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for replicates; 0 = all cores. Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true)]
    pub master_seed: Option<u64>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Scalar and list fields of the configuration, overriding the file.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Model descriptor; repeat for several (replaces the configured list)
    #[arg(long = "model", global = true)]
    pub models: Vec<String>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_values: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Power rule k = ceil(coeff n^gamma)
    #[arg(long, global = true)]
    pub k_coeff: Option<f64>,
    #[arg(long, global = true)]
    pub k_gamma: Option<f64>,
    /// Fixed k for every n (takes precedence over the power rule)
    #[arg(long, global = true)]
    pub k_fixed: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub statistics: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Lemma ids (L1..L7, RC); an empty value selects none
    #[arg(long, global = true, value_delimiter = ',')]
    pub lemmas: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub s_grid_start: Option<f64>,
    #[arg(long, global = true)]
    pub s_grid_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub s_grid_count: Option<usize>,
    #[arg(long, global = true)]
    pub dump_samples: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Functional tables c(s,β), σ²(s), μ(s), ρ(s) per model
    Functionals,
    /// The lemma suite per model
    Lemmas,
    /// Replicated experiments and normality reports
    Simulate,
    /// Merge manifests into a summary
    Report {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
}

fn parse_lemma(s: &str) -> Result<LemmaId, Error> {
    LemmaId::all()
        .into_iter()
        .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
        .ok_or_else(|| Error::Config(format!("unknown lemma {s:?}")))
}

pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut c = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("cannot read {path}: {source}")),
            other => other,
        })?,
        None => ExperimentConfig::for_models(&[]),
    };
    let o = &cli.overrides;
    if !o.models.is_empty() {
        c.models = o.models.clone();
    }
    if let Some(v) = &o.n_values {
        c.n_values = v.clone();
    }
    if let Some(v) = o.replicates {
        c.replicates = v;
    }
    if let Some(k) = o.k_fixed {
        c.k_rule = KRule::Fixed { k };
    } else if o.k_coeff.is_some() || o.k_gamma.is_some() {
        let (coeff, gamma) = match c.k_rule {
            KRule::Power { coeff, gamma } => (coeff, gamma),
            KRule::Fixed { .. } => (1.0, 0.4),
        };
        c.k_rule = KRule::Power {
            coeff: o.k_coeff.unwrap_or(coeff),
            gamma: o.k_gamma.unwrap_or(gamma),
        };
    }
    if let Some(v) = &o.statistics {
        c.statistics = v.clone();
    }
    if let Some(v) = &o.betas {
        c.betas = v.clone();
    }
    if let Some(v) = &o.lemmas {
        c.lemmas = v
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| parse_lemma(s))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = o.s_grid_start {
        c.s_grid.start = v;
    }
    if let Some(v) = o.s_grid_ratio {
        c.s_grid.ratio = v;
    }
    if let Some(v) = o.s_grid_count {
        c.s_grid.count = v;
    }
    if o.dump_samples {
        c.dump_samples = true;
    }
    if let Some(seed) = cli.master_seed {
        c.master_seed = seed;
    }
    if let Some(d) = &cli.output_dir {
        c.output_dir = d.display().to_string();
    }
    Ok(c)
}

fn code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn fail(e: Error) -> i32 {
    eprintln!("error: {e}");
    code_for(&e)
}

/// File-name form of a model descriptor.
pub fn slug(descriptor: &str) -> String {
    let mut s: String = descriptor
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    while s.ends_with('_') {
        s.pop();
    }
    s
}

fn finish(mut manifest: RunManifest, dir: &Path, code: i32) -> i32 {
    manifest.exit_code = code;
    match manifest.write(dir) {
        Ok(p) => {
            println!("wrote {}", p.display());
            code
        }
        Err(e) => fail(e),
    }
}

pub fn cmd_functionals(config: &ExperimentConfig) -> i32 {
    if let Err(e) = config.validate() {
        return fail(e);
    }
    let (models, grid) = match (config.parse_models(), config.s_grid.build()) {
        (Ok(m), Ok(g)) => (m, g),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    let dir = PathBuf::from(&config.output_dir);
    let mut manifest = RunManifest::new("functionals", config);
    let mut code = EXIT_PASS;
    for m in &models {
        let table = build_functional_table(&**m, &grid, &config.betas);
        let flags = table.flags();
        for f in &flags {
            eprintln!("{}: {f}", table.model);
        }
        if let Err(e) = manifest.emit(
            &dir,
            &format!("functionals_{}.csv", slug(&table.model)),
            table.to_csv().as_bytes(),
        ) {
            return fail(e);
        }
        let verdict = if flags.is_empty() { "pass" } else { "error" };
        if !flags.is_empty() {
            code = EXIT_RUNTIME;
        }
        manifest.check(format!("functionals {}", table.model), verdict);
    }
    finish(manifest, &dir, code)
}

pub fn cmd_lemmas(config: &ExperimentConfig) -> i32 {
    if let Err(e) = config.validate() {
        return fail(e);
    }
    let models = match config.parse_models() {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let grid = SuiteGrid {
        start: config.s_grid.start,
        ratio: config.s_grid.ratio,
    };
    let outcomes = run_lemma_suite(&models, &config.lemmas, grid, &config.tolerances);
    let dir = PathBuf::from(&config.output_dir);
    let mut manifest = RunManifest::new("lemmas", config);
    if let Err(e) = manifest.emit(&dir, "lemmas.csv", suite_csv(&outcomes).as_bytes()) {
        return fail(e);
    }
    let mut code = EXIT_PASS;
    for o in &outcomes {
        manifest.check(format!("{} {}", o.check, o.model), o.verdict.as_str());
        if !o.verdict.is_pass() {
            code = EXIT_CHECK;
            let detail = match (&o.report, &o.error) {
                (_, Some(e)) => e.clone(),
                (Some(r), None) => format!(
                    "value {} vs target {} (error {:.3e} > {:.3e})",
                    r.final_value(),
                    r.target,
                    r.final_error,
                    r.tolerance
                ),
                (None, None) => String::new(),
            };
            eprintln!("FAIL {} {}: {detail}", o.check, o.model);
        }
    }
    finish(manifest, &dir, code)
}

pub fn cmd_simulate(config: &ExperimentConfig, threads: usize) -> i32 {
    let report = match run_experiment(config, threads) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let dir = PathBuf::from(&config.output_dir);
    let mut manifest = RunManifest::new("simulate", config);
    let mut outputs = vec![
        ("normality.json", report.to_json()),
        ("normality.csv", report.to_csv()),
    ];
    if config.dump_samples {
        outputs.push(("samples.csv", report.samples_csv()));
    }
    for (name, text) in outputs {
        if let Err(e) = manifest.emit(&dir, name, text.as_bytes()) {
            return fail(e);
        }
    }
    let mut code = EXIT_PASS;
    for (model, cell, r) in report.reports() {
        manifest.check(
            format!("{model} n={} k={} {}", cell.n, cell.k, r.stat),
            r.verdict.as_str(),
        );
        if !r.verdict.is_pass() {
            code = EXIT_CHECK;
            let why = if r.violations.is_empty() {
                "variance undefined".to_string()
            } else {
                r.violations.join("; ")
            };
            eprintln!(
                "{} {model} n={} {}: {why}",
                r.verdict.as_str().to_uppercase(),
                cell.n,
                r.stat
            );
        }
    }
    finish(manifest, &dir, code)
}

pub fn cmd_report(manifests: &[PathBuf], output_dir: Option<&Path>) -> i32 {
    let mut loaded = Vec::with_capacity(manifests.len());
    for p in manifests {
        match RunManifest::load_verified(p) {
            Ok(m) => loaded.push((p, m)),
            Err(e) => return fail(e),
        }
    }
    let mut md = String::from("# Run summary\n\n| manifest | command | version | timestamp | exit | checks | failing |\n|---|---|---|---|---|---|---|\n");
    let mut failing = Vec::new();
    for (p, m) in &loaded {
        let bad: Vec<_> = m.failing().collect();
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            p.display(),
            m.command,
            m.version,
            m.timestamp,
            m.exit_code,
            m.checks.len(),
            bad.len()
        ));
        failing.extend(bad.into_iter().map(|c| (m.command.clone(), c.clone())));
    }
    md.push('\n');
    if failing.is_empty() {
        md.push_str("**All checks pass.**\n");
    } else {
        md.push_str(&format!(
            "**{} failing checks**\n\n| command | cell | verdict |\n|---|---|---|\n",
            failing.len()
        ));
        for (cmd, c) in &failing {
            md.push_str(&format!("| {cmd} | {} | {} |\n", c.id, c.verdict));
        }
    }
    let dir = output_dir
        .map(Path::to_path_buf)
        .or_else(|| manifests[0].parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let path = dir.join("summary.md");
    if let Err(e) = write_atomic(&path, md.as_bytes()) {
        return fail(e);
    }
    println!("wrote {}", path.display());
    EXIT_PASS
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    if let Command::Report { manifests } = &cli.command {
        return cmd_report(manifests, cli.output_dir.as_deref());
    }
    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    match cli.command {
        Command::Functionals => cmd_functionals(&config),
        Command::Lemmas => cmd_lemmas(&config),
        Command::Simulate => cmd_simulate(&config, cli.threads),
        Command::Report { .. } => unreachable!("handled above"),
    }
}
