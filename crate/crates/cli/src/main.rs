//! `jacaranda`: generate fixed-point prefixes, complexity tables, stabilizer
//! certificates and entropy reports.
//!
//! Exit codes: 0 when every requested item stabilized and every check passed,
//! 1 when some item is unstabilized, unresolved or failed, 2 on usage or I/O errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jacaranda_core::aperiodicity::{replay, sweep, SweepReport};
use jacaranda_core::complexity::{check_inequalities, Backend, Census, CensusConfig, CheckReport, KappaTable};
use jacaranda_core::entropy::{EntropyParams, EntropyReport};
use jacaranda_core::tree::MAX_DEPTH;
use jacaranda_core::{Error, Substreetution, TreePrefix};

#[derive(Parser, Debug)]
#[command(name = "jacaranda", version, about = "Exact computations on the Jacaranda tree")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Global {
    /// Worker threads for parallel scans
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Directory for generated prefixes (packed backend)
    #[arg(long, global = true, env = "JACARANDA_CACHE_DIR")]
    cache_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file (stdout if omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Root color of the fixed point
    #[arg(long, global = true, default_value_t = 0)]
    root: u8,

    /// Substitution as `<image of 0>,<image of 1>;<grammar>`
    #[arg(long, global = true, default_value = "010,110;BBAB")]
    substitution: String,

    /// How the fixed point is held during patch scans
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Shared)]
    backend: BackendArg,

    /// Largest generation depth (defaults: 96 shared, 26 packed)
    #[arg(long, global = true)]
    cap: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BackendArg {
    Packed,
    Shared,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Write the depth-N prefix of the fixed point as an SBTR file
    Gen {
        #[arg(long)]
        depth: u32,
    },
    /// Complexity table kappa_1 .. kappa_nmax
    Kappa {
        #[arg(long = "nmax")]
        n_max: u32,
        /// Check the growth relations and embed the report
        #[arg(long)]
        verify: bool,
    },
    /// Stabilizer refutation certificates for all words up to length L
    Stabilizers {
        #[arg(long = "L")]
        max_len: u32,
        #[arg(long = "Dmax", default_value_t = 14)]
        d_max: u32,
        /// Re-derive the certificates of a saved bundle instead of sweeping
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Entropy estimators and the skew-product sandwich
    Entropy {
        #[arg(long = "nmax")]
        n_max: u32,
        #[arg(long, default_value_t = 2)]
        p: u32,
        /// Largest word length for profile counts
        #[arg(long = "bufetov-nmax", default_value_t = 8)]
        bufetov_n_max: u32,
    },
}

/// Everything a run depends on; echoed in every report header.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    #[serde(flatten)]
    global: &'a Global,
    cap: u32,
    #[serde(flatten)]
    command: &'a Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let unstable = e
                .downcast_ref::<Error>()
                .is_some_and(|e| matches!(e, Error::NotStabilized { .. }));
            ExitCode::from(if unstable { 1 } else { 2 })
        }
    }
}

/// Prefix files and packed scans default to 26 lines (8 MiB); shared scans to 96.
fn cap(g: &Global, command: &Command) -> u32 {
    g.cap.unwrap_or(match (command, g.backend) {
        (Command::Gen { .. }, _) | (_, BackendArg::Packed) => 26,
        (_, BackendArg::Shared) => 96,
    })
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let g = &cli.global;
    let config = RunConfig {
        global: g,
        cap: cap(g, &cli.command),
        command: &cli.command,
    };
    let s: Substreetution = g.substitution.parse()?;
    match &cli.command {
        Command::Gen { depth } => cmd_gen(&config, &s, *depth),
        Command::Kappa { n_max, verify } => {
            let census = census(&config, s)?;
            cmd_kappa(&config, &census, *n_max, *verify)
        }
        Command::Stabilizers {
            max_len,
            d_max,
            replay,
        } => {
            let census = census(&config, s)?;
            cmd_stabilizers(&config, &census, *max_len, *d_max, replay.as_deref())
        }
        Command::Entropy {
            n_max,
            p,
            bufetov_n_max,
        } => {
            let census = census(&config, s)?;
            let params = EntropyParams {
                n_max: *n_max,
                p: *p,
                bufetov_n_max: *bufetov_n_max,
                workers: g.workers,
            };
            cmd_entropy(&config, &census, params)
        }
    }
}

fn cache_path(dir: &Path, s: &Substreetution, root: u8, depth: u32) -> PathBuf {
    let images: String = s
        .images()
        .iter()
        .map(|im| format!("{}{}{}", im.root, im.a, im.b))
        .collect();
    dir.join(format!("fixed-{images}-{}-r{root}-d{depth}.sbtr", s.grammar_string()))
}

/// The fixed-point prefix, read from or written to the cache directory when one is set.
fn prefix(g: &Global, s: &Substreetution, depth: u32) -> anyhow::Result<TreePrefix> {
    let Some(dir) = &g.cache_dir else {
        return Ok(s.fixed_point(g.root, depth)?);
    };
    let path = cache_path(dir, s, g.root, depth);
    if path.exists() {
        let t = TreePrefix::load(&path).with_context(|| format!("reading {}", path.display()))?;
        if t.depth() == depth {
            return Ok(t);
        }
    }
    let t = s.fixed_point(g.root, depth)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    t.save(&path).with_context(|| format!("writing {}", path.display()))?;
    Ok(t)
}

fn census(run: &RunConfig, s: Substreetution) -> anyhow::Result<Census> {
    let g = run.global;
    let config = CensusConfig {
        backend: match g.backend {
            BackendArg::Packed => Backend::Packed,
            BackendArg::Shared => Backend::Shared,
        },
        cap: run.cap,
        workers: g.workers,
        ..Default::default()
    };
    Ok(match config.backend {
        Backend::Packed => {
            let tree = prefix(g, &s, config.cap)?;
            Census::with_tree(s, tree, config)?
        }
        Backend::Shared => Census::new(s, g.root, config)?,
    })
}

fn header(config: &RunConfig) -> anyhow::Result<String> {
    let value = serde_json::to_value(config)?;
    let mut out = String::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let v = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Null => "-".into(),
                other => other.to_string(),
            };
            out.push_str(&format!("# {k}: {v}\n"));
        }
    }
    Ok(out)
}

fn emit(g: &Global, text: &str) -> anyhow::Result<()> {
    match &g.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json_report<T: Serialize>(config: &RunConfig, report: &T) -> anyhow::Result<String> {
    let doc = serde_json::json!({ "config": config, "report": report });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn cmd_gen(config: &RunConfig, s: &Substreetution, depth: u32) -> anyhow::Result<u8> {
    let g = config.global;
    if depth == 0 || depth > config.cap.min(MAX_DEPTH) {
        bail!("depth {depth} must be in 1..={}", config.cap.min(MAX_DEPTH));
    }
    let Some(out) = &g.out else {
        bail!("gen needs --out");
    };
    let t = prefix(g, s, depth)?;
    t.save(out).with_context(|| format!("writing {}", out.display()))?;
    let lines: Vec<String> = t.lines().take(4).map(|l| l.to_string()).collect();
    let sites = (1u64 << depth) - 1;
    print!("{}", header(config)?);
    println!("wrote {} ({} bytes)", out.display(), fs::metadata(out)?.len());
    for (i, l) in lines.iter().enumerate() {
        println!("line {i}: {l}");
    }
    println!("sites: {sites}");
    Ok(0)
}

fn kappa_csv(t: &KappaTable, checks: Option<&CheckReport>) -> String {
    let mut out = t.to_csv_string();
    if let Some(r) = checks {
        out.push_str("# checks\n# rule,n,lhs,relation,rhs,passed\n");
        for c in &r.checks {
            out.push_str(&format!(
                "# {},{},{},{},{},{}\n",
                c.rule, c.n, c.lhs, c.relation, c.rhs, c.passed
            ));
        }
        for note in &r.notes {
            out.push_str(&format!("# note: {note}\n"));
        }
    }
    out
}

fn cmd_kappa(config: &RunConfig, census: &Census, n_max: u32, verify: bool) -> anyhow::Result<u8> {
    if n_max < 2 {
        bail!("--nmax must be at least 2");
    }
    let t = census.table(n_max)?;
    let checks = verify.then(|| check_inequalities(&t));
    let text = match config.global.format {
        Format::Csv => header(config)? + &kappa_csv(&t, checks.as_ref()),
        Format::Json => json_report(
            config,
            &serde_json::json!({ "table": t, "checks": checks }),
        )?,
    };
    emit(config.global, &text)?;
    let ok = t.all_stabilized() && checks.as_ref().is_none_or(CheckReport::passed);
    Ok(if ok { 0 } else { 1 })
}

fn sweep_csv(r: &SweepReport) -> String {
    let mut out = String::from("omega,outcome,depth,candidates,reduction_chain\n");
    for c in &r.certificates {
        let outcome = serde_json::to_value(c.outcome)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let chain = c
            .reduction_chain
            .iter()
            .flatten()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.omega,
            outcome,
            c.depth.map(|d| d.to_string()).unwrap_or_default(),
            c.candidates.as_ref().map_or(0, Vec::len),
            chain
        ));
    }
    out
}

fn cmd_stabilizers(
    config: &RunConfig,
    census: &Census,
    max_len: u32,
    d_max: u32,
    replay_path: Option<&Path>,
) -> anyhow::Result<u8> {
    let g = config.global;
    if let Some(path) = replay_path {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let report: SweepReport = serde_json::from_value(value.get("report").cloned().unwrap_or(value))?;
        let bad = replay(&report, census)?;
        let doc = serde_json::json!({
            "words": report.certificates.len(),
            "mismatched": bad.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        });
        emit(g, &json_report(config, &doc)?)?;
        return Ok(if bad.is_empty() && report.passed() { 0 } else { 1 });
    }
    let report = sweep(census, max_len, d_max, g.workers)?;
    let text = match g.format {
        Format::Csv => header(config)? + &sweep_csv(&report),
        Format::Json => json_report(config, &report)?,
    };
    emit(g, &text)?;
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_entropy(config: &RunConfig, census: &Census, params: EntropyParams) -> anyhow::Result<u8> {
    let report = EntropyReport::compute(census, params)?;
    let text = match config.global.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            header(config)? + &String::from_utf8(buf)?
        }
        Format::Json => json_report(config, &report)?,
    };
    emit(config.global, &text)?;
    let ok = report.sandwich.iter().all(|s| s.brackets_log2());
    Ok(if ok { 0 } else { 1 })
}
