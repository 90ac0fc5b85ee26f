//! Command-line driver.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::catalogue::{self, ManifoldSpec};
use crate::error::{Error, Result};
use crate::oracle;
use crate::report::{self, Format, Report};
use crate::riemann;
use crate::theorems::{self, Tolerances, THEOREMS};

pub const THREADS_ENV: &str = "TWISTOR_LAB_THREADS";
const PREDICATE_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "twistor-lab", version, about = "Numerical checks of Hermitian geometry on twistor spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalogue manifolds and their curvature flags
    List {
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Singer-Thorpe decomposition of the base curvature at a point
    Decompose {
        #[arg(long)]
        manifold: String,
        /// Comma separated coordinates
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Run one theorem over the configured grid
    Verify {
        id: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run every theorem over the configured grid
    Suite {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare jet and finite-difference curvature
    Oracle {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub manifold: Option<String>,
    /// Comma separated values of t
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Comma separated values of n
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u8>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance override `<theorem>[.<check>]=<value>`, repeatable
    #[arg(long = "tol")]
    pub tol: Vec<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also run the finite-difference oracle (suite only)
    #[arg(long)]
    pub oracle: bool,
    /// JSON file with RunConfig fields; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Settings shared by `verify`, `suite` and `oracle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: String,
    /// `None` selects the default sweep for the manifold.
    pub t: Option<Vec<f64>>,
    pub n: Vec<u8>,
    pub samples: usize,
    pub seed: u64,
    pub tol: BTreeMap<String, f64>,
    pub format: Format,
    pub oracle: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            manifold: "s4".into(),
            t: None,
            n: vec![1, 2],
            samples: 20,
            seed: 0,
            tol: BTreeMap::new(),
            format: Format::Json,
            oracle: false,
        }
    }
}

/// Configuration echoed in reports, with the `t` grid resolved.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<String>,
    pub manifold: String,
    pub t: Vec<f64>,
    pub n: Vec<u8>,
    pub samples: usize,
    pub seed: u64,
    pub tol: BTreeMap<String, f64>,
    pub oracle: bool,
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// File values (if any) overridden by flags.
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let mut c = match &args.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(m) = &args.manifold {
            c.manifold = m.clone();
        }
        if let Some(t) = &args.t {
            c.t = Some(t.clone());
        }
        if let Some(n) = &args.n {
            c.n = n.clone();
        }
        if let Some(s) = args.samples {
            c.samples = s;
        }
        if let Some(s) = args.seed {
            c.seed = s;
        }
        for item in &args.tol {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--tol expects <id>=<value>, got `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad tolerance value in `{item}`")))?;
            c.tol.insert(key.trim().to_string(), value);
        }
        if let Some(f) = args.format {
            c.format = f;
        }
        c.oracle |= args.oracle;
        Ok(c)
    }

    /// Manifolds named by the config; `all` expands to the catalogue.
    pub fn manifolds(&self) -> Result<Vec<ManifoldSpec>> {
        if self.manifold == "all" {
            return Ok(catalogue::entries());
        }
        self.manifold.split(',').map(|m| catalogue::by_name(m.trim())).collect()
    }

    pub fn tolerances(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        for (k, v) in &self.tol {
            tol.set(k, *v)?;
        }
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if let Some(ts) = &self.t {
            if ts.is_empty() {
                return Err(Error::Config("empty t list".into()));
            }
            if let Some(t) = ts.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
                return Err(Error::Config(format!("t = {t} must be positive")));
            }
        }
        if self.n.is_empty() || self.n.iter().any(|n| *n != 1 && *n != 2) {
            return Err(Error::Config(format!("n must be a list of 1 and 2, got {:?}", self.n)));
        }
        self.manifolds()?;
        self.tolerances()?;
        Ok(())
    }

    fn ts(&self, spec: &ManifoldSpec) -> Vec<f64> {
        self.t.clone().unwrap_or_else(|| theorems::t_sweep(spec))
    }

    fn resolved(&self, command: &str, theorem: Option<&str>, specs: &[ManifoldSpec]) -> ResolvedConfig {
        let mut t: Vec<f64> = Vec::new();
        for s in specs {
            for v in self.ts(s) {
                if !t.contains(&v) {
                    t.push(v);
                }
            }
        }
        ResolvedConfig {
            command: command.into(),
            theorem: theorem.map(str::to_string),
            manifold: self.manifold.clone(),
            t,
            n: self.n.clone(),
            samples: self.samples,
            seed: self.seed,
            tol: self.tol.clone(),
            oracle: self.oracle,
        }
    }
}

/// Outcome of a command: text to print and the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub output: String,
    pub code: i32,
}

impl Outcome {
    fn from_report<C: Serialize>(report: &Report<C>, format: Format) -> Result<Self> {
        Ok(Self {
            output: report.render(format)?,
            code: if report.all_passed() { 0 } else { 1 },
        })
    }
}

pub fn cmd_list(format: Format) -> Result<Outcome> {
    let specs = catalogue::entries();
    let output = match format {
        Format::Json => {
            let rows: Vec<_> = specs
                .iter()
                .map(|s| serde_json::json!({"name": s.name(), "truth": s.truth, "notes": s.notes}))
                .collect();
            report::to_json(&rows)?
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "kappa", "scalar", "einstein", "selfdual", "antiselfdual", "notes"])
                .expect("in-memory csv");
            for s in &specs {
                let t = s.truth;
                let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
                w.write_record([
                    s.name().to_string(),
                    opt(t.kappa),
                    opt(t.scalar),
                    t.einstein.to_string(),
                    t.selfdual.to_string(),
                    t.antiselfdual.to_string(),
                    s.notes.to_string(),
                ])
                .expect("in-memory csv");
            }
            String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
        }
        Format::Text => {
            let mut out = String::new();
            for s in &specs {
                let t = s.truth;
                out.push_str(&format!(
                    "{:<10} kappa={:<5} s={:<5} einstein={:<5} selfdual={:<5} antiselfdual={:<5} {}\n",
                    s.name(),
                    t.kappa.map_or("-".into(), |v| v.to_string()),
                    t.scalar.map_or("-".into(), |v| v.to_string()),
                    t.einstein,
                    t.selfdual,
                    t.antiselfdual,
                    s.notes
                ));
            }
            out
        }
    };
    Ok(Outcome { output, code: 0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub manifold: String,
    pub point: Vec<f64>,
    pub scalar: f64,
    pub b: [[f64; 3]; 3],
    pub w_plus: [[f64; 3]; 3],
    pub w_minus: [[f64; 3]; 3],
    pub b_norm: f64,
    pub w_plus_norm: f64,
    pub w_minus_norm: f64,
    pub einstein: bool,
    pub selfdual: bool,
    pub antiselfdual: bool,
}

pub fn decompose(manifold: &str, point: &[f64]) -> Result<Decomposition> {
    let spec = catalogue::by_name(manifold)?;
    if point.len() != 4 {
        return Err(Error::InvalidArgument(format!("a point needs 4 coordinates, got {}", point.len())));
    }
    let cp = riemann::curvature(spec.metric.as_ref(), point)?;
    let st = riemann::singer_thorpe(&cp)?;
    Ok(Decomposition {
        manifold: manifold.to_string(),
        point: point.to_vec(),
        scalar: st.scalar,
        b: st.b,
        w_plus: st.w_plus,
        w_minus: st.w_minus,
        b_norm: st.b_norm(),
        w_plus_norm: st.w_plus_norm(),
        w_minus_norm: st.w_minus_norm(),
        einstein: st.is_einstein(PREDICATE_TOL),
        selfdual: st.is_selfdual(PREDICATE_TOL),
        antiselfdual: st.is_antiselfdual(PREDICATE_TOL),
    })
}

pub fn cmd_decompose(manifold: &str, point: &[f64], format: Format) -> Result<Outcome> {
    let d = decompose(manifold, point)?;
    let output = match format {
        Format::Json => report::to_json(&d)?,
        Format::Csv => format!(
            "manifold,scalar,b_norm,w_plus_norm,w_minus_norm,einstein,selfdual,antiselfdual\n{},{},{},{},{},{},{},{}\n",
            d.manifold,
            report::round_sig(d.scalar),
            report::round_sig(d.b_norm),
            report::round_sig(d.w_plus_norm),
            report::round_sig(d.w_minus_norm),
            d.einstein,
            d.selfdual,
            d.antiselfdual
        ),
        Format::Text => format!(
            "{} at {:?}\n  s    = {:.9}\n  |B|  = {:.3e}\n  |W+| = {:.3e}\n  |W-| = {:.3e}\n  einstein={} selfdual={} antiselfdual={}\n",
            d.manifold, d.point, d.scalar, d.b_norm, d.w_plus_norm, d.w_minus_norm, d.einstein, d.selfdual, d.antiselfdual
        ),
    };
    Ok(Outcome { output, code: 0 })
}

fn run_grid(config: &RunConfig, ids: &[&str]) -> Result<Vec<theorems::DefectReport>> {
    let tol = config.tolerances()?;
    let mut out = Vec::new();
    for spec in config.manifolds()? {
        let ts = config.ts(&spec);
        out.extend(theorems::suite(&spec, ids, &ts, &config.n, config.samples, config.seed, &tol)?);
    }
    Ok(out)
}

fn run_oracle(config: &RunConfig) -> Result<Vec<oracle::OracleReport>> {
    let mut out = Vec::new();
    for spec in config.manifolds()? {
        for t in config.ts(&spec) {
            out.push(oracle::compare(&spec, t, config.samples, config.seed, oracle::TOLERANCE)?);
        }
    }
    Ok(out)
}

pub fn cmd_verify(id: &str, config: &RunConfig) -> Result<Outcome> {
    if !THEOREMS.contains(&id) {
        return Err(Error::UnknownTheorem(id.to_string()));
    }
    config.validate()?;
    let specs = config.manifolds()?;
    if let Some(spec) = specs.iter().find(|s| !theorems::applies(id, s)) {
        return Err(Error::Hypothesis(format!("{id} needs an Einstein self-dual base, {} is not", spec.name())));
    }
    let results = run_grid(config, &[id])?;
    let report = Report::new(config.resolved("verify", Some(id), &specs), results, Vec::new());
    Outcome::from_report(&report, config.format)
}

pub fn cmd_suite(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    let specs = config.manifolds()?;
    let results = run_grid(config, &THEOREMS)?;
    let oracle = if config.oracle { run_oracle(config)? } else { Vec::new() };
    let report = Report::new(config.resolved("suite", None, &specs), results, oracle);
    Outcome::from_report(&report, config.format)
}

pub fn cmd_oracle(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    let specs = config.manifolds()?;
    let report = Report::new(config.resolved("oracle", None, &specs), Vec::new(), run_oracle(config)?);
    Outcome::from_report(&report, config.format)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
        }
        // a second initialization (e.g. in tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(Outcome, Option<PathBuf>)> {
    configure_threads()?;
    Ok(match &cli.command {
        Command::List { format } => (cmd_list(format.unwrap_or(Format::Text))?, None),
        Command::Decompose { manifold, point, format } => (cmd_decompose(manifold, point, format.unwrap_or(Format::Text))?, None),
        Command::Verify { id, run } => (cmd_verify(id, &RunConfig::from_args(run)?)?, run.out.clone()),
        Command::Suite { run } => (cmd_suite(&RunConfig::from_args(run)?)?, run.out.clone()),
        Command::Oracle { run } => (cmd_oracle(&RunConfig::from_args(run)?)?, run.out.clone()),
    })
}

/// Run the CLI on parsed arguments and return the exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok((outcome, out)) => {
            let written = match out {
                Some(path) => std::fs::write(&path, &outcome.output),
                None => std::io::stdout().lock().write_all(outcome.output.as_bytes()),
            };
            match written {
                Ok(()) => outcome.code,
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("twistor-lab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let cli = parse(&["suite", "--manifold", "h4", "--t", "1,2", "--n", "2", "--samples", "3", "--tol", "prop1=1e-5"]);
        let Command::Suite { run } = &cli.command else { panic!() };
        let c = RunConfig::from_args(run).unwrap();
        assert_eq!(c.manifold, "h4");
        assert_eq!(c.t, Some(vec![1.0, 2.0]));
        assert_eq!(c.n, vec![2]);
        assert_eq!(c.samples, 3);
        assert_eq!(c.tol["prop1"], 1e-5);
        c.validate().unwrap();
    }

    #[test]
    fn config_file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"manifold": "cp2", "samples": 4, "seed": 9}"#).unwrap();
        let cli = parse(&["verify", "prop2", "--config", path.to_str().unwrap(), "--seed", "11"]);
        let Command::Verify { run, .. } = &cli.command else { panic!() };
        let c = RunConfig::from_args(run).unwrap();
        assert_eq!((c.manifold.as_str(), c.samples, c.seed), ("cp2", 4, 11));

        std::fs::write(&path, r#"{"manifold": "cp2", "bogus": 1}"#).unwrap();
        assert!(matches!(RunConfig::from_file(&path), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            RunConfig { samples: 0, ..Default::default() },
            RunConfig { t: Some(vec![1.0, -0.5]), ..Default::default() },
            RunConfig { n: vec![3], ..Default::default() },
            RunConfig { manifold: "torus".into(), ..Default::default() },
            RunConfig {
                tol: [("prop7".to_string(), 1e-3)].into(),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn flat_decomposition_is_zero() {
        let d = decompose("flat", &[0.0; 4]).unwrap();
        assert_eq!((d.scalar, d.b_norm, d.w_plus_norm, d.w_minus_norm), (0.0, 0.0, 0.0, 0.0));
        assert!(decompose("h4", &[3.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn verify_exit_codes() {
        let c = RunConfig {
            manifold: "s4".into(),
            t: Some(vec![1.0]),
            n: vec![2],
            samples: 2,
            seed: 7,
            ..Default::default()
        };
        assert_eq!(cmd_verify("prop1", &c).unwrap().code, 0);
        let tight = RunConfig {
            tol: [("prop1".to_string(), 1e-300)].into(),
            ..c.clone()
        };
        assert_eq!(cmd_verify("prop1", &tight).unwrap().code, 1);
        assert!(cmd_verify("prop9", &c).is_err());
        let product = RunConfig { manifold: "s2xs2".into(), ..c };
        assert!(matches!(cmd_verify("nijenhuis_chern", &product), Err(Error::Hypothesis(_))));
    }
}
