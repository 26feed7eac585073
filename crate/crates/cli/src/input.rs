//! Problem and solver settings from flags and an optional TOML file.
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cnopt::problems::{default_config, LsData, ProblemName, ProblemSpec};
use cnopt::solver::{AnchorMode, SolverConfig};
use serde::Deserialize;

/// A vector given as one number (fill), an inline list, or a file path.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum VecSource {
    Scalar(f64),
    List(Vec<f64>),
    Path(PathBuf),
}

impl VecSource {
    /// Flag syntax: a number, a comma list, or a path to a CSV file.
    pub fn parse_flag(s: &str) -> Result<Self> {
        if let Ok(v) = s.trim().parse::<f64>() {
            return Ok(Self::Scalar(v));
        }
        if Path::new(s).is_file() {
            return Ok(Self::Path(s.into()));
        }
        parse_list(s).map(Self::List).with_context(|| format!("{s:?} is neither a number, a list nor a file"))
    }

    pub fn resolve(&self, base: Option<&Path>) -> Result<Vec<f64>> {
        match self {
            Self::Scalar(v) => Ok(vec![*v]),
            Self::List(v) => Ok(v.clone()),
            Self::Path(p) => {
                let p = rebase(p, base);
                let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                parse_list(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }
}

/// Numbers separated by commas, whitespace or newlines.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| anyhow!("bad number {t:?}: {e}")))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("empty list");
    }
    Ok(v)
}

fn rebase(p: &Path, base: Option<&Path>) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

/// Reads `A | b` rows: every line holds a row of `A` followed by its `b`.
pub fn read_ls_data(path: &Path) -> Result<LsData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{} line {}", path.display(), i + 1))?;
        let row: Vec<f64> = rec
            .iter()
            .map(|t| t.parse::<f64>().with_context(|| format!("{} line {}: bad number {t:?}", path.display(), i + 1)))
            .collect::<Result<_>>()?;
        if row.len() < 2 {
            bail!("{} line {}: need at least one coefficient and b", path.display(), i + 1);
        }
        if let Some(first) = a.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() - 1 {
                bail!("{} line {}: expected {} columns, got {}", path.display(), i + 1, first.len() + 1, row.len());
            }
        }
        b.push(row[row.len() - 1]);
        a.push(row[..row.len() - 1].to_vec());
    }
    if a.is_empty() {
        bail!("{} holds no rows", path.display());
    }
    Ok(LsData { a, b })
}

/// Contents of a `--config` file. Keys mirror the command-line flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub n: Option<usize>,
    pub e: Option<usize>,
    pub lambda: Option<f64>,
    pub data: Option<PathBuf>,
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    pub sigma1: Option<f64>,
    #[serde(rename = "bigN", alias = "big_n")]
    pub big_n: Option<f64>,
    pub w0: Option<VecSource>,
    pub alpha0: Option<VecSource>,
    pub max_outer: Option<usize>,
    pub anchor: Option<AnchorMode>,
    pub x: Option<VecSource>,
    pub y: Option<VecSource>,
    pub method: Option<String>,
    pub samples: Option<usize>,
    #[serde(skip)]
    pub dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map(Self::load).transpose().map(Option::unwrap_or_default)
    }
}

/// Problem flags shared by `solve` and `check`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ProblemArgs {
    /// ex42, zero_norm_ls (alias ex9), ex43, ex44 or ex45.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Block width; defaults to one block for the chained and block problems.
    #[arg(long)]
    pub e: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// CSV with one row of A followed by b per line (zero-norm problem).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// TOML file mirroring the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn problem_spec(args: &ProblemArgs, file: &FileConfig) -> Result<ProblemSpec> {
    let name = args.problem.clone().or_else(|| file.problem.clone()).ok_or_else(|| anyhow!("--problem is required"))?;
    let name = ProblemName::parse(&name)?;
    let lambda = args.lambda.or(file.lambda);
    let data_path = args.data.clone().or_else(|| file.data.as_ref().map(|p| rebase(p, file.dir.as_deref())));
    let data = data_path.as_deref().map(read_ls_data).transpose()?;
    let n = args.n.or(file.n);
    let e = args.e.or(file.e);
    let n = match (name, n) {
        (ProblemName::Ex42, n) => n.unwrap_or(2),
        (ProblemName::ZeroNormLs, Some(n)) => n,
        (ProblemName::ZeroNormLs, None) => {
            data.as_ref().map(|d| d.a[0].len()).ok_or_else(|| anyhow!("--data is required"))?
        }
        (_, Some(n)) => n,
        (_, None) => bail!("--n is required for {}", name.as_str()),
    };
    let e = e.unwrap_or(match name {
        ProblemName::Ex42 | ProblemName::ZeroNormLs => 1,
        _ => n,
    });
    let spec = ProblemSpec { name, n, e, lambda, data };
    spec.validate()?;
    Ok(spec)
}

/// Solver flags of `solve`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub sigma1: Option<f64>,
    /// Penalty growth factor N.
    #[arg(long = "bigN")]
    pub big_n: Option<f64>,
    /// Starting point: a fill value, a comma list or a CSV file.
    #[arg(long, allow_negative_numbers = true)]
    pub w0: Option<String>,
    /// Starting multipliers: a fill value, a comma list or a CSV file.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha0: Option<String>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Which copy of a shared coordinate later blocks are anchored to.
    #[arg(long, value_parser = parse_anchor)]
    pub anchor: Option<AnchorMode>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_anchor(s: &str) -> Result<AnchorMode, String> {
    match s.replace('-', "_").as_str() {
        "current_sweep" | "current" => Ok(AnchorMode::CurrentSweep),
        "previous_sweep" | "previous" => Ok(AnchorMode::PreviousSweep),
        _ => Err(format!("unknown anchor mode {s:?}; expected current_sweep or previous_sweep")),
    }
}

pub fn solver_config(spec: &ProblemSpec, args: &SolverArgs, file: &FileConfig) -> Result<SolverConfig> {
    let mut cfg = default_config(spec)?;
    let base = file.dir.as_deref();
    if let Some(v) = args.eps.or(file.eps) {
        cfg.eps = v;
    }
    if let Some(v) = args.sigma1.or(file.sigma1) {
        cfg.sigma1 = v;
    }
    if let Some(v) = args.big_n.or(file.big_n) {
        cfg.big_n = v;
    }
    if let Some(v) = args.max_outer.or(file.max_outer) {
        cfg.max_outer = v;
    }
    if let Some(v) = args.anchor.or(file.anchor) {
        cfg.anchor = v;
    }
    if let Some(v) = args.seed.or(file.seed) {
        cfg.seed = v;
    }
    match (&args.w0, &file.w0) {
        (Some(s), _) => cfg.w0 = VecSource::parse_flag(s)?.resolve(None).context("--w0")?,
        (None, Some(src)) => cfg.w0 = src.resolve(base).context("w0")?,
        _ => {}
    }
    match (&args.alpha0, &file.alpha0) {
        (Some(s), _) => cfg.alpha0 = VecSource::parse_flag(s)?.resolve(None).context("--alpha0")?,
        (None, Some(src)) => cfg.alpha0 = src.resolve(base).context("alpha0")?,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_fills() {
        assert_eq!(parse_list("1, 2\n3 4").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert!(parse_list(" ,").is_err());
        assert_eq!(VecSource::parse_flag("2.5").unwrap(), VecSource::Scalar(2.5));
        assert_eq!(VecSource::parse_flag("0,-1").unwrap(), VecSource::List(vec![0.0, -1.0]));
        assert!(VecSource::parse_flag("nope").is_err());
    }

    #[test]
    fn defaults_per_problem() {
        let file = FileConfig::default();
        let args = ProblemArgs { problem: Some("ex42".into()), lambda: Some(2.0), ..Default::default() };
        assert_eq!(problem_spec(&args, &file).unwrap(), ProblemSpec::ex42(2.0));
        let args = ProblemArgs { problem: Some("ex45".into()), n: Some(10), ..Default::default() };
        assert_eq!(problem_spec(&args, &file).unwrap().e, 10);
        let args = ProblemArgs { problem: Some("ex44".into()), ..Default::default() };
        assert!(problem_spec(&args, &file).is_err());
    }

    #[test]
    fn file_values_yield_to_flags() {
        let file: FileConfig =
            toml::from_str("problem = \"ex43\"\nn = 10\ne = 5\nlambda = 3.0\nbigN = 20.0\nw0 = 0.5").unwrap();
        let spec = problem_spec(&ProblemArgs { lambda: Some(7.0), ..Default::default() }, &file).unwrap();
        assert_eq!(spec, ProblemSpec::ex43(10, 5, 7.0));
        let cfg = solver_config(&spec, &SolverArgs { sigma1: Some(9.0), ..Default::default() }, &file).unwrap();
        assert_eq!((cfg.sigma1, cfg.big_n, cfg.w0.clone()), (9.0, 20.0, vec![0.5]));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
