use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "holoform", version, about = "Real forms of holomorphic Hamiltonian systems on the complex 2-sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the invariant suite and write verify_report.json
    Verify(VerifyArgs),
    /// Integrate a holomorphic Hamiltonian flow on CS²×CS²
    Flow(FlowArgs),
    /// Rank-0 points, boundary and image of the energy-momentum map
    Bifurcation(BifurcationArgs),
    /// Emit the verified involution catalogue
    Table(TableArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Default)]
pub struct Common {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Named tolerance override, written --tol.<name> <value>
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Check groups to run (comma-separated or repeated)
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: Common,
    /// rest-top, rest-bottom, s2xs2, conj-diagonal, generic, or six complex
    /// coordinates x1,y1,z1,x2,y2,z2
    #[arg(long)]
    pub start: Option<String>,
    /// H, J, iH or iJ
    #[arg(long)]
    pub hamiltonian: Option<String>,
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BifurcationArgs {
    #[command(flatten)]
    pub common: Common,
    /// tstar-s2 or s2xs2
    #[arg(long)]
    pub form: Option<String>,
    /// Multistart budget for the rank-0 search
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[command(flatten)]
    pub common: Common,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let v: f64 = value.trim().parse().map_err(|_| format!("tolerance {name:?}: {value:?} is not a number"))?;
    if !(v >= 0.0) {
        return Err(format!("tolerance {name:?} must be non-negative"));
    }
    Ok((name.trim().to_string(), v))
}

/// clap has no dynamic flag names, so `--tol.<name> v` and `--tol.<name>=v`
/// become `--tol <name>=v` before parsing.
pub fn rewrite_tolerance_flags(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.into_iter().peekable();
    while let Some(a) = it.next() {
        if let Some(rest) = a.strip_prefix("--tol.") {
            out.push("--tol".to_string());
            if rest.contains('=') {
                out.push(rest.to_string());
            } else {
                let v = it.next().unwrap_or_default();
                out.push(format!("{rest}={v}"));
            }
        } else {
            out.push(a);
        }
    }
    out
}

/// Settings read from a config file, keyed as on the command line without
/// the leading dashes (`seed`, `t-final`, `tol.commutation`, ...).
#[derive(Debug, Default)]
pub struct FileConfig(pub BTreeMap<String, String>);

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("{}:{}: expected key=value", path.display(), n + 1))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| format!("config key {key}: cannot parse {v:?}")),
        }
    }

    pub fn tolerances(&self) -> Result<Vec<(String, f64)>, String> {
        self.0
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("tol.").map(|name| parse_tol(&format!("{name}={v}"))))
            .collect()
    }
}

/// Effective common settings after merging flags, config file and defaults.
#[derive(Debug)]
pub struct Resolved {
    pub seed: u64,
    pub samples: Option<usize>,
    pub out: PathBuf,
    pub format: Format,
    pub tolerances: BTreeMap<String, f64>,
    pub file: FileConfig,
}

pub fn resolve(c: &Common) -> Result<Resolved, String> {
    let file = match &c.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let format = match c.format {
        Some(f) => f,
        None => match file.0.get("format").map(String::as_str) {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(format!("config key format: {other:?} is not json or csv")),
        },
    };
    let mut tolerances: BTreeMap<String, f64> = file.tolerances()?.into_iter().collect();
    tolerances.extend(c.tol.iter().cloned());
    Ok(Resolved {
        seed: c.seed.or(file.get("seed")?).unwrap_or(0),
        samples: c.samples.or(file.get("samples")?),
        out: c.out.clone().or(file.get("out")?).unwrap_or_else(|| PathBuf::from("out")),
        format,
        tolerances,
        file,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tolerance_flags_are_rewritten() {
        let a = rewrite_tolerance_flags(strings(&["holoform", "verify", "--tol.commutation", "1e-20", "--tol.basis=1e-3", "--seed", "4"]));
        assert_eq!(a, strings(&["holoform", "verify", "--tol", "commutation=1e-20", "--tol", "basis=1e-3", "--seed", "4"]));
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = std::env::temp_dir().join(format!("holoform-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "# comment\nseed = 11\nsamples=5\ntol.poisson = 1e-3\nformat=json\n").unwrap();
        let c = Common { seed: Some(3), config: Some(path), tol: vec![("poisson".into(), 1e-4)], ..Default::default() };
        let r = resolve(&c).unwrap();
        assert_eq!(r.seed, 3);
        assert_eq!(r.samples, Some(5));
        assert_eq!(r.format, Format::Json);
        assert_eq!(r.tolerances["poisson"], 1e-4);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn malformed_tolerances_are_rejected() {
        assert!(parse_tol("x").is_err());
        assert!(parse_tol("x=abc").is_err());
        assert!(parse_tol("x=-1").is_err());
        assert_eq!(parse_tol("x=1e-3").unwrap(), ("x".into(), 1e-3));
    }
}
