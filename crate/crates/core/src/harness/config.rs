//! Key-value experiment configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Unknown keys are
//! rejected so that typos surface as errors instead of silent defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exact::DEFAULT_COMBINATION_CAP;
use crate::tracker::Normalization;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Tracker,
    Exact,
    Mixture,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tracker => "tracker",
            Algorithm::Exact => "exact",
            Algorithm::Mixture => "mixture",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Gaussian { m: usize, n: usize, r: usize },
    Cumulative { m: usize },
    Mixture { m: usize, per_subspace: usize, h: usize, tau: usize },
    LowerBound { m: usize, mu0: f64, r: usize, b_values: Vec<f64> },
    /// Observed matrix from disk, optionally with the clean matrix.
    File { observed: PathBuf, clean: Option<PathBuf>, r: usize },
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Gaussian { .. } => "gaussian",
            GeneratorSpec::Cumulative { .. } => "cumulative",
            GeneratorSpec::Mixture { .. } => "mixture",
            GeneratorSpec::LowerBound { .. } => "lower_bound",
            GeneratorSpec::File { .. } => "file",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseCount {
    Fixed(usize),
    /// `d − r − 1`, floored at zero.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseConfig {
    None,
    Bounded { eps: f64 },
    Sparse { s0: NoiseCount },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleSpec {
    Fixed(usize),
    /// `⌊ratio·m⌋`.
    Ratio(f64),
    /// `⌈8·μ₀·r·ln(r/δ)⌉` with `μ₀` measured on each instance, capped at `m`.
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub generator: GeneratorSpec,
    pub noise: NoiseConfig,
    pub d: SampleSpec,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub eta_constant: f64,
    pub zero_tol: f64,
    /// Sparsity level for the mixture algorithm (defaults to the generator's).
    pub tau: Option<usize>,
    pub with_replacement: bool,
    pub delta: f64,
    pub normalization: Normalization,
    pub combination_cap: u128,
    pub rank_ratios: Vec<f64>,
    pub sample_ratios: Vec<f64>,
    pub d_values: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Exact,
            generator: GeneratorSpec::Gaussian { m: 50, n: 500, r: 5 },
            noise: NoiseConfig::None,
            d: SampleSpec::Auto,
            trials: 1,
            seed: 0,
            out: PathBuf::from("out.csv"),
            eta_constant: 1.0,
            zero_tol: 1e-8,
            tau: None,
            with_replacement: true,
            delta: 0.01,
            normalization: Normalization::Strict,
            combination_cap: DEFAULT_COMBINATION_CAP,
            rank_ratios: Vec::new(),
            sample_ratios: Vec::new(),
            d_values: Vec::new(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(format!("{key}: cannot parse '{value}'")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

/// `a..b` (inclusive) or a comma list.
fn usize_range(key: &str, value: &str) -> Result<Vec<usize>> {
    match value.split_once("..") {
        Some((a, b)) => {
            let (a, b): (usize, usize) = (num(key, a.trim())?, num(key, b.trim())?);
            if a > b {
                return Err(invalid(format!("{key}: empty range {value}")));
            }
            Ok((a..=b).collect())
        }
        None => list(key, value),
    }
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(format!("{key}: expected true or false, got '{value}'"))),
    }
}

const KEYS: &[&str] = &[
    "algorithm",
    "generator",
    "m",
    "n",
    "r",
    "per_subspace",
    "h",
    "tau",
    "mu0",
    "b_values",
    "observed_file",
    "clean_file",
    "noise",
    "eps",
    "s0",
    "d",
    "d_ratio",
    "trials",
    "seed",
    "out",
    "eta_constant",
    "zero_tol",
    "with_replacement",
    "delta",
    "normalization",
    "combination_cap",
    "rank_ratios",
    "sample_ratios",
    "d_values",
];

impl RunConfig {
    /// Parses the key-value format. Relative file paths are resolved
    /// against `base_dir` when given.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected 'key = value'", idx + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(invalid(format!("line {}: unknown key '{k}'", idx + 1)));
            }
            if pairs.iter().any(|(seen, _)| seen == k) {
                return Err(invalid(format!("line {}: duplicate key '{k}'", idx + 1)));
            }
            pairs.push((k.to_string(), v.to_string()));
        }
        let get = |k: &str| pairs.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let req = |k: &str| get(k).ok_or_else(|| invalid(format!("missing key '{k}'")));
        let resolve = |p: &str| match base_dir {
            Some(dir) if Path::new(p).is_relative() => dir.join(p),
            _ => PathBuf::from(p),
        };

        let mut cfg = RunConfig::default();
        if let Some(a) = get("algorithm") {
            cfg.algorithm = match a {
                "tracker" => Algorithm::Tracker,
                "exact" => Algorithm::Exact,
                "mixture" => Algorithm::Mixture,
                _ => return Err(invalid(format!("unknown algorithm '{a}'"))),
            };
        }
        let generator = get("generator").unwrap_or("gaussian");
        cfg.generator = match generator {
            "gaussian" => GeneratorSpec::Gaussian {
                m: num("m", req("m")?)?,
                n: num("n", req("n")?)?,
                r: num("r", req("r")?)?,
            },
            "cumulative" => GeneratorSpec::Cumulative {
                m: num("m", req("m")?)?,
            },
            "mixture" => GeneratorSpec::Mixture {
                m: num("m", req("m")?)?,
                per_subspace: num("per_subspace", req("per_subspace")?)?,
                h: num("h", req("h")?)?,
                tau: num("tau", req("tau")?)?,
            },
            "lower_bound" => GeneratorSpec::LowerBound {
                m: num("m", req("m")?)?,
                mu0: num("mu0", req("mu0")?)?,
                r: num("r", req("r")?)?,
                b_values: list("b_values", req("b_values")?)?,
            },
            "file" => GeneratorSpec::File {
                observed: resolve(req("observed_file")?),
                clean: get("clean_file").map(resolve),
                r: num("r", req("r")?)?,
            },
            other => return Err(invalid(format!("unknown generator '{other}'"))),
        };
        cfg.noise = match get("noise").unwrap_or("none") {
            "none" => NoiseConfig::None,
            "bounded" => NoiseConfig::Bounded {
                eps: num("eps", req("eps")?)?,
            },
            "sparse" => NoiseConfig::Sparse {
                s0: match req("s0")? {
                    "auto" => NoiseCount::Auto,
                    v => NoiseCount::Fixed(num("s0", v)?),
                },
            },
            other => return Err(invalid(format!("unknown noise '{other}'"))),
        };
        cfg.d = match (get("d"), get("d_ratio")) {
            (Some(_), Some(_)) => return Err(invalid("set only one of 'd' and 'd_ratio'")),
            (Some("auto") | None, None) => SampleSpec::Auto,
            (Some(v), None) => SampleSpec::Fixed(num("d", v)?),
            (None, Some(v)) => SampleSpec::Ratio(num("d_ratio", v)?),
        };
        if let Some(v) = get("trials") {
            cfg.trials = num("trials", v)?;
        }
        if let Some(v) = get("seed") {
            cfg.seed = num("seed", v)?;
        }
        if let Some(v) = get("out") {
            cfg.out = resolve(v);
        }
        if let Some(v) = get("eta_constant") {
            cfg.eta_constant = num("eta_constant", v)?;
        }
        if let Some(v) = get("zero_tol") {
            cfg.zero_tol = num("zero_tol", v)?;
        }
        if generator != "mixture" {
            if let Some(v) = get("tau") {
                cfg.tau = Some(num("tau", v)?);
            }
        }
        if let Some(v) = get("with_replacement") {
            cfg.with_replacement = boolean("with_replacement", v)?;
        }
        if let Some(v) = get("delta") {
            cfg.delta = num("delta", v)?;
        }
        if let Some(v) = get("normalization") {
            cfg.normalization = match v {
                "strict" => Normalization::Strict,
                "lenient" => Normalization::Lenient,
                _ => return Err(invalid(format!("unknown normalization '{v}'"))),
            };
        }
        if let Some(v) = get("combination_cap") {
            cfg.combination_cap = num("combination_cap", v)?;
        }
        if let Some(v) = get("rank_ratios") {
            cfg.rank_ratios = list("rank_ratios", v)?;
        }
        if let Some(v) = get("sample_ratios") {
            cfg.sample_ratios = list("sample_ratios", v)?;
        }
        if let Some(v) = get("d_values") {
            cfg.d_values = usize_range("d_values", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let SampleSpec::Ratio(x) = self.d {
            if !(x > 0.0 && x <= 1.0) {
                return Err(invalid(format!("d_ratio must lie in (0, 1], got {x}")));
            }
        }
        for &x in self.rank_ratios.iter().chain(&self.sample_ratios) {
            if !(x > 0.0 && x <= 1.0) {
                return Err(invalid(format!("grid ratios must lie in (0, 1], got {x}")));
            }
        }
        if let NoiseConfig::Bounded { eps } = self.noise {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(invalid(format!("eps must be non-negative, got {eps}")));
            }
        }
        if self.algorithm == Algorithm::Mixture
            && self.tau.is_none()
            && !matches!(self.generator, GeneratorSpec::Mixture { .. })
        {
            return Err(invalid("the mixture algorithm needs 'tau'"));
        }
        Ok(())
    }

    /// Sparsity level used by the mixture algorithm.
    pub fn effective_tau(&self) -> Option<usize> {
        match (&self.generator, self.tau) {
            (_, Some(t)) => Some(t),
            (GeneratorSpec::Mixture { tau, .. }, None) => Some(*tau),
            _ => None,
        }
    }

    /// Canonical `key = value` lines describing this configuration.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut e: Vec<(&str, String)> = vec![("algorithm", self.algorithm.name().into())];
        e.push(("generator", self.generator.name().into()));
        match &self.generator {
            GeneratorSpec::Gaussian { m, n, r } => {
                e.extend([("m", m.to_string()), ("n", n.to_string()), ("r", r.to_string())]);
            }
            GeneratorSpec::Cumulative { m } => e.push(("m", m.to_string())),
            GeneratorSpec::Mixture { m, per_subspace, h, tau } => e.extend([
                ("m", m.to_string()),
                ("per_subspace", per_subspace.to_string()),
                ("h", h.to_string()),
                ("tau", tau.to_string()),
            ]),
            GeneratorSpec::LowerBound { m, mu0, r, b_values } => e.extend([
                ("m", m.to_string()),
                ("mu0", mu0.to_string()),
                ("r", r.to_string()),
                ("b_values", join(b_values)),
            ]),
            GeneratorSpec::File { observed, clean, r } => {
                e.push(("observed_file", observed.display().to_string()));
                if let Some(c) = clean {
                    e.push(("clean_file", c.display().to_string()));
                }
                e.push(("r", r.to_string()));
            }
        }
        match self.noise {
            NoiseConfig::None => e.push(("noise", "none".into())),
            NoiseConfig::Bounded { eps } => e.extend([("noise", "bounded".into()), ("eps", eps.to_string())]),
            NoiseConfig::Sparse { s0 } => e.extend([
                ("noise", "sparse".into()),
                (
                    "s0",
                    match s0 {
                        NoiseCount::Auto => "auto".into(),
                        NoiseCount::Fixed(s) => s.to_string(),
                    },
                ),
            ]),
        }
        match self.d {
            SampleSpec::Auto => e.push(("d", "auto".into())),
            SampleSpec::Fixed(d) => e.push(("d", d.to_string())),
            SampleSpec::Ratio(x) => e.push(("d_ratio", x.to_string())),
        }
        e.extend([
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("eta_constant", self.eta_constant.to_string()),
            ("zero_tol", self.zero_tol.to_string()),
        ]);
        if let (Some(t), false) = (self.tau, matches!(self.generator, GeneratorSpec::Mixture { .. })) {
            e.push(("tau", t.to_string()));
        }
        e.extend([
            ("with_replacement", self.with_replacement.to_string()),
            ("delta", self.delta.to_string()),
            (
                "normalization",
                match self.normalization {
                    Normalization::Strict => "strict".into(),
                    Normalization::Lenient => "lenient".into(),
                },
            ),
            ("combination_cap", self.combination_cap.to_string()),
        ]);
        if !self.rank_ratios.is_empty() {
            e.push(("rank_ratios", join(&self.rank_ratios)));
        }
        if !self.sample_ratios.is_empty() {
            e.push(("sample_ratios", join(&self.sample_ratios)));
        }
        if !self.d_values.is_empty() {
            e.push(("d_values", join(&self.d_values)));
        }
        e.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
        # sparse-noise recovery
        algorithm = exact
        generator = gaussian
        m = 50
        n = 500
        r = 5
        noise = sparse
        s0 = auto
        d = auto   # measured per instance
        trials = 100
        seed = 7
    ";

    #[test]
    fn parses_sample() {
        let cfg = RunConfig::parse(SAMPLE, None).unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Exact);
        assert_eq!(cfg.generator, GeneratorSpec::Gaussian { m: 50, n: 500, r: 5 });
        assert_eq!(cfg.noise, NoiseConfig::Sparse { s0: NoiseCount::Auto });
        assert_eq!(cfg.d, SampleSpec::Auto);
        assert_eq!((cfg.trials, cfg.seed), (100, 7));
    }

    #[test]
    fn canonical_form_round_trips() {
        let cfg = RunConfig::parse(SAMPLE, None).unwrap();
        let again = RunConfig::parse(&cfg.to_string(), None).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("m = 5\nbogus = 1\n", None).is_err());
        assert!(RunConfig::parse("generator = cumulative\n", None).is_err());
        assert!(RunConfig::parse("generator = cumulative\nm = 100\ntrials = 0\n", None).is_err());
        assert!(RunConfig::parse("generator = cumulative\nm = 100\nm = 100\n", None).is_err());
        assert!(RunConfig::parse("generator = cumulative\nm = x\n", None).is_err());
        assert!(RunConfig::parse("generator = spiral\n", None).is_err());
    }

    #[test]
    fn ranges_and_lists() {
        let cfg = RunConfig::parse(
            "generator = mixture\nm = 100\nper_subspace = 20\nh = 5\ntau = 4\nalgorithm = mixture\nd_values = 3..6\nrank_ratios = 0.1, 0.2\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.d_values, vec![3, 4, 5, 6]);
        assert_eq!(cfg.rank_ratios, vec![0.1, 0.2]);
        assert_eq!(cfg.effective_tau(), Some(4));
    }
}
