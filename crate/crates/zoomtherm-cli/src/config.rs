//! Flat key-value run configuration.
//!
//! The config file is plain text, one `key = value` per line with dotted
//! keys and `#` comments. Values are numbers, booleans, names, interval
//! pairs `lo:hi` or lists separated by `,`/`;`. Command-line flags override
//! file values.

use std::collections::BTreeMap;
use zoomtherm::equilibrium::PotentialSpec;
use zoomtherm::interval::Interval;
use zoomtherm::map::{builtin_map, MapModel};
use zoomtherm::zooming::ZoomingContraction;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parsed raw key-value pairs plus typed accessors with defaults.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub raw: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut raw = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            raw.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(RunConfig { raw })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.raw.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| ConfigError(format!("{key}: expected a number, got `{s}`"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| ConfigError(format!("{key}: expected an integer, got `{s}`"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(s) => Err(ConfigError(format!("{key}: expected true/false, got `{s}`"))),
        }
    }

    /// Build the map from `map.name` and `map.params.*`.
    pub fn map(&self) -> Result<MapModel, ConfigError> {
        let name = self.get("map.name").unwrap_or("doubling");
        let mut params = BTreeMap::new();
        for (k, v) in &self.raw {
            if let Some(p) = k.strip_prefix("map.params.") {
                let val: f64 = v
                    .parse()
                    .map_err(|_| ConfigError(format!("{k}: expected a number, got `{v}`")))?;
                params.insert(p.to_string(), val);
            }
        }
        builtin_map(name, &params).map_err(|e| ConfigError(e.to_string()))
    }

    /// Zooming contraction from `contraction.sigma` / `contraction.delta`
    /// (delta defaults to the map's recommended radius).
    pub fn contraction(&self, map: &MapModel) -> Result<ZoomingContraction, ConfigError> {
        let sigma = self.f64_or("contraction.sigma", 0.5)?;
        let delta = match self.get("contraction.delta") {
            None | Some("auto") => map.default_delta,
            Some(s) => s
                .parse()
                .map_err(|_| ConfigError(format!("contraction.delta: bad value `{s}`")))?,
        };
        ZoomingContraction::exponential(sigma, delta).map_err(|e| ConfigError(e.to_string()))
    }

    /// Balls for the nested collection: `nest.balls = p:r, p:r, …`.
    pub fn balls(&self) -> Result<Vec<(f64, f64)>, ConfigError> {
        let Some(s) = self.get("nest.balls") else {
            return Err(ConfigError("nest.balls is required".into()));
        };
        parse_pair_list(s).map_err(|e| ConfigError(format!("nest.balls: {e}")))
    }

    /// Intervals of an explicit hole: `hole.intervals = lo:hi; lo:hi`.
    pub fn hole_intervals(&self) -> Result<Option<Vec<Interval>>, ConfigError> {
        match self.get("hole.intervals") {
            None => Ok(None),
            Some(s) => {
                let pairs =
                    parse_pair_list(s).map_err(|e| ConfigError(format!("hole.intervals: {e}")))?;
                Ok(Some(
                    pairs.into_iter().map(|(lo, hi)| Interval::open(lo, hi)).collect(),
                ))
            }
        }
    }

    /// Indices of nested-collection members forming the hole.
    pub fn hole_components(&self) -> Result<Option<Vec<usize>>, ConfigError> {
        match self.get("hole.components") {
            None => Ok(None),
            Some(s) => {
                let mut out = Vec::new();
                for part in s.split([',', ';']) {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    out.push(part.parse().map_err(|_| {
                        ConfigError(format!("hole.components: bad index `{part}`"))
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    /// Base interval for the induced scheme: `lo:hi`, or `nest:<i>` for the
    /// i-th shrunken member of the nested collection.
    pub fn base_spec(&self) -> Result<BaseSpec, ConfigError> {
        let s = self.get("scheme.base").unwrap_or("0:1");
        if let Some(idx) = s.strip_prefix("nest:") {
            let i = idx
                .parse()
                .map_err(|_| ConfigError(format!("scheme.base: bad nest index `{idx}`")))?;
            return Ok(BaseSpec::NestedMember(i));
        }
        let (lo, hi) =
            parse_pair(s).map_err(|e| ConfigError(format!("scheme.base: {e}")))?;
        Ok(BaseSpec::Explicit(Interval::open(lo, hi)))
    }

    /// The potential: `potential.kind = zero|geometric` with `potential.t`.
    /// Flag syntax `geometric:t=<v>` is also accepted.
    pub fn potential(&self) -> Result<PotentialSpec, ConfigError> {
        let kind = self.get("potential.kind").unwrap_or("zero");
        if kind == "zero" {
            return Ok(PotentialSpec::Zero);
        }
        if let Some(rest) = kind.strip_prefix("geometric") {
            let t = if let Some(tv) = rest.strip_prefix(":t=") {
                tv.parse()
                    .map_err(|_| ConfigError(format!("potential: bad t in `{kind}`")))?
            } else {
                self.f64_or("potential.t", 0.0)?
            };
            return Ok(PotentialSpec::Geometric { t });
        }
        Err(ConfigError(format!(
            "potential.kind must be `zero` or `geometric[:t=<v>]`, got `{kind}`"
        )))
    }

    /// Basic sanity: tolerances positive, cutoffs at least 1, map valid.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.map()?;
        for key in ["thermo.tol", "equilibrium.tol"] {
            if let Some(v) = self.get(key) {
                let t: f64 = v
                    .parse()
                    .map_err(|_| ConfigError(format!("{key}: bad number `{v}`")))?;
                if t <= 0.0 {
                    return Err(ConfigError(format!("{key} must be positive")));
                }
            }
        }
        for key in ["nest.cutoff", "scheme.cutoff", "thermo.nsym", "escape.nmax"] {
            if let Some(v) = self.get(key) {
                let n: usize = v
                    .parse()
                    .map_err(|_| ConfigError(format!("{key}: bad integer `{v}`")))?;
                if n == 0 {
                    return Err(ConfigError(format!("{key} must be at least 1")));
                }
            }
        }
        Ok(())
    }
}

/// Base selection for the induced scheme.
#[derive(Clone, Debug)]
pub enum BaseSpec {
    Explicit(Interval),
    NestedMember(usize),
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let lo = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    Ok((lo, hi))
}

fn parse_pair_list(s: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for part in s.split([',', ';']) {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(parse_pair(part)?);
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// Worker cap from `ZOOMTHERM_THREADS`; invalid values are a config error.
pub fn thread_cap() -> Result<usize, ConfigError> {
    match std::env::var("ZOOMTHERM_THREADS") {
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
        Ok(s) => {
            let n: usize = s
                .parse()
                .map_err(|_| ConfigError(format!("ZOOMTHERM_THREADS: bad value `{s}`")))?;
            if n == 0 {
                return Err(ConfigError("ZOOMTHERM_THREADS must be at least 1".into()));
            }
            Ok(n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_dotted_keys() {
        let cfg = RunConfig::parse(
            "# a comment\nmap.name = doubling\nnest.balls = 0.3333:0.04, 0.6667:0.04\nthermo.nsym = 64\n",
        )
        .unwrap();
        assert_eq!(cfg.get("map.name"), Some("doubling"));
        assert_eq!(cfg.balls().unwrap().len(), 2);
        assert_eq!(cfg.usize_or("thermo.nsym", 0).unwrap(), 64);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_malformed_lines_and_values() {
        assert!(RunConfig::parse("map.name doubling\n").is_err());
        let cfg = RunConfig::parse("thermo.nsym = zero\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::parse("map.name = nosuch\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn potential_flag_syntax() {
        let mut cfg = RunConfig::default();
        cfg.set("potential.kind", "geometric:t=-2".into());
        match cfg.potential().unwrap() {
            PotentialSpec::Geometric { t } => assert_eq!(t, -2.0),
            p => panic!("unexpected potential {p:?}"),
        }
    }

    #[test]
    fn quadratic_params_flow_through() {
        let cfg = RunConfig::parse("map.name = quadratic\nmap.params.a = 2.0\n").unwrap();
        let m = cfg.map().unwrap();
        assert_eq!(m.name, "quadratic");
    }
}
