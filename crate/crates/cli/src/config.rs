//! The run configuration: a line-oriented `key = value` format with
//! `[section]` headers and `#` comments. Values may be double-quoted;
//! expression lists are separated by `;`, number lists by whitespace.

use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use allab_core::expr::Expr;
use allab_core::contact::InnerRule;

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// Every problem found in one pass over the file.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Allowed keys per section.
pub const SCHEMA: &[(&str, &[&str])] = &[
    (
        "model",
        &[
            "kind", "name", "matrix", "alpha_u", "alpha_s", "r_u", "r_s", "generator", "gluing", "lattice", "deck",
            "shift",
        ],
    ),
    ("torus", &["fiber", "level", "base", "du", "dv"]),
    ("foliations", &["builtin", "rho", "ws", "wu", "ws_form", "wu_form"]),
    ("grids", &["al", "solver", "torus", "leaf_circles"]),
    ("solver", &["max_iterations", "tolerance", "memory"]),
    ("certificate", &["scale_c", "epsilon", "delta", "width", "tolerance", "c1_threshold", "inner_rule"]),
    ("render", &["seeds", "length", "size"]),
    ("output", &["dir", "report"]),
];

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Suspension {
        matrix: [[i64; 2]; 2],
    },
    Forms {
        name: String,
        alpha_u: [Expr; 3],
        alpha_s: [Expr; 3],
        r_u: Expr,
        r_s: Expr,
        generator: [Expr; 3],
        three_torus: bool,
        lattice: [[f64; 2]; 2],
        deck: [[f64; 2]; 2],
        shift: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum TorusSpec {
    /// Index into the model's fiber list.
    Fiber(usize),
    Level(f64),
    Affine { base: [f64; 3], du: [f64; 3], dv: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    /// Direction field `(V₁, V₂)`.
    Direction([Expr; 2]),
    /// Kernel of the 1-form `a_u du + a_v dv`.
    Form([Expr; 2]),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FoliationSpec {
    Builtin { name: String, rho: f64 },
    Declared { ws: FieldSpec, wu: FieldSpec },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grids {
    pub al: usize,
    pub solver: usize,
    pub torus: usize,
    pub leaf_circles: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSpec {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub memory: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateSpec {
    pub scale_c: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub width: f64,
    pub tolerance: f64,
    /// Advisory bound on the C¹ size of the perturbation.
    pub c1_threshold: f64,
    pub inner_rule: InnerRule,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderSpec {
    pub seeds: usize,
    pub length: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    pub torus: TorusSpec,
    pub foliations: Option<FoliationSpec>,
    pub grids: Grids,
    pub solver: SolverSpec,
    pub certificate: CertificateSpec,
    pub render: RenderSpec,
    pub out_dir: Option<PathBuf>,
    pub report_name: String,
    /// SHA-256 of the raw configuration text.
    pub digest: String,
}

pub const BUILTIN_FOLIATIONS: &[&str] = &["franks_williams", "figure3", "two_reeb", "morse_smale", "rotation"];

struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

fn unquote(v: &str) -> Result<String, String> {
    let v = v.trim();
    if let Some(rest) = v.strip_prefix('"') {
        return match rest.strip_suffix('"') {
            Some(inner) if !inner.contains('"') => Ok(inner.to_string()),
            _ => Err(format!("unterminated or malformed string {v}")),
        };
    }
    Ok(v.to_string())
}

/// Strips a `#` comment that is not inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn tokenize(text: &str, errors: &mut Vec<ConfigError>) -> Vec<Entry> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            match name.strip_suffix(']') {
                Some(name) => {
                    let name = name.trim();
                    if SCHEMA.iter().all(|(sec, _)| *sec != name) {
                        errors.push(ConfigError {
                            line,
                            message: format!("unknown section [{name}]"),
                        });
                    }
                    section = Some(name.to_string());
                }
                None => errors.push(ConfigError {
                    line,
                    message: format!("malformed section header {s}"),
                }),
            }
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            errors.push(ConfigError {
                line,
                message: format!("expected `key = value`, got {s}"),
            });
            continue;
        };
        let Some(sec) = section.clone() else {
            errors.push(ConfigError {
                line,
                message: "key outside of any section".into(),
            });
            continue;
        };
        let key = k.trim().to_string();
        if let Some((_, keys)) = SCHEMA.iter().find(|(name, _)| *name == sec) {
            if !keys.contains(&key.as_str()) {
                errors.push(ConfigError {
                    line,
                    message: format!("unknown key `{key}` in [{sec}]"),
                });
                continue;
            }
        } else {
            continue;
        }
        if let Some(prev) = entries.iter().find(|e| e.section == sec && e.key == key) {
            errors.push(ConfigError {
                line,
                message: format!("duplicate key `{key}` in [{sec}] (first on line {})", prev.line),
            });
            continue;
        }
        match unquote(v) {
            Ok(value) => entries.push(Entry {
                section: sec,
                key,
                value,
                line,
            }),
            Err(message) => errors.push(ConfigError { line, message }),
        }
    }
    entries
}

struct Reader<'a> {
    entries: &'a [Entry],
    errors: Vec<ConfigError>,
}

impl Reader<'_> {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.section == section && e.key == key)
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.iter().any(|e| e.section == section)
    }

    fn err(&mut self, line: usize, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    fn parse<T: std::str::FromStr>(&mut self, section: &str, key: &str, default: T) -> T {
        let Some(e) = self.get(section, key) else {
            return default;
        };
        let line = e.line;
        match e.value.parse::<T>() {
            Ok(v) => v,
            Err(_) => {
                let message = format!("[{section}] {key}: cannot parse `{}`", e.value);
                self.err(line, message);
                default
            }
        }
    }

    fn positive(&mut self, section: &str, key: &str, default: f64) -> f64 {
        let v = self.parse(section, key, default);
        if !(v > 0.0 && v.is_finite()) {
            let line = self.get(section, key).map_or(0, |e| e.line);
            self.err(line, format!("[{section}] {key} must be a positive number"));
            return default;
        }
        v
    }

    fn count(&mut self, section: &str, key: &str, default: usize, min: usize) -> usize {
        let v = self.parse(section, key, default);
        if v < min {
            let line = self.get(section, key).map_or(0, |e| e.line);
            self.err(line, format!("[{section}] {key} must be at least {min}"));
            return default;
        }
        v
    }

    fn numbers<const N: usize>(&mut self, section: &str, key: &str) -> Option<[f64; N]> {
        let e = self.get(section, key)?;
        let line = e.line;
        let parsed: Result<Vec<f64>, _> = e.value.split_whitespace().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.len() == N && v.iter().all(|x| x.is_finite()) => Some(std::array::from_fn(|i| v[i])),
            _ => {
                let message = format!("[{section}] {key}: expected {N} numbers, got `{}`", e.value);
                self.err(line, message);
                None
            }
        }
    }

    fn exprs<const N: usize>(&mut self, section: &str, key: &str) -> Option<[Expr; N]> {
        let e = self.get(section, key)?;
        let (line, value) = (e.line, e.value.clone());
        let parts: Vec<&str> = value.split(';').map(str::trim).collect();
        if parts.len() != N {
            self.err(line, format!("[{section}] {key}: expected {N} expressions separated by `;`"));
            return None;
        }
        let mut out = Vec::with_capacity(N);
        for p in parts {
            match Expr::parse(p) {
                Ok(x) => out.push(x),
                Err(err) => {
                    self.err(line, format!("[{section}] {key}: `{p}`: {err}"));
                    return None;
                }
            }
        }
        Some(std::array::from_fn(|i| out[i].clone()))
    }

    fn require(&mut self, section: &str, key: &str, line: usize) {
        if self.get(section, key).is_none() {
            self.err(line, format!("[{section}] needs `{key}`"));
        }
    }
}

fn square(v: [f64; 4]) -> [[f64; 2]; 2] {
    [[v[0], v[1]], [v[2], v[3]]]
}

fn model_spec(r: &mut Reader) -> Option<ModelSpec> {
    if !r.has_section("model") {
        return None;
    }
    let kind = r.get("model", "kind").map_or("suspension".to_string(), |e| e.value.clone());
    let line = r.get("model", "kind").map_or(0, |e| e.line);
    match kind.as_str() {
        "suspension" => {
            r.require("model", "matrix", line);
            let m = r.numbers::<4>("model", "matrix")?;
            if m.iter().any(|x| x.fract() != 0.0) {
                r.err(line, "[model] matrix entries must be integers".into());
                return None;
            }
            Some(ModelSpec::Suspension {
                matrix: [[m[0] as i64, m[1] as i64], [m[2] as i64, m[3] as i64]],
            })
        }
        "forms" => {
            for k in ["alpha_u", "alpha_s", "r_u", "r_s", "shift"] {
                r.require("model", k, line);
            }
            let alpha_u = r.exprs::<3>("model", "alpha_u");
            let alpha_s = r.exprs::<3>("model", "alpha_s");
            let r_u = r.exprs::<1>("model", "r_u");
            let r_s = r.exprs::<1>("model", "r_s");
            let generator = if r.get("model", "generator").is_some() {
                r.exprs::<3>("model", "generator")
            } else {
                Some([Expr::Const(0.0), Expr::Const(0.0), Expr::Const(1.0)])
            };
            let gluing = r.get("model", "gluing").map_or("three_torus".to_string(), |e| e.value.clone());
            let three_torus = match gluing.as_str() {
                "three_torus" => true,
                "mapping_torus" => false,
                other => {
                    let l = r.get("model", "gluing").map_or(0, |e| e.line);
                    r.err(l, format!("[model] gluing must be three_torus or mapping_torus, got {other}"));
                    true
                }
            };
            let identity = [1.0, 0.0, 0.0, 1.0];
            let lattice = r.numbers::<4>("model", "lattice").unwrap_or(identity);
            let deck = r.numbers::<4>("model", "deck").unwrap_or(identity);
            let shift = r.positive("model", "shift", 1.0);
            let name = r.get("model", "name").map_or("declared model".to_string(), |e| e.value.clone());
            Some(ModelSpec::Forms {
                name,
                alpha_u: alpha_u?,
                alpha_s: alpha_s?,
                r_u: r_u?[0].clone(),
                r_s: r_s?[0].clone(),
                generator: generator?,
                three_torus,
                lattice: square(lattice),
                deck: square(deck),
                shift,
            })
        }
        other => {
            r.err(line, format!("[model] kind must be suspension or forms, got {other}"));
            None
        }
    }
}

fn torus_spec(r: &mut Reader) -> TorusSpec {
    let keys: Vec<&str> = ["fiber", "level", "base"]
        .into_iter()
        .filter(|k| r.get("torus", k).is_some())
        .collect();
    if keys.len() > 1 {
        let line = r.get("torus", keys[1]).map_or(0, |e| e.line);
        r.err(line, format!("[torus] give only one of fiber, level, base (found {})", keys.join(", ")));
    }
    if r.get("torus", "level").is_some() {
        return TorusSpec::Level(r.parse("torus", "level", 0.0));
    }
    if r.get("torus", "base").is_some() {
        let line = r.get("torus", "base").map_or(0, |e| e.line);
        r.require("torus", "du", line);
        r.require("torus", "dv", line);
        let base = r.numbers::<3>("torus", "base").unwrap_or_default();
        let du = r.numbers::<3>("torus", "du").unwrap_or([1.0, 0.0, 0.0]);
        let dv = r.numbers::<3>("torus", "dv").unwrap_or([0.0, 1.0, 0.0]);
        return TorusSpec::Affine { base, du, dv };
    }
    TorusSpec::Fiber(r.parse("torus", "fiber", 0))
}

fn foliation_spec(r: &mut Reader) -> Option<FoliationSpec> {
    if !r.has_section("foliations") {
        return None;
    }
    if let Some(e) = r.get("foliations", "builtin") {
        let (name, line) = (e.value.clone(), e.line);
        if !BUILTIN_FOLIATIONS.contains(&name.as_str()) {
            r.err(line, format!("[foliations] unknown builtin `{name}` (one of {})", BUILTIN_FOLIATIONS.join(", ")));
        }
        for k in ["ws", "wu", "ws_form", "wu_form"] {
            if let Some(e) = r.get("foliations", k) {
                let l = e.line;
                r.err(l, format!("[foliations] `{k}` conflicts with `builtin`"));
            }
        }
        let rho = r.parse("foliations", "rho", 0.0);
        return Some(FoliationSpec::Builtin { name, rho });
    }
    let field = |r: &mut Reader, name: &str| -> Option<FieldSpec> {
        let form = format!("{name}_form");
        match (r.get("foliations", name).is_some(), r.get("foliations", &form).is_some()) {
            (true, false) => r.exprs::<2>("foliations", name).map(FieldSpec::Direction),
            (false, true) => r.exprs::<2>("foliations", &form).map(FieldSpec::Form),
            (true, true) => {
                let line = r.get("foliations", &form).map_or(0, |e| e.line);
                r.err(line, format!("[foliations] give `{name}` or `{form}`, not both"));
                None
            }
            (false, false) => {
                r.err(0, format!("[foliations] needs `builtin`, or `{name}` / `{form}`"));
                None
            }
        }
    };
    let ws = field(r, "ws");
    let wu = field(r, "wu");
    Some(FoliationSpec::Declared { ws: ws?, wu: wu? })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigErrors> {
        let mut errors = Vec::new();
        let entries = tokenize(text, &mut errors);
        let mut r = Reader {
            entries: &entries,
            errors,
        };
        let model = model_spec(&mut r);
        let torus = torus_spec(&mut r);
        let foliations = foliation_spec(&mut r);
        if model.is_none() && foliations.is_none() {
            r.err(0, "configuration needs a [model] or a [foliations] section".into());
        }
        let grids = Grids {
            al: r.count("grids", "al", 48, 2),
            solver: r.count("grids", "solver", 64, 4),
            torus: r.count("grids", "torus", 64, 4),
            leaf_circles: r.count("grids", "leaf_circles", 64, 1),
        };
        let solver = SolverSpec {
            max_iterations: r.count("solver", "max_iterations", 5000, 0),
            tolerance: r.positive("solver", "tolerance", 1e-6),
            memory: r.count("solver", "memory", 10, 1),
        };
        let certificate = CertificateSpec {
            scale_c: r.positive("certificate", "scale_c", 10.0),
            epsilon: r.positive("certificate", "epsilon", 0.02),
            delta: r.positive("certificate", "delta", 0.1),
            width: r.positive("certificate", "width", 0.4),
            tolerance: r.positive("certificate", "tolerance", 1e-6),
            c1_threshold: r.positive("certificate", "c1_threshold", 1e-2),
            inner_rule: match r.get("certificate", "inner_rule").map(|e| (e.value.clone(), e.line)) {
                None => InnerRule::AtBasePoint,
                Some((v, line)) => match v.as_str() {
                    "base_point" => InnerRule::AtBasePoint,
                    "along_flow" => InnerRule::AlongFlow,
                    _ => {
                        r.err(line, format!("[certificate] inner_rule must be base_point or along_flow, got `{v}`"));
                        InnerRule::AtBasePoint
                    }
                },
            },
        };
        let render = RenderSpec {
            seeds: r.count("render", "seeds", 12, 1),
            length: r.positive("render", "length", 3.0),
            size: r.count("render", "size", 600, 16),
        };
        let out_dir = r.get("output", "dir").map(|e| PathBuf::from(&e.value));
        let report_name = r.get("output", "report").map_or("report.json".to_string(), |e| e.value.clone());
        if report_name.contains('/') || report_name.is_empty() {
            let line = r.get("output", "report").map_or(0, |e| e.line);
            r.err(line, "[output] report must be a plain file name".into());
        }
        let mut errors = r.errors;
        if !errors.is_empty() {
            errors.sort_by_key(|e| e.line);
            return Err(ConfigErrors(errors));
        }
        Ok(RunConfig {
            model,
            torus,
            foliations,
            grids,
            solver,
            certificate,
            render,
            out_dir,
            report_name,
            digest: digest(text),
        })
    }
}

/// Hex SHA-256 of the configuration text.
pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suspension_with_defaults() {
        let c = RunConfig::parse("[model]\nkind = suspension\nmatrix = 2 1 1 1 # cat map\n").unwrap();
        assert_eq!(c.model, Some(ModelSpec::Suspension { matrix: [[2, 1], [1, 1]] }));
        assert_eq!(c.torus, TorusSpec::Fiber(0));
        assert_eq!(c.grids.al, 48);
        assert_eq!(c.digest.len(), 64);
    }

    #[test]
    fn certificate_rule_and_threshold() {
        let base = "[model]\nmatrix = 2 1 1 1\n[certificate]\n";
        let c = RunConfig::parse(base).unwrap();
        assert_eq!(c.certificate.inner_rule, InnerRule::AtBasePoint);
        assert_eq!(c.certificate.c1_threshold, 1e-2);
        let c = RunConfig::parse(&format!("{base}inner_rule = along_flow\nc1_threshold = 0.05\n")).unwrap();
        assert_eq!(c.certificate.inner_rule, InnerRule::AlongFlow);
        assert_eq!(c.certificate.c1_threshold, 0.05);
        let errs = RunConfig::parse(&format!("{base}inner_rule = midpoint\n")).unwrap_err().0;
        assert_eq!(errs[0].line, 4);
    }

    #[test]
    fn all_errors_are_listed() {
        let text = "[model]\nkind = suspension\ncolour = red\n[grids]\nal = many\n[nonsense]\n[foliations]\nws = \"sin(\" ; 1\n";
        let errs = RunConfig::parse(text).unwrap_err().0;
        let lines: Vec<usize> = errs.iter().map(|e| e.line).collect();
        assert!(lines.contains(&3) && lines.contains(&5) && lines.contains(&6) && lines.contains(&8), "{errs:?}");
        assert!(errs.iter().any(|e| e.message.contains("matrix")));
    }

    #[test]
    fn declared_foliations() {
        let text = "[foliations]\nws = \"cos(2*pi*u)\"; \"sin(2*pi*u)\"\nwu_form = 1; 0.5\n";
        // quoting only strips a fully quoted value, so the inner quotes stay
        assert!(RunConfig::parse(text).is_err());
        let text = "[foliations]\nws = cos(2*pi*u); sin(2*pi*u)\nwu_form = 1; 0.5\n";
        let c = RunConfig::parse(text).unwrap();
        assert!(matches!(c.foliations, Some(FoliationSpec::Declared { ws: FieldSpec::Direction(_), wu: FieldSpec::Form(_) })));
    }
}
