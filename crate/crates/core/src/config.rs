//! TOML run configuration.
//!
//! ```toml
//! [domain]
//! dim = 1
//! lengths = [1.0]
//! resolution = [50]
//!
//! [time]
//! T = 0.05
//! tau = 1e-3
//!
//! [sources.left]
//! h_s = 0.5
//! ```
//!
//! Sections `[material]`, `[initial]`, `[sources]`, `[solver]` and
//! `[output]` are optional; every value that is not given is filled from the
//! desk-default setup and reported in [`ParsedConfig::defaults`]. Scalar
//! data fields accept a number or a ramp table
//! `{ value, dx, dy, dt, cos_x }`; vector fields take an array with one
//! entry per component. Unknown keys are rejected with the nearest valid
//! key. A `[manifest]` section is ignored, so a run manifest can be fed back
//! as a configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use toml::de::{DeTable, DeValue};
use toml::{Table, Value};

use crate::constitutive::{HeatLaw, MaterialModel};
use crate::driver::{InitialData, OutputOptions, Ramp, RunConfig, SideSources, Sources};
use crate::error::{Error, Result};
use crate::grid::Side;
use crate::presets::stress_free_strain;
use crate::state::SolverOptions;
use crate::tensor::{ModulusTensor, SymTensor};

const SECTIONS: [&str; 8] = ["domain", "time", "material", "initial", "sources", "solver", "output", "manifest"];
const DOMAIN_KEYS: [&str; 4] = ["dim", "lengths", "resolution", "clamp"];
const TIME_KEYS: [&str; 2] = ["T", "tau"];
const MATERIAL_KEYS: [&str; 19] = [
    "E",
    "lame",
    "D",
    "rho",
    "alpha",
    "lambda",
    "k",
    "a1",
    "phi1_kappa",
    "r",
    "m_lo",
    "m_hi",
    "eps_tr",
    "alpha_th",
    "heat_law",
    "c0",
    "K0",
    "M0",
    "d0",
];
const INITIAL_KEYS: [&str; 5] = ["u0", "v0", "m0", "chi0", "theta0"];
const SOURCE_KEYS: [&str; 2] = ["f", "q"];
const SIDE_KEYS: [&str; 3] = ["f_s", "q_s", "h_s"];
const SOLVER_KEYS: [&str; 5] = ["cg_tol", "picard_tol", "picard_max", "opt_tol", "opt_max"];
const OUTPUT_KEYS: [&str; 3] = ["dir", "every_n", "vtk"];
const RAMP_KEYS: [&str; 5] = ["value", "dx", "dy", "dt", "cos_x"];

/// A parsed configuration and the provenance of its defaulted values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: RunConfig,
    /// `section.key` of every value that was filled in by default.
    pub defaults: Vec<String>,
}

pub fn parse_config(path: &Path) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_config_str(&text, &path.display().to_string())
}

pub fn parse_config_str(text: &str, origin: &str) -> Result<ParsedConfig> {
    let spans = DeTable::parse(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
        Error::Config(format!("{origin}:{line}: {}", e.message().trim()))
    })?;
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(format!("{origin}: {}", e.message())))?;
    let mut r = Reader { text, origin, spans: spans.into_inner(), defaults: Vec::new() };
    let config = r.read(&table)?;
    Ok(ParsedConfig { config, defaults: r.defaults })
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Closest candidate within edit distance 3.
fn nearest<'a>(key: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates.iter().map(|c| (strsim::levenshtein(key, c), *c)).filter(|(d, _)| *d <= 3).min().map(|(_, c)| c)
}

struct Reader<'t> {
    text: &'t str,
    origin: &'t str,
    spans: DeTable<'t>,
    defaults: Vec<String>,
}

/// Resolves a side name; the key path is used for error messages.
type SideParser<'a, 't> = dyn Fn(&Reader<'t>, &[&str], &str) -> Result<Side> + 'a;

impl<'t> Reader<'t> {
    /// Source line of the key at `path`, or of its deepest existing parent.
    fn line(&self, path: &[&str]) -> usize {
        let mut table = &self.spans;
        let mut line = 1;
        for key in path {
            let Some((k, v)) = table.get_key_value(*key) else { break };
            line = line_of(self.text, k.span().start);
            match v.get_ref() {
                DeValue::Table(t) => table = t,
                _ => break,
            }
        }
        line
    }

    fn err(&self, path: &[&str], msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("{}:{}: {}: {msg}", self.origin, self.line(path), path.join(".")))
    }

    fn default(&mut self, path: &str, what: impl std::fmt::Display) {
        log::info!("{}: {path} not given, using {what}", self.origin);
        self.defaults.push(path.to_string());
    }

    fn check_keys(&self, section: &[&str], table: &Table, allowed: &[&str]) -> Result<()> {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                let mut path = section.to_vec();
                path.push(key);
                let hint = match nearest(key, allowed) {
                    Some(n) => format!("; did you mean `{n}`?"),
                    None => format!("; valid keys are {}", allowed.join(", ")),
                };
                return Err(self.err(&path, format!("unknown key `{key}`{hint}")));
            }
        }
        Ok(())
    }

    fn section<'v>(&self, root: &'v Table, name: &str) -> Result<Option<&'v Table>> {
        match root.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(self.err(&[name], "expected a table")),
        }
    }

    fn number(&self, path: &[&str], v: &Value) -> Result<f64> {
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => return Err(self.err(path, "expected a number")),
        };
        if !x.is_finite() {
            return Err(self.err(path, format!("value {x} is not finite")));
        }
        Ok(x)
    }

    fn count(&self, path: &[&str], v: &Value) -> Result<usize> {
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(self.err(path, "expected a non-negative integer")),
        }
    }

    fn numbers(&self, path: &[&str], v: &Value) -> Result<Vec<f64>> {
        match v {
            Value::Array(a) => a.iter().map(|x| self.number(path, x)).collect(),
            _ => Ok(vec![self.number(path, v)?]),
        }
    }

    fn ramp(&self, path: &[&str], v: &Value) -> Result<Ramp> {
        match v {
            Value::Table(t) => {
                self.check_keys(path, t, &RAMP_KEYS)?;
                let get = |k: &str| -> Result<f64> {
                    let mut p = path.to_vec();
                    p.push(k);
                    t.get(k).map_or(Ok(0.0), |v| self.number(&p, v))
                };
                Ok(Ramp { value: get("value")?, dx: get("dx")?, dy: get("dy")?, dt: get("dt")?, cos_x: get("cos_x")? })
            }
            _ => Ok(Ramp::constant(self.number(path, v)?)),
        }
    }

    fn ramps(&self, path: &[&str], v: &Value, dim: usize) -> Result<Vec<Ramp>> {
        let r = match v {
            Value::Array(a) => a.iter().map(|x| self.ramp(path, x)).collect::<Result<Vec<_>>>()?,
            _ if dim == 1 => vec![self.ramp(path, v)?],
            _ => return Err(self.err(path, format!("expected an array of {dim} components"))),
        };
        if r.len() != dim {
            return Err(self.err(path, format!("expected {dim} components, got {}", r.len())));
        }
        Ok(r)
    }

    fn read(&mut self, root: &Table) -> Result<RunConfig> {
        self.check_keys(&[], root, &SECTIONS)?;

        // [domain]
        let domain = self.section(root, "domain")?.ok_or_else(|| self.err(&["domain"], "missing mandatory section"))?;
        self.check_keys(&["domain"], domain, &DOMAIN_KEYS)?;
        let dim =
            self.count(&["domain", "dim"], domain.get("dim").ok_or_else(|| self.err(&["domain", "dim"], "missing mandatory key"))?)?;
        if dim != 1 && dim != 2 {
            return Err(self.err(&["domain", "dim"], format!("dimension must be 1 or 2, got {dim}")));
        }
        let resolution = match domain.get("resolution") {
            Some(Value::Array(a)) => a.iter().map(|v| self.count(&["domain", "resolution"], v)).collect::<Result<Vec<_>>>()?,
            Some(v) => vec![self.count(&["domain", "resolution"], v)?],
            None => return Err(self.err(&["domain", "resolution"], "missing mandatory key")),
        };
        if resolution.len() != dim {
            return Err(self.err(&["domain", "resolution"], format!("expected {dim} entries")));
        }
        let lengths = match domain.get("lengths") {
            Some(v) => self.numbers(&["domain", "lengths"], v)?,
            None => {
                self.default("domain.lengths", "unit lengths");
                vec![1.0; dim]
            }
        };
        if lengths.len() != dim {
            return Err(self.err(&["domain", "lengths"], format!("expected {dim} entries")));
        }
        let sides: &[Side] = if dim == 1 { &Side::ALL[..2] } else { &Side::ALL };
        let side_names: Vec<&str> = sides.iter().map(|s| s.name()).collect();
        let parse_side = |r: &Self, path: &[&str], name: &str| -> Result<Side> {
            sides.iter().copied().find(|s| s.name() == name).ok_or_else(|| {
                let hint = nearest(name, &side_names).map_or(String::new(), |n| format!("; did you mean `{n}`?"));
                r.err(path, format!("unknown side `{name}`{hint}"))
            })
        };
        let clamped = match domain.get("clamp") {
            None => Vec::new(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::String(s) => parse_side(self, &["domain", "clamp"], s),
                    _ => Err(self.err(&["domain", "clamp"], "expected side names")),
                })
                .collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(self.err(&["domain", "clamp"], "expected an array of side names")),
        };

        // [time]
        let time = self.section(root, "time")?.ok_or_else(|| self.err(&["time"], "missing mandatory section"))?;
        self.check_keys(&["time"], time, &TIME_KEYS)?;
        let t_final = self.number(&["time", "T"], time.get("T").ok_or_else(|| self.err(&["time", "T"], "missing mandatory key"))?)?;
        let tau = self.number(&["time", "tau"], time.get("tau").ok_or_else(|| self.err(&["time", "tau"], "missing mandatory key"))?)?;

        let material = self.read_material(root, dim)?;
        let initial = self.read_initial(root, &material)?;
        let sources = self.read_sources(root, dim, sides, &parse_side)?;
        let solver = self.read_solver(root, dim)?;
        let output = self.read_output(root)?;

        let cfg = RunConfig { dim, lengths, resolution, clamped, t_final, tau, material, initial, sources, solver, output };
        match cfg.check() {
            Ok(_) => Ok(cfg),
            Err(Error::StepTooLarge { tau, tau_max }) => Err(self.err(
                &["time", "tau"],
                format!(
                    "tau = {tau} exceeds the stability threshold tau_max = min(T, alpha^2 / inf(d2_mm phi1)^2) = {tau_max:e} of the configured material"
                ),
            )),
            Err(Error::Config(m)) => Err(Error::Config(format!("{}: {m}", self.origin))),
            Err(e) => Err(e),
        }
    }

    fn read_material(&mut self, root: &Table, dim: usize) -> Result<MaterialModel> {
        let mut mat = MaterialModel::desk_default(dim);
        let Some(t) = self.section(root, "material")? else {
            self.default("material", "the desk-default material");
            return Ok(mat);
        };
        self.check_keys(&["material"], t, &MATERIAL_KEYS)?;
        let p = |k: &'static str| ["material", k];
        let moduli = |r: &Self, key: &'static str, v: &Value| -> Result<ModulusTensor> {
            let x = r.numbers(&p(key), v)?;
            match (dim, x.as_slice()) {
                (1, [e]) => Ok(ModulusTensor::Uniaxial { modulus: *e }),
                (1, [l, m]) => Ok(ModulusTensor::Uniaxial { modulus: l + 2.0 * m }),
                (2, [l, m]) => Ok(ModulusTensor::Isotropic { lambda: *l, mu: *m }),
                _ => Err(r.err(&p(key), "expected a modulus (1D) or a Lamé pair [lambda, mu]")),
            }
        };
        match (t.get("E"), t.get("lame")) {
            (Some(_), Some(_)) => return Err(self.err(&p("lame"), "give either E or lame, not both")),
            (Some(v), None) => {
                if dim != 1 {
                    return Err(self.err(&p("E"), "E is the 1D modulus; use lame = [lambda, mu] in 2D"));
                }
                mat.elastic = moduli(self, "E", v)?;
            }
            (None, Some(v)) => mat.elastic = moduli(self, "lame", v)?,
            (None, None) => self.default("material.E", "the desk-default elastic moduli"),
        }
        let scalar = |r: &mut Self, key: &'static str, slot: &mut f64| -> Result<()> {
            match t.get(key) {
                Some(v) => *slot = r.number(&p(key), v)?,
                None => r.default(&format!("material.{key}"), *slot),
            }
            Ok(())
        };
        match t.get("D") {
            Some(v) => mat.viscosity = moduli(self, "D", v)?,
            None => self.default("material.D", "the desk-default viscous moduli"),
        }
        scalar(self, "rho", &mut mat.density)?;
        scalar(self, "alpha", &mut mat.phase_viscosity)?;
        scalar(self, "lambda", &mut mat.gradient_coeff)?;
        scalar(self, "k", &mut mat.coupling)?;
        scalar(self, "a1", &mut mat.swelling_amplitude)?;
        scalar(self, "phi1_kappa", &mut mat.chem_stiffness)?;
        scalar(self, "r", &mut mat.activation)?;
        scalar(self, "m_lo", &mut mat.phase_lo)?;
        scalar(self, "m_hi", &mut mat.phase_hi)?;
        scalar(self, "K0", &mut mat.conductivity)?;
        scalar(self, "M0", &mut mat.mobility)?;
        scalar(self, "d0", &mut mat.double_well)?;
        let mut eps = mat.swelling.xx;
        scalar(self, "eps_tr", &mut eps)?;
        mat.swelling = SymTensor::isotropic(dim, eps);
        let mut ath = mat.thermal_expansion.xx;
        scalar(self, "alpha_th", &mut ath)?;
        mat.thermal_expansion = SymTensor::isotropic(dim, ath);
        if !(mat.phase_lo <= mat.phase_hi) {
            return Err(self.err(&p("m_hi"), "need m_lo <= m_hi"));
        }

        let law = match t.get("heat_law") {
            None => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(_) => return Err(self.err(&p("heat_law"), "expected \"quadratic\", \"linear\" or \"mixed\"")),
        };
        let c0 = t.get("c0").map(|v| self.numbers(&p("c0"), v)).transpose()?;
        mat.heat_law = match (law, c0.as_deref()) {
            (None, None) => {
                self.default("material.heat_law", "quadratic with c0 = 2");
                mat.heat_law
            }
            (None | Some("quadratic"), Some([c])) => HeatLaw::Quadratic { c0: *c },
            (Some("quadratic"), None) => {
                self.default("material.c0", 2.0);
                HeatLaw::Quadratic { c0: 2.0 }
            }
            (Some("linear"), Some([c])) => HeatLaw::Linear { c0: *c },
            (Some("linear"), None) => {
                self.default("material.c0", 1.0);
                HeatLaw::Linear { c0: 1.0 }
            }
            (None | Some("mixed"), Some([a, b])) => HeatLaw::Mixed { c0_metal: *a, c0_hydride: *b },
            (Some("mixed"), _) => return Err(self.err(&p("c0"), "the mixed law needs c0 = [metal, hydride]")),
            (Some(l @ ("quadratic" | "linear")), Some(_)) => return Err(self.err(&p("c0"), format!("the {l} law takes a single c0"))),
            (Some(other), _) => {
                let hint = nearest(other, &["quadratic", "linear", "mixed"]).map_or(String::new(), |n| format!("; did you mean `{n}`?"));
                return Err(self.err(&p("heat_law"), format!("unknown heat law `{other}`{hint}")));
            }
            (None, Some(_)) => return Err(self.err(&p("c0"), "expected one value, or [metal, hydride] for the mixed law")),
        };
        let c0s = match mat.heat_law {
            HeatLaw::Quadratic { c0 } | HeatLaw::Linear { c0 } => vec![c0],
            HeatLaw::Mixed { c0_metal, c0_hydride } => vec![c0_metal, c0_hydride],
        };
        if c0s.iter().any(|c| !(*c > 0.0)) {
            return Err(self.err(&p("c0"), "heat capacity coefficients must be positive"));
        }
        Ok(mat)
    }

    fn read_initial(&mut self, root: &Table, mat: &MaterialModel) -> Result<InitialData> {
        let dim = mat.dim;
        let empty = Table::new();
        let t = self.section(root, "initial")?.unwrap_or(&empty);
        self.check_keys(&["initial"], t, &INITIAL_KEYS)?;
        let scalar = |r: &mut Self, key: &'static str, default: Ramp| -> Result<Ramp> {
            match t.get(key) {
                Some(v) => r.ramp(&["initial", key], v),
                None => {
                    r.default(&format!("initial.{key}"), default.value);
                    Ok(default)
                }
            }
        };
        let chi = scalar(self, "chi0", Ramp::constant(0.5))?;
        let m_default = if chi == Ramp::constant(chi.value) { mat.swelling_curve(chi.value) } else { 0.0 };
        let m = scalar(self, "m0", Ramp::constant(m_default))?;
        let theta = scalar(self, "theta0", Ramp::constant(1.0))?;
        let u = match t.get("u0") {
            Some(v) => self.ramps(&["initial", "u0"], v, dim)?,
            None if m == Ramp::constant(m.value) && theta == Ramp::constant(theta.value) => {
                self.default("initial.u0", "the stress-free displacement");
                let e = stress_free_strain(mat, m.value, theta.value);
                let mut u = vec![Ramp { dx: e.xx, ..Ramp::ZERO }];
                if dim == 2 {
                    u.push(Ramp { dy: e.yy, ..Ramp::ZERO });
                }
                u
            }
            None => {
                self.default("initial.u0", 0.0);
                vec![Ramp::ZERO; dim]
            }
        };
        let v = match t.get("v0") {
            Some(v) => self.ramps(&["initial", "v0"], v, dim)?,
            None => {
                self.default("initial.v0", 0.0);
                vec![Ramp::ZERO; dim]
            }
        };
        Ok(InitialData { u, v, m, chi, theta })
    }

    fn read_sources(&mut self, root: &Table, dim: usize, sides: &[Side], parse_side: &SideParser<'_, 't>) -> Result<Sources> {
        let mut src = Sources { force: vec![Ramp::ZERO; dim], ..Default::default() };
        let Some(t) = self.section(root, "sources")? else {
            self.default("sources", "no loads");
            return Ok(src);
        };
        let mut allowed: Vec<&str> = SOURCE_KEYS.to_vec();
        allowed.extend(sides.iter().map(|s| s.name()));
        for key in t.keys() {
            if !allowed.contains(&key.as_str()) && !SOURCE_KEYS.contains(&key.as_str()) {
                // a misspelled side reads better with the side list
                if matches!(t.get(key), Some(Value::Table(_))) {
                    parse_side(self, &["sources", key], key)?;
                }
            }
        }
        self.check_keys(&["sources"], t, &allowed)?;
        if let Some(v) = t.get("f") {
            src.force = self.ramps(&["sources", "f"], v, dim)?;
        }
        if let Some(v) = t.get("q") {
            src.heat = self.ramp(&["sources", "q"], v)?;
        }
        let mut by_side = BTreeMap::new();
        for &side in sides {
            let name = side.name();
            let Some(st) = t.get(name) else { continue };
            let Value::Table(st) = st else {
                return Err(self.err(&["sources", name], "expected a table"));
            };
            self.check_keys(&["sources", name], st, &SIDE_KEYS)?;
            let mut s = SideSources { traction: vec![Ramp::ZERO; dim], ..Default::default() };
            if let Some(v) = st.get("f_s") {
                s.traction = self.ramps(&["sources", name, "f_s"], v, dim)?;
            }
            if let Some(v) = st.get("q_s") {
                s.heat = self.ramp(&["sources", name, "q_s"], v)?;
            }
            if let Some(v) = st.get("h_s") {
                s.hydrogen = self.ramp(&["sources", name, "h_s"], v)?;
            }
            by_side.insert(side, s);
        }
        src.sides = by_side;
        Ok(src)
    }

    fn read_solver(&mut self, root: &Table, dim: usize) -> Result<SolverOptions> {
        let mut o = SolverOptions::for_dim(dim);
        let Some(t) = self.section(root, "solver")? else {
            self.default("solver", "the default tolerances");
            return Ok(o);
        };
        self.check_keys(&["solver"], t, &SOLVER_KEYS)?;
        for (key, slot) in [("cg_tol", &mut o.cg_tol), ("picard_tol", &mut o.picard_tol), ("opt_tol", &mut o.opt_tol)] {
            if let Some(v) = t.get(key) {
                let x = self.number(&["solver", key], v)?;
                if !(x > 0.0) {
                    return Err(self.err(&["solver", key], "tolerance must be positive"));
                }
                *slot = x;
            }
        }
        for (key, slot) in [("picard_max", &mut o.picard_max), ("opt_max", &mut o.opt_max)] {
            if let Some(v) = t.get(key) {
                *slot = self.count(&["solver", key], v)?;
            }
        }
        Ok(o)
    }

    fn read_output(&mut self, root: &Table) -> Result<OutputOptions> {
        let mut o = OutputOptions::default();
        let Some(t) = self.section(root, "output")? else {
            return Ok(o);
        };
        self.check_keys(&["output"], t, &OUTPUT_KEYS)?;
        if let Some(v) = t.get("dir") {
            match v {
                Value::String(s) => o.dir = Some(PathBuf::from(s)),
                _ => return Err(self.err(&["output", "dir"], "expected a path string")),
            }
        }
        if let Some(v) = t.get("every_n") {
            o.every_n = self.count(&["output", "every_n"], v)?;
        }
        if let Some(v) = t.get("vtk") {
            match v {
                Value::Boolean(b) => o.vtk = *b,
                _ => return Err(self.err(&["output", "vtk"], "expected true or false")),
            }
        }
        Ok(o)
    }
}

fn ramp_value(r: &Ramp) -> Value {
    if *r == Ramp::constant(r.value) {
        return Value::Float(r.value);
    }
    let mut t = Table::new();
    for (k, v) in RAMP_KEYS.iter().zip([r.value, r.dx, r.dy, r.dt, r.cos_x]) {
        if v != 0.0 {
            t.insert(k.to_string(), Value::Float(v));
        }
    }
    Value::Table(t)
}

fn ramps_value(r: &[Ramp]) -> Value {
    Value::Array(r.iter().map(ramp_value).collect())
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

fn moduli_value(m: &ModulusTensor) -> Value {
    match *m {
        ModulusTensor::Uniaxial { modulus } => Value::Float(modulus),
        ModulusTensor::Isotropic { lambda, mu } => floats(&[lambda, mu]),
    }
}

/// Canonical TOML form of a configuration; parses back to the same value.
pub fn to_table(cfg: &RunConfig) -> Table {
    let mut root = Table::new();
    let mut domain = Table::new();
    domain.insert("dim".into(), Value::Integer(cfg.dim as i64));
    domain.insert("lengths".into(), floats(&cfg.lengths));
    domain.insert("resolution".into(), Value::Array(cfg.resolution.iter().map(|&n| Value::Integer(n as i64)).collect()));
    if !cfg.clamped.is_empty() {
        domain.insert("clamp".into(), Value::Array(cfg.clamped.iter().map(|s| Value::String(s.name().into())).collect()));
    }
    root.insert("domain".into(), Value::Table(domain));

    let mut time = Table::new();
    time.insert("T".into(), Value::Float(cfg.t_final));
    time.insert("tau".into(), Value::Float(cfg.tau));
    root.insert("time".into(), Value::Table(time));

    let m = &cfg.material;
    let mut mat = Table::new();
    mat.insert(if cfg.dim == 1 { "E" } else { "lame" }.into(), moduli_value(&m.elastic));
    mat.insert("D".into(), moduli_value(&m.viscosity));
    for (k, v) in [
        ("rho", m.density),
        ("alpha", m.phase_viscosity),
        ("lambda", m.gradient_coeff),
        ("k", m.coupling),
        ("a1", m.swelling_amplitude),
        ("phi1_kappa", m.chem_stiffness),
        ("r", m.activation),
        ("m_lo", m.phase_lo),
        ("m_hi", m.phase_hi),
        ("eps_tr", m.swelling.xx),
        ("alpha_th", m.thermal_expansion.xx),
        ("K0", m.conductivity),
        ("M0", m.mobility),
        ("d0", m.double_well),
    ] {
        mat.insert(k.into(), Value::Float(v));
    }
    let (law, c0) = match m.heat_law {
        HeatLaw::Quadratic { c0 } => ("quadratic", Value::Float(c0)),
        HeatLaw::Linear { c0 } => ("linear", Value::Float(c0)),
        HeatLaw::Mixed { c0_metal, c0_hydride } => ("mixed", floats(&[c0_metal, c0_hydride])),
    };
    mat.insert("heat_law".into(), Value::String(law.into()));
    mat.insert("c0".into(), c0);
    root.insert("material".into(), Value::Table(mat));

    let ini = &cfg.initial;
    let mut initial = Table::new();
    initial.insert("u0".into(), ramps_value(&ini.u));
    initial.insert("v0".into(), ramps_value(&ini.v));
    initial.insert("m0".into(), ramp_value(&ini.m));
    initial.insert("chi0".into(), ramp_value(&ini.chi));
    initial.insert("theta0".into(), ramp_value(&ini.theta));
    root.insert("initial".into(), Value::Table(initial));

    let mut sources = Table::new();
    sources.insert("f".into(), ramps_value(&cfg.sources.force));
    sources.insert("q".into(), ramp_value(&cfg.sources.heat));
    for (side, s) in &cfg.sources.sides {
        let mut t = Table::new();
        t.insert("f_s".into(), ramps_value(&s.traction));
        t.insert("q_s".into(), ramp_value(&s.heat));
        t.insert("h_s".into(), ramp_value(&s.hydrogen));
        sources.insert(side.name().into(), Value::Table(t));
    }
    root.insert("sources".into(), Value::Table(sources));

    let o = &cfg.solver;
    let mut solver = Table::new();
    solver.insert("cg_tol".into(), Value::Float(o.cg_tol));
    solver.insert("picard_tol".into(), Value::Float(o.picard_tol));
    solver.insert("picard_max".into(), Value::Integer(o.picard_max as i64));
    solver.insert("opt_tol".into(), Value::Float(o.opt_tol));
    solver.insert("opt_max".into(), Value::Integer(o.opt_max as i64));
    root.insert("solver".into(), Value::Table(solver));

    let mut output = Table::new();
    if let Some(d) = &cfg.output.dir {
        output.insert("dir".into(), Value::String(d.display().to_string()));
    }
    output.insert("every_n".into(), Value::Integer(cfg.output.every_n as i64));
    output.insert("vtk".into(), Value::Boolean(cfg.output.vtk));
    root.insert("output".into(), Value::Table(output));
    root
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\ndim = 1\nresolution = [21]\n\n[time]\nT = 0.01\ntau = 1e-3\n";

    #[test]
    fn minimal_config_gets_desk_material() {
        let p = parse_config_str(MINIMAL, "min.toml").unwrap();
        assert_eq!(p.config.material, MaterialModel::desk_default(1));
        assert!(p.defaults.iter().any(|d| d == "material"));
        assert!(p.defaults.iter().any(|d| d == "initial.chi0"));
        assert_eq!(p.config.lengths, vec![1.0]);
        assert!((p.config.initial.u[0].dx - 0.104).abs() < 1e-15);
    }

    #[test]
    fn misspelled_key_names_nearest() {
        let text = format!("{MINIMAL}\n[material]\nlamda = 0.01\n");
        let e = parse_config_str(&text, "c.toml").unwrap_err().to_string();
        assert!(e.contains("`lambda`"), "{e}");
        assert!(e.contains("c.toml:10"), "{e}");
        let e = parse_config_str("[domian]\ndim = 1\n", "c.toml").unwrap_err().to_string();
        assert!(e.contains("`domain`") && e.contains("c.toml:1"), "{e}");
    }

    #[test]
    fn missing_and_non_finite_values() {
        let e = parse_config_str("[domain]\ndim = 1\nresolution = [5]\n[time]\ntau = 0.1\n", "c").unwrap_err();
        assert!(e.to_string().contains("time.T: missing"), "{e}");
        let text = MINIMAL.replace("tau = 1e-3", "tau = nan");
        assert!(parse_config_str(&text, "c").unwrap_err().to_string().contains("not finite"));
    }

    #[test]
    fn step_above_threshold_is_rejected_at_parse_time() {
        let text = "[domain]\ndim = 1\nresolution = [11]\n[time]\nT = 0.05\ntau = 0.01\n[material]\nd0 = 26\nalpha = 1\n";
        let e = parse_config_str(text, "c").unwrap_err().to_string();
        assert!(e.contains("stability threshold") && e.contains("c:6"), "{e}");
        let ok = text.replace("T = 0.05\ntau = 0.01", "T = 0.03\ntau = 0.003");
        parse_config_str(&ok, "c").unwrap();
    }

    #[test]
    fn ramps_and_sides() {
        let text = format!(
            "{MINIMAL}\n[initial]\nchi0 = {{ value = 0.5, cos_x = 0.1 }}\nm0 = 0.0\n[sources.left]\nh_s = 0.5\n[sources.right]\nf_s = -0.01\n"
        );
        let c = parse_config_str(&text, "c").unwrap().config;
        assert_eq!(c.initial.chi, Ramp { value: 0.5, cos_x: 0.1, ..Ramp::ZERO });
        assert_eq!(c.sources.sides[&Side::Left].hydrogen, Ramp::constant(0.5));
        assert_eq!(c.sources.sides[&Side::Right].traction, vec![Ramp::constant(-0.01)]);
        let bad = format!("{MINIMAL}\n[sources.lefft]\nh_s = 0.5\n");
        let e = parse_config_str(&bad, "c").unwrap_err().to_string();
        assert!(e.contains("`left`"), "{e}");
        let top_in_1d = format!("{MINIMAL}\n[sources.top]\nh_s = 0.5\n");
        assert!(parse_config_str(&top_in_1d, "c").is_err());
    }

    #[test]
    fn canonical_form_round_trips() {
        for (_, cfg) in crate::presets::all() {
            let text = toml::to_string(&to_table(&cfg)).unwrap();
            let back = parse_config_str(&text, "rt");
            if cfg.check().is_ok() {
                assert_eq!(back.unwrap().config, cfg, "{text}");
            }
        }
    }
}
