//! Run artifacts: `energy.csv`, `fields_{k:06}.csv`, legacy VTK snapshots
//! and `run_manifest.toml`.
//!
//! Numbers are written in Rust's shortest round-trip form, so every file is
//! lossless and byte-identical across repeated runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::audit::EnergyLedger;
use crate::config::to_table;
use crate::constitutive::MaterialModel;
use crate::driver::{RunConfig, Trajectory};
use crate::error::Result;
use crate::grid::Mesh;
use crate::state::State;

pub const ENERGY_COLUMNS: [&str; 16] = [
    "t",
    "kinetic",
    "stored",
    "gradient",
    "thermal",
    "diss_viscous",
    "diss_phase",
    "diss_activation",
    "diss_diffusion",
    "work_ext",
    "residual_nu0",
    "slack_nu05",
    "residual_nu1",
    "mass_chi",
    "min_chi",
    "min_w",
];

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        write!(out, "{v:e}").unwrap();
    }
    out.push('\n');
}

pub fn energy_csv(ledger: &EnergyLedger) -> String {
    let r0 = ledger.balance_residual(0.0);
    let s05 = ledger.slack_nu05();
    let r1 = ledger.balance_residual(1.0);
    let mut out = ENERGY_COLUMNS.join(",");
    out.push('\n');
    for (k, r) in ledger.rows.iter().enumerate() {
        push_row(
            &mut out,
            [
                r.t,
                r.kinetic,
                r.stored(),
                r.gradient,
                r.thermal,
                r.diss_viscous,
                r.diss_phase,
                r.diss_activation,
                r.diss_diffusion,
                r.work_ext(),
                r0[k],
                s05[k],
                r1[k],
                r.mass_chi,
                r.min_chi,
                r.min_w,
            ],
        );
    }
    out
}

pub fn field_columns(dim: usize) -> Vec<&'static str> {
    let mut c = vec!["node", "x"];
    if dim == 2 {
        c.push("y");
    }
    c.push("ux");
    if dim == 2 {
        c.push("uy");
    }
    c.extend(["m", "chi", "mu", "w", "theta"]);
    c
}

pub fn fields_csv(mesh: &Mesh, mat: &MaterialModel, s: &State) -> String {
    let d = mesh.dim;
    let mut out = field_columns(d).join(",");
    out.push('\n');
    for (i, p) in mesh.coords.iter().enumerate() {
        write!(out, "{i},").unwrap();
        let mut row: Vec<f64> = p[..d].to_vec();
        row.extend_from_slice(&s.u[d * i..d * i + d]);
        row.extend([s.m[i], s.chi[i], s.mu[i], s.w[i], mat.theta_ext(s.m[i], s.w[i])]);
        push_row(&mut out, row);
    }
    out
}

/// Legacy-VTK unstructured grid with the snapshot fields as point data.
pub fn vtk(mesh: &Mesh, mat: &MaterialModel, s: &State, title: &str) -> String {
    let d = mesh.dim;
    let n = mesh.num_nodes();
    let mut out = String::new();
    writeln!(out, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(out, "POINTS {n} double").unwrap();
    for p in &mesh.coords {
        writeln!(out, "{:e} {:e} 0e0", p[0], p[1]).unwrap();
    }
    let ne = mesh.num_elements();
    let nv = if d == 1 { 2 } else { 3 };
    writeln!(out, "CELLS {ne} {}", ne * (nv + 1)).unwrap();
    for e in &mesh.elements {
        let ids: Vec<String> = e.vertices().iter().map(|i| i.to_string()).collect();
        writeln!(out, "{nv} {}", ids.join(" ")).unwrap();
    }
    writeln!(out, "CELL_TYPES {ne}").unwrap();
    let cell_type = if d == 1 { 3 } else { 5 };
    for _ in 0..ne {
        writeln!(out, "{cell_type}").unwrap();
    }
    writeln!(out, "POINT_DATA {n}\nVECTORS u double").unwrap();
    for i in 0..n {
        let uy = if d == 2 { s.u[2 * i + 1] } else { 0.0 };
        writeln!(out, "{:e} {:e} 0e0", s.u[d * i], uy).unwrap();
    }
    let theta: Vec<f64> = (0..n).map(|i| mat.theta_ext(s.m[i], s.w[i])).collect();
    for (name, f) in [("m", &s.m), ("chi", &s.chi), ("mu", &s.mu), ("w", &s.w), ("theta", &theta)] {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for v in f.iter() {
            writeln!(out, "{v:e}").unwrap();
        }
    }
    out
}

/// Resolved configuration plus a `[manifest]` section with the provenance
/// of defaulted values.
pub fn manifest(cfg: &RunConfig, defaults: &[String], origin: &str, steps: usize, tau_max: f64) -> String {
    let mut root = to_table(cfg);
    let mut m = toml::Table::new();
    m.insert("tool".into(), Value::String(format!("hydride {}", env!("CARGO_PKG_VERSION"))));
    m.insert("origin".into(), Value::String(origin.into()));
    m.insert("steps".into(), Value::Integer(steps as i64));
    m.insert("tau_max".into(), Value::Float(tau_max));
    m.insert("defaults".into(), Value::Array(defaults.iter().map(|d| Value::String(d.clone())).collect()));
    root.insert("manifest".into(), Value::Table(m));
    toml::to_string(&root).expect("configuration tables always serialize")
}

/// Steps with a field snapshot: every `every_n`-th step and the last one.
pub fn snapshot_steps(steps: usize, every_n: usize) -> Vec<usize> {
    if every_n == 0 {
        return Vec::new();
    }
    let mut ks: Vec<usize> = (0..=steps).step_by(every_n).collect();
    if ks.last() != Some(&steps) {
        ks.push(steps);
    }
    ks
}

/// Writes all artifacts of a finished run into `dir` and returns the paths.
pub fn write_run(dir: &Path, cfg: &RunConfig, defaults: &[String], origin: &str, tr: &Trajectory) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    put("energy.csv".into(), energy_csv(&tr.ledger))?;
    for k in snapshot_steps(tr.num_steps(), cfg.output.every_n) {
        let s = &tr.states[k];
        put(format!("fields_{k:06}.csv"), fields_csv(&tr.mesh, &tr.material, s))?;
        if cfg.output.vtk {
            put(format!("fields_{k:06}.vtk"), vtk(&tr.mesh, &tr.material, s, &format!("step {k} t = {:e}", s.t)))?;
        }
    }
    put("run_manifest.toml".into(), manifest(cfg, defaults, origin, tr.num_steps(), cfg.tau_max(&tr.mesh)))?;
    Ok(written)
}
