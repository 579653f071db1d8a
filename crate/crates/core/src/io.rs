//! CSV tables and the binary field dump.
//!
//! Field dumps start with the magic `CLSF`, a `u32` version, then `d`, `n`
//! and the value count as `u64`, followed by little-endian `f64` values.
//! Solver fields are in DOF order (fluid cells row-major, then inclusions);
//! spectral fields list every cell row-major.

use std::io::{Read, Write};

use crate::ensemble::SweepRow;
use crate::error::{Error, Result};
use crate::oracles::RadialProfile;
use crate::pointgen::PointSet;

pub const FIELD_MAGIC: &[u8; 4] = b"CLSF";
pub const FIELD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub dim: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

pub fn write_field<W: Write>(mut w: W, dim: usize, n: usize, values: &[f64]) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&FIELD_VERSION.to_le_bytes())?;
    for v in [dim as u64, n as u64, values.len() as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<FieldDump> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Config("not a field dump (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FIELD_VERSION {
        return Err(Error::Config(format!("unsupported field dump version {version}")));
    }
    let mut b8 = [0u8; 8];
    let mut header = [0u64; 3];
    for h in header.iter_mut() {
        r.read_exact(&mut b8)?;
        *h = u64::from_le_bytes(b8);
    }
    let count = header[2] as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::ShapeMismatch { expected: count * 8, got: bytes.len() });
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(FieldDump { dim: header[0] as usize, n: header[1] as usize, values })
}

/// One row per point, columns `x1..xd`.
pub fn write_points_csv<W: Write>(mut w: W, ps: &PointSet) -> Result<()> {
    let header: Vec<String> = (1..=ps.dim).map(|k| format!("x{k}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for p in ps.points() {
        let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_profile_csv<W: Write>(mut w: W, profile: &RadialProfile) -> Result<()> {
    writeln!(w, "r,v")?;
    for (r, v) in profile.radii.iter().zip(&profile.values) {
        writeln!(w, "{r},{v}")?;
    }
    Ok(())
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "T",
    "L",
    "n",
    "realizations",
    "u_bar",
    "u_bar_se",
    "var_ui",
    "var_ui_se",
    "energy_dirichlet",
    "identity_mean0",
    "identity_energy",
];

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{}", SWEEP_COLUMNS.join(","))?;
    for row in rows {
        let s = &row.stats;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.t,
            s.l,
            s.n,
            s.realizations_used,
            s.u_bar.mean,
            s.u_bar.se,
            s.var_ui.mean,
            s.var_ui.se,
            s.mean_energy_dirichlet,
            s.identity_mean0,
            s.identity_energy
        )?;
    }
    Ok(())
}

/// Per-realization summaries of one ensemble.
pub fn write_realizations_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(
        w,
        "T,index,seed,points,inclusions,theta_h,u_bar,count,mean_ui,m2_ui,energy_dirichlet,energy_massive,iterations,decay_slope"
    )?;
    for row in rows {
        for r in &row.stats.records {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                row.t,
                r.index,
                r.seed,
                r.points,
                r.inclusions,
                r.theta_h,
                opt(r.u_bar),
                r.moments.count,
                r.moments.mean,
                r.moments.m2,
                r.energy_dirichlet,
                r.energy_massive,
                r.iterations,
                opt(r.decay_slope)
            )?;
        }
    }
    Ok(())
}
