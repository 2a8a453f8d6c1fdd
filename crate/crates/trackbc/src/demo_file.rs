//! Demonstration text files.
//!
//! The first line is the JSON metadata record. Every following line is one
//! control tick: `t,yaw,pitch,roll,distance,u_a,u_s,u_m`, with `t` and the
//! distance to 0.1 and the angles to 0.01.

use std::fmt::Write as _;
use std::path::Path;

use trackbc_core::demo::{DemoMeta, DemoRecord, Demonstration, DEMO_FORMAT_VERSION};
use trackbc_core::domain::{ActionTriple, Observation};

use crate::{fsio, Error, Result};

// -0.0 would print as "-0.00"
fn z(v: f64) -> f64 {
    v + 0.0
}

pub fn demo_to_string(demo: &Demonstration) -> String {
    let mut out = serde_json::to_string(&demo.meta).expect("metadata serializes");
    out.push('\n');
    for r in &demo.records {
        let o = r.obs;
        let a = r.action;
        writeln!(
            out,
            "{:.1},{:.2},{:.2},{:.2},{:.1},{},{},{}",
            z(r.t),
            z(o.yaw),
            z(o.pitch),
            z(o.roll),
            z(o.distance),
            a.u_a(),
            a.u_s(),
            a.u_m()
        )
        .expect("writing to a String");
    }
    out
}

fn parse_record(line: &str) -> std::result::Result<DemoRecord, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 8 {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    }
    let num = |i: usize, name: &str| {
        fields[i]
            .parse::<f64>()
            .map_err(|_| format!("{name}: not a number: {:?}", fields[i]))
    };
    let chan = |i: usize, name: &str| {
        fields[i]
            .parse::<i8>()
            .map_err(|_| format!("{name}: not an integer: {:?}", fields[i]))
    };
    let obs = Observation::new(
        num(1, "yaw")?,
        num(2, "pitch")?,
        num(3, "roll")?,
        num(4, "distance")?,
    )
    .map_err(|e| e.to_string())?;
    let action = ActionTriple::new(chan(5, "u_a")?, chan(6, "u_s")?, chan(7, "u_m")?)
        .map_err(|e| e.to_string())?;
    Ok(DemoRecord {
        t: num(0, "t")?,
        obs,
        action,
    })
}

/// Parse a demo file and check its format invariants.
pub fn parse_demo(text: &str, path: &Path) -> Result<Demonstration> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let meta: DemoMeta =
        serde_json::from_str(head).map_err(|e| Error::parse(path, 1, format!("metadata: {e}")))?;
    if meta.version != DEMO_FORMAT_VERSION {
        return Err(Error::parse(
            path,
            1,
            format!("unsupported demo version {}", meta.version),
        ));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_record(line).map_err(|m| Error::parse(path, i + 1, m))?);
    }
    let demo = Demonstration { meta, records };
    demo.validate()?;
    Ok(demo)
}

pub fn read_demo(path: &Path) -> Result<Demonstration> {
    parse_demo(&fsio::read_to_string(path)?, path)
}

pub fn write_demo(path: &Path, demo: &Demonstration) -> Result<()> {
    fsio::atomic_write(path, demo_to_string(demo).as_bytes())
}
