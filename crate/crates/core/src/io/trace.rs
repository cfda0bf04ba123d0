//! CSV traces (`t,vehicle_id,x,v`) and diagram series (`rho,v_eq,q`).
//!
//! Floats are written with 17 significant digits, which round-trips every `f64`.

use std::io::{BufRead, Write};

use crate::analysis::DiagramSeries;
use crate::error::{Error, Result};
use crate::model::PassingEvent;
use crate::numeric::{SimTrace, TraceSamples};

pub const TRACE_HEADER: &str = "t,vehicle_id,x,v";
pub const DIAGRAM_HEADER: &str = "rho,v_eq,q";
pub const EVENTS_HEADER: &str = "t,passer,passed";

fn write_err(e: std::io::Error) -> Error {
    Error::io("writing CSV", e)
}

/// Writes one row per (sample, vehicle), sorted by time then id.
pub fn write_samples<W: Write>(samples: &TraceSamples, sink: &mut W) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot write an empty trace"));
    }
    let mut out = std::io::BufWriter::new(sink);
    writeln!(out, "{TRACE_HEADER}").map_err(write_err)?;
    for k in 0..samples.len() {
        let t = samples.times[k];
        for (id, (x, v)) in samples
            .positions(k)
            .iter()
            .zip(samples.velocities(k))
            .enumerate()
        {
            writeln!(out, "{t:.16e},{id},{x:.16e},{v:.16e}").map_err(write_err)?;
        }
    }
    out.flush().map_err(write_err)
}

pub fn write_trace<W: Write>(trace: &SimTrace, sink: &mut W) -> Result<()> {
    write_samples(&trace.samples, sink)
}

/// Inverse of [`write_samples`].
pub fn read_trace<R: BufRead>(source: R) -> Result<TraceSamples> {
    let mut lines = source.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io("reading trace", e))?
        .ok_or_else(|| Error::invalid("trace is empty"))?;
    if header != TRACE_HEADER {
        return Err(Error::invalid(format!(
            "line 1: expected header \"{TRACE_HEADER}\", found \"{header}\""
        )));
    }
    let mut rows: Vec<(f64, usize, f64, f64)> = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.map_err(|e| Error::io("reading trace", e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::invalid(format!(
                "line {lineno}: expected 4 fields, found {}",
                fields.len()
            )));
        }
        let float = |s: &str, name: &str| {
            s.parse::<f64>().map_err(|_| {
                Error::invalid(format!("line {lineno}: {name} \"{s}\" is not a number"))
            })
        };
        let id = fields[1].parse::<usize>().map_err(|_| {
            Error::invalid(format!(
                "line {lineno}: vehicle_id \"{}\" is not an index",
                fields[1]
            ))
        })?;
        rows.push((
            float(fields[0], "t")?,
            id,
            float(fields[2], "x")?,
            float(fields[3], "v")?,
        ));
    }
    if rows.is_empty() {
        return Err(Error::invalid("trace has a header but no rows"));
    }
    let n = rows
        .iter()
        .take_while(|r| r.0.to_bits() == rows[0].0.to_bits())
        .count();
    if !rows.len().is_multiple_of(n) {
        return Err(Error::invalid(format!(
            "{} rows do not split into samples of {n} vehicles",
            rows.len()
        )));
    }
    let mut samples = TraceSamples::new(n);
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; n];
    for (s, chunk) in rows.chunks(n).enumerate() {
        let t = chunk[0].0;
        for (id, row) in chunk.iter().enumerate() {
            if row.1 != id || row.0.to_bits() != t.to_bits() {
                return Err(Error::invalid(format!(
                    "line {}: rows must be sorted by (t, vehicle_id) with ids 0..{n}",
                    s * n + id + 2
                )));
            }
            x[id] = row.2;
            v[id] = row.3;
        }
        if let Some(&prev) = samples.times.last() {
            if !(t > prev) {
                return Err(Error::invalid(format!(
                    "line {}: times must increase",
                    s * n + 2
                )));
            }
        }
        samples.push(t, &x, &v);
    }
    Ok(samples)
}

pub fn write_events<W: Write>(events: &[PassingEvent], sink: &mut W) -> Result<()> {
    let mut out = std::io::BufWriter::new(sink);
    writeln!(out, "{EVENTS_HEADER}").map_err(write_err)?;
    for e in events {
        writeln!(out, "{:.16e},{},{}", e.t, e.passer, e.passed).map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

pub fn write_diagram<W: Write>(series: &DiagramSeries, sink: &mut W) -> Result<()> {
    let mut out = std::io::BufWriter::new(sink);
    writeln!(out, "{DIAGRAM_HEADER}").map_err(write_err)?;
    for p in &series.points {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", p.rho, p.v_eq, p.q).map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Topology;

    fn sample_trace() -> SimTrace {
        let mut samples = TraceSamples::new(2);
        samples.push(0.0, &[10.0, 0.1], &[4.0, 1.0 / 3.0]);
        samples.push(0.25, &[11.0, -1e-300], &[4.0, f64::MIN_POSITIVE]);
        SimTrace {
            samples,
            topology: Topology::OpenLink,
            events: Vec::new(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let trace = sample_trace();
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,vehicle_id,x,v\n"));
        assert_eq!(text.lines().count(), 5);
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back, trace.samples);
    }

    #[test]
    fn one_vehicle_two_samples() {
        let mut samples = TraceSamples::new(1);
        samples.push(0.0, &[0.0], &[5.0]);
        samples.push(1.0, &[5.0], &[5.0]);
        let mut buf = Vec::new();
        write_samples(&samples, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn malformed_input_is_located() {
        let err = read_trace("t,vehicle_id,x,v\n0,0,1,x\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(read_trace("t,x\n".as_bytes()).is_err());
        assert!(write_samples(&TraceSamples::new(3), &mut Vec::new()).is_err());
    }
}
