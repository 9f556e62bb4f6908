//! Text output shared by the CLI and the FFI layer.

use std::io::{self, Write};

use crate::flow::OrbitTrace;
use crate::geometry::ProfileCurve;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_csv<W: Write>(trace: &OrbitTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "s,alpha,k")?;
    for p in &trace.samples {
        writeln!(out, "{},{},{}", num(p.s), num(p.alpha), num(p.k))?;
    }
    Ok(())
}

pub fn write_profile_csv<W: Write>(profile: &ProfileCurve, mut out: W) -> io::Result<()> {
    writeln!(out, "s,r,t,alpha,k")?;
    for p in &profile.samples {
        writeln!(out, "{},{},{},{},{}", num(p.s), num(p.r), num(p.t), num(p.alpha), num(p.k))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_bitwise() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, f64::MAX, -0.0] {
            let back: f64 = num(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }
}
