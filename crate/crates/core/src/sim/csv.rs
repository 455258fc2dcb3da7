use std::io::{self, Write};

use crate::scalar::Real;

use super::closed_loop::ClosedLoopTrace;

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

/// Writes one header line and one line per step. Solver wall-clock time is
/// deliberately left out so identical runs produce identical files.
pub fn write_trace_csv<T: Real, W: Write>(trace: &ClosedLoopTrace<T>, mut out: W) -> io::Result<()> {
    let first = trace.rows.first();
    let (ns, nx, nu) = first.map_or((0, 0, 0), |r| (r.s.len(), r.x.len(), r.u.len()));
    let mut header = vec!["k".to_string(), "t".to_string()];
    header.extend((0..ns).map(|i| format!("s_{i}")));
    header.extend((0..nx).map(|i| format!("x_plant_{i}")));
    header.extend((0..nu).map(|i| format!("u_applied_{i}")));
    header.extend(["omega", "feasG", "auglag", "M_used", "D", "rho", "dt", "seed"].map(String::from));
    writeln!(out, "{}", header.join(","))?;

    let m = &trace.meta;
    for r in &trace.rows {
        let mut cells = vec![r.k.to_string(), fmt_real(r.t)];
        cells.extend(r.s.iter().map(|&v| fmt_real(v)));
        cells.extend(r.x.iter().map(|&v| fmt_real(v)));
        cells.extend(r.u.iter().map(|&v| fmt_real(v)));
        cells.extend([fmt_real(r.omega), fmt_real(r.feasibility), fmt_real(r.aug_lagrangian)]);
        cells.extend([r.sweeps_used.to_string(), m.stages.to_string(), fmt_real(m.rho), fmt_real(m.dt), m.seed.to_string()]);
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
