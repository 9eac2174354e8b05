//! Plot-ready CSV emission with reproducible comment headers, plus the flat
//! binary record dump.
//!
//! Every file starts with `# key = value` comment lines carrying the full
//! parameter set, seed, and toolkit version; floats are written with Rust's
//! shortest round-trip formatting, so a rerun from the header reproduces the
//! file byte for byte.

use std::io::{self, Write};

use crate::analytic::SpectrumCurve;
use crate::estimators::CorrelationEstimate;
use crate::photon::PhotonDistribution;
use crate::sde::TrajectoryEnsemble;

pub fn write_comment_header<W: Write>(w: &mut W, pairs: &[(&str, String)]) -> io::Result<()> {
    for (key, value) in pairs {
        writeln!(w, "# {key} = {value}")?;
    }
    Ok(())
}

/// `omega,value` rows; kind and floor travel in the comment header.
pub fn write_spectrum<W: Write>(
    w: &mut W,
    curve: &SpectrumCurve,
    extra: &[(&str, String)],
) -> io::Result<()> {
    write_comment_header(w, extra)?;
    write_comment_header(
        w,
        &[
            ("kind", curve.kind.to_string()),
            ("floor", curve.floor.to_string()),
        ],
    )?;
    writeln!(w, "omega,value")?;
    for (omega, value) in curve.omegas.iter().zip(&curve.values) {
        writeln!(w, "{omega},{value}")?;
    }
    Ok(())
}

/// `n,probability` rows.
pub fn write_pnd<W: Write>(
    w: &mut W,
    dist: &PhotonDistribution,
    extra: &[(&str, String)],
) -> io::Result<()> {
    write_comment_header(w, extra)?;
    write_comment_header(
        w,
        &[
            ("n_max", dist.n_max.to_string()),
            ("tail_bound", dist.tail_bound.to_string()),
        ],
    )?;
    writeln!(w, "n,probability")?;
    for (n, p) in dist.probs.iter().enumerate() {
        writeln!(w, "{n},{p}")?;
    }
    Ok(())
}

/// `lag,value,stderr` rows.
pub fn write_correlation<W: Write>(
    w: &mut W,
    corr: &CorrelationEstimate,
    extra: &[(&str, String)],
) -> io::Result<()> {
    write_comment_header(w, extra)?;
    write_comment_header(w, &[("kind", corr.kind.to_string())])?;
    writeln!(w, "lag,value,stderr")?;
    for ((lag, value), stderr) in corr.lags.iter().zip(&corr.values).zip(&corr.std_errs) {
        writeln!(w, "{lag},{value},{stderr}")?;
    }
    Ok(())
}

/// `n,rho_nn` rows of a density-matrix diagonal.
pub fn write_rho_diag<W: Write>(
    w: &mut W,
    diag: &[f64],
    extra: &[(&str, String)],
) -> io::Result<()> {
    write_comment_header(w, extra)?;
    writeln!(w, "n,rho_nn")?;
    for (n, p) in diag.iter().enumerate() {
        writeln!(w, "{n},{p}")?;
    }
    Ok(())
}

/// Generic aligned-column table (figure sweeps, validation summaries).
pub fn write_table<W: Write>(
    w: &mut W,
    columns: &[(&str, Vec<f64>)],
    extra: &[(&str, String)],
) -> io::Result<()> {
    write_comment_header(w, extra)?;
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    writeln!(w, "{}", names.join(","))?;
    let rows = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|(_, c)| c[i].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Flat binary dump of the raw records for offline analysis.
///
/// Layout: trajectory-major; for each trajectory, `n_steps` rows of four
/// little-endian f64 columns `(u_k, v_k, dW_R_plus_k, dW_R_minus_k)`, where
/// the state samples are taken at the start of step `k` (the increments
/// drive step `k -> k + 1`). No header bytes.
pub fn dump_records_binary<W: Write>(w: &mut W, ensemble: &TrajectoryEnsemble) -> io::Result<()> {
    for rec in &ensemble.records {
        for k in 0..ensemble.n_steps {
            w.write_all(&rec.u[k].to_le_bytes())?;
            w.write_all(&rec.v[k].to_le_bytes())?;
            w.write_all(&rec.dw_r_plus[k].to_le_bytes())?;
            w.write_all(&rec.dw_r_minus[k].to_le_bytes())?;
        }
    }
    Ok(())
}
