use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::Trajectory;

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("trajectory csv: {e}"))
}

/// Writes `t,x1,..,xp` with one row per sample and `t = iη`. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=traj.p()).map(|k| format!("x{k}")))
        .collect();
    w.write_record(&header).map_err(io_err)?;
    for (i, col) in traj.x.column_iter().enumerate() {
        let row: Vec<String> = std::iter::once(i as f64 * traj.eta)
            .chain(col.iter().copied())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Reads the format produced by [`write_trajectory_csv`]; lines starting
/// with `#` are skipped. Times must be uniformly spaced; the spacing becomes
/// the sampling step.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = rdr.headers().map_err(io_err)?.clone();
    let p = header.len().saturating_sub(1);
    let expected = std::iter::once("t".to_string()).chain((1..=p).map(|k| format!("x{k}")));
    if p == 0 || !header.iter().map(str::trim).eq(expected) {
        return Err(io_err("header must be t,x1,..,xp"));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let parsed: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| io_err(format!("row {}: {e}", row + 2)))?;
        times.push(parsed[0]);
        values.extend_from_slice(&parsed[1..]);
    }
    if times.len() < 2 {
        return Err(io_err("need at least two samples"));
    }
    let eta = times[1] - times[0];
    for (i, t) in times.iter().enumerate() {
        let want = times[0] + i as f64 * eta;
        if (t - want).abs() > 1e-9 * want.abs().max(eta) {
            return Err(io_err(format!("row {}: times are not uniformly spaced", i + 2)));
        }
    }
    let x = Matrix::from_column_slice(p, times.len(), &values);
    Trajectory::new(x, None, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_illustrative;
    use crate::simulate::{simulate_continuous, ContinuousMode, SimOptions};

    #[test]
    fn round_trip_is_exact() {
        let sys = gen_illustrative(4, 2).unwrap();
        let traj = simulate_continuous(&sys, 0.1, ContinuousMode::Exact, &SimOptions::new(30, 2)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2,x3,x4\n0,0,0,0,0\n"));
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.x, traj.x);
        assert!((back.eta - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_trajectory_csv("t,y1\n0,1\n1,2\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,x1\n0,1\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,x1\n0,1\n1,2\n3,4\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,x1\n0,1\n1,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn skips_comment_lines() {
        let traj = read_trajectory_csv("# seed 4\nt,x1\n0,1\n# mid\n0.5,2\n".as_bytes()).unwrap();
        assert_eq!(traj.x.as_slice(), &[1.0, 2.0]);
        assert_eq!(traj.eta, 0.5);
    }
}
