//! CSV dumps of paths and crossing events.

use std::io::Write;

use super::events::CrossingEvent;
use crate::error::{LabError, Result};

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.16e}", x);
    let v: f64 = s.parse().expect("formatted float");
    // plain notation when the exponent is moderate
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let t = format!("{:.*}", decimals, v);
        if t.contains('.') {
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            t
        }
    } else {
        s
    }
}

fn io(e: std::io::Error) -> LabError {
    LabError::Domain(format!("write failed: {e}"))
}

/// Writes `k,S_k` rows.
pub fn write_path<W: Write>(out: &mut W, positions: impl IntoIterator<Item = f64>) -> Result<()> {
    writeln!(out, "k,S_k").map_err(io)?;
    for (k, s) in positions.into_iter().enumerate() {
        writeln!(out, "{},{}", k, fmt17(s)).map_err(io)?;
    }
    Ok(())
}

/// Writes `n,T_n,U_n,O_n,dir` rows. Collapsed undershoots are written as
/// `+inf` or `-inf`.
pub fn write_events<W: Write>(out: &mut W, events: &[CrossingEvent<f64>]) -> Result<()> {
    writeln!(out, "n,T_n,U_n,O_n,dir").map_err(io)?;
    for e in events {
        writeln!(
            out,
            "{},{},{},{},{}",
            e.index,
            e.time,
            fmt17(e.undershoot),
            fmt17(e.overshoot),
            e.direction.as_str()
        )
        .map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::crossings;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5, 1e-7, 123456.789, 7.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt17(0.1), "0.10000000000000001");
        assert_eq!(fmt17(7.0), "7");
    }

    #[test]
    fn headers_and_rows() {
        let mut buf = Vec::new();
        write_path(&mut buf, [0.0, 1.0, -1.0]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,S_k\n0,0\n1,1\n2,-1\n");
        let ev = crossings([0.0, 1.0, -1.0, 2.0].into_iter(), 5, 100).value;
        let mut buf = Vec::new();
        write_events(&mut buf, &ev).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,T_n,U_n,O_n,dir\n1,2,1,-1,down\n2,3,-1,2,up\n");
    }
}
