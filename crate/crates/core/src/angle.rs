//! Angle expressions such as `pi/4`, `-3pi/4`, `2*pi` or plain radians, and
//! inclusive `start:step:stop` grids built from them.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Parses decimal radians or a multiple of `pi` (`pi`, `-pi/2`, `3pi/4`,
/// `3*pi/4`, `0.5pi`).
pub fn parse_angle(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidAngle(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    let Some(pos) = s.find("pi") else {
        let v: f64 = s.parse().map_err(|_| bad())?;
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    };
    let (head, tail) = (&s[..pos], &s[pos + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let factor = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let divisor = match tail {
        "" => 1.0,
        t => {
            let d = t.strip_prefix('/').ok_or_else(bad)?;
            let d: f64 = d.parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            d
        }
    };
    let v = factor * PI / divisor;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// Parses `start:step:stop` into `start + i·step` for `i = 0..=round((stop-start)/step)`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = |m: &str| Error::InvalidParameter(format!("grid {text:?}: {m}"));
    match parts.as_slice() {
        [single] => Ok(vec![parse_angle(single)?]),
        [start, step, stop] => {
            let (start, step, stop) = (parse_angle(start)?, parse_angle(step)?, parse_angle(stop)?);
            if step <= 0.0 {
                return Err(bad("step must be positive"));
            }
            let span = (stop - start) / step;
            if span < -1e-9 {
                return Err(bad("stop precedes start"));
            }
            let count = (span + 1e-9).floor() as usize;
            if count > 1_000_000 {
                return Err(bad("too many points"));
            }
            Ok((0..=count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad("expected start:step:stop")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_tokens() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        assert_eq!(parse_angle("0").unwrap(), 0.0);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "pie", "pi/0", "p", "x*pi", "pi/", "inf", "NaN"] {
            assert!(parse_angle(s).is_err(), "{s}");
        }
    }

    #[test]
    fn grid_of_quarter_turns() {
        let g = parse_grid("0:pi/4:2pi").unwrap();
        assert_eq!(g.len(), 9);
        for (n, v) in g.iter().enumerate() {
            assert_eq!(*v, n as f64 * PI / 4.0);
        }
        assert_eq!(parse_grid("pi/3").unwrap(), vec![PI / 3.0]);
        assert!(parse_grid("0:0:1").is_err());
        assert!(parse_grid("1:0.1:0").is_err());
        assert!(parse_grid("0:1").is_err());
    }
}
