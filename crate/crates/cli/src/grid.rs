//! Grid specifications for the batch commands.

use crate::error::{invalid, CliResult};

pub const DEFAULT_B: [f64; 3] = [1.2, 1.5, 1.8];
pub const DEFAULT_DELTA: [f64; 3] = [0.05, 0.1, 0.2];
pub const DEFAULT_SEEDS: (usize, usize) = (7, 7);

/// `"1,2,3"` or `"start:stop:count"` (inclusive, evenly spaced).
fn parse_values(key: &str, s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return invalid(format!("grid axis {key} is empty"));
    }
    let num = |t: &str| -> CliResult<f64> {
        match t.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => invalid(format!("grid axis {key}: {t:?} is not a number")),
        }
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return invalid(format!("grid axis {key}: expected start:stop:count"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .or_else(|_| invalid(format!("grid axis {key}: bad count {:?}", parts[2])))?;
        return match n {
            0 => invalid(format!("grid axis {key} is empty")),
            1 => Ok(vec![lo]),
            _ => Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()),
        };
    }
    s.split(',').map(num).collect()
}

/// `(B values, δ values)` from `"default"` or `"B=...;delta=..."`; a missing
/// axis keeps its default.
pub fn parse_b_delta(spec: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut bs = DEFAULT_B.to_vec();
    let mut ds = DEFAULT_DELTA.to_vec();
    let spec = spec.trim();
    if spec == "default" {
        return Ok((bs, ds));
    }
    if spec.is_empty() {
        return invalid("empty grid");
    }
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        let Some((k, v)) = part.split_once('=') else {
            return invalid(format!("grid entry {part:?} is not key=values"));
        };
        match k.trim() {
            "B" => bs = parse_values("B", v)?,
            "delta" => ds = parse_values("delta", v)?,
            other => return invalid(format!("unknown grid axis {other:?} (expected B or delta)")),
        }
    }
    Ok((bs, ds))
}

/// `(columns, rows)` of orbit seeds from `"default"` or `"NxM"`.
pub fn parse_seed_grid(spec: &str) -> CliResult<(usize, usize)> {
    let spec = spec.trim();
    if spec == "default" {
        return Ok(DEFAULT_SEEDS);
    }
    let Some((c, r)) = spec.split_once('x') else {
        return invalid(format!("grid {spec:?} is not of the form NxM"));
    };
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .or_else(|_| invalid(format!("grid {spec:?}: bad size {t:?}")))
    };
    let (c, r) = (parse(c)?, parse(r)?);
    if c == 0 || r == 0 {
        return invalid(format!("empty grid {spec:?}"));
    }
    Ok((c, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_delta_forms() {
        assert_eq!(
            parse_b_delta("default").unwrap(),
            (DEFAULT_B.to_vec(), DEFAULT_DELTA.to_vec())
        );
        let (b, d) = parse_b_delta("B=1.1,1.3;delta=0:0.2:3").unwrap();
        assert_eq!(b, vec![1.1, 1.3]);
        assert_eq!(d, vec![0.0, 0.1, 0.2]);
        let (b, d) = parse_b_delta("delta=-0.1").unwrap();
        assert_eq!(b, DEFAULT_B.to_vec());
        assert_eq!(d, vec![-0.1]);
    }

    #[test]
    fn empty_or_malformed_grids_are_rejected() {
        for s in ["", "B=", "B=1:2:0", "x=1", "B=a"] {
            assert!(parse_b_delta(s).is_err(), "{s}");
        }
        for s in ["0x3", "3x0", "", "3", "ax2"] {
            assert!(parse_seed_grid(s).is_err(), "{s}");
        }
        assert_eq!(parse_seed_grid("4x5").unwrap(), (4, 5));
    }
}
