//! Argument grammars: complex literals, regions and q grids.

use num_complex::Complex64;
use partial_theta::{Contour, QParam, Region};

fn number(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("cannot read {what} from '{s}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what} must be finite, got '{s}'"))
    }
}

/// `RE{+|-}IMi`, a bare real `RE`, or a bare imaginary `IMi`. Whitespace is
/// ignored and both parts accept scientific notation.
pub fn complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(Complex64::new(number(&t, "real part")?, 0.0));
    };
    let bytes = body.as_bytes();
    // Last sign that is neither leading nor part of an exponent.
    let split =
        (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (number(&body[..k], "real part")?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => number(other, "imaginary part")?,
    };
    Ok(Complex64::new(re, im))
}

fn fields(s: &str, n: usize, shape: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != n {
        return Err(format!("expected {shape}, got '{s}'"));
    }
    parts.iter().map(|p| number(p, "region bound")).collect()
}

/// `halfdisk:R` | `rect:x0,x1,y0,y1` | `circle:cx,cy,r`.
pub fn region(s: &str) -> Result<Region, String> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| format!("region '{s}' lacks a ':'"))?;
    let r = match kind.trim() {
        "halfdisk" => Contour::right_half_disk(number(rest, "radius")?),
        "rect" => {
            let v = fields(rest, 4, "rect:x0,x1,y0,y1")?;
            Contour::rectangle(v[0], v[1], v[2], v[3])
        }
        "circle" => {
            let v = fields(rest, 3, "circle:cx,cy,r")?;
            Contour::circle(Complex64::new(v[0], v[1]), v[2])
        }
        other => return Err(format!("unknown region kind '{other}' (halfdisk, rect, circle)")),
    };
    r.map_err(|e| e.to_string())
}

/// Comma-separated items, each `start:stop:step` or a single value.
pub fn grid(s: &str) -> Result<Vec<QParam>, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        let values = match parts.as_slice() {
            [v] => vec![number(v, "q")?],
            [a, b, h] => {
                let (start, stop, step) = (number(a, "grid start")?, number(b, "grid stop")?, number(h, "grid step")?);
                if step <= 0.0 || stop < start {
                    return Err(format!("grid '{item}' needs step > 0 and start <= stop"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                if count > 100_000 {
                    return Err(format!("grid '{item}' has too many points"));
                }
                // Round away the drift of start + k·step.
                (0..=count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect()
            }
            _ => return Err(format!("grid item '{item}' is neither start:stop:step nor a value")),
        };
        for v in values {
            out.push(QParam::new(v).map_err(|e| format!("grid point {v}: {e}"))?);
        }
    }
    Ok(out)
}
