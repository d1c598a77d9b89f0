//! Lab quantities with optional SI prefix and unit suffix, e.g. `18.3kHz`,
//! `2.0GHz/s`, `-500us`, `50MS/s`. A bare number is taken in base units.

fn prefix_scale(c: char) -> Option<f64> {
    Some(match c {
        'G' => 1e9,
        'M' => 1e6,
        'k' => 1e3,
        'm' => 1e-3,
        'u' | 'µ' => 1e-6,
        'n' => 1e-9,
        _ => return None,
    })
}

pub fn parse_quantity(raw: &str, unit: &str) -> Result<f64, String> {
    let s = raw.trim();
    let body = s.strip_suffix(unit).map(str::trim_end).unwrap_or(s);
    let (number, scale) = match body.chars().last() {
        Some(c) if body.len() < s.len() || c.is_alphabetic() => match prefix_scale(c) {
            Some(scale) => (&body[..body.len() - c.len_utf8()], scale),
            None if c.is_ascii_digit() || c == '.' => (body, 1.0),
            None => return Err(format!("unknown unit in {raw:?}; expected {unit}")),
        },
        _ => (body, 1.0),
    };
    let v: f64 = number.trim().parse().map_err(|_| format!("cannot parse {raw:?} as {unit}"))?;
    if !v.is_finite() {
        return Err(format!("{raw:?} is not finite"));
    }
    Ok(v * scale)
}

pub fn hz(s: &str) -> Result<f64, String> {
    parse_quantity(s, "Hz")
}

pub fn hz_per_s(s: &str) -> Result<f64, String> {
    parse_quantity(s, "Hz/s")
}

pub fn seconds(s: &str) -> Result<f64, String> {
    parse_quantity(s, "s")
}

pub fn samples_per_s(s: &str) -> Result<f64, String> {
    parse_quantity(s, "S/s")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(hz("18.3kHz").unwrap(), 18.3e3);
        assert_eq!(hz("2e6").unwrap(), 2e6);
        assert_eq!(hz("2 MHz").unwrap(), 2e6);
        assert_eq!(hz_per_s("2.0GHz/s").unwrap(), 2e9);
        assert_eq!(seconds("-500us").unwrap(), -500e-6);
        assert_eq!(seconds("-500µs").unwrap(), -500e-6);
        assert_eq!(seconds("3").unwrap(), 3.0);
        assert_eq!(samples_per_s("50MS/s").unwrap(), 50e6);
        assert!(hz("5kV").is_err());
        assert!(hz("fast").is_err());
    }
}
