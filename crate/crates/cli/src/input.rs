//! Parsing of overlap and prior arguments.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use seqdisc::Overlap;

/// One overlap as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum OverlapInput {
    Decimal(f64),
    /// `p/q`; enables exact regime tracking.
    Rational(BigRational),
    /// `s@theta`, theta in radians.
    Polar { s: f64, theta: f64 },
}

impl OverlapInput {
    pub fn overlap(&self) -> Result<Overlap, String> {
        let result = match self {
            OverlapInput::Decimal(c) => Overlap::real(*c),
            OverlapInput::Rational(q) => Overlap::real(q.to_f64().unwrap_or(f64::NAN)),
            OverlapInput::Polar { s, theta } => Overlap::polar(*s, *theta),
        };
        result.map_err(|e| e.to_string())
    }

    pub fn rational(&self) -> Option<&BigRational> {
        match self {
            OverlapInput::Rational(q) => Some(q),
            _ => None,
        }
    }
}

fn parse_f64(text: &str, what: &str) -> Result<f64, String> {
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse {what} `{text}`"))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{what} `{text}` is not finite"))
    }
}

/// `p/q` with integer `p` and nonzero `q`.
fn parse_fraction(text: &str) -> Option<BigRational> {
    let (p, q) = text.split_once('/')?;
    let p: BigInt = p.trim().parse().ok()?;
    let q: BigInt = q.trim().parse().ok()?;
    if q.is_zero() {
        return None;
    }
    Some(BigRational::new(p, q))
}

/// Plain decimal literal (`-0.125`, `3`, `.5`) read exactly.
fn parse_decimal_exact(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|ch| ch.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{int}{frac}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(digits, scale);
    Some(if negative { -value } else { value })
}

/// Angle in radians: a decimal, or `[k]pi[/m]` such as `pi/3` or `-2pi/3`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let Some(idx) = text.find("pi") else {
        return parse_f64(text, "angle");
    };
    let coefficient = match text[..idx].trim().trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => parse_f64(other, "angle coefficient")?,
    };
    let rest = text[idx + 2..].trim();
    let denominator = if rest.is_empty() {
        1.0
    } else {
        let den = rest
            .strip_prefix('/')
            .ok_or_else(|| format!("cannot parse angle `{text}`"))?;
        parse_f64(den, "angle denominator")?
    };
    if denominator == 0.0 {
        return Err(format!("angle `{text}` divides by zero"));
    }
    Ok(coefficient * PI / denominator)
}

pub fn parse_overlap(text: &str) -> Result<OverlapInput, String> {
    let text = text.trim();
    if let Some((s, theta)) = text.split_once('@') {
        return Ok(OverlapInput::Polar {
            s: parse_f64(s, "overlap magnitude")?,
            theta: parse_angle(theta)?,
        });
    }
    if text.contains('/') {
        return parse_fraction(text)
            .map(OverlapInput::Rational)
            .ok_or_else(|| format!("cannot parse rational overlap `{text}`"));
    }
    parse_f64(text, "overlap").map(OverlapInput::Decimal)
}

/// Comma-separated list of overlaps, one per copy.
pub fn parse_overlap_list(text: &str) -> Result<Vec<OverlapInput>, String> {
    text.split(',').map(parse_overlap).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    pub values: Vec<f64>,
    /// Exact values when every entry is a fraction or a plain decimal.
    pub exact: Option<Vec<BigRational>>,
}

/// Comma-separated priors; uniform when absent.
pub fn parse_priors(text: Option<&str>, r: usize) -> Result<Priors, String> {
    let Some(text) = text else {
        let exact = vec![BigRational::new(BigInt::one(), BigInt::from(r)); r];
        return Ok(Priors {
            values: vec![1.0 / r as f64; r],
            exact: Some(exact),
        });
    };
    let tokens: Vec<&str> = text.split(',').map(str::trim).collect();
    if tokens.len() != r {
        return Err(format!("expected {r} priors, found {}", tokens.len()));
    }
    let mut values = Vec::with_capacity(r);
    let mut exact = Some(Vec::with_capacity(r));
    for token in tokens {
        let q = if token.contains('/') {
            Some(parse_fraction(token).ok_or_else(|| format!("cannot parse prior `{token}`"))?)
        } else {
            parse_decimal_exact(token)
        };
        let value = match &q {
            Some(q) if token.contains('/') => q.to_f64().unwrap_or(f64::NAN),
            _ => parse_f64(token, "prior")?,
        };
        values.push(value);
        match (q, exact.as_mut()) {
            (Some(q), Some(list)) => list.push(q),
            _ => exact = None,
        }
    }
    seqdisc::ensemble::validate_priors(&values, r).map_err(|e| e.to_string())?;
    Ok(Priors { values, exact })
}
