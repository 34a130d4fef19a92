//! Action-spec files (TOML) and the bundled presets.
//!
//! ```toml
//! min_poly = [1, 0, -2]          # highest degree first
//! precision = 128                # optional, bits
//! generators = [["-1", "1"]]     # power-basis coordinates, constant term first
//! ```

use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::{Error, Result};
use crate::field::{FieldElement, NumberField};

pub const DEFAULT_PRECISION: u32 = 128;

const OCTIC: &str = include_str!("../presets/octic.toml");
const CUBIC_CARTAN: &str = include_str!("../presets/cubic-cartan.toml");

pub const PRESET_NAMES: [&str; 2] = ["cubic-cartan", "octic"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionFile {
    pub min_poly: Vec<i64>,
    #[serde(default)]
    pub precision: Option<u32>,
    #[serde(default)]
    pub generators: Vec<Vec<String>>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

impl ActionFile {
    pub fn parse(text: &str) -> Result<ActionFile> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ActionFile> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn preset(name: &str) -> Result<ActionFile> {
        match name {
            "octic" => Self::parse(OCTIC),
            "cubic-cartan" => Self::parse(CUBIC_CARTAN),
            _ => Err(Error::InvalidParameter(format!("unknown preset '{name}' (known: {})", PRESET_NAMES.join(", ")))),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("action file serializes")
    }

    pub fn precision(&self) -> u32 {
        self.precision.unwrap_or(DEFAULT_PRECISION)
    }

    pub fn build_field(&self) -> Result<NumberField> {
        let c: Vec<BigInt> = self.min_poly.iter().map(|&x| BigInt::from(x)).collect();
        NumberField::build(&c, self.precision())
    }

    pub fn generator_elements(&self, field: &NumberField) -> Result<Vec<FieldElement>> {
        let d = field.degree();
        self.generators
            .iter()
            .enumerate()
            .map(|(k, g)| {
                if g.len() != d {
                    return Err(Error::Dimension(format!("generator {} has {} coordinates, expected {d}", k + 1, g.len())));
                }
                let c = g.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
                field.element(c)
            })
            .collect()
    }

    pub fn build(&self) -> Result<Action> {
        let field = self.build_field()?;
        let gens = self.generator_elements(&field)?;
        Action::build(field, gens)
    }
}

/// Parses `"p/q"`, `"p"`, or a comma-free decimal like `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let err = || Error::Parse(format!("invalid rational '{s}'"));
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
        if q == BigInt::from(0) {
            return Err(err());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let n = BigInt::from_str(&digits).map_err(|_| err())?;
        let v = BigRational::new(n, BigInt::from(10).pow(fp.len() as u32));
        return Ok(if neg { -v } else { v });
    }
    Ok(BigRational::from_integer(BigInt::from_str(t).map_err(|_| err())?))
}

/// Parses a comma-separated list of rationals.
pub fn parse_rational_list(s: &str) -> Result<Vec<BigRational>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_rational).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1) / q(2));
        assert_eq!(parse_rational("-7").unwrap(), q(-7));
        assert_eq!(parse_rational("-0.25").unwrap(), q(-1) / q(4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(parse_rational_list("1/3, 2/3").unwrap().len(), 2);
    }

    #[test]
    fn round_trip() {
        let f = ActionFile::preset("cubic-cartan").unwrap();
        assert_eq!(ActionFile::parse(&f.to_toml()).unwrap(), f);
        assert!(ActionFile::preset("nope").is_err());
    }

    #[test]
    fn presets_build() {
        let a = ActionFile::preset("cubic-cartan").unwrap().build().unwrap();
        assert_eq!((a.degree(), a.rank()), (3, 2));
        let o = ActionFile::preset("octic").unwrap().build().unwrap();
        assert_eq!((o.degree(), o.rank(), o.places()), (8, 4, 5));
    }
}
