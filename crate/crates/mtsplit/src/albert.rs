//! Arithmetic invariants of an absolutely simple abelian variety.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlbertType {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for AlbertType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlbertType::I => "I",
            AlbertType::II => "II",
            AlbertType::III => "III",
            AlbertType::IV => "IV",
        };
        f.write_str(s)
    }
}

fn one() -> u32 {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_one(n: &u32) -> bool {
    *n == 1
}

/// One absolutely simple factor: `End⁰` is central simple of degree `d²`
/// over a field `E` of degree `e` with maximal totally real subfield of degree `e0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorDescriptor {
    pub label: String,
    #[serde(rename = "dim")]
    pub dimension: u32,
    #[serde(rename = "type")]
    pub albert_type: AlbertType,
    pub e: u32,
    pub d: u32,
    pub e0: u32,
    #[serde(default, skip_serializing_if = "is_false")]
    pub cm: bool,
    #[serde(rename = "end_Z", default, skip_serializing_if = "is_false")]
    pub end_z: bool,
    #[serde(rename = "mult", default = "one", skip_serializing_if = "is_one")]
    pub multiplicity: u32,
}

impl FactorDescriptor {
    pub fn new(label: &str, dimension: u32, albert_type: AlbertType, e: u32, d: u32, e0: u32) -> Self {
        let mut f = FactorDescriptor {
            label: label.to_string(),
            dimension,
            albert_type,
            e,
            d,
            e0,
            cm: false,
            end_z: false,
            multiplicity: 1,
        };
        f.end_z = f.has_trivial_endomorphisms();
        f
    }

    pub fn elliptic(label: &str) -> Self {
        Self::new(label, 1, AlbertType::I, 1, 1, 1)
    }

    pub fn cm(label: &str, dimension: u32) -> Self {
        let mut f = Self::new(label, dimension, AlbertType::IV, 2 * dimension, 1, dimension);
        f.cm = true;
        f
    }

    pub fn with_multiplicity(mut self, k: u32) -> Self {
        self.multiplicity = k;
        self
    }

    /// `End = Z` over the algebraic closure. Type I with `e = 1` forces it,
    /// so the flag is implied there even when not set.
    pub fn has_trivial_endomorphisms(&self) -> bool {
        self.end_z || (self.albert_type == AlbertType::I && self.e == 1 && self.d == 1)
    }

    pub fn is_type_iv(&self) -> bool {
        self.albert_type == AlbertType::IV
    }

    /// `g / (d·e0)`, or `None` when the division is not exact.
    pub fn relative_dimension_checked(&self) -> Option<u32> {
        let de0 = self.d.checked_mul(self.e0)?;
        (de0 != 0 && self.dimension.is_multiple_of(de0)).then(|| self.dimension / de0)
    }

    pub fn relative_dimension(&self) -> Result<u32, AlbertError> {
        self.relative_dimension_checked()
            .ok_or(AlbertError::InvalidDescriptor(Violation::DivisibilityFailure))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldContext {
    #[serde(rename = "char", default)]
    pub characteristic: u64,
    #[serde(rename = "ordinary", default)]
    pub ordinary_reduction_dim1: bool,
}

impl FieldContext {
    pub fn char0() -> Self {
        FieldContext { characteristic: 0, ordinary_reduction_dim1: false }
    }

    pub fn char_p(p: u64, ordinary: bool) -> Self {
        FieldContext { characteristic: p, ordinary_reduction_dim1: ordinary }
    }

    pub fn is_char0(&self) -> bool {
        self.characteristic == 0
    }

    pub fn is_valid(&self) -> bool {
        self.characteristic == 0 || is_prime(self.characteristic)
    }
}

impl Default for FieldContext {
    fn default() -> Self {
        Self::char0()
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u64;
    while k.saturating_mul(k) <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    NonPositiveField,
    TypeIRequiresD1,
    TypeIIOrIIIRequiresD2,
    TotallyRealCenter,
    CmFieldCenter,
    DivisibilityFailure,
    CmRequiresTypeIV,
    CmRequiresMaximalField,
    RelativeDimensionOneTypeIVIsCm,
    TrivialEndomorphismsShape,
    TypeIIISurfaceChar0,
    TypeIIIRelativeDimensionOneChar0,
    ImaginaryQuadraticSurface,
    InvalidCharacteristic,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Violation::NonPositiveField => "dim, e, d, e0 and mult must be positive",
            Violation::TypeIRequiresD1 => "type I requires d = 1",
            Violation::TypeIIOrIIIRequiresD2 => "types II and III require d = 2",
            Violation::TotallyRealCenter => "types I, II and III require e0 = e",
            Violation::CmFieldCenter => "type IV requires e = 2*e0",
            Violation::DivisibilityFailure => "d*e0 must divide dim",
            Violation::CmRequiresTypeIV => "cm requires type IV",
            Violation::CmRequiresMaximalField => "cm requires d = 1 and e0 = dim",
            Violation::RelativeDimensionOneTypeIVIsCm => "type IV of relative dimension 1 must be cm",
            Violation::TrivialEndomorphismsShape => "end_Z requires type I with e = d = e0 = 1",
            Violation::TypeIIISurfaceChar0 => "type III surface impossible in char 0",
            Violation::TypeIIIRelativeDimensionOneChar0 => {
                "type III of relative dimension 1 impossible in char 0"
            }
            Violation::ImaginaryQuadraticSurface => "surface with imaginary quadratic field",
            Violation::InvalidCharacteristic => "characteristic must be 0 or a prime",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlbertError {
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(Violation),
}

/// Every violated invariant, in a fixed order. Empty means valid.
pub fn validate(f: &FactorDescriptor, ctx: &FieldContext) -> Vec<Violation> {
    use AlbertType::*;
    let mut out = Vec::new();
    if !ctx.is_valid() {
        out.push(Violation::InvalidCharacteristic);
    }
    if f.dimension == 0 || f.e == 0 || f.d == 0 || f.e0 == 0 || f.multiplicity == 0 {
        out.push(Violation::NonPositiveField);
        return out;
    }
    match f.albert_type {
        I if f.d != 1 => out.push(Violation::TypeIRequiresD1),
        II | III if f.d != 2 => out.push(Violation::TypeIIOrIIIRequiresD2),
        _ => {}
    }
    match f.albert_type {
        I | II | III if f.e0 != f.e => out.push(Violation::TotallyRealCenter),
        IV if f.e != 2 * f.e0 => out.push(Violation::CmFieldCenter),
        _ => {}
    }
    let h = f.relative_dimension_checked();
    if h.is_none() {
        out.push(Violation::DivisibilityFailure);
    }
    if f.cm {
        if f.albert_type != IV {
            out.push(Violation::CmRequiresTypeIV);
        } else if f.d != 1 || f.e0 != f.dimension {
            out.push(Violation::CmRequiresMaximalField);
        }
    } else if f.albert_type == IV && h == Some(1) {
        out.push(Violation::RelativeDimensionOneTypeIVIsCm);
    }
    if f.end_z && !(f.albert_type == I && f.e == 1 && f.d == 1 && f.e0 == 1) {
        out.push(Violation::TrivialEndomorphismsShape);
    }
    if ctx.is_char0() {
        if f.albert_type == III && f.dimension == 2 {
            out.push(Violation::TypeIIISurfaceChar0);
        } else if f.albert_type == III && h == Some(1) {
            out.push(Violation::TypeIIIRelativeDimensionOneChar0);
        }
        if f.dimension == 2 && f.albert_type == IV && f.e == 2 && f.d == 1 && !f.cm {
            out.push(Violation::ImaginaryQuadraticSurface);
        }
    }
    out
}

/// Every valid descriptor shape with `dim <= max_dim`, multiplicity 1,
/// found by exhaustive search over the numeric fields.
pub fn enumerate_valid(max_dim: u32, ctx: &FieldContext) -> Vec<FactorDescriptor> {
    let mut out = Vec::new();
    for g in 1..=max_dim {
        for t in [AlbertType::I, AlbertType::II, AlbertType::III, AlbertType::IV] {
            for e in 1..=2 * g {
                for d in 1..=g {
                    for e0 in 1..=g {
                        for cm in [false, true] {
                            let mut f = FactorDescriptor::new("", g, t, e, d, e0);
                            f.cm = cm;
                            if validate(&f, ctx).is_empty() {
                                f.label = shape_label(&f);
                                out.push(f);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// A readable label such as `g4-IV-e4-d1` or `g3-cm`.
pub fn shape_label(f: &FactorDescriptor) -> String {
    if f.cm {
        format!("g{}-cm", f.dimension)
    } else {
        format!("g{}-{}-e{}-d{}", f.dimension, f.albert_type, f.e, f.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_dimensions() {
        let ii_surface = FactorDescriptor::new("s", 2, AlbertType::II, 1, 2, 1);
        assert_eq!(ii_surface.relative_dimension(), Ok(1));
        assert_eq!(FactorDescriptor::elliptic("e").relative_dimension(), Ok(1));
        let iv3 = FactorDescriptor::new("t", 3, AlbertType::IV, 2, 1, 1);
        assert_eq!(iv3.relative_dimension(), Ok(3));
        let bad = FactorDescriptor::new("b", 3, AlbertType::II, 1, 2, 1);
        assert!(bad.relative_dimension().is_err());
    }

    #[test]
    fn validation_examples() {
        let c0 = FieldContext::char0();
        let iii = FactorDescriptor::new("x", 2, AlbertType::III, 1, 2, 1);
        let v = validate(&iii, &c0);
        assert!(v.contains(&Violation::TypeIIISurfaceChar0));
        assert_eq!(Violation::TypeIIISurfaceChar0.to_string(), "type III surface impossible in char 0");
        assert!(validate(&FactorDescriptor::elliptic("e"), &c0).is_empty());
        let iq = FactorDescriptor::new("y", 2, AlbertType::IV, 2, 1, 1);
        let v = validate(&iq, &c0);
        assert!(v.contains(&Violation::ImaginaryQuadraticSurface));
        assert_eq!(Violation::ImaginaryQuadraticSurface.to_string(), "surface with imaginary quadratic field");
        assert!(validate(&iq, &FieldContext::char_p(5, false)).is_empty());
    }

    #[test]
    fn invariant_violations() {
        let c0 = FieldContext::char0();
        let mut f = FactorDescriptor::new("x", 4, AlbertType::I, 2, 2, 2);
        assert_eq!(validate(&f, &c0), vec![Violation::TypeIRequiresD1]);
        f = FactorDescriptor::new("x", 4, AlbertType::IV, 2, 1, 2);
        assert!(validate(&f, &c0).contains(&Violation::CmFieldCenter));
        f = FactorDescriptor::new("x", 3, AlbertType::I, 2, 1, 2);
        assert_eq!(validate(&f, &c0), vec![Violation::DivisibilityFailure]);
        f = FactorDescriptor::elliptic("x");
        f.cm = true;
        assert_eq!(validate(&f, &c0), vec![Violation::CmRequiresTypeIV]);
        f = FactorDescriptor::new("x", 2, AlbertType::I, 2, 1, 2);
        f.end_z = true;
        assert_eq!(validate(&f, &c0), vec![Violation::TrivialEndomorphismsShape]);
        assert_eq!(
            validate(&FactorDescriptor::elliptic("x"), &FieldContext::char_p(4, false)),
            vec![Violation::InvalidCharacteristic]
        );
    }

    #[test]
    fn json_schema() {
        let text = r#"{"label":"E","dim":1,"type":"I","e":1,"d":1,"e0":1,"cm":false,"end_Z":true,"mult":2}"#;
        let f: FactorDescriptor = serde_json::from_str(text).unwrap();
        assert_eq!(f.multiplicity, 2);
        assert!(f.end_z);
        let back: FactorDescriptor = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        let ctx: FieldContext = serde_json::from_str(r#"{"char":7,"ordinary":true}"#).unwrap();
        assert_eq!(ctx, FieldContext::char_p(7, true));
    }

    #[test]
    fn small_corpus() {
        let shapes = enumerate_valid(5, &FieldContext::char0());
        let labels: Vec<String> = shapes.iter().map(|f| f.label.clone()).collect();
        for expected in ["g1-I-e1-d1", "g1-cm", "g2-II-e1-d2", "g3-IV-e2-d1", "g4-IV-e4-d1", "g4-III-e1-d2"] {
            assert!(labels.contains(&expected.to_string()), "{expected}");
        }
        assert!(!labels.contains(&"g2-III-e1-d2".to_string()));
        assert!(!labels.contains(&"g2-IV-e2-d1".to_string()));
    }
}
