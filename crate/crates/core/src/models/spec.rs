use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Tdnn,
    Dnn,
    DnnGru,
    Cnn,
    Cnn14,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Tdnn, Family::Dnn, Family::DnnGru, Family::Cnn, Family::Cnn14];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Tdnn => "TDNN",
            Family::Dnn => "DNN",
            Family::DnnGru => "DNN_GRU",
            Family::Cnn => "CNN",
            Family::Cnn14 => "CNN14",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Family::Tdnn => 0,
            Family::Dnn => 1,
            Family::DnnGru => 2,
            Family::Cnn => 3,
            Family::Cnn14 => 4,
        }
    }

    pub fn from_code(c: u8) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.code() == c)
            .ok_or_else(|| Error::Malformed(format!("unknown family code {c}")))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s) || f.as_str().replace('_', "-").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthVariant {
    Full,
    /// One layer removed (CNN: a convolution; DNN: a fully connected layer;
    /// DNN_GRU: a GRU layer; CNN14: one convolution per block).
    Reduced,
}

impl DepthVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            DepthVariant::Full => "full",
            DepthVariant::Reduced => "reduced",
        }
    }
}

impl fmt::Display for DepthVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DepthVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(DepthVariant::Full),
            "reduced" => Ok(DepthVariant::Reduced),
            other => Err(Error::InvalidArgument(format!("unknown depth variant {other:?}"))),
        }
    }
}

pub const WIDTH_FACTORS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const MIN_WIDTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub width_factor: f64,
    pub depth: DepthVariant,
    #[serde(default = "default_input_dims")]
    pub input_dims: usize,
    #[serde(default = "default_classes")]
    pub n_classes: usize,
}

fn default_input_dims() -> usize {
    64
}

fn default_classes() -> usize {
    35
}

impl ModelSpec {
    pub fn new(family: Family, width_factor: f64, depth: DepthVariant) -> Self {
        ModelSpec {
            family,
            width_factor,
            depth,
            input_dims: default_input_dims(),
            n_classes: default_classes(),
        }
    }

    pub fn with_io(mut self, input_dims: usize, n_classes: usize) -> Self {
        self.input_dims = input_dims;
        self.n_classes = n_classes;
        self
    }

    /// Identifier of the variant, e.g. `DNN-x0.25-full`.
    pub fn id(&self) -> String {
        format!("{}-x{}-{}", self.family, self.width_factor, self.depth)
    }

    /// Scaled layer width: `round(default * width_factor)`, at least 4.
    pub fn width(&self, default: usize) -> usize {
        ((default as f64 * self.width_factor).round() as usize).max(MIN_WIDTH)
    }

    pub fn validate(&self) -> Result<()> {
        if !enumerate_variants(self.family)
            .iter()
            .any(|v| v.width_factor == self.width_factor && v.depth == self.depth)
        {
            return Err(Error::InvalidArgument(format!(
                "{} is not in the variant grid",
                self.id()
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidArgument("need at least 2 classes".into()));
        }
        if self.input_dims == 0 {
            return Err(Error::InvalidArgument("input_dims must be positive".into()));
        }
        Ok(())
    }
}

/// Parses an id as produced by [`ModelSpec::id`].
impl FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("model id {s:?} is not FAMILY-xWIDTH-DEPTH"));
        let mut parts = s.split('-');
        let (Some(f), Some(w), Some(d), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let width = w.strip_prefix('x').and_then(|w| w.parse().ok()).ok_or_else(bad)?;
        let spec = ModelSpec::new(f.parse()?, width, d.parse()?);
        spec.validate()?;
        Ok(spec)
    }
}

/// Width/depth variants evaluated for `family`.
///
/// CNN, DNN and DNN_GRU: five widths, full and reduced depth. TDNN: five
/// widths at full depth. CNN14: x1, x0.5, x0.25 at full depth plus x0.5 and
/// x0.25 with single-convolution blocks.
pub fn enumerate_variants(family: Family) -> Vec<ModelSpec> {
    use DepthVariant::*;
    match family {
        Family::Cnn | Family::Dnn | Family::DnnGru => [Full, Reduced]
            .into_iter()
            .flat_map(|d| WIDTH_FACTORS.map(|w| ModelSpec::new(family, w, d)))
            .collect(),
        Family::Tdnn => WIDTH_FACTORS.map(|w| ModelSpec::new(family, w, Full)).to_vec(),
        Family::Cnn14 => vec![
            ModelSpec::new(family, 1.0, Full),
            ModelSpec::new(family, 0.5, Full),
            ModelSpec::new(family, 0.25, Full),
            ModelSpec::new(family, 0.5, Reduced),
            ModelSpec::new(family, 0.25, Reduced),
        ],
    }
}

/// Union of every family's variants.
pub fn full_grid() -> Vec<ModelSpec> {
    Family::ALL.into_iter().flat_map(enumerate_variants).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!(enumerate_variants(Family::Cnn).len(), 10);
        assert_eq!(enumerate_variants(Family::Dnn).len(), 10);
        assert_eq!(enumerate_variants(Family::DnnGru).len(), 10);
        assert_eq!(enumerate_variants(Family::Tdnn).len(), 5);
        assert_eq!(enumerate_variants(Family::Cnn14).len(), 5);
        let grid = full_grid();
        assert_eq!(grid.len(), 40);
        let ids: std::collections::BTreeSet<_> = grid.iter().map(ModelSpec::id).collect();
        assert_eq!(ids.len(), 40);
    }

    #[test]
    fn legality() {
        ModelSpec::new(Family::Dnn, 0.25, DepthVariant::Reduced).validate().unwrap();
        assert!(ModelSpec::new(Family::Tdnn, 1.0, DepthVariant::Reduced).validate().is_err());
        assert!(ModelSpec::new(Family::Cnn14, 2.0, DepthVariant::Full).validate().is_err());
        assert!(ModelSpec::new(Family::Cnn, 3.0, DepthVariant::Full).validate().is_err());
        assert!(ModelSpec::new(Family::Cnn, 1.0, DepthVariant::Full).with_io(64, 1).validate().is_err());
    }

    #[test]
    fn width_clamp() {
        let s = ModelSpec::new(Family::Cnn, 0.25, DepthVariant::Full);
        assert_eq!(s.width(16), 4);
        assert_eq!(s.width(8), 4);
        assert_eq!(s.width(256), 64);
    }

    #[test]
    fn parse_names() {
        assert_eq!("DNN_GRU".parse::<Family>().unwrap(), Family::DnnGru);
        assert_eq!("dnn-gru".parse::<Family>().unwrap(), Family::DnnGru);
        assert_eq!("cnn14".parse::<Family>().unwrap(), Family::Cnn14);
        assert!("RNN".parse::<Family>().is_err());
    }
}
