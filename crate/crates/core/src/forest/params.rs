use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MaxFeaturesRepr", into = "MaxFeaturesRepr")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))`
    Sqrt,
    /// `max(1, floor(log2(d)))`
    Log2,
    All,
    Count(usize),
}

impl MaxFeatures {
    /// Resolves the rule against `dims` features.
    pub fn resolve(self, dims: usize) -> Result<usize> {
        let n = match self {
            MaxFeatures::Sqrt => (dims as f64).sqrt().ceil() as usize,
            MaxFeatures::Log2 => (dims as f64).log2().floor() as usize,
            MaxFeatures::All => dims,
            MaxFeatures::Count(n) => {
                if n == 0 || n > dims {
                    return Err(Error::InvalidArgument(format!(
                        "max_features = {n} is outside 1..={dims}"
                    )));
                }
                n
            }
        };
        Ok(n.clamp(1, dims.max(1)))
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::Log2 => f.write_str("log2"),
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sqrt" | "auto" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            "all" | "none" => Ok(MaxFeatures::All),
            other => other
                .parse()
                .map(MaxFeatures::Count)
                .map_err(|_| Error::InvalidArgument(format!("bad max_features {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaxFeaturesRepr {
    Count(usize),
    Named(String),
}

impl From<MaxFeatures> for MaxFeaturesRepr {
    fn from(m: MaxFeatures) -> Self {
        match m {
            MaxFeatures::Count(n) => MaxFeaturesRepr::Count(n),
            named => MaxFeaturesRepr::Named(named.to_string()),
        }
    }
}

impl TryFrom<MaxFeaturesRepr> for MaxFeatures {
    type Error = Error;

    fn try_from(r: MaxFeaturesRepr) -> Result<Self> {
        match r {
            MaxFeaturesRepr::Count(n) => Ok(MaxFeatures::Count(n)),
            MaxFeaturesRepr::Named(s) => s.parse(),
        }
    }
}

/// Random-forest hyper-parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    /// Common library defaults: 100 bootstrapped trees, `sqrt` features.
    fn default() -> Self {
        HyperParams {
            n_estimators: 100,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            bootstrap: true,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

impl HyperParams {
    /// The tuned configuration: 400 trees, `sqrt` features, unlimited depth,
    /// every tree trained on the whole training set.
    pub fn tuned() -> Self {
        HyperParams {
            n_estimators: 400,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            bootstrap: false,
            ..HyperParams::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidArgument("n_estimators must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidArgument("min_samples_split must be >= 2".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidArgument("max_depth must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_rules() {
        assert_eq!(MaxFeatures::Sqrt.resolve(400).unwrap(), 20);
        assert_eq!(MaxFeatures::Sqrt.resolve(401).unwrap(), 21);
        assert_eq!(MaxFeatures::Sqrt.resolve(1).unwrap(), 1);
        assert_eq!(MaxFeatures::Log2.resolve(1000).unwrap(), 9);
        assert_eq!(MaxFeatures::Log2.resolve(1).unwrap(), 1);
        assert_eq!(MaxFeatures::All.resolve(7).unwrap(), 7);
        assert_eq!(MaxFeatures::Count(3).resolve(7).unwrap(), 3);
        assert!(MaxFeatures::Count(8).resolve(7).is_err());
        assert!(MaxFeatures::Count(0).resolve(7).is_err());
    }

    #[test]
    fn json_shape() {
        let p = HyperParams::tuned().with_seed(9);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(
            json,
            r#"{"n_estimators":400,"max_features":"sqrt","max_depth":null,"bootstrap":false,"min_samples_split":2,"seed":9}"#
        );
        assert_eq!(serde_json::from_str::<HyperParams>(&json).unwrap(), p);
        let partial: HyperParams = serde_json::from_str(r#"{"max_features":5,"max_depth":10}"#).unwrap();
        assert_eq!(partial.max_features, MaxFeatures::Count(5));
        assert_eq!(partial.max_depth, Some(10));
        assert_eq!(partial.n_estimators, 100);
        assert!(serde_json::from_str::<HyperParams>(r#"{"max_features":"cube"}"#).is_err());
    }

    #[test]
    fn parse_max_features() {
        assert_eq!("sqrt".parse::<MaxFeatures>().unwrap(), MaxFeatures::Sqrt);
        assert_eq!("LOG2".parse::<MaxFeatures>().unwrap(), MaxFeatures::Log2);
        assert_eq!("12".parse::<MaxFeatures>().unwrap(), MaxFeatures::Count(12));
        assert!("x".parse::<MaxFeatures>().is_err());
    }
}
