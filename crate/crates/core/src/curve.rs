use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Color counting method tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cch")]
    Cch,
    #[serde(rename = "gmm-aic")]
    GmmAic,
    #[serde(rename = "gmm-bic")]
    GmmBic,
    #[serde(rename = "gmm-avg-ll")]
    GmmAvgLl,
    #[serde(rename = "gmm-js")]
    GmmJs,
    #[serde(rename = "kmeans")]
    Kmeans,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Cch,
        Method::GmmAic,
        Method::GmmBic,
        Method::GmmAvgLl,
        Method::GmmJs,
        Method::Kmeans,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cch => "cch",
            Method::GmmAic => "gmm-aic",
            Method::GmmBic => "gmm-bic",
            Method::GmmAvgLl => "gmm-avg-ll",
            Method::GmmJs => "gmm-js",
            Method::Kmeans => "kmeans",
        }
    }

    /// Whether the method scores an exhaustive sweep over K.
    pub fn is_sweep(self) -> bool {
        self != Method::Cch
    }

    pub fn is_gmm(self) -> bool {
        matches!(
            self,
            Method::GmmAic | Method::GmmBic | Method::GmmAvgLl | Method::GmmJs
        )
    }

    /// Criteria whose optimum is the smallest score.
    pub fn is_minimized(self) -> bool {
        matches!(self, Method::GmmAic | Method::GmmBic | Method::GmmJs)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Per-K criterion values from an exhaustive sweep, keyed `1..=k_max`.
///
/// Failed fits are kept as `+inf` for minimized criteria and `-inf` for
/// maximized ones; every other score is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCurve {
    method: Method,
    points: Vec<(usize, f64)>,
}

impl ScoreCurve {
    pub fn new(method: Method, points: Vec<(usize, f64)>) -> Result<Self> {
        if !method.is_sweep() {
            return Err(Error::InvalidArgument(format!("{method} has no score curve")));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("score curve has no points".into()));
        }
        for (i, &(k, s)) in points.iter().enumerate() {
            if k != i + 1 {
                return Err(Error::InvalidArgument(format!(
                    "score curve keys must run 1..=k_max, found {k} at position {i}"
                )));
            }
            if s.is_nan() {
                return Err(Error::InvalidArgument(format!("NaN score at K={k}")));
            }
        }
        Ok(Self { method, points })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn k_max(&self) -> usize {
        self.points.len()
    }

    pub fn score_at(&self, k: usize) -> Option<f64> {
        self.points.get(k.checked_sub(1)?).map(|p| p.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_round_trips_through_str() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("gmm".parse::<Method>(), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn curve_requires_contiguous_keys() {
        assert!(ScoreCurve::new(Method::GmmAic, vec![(1, 1.0), (3, 2.0)]).is_err());
        assert!(ScoreCurve::new(Method::GmmAic, vec![]).is_err());
        assert!(ScoreCurve::new(Method::GmmAic, vec![(1, f64::NAN)]).is_err());
        let c = ScoreCurve::new(Method::GmmAic, vec![(1, 1.0), (2, f64::INFINITY)]).unwrap();
        assert_eq!(c.k_max(), 2);
        assert_eq!(c.score_at(2), Some(f64::INFINITY));
        assert_eq!(c.score_at(0), None);
    }
}
