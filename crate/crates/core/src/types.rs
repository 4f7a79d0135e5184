//! Domain types shared by every module: points, tray labels, itineraries
//! and validated map parameters.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^d`. The last coordinate is the height `x_d`; the first
/// `d - 1` coordinates form the lateral projection `p(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    /// Builds a point, rejecting non-finite coordinates and `d < 1`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Point(coords))
    }

    /// Wraps coordinates without validation. Callers guarantee finiteness.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    /// `height * e_d`.
    pub fn on_axis(dim: usize, height: f64) -> Self {
        let mut c = vec![0.0; dim];
        c[dim - 1] = height;
        Point(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `x_d`.
    pub fn height(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// `p(x) = (x_1, ..., x_{d-1})`.
    pub fn lateral(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn lateral_norm(&self) -> f64 {
        norm2(self.lateral())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:?}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// Label `r = (r_1, ..., r_{d-1}, r_d)` of the tray
/// `T(r) = { |x_j - 2 r_j| <= 1 for j < d, r_d x_d >= 0 }`.
///
/// Serialized as `[[r_1, ..., r_{d-1}], sign]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(Vec<i64>, i8)", into = "(Vec<i64>, i8)")]
pub struct TrayIndex {
    lateral: Vec<i64>,
    sign: i8,
}

impl TrayIndex {
    pub fn new(lateral: Vec<i64>, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter(format!(
                "tray sign must be +1 or -1, got {sign}"
            )));
        }
        Ok(TrayIndex { lateral, sign })
    }

    /// The tray `((0, ..., 0), +1)` containing the positive `x_d`-axis.
    pub fn central(dim: usize) -> Self {
        TrayIndex {
            lateral: vec![0; dim - 1],
            sign: 1,
        }
    }

    pub fn lateral(&self) -> &[i64] {
        &self.lateral
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Ambient dimension `d` this label belongs to.
    pub fn dim(&self) -> usize {
        self.lateral.len() + 1
    }

    /// `sigma(r) = sum_{j<d} r_j + (r_d - 1) / 2`.
    pub fn sigma(&self) -> i64 {
        self.lateral.iter().sum::<i64>() + (i64::from(self.sign) - 1) / 2
    }

    pub fn is_even(&self) -> bool {
        self.sigma().rem_euclid(2) == 0
    }

    /// Sign of the half-space `f(T(r))`: `+1` for `H+`, `-1` for `H-`.
    pub fn image_sign(&self) -> i8 {
        if self.is_even() {
            1
        } else {
            -1
        }
    }

    /// The tray center on the hyperplane `x_d = 0`.
    pub fn center(&self) -> Point {
        let mut c: Vec<f64> = self.lateral.iter().map(|&r| 2.0 * r as f64).collect();
        c.push(0.0);
        Point::from_vec(c)
    }
}

impl TryFrom<(Vec<i64>, i8)> for TrayIndex {
    type Error = Error;

    fn try_from((lateral, sign): (Vec<i64>, i8)) -> Result<Self> {
        TrayIndex::new(lateral, sign)
    }
}

impl From<TrayIndex> for (Vec<i64>, i8) {
    fn from(t: TrayIndex) -> Self {
        (t.lateral, t.sign)
    }
}

impl fmt::Display for TrayIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "((")?;
        for (i, r) in self.lateral.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "), {:+})", self.sign)
    }
}

/// Eventually periodic symbolic address `prefix . cycle^inf`.
///
/// Consecutive symbols obey the parity rule: the successor of `s` has sign
/// `+1` exactly when `sigma(s)` is even.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Itinerary {
    dim: usize,
    prefix: Vec<TrayIndex>,
    cycle: Vec<TrayIndex>,
}

#[derive(Deserialize)]
struct ItineraryRepr {
    dim: usize,
    #[serde(default)]
    prefix: Vec<TrayIndex>,
    cycle: Vec<TrayIndex>,
}

impl<'de> Deserialize<'de> for Itinerary {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = ItineraryRepr::deserialize(de)?;
        Itinerary::new(repr.dim, repr.prefix, repr.cycle).map_err(serde::de::Error::custom)
    }
}

impl Itinerary {
    pub fn new(dim: usize, prefix: Vec<TrayIndex>, cycle: Vec<TrayIndex>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if cycle.is_empty() {
            return Err(Error::InvalidParameter("itinerary cycle is empty".into()));
        }
        let it = Itinerary { dim, prefix, cycle };
        it.validate()?;
        Ok(it)
    }

    /// Constant itinerary `(r, r, r, ...)`; requires `r` to be its own
    /// admissible successor.
    pub fn constant(tray: TrayIndex) -> Result<Self> {
        Itinerary::new(tray.dim(), Vec::new(), vec![tray])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("itinerary serializes")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prefix(&self) -> &[TrayIndex] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[TrayIndex] {
        &self.cycle
    }

    /// `s_k`.
    pub fn symbol(&self, k: usize) -> &TrayIndex {
        if k < self.prefix.len() {
            &self.prefix[k]
        } else {
            &self.cycle[(k - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// `(s_0, ..., s_{n-1})`.
    pub fn symbols(&self, n: usize) -> Vec<TrayIndex> {
        (0..n).map(|k| self.symbol(k).clone()).collect()
    }

    fn validate(&self) -> Result<()> {
        let seq: Vec<&TrayIndex> = self.prefix.iter().chain(&self.cycle).collect();
        for (i, t) in seq.iter().enumerate() {
            if t.lateral.len() != self.dim - 1 {
                return Err(Error::Inadmissible {
                    from: i,
                    to: i,
                    reason: format!(
                        "symbol has {} lateral entries, expected {}",
                        t.lateral.len(),
                        self.dim - 1
                    ),
                });
            }
        }
        let n = seq.len();
        // pairs along prefix.cycle, then the wrap from the last cycle symbol
        // back to the first cycle symbol
        let pairs = (0..n - 1)
            .map(|i| (i, i + 1))
            .chain(std::iter::once((n - 1, self.prefix.len())));
        for (a, b) in pairs {
            let (from, to) = (seq[a], seq[b]);
            if to.sign != from.image_sign() {
                return Err(Error::Inadmissible {
                    from: a,
                    to: b,
                    reason: format!(
                        "sigma{from} = {} requires successor sign {:+}, got {to}",
                        from.sigma(),
                        from.image_sign()
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Dimension, scaling and (possibly estimated) constants of `f = lambda F`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapParams {
    pub(crate) dim: usize,
    pub(crate) lambda: f64,
    pub(crate) beta_hat: f64,
    pub(crate) alpha_hat: f64,
    pub(crate) delta_hat: Option<f64>,
    pub(crate) m_hat: f64,
    pub(crate) k_hat: Option<f64>,
}

/// Builds [`MapParams`] for `f = lambda F`, refusing non-expanding choices.
pub fn validate_params(dim: usize, lambda: f64, beta_hat: f64) -> Result<MapParams> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if !(beta_hat.is_finite() && beta_hat > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta_hat must be positive, got {beta_hat}"
        )));
    }
    let alpha_hat = lambda * beta_hat;
    if alpha_hat <= 1.0 {
        return Err(Error::NotExpanding {
            product: alpha_hat,
            min_lambda: 1.0 / beta_hat,
        });
    }
    Ok(MapParams {
        dim,
        lambda,
        beta_hat,
        alpha_hat,
        delta_hat: None,
        m_hat: omega_floor(lambda),
        k_hat: None,
    })
}

/// `max{e, 4 lambda}`.
pub fn omega_floor(lambda: f64) -> f64 {
    std::f64::consts::E.max(4.0 * lambda)
}

impl MapParams {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta_hat(&self) -> f64 {
        self.beta_hat
    }

    pub fn alpha_hat(&self) -> f64 {
        self.alpha_hat
    }

    pub fn delta_hat(&self) -> Option<f64> {
        self.delta_hat
    }

    pub fn m_hat(&self) -> f64 {
        self.m_hat
    }

    pub fn k_hat(&self) -> Option<f64> {
        self.k_hat
    }

    /// Raises `M` to a calibrated value; never goes below `max{e, 4 lambda}`.
    pub fn with_m_hat(mut self, m: f64) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidParameter(format!("M must be finite, got {m}")));
        }
        self.m_hat = m.max(omega_floor(self.lambda));
        Ok(self)
    }

    pub fn with_delta_hat(mut self, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        self.delta_hat = Some(delta);
        Ok(self)
    }

    pub fn with_k_hat(mut self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 1.0) {
            return Err(Error::InvalidParameter(format!("K must be >= 1, got {k}")));
        }
        self.k_hat = Some(k);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tray(lat: &[i64], sign: i8) -> TrayIndex {
        TrayIndex::new(lat.to_vec(), sign).unwrap()
    }

    #[test]
    fn validate_params_boundary_is_rejected() {
        let beta = 0.37;
        match validate_params(2, 1.0 / beta, beta) {
            Err(Error::NotExpanding { min_lambda, .. }) => {
                assert!((min_lambda - 1.0 / beta).abs() < 1e-12)
            }
            other => panic!("expected NotExpanding, got {other:?}"),
        }
    }

    #[test]
    fn validate_params_alpha_and_m() {
        let beta = 0.37;
        let p = validate_params(2, 2.0 / beta, beta).unwrap();
        assert!((p.alpha_hat() - 2.0).abs() < 1e-12);
        let p3 = validate_params(3, 2.0 / beta, beta).unwrap();
        assert_eq!(p3.m_hat(), std::f64::consts::E.max(8.0 / beta));
        let small = validate_params(2, 3.0, 0.5).unwrap();
        assert_eq!(small.m_hat(), 12.0);
    }

    #[test]
    fn validate_params_rejects_bad_inputs() {
        assert!(matches!(validate_params(1, 3.0, 0.5), Err(Error::InvalidDimension(1))));
        assert!(validate_params(2, -1.0, 0.5).is_err());
        assert!(validate_params(2, 3.0, 0.0).is_err());
    }

    #[test]
    fn m_hat_never_below_floor() {
        let p = validate_params(2, 3.0, 0.5).unwrap().with_m_hat(1.0).unwrap();
        assert_eq!(p.m_hat(), 12.0);
        let p = p.with_m_hat(20.0).unwrap();
        assert_eq!(p.m_hat(), 20.0);
    }

    #[test]
    fn sigma_rules() {
        assert_eq!(tray(&[0, 0], 1).sigma(), 0);
        assert_eq!(tray(&[1, 0], 1).sigma(), 1);
        assert_eq!(tray(&[0, -1], 1).sigma(), -1);
        assert_eq!(tray(&[0, 0], -1).sigma(), -1);
        assert!(tray(&[0, 0], -1).image_sign() == -1);
        assert!(tray(&[1, 1], -1).image_sign() == -1);
        assert!(tray(&[1, 1], 1).image_sign() == 1);
    }

    #[test]
    fn tray_sign_validated() {
        assert!(TrayIndex::new(vec![0], 0).is_err());
        assert!(TrayIndex::new(vec![0], 2).is_err());
    }

    #[test]
    fn itinerary_parity_rule() {
        // ((0),+1) is even -> successor +1
        assert!(Itinerary::constant(tray(&[0], 1)).is_ok());
        // ((1),+1) is odd -> successor must be -1
        let err = Itinerary::constant(tray(&[1], 1)).unwrap_err();
        assert!(matches!(err, Error::Inadmissible { from: 0, to: 0, .. }));
        // ((1),-1): sigma = 0, even -> successor +1; ((0),+1) -> +1
        let it = Itinerary::new(2, vec![tray(&[1], -1)], vec![tray(&[0], 1)]).unwrap();
        assert_eq!(it.symbol(0), &tray(&[1], -1));
        assert_eq!(it.symbol(7), &tray(&[0], 1));
    }

    #[test]
    fn itinerary_wrap_pair_checked() {
        // period 2: ((1),+1) odd -> ((2),-1) sigma 1 odd -> wrap requires -1 but first is +1
        let err = Itinerary::new(2, vec![], vec![tray(&[1], 1), tray(&[2], -1)]).unwrap_err();
        match err {
            Error::Inadmissible { from, to, .. } => assert_eq!((from, to), (1, 0)),
            other => panic!("unexpected {other:?}"),
        }
        // ((1),-1) sigma 0 -> +1 ; ((1),+1) sigma 1 -> -1 ; wraps fine
        let it = Itinerary::new(2, vec![], vec![tray(&[1], -1), tray(&[1], 1)]).unwrap();
        assert_eq!(it.symbol(3), &tray(&[1], 1));
    }

    #[test]
    fn itinerary_lateral_length_checked() {
        let err = Itinerary::new(3, vec![], vec![tray(&[0], 1)]).unwrap_err();
        assert!(matches!(err, Error::Inadmissible { .. }));
    }

    #[test]
    fn itinerary_json_format() {
        let text = r#"{"dim": 3, "prefix": [[[1, 0], -1]], "cycle": [[[0, 0], 1]]}"#;
        let it = Itinerary::from_json(text).unwrap();
        assert_eq!(it.prefix(), &[tray(&[1, 0], -1)]);
        let back = Itinerary::from_json(&it.to_json()).unwrap();
        assert_eq!(back, it);
        let bad = r#"{"dim": 2, "prefix": [], "cycle": [[[1], 1]]}"#;
        let msg = Itinerary::from_json(bad).unwrap_err().to_string();
        assert!(msg.contains("index 0 and 0"), "{msg}");
    }

    #[test]
    fn point_rejects_non_finite() {
        assert!(matches!(
            Point::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(Point::new(vec![0.0, f64::INFINITY]).is_err());
        let p = Point::new(vec![3.0, 4.0, 12.0]).unwrap();
        assert_eq!(p.norm(), 13.0);
        assert_eq!(p.lateral_norm(), 5.0);
        assert_eq!(p.height(), 12.0);
    }
}
