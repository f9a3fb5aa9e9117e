use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Values that can be linearly interpolated.
pub trait Lerp: Clone {
    /// `(1 - w) * self + w * other`.
    fn lerp(&self, other: &Self, w: f64) -> Self;
    fn is_finite(&self) -> bool;
}

impl Lerp for f64 {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        if w == 0.0 {
            *self
        } else if w == 1.0 {
            *other
        } else {
            (1.0 - w) * self + w * other
        }
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Lerp for DVector<f64> {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        self.zip_map(other, |a, b| a.lerp(&b, w))
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl Lerp for DMatrix<f64> {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        self.zip_map(other, |a, b| a.lerp(&b, w))
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// A deterministic function of time given by knots and linear interpolation.
///
/// Outside the knot range the profile is extended flat. A single knot is a
/// constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    knots: Vec<(f64, T)>,
}

impl<T: Lerp> Profile<T> {
    pub fn constant(value: T) -> Self {
        Profile {
            knots: vec![(0.0, value)],
        }
    }

    /// Knot times must be finite and strictly increasing.
    pub fn from_knots(knots: Vec<(f64, T)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidInput("profile needs at least one knot".into()));
        }
        for (i, (t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite knot {i}")));
            }
            if i > 0 && *t <= knots[i - 1].0 {
                return Err(Error::InvalidInput(format!(
                    "knot times must be strictly increasing (knot {i} at t={t})"
                )));
            }
        }
        Ok(Profile { knots })
    }

    pub fn knots(&self) -> &[(f64, T)] {
        &self.knots
    }

    pub fn is_constant(&self) -> bool {
        self.knots.len() == 1
    }

    pub fn at(&self, t: f64) -> T {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1.clone();
        }
        let last = k.len() - 1;
        if t >= k[last].0 {
            return k[last].1.clone();
        }
        // first knot strictly after t
        let hi = k.partition_point(|(kt, _)| *kt <= t);
        let (t0, v0) = &k[hi - 1];
        let (t1, v1) = &k[hi];
        v0.lerp(v1, (t - t0) / (t1 - t0))
    }

    pub fn map<U: Lerp>(&self, f: impl Fn(&T) -> U) -> Profile<U> {
        Profile {
            knots: self.knots.iter().map(|(t, v)| (*t, f(v))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_is_flat() {
        let p = Profile::constant(2.5);
        assert_eq!(p.at(-1.0), 2.5);
        assert_eq!(p.at(0.3), 2.5);
        assert_eq!(p.at(100.0), 2.5);
    }

    #[test]
    fn knots_interpolate_linearly() {
        let p = Profile::from_knots(vec![(0.0, 0.0), (2.0, 1.0)]).unwrap();
        assert_eq!(p.at(1.0), 0.5);
        assert_eq!(p.at(0.0), 0.0);
        assert_eq!(p.at(2.0), 1.0);
        assert_eq!(p.at(3.0), 1.0);
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(Profile::from_knots(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(Profile::<f64>::from_knots(vec![]).is_err());
    }

    #[test]
    fn vector_profiles_interpolate_componentwise() {
        let p = Profile::from_knots(vec![
            (0.0, DVector::from_vec(vec![0.0, 2.0])),
            (1.0, DVector::from_vec(vec![1.0, 0.0])),
        ])
        .unwrap();
        let v = p.at(0.25);
        assert!((v[0] - 0.25).abs() < 1e-15);
        assert!((v[1] - 1.5).abs() < 1e-15);
    }
}
