//! Single-peaked preferences over nonnegative amounts.
//!
//! A preference is a piecewise-linear disutility around its peak, optionally
//! with a constant jump on either side. The jumps make it possible to express
//! preferences that rank a fixed point above every amount in an open interval
//! below the peak, which no continuous single-peaked preference can do.

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq)]
pub struct Preference<T> {
    peak: T,
    slope_left: T,
    slope_right: T,
    jump_left: T,
    jump_right: T,
}

/// Outcome of comparing two amounts under a preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    FirstPreferred,
    SecondPreferred,
    Indifferent,
}

/// Slopes and jumps of a preference, without the peak.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape<T> {
    pub slope_left: T,
    pub slope_right: T,
    pub jump_left: T,
    pub jump_right: T,
}

impl<T: Scalar> Default for Shape<T> {
    fn default() -> Self {
        Shape {
            slope_left: T::one(),
            slope_right: T::one(),
            jump_left: T::zero(),
            jump_right: T::zero(),
        }
    }
}

impl<T: Scalar> Shape<T> {
    pub fn with_peak(&self, peak: T) -> Result<Preference<T>> {
        Preference::new(
            peak,
            self.slope_left.clone(),
            self.slope_right.clone(),
            self.jump_left.clone(),
            self.jump_right.clone(),
        )
    }
}

impl<T: Scalar> Preference<T> {
    pub fn new(peak: T, slope_left: T, slope_right: T, jump_left: T, jump_right: T) -> Result<Self> {
        if scalar::is_negative(&peak) {
            return Err(Error::InvalidPreference(format!("negative peak {peak}")));
        }
        if !scalar::lt(&T::zero(), &slope_left) || !scalar::lt(&T::zero(), &slope_right) {
            return Err(Error::InvalidPreference("slopes must be strictly positive".into()));
        }
        if scalar::is_negative(&jump_left) || scalar::is_negative(&jump_right) {
            return Err(Error::InvalidPreference("jumps must be nonnegative".into()));
        }
        Ok(Preference { peak, slope_left, slope_right, jump_left, jump_right })
    }

    /// Unit slopes, no jumps.
    pub fn symmetric(peak: T) -> Result<Self> {
        Shape::default().with_peak(peak)
    }

    pub fn peak(&self) -> &T {
        &self.peak
    }

    pub fn slope_left(&self) -> &T {
        &self.slope_left
    }

    pub fn slope_right(&self) -> &T {
        &self.slope_right
    }

    pub fn jump_left(&self) -> &T {
        &self.jump_left
    }

    pub fn jump_right(&self) -> &T {
        &self.jump_right
    }

    pub fn shape(&self) -> Shape<T> {
        Shape {
            slope_left: self.slope_left.clone(),
            slope_right: self.slope_right.clone(),
            jump_left: self.jump_left.clone(),
            jump_right: self.jump_right.clone(),
        }
    }

    /// Same shape, different peak.
    pub fn with_peak(&self, peak: T) -> Result<Self> {
        self.shape().with_peak(peak)
    }

    pub fn disutility(&self, x: &T) -> Result<T> {
        if scalar::is_negative(x) {
            return Err(Error::Domain(format!("amount {x} is negative")));
        }
        Ok(self.disutility_unchecked(x))
    }

    pub(crate) fn disutility_unchecked(&self, x: &T) -> T {
        match x.approx_cmp(&self.peak) {
            Ordering::Equal => T::zero(),
            Ordering::Less => {
                self.jump_left.clone() + self.slope_left.clone() * (self.peak.clone() - x.clone())
            }
            Ordering::Greater => {
                self.jump_right.clone() + self.slope_right.clone() * (x.clone() - self.peak.clone())
            }
        }
    }

    pub fn compare(&self, x: &T, y: &T) -> Result<Comparison> {
        let dx = self.disutility(x)?;
        let dy = self.disutility(y)?;
        Ok(match dx.approx_cmp(&dy) {
            Ordering::Less => Comparison::FirstPreferred,
            Ordering::Greater => Comparison::SecondPreferred,
            Ordering::Equal => Comparison::Indifferent,
        })
    }

    /// `x` strictly preferred to `y`.
    pub fn prefers(&self, x: &T, y: &T) -> Result<bool> {
        Ok(self.compare(x, y)? == Comparison::FirstPreferred)
    }
}

/// Preference peaked at `gamma` that strictly prefers `target` to every
/// amount in `(0, gamma)`, with unit slopes.
pub fn make_step2_preference<T: Scalar>(gamma: &T, target: &T) -> Result<Preference<T>> {
    make_step2_preference_with_slope(gamma, target, &T::one())
}

/// As [`make_step2_preference`] with an explicit right slope.
///
/// The left jump is `slope_right * (target - gamma) + 1`, so every point left
/// of the peak is at least that far from indifference while `target` sits at
/// `slope_right * (target - gamma)`.
pub fn make_step2_preference_with_slope<T: Scalar>(
    gamma: &T,
    target: &T,
    slope_right: &T,
) -> Result<Preference<T>> {
    if !scalar::lt(&T::zero(), gamma) {
        return Err(Error::Precondition(format!("gamma {gamma} must be positive")));
    }
    if !scalar::lt(gamma, target) {
        return Err(Error::Precondition(format!(
            "target {target} must exceed gamma {gamma}"
        )));
    }
    let jump_left = slope_right.clone() * (target.clone() - gamma.clone()) + T::one();
    Preference::new(gamma.clone(), T::one(), slope_right.clone(), jump_left, T::zero())
}
