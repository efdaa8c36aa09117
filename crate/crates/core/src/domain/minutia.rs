use std::f64::consts::{PI, TAU};
use std::fmt;

/// Normalizes an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = normalize_angle(a);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MinutiaKind {
    Ending,
    Bifurcation,
}

impl MinutiaKind {
    pub fn code(self) -> char {
        match self {
            MinutiaKind::Ending => 'E',
            MinutiaKind::Bifurcation => 'B',
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "E" => Some(MinutiaKind::Ending),
            "B" => Some(MinutiaKind::Bifurcation),
            _ => None,
        }
    }
}

impl fmt::Display for MinutiaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// A ridge ending or bifurcation. `reliability` is present once the minutia has
/// been scored; `-inf` marks a minutia whose patch could not be extracted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minutia {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub kind: MinutiaKind,
    pub reliability: Option<f64>,
}

impl Minutia {
    pub fn new(x: f64, y: f64, theta: f64, kind: MinutiaKind) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
            kind,
            reliability: None,
        }
    }

    pub fn with_reliability(mut self, r: f64) -> Self {
        self.reliability = Some(r);
        self
    }

    pub fn distance(&self, other: &Minutia) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Applies a rotation by `angle` about the origin followed by a translation.
    pub fn transformed(&self, angle: f64, dx: f64, dy: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            x: c * self.x - s * self.y + dx,
            y: s * self.x + c * self.y + dy,
            theta: normalize_angle(self.theta + angle),
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seven_radians_wraps_once() {
        assert!((normalize_angle(7.0) - (7.0 - TAU)).abs() < 1e-15);
        assert_eq!(normalize_angle(-1e-300), 0.0);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn normalized_angle_is_congruent(a in -1e4f64..1e4) {
            let r = normalize_angle(a);
            prop_assert!((0.0..TAU).contains(&r));
            let k = ((a - r) / TAU).round();
            prop_assert!((a - r - k * TAU).abs() < 1e-9);
        }
    }
}
