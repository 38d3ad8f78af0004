use serde::{Deserialize, Serialize};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProfileError {
    #[error("speed profile must start at 00:00")]
    NotFromMidnight,
    #[error("speed profile breakpoints must be strictly increasing and below 24 h")]
    Unordered,
    #[error("speed factor {0} outside (0, 1]")]
    BadFactor(f64),
}

/// Piecewise-constant time-of-day multiplier on free-flow speeds.
///
/// Each breakpoint `(start_s, factor)` holds from `start_s` until the next
/// breakpoint; the last one holds until midnight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u32, f64)>", into = "Vec<(u32, f64)>")]
pub struct SpeedProfile {
    breakpoints: Vec<(u32, f64)>,
}

impl Default for SpeedProfile {
    fn default() -> Self {
        Self::uniform()
    }
}

impl SpeedProfile {
    /// Free flow all day.
    pub fn uniform() -> Self {
        Self {
            breakpoints: vec![(0, 1.0)],
        }
    }

    pub fn new(breakpoints: Vec<(u32, f64)>) -> Result<Self, ProfileError> {
        if breakpoints.first().map(|b| b.0) != Some(0) {
            return Err(ProfileError::NotFromMidnight);
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0)
            || breakpoints.iter().any(|b| f64::from(b.0) >= SECONDS_PER_DAY)
        {
            return Err(ProfileError::Unordered);
        }
        if let Some(&(_, f)) = breakpoints.iter().find(|b| !(b.1 > 0.0 && b.1 <= 1.0)) {
            return Err(ProfileError::BadFactor(f));
        }
        Ok(Self { breakpoints })
    }

    /// A weekday urban profile with morning and evening peaks.
    pub fn sample_urban() -> Self {
        let h = |x: f64| (x * 3600.0) as u32;
        Self::new(vec![
            (0, 1.0),
            (h(6.0), 0.85),
            (h(7.0), 0.65),
            (h(9.5), 0.8),
            (h(15.5), 0.7),
            (h(19.0), 0.85),
            (h(21.0), 1.0),
        ])
        .expect("static profile is valid")
    }

    pub fn breakpoints(&self) -> &[(u32, f64)] {
        &self.breakpoints
    }

    /// Factor in effect at `t` seconds after a local midnight. Times outside
    /// one day wrap around.
    pub fn factor_at(&self, t: f64) -> f64 {
        let tod = t.rem_euclid(SECONDS_PER_DAY);
        let idx = self
            .breakpoints
            .partition_point(|&(start, _)| f64::from(start) <= tod);
        self.breakpoints[idx.saturating_sub(1)].1
    }
}

impl TryFrom<Vec<(u32, f64)>> for SpeedProfile {
    type Error = ProfileError;
    fn try_from(v: Vec<(u32, f64)>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SpeedProfile> for Vec<(u32, f64)> {
    fn from(p: SpeedProfile) -> Self {
        p.breakpoints
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_wrap() {
        let p = SpeedProfile::new(vec![(0, 1.0), (3600, 0.5)]).unwrap();
        assert_eq!(p.factor_at(0.0), 1.0);
        assert_eq!(p.factor_at(3599.9), 1.0);
        assert_eq!(p.factor_at(3600.0), 0.5);
        assert_eq!(p.factor_at(86_399.0), 0.5);
        assert_eq!(p.factor_at(86_400.0 + 10.0), 1.0);
        assert_eq!(p.factor_at(-1.0), 0.5);
    }

    #[test]
    fn validation() {
        assert_eq!(SpeedProfile::new(vec![(10, 1.0)]), Err(ProfileError::NotFromMidnight));
        assert_eq!(SpeedProfile::new(vec![(0, 1.0), (0, 0.5)]), Err(ProfileError::Unordered));
        assert_eq!(SpeedProfile::new(vec![(0, 0.0)]), Err(ProfileError::BadFactor(0.0)));
        assert_eq!(SpeedProfile::new(vec![(0, 1.2)]), Err(ProfileError::BadFactor(1.2)));
        assert!(SpeedProfile::sample_urban().breakpoints().len() > 1);
    }

    #[test]
    fn serde_validates() {
        let p: SpeedProfile = serde_json::from_str("[[0, 1.0], [7200, 0.6]]").unwrap();
        assert_eq!(p.factor_at(8000.0), 0.6);
        assert!(serde_json::from_str::<SpeedProfile>("[[0, 1.5]]").is_err());
    }
}
