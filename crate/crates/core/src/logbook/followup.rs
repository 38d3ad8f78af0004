use super::{Shift, Timestamp};
use serde::{Deserialize, Serialize};

/// What the vehicle was doing when the next order of its shift came in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FollowUpCategory {
    /// Next order arrived before the drop-off.
    DuringRide,
    /// Next order arrived on the way back to the place of business.
    DuringReturn,
    /// Vehicle had already reached the place of business.
    AtPoB,
    /// Last ride of the shift.
    None,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FollowUpError {
    #[error("expected {expected} return arrival entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("ride {0} needs a return arrival time to be classified")]
    MissingReturnArrival(usize),
}

/// Classifies every ride of a shift by its follow-up order.
///
/// `return_arrivals[i]` is when the vehicle would have reached the place of
/// business after ride `i` had no new order arrived; it is only consulted
/// when the next order comes after the drop-off.
pub fn classify_follow_up(
    shift: &Shift,
    return_arrivals: &[Option<Timestamp>],
) -> Result<Vec<FollowUpCategory>, FollowUpError> {
    let n = shift.rides.len();
    if return_arrivals.len() != n {
        return Err(FollowUpError::LengthMismatch {
            expected: n,
            got: return_arrivals.len(),
        });
    }
    let mut out = Vec::with_capacity(n);
    for (i, ride) in shift.rides.iter().enumerate() {
        let Some(next) = shift.rides.get(i + 1) else {
            out.push(FollowUpCategory::None);
            break;
        };
        let c = if next.order_time <= ride.dropoff_time {
            FollowUpCategory::DuringRide
        } else {
            let arrival = return_arrivals[i].ok_or(FollowUpError::MissingReturnArrival(i))?;
            if next.order_time < arrival {
                FollowUpCategory::DuringReturn
            } else {
                FollowUpCategory::AtPoB
            }
        };
        out.push(c);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowUpCounts {
    pub during_ride: u64,
    pub during_return: u64,
    pub at_pob: u64,
    pub none: u64,
}

impl FollowUpCounts {
    pub fn add(&mut self, c: FollowUpCategory) {
        match c {
            FollowUpCategory::DuringRide => self.during_ride += 1,
            FollowUpCategory::DuringReturn => self.during_return += 1,
            FollowUpCategory::AtPoB => self.at_pob += 1,
            FollowUpCategory::None => self.none += 1,
        }
    }

    pub fn merge(&mut self, o: &FollowUpCounts) {
        self.during_ride += o.during_ride;
        self.during_return += o.during_return;
        self.at_pob += o.at_pob;
        self.none += o.none;
    }

    pub fn with_follow_up(&self) -> u64 {
        self.during_ride + self.during_return + self.at_pob
    }

    /// Shares of (during ride, during return, at PoB) among rides that had a
    /// follow-up order.
    pub fn shares(&self) -> Option<[f64; 3]> {
        let n = self.with_follow_up();
        (n > 0).then(|| {
            let n = n as f64;
            [self.during_ride as f64 / n, self.during_return as f64 / n, self.at_pob as f64 / n]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logbook::tests::{order, ts};

    #[test]
    fn all_four_categories() {
        let shift = Shift {
            vehicle_id: "a".into(),
            rides: vec![
                order(0, "a", "2023-03-01T08:00:00+01:00", "2023-03-01T08:05:00+01:00", "2023-03-01T08:20:00+01:00"),
                // ordered at the exact drop-off instant: still during the ride
                order(1, "a", "2023-03-01T08:20:00+01:00", "2023-03-01T08:30:00+01:00", "2023-03-01T08:45:00+01:00"),
                order(2, "a", "2023-03-01T08:50:00+01:00", "2023-03-01T08:55:00+01:00", "2023-03-01T09:10:00+01:00"),
                order(3, "a", "2023-03-01T09:40:00+01:00", "2023-03-01T09:45:00+01:00", "2023-03-01T10:00:00+01:00"),
            ],
        };
        let arrivals = vec![
            None,
            Some(ts("2023-03-01T09:00:00+01:00")),
            Some(ts("2023-03-01T09:40:00+01:00")),
            None,
        ];
        let c = classify_follow_up(&shift, &arrivals).unwrap();
        use FollowUpCategory as C;
        assert_eq!(c, vec![C::DuringRide, C::DuringReturn, C::AtPoB, C::None]);

        let mut counts = FollowUpCounts::default();
        c.iter().for_each(|&x| counts.add(x));
        let s = counts.shares().unwrap();
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(counts.none, 1);
    }

    #[test]
    fn missing_arrival_is_reported() {
        let shift = Shift {
            vehicle_id: "a".into(),
            rides: vec![
                order(0, "a", "2023-03-01T08:00:00+01:00", "2023-03-01T08:05:00+01:00", "2023-03-01T08:20:00+01:00"),
                order(1, "a", "2023-03-01T08:30:00+01:00", "2023-03-01T08:35:00+01:00", "2023-03-01T08:45:00+01:00"),
            ],
        };
        assert_eq!(classify_follow_up(&shift, &[None, None]), Err(FollowUpError::MissingReturnArrival(0)));
        assert!(matches!(classify_follow_up(&shift, &[None]), Err(FollowUpError::LengthMismatch { .. })));
    }
}
