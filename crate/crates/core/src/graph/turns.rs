use serde::{Deserialize, Serialize};

/// Geometric class of a movement from one edge onto the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TurnKind {
    Straight,
    Right,
    Left,
    UTurn,
}

/// Fallback turn costs applied to every edge pair that has no explicit entry
/// in the network's turn-penalty table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TurnCostModel {
    pub straight_s: f64,
    pub right_s: f64,
    pub left_s: f64,
    pub u_turn_s: f64,
}

impl Default for TurnCostModel {
    fn default() -> Self {
        Self {
            straight_s: 0.0,
            right_s: 0.0,
            left_s: 15.0,
            u_turn_s: 30.0,
        }
    }
}

impl TurnCostModel {
    /// All movements free; only explicit table entries cost anything.
    pub const fn zero() -> Self {
        Self {
            straight_s: 0.0,
            right_s: 0.0,
            left_s: 0.0,
            u_turn_s: 0.0,
        }
    }

    pub fn cost(&self, kind: TurnKind) -> f64 {
        match kind {
            TurnKind::Straight => self.straight_s,
            TurnKind::Right => self.right_s,
            TurnKind::Left => self.left_s,
            TurnKind::UTurn => self.u_turn_s,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.straight_s, self.right_s, self.left_s, self.u_turn_s]
            .iter()
            .all(|c| c.is_finite() && *c >= 0.0)
    }
}

/// Classifies a turn from compass bearings (degrees clockwise from north).
/// `reverses` marks an immediate return to the node the incoming edge came from.
pub fn classify_turn(in_bearing: f64, out_bearing: f64, reverses: bool) -> TurnKind {
    if reverses {
        return TurnKind::UTurn;
    }
    let mut delta = (out_bearing - in_bearing).rem_euclid(360.0);
    if delta > 180.0 {
        delta -= 360.0;
    }
    if delta.abs() > 160.0 {
        TurnKind::UTurn
    } else if delta > 45.0 {
        TurnKind::Right
    } else if delta < -45.0 {
        TurnKind::Left
    } else {
        TurnKind::Straight
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heading_north_turns() {
        assert_eq!(classify_turn(0.0, 90.0, false), TurnKind::Right);
        assert_eq!(classify_turn(0.0, 270.0, false), TurnKind::Left);
        assert_eq!(classify_turn(0.0, 10.0, false), TurnKind::Straight);
        assert_eq!(classify_turn(0.0, 180.0, false), TurnKind::UTurn);
        assert_eq!(classify_turn(350.0, 80.0, false), TurnKind::Right);
        assert_eq!(classify_turn(10.0, 300.0, false), TurnKind::Left);
        assert_eq!(classify_turn(0.0, 30.0, true), TurnKind::UTurn);
    }

    #[test]
    fn default_costs() {
        let m = TurnCostModel::default();
        assert_eq!(m.cost(TurnKind::Left), 15.0);
        assert_eq!(m.cost(TurnKind::UTurn), 30.0);
        assert_eq!(m.cost(TurnKind::Right), 0.0);
        assert_eq!(m.cost(TurnKind::Straight), 0.0);
        assert!(m.is_valid());
        assert!(!TurnCostModel { left_s: -1.0, ..m }.is_valid());
    }
}
