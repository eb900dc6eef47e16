use crate::error::{Error, Result};
use serde::Serialize;

/// Which side of 1 the fractional order sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// 0 < α < 1
    Sub,
    /// 1 < α < 2
    Wave,
}

/// Validated fractional order α ∈ (0,1) ∪ (1,2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 2.0 && alpha != 1.0 {
            Ok(FracOrder(alpha))
        } else {
            Err(Error::domain("FracOrder", format!("alpha = {alpha} not in (0,1)∪(1,2)")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn regime(self) -> Regime {
        if self.0 < 1.0 {
            Regime::Sub
        } else {
            Regime::Wave
        }
    }

    /// Half opening angle απ/2 of the sector the symbols live in.
    pub fn half_angle(self) -> f64 {
        self.0 * std::f64::consts::FRAC_PI_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_integers_and_out_of_range() {
        for a in [0.0, 1.0, 2.0, -0.5, 2.5, f64::NAN] {
            assert!(FracOrder::new(a).is_err(), "{a}");
        }
        assert_eq!(FracOrder::new(0.5).unwrap().regime(), Regime::Sub);
        assert_eq!(FracOrder::new(1.5).unwrap().regime(), Regime::Wave);
    }
}
