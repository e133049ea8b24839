use std::fmt;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// A counted ratio. The value is absent when nothing was counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "FractionRepr", into = "FractionRepr")]
pub struct Fraction {
    pub correct: u64,
    pub total: u64,
}

impl Fraction {
    pub fn new(correct: u64, total: u64) -> Fraction {
        assert!(correct <= total, "numerator {correct} exceeds denominator {total}");
        Fraction { correct, total }
    }

    pub fn record(&mut self, hit: bool) {
        self.total += 1;
        self.correct += u64::from(hit);
    }

    pub fn value(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    pub fn percent(&self) -> Option<f64> {
        self.value().map(|v| v * 100.0)
    }
}

impl AddAssign for Fraction {
    fn add_assign(&mut self, rhs: Fraction) {
        self.correct += rhs.correct;
        self.total += rhs.total;
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{:.4} ({}/{})", v, self.correct, self.total),
            None => write!(f, "n/a (0/0)"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct FractionRepr {
    correct: u64,
    total: u64,
    #[serde(default)]
    value: Option<f64>,
}

impl From<FractionRepr> for Fraction {
    fn from(r: FractionRepr) -> Self {
        Fraction {
            correct: r.correct.min(r.total),
            total: r.total,
        }
    }
}

impl From<Fraction> for FractionRepr {
    fn from(f: Fraction) -> Self {
        FractionRepr {
            correct: f.correct,
            total: f.total,
            value: f.value(),
        }
    }
}
