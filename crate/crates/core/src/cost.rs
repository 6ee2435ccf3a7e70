use core::ops::{Add, AddAssign, Neg, Sub, SubAssign};

/// Number of priority levels the engine optimizes over.
pub(crate) const LEVELS: usize = 5;

/// Lexicographic cost vector; index 0 is the most important level.
///
/// Level 0 is reserved for hard requirements (priority-1 or postponed
/// registrations left out); any positive value there means the solution is
/// not acceptable. The derived `Ord` compares level by level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub(crate) struct Cost(pub [i64; LEVELS]);

impl Cost {
    pub const ZERO: Cost = Cost([0; LEVELS]);

    pub fn level(level: usize, amount: i64) -> Cost {
        let mut c = [0; LEVELS];
        c[level] = amount;
        Cost(c)
    }

    pub fn hard(&self) -> i64 {
        self.0[0]
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(mut self, rhs: Cost) -> Cost {
        self += rhs;
        self
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(mut self, rhs: Cost) -> Cost {
        self -= rhs;
        self
    }
}

impl SubAssign for Cost {
    fn sub_assign(&mut self, rhs: Cost) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Neg for Cost {
    type Output = Cost;
    fn neg(self) -> Cost {
        Cost::ZERO - self
    }
}
