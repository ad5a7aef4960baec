use core::fmt;

/// A timestamp on a single integer axis.
///
/// Ordinary timestamps are minutes (or years, depending on the program) since
/// an arbitrary epoch. Two sentinel values bracket every ordinary timestamp:
/// [`Time::BEGINNING`] and [`Time::FOREVER`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(i64);

impl Time {
    pub const BEGINNING: Time = Time(i64::MIN + 1);
    pub const FOREVER: Time = Time(i64::MAX - 1);

    /// Builds an ordinary timestamp, clamping into the open range between the
    /// two sentinels.
    pub fn new(raw: i64) -> Time {
        Time(raw.clamp(Self::BEGINNING.0 + 1, Self::FOREVER.0 - 1))
    }

    /// Reconstructs a time from its raw carrier, sentinels included.
    pub fn from_raw(raw: i64) -> Time {
        if raw <= Self::BEGINNING.0 {
            Self::BEGINNING
        } else if raw >= Self::FOREVER.0 {
            Self::FOREVER
        } else {
            Time(raw)
        }
    }

    /// Clock time `hh:mm` as minutes since midnight.
    pub fn hm(hours: i64, minutes: i64) -> Time {
        Time::new(hours * 60 + minutes)
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    pub fn is_forever(self) -> bool {
        self == Self::FOREVER
    }

    pub fn is_beginning(self) -> bool {
        self == Self::BEGINNING
    }

    pub fn is_sentinel(self) -> bool {
        self.is_forever() || self.is_beginning()
    }

    /// Shifts an ordinary timestamp by `delta`; sentinels are absorbing.
    pub fn shift(self, delta: i64) -> Time {
        if self.is_sentinel() {
            self
        } else {
            Time::new(self.0.saturating_add(delta))
        }
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_forever() {
            f.write_str("forever")
        } else if self.is_beginning() {
            f.write_str("beginning")
        } else {
            write!(f, "@{}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentinels_bracket_ordinary_times() {
        for raw in [i64::MIN, -5, 0, 7, i64::MAX] {
            let t = Time::new(raw);
            assert!(Time::BEGINNING < t && t < Time::FOREVER, "{raw}");
        }
    }

    #[test]
    fn shift_is_absorbing_on_sentinels() {
        assert_eq!(Time::FOREVER.shift(1), Time::FOREVER);
        assert_eq!(Time::BEGINNING.shift(-1), Time::BEGINNING);
        assert_eq!(Time::new(2023).shift(1), Time::new(2024));
        assert!(Time::new(i64::MAX - 3).shift(10) < Time::FOREVER);
    }

    #[test]
    fn clock_times() {
        assert_eq!(Time::hm(11, 0).raw(), 660);
        assert_eq!(Time::hm(17, 30).raw(), 1050);
    }
}
