//! The 365-day calendar.
//!
//! Every year is normalized to 365 days by deleting February 29, so February
//! always has 28 days and day-of-year indices are comparable across years.

use crate::error::{Error, Result};

/// Month lengths of the normalized year (February fixed at 28).
pub const MONTH_LENGTHS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// Days in the normalized year.
pub const YEAR_LENGTH: u32 = 365;

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

/// Day-of-year (1..=365) of a civil date in the normalized calendar.
///
/// Returns `None` for February 29, which does not exist in the normalized
/// year.
pub fn day_of_year(month: u32, day: u32) -> Option<u32> {
    if month == 2 && day == 29 {
        return None;
    }
    if month < 1 || month > 12 || day < 1 || day > MONTH_LENGTHS[month as usize - 1] {
        return None;
    }
    let preceding: u32 = MONTH_LENGTHS[..month as usize - 1].iter().sum();
    Some(preceding + day)
}

/// Month (1..=12) containing a normalized day-of-year.
pub fn month_of_day(doy: u32) -> Result<u32> {
    if doy < 1 || doy > YEAR_LENGTH {
        return Err(Error::Calendar(format!("day of year {doy} outside 1..=365")));
    }
    let mut remaining = doy;
    for (i, &len) in MONTH_LENGTHS.iter().enumerate() {
        if remaining <= len {
            return Ok(i as u32 + 1);
        }
        remaining -= len;
    }
    unreachable!("month lengths sum to 365");
}

/// Validates a civil date (leap-aware), returning `(month, day)` errors early.
pub fn check_civil_date(year: i32, month: u32, day: u32) -> Result<()> {
    if month < 1 || month > 12 {
        return Err(Error::Calendar(format!("{year:04}-{month:02}-{day:02}: bad month")));
    }
    let max_day = if month == 2 && is_leap_year(year) {
        29
    } else {
        MONTH_LENGTHS[month as usize - 1]
    };
    if day < 1 || day > max_day {
        return Err(Error::Calendar(format!("{year:04}-{month:02}-{day:02}: bad day")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn march_first_is_day_60() {
        // 31 + 28 + 1, regardless of leap status of the civil year
        assert_eq!(day_of_year(3, 1), Some(60));
    }

    #[test]
    fn feb_29_has_no_slot() {
        assert_eq!(day_of_year(2, 29), None);
    }

    #[test]
    fn year_ends_at_365() {
        assert_eq!(day_of_year(12, 31), Some(365));
        assert_eq!(month_of_day(365).unwrap(), 12);
        assert_eq!(month_of_day(1).unwrap(), 1);
        assert_eq!(month_of_day(60).unwrap(), 3);
    }

    #[test]
    fn leap_years_1950_2015() {
        let leaps = (1950..=2015).filter(|&y| is_leap_year(y)).count();
        assert_eq!(leaps, 16);
    }
}
