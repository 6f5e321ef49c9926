use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::Error;

/// An element `re + im*i` of the Gaussian integers, with exact arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct GaussianInt {
    pub re: i64,
    pub im: i64,
}

impl GaussianInt {
    pub const ZERO: GaussianInt = GaussianInt { re: 0, im: 0 };
    pub const ONE: GaussianInt = GaussianInt { re: 1, im: 0 };
    pub const I: GaussianInt = GaussianInt { re: 0, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        GaussianInt { re, im }
    }

    pub fn conj(self) -> Self {
        GaussianInt::new(self.re, -self.im)
    }

    /// Field norm `re^2 + im^2`.
    pub fn norm(self) -> i128 {
        let (a, b) = (self.re as i128, self.im as i128);
        a * a + b * b
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }
}

impl Add for GaussianInt {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        GaussianInt::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for GaussianInt {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        GaussianInt::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for GaussianInt {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        GaussianInt::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Neg for GaussianInt {
    type Output = Self;
    fn neg(self) -> Self {
        GaussianInt::new(-self.re, -self.im)
    }
}

impl From<i64> for GaussianInt {
    fn from(v: i64) -> Self {
        GaussianInt::new(v, 0)
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re, self.im) {
            (re, 0) => write!(f, "{re}"),
            (0, im) => write!(f, "{}", imag_part(im)),
            (re, im) if im < 0 => write!(f, "{re}-{}", imag_part(-im)),
            (re, im) => write!(f, "{re}+{}", imag_part(im)),
        }
    }
}

fn imag_part(im: i64) -> String {
    match im {
        1 => "i".into(),
        -1 => "-i".into(),
        _ => format!("{im}i"),
    }
}

impl FromStr for GaussianInt {
    type Err = Error;

    /// Parses forms like `3`, `-i`, `2i`, `1-i`, `-1+3i`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse {
            line: 0,
            msg: format!("bad Gaussian integer `{s}`"),
        };
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(bad());
        }
        let Some(body) = t.strip_suffix('i') else {
            return t.parse::<i64>().map(GaussianInt::from).map_err(|_| bad());
        };
        // split at the last sign that is not the leading one
        let split = body
            .char_indices()
            .skip(1)
            .filter(|(_, c)| *c == '+' || *c == '-')
            .map(|(i, _)| i)
            .last();
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1,
            "-" => -1,
            v => v.parse::<i64>().map_err(|_| bad())?,
        };
        let re = re.parse::<i64>().map_err(|_| bad())?;
        Ok(GaussianInt::new(re, im))
    }
}
