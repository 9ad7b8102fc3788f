//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64` with
//! `|lo| <= ulp(hi) / 2`, giving about 32 significant decimal digits.
//!
//! Basic operations follow the error-free transformations of Dekker and
//! Knuth. Transcendental functions used by the simulator (sin, cos, exp, ln,
//! atan2, sqrt) are evaluated to full double-double accuracy; the remaining
//! `Float` methods are built from them.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{
    Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign,
};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Double {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Double {
    pub const fn new(x: f64) -> Self {
        Double { hi: x, lo: 0.0 }
    }

    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        Double { hi, lo }
    }

    /// Exact sum of two `f64`.
    pub fn sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Double { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        if !hi.is_finite() {
            return Double { hi, lo: 0.0 };
        }
        let (hi, lo) = quick_two_sum(hi, lo);
        Double { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }

    fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Double {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    fn sqr(self) -> Self {
        self * self
    }

    fn is_zero_value(self) -> bool {
        self.hi == 0.0
    }

    /// Taylor series of sin and cos for `|r| <= pi/4`.
    fn sin_cos_reduced(r: Double) -> (Double, Double) {
        let r2 = r.sqr();
        let tiny = 1e-34;
        let (mut s, mut c) = (r, Double::one());
        let (mut ts, mut tc) = (r, Double::one());
        let mut k = 1.0;
        while ts.hi.abs() > tiny || tc.hi.abs() > tiny {
            tc = -(tc * r2) / Double::new(k * (k + 1.0));
            ts = -(ts * r2) / Double::new((k + 1.0) * (k + 2.0));
            c += tc;
            s += ts;
            k += 2.0;
        }
        (s, c)
    }
}

impl From<f64> for Double {
    fn from(x: f64) -> Self {
        Double { hi: x, lo: 0.0 }
    }
}

impl Neg for Double {
    type Output = Double;
    fn neg(self) -> Double {
        Double {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Double {
    type Output = Double;
    fn add(self, b: Double) -> Double {
        let (s, e) = two_sum(self.hi, b.hi);
        if !s.is_finite() {
            return Double::new(s);
        }
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Double::renorm(s, e + f)
    }
}

impl Sub for Double {
    type Output = Double;
    fn sub(self, b: Double) -> Double {
        self + (-b)
    }
}

impl Mul for Double {
    type Output = Double;
    fn mul(self, b: Double) -> Double {
        let (p, e) = two_prod(self.hi, b.hi);
        if !p.is_finite() {
            return Double::new(p);
        }
        Double::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Double {
    type Output = Double;
    fn div(self, b: Double) -> Double {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() || b.hi == 0.0 {
            return Double::new(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Double { hi: q1, lo: q2 } + Double::new(q3)
    }
}

impl Rem for Double {
    type Output = Double;
    fn rem(self, b: Double) -> Double {
        self - (self / b).trunc() * b
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Double {
            fn $m(&mut self, b: Double) {
                *self = *self $op b;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);
assign_op!(RemAssign, rem_assign, %);

impl PartialOrd for Double {
    fn partial_cmp(&self, other: &Double) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Zero for Double {
    fn zero() -> Self {
        Double::new(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Double {
    fn one() -> Self {
        Double::new(1.0)
    }
}

impl Num for Double {
    type FromStrRadixErr = num_traits::ParseFloatError;

    /// Decimal strings are parsed through `f64`.
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Double::new)
    }
}

impl ToPrimitive for Double {
    fn to_i128(&self) -> Option<i128> {
        let t = self.trunc();
        if !t.hi.is_finite() || t.hi.abs() >= 1.7e38 {
            return None;
        }
        Some(t.hi as i128 + t.lo as i128)
    }
    fn to_i64(&self) -> Option<i64> {
        self.to_i128().and_then(|v| i64::try_from(v).ok())
    }
    fn to_u64(&self) -> Option<u64> {
        self.to_i128().and_then(|v| u64::try_from(v).ok())
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi + self.lo)
    }
}

impl FromPrimitive for Double {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        Some(Double::renorm(hi, (n - hi as i64) as f64))
    }
    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        Some(Double::renorm(hi, (n as i128 - hi as i128) as f64))
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(Double::new(x))
    }
}

impl NumCast for Double {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Double::new)
    }
}

macro_rules! const_dd {
    ($name:ident, $hi:expr, $lo:expr) => {
        fn $name() -> Self {
            Double { hi: $hi, lo: $lo }
        }
    };
}

impl FloatConst for Double {
    const_dd!(E, std::f64::consts::E, 1.4456468917292502e-16);
    const_dd!(
        FRAC_1_PI,
        std::f64::consts::FRAC_1_PI,
        -1.9678676675182486e-17
    );
    const_dd!(
        FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
        -4.833646656726457e-17
    );
    const_dd!(
        FRAC_2_PI,
        std::f64::consts::FRAC_2_PI,
        -3.935735335036497e-17
    );
    const_dd!(
        FRAC_2_SQRT_PI,
        std::f64::consts::FRAC_2_SQRT_PI,
        1.533545961316588e-17
    );
    const_dd!(
        FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        6.123233995736766e-17
    );
    const_dd!(
        FRAC_PI_3,
        std::f64::consts::FRAC_PI_3,
        -1.072081766451091e-16
    );
    const_dd!(
        FRAC_PI_4,
        std::f64::consts::FRAC_PI_4,
        3.061616997868383e-17
    );
    const_dd!(
        FRAC_PI_6,
        std::f64::consts::FRAC_PI_6,
        -5.360408832255455e-17
    );
    const_dd!(
        FRAC_PI_8,
        std::f64::consts::FRAC_PI_8,
        1.5308084989341915e-17
    );
    const_dd!(LN_10, std::f64::consts::LN_10, -2.1707562233822494e-16);
    const_dd!(LN_2, std::f64::consts::LN_2, 2.3190468138462996e-17);
    const_dd!(LOG10_E, std::f64::consts::LOG10_E, 1.098319650216765e-17);
    const_dd!(LOG2_E, std::f64::consts::LOG2_E, 2.0355273740931033e-17);
    const_dd!(PI, std::f64::consts::PI, 1.2246467991473532e-16);
    const_dd!(SQRT_2, std::f64::consts::SQRT_2, -9.667293313452913e-17);
    const_dd!(TAU, std::f64::consts::TAU, 2.4492935982947064e-16);
    const_dd!(LOG10_2, std::f64::consts::LOG10_2, -2.8037281277851704e-18);
    const_dd!(LOG2_10, std::f64::consts::LOG2_10, 1.661617516973592e-16);
}

impl Float for Double {
    fn nan() -> Self {
        Double::new(f64::NAN)
    }
    fn infinity() -> Self {
        Double::new(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Double::new(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Double::new(-0.0)
    }
    fn min_value() -> Self {
        Double::new(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Double::new(f64::MIN_POSITIVE)
    }
    /// `2^-104`, the unit roundoff of double-double arithmetic.
    fn epsilon() -> Self {
        Double::new(4.930380657631324e-32)
    }
    fn max_value() -> Self {
        Double::new(f64::MAX)
    }
    fn is_nan(self) -> bool {
        self.hi.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi.classify()
    }
    fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            Double::renorm(hi, self.lo.floor())
        } else {
            Double::new(hi)
        }
    }
    fn ceil(self) -> Self {
        let hi = self.hi.ceil();
        if hi == self.hi {
            Double::renorm(hi, self.lo.ceil())
        } else {
            Double::new(hi)
        }
    }
    fn round(self) -> Self {
        let half = Double::new(0.5);
        if self.hi >= 0.0 {
            (self + half).floor()
        } else {
            -((-self) + half).floor()
        }
    }
    fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            self.floor()
        } else {
            self.ceil()
        }
    }
    fn fract(self) -> Self {
        self - self.trunc()
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Double::new(self.hi.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Double::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Double::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base.sqr();
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
    fn powf(self, n: Self) -> Self {
        (n * self.ln()).exp()
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Double::zero()
            } else {
                Double::nan()
            };
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (p, e) = two_prod(ax, ax);
        let corr = (self - Double { hi: p, lo: e }).hi * (x * 0.5);
        Double::sum(ax, corr)
    }
    fn exp(self) -> Self {
        if self.hi > 709.8 {
            return Double::infinity();
        }
        if self.hi < -745.2 {
            return Double::zero();
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = (self - Double::LN_2().mul_f64(k)).ldexp(-10);
        let mut term = r;
        let mut sum = r;
        let mut i = 2.0;
        while term.hi.abs() > 1e-36 {
            term = term * r / Double::new(i);
            sum += term;
            i += 1.0;
        }
        // (1 + s)^(2^10) - 1 by repeated doubling of s -> 2s + s^2
        for _ in 0..10 {
            sum = sum.mul_f64(2.0) + sum.sqr();
        }
        (sum + Double::one()).ldexp(k as i32)
    }
    fn exp2(self) -> Self {
        (self * Double::LN_2()).exp()
    }
    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Double::neg_infinity()
            } else {
                Double::nan()
            };
        }
        if self.hi.is_infinite() {
            return self;
        }
        let mut x = Double::new(self.hi.ln());
        for _ in 0..2 {
            x = x + self * (-x).exp() - Double::one();
        }
        x
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() * Double::LOG2_E()
    }
    fn log10(self) -> Self {
        self.ln() * Double::LOG10_E()
    }
    fn to_degrees(self) -> Self {
        self * Double::new(180.0) / Double::PI()
    }
    fn to_radians(self) -> Self {
        self * Double::PI() / Double::new(180.0)
    }
    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Double::zero()
        }
    }
    fn cbrt(self) -> Self {
        if self.is_zero_value() || !self.is_finite() {
            return self;
        }
        let mut y = Double::new(self.hi.cbrt());
        for _ in 0..2 {
            y = y - (y * y * y - self) / (y * y).mul_f64(3.0);
        }
        y
    }
    fn hypot(self, other: Self) -> Self {
        let (a, b) = (self.abs(), other.abs());
        let s = a.max(b);
        if s.is_zero_value() {
            return Double::zero();
        }
        if s.is_infinite() {
            return s;
        }
        let (x, y) = (a / s, b / s);
        s * (x.sqr() + y.sqr()).sqrt()
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }
    fn asin(self) -> Self {
        self.atan2((Double::one() - self.sqr()).sqrt())
    }
    fn acos(self) -> Self {
        (Double::one() - self.sqr()).sqrt().atan2(self)
    }
    fn atan(self) -> Self {
        self.atan2(Double::one())
    }
    /// Newton refinement of the `f64` angle on the unit circle.
    fn atan2(self, other: Self) -> Self {
        let (y, x) = (self, other);
        if x.is_zero_value() && y.is_zero_value() {
            return Double::new(y.hi.atan2(x.hi));
        }
        let r = x.hypot(y);
        let (xx, yy) = (x / r, y / r);
        let mut z = Double::new(y.hi.atan2(x.hi));
        for _ in 0..2 {
            let (s, c) = z.sin_cos();
            if xx.hi.abs() > yy.hi.abs() {
                z += (yy - s) / c;
            } else {
                z -= (xx - c) / s;
            }
        }
        z
    }
    fn sin_cos(self) -> (Self, Self) {
        if !self.is_finite() {
            return (Double::nan(), Double::nan());
        }
        let q = (self / Double::FRAC_PI_2()).round();
        let r = self - q * Double::FRAC_PI_2();
        let (s, c) = Double::sin_cos_reduced(r);
        match q.hi.rem_euclid(4.0) as i32 {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
    fn exp_m1(self) -> Self {
        if self.hi.abs() < 0.5 {
            let mut term = self;
            let mut sum = self;
            let mut i = 2.0;
            while term.hi.abs() > 1e-36 * sum.hi.abs().max(1e-300) {
                term = term * self / Double::new(i);
                sum += term;
                i += 1.0;
            }
            sum
        } else {
            self.exp() - Double::one()
        }
    }
    fn ln_1p(self) -> Self {
        let u = Double::one() + self;
        if u == Double::one() {
            self
        } else {
            u.ln() * self / (u - Double::one())
        }
    }
    fn sinh(self) -> Self {
        let e = self.exp_m1();
        (e + e / (e + Double::one())).mul_f64(0.5)
    }
    fn cosh(self) -> Self {
        let e = self.exp();
        (e + e.recip()).mul_f64(0.5)
    }
    fn tanh(self) -> Self {
        let e = self.mul_f64(2.0).exp_m1();
        e / (e + Double::new(2.0))
    }
    fn asinh(self) -> Self {
        let a = self.abs();
        let r = (a + (a.sqr() + Double::one()).sqrt()).ln();
        if self.hi < 0.0 {
            -r
        } else {
            r
        }
    }
    fn acosh(self) -> Self {
        (self + (self.sqr() - Double::one()).sqrt()).ln()
    }
    fn atanh(self) -> Self {
        ((Double::one() + self) / (Double::one() - self))
            .ln()
            .mul_f64(0.5)
    }
    /// Decomposition of the leading word only.
    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi.integer_decode()
    }
}

impl fmt::Debug for Double {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Double({:e} + {:e})", self.hi, self.lo)
    }
}

/// Scientific notation with 32 significant digits, or the requested number
/// of fractional digits.
impl fmt::Display for Double {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_finite() || self.is_zero_value() {
            return fmt::Display::fmt(&self.hi, f);
        }
        let digits = f.precision().map_or(32, |p| p + 1).clamp(1, 34);
        let mut x = self.abs();
        let mut e = x.hi.log10().floor() as i32;
        x /= Double::new(10.0).powi(e);
        if x.hi >= 10.0 {
            x /= Double::new(10.0);
            e += 1;
        } else if x.hi < 1.0 {
            x *= Double::new(10.0);
            e -= 1;
        }
        let mut ds = Vec::with_capacity(digits + 1);
        for _ in 0..=digits {
            let d = x.hi.floor().clamp(0.0, 9.0);
            ds.push(d as u8);
            x = (x - Double::new(d)) * Double::new(10.0);
        }
        let round_up = ds.pop().is_some_and(|d| d >= 5);
        if round_up {
            let mut i = ds.len();
            loop {
                if i == 0 {
                    ds.insert(0, 1);
                    ds.pop();
                    e += 1;
                    break;
                }
                i -= 1;
                if ds[i] == 9 {
                    ds[i] = 0;
                } else {
                    ds[i] += 1;
                    break;
                }
            }
        }
        let mut s = String::new();
        if self.hi < 0.0 {
            s.push('-');
        }
        s.push((b'0' + ds[0]) as char);
        if ds.len() > 1 {
            s.push('.');
            s.extend(ds[1..].iter().map(|&d| (b'0' + d) as char));
        }
        write!(f, "{s}e{e}")
    }
}
