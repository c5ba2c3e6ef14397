//! Scalar abstraction shared by all numerical modules.

use nalgebra as na;
use num_complex::Complex;
use num_traits as nt;

/// Real floating point type the numerical core is generic over: `f32` or `f64`.
///
/// Tolerances quoted throughout the crate are for `f64`; use [`Real::tol`] to
/// scale a double-precision tolerance to the working precision.
pub trait Real:
    na::RealField + Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + rustfft::FftNum
{
    /// Lossy conversion from `f64`.
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    fn of_usize(n: usize) -> Self {
        <Self as nt::FromPrimitive>::from_usize(n).expect("usize is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// `tol` for `f64`, floored at a small multiple of machine epsilon for
    /// narrower types.
    fn tol(tol: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(256.0);
        let t = Self::lit(tol);
        if t > floor {
            t
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `exp(i·theta)`.
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

pub fn modulus<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

pub(crate) fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

pub(crate) fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_phase<T: Real>(theta: T) -> T {
    let two_pi = T::two_pi();
    let mut w = theta % two_pi;
    if w < T::zero() {
        w += two_pi;
    }
    // `-tiny % 2π + 2π` can round up to exactly 2π.
    if w >= two_pi {
        w = T::zero();
    }
    w
}

/// Pairwise summation; error grows as O(log n) and the reduction order depends
/// only on the length of the input.
pub fn pairwise_sum<T: Real>(values: &[Complex<T>]) -> Complex<T> {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        values.iter().fold(czero(), |acc, &v| acc + v)
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff<T: Real>(a: &na::DMatrix<Complex<T>>, b: &na::DMatrix<Complex<T>>) -> T {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| modulus(x - y))
        .fold(T::zero(), |m, d| if d > m { d } else { m })
}
