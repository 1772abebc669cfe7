//! Scalar special functions used by the likelihood and the truncated-normal
//! samplers: complementary error function, stable log normal probabilities,
//! normal quantile, log-gamma, and truncated standard-normal draws.

use crate::scalar::Scalar;
use rand::Rng;

pub fn is_finite<T: Scalar>(x: T) -> bool {
    x.as_f64().is_finite()
}

pub fn infinity<T: Scalar>() -> T {
    T::of(f64::INFINITY)
}

pub fn neg_infinity<T: Scalar>() -> T {
    T::of(f64::NEG_INFINITY)
}

/// Complementary error function, fractional error below 1.2e-7 (Chebyshev fit).
pub fn erfc<T: Scalar>(x: T) -> T {
    let z = x.abs();
    let t = T::one() / (T::one() + T::of(0.5) * z);
    let poly = T::of(-1.26551223)
        + t * (T::of(1.00002368)
            + t * (T::of(0.37409196)
                + t * (T::of(0.09678418)
                    + t * (T::of(-0.18628806)
                        + t * (T::of(0.27886807)
                            + t * (T::of(-1.13520398)
                                + t * (T::of(1.48851587)
                                    + t * (T::of(-0.82215223) + t * T::of(0.17087277)))))))));
    let ans = t * (-z * z + poly).exp();
    if x >= T::zero() {
        ans
    } else {
        T::of(2.0) - ans
    }
}

/// Scaled complementary error function `exp(x^2) erfc(x)` for `x >= 0`.
pub fn erfcx<T: Scalar>(x: T) -> T {
    if x < T::of(5.0) {
        (x * x).exp() * erfc(x)
    } else {
        // asymptotic series, alternating (2k-1)!!/(2x^2)^k
        let inv2x2 = T::one() / (T::of(2.0) * x * x);
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..8 {
            term = term * -T::of((2 * k - 1) as f64) * inv2x2;
            sum += term;
        }
        sum / (x * T::of(std::f64::consts::PI).sqrt())
    }
}

/// Standard normal CDF.
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    T::of(0.5) * erfc(-x / T::of(std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    (-T::of(0.5) * x * x).exp() / T::of((2.0 * std::f64::consts::PI).sqrt())
}

/// log of the upper tail probability `ln(1 - Phi(x))`, stable for large `x`.
pub fn ln_phi_upper<T: Scalar>(x: T) -> T {
    if x.as_f64() == f64::INFINITY {
        return neg_infinity();
    }
    if x.as_f64() == f64::NEG_INFINITY {
        return T::zero();
    }
    let z = x / T::of(std::f64::consts::SQRT_2);
    if x >= T::zero() {
        -T::of(0.5) * x * x + erfcx(z).ln() - T::of(std::f64::consts::LN_2)
    } else {
        (T::of(0.5) * erfc(z)).ln()
    }
}

/// `ln P(a <= Z <= b)` for standard normal `Z`, stable in both tails.
pub fn ln_normal_prob<T: Scalar>(a: T, b: T) -> T {
    debug_assert!(a.as_f64() <= b.as_f64());
    if a.as_f64() == f64::NEG_INFINITY && b.as_f64() == f64::INFINITY {
        return T::zero();
    }
    if a > T::zero() {
        let pa = ln_phi_upper(a);
        let pb = ln_phi_upper(b);
        pa + (-((pb - pa).exp())).ln_1p()
    } else if b < T::zero() {
        let pa = ln_phi_upper(-b);
        let pb = ln_phi_upper(-a);
        pa + (-((pb - pa).exp())).ln_1p()
    } else {
        // interval straddles zero: complement of the two tails
        let pa = T::of(0.5) * erfc(-a / T::of(std::f64::consts::SQRT_2));
        let pb = T::of(0.5) * erfc(b / T::of(std::f64::consts::SQRT_2));
        (-(pa + pb)).ln_1p()
    }
}

/// Inverse standard normal CDF (Acklam's rational approximation plus one
/// Halley refinement step).
pub fn normal_quantile<T: Scalar>(p: T) -> T {
    let pf = p.as_f64();
    if pf <= 0.0 {
        return neg_infinity();
    }
    if pf >= 1.0 {
        return infinity();
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if pf < P_LOW {
        let q = (-2.0 * pf.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if pf <= 1.0 - P_LOW {
        let q = pf - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - pf).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = T::of(x);
    // Halley refinement
    let e = normal_cdf(x) - p;
    let u = e * T::of((2.0 * std::f64::consts::PI).sqrt()) * (T::of(0.5) * x * x).exp();
    x - u / (T::one() + x * u * T::of(0.5))
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    let xf = x.as_f64();
    if xf < 0.5 {
        // reflection formula
        let pi = std::f64::consts::PI;
        return T::of(pi.ln()) - (T::of(pi) * x).sin().ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut a = T::of(COEF[0]);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += T::of(c) / (x + T::of(i as f64));
    }
    let t = x + T::of(7.5);
    T::of(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + T::of(0.5)) * t.ln() - t + a.ln()
}

/// Log density of a Gamma(shape, rate) distribution at `x > 0`.
pub fn gamma_ln_pdf<T: Scalar>(shape: T, rate: T, x: T) -> T {
    shape * rate.ln() - ln_gamma(shape) + (shape - T::one()) * x.ln() - rate * x
}

/// One draw from the standard normal truncated to `[l, u]`.
///
/// Central intervals use inverse-CDF or plain rejection; one-sided tails use
/// Rayleigh-based accept-reject, which stays efficient arbitrarily far out.
pub fn trandn<T: Scalar, R: Rng + ?Sized>(l: T, u: T, rng: &mut R) -> T {
    debug_assert!(l.as_f64() <= u.as_f64());
    let thresh = T::of(0.66);
    if l > thresh {
        tail_trandn(l, u, rng)
    } else if u < -thresh {
        -tail_trandn(-u, -l, rng)
    } else if (u - l).as_f64() > 2.0 {
        // wide interval: rejection from the untruncated normal
        loop {
            let z = T::of(standard_normal_f64(rng));
            if z >= l && z <= u {
                return z;
            }
        }
    } else {
        let pl = normal_cdf(l);
        let pu = normal_cdf(u);
        let p = pl + T::of(rng.random::<f64>()) * (pu - pl);
        normal_quantile(p)
    }
}

// Rayleigh accept-reject for the right tail, 0 < l < u.
fn tail_trandn<T: Scalar, R: Rng + ?Sized>(l: T, u: T, rng: &mut R) -> T {
    let c = l * l * T::of(0.5);
    let f = if u.as_f64().is_finite() {
        (c - u * u * T::of(0.5)).exp() - T::one()
    } else {
        -T::one()
    };
    loop {
        let x = c - (T::one() + T::of(rng.random::<f64>()) * f).ln();
        let w = T::of(rng.random::<f64>());
        if w * w * x <= c {
            return (T::of(2.0) * x).sqrt();
        }
    }
}

/// Standard normal draw as `f64` (Box-Muller on two uniforms; deterministic
/// given the RNG state).
pub fn standard_normal_f64<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
