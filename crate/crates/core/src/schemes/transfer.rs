//! Pointwise maps between temperature, enthalpy and liquid fraction.

/// Liquid fraction recovered from enthalpy (clamped linear ramp over the
/// mushy plateau `[0, 1/Ste]`).
#[inline]
pub fn liquid_fraction_from_enthalpy(h: f64, ste: f64) -> f64 {
    if h < 0.0 {
        0.0
    } else if h <= 1.0 / ste {
        ste * h
    } else {
        1.0
    }
}

/// Temperature recovered from enthalpy; zero on the mushy plateau.
#[inline]
pub fn temperature_from_enthalpy(h: f64, ste: f64) -> f64 {
    let latent = 1.0 / ste;
    if h < 0.0 {
        h
    } else if h <= latent {
        0.0
    } else {
        h - latent
    }
}

/// Sharp liquid fraction: 1 above the fusion temperature, 0 at or below it.
#[inline]
pub fn sharp_liquid_fraction(theta: f64) -> f64 {
    if theta > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Enthalpy `theta + phi(theta) / Ste` with the sharp liquid fraction.
#[inline]
pub fn sharp_enthalpy(theta: f64, ste: f64) -> f64 {
    theta + sharp_liquid_fraction(theta) / ste
}

/// Regularized liquid fraction `(1 + tanh(theta / delta)) / 2`.
#[inline]
pub fn phi_delta(theta: f64, delta: f64) -> f64 {
    phi_delta_with_prime(theta, delta).0
}

/// `d phi_delta / d theta = sech^2(theta / delta) / (2 delta)`.
#[inline]
pub fn phi_delta_prime(theta: f64, delta: f64) -> f64 {
    phi_delta_with_prime(theta, delta).1
}

const SATURATION: f64 = 20.0;

/// Both the regularized fraction and its derivative from a single
/// exponential. Written in logistic form with `exp(-2|s|)`, which never
/// overflows.
#[inline]
pub fn phi_delta_with_prime(theta: f64, delta: f64) -> (f64, f64) {
    let s = theta / delta;
    // exp(-40) is below the rounding of |theta| >= 20 delta
    if s > SATURATION {
        return (1.0, 0.0);
    }
    if s < -SATURATION {
        return (0.0, 0.0);
    }
    let e = (-2.0 * s.abs()).exp();
    let inv = 1.0 / (1.0 + e);
    let phi = if s >= 0.0 { inv } else { e * inv };
    let prime = 2.0 * e * inv * inv / delta;
    (phi, prime)
}
