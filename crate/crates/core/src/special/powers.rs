//! Powers of (regularized) distances and their differences, evaluated
//! without catastrophic cancellation far from the singular points.

/// `|x|_eps^a`; with `eps = 0` the bare power.
#[inline]
pub fn abs_pow(x: f64, a: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        x.abs().powf(a)
    } else {
        x.hypot(eps).powf(a)
    }
}

/// `|x + d|_eps^a - |x - d|_eps^a`.
pub fn pow_diff(x: f64, d: f64, a: f64, eps: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let e2 = eps * eps;
    let p2 = (x + d) * (x + d) + e2;
    let m2 = (x - d) * (x - d) + e2;
    if p2 > 0.0 && m2 > 0.0 {
        let ratio = p2 / m2;
        if (0.25..=4.0).contains(&ratio) {
            // p^a - m^a = 2 (p m)^(a/2) sinh((a/2) ln(p/m)), with ln(p^2/m^2)
            // taken from the exact difference p^2 - m^2 = 4 x d.
            let ln_ratio = (4.0 * x * d / m2).ln_1p();
            return 2.0 * (p2 * m2).powf(0.25 * a) * (0.25 * a * ln_ratio).sinh();
        }
    }
    p2.powf(0.5 * a) - m2.powf(0.5 * a)
}

/// `|x + d|_eps^a + |x - d|_eps^a - 2 |x|_eps^a`.
pub fn pow_second_diff(x: f64, d: f64, a: f64, eps: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if x.abs() <= 2.0 * d.abs() {
        return abs_pow(x + d, a, eps) + abs_pow(x - d, a, eps) - 2.0 * abs_pow(x, a, eps);
    }
    // With c^2 = x^2 + eps^2 the two outer powers are c^a e^u and c^a e^v;
    // their mean and half difference are formed without cancellation.
    let c2 = x * x + eps * eps;
    let r = d * d / c2;
    let cross = 2.0 * x * d / c2;
    let m = 0.25 * a * ((2.0 * d * d * (eps - x) * (eps + x) + d * d * d * d) / (c2 * c2)).ln_1p();
    let half = 0.25 * a * (2.0 * cross / (1.0 - cross + r)).ln_1p();
    let s = (0.5 * half).sinh();
    c2.powf(0.5 * a) * 2.0 * (m.exp_m1() * half.cosh() + 2.0 * s * s)
}
