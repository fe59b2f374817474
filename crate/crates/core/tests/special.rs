use approx::assert_relative_eq;
use skewfield::model::turbulence_preset;
use skewfield::special::*;

fn preset_hg() -> (f64, f64) {
    let p = turbulence_preset();
    (p.h, p.gamma)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn quadrature_corpus() {
    for hurst in [0.2, 1.0 / 3.0, 0.7] {
        let q = a_h(hurst).unwrap();
        assert!(q.converged);
        assert!(rel(q.value, 1.0 / hurst) < 1e-6, "H = {hurst}: {}", q.value);
    }
    let cfg = QuadratureConfig::default();
    let q = adaptive_integrate(|x| x * x, 0.0, 1.0, &cfg).unwrap();
    assert!((q.value - 1.0 / 3.0).abs() < 1e-12);
    let cfg = QuadratureConfig::default().singular([SingularPoint::with_exponent(0.0, -0.5)]);
    let q = adaptive_integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &cfg).unwrap();
    assert!(rel(q.value, 2.0) < 1e-8);
}

#[test]
fn variance_routes_agree() {
    let (h, g) = preset_hg();
    for cutoff in [Cutoff::TruncatedGaussian, Cutoff::Gaussian] {
        let ibp = variance_ibp(h, g, cutoff).unwrap();
        let sym = variance_symmetric(h, g, cutoff).unwrap();
        assert!(ibp.converged && sym.converged);
        assert!(ibp.value > 0.0);
        assert!(rel(ibp.value, sym.value) < 1e-4, "{cutoff:?}: {} vs {}", ibp.value, sym.value);
    }
}

#[test]
fn variance_gamma_zero_limit() {
    let h = 1.0 / 3.0;
    let c = Cutoff::TruncatedGaussian;
    let mono = variance_ibp(h, 0.0, c).unwrap().value;
    let near = variance_ibp(h, 1e-3, c).unwrap().value;
    assert!(rel(near, mono) < 1e-3, "{near} vs {mono}");
    let sym = variance_symmetric(h, 0.0, c).unwrap().value;
    assert!(rel(sym, mono) < 1e-4, "{sym} vs {mono}");
}

#[test]
fn variance_grows_toward_divergence() {
    let h = 0.3;
    let values: Vec<f64> = [0.2, 0.4, 0.6, 0.8, 0.9]
        .iter()
        .map(|f| variance_symmetric(h, (f * h / 2.0f64).sqrt(), Cutoff::TruncatedGaussian).unwrap().value)
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
    assert!(values[4] > 4.0 * values[0], "{values:?}");
    assert!(variance_symmetric(h, (h / 2.0f64).sqrt(), Cutoff::TruncatedGaussian).is_err());
}

#[test]
fn variance_high_precision_reference() {
    // H = 0.3, gamma^2 = 0.09, truncated cutoff; reference from a 40-digit
    // quadrature of the symmetric form with exact offsets.
    let g = 0.09f64.sqrt();
    let reference = 5.322_166_369_604_59;
    for q in [
        variance_symmetric(0.3, g, Cutoff::TruncatedGaussian).unwrap(),
        variance_ibp(0.3, g, Cutoff::TruncatedGaussian).unwrap(),
    ] {
        assert!(q.converged);
        assert!(rel(q.value, reference) < 1e-8, "{}", q.value);
    }
}

#[test]
fn gaussian_autocorrelation_derivative() {
    // At H = 1/2 and the Gaussian cutoff, (phi ⋆ phi)(h) = sqrt(pi) exp(-h^2/4).
    for h in [0.1, 0.7, 2.0, -1.3] {
        let q = phi_star_phi_deriv(h, 0.5, Cutoff::Gaussian).unwrap();
        let exact = -0.5 * h * std::f64::consts::PI.sqrt() * (-h * h / 4.0).exp();
        assert_relative_eq!(q.value, exact, max_relative = 1e-9);
    }
}

#[test]
fn autocorrelation_derivative_small_h() {
    let h = 1.0 / 3.0;
    let a = h - 0.5;
    let target = a * pv_constant(h).unwrap().value;
    for cutoff in [Cutoff::TruncatedGaussian, Cutoff::Gaussian] {
        let x = 1e-7;
        let ratio = phi_star_phi_deriv(x, h, cutoff).unwrap().value / x.powf(2.0 * h - 1.0);
        assert!(rel(ratio, target) < 0.02, "{cutoff:?}: {ratio} vs {target}");
    }
}

#[test]
fn increment_variance_constant_routes() {
    let (hp, gp) = preset_hg();
    for (h, g) in [(hp, gp), (0.3, 0.1), (0.7, 0.2)] {
        let direct = increment_variance_constant(h, g).unwrap();
        let pv = increment_variance_constant_pv(h, g).unwrap();
        assert!(direct.converged && pv.converged);
        assert!(direct.value > 0.0);
        assert!(rel(direct.value, pv.value) < 1e-3, "H = {h}: {} vs {}", direct.value, pv.value);
        assert!(a_gamma_h(h, g).unwrap().value > 0.0);
    }
}

/// `r_gamma` with the odd singularity at `x = 1` cancelled by pairing
/// `1 - t` with `1 + t`, and the leading `2 x^(2b)` tail integrated in closed form.
fn r_gamma_oracle(g2: f64) -> f64 {
    let b = -0.5 - 4.0 * g2;
    // x = 1 - t and x = 1 + t together; `s` is 1 - t, passed exactly.
    let paired = |t: f64, s: f64| s.powf(b) * ((1.0 + s).powf(b) - t.powf(b)) + (1.0 + t).powf(b) * ((2.0 + t).powf(b) + t.powf(b));
    let n = 400_000;
    let near = simpson_graded(|t| paired(t, 1.0 - t), 0.0, 0.5, 8.0, n) + simpson_graded(|s| paired(1.0 - s, s), 0.0, 0.5, 8.0, n);
    let rest = |x: f64| x.powf(b) * ((x + 1.0).powf(b) + (x - 1.0).powf(b)) - 2.0 * x.powf(2.0 * b);
    let far = simpson_graded(rest, 2.0, 1e5, 4.0, n);
    let lead = 2.0 * 2f64.powf(2.0 * b + 1.0) / (-2.0 * b - 1.0);
    near + far + lead
}

#[test]
fn r_gamma_behaviour() {
    for g2 in [0.00625f64, 0.1, 0.12] {
        let r = r_gamma_const(g2.sqrt()).unwrap();
        assert!(r.converged);
        let oracle = r_gamma_oracle(g2);
        assert!(rel(r.value, oracle) < 1e-7, "gamma^2 = {g2}: {} vs {oracle}", r.value);
    }
    let g = 0.025f64.sqrt() / 2.0;
    let near = r_gamma_const_with(g, 1e3).unwrap();
    let far = r_gamma_const_with(g, 1e6).unwrap();
    assert!(near.converged && near.value.is_finite());
    assert!(rel(near.value, far.value) < 1e-6);
    // Towards gamma^2 = 1/8 the two sides of x = 1 each blow up but their
    // sum stays finite and keeps falling.
    let values: Vec<f64> = [0.1, 0.11, 0.115, 0.12, 0.124]
        .iter()
        .map(|g2: &f64| {
            let r = r_gamma_const(g2.sqrt()).unwrap();
            assert!(r.converged && r.value.is_finite());
            r.value
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn c_gamma_decomposition() {
    for h in [1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0] {
        let c = c_gamma_eval(h, 0.0).unwrap().value;
        assert!((c - 2.0 * (1.0f64 / h).ln()).abs() < 50.0);
    }
    let g = 0.05f64.sqrt();
    let r = r_gamma_const(g).unwrap().value;
    let h: f64 = 1e-8;
    let scaled = c_gamma_eval(h, g).unwrap().value * h.powf(8.0 * g * g);
    assert!(rel(scaled, r) < 0.05, "{scaled} vs {r}");
}

#[test]
fn f_h_vanishes_at_half() {
    for i in 0..20 {
        let h = 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0);
        assert!(f_h_eval(0.5, h, 0.0).unwrap().value.abs() < 1e-10);
    }
}

#[test]
fn f_h_sign_scan() {
    let mut worst = f64::INFINITY;
    for hurst in [0.3, 0.35, 0.38, 0.4, 0.6, 0.7, 0.8, 0.9] {
        for i in 0..13 {
            let h = 10f64.powf(-2.0 + i as f64 / 3.0);
            let v = f_h_eval(hurst, h, 0.0).unwrap();
            worst = worst.min((0.5 - hurst) * v.value);
        }
    }
    assert!(worst > 0.0, "{worst}");
}

#[test]
fn f_h_singularity_branches() {
    let power = f_h_singularity_check(0.1).unwrap();
    assert_eq!(power.kind, SingularityKind::Power);
    assert!((power.fitted_exponent.unwrap() + 0.2).abs() < 0.03);
    let log = f_h_singularity_check(1.0 / 6.0).unwrap();
    assert_eq!(log.kind, SingularityKind::Logarithmic);
    assert!(log.deviation < 0.1, "{}", log.deviation);
    let bounded = f_h_singularity_check(0.3).unwrap();
    assert_eq!(bounded.kind, SingularityKind::Bounded);
    assert!(bounded.max_near_one.is_finite() && bounded.max_near_one < 10.0 * bounded.reference_value);
}

#[test]
fn f_h_large_h_decay() {
    for hurst in [1.0 / 3.0, 0.7] {
        let (h1, h2) = (1e3, 1e4);
        let f1 = f_h_eval(hurst, h1, 0.0).unwrap().value;
        let f2 = f_h_eval(hurst, h2, 0.0).unwrap().value;
        let slope = (f2 / f1).ln() / (h2 / h1).ln();
        assert!((slope - (hurst - 1.5)).abs() < 0.05, "H = {hurst}: {slope}");
        let k = f_h_large_constant(hurst).unwrap().value;
        assert!(rel(f2, k * h2.powf(hurst - 1.5)) < 0.01);
    }
}

/// Composite Simpson rule on `[lo, hi]` after `x = lo + (hi - lo) u^m`,
/// which tames an integrable endpoint singularity at `lo`.
fn simpson_graded<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, m: f64, n: usize) -> f64 {
    let w = hi - lo;
    let g = |u: f64| {
        if u == 0.0 {
            0.0
        } else {
            f(lo + w * u.powf(m)) * w * m * u.powf(m - 1.0)
        }
    };
    let step = 1.0 / n as f64;
    let mut s = g(0.0) + g(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * step);
    }
    s * step / 3.0
}

#[test]
fn f_h_small_argument_coefficient_vanishes() {
    // The small-argument equivalent f_H(h) ~ C h carries
    // C = -2a ∫_0^∞ x^(a-1) D1 D2 dx, which cancels; f_H(h) falls off as
    // h^(1 + 2H) instead.
    let hurst = 1.0 / 3.0;
    let a = hurst - 0.5;
    let g = |x: f64| x.abs().powf(a);
    // `d = x - 1` is passed exactly so samples next to x = 1 stay finite.
    let integrand = |x: f64, d: f64| {
        let d1 = g(d) - g(x + 1.0);
        let d2 = g(d) + g(x + 1.0) - 2.0 * g(x);
        x.powf(a - 1.0) * d1 * d2
    };
    let n = 200_000;
    let pieces = |f: &dyn Fn(f64, f64) -> f64| {
        simpson_graded(|x| f(x, x - 1.0), 0.0, 0.5, 3.0, n)
            + simpson_graded(|t| f(1.0 - t, -t), 0.0, 0.5, 4.0, n)
            + simpson_graded(|t| f(1.0 + t, t), 0.0, 1.0, 4.0, n)
            + simpson_graded(|x| f(x, x - 1.0), 2.0, 2e4, 4.0, n)
    };
    let abs_integrand = |x: f64, d: f64| integrand(x, d).abs();
    let oracle = -2.0 * a * pieces(&integrand);
    let scale = 2.0 * a.abs() * pieces(&abs_integrand);
    let ours = f_h_small_constant(hurst).unwrap().value;
    assert!(oracle.abs() < 1e-4 * scale, "{oracle} vs scale {scale}");
    assert!(ours.abs() < 1e-8 * scale, "{ours} vs scale {scale}");

    let r3 = f_h_eval(hurst, 1e-3, 0.0).unwrap().value / 1e-3;
    let r4 = f_h_eval(hurst, 1e-4, 0.0).unwrap().value / 1e-4;
    let slope = (r3 / r4).log10();
    assert!((slope - 2.0 * hurst).abs() < 0.05, "{slope}");
}

#[test]
fn increment_correlation_near_scale() {
    let ell = 0.1;
    // H = 0.1: successive differences towards h = l expose |h - l|^(3H - 1/2).
    let hurst = 0.1;
    let v = |d: f64| phi_ell_star_sq(ell - d, ell, hurst, Cutoff::TruncatedGaussian).unwrap().value;
    let ds: Vec<f64> = (0..8).map(|k| 1e-3 * 10f64.powf(-0.5 * k as f64)).collect();
    let pts: Vec<(f64, f64)> = ds
        .windows(2)
        .map(|w| ((w[1]).ln(), (v(w[1]) - v(w[0])).abs().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - (3.0 * hurst - 0.5)).abs() < 0.03, "{slope}");

    // H = 0.3: bounded across h = l.
    let hurst = 0.3;
    let far = phi_ell_star_sq(0.5 * ell, ell, hurst, Cutoff::TruncatedGaussian).unwrap().value.abs();
    let near = (1..=20)
        .map(|k| {
            let h = ell * (0.99 + 0.001 * k as f64);
            phi_ell_star_sq(h, ell, hurst, Cutoff::TruncatedGaussian).unwrap().value.abs()
        })
        .fold(0.0, f64::max);
    assert!(near.is_finite() && near < 10.0 * far, "{near} vs {far}");
}

#[test]
fn increment_correlation_small_h() {
    // The linear coefficient of the small-h equivalent vanishes, as for f_H.
    let (hurst, _) = preset_hg();
    let ell = 0.01;
    let c = Cutoff::TruncatedGaussian;
    let lin = phi_ell_star_sq_small_constant(ell, hurst, c).unwrap();
    let v = phi_ell_star_sq(1e-3 * ell, ell, hurst, c).unwrap().value;
    assert!(lin.value.abs() < 1e-6 * v / (1e-3 * ell), "{lin:?} vs {v}");
    let r3 = v / (1e-3 * ell);
    let r4 = phi_ell_star_sq(1e-4 * ell, ell, hurst, c).unwrap().value / (1e-4 * ell);
    assert!(((r3 / r4).log10() - 2.0 * hurst).abs() < 0.05);
}

#[test]
fn third_moment_predictions() {
    let p = turbulence_preset();
    let ells = [1e-3, 3e-3, 1e-2];
    let eq: Vec<f64> = ells
        .iter()
        .map(|&l| third_moment_prediction(l, &p, ThirdMomentMode::Equivalent).unwrap())
        .collect();
    assert!(eq.iter().all(|v| *v < 0.0));
    let slope = (eq[2] / eq[0]).ln() / (ells[2] / ells[0]).ln();
    assert!((slope - skewfield::model::xi_spectrum(3.0, &p)).abs() < 1e-6);
    let many = third_moment_equivalent_many(&ells, &p).unwrap();
    for (a, b) in many.iter().zip(&eq) {
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    // The exact moment has the same sign and drifts towards the
    // equivalent as the scale shrinks.
    let (h, g) = (p.h, p.gamma);
    let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&l| {
            let ex = third_moment_exact(l, h, g, Cutoff::TruncatedGaussian).unwrap();
            assert!(ex.converged && ex.value < 0.0);
            third_moment_equivalent(l, h, g).unwrap().value / ex.value
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
}

#[test]
fn third_moment_gamma_zero_branch() {
    let h = 1.0 / 3.0;
    let e1 = third_moment_equivalent(1e-3, h, 0.0).unwrap().value;
    let e2 = third_moment_equivalent(1e-4, h, 0.0).unwrap().value;
    let expect = 10f64.powf(-3.0 * h) * (4.0 / 3.0);
    assert_relative_eq!(e2 / e1, expect, max_relative = 1e-12);
    assert!(e1 < 0.0);
}
