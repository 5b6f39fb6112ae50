use ngmix::tv::{nig_pdf, normal_pdf, tv_curve, tv_distance};
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn normal_pair_matches_closed_form() {
    // N(0,1) and N(0,4) cross at x^2 = 8 ln 2 / 3
    let x = (8.0 * 2f64.ln() / 3.0).sqrt();
    let phi = Normal::standard();
    let expected = 2.0 * (phi.cdf(x) - phi.cdf(x / 2.0));
    let got = tv_distance(normal_pdf(1.0), normal_pdf(2.0)).unwrap();
    assert!((got - expected).abs() < 1e-7, "{got} vs {expected}");
}

#[test]
fn nig_density_has_unit_mass_and_scale_variance() {
    for a in [0.5, 5.0] {
        let f = nig_pdf(a, 1.3).unwrap();
        let (lo, hi, n) = (-400.0, 400.0, 800_001);
        let h = (hi - lo) / (n - 1) as f64;
        let (mut mass, mut var) = (0.0, 0.0);
        for i in 0..n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            let p = f(x);
            mass += w * p;
            var += w * p * x * x;
        }
        assert!((mass - 1.0).abs() < 1e-6, "a={a}: mass {mass}");
        assert!((var - 1.69).abs() < 1e-4, "a={a}: variance {var}");
    }
}

#[test]
fn tv_curves_are_monotone() {
    let pts = tv_curve(&[0.01, 0.1, 1.0, 10.0, 100.0]).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].tv_normal < w[0].tv_normal, "{:?}", w);
        assert!(w[1].tv_cauchy > w[0].tv_cauchy, "{:?}", w);
    }
}
