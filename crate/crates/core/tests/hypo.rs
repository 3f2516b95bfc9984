use hypoflow::hypo::*;
use proptest::prelude::*;

fn kappas() -> impl Iterator<Item = f64> {
    (0..=512).map(|k| k as f64 / 64.0)
}

#[test]
fn closed_forms_match_numeric_spectrum() {
    for kappa in kappas() {
        let numeric = eigenvalues_numeric(&m2(0.5, 1.0, kappa)).unwrap();
        let closed = eigenvalues_m2_closed_form(kappa).as_array();
        assert!(multiset_distance(&numeric, &closed) <= 1e-10, "kappa = {kappa}");
        assert!(numeric.iter().all(|v| *v >= -1e-12), "kappa = {kappa}");
    }
}

#[test]
fn optimum_sits_at_the_symmetric_point() {
    for kappa in [0.0, 1.0, 2.0, 4.0, 8.0] {
        let o = optimize_lambda_star(kappa, &SearchConfig::default()).unwrap();
        assert!((o.value - 0.5).abs() <= 1e-4, "{o:?}");
        assert!((o.lambda_opt - 0.5).abs() <= 1e-3 && (o.nu_opt - 1.0).abs() <= 1e-3, "{o:?}");
    }
    assert!(optimize_lambda_star(9.0, &SearchConfig::default()).is_err());
}

proptest! {
    #[test]
    fn zeta_grows_with_epsilon(nu in 0.01f64..(1.0 + 0.866), h in 1e-6f64..1e-3) {
        let slope = (zeta(h, 0.5, nu).unwrap() - zeta(-h, 0.5, nu).unwrap()) / (2.0 * h);
        prop_assert!(slope > 0.0);
        prop_assert!(zeta(h, 0.5, nu).unwrap() > 0.5);
    }

    #[test]
    fn pencil_values_bracket_rayleigh_quotients(lambda in 0.0f64..0.99, eps in -0.2f64..0.2, nu in 0.0f64..2.0, t in 0.0f64..std::f64::consts::TAU) {
        let (lo, hi) = zeta_pair(eps, lambda, nu).unwrap();
        let a0 = m0(lambda, 1.0);
        let a1 = m1(lambda, 1.0);
        let x = [t.cos(), t.sin()];
        let quad = |m: [[f64; 2]; 2]| x[0] * (m[0][0] * x[0] + m[0][1] * x[1]) + x[1] * (m[1][0] * x[0] + m[1][1] * x[1]);
        let mut a = a1;
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] += 0.5 * nu * eps * a0[i][j] + eps * M3[i][j];
            }
        }
        let r = quad(a) / quad(a0);
        prop_assert!(r >= lo - 1e-9 && r <= hi + 1e-9);
    }
}
