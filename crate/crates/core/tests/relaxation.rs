use tfim_core::linalg::max_abs;
use tfim_core::{
    correlation_matrix, cso, finite_l_correlation_matrix, stationary_correlation_matrix,
    GaussianOperator, OpenChainSpectrum, QuenchConfig,
};

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn coherence_relaxes_as_inverse_three_halves_power() {
    let (n, xi, k) = (8, 1.2, 1);
    let spectrum = OpenChainSpectrum::new(n, xi).unwrap();
    let limit = stationary_correlation_matrix(n, xi, 1e-12).unwrap();
    let c_inf = cso(&GaussianOperator::state(limit.clone()), &spectrum, k).unwrap().value;
    let (mut xs, mut ys, mut zs) = (vec![], vec![], vec![]);
    for i in 0..=20 {
        let t = 3.0 + 0.25 * i as f64;
        let g = correlation_matrix(&QuenchConfig {
            quad_tol: 1e-12,
            ..QuenchConfig::new(n, xi, t)
        })
        .unwrap();
        let c = cso(&GaussianOperator::state(g.clone()), &spectrum, k).unwrap().value;
        xs.push(t.ln());
        ys.push((c - c_inf).abs().ln());
        zs.push((&g.data - &limit.data).norm().ln());
    }
    let slope = least_squares_slope(&xs, &ys);
    assert!((-1.7..=-1.3).contains(&slope), "CSO slope {slope}");
    let slope = least_squares_slope(&xs, &zs);
    assert!((-1.7..=-1.3).contains(&slope), "Γ slope {slope}");
}

#[test]
fn infinite_chain_matches_long_ring_early() {
    for t in [0.2, 0.6, 1.0] {
        let cfg = QuenchConfig {
            quad_tol: 1e-12,
            ..QuenchConfig::new(4, 1.0, t)
        };
        let inf = correlation_matrix(&cfg).unwrap();
        let ring = finite_l_correlation_matrix(&cfg.with_length(4096)).unwrap();
        assert!(max_abs(&(inf.data - ring.data)) < 1e-6, "t={t}");
    }
}

#[test]
fn moderate_rings_match_infinite_chain_inside_light_cone() {
    // finite-size corrections are exponentially small while 4t < L − N
    for (l, t) in [(16usize, 1.0), (24, 2.0)] {
        let cfg = QuenchConfig {
            quad_tol: 1e-12,
            ..QuenchConfig::new(2, 1.0, t)
        };
        let inf = correlation_matrix(&cfg).unwrap();
        let ring = finite_l_correlation_matrix(&cfg.with_length(l)).unwrap();
        assert!(max_abs(&(inf.data - ring.data)) < 1e-6, "L={l} t={t}");
    }
}

#[test]
fn stationary_limit_keeps_invariants() {
    for xi in [0.99, 1.0, 1.5] {
        let g = stationary_correlation_matrix(6, xi, 1e-10).unwrap();
        assert!(g.invariant_violation() < 1e-10);
    }
}
