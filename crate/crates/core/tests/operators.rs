use nalgebra::DMatrix;
use pdsplit::imaging::{make_blur, make_gradients, Kernel};
use pdsplit::rng::CounterRng;
use pdsplit::LinearMap;

fn dense(m: &LinearMap) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.codomain_dim(), m.domain_dim(), &m.materialize())
}

fn sample_maps() -> Vec<LinearMap> {
    let (g1, g2) = make_gradients(6, 5);
    let blur = make_blur(&Kernel::uniform(3).unwrap(), 6, 5).unwrap();
    let a = LinearMap::dense(4, 30, CounterRng::new(1, 0).gauss_vec(120)).unwrap();
    vec![
        LinearMap::identity(30),
        LinearMap::diagonal(CounterRng::new(2, 0).gauss_vec(30)),
        blur.clone(),
        g1.clone(),
        LinearMap::stack(vec![g1.clone(), g2.clone()]).unwrap(),
        LinearMap::compose(&a, &blur).unwrap(),
        LinearMap::compose(&g2, &blur).unwrap().adjoint(),
        a,
    ]
}

#[test]
fn adjoint_materializes_to_transpose() {
    for m in sample_maps() {
        let diff = (dense(&m.adjoint()) - dense(&m).transpose()).abs().max();
        assert!(diff <= 1e-13, "{diff}");
    }
}

#[test]
fn composition_materializes_to_product() {
    let maps = sample_maps();
    let blur = &maps[2];
    let g1 = &maps[3];
    let c = LinearMap::compose(g1, blur).unwrap();
    let diff = (dense(&c) - dense(g1) * dense(blur)).abs().max();
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn norm_estimates_match_singular_values() {
    for m in sample_maps() {
        let exact = dense(&m).singular_values().max();
        let est = m.estimate_norm(1e-9, 50_000, 5).unwrap().value;
        assert!((est - exact).abs() <= 0.01 * exact, "{est} vs {exact}");
        assert!(est >= exact * (1.0 - 1e-6), "estimate {est} below {exact}");
    }
}

#[test]
fn gradient_stack_norm_is_bounded_by_sqrt_eight() {
    for (w, h) in [(2, 2), (7, 3), (16, 16), (40, 1)] {
        let (g1, g2) = make_gradients(w, h);
        let s = LinearMap::stack(vec![g1, g2]).unwrap();
        let exact = dense(&s).singular_values().max();
        assert!(exact <= 8f64.sqrt() + 1e-12);
        assert!(s.norm_estimate().value <= 8f64.sqrt());
    }
}

#[test]
fn uniform_blur_has_unit_norm() {
    let b = make_blur(&Kernel::uniform(5).unwrap(), 9, 8).unwrap();
    let exact = dense(&b).singular_values().max();
    assert!((exact - 1.0).abs() < 1e-12);
}

#[test]
fn adjoint_checks_are_tight() {
    for m in sample_maps() {
        assert!(m.adjoint_check(50, 3).unwrap() <= 1e-12);
    }
}
