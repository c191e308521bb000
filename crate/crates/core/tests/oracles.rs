use apaths_core::algebroid::{cotangent_algebroid, lie_algebra_algebroid, so3_constants, Algebroid, Chart, PoissonBivector};
use apaths_core::expr::parse_expr;
use apaths_core::oracle::{
    check_oracle_functoriality, FlatCurve, FunctorialitySuite, LinearFamily, MatrixRepresentation, Oracle, OracleClass,
    RotationFamily,
};
use apaths_core::path::{
    concatenate, default_homotopy_tol, default_path_tol, reverse, solve_base_path, A0Path, EpsilonGrid, PathFamily,
    TimeGrid,
};
use apaths_core::sampling::{stream, symmetric_vector};
use apaths_core::Execution;
use nalgebra::Vector3;

fn a0(alg: &Algebroid, x0: &[f64], curve: &FlatCurve, grid: TimeGrid) -> A0Path {
    let p = solve_base_path(alg, x0, curve.sample(&grid), grid).unwrap();
    A0Path::new(alg, p, default_path_tol(&grid)).unwrap()
}

fn grids() -> (TimeGrid, EpsilonGrid) {
    (TimeGrid::new(65).unwrap(), EpsilonGrid::new(17).unwrap())
}

#[test]
fn zero_poisson_decisions_match_integrals() {
    let alg = cotangent_algebroid(&PoissonBivector::zero(Chart::cube(2, 2.0)));
    let (time, eps) = grids();
    let mut suite = FunctorialitySuite::default();
    let mut expected = Vec::new();
    for i in 0..40 {
        let mut rng = stream(21, i);
        let x0 = alg.chart().sample(&mut rng);
        let p = FlatCurve::random(&mut rng, 2, 1.0);
        let q = if i % 2 == 0 { p.with_same_integral(&mut rng, 1.0) } else { FlatCurve::random(&mut rng, 2, 1.0) };
        expected.push((p.integral() - q.integral()).amax() < 1e-6);
        let fam = LinearFamily { a0: p.clone(), a1: q.clone() };
        suite
            .families
            .push(PathFamily::from_fibers(&alg, &x0, time, eps, fam.fibers(&time, &eps), Execution::Parallel).unwrap());
        suite.pairs.push((a0(&alg, &x0, &p, time), a0(&alg, &x0, &q, time)));
    }
    let tol = default_homotopy_tol(&time, &eps);
    let r = check_oracle_functoriality(&Oracle::ZeroPoisson, &alg, &suite, tol, 1e-6, Execution::Parallel).unwrap();
    assert!(r.all_agree(), "{r:?}");
    assert_eq!(expected.iter().filter(|&&e| e).count(), 20);
    assert!(r.concat_defect < 1e-6 && r.inverse_defect < 1e-6 && r.identity_defect == 0.0, "{r:?}");
    assert!(r.records().iter().all(|c| c.pass));
}

#[test]
fn zero_poisson_classes_are_additive() {
    let alg = cotangent_algebroid(&PoissonBivector::zero(Chart::cube(3, 1.0)));
    let grid = TimeGrid::new(129).unwrap();
    let mut rng = stream(22, 0);
    let x0 = [0.1, -0.4, 0.3];
    let (cp, cq) = (FlatCurve::random(&mut rng, 3, 1.0), FlatCurve::random(&mut rng, 3, 1.0));
    let (p, q) = (a0(&alg, &x0, &cp, grid), a0(&alg, &x0, &cq, grid));
    let pq = concatenate(&alg, &p, &q, default_path_tol(&grid)).unwrap();
    let class = |path: &A0Path| Oracle::ZeroPoisson.class(&alg, path).unwrap();
    let OracleClass::FiberwiseCotangent { covector, .. } = class(&pq) else { panic!() };
    assert!((covector - cp.integral() - cq.integral()).amax() < 1e-6);
    let OracleClass::FiberwiseCotangent { covector, .. } = class(&reverse(&p)) else { panic!() };
    assert!((covector + cp.integral()).amax() < 1e-6);
}

#[test]
fn pair_groupoid_classes() {
    let e = |s| parse_expr(s, 2).unwrap();
    let pi = PoissonBivector::new(Chart::cube(2, 4.0), vec![(1, 2, e("1.5"))]).unwrap();
    let alg = cotangent_algebroid(&pi);
    let (time, eps) = grids();
    let mut suite = FunctorialitySuite::default();
    for i in 0..10 {
        let mut rng = stream(23, i);
        let x0 = symmetric_vector(&mut rng, 2, 1.0);
        let cq = FlatCurve::random(&mut rng, 2, 0.5);
        let q = a0(&alg, &x0, &cq, time);
        let cp = FlatCurve::random(&mut rng, 2, 0.5);
        let p = a0(&alg, q.target().as_slice(), &cp, time);
        let fam = LinearFamily { a0: cq.clone(), a1: cq.with_same_integral(&mut rng, 0.5) };
        suite
            .families
            .push(PathFamily::from_fibers(&alg, &x0, time, eps, fam.fibers(&time, &eps), Execution::Parallel).unwrap());
        suite.pairs.push((p, q));
    }
    let tol = default_homotopy_tol(&time, &eps);
    let r = check_oracle_functoriality(&Oracle::SymplecticChart, &alg, &suite, tol, 1e-6, Execution::Parallel).unwrap();
    assert!(r.all_agree(), "{r:?}");
    assert!(r.records().iter().all(|c| c.pass), "{r:?}");
}

#[test]
fn development_classes_and_decisions() {
    let alg = lie_algebra_algebroid(&so3_constants()).unwrap();
    let (time, eps) = (TimeGrid::new(65).unwrap(), EpsilonGrid::new(33).unwrap());
    let mut suite = FunctorialitySuite::default();
    for i in 0..6 {
        let mut rng = stream(24, i);
        let (cp, cq) = (FlatCurve::random(&mut rng, 3, 1.0), FlatCurve::random(&mut rng, 3, 1.0));
        suite.pairs.push((a0(&alg, &[], &cp, time), a0(&alg, &[], &cq, time)));
        let theta = if i % 2 == 0 { 0.0 } else { 0.8 };
        let fam = RotationFamily::random(&mut rng, Vector3::new(1.0, 2.0, -0.5), theta, 1.0);
        suite.families.push(fam.family(&alg, &[], time, eps, Execution::Parallel).unwrap());
    }
    let oracle = Oracle::Development(MatrixRepresentation::so3());
    let tol = default_homotopy_tol(&time, &eps);
    let r = check_oracle_functoriality(&oracle, &alg, &suite, tol, 1e-6, Execution::Parallel).unwrap();
    assert!(r.all_agree(), "{r:?}");
    assert!(r.records().iter().all(|c| c.pass), "{r:?}");
}

#[test]
fn development_of_concatenation_is_reversed_product() {
    let alg = lie_algebra_algebroid(&so3_constants()).unwrap();
    let rep = MatrixRepresentation::so3();
    let grid = TimeGrid::new(257).unwrap();
    let mut rng = stream(25, 0);
    let (cp, cq) = (FlatCurve::random(&mut rng, 3, 1.0), FlatCurve::random(&mut rng, 3, 1.0));
    let (p, q) = (a0(&alg, &[], &cp, grid), a0(&alg, &[], &cq, grid));
    let pq = concatenate(&alg, &p, &q, default_path_tol(&grid)).unwrap();
    let g = |path: &A0Path| apaths_core::oracle::development_map(&rep, path).unwrap().matrix;
    // the q half runs first
    assert!((g(&pq) - g(&q) * g(&p)).amax() < 1e-8);
    assert!((g(&pq) - g(&p) * g(&q)).amax() > 1e-3);
}
