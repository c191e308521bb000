use apaths_core::algebroid::{cotangent_algebroid, lie_algebra_algebroid, so3_constants, Algebroid, Chart, PoissonBivector};
use apaths_core::expr::parse_expr;
use apaths_core::oracle::{development_along_family, FlatCurve, MatrixRepresentation, Oracle, OracleClass, RotationFamily};
use apaths_core::path::{
    concatenate, default_path_tol, reparametrize_to_a0, solve_base_path, A0Path, APath, EpsilonGrid, SineCutoff,
    TimeGrid,
};
use apaths_core::sampling::stream;
use apaths_core::Execution;
use nalgebra::{DVector, Vector3};

fn a0(alg: &Algebroid, x0: &[f64], curve: &FlatCurve, grid: TimeGrid) -> A0Path {
    let p = solve_base_path(alg, x0, curve.sample(&grid), grid).unwrap();
    A0Path::new(alg, p, default_path_tol(&grid)).unwrap()
}

/// Classes of `(p q) r` and `p (q r)`, each factor sampled on the grid its
/// bracketing needs.
fn both_bracketings(oracle: &Oracle, alg: &Algebroid, x0: &[f64], curves: &[FlatCurve; 3]) -> (OracleClass, OracleClass) {
    let coarse = TimeGrid::new(129).unwrap();
    let fine = coarse.refined();
    let cat = |p: &A0Path, q: &A0Path| concatenate(alg, p, q, default_path_tol(p.grid())).unwrap();
    // r runs first, then q, then p
    let r = a0(alg, x0, &curves[2], coarse);
    let q = a0(alg, r.target().as_slice(), &curves[1], coarse);
    let p = a0(alg, q.target().as_slice(), &curves[0], coarse);
    let left = cat(&a0(alg, q.target().as_slice(), &curves[0], fine), &cat(&q, &r));
    let right = cat(&cat(&p, &q), &a0(alg, x0, &curves[2], fine));
    (oracle.class(alg, &left).unwrap(), oracle.class(alg, &right).unwrap())
}

#[test]
fn concatenation_is_associative_in_oracle_classes() {
    let zero = cotangent_algebroid(&PoissonBivector::zero(Chart::cube(2, 2.0)));
    let so3 = lie_algebra_algebroid(&so3_constants()).unwrap();
    for i in 0..3 {
        let mut rng = stream(41, i);
        let c2: [FlatCurve; 3] = std::array::from_fn(|_| FlatCurve::random(&mut rng, 2, 1.0));
        let (l, r) = both_bracketings(&Oracle::ZeroPoisson, &zero, &[0.2, -0.3], &c2);
        assert!(l.distance(&r) < 1e-6, "{l:?} {r:?}");
        let c3: [FlatCurve; 3] = std::array::from_fn(|_| FlatCurve::random(&mut rng, 3, 1.0));
        let dev = Oracle::Development(MatrixRepresentation::so3());
        let (l, r) = both_bracketings(&dev, &so3, &[], &c3);
        assert!(l.distance(&r) < 1e-6, "{}", l.distance(&r));
    }
}

#[test]
fn zero_poisson_class_survives_reparametrization() {
    let alg = cotangent_algebroid(&PoissonBivector::zero(Chart::cube(2, 2.0)));
    let grid = TimeGrid::new(129).unwrap();
    let fiber: Vec<DVector<f64>> = grid.nodes().map(|t| DVector::from_vec(vec![1.0 + t, (3.0 * t).sin()])).collect();
    let p = APath::new(grid, vec![DVector::from_vec(vec![0.5, 0.5]); grid.len()], fiber).unwrap();
    let a = reparametrize_to_a0(&alg, &p, &SineCutoff, default_path_tol(&grid)).unwrap();
    let (c, d) = (Oracle::ZeroPoisson.class(&alg, &p).unwrap(), Oracle::ZeroPoisson.class(&alg, &a).unwrap());
    assert!(c.distance(&d) < 1e-6, "{}", c.distance(&d));
}

#[test]
fn pair_groupoid_class_sees_only_endpoints() {
    let e = |s| parse_expr(s, 2).unwrap();
    let alg = cotangent_algebroid(&PoissonBivector::new(Chart::cube(2, 4.0), vec![(1, 2, e("-2"))]).unwrap());
    let grid = TimeGrid::new(65).unwrap();
    let mut rng = stream(42, 0);
    let c = FlatCurve::random(&mut rng, 2, 0.5);
    let d = c.with_same_integral(&mut rng, 0.5);
    let (p, q) = (a0(&alg, &[0.1, 0.2], &c, grid), a0(&alg, &[0.1, 0.2], &d, grid));
    let endpoint_gap = (p.target() - q.target()).amax();
    let (cp, cq) = (Oracle::SymplecticChart.class(&alg, &p).unwrap(), Oracle::SymplecticChart.class(&alg, &q).unwrap());
    assert_eq!(cp.distance(&cq), endpoint_gap);
    assert!(endpoint_gap < 1e-6, "{endpoint_gap:e}");
    let pinned = APath::new(grid, p.base().to_vec(), q.fiber().to_vec()).unwrap();
    assert_eq!(Oracle::SymplecticChart.class(&alg, &pinned).unwrap(), cp);
}

#[test]
fn development_is_constant_along_homotopies() {
    let alg = lie_algebra_algebroid(&so3_constants()).unwrap();
    let rep = MatrixRepresentation::so3();
    let (time, eps) = (TimeGrid::new(65).unwrap(), EpsilonGrid::new(17).unwrap());
    let fam = RotationFamily::random(&mut stream(43, 0), Vector3::new(0.0, 1.0, 0.0), 0.0, 1.2)
        .family(&alg, &[], time, eps, Execution::Parallel)
        .unwrap();
    let g = development_along_family(&rep, &fam, Execution::Parallel).unwrap();
    for h in &g {
        assert!((&h.matrix - &g[0].matrix).amax() < 1e-4);
    }
}
