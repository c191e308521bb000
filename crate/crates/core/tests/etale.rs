use apaths_core::algebroid::Chart;
use apaths_core::etale::{
    bracket_jacobiator, check_arrow_invariance, check_invariance, check_presentation_independence,
    function_invariance_defect, index_tuples, invariant_poisson_bracket, refine_atlas, CoordForm, EtaleError,
    FiniteActionGroupoid,
};
use apaths_core::expr::{parse_expr, Expr};
use apaths_core::sampling::stream;
use apaths_core::Execution;
use rand::Rng;

fn coef<R: Rng>(rng: &mut R) -> Expr {
    Expr::num(rng.random_range(-1.0..1.0))
}

/// Random polynomial of degree ≤ 2 with only even-degree monomials.
fn even_quadratic<R: Rng>(rng: &mut R, dim: usize) -> Expr {
    let mut terms = vec![coef(rng)];
    for i in 0..dim {
        for j in i..dim {
            terms.push(coef(rng) * Expr::var(i) * Expr::var(j));
        }
    }
    Expr::sum(terms)
}

/// Random element of the Z/4-invariant polynomials in two variables.
fn rotation_invariant<R: Rng>(rng: &mut R) -> Expr {
    let e = |s| parse_expr(s, 2).unwrap();
    Expr::sum([
        coef(rng) * e("x1^2 + x2^2"),
        coef(rng) * e("x1^2*x2^2"),
        coef(rng) * e("x1*x2*(x1^2 - x2^2)"),
        coef(rng) * e("x1^4 + x2^4"),
    ])
}

fn plane_area(scale: Expr) -> CoordForm {
    CoordForm::two_form(2, vec![(1, 2, scale)]).unwrap()
}

#[test]
fn brackets_of_invariants_are_invariant_and_jacobi() {
    let z2 = FiniteActionGroupoid::central_inversion(Chart::cube(2, 1.0));
    let z4 = FiniteActionGroupoid::quarter_turns(Chart::cube(2, 1.0));
    let z2_4d = FiniteActionGroupoid::central_inversion(Chart::cube(4, 1.0));
    let darboux = CoordForm::darboux(4, Expr::one()).unwrap();
    let weighted = plane_area(parse_expr("2 + x1^2 + x2^2", 2).unwrap());
    for i in 0..10 {
        let mut rng = stream(51, i);
        let cases: Vec<(&FiniteActionGroupoid, &CoordForm, [Expr; 3])> = vec![
            (&z2, &weighted, std::array::from_fn(|_| even_quadratic(&mut rng, 2))),
            (&z4, &weighted, std::array::from_fn(|_| rotation_invariant(&mut rng))),
            (&z2_4d, &darboux, std::array::from_fn(|_| even_quadratic(&mut rng, 4))),
        ];
        for (g, w, [f, h, k]) in cases {
            let b = invariant_poisson_bracket(g, w, &f, &h, i).unwrap();
            assert!(function_invariance_defect(g, &b, i).unwrap().1 < 1e-9);
            assert!(bracket_jacobiator(g, w, [&f, &h, &k], i).unwrap() < 1e-6);
        }
    }
}

#[test]
fn invariance_criteria_agree() {
    let groupoids = [
        FiniteActionGroupoid::central_inversion(Chart::cube(2, 1.0)),
        FiniteActionGroupoid::quarter_turns(Chart::cube(2, 1.0)),
        FiniteActionGroupoid::central_inversion(Chart::cube(4, 1.0)),
    ];
    let mut seen = [0usize; 2];
    for i in 0..20 {
        let mut rng = stream(52, i);
        let g = &groupoids[i as usize % 3];
        let n = g.dim();
        let invariant = i % 2 == 0;
        let coeffs = index_tuples(n, 2)
            .iter()
            .map(|_| match (invariant, n) {
                (true, 2) if g.order() == 4 => rotation_invariant(&mut rng),
                (true, _) => even_quadratic(&mut rng, n),
                (false, _) => even_quadratic(&mut rng, n) + coef(&mut rng) * Expr::var(0),
            })
            .collect();
        let w = CoordForm::new(n, 2, coeffs).unwrap();
        let by_element = check_invariance(g, &w, 1e-9, i).unwrap();
        let by_arrow = check_arrow_invariance(g, &w, 1e-9, i).unwrap();
        assert_eq!(by_element.pass, by_arrow.pass, "{by_element:?} {by_arrow:?}");
        seen[by_element.pass as usize] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn refinements_do_not_change_the_bracket() {
    let z2 = FiniteActionGroupoid::central_inversion(Chart::cube(2, 1.0));
    let e = |s| parse_expr(s, 2).unwrap();
    for copies in [2, 3] {
        let r = refine_atlas(&z2, copies).unwrap();
        assert_eq!(r.arrow_count(), copies * copies * 2);
        assert_eq!(r.check_composition(50, 1).unwrap(), 0.0);
        let rep = check_presentation_independence(
            &z2,
            &r,
            &plane_area(Expr::one()),
            &e("x1^2"),
            &e("x2^2"),
            1e-12,
            3,
            Execution::Parallel,
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
    }
    let trivial = FiniteActionGroupoid::trivial(Chart::cube(2, 1.0));
    let rep = check_presentation_independence(
        &trivial,
        &refine_atlas(&trivial, 2).unwrap(),
        &plane_area(e("3 + sin(x1)")),
        &e("exp(x1)*x2"),
        &e("cos(x2)"),
        1e-12,
        4,
        Execution::Sequential,
    )
    .unwrap();
    assert_eq!(rep.max_defect, 0.0);
}

#[test]
fn precondition_failures() {
    let z2 = FiniteActionGroupoid::central_inversion(Chart::cube(2, 1.0));
    let e = |s| parse_expr(s, 2).unwrap();
    let r = refine_atlas(&z2, 2).unwrap();
    let odd = plane_area(e("x1"));
    assert!(matches!(
        check_presentation_independence(&z2, &r, &odd, &e("x1^2"), &e("x2^2"), 1e-12, 0, Execution::Sequential),
        Err(EtaleError::FormNotInvariant { .. })
    ));
    assert!(matches!(
        invariant_poisson_bracket(&z2, &plane_area(Expr::one()), &e("x1*x2"), &e("x2"), 0),
        Err(EtaleError::NotInvariant { .. })
    ));
}
