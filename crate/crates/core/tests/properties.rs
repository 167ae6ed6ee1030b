use flamefront_core::expr::Expr;
use flamefront_core::geometry::{Node, SpaceTimeGrid};
use flamefront_core::operators::{discrete_operator_apply, pucci_minus, pucci_plus, OperatorSpec, SymMatrix};
use flamefront_core::problem::{DirichletSpec, ForcingSpec, ProblemSpec, ReactionProfile};
use flamefront_core::solver::{solve_epsilon_problem, SolutionField, SolverConfig};
use proptest::prelude::*;

const LAM: f64 = 1.0;
const BIG: f64 = 2.0;

fn sym2() -> impl Strategy<Value = SymMatrix> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| SymMatrix::new(2, vec![a, b, b, c]).unwrap())
}

fn psd2() -> impl Strategy<Value = SymMatrix> {
    // B Bᵀ is non-negative definite.
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c, d)| {
        SymMatrix::new(2, vec![a * a + b * b, a * c + b * d, a * c + b * d, c * c + d * d]).unwrap()
    })
}

fn small_grid() -> SpaceTimeGrid {
    SpaceTimeGrid::new(2, 9, 0.05, 4).unwrap()
}

proptest! {
    #[test]
    fn minus_below_plus_and_dual(m in sym2()) {
        let lo = pucci_minus(&m, LAM, BIG).unwrap();
        let hi = pucci_plus(&m, LAM, BIG).unwrap();
        prop_assert!(lo <= hi);
        prop_assert!((lo + pucci_plus(&m.scale(-1.0), LAM, BIG).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pucci_is_uniformly_elliptic(m in sym2(), p in psd2()) {
        let tr = p.trace();
        let tol = 1e-9 * (1.0 + tr);
        for f in [pucci_minus, pucci_plus] {
            let inc = f(&m.add(&p), LAM, BIG).unwrap() - f(&m, LAM, BIG).unwrap();
            prop_assert!(inc >= LAM * tr - tol && inc <= BIG * tr + tol, "increment {inc}, trace {tr}");
        }
    }

    #[test]
    fn minus_concave_plus_convex(a in sym2(), b in sym2()) {
        let mid = a.add(&b).scale(0.5);
        let avg = |f: fn(&SymMatrix, f64, f64) -> flamefront_core::Result<f64>| {
            0.5 * (f(&a, LAM, BIG).unwrap() + f(&b, LAM, BIG).unwrap())
        };
        prop_assert!(pucci_minus(&mid, LAM, BIG).unwrap() >= avg(pucci_minus) - 1e-9);
        prop_assert!(pucci_plus(&mid, LAM, BIG).unwrap() <= avg(pucci_plus) + 1e-9);
    }

    #[test]
    fn positive_homogeneity(m in sym2(), s in 0.0..10.0f64) {
        let a = pucci_minus(&m.scale(s), LAM, BIG).unwrap();
        let b = s * pucci_minus(&m, LAM, BIG).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    // Raising neighbours without touching the centre cannot lower F_h.
    #[test]
    fn stencil_is_monotone(
        base in proptest::collection::vec(-1.0..1.0f64, 81 * 5),
        bump in proptest::collection::vec(0.0..1.0f64, 81),
        i in 1usize..8, j in 1usize..8,
    ) {
        let grid = small_grid();
        let level = 4;
        let u = SolutionField::new(grid.clone(), base.clone()).unwrap();
        let mut raised = base;
        let s = grid.spatial_id([i, j]);
        for (k, b) in bump.iter().enumerate() {
            if k != s {
                raised[level * 81 + k] += b;
            }
        }
        let v = SolutionField::new(grid, raised).unwrap();
        let node = Node::new_2d(i, j, level);
        for spec in [OperatorSpec::pucci_minus(LAM, BIG), OperatorSpec::pucci_plus(LAM, BIG), OperatorSpec::laplacian(2)] {
            let fu = discrete_operator_apply(&spec, &u, node).unwrap();
            let fv = discrete_operator_apply(&spec, &v, node).unwrap();
            prop_assert!(fv >= fu - 1e-9, "{:?}: {fv} < {fu}", spec.form);
        }
    }
}

fn solve_with(dirichlet: &str, forcing: f64) -> SolutionField {
    let problem = ProblemSpec {
        grid: SpaceTimeGrid::new(1, 17, 0.1, 26).unwrap(),
        operator: OperatorSpec::pucci_minus(LAM, BIG),
        reaction: ReactionProfile::bump(),
        forcing: ForcingSpec::constant(forcing),
        dirichlet: DirichletSpec::new(Expr::parse(dirichlet).unwrap()),
        one_phase: true,
    };
    solve_epsilon_problem(&problem, 0.2, &SolverConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // Larger boundary data and smaller forcing give a larger solution.
    #[test]
    fn solver_respects_comparison(a in 0.0..2.0f64, extra in 0.0..2.0f64, f in 0.5..2.0f64, df in 0.0..1.0f64) {
        let low = solve_with(&format!("{a} * t * (1 - x)"), f + df);
        let high = solve_with(&format!("{} * t * (1 - x) + {extra} * t * x", a + extra), f);
        let worst = low
            .values()
            .iter()
            .zip(high.values())
            .map(|(l, h)| l - h)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(worst <= 1e-8, "violation {worst}");
        prop_assert!(low.min() >= -1e-12 && high.min() >= -1e-12);
    }
}
