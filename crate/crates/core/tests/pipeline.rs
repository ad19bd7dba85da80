//! End-to-end checks of propagation, pruning and solving through the public
//! API.

use maxplus::propagation::{build_propagators, solve, step};
use maxplus::pruning::{prune, PruneConfig};
use maxplus::{Matrix, MaxPlusApprox, Mode, ModePropagator, PrunerKind, QuadraticForm, SolveOptions, SwitchedSystem, SymMatrix};
use nalgebra::DVector;
use proptest::prelude::*;

fn scalar_mode(a: f64, d: f64, sigma: f64) -> Mode {
    Mode::quadratic(
        Matrix::from_element(1, 1, a),
        SymMatrix::from_diagonal(&[d]),
        SymMatrix::from_diagonal(&[sigma]),
    )
    .unwrap()
}

fn options(tau: f64, steps: usize, kind: PrunerKind) -> SolveOptions {
    SolveOptions {
        tau,
        steps,
        pruner: PruneConfig::new(kind),
        seed: 3,
        initial: None,
    }
}

#[test]
fn scalar_lq_settles_on_the_stationary_riccati_root() {
    // ṗ = 1 − 2p + p²/2 from p = 0 tends to the smaller root 2 − √2.
    let sys = SwitchedSystem::new(vec![scalar_mode(-1.0, 1.0, 0.5)], 1.0).unwrap();
    let report = solve(&sys, &options(0.1, 200, PrunerKind::Greedy), &|_| 1).unwrap();
    assert_eq!(report.approx.len(), 1);
    let p = report.approx.forms()[0].a.as_matrix()[(0, 0)];
    assert!((p - (2.0 - 2f64.sqrt())).abs() < 1e-9, "p = {p}");
}

fn pair() -> SwitchedSystem {
    let m1 = Mode::quadratic(
        Matrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -2.0]),
        SymMatrix::from_row_slice(2, &[1.0, 0.2, 0.2, 0.3]).unwrap(),
        SymMatrix::from_row_slice(2, &[0.4, 0.0, 0.0, 0.1]).unwrap(),
    )
    .unwrap();
    let m2 = Mode::quadratic(
        Matrix::from_row_slice(2, 2, &[-2.0, 0.0, -0.5, -1.0]),
        SymMatrix::from_row_slice(2, &[0.3, -0.2, -0.2, 1.0]).unwrap(),
        SymMatrix::from_row_slice(2, &[0.1, 0.0, 0.0, 0.4]).unwrap(),
    )
    .unwrap();
    SwitchedSystem::new(vec![m1, m2], 1.0).unwrap()
}

#[test]
fn slack_budget_matches_unpruned_propagation() {
    let sys = pair();
    let pruned = solve(&sys, &options(0.2, 4, PrunerKind::Greedy), &|i| 1 << i).unwrap();
    let plain = solve(&sys, &options(0.2, 4, PrunerKind::None), &|_| 1).unwrap();
    assert_eq!(pruned.approx.len(), 16);
    assert!(pruned.steps.iter().all(|s| s.diagnostics.is_none()));
    for x in [[0.0, 0.0], [1.0, -2.0], [-3.0, 0.5], [2.5, 2.5]] {
        assert_eq!(pruned.approx.eval_max(&x).unwrap(), plain.approx.eval_max(&x).unwrap());
    }
}

#[test]
fn every_pruner_respects_the_budget_and_stays_below() {
    let sys = pair();
    let v = solve(&sys, &options(0.2, 3, PrunerKind::None), &|_| 1).unwrap().approx;
    assert_eq!(v.len(), 8);
    for kind in [PrunerKind::SortUpper, PrunerKind::SortLower, PrunerKind::Jv, PrunerKind::Greedy, PrunerKind::Brute] {
        let out = prune(&v, 3, &PruneConfig::new(kind), 11).unwrap();
        let kept = &out.result.kept;
        assert_eq!(kept.len(), 3, "{kind}");
        assert!(kept.windows(2).all(|w| w[0] < w[1]) && kept[2] < 8, "{kind}: {kept:?}");
        let sub = v.subset(kept).unwrap();
        for i in -4..=4 {
            for j in -4..=4 {
                let x = [i as f64 * 0.75, j as f64 * 0.75];
                assert!(sub.eval_max(&x).unwrap().0 <= v.eval_max(&x).unwrap().0, "{kind} at {x:?}");
            }
        }
    }
}

#[test]
fn step_of_the_zero_form_gives_one_form_per_mode() {
    let sys = pair();
    let props = build_propagators(&sys, 0.1).unwrap();
    let next = step(&MaxPlusApprox::single(QuadraticForm::zero(2)), &props).unwrap();
    assert_eq!(next.len(), 2);
    let tags: Vec<Vec<usize>> = next.forms().iter().map(|f| f.tag.as_ref().unwrap().modes.clone()).collect();
    assert_eq!(tags, vec![vec![0], vec![1]]);
}

prop_compose! {
    fn stable_mode()(
        a in prop::collection::vec(-0.5..0.5f64, 4),
        d in prop::collection::vec(-0.5..0.5f64, 4),
        s in prop::collection::vec(-0.4..0.4f64, 4),
        l1 in prop::collection::vec(-0.5..0.5f64, 2),
        l2 in prop::collection::vec(-0.5..0.5f64, 2),
        alpha in -0.5..0.5f64,
    ) -> Mode {
        let a = Matrix::from_row_slice(2, 2, &a) - Matrix::identity(2, 2);
        let d = SymMatrix::symmetrize(Matrix::from_row_slice(2, 2, &d));
        let c = Matrix::from_row_slice(2, 2, &s);
        let sigma = SymMatrix::symmetrize(&c * c.transpose());
        Mode::new(a, d, sigma, DVector::from_vec(l1), DVector::from_vec(l2), alpha).unwrap()
    }
}

prop_compose! {
    fn small_form()(
        a in prop::collection::vec(-0.5..0.5f64, 4),
        b in prop::collection::vec(-1.0..1.0f64, 2),
        c in -1.0..1.0f64,
    ) -> QuadraticForm {
        QuadraticForm::new(SymMatrix::symmetrize(Matrix::from_row_slice(2, 2, &a)), DVector::from_vec(b), c).unwrap()
    }
}

fn close(p: &QuadraticForm, q: &QuadraticForm, tol: f64) -> bool {
    let scale = 1.0 + p.a.as_matrix().amax().max(p.b.amax()).max(p.c.abs());
    (p.a.as_matrix() - q.a.as_matrix()).amax() <= tol * scale
        && (&p.b - &q.b).amax() <= tol * scale
        && (p.c - q.c).abs() <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_half_steps_make_a_full_step(mode in stable_mode(), q in small_form(), tau in 0.02..0.2f64) {
        let half = ModePropagator::new(0, &mode, tau / 2.0).unwrap();
        let full = ModePropagator::new(0, &mode, tau).unwrap();
        let twice = half.propagate(&half.propagate(&q).unwrap()).unwrap();
        prop_assert!(close(&twice, &full.propagate(&q).unwrap(), 1e-10));
    }

    #[test]
    fn constants_pass_through_propagation(mode in stable_mode(), q in small_form(), shift in -5.0..5.0f64) {
        let prop = ModePropagator::new(0, &mode, 0.1).unwrap();
        let shifted = QuadraticForm::new(q.a.clone(), q.b.clone(), q.c + shift).unwrap();
        let base = prop.propagate(&q).unwrap();
        let moved = prop.propagate(&shifted).unwrap();
        prop_assert!(close(&base, &QuadraticForm::new(moved.a.clone(), moved.b.clone(), moved.c - shift).unwrap(), 1e-12));
    }
}
