mod common;

#[test]
fn one_newton_step_solves_linear_quadratic_problems() {
    for seed in 0..8 {
        let c = common::lq_check(seed);
        assert_eq!(c.shift, 0.0, "seed {seed}");
        assert!(c.state_err < 1e-6, "seed {seed}: {}", c.state_err);
        assert!(c.input_err < 1e-6, "seed {seed}: {}", c.input_err);
        // the quadratic model is exact, so nothing is left after one step
        assert!(c.remaining < 1e-12, "seed {seed}: {}", c.remaining);
    }
}
