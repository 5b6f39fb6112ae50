mod common;

use common::*;

#[test]
fn analytic_scores_match_finite_differences() {
    for (i, (name, params)) in score_test_models().into_iter().enumerate() {
        let (worst, at) = score_fd_worst(&params, i as u64 + 1);
        assert!(worst < 1e-5, "{name}: relative error {worst:e} ({at})");
    }
}
