mod common;

#[test]
fn order_two_control_selects_two() {
    let report = common::ar2_history_sweep();
    let errs: Vec<(usize, f64)> = report.aggregate().iter().map(|r| (r.n, r.test_rmse)).collect();
    assert_eq!(report.selected_n, 2, "{errs:?}");
    // One lag is clearly insufficient.
    assert!(errs[0].1 > 1.5 * errs[1].1, "{errs:?}");
}
