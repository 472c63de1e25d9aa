use vofrac_bench::ScalarFixture;
use vofrac_core::{direct_sweep, fast_sweep};

#[test]
fn fixture_drives_both_sweeps() {
    let f = ScalarFixture::new(256, 1e-12);
    let d = direct_sweep(&f.trajectory, &f.schedule).unwrap();
    let s = fast_sweep(&f.trajectory, &f.schedule, &f.quad).unwrap();
    assert_eq!(d.len(), s.len());
    for (a, b) in d.iter().zip(&s) {
        assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }
}
