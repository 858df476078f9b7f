use assortnet::eval::{gen_capacity, gen_revenue};
use assortnet::models::MnlModel;
use assortnet::neural::{Arch, NetworkParams};
use assortnet::opt::*;
use assortnet::rng;
use assortnet::*;

fn toy() -> MipInstance {
    let u = Universe::with_no_purchase(4).unwrap();
    let m = MnlModel::new(vec![0.5, -0.25, 1.0, 0.0]).unwrap();
    let rev = RevenueSpec::new(&u, vec![20.0, 35.0, 12.5, 0.0]).unwrap();
    let cap = CapacityConstraint::new(&u, vec![10.0, 20.0, 30.0, 0.0], 40.0).unwrap();
    build_mnl_milp(&m, &rev, Some(&cap)).unwrap()
}

#[test]
fn golden_toy_file() {
    let text = write_lp(&toy(), None).unwrap();
    let golden = include_str!("fixtures/toy.lp");
    assert_eq!(text, golden);
}

#[test]
fn written_files_parse_back_to_the_same_problem() {
    for seed in 0..20u64 {
        let n = 3 + (seed % 6) as usize;
        let u = Universe::with_no_purchase(n).unwrap();
        let mut r = rng::seeded(seed);
        let rev = gen_revenue(&u, &mut r).unwrap();
        let cap = gen_capacity(&u, &mut r).unwrap();
        let m = MnlModel::new((0..n).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let inst = build_mnl_milp(&m, &rev, Some(&cap)).unwrap();
        let text = write_lp(&inst, None).unwrap();
        let back = read_lp(&text).unwrap();
        assert_eq!(write_lp(&back, None).unwrap(), text);
        let a = solve_milp(&inst, None).unwrap();
        let b = solve_milp(&back, None).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-8, "seed {seed}");
    }
}

#[test]
fn ratio_objective_needs_a_level() {
    let u = Universe::with_no_purchase(4).unwrap();
    let net = NetworkParams::glorot(Arch::Gasn, &[4, 4], 2).unwrap();
    let rev = gen_revenue(&u, &mut rng::seeded(2)).unwrap();
    let inst = build_nn_mip(&net, &rev, None).unwrap();
    assert!(write_lp(&inst, None).is_err());
    let text = write_lp(&inst, Some(10.0)).unwrap();
    assert!(text.contains("Subject To") && text.contains("Binaries"));
}

#[test]
fn export_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.lp");
    export_lp(&toy(), None, &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(path).unwrap(),
        write_lp(&toy(), None).unwrap()
    );
}
