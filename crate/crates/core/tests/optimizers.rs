use assortnet::eval::{gen_capacity, gen_revenue};
use assortnet::models::*;
use assortnet::neural::{Arch, NetworkParams};
use assortnet::opt::*;
use assortnet::rng::{self, child_seed};
use assortnet::*;
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-7 * b.abs().max(1.0)
}

fn instance(
    n: usize,
    seed: u64,
    constrained: bool,
) -> (Universe, RevenueSpec, Option<CapacityConstraint>) {
    let u = Universe::with_no_purchase(n).unwrap();
    let mut r = rng::seeded(seed);
    let rev = gen_revenue(&u, &mut r).unwrap();
    let cap = constrained.then(|| gen_capacity(&u, &mut r).unwrap());
    (u, rev, cap)
}

fn true_value<M: ChoiceModel>(m: &M, res: &OptResult, rev: &RevenueSpec) -> f64 {
    expected_revenue(m, &res.assortment, rev).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn logit_milp_and_ro_match_enumeration(n in 3usize..=10, seed in any::<u64>(), constrained in any::<bool>()) {
        let (_, rev, cap) = instance(n, seed, constrained);
        let AnyModel::Mnl(m) = gen_instance(ModelKind::Mnl, n, child_seed(seed, 1)).unwrap() else { unreachable!() };
        let best = brute_force_opt(&m, &rev, cap.as_ref()).unwrap();
        let milp = solve_mip(&build_mnl_milp(&m, &rev, cap.as_ref()).unwrap(), None).unwrap();
        prop_assert!(close(true_value(&m, &milp, &rev), best.value));
        let ro = revenue_ordered(&m, &rev, cap.as_ref()).unwrap();
        if constrained {
            prop_assert!(ro.value <= best.value + 1e-9);
            prop_assert!(cap.as_ref().unwrap().admits(&ro.assortment));
        } else {
            prop_assert!(close(ro.value, best.value));
        }
    }

    #[test]
    fn bellman_matches_enumeration(n in 3usize..=10, seed in any::<u64>()) {
        let (_, rev, _) = instance(n, seed, false);
        let AnyModel::Mccm(m) = gen_instance(ModelKind::Mccm, n, child_seed(seed, 2)).unwrap() else { unreachable!() };
        let best = brute_force_opt(&m, &rev, None).unwrap();
        let b = mccm_bellman_opt(&m, &rev, None).unwrap();
        prop_assert!(close(true_value(&m, &b, &rev), best.value));
    }

    #[test]
    fn ranking_milp_matches_enumeration(n in 3usize..=10, seed in any::<u64>(), constrained in any::<bool>()) {
        let (_, rev, cap) = instance(n, seed, constrained);
        let AnyModel::Np(m) = gen_instance(ModelKind::Np, n, child_seed(seed, 3)).unwrap() else { unreachable!() };
        let best = brute_force_opt(&m, &rev, cap.as_ref()).unwrap();
        let milp = solve_mip(&build_np_milp(&m, &rev, cap.as_ref()).unwrap(), None).unwrap();
        prop_assert!(close(true_value(&m, &milp, &rev), best.value));
    }

    #[test]
    fn network_mip_matches_surrogate_enumeration(n in 3usize..=9, depth in 1usize..=2, seed in any::<u64>(), constrained in any::<bool>()) {
        let (_, rev, cap) = instance(n, seed, constrained);
        let net = NetworkParams::glorot(Arch::Gasn, &NetworkParams::standard_dims(n, depth, 2), child_seed(seed, 4)).unwrap();
        let inst = build_nn_mip(&net, &rev, cap.as_ref()).unwrap();
        let mip = solve_mip(&inst, None).unwrap();
        prop_assert!(mip.exact);
        let surrogate = SurrogateNet::new(net).unwrap();
        let best = brute_force_opt(&surrogate, &rev, cap.as_ref()).unwrap();
        prop_assert!(close(mip.value, best.value));
        prop_assert!(close(true_value(&surrogate, &mip, &rev), best.value));
    }

    #[test]
    fn local_search_is_feasible_and_bounded(n in 3usize..=10, seed in any::<u64>(), constrained in any::<bool>()) {
        let (_, rev, cap) = instance(n, seed, constrained);
        let AnyModel::Mmnl(m) = gen_instance(ModelKind::Mmnl, n, child_seed(seed, 5)).unwrap() else { unreachable!() };
        let best = brute_force_opt(&m, &rev, cap.as_ref()).unwrap();
        let local = adxopt(&m, &rev, cap.as_ref(), 5).unwrap();
        prop_assert!(local.value <= best.value + 1e-9);
        prop_assert!(cap.as_ref().is_none_or(|c| c.admits(&local.assortment)));
        let ratio = ratio_against(&local.assortment, &m, &rev, best.value).unwrap();
        prop_assert!(ratio > 0.0 && ratio <= 1.0 + 1e-9);
    }
}

#[test]
fn forward_pass_point_satisfies_every_network_row() {
    for k in 0..200u64 {
        let n = 3 + (k % 5) as usize;
        let net = NetworkParams::glorot(
            Arch::Gasn,
            &NetworkParams::standard_dims(n, 1 + (k % 3) as usize, 2),
            k,
        )
        .unwrap();
        let (_, rev, cap) = instance(n, k, k % 2 == 0);
        let inst = build_nn_mip(&net, &rev, cap.as_ref()).unwrap();
        let enc = inst.nn.as_ref().unwrap();
        for bits in 0u64..(1 << (n - 1)) {
            let s = Assortment::from_bits(n, bits | 1 << (n - 1));
            let x = enc.point(&inst, &s).unwrap();
            let mut net_only = inst.clone();
            net_only.rows.truncate(enc.network_rows);
            net_only.quad_rows.clear();
            assert!(
                net_only.max_violation(&x) <= 1e-9,
                "instance {k}, offer {}",
                s.to_mask_string()
            );
        }
    }
}

#[test]
fn big_m_ranges_collapse_to_forward_pass() {
    let net = NetworkParams::glorot(Arch::Gasn, &[5, 10, 10, 5], 9).unwrap();
    let (_, rev, _) = instance(5, 9, false);
    let inst = build_nn_mip(&net, &rev, None).unwrap();
    for bits in 0u64..16 {
        let s = Assortment::from_bits(5, bits | 16);
        let act = net.activations(&s.as_f64()).unwrap();
        for (l, layer) in mip_activation_range(&inst, &s).unwrap().iter().enumerate() {
            for (u, &(lo, hi)) in layer.iter().enumerate() {
                assert!((lo - act.z[l + 1][u]).abs() < 1e-7 && (hi - act.z[l + 1][u]).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn residual_networks_are_refused() {
    let net = NetworkParams::glorot(Arch::Rasn, &[4, 4], 1).unwrap();
    let (_, rev, _) = instance(4, 1, false);
    assert!(matches!(
        build_nn_mip(&net, &rev, None),
        Err(ChoiceError::Unsupported(_))
    ));
}

#[test]
fn brute_force_refuses_large_universes() {
    let n = BRUTE_FORCE_MAX_N + 1;
    let m = MnlModel::new(vec![0.0; n]).unwrap();
    let (_, rev, _) = instance(n, 3, false);
    assert!(matches!(
        brute_force_opt(&m, &rev, None),
        Err(ChoiceError::Unsupported(_))
    ));
}
