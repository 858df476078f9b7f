use assortnet::eval::{budget_bracket, gen_capacity, gen_revenue, COEF_RANGE};
use assortnet::models::*;
use assortnet::rng::{self, child_seed};
use assortnet::*;

fn all_assortments(n: usize) -> impl Iterator<Item = Assortment> {
    (0u64..1 << (n - 1)).map(move |bits| Assortment::from_bits(n, bits | 1 << (n - 1)))
}

fn check_normalised<M: ChoiceModel>(m: &M, n: usize) {
    for s in all_assortments(n) {
        m.probabilities(&s).unwrap().check(&s, 1e-9).unwrap();
    }
}

// adding a product never raises the probability of an incumbent
fn check_regular<M: ChoiceModel>(m: &M, n: usize, label: &str) {
    for s in all_assortments(n) {
        let p = m.probabilities(&s).unwrap();
        for j in 0..n - 1 {
            if s.contains(j) {
                continue;
            }
            let q = m.probabilities(&s.with(j, true)).unwrap();
            for i in s.members() {
                assert!(
                    q.get(i) <= p.get(i) + 1e-9,
                    "{label}: adding {j} raised {i}"
                );
            }
        }
    }
}

#[test]
fn random_utility_truths_are_regular() {
    for seed in 0..4u64 {
        for n in [3, 5, 8] {
            for kind in ModelKind::ALL {
                let m = gen_instance(kind, n, child_seed(seed, n as u64)).unwrap();
                check_normalised(&m, n);
                check_regular(&m, n, &format!("{kind} n={n} seed={seed}"));
            }
        }
    }
}

#[test]
fn logit_ratios_ignore_the_rest_of_the_assortment() {
    let n = 8;
    let AnyModel::Mnl(m) = gen_instance(ModelKind::Mnl, n, 5).unwrap() else {
        unreachable!()
    };
    for s in all_assortments(n) {
        let p = m.probabilities(&s).unwrap();
        let members: Vec<usize> = s.members().collect();
        for &i in &members {
            for &j in &members {
                let expected = (m.u[i] - m.u[j]).exp();
                assert!((p.get(i) / p.get(j) - expected).abs() <= 1e-9 * expected.max(1.0));
            }
        }
    }
}

#[test]
fn vignettes_break_regularity() {
    let fx = fixture_tables(100, 1).unwrap();
    let decoy = fx.iter().find(|f| f.name == "decoy").unwrap();
    let (_, small, p) = &decoy.cases[0];
    let (_, large, q) = &decoy.cases[1];
    assert!(small.members().all(|i| large.contains(i)));
    // adding the print-only decoy raises the print-and-internet share
    assert!(q.get(1) > p.get(1));
}

#[test]
fn revenue_and_capacity_draws_stay_in_range() {
    let u = Universe::with_no_purchase(12).unwrap();
    let mut r = rng::seeded(17);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..100_000 {
        let rev = gen_revenue(&u, &mut r).unwrap();
        assert_eq!(rev.mu[11], 0.0);
        for &m in &rev.mu[..11] {
            lo = lo.min(m);
            hi = hi.max(m);
        }
    }
    assert!(lo >= COEF_RANGE.0 && hi <= COEF_RANGE.1);
    assert!(lo < COEF_RANGE.0 + 0.01 && hi > COEF_RANGE.1 - 0.01);

    for _ in 0..100_000 {
        let cap = gen_capacity(&u, &mut r).unwrap();
        assert_eq!(cap.a[11], 0.0);
        assert!(cap.a[..11]
            .iter()
            .all(|&a| (COEF_RANGE.0..=COEF_RANGE.1).contains(&a)));
        let (b_lo, b_hi) = budget_bracket(&cap.a);
        assert!(cap.c >= b_lo && cap.c <= b_hi);
        // the bracket always admits at least the single most expensive product
        assert!(cap.c >= cap.a.iter().copied().fold(0.0, f64::max));
    }
}

#[test]
fn generated_truths_are_deterministic() {
    for kind in ModelKind::ALL {
        let a = gen_instance(kind, 10, 3).unwrap();
        let b = gen_instance(kind, 10, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_instance(kind, 10, 4).unwrap());
    }
}
