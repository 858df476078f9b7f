use super::mip::{MipInstance, Objective, Sense, VarKind};
use crate::choice::{CapacityConstraint, RevenueSpec};
use crate::error::{ChoiceError, Result};
use crate::models::MnlModel;

/// Linear MILP for MNL revenue maximisation. With `v_i = exp(u_i - u_np)`
/// and `y_i = P(i | S)`:
///
/// ```text
/// max  sum mu_i y_i
/// s.t. y_i <= v_i y_np
///      y_i <= v_i / (1 + v_i) z_i
///      y_i >= v_i y_np - v_i (1 - z_i)
///      sum_i y_i + y_np = 1
/// ```
pub fn build_mnl_milp(
    model: &MnlModel,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<MipInstance> {
    let n = super::check_inputs(model, rev, cap)?;
    let np = n - 1;
    let u0 = model.u[np];
    if !u0.is_finite() {
        return Err(ChoiceError::Model(
            "the no-purchase utility must be finite to anchor the MILP".into(),
        ));
    }
    let v: Vec<f64> = model.u.iter().map(|&u| (u - u0).exp()).collect();
    let mut m = MipInstance::new("mnl_milp");
    let z: Vec<usize> = (0..n)
        .map(|i| {
            let lo = if i == np { 1.0 } else { 0.0 };
            m.add_var(format!("z_{i}"), VarKind::Binary, lo, 1.0)
        })
        .collect();
    let y: Vec<usize> = (0..n)
        .map(|i| m.add_var(format!("y_{i}"), VarKind::Continuous, 0.0, 1.0))
        .collect();
    for i in 0..np {
        m.add_row(
            format!("ub_np_{i}"),
            vec![(y[i], 1.0), (y[np], -v[i])],
            Sense::Le,
            0.0,
        );
        m.add_row(
            format!("ub_z_{i}"),
            vec![(y[i], 1.0), (z[i], -v[i] / (1.0 + v[i]))],
            Sense::Le,
            0.0,
        );
        m.add_row(
            format!("lb_{i}"),
            vec![(y[i], 1.0), (y[np], -v[i]), (z[i], -v[i])],
            Sense::Ge,
            -v[i],
        );
    }
    m.add_row(
        "total",
        y.iter().map(|&j| (j, 1.0)).collect(),
        Sense::Eq,
        1.0,
    );
    if let Some(c) = cap {
        m.add_row(
            "capacity",
            (0..np).map(|i| (z[i], c.a[i])).collect(),
            Sense::Le,
            c.c,
        );
    }
    m.objective = Objective::Linear {
        coefs: (0..np)
            .filter(|&i| rev.mu[i] != 0.0)
            .map(|i| (y[i], rev.mu[i]))
            .collect(),
    };
    m.assortment_vars = z;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::Universe;
    use crate::opt::{brute_force_opt, solve_mip};

    #[test]
    fn toy_instance_matches_enumeration() {
        let u = Universe::with_no_purchase(4).unwrap();
        let model = MnlModel::new(vec![0.3, -0.2, 1.0, 0.0]).unwrap();
        let rev = RevenueSpec::new(&u, vec![10.0, 30.0, 5.0, 0.0]).unwrap();
        let m = build_mnl_milp(&model, &rev, None).unwrap();
        let r = solve_mip(&m, None).unwrap();
        let b = brute_force_opt(&model, &rev, None).unwrap();
        assert!(
            (r.value - b.value).abs() < 1e-7,
            "{} vs {}",
            r.value,
            b.value
        );
        assert_eq!(r.assortment, b.assortment);
    }

    #[test]
    fn binding_capacity_is_respected() {
        let u = Universe::with_no_purchase(4).unwrap();
        let model = MnlModel::new(vec![0.0; 4]).unwrap();
        let rev = RevenueSpec::new(&u, vec![20.0, 20.0, 20.0, 0.0]).unwrap();
        let cap = CapacityConstraint::new(&u, vec![1.0, 1.0, 1.0, 0.0], 1.5).unwrap();
        let r = solve_mip(&build_mnl_milp(&model, &rev, Some(&cap)).unwrap(), None).unwrap();
        assert!(cap.admits(&r.assortment));
        assert!((r.value - 10.0).abs() < 1e-7);
    }
}
