use std::collections::BTreeMap;

use dynfg::elim::{solve, Ordering};
use dynfg::fgcore::{assemble, build_dynamics_graph, FactorLabel, VariableKey};
use dynfg::robot::{compute_twists, load_urdf, models};
use dynfg::spatial::ad;
use dynfg::{OrderingChoice, OrderingTag, RobotModel};
use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use proptest::prelude::*;

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn ad_child_parent(model: &RobotModel, i: usize, q: f64) -> Matrix6<f64> {
    model.joint(i).parent_to_child(q).inverse().adjoint()
}

/// Stacks `𝒱ᵢ − Ad 𝒱ᵢ₋₁ = 𝒜ᵢ q̇ᵢ` for all links into one dense system.
fn stacked_twists(model: &RobotModel, q: &[f64], qd: &[f64]) -> Vec<Vector6<f64>> {
    let n = model.dof();
    let mut a = DMatrix::zeros(6 * n, 6 * n);
    let mut b = DVector::zeros(6 * n);
    for i in 0..n {
        a.view_mut((6 * i, 6 * i), (6, 6)).copy_from(&Matrix6::identity());
        if i > 0 {
            a.view_mut((6 * i, 6 * (i - 1)), (6, 6))
                .copy_from(&(-ad_child_parent(model, i + 1, q[i])));
        }
        b.rows_mut(6 * i, 6)
            .copy_from(&(model.joint(i + 1).axis.vector() * qd[i]));
    }
    let x = a.lu().solve(&b).unwrap();
    (0..n)
        .map(|i| Vector6::from_iterator(x.rows(6 * i, 6).iter().copied()))
        .collect()
}

#[test]
fn twists_match_stacked_system() {
    let model = models::planar_chain(3);
    let (q, qd) = ([0.1, 0.2, 0.3], [1.0, -1.0, 0.5]);
    let twists = compute_twists(&model, &dv(&q), &dv(&qd));
    for (t, r) in twists.iter().zip(stacked_twists(&model, &q, &qd)) {
        assert!((t.0 - r).amax() < 1e-12);
    }
    // Planar: every link spins at the running sum of joint rates.
    assert!((twists[2].0[2] - 0.5).abs() < 1e-12);
}

#[test]
fn fixed_joint_folding_keeps_twists() {
    let link = |name: &str| {
        format!(
            r#"<link name="{name}"><inertial><origin xyz="0.5 0 0"/><mass value="1"/><inertia ixx="0.01" iyy="0.1" izz="0.1"/></inertial></link>"#
        )
    };
    let joint = |name: &str, kind: &str, parent: &str, child: &str, xyz: &str, axis: &str| {
        format!(
            r#"<joint name="{name}" type="{kind}"><parent link="{parent}"/><child link="{child}"/><origin xyz="{xyz}" rpy="0.3 0 0.2"/><axis xyz="{axis}"/><limit lower="-3" upper="3"/></joint>"#
        )
    };
    let doc = |middle: &str| {
        format!(
            r#"<robot name="f"><link name="base"/>{}{}{}{}{}{}{}</robot>"#,
            link("a"),
            link("b"),
            link("c"),
            joint("j1", "revolute", "base", "a", "0 0 0", "0 0 1"),
            joint("j2", middle, "a", "b", "1 0 0", "0 1 0"),
            joint("j3", "revolute", "b", "c", "0.5 0.2 0", "1 0 0"),
            ""
        )
    };
    let folded = load_urdf(&doc("fixed")).unwrap();
    let explicit = load_urdf(&doc("revolute")).unwrap();
    assert_eq!((folded.dof(), explicit.dof()), (2, 3));
    let tf = compute_twists(&folded, &dv(&[0.4, -0.7]), &dv(&[1.1, 0.6]));
    let te = compute_twists(&explicit, &dv(&[0.4, 0.0, -0.7]), &dv(&[1.1, 0.0, 0.6]));
    assert!((tf[0].0 - te[0].0).amax() < 1e-12);
    // Link c is the last body in both chains; its frame is the same COM frame.
    assert!((tf[1].0 - te[2].0).amax() < 1e-12);
}

#[test]
fn acceleration_factor_coefficients() {
    let model = models::puma_like();
    let q = dv(&[0.3, -0.5, 0.8, 0.1, 0.6, -0.2]);
    let qd = dv(&[0.4, -0.3, 0.2, 0.9, -0.6, 0.1]);
    let g = build_dynamics_graph(&model, &q, &qd).unwrap();
    let f = g
        .graph
        .factors
        .iter()
        .find(|f| f.label == FactorLabel::Acceleration && f.index == 2)
        .unwrap();
    let block = |k: VariableKey| f.terms.iter().find(|(t, _)| *t == k).map(|(_, a)| a.clone()).unwrap();
    let a2 = model.joint(2).axis.vector();
    let v2 = compute_twists(&model, &q, &qd)[1].0;
    let dense = |m: &Matrix6<f64>| DMatrix::from_column_slice(6, 6, m.as_slice());
    assert!((block(VariableKey::vdot(2)) - DMatrix::identity(6, 6)).amax() < 1e-15);
    assert!((block(VariableKey::vdot(1)) + dense(&ad_child_parent(&model, 2, q[1]))).amax() < 1e-12);
    assert!((block(VariableKey::qdd(2)) + DMatrix::from_column_slice(6, 1, a2.as_slice())).amax() < 1e-15);
    let rhs = ad(&v2) * a2 * qd[1];
    assert!((f.rhs.clone() - DVector::from_column_slice(rhs.as_slice())).amax() < 1e-12);
}

#[test]
fn block_pattern_mirrors_incidence() {
    let model = models::planar_chain(3);
    let z = DVector::zeros(3);
    let g = build_dynamics_graph(&model, &z, &z).unwrap();
    let known: BTreeMap<_, _> = (1..=3).map(|i| (VariableKey::qdd(i), DVector::zeros(1))).collect();
    let id = g.condition(&known).unwrap();
    let s = assemble(&id.graph);
    assert_eq!((s.row_dims.len(), s.col_keys.len()), (9, 9));
    let pattern = s.pattern();
    for (r, f) in id.graph.factors.iter().enumerate() {
        for (c, k) in s.col_keys.iter().enumerate() {
            assert_eq!(pattern[r][c], f.involves(k), "{} / {k}", f.name());
        }
    }
    assert_eq!(s.col_dims.iter().filter(|&&d| d == 1).count(), 3);
    assert_eq!(s.col_dims.iter().filter(|&&d| d == 6).count(), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn twists_are_linear_in_rates(
        q in prop::collection::vec(-3.0f64..3.0, 6),
        a in prop::collection::vec(-1.0f64..1.0, 6),
        b in prop::collection::vec(-1.0f64..1.0, 6),
        s in -2.0f64..2.0,
        t in -2.0f64..2.0,
    ) {
        let model = models::puma_like();
        let (q, a, b) = (dv(&q), dv(&a), dv(&b));
        let mixed = compute_twists(&model, &q, &(&a * s + &b * t));
        let ta = compute_twists(&model, &q, &a);
        let tb = compute_twists(&model, &q, &b);
        for i in 0..6 {
            prop_assert!((mixed[i].0 - (ta[i].0 * s + tb[i].0 * t)).amax() < 1e-12);
        }
    }

    #[test]
    fn elimination_matches_dense_solve(
        q in prop::collection::vec(-3.1f64..3.1, 3),
        qd in prop::collection::vec(-1.0f64..1.0, 3),
        x in prop::collection::vec(-1.0f64..1.0, 3),
        forward in any::<bool>(),
    ) {
        let model = models::planar_chain(3).with_gravity(nalgebra::Vector3::new(0.0, -9.81, 0.0));
        let g = build_dynamics_graph(&model, &dv(&q), &dv(&qd)).unwrap();
        let known: BTreeMap<_, _> = (1..=3)
            .map(|i| {
                let k = if forward { VariableKey::tau(i) } else { VariableKey::qdd(i) };
                (k, dv(&[x[i - 1]]))
            })
            .collect();
        let c = g.condition(&known).unwrap();
        let s = assemble(&c.graph);
        let (a, b) = s.to_dense();
        prop_assert_eq!(a.nrows(), a.ncols());
        let dense = s.split(&a.lu().solve(&b).unwrap());
        let order = OrderingChoice::ColamdLike.compute(&c.graph).unwrap();
        let sol = solve(&c.graph, &order).unwrap();
        for (k, v) in &dense {
            prop_assert!((&sol.values[k] - v).amax() < 1e-10, "{}", k);
        }
        prop_assert!(c.graph.max_row_residual(&sol.values) < 1e-9);
    }

    #[test]
    fn conditioning_commutes_with_assembly(
        q in prop::collection::vec(-3.1f64..3.1, 3),
        qd in prop::collection::vec(-1.0f64..1.0, 3),
        tau in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let model = models::planar_chain(3);
        let g = build_dynamics_graph(&model, &dv(&q), &dv(&qd)).unwrap();
        let known: BTreeMap<_, _> = (1..=3).map(|i| (VariableKey::tau(i), dv(&[tau[i - 1]]))).collect();
        let full = assemble(&g.graph);
        let (a, b) = full.to_dense();
        // Move the known columns to the right-hand side.
        let offsets = full.col_offsets();
        let mut rhs = b.clone();
        let mut keep = Vec::new();
        for (c, k) in full.col_keys.iter().enumerate() {
            match known.get(k) {
                Some(v) => rhs -= a.columns(offsets[c], full.col_dims[c]) * v,
                None => keep.extend(offsets[c]..offsets[c] + full.col_dims[c]),
            }
        }
        let reduced = a.select_columns(keep.iter());
        let (ca, cb) = assemble(&g.condition(&known).unwrap().graph).to_dense();
        prop_assert!((ca - reduced).amax() < 1e-12);
        prop_assert!((cb - rhs).amax() < 1e-12);
    }
}

#[test]
fn reverse_index_is_a_valid_ordering() {
    let model = models::planar_chain(2);
    let z = DVector::zeros(2);
    let g = build_dynamics_graph(&model, &z, &z).unwrap();
    let known: BTreeMap<_, _> = (1..=2).map(|i| (VariableKey::qdd(i), DVector::zeros(1))).collect();
    let c = g.condition(&known).unwrap();
    let o: Ordering<VariableKey> = OrderingChoice::ReverseIndex.compute(&c.graph).unwrap();
    assert_eq!(o.tag, OrderingTag::ReverseIndex);
    assert!(o.validate(&c.graph).is_ok());
}
