//! Dynamics solves against closed-form and Lagrangian reference models
//! written independently of the library.

use dynfg::dynamics::{forward_dynamics, hybrid_dynamics, inverse_dynamics, kinetic_energy, recursive};
use dynfg::robot::models;
use dynfg::{JointState, OrderingChoice, RobotModel, Wrench};
use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use proptest::prelude::*;

const G: f64 = 9.81;

/// Planar chain of unit rods (mass 1, COM at 0.5, I_zz = 1/12) with gravity
/// `−G` along base y. Mass matrix from COM Jacobians.
struct PlanarLagrangian {
    n: usize,
}

impl PlanarLagrangian {
    fn angles(&self, q: &[f64]) -> Vec<f64> {
        q.iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    fn mass_matrix(&self, q: &[f64]) -> DMatrix<f64> {
        let phi = self.angles(q);
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            // ∂p_i/∂q_k: every joint k ≤ i rotates everything beyond it.
            let mut jx = vec![0.0; self.n];
            let mut jy = vec![0.0; self.n];
            for k in 0..=i {
                for (j, p) in phi.iter().enumerate().take(i + 1).skip(k) {
                    let r = if j == i { 0.5 } else { 1.0 };
                    jx[k] -= r * p.sin();
                    jy[k] += r * p.cos();
                }
            }
            for a in 0..=i {
                for b in 0..=i {
                    m[(a, b)] += jx[a] * jx[b] + jy[a] * jy[b] + 1.0 / 12.0;
                }
            }
        }
        m
    }

    fn potential(&self, q: &[f64]) -> f64 {
        let phi = self.angles(q);
        let mut y = 0.0;
        let mut total = 0.0;
        for p in &phi {
            total += G * (y + 0.5 * p.sin());
            y += p.sin();
        }
        total
    }

    fn torque(&self, q: &[f64], qd: &[f64], qdd: &[f64]) -> DVector<f64> {
        let n = self.n;
        let h = 1e-5;
        let shifted = |k: usize, s: f64| {
            let mut x = q.to_vec();
            x[k] += s;
            x
        };
        let dm: Vec<DMatrix<f64>> = (0..n)
            .map(|k| (self.mass_matrix(&shifted(k, h)) - self.mass_matrix(&shifted(k, -h))) / (2.0 * h))
            .collect();
        let m = self.mass_matrix(q);
        let mut tau = &m * DVector::from_column_slice(qdd);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = 0.5 * (dm[k][(i, j)] + dm[j][(i, k)] - dm[i][(j, k)]);
                    tau[i] += c * qd[j] * qd[k];
                }
            }
            tau[i] += (self.potential(&shifted(i, h)) - self.potential(&shifted(i, -h))) / (2.0 * h);
        }
        tau
    }
}

fn planar(n: usize) -> RobotModel {
    models::planar_chain(n).with_gravity(Vector3::new(0.0, -G, 0.0))
}

/// Cart at `x`, point-mass pole of length `l` hanging at θ = 0.
fn cart_pole_torque(mc: f64, mp: f64, l: f64, q: &[f64], qd: &[f64], qdd: &[f64]) -> [f64; 2] {
    let (s, c) = q[1].sin_cos();
    [
        (mc + mp) * qdd[0] + mp * l * c * qdd[1] - mp * l * s * qd[1] * qd[1],
        mp * l * c * qdd[0] + mp * l * l * qdd[1] + mp * G * l * s,
    ]
}

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn state(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-3.1f64..3.1, n),
        prop::collection::vec(-1.0f64..1.0, n),
        prop::collection::vec(-1.0f64..1.0, n),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planar_inverse_matches_lagrangian(n in 1usize..=4, seed in state(4)) {
        let (q, qd, qdd) = (&seed.0[..n], &seed.1[..n], &seed.2[..n]);
        let model = planar(n);
        let r = inverse_dynamics(&model, &dv(q), &dv(qd), &dv(qdd), &OrderingChoice::Rnea).unwrap();
        let reference = PlanarLagrangian { n }.torque(q, qd, qdd);
        prop_assert!((&r.tau - &reference).amax() < 1e-6, "{} vs {}", r.tau, reference);
    }

    #[test]
    fn planar_mass_matrix_matches_lagrangian(n in 1usize..=5, q in prop::collection::vec(-3.1f64..3.1, 5)) {
        let m = recursive::crba(&planar(n), &dv(&q[..n])).unwrap();
        let reference = PlanarLagrangian { n }.mass_matrix(&q[..n]);
        prop_assert!((m - reference).amax() < 1e-12);
    }

    #[test]
    fn cart_pole_matches_closed_form(seed in state(2)) {
        let (q, qd, qdd) = seed;
        let model = models::cart_pole(1.0, 0.3, 0.5);
        let tau = inverse_dynamics(&model, &dv(&q), &dv(&qd), &dv(&qdd), &OrderingChoice::MinDegree).unwrap().tau;
        let reference = cart_pole_torque(1.0, 0.3, 0.5, &q, &qd, &qdd);
        prop_assert!((tau[0] - reference[0]).abs() < 1e-10 && (tau[1] - reference[1]).abs() < 1e-10);

        let back = forward_dynamics(&model, &dv(&q), &dv(&qd), &dv(&reference), &OrderingChoice::Aba).unwrap().qdd;
        prop_assert!((back - dv(&qdd)).amax() < 1e-9);
    }

    #[test]
    fn kinetic_energy_matches_mass_matrix(n in 1usize..=4, seed in state(4)) {
        let (q, qd) = (&seed.0[..n], &seed.1[..n]);
        let m = PlanarLagrangian { n }.mass_matrix(q);
        let qd = dv(qd);
        let reference = 0.5 * qd.dot(&(&m * &qd));
        prop_assert!((kinetic_energy(&planar(n), &dv(q), &qd) - reference).abs() < 1e-12);
    }
}

#[test]
fn pendulum_closed_forms() {
    let (m, l) = (2.0, 0.7);
    let model = models::pendulum(m, l);
    for &q in &[0.0, 0.3, -1.2, 2.5] {
        for &qdd in &[0.0, 1.5] {
            let tau = inverse_dynamics(&model, &dv(&[q]), &dv(&[0.4]), &dv(&[qdd]), &OrderingChoice::Rnea)
                .unwrap()
                .tau[0];
            let reference = m * G * l * q.cos() + m * l * l * qdd;
            assert!((tau - reference).abs() < 1e-10, "q={q}: {tau} vs {reference}");
        }
        let free = forward_dynamics(&model, &dv(&[q]), &dv(&[0.0]), &dv(&[0.0]), &OrderingChoice::Aba)
            .unwrap()
            .qdd[0];
        assert!((free + G * q.cos() / l).abs() < 1e-10);
    }
}

#[test]
fn tool_wrench_is_resisted_by_the_joints() {
    // Tool frame at the rod COM, 0.5 m from the joint.
    let model = models::planar_chain(1).with_gravity(Vector3::zeros());
    let q = dv(&[0.7]);
    let z = dv(&[0.0]);
    let push = model
        .clone()
        .with_tool_wrench(Wrench(Vector6::new(0.0, 0.0, 0.0, 0.0, 2.0, 0.0)));
    let tau = inverse_dynamics(&push, &q, &z, &z, &OrderingChoice::Rnea).unwrap().tau[0];
    assert!((tau - 1.0).abs() < 1e-12, "{tau}");
    let twist = model.with_tool_wrench(Wrench(Vector6::new(0.0, 0.0, 3.0, 0.0, 0.0, 0.0)));
    let tau = inverse_dynamics(&twist, &q, &z, &z, &OrderingChoice::Rnea).unwrap().tau[0];
    assert!((tau - 3.0).abs() < 1e-12, "{tau}");
}

#[test]
fn hybrid_reduces_to_pure_problems() {
    let model = models::puma_like();
    let q = dv(&[0.1, -0.4, 0.9, 0.3, -0.2, 0.5]);
    let qd = dv(&[0.2, 0.1, -0.3, 0.4, 0.0, -0.1]);
    let qdd = dv(&[0.5, -0.2, 0.1, 0.0, 0.3, -0.4]);
    let tau = inverse_dynamics(&model, &q, &qd, &qdd, &OrderingChoice::Rnea)
        .unwrap()
        .tau;
    for mask in 0u32..64 {
        let flags: Vec<bool> = (0..6).map(|i| mask & (1 << i) != 0).collect();
        let s = JointState::hybrid(q.clone(), qd.clone(), qdd.clone(), tau.clone(), &flags);
        let r = hybrid_dynamics(&model, &s, &OrderingChoice::ColamdLike).unwrap();
        assert!((&r.qdd - &qdd).amax() < 1e-8, "mask {mask}");
        assert!((&r.tau - &tau).amax() < 1e-8, "mask {mask}");
    }
}

#[test]
fn wrong_vector_lengths_are_input_errors() {
    let model = planar(3);
    let bad = inverse_dynamics(
        &model,
        &dv(&[0.0; 2]),
        &dv(&[0.0; 3]),
        &dv(&[0.0; 3]),
        &OrderingChoice::Rnea,
    );
    assert!(matches!(bad, Err(dynfg::DynError::Robot(_))));
}
