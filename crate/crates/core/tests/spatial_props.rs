use dynfg::spatial::{ad, skew, Pose, SpatialInertia};
use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};
use proptest::prelude::*;

// Reference implementations on 4×4 homogeneous matrices.

fn hat(v: &Vector6<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&skew(&Vector3::new(v[0], v[1], v[2])));
    m[(0, 3)] = v[3];
    m[(1, 3)] = v[4];
    m[(2, 3)] = v[5];
    m
}

fn vee(m: &Matrix4<f64>) -> Vector6<f64> {
    Vector6::new(m[(2, 1)], m[(0, 2)], m[(1, 0)], m[(0, 3)], m[(1, 3)], m[(2, 3)])
}

fn homogeneous_exp(xi: &Vector6<f64>) -> Matrix4<f64> {
    hat(xi).exp()
}

fn vec6() -> impl Strategy<Value = Vector6<f64>> {
    prop::array::uniform6(-2.0f64..2.0).prop_map(|a| Vector6::from_row_slice(&a))
}

fn pose() -> impl Strategy<Value = Pose> {
    vec6().prop_map(|xi| Pose::exp(&xi))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exp_matches_matrix_exponential(xi in vec6()) {
        let h = Pose::exp(&xi).to_homogeneous();
        let reference = homogeneous_exp(&xi);
        prop_assert!(close(h.as_slice(), reference.as_slice(), 1e-9), "{h}\n{reference}");
    }

    #[test]
    fn exp_of_small_twists_matches_matrix_exponential(xi in vec6(), s in 1e-9f64..1e-2) {
        let xi = xi * s;
        let h = Pose::exp(&xi).to_homogeneous();
        prop_assert!(close(h.as_slice(), homogeneous_exp(&xi).as_slice(), 1e-14));
    }

    #[test]
    fn compose_is_matrix_product(a in pose(), b in pose()) {
        let lhs = (a * b).to_homogeneous();
        let rhs = a.to_homogeneous() * b.to_homogeneous();
        prop_assert!(close(lhs.as_slice(), rhs.as_slice(), 1e-12));
    }

    #[test]
    fn inverse_composes_to_identity(a in pose()) {
        prop_assert!((a * a.inverse()).approx_eq(&Pose::identity(), 1e-12));
        prop_assert!((a.inverse() * a).approx_eq(&Pose::identity(), 1e-12));
    }

    #[test]
    fn composition_is_associative(a in pose(), b in pose(), c in pose()) {
        prop_assert!(((a * b) * c).approx_eq(&(a * (b * c)), 1e-12));
    }

    #[test]
    fn rotations_stay_orthonormal(a in pose(), b in pose(), c in pose()) {
        let mut t = Pose::identity();
        for _ in 0..50 {
            t = t * a * b * c;
        }
        prop_assert!(t.orthonormality_error() < 1e-9);
        prop_assert!((t.rotation().determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn adjoint_is_conjugation(t in pose(), v in vec6()) {
        let h = t.to_homogeneous();
        let reference = vee(&(h * hat(&v) * h.try_inverse().unwrap()));
        prop_assert!(close((t.adjoint() * v).as_slice(), reference.as_slice(), 1e-10));
    }

    #[test]
    fn adjoint_is_a_homomorphism(a in pose(), b in pose()) {
        let lhs = (a * b).adjoint();
        let rhs = a.adjoint() * b.adjoint();
        prop_assert!(close(lhs.as_slice(), rhs.as_slice(), 1e-10));
        let inv = a.inverse().adjoint() * a.adjoint();
        prop_assert!(close(inv.as_slice(), Matrix6::<f64>::identity().as_slice(), 1e-10));
    }

    #[test]
    fn small_ad_is_the_bracket(x in vec6(), y in vec6()) {
        let bracket = vee(&(hat(&x) * hat(&y) - hat(&y) * hat(&x)));
        prop_assert!(close((ad(&x) * y).as_slice(), bracket.as_slice(), 1e-12));
        prop_assert!((ad(&x) * x).norm() < 1e-12);
    }

    #[test]
    fn ad_is_derivative_of_adjoint(x in vec6(), y in vec6()) {
        let h = 1e-6;
        let fd = (Pose::exp(&(x * h)).adjoint() - Pose::exp(&(x * -h)).adjoint()) * y / (2.0 * h);
        prop_assert!(close(fd.as_slice(), (ad(&x) * y).as_slice(), 1e-7));
    }

    #[test]
    fn power_is_frame_invariant(t in pose(), v in vec6(), f in vec6()) {
        // Twist moves with Ad(T), wrench with Ad(T⁻¹)ᵀ.
        let v2 = t.adjoint() * v;
        let f2 = t.inverse().adjoint().transpose() * f;
        prop_assert!((v2.dot(&f2) - v.dot(&f)).abs() < 1e-9 * (1.0 + v.norm() * f.norm()));
    }

    #[test]
    fn kinetic_energy_is_frame_invariant(
        t in pose(),
        v in vec6(),
        m in 0.1f64..5.0,
        d in prop::array::uniform3(0.01f64..1.0),
    ) {
        let g = SpatialInertia::at_com(m, Matrix3::from_diagonal(&Vector3::from(d))).unwrap();
        // Same body seen from a frame `a` with pose `t` in the COM frame.
        let ga = g.transformed(&t);
        let va = t.inverse().adjoint() * v;
        let e_com = v.dot(&(g.matrix() * v));
        let e_a = va.dot(&(ga.matrix() * va));
        prop_assert!((e_com - e_a).abs() < 1e-9 * (1.0 + e_com.abs()));
        prop_assert!(e_a >= -1e-12);
    }
}

#[test]
fn zero_twist_is_identity() {
    assert_eq!(Pose::exp(&Vector6::zeros()).to_homogeneous(), Matrix4::identity());
}
