use super::*;
use crate::frontend::registry::{self, REDUCTION_WINDOW};
use crate::frontend::{parse_expr, parse_system};

fn system(name: &str) -> OdeSystem {
    registry::lookup(name).unwrap().load().unwrap().system
}

fn expr(rs: &ReducedSystem, text: &str) -> SymExpr {
    parse_expr(text, rs.ring()).unwrap()
}

fn window(rs: &ReducedSystem) -> AnsatzSpec {
    AnsatzSpec::parse(REDUCTION_WINDOW, rs.ring()).unwrap()
}

#[test]
fn linear_field_reduces_mechanically() {
    let rs = reduce_order(&system("magnetic_linear"), 3).unwrap();
    assert_eq!(*rs.omega6(), expr(&rs, "du1*u2 - du2*u1"));
    assert_eq!(
        *rs.omega(1),
        expr(&rs, "(du2*y - u2 - du1*(du1*u2 - du2*u1))/u6")
    );
    assert_eq!(
        *rs.omega(2),
        expr(&rs, "(u1 - du1*y - du2*(du1*u2 - du2*u1))/u6")
    );
}

#[test]
fn velocity_coupling_reduces_to_free_motion() {
    let rs = reduce_order(&system("velocity_coupling"), 3).unwrap();
    assert!(rs.omega(1).is_zero());
    assert!(rs.omega(2).is_zero());
    assert_eq!(*rs.omega6(), expr(&rs, "u1^2 + u2^2 + y^2"));
}

#[test]
fn free_particle_and_errors() {
    let rs = reduce_order(&system("free_particle_3d"), 3).unwrap();
    assert!(rs.omega(1).is_zero() && rs.omega(2).is_zero() && rs.omega6().is_zero());

    let forced = parse_system("dim 3\nddot x1 = t\nddot x2 = 0\nddot x3 = 0\n").unwrap();
    assert_eq!(
        reduce_order(&forced, 3).unwrap_err(),
        ReductionError::NotAutonomous(1)
    );
    let flat = parse_system("dim 2\nddot x1 = 0\nddot x2 = 0\n").unwrap();
    assert_eq!(
        reduce_order(&flat, 2).unwrap_err(),
        ReductionError::Dimension(2)
    );
    assert_eq!(
        reduce_order(&system("free_particle_3d"), 4).unwrap_err(),
        ReductionError::Pivot(4)
    );
}

#[test]
fn monopole_keeps_the_radical() {
    let rs = reduce_order(&system("monopole"), 3).unwrap();
    assert!(rs.ring().has_radical());
    assert_eq!(*rs.omega6(), expr(&rs, "(du1*u2 - du2*u1)/r^3"));
}

#[test]
fn pivot_choice() {
    let rs = reduce_order(&system("magnetic_linear"), 1).unwrap();
    assert_eq!(rs.others(), [2, 3]);
    // F1 = v2 x3 - v3 x2 with x1 -> y, x2 -> u1, x3 -> u2
    assert_eq!(*rs.omega6(), expr(&rs, "du1*u2 - du2*u1"));
}

#[test]
fn first_order_condition_matches_prolongation() {
    for name in [
        "magnetic_linear",
        "monopole",
        "velocity_coupling",
        "inverse_square_field",
    ] {
        let rs = reduce_order(&system(name), 3).unwrap();
        let ansatz = Ansatz::build(&window(&rs), rs.ring()).unwrap();
        for k in 0..ansatz.len() {
            let ms = MixedSymmetry {
                field: ansatz.basis_field(k),
            };
            assert_eq!(
                rs.first_order_condition(&ms),
                rs.residuals(&ms)[2],
                "{name}: {ms}"
            );
        }
    }
}

#[test]
fn second_order_condition_on_scaling_shapes() {
    let rs = reduce_order(&system("monopole"), 3).unwrap();
    for (a, b, c) in [(1, 1, -1), (2, 3, 5), (0, -1, 2)] {
        let ms = MixedSymmetry::new(
            expr(&rs, "y"),
            expr(&rs, &format!("{a}*u1")),
            expr(&rs, &format!("{b}*u2")),
            expr(&rs, &format!("{c}*u6")),
        );
        let residuals = rs.residuals(&ms);
        for l in 1..=2 {
            assert_eq!(rs.second_order_condition(&ms, l), residuals[l - 1]);
        }
    }
}

#[test]
fn expected_xi_values() {
    for (name, c, xi) in [
        ("magnetic_linear", 2, -1),
        ("velocity_coupling", 3, -2),
        ("monopole", -1, 2),
        ("inverse_square_field", -1, 2),
    ] {
        let sys = system(name);
        let reduced = reduce_order(&sys, 3).unwrap();
        let result = krause_xi(&sys, 3, &window(&reduced)).unwrap();
        assert_eq!(
            *result.candidate.eta6(),
            expr(&result.reduced, &format!("{c}*u6")),
            "{name}"
        );
        assert_eq!(result.generator.xi, int(xi), "{name}");
        for f in &result.basis.fields {
            assert!(result
                .reduced
                .is_symmetry(&MixedSymmetry { field: f.clone() }));
        }
        let ring = sys.ring();
        let x = |a: usize| SymExpr::var(ring, VarId::Coord(a));
        assert_eq!(result.generator.eta, vec![x(1), x(2), x(3)]);
    }
}

#[test]
fn shape_errors() {
    let rs = reduce_order(&system("monopole"), 3).unwrap();
    let bad = MixedSymmetry::new(
        expr(&rs, "1"),
        expr(&rs, "0"),
        expr(&rs, "0"),
        expr(&rs, "0"),
    );
    assert!(reconstruct_nonlocal(&rs, &bad).is_err());
    let bad = MixedSymmetry::new(
        expr(&rs, "y"),
        expr(&rs, "u1"),
        expr(&rs, "u2"),
        expr(&rs, "u6^2"),
    );
    let err = reconstruct_nonlocal(&rs, &bad).unwrap_err();
    assert_eq!(err.eta6, "u6^2");
    let trivial = MixedSymmetry::new(
        expr(&rs, "y"),
        expr(&rs, "u1"),
        expr(&rs, "u2"),
        expr(&rs, "0"),
    );
    assert_eq!(reconstruct_nonlocal(&rs, &trivial).unwrap().xi, int(1));
}

#[test]
fn second_order_condition_scope() {
    let rs = reduce_order(&system("magnetic_linear"), 3).unwrap();
    let diff = |z: &str, e1: &str| {
        let ms = MixedSymmetry::new(expr(&rs, z), expr(&rs, e1), expr(&rs, "0"), expr(&rs, "0"));
        rs.second_order_condition(&ms, 1) - rs.residuals(&ms)[0].clone()
    };
    for (z, e1) in [("y^2", "u1"), ("y", "y*u1"), ("y", "u1^2")] {
        assert!(diff(z, e1).is_zero(), "{z}, {e1}");
    }
    // cross dependence is outside the one-variable form
    assert!(!diff("u1", "0").is_zero());
    assert!(!diff("y", "u2").is_zero());
}
