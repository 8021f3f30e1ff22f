use proptest::prelude::*;

use super::*;
use crate::frontend::parse_expr;
use crate::symcore::Ring;

type Entry<'a> = (usize, usize, &'a [(usize, i64)]);

fn table(dim: usize, entries: &[Entry]) -> StructureConstants {
    let e: Vec<_> = entries
        .iter()
        .map(|(i, j, r)| (*i, *j, r.iter().map(|(k, v)| (*k, int(*v))).collect()))
        .collect();
    StructureConstants::from_brackets(dim, &e)
}

fn so3() -> StructureConstants {
    table(
        3,
        &[(0, 1, &[(2, 1)]), (1, 2, &[(0, 1)]), (2, 0, &[(1, 1)])],
    )
}

fn sl2r() -> StructureConstants {
    // h, e, f
    table(
        3,
        &[(0, 1, &[(1, 2)]), (0, 2, &[(2, -2)]), (1, 2, &[(0, 1)])],
    )
}

#[test]
fn simple_three_dimensional() {
    assert_eq!(classify(&so3()).recognized, Recognized::So3);
    let r = classify(&sl2r());
    assert_eq!(r.recognized, Recognized::Sl2R);
    assert_eq!(
        r.killing_signature,
        Signature {
            positive: 2,
            negative: 1,
            zero: 0
        }
    );
    let heisenberg = table(3, &[(0, 1, &[(2, 1)])]);
    let h = classify(&heisenberg);
    assert_eq!(h.recognized, Recognized::Unclassified(3));
    assert_eq!(h.derived_series, vec![3, 1, 0]);
    assert_eq!(h.center_dim, 1);
}

#[test]
fn sums() {
    // so3 + g2 with the dilation acting on time translations
    let mut e = vec![
        (0, 1, vec![(2, int(1))]),
        (1, 2, vec![(0, int(1))]),
        (2, 0, vec![(1, int(1))]),
    ];
    e.push((3, 4, vec![(3, int(1))]));
    let sc = StructureConstants::from_brackets(5, &e);
    assert_eq!(
        classify(&sc).recognized.to_string(),
        "direct_sum(so3, g2_nonabelian)"
    );

    let mut e = vec![
        (0, 1, vec![(2, int(1))]),
        (1, 2, vec![(0, int(1))]),
        (2, 0, vec![(1, int(1))]),
    ];
    e.push((3, 4, vec![(4, int(2))]));
    e.push((3, 5, vec![(5, int(-2))]));
    e.push((4, 5, vec![(3, int(1))]));
    let sc = StructureConstants::from_brackets(6, &e);
    assert_eq!(
        classify(&sc).recognized.to_string(),
        "direct_sum(so3, sl2R)"
    );

    let g2_ab = table(3, &[(0, 1, &[(0, 1)])]);
    assert_eq!(
        classify(&g2_ab).recognized.to_string(),
        "direct_sum(g2_nonabelian, abelian(1))"
    );
    assert_eq!(
        classify(&StructureConstants::zero(4)).recognized,
        Recognized::Abelian(4)
    );
}

#[test]
fn central_element_inside_derived_algebra_stays() {
    // heisenberg + one extra commuting generator
    let sc = table(4, &[(0, 1, &[(2, 1)])]);
    assert_eq!(
        classify(&sc).recognized.to_string(),
        "direct_sum(unclassified(3), abelian(1))"
    );
}

#[test]
fn from_vector_fields() {
    let ring = Ring::ode(3, false);
    let f = |c: &[&str]| {
        let e: Vec<_> = c.iter().map(|s| parse_expr(s, &ring).unwrap()).collect();
        VectorField::new(e[0].clone(), e[1..].to_vec())
    };
    let fields = vec![
        f(&["0", "0", "x3", "-x2"]),
        f(&["0", "-x3", "0", "x1"]),
        f(&["0", "x2", "-x1", "0"]),
        f(&["1", "0", "0", "0"]),
        f(&["t", "-x1", "-x2", "-x3"]),
    ];
    let sc = structure_constants(&fields).unwrap();
    assert!(sc.is_antisymmetric());
    assert_eq!(*sc.get(3, 4, 3), int(1));
    assert_eq!(*sc.get(0, 1, 2), int(1));
    assert_eq!(
        classify(&sc).recognized.to_string(),
        "direct_sum(so3, g2_nonabelian)"
    );

    let open = vec![f(&["0", "1", "0", "0"]), f(&["0", "x1^2", "0", "0"])];
    assert!(matches!(
        structure_constants(&open),
        Err(ClosureError::NotClosed { i: 1, j: 2, .. })
    ));
    let dependent = vec![f(&["1", "0", "0", "0"]), f(&["2", "0", "0", "0"])];
    assert_eq!(
        structure_constants(&dependent),
        Err(ClosureError::Dependent)
    );
}

#[test]
fn characteristic_polynomial() {
    let m = vec![vec![int(2), int(1)], vec![int(0), int(3)]];
    assert_eq!(char_poly(&m), vec![int(6), int(-5), int(1)]);
    assert_eq!(rational_roots(&char_poly(&m)), vec![int(2), int(3)]);
    // repeated roots with large denominators
    let d = vec![
        vec![crate::symcore::rational::rat(223, 522), int(0), int(0)],
        vec![int(0), crate::symcore::rational::rat(223, 522), int(0)],
        vec![int(0), int(0), crate::symcore::rational::rat(-37, 87)],
    ];
    assert_eq!(
        rational_roots(&char_poly(&d)),
        vec![
            crate::symcore::rational::rat(-37, 87),
            crate::symcore::rational::rat(223, 522)
        ]
    );
}

fn invertible(d: usize) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    // unit upper triangular times unit lower triangular
    proptest::collection::vec(-3i64..=3, d * d).prop_map(move |v| {
        let mut u = vec![vec![Rational::zero(); d]; d];
        let mut l = vec![vec![Rational::zero(); d]; d];
        for i in 0..d {
            for j in 0..d {
                let x = int(v[i * d + j]);
                if i < j {
                    u[i][j] = x;
                } else if i > j {
                    l[i][j] = x;
                }
            }
            u[i][i] = int(1);
            l[i][i] = int(if v[i * d + i] < 0 { -1 } else { 1 });
        }
        mat_mul(&u, &l)
    })
}

fn fixtures() -> Vec<StructureConstants> {
    let mut so3_g2 = vec![
        (0, 1, vec![(2, int(1))]),
        (1, 2, vec![(0, int(1))]),
        (2, 0, vec![(1, int(1))]),
    ];
    so3_g2.push((3, 4, vec![(3, int(1))]));
    vec![
        so3(),
        sl2r(),
        table(3, &[(0, 1, &[(2, 1)])]),
        table(3, &[(0, 1, &[(0, 1)])]),
        StructureConstants::from_brackets(5, &so3_g2),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn classification_is_basis_independent(
        (which, p) in (0usize..5).prop_flat_map(|w| (Just(w), invertible(fixtures()[w].dim())))
    ) {
        let sc = &fixtures()[which];
        let changed = sc.restrict(&p).unwrap();
        prop_assert!(changed.satisfies_jacobi());
        let (a, b) = (classify(sc), classify(&changed));
        prop_assert_eq!(a.recognized, b.recognized);
        prop_assert_eq!(a.killing_signature, b.killing_signature);
        prop_assert_eq!(a.derived_series, b.derived_series);
        prop_assert_eq!(a.center_dim, b.center_dim);
    }
}
