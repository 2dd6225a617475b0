use cfmimo::linalg::{
    kron, rayleigh_quotient, rayleigh_quotient_max, sample_cscg, unvec, vec, CMatrix, CVector, RngStream, C64,
};
use proptest::prelude::*;

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), rows * cols)
        .prop_map(move |v| CMatrix::from_iterator(rows, cols, v.into_iter().map(|(r, i)| C64::new(r, i))))
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `vec` written out element by element, independent of the library.
fn vec_oracle(m: &CMatrix) -> CVector {
    let n = m.nrows();
    let mut out = CVector::zeros(n * n);
    for j in 0..n {
        for i in 0..n {
            out[j * n + i] = m[(i, j)];
        }
    }
    out
}

proptest! {
    #[test]
    fn vec_unvec_round_trip(n in 1usize..5, seed in any::<u64>()) {
        let m = RngStream::new(seed, 0).complex_matrix(n, n);
        let v = vec(&m).unwrap();
        prop_assert_eq!(&v, &vec_oracle(&m));
        prop_assert_eq!(unvec(&v, n).unwrap(), m);
    }

    #[test]
    fn vec_of_triple_product(x in complex_matrix(2, 2), y in complex_matrix(2, 2), z in complex_matrix(2, 2)) {
        // entry (i, j) of XYZ is Σ_ab x_ia y_ab z_bj
        let mut xyz = CMatrix::zeros(2, 2);
        for i in 0..2 { for j in 0..2 { for a in 0..2 { for b in 0..2 {
            xyz[(i, j)] += x[(i, a)] * y[(a, b)] * z[(b, j)];
        }}}}
        let lhs = vec_oracle(&xyz);
        let rhs = kron(&z.transpose(), &x) * vec(&y).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + xyz.norm()));
    }

    #[test]
    fn kron_mixed_product(u in complex_matrix(2, 2), x in complex_matrix(2, 2),
                          y in complex_matrix(2, 2), z in complex_matrix(2, 2)) {
        let lhs = kron(&(&u * &y), &(&x * &z));
        let rhs = kron(&u, &x) * kron(&y, &z);
        prop_assert!(max_abs(&(&lhs - &rhs)) <= 1e-12 * (1.0 + max_abs(&lhs)));
    }

    #[test]
    fn kron_adjoint(x in complex_matrix(2, 2), y in complex_matrix(2, 2)) {
        let d = kron(&x, &y).adjoint() - kron(&x.adjoint(), &y.adjoint());
        prop_assert!(max_abs(&d) == 0.0);
    }

    #[test]
    fn rayleigh_max_dominates(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = RngStream::new(seed, 1);
        let g = rng.complex_matrix(n, n);
        let a = &g * g.adjoint() + CMatrix::identity(n, n).scale(0.1);
        let b = rng.complex_vector(n);
        let best = rayleigh_quotient_max(&a, &b, 0.0).unwrap();
        prop_assert!((rayleigh_quotient(&a, &b, &best.x) - best.value).abs() <= 1e-9 * best.value.max(1.0));
        for _ in 0..100 {
            let x = rng.complex_vector(n);
            prop_assert!(rayleigh_quotient(&a, &b, &x) <= best.value + 1e-10);
        }
    }
}

#[test]
fn cscg_moments_converge() {
    let mut rng = RngStream::new(11, 3);
    let mean = CVector::from_vec(vec![C64::new(1.0, -0.5), C64::new(0.0, 2.0)]);
    let cov = CMatrix::identity(2, 2);
    let n = 100_000;
    let mut m1 = CVector::zeros(2);
    let mut m2 = CMatrix::zeros(2, 2);
    for _ in 0..n {
        let x = sample_cscg(&mean, &cov, &mut rng).unwrap();
        let c = &x - &mean;
        m1 += &x;
        m2 += &c * c.adjoint();
    }
    m1 /= C64::new(n as f64, 0.0);
    m2 /= C64::new(n as f64, 0.0);
    assert!(max_abs(&CMatrix::from_column_slice(2, 1, (m1 - mean).as_slice())) <= 0.05);
    assert!(max_abs(&(m2 - cov)) <= 0.05);
}
