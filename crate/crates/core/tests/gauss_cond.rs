use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use condclt::{condition_on_scalar, condition_on_vector, JointGaussian};

fn joint() -> JointGaussian {
    JointGaussian::from_rows(
        2,
        1,
        &[1.0, -0.5, 2.0],
        &[vec![2.0, 0.3, 0.8], vec![0.3, 1.0, -0.6], vec![0.8, -0.6, 1.5]],
    )
    .unwrap()
}

#[test]
fn conditioning_matches_rejection_sampling() {
    // keep draws whose Y lands in a thin window around y0 and compare
    // the retained X moments with the Schur complement
    let jg = joint();
    let y0 = 2.6;
    let cond = condition_on_vector(&jg, &[y0]).unwrap();
    let l = jg.cov().clone().cholesky().unwrap().l();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut kept = Vec::new();
    while kept.len() < 40_000 {
        let z = DVector::from_fn(3, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng));
        let x = jg.mean() + &l * z;
        if (x[2] - y0).abs() < 0.01 {
            kept.push((x[0], x[1]));
        }
    }
    let r = kept.len() as f64;
    let m0 = kept.iter().map(|p| p.0).sum::<f64>() / r;
    let m1 = kept.iter().map(|p| p.1).sum::<f64>() / r;
    let v0 = kept.iter().map(|p| (p.0 - m0).powi(2)).sum::<f64>() / (r - 1.0);
    let c01 = kept.iter().map(|p| (p.0 - m0) * (p.1 - m1)).sum::<f64>() / (r - 1.0);
    let tol = |v: f64| 5.0 * (v / r).sqrt();
    assert!((m0 - cond.mean[0]).abs() < tol(cond.cov[(0, 0)]));
    assert!((m1 - cond.mean[1]).abs() < tol(cond.cov[(1, 1)]));
    assert!((v0 - cond.cov[(0, 0)]).abs() < 5.0 * cond.cov[(0, 0)] * (2.0 / r).sqrt());
    assert!((c01 - cond.cov[(0, 1)]).abs() < 0.03);
}

#[test]
fn scalar_and_vector_conditioning_agree() {
    let jg = joint();
    let a = condition_on_scalar(&jg, 2.4).unwrap();
    let b = condition_on_vector(&jg, &[2.4]).unwrap();
    assert!((&a.mean - &b.mean).amax() < 1e-12);
    assert!((&a.cov - &b.cov).amax() < 1e-12);
}

#[test]
fn independent_blocks_are_unchanged() {
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 5.0, 7.0]));
    let jg = JointGaussian::new(2, 2, DVector::zeros(4), cov).unwrap();
    let c = condition_on_vector(&jg, &[10.0, -4.0]).unwrap();
    assert_eq!(c.mean.as_slice(), &[0.0, 0.0]);
    assert_eq!((c.cov[(0, 0)], c.cov[(1, 1)], c.cov[(0, 1)]), (3.0, 2.0, 0.0));
}
