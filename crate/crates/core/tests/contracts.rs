use duo_embed::diagnostics::scaled_bulk_eigenvalues;
use duo_embed::embedding::{duo_svd, select_embeddings, ExtensionContext, Side};
use duo_embed::evaluation::{hierarchical_cluster, kmeans, pca_embed, rand_index};
use duo_embed::faer::Mat;
use duo_embed::kernel::{cross_sq_distances, duo_kernel, Bandwidth, KernelMatrix};
use duo_embed::linalg::gram_cols;
use duo_embed::{DataMatrix, Exec, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, p: usize, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DataMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng)).unwrap()
}

#[test]
fn swapped_distances_are_the_exact_transpose() {
    let (x, y) = (gaussian(13, 7, 1), gaussian(9, 7, 2));
    let a = cross_sq_distances(&x, &y).unwrap();
    let b = cross_sq_distances(&y, &x).unwrap();
    assert_eq!(a.transpose(), b);
}

#[test]
fn svd_contract() {
    let (x, y) = (gaussian(40, 4, 3), gaussian(55, 4, 4));
    let (_, k) = duo_kernel(&x, &y, 0.5, Exec::Sequential).unwrap();
    let svd = duo_svd(&k).unwrap();
    assert!(svd.s.windows(2).all(|w| w[0] >= w[1]) && *svd.s.last().unwrap() >= 0.0);
    for m in [&svd.u, &svd.v] {
        let g = gram_cols(m.as_ref());
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() <= 1e-10);
            }
        }
    }
    let scale = 1.0 / ((40 * 55) as f64).sqrt();
    for i in 0..svd.s.len() {
        for r in 0..40 {
            let kv: f64 = (0..55).map(|c| k.k[(r, c)] * svd.v[(c, i)]).sum::<f64>() * scale;
            assert!((kv - svd.s[i] * svd.u[(r, i)]).abs() <= 1e-8 * svd.s[0]);
        }
    }
    let e = select_embeddings(&svd, &[1, 2, 3], &[2]).unwrap();
    for (j, &g) in [1usize, 2, 3].iter().enumerate() {
        let norm = (0..40).map(|r| e.ex[(r, j)].powi(2)).sum::<f64>().sqrt();
        let want = 40f64.sqrt() * svd.s[g - 1];
        assert!((norm - want).abs() <= 1e-8 * want);
    }
}

#[test]
fn scaling_the_kernel_scales_singular_values() {
    let (x, y) = (gaussian(20, 3, 5), gaussian(25, 3, 6));
    let (_, k) = duo_kernel(&x, &y, 0.5, Exec::Sequential).unwrap();
    let scaled = KernelMatrix {
        k: Mat::from_fn(20, 25, |i, j| 3.0 * k.k[(i, j)]),
        h: k.h,
    };
    let (a, b) = (duo_svd(&k).unwrap(), duo_svd(&scaled).unwrap());
    for i in 0..3 {
        assert!((3.0 * a.s[i] - b.s[i]).abs() <= 1e-12 * b.s[0]);
        for r in 0..20 {
            assert!((a.u[(r, i)] - b.u[(r, i)]).abs() <= 1e-8);
        }
    }
}

#[test]
fn all_ones_first_component_and_empty_selection() {
    let k = KernelMatrix {
        k: Mat::from_fn(5, 7, |_, _| 1.0),
        h: Bandwidth::fixed(1.0).unwrap(),
    };
    let svd = duo_svd(&k).unwrap();
    let e = select_embeddings(&svd, &[1], &[]).unwrap();
    for r in 0..5 {
        assert!((e.ex[(r, 0)] - 1.0).abs() <= 1e-12);
    }
    assert_eq!((e.ey.nrows(), e.ey.ncols()), (7, 0));
    let w = scaled_bulk_eigenvalues(&k, 4).unwrap();
    assert_eq!(w.len(), 1);
    assert!((w[0] - (35f64).sqrt() / 4.0).abs() <= 1e-12);
}

#[test]
fn zero_singular_values_cannot_be_extended() {
    let x = DataMatrix::from_fn(5, 2, |_, j| j as f64).unwrap();
    let y = DataMatrix::from_fn(7, 2, |_, j| j as f64 + 1.0).unwrap();
    let (_, k) = duo_kernel(&x, &y, 0.5, Exec::Sequential).unwrap();
    let ctx = ExtensionContext::new(x, y, k.h, duo_svd(&k).unwrap()).unwrap();
    assert!(ctx.extend(Side::Left, &[0.0, 0.0], 1).is_ok());
    assert!(matches!(ctx.extend(Side::Left, &[0.0, 0.0], 2), Err(Error::ZeroSingularValue { index: 2 })));
    let v = ctx.khat(Side::Right, &[0.3, 0.1], &[5.0, -2.0]).unwrap();
    assert!(v > 0.0 && v <= 1.0);
}

#[test]
fn clusterers_are_row_permutation_equivariant() {
    let mut rows = Vec::new();
    for c in 0..3 {
        for i in 0..10 {
            rows.push(vec![10.0 * c as f64 + 0.1 * i as f64, (i % 3) as f64 * 0.2]);
        }
    }
    let perm: Vec<usize> = (0..30).map(|i| (i * 7) % 30).collect();
    let a = Mat::from_fn(30, 2, |i, j| rows[i][j]);
    let b = Mat::from_fn(30, 2, |i, j| rows[perm[i]][j]);
    for (la, lb) in [
        (hierarchical_cluster(a.as_ref(), 3).unwrap(), hierarchical_cluster(b.as_ref(), 3).unwrap()),
        (kmeans(a.as_ref(), 3, 1).unwrap(), kmeans(b.as_ref(), 3, 1).unwrap()),
    ] {
        let moved: Vec<usize> = perm.iter().map(|&i| la.assignments()[i]).collect();
        let moved = duo_embed::LabeledPartition::from_labels(&moved);
        assert_eq!(rand_index(&moved, &lb).unwrap(), 1.0);
    }
}

#[test]
fn pca_scores_are_uncorrelated_and_ordered() {
    let d = gaussian(80, 6, 9);
    let s = pca_embed(&d, 3).unwrap();
    let g = gram_cols(s.as_ref());
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert!(g[(i, j)].abs() <= 1e-8 * g[(0, 0)]);
            }
        }
    }
    assert!(g[(0, 0)] >= g[(1, 1)] && g[(1, 1)] >= g[(2, 2)]);
}
