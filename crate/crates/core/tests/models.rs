//! Monte-Carlo checks of the generative models.

use ksync::genmodel::{
    barabasi_albert_edges, expected_h, sample_angles, sample_angles_with, sample_er_mixture_with,
    MixtureParams,
};
use ksync::{build_measurement_matrix, rng, Complex64, EdgeLabel};

#[test]
fn random_groups_are_nearly_orthogonal() {
    let n = 10_000;
    let hits = (0..100u64)
        .filter(|&s| {
            let z = sample_angles(n, 2, s).unwrap().to_unit_vectors();
            z.z[0].dotc(&z.z[1]).norm() <= 0.1
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn label_fractions_follow_probabilities() {
    let n = 2000;
    let params = MixtureParams::new(n, 1.0, vec![0.3, 0.2], 4).unwrap();
    let angles = sample_angles(n, 2, 5).unwrap();
    let g = sample_er_mixture_with(&params, &angles, &mut rng::stream(4, &[])).unwrap();
    let m = g.edge_count() as f64;
    let frac = |l: EdgeLabel| g.edges().iter().filter(|e| e.label == l).count() as f64 / m;
    assert!((frac(EdgeLabel::Group(0)) - 0.3).abs() <= 0.02);
    assert!((frac(EdgeLabel::Group(1)) - 0.2).abs() <= 0.02);
    assert!((frac(EdgeLabel::Outlier) - 0.5).abs() <= 0.02);
}

#[test]
fn barabasi_albert_edge_count() {
    let (n, m) = (500, 50);
    let edges = barabasi_albert_edges(n, m, &mut rng::stream(8, &[])).unwrap();
    assert_eq!(edges.len(), m * (n - m) + m * (m - 1) / 2);
    let mut dedup = edges.clone();
    dedup.dedup();
    assert_eq!(dedup.len(), edges.len());
}

#[test]
fn barabasi_albert_degrees_are_heavy_tailed() {
    let (n, m) = (500, 5);
    for s in 0..10u64 {
        let mut deg = vec![0usize; n];
        for (i, j) in barabasi_albert_edges(n, m, &mut rng::stream(s, &[])).unwrap() {
            deg[i] += 1;
            deg[j] += 1;
        }
        let max = *deg.iter().max().unwrap();
        deg.sort_unstable();
        let median = deg[n / 2];
        assert!(max >= 3 * median, "seed {s}: max {max}, median {median}");
    }
}

#[test]
fn measurement_matrix_is_unbiased() {
    let (n, draws) = (40, 500);
    let params = MixtureParams::new(n, 0.6, vec![0.4, 0.25], 0).unwrap();
    let angles = sample_angles_with(n, 2, &mut rng::stream(1, &[])).unwrap();
    let eh = expected_h(&params, &angles).unwrap();
    let diag = params.lambda * params.p.iter().sum::<f64>();
    let mut sum = vec![Complex64::new(0.0, 0.0); n * n];
    let mut sq = vec![0.0; n * n];
    for d in 0..draws {
        let g = sample_er_mixture_with(&params, &angles, &mut rng::stream(2, &[d])).unwrap();
        let h = build_measurement_matrix(&g, diag);
        for i in 0..n {
            for j in 0..n {
                let x = h.get(i, j) - eh.get(i, j);
                sum[i * n + j] += x;
                sq[i * n + j] += x.norm_sqr();
            }
        }
    }
    let m = draws as f64;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let mean = sum[i * n + j] / m;
            let var = (sq[i * n + j] / m - mean.norm_sqr()) * m / (m - 1.0);
            worst = worst.max(mean.norm() / (var / m).sqrt());
        }
        assert!(sum[i * n + i].norm() < 1e-9);
    }
    assert!(worst <= 3.0, "largest deviation {worst} standard errors");
}
