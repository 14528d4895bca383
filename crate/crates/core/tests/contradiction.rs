use leggett::bloch::{sample_sphere, BlochVector, OperatorBasis};
use leggett::crypto::basis_to_bloch;
use leggett::polytope::{contradiction_gap, deterministic_crypto_contradiction};
use leggett::qcorr::{cglmp_bases, ChainedSettings};
use leggett::rng::SeedStream;

/// `max min(a₁·u, a₂·u)` by a dense scan of the plane through both vectors;
/// components outside that plane only shrink both overlaps.
fn plane_scan(a1: &BlochVector, a2: &BlochVector) -> f64 {
    let e1 = a1.coords().to_vec();
    let c = a1.dot(a2).unwrap();
    let mut e2: Vec<f64> = a2.coords().iter().zip(&e1).map(|(y, x)| y - c * x).collect();
    let norm = e2.iter().map(|x| x * x).sum::<f64>().sqrt();
    e2.iter_mut().for_each(|x| *x /= norm);
    let s = (1.0 - c * c).max(0.0).sqrt();
    let steps = 200_000;
    (0..steps)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / steps as f64;
            let (x, y) = (t.cos(), t.sin());
            x.min(c * x + s * y)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn gap_matches_dense_scan_for_chained_bases() {
    for d in [2, 3, 4] {
        let ops = OperatorBasis::generate(d).unwrap();
        let bases = cglmp_bases(&ChainedSettings::new(d, 3).unwrap());
        let blochs: Vec<_> = bases.alice.iter().map(|b| basis_to_bloch(&ops, b).unwrap()).collect();
        for (i, first) in blochs.iter().enumerate() {
            for second in &blochs[i..] {
                for x1 in 0..d {
                    for x2 in 0..d {
                        let (a1, a2) = (&first.vectors()[x1], &second.vectors()[x2]);
                        if a1.sub(a2).unwrap().norm() < 1e-9 {
                            continue;
                        }
                        let cert = deterministic_crypto_contradiction(first, x1, second, x2).unwrap();
                        assert!(cert.gap > 0.0);
                        assert!((cert.max_min_overlap - plane_scan(a1, a2)).abs() < 1e-3);
                    }
                }
            }
        }
    }
}

#[test]
fn random_directions_never_beat_the_certificate() {
    let stream = SeedStream::new(77);
    for trial in 0..20 {
        let mut rng = stream.substream(trial);
        let a1 = BlochVector::new(3, sample_sphere(8, &mut rng)).unwrap();
        let a2 = BlochVector::new(3, sample_sphere(8, &mut rng)).unwrap();
        let cert = contradiction_gap(&a1, &a2).unwrap();
        assert!((cert.maximizer.dot(&a1).unwrap().min(cert.maximizer.dot(&a2).unwrap()) - cert.max_min_overlap).abs() < 1e-12);
        assert!((cert.max_min_overlap - plane_scan(&a1, &a2)).abs() < 1e-3);
        for k in 0..2_000 {
            let u = BlochVector::new(3, sample_sphere(8, &mut stream.substream(1_000 + trial * 2_000 + k))).unwrap();
            let m = u.dot(&a1).unwrap().min(u.dot(&a2).unwrap());
            assert!(m <= cert.max_min_overlap + 1e-12);
        }
    }
}
