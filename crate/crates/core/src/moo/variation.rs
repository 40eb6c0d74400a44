use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::GaConfig;
use crate::segmentation::{SegmentationParams, MIN_SIZE_RANGE, SCALE_RANGE, SIGMA_RANGE};

/// Uniform draw over the gene ranges.
pub fn random_genome<R: Rng>(rng: &mut R) -> SegmentationParams {
    let scale = rng.gen_range(SCALE_RANGE.0..=SCALE_RANGE.1);
    let sigma = rng.gen_range(SIGMA_RANGE.0..=SIGMA_RANGE.1);
    let min_size = rng.gen_range(MIN_SIZE_RANGE.0..=MIN_SIZE_RANGE.1);
    SegmentationParams::clamped(scale, sigma, min_size as i64)
}

type Genes = (f64, f64, i64);

fn genes(p: &SegmentationParams) -> Genes {
    (p.scale(), p.sigma(), p.min_size() as i64)
}

fn uniform_crossover<R: Rng>(a: &mut Genes, b: &mut Genes, indpb: f64, rng: &mut R) {
    if rng.gen::<f64>() < indpb {
        std::mem::swap(&mut a.0, &mut b.0);
    }
    if rng.gen::<f64>() < indpb {
        std::mem::swap(&mut a.1, &mut b.1);
    }
    if rng.gen::<f64>() < indpb {
        std::mem::swap(&mut a.2, &mut b.2);
    }
}

fn mutate<R: Rng>(g: &mut Genes, cfg: &GaConfig, rng: &mut R) {
    let scale_noise = Normal::new(0.0, cfg.scale_mutation_sd).expect("validated sd");
    let sigma_noise = Normal::new(0.0, cfg.sigma_mutation_sd).expect("validated sd");
    if rng.gen::<f64>() < cfg.indpb_mutation {
        g.0 += scale_noise.sample(rng);
    }
    if rng.gen::<f64>() < cfg.indpb_mutation {
        g.1 += sigma_noise.sample(rng);
    }
    if rng.gen::<f64>() < cfg.indpb_mutation {
        let (lo, hi) = cfg.min_size_mutation_range;
        g.2 = rng.gen_range(lo..=hi) as i64;
    }
}

/// Pairwise uniform crossover with probability `cxpb`, then per-individual
/// mutation with probability `mutpb`; results are clamped and quantized.
pub fn vary<R: Rng>(parents: &[SegmentationParams], cfg: &GaConfig, rng: &mut R) -> Vec<SegmentationParams> {
    let mut kids: Vec<Genes> = parents.iter().map(genes).collect();
    for pair in kids.chunks_exact_mut(2) {
        if rng.gen::<f64>() < cfg.cxpb {
            let (a, b) = pair.split_at_mut(1);
            uniform_crossover(&mut a[0], &mut b[0], cfg.indpb_crossover, rng);
        }
    }
    for kid in kids.iter_mut() {
        if rng.gen::<f64>() < cfg.mutpb {
            mutate(kid, cfg, rng);
        }
    }
    kids.into_iter()
        .map(|(scale, sigma, min_size)| SegmentationParams::clamped(scale, sigma, min_size))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parents() -> Vec<SegmentationParams> {
        vec![
            SegmentationParams::new(10.0, 0.5, 20).unwrap(),
            SegmentationParams::new(900.0, 4.5, 400).unwrap(),
            SegmentationParams::new(1000.0, 2.0, 100).unwrap(),
            SegmentationParams::new(1.0, 0.0, 15).unwrap(),
            SegmentationParams::new(55.5, 1.25, 250).unwrap(),
        ]
    }

    #[test]
    fn no_variation_copies() {
        let cfg = GaConfig { cxpb: 0.0, mutpb: 0.0, ..GaConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(vary(&parents(), &cfg, &mut rng), parents());
    }

    #[test]
    fn forced_crossover_swaps_every_gene() {
        let cfg = GaConfig { cxpb: 1.0, indpb_crossover: 1.0, mutpb: 0.0, ..GaConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = parents();
        let kids = vary(&p, &cfg, &mut rng);
        assert_eq!((kids[0], kids[1]), (p[1], p[0]));
        assert_eq!((kids[2], kids[3]), (p[3], p[2]));
        // odd one out is never crossed
        assert_eq!(kids[4], p[4]);
    }

    #[test]
    fn forced_mutation_stays_in_range() {
        let cfg = GaConfig { cxpb: 0.0, mutpb: 1.0, indpb_mutation: 1.0, ..GaConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut hit_top = false;
        for _ in 0..200 {
            for k in vary(&parents(), &cfg, &mut rng) {
                assert!((15..=500).contains(&k.min_size()));
                assert!((1.0..=1000.0).contains(&k.scale()));
                assert!((0.0..=5.0).contains(&k.sigma()));
                assert_eq!(k, SegmentationParams::clamped(k.scale(), k.sigma(), k.min_size() as i64));
                hit_top |= k.scale() == 1000.0;
            }
        }
        // the parent at 1000 mutates upward about half the time and is clamped
        assert!(hit_top);
    }

    #[test]
    fn random_genomes_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let g = random_genome(&mut rng);
            assert!((1.0..=1000.0).contains(&g.scale()));
            assert!((0.0..=5.0).contains(&g.sigma()));
            assert!((15..=500).contains(&g.min_size()));
        }
    }
}
