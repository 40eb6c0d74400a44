use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    crowding_distance, dominates, hypervolume_unit, non_dominated_sort, random_genome, vary,
    EarlyStop, GaConfig, MooError, StopDecision,
};
use crate::classifier::{Classifier, ClassifierSpec};
use crate::imaging::{FloatGrid, Image};
use crate::lime::{explain, goals, Explanation, GoalVector, LimeConfig, LimeError};
use crate::segmentation::{felzenszwalb, ParamsKey, SegmentationParams};

/// A genome with its (memoized) objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedIndividual {
    pub genome: SegmentationParams,
    pub goals: GoalVector,
    pub segments: usize,
}

struct CacheEntry {
    goals: GoalVector,
    segments: usize,
    explanation: Option<Arc<Explanation>>,
}

/// Per-run memo of evaluations keyed by the quantized genome.
///
/// Safe for concurrent insert-if-absent; the first insert wins.
#[derive(Default)]
pub struct FitnessCache {
    entries: RwLock<HashMap<ParamsKey, CacheEntry>>,
    computed: AtomicUsize,
}

impl FitnessCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of distinct genomes evaluated.
    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of evaluations actually computed (segmentation + explanation).
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn contains(&self, genome: &SegmentationParams) -> bool {
        self.entries.read().expect("cache lock").contains_key(&genome.key())
    }

    pub fn get(&self, genome: &SegmentationParams) -> Option<EvaluatedIndividual> {
        self.entries
            .read()
            .expect("cache lock")
            .get(&genome.key())
            .map(|e| EvaluatedIndividual {
                genome: *genome,
                goals: e.goals,
                segments: e.segments,
            })
    }

    pub fn explanation(&self, genome: &SegmentationParams) -> Option<Arc<Explanation>> {
        self.entries
            .read()
            .expect("cache lock")
            .get(&genome.key())
            .and_then(|e| e.explanation.clone())
    }

    fn insert_if_absent(&self, key: ParamsKey, entry: CacheEntry) -> bool {
        let mut map = self.entries.write().expect("cache lock");
        if map.contains_key(&key) {
            return false;
        }
        map.insert(key, entry);
        true
    }

    /// Drops stored explanations except for `keep`; goals are always kept.
    fn retain_explanations(&self, keep: &HashSet<ParamsKey>) {
        let mut map = self.entries.write().expect("cache lock");
        for (k, e) in map.iter_mut() {
            if !keep.contains(k) {
                e.explanation = None;
            }
        }
    }
}

struct EvalContext<'a> {
    image: &'a Image,
    classifier: &'a dyn Classifier,
    target_class: usize,
    lime: &'a LimeConfig,
    seed: u64,
}

impl EvalContext<'_> {
    fn compute(&self, genome: &SegmentationParams) -> Result<Explanation, LimeError> {
        let segmap = felzenszwalb(self.image, genome);
        if segmap.segment_count() < 2 {
            return Ok(Explanation::degenerate(segmap, self.seed));
        }
        explain(
            self.image,
            &segmap,
            self.classifier,
            self.target_class,
            self.lime,
            self.seed,
        )
    }

    fn entry(&self, genome: &SegmentationParams, cache: &FitnessCache) -> Result<CacheEntry, LimeError> {
        let expl = self.compute(genome)?;
        cache.computed.fetch_add(1, Ordering::Relaxed);
        Ok(CacheEntry {
            goals: goals(&expl),
            segments: expl.segmap.segment_count(),
            explanation: Some(Arc::new(expl)),
        })
    }

    /// Evaluates every genome not yet cached (in parallel), then reads all from the cache.
    /// Returns the individuals and the newly evaluated goal vectors in first-seen order.
    fn evaluate_all(
        &self,
        genomes: &[SegmentationParams],
        cache: &FitnessCache,
    ) -> Result<(Vec<EvaluatedIndividual>, Vec<GoalVector>), LimeError> {
        let mut seen = HashSet::new();
        let pending: Vec<SegmentationParams> = genomes
            .iter()
            .filter(|g| !cache.contains(g) && seen.insert(g.key()))
            .copied()
            .collect();
        let computed: Vec<(ParamsKey, CacheEntry)> = pending
            .par_iter()
            .map(|g| self.entry(g, cache).map(|e| (g.key(), e)))
            .collect::<Result<_, _>>()?;
        let mut fresh = Vec::with_capacity(computed.len());
        for (key, entry) in computed {
            let g = entry.goals;
            if cache.insert_if_absent(key, entry) {
                fresh.push(g);
            }
        }
        let individuals = genomes
            .iter()
            .map(|g| cache.get(g).expect("just evaluated"))
            .collect();
        Ok((individuals, fresh))
    }
}

/// Goals for one genome, computed at most once per cache.
///
/// A segmentation with fewer than two segments scores the worst vector (1, 1, 1).
pub fn evaluate(
    genome: &SegmentationParams,
    image: &Image,
    classifier: &dyn Classifier,
    target_class: usize,
    lime: &LimeConfig,
    run_seed: u64,
    cache: &FitnessCache,
) -> Result<EvaluatedIndividual, MooError> {
    if let Some(hit) = cache.get(genome) {
        return Ok(hit);
    }
    let ctx = EvalContext {
        image,
        classifier,
        target_class,
        lime,
        seed: run_seed,
    };
    let entry = ctx.entry(genome, cache)?;
    cache.insert_if_absent(genome.key(), entry);
    Ok(cache.get(genome).expect("inserted"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxGenerations,
    EarlyStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Rank-0 members of the population, one per distinct genome, ordered by genome.
    pub front: Vec<EvaluatedIndividual>,
    /// Hypervolume of `front`.
    pub hypervolume: f64,
    /// Hypervolume of every goal vector evaluated so far.
    pub archive_hypervolume: f64,
    pub front_size: usize,
    /// Distinct genomes evaluated so far.
    pub evaluations: usize,
}

/// Complete, deterministic trace of one evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub ga: GaConfig,
    pub lime: LimeConfig,
    pub target_class: usize,
    pub classifier_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    pub image_width: usize,
    pub image_height: usize,
    /// Standard deviations in downstream reports divide by the number of seeds.
    pub sd_convention: String,
    pub generations: Vec<GenerationRecord>,
    pub total_evaluations: usize,
    pub termination: Termination,
    pub final_front: Vec<EvaluatedIndividual>,
    /// Members of `final_front` whose grids were averaged, in averaging order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaged_grid_path: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub front_grid_paths: Vec<String>,
}

pub struct EvolutionOutcome {
    pub record: RunRecord,
    /// Pixel-wise mean of the final-front explanation grids.
    pub averaged: FloatGrid,
    /// Explanations of `record.final_front`, in the same order.
    pub front_explanations: Vec<Arc<Explanation>>,
}

struct Ranking {
    rank: Vec<usize>,
    crowding: Vec<f64>,
    fronts: Vec<Vec<usize>>,
}

fn rank_population(pop: &[EvaluatedIndividual]) -> Ranking {
    let goals: Vec<GoalVector> = pop.iter().map(|i| i.goals).collect();
    let fronts = non_dominated_sort(&goals);
    let mut rank = vec![0; pop.len()];
    let mut crowding = vec![0.0; pop.len()];
    for (r, front) in fronts.iter().enumerate() {
        let fg: Vec<GoalVector> = front.iter().map(|&i| goals[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&fg)) {
            rank[i] = r;
            crowding[i] = d;
        }
    }
    Ranking {
        rank,
        crowding,
        fronts,
    }
}

/// Keeps `mu` of `pool`: whole fronts in rank order, the last one cut by descending crowding.
fn environmental_selection(pool: Vec<EvaluatedIndividual>, mu: usize) -> Vec<EvaluatedIndividual> {
    let ranking = rank_population(&pool);
    let mut chosen: Vec<usize> = Vec::with_capacity(mu);
    for front in &ranking.fronts {
        if chosen.len() + front.len() <= mu {
            chosen.extend(front);
        } else {
            let mut last = front.clone();
            last.sort_by(|&a, &b| ranking.crowding[b].total_cmp(&ranking.crowding[a]).then(a.cmp(&b)));
            chosen.extend(&last[..mu - chosen.len()]);
        }
        if chosen.len() == mu {
            break;
        }
    }
    chosen.into_iter().map(|i| pool[i].clone()).collect()
}

fn binary_tournament<R: Rng>(
    pop: &[EvaluatedIndividual],
    ranking: &Ranking,
    count: usize,
    rng: &mut R,
) -> Vec<SegmentationParams> {
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0..pop.len());
            let b = rng.gen_range(0..pop.len());
            let better_b = ranking.rank[b] < ranking.rank[a]
                || (ranking.rank[b] == ranking.rank[a] && ranking.crowding[b] > ranking.crowding[a]);
            pop[if better_b { b } else { a }].genome
        })
        .collect()
}

fn unique_front(pop: &[EvaluatedIndividual], ranking: &Ranking) -> Vec<EvaluatedIndividual> {
    let mut front: Vec<EvaluatedIndividual> = ranking.fronts[0].iter().map(|&i| pop[i].clone()).collect();
    front.sort_by_key(|i| i.genome.key());
    front.dedup_by_key(|i| i.genome.key());
    front
}

/// Non-dominated subset of every goal vector evaluated so far.
#[derive(Default)]
struct Archive {
    points: Vec<GoalVector>,
}

impl Archive {
    fn add(&mut self, g: GoalVector) {
        if self.points.iter().any(|p| *p == g || dominates(p, &g)) {
            return;
        }
        self.points.retain(|p| !dominates(&g, p));
        self.points.push(g);
    }

    fn hypervolume(&self) -> Result<f64, MooError> {
        hypervolume_unit(&self.points)
    }
}

pub fn evolve(
    image: &Image,
    classifier: &dyn Classifier,
    target_class: usize,
    ga: &GaConfig,
    lime: &LimeConfig,
) -> Result<EvolutionOutcome, MooError> {
    evolve_with_progress(image, classifier, target_class, ga, lime, |_| {})
}

/// Runs NSGA-II; `on_generation` sees each generation's record as it is produced.
///
/// The generation loop owns the only GA random stream; fitness evaluations run
/// on the current rayon pool and do not touch it.
pub fn evolve_with_progress(
    image: &Image,
    classifier: &dyn Classifier,
    target_class: usize,
    ga: &GaConfig,
    lime: &LimeConfig,
    mut on_generation: impl FnMut(&GenerationRecord),
) -> Result<EvolutionOutcome, MooError> {
    ga.validate()?;
    lime.validate()?;
    if target_class >= classifier.class_count() {
        return Err(LimeError::TargetClass {
            target: target_class,
            classes: classifier.class_count(),
        }
        .into());
    }
    let ctx = EvalContext {
        image,
        classifier,
        target_class,
        lime,
        seed: ga.seed,
    };
    let cache = FitnessCache::new();
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let mut archive = Archive::default();
    let mut early_stop = EarlyStop::new(ga.patience);
    let mut generations = Vec::new();
    let mu = ga.population_size;

    let initial: Vec<SegmentationParams> = (0..mu).map(|_| random_genome(&mut rng)).collect();
    let (mut population, fresh) = ctx.evaluate_all(&initial, &cache)?;
    fresh.into_iter().for_each(|g| archive.add(g));
    // initial sort so the first tournament sees ranks and crowding
    population = environmental_selection(population, mu);

    let mut generation = 0;
    let termination = loop {
        let ranking = rank_population(&population);
        let front = unique_front(&population, &ranking);
        let front_goals: Vec<GoalVector> = front.iter().map(|i| i.goals).collect();
        let record = GenerationRecord {
            generation,
            hypervolume: hypervolume_unit(&front_goals)?,
            archive_hypervolume: archive.hypervolume()?,
            front_size: front.len(),
            evaluations: cache.len(),
            front,
        };
        log::info!(
            "seed {} gen {:>3}: front {:>3}, hv {:.6}, archive hv {:.6}, evaluations {}",
            ga.seed,
            generation,
            record.front_size,
            record.hypervolume,
            record.archive_hypervolume,
            record.evaluations
        );
        on_generation(&record);
        generations.push(record);

        let keep: HashSet<ParamsKey> = population.iter().map(|i| i.genome.key()).collect();
        cache.retain_explanations(&keep);

        if early_stop.check(&front_goals) == StopDecision::Stop {
            break Termination::EarlyStop;
        }
        if generation >= ga.max_generations {
            break Termination::MaxGenerations;
        }
        generation += 1;

        let parents = binary_tournament(&population, &ranking, mu, &mut rng);
        let offspring = vary(&parents, ga, &mut rng);
        let (offspring, fresh) = ctx.evaluate_all(&offspring, &cache)?;
        fresh.into_iter().for_each(|g| archive.add(g));
        let mut pool = population;
        pool.extend(offspring);
        population = environmental_selection(pool, mu);
    };

    let final_front = generations.last().expect("at least one generation").front.clone();
    let front_explanations = final_front
        .iter()
        .map(|ind| match cache.explanation(&ind.genome) {
            Some(e) => Ok(e),
            // evaluation is deterministic, so recomputing reproduces the evicted explanation
            None => ctx.compute(&ind.genome).map(Arc::new),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let averaged = average_grids(front_explanations.iter().map(|e| &e.pixel_grid));

    let record = RunRecord {
        seed: ga.seed,
        ga: ga.clone(),
        lime: lime.clone(),
        target_class,
        classifier_name: classifier.name().to_string(),
        classifier: None,
        image_path: None,
        image_width: image.width(),
        image_height: image.height(),
        sd_convention: "population".into(),
        generations,
        total_evaluations: cache.len(),
        termination,
        final_front,
        averaged_grid_path: None,
        front_grid_paths: Vec::new(),
    };
    Ok(EvolutionOutcome {
        record,
        averaged,
        front_explanations,
    })
}

fn average_grids<'a>(grids: impl Iterator<Item = &'a FloatGrid>) -> FloatGrid {
    let mut sum: Option<Vec<f64>> = None;
    let mut shape = (0, 0);
    let mut count = 0usize;
    for g in grids {
        shape = (g.width(), g.height());
        match sum.as_mut() {
            None => sum = Some(g.values().to_vec()),
            Some(s) => s.iter_mut().zip(g.values()).for_each(|(a, b)| *a += b),
        }
        count += 1;
    }
    let sum = sum.expect("final front is nonempty");
    let values = sum.into_iter().map(|v| v / count as f64).collect();
    FloatGrid::new(shape.0, shape.1, values).expect("mean of finite grids is finite")
}
