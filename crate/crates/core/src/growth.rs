//! Growth processes.
//!
//! Each time step draws a Poisson number of arrivals. Arrivals pick targets
//! among vertices that existed at the start of the step and are attached at
//! once, so no arrival ever targets a same-step vertex.
//!
//! - `LeafMass`: a cluster with at least one leaf is chosen from a normalized
//!   sample of cluster masses, then a leaf uniformly inside it.
//! - `FreeMass`: any vertex is a target; its cluster mass carries an offset
//!   `beta` so leaves stay reachable.
//! - `MeanDegree`, `MeanFitness`, `MeanAffine`: categorical choice on the mean
//!   of the corresponding Dirichlet distribution.
//! - `RandomForest`: affine weights split into attachment `eta k + delta` and
//!   root creation `beta - delta`.
//! - `Crp`: Chinese-restaurant seating; tables are roots, guests attach to
//!   the root of their table.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize, Serializer};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::normalized_mass::{sample_normalized, ConditioningSet, ProbVector};
use crate::rng::RngStream;
use crate::tree::{ClusterOwner, Forest, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    LeafMass,
    FreeMass,
    MeanDegree,
    MeanFitness,
    MeanAffine,
    RandomForest,
    #[serde(rename = "CRP")]
    Crp,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::LeafMass,
        Scheme::FreeMass,
        Scheme::MeanDegree,
        Scheme::MeanFitness,
        Scheme::MeanAffine,
        Scheme::RandomForest,
        Scheme::Crp,
    ];

    fn is_mean(self) -> bool {
        matches!(
            self,
            Scheme::MeanDegree | Scheme::MeanFitness | Scheme::MeanAffine
        )
    }
}

/// Conditioning family for per-vertex masses: `Gamma(shape, 1)` or
/// `Stable(scale, nu)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MassFamily {
    #[default]
    Gamma,
    Stable {
        nu: f64,
    },
}

impl MassFamily {
    pub fn spec(self, shape: f64) -> DistributionSpec {
        match self {
            MassFamily::Gamma => DistributionSpec::Gamma {
                alpha: shape,
                lambda: 1.0,
            },
            MassFamily::Stable { nu } => DistributionSpec::Stable { alpha: shape, nu },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub scheme: Scheme,
    /// Per-vertex shape.
    pub eta: f64,
    /// Offset (free, affine, forest) or new-table weight (CRP).
    pub beta: f64,
    /// Attachment share of the offset, `RandomForest` only.
    pub delta: f64,
    pub family: MassFamily,
    /// Source of the per-vertex fitness values of `MeanFitness`.
    pub fitness_spec: Option<DistributionSpec>,
    pub poisson_rate: f64,
    pub steps: u64,
    pub seed: u64,
    /// Draw a fresh mass sample for every arrival instead of once per step.
    pub resample_per_arrival: bool,
    /// Draw each vertex mass once at birth and normalize the fixed masses
    /// every step, instead of redrawing masses every step.
    pub fixed_mass: bool,
    /// Keep target lists and probability vectors in step records. They grow
    /// with the forest, so long runs may want them off.
    pub record_weights: bool,
}

impl GrowthConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            eta: 1.0,
            beta: 1.0,
            delta: 0.5,
            family: MassFamily::Gamma,
            fitness_spec: None,
            poisson_rate: 1.0,
            steps: 100,
            seed: 0,
            resample_per_arrival: false,
            fixed_mass: false,
            record_weights: true,
        }
    }

    /// Rejects inconsistent parameters; messages name the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return bad(format!("eta: must be positive, got {}", self.eta));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta: must be nonnegative, got {}", self.beta));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad(format!("delta: must be nonnegative, got {}", self.delta));
        }
        if !(self.poisson_rate.is_finite() && self.poisson_rate > 0.0) {
            return bad(format!(
                "poisson_rate: must be positive, got {}",
                self.poisson_rate
            ));
        }
        if let MassFamily::Stable { nu } = self.family {
            if !(nu > 0.0 && nu < 1.0) {
                return bad(format!("family.nu: must lie in (0, 1), got {nu}"));
            }
        }
        match self.scheme {
            Scheme::FreeMass | Scheme::Crp if self.beta <= 0.0 => {
                return bad(format!(
                    "beta: must be positive for {:?}, got {}",
                    self.scheme, self.beta
                ));
            }
            Scheme::RandomForest if !(self.delta > 0.0 && self.delta < self.beta) => {
                return bad(format!(
                    "delta: RandomForest requires 0 < delta < beta, got delta = {} and beta = {}",
                    self.delta, self.beta
                ));
            }
            Scheme::MeanFitness => match &self.fitness_spec {
                Some(spec) => spec
                    .validate()
                    .map_err(|e| Error::InvalidInput(format!("fitness_spec: {e}")))?,
                None => return bad("fitness_spec: required for MeanFitness".into()),
            },
            _ => {}
        }
        Ok(())
    }

    /// Starting forest. Degree-driven mean schemes need one edge to have any
    /// target, so they start from a root with one child born at step 1.
    pub fn initial_forest(&self) -> Forest {
        let mut forest = Forest::new();
        if matches!(self.scheme, Scheme::MeanDegree | Scheme::MeanFitness) {
            forest
                .attach(VertexId(0), 1)
                .expect("fresh root accepts a step-1 child");
            forest.advance_to(1).expect("step moves forward");
        }
        forest
    }
}

/// What a probability index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Vertex(VertexId),
    /// Virtual cluster around a root that is still a leaf.
    VirtualCluster,
    NewRoot,
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Target::Vertex(v) => s.serialize_u64(v.0 as u64),
            Target::VirtualCluster => s.serialize_str("virtual"),
            Target::NewRoot => s.serialize_str("new-root"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Choice {
    pub new_id: VertexId,
    /// `None` when the arrival planted a new root.
    pub target: Option<VertexId>,
}

/// Audit of one step. Serialized field order is fixed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub arrivals: usize,
    pub targets: Vec<Target>,
    /// Probability vectors used, indexed like `targets`: one per step, or one
    /// per arrival when resampling per arrival.
    pub weights: Vec<ProbVector>,
    pub choices: Vec<Choice>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRun {
    pub forest: Forest,
    pub records: Vec<StepRecord>,
    pub initial_vertices: usize,
}

/// `k_i / sum k` over vertices with `k_i > 0`.
pub fn degree_weights(degrees: &[usize]) -> Result<ProbVector> {
    let w: Vec<f64> = degrees.iter().map(|&k| k as f64).collect();
    ProbVector::from_weights(&w)
}

/// `eta_i k_i / sum eta_j k_j`.
pub fn fitness_weights(degrees: &[usize], fitness: &[f64]) -> Result<ProbVector> {
    if degrees.len() != fitness.len() {
        return Err(Error::InvalidInput(
            "one fitness value per degree required".into(),
        ));
    }
    let w: Vec<f64> = degrees
        .iter()
        .zip(fitness)
        .map(|(&k, &f)| f * k as f64)
        .collect();
    ProbVector::from_weights(&w)
}

/// `(eta k_i + beta) / sum (eta k_j + beta)`.
pub fn affine_weights(degrees: &[usize], eta: f64, beta: f64) -> Result<ProbVector> {
    let w: Vec<f64> = degrees.iter().map(|&k| eta * k as f64 + beta).collect();
    ProbVector::from_weights(&w)
}

/// Mean-scheme target distribution for `forest`.
///
/// `MeanDegree` and `MeanFitness` range over deep vertices only (a leaf has
/// zero weight); `MeanAffine` covers every vertex. `fitness` is indexed by
/// vertex id and only read by `MeanFitness`.
pub fn attachment_weights(
    forest: &Forest,
    cfg: &GrowthConfig,
    fitness: &[f64],
) -> Result<(Vec<VertexId>, ProbVector)> {
    let degrees = forest.in_degrees();
    match cfg.scheme {
        Scheme::MeanDegree | Scheme::MeanFitness => {
            let deep: Vec<VertexId> = (0..degrees.len())
                .filter(|&v| degrees[v] > 0)
                .map(VertexId)
                .collect();
            if deep.is_empty() {
                return Err(Error::NoEligibleTarget);
            }
            let ks: Vec<usize> = deep.iter().map(|v| degrees[v.0]).collect();
            let weights = if cfg.scheme == Scheme::MeanDegree {
                degree_weights(&ks)?
            } else {
                let fs = deep
                    .iter()
                    .map(|v| fitness.get(v.0).copied().ok_or(Error::UnknownVertex(v.0)))
                    .collect::<Result<Vec<f64>>>()?;
                fitness_weights(&ks, &fs)?
            };
            Ok((deep, weights))
        }
        Scheme::MeanAffine => {
            let weights = affine_weights(&degrees, cfg.eta, cfg.beta)?;
            Ok(((0..degrees.len()).map(VertexId).collect(), weights))
        }
        other => Err(Error::InvalidInput(format!(
            "attachment_weights applies to mean schemes, not {other:?}"
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrpChoice {
    Table(usize),
    NewTable,
}

/// Seats one guest: table `i` with probability `k_i / (sum k + beta)`, a new
/// table with probability `beta / (sum k + beta)`.
pub fn crp_step(tables: &[usize], beta: f64, rng: &mut RngStream) -> Result<CrpChoice> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "beta must be nonnegative, got {beta}"
        )));
    }
    let mut w: Vec<f64> = tables.iter().map(|&k| k as f64).collect();
    w.push(beta);
    let pv = match ProbVector::from_weights(&w) {
        Ok(pv) => pv,
        Err(Error::NoEligibleTarget) => return Ok(CrpChoice::NewTable),
        Err(e) => return Err(e),
    };
    let i = pv.select(rng.random::<f64>());
    Ok(if i == tables.len() {
        CrpChoice::NewTable
    } else {
        CrpChoice::Table(i)
    })
}

/// A running simulation: configuration, forest, random stream and the
/// per-vertex attributes drawn at birth.
pub struct Simulation {
    cfg: GrowthConfig,
    forest: Forest,
    rng: RngStream,
    poisson: Poisson<f64>,
    fitness: Vec<f64>,
    masses: Vec<f64>,
    offsets: Vec<f64>,
}

impl Simulation {
    pub fn new(cfg: GrowthConfig) -> Result<Self> {
        let forest = cfg.initial_forest();
        Self::with_forest(cfg, forest)
    }

    pub fn with_forest(cfg: GrowthConfig, forest: Forest) -> Result<Self> {
        cfg.validate()?;
        let poisson = Poisson::new(cfg.poisson_rate)
            .map_err(|e| Error::InvalidInput(format!("poisson_rate: {e}")))?;
        let rng = RngStream::new(cfg.seed, 0);
        Ok(Self {
            cfg,
            forest,
            rng,
            poisson,
            fitness: Vec::new(),
            masses: Vec::new(),
            offsets: Vec::new(),
        })
    }

    pub fn config(&self) -> &GrowthConfig {
        &self.cfg
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn into_forest(self) -> Forest {
        self.forest
    }

    /// Cached fitness values, indexed by vertex id (`MeanFitness` only).
    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    /// Draws attributes for vertices born since the last call, in id order.
    fn sync_attributes(&mut self) -> Result<()> {
        let n = self.forest.len();
        if self.cfg.scheme == Scheme::MeanFitness {
            let spec = self.cfg.fitness_spec.expect("validated");
            while self.fitness.len() < n {
                self.fitness.push(spec.sample(&mut self.rng)?);
            }
        }
        if self.cfg.fixed_mass && matches!(self.cfg.scheme, Scheme::LeafMass | Scheme::FreeMass) {
            while self.masses.len() < n {
                let m = self.cfg.family.spec(self.cfg.eta).sample(&mut self.rng)?;
                self.masses.push(m);
                let offset = if self.cfg.scheme == Scheme::FreeMass {
                    self.cfg.family.spec(self.cfg.beta).sample(&mut self.rng)?
                } else {
                    0.0
                };
                self.offsets.push(offset);
            }
        }
        Ok(())
    }

    /// Runs one step with a Poisson number of arrivals.
    pub fn step(&mut self) -> Result<StepRecord> {
        let arrivals = self.poisson.sample(&mut self.rng) as usize;
        self.step_with_arrivals(arrivals)
    }

    /// Runs one step with a fixed number of arrivals.
    pub fn step_with_arrivals(&mut self, arrivals: usize) -> Result<StepRecord> {
        match self.cfg.scheme {
            Scheme::LeafMass => self.leaf_step(arrivals),
            Scheme::FreeMass => self.free_step(arrivals),
            Scheme::RandomForest => self.forest_step(arrivals),
            Scheme::Crp => self.crp_tables_step(arrivals),
            _ => self.mean_step(arrivals),
        }
    }

    fn require(&self, ok: bool, op: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{op} does not apply to scheme {:?}",
                self.cfg.scheme
            )))
        }
    }

    fn next_step(&self) -> u64 {
        self.forest.current_step() + 1
    }

    /// One probability vector per step (or per arrival), either sampled from
    /// the conditioning set or from fixed per-vertex masses.
    fn mass_vectors(
        &mut self,
        shapes: &[f64],
        fixed: Option<Vec<f64>>,
        arrivals: usize,
    ) -> Result<Vec<ProbVector>> {
        if arrivals == 0 {
            return Ok(Vec::new());
        }
        if let Some(masses) = fixed {
            return Ok(vec![ProbVector::from_weights(&masses)?]);
        }
        let family = self.cfg.family;
        let cond = ConditioningSet::new(shapes.iter().map(|&s| family.spec(s)).collect())?;
        let draws = if self.cfg.resample_per_arrival {
            arrivals
        } else {
            1
        };
        (0..draws)
            .map(|_| sample_normalized(&cond, &mut self.rng))
            .collect()
    }

    fn finish(
        &mut self,
        step: u64,
        arrivals: usize,
        targets: Vec<Target>,
        weights: Vec<ProbVector>,
        choices: Vec<Choice>,
    ) -> Result<StepRecord> {
        self.forest.advance_to(step)?;
        let (targets, weights) = if self.cfg.record_weights {
            (targets, weights)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(StepRecord {
            step,
            arrivals,
            targets,
            weights,
            choices,
        })
    }

    /// Leaf attachment on mass-weighted clusters.
    pub fn leaf_step(&mut self, arrivals: usize) -> Result<StepRecord> {
        self.require(self.cfg.scheme == Scheme::LeafMass, "leaf_step")?;
        self.sync_attributes()?;
        let step = self.next_step();
        let clusters = self.forest.eligible_leaf_clusters();
        if clusters.is_empty() && arrivals > 0 {
            return Err(Error::NoEligibleTarget);
        }
        let shapes: Vec<f64> = clusters
            .iter()
            .map(|c| self.cfg.eta * c.size as f64)
            .collect();
        let fixed = self.cfg.fixed_mass.then(|| {
            clusters
                .iter()
                .map(|c| match c.owner {
                    ClusterOwner::Virtual => self.masses[c.leaves[0].0],
                    ClusterOwner::Vertex(v) => self
                        .forest
                        .cluster_members(v)
                        .expect("owner exists")
                        .iter()
                        .map(|m| self.masses[m.0])
                        .sum(),
                })
                .collect()
        });
        let weights = self.mass_vectors(&shapes, fixed, arrivals)?;

        let mut picks = Vec::with_capacity(arrivals);
        for a in 0..arrivals {
            let pv = &weights[a.min(weights.len() - 1)];
            let cluster = &clusters[pv.select(self.rng.random::<f64>())];
            let leaf = cluster.leaves[self.rng.random_range(0..cluster.leaves.len())];
            picks.push(leaf);
        }
        let choices = self.commit(&picks, step)?;
        let targets = clusters
            .iter()
            .map(|c| match c.owner {
                ClusterOwner::Virtual => Target::VirtualCluster,
                ClusterOwner::Vertex(v) => Target::Vertex(v),
            })
            .collect();
        self.finish(step, arrivals, targets, weights, choices)
    }

    /// Free attachment on mass-weighted vertices with offset `beta`.
    pub fn free_step(&mut self, arrivals: usize) -> Result<StepRecord> {
        self.require(self.cfg.scheme == Scheme::FreeMass, "free_step")?;
        self.sync_attributes()?;
        let step = self.next_step();
        let degrees = self.forest.in_degrees();
        let shapes: Vec<f64> = degrees
            .iter()
            .map(|&k| self.cfg.eta * k as f64 + self.cfg.beta)
            .collect();
        let fixed = self.cfg.fixed_mass.then(|| {
            (0..degrees.len())
                .map(|v| {
                    let members = self
                        .forest
                        .cluster_members(VertexId(v))
                        .expect("vertex exists");
                    self.offsets[v] + members.iter().map(|m| self.masses[m.0]).sum::<f64>()
                })
                .collect()
        });
        let weights = self.mass_vectors(&shapes, fixed, arrivals)?;

        let mut picks = Vec::with_capacity(arrivals);
        for a in 0..arrivals {
            let pv = &weights[a.min(weights.len() - 1)];
            picks.push(VertexId(pv.select(self.rng.random::<f64>())));
        }
        let choices = self.commit(&picks, step)?;
        let targets = (0..degrees.len())
            .map(|v| Target::Vertex(VertexId(v)))
            .collect();
        self.finish(step, arrivals, targets, weights, choices)
    }

    /// Categorical choice on the mean weight vector; no mass sampling.
    pub fn mean_step(&mut self, arrivals: usize) -> Result<StepRecord> {
        self.require(self.cfg.scheme.is_mean(), "mean_step")?;
        self.sync_attributes()?;
        let step = self.next_step();
        if arrivals == 0 {
            return self.finish(step, 0, Vec::new(), Vec::new(), Vec::new());
        }
        let (ids, pv) = attachment_weights(&self.forest, &self.cfg, &self.fitness)?;
        let picks: Vec<VertexId> = (0..arrivals)
            .map(|_| ids[pv.select(self.rng.random::<f64>())])
            .collect();
        let choices = self.commit(&picks, step)?;
        let targets = ids.into_iter().map(Target::Vertex).collect();
        self.finish(step, arrivals, targets, vec![pv], choices)
    }

    /// Random-forest growth: attach to `i` with weight `eta k_i + delta`, or
    /// plant a new root with weight `beta - delta`.
    pub fn forest_step(&mut self, arrivals: usize) -> Result<StepRecord> {
        self.require(self.cfg.scheme == Scheme::RandomForest, "forest_step")?;
        let step = self.next_step();
        let mut w: Vec<f64> = self
            .forest
            .in_degrees()
            .iter()
            .map(|&k| self.cfg.eta * k as f64 + self.cfg.delta)
            .collect();
        w.push(self.cfg.beta - self.cfg.delta);
        let pv = ProbVector::from_weights(&w)?;
        let new_root = w.len() - 1;

        let picks: Vec<usize> = (0..arrivals)
            .map(|_| pv.select(self.rng.random::<f64>()))
            .collect();
        let mut choices = Vec::with_capacity(arrivals);
        for &i in &picks {
            if i == new_root {
                let id = self.forest.add_root(step)?;
                choices.push(Choice {
                    new_id: id,
                    target: None,
                });
            } else {
                let id = self.forest.attach(VertexId(i), step)?;
                choices.push(Choice {
                    new_id: id,
                    target: Some(VertexId(i)),
                });
            }
        }
        let mut targets: Vec<Target> = (0..new_root).map(|v| Target::Vertex(VertexId(v))).collect();
        targets.push(Target::NewRoot);
        let weights = if arrivals > 0 { vec![pv] } else { Vec::new() };
        self.finish(step, arrivals, targets, weights, choices)
    }

    /// Chinese-restaurant seating. Table occupancy is the root plus everyone
    /// attached to it, fixed at the start of the step.
    fn crp_tables_step(&mut self, arrivals: usize) -> Result<StepRecord> {
        let step = self.next_step();
        let roots = self.forest.roots().to_vec();
        let occupancy: Vec<usize> = roots
            .iter()
            .map(|r| 1 + self.forest.in_degree(*r).expect("root exists"))
            .collect();
        let mut choices = Vec::with_capacity(arrivals);
        for _ in 0..arrivals {
            match crp_step(&occupancy, self.cfg.beta, &mut self.rng)? {
                CrpChoice::Table(i) => {
                    let id = self.forest.attach(roots[i], step)?;
                    choices.push(Choice {
                        new_id: id,
                        target: Some(roots[i]),
                    });
                }
                CrpChoice::NewTable => {
                    let id = self.forest.add_root(step)?;
                    choices.push(Choice {
                        new_id: id,
                        target: None,
                    });
                }
            }
        }
        let mut targets: Vec<Target> = roots.iter().map(|&r| Target::Vertex(r)).collect();
        targets.push(Target::NewRoot);
        let mut w: Vec<f64> = occupancy.iter().map(|&k| k as f64).collect();
        w.push(self.cfg.beta);
        let weights = if arrivals > 0 {
            vec![ProbVector::from_weights(&w)?]
        } else {
            Vec::new()
        };
        self.finish(step, arrivals, targets, weights, choices)
    }

    fn commit(&mut self, picks: &[VertexId], step: u64) -> Result<Vec<Choice>> {
        picks
            .iter()
            .map(|&target| {
                let new_id = self.forest.attach(target, step)?;
                Ok(Choice {
                    new_id,
                    target: Some(target),
                })
            })
            .collect()
    }
}

/// Runs `cfg.steps` steps, handing every record to `observe` as it is made.
///
/// A step without eligible targets stops the run with
/// [`Error::HaltedNoTargets`], carrying everything grown so far.
pub fn grow_with<F>(cfg: &GrowthConfig, mut observe: F) -> Result<GrowthRun>
where
    F: FnMut(&Forest, &StepRecord),
{
    let mut sim = Simulation::new(cfg.clone())?;
    let initial_vertices = sim.forest().len();
    let mut records = Vec::new();
    for _ in 0..cfg.steps {
        match sim.step() {
            Ok(record) => {
                observe(sim.forest(), &record);
                records.push(record);
            }
            Err(Error::NoEligibleTarget) => {
                let step = sim.forest().current_step() + 1;
                return Err(Error::HaltedNoTargets {
                    step,
                    partial: Box::new(GrowthRun {
                        forest: sim.into_forest(),
                        records,
                        initial_vertices,
                    }),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(GrowthRun {
        forest: sim.into_forest(),
        records,
        initial_vertices,
    })
}

pub fn grow(cfg: &GrowthConfig) -> Result<GrowthRun> {
    grow_with(cfg, |_, _| {})
}

/// Writes step records as JSON Lines.
pub fn write_records_jsonl<W: std::io::Write>(
    records: &[StepRecord],
    mut out: W,
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
