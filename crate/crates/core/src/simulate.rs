//! Synthetic data from the full generative model.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::ctmc::{sample_path, LatentPath};
use crate::error::{Error, Result};
use crate::events::{
    io, ActorId, ActorTable, Dataset, Dyad, EventStream, ObservationWindow, RawEncounter, Span,
};
use crate::intensity::{DyadCovariates, Intensity, ModelSpec, SwallowSpec};

/// Lewis–Shedler thinning of `λ` along a known latent path.
///
/// Each observed piece where the path and the structural form are constant
/// is simulated from a homogeneous process at the form's upper bound.
pub fn simulate_events<R: Rng + ?Sized>(
    intensity: &Intensity<'_>,
    cov: &DyadCovariates,
    path: &LatentPath,
    window: &ObservationWindow,
    rng: &mut R,
) -> Vec<f64> {
    let mut times = Vec::new();
    let mut segs = Vec::new();
    for (a, b, state) in path.pieces() {
        for span in window.clip(a, b).spans() {
            segs.clear();
            intensity.spec().segments(span.start, span.end, &mut segs);
            for seg in &segs {
                let form = intensity.form(seg.key, cov, state);
                let bound = form.upper_bound();
                if !(bound > 0.0) {
                    continue;
                }
                let gap = Exp::new(bound).expect("positive bound");
                let thin = form.has_harmonics();
                let mut t = seg.start;
                loop {
                    t += gap.sample(rng);
                    if t >= seg.end {
                        break;
                    }
                    if !thin || rng.gen::<f64>() * bound < form.eval(t) {
                        times.push(t);
                    }
                }
            }
        }
    }
    times
}

/// Independent stream for one dyad.
pub fn dyad_rng(seed: u64, dyad: Dyad) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((dyad.i.0 as u64) << 32) | dyad.j.0 as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTheta {
    pub model: ModelSpec,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub activity: BTreeMap<ActorId, ObservationWindow>,
    /// One path per modeled dyad, aligned with `dataset.streams`.
    pub paths: Vec<LatentPath>,
    pub truth: TruthTheta,
}

/// Draws paths and events for every pair of actors.
///
/// A dyad is observed on the intersection of its actors' activity windows.
pub fn generate_dataset(
    spec: &ModelSpec,
    theta: &[f64],
    actors: &ActorTable,
    activity: &BTreeMap<ActorId, ObservationWindow>,
    seed: u64,
) -> Result<SyntheticDataset> {
    spec.validate()?;
    let bound = spec
        .bind(theta)
        .map_err(|r| Error::config(format!("generating parameters: {}", r.0)))?;
    let ids: Vec<ActorId> = actors.actors.keys().copied().collect();
    let empty = ObservationWindow::empty();
    let mut streams = Vec::new();
    let mut paths = Vec::new();
    let mut unmodeled = Vec::new();
    for (a, &i) in ids.iter().enumerate() {
        for &j in &ids[a + 1..] {
            let dyad = Dyad { i, j };
            let window = activity
                .get(&i)
                .unwrap_or(&empty)
                .intersect(activity.get(&j).unwrap_or(&empty));
            let (Some(start), Some(end)) = (window.start(), window.end()) else {
                unmodeled.push(dyad);
                continue;
            };
            if window.measure() <= 0.0 {
                unmodeled.push(dyad);
                continue;
            }
            let cov = spec.covariates(actors, dyad)?;
            let ctmc = bound
                .sparsity
                .sparsity_for(&cov)
                .map_err(|r| Error::config(format!("generating parameters: {}", r.0)))?;
            let mut rng = dyad_rng(seed, dyad);
            let path = sample_path(&ctmc, start, end, &mut rng);
            let times = simulate_events(&bound.intensity, &cov, &path, &window, &mut rng);
            streams.push(EventStream {
                dyad,
                times,
                window,
            });
            paths.push(path);
        }
    }
    Ok(SyntheticDataset {
        dataset: Dataset {
            actors: actors.clone(),
            streams,
            unmodeled,
        },
        activity: activity.clone(),
        paths,
        truth: TruthTheta {
            model: spec.clone(),
            names: spec.parameter_names(),
            values: theta.to_vec(),
            seed,
        },
    })
}

impl SyntheticDataset {
    /// Events as zero-length encounters, readable back with a zero merge gap.
    pub fn encounters(&self) -> Vec<RawEncounter> {
        self.dataset
            .streams
            .iter()
            .flat_map(|s| {
                s.times.iter().map(move |&t| RawEncounter {
                    source: s.dyad.i,
                    target: s.dyad.j,
                    start: t,
                    end: t,
                    same_floor_prob: None,
                })
            })
            .collect()
    }

    pub fn write_truth_paths(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "t_start", "t_end", "state"])?;
        for (s, p) in self.dataset.streams.iter().zip(&self.paths) {
            for (a, b, state) in p.pieces() {
                out.write_record([
                    s.dyad.i.to_string(),
                    s.dyad.j.to_string(),
                    a.to_string(),
                    b.to_string(),
                    u8::from(state).to_string(),
                ])?;
            }
        }
        out.flush().map_err(|e| Error::io("truth_paths.csv", e))?;
        Ok(())
    }

    /// Writes `encounters.csv`, `activity.csv`, `attributes.csv`,
    /// `truth_paths.csv` and `truth_theta.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            Ok(BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?))
        };
        io::write_encounters(create("encounters.csv")?, &self.encounters())?;
        io::write_activity(create("activity.csv")?, &self.activity)?;
        io::write_attributes(create("attributes.csv")?, &self.dataset.actors)?;
        self.write_truth_paths(create("truth_paths.csv")?)?;
        let mut w = create("truth_theta.json")?;
        serde_json::to_writer_pretty(&mut w, &self.truth)?;
        writeln!(w).map_err(|e| Error::io(dir.join("truth_theta.json"), e))?;
        w.flush().map_err(|e| Error::io(dir.join("truth_theta.json"), e))?;
        Ok(())
    }
}

/// Desk-scale colony analog: 17 birds (8 F, 9 M) observed in eight
/// three-hour sessions, evening then alternating morning/evening.
#[derive(Debug, Clone, PartialEq)]
pub struct SwallowBenchmark {
    pub spec: ModelSpec,
    pub actors: ActorTable,
    pub activity: BTreeMap<ActorId, ObservationWindow>,
    pub theta: Vec<f64>,
}

pub fn swallow_sessions() -> Vec<Span> {
    let mut out = vec![Span::new(17.0, 20.0)];
    for day in 1..=4 {
        let base = 24.0 * day as f64;
        out.push(Span::new(base + 6.0, base + 9.0));
        if day < 4 {
            out.push(Span::new(base + 17.0, base + 20.0));
        }
    }
    out
}

/// Session rates are drawn uniformly in `[0.4, 0.6]` from `seed`; the other
/// truths are `c_FF = 0.5`, `c_MF = c_MM = 2`, `s = 0.1`, `q = 0.05`.
pub fn swallow_benchmark(seed: u64) -> SwallowBenchmark {
    let sessions = swallow_sessions();
    let spec = ModelSpec::Swallow(SwallowSpec {
        sessions: sessions.clone(),
        sex_attribute: "sex".into(),
    });
    let mut actors = ActorTable::default();
    let mut activity = BTreeMap::new();
    let window = ObservationWindow::new(sessions.clone()).expect("sessions are disjoint");
    for id in 1..=17u32 {
        let sex = if id <= 8 { "F" } else { "M" };
        actors.insert_attribute(ActorId(id), "sex", sex);
        activity.insert(ActorId(id), window.clone());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut theta: Vec<f64> = (0..sessions.len()).map(|_| rng.gen_range(0.4..0.6)).collect();
    theta.extend([0.5, 2.0, 2.0, 0.1, 0.05]);
    SwallowBenchmark {
        spec,
        actors,
        activity,
        theta,
    }
}
