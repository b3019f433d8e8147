//! Deterministic synthetic scenario generation: vehicles traverse a
//! linear chain of cameras along one route, optionally stopping inside
//! a mid-frame zone where their single-camera track fragments, the way
//! real tracks break at red lights.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mtmct_core::clm::{CameraLink, ZonePair};
use mtmct_core::geometry::{BoundingBox, Rect};
use mtmct_core::metrics::EvalBox;
use mtmct_core::track::{CameraId, FrameObservation, Tracklet};
use mtmct_core::zones::{Zone, ZoneKind};
use mtmct_core::EmbeddingVector;

use crate::formats::clm::{write_clm, ClmFile};
use crate::formats::embeddings::{write_embeddings, EmbeddingFile, EmbeddingRecord};
use crate::formats::results::{write_labels, write_results};
use crate::formats::tracks::write_tracks;
use crate::formats::zones::write_zones;
use crate::formats::FormatError;

pub const FRAME_WIDTH: f64 = 1920.0;
pub const FRAME_HEIGHT: f64 = 1080.0;
const BOX_W: f64 = 80.0;
const BOX_H: f64 = 60.0;
/// Horizontal speed, pixels per frame.
const SPEED: f64 = 20.0;
/// Center x runs 40..=1880 in SPEED steps: 93 observed frames.
const STEPS: u32 = 92;
/// Step index of the stop point (center x = 960).
const STOP_STEP: u32 = 46;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Cameras form one chain; every vehicle visits all of them.
    pub cameras: u32,
    pub vehicles: u32,
    pub embedding_dim: usize,
    /// Per-frame Gaussian noise added to each identity's base feature.
    pub sigma: f64,
    /// Probability that a vehicle stops (and its track fragments) in a
    /// camera's traffic-aware zone.
    pub fragmentation: f64,
    pub frame_rate: u32,
    /// Spawn spacing between consecutive vehicles, frames.
    pub headway: u32,
    /// Transit-frame range between consecutive cameras.
    pub hop_min: u32,
    pub hop_max: u32,
    /// Frames a fragmenting vehicle stays occluded at the stop point.
    pub dwell: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            cameras: 3,
            vehicles: 20,
            embedding_dim: 64,
            sigma: 0.01,
            fragmentation: 0.0,
            frame_rate: 10,
            headway: 40,
            hop_min: 50,
            hop_max: 70,
            dwell: 25,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if self.cameras == 0 || self.vehicles == 0 {
            return fail("need at least one camera and one vehicle");
        }
        if self.embedding_dim == 0 {
            return fail("embedding dimension must be positive");
        }
        if !(self.sigma >= 0.0) {
            return fail("sigma must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.fragmentation) {
            return fail("fragmentation must lie in [0,1]");
        }
        if self.hop_min > self.hop_max {
            return fail("hop_min must not exceed hop_max");
        }
        if self.dwell == 0 {
            return fail("dwell must be positive");
        }
        if self.dwell >= self.headway {
            // a stopped vehicle must not be overtaken by its follower
            return fail("dwell must stay below the spawn headway");
        }
        Ok(())
    }
}

/// Everything a scenario produces: observed tracklets with embeddings,
/// identity labels, per-frame ground truth, and the true zone/link
/// geometry the generator used.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tracklets: Vec<Tracklet>,
    /// (camera, local_id) -> vehicle identity.
    pub labels: BTreeMap<(u32, u32), u32>,
    pub gt: Vec<EvalBox>,
    pub zones: Vec<Zone>,
    pub links: Vec<CameraLink>,
    pub embedding_dim: usize,
    /// Count of stop-light fragmentation events.
    pub fragmentation_events: u32,
}

/// True in-frame zones of one camera: entry strip, exit strip, stop
/// strip around the stop point.
fn true_zones(camera: u32, vehicles: u32, stops: u32) -> Vec<Zone> {
    let mid = |lo: f64, hi: f64| Rect::new(lo, 400.0, hi, 680.0);
    vec![
        Zone {
            id: 1,
            camera: CameraId(camera),
            rect: mid(0.0, 160.0),
            n_entry: vehicles,
            n_exit: 0,
            kind: ZoneKind::Entry,
        },
        Zone {
            id: 2,
            camera: CameraId(camera),
            rect: mid(1760.0, FRAME_WIDTH),
            n_entry: 0,
            n_exit: vehicles,
            kind: ZoneKind::Exit,
        },
        Zone {
            id: 3,
            camera: CameraId(camera),
            rect: mid(880.0, 1040.0),
            n_entry: stops,
            n_exit: stops,
            kind: ZoneKind::TrafficAware,
        },
    ]
}

fn box_at(step: u32, y_center: f64) -> BoundingBox {
    let cx = 40.0 + SPEED * step as f64;
    BoundingBox::new(cx - BOX_W / 2.0, y_center - BOX_H / 2.0, BOX_W, BOX_H)
}

/// Standard normal via Box-Muller.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn base_feature(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    raw.into_iter().map(|v| v / norm.max(1e-12)).collect()
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    cfg.validate()?;

    let mut tracklets = Vec::new();
    let mut labels = BTreeMap::new();
    let mut gt = Vec::new();
    let mut next_local: Vec<u32> = vec![1; cfg.cameras as usize];
    let mut stops_per_camera: Vec<u32> = vec![0; cfg.cameras as usize];
    // per (source camera index) transition-time samples
    let mut dt_samples: Vec<Vec<i64>> = vec![Vec::new(); cfg.cameras.saturating_sub(1) as usize];
    let mut fragmentation_events = 0u32;

    for v in 0..cfg.vehicles {
        let vehicle_id = v + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed ^ (v as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let y_center = 540.0 + rng.gen_range(-30.0..=30.0);
        let base = base_feature(&mut rng, cfg.embedding_dim);

        let mut arrival = 100 + v * cfg.headway;
        for c in 0..cfg.cameras {
            let camera = c + 1;
            let stops = rng.gen_range(0.0..1.0) < cfg.fragmentation;
            if stops {
                stops_per_camera[c as usize] += 1;
                fragmentation_events += 1;
            }

            // (step, frame) pairs per fragment
            let mut fragments: Vec<Vec<(u32, u32)>> = Vec::new();
            if stops {
                let a: Vec<(u32, u32)> = (0..=STOP_STEP).map(|k| (k, arrival + k)).collect();
                let b: Vec<(u32, u32)> = (STOP_STEP..=STEPS)
                    .map(|k| (k, arrival + k + cfg.dwell))
                    .collect();
                fragments.push(a);
                fragments.push(b);
            } else {
                fragments.push((0..=STEPS).map(|k| (k, arrival + k)).collect());
            }

            for frag in &fragments {
                let mut obs = Vec::with_capacity(frag.len());
                for &(step, frame) in frag {
                    let box_ = box_at(step, y_center);
                    let values: Vec<f64> = base
                        .iter()
                        .map(|&b| b + cfg.sigma * normal(&mut rng))
                        .collect();
                    obs.push(FrameObservation {
                        frame,
                        box_,
                        embedding: Some(
                            EmbeddingVector::new(values).expect("finite embedding values"),
                        ),
                    });
                    gt.push(EvalBox {
                        camera: CameraId(camera),
                        frame,
                        id: vehicle_id as u64,
                        box_,
                    });
                }
                let local_id = next_local[c as usize];
                next_local[c as usize] += 1;
                labels.insert((camera, local_id), vehicle_id);
                tracklets.push(
                    Tracklet::new(CameraId(camera), local_id, obs).expect("generated tracklet"),
                );
            }

            let exit_frame = arrival + STEPS + if stops { cfg.dwell } else { 0 };
            if c + 1 < cfg.cameras {
                let hop = rng.gen_range(cfg.hop_min..=cfg.hop_max);
                let next_arrival = exit_frame + hop;
                // first frame touching the exit strip (box x_max >= 1760,
                // center >= 1720, step >= 84) vs the destination's first
                // frame, which already touches its entry strip
                let exit_touch = arrival + 84 + if stops { cfg.dwell } else { 0 };
                dt_samples[c as usize].push(exit_touch as i64 - next_arrival as i64);
                arrival = next_arrival;
            }
        }
    }

    let mut zones = Vec::new();
    for c in 0..cfg.cameras {
        zones.extend(true_zones(c + 1, cfg.vehicles, stops_per_camera[c as usize]));
    }

    let mut links = Vec::new();
    for c in 0..cfg.cameras.saturating_sub(1) {
        let samples = &dt_samples[c as usize];
        let pair = |camera: u32| ZonePair {
            camera: CameraId(camera),
            entry_zone: 1,
            exit_zone: 2,
        };
        links.push(CameraLink {
            source_camera: CameraId(c + 1),
            dest_camera: CameraId(c + 2),
            source_pairs: vec![pair(c + 1)],
            dest_pairs: vec![pair(c + 2)],
            transition_zone_src: 2,
            transition_zone_dst: 1,
            window: (
                samples.iter().copied().min().unwrap_or(0),
                samples.iter().copied().max().unwrap_or(0),
            ),
            sample_count: samples.len() as u32,
        });
    }

    tracklets.sort_by_key(|t| (t.camera, t.first_frame(), t.local_id));
    Ok(Scenario {
        tracklets,
        labels,
        gt,
        zones,
        links,
        embedding_dim: cfg.embedding_dim,
        fragmentation_events,
    })
}

/// Pull the per-frame embeddings out of the tracklets into the binary
/// file representation.
pub fn embedding_file(scenario: &Scenario) -> EmbeddingFile {
    let mut file = EmbeddingFile::new(scenario.embedding_dim as u32);
    for t in &scenario.tracklets {
        let mut frames = Vec::new();
        let mut values = Vec::new();
        for o in t.observations() {
            if let Some(e) = &o.embedding {
                frames.push(o.frame);
                values.extend(e.values().iter().map(|&v| v as f32));
            }
        }
        file.records.push(EmbeddingRecord {
            camera: t.camera.0,
            local_id: t.local_id,
            frames,
            values,
        });
    }
    file
}

/// Write the scenario as a directory of pipeline inputs plus ground
/// truth: tracks.txt, embeddings.bin, gt.txt, labels.txt,
/// zones_true.txt, clm_true.txt.
pub fn write_scenario(dir: &Path, scenario: &Scenario) -> Result<(), ScenarioError> {
    std::fs::create_dir_all(dir).map_err(FormatError::Io)?;
    write_tracks(&dir.join("tracks.txt"), &scenario.tracklets)?;
    write_embeddings(&dir.join("embeddings.bin"), &embedding_file(scenario))?;
    write_results(&dir.join("gt.txt"), &scenario.gt)?;
    write_labels(&dir.join("labels.txt"), &scenario.labels)?;
    write_zones(&dir.join("zones_true.txt"), &scenario.zones)?;
    let pairs = scenario
        .links
        .iter()
        .flat_map(|l| l.source_pairs.iter().chain(&l.dest_pairs))
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    write_clm(
        &dir.join("clm_true.txt"),
        &ClmFile {
            pairs,
            links: scenario.links.clone(),
        },
    )?;
    Ok(())
}
