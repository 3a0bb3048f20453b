//! Kinematic walker producing pose tracks with controllable appearance overlap.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::posegraph::format::{FrameRecord, TrackRecord};
use crate::posegraph::NUM_KEYPOINTS;

const JITTER_SIGMA: f64 = 0.01;
const APPEARANCE_SIGMA: f64 = 0.1;
const HEAD: f64 = 0.12;
const PIXELS_PER_UNIT: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub ids: usize,
    pub tracks_per_id: usize,
    pub frames: usize,
    pub occlusion: f64,
    pub ambiguity: f64,
    pub d: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            ids: 20,
            tracks_per_id: 8,
            frames: 10,
            occlusion: 0.0,
            ambiguity: 0.0,
            d: 64,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.ids < 2 {
            return Err(Error::argument(format!("need at least 2 identities, got {}", self.ids)));
        }
        if self.tracks_per_id == 0 || self.frames == 0 || self.d == 0 {
            return Err(Error::argument("tracks, frames and d must be positive"));
        }
        if !(0.0..1.0).contains(&self.occlusion) {
            return Err(Error::argument(format!("occlusion rate {} is outside [0, 1)", self.occlusion)));
        }
        if !(0.0..=1.0).contains(&self.ambiguity) {
            return Err(Error::argument(format!("appearance ambiguity {} is outside [0, 1]", self.ambiguity)));
        }
        Ok(())
    }
}

/// Body proportions, gait and appearance centroid of one synthetic person.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticIdentity {
    pub torso: f64,
    pub upper_arm: f64,
    pub lower_arm: f64,
    pub upper_leg: f64,
    pub lower_leg: f64,
    /// Radians per frame.
    pub frequency: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub centroid: Vec<f64>,
}

impl SyntheticIdentity {
    fn sample<R: Rng>(rng: &mut R, shared: &[f64], ambiguity: f64) -> Self {
        let mut ratio = |nominal: f64| nominal * rng.random_range(0.8..1.2);
        let (torso, upper_arm, lower_arm) = (ratio(0.30), ratio(0.17), ratio(0.15));
        let (upper_leg, lower_leg) = (ratio(0.24), ratio(0.24));
        let frequency = rng.random_range(0.4..0.9);
        let amplitude = rng.random_range(0.2..0.6);
        let phase = rng.random_range(0.0..2.0 * PI);
        let centroid = shared
            .iter()
            .map(|&s| {
                let own: f64 = StandardNormal.sample(rng);
                ambiguity * s + (1.0 - ambiguity) * own
            })
            .collect();
        SyntheticIdentity {
            torso,
            upper_arm,
            lower_arm,
            upper_leg,
            lower_leg,
            frequency,
            amplitude,
            phase,
            centroid,
        }
    }

    fn height(&self) -> f64 {
        HEAD + self.torso + self.upper_leg + self.lower_leg
    }

    /// World-space keypoints (y up, pelvis at the origin) at gait angle `theta`.
    fn pose(&self, theta: f64, amplitude: f64) -> [[f64; 2]; NUM_KEYPOINTS] {
        let limb = |base: [f64; 2], len: f64, angle: f64| [base[0] + len * angle.sin(), base[1] - len * angle.cos()];
        let swing = amplitude * theta.sin();
        let knee_flex = 0.5 * amplitude * (1.0 + (theta - PI / 2.0).sin());
        let other_knee_flex = 0.5 * amplitude * (1.0 + (theta + PI / 2.0).sin());
        let elbow_flex = 0.2 + 0.3 * amplitude;
        let bob = 0.02 * (2.0 * theta).cos();

        let (hip_w, shoulder_w) = (0.25 * self.torso, 0.35 * self.torso);
        let neck = [0.0, self.torso + bob];
        let head = [0.0, neck[1] + HEAD];
        let r_sh = [-shoulder_w, neck[1] - 0.02];
        let l_sh = [shoulder_w, neck[1] - 0.02];
        let r_hip = [-hip_w, bob];
        let l_hip = [hip_w, bob];

        let r_elbow = limb(r_sh, self.upper_arm, -0.6 * swing);
        let r_wrist = limb(r_elbow, self.lower_arm, -0.6 * swing + elbow_flex);
        let l_elbow = limb(l_sh, self.upper_arm, 0.6 * swing);
        let l_wrist = limb(l_elbow, self.lower_arm, 0.6 * swing + elbow_flex);
        let r_knee = limb(r_hip, self.upper_leg, swing);
        let r_ankle = limb(r_knee, self.lower_leg, swing - knee_flex);
        let l_knee = limb(l_hip, self.upper_leg, -swing);
        let l_ankle = limb(l_knee, self.lower_leg, -swing - other_knee_flex);

        [
            head, neck, r_sh, r_elbow, r_wrist, l_sh, l_elbow, l_wrist, r_hip, r_knee, r_ankle, l_hip, l_knee, l_ankle,
        ]
    }
}

/// Generated identities and their tracks, ordered identity-major.
#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub identities: Vec<SyntheticIdentity>,
    pub tracks: Vec<TrackRecord>,
}

/// Tracks use camera `track_index % 2`; appearance vectors are embedded per frame.
pub fn synth_tracks(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shared: Vec<f64> = (0..config.d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let identities: Vec<SyntheticIdentity> = (0..config.ids)
        .map(|_| SyntheticIdentity::sample(&mut rng, &shared, config.ambiguity))
        .collect();
    let jitter = Normal::new(0.0, JITTER_SIGMA).expect("valid sigma");
    let noise = Normal::new(0.0, APPEARANCE_SIGMA).expect("valid sigma");

    let mut tracks = Vec::with_capacity(config.ids * config.tracks_per_id);
    for (id, person) in identities.iter().enumerate() {
        let height = person.height();
        let (box_h, box_w) = (1.25 * height, height);
        // halfway between the top of the head and the soles at rest
        let cy = 0.5 * (person.torso + HEAD - person.upper_leg - person.lower_leg);
        for k in 0..config.tracks_per_id {
            let start = person.phase + rng.random_range(-0.3..0.3);
            let freq = person.frequency * rng.random_range(0.97..1.03);
            let amplitude = person.amplitude * rng.random_range(0.95..1.05);
            let mut frames = Vec::with_capacity(config.frames);
            for t in 0..config.frames {
                let pose = person.pose(start + freq * t as f64, amplitude);
                let keypoints = pose
                    .iter()
                    .map(|p| {
                        let x = p[0] + jitter.sample(&mut rng);
                        let y = p[1] + jitter.sample(&mut rng);
                        let hidden = rng.random_bool(config.occlusion);
                        (!hidden).then(|| to_pixels(x, y))
                    })
                    .collect();
                let top_left = to_pixels(-box_w / 2.0, cy + box_h / 2.0);
                let appearance = person.centroid.iter().map(|c| c + noise.sample(&mut rng)).collect();
                frames.push(FrameRecord {
                    keypoints,
                    bbox: [
                        top_left[0],
                        top_left[1],
                        box_w * PIXELS_PER_UNIT,
                        box_h * PIXELS_PER_UNIT,
                    ],
                    appearance: Some(appearance),
                });
            }
            tracks.push(TrackRecord {
                track_id: format!("id{id:03}_t{k:02}"),
                identity: id as u32,
                camera: (k % 2) as u32,
                frames,
            });
        }
    }
    Ok(SynthOutput { identities, tracks })
}

fn to_pixels(x: f64, y: f64) -> [f64; 2] {
    [200.0 + PIXELS_PER_UNIT * x, 300.0 - PIXELS_PER_UNIT * y]
}
