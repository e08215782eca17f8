//! Pipeline orchestration.
//!
//! Standard-rate reconstruction: for every interior index `t` of an
//! alternating sequence, the opposite exposure is interpolated at `τ = 0.5`
//! from frames `t−1` and `t+1` (which share that exposure) and merged with the
//! real frame at `t`. The first and last frames have no same-exposure pair on
//! both sides and are dropped.
//!
//! Frame-rate upscaling generalizes this: both exposure streams are first
//! completed at every interior integer timestamp, then each stream is
//! midpoint-interpolated `k` times independently, and finally every timestamp
//! is merged. Timestamps are kept as exact dyadic rationals.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::interp::{interpolate, InterpolationBackend};
use crate::merge::merge_hdr;
use crate::radiometry::{Crf, ExposureTag, LdrFrame, Provenance, RadianceFrame};
use crate::{Error, Result};

/// Time in units of input frame index, `numerator / denominator` with a
/// power-of-two denominator, always stored in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Timestamp {
    numerator: i64,
    denominator: u64,
}

impl Timestamp {
    pub fn new(numerator: i64, denominator: u64) -> Result<Self> {
        if denominator == 0 || !denominator.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "timestamp denominator {denominator} is not a power of two"
            )));
        }
        let mut num = numerator;
        let mut den = denominator;
        while den > 1 && num % 2 == 0 {
            num /= 2;
            den /= 2;
        }
        Ok(Self {
            numerator: num,
            denominator: den,
        })
    }

    pub fn integer(index: i64) -> Self {
        Self {
            numerator: index,
            denominator: 1,
        }
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn is_integer(&self) -> bool {
        self.denominator == 1
    }

    /// Exact midpoint of two timestamps.
    pub fn midpoint(a: Timestamp, b: Timestamp) -> Timestamp {
        let den = a.denominator.max(b.denominator);
        let na = a.numerator * (den / a.denominator) as i64;
        let nb = b.numerator * (den / b.denominator) as i64;
        Timestamp::new(na + nb, den * 2).expect("power-of-two denominator")
    }

    /// Exact for every timestamp whose numerator fits the f64 mantissa.
    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = i128::from(self.numerator) * i128::from(other.denominator);
        let rhs = i128::from(other.numerator) * i128::from(self.denominator);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    /// Accepts `"num/den"` or a bare integer.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("malformed timestamp {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| bad())?;
                let d: u64 = d.trim().parse().map_err(|_| bad())?;
                Timestamp::new(n, d)
            }
            None => Ok(Timestamp::integer(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

/// Captured frames with strictly alternating exposure tags.
#[derive(Clone, Debug)]
pub struct AlternatingSequence {
    frames: Vec<LdrFrame>,
    /// Nominal seconds between consecutive captures.
    pub frame_interval: f64,
}

impl AlternatingSequence {
    pub fn new(frames: Vec<LdrFrame>, frame_interval: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidInput("empty frame sequence".into()))?;
        let dims = first.dims();
        let start = first.tag();
        let mut exposure = [None::<f64>; 2];
        for (i, f) in frames.iter().enumerate() {
            if f.dims() != dims {
                return Err(Error::shape(dims, f.dims()));
            }
            if f.tag() != ExposureTag::at_index(start, i) {
                return Err(Error::ExposureMismatch(format!("frame {i} breaks the tag alternation")));
            }
            let slot = &mut exposure[usize::from(f.tag() == ExposureTag::Low)];
            match slot {
                Some(dt) if *dt != f.exposure_time() => {
                    return Err(Error::ExposureMismatch(format!(
                        "frame {i}: {} exposure changes from {dt} s to {} s",
                        f.tag(),
                        f.exposure_time()
                    )))
                }
                _ => *slot = Some(f.exposure_time()),
            }
        }
        Ok(Self { frames, frame_interval })
    }

    pub fn frames(&self) -> &[LdrFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn start_tag(&self) -> ExposureTag {
        self.frames[0].tag()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Every `factor`-th frame starting at `offset`. Only odd factors keep
    /// the alternation intact.
    pub fn subsample(&self, offset: usize, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParameter("subsampling factor 0".into()));
        }
        let frames = self.frames.iter().skip(offset).step_by(factor).cloned().collect();
        Self::new(frames, self.frame_interval * factor as f64)
    }
}

/// The two exposure streams over a shared timeline.
#[derive(Clone, Debug)]
pub struct ExposureStreams {
    pub timestamps: Vec<Timestamp>,
    pub high: Vec<LdrFrame>,
    pub low: Vec<LdrFrame>,
}

impl ExposureStreams {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.high.len() != self.timestamps.len() || self.low.len() != self.timestamps.len() {
            return Err(Error::InvalidInput("exposure streams cover different timestamps".into()));
        }
        if self.high.iter().any(|f| f.tag() != ExposureTag::High) || self.low.iter().any(|f| f.tag() != ExposureTag::Low)
        {
            return Err(Error::ExposureMismatch("stream holds a frame of the wrong exposure".into()));
        }
        if self.timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("stream timestamps are not increasing".into()));
        }
        Ok(())
    }
}

/// One reconstructed radiance frame.
#[derive(Clone, Debug)]
pub struct HdrFrame {
    pub timestamp: Timestamp,
    /// `Real` when one of the merged inputs was captured, otherwise the
    /// deepest synthesis level among the inputs.
    pub provenance: Provenance,
    pub radiance: RadianceFrame,
}

fn merged_provenance(a: Provenance, b: Provenance) -> Provenance {
    match (a, b) {
        (Provenance::Real, _) | (_, Provenance::Real) => Provenance::Real,
        (Provenance::Synthesized { level: la }, Provenance::Synthesized { level: lb }) => {
            Provenance::Synthesized { level: la.max(lb) }
        }
    }
}

/// Fills in the missing exposure at every interior integer timestamp.
pub fn complete_exposure_streams(seq: &AlternatingSequence, backend: &dyn InterpolationBackend) -> Result<ExposureStreams> {
    let n = seq.len();
    if n < 3 {
        return Err(Error::TooShort { len: n, min: 3 });
    }
    let frames = seq.frames();
    let synthesized: Vec<LdrFrame> = (1..n - 1)
        .into_par_iter()
        .map(|t| {
            interpolate(&frames[t - 1], &frames[t + 1], 0.5, backend)
                .map(|f| f.with_provenance(Provenance::Synthesized { level: 0 }))
        })
        .collect::<Result<_>>()?;

    let mut streams = ExposureStreams {
        timestamps: Vec::with_capacity(n - 2),
        high: Vec::with_capacity(n - 2),
        low: Vec::with_capacity(n - 2),
    };
    for (t, synth) in (1..n - 1).zip(synthesized) {
        let real = frames[t].clone().with_provenance(Provenance::Real);
        let (high, low) = match real.tag() {
            ExposureTag::High => (real, synth),
            ExposureTag::Low => (synth, real),
        };
        streams.timestamps.push(Timestamp::integer(t as i64));
        streams.high.push(high);
        streams.low.push(low);
    }
    Ok(streams)
}

/// Inserts the midpoint of every adjacent pair, `levels` times.
fn densify(stream: &[LdrFrame], timestamps: &[Timestamp], levels: u32, backend: &dyn InterpolationBackend) -> Result<(Vec<Timestamp>, Vec<LdrFrame>)> {
    let mut frames = stream.to_vec();
    let mut times = timestamps.to_vec();
    for level in 1..=levels {
        for f in &frames {
            if let Provenance::Synthesized { level: l } = f.provenance() {
                assert!(l < level, "level {level} would consume a level-{l} frame");
            }
        }
        let mids: Vec<LdrFrame> = frames
            .par_windows(2)
            .map(|pair| {
                interpolate(&pair[0], &pair[1], 0.5, backend)
                    .map(|f| f.with_provenance(Provenance::Synthesized { level }))
            })
            .collect::<Result<_>>()?;
        let mut next_frames = Vec::with_capacity(frames.len() * 2 - 1);
        let mut next_times = Vec::with_capacity(frames.len() * 2 - 1);
        for (i, mid) in mids.into_iter().enumerate() {
            next_frames.push(frames[i].clone());
            next_times.push(times[i]);
            next_frames.push(mid);
            next_times.push(Timestamp::midpoint(times[i], times[i + 1]));
        }
        next_frames.push(frames.last().unwrap().clone());
        next_times.push(*times.last().unwrap());
        frames = next_frames;
        times = next_times;
    }
    Ok((times, frames))
}

/// Raises the frame rate of completed streams by `2^k` and merges every
/// timestamp. Output length is `(m − 1)·2^k + 1` for streams of length `m`.
pub fn upscale_fps(streams: &ExposureStreams, k: u32, backend: &dyn InterpolationBackend, crf: Crf) -> Result<Vec<HdrFrame>> {
    if streams.is_empty() {
        return Err(Error::InvalidInput("no frames to upscale".into()));
    }
    if k > 16 {
        return Err(Error::InvalidParameter(format!("upscale exponent {k} is unreasonably large")));
    }
    streams.check()?;

    let (times, high) = densify(&streams.high, &streams.timestamps, k, backend)?;
    let (times_low, low) = densify(&streams.low, &streams.timestamps, k, backend)?;
    debug_assert_eq!(times, times_low);

    let den = 1u64 << k;
    times
        .par_iter()
        .zip(high.par_iter().zip(low.par_iter()))
        .map(|(&timestamp, (h, l))| {
            debug_assert!(den % timestamp.denominator() == 0);
            Ok(HdrFrame {
                timestamp,
                provenance: merged_provenance(h.provenance(), l.provenance()),
                radiance: merge_hdr(h, l, crf)?,
            })
        })
        .collect()
}

/// One HDR frame per interior input frame, at the input frame rate.
pub fn reconstruct_standard(seq: &AlternatingSequence, backend: &dyn InterpolationBackend, crf: Crf) -> Result<Vec<HdrFrame>> {
    let streams = complete_exposure_streams(seq, backend)?;
    upscale_fps(&streams, 0, backend, crf)
}
