use rand::Rng;

use super::config::{DataDropConfig, ParallelConfig, ReplayConfig, SgdConfig};
use super::run::{validate_checkpoints, validate_init, Read, Recorder, RunOptions, RunOutput, RunningMean};
use super::stream::SampleStream;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::regression::{Observation, Problem, Trajectory};
use crate::rng::RunStreams;

/// `w - alpha x (<x, w> - y)`
pub fn sgd_step(w: &[f64], obs: &Observation, alpha: f64) -> Vec<f64> {
    let mut next = w.to_vec();
    sgd_step_in_place(&mut next, &obs.x, obs.y, alpha);
    next
}

#[inline]
pub fn sgd_step_in_place(w: &mut [f64], x: &[f64], y: f64, alpha: f64) {
    let residual = dot(x, w) - y;
    axpy(-alpha * residual, x, w);
}

fn start<'p>(
    problem: &'p Problem,
    horizon: usize,
    init: &[f64],
    opts: &RunOptions,
    seed: u64,
) -> Result<(SampleStream<'p>, RunStreams)> {
    validate_init(problem, init)?;
    validate_checkpoints(&opts.checkpoints, horizon)?;
    let streams = RunStreams::new(seed);
    let stream = SampleStream::new(problem, streams.chain.clone(), streams.noise.clone(), opts.noise)?;
    Ok((stream, streams))
}

/// Tail-averaged constant-step SGD over `horizon` stationary samples.
///
/// Performs `w_{t+1} = w_t - alpha X_t (<X_t, w_t> - Y_t)` for `t = 1..=T` and
/// returns the mean of `w_s` over `s = floor(T (1 - f)) + 1 ..= T`.
pub fn run_sgd(
    problem: &Problem,
    horizon: usize,
    config: &SgdConfig,
    init: &[f64],
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    config.validate()?;
    if horizon < 2 {
        return Err(Error::invalid("SGD needs a horizon of at least 2"));
    }
    let (mut stream, _) = start(problem, horizon, init, opts, seed)?;
    let mut w = init.to_vec();
    let mut track = Trajectory::default();
    let mut reads = Vec::new();
    let mut recorder = Recorder::new(problem, &opts.checkpoints);
    let mut tail = RunningMean::new(w.len());
    let tail_start = config.tail_start(horizon);
    let alpha = config.step_size;
    for t in 1..=horizon {
        if opts.record_iterates {
            track.iterates.push(w.clone());
        }
        if t >= tail_start {
            tail.push(&w);
        }
        recorder.record_until(t - 1, &w);
        let s = stream.next_sample();
        if opts.trace_reads {
            reads.push(Read { track: 0, index: s.index });
        }
        sgd_step_in_place(&mut w, s.x, s.y, alpha);
    }
    if opts.record_iterates {
        track.iterates.push(w.clone());
    }
    recorder.record_until(horizon, &w);
    Ok(RunOutput {
        estimate: tail.into_mean(),
        final_iterate: w,
        trajectories: if opts.record_iterates { vec![track] } else { Vec::new() },
        checkpoints: recorder.finish(),
        consumed: stream.position(),
        discarded: 0,
        reads,
        buffer_iterates: Vec::new(),
    })
}

/// SGD with data drop: of every `K` consecutive samples only the last is
/// used. With `n = floor(T / K)` updates the estimate averages the post-update
/// iterates `w_s` for `s = floor(n (1 - f)) + 2 ..= n + 1`.
pub fn run_sgd_dd(
    problem: &Problem,
    horizon: usize,
    config: &DataDropConfig,
    init: &[f64],
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    config.base.validate()?;
    let k = config.resolve_interval(problem, horizon)?;
    if k > horizon {
        return Err(Error::invalid(format!(
            "drop interval K = {k} exceeds the horizon {horizon}"
        )));
    }
    let (mut stream, _) = start(problem, horizon, init, opts, seed)?;
    let updates = horizon / k;
    let tail_start = config.base.tail_start(updates) + 1;
    let alpha = config.base.step_size;
    let mut w = init.to_vec();
    let mut track = Trajectory::default();
    let mut reads = Vec::new();
    let mut recorder = Recorder::new(problem, &opts.checkpoints);
    let mut tail = RunningMean::new(w.len());
    if opts.record_iterates {
        track.iterates.push(w.clone());
    }
    for step in 1..=updates {
        stream.skip(k - 1);
        recorder.record_until(step * k - 1, &w);
        let s = stream.next_sample();
        if opts.trace_reads {
            reads.push(Read { track: 0, index: s.index });
        }
        sgd_step_in_place(&mut w, s.x, s.y, alpha);
        if opts.record_iterates {
            track.iterates.push(w.clone());
        }
        if step + 1 >= tail_start {
            tail.push(&w);
        }
    }
    recorder.record_until(horizon, &w);
    Ok(RunOutput {
        estimate: tail.into_mean(),
        final_iterate: w,
        trajectories: if opts.record_iterates { vec![track] } else { Vec::new() },
        checkpoints: recorder.finish(),
        consumed: stream.position(),
        discarded: horizon - updates * k,
        reads,
        buffer_iterates: Vec::new(),
    })
}

/// `K` SGD instances on interleaved samples: instance `i` (1-based) makes its
/// `t`-th update on position `(t - 1) K + i`. The horizon is truncated to a
/// multiple of `2K`; with `n = T / K` updates per instance the estimate is the
/// mean of `w_t^(i)` over all instances and `t = floor(n (1 - f)) + 1 ..= n`.
pub fn run_parallel_sgd(
    problem: &Problem,
    horizon: usize,
    config: &ParallelConfig,
    init: &[f64],
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    config.base.validate()?;
    let k = config.num_instances;
    if k == 0 {
        return Err(Error::invalid("parallel SGD needs at least one instance"));
    }
    if 2 * k > horizon {
        return Err(Error::invalid(format!(
            "{k} instances need a horizon of at least {}",
            2 * k
        )));
    }
    let mut ws: Vec<Vec<f64>> = match &config.initial_points {
        Some(points) => {
            if points.len() != k {
                return Err(Error::invalid(format!(
                    "{} initial points for {k} instances",
                    points.len()
                )));
            }
            for p in points {
                validate_init(problem, p)?;
            }
            points.clone()
        }
        None => vec![init.to_vec(); k],
    };
    let (mut stream, _) = start(problem, horizon, init, opts, seed)?;
    let used = horizon / (2 * k) * 2 * k;
    let per_instance = used / k;
    let tail_start = config.base.tail_start(per_instance);
    let alpha = config.base.step_size;
    let dim = problem.dim();
    let mut tracks = vec![Trajectory::default(); if opts.record_iterates { k } else { 0 }];
    let mut reads = Vec::new();
    let mut recorder = Recorder::new(problem, &opts.checkpoints);
    let mut tail = RunningMean::new(dim);
    let mean_of = |ws: &[Vec<f64>]| {
        let mut m = RunningMean::new(dim);
        for w in ws {
            m.push(w);
        }
        m.into_mean()
    };
    for t in 1..=per_instance {
        for (i, w) in ws.iter_mut().enumerate() {
            if opts.record_iterates {
                tracks[i].iterates.push(w.clone());
            }
            if t >= tail_start {
                tail.push(w);
            }
        }
        for i in 0..k {
            let index = (t - 1) * k + i + 1;
            if recorder.pending(index - 1) {
                recorder.record_until(index - 1, &mean_of(&ws));
            }
            let s = stream.next_sample();
            debug_assert_eq!(s.index, index);
            if opts.trace_reads {
                reads.push(Read { track: i, index: s.index });
            }
            sgd_step_in_place(&mut ws[i], s.x, s.y, alpha);
        }
    }
    if opts.record_iterates {
        for (track, w) in tracks.iter_mut().zip(&ws) {
            track.iterates.push(w.clone());
        }
    }
    let last = mean_of(&ws);
    recorder.record_until(horizon, &last);
    Ok(RunOutput {
        estimate: tail.into_mean(),
        final_iterate: last,
        trajectories: tracks,
        checkpoints: recorder.finish(),
        consumed: stream.position(),
        discarded: horizon - used,
        reads,
        buffer_iterates: Vec::new(),
    })
}

/// SGD with experience replay on a Gaussian AR chain.
///
/// The stream is cut into `floor(T / S)` buffers of `S = B + u` consecutive
/// samples. In each buffer the first `u` are dropped and `B` SGD steps are
/// taken, each on a sample drawn uniformly from the remaining `B`. The
/// estimate averages the iterates after the last `ceil(f * buffers)` buffers.
pub fn run_sgd_er(
    problem: &Problem,
    horizon: usize,
    config: &ReplayConfig,
    init: &[f64],
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let chain = problem
        .chain()
        .as_gaussian()
        .ok_or_else(|| Error::Unsupported("experience replay needs a Gaussian AR chain".into()))?;
    let layout = config.resolve(chain)?;
    let stride = layout.stride();
    if stride > horizon {
        return Err(Error::invalid(format!(
            "buffer stride S = {stride} exceeds the horizon {horizon}"
        )));
    }
    let (mut stream, streams) = start(problem, horizon, init, opts, seed)?;
    let mut picker = streams.algorithm;
    let buffers = horizon / stride;
    let tail_buffers = ((config.tail_buffer_fraction * buffers as f64).ceil() as usize).clamp(1, buffers);
    let dim = problem.dim();
    let b = layout.buffer;
    let eta = config.step_size;
    let mut pool_x = vec![0.0; b * dim];
    let mut pool_y = vec![0.0; b];
    let mut w = init.to_vec();
    let mut track = Trajectory::default();
    let mut reads = Vec::new();
    let mut recorder = Recorder::new(problem, &opts.checkpoints);
    let mut tail = RunningMean::new(dim);
    let mut buffer_iterates = Vec::with_capacity(buffers);
    if opts.record_iterates {
        track.iterates.push(w.clone());
    }
    for j in 0..buffers {
        recorder.record_until((j + 1) * stride - 1, &w);
        stream.skip(layout.drop_prefix);
        let first = stream.position() + 1;
        for slot in 0..b {
            let s = stream.next_sample();
            pool_x[slot * dim..(slot + 1) * dim].copy_from_slice(s.x);
            pool_y[slot] = s.y;
        }
        for _ in 0..b {
            let slot = if b == 1 { 0 } else { picker.random_range(0..b) };
            if opts.trace_reads {
                reads.push(Read { track: 0, index: first + slot });
            }
            sgd_step_in_place(&mut w, &pool_x[slot * dim..(slot + 1) * dim], pool_y[slot], eta);
            if opts.record_iterates {
                track.iterates.push(w.clone());
            }
        }
        if j + tail_buffers >= buffers {
            tail.push(&w);
        }
        buffer_iterates.push(w.clone());
    }
    debug_assert_eq!(tail.count(), tail_buffers);
    recorder.record_until(horizon, &w);
    Ok(RunOutput {
        estimate: tail.into_mean(),
        final_iterate: w,
        trajectories: if opts.record_iterates { vec![track] } else { Vec::new() },
        checkpoints: recorder.finish(),
        consumed: stream.position(),
        discarded: horizon - buffers * stride,
        reads,
        buffer_iterates,
    })
}
