//! Discrete-event replay of a synthetic workload on a slot-based cluster.
//!
//! Every job splits into equal-length map tasks and equal-length reduce
//! tasks (per-task durations are not in the per-job schema). Reduces wait
//! for all of their job's maps. Time is integer microseconds, so ordering is
//! exact and runs are reproducible.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::SyntheticWorkload;
use crate::temporal::{Dimension, TimeSeries};

const MICROS: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    /// Free slots go to runnable tasks in job submit order.
    Fifo,
    /// Free slots are granted one at a time, round-robin over jobs with
    /// runnable tasks, starting from the earliest job.
    Fair,
}

impl std::str::FromStr for Scheduler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fifo" => Ok(Scheduler::Fifo),
            "fair" => Ok(Scheduler::Fair),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheduler `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub nodes: u32,
    pub map_slots_per_node: u32,
    pub reduce_slots_per_node: u32,
    pub scheduler: Scheduler,
}

impl SimConfig {
    pub fn map_slots(&self) -> u64 {
        self.nodes as u64 * self.map_slots_per_node as u64
    }

    pub fn reduce_slots(&self) -> u64 {
        self.nodes as u64 * self.reduce_slots_per_node as u64
    }
}

/// Times in seconds from the workload origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobTiming {
    pub submit: f64,
    pub first_task_start: f64,
    pub completion: f64,
}

/// Slots in use from `time_us` until the next sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancySample {
    pub time_us: u64,
    pub active_map: u64,
    pub active_reduce: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    /// Absolute time of offset 0.
    pub origin: i64,
    pub jobs: Vec<JobTiming>,
    pub makespan: f64,
    pub busy_map_slot_seconds: f64,
    pub busy_reduce_slot_seconds: f64,
    pub occupancy: Vec<OccupancySample>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Map,
    Reduce,
}

struct JobState {
    submit: u64,
    maps_to_start: u64,
    reduces_to_start: u64,
    maps_unfinished: u64,
    tasks_unfinished: u64,
    map_us: u64,
    reduce_us: u64,
    first_start: Option<u64>,
    completion: Option<u64>,
}

/// Task count for a job side: missing counts become one task if there is
/// work, and a zero count with positive task-seconds also gets one task so
/// the work is not dropped.
fn effective_tasks(count: Option<u64>, seconds: f64) -> u64 {
    match count {
        Some(n) if n > 0 => n,
        _ if seconds > 0.0 => 1,
        _ => 0,
    }
}

fn per_task_us(seconds: f64, tasks: u64) -> u64 {
    if tasks == 0 {
        0
    } else {
        (seconds * MICROS / tasks as f64).round() as u64
    }
}

struct Sim {
    jobs: Vec<JobState>,
    scheduler: Scheduler,
    free: [u64; 2],
    ready: [BTreeSet<usize>; 2],
    running: BinaryHeap<Reverse<(u64, usize, Kind)>>,
    busy_us: [u128; 2],
}

impl Sim {
    fn start_task(&mut self, j: usize, kind: Kind, now: u64) {
        let job = &mut self.jobs[j];
        let (left, dur) = match kind {
            Kind::Map => (&mut job.maps_to_start, job.map_us),
            Kind::Reduce => (&mut job.reduces_to_start, job.reduce_us),
        };
        *left -= 1;
        if *left == 0 {
            self.ready[kind as usize].remove(&j);
        }
        job.first_start.get_or_insert(now);
        self.free[kind as usize] -= 1;
        self.busy_us[kind as usize] += dur as u128;
        self.running.push(Reverse((now + dur, j, kind)));
    }

    fn schedule(&mut self, kind: Kind, now: u64) {
        let k = kind as usize;
        match self.scheduler {
            Scheduler::Fifo => {
                while self.free[k] > 0 {
                    let Some(&j) = self.ready[k].first() else {
                        break;
                    };
                    self.start_task(j, kind, now);
                }
            }
            Scheduler::Fair => {
                while self.free[k] > 0 && !self.ready[k].is_empty() {
                    let round: Vec<usize> = self.ready[k].iter().copied().collect();
                    for j in round {
                        if self.free[k] == 0 {
                            break;
                        }
                        self.start_task(j, kind, now);
                    }
                }
            }
        }
    }

    fn complete(&mut self, j: usize, kind: Kind, now: u64) {
        self.free[kind as usize] += 1;
        let job = &mut self.jobs[j];
        if kind == Kind::Map {
            job.maps_unfinished -= 1;
            if job.maps_unfinished == 0 && job.reduces_to_start > 0 {
                self.ready[Kind::Reduce as usize].insert(j);
            }
        }
        job.tasks_unfinished -= 1;
        if job.tasks_unfinished == 0 {
            job.completion = Some(now);
        }
    }

    fn arrive(&mut self, j: usize, now: u64) {
        let job = &mut self.jobs[j];
        if job.tasks_unfinished == 0 {
            job.first_start = Some(now);
            job.completion = Some(now);
        } else if job.maps_to_start > 0 {
            self.ready[Kind::Map as usize].insert(j);
        } else {
            self.ready[Kind::Reduce as usize].insert(j);
        }
    }
}

pub fn simulate(workload: &SyntheticWorkload, config: &SimConfig) -> Result<SimResult> {
    if config.nodes == 0 || config.map_slots_per_node == 0 || config.reduce_slots_per_node == 0 {
        return Err(Error::InvalidArgument(
            "nodes and slots per node must be positive".into(),
        ));
    }
    if let Some(i) = workload
        .jobs
        .windows(2)
        .position(|p| p[0].submit_offset > p[1].submit_offset)
    {
        return Err(Error::UnsortedWorkload { index: i + 1 });
    }
    let jobs: Vec<JobState> = workload
        .jobs
        .iter()
        .map(|j| {
            let maps = effective_tasks(j.map_tasks, j.map_task_seconds);
            let reduces = effective_tasks(j.reduce_tasks, j.reduce_task_seconds);
            JobState {
                submit: j.submit_offset * MICROS as u64,
                maps_to_start: maps,
                reduces_to_start: reduces,
                maps_unfinished: maps,
                tasks_unfinished: maps + reduces,
                map_us: per_task_us(j.map_task_seconds, maps),
                reduce_us: per_task_us(j.reduce_task_seconds, reduces),
                first_start: None,
                completion: None,
            }
        })
        .collect();

    let total = [config.map_slots(), config.reduce_slots()];
    let mut sim = Sim {
        jobs,
        scheduler: config.scheduler,
        free: total,
        ready: [BTreeSet::new(), BTreeSet::new()],
        running: BinaryHeap::new(),
        busy_us: [0, 0],
    };
    let mut occupancy: Vec<OccupancySample> = Vec::new();
    let mut next_arrival = 0;
    loop {
        let t_arrival = sim.jobs.get(next_arrival).map(|j| j.submit);
        let t_done = sim.running.peek().map(|Reverse((t, _, _))| *t);
        let now = match (t_arrival, t_done) {
            (Some(a), Some(d)) => a.min(d),
            (Some(a), None) => a,
            (None, Some(d)) => d,
            (None, None) => break,
        };
        while let Some(&Reverse((t, j, kind))) = sim.running.peek() {
            if t != now {
                break;
            }
            sim.running.pop();
            sim.complete(j, kind, now);
        }
        while next_arrival < sim.jobs.len() && sim.jobs[next_arrival].submit == now {
            sim.arrive(next_arrival, now);
            next_arrival += 1;
        }
        sim.schedule(Kind::Map, now);
        sim.schedule(Kind::Reduce, now);

        let sample = OccupancySample {
            time_us: now,
            active_map: total[0] - sim.free[0],
            active_reduce: total[1] - sim.free[1],
        };
        match occupancy.last_mut() {
            Some(last) if last.time_us == now => *last = sample,
            _ => occupancy.push(sample),
        }
    }

    let secs = |us: u64| us as f64 / MICROS;
    let timings: Vec<JobTiming> = sim
        .jobs
        .iter()
        .map(|j| JobTiming {
            submit: secs(j.submit),
            first_task_start: secs(j.first_start.expect("every job starts")),
            completion: secs(j.completion.expect("every job completes")),
        })
        .collect();
    let makespan = match (
        sim.jobs.first(),
        sim.jobs.iter().filter_map(|j| j.completion).max(),
    ) {
        (Some(first), Some(last)) => secs(last - first.submit),
        _ => 0.0,
    };
    Ok(SimResult {
        config: *config,
        origin: workload.origin,
        jobs: timings,
        makespan,
        busy_map_slot_seconds: sim.busy_us[0] as f64 / MICROS,
        busy_reduce_slot_seconds: sim.busy_us[1] as f64 / MICROS,
        occupancy,
    })
}

/// Average active map plus reduce slots per bucket, integrated exactly from
/// the occupancy step function. Bucket 0 starts at workload offset 0.
pub fn sim_occupancy_series(result: &SimResult, bucket_width: u64) -> Result<TimeSeries> {
    if bucket_width == 0 {
        return Err(Error::InvalidBucketWidth);
    }
    let Some(last) = result.occupancy.last() else {
        return Err(Error::NoData("simulation produced no events".into()));
    };
    let width_us = bucket_width * MICROS as u64;
    let n = (last.time_us.div_ceil(width_us) as usize).max(1);
    let mut slot_us = vec![0u128; n];
    for pair in result.occupancy.windows(2) {
        let active = (pair[0].active_map + pair[0].active_reduce) as u128;
        if active == 0 {
            continue;
        }
        let (mut lo, hi) = (pair[0].time_us, pair[1].time_us);
        while lo < hi {
            let b = (lo / width_us) as usize;
            let edge = ((b as u64 + 1) * width_us).min(hi);
            slot_us[b] += active * (edge - lo) as u128;
            lo = edge;
        }
    }
    Ok(TimeSeries {
        dimension: Dimension::OccupancySlots,
        bucket_width,
        start: result.origin,
        values: slot_us
            .into_iter()
            .map(|v| v as f64 / width_us as f64)
            .collect(),
        excluded: 0,
    })
}
