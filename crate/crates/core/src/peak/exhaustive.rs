//! Explores every interleaving and every `random` outcome up to a state budget.

use std::collections::HashSet;
use std::hash::{DefaultHasher, Hash, Hasher};

use crate::sim::machine::{Core, Status};
use crate::sim::{Chooser, CompiledProgram, DeadlineAnchor, Machine, SimError};

/// Replays a fixed prefix of draws (zeros afterwards) and records each draw's range.
struct Replay<'a> {
    script: &'a [u64],
    pos: usize,
    uppers: Vec<u64>,
}

impl Chooser for Replay<'_> {
    fn random(&mut self, upper: u64) -> u64 {
        let v = self.script.get(self.pos).copied().unwrap_or(0).min(upper);
        self.pos += 1;
        self.uppers.push(upper);
        v
    }

    fn pick(&mut self, _n: usize) -> usize {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exploration {
    /// Highest simultaneous holding per category index over every reached state.
    pub peaks: Vec<u32>,
    /// Distinct terminal states in which `main` completed.
    pub completed: u64,
    pub states: u64,
    pub truncated: bool,
}

/// 128-bit fingerprint of the time-shift invariant state (working deadlines
/// relative to the clock). Storing fingerprints instead of states keeps memory
/// flat; a collision would need about 2^64 states.
fn key(m: &Machine) -> u128 {
    let mut core: Core = m.core.clone();
    for t in core.tasks.values_mut() {
        if let Status::Working(u) = t.status {
            t.status = Status::Working(u - m.now);
        }
    }
    let mut lo = DefaultHasher::new();
    core.hash(&mut lo);
    let mut hi = DefaultHasher::new();
    0xa5u8.hash(&mut hi);
    core.hash(&mut hi);
    ((hi.finish() as u128) << 64) | lo.finish() as u128
}

fn successors<'p>(m: &Machine<'p>) -> Result<Vec<Machine<'p>>, SimError> {
    let moves = m.moves();
    if moves.is_empty() {
        let mut next = m.clone();
        return Ok(if next.advance_clock() { vec![next] } else { Vec::new() });
    }
    let mut out = Vec::new();
    for mv in moves {
        let mut script: Vec<u64> = Vec::new();
        loop {
            let mut next = m.clone();
            let mut replay = Replay {
                script: &script,
                pos: 0,
                uppers: Vec::new(),
            };
            next.step(mv, &mut replay)?;
            let uppers = replay.uppers;
            out.push(next);
            // Odometer over the draws this path actually made.
            let mut full: Vec<u64> = (0..uppers.len()).map(|i| script.get(i).copied().unwrap_or(0)).collect();
            match (0..uppers.len()).rev().find(|&i| full[i] < uppers[i]) {
                Some(i) => {
                    full.truncate(i + 1);
                    full[i] += 1;
                    script = full;
                }
                None => break,
            }
        }
    }
    Ok(out)
}

pub fn explore(prog: &CompiledProgram, budget: u64) -> Result<Exploration, SimError> {
    let start = Machine::new(prog, DeadlineAnchor::default());
    let mut peaks = vec![0u32; prog.categories.len()];
    let mut seen: HashSet<u128> = HashSet::new();
    let mut stack = vec![start];
    let mut completed = 0u64;
    let mut states = 0u64;
    let mut truncated = false;
    while let Some(m) = stack.pop() {
        for (p, s) in peaks.iter_mut().zip(&m.stats.peaks) {
            *p = (*p).max(*s);
        }
        if !seen.insert(key(&m)) {
            continue;
        }
        states += 1;
        if m.is_done() {
            completed += 1;
            continue;
        }
        if states >= budget {
            truncated = true;
            break;
        }
        stack.extend(successors(&m)?);
    }
    Ok(Exploration {
        peaks,
        completed,
        states,
        truncated,
    })
}
