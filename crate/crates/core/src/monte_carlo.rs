//! Exact simulation of sample paths and empirical laws of `S_t` and `V_t`.
//!
//! Path `i` of a run with seed `s` always uses the stream `path_rng(s, i)`,
//! and every reduction is either an integer count or a fixed-order sum over
//! fixed-size blocks, so results do not depend on the number of threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::Model;
use crate::rng::{path_rng, PathRng};
use crate::trials::{TrialState, VelocitySign};

/// Hard limit on switches per path.
pub const SWITCH_CAP: u64 = 10_000_000;

const BLOCK: u64 = 4096;

/// One simulated path up to time `t`. The epoch vectors are filled only
/// when tracing was requested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePath {
    pub t: f64,
    /// `T_0 = 0 < T_1 < ... <= t`.
    pub epochs: Vec<f64>,
    /// `Z_0, Z_1, ...` as signed velocities.
    pub velocities: Vec<f64>,
    /// `S_{T_0}, S_{T_1}, ...`.
    pub positions: Vec<f64>,
    pub final_position: f64,
    pub final_velocity: VelocitySign,
    /// `M_t`.
    pub switches: u64,
    /// Forward and backward periods started by time `t`, the running one
    /// included.
    pub forward_periods: u64,
    pub backward_periods: u64,
}

impl SamplePath {
    /// `S_t = ct`: no backward period was ever started.
    pub fn at_plus_atom(&self) -> bool {
        self.backward_periods == 0
    }

    /// `S_t = -vt`.
    pub fn at_minus_atom(&self) -> bool {
        self.forward_periods == 0
    }
}

/// Simulates one path. `initial` forces the first trial `X_1` (and with it
/// the urn state) instead of drawing it.
pub fn simulate_path(
    model: &Model,
    t: f64,
    rng: &mut PathRng,
    initial: Option<VelocitySign>,
    trace: bool,
) -> Result<SamplePath> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain("simulate_path", format!("t = {t} must be > 0")));
    }
    let it = model.intertimes.as_ref();
    let mut state = TrialState::new(model.scheme);
    let mut dir = match initial {
        Some(s) => {
            state.record(s.is_forward());
            s
        }
        None => VelocitySign::from_success(state.sample(rng)),
    };
    let mut path = SamplePath {
        t,
        epochs: Vec::new(),
        velocities: Vec::new(),
        positions: Vec::new(),
        final_position: 0.0,
        final_velocity: dir,
        switches: 0,
        forward_periods: 0,
        backward_periods: 0,
    };
    let (mut now, mut pos) = (0.0_f64, 0.0_f64);
    loop {
        let vel = model.velocity(dir);
        if trace {
            path.epochs.push(now);
            path.velocities.push(vel);
            path.positions.push(pos);
        }
        let index = if dir.is_forward() {
            path.forward_periods += 1;
            path.forward_periods
        } else {
            path.backward_periods += 1;
            path.backward_periods
        };
        let d = it.sample(dir, index, rng);
        if now + d > t {
            pos += vel * (t - now);
            break;
        }
        now += d;
        pos += vel * d;
        path.switches += 1;
        if path.switches > SWITCH_CAP {
            return Err(Error::SwitchCap { cap: SWITCH_CAP, t });
        }
        dir = VelocitySign::from_success(state.sample(rng));
    }
    debug_assert_eq!(path.forward_periods, state.n_successes());
    debug_assert_eq!(path.switches + 1, state.n_trials());
    let (lo, hi) = model.motion.support(t);
    // paths that never reversed sit exactly on an atom
    path.final_position = if path.backward_periods == 0 {
        hi
    } else if path.forward_periods == 0 {
        lo
    } else {
        pos.clamp(lo, hi)
    };
    path.final_velocity = dir;
    Ok(path)
}

/// Histogram of `S_t` over the open support plus the two atom counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    pub t: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub atom_plus: u64,
    pub atom_minus: u64,
    /// `bins + 1` equally spaced edges from `-vt` to `ct`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl EmpiricalLaw {
    pub fn atom_plus_freq(&self) -> f64 {
        self.atom_plus as f64 / self.n_paths as f64
    }

    pub fn atom_minus_freq(&self) -> f64 {
        self.atom_minus as f64 / self.n_paths as f64
    }

    pub fn bin_freq(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.n_paths as f64
    }

    pub fn bin_width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Density estimate in bin `i`.
    pub fn density(&self, i: usize) -> f64 {
        self.bin_freq(i) / self.bin_width(i)
    }

    /// Binomial standard error of `density(i)`.
    pub fn density_std_err(&self, i: usize) -> f64 {
        binomial_se(self.bin_freq(i), self.n_paths) / self.bin_width(i)
    }

    /// Every path is either an atom or in exactly one bin.
    pub fn total_count(&self) -> u64 {
        self.atom_plus + self.atom_minus + self.counts.iter().sum::<u64>()
    }
}

pub fn binomial_se(freq: f64, n: u64) -> f64 {
    (freq * (1.0 - freq) / n as f64).sqrt()
}

fn check_run(n_paths: u64, t: f64) -> Result<()> {
    if n_paths == 0 {
        return Err(domain("monte carlo", "n_paths must be >= 1"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain("monte carlo", format!("t = {t} must be > 0")));
    }
    Ok(())
}

/// Runs `f` on every block of paths in parallel and returns the block
/// results in block order.
fn per_block<T, F>(n_paths: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> Result<T> + Sync,
{
    let blocks = n_paths.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| f(b * BLOCK..((b + 1) * BLOCK).min(n_paths)))
        .collect()
}

pub fn estimate_law(model: &Model, t: f64, n_paths: u64, bins: usize, seed: u64) -> Result<EmpiricalLaw> {
    check_run(n_paths, t)?;
    if bins == 0 {
        return Err(domain("estimate_law", "bins must be >= 1"));
    }
    let (lo, hi) = model.motion.support(t);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let parts = per_block(n_paths, |range| {
        let (mut plus, mut minus) = (0u64, 0u64);
        let mut counts = vec![0u64; bins];
        for i in range {
            let path = simulate_path(model, t, &mut path_rng(seed, i), None, false)?;
            if path.at_plus_atom() {
                plus += 1;
            } else if path.at_minus_atom() {
                minus += 1;
            } else {
                let k = ((path.final_position - lo) / width).floor();
                counts[(k.max(0.0) as usize).min(bins - 1)] += 1;
            }
        }
        Ok((plus, minus, counts))
    })?;
    let mut law = EmpiricalLaw {
        t,
        n_paths,
        seed,
        atom_plus: 0,
        atom_minus: 0,
        edges,
        counts: vec![0; bins],
    };
    for (plus, minus, counts) in parts {
        law.atom_plus += plus;
        law.atom_minus += minus;
        for (a, b) in law.counts.iter_mut().zip(counts) {
            *a += b;
        }
    }
    Ok(law)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_paths: u64,
}

/// Mean of `V_t` over paths started with velocity `initial`.
pub fn estimate_mean_velocity(
    model: &Model,
    t: f64,
    n_paths: u64,
    initial: VelocitySign,
    seed: u64,
) -> Result<Estimate> {
    check_run(n_paths, t)?;
    let parts = per_block(n_paths, |range| {
        let mut fwd = 0u64;
        for i in range {
            let path = simulate_path(model, t, &mut path_rng(seed, i), Some(initial), false)?;
            fwd += u64::from(path.final_velocity.is_forward());
        }
        Ok(fwd)
    })?;
    let q = parts.iter().sum::<u64>() as f64 / n_paths as f64;
    let (c, v) = (model.motion.c, model.motion.v);
    // V_t takes two values, so its variance is (c+v)^2 q (1-q)
    Ok(Estimate {
        mean: c * q - v * (1.0 - q),
        std_err: (c + v) * binomial_se(q, n_paths),
        n_paths,
    })
}

/// Mean of `S_t` over unconditioned paths.
pub fn estimate_mean_position(model: &Model, t: f64, n_paths: u64, seed: u64) -> Result<Estimate> {
    check_run(n_paths, t)?;
    let parts = per_block(n_paths, |range| {
        let (mut s, mut s2) = (0.0, 0.0);
        for i in range {
            let x = simulate_path(model, t, &mut path_rng(seed, i), None, false)?.final_position;
            s += x;
            s2 += x * x;
        }
        Ok((s, s2))
    })?;
    let (s, s2) = parts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = n_paths as f64;
    let mean = s / n;
    let var = if n_paths > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        std_err: (var / n).sqrt(),
        n_paths,
    })
}
