//! Seeded Monte Carlo evaluation: frame error rates with logical-error
//! grading, iteration and decimation averages, and CSV emission.
//!
//! Every trial draws from its own RNG substream keyed by (master seed,
//! grid point index, trial index), so aggregates are independent of both
//! execution order and thread count, and two decoders evaluated under the
//! same seed face identical error frames. Trials run in fixed-size chunks;
//! within a chunk they may execute in parallel, and the chunk's records are
//! always folded in trial order, which keeps the optional stop-at-N-errors
//! rule deterministic as well.

use rayon::prelude::*;

use crate::binary_decoder::{
    decode_flooding, decode_svns, BpConfig, Schedule, ScheduleSource,
};
use crate::channel::{prior_llr, sample_bitflip, sample_depolarizing, trial_rng, NoiseParams};
use crate::code_model::{CssCode, DecodeOutcome, OutcomeKind};
use crate::decimation::{decode_gd, decode_qgd, GdConfig, InnerDecoder};
use crate::error::{Error, Result};
use crate::fast_infer::decode_fast;
use crate::graph::TannerAdjacency;
use crate::quaternary_decoder::{
    decode_qbp, decode_qsvns, joint_state_count, DepolPrior, QuatProblem,
};
use crate::scheduler_rl::{QTable, QVariant};

/// Trials dispatched per parallel batch. Only a work-discard bound when
/// stopping at a target error count; summaries never depend on it.
const TRIAL_CHUNK: usize = 1024;

/// Two-sided 95% normal quantile used by the Wilson interval.
const WILSON_Z: f64 = 1.959963984540054;

/// Decoder selected for an evaluation run.
///
/// `Qsvns` is the random-schedule sequential quaternary baseline; it is
/// exposed at library level for schedule comparisons even though the
/// command line offers only the ten standard names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    /// Binary flooding BP.
    Bp,
    /// Binary sequential updates in uniformly random order.
    Svns,
    /// Binary sequential updates in greedy Q-table order.
    RlSvns,
    /// Same schedule as RlSvns through the incremental engine.
    RlSvnsFast,
    /// Quaternary flooding BP.
    Qbp,
    /// Quaternary sequential updates in uniformly random order.
    Qsvns,
    /// Quaternary sequential updates in greedy Q-table order.
    RlQsvns,
    /// Guided decimation around binary flooding.
    Bpgd,
    /// Guided decimation around the binary greedy schedule.
    RlSvnsGd,
    /// Guided decimation around quaternary flooding.
    Qbpgd,
    /// Guided decimation around the quaternary greedy schedule.
    RlQsvnsGd,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 11] = [
        DecoderKind::Bp,
        DecoderKind::Svns,
        DecoderKind::RlSvns,
        DecoderKind::RlSvnsFast,
        DecoderKind::Qbp,
        DecoderKind::Qsvns,
        DecoderKind::RlQsvns,
        DecoderKind::Bpgd,
        DecoderKind::RlSvnsGd,
        DecoderKind::Qbpgd,
        DecoderKind::RlQsvnsGd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Bp => "bp",
            DecoderKind::Svns => "svns",
            DecoderKind::RlSvns => "rl-svns",
            DecoderKind::RlSvnsFast => "rl-svns-fast",
            DecoderKind::Qbp => "qbp",
            DecoderKind::Qsvns => "qsvns",
            DecoderKind::RlQsvns => "rl-qsvns",
            DecoderKind::Bpgd => "bpgd",
            DecoderKind::RlSvnsGd => "rl-svns-gd",
            DecoderKind::Qbpgd => "qbpgd",
            DecoderKind::RlQsvnsGd => "rl-qsvns-gd",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::InvalidParam(format!("unknown decoder '{name}'")))
    }

    /// Depolarizing channel and two-stream decoding.
    pub fn is_quaternary(self) -> bool {
        matches!(
            self,
            DecoderKind::Qbp
                | DecoderKind::Qsvns
                | DecoderKind::RlQsvns
                | DecoderKind::Qbpgd
                | DecoderKind::RlQsvnsGd
        )
    }

    /// Wrapped in the guided-decimation loop.
    pub fn uses_decimation(self) -> bool {
        matches!(
            self,
            DecoderKind::Bpgd
                | DecoderKind::RlSvnsGd
                | DecoderKind::Qbpgd
                | DecoderKind::RlQsvnsGd
        )
    }

    /// Required Q-table variant, if the schedule is learned.
    pub fn qtable_variant(self) -> Option<QVariant> {
        match self {
            DecoderKind::RlSvns | DecoderKind::RlSvnsFast | DecoderKind::RlSvnsGd => {
                Some(QVariant::Binary)
            }
            DecoderKind::RlQsvns | DecoderKind::RlQsvnsGd => Some(QVariant::Quaternary),
            _ => None,
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Full description of an evaluation run over a noise grid.
#[derive(Clone, Debug)]
pub struct ExperimentSpec<'a> {
    pub code: &'a CssCode,
    pub decoder: DecoderKind,
    /// Physical error rates, ordered as the output rows should appear.
    pub grid: Vec<f64>,
    /// Trials per grid point (an upper bound when target_errors is set).
    pub frames: usize,
    /// Stop a point early once this many error events have accumulated.
    pub target_errors: Option<usize>,
    pub master_seed: u64,
    /// Iteration cap T; the per-block budget for decimation decoders.
    pub max_iters: usize,
    pub llr_clip: f64,
    pub qtable: Option<&'a QTable>,
    pub threads: usize,
}

/// Aggregated results of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSummary {
    pub p: f64,
    /// Trials actually counted (fewer than requested when a target error
    /// count stopped the point early).
    pub frames: usize,
    /// Logical errors plus nonconvergences.
    pub errors: usize,
    pub logical_errors: usize,
    pub nonconv: usize,
    pub fer: f64,
    pub fer_lo: f64,
    pub fer_hi: f64,
    pub avg_iters: f64,
    /// Mean blocks per attempt; None for decoders without decimation.
    pub avg_decimations: Option<f64>,
    /// Share of nonconvergences among error events, in percent. Zero
    /// when no errors occurred.
    pub pct_nonconv_among_errors: f64,
}

/// Wilson score interval at 95% for k successes out of n.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    assert!(n > 0 && k <= n, "interval needs 0 <= k <= n, n > 0");
    let nf = n as f64;
    let ph = k as f64 / nf;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / nf;
    let center = ph + z2 / (2.0 * nf);
    let margin = WILSON_Z * (ph * (1.0 - ph) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 {
        0.0
    } else {
        ((center - margin) / denom).max(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        ((center + margin) / denom).min(1.0)
    };
    (lo, hi)
}

fn check_qtable(spec: &ExperimentSpec<'_>) -> Result<()> {
    match spec.decoder.qtable_variant() {
        None => Ok(()),
        Some(want) => {
            let table = spec.qtable.ok_or_else(|| {
                Error::QTable(format!("decoder {} needs a Q-table", spec.decoder))
            })?;
            if table.variant() != want {
                return Err(Error::QTable(format!(
                    "decoder {} needs a {} table, got {}",
                    spec.decoder,
                    want.tag(),
                    table.variant().tag()
                )));
            }
            if table.n() != spec.code.n() {
                return Err(Error::QTable(format!(
                    "table indexes {} variables, code has {}",
                    table.n(),
                    spec.code.n()
                )));
            }
            Ok(())
        }
    }
}

fn check_point(spec: &ExperimentSpec<'_>, p: f64) -> Result<()> {
    if spec.frames < 1 {
        return Err(Error::InvalidParam("frames must be positive".into()));
    }
    if spec.threads < 1 {
        return Err(Error::InvalidParam("threads must be positive".into()));
    }
    if spec.max_iters < 1 {
        return Err(Error::InvalidParam("max_iters must be positive".into()));
    }
    if let Some(t) = spec.target_errors {
        if t < 1 {
            return Err(Error::InvalidParam("target error count must be positive".into()));
        }
    }
    if spec.decoder.is_quaternary() {
        if !(p > 0.0 && p < 0.75) {
            return Err(Error::InvalidParam(format!(
                "depolarizing rate {p} outside (0, 0.75)"
            )));
        }
    } else if !(0.0..0.5).contains(&p) {
        return Err(Error::InvalidParam(format!(
            "bit-flip rate {p} outside [0, 0.5)"
        )));
    }
    check_qtable(spec)
}

struct PointContext<'a> {
    spec: &'a ExperimentSpec<'a>,
    adj_a: TannerAdjacency,
    adj_b: Option<TannerAdjacency>,
    priors: Vec<f64>,
    depol: Option<DepolPrior>,
    bp: BpConfig,
    gd: GdConfig,
}

impl<'a> PointContext<'a> {
    fn new(spec: &'a ExperimentSpec<'a>, p: f64) -> Result<Self> {
        let code = spec.code;
        let n = code.n();
        let adj_a = TannerAdjacency::from_matrix(code.h_a());
        let adj_b = spec
            .decoder
            .is_quaternary()
            .then(|| TannerAdjacency::from_matrix(code.h_b()));
        if let Some(table) = spec.qtable {
            if spec.decoder.qtable_variant().is_some() {
                let states = match &adj_b {
                    Some(b) => joint_state_count(&adj_a, b),
                    None => adj_a.state_count(),
                };
                if table.s_max() < states {
                    return Err(Error::QTable(format!(
                        "table covers {} states, code needs {}",
                        table.s_max(),
                        states
                    )));
                }
            }
        }
        let (priors, depol) = if spec.decoder.is_quaternary() {
            let dp = DepolPrior::new(p)?;
            (vec![dp.mu_dep; n], Some(dp))
        } else {
            (vec![prior_llr(&NoiseParams::BitFlip { p }); n], None)
        };
        let schedule = match spec.decoder {
            DecoderKind::Bp | DecoderKind::Qbp | DecoderKind::Bpgd | DecoderKind::Qbpgd => {
                Schedule::Flooding
            }
            DecoderKind::Svns | DecoderKind::Qsvns => Schedule::RandomSvns,
            _ => Schedule::GreedyRlSvns,
        };
        let bp = BpConfig {
            max_iters: spec.max_iters,
            llr_clip: spec.llr_clip,
            schedule,
        };
        let gd = GdConfig {
            inner: if spec.decoder.qtable_variant().is_some() {
                InnerDecoder::GreedyRlSvns
            } else {
                InnerDecoder::Flooding
            },
            inner_iters: spec.max_iters,
            llr_clip: spec.llr_clip,
            ..GdConfig::default()
        };
        Ok(PointContext {
            spec,
            adj_a,
            adj_b,
            priors,
            depol,
            bp,
            gd,
        })
    }

    /// One frame: sample, decode, grade. The trial's RNG serves the error
    /// draw first and any schedule randomness afterwards.
    fn run_trial(&self, point_index: usize, p: f64, trial: usize) -> DecodeOutcome {
        let spec = self.spec;
        let code = spec.code;
        let n = code.n();
        let mut rng = trial_rng(spec.master_seed, point_index as u64, trial as u64);
        if spec.decoder.is_quaternary() {
            let frame = sample_depolarizing(n, p, &mut rng);
            let adj_b = self.adj_b.as_ref().unwrap();
            let s_a = self.adj_a.syndrome_of(&frame.e_a);
            let s_b = adj_b.syndrome_of(&frame.e_b);
            let prob = QuatProblem {
                adj_a: &self.adj_a,
                adj_b,
                s_a: &s_a,
                s_b: &s_b,
                priors_a: &self.priors,
                priors_b: &self.priors,
                prior: self.depol.as_ref().unwrap(),
            };
            let (e_hat, converged, iterations, decimations) = match spec.decoder {
                DecoderKind::Qbp => {
                    let r = decode_qbp(&prob, &self.bp);
                    (r.frame, r.converged, r.iterations, 0)
                }
                DecoderKind::Qsvns => {
                    let mut src = ScheduleSource::Random(&mut rng);
                    let r = decode_qsvns(&prob, &self.bp, &mut src, None);
                    (r.frame, r.converged, r.iterations, 0)
                }
                DecoderKind::RlQsvns => {
                    let mut src = ScheduleSource::Greedy(spec.qtable.unwrap());
                    let r = decode_qsvns(&prob, &self.bp, &mut src, None);
                    (r.frame, r.converged, r.iterations, 0)
                }
                DecoderKind::Qbpgd => {
                    let r = decode_qgd(&prob, None, &self.gd, None);
                    (r.frame, r.converged, r.iterations, r.decimations)
                }
                DecoderKind::RlQsvnsGd => {
                    let r = decode_qgd(&prob, spec.qtable, &self.gd, None);
                    (r.frame, r.converged, r.iterations, r.decimations)
                }
                _ => unreachable!("binary decoder routed to the quaternary path"),
            };
            DecodeOutcome {
                kind: code.classify_quaternary(&frame, &e_hat, converged),
                iterations_used: iterations,
                decimations_used: decimations,
            }
        } else {
            let e = sample_bitflip(n, p, &mut rng);
            let s = self.adj_a.syndrome_of(&e);
            let (e_hat, converged, iterations, decimations) = match spec.decoder {
                DecoderKind::Bp => {
                    let r = decode_flooding(&self.adj_a, &s, &self.priors, &self.bp);
                    (r.e_hat, r.converged, r.iterations, 0)
                }
                DecoderKind::Svns => {
                    let mut src = ScheduleSource::Random(&mut rng);
                    let r = decode_svns(&self.adj_a, &s, &self.priors, &self.bp, &mut src, None);
                    (r.e_hat, r.converged, r.iterations, 0)
                }
                DecoderKind::RlSvns => {
                    let mut src = ScheduleSource::Greedy(spec.qtable.unwrap());
                    let r = decode_svns(&self.adj_a, &s, &self.priors, &self.bp, &mut src, None);
                    (r.e_hat, r.converged, r.iterations, 0)
                }
                DecoderKind::RlSvnsFast => {
                    let r = decode_fast(
                        &self.adj_a,
                        spec.qtable.unwrap(),
                        &s,
                        &self.priors,
                        &self.bp,
                        None,
                    );
                    (r.e_hat, r.converged, r.iterations, 0)
                }
                DecoderKind::Bpgd => {
                    let r = decode_gd(&self.adj_a, None, &s, &self.priors, &self.gd, None);
                    (r.e_hat, r.converged, r.iterations, r.decimations)
                }
                DecoderKind::RlSvnsGd => {
                    let r =
                        decode_gd(&self.adj_a, spec.qtable, &s, &self.priors, &self.gd, None);
                    (r.e_hat, r.converged, r.iterations, r.decimations)
                }
                _ => unreachable!("quaternary decoder routed to the binary path"),
            };
            DecodeOutcome {
                kind: code.classify_binary(&e, &e_hat, converged),
                iterations_used: iterations,
                decimations_used: decimations,
            }
        }
    }
}

fn summarize(spec: &ExperimentSpec<'_>, p: f64, records: &[DecodeOutcome]) -> PointSummary {
    let frames = records.len();
    let mut logical = 0usize;
    let mut nonconv = 0usize;
    let mut iters = 0usize;
    let mut decs = 0usize;
    for r in records {
        match r.kind {
            OutcomeKind::Converged => {}
            OutcomeKind::LogicalError => logical += 1,
            OutcomeKind::NonConvergence => nonconv += 1,
        }
        iters += r.iterations_used;
        decs += r.decimations_used;
    }
    let errors = logical + nonconv;
    let (fer_lo, fer_hi) = wilson_interval(errors, frames);
    PointSummary {
        p,
        frames,
        errors,
        logical_errors: logical,
        nonconv,
        fer: errors as f64 / frames as f64,
        fer_lo,
        fer_hi,
        avg_iters: iters as f64 / frames as f64,
        avg_decimations: spec
            .decoder
            .uses_decimation()
            .then(|| decs as f64 / frames as f64),
        pct_nonconv_among_errors: if errors == 0 {
            0.0
        } else {
            100.0 * nonconv as f64 / errors as f64
        },
    }
}

/// Evaluates one grid point. `point_index` keys the RNG substreams and is
/// normally the position of `p` in the spec's grid.
pub fn run_point(spec: &ExperimentSpec<'_>, point_index: usize, p: f64) -> Result<PointSummary> {
    check_point(spec, p)?;
    let ctx = PointContext::new(spec, p)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    let mut records: Vec<DecodeOutcome> = Vec::new();
    let mut errors = 0usize;
    let mut start = 0usize;
    'points: while start < spec.frames {
        let stop = (start + TRIAL_CHUNK).min(spec.frames);
        let chunk: Vec<DecodeOutcome> = pool.install(|| {
            (start..stop)
                .into_par_iter()
                .map(|t| ctx.run_trial(point_index, p, t))
                .collect()
        });
        for rec in chunk {
            records.push(rec);
            if rec.kind != OutcomeKind::Converged {
                errors += 1;
                if spec.target_errors.is_some_and(|t| errors >= t) {
                    break 'points;
                }
            }
        }
        start = stop;
    }
    Ok(summarize(spec, p, &records))
}

/// Interval-based sanity warnings: FER should not drop significantly as
/// the noise grows. A warning names any adjacent pair whose intervals
/// are disjoint in the wrong direction.
pub fn monotonicity_warnings(points: &[PointSummary]) -> Vec<String> {
    let mut out = Vec::new();
    for pair in points.windows(2) {
        if pair[1].fer_hi < pair[0].fer_lo {
            out.push(format!(
                "FER at p={} lies below FER at p={} beyond interval overlap",
                pair[1].p, pair[0].p
            ));
        }
    }
    out
}

/// Evaluates every grid point in order, with one progress line per point
/// and monotonicity warnings on standard error.
pub fn run_grid(spec: &ExperimentSpec<'_>) -> Result<Vec<PointSummary>> {
    if spec.grid.is_empty() {
        return Err(Error::InvalidParam("noise grid is empty".into()));
    }
    check_qtable(spec)?;
    let mut out = Vec::with_capacity(spec.grid.len());
    for (idx, &p) in spec.grid.iter().enumerate() {
        let summary = run_point(spec, idx, p)?;
        eprintln!(
            "{} {} p={} frames={} errors={} fer={:.3e} avg_iters={:.3}",
            spec.code.name(),
            spec.decoder,
            p,
            summary.frames,
            summary.errors,
            summary.fer,
            summary.avg_iters
        );
        out.push(summary);
    }
    for warning in monotonicity_warnings(&out) {
        eprintln!("warning: {warning}");
    }
    Ok(out)
}

/// Writes the results table. Floating-point cells use the shortest
/// round-tripping decimal form, so equal runs emit identical bytes.
pub fn write_csv<W: std::io::Write>(
    w: &mut W,
    code_name: &str,
    decoder: DecoderKind,
    points: &[PointSummary],
) -> Result<()> {
    let ctx = "writing results CSV";
    writeln!(
        w,
        "code,decoder,p,frames,errors,logical_errors,nonconv,fer,fer_lo,fer_hi,avg_iters,avg_decimations"
    )
    .map_err(|e| Error::io(ctx, e))?;
    for s in points {
        let avg_dec = s.avg_decimations.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            code_name,
            decoder,
            s.p,
            s.frames,
            s.errors,
            s.logical_errors,
            s.nonconv,
            s.fer,
            s.fer_lo,
            s.fer_hi,
            s.avg_iters,
            avg_dec
        )
        .map_err(|e| Error::io(ctx, e))?;
    }
    Ok(())
}
