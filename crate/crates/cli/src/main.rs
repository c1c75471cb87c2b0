//! Command line front end: code construction, schedule training, grid
//! evaluation, single-shot decoding, and Q-table inspection.
//!
//! Every subcommand echoes its fully resolved configuration to standard
//! error before doing any work, and every output file is a deterministic
//! function of the flags, including the seed. Exit codes: 0 on success,
//! 2 for usage and validation problems, 1 for runtime failures such as io.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use qldpc_core::binary_decoder::{decode_flooding, decode_svns, DecodeTrace, ScheduleSource};
use qldpc_core::channel::prior_llr;
use qldpc_core::code_model::{
    build_bb_code, load_alist, load_manifest_code, registry_code, save_code, BbParams,
};
use qldpc_core::decimation::QuatGdBlockRecord;
use qldpc_core::quaternary_decoder::{
    decode_qbp, decode_qsvns, joint_state_count, train_quat_with, DepolPrior, QuatDecodeResult,
    QuatProblem,
};
use qldpc_core::scheduler_rl::{train_binary_with, TrainProgress};
use qldpc_core::{
    decode_fast, decode_gd, decode_qgd, run_grid, trial_rng, write_csv, BitVec, BpConfig, CssCode,
    DecodeResult, DecoderKind, Error, ExperimentSpec, GdConfig, GdTrace, InnerDecoder,
    NoiseParams, QTable, QuatGdTrace, Result, Schedule, TannerAdjacency, TrainConfig,
    DEFAULT_LLR_CLIP, DEFAULT_MAX_ITERS,
};

#[derive(Parser)]
#[command(name = "qldpc", version, about = "Belief propagation decoding of CSS codes with learned sequential schedules")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct or import a CSS code and write it as an alist pair plus a manifest.
    GenCode(GenCodeArgs),
    /// Learn an update schedule and write the resulting Q-table.
    Train(TrainArgs),
    /// Estimate frame error rates over a grid of physical error rates, written as CSV.
    Eval(EvalArgs),
    /// Decode a single syndrome and print the estimate.
    Decode(DecodeArgs),
    /// Print a Q-table's header and its largest entries.
    InspectQtable(InspectArgs),
}

/// Decoders reachable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DecoderArg {
    Bp,
    Svns,
    RlSvns,
    RlSvnsFast,
    Qbp,
    RlQsvns,
    Bpgd,
    RlSvnsGd,
    Qbpgd,
    RlQsvnsGd,
}

impl DecoderArg {
    fn kind(self) -> DecoderKind {
        match self {
            DecoderArg::Bp => DecoderKind::Bp,
            DecoderArg::Svns => DecoderKind::Svns,
            DecoderArg::RlSvns => DecoderKind::RlSvns,
            DecoderArg::RlSvnsFast => DecoderKind::RlSvnsFast,
            DecoderArg::Qbp => DecoderKind::Qbp,
            DecoderArg::RlQsvns => DecoderKind::RlQsvns,
            DecoderArg::Bpgd => DecoderKind::Bpgd,
            DecoderArg::RlSvnsGd => DecoderKind::RlSvnsGd,
            DecoderArg::Qbpgd => DecoderKind::Qbpgd,
            DecoderArg::RlQsvnsGd => DecoderKind::RlQsvnsGd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ChannelArg {
    Bitflip,
    Depolarizing,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["bb", "toy", "alist_a"])))]
struct GenCodeArgs {
    /// Bivariate bicycle construction: L M POLY_A POLY_B. Polynomials are
    /// sums of monomials like "x3+y+y2"; x exponents are taken modulo L
    /// and y exponents modulo M.
    #[arg(long, num_args = 4, value_names = ["L", "M", "POLY_A", "POLY_B"])]
    bb: Option<Vec<String>>,

    /// Built-in code by name: steane, or toric<d> with 2 <= d <= 64.
    #[arg(long)]
    toy: Option<String>,

    /// Alist file with the stream-a checks. Needs --alist-b.
    #[arg(long, requires = "alist_b")]
    alist_a: Option<PathBuf>,

    /// Alist file with the stream-b checks. Needs --alist-a.
    #[arg(long, requires = "alist_a", conflicts_with_all = ["bb", "toy"])]
    alist_b: Option<PathBuf>,

    /// Directory that receives the alist pair and the manifest.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Code to train on: a registry name or a manifest path.
    #[arg(long)]
    code: String,

    /// Noise model the schedule is trained against.
    #[arg(long, value_enum)]
    channel: ChannelArg,

    /// Training episodes.
    #[arg(long)]
    episodes: Option<usize>,

    /// Comma-separated error rates sampled uniformly per episode.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,

    /// Learning rate.
    #[arg(long)]
    alpha: Option<f64>,

    /// Discount factor.
    #[arg(long)]
    gamma: Option<f64>,

    /// Initial exploration rate.
    #[arg(long)]
    eps0: Option<f64>,

    /// Exploration floor.
    #[arg(long)]
    epsmin: Option<f64>,

    /// Iteration cap per episode.
    #[arg(long)]
    max_iters: Option<usize>,

    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output path for the Q-table.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Code to evaluate: a registry name or a manifest path.
    #[arg(long)]
    code: String,

    #[arg(long, value_enum)]
    decoder: DecoderArg,

    /// Trained Q-table, required by the rl-* decoders.
    #[arg(long)]
    qtable: Option<PathBuf>,

    /// Comma-separated physical error rates.
    #[arg(long, value_delimiter = ',', required = true)]
    p_grid: Vec<f64>,

    /// Frame budget per grid point.
    #[arg(long, default_value_t = 10_000)]
    frames: usize,

    /// Stop a point once this many logical errors have accumulated.
    #[arg(long, num_args = 0..=1, default_missing_value = "100")]
    target_errors: Option<usize>,

    /// Iteration cap per frame.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Worker threads for the per-point trial loop.
    #[arg(long, default_value_t = 1)]
    threads: usize,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    /// Code to decode against: a registry name or a manifest path.
    #[arg(long)]
    code: String,

    #[arg(long, value_enum)]
    decoder: DecoderArg,

    /// Trained Q-table, required by the rl-* decoders.
    #[arg(long)]
    qtable: Option<PathBuf>,

    /// Stream-a syndrome for binary decoders: a 0/1 string, or "len:hex".
    #[arg(long)]
    syndrome: Option<String>,

    /// Stream-a syndrome for quaternary decoders.
    #[arg(long)]
    syndrome_a: Option<String>,

    /// Stream-b syndrome for quaternary decoders.
    #[arg(long)]
    syndrome_b: Option<String>,

    /// Prior physical error rate used to set the channel log-likelihood ratios.
    #[arg(long, default_value_t = 0.05)]
    p: f64,

    /// Iteration cap (per block for the -gd decoders).
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,

    /// Seed for the randomized svns schedule.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Print the step-by-step schedule, or the per-block record for -gd decoders.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct InspectArgs {
    /// Q-table file to inspect.
    #[arg(long)]
    qtable: PathBuf,

    /// How many of the largest-magnitude entries to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                Error::Io { .. } => 1u8,
                _ => 2u8,
            })
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::GenCode(args) => run_gen_code(args),
        Cmd::Train(args) => run_train(args),
        Cmd::Eval(args) => run_eval(args),
        Cmd::Decode(args) => run_decode(args),
        Cmd::InspectQtable(args) => run_inspect(args),
    }
}

fn echo(line: &str) {
    eprintln!("config: {line}");
}

fn resolve_code(arg: &str) -> Result<CssCode> {
    if let Some(code) = registry_code(arg) {
        return Ok(code);
    }
    if !Path::new(arg).exists() {
        return Err(Error::InvalidParam(format!(
            "'{arg}' is neither a built-in code nor a manifest path"
        )));
    }
    load_manifest_code(Path::new(arg))
}

fn load_qtable(path: Option<&Path>) -> Result<Option<QTable>> {
    path.map(QTable::read_file).transpose()
}

fn join_grid(grid: &[f64]) -> String {
    let parts: Vec<String> = grid.iter().map(f64::to_string).collect();
    parts.join(",")
}

fn opt_display<T: std::fmt::Display>(value: Option<T>) -> String {
    value.map_or_else(|| "none".into(), |v| v.to_string())
}

fn run_gen_code(args: GenCodeArgs) -> Result<()> {
    let code = if let Some(raw) = &args.bb {
        bb_from_args(raw)?
    } else if let Some(name) = &args.toy {
        registry_code(name)
            .ok_or_else(|| Error::InvalidParam(format!("unknown built-in code '{name}'")))?
    } else {
        let path_a = args.alist_a.as_ref().expect("clap enforces one source");
        let path_b = args.alist_b.as_ref().expect("clap pairs the alist flags");
        let stem = path_a.file_stem().and_then(|s| s.to_str()).unwrap_or("imported");
        let name = stem.strip_suffix("_a").unwrap_or(stem).to_string();
        CssCode::new(name, load_alist(path_a)?.matrix, load_alist(path_b)?.matrix)?
    };
    echo(&format!(
        "gen-code name={} n={} checks_a={} checks_b={} out={}",
        code.name(),
        code.n(),
        code.h_a().rows(),
        code.h_b().rows(),
        args.out.display()
    ));
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        context: format!("creating {}", args.out.display()),
        source: e,
    })?;
    let manifest = save_code(&args.out, &code)?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn bb_from_args(raw: &[String]) -> Result<CssCode> {
    let l = parse_count(&raw[0], "L")?;
    let m = parse_count(&raw[1], "M")?;
    let params = BbParams {
        l,
        m,
        poly_a: parse_poly(&raw[2], l, m)?,
        poly_b: parse_poly(&raw[3], l, m)?,
    };
    build_bb_code(&format!("bb{l}x{m}"), &params)
}

fn parse_count(text: &str, what: &str) -> Result<usize> {
    match text.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(Error::InvalidParam(format!(
            "{what} must be a positive integer, got '{text}'"
        ))),
    }
}

/// Monomial sum over x and y: terms "1", "x<i>", "y<j>", "x<i>y<j>" joined
/// by '+', with an omitted exponent meaning 1 and x always written first.
fn parse_poly(text: &str, l: usize, m: usize) -> Result<Vec<(u32, u32)>> {
    let bad = |term: &str| {
        Error::InvalidParam(format!("malformed monomial '{term}' in polynomial '{text}'"))
    };
    let exponent = |rest: &str, term: &str| -> Result<(u32, usize)> {
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if end == 0 {
            return Ok((1, 0));
        }
        let value = rest[..end].parse::<u32>().map_err(|_| bad(term))?;
        Ok((value, end))
    };
    let mut terms = Vec::new();
    for raw in text.split('+') {
        let term = raw.trim();
        if term == "1" {
            terms.push((0, 0));
            continue;
        }
        let mut i = 0u32;
        let mut j = 0u32;
        let mut rest = term;
        let mut matched = false;
        if let Some(tail) = rest.strip_prefix('x') {
            let (value, used) = exponent(tail, term)?;
            i = value;
            rest = &tail[used..];
            matched = true;
        }
        if let Some(tail) = rest.strip_prefix('y') {
            let (value, used) = exponent(tail, term)?;
            j = value;
            rest = &tail[used..];
            matched = true;
        }
        if !matched || !rest.is_empty() {
            return Err(bad(term));
        }
        terms.push(((i as usize % l) as u32, (j as usize % m) as u32));
    }
    Ok(terms)
}

fn run_train(args: TrainArgs) -> Result<()> {
    let code = resolve_code(&args.code)?;
    let base = TrainConfig::default();
    let cfg = TrainConfig {
        episodes: args.episodes.unwrap_or(base.episodes),
        p_grid: args.grid.unwrap_or(base.p_grid),
        alpha: args.alpha.unwrap_or(base.alpha),
        gamma: args.gamma.unwrap_or(base.gamma),
        eps0: args.eps0.unwrap_or(base.eps0),
        eps_min: args.epsmin.unwrap_or(base.eps_min),
        max_iters: args.max_iters.unwrap_or(base.max_iters),
        llr_clip: base.llr_clip,
        seed: args.seed,
    };
    let channel = match args.channel {
        ChannelArg::Bitflip => "bitflip",
        ChannelArg::Depolarizing => "depolarizing",
    };
    echo(&format!(
        "train code={} channel={} episodes={} grid={} alpha={} gamma={} eps0={} epsmin={} \
         max-iters={} llr-clip={} seed={} out={}",
        code.name(),
        channel,
        cfg.episodes,
        join_grid(&cfg.p_grid),
        cfg.alpha,
        cfg.gamma,
        cfg.eps0,
        cfg.eps_min,
        cfg.max_iters,
        cfg.llr_clip,
        cfg.seed,
        args.out.display()
    ));
    let progress = |p: TrainProgress| {
        eprintln!("episodes {} window-converged {:.3}", p.episodes_done, p.window_converged);
    };
    let adj_a = TannerAdjacency::from_matrix(code.h_a());
    let table = match args.channel {
        ChannelArg::Bitflip => train_binary_with(&adj_a, &cfg, progress)?,
        ChannelArg::Depolarizing => {
            let adj_b = TannerAdjacency::from_matrix(code.h_b());
            train_quat_with(&adj_a, &adj_b, &cfg, progress)?
        }
    };
    table.write_file(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let code = resolve_code(&args.code)?;
    let table = load_qtable(args.qtable.as_deref())?;
    let kind = args.decoder.kind();
    echo(&format!(
        "eval code={} decoder={} p-grid={} frames={} target-errors={} max-iters={} llr-clip={} \
         seed={} threads={} qtable={} out={}",
        code.name(),
        kind,
        join_grid(&args.p_grid),
        args.frames,
        opt_display(args.target_errors),
        args.max_iters,
        DEFAULT_LLR_CLIP,
        args.seed,
        args.threads,
        opt_display(args.qtable.as_deref().map(Path::display)),
        args.out.display()
    ));
    let spec = ExperimentSpec {
        code: &code,
        decoder: kind,
        grid: args.p_grid,
        frames: args.frames,
        target_errors: args.target_errors,
        master_seed: args.seed,
        max_iters: args.max_iters,
        llr_clip: DEFAULT_LLR_CLIP,
        qtable: table.as_ref(),
        threads: args.threads,
    };
    let points = run_grid(&spec)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, code.name(), kind, &points)?;
    fs::write(&args.out, &buf).map_err(|e| Error::Io {
        context: format!("writing {}", args.out.display()),
        source: e,
    })?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Bits from "0101..." or from "len:hex", where the hex expands MSB-first
/// and may carry up to three zero padding bits at the front.
fn parse_syndrome(text: &str, expected: usize, what: &str) -> Result<BitVec> {
    let bits: Vec<bool> = if let Some((len_text, hex_text)) = text.split_once(':') {
        let len = len_text.trim().parse::<usize>().map_err(|_| {
            Error::InvalidParam(format!("{what}: bad length prefix in '{text}'"))
        })?;
        let hex = hex_text.trim();
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        if hex.is_empty() || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(Error::InvalidParam(format!(
                "{what}: '{hex}' is not a hex string"
            )));
        }
        let mut expanded = Vec::with_capacity(hex.len() * 4);
        for c in hex.chars() {
            let nibble = c.to_digit(16).expect("hex digits were checked");
            for k in (0..4).rev() {
                expanded.push(nibble >> k & 1 == 1);
            }
        }
        if expanded.len() < len || expanded.len() - len >= 4 {
            return Err(Error::InvalidParam(format!(
                "{what}: {} hex digits cannot encode {len} bits",
                hex.len()
            )));
        }
        let pad = expanded.len() - len;
        if expanded[..pad].iter().any(|&b| b) {
            return Err(Error::InvalidParam(format!(
                "{what}: nonzero padding bits for length {len}"
            )));
        }
        expanded.split_off(pad)
    } else {
        if text.is_empty() || !text.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::InvalidParam(format!(
                "{what}: '{text}' is neither a 0/1 string nor len:hex"
            )));
        }
        text.chars().map(|c| c == '1').collect()
    };
    if bits.len() != expected {
        return Err(Error::InvalidParam(format!(
            "{what} carries {} bits, the code has {expected} checks",
            bits.len()
        )));
    }
    Ok(BitVec::from_bools(&bits))
}

/// Variant, size, and state coverage checks for decoders that take a table.
fn check_decode_table(kind: DecoderKind, table: Option<&QTable>, code: &CssCode) -> Result<()> {
    let Some(want) = kind.qtable_variant() else {
        return Ok(());
    };
    let table =
        table.ok_or_else(|| Error::QTable(format!("decoder {kind} needs a Q-table")))?;
    if table.variant() != want {
        return Err(Error::QTable(format!(
            "decoder {kind} needs a {} table, got {}",
            want.tag(),
            table.variant().tag()
        )));
    }
    if table.n() != code.n() {
        return Err(Error::QTable(format!(
            "table indexes {} variables, code has {}",
            table.n(),
            code.n()
        )));
    }
    let adj_a = TannerAdjacency::from_matrix(code.h_a());
    let states = if kind.is_quaternary() {
        joint_state_count(&adj_a, &TannerAdjacency::from_matrix(code.h_b()))
    } else {
        adj_a.state_count()
    };
    if table.s_max() < states {
        return Err(Error::QTable(format!(
            "table covers {} states, code needs {}",
            table.s_max(),
            states
        )));
    }
    Ok(())
}

fn run_decode(args: DecodeArgs) -> Result<()> {
    let code = resolve_code(&args.code)?;
    let kind = args.decoder.kind();
    let table = load_qtable(args.qtable.as_deref())?;
    check_decode_table(kind, table.as_ref(), &code)?;

    let syndrome_echo = if kind.is_quaternary() {
        if args.syndrome.is_some() {
            return Err(Error::InvalidParam(format!(
                "decoder {kind} takes --syndrome-a and --syndrome-b, not --syndrome"
            )));
        }
        format!(
            "syndrome-a={} syndrome-b={}",
            opt_display(args.syndrome_a.as_deref()),
            opt_display(args.syndrome_b.as_deref())
        )
    } else {
        if args.syndrome_a.is_some() || args.syndrome_b.is_some() {
            return Err(Error::InvalidParam(format!(
                "decoder {kind} takes --syndrome, not the stream pair"
            )));
        }
        format!("syndrome={}", opt_display(args.syndrome.as_deref()))
    };
    echo(&format!(
        "decode code={} decoder={} qtable={} {} p={} max-iters={} llr-clip={} seed={} verbose={}",
        code.name(),
        kind,
        opt_display(args.qtable.as_deref().map(Path::display)),
        syndrome_echo,
        args.p,
        args.max_iters,
        DEFAULT_LLR_CLIP,
        args.seed,
        args.verbose
    ));

    let bp = BpConfig {
        max_iters: args.max_iters,
        llr_clip: DEFAULT_LLR_CLIP,
        schedule: match kind {
            DecoderKind::Bp | DecoderKind::Qbp => Schedule::Flooding,
            DecoderKind::Svns => Schedule::RandomSvns,
            _ => Schedule::GreedyRlSvns,
        },
    };
    let gd = GdConfig {
        inner: if kind.qtable_variant().is_some() {
            InnerDecoder::GreedyRlSvns
        } else {
            InnerDecoder::Flooding
        },
        inner_iters: args.max_iters,
        ..GdConfig::default()
    };
    if kind.is_quaternary() {
        decode_quaternary(&args, kind, table.as_ref(), &code, &bp, &gd)
    } else {
        decode_binary(&args, kind, table.as_ref(), &code, &bp, &gd)
    }
}

fn decode_binary(
    args: &DecodeArgs,
    kind: DecoderKind,
    table: Option<&QTable>,
    code: &CssCode,
    bp: &BpConfig,
    gd: &GdConfig,
) -> Result<()> {
    let adj = TannerAdjacency::from_matrix(code.h_a());
    let text = args.syndrome.as_deref().ok_or_else(|| {
        Error::InvalidParam(format!("decoder {kind} needs --syndrome"))
    })?;
    let syndrome = parse_syndrome(text, adj.n_checks(), "--syndrome")?;
    if !(args.p > 0.0 && args.p < 0.5) {
        return Err(Error::InvalidParam(format!(
            "bit-flip rate {} outside (0, 0.5)",
            args.p
        )));
    }
    let priors = vec![prior_llr(&NoiseParams::BitFlip { p: args.p }); code.n()];
    let mut trace = args.verbose.then(DecodeTrace::new);
    let mut gd_trace = args.verbose.then(GdTrace::default);
    let out: DecodeResult = match kind {
        DecoderKind::Bp => decode_flooding(&adj, &syndrome, &priors, bp),
        DecoderKind::Svns => {
            let mut rng = trial_rng(args.seed, 0, 0);
            let mut src = ScheduleSource::Random(&mut rng);
            decode_svns(&adj, &syndrome, &priors, bp, &mut src, trace.as_mut())
        }
        DecoderKind::RlSvns => {
            let mut src = ScheduleSource::Greedy(table.expect("validated before dispatch"));
            decode_svns(&adj, &syndrome, &priors, bp, &mut src, trace.as_mut())
        }
        DecoderKind::RlSvnsFast => decode_fast(
            &adj,
            table.expect("validated before dispatch"),
            &syndrome,
            &priors,
            bp,
            trace.as_mut(),
        ),
        DecoderKind::Bpgd | DecoderKind::RlSvnsGd => {
            let q = kind.qtable_variant().and(table);
            let out = decode_gd(&adj, q, &syndrome, &priors, gd, gd_trace.as_mut());
            println!("estimate {}", out.e_hat);
            println!("converged {}", out.converged);
            println!("iterations {}", out.iterations);
            println!("decimations {}", out.decimations);
            if let Some(t) = &gd_trace {
                for (k, block) in t.blocks.iter().enumerate() {
                    let frozen = block
                        .frozen
                        .map_or_else(|| "none".into(), |(v, bit)| format!("{v}={}", bit as u8));
                    println!(
                        "block {k} iterations {} w {} froze {frozen}",
                        block.iterations, block.w_after
                    );
                }
            }
            return Ok(());
        }
        _ => unreachable!("quaternary kinds are dispatched separately"),
    };
    println!("estimate {}", out.e_hat);
    println!("converged {}", out.converged);
    println!("iterations {}", out.iterations);
    print_steps(trace.as_ref());
    Ok(())
}

fn decode_quaternary(
    args: &DecodeArgs,
    kind: DecoderKind,
    table: Option<&QTable>,
    code: &CssCode,
    bp: &BpConfig,
    gd: &GdConfig,
) -> Result<()> {
    let adj_a = TannerAdjacency::from_matrix(code.h_a());
    let adj_b = TannerAdjacency::from_matrix(code.h_b());
    let text_a = args.syndrome_a.as_deref().ok_or_else(|| {
        Error::InvalidParam(format!("decoder {kind} needs --syndrome-a"))
    })?;
    let text_b = args.syndrome_b.as_deref().ok_or_else(|| {
        Error::InvalidParam(format!("decoder {kind} needs --syndrome-b"))
    })?;
    let s_a = parse_syndrome(text_a, adj_a.n_checks(), "--syndrome-a")?;
    let s_b = parse_syndrome(text_b, adj_b.n_checks(), "--syndrome-b")?;
    let prior = DepolPrior::new(args.p)?;
    let stream_priors = vec![prior.mu_dep; code.n()];
    let prob = QuatProblem {
        adj_a: &adj_a,
        adj_b: &adj_b,
        s_a: &s_a,
        s_b: &s_b,
        priors_a: &stream_priors,
        priors_b: &stream_priors,
        prior: &prior,
    };
    let mut trace = args.verbose.then(DecodeTrace::new);
    let out: QuatDecodeResult = match kind {
        DecoderKind::Qbp => decode_qbp(&prob, bp),
        DecoderKind::RlQsvns => {
            let mut src = ScheduleSource::Greedy(table.expect("validated before dispatch"));
            decode_qsvns(&prob, bp, &mut src, trace.as_mut())
        }
        DecoderKind::Qbpgd | DecoderKind::RlQsvnsGd => {
            let q = kind.qtable_variant().and(table);
            let mut gd_trace = args.verbose.then(QuatGdTrace::default);
            let out = decode_qgd(&prob, q, gd, gd_trace.as_mut());
            print_pauli_estimate(&out.qhat, &out.frame.e_a, &out.frame.e_b);
            println!("converged {}", out.converged);
            println!("iterations {}", out.iterations);
            println!("decimations {}", out.decimations);
            if let Some(t) = &gd_trace {
                print_quat_blocks(&t.blocks);
            }
            return Ok(());
        }
        _ => unreachable!("binary kinds are dispatched separately"),
    };
    print_pauli_estimate(&out.qhat, &out.frame.e_a, &out.frame.e_b);
    println!("converged {}", out.converged);
    println!("iterations {}", out.iterations);
    print_steps(trace.as_ref());
    Ok(())
}

fn print_pauli_estimate(
    qhat: &[qldpc_core::quaternary_decoder::Pauli],
    e_a: &BitVec,
    e_b: &BitVec,
) {
    let paulis: String = qhat.iter().map(ToString::to_string).collect();
    println!("estimate {paulis}");
    println!("estimate-a {e_a}");
    println!("estimate-b {e_b}");
}

fn print_steps(trace: Option<&DecodeTrace>) {
    if let Some(t) = trace {
        for (k, step) in t.steps.iter().enumerate() {
            println!(
                "step {k} var {} flipped {} w {}",
                step.action, step.flipped, step.w_after
            );
        }
    }
}

fn print_quat_blocks(blocks: &[QuatGdBlockRecord]) {
    for (k, block) in blocks.iter().enumerate() {
        let frozen = block
            .frozen
            .map_or_else(|| "none".into(), |(v, q)| format!("{v}={q}"));
        println!(
            "block {k} iterations {} w {} froze {frozen}",
            block.iterations, block.w_after
        );
    }
}

fn run_inspect(args: InspectArgs) -> Result<()> {
    echo(&format!(
        "inspect-qtable qtable={} top={}",
        args.qtable.display(),
        args.top
    ));
    let table = QTable::read_file(&args.qtable)?;
    let mut entries = table.entries();
    entries.sort_by(|a, b| {
        b.2.abs()
            .total_cmp(&a.2.abs())
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    println!("variant {}", table.variant().tag());
    println!("s-max {}", table.s_max());
    println!("n {}", table.n());
    println!("entries {}", entries.len());
    let width = state_bit_width(table.s_max());
    for (sigma, action, value) in entries.into_iter().take(args.top) {
        println!("{sigma:0width$b} {action} {value}");
    }
    Ok(())
}

/// Digits needed to print every state below s_max in binary, at least one.
fn state_bit_width(s_max: u64) -> usize {
    match s_max {
        0 | 1 => 1,
        s => 64 - (s - 1).leading_zeros() as usize,
    }
}
