//! `transition` and `paint`: option merging, sweeps, and run artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use evoimage_core::features::{GcfWeights, GCF_CONVENTION, LUMA_CONVENTION};
use evoimage_core::{
    run_painting, run_transition, Frame, OperatorConfig, OperatorKind, RasterImage, RgbPixel,
    RunConfig, RunMode, RunSink, RunTrace, SinkError, DEFAULT_MILESTONES, PRNG_ID,
};
use rayon::prelude::*;

use crate::args::{CommonRunArgs, PaintArgs, TransitionArgs};
use crate::config::{format_sig, KvFile, KvWriter};
use crate::error::CliError;
use crate::imageio::{load_png, save_png};

pub const OUT_ROOT_ENV: &str = "EVOIMAGE_OUT";
pub const TRACE_HEADER: &str = "generation,fitness,fraction_target,benford,gcf,hue,colorfulness";
pub const FRAME_DIR: &str = "frames";

const TRANSITION_KEYS: &[&str] = &[
    "command", "src", "dst", "op", "cs", "ct", "alpha", "tmax", "tau", "seed", "max_gen",
    "frame_every", "feature_every", "milestones", "tail_completion",
];
const PAINT_KEYS: &[&str] = &[
    "command", "src", "dst", "cs", "alpha", "tmax", "seed", "max_gen", "frame_every",
    "feature_every", "milestones", "repaint",
];

/// Fully merged options of one `transition` or `paint` invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub mode: RunMode,
    pub src: Option<PathBuf>,
    pub dst: PathBuf,
    pub op: OperatorKind,
    pub cs: f64,
    pub ct: f64,
    pub alphas: Vec<f64>,
    pub tmaxes: Vec<u64>,
    pub tau: u64,
    pub seed: u64,
    pub max_gen: u64,
    pub frame_every: u64,
    pub feature_every: u64,
    pub milestones: Vec<f64>,
    pub tail_completion: bool,
    pub repaint: bool,
    pub out: PathBuf,
}

fn command_name(mode: RunMode) -> &'static str {
    match mode {
        RunMode::Transition => "transition",
        RunMode::Painting => "paint",
    }
}

fn load_config(path: Option<&Path>, mode: RunMode) -> Result<(KvFile, PathBuf), CliError> {
    let Some(path) = path else {
        return Ok((KvFile::default(), PathBuf::new()));
    };
    let kv = KvFile::load(path)?;
    let keys = match mode {
        RunMode::Transition => TRANSITION_KEYS,
        RunMode::Painting => PAINT_KEYS,
    };
    kv.check_keys(keys)?;
    if let Some(cmd) = kv.get("command") {
        if cmd != command_name(mode) {
            return Err(CliError::Usage(format!(
                "config is for `{cmd}`, not `{}`",
                command_name(mode)
            )));
        }
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((kv, base))
}

fn list_or<T: Clone>(flag: Vec<T>, config: Vec<T>, default: T) -> Vec<T> {
    if !flag.is_empty() {
        flag
    } else if !config.is_empty() {
        config
    } else {
        vec![default]
    }
}

fn resolve_common(
    mode: RunMode,
    args: CommonRunArgs,
    kv: &KvFile,
    base: &Path,
) -> Result<RunSettings, CliError> {
    let config_path = |key: &str| kv.get(key).map(|p| base.join(p));
    let (default_cs, default_tmax) = match mode {
        RunMode::Transition => (100.0, 100),
        RunMode::Painting => (200.0, 500),
    };
    let dst = args
        .dst
        .or_else(|| config_path("dst"))
        .ok_or_else(|| CliError::Usage("missing --dst target image".into()))?;
    let seed = match args.seed {
        Some(s) => s,
        None => kv.parsed("seed")?.unwrap_or(0),
    };
    let out = match args.out {
        Some(o) => o,
        None => std::env::var_os(OUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(format!("{}-seed{seed}", command_name(mode))),
    };
    let milestones = if !args.milestones.is_empty() {
        args.milestones
    } else if kv.get("milestones").is_some() {
        kv.parsed_list("milestones")?
    } else {
        DEFAULT_MILESTONES.to_vec()
    };
    Ok(RunSettings {
        mode,
        src: args.src.or_else(|| config_path("src")),
        dst,
        op: match mode {
            RunMode::Transition => OperatorKind::Asym,
            RunMode::Painting => OperatorKind::BiasedWalk,
        },
        cs: match args.cs {
            Some(v) => v,
            None => kv.parsed("cs")?.unwrap_or(default_cs),
        },
        ct: 50.0,
        alphas: list_or(args.alpha, kv.parsed_list("alpha")?, 1.0),
        tmaxes: list_or(args.tmax, kv.parsed_list("tmax")?, default_tmax),
        tau: 1,
        seed,
        max_gen: match args.max_gen {
            Some(v) => v,
            None => kv.parsed("max_gen")?.unwrap_or(1_000_000),
        },
        frame_every: match args.frame_every {
            Some(v) => v,
            None => kv.parsed("frame_every")?.unwrap_or(100),
        },
        feature_every: match args.feature_every {
            Some(v) => v,
            None => kv.parsed("feature_every")?.unwrap_or(0),
        },
        milestones,
        tail_completion: true,
        repaint: false,
        out,
    })
}

pub fn resolve_transition(args: TransitionArgs) -> Result<RunSettings, CliError> {
    let (kv, base) = load_config(args.common.config.as_deref(), RunMode::Transition)?;
    let mut s = resolve_common(RunMode::Transition, args.common, &kv, &base)?;
    let op = args.op.or_else(|| kv.get("op").map(str::to_string));
    if let Some(op) = op {
        s.op = op
            .parse()
            .map_err(|e: evoimage_core::OperatorError| CliError::Usage(e.to_string()))?;
    }
    s.ct = match args.ct {
        Some(v) => v,
        None => kv.parsed("ct")?.unwrap_or(50.0),
    };
    s.tau = match args.tau {
        Some(v) => v,
        None => kv.parsed("tau")?.unwrap_or(1),
    };
    s.tail_completion = if args.no_tail_completion {
        false
    } else {
        kv.parsed("tail_completion")?.unwrap_or(true)
    };
    Ok(s)
}

pub fn resolve_paint(args: PaintArgs) -> Result<RunSettings, CliError> {
    let (kv, base) = load_config(args.common.config.as_deref(), RunMode::Painting)?;
    let mut s = resolve_common(RunMode::Painting, args.common, &kv, &base)?;
    s.repaint = args.repaint || kv.parsed("repaint")?.unwrap_or(false);
    Ok(s)
}

impl RunSettings {
    fn run_config(&self, alpha: f64, t_max: u64) -> RunConfig {
        let operator = OperatorConfig {
            kind: self.op,
            c_s: self.cs,
            c_t: self.ct,
            alpha,
            t_max,
            tau: self.tau,
            repaint: self.repaint,
        };
        RunConfig {
            mode: self.mode,
            operator,
            seed: self.seed,
            max_generations: self.max_gen,
            frame_every: self.frame_every,
            feature_every: self.feature_every,
            milestones: self.milestones.clone(),
            tail_completion: self.tail_completion,
        }
    }

    /// `(alpha, t_max, output dir)` for every point of the sweep.
    pub fn sweep_points(&self) -> Vec<(f64, u64, PathBuf)> {
        let single = self.alphas.len() * self.tmaxes.len() == 1;
        let mut points = Vec::new();
        for &alpha in &self.alphas {
            for &t_max in &self.tmaxes {
                let dir = if single {
                    self.out.clone()
                } else {
                    let mut parts = Vec::new();
                    if self.alphas.len() > 1 {
                        parts.push(format!("alpha-{alpha}"));
                    }
                    if self.tmaxes.len() > 1 {
                        parts.push(format!("tmax-{t_max}"));
                    }
                    self.out.join(parts.join("_"))
                };
                points.push((alpha, t_max, dir));
            }
        }
        points
    }
}

/// Writes frames as `frames/g<generation, 10 digits>.png`.
struct FrameWriter {
    dir: PathBuf,
    files: Vec<String>,
}

impl RunSink for FrameWriter {
    fn frame(&mut self, frame: &Frame<'_>) -> Result<(), SinkError> {
        let name = frame_file_name(frame.generation);
        save_png(&self.dir.join(&name), frame.image).map_err(|e| Box::new(e) as SinkError)?;
        self.files.push(name);
        Ok(())
    }
}

pub fn frame_file_name(generation: u64) -> String {
    format!("g{generation:010}.png")
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Trace rows as CSV; feature columns are empty where not evaluated.
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::with_capacity(trace.rows.len() * 48);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in &trace.rows {
        let _ = write!(
            out,
            "{},{},{}",
            row.generation,
            row.fitness,
            format_sig(row.fraction_target, 9)
        );
        match &row.features {
            Some(f) => {
                for v in [f.benford, f.gcf, f.hue, f.colorfulness] {
                    out.push(',');
                    out.push_str(&format_sig(v, 9));
                }
            }
            None => out.push_str(",,,,"),
        }
        out.push('\n');
    }
    out
}

fn milestones_csv(trace: &RunTrace, files: &[String]) -> String {
    let mut out = String::from("fraction,generation,frame_id,frame\n");
    for m in &trace.milestones {
        let file = files.get(m.frame_id as usize).map(String::as_str).unwrap_or("");
        let _ = writeln!(
            out,
            "{},{},{},{FRAME_DIR}/{file}",
            format_sig(m.fraction, 9),
            m.generation,
            m.frame_id
        );
    }
    out
}

fn clear_old_frames(dir: &Path) -> Result<(), CliError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(CliError::io(dir, e)),
    };
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with('g') && name.ends_with(".png") {
            fs::remove_file(entry.path()).map_err(|e| CliError::io(entry.path(), e))?;
        }
    }
    Ok(())
}

fn absolute(path: &Path) -> PathBuf {
    fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub trace: RunTrace,
}

fn execute_point(
    settings: &RunSettings,
    alpha: f64,
    t_max: u64,
    dir: &Path,
    source: &RasterImage,
    target: &RasterImage,
) -> Result<RunOutcome, CliError> {
    let frames_dir = dir.join(FRAME_DIR);
    clear_old_frames(&frames_dir)?;
    fs::create_dir_all(&frames_dir).map_err(|e| CliError::io(&frames_dir, e))?;
    let cfg = settings.run_config(alpha, t_max);
    let started = unix_now();
    let mut sink = FrameWriter {
        dir: frames_dir,
        files: Vec::new(),
    };
    let (final_image, trace) = match settings.mode {
        RunMode::Transition => run_transition(source, target, &cfg, &mut sink),
        RunMode::Painting => run_painting(source, target, &cfg, &mut sink),
    }
    .map_err(|e| match e {
        evoimage_core::EngineError::Sink(inner) => match inner.downcast::<CliError>() {
            Ok(cli) => *cli,
            Err(other) => CliError::Engine(evoimage_core::EngineError::Sink(other)),
        },
        other => CliError::Engine(other),
    })?;
    let finished = unix_now();

    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| CliError::io(&p, e))
    };
    save_png(&dir.join("final.png"), &final_image)?;
    write("trace.csv", &trace_csv(&trace))?;
    write("milestones.csv", &milestones_csv(&trace, &sink.files))?;

    let mut m = KvWriter::default();
    m.put("command", command_name(settings.mode));
    if let Some(src) = &settings.src {
        m.put("src", absolute(src).display());
    }
    m.put("dst", absolute(&settings.dst).display());
    if settings.mode == RunMode::Transition {
        m.put("op", settings.op);
    }
    m.put("cs", settings.cs);
    if settings.mode == RunMode::Transition {
        m.put("ct", settings.ct);
    }
    m.put("alpha", alpha).put("tmax", t_max);
    if settings.mode == RunMode::Transition {
        m.put("tau", settings.tau);
    }
    m.put("seed", settings.seed)
        .put("max_gen", settings.max_gen)
        .put("frame_every", settings.frame_every)
        .put("feature_every", settings.feature_every)
        .put(
            "milestones",
            settings
                .milestones
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
    match settings.mode {
        RunMode::Transition => m.put("tail_completion", settings.tail_completion),
        RunMode::Painting => m.put("repaint", settings.repaint),
    };
    let weights = GcfWeights::default()
        .weights
        .iter()
        .map(|w| format_sig(*w, 9))
        .collect::<Vec<_>>()
        .join(",");
    m.put("meta.engine_version", env!("CARGO_PKG_VERSION"))
        .put("meta.prng", PRNG_ID)
        .put("meta.luminance", LUMA_CONVENTION)
        .put("meta.gcf", GCF_CONVENTION)
        .put("meta.gcf_weights", weights)
        .put("meta.hue", "hsv hue/360, achromatic=0, red=0, arithmetic mean")
        .put("meta.paint_sweep", "row-major, live source check, |X|_S at generation start")
        .put("meta.out", dir.display())
        .put("meta.started_unix", started)
        .put("meta.finished_unix", finished)
        .put("meta.status", trace.status.as_str())
        .put("meta.generations", trace.generations)
        .put("meta.accepted_ratio", format_sig(trace.accepted_ratio(), 9))
        .put("output.final", "final.png")
        .put("output.trace", "trace.csv")
        .put("output.milestones", "milestones.csv")
        .put("output.frame_dir", FRAME_DIR)
        .put("output.frames", sink.files.len());
    write("manifest.txt", &m.finish())?;

    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        trace,
    })
}

/// Runs every sweep point; independent points run in parallel.
pub fn execute(settings: &RunSettings) -> Result<Vec<RunOutcome>, CliError> {
    let target = load_png(&settings.dst)?;
    let source = match (&settings.src, settings.mode) {
        (Some(p), _) => load_png(p)?,
        (None, RunMode::Painting) => RasterImage::filled(target.width(), target.height(), RgbPixel::WHITE)?,
        (None, RunMode::Transition) => {
            return Err(CliError::Usage("missing --src starting image".into()))
        }
    };
    source.ensure_same_dims(&target)?;
    // reject bad parameters before any output is written
    for (alpha, t_max, _) in settings.sweep_points() {
        settings
            .run_config(alpha, t_max)
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let points = settings.sweep_points();
    points
        .par_iter()
        .map(|(alpha, t_max, dir)| {
            let outcome = execute_point(settings, *alpha, *t_max, dir, &source, &target)?;
            eprintln!(
                "{}: {} after {} generations",
                dir.display(),
                outcome.trace.status.as_str(),
                outcome.trace.generations
            );
            Ok(outcome)
        })
        .collect()
}
