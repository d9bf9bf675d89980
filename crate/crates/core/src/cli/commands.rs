use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::document::{
    parse_document, serialize_document, DocError, Document, Meta, ParseOptions, Payload, Report,
};
use crate::arzela_ascoli::{converse_compactness_witness, extract_uniform_subsequence, ExtractionReport};
use crate::delta_plus::{pointwise_sup, quantize, CdfSampler, StepCdf};
use crate::levy_metric::{levy_distance, LevyConfig};
use crate::prob_lipschitz::{
    delta_embed, gen_lipschitz_maps, is_one_lipschitz, is_one_lipschitz_on,
    upper_envelope_extension, LipschitzMap,
};
use crate::prob_metric_space::{gen_space, star_of, ProbMetricSpace, SpaceModel};
use crate::triangle_functions::{check_triangle_axioms, sup_convolution, TNorm};

const EXTRACT_HELP: &str = "\
Extraction buckets the maps point by point. The number of maps needed
grows roughly like (buckets per point)^(points); when a refinement step
leaves a single map the command fails with InsufficientSequence and a
longer sequence is required.";

#[derive(Debug, Parser)]
#[command(name = "pms", version, about = "Probabilistic metric space toolkit")]
struct Cli {
    /// t-norm: min, prod or luka. Overrides the t-norm stored in space files.
    #[arg(long, global = true)]
    tnorm: Option<String>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct BisectArgs {
    /// Bisection tolerance for the Levy distance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Modified Levy distance between two .cdf files, to 10 decimals.
    Dl {
        f: PathBuf,
        g: PathBuf,
        #[command(flatten)]
        bisect: BisectArgs,
    },
    /// Sup-convolution F *_T G.
    Conv { f: PathBuf, g: PathBuf },
    /// Pointwise supremum of one or more .cdf files.
    Sup {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Snap a .cdf onto the lattice of step --eps.
    Quantize {
        f: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Grid check of the t-norm axioms.
    CheckTnorm {
        #[arg(long, default_value_t = 64)]
        steps: u32,
    },
    /// Triangle-function axioms of the sup-convolution on random triples.
    CheckStar {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        count: usize,
        /// Comparison tolerance for the equational axioms.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Validate a .pms space file and print the per-axiom report.
    CheckSpace { space: PathBuf },
    /// Check that a .map is 1-Lipschitz on its domain.
    CheckLip { space: PathBuf, map: PathBuf },
    /// Upper-envelope extension of a partial .map to the whole space.
    Extend { space: PathBuf, map: PathBuf },
    /// The map y -> D(y, x) for --point x.
    EmbedDelta {
        space: PathBuf,
        #[arg(long)]
        point: usize,
    },
    /// Greedy covering net for the strong neighborhoods of radius --eps.
    Net {
        space: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Extract a uniformly clustered subsequence from a .seq of maps.
    #[command(after_help = EXTRACT_HELP)]
    Extract {
        space: PathBuf,
        maps: PathBuf,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        bisect: BisectArgs,
    },
    /// Extract from the embedded point sequence and check that the points cluster.
    #[command(after_help = EXTRACT_HELP)]
    Converse {
        space: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Comma-separated point indices.
        #[arg(long, value_delimiter = ',', conflicts_with = "walk")]
        points: Vec<usize>,
        /// Length of a seeded random walk over the points.
        #[arg(long, requires = "seed")]
        walk: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        bisect: BisectArgs,
    },
    /// Seeded generators.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// A random space that passes validation.
    Space {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        n: usize,
        /// metric or repair.
        #[arg(long, default_value = "metric")]
        model: String,
    },
    /// A random distance distribution function.
    Cdf {
        #[arg(long)]
        seed: u64,
    },
    /// A sequence of certified 1-Lipschitz maps on a space.
    Lip {
        space: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
}

enum Failure {
    /// Exit code 2.
    Usage(String),
    /// Exit code 1.
    Check(String),
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        match e {
            DocError::Validation(_) => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<Vec<u8>, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn check(msg: impl Into<String>) -> Failure {
    Failure::Check(msg.into())
}

struct Ctx {
    tnorm: Option<TNorm>,
}

impl Ctx {
    fn tnorm(&self) -> TNorm {
        self.tnorm.clone().unwrap_or(TNorm::Minimum)
    }

    fn load(&self, path: &Path) -> Result<Document, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        parse_document(&text, &ParseOptions { tnorm: self.tnorm.clone() })
            .map_err(|e| match e {
                DocError::Validation(m) => check(format!("{}: {m}", path.display())),
                other => usage(format!("{}: {other}", path.display())),
            })
    }

    fn load_cdf(&self, path: &Path) -> Result<StepCdf, Failure> {
        match self.load(path)?.payload {
            Payload::Cdf(f) => Ok(f),
            _ => Err(usage(format!("{}: expected a cdf document", path.display()))),
        }
    }

    fn load_space(&self, path: &Path) -> Result<ProbMetricSpace, Failure> {
        match self.load(path)?.payload {
            Payload::Space(s) => Ok(s),
            _ => Err(usage(format!("{}: expected a space document", path.display()))),
        }
    }

    fn load_map(&self, path: &Path) -> Result<(Vec<usize>, Vec<StepCdf>), Failure> {
        match self.load(path)?.payload {
            Payload::Map { domain, values } => Ok((domain, values)),
            _ => Err(usage(format!("{}: expected a map document", path.display()))),
        }
    }
}

fn levy_config(tol: f64) -> Result<LevyConfig, Failure> {
    let need = if tol > 0.0 { (1.0 / tol).log2().ceil().max(0.0) as u32 } else { 0 };
    LevyConfig::new(tol, need.max(60)).map_err(|e| usage(e.to_string()))
}

fn emit(payload: Payload, meta: Meta) -> CmdResult {
    Ok(serialize_document(&Document::new(payload, meta)).into_bytes())
}

fn certify_all(space: &ProbMetricSpace, maps: Vec<Vec<StepCdf>>) -> Result<Vec<LipschitzMap>, Failure> {
    maps.into_iter()
        .enumerate()
        .map(|(i, m)| {
            LipschitzMap::certify(space, m).map_err(|e| check(format!("map {i}: {e}")))
        })
        .collect()
}

fn extraction_report(command: &str, r: &ExtractionReport, cauchy_ok: Option<bool>) -> Report {
    Report {
        command: command.to_string(),
        eps: r.eps,
        selected: r.selected.clone(),
        residuals: r.residuals.clone(),
        pairwise_dinf: Some(r.pairwise_dinf),
        lipschitz_ok: Some(r.lipschitz_ok),
        cauchy_ok,
        success: r.success() && cauchy_ok.unwrap_or(true),
        limit: Some(r.limit.clone()),
    }
}

fn execute(cli: Cli) -> CmdResult {
    let tnorm = cli
        .tnorm
        .as_deref()
        .map(TNorm::from_name)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    let ctx = Ctx { tnorm };
    match cli.command {
        Command::Dl { f, g, bisect } => {
            let cfg = levy_config(bisect.tol)?;
            let d = levy_distance(&ctx.load_cdf(&f)?, &ctx.load_cdf(&g)?, &cfg);
            Ok(format!("{d:.10}\n").into_bytes())
        }
        Command::Conv { f, g } => {
            let h = sup_convolution(&ctx.tnorm(), &ctx.load_cdf(&f)?, &ctx.load_cdf(&g)?);
            emit(Payload::Cdf(h), Meta::default())
        }
        Command::Sup { files } => {
            let family = files
                .iter()
                .map(|p| ctx.load_cdf(p))
                .collect::<Result<Vec<_>, _>>()?;
            let s = pointwise_sup(&family).map_err(|e| usage(e.to_string()))?;
            emit(Payload::Cdf(s), Meta::default())
        }
        Command::Quantize { f, eps } => {
            let q = quantize(&ctx.load_cdf(&f)?, eps).map_err(|e| usage(e.to_string()))?;
            emit(Payload::Cdf(q), Meta::default())
        }
        Command::CheckTnorm { steps } => {
            if steps == 0 {
                return Err(usage("--steps must be positive"));
            }
            let t = ctx.tnorm();
            t.grid_check(steps).map_err(|e| check(e.to_string()))?;
            Ok(format!("t-norm {}: all axioms pass on a {steps}-step grid\n", t.name()).into_bytes())
        }
        Command::CheckStar { seed, count, tol } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sampler = CdfSampler::default();
            let samples: Vec<_> = (0..count)
                .map(|_| (sampler.sample(&mut rng), sampler.sample(&mut rng), sampler.sample(&mut rng)))
                .collect();
            let t = ctx.tnorm();
            let report = check_triangle_axioms(&t, &samples, tol);
            let mut text = String::new();
            for (axiom, cx) in &report.results {
                let status = if cx.is_none() { "pass" } else { "FAIL" };
                text.push_str(&format!("{}: {status}\n", axiom.label()));
            }
            if report.all_passed() {
                Ok(text.into_bytes())
            } else {
                let detail: Vec<String> = report
                    .results
                    .iter()
                    .filter_map(|(a, cx)| {
                        cx.as_ref()
                            .map(|c| format!("{}: sample {}: {}", a.label(), c.sample, c.detail))
                    })
                    .collect();
                Err(check(format!("{text}{}", detail.join("\n"))))
            }
        }
        Command::CheckSpace { space } => {
            let s = ctx.load_space(&space)?;
            Ok(format!(
                "space: {} points, t-norm {}\nidentity: pass\nsymmetry: pass\ntriangle: pass\n",
                s.len(),
                s.star().name()
            )
            .into_bytes())
        }
        Command::CheckLip { space, map } => {
            let s = ctx.load_space(&space)?;
            let (domain, values) = ctx.load_map(&map)?;
            let full: Vec<usize> = (0..s.len()).collect();
            let witness = if domain == full {
                is_one_lipschitz(&s, &values)
            } else {
                is_one_lipschitz_on(&s, &domain, &values)
            }
            .map_err(|e| usage(e.to_string()))?;
            match witness {
                None => Ok(b"certified 1-Lipschitz\n".to_vec()),
                Some(w) => Err(check(format!("not 1-Lipschitz: {w}"))),
            }
        }
        Command::Extend { space, map } => {
            let s = ctx.load_space(&space)?;
            let (domain, values) = ctx.load_map(&map)?;
            let ext = upper_envelope_extension(&s, &domain, &values)
                .map_err(|e| usage(e.to_string()))?;
            emit(
                Payload::Map {
                    domain: (0..s.len()).collect(),
                    values: ext.into_values(),
                },
                Meta::default(),
            )
        }
        Command::EmbedDelta { space, point } => {
            let s = ctx.load_space(&space)?;
            let m = delta_embed(&s, point).map_err(|e| usage(e.to_string()))?;
            emit(
                Payload::Map {
                    domain: (0..s.len()).collect(),
                    values: m.into_values(),
                },
                Meta::default(),
            )
        }
        Command::Net { space, eps } => {
            let s = ctx.load_space(&space)?;
            let net = s.covering_net(eps).map_err(|e| usage(e.to_string()))?;
            emit(
                Payload::Report(Report {
                    command: "net".into(),
                    eps,
                    selected: net,
                    residuals: Vec::new(),
                    pairwise_dinf: None,
                    lipschitz_ok: None,
                    cauchy_ok: None,
                    success: true,
                    limit: None,
                }),
                Meta::default(),
            )
        }
        Command::Extract { space, maps, eps, bisect } => {
            let cfg = levy_config(bisect.tol)?;
            let s = ctx.load_space(&space)?;
            let seq = match ctx.load(&maps)?.payload {
                Payload::MapSequence(m) => m,
                _ => return Err(usage(format!("{}: expected a map_sequence document", maps.display()))),
            };
            let certified = certify_all(&s, seq)?;
            let r = extract_uniform_subsequence(&s, &certified, eps, &cfg)
                .map_err(|e| check(e.to_string()))?;
            finish_report(extraction_report("extract", &r, None))
        }
        Command::Converse { space, eps, points, walk, seed, bisect } => {
            let cfg = levy_config(bisect.tol)?;
            let s = ctx.load_space(&space)?;
            let pts = match (walk, seed) {
                (Some(steps), Some(seed)) => random_walk(s.len(), steps, seed),
                (Some(_), None) => return Err(usage("--walk requires --seed")),
                (None, _) if points.is_empty() => {
                    return Err(usage("supply --points or --walk"))
                }
                (None, _) => points,
            };
            let w = converse_compactness_witness(&s, &pts, eps, &cfg)
                .map_err(|e| check(e.to_string()))?;
            finish_report(extraction_report("converse", &w.report, Some(w.cauchy_ok)))
        }
        Command::Gen(g) => match g {
            GenCommand::Space { seed, n, model } => {
                let model = SpaceModel::from_name(&model)
                    .ok_or_else(|| usage(format!("unknown model `{model}` (metric|repair)")))?;
                let s = gen_space(seed, n, model, star_of(ctx.tnorm()))
                    .map_err(|e| usage(e.to_string()))?;
                emit(Payload::Space(s), Meta::seeded(seed))
            }
            GenCommand::Cdf { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                emit(Payload::Cdf(CdfSampler::default().sample(&mut rng)), Meta::seeded(seed))
            }
            GenCommand::Lip { space, seed, count } => {
                let s = ctx.load_space(&space)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let maps = gen_lipschitz_maps(&s, &mut rng, count)
                    .map_err(|e| usage(e.to_string()))?;
                emit(
                    Payload::MapSequence(maps.into_iter().map(LipschitzMap::into_values).collect()),
                    Meta::seeded(seed),
                )
            }
        },
    }
}

/// Seeded walk: each step stays or moves to a uniformly random point.
fn random_walk(n: usize, steps: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = rng.gen_range(0..n.max(1));
    (0..steps)
        .map(|_| {
            if rng.gen_bool(0.5) {
                x = rng.gen_range(0..n.max(1));
            }
            x
        })
        .collect()
}

fn finish_report(report: Report) -> CmdResult {
    let ok = report.success;
    let text = serialize_document(&Document::new(Payload::Report(report), Meta::default()));
    if ok {
        Ok(text.into_bytes())
    } else {
        // The report is still written so the failure can be inspected.
        Err(Failure::Check(format!("extraction did not succeed\n{text}")))
    }
}

/// Runs one invocation. `args` includes the program name. Returns the exit
/// code: 0 on success, 1 on a failed check or validation, 2 on usage or
/// parse errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    let out = cli.out.clone();
    match execute(cli) {
        Ok(bytes) => {
            let written = match out {
                Some(path) => fs::write(&path, &bytes)
                    .map_err(|e| format!("{}: {e}", path.display())),
                None => stdout.write_all(&bytes).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    2
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Check(msg)) => {
            let _ = writeln!(stderr, "{}", msg.trim_end());
            1
        }
    }
}
