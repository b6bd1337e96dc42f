use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use ndarray::{ArrayD, Axis, Ix2, Ix3};
use orka::experiments::{bench_k, bench_n, compare_oracle, BenchConfig, Timing};
use orka::synth::{self, Pulse};
use orka::{
    decompose, DataMatrix, Decomposition, Exec, ExtractionParams, Measurements, Mu, ShiftVector,
    VideoTensor,
};

use crate::error::CliError;
use crate::format::{self, Format};
use crate::report::{join, Report};
use crate::settings::{parse_list, parse_range, Config};
use crate::{Command, Common};

/// Resolved shared options.
pub struct Ctx {
    config: Config,
    mus: Vec<Mu>,
    c: u32,
    k: Option<usize>,
    objects: usize,
    dims: Option<usize>,
    seed: u64,
    pub workers: Option<usize>,
    node_budget: u64,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl Ctx {
    pub fn new(common: Common, config: Config) -> Result<Self, CliError> {
        let mus = match config.pick::<String>("mu", common.mu)? {
            Some(s) => parse_list::<Mu>(&s)?,
            None => vec![Mu::Finite(1.0)],
        };
        if mus.is_empty() {
            return Err(CliError::usage("--mu needs at least one value"));
        }
        let dims = config.pick("dims", common.dims)?;
        if matches!(dims, Some(d) if d != 1 && d != 2) {
            return Err(CliError::usage("--dims must be 1 or 2"));
        }
        let workers = config.pick("workers", common.workers)?;
        if workers == Some(0) {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        let default_budget = ExtractionParams::new(Mu::Finite(1.0), 1, 1).node_budget;
        Ok(Ctx {
            mus,
            c: config.pick_or("c", common.c, 1)?,
            k: config.pick("k", common.k)?,
            objects: config.pick_or("objects", common.objects, 1)?,
            dims,
            seed: config.pick_or("seed", common.seed, 0)?,
            workers,
            node_budget: config.pick_or("node_budget", common.node_budget, default_budget)?,
            format: config
                .pick::<String>("format", common.format)?
                .map(|s| s.parse())
                .transpose()?,
            out: config.pick("out", common.out)?,
            config,
        })
    }

    fn exec(&self) -> Exec {
        if self.workers == Some(1) {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }

    fn out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::usage("--out is required"))
    }

    fn k(&self, default: usize) -> usize {
        self.k.unwrap_or(default)
    }

    fn single_mu(&self) -> Result<Mu, CliError> {
        match self.mus.as_slice() {
            [mu] => Ok(*mu),
            _ => Err(CliError::usage("this command takes a single --mu")),
        }
    }

    fn format_for(&self, rank: usize) -> Format {
        self.format
            .unwrap_or(if rank > 2 { Format::Bin } else { Format::Csv })
    }

    fn params(&self, objects: usize) -> Result<Vec<ExtractionParams>, CliError> {
        let mus = match self.mus.len() {
            1 => vec![self.mus[0]; objects],
            l if l == objects => self.mus.clone(),
            l => {
                return Err(CliError::usage(format!(
                    "{l} values of --mu for {objects} objects"
                )))
            }
        };
        let k = self.k(3);
        Ok(mus
            .into_iter()
            .map(|mu| {
                ExtractionParams::new(mu, self.c, k)
                    .with_exec(self.exec())
                    .with_node_budget(self.node_budget)
            })
            .collect())
    }

    fn echo(&self, r: &mut Report) {
        r.add("mu", join(&self.mus));
        r.add("c", self.c);
        r.add("seed", self.seed);
        r.add(
            "workers",
            self.workers.map_or("all".to_string(), |w| w.to_string()),
        );
        r.add("exec", format!("{:?}", self.exec()).to_lowercase());
        r.add("node_budget", self.node_budget);
    }
}

pub fn run(cmd: &Command, ctx: &Ctx) -> Result<(), CliError> {
    match cmd {
        Command::GenGap { max_gap } => gen_gap(ctx, *max_gap),
        Command::GenScene { .. } => gen_scene(ctx, cmd),
        Command::Extract { input } => extract(ctx, input, Some(1), "extract"),
        Command::Decompose { input } => extract(ctx, input, None, "decompose"),
        Command::Denoise { input } => denoise(ctx, input),
        Command::Psnr { reference, other } => psnr(reference, other),
        Command::BenchK {
            m,
            n,
            ks,
            min_time_ms,
        } => {
            let cfg = &ctx.config;
            let n = cfg.pick_or("n", *n, 64)?;
            let ks = parse_range(&cfg.pick_or("ks", ks.clone(), "3..8".to_string())?)?;
            let bench = bench_config(ctx, *m, *min_time_ms)?;
            let rows = bench_k(n, &ks, &bench)?;
            let mut r = bench_report("bench-k", ctx, &bench);
            r.add("n", n);
            r.add("ks", join(&ks));
            emit_timings(ctx, "k", &rows, r)
        }
        Command::BenchN { m, ns, min_time_ms } => {
            let ns = parse_range(&ctx.config.pick_or(
                "ns",
                ns.clone(),
                "64,128,256,512".to_string(),
            )?)?;
            let k = ctx.k(4);
            let bench = bench_config(ctx, *m, *min_time_ms)?;
            let rows = bench_n(&ns, k, &bench)?;
            let mut r = bench_report("bench-n", ctx, &bench);
            r.add("k", k);
            r.add("ns", join(&ns));
            emit_timings(ctx, "n", &rows, r)
        }
        Command::CompareOracle { m, n, trials, ks } => {
            let cfg = &ctx.config;
            let m = cfg.pick_or("m", *m, 16)?;
            let n = cfg.pick_or("n", *n, 8)?;
            let trials = cfg.pick_or("trials", *trials, 20)?;
            let ks = match cfg.pick::<String>("ks", ks.clone())? {
                Some(s) => parse_range(&s)?,
                None => (1..n.max(2)).collect(),
            };
            let mus: Vec<f64> = ctx.mus.iter().map(|m| m.value()).collect();
            let cmp = compare_oracle(m, n, ctx.c, trials, &mus, &ks, ctx.seed)?;
            let mut csv = String::from("k,mu,mean_error,max_error\n");
            for row in &cmp.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{:.16e},{:.16e}",
                    row.k, row.mu, row.mean_error, row.max_error
                );
            }
            let mut r = Report::new("compare-oracle");
            ctx.echo(&mut r);
            r.add("m", m);
            r.add("n", n);
            r.add("trials", trials);
            r.add("ks", join(&ks));
            emit_csv(ctx, &csv, r)
        }
    }
}

/// `out` with its extension replaced by `suffix`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn lambda_csv(lambda: &ShiftVector) -> String {
    let mut s = String::new();
    for shift in lambda.shifts() {
        s.push_str(&join(&shift[..lambda.dims()]));
        s.push('\n');
    }
    s
}

fn gen_gap(ctx: &Ctx, max_gap: Option<usize>) -> Result<(), CliError> {
    let max_gap = ctx.config.pick_or("max_gap", max_gap, 14)?;
    let out = ctx.out()?;
    let d = synth::gap_matrix(max_gap);
    format::write_array(out, &d.values().clone().into_dyn(), ctx.format_for(2))?;
    let mut r = Report::new("gen-gap");
    r.add("max_gap", max_gap);
    r.add("size", d.rows());
    r.add("out", out.display());
    print!("{}", r.render());
    Ok(())
}

fn gen_scene(ctx: &Ctx, cmd: &Command) -> Result<(), CliError> {
    let Command::GenScene {
        rows,
        cols,
        frames,
        side,
        velocity,
        drift,
        width,
        background,
        noise_db,
    } = cmd
    else {
        unreachable!("gen_scene called for another command")
    };
    let cfg = &ctx.config;
    let out = ctx.out()?;
    let dims = ctx.dims.unwrap_or(1);
    let noise_db: Option<f64> = cfg.pick("noise_db", *noise_db)?;
    let mut r = Report::new("gen-scene");
    r.add("dims", dims);
    r.add("seed", ctx.seed);

    let (clean, truth) = if dims == 1 {
        let m = cfg.pick_or("rows", *rows, 64)?;
        let n = cfg.pick_or("cols", *cols, 32)?;
        let velocities =
            parse_list::<f64>(&cfg.pick_or("velocity", velocity.clone(), "1".to_string())?)?;
        let drift = cfg.pick_or("drift", *drift, 0.0)?;
        let width = cfg.pick_or("width", *width, 2.0)?;
        if drift < 0.0 || width <= 0.0 {
            return Err(CliError::usage("--drift must be >= 0 and --width > 0"));
        }
        let count = velocities.len();
        let pulses: Vec<Pulse> = velocities
            .iter()
            .enumerate()
            .map(|(l, &v)| {
                let center = m as f64 * (2 * l + 1) as f64 / (2 * count) as f64;
                Pulse {
                    width,
                    drift,
                    ..Pulse::new(center, v)
                }
            })
            .collect();
        let scene = synth::pulse_scene(m, n, &pulses)?;
        let mut truth = String::new();
        for j in 0..n {
            truth.push_str(&join(scene.paths.iter().map(|p| p[j])));
            truth.push('\n');
        }
        r.add("rows", m);
        r.add("cols", n);
        r.add("velocity", join(&velocities));
        r.add("drift", drift);
        r.add("width", width);
        (scene.clean.into_inner().into_dyn(), truth)
    } else {
        let rows = cfg.pick_or("rows", *rows, 32)?;
        let cols = cfg.pick_or("cols", *cols, 32)?;
        let frames = cfg.pick_or("frames", *frames, 10)?;
        let side = cfg.pick_or("side", *side, 8)?;
        let background = cfg.pick_or("background", *background, 4.0)?;
        let v =
            parse_list::<i64>(&cfg.pick_or("velocity", velocity.clone(), "1,2".to_string())?)?;
        let [vy, vx] = v[..] else {
            return Err(CliError::usage("a video velocity is \"rows,cols\""));
        };
        let scene = synth::moving_square(rows, cols, frames, side, [vy, vx], background, ctx.seed)?;
        r.add("rows", rows);
        r.add("cols", cols);
        r.add("frames", frames);
        r.add("side", side);
        r.add("velocity", join([vy, vx]));
        r.add("background", background);
        (
            scene.video.into_inner().into_dyn(),
            lambda_csv(&scene.truth),
        )
    };

    let fmt = ctx.format_for(clean.ndim());
    let data = match noise_db {
        Some(db) => {
            let noisy = synth::add_noise(&clean, db, ctx.seed)?;
            let clean_path = sibling(out, &format!("clean.{}", fmt.extension()));
            format::write_array(&clean_path, &clean, fmt)?;
            r.add("noise_db", db);
            r.add("measured_psnr_db", synth::psnr(&clean, &noisy)?);
            r.add("clean", clean_path.display());
            noisy
        }
        None => clean,
    };
    format::write_array(out, &data, fmt)?;
    let truth_path = sibling(out, "truth.csv");
    format::write_text(&truth_path, &truth)?;
    r.add("out", out.display());
    r.add("truth", truth_path.display());
    print!("{}", r.render());
    Ok(())
}

enum Input {
    Matrix(DataMatrix),
    Video(VideoTensor),
}

fn load_input(path: &Path, dims: Option<usize>) -> Result<Input, CliError> {
    let video = |a: ArrayD<f64>| -> Result<Input, CliError> {
        let a = a
            .into_dimensionality::<Ix3>()
            .map_err(|e| CliError::usage(e.to_string()))?;
        Ok(Input::Video(VideoTensor::new(a)?))
    };
    if dims == Some(2) || path.is_dir() {
        return video(format::read_video(path)?);
    }
    let a = format::read_array(path)?;
    match (a.ndim(), dims) {
        (1, _) => {
            let a = a
                .insert_axis(Axis(1))
                .into_dimensionality::<Ix2>()
                .expect("rank 2");
            Ok(Input::Matrix(DataMatrix::new(a)?))
        }
        (2, _) => Ok(Input::Matrix(DataMatrix::new(
            a.into_dimensionality::<Ix2>().expect("rank 2"),
        )?)),
        (3, None) => video(a),
        (r, _) => Err(CliError::usage(format!(
            "{} has rank {r}, expected 2 for --dims 1",
            path.display()
        ))),
    }
}

trait Tensor: Measurements {
    fn array(&self) -> ArrayD<f64>;
}

impl Tensor for DataMatrix {
    fn array(&self) -> ArrayD<f64> {
        self.values().clone().into_dyn()
    }
}

impl Tensor for VideoTensor {
    fn array(&self) -> ArrayD<f64> {
        self.values().clone().into_dyn()
    }
}

fn decomposition_report(r: &mut Report, dec: &Decomposition<impl Tensor>) {
    let single = dec.objects.len() == 1;
    for (l, est) in dec.objects.iter().enumerate() {
        let prefix = if single {
            String::new()
        } else {
            format!("object{}_", l + 1)
        };
        r.object(&prefix, est);
    }
    r.add(
        "energies",
        join(dec.energies.iter().map(|e| format!("{e:.17e}"))),
    );
    r.add(
        "residual_norms",
        join(dec.residual_norms.iter().map(|e| format!("{e:.17e}"))),
    );
}

fn extract(ctx: &Ctx, input: &Path, objects: Option<usize>, name: &str) -> Result<(), CliError> {
    match load_input(input, ctx.dims)? {
        Input::Matrix(d) => extract_with(ctx, input, &d, objects, name),
        Input::Video(v) => extract_with(ctx, input, &v, objects, name),
    }
}

fn extract_with<T: Tensor>(
    ctx: &Ctx,
    input: &Path,
    d: &T,
    objects: Option<usize>,
    name: &str,
) -> Result<(), CliError> {
    let out = ctx.out()?;
    let objects = objects.unwrap_or(ctx.objects);
    let params = ctx.params(objects)?;
    let dec = decompose(d, &params)?;
    let fmt = ctx.format_for(d.array().ndim());
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    let ext = fmt.extension();
    for (l, est) in dec.objects.iter().enumerate() {
        let tag = if objects == 1 {
            String::new()
        } else {
            format!("_{}", l + 1)
        };
        format::write_array(&out.join(format!("u{tag}.{ext}")), &est.u.array(), fmt)?;
        format::write_text(
            &out.join(format!("lambda{tag}.csv")),
            &lambda_csv(&est.lambda),
        )?;
    }
    format::write_array(
        &out.join(format!("residual.{ext}")),
        &dec.residual.array(),
        fmt,
    )?;

    let mut r = Report::new(name);
    r.add("input", input.display());
    r.add("dims", T::DIMS);
    ctx.echo(&mut r);
    r.add("k", ctx.k(3));
    r.add("objects", objects);
    r.add("format", ext);
    r.add("out", out.display());
    decomposition_report(&mut r, &dec);
    let text = r.render();
    format::write_text(&out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn denoise(ctx: &Ctx, input: &Path) -> Result<(), CliError> {
    match load_input(input, ctx.dims)? {
        Input::Matrix(d) => denoise_with(ctx, input, &d),
        Input::Video(v) => denoise_with(ctx, input, &v),
    }
}

fn denoise_with<T: Tensor>(ctx: &Ctx, input: &Path, d: &T) -> Result<(), CliError> {
    let out = ctx.out()?;
    let params = ctx.params(ctx.objects)?;
    let dec = decompose(d, &params)?;
    let denoised = dec.reconstruction()?.array();
    format::write_array(out, &denoised, ctx.format_for(denoised.ndim()))?;
    let mut r = Report::new("denoise");
    r.add("input", input.display());
    r.add("dims", T::DIMS);
    ctx.echo(&mut r);
    r.add("k", ctx.k(3));
    r.add("objects", ctx.objects);
    r.add("out", out.display());
    decomposition_report(&mut r, &dec);
    print!("{}", r.render());
    Ok(())
}

fn read_any(path: &Path) -> Result<ArrayD<f64>, CliError> {
    if path.is_dir() {
        format::read_video(path)
    } else {
        format::read_array(path)
    }
}

fn psnr(reference: &Path, other: &Path) -> Result<(), CliError> {
    let a = read_any(reference)?;
    let b = read_any(other)?;
    let db = synth::psnr(&a, &b)?;
    let mut r = Report::new("psnr");
    r.add("reference", reference.display());
    r.add("other", other.display());
    r.add("psnr_db", db);
    print!("{}", r.render());
    Ok(())
}

fn bench_config(
    ctx: &Ctx,
    m: Option<usize>,
    min_time_ms: Option<u64>,
) -> Result<BenchConfig, CliError> {
    let defaults = BenchConfig::default();
    let min_ms = ctx.config.pick_or(
        "min_time_ms",
        min_time_ms,
        defaults.min_time.as_millis() as u64,
    )?;
    Ok(BenchConfig {
        m: ctx.config.pick_or("m", m, defaults.m)?,
        c: ctx.c,
        mu: ctx.single_mu()?,
        seed: ctx.seed,
        min_time: Duration::from_millis(min_ms),
        exec: ctx.exec(),
    })
}

fn bench_report(name: &str, ctx: &Ctx, cfg: &BenchConfig) -> Report {
    let mut r = Report::new(name);
    ctx.echo(&mut r);
    r.add("m", cfg.m);
    r.add("min_time_ms", cfg.min_time.as_millis());
    r
}

fn emit_timings(ctx: &Ctx, param: &str, rows: &[Timing], r: Report) -> Result<(), CliError> {
    let mut csv = format!("{param},seconds\n");
    for t in rows {
        let _ = writeln!(csv, "{},{:.9e}", t.param, t.seconds);
    }
    emit_csv(ctx, &csv, r)
}

/// Writes `csv` to `--out` and prints the report, or prints the CSV alone.
fn emit_csv(ctx: &Ctx, csv: &str, mut r: Report) -> Result<(), CliError> {
    match &ctx.out {
        Some(out) => {
            format::write_text(out, csv)?;
            r.add("out", out.display());
            print!("{}", r.render());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
