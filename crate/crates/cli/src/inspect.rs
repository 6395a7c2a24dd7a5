//! `inspect` and `convert`.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context as _;
use nspregen::trajio::{export_raw, read_trajectory, resample_trajectory, write_atomic, write_trajectory, Trajectory};

use crate::error::{usage, CmdResult, Failure, ResultExt};
use crate::Context;

pub const VORTICITY: &str = "vorticity";

#[derive(Debug, clap::Args)]
pub struct InspectArgs {
    pub path: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    /// Stored channel name or `vorticity`.
    #[arg(long, default_value = "u")]
    pub channel: String,
    /// Write `row,col,x,y,value` rows here (`-` for stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write an SVG heat map here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Values of one channel (or the derived vorticity) at frame `t`, row-major.
pub fn channel_values(traj: &Trajectory, t: usize, channel: &str) -> Result<Vec<f64>, Failure> {
    if t >= traj.frames {
        return Err(usage(format!("frame {t} out of range (trajectory has {} frames)", traj.frames)));
    }
    if channel == VORTICITY {
        return traj.vorticity(t).runtime();
    }
    let c = traj
        .channel_index(channel)
        .ok_or_else(|| usage(format!("unknown channel `{channel}` (have {})", traj.channels.join(","))))?;
    Ok(traj.field(t, c).into_iter().map(f64::from).collect())
}

fn csv_text(traj: &Trajectory, values: &[f64]) -> String {
    let dx = traj.meta.extent.0 / traj.cols as f64;
    let dy = traj.meta.extent.1 / traj.rows as f64;
    let mut s = String::from("row,col,x,y,value\n");
    for r in 0..traj.rows {
        for c in 0..traj.cols {
            let (x, y) = ((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy);
            writeln!(s, "{r},{c},{x},{y},{}", values[r * traj.cols + c]).unwrap();
        }
    }
    s
}

/// Blue–white–red for signed data, white–red otherwise.
fn color(v: f64, lo: f64, hi: f64) -> (u8, u8, u8) {
    let lerp = |a: f64, b: f64, t: f64| (a + (b - a) * t).round() as u8;
    if lo < 0.0 && hi > 0.0 {
        let m = lo.abs().max(hi.abs());
        let t = (v / m).clamp(-1.0, 1.0);
        if t < 0.0 {
            (lerp(255.0, 33.0, -t), lerp(255.0, 102.0, -t), lerp(255.0, 172.0, -t))
        } else {
            (lerp(255.0, 178.0, t), lerp(255.0, 24.0, t), lerp(255.0, 43.0, t))
        }
    } else {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
        (lerp(255.0, 178.0, t), lerp(255.0, 24.0, t), lerp(255.0, 43.0, t))
    }
}

fn svg_text(traj: &Trajectory, values: &[f64], title: &str) -> String {
    let scale = (512 / traj.rows.max(traj.cols)).max(1);
    let (w, h) = (traj.cols * scale, traj.rows * scale);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">"#
    )
    .unwrap();
    writeln!(s, "<title>{title} min {lo:.6e} max {hi:.6e}</title>").unwrap();
    for r in 0..traj.rows {
        // Row 0 is the bottom of the domain.
        let y = (traj.rows - 1 - r) * scale;
        for c in 0..traj.cols {
            let (red, green, blue) = color(values[r * traj.cols + c], lo, hi);
            writeln!(
                s,
                r##"<rect x="{}" y="{y}" width="{scale}" height="{scale}" fill="#{red:02x}{green:02x}{blue:02x}"/>"##,
                c * scale
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn inspect(ctx: &Context, args: InspectArgs) -> CmdResult {
    let path = ctx.config.resolve(&args.path);
    let traj = read_trajectory(&path)
        .with_context(|| format!("reading {}", path.display()))
        .runtime()?;
    let values = channel_values(&traj, args.frame, &args.channel)?;
    if let Some(out) = &args.csv {
        let text = csv_text(&traj, &values);
        if out.as_os_str() == "-" {
            print!("{text}");
        } else {
            write_atomic(&ctx.config.resolve(out), text.as_bytes()).runtime()?;
        }
    }
    if let Some(out) = &args.svg {
        let title = format!("{} frame {}", args.channel, args.frame);
        write_atomic(&ctx.config.resolve(out), svg_text(&traj, &values, &title).as_bytes()).runtime()?;
    }
    if args.csv.is_none() && args.svg.is_none() {
        let m = &traj.meta;
        println!("id          {:016x}", m.id);
        println!("kind        {}", m.kind.map_or("external".to_string(), |k| k.to_string()));
        println!("re          {}", m.re);
        println!("obstacles   {}", m.obstacles);
        println!("t_end       {} s (every {} s)", m.t_end, m.write_interval);
        println!("shape       {:?}", traj.shape());
        println!("channels    {}", traj.channels.join(","));
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{} frame {}: min {lo:.6e} max {hi:.6e}", args.channel, args.frame);
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct ConvertArgs {
    pub path: PathBuf,
    /// Write the headerless float32 payload here, with a JSON sidecar.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    /// Sidecar path; defaults to the payload path with `.json` appended.
    #[arg(long, requires = "raw")]
    pub sidecar: Option<PathBuf>,
    /// Resample to `ROWSxCOLS` and write the result to `--output`.
    #[arg(long, value_parser = parse_dims, requires = "output")]
    pub resample: Option<(usize, usize)>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or("expected ROWSxCOLS")?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| e.to_string());
    let dims = (parse(r)?, parse(c)?);
    if dims.0 < 2 || dims.1 < 2 {
        return Err("dimensions must be at least 2".into());
    }
    Ok(dims)
}

pub fn convert(ctx: &Context, args: ConvertArgs) -> CmdResult {
    if args.raw.is_none() && args.resample.is_none() {
        return Err(usage("nothing to do: pass --raw and/or --resample"));
    }
    let path = ctx.config.resolve(&args.path);
    let mut traj = read_trajectory(&path)
        .with_context(|| format!("reading {}", path.display()))
        .runtime()?;
    if let Some(dims) = args.resample {
        traj = resample_trajectory(&traj, dims).runtime()?;
        let out = ctx.config.resolve(args.output.as_deref().expect("clap enforces --output"));
        write_trajectory(&traj, &out).runtime()?;
        println!("wrote {}", out.display());
    }
    if let Some(raw) = &args.raw {
        let payload = ctx.config.resolve(raw);
        let sidecar = match &args.sidecar {
            Some(s) => ctx.config.resolve(s),
            None => PathBuf::from(format!("{}.json", payload.display())),
        };
        export_raw(&traj, &payload, &sidecar).runtime()?;
        println!("wrote {} and {}", payload.display(), sidecar.display());
    }
    Ok(())
}
