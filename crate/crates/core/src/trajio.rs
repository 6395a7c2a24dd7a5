//! Trajectory tensors and the `NST1` file format.
//!
//! A file is a header followed by `T·H·W·C` 32-bit floats, channel index
//! fastest, then column, row and frame.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "NST1"
//!      4     1  byte order of the numeric fields: b'L' or b'B'
//!      5     1  flow kind: 0 fpo, 1 ldc, 255 external
//!      6     2  version (u16)
//!      8     8  T, H, W, C (u16 each)
//!     16     8  Re (f64)
//!     24     8  seed (u64)
//!     32     8  t_end (f64)
//!     40     8  write interval (f64)
//!     48     2  header length in bytes (u16)
//!     50     2  channel-name bytes (u16)
//!     52     4  obstacle count (u32)
//!     56     8  trajectory id (u64)
//!     64    16  domain extent x, y (f64 each)
//!     80     n  channel names, comma separated ASCII, zero padded
//! ```
//! The header is padded with zeros to a multiple of 64 bytes.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{compute_sdf, BinaryMask, GeometryError};
use crate::physics::FlowKind;
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"NST1";
pub const FORMAT_VERSION: u16 = 1;
const FIXED_HEADER: usize = 80;
const KIND_EXTERNAL: u8 = 255;

/// Stored channels in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    U,
    V,
    P,
    ReHat,
    Mask,
    Sdf,
}

impl Channel {
    pub const ALL: [Channel; 6] = [Channel::U, Channel::V, Channel::P, Channel::ReHat, Channel::Mask, Channel::Sdf];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::U => "u",
            Channel::V => "v",
            Channel::P => "p",
            Channel::ReHat => "re_hat",
            Channel::Mask => "mask",
            Channel::Sdf => "sdf",
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Channel {
    type Err = TrajError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| TrajError::UnknownChannel(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrajError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not an NST1 file")]
    BadMagic,
    #[error("unsupported format version {0}")]
    VersionMismatch(u16),
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Header metadata of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub id: u64,
    /// `None` for trajectories produced elsewhere.
    pub kind: Option<FlowKind>,
    pub re: f64,
    pub seed: u64,
    pub t_end: f64,
    pub write_interval: f64,
    pub obstacles: u32,
    pub extent: (f64, f64),
}

impl Default for TrajectoryMeta {
    fn default() -> Self {
        Self {
            id: 0,
            kind: None,
            re: 0.0,
            seed: 0,
            t_end: 0.0,
            write_interval: 0.0,
            obstacles: 0,
            extent: (2.0, 2.0),
        }
    }
}

/// Run diagnostics kept alongside a freshly simulated trajectory. Not
/// persisted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDiagnostics {
    /// Simulated time of each stored frame.
    pub frame_times: Vec<f64>,
    /// `max |∇·u| h / u_ref` over fluid cells, per frame, on the solver grid.
    pub max_scaled_divergence: Vec<f64>,
    pub steps: u64,
    pub cg_iters: u64,
}

/// A `T × H × W × C` single-precision tensor with metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub frames: usize,
    pub rows: usize,
    pub cols: usize,
    pub channels: Vec<String>,
    pub data: Vec<f32>,
    pub diagnostics: Option<RunDiagnostics>,
}

impl Trajectory {
    /// Zero-filled trajectory with the standard six channels.
    pub fn zeros(meta: TrajectoryMeta, frames: usize, rows: usize, cols: usize) -> Self {
        let channels = Channel::ALL.iter().map(|c| c.as_str().to_string()).collect::<Vec<_>>();
        let n = frames * rows * cols * channels.len();
        Self {
            meta,
            frames,
            rows,
            cols,
            channels,
            data: vec![0.0; n],
            diagnostics: None,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.frames, self.rows, self.cols, self.n_channels())
    }

    /// Position of channel `name`, if present.
    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    #[inline]
    pub fn offset(&self, t: usize, row: usize, col: usize, c: usize) -> usize {
        ((t * self.rows + row) * self.cols + col) * self.n_channels() + c
    }

    #[inline]
    pub fn get(&self, t: usize, row: usize, col: usize, c: usize) -> f32 {
        self.data[self.offset(t, row, col, c)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, row: usize, col: usize, c: usize, value: f32) {
        let k = self.offset(t, row, col, c);
        self.data[k] = value;
    }

    /// One channel of one frame as a row-major `H × W` field.
    pub fn field(&self, t: usize, c: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                out.push(self.get(t, r, k, c));
            }
        }
        out
    }

    pub fn set_field(&mut self, t: usize, c: usize, values: &[f32]) {
        for r in 0..self.rows {
            for k in 0..self.cols {
                self.set(t, r, k, c, values[r * self.cols + k]);
            }
        }
    }

    /// Vorticity `∂v/∂x − ∂u/∂y` of frame `t`, row-major `H × W`, from the
    /// `u` and `v` channels. Central differences inside, one-sided at edges.
    pub fn vorticity(&self, t: usize) -> Result<Vec<f64>, TrajError> {
        let find = |name: &str| self.channel_index(name).ok_or_else(|| TrajError::UnknownChannel(name.into()));
        let (iu, iv) = (find("u")?, find("v")?);
        let dx = self.meta.extent.0 / self.cols as f64;
        let dy = self.meta.extent.1 / self.rows as f64;
        let deriv = |n: usize, k: usize, h: f64, f: &dyn Fn(usize) -> f64| match (n, k) {
            (1, _) => 0.0,
            (_, 0) => (f(1) - f(0)) / h,
            _ if k == n - 1 => (f(k) - f(k - 1)) / h,
            _ => (f(k + 1) - f(k - 1)) / (2.0 * h),
        };
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let dvdx = deriv(self.cols, k, dx, &|c| f64::from(self.get(t, r, c, iv)));
                let dudy = deriv(self.rows, r, dy, &|q| f64::from(self.get(t, q, k, iu)));
                out.push(dvdx - dudy);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), TrajError> {
        if self.frames == 0 || self.rows == 0 || self.cols == 0 || self.channels.is_empty() {
            return Err(TrajError::InvalidShape(format!("{:?}", self.shape())));
        }
        let limit = u16::MAX as usize;
        if self.frames > limit || self.rows > limit || self.cols > limit || self.channels.len() > limit {
            return Err(TrajError::InvalidShape(format!("{:?} exceeds u16 extents", self.shape())));
        }
        if self.data.len() != self.frames * self.rows * self.cols * self.n_channels() {
            return Err(TrajError::InvalidShape(format!(
                "payload holds {} values, shape {:?}",
                self.data.len(),
                self.shape()
            )));
        }
        if self.channels.iter().any(|c| c.is_empty() || c.contains(',') || !c.is_ascii()) {
            return Err(TrajError::InvalidShape("channel names must be non-empty ASCII without commas".into()));
        }
        Ok(())
    }

    /// Payload size in bytes.
    pub fn payload_len(&self) -> usize {
        self.data.len() * 4
    }

    /// Raw little-endian payload bytes.
    pub fn payload_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|x| x.to_le_bytes()).collect()
    }
}

/// Header length in bytes for the given channel names.
pub fn header_len(channels: &[String]) -> usize {
    let names = channels.join(",").len();
    (FIXED_HEADER + names).div_ceil(64) * 64
}

fn kind_tag(kind: Option<FlowKind>) -> u8 {
    match kind {
        Some(FlowKind::Fpo) => 0,
        Some(FlowKind::Ldc) => 1,
        None => KIND_EXTERNAL,
    }
}

fn encode(traj: &Trajectory, big_endian: bool) -> Vec<u8> {
    let names = traj.channels.join(",");
    let hlen = header_len(&traj.channels);
    let mut h = Vec::with_capacity(hlen + traj.payload_len());
    macro_rules! put {
        ($v:expr) => {
            if big_endian {
                h.extend_from_slice(&$v.to_be_bytes())
            } else {
                h.extend_from_slice(&$v.to_le_bytes())
            }
        };
    }
    h.extend_from_slice(MAGIC);
    h.push(if big_endian { b'B' } else { b'L' });
    h.push(kind_tag(traj.meta.kind));
    put!(FORMAT_VERSION);
    put!(traj.frames as u16);
    put!(traj.rows as u16);
    put!(traj.cols as u16);
    put!(traj.n_channels() as u16);
    put!(traj.meta.re);
    put!(traj.meta.seed);
    put!(traj.meta.t_end);
    put!(traj.meta.write_interval);
    put!(hlen as u16);
    put!(names.len() as u16);
    put!(traj.meta.obstacles);
    put!(traj.meta.id);
    put!(traj.meta.extent.0);
    put!(traj.meta.extent.1);
    h.extend_from_slice(names.as_bytes());
    h.resize(hlen, 0);
    for x in &traj.data {
        put!(*x);
    }
    h
}

/// Serializes `traj` to bytes (little endian).
pub fn to_bytes(traj: &Trajectory) -> Result<Vec<u8>, TrajError> {
    traj.validate()?;
    Ok(encode(traj, false))
}

/// Serializes with the big-endian tag; readers byte-swap transparently.
pub fn to_bytes_big_endian(traj: &Trajectory) -> Result<Vec<u8>, TrajError> {
    traj.validate()?;
    Ok(encode(traj, true))
}

/// Writes `traj` atomically (temporary file, then rename).
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<(), TrajError> {
    let bytes = to_bytes(traj)?;
    write_atomic(path, &bytes)?;
    Ok(())
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    big: bool,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], TrajError> {
        let end = self.pos + N;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| TrajError::CorruptPayload("truncated header".into()))?;
        self.pos = end;
        Ok(s.try_into().expect("slice length"))
    }

    fn u16(&mut self) -> Result<u16, TrajError> {
        let b = self.take::<2>()?;
        Ok(if self.big { u16::from_be_bytes(b) } else { u16::from_le_bytes(b) })
    }

    fn u32(&mut self) -> Result<u32, TrajError> {
        let b = self.take::<4>()?;
        Ok(if self.big { u32::from_be_bytes(b) } else { u32::from_le_bytes(b) })
    }

    fn u64(&mut self) -> Result<u64, TrajError> {
        let b = self.take::<8>()?;
        Ok(if self.big { u64::from_be_bytes(b) } else { u64::from_le_bytes(b) })
    }

    fn f64(&mut self) -> Result<f64, TrajError> {
        self.u64().map(f64::from_bits)
    }
}

/// Parses an `NST1` byte buffer.
pub fn from_bytes(buf: &[u8]) -> Result<Trajectory, TrajError> {
    if buf.len() < 4 || &buf[..4] != MAGIC {
        return Err(TrajError::BadMagic);
    }
    let big = match buf.get(4) {
        Some(b'L') => false,
        Some(b'B') => true,
        Some(other) => return Err(TrajError::CorruptPayload(format!("unknown byte-order tag {other:#x}"))),
        None => return Err(TrajError::CorruptPayload("truncated header".into())),
    };
    let mut c = Cursor { buf, pos: 5, big };
    let kind = match c.take::<1>()?[0] {
        0 => Some(FlowKind::Fpo),
        1 => Some(FlowKind::Ldc),
        KIND_EXTERNAL => None,
        other => return Err(TrajError::CorruptPayload(format!("unknown flow kind tag {other}"))),
    };
    let version = c.u16()?;
    if version != FORMAT_VERSION {
        return Err(TrajError::VersionMismatch(version));
    }
    let frames = c.u16()? as usize;
    let rows = c.u16()? as usize;
    let cols = c.u16()? as usize;
    let nch = c.u16()? as usize;
    let re = c.f64()?;
    let seed = c.u64()?;
    let t_end = c.f64()?;
    let write_interval = c.f64()?;
    let hlen = c.u16()? as usize;
    let names_len = c.u16()? as usize;
    let obstacles = c.u32()?;
    let id = c.u64()?;
    let extent = (c.f64()?, c.f64()?);
    if hlen < FIXED_HEADER + names_len || buf.len() < hlen {
        return Err(TrajError::CorruptPayload("truncated header".into()));
    }
    let names = std::str::from_utf8(&buf[FIXED_HEADER..FIXED_HEADER + names_len])
        .map_err(|_| TrajError::CorruptPayload("channel names are not UTF-8".into()))?;
    let channels: Vec<String> = names.split(',').map(str::to_string).collect();
    if channels.len() != nch {
        return Err(TrajError::CorruptPayload(format!(
            "{} channel names for {nch} channels",
            channels.len()
        )));
    }
    let n = frames * rows * cols * nch;
    if n == 0 {
        return Err(TrajError::InvalidShape(format!("({frames}, {rows}, {cols}, {nch})")));
    }
    let payload = &buf[hlen..];
    if payload.len() != n * 4 {
        return Err(TrajError::CorruptPayload(format!(
            "expected {} payload bytes, found {}",
            n * 4,
            payload.len()
        )));
    }
    let mut data = Vec::with_capacity(n);
    for chunk in payload.chunks_exact(4) {
        let b: [u8; 4] = chunk.try_into().expect("chunk length");
        let x = if big { f32::from_be_bytes(b) } else { f32::from_le_bytes(b) };
        if !x.is_finite() {
            return Err(TrajError::CorruptPayload(format!("non-finite value at element {}", data.len())));
        }
        data.push(x);
    }
    Ok(Trajectory {
        meta: TrajectoryMeta {
            id,
            kind,
            re,
            seed,
            t_end,
            write_interval,
            obstacles,
            extent,
        },
        frames,
        rows,
        cols,
        channels,
        data,
        diagnostics: None,
    })
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, TrajError> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    from_bytes(&buf)
}

/// Metadata written next to a raw payload export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub shape: [usize; 4],
    pub dtype: String,
    pub order: String,
    pub channels: Vec<String>,
    pub meta: TrajectoryMeta,
}

/// Exports the headerless little-endian float32 payload to `payload` and a
/// JSON description to `sidecar`.
pub fn export_raw(traj: &Trajectory, payload: &Path, sidecar: &Path) -> Result<(), TrajError> {
    traj.validate()?;
    write_atomic(payload, &traj.payload_bytes())?;
    let desc = RawSidecar {
        shape: [traj.frames, traj.rows, traj.cols, traj.n_channels()],
        dtype: "<f4".into(),
        order: "C".into(),
        channels: traj.channels.clone(),
        meta: traj.meta.clone(),
    };
    let json = serde_json::to_vec_pretty(&desc).map_err(io::Error::other)?;
    write_atomic(sidecar, &json)?;
    Ok(())
}

/// Cell-centered scalar field over a rectangular extent.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    pub rows: usize,
    pub cols: usize,
    pub extent: (T, T),
    pub values: Vec<T>,
}

/// Source interpolation coordinate of target index `k`.
fn source_coord<T: Real>(k: usize, n_src: usize, n_dst: usize) -> T {
    if n_src == n_dst {
        return T::from_usize_lossy(k);
    }
    let scale = T::from_usize_lossy(n_src) / T::from_usize_lossy(n_dst);
    (T::from_usize_lossy(k) + T::half()) * scale - T::half()
}

/// Lower stencil index and weight for coordinate `x` on `n` samples; the
/// weight falls outside [0, 1] when extrapolating past the outer centers.
fn bracket<T: Real>(x: T, n: usize) -> (usize, T) {
    if n == 1 {
        return (0, T::zero());
    }
    let i0 = x.floor().max(T::zero()).to_usize().unwrap_or(0).min(n - 2);
    (i0, x - T::from_usize_lossy(i0))
}

impl<T: Real> GridField<T> {
    pub fn new(rows: usize, cols: usize, extent: (T, T), values: Vec<T>) -> Self {
        assert_eq!(values.len(), rows * cols, "field size mismatch");
        Self { rows, cols, extent, values }
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Bilinear interpolation between cell centers onto a `dims` grid over
    /// the same extent, linearly extrapolated in the outer half cells.
    /// Affine fields are reproduced exactly; equal dims give the identity.
    pub fn resample(&self, dims: (usize, usize)) -> GridField<T> {
        let (rows, cols) = dims;
        let xs: Vec<(usize, T)> = (0..cols)
            .map(|k| bracket(source_coord::<T>(k, self.cols, cols), self.cols))
            .collect();
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (j0, fy) = bracket(source_coord::<T>(r, self.rows, rows), self.rows);
            let j1 = (j0 + 1).min(self.rows - 1);
            for &(i0, fx) in &xs {
                let i1 = (i0 + 1).min(self.cols - 1);
                let lo = (T::one() - fx) * self.get(j0, i0) + fx * self.get(j0, i1);
                let hi = (T::one() - fx) * self.get(j1, i0) + fx * self.get(j1, i1);
                values.push((T::one() - fy) * lo + fy * hi);
            }
        }
        GridField { rows, cols, extent: self.extent, values }
    }

    /// Nearest-center resampling.
    pub fn resample_nearest(&self, dims: (usize, usize)) -> GridField<T> {
        let (rows, cols) = dims;
        let pick = |k: usize, n_src: usize, n_dst: usize| -> usize {
            // Center of target cell k in source cell units, floored.
            ((2 * k + 1) * n_src / (2 * n_dst)).min(n_src - 1)
        };
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let sr = pick(r, self.rows, rows);
            for c in 0..cols {
                values.push(self.get(sr, pick(c, self.cols, cols)));
            }
        }
        GridField { rows, cols, extent: self.extent, values }
    }
}

/// Resamples every frame of a standard six-channel trajectory to `dims`.
/// Velocity and pressure are interpolated bilinearly, the mask by nearest
/// center, and the SDF is recomputed from the resampled mask.
pub fn resample_trajectory(traj: &Trajectory, dims: (usize, usize)) -> Result<Trajectory, TrajError> {
    traj.validate()?;
    if dims.0 < 2 || dims.1 < 2 {
        return Err(TrajError::InvalidShape(format!("target {dims:?} smaller than 2x2")));
    }
    if (traj.rows, traj.cols) == dims {
        return Ok(traj.clone());
    }
    let idx = |c: Channel| {
        traj.channel_index(c.as_str())
            .ok_or_else(|| TrajError::UnknownChannel(c.as_str().to_string()))
    };
    let (iu, iv, ip, ir, im, is) = (
        idx(Channel::U)?,
        idx(Channel::V)?,
        idx(Channel::P)?,
        idx(Channel::ReHat)?,
        idx(Channel::Mask)?,
        idx(Channel::Sdf)?,
    );
    let extent = (traj.meta.extent.0, traj.meta.extent.1);
    let as_field = |t: usize, c: usize| {
        let v: Vec<f64> = traj.field(t, c).into_iter().map(f64::from).collect();
        GridField::new(traj.rows, traj.cols, extent, v)
    };
    let mask_src = as_field(0, im).resample_nearest(dims);
    let fluid: Vec<bool> = mask_src.values.iter().map(|&m| m > 0.5).collect();
    let cell = (extent.0 / dims.1 as f64, extent.1 / dims.0 as f64);
    let mask = BinaryMask::from_flags(dims, cell, fluid);
    let sdf = compute_sdf(&mask)?;
    let mut out = Trajectory {
        meta: traj.meta.clone(),
        frames: traj.frames,
        rows: dims.0,
        cols: dims.1,
        channels: traj.channels.clone(),
        data: vec![0.0; traj.frames * dims.0 * dims.1 * traj.n_channels()],
        diagnostics: traj.diagnostics.clone(),
    };
    let to_f32 = |f: &GridField<f64>| f.values.iter().map(|&x| x as f32).collect::<Vec<f32>>();
    let mask_f32 = to_f32(&mask_src);
    let sdf_f32: Vec<f32> = sdf.values().iter().map(|&x| x as f32).collect();
    for t in 0..traj.frames {
        for c in 0..traj.n_channels() {
            let values = if c == im {
                mask_f32.clone()
            } else if c == is {
                sdf_f32.clone()
            } else if c == ir {
                vec![traj.get(t, 0, 0, ir); dims.0 * dims.1]
            } else {
                let mut v = to_f32(&as_field(t, c).resample(dims));
                if c == iu || c == iv || c == ip {
                    // Solid cells carry no flow.
                    for (x, m) in v.iter_mut().zip(&mask.flags().to_vec()) {
                        if !m {
                            *x = 0.0;
                        }
                    }
                }
                v
            };
            out.set_field(t, c, &values);
        }
    }
    Ok(out)
}
