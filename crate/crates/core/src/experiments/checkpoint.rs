//! Binary checkpoints.
//!
//! Layout, all little endian: `b"NLCF"`, version `u32`, `nx` and `ny` as
//! `u32`, `t` and `dt` as `f64`, then `ux, uy, d1, d2, d3, P, θ` as `f64`
//! in row-major order. Domain size, director boundary condition and `e` are
//! not stored; the reader takes them from the caller's [`GridSpec`] and
//! [`DirectorBc`].

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::CheckpointError;
use crate::grid::{DirectorBc, DirectorField, FaceField, GridSpec, ScalarBc, ScalarField, State, VectorField};

pub const MAGIC: [u8; 4] = *b"NLCF";
pub const VERSION: u32 = 1;
const HEADER_BYTES: usize = 4 + 4 + 4 + 4 + 8 + 8;

/// Expected file size in bytes for an `nx × ny` grid.
pub fn checkpoint_len(nx: usize, ny: usize) -> usize {
    let cells = nx * ny;
    HEADER_BYTES + 8 * (ny * (nx + 1) + (ny + 1) * nx + 5 * cells)
}

pub fn encode_checkpoint(state: &State<f64>, dt: f64) -> Vec<u8> {
    let g = state.grid();
    let mut out = Vec::with_capacity(checkpoint_len(g.nx(), g.ny()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    out.extend_from_slice(&dt.to_le_bytes());
    let arrays = [
        state.u.ux(),
        state.u.uy(),
        &state.d.d[0],
        &state.d.d[1],
        &state.d.d[2],
        &state.p.values,
        &state.theta.values,
    ];
    for a in arrays {
        for v in a.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_checkpoint(state: &State<f64>, dt: f64, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    fs::write(path, encode_checkpoint(state, dt))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.bytes[self.pos..self.pos + N].try_into().expect("length checked up front");
        self.pos += N;
        out
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn array(&mut self, shape: (usize, usize)) -> Array2<f64> {
        let v: Vec<f64> = (0..shape.0 * shape.1).map(|_| self.f64()).collect();
        Array2::from_shape_vec(shape, v).expect("shape matches element count")
    }
}

/// Decodes a checkpoint for `grid`, returning the state and the stored `dt`.
pub fn decode_checkpoint(
    bytes: &[u8],
    grid: GridSpec<f64>,
    director_bc: DirectorBc,
    e: [f64; 3],
) -> Result<(State<f64>, f64), CheckpointError> {
    if bytes.len() < HEADER_BYTES {
        return Err(CheckpointError::Truncated { expected: HEADER_BYTES, found: bytes.len() });
    }
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take();
    if magic != MAGIC {
        return Err(CheckpointError::Magic { found: magic });
    }
    let version = r.u32();
    if version != VERSION {
        return Err(CheckpointError::Version { expected: VERSION, found: version });
    }
    let (nx, ny) = (r.u32() as usize, r.u32() as usize);
    if (nx, ny) != (grid.nx(), grid.ny()) {
        return Err(CheckpointError::Dimensions { expected: (grid.nx(), grid.ny()), found: (nx, ny) });
    }
    let expected = checkpoint_len(nx, ny);
    if bytes.len() < expected {
        return Err(CheckpointError::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(CheckpointError::Trailing(bytes.len() - expected));
    }
    let t = r.f64();
    let dt = r.f64();
    let ux = r.array((ny, nx + 1));
    let uy = r.array((ny + 1, nx));
    let d = [r.array((ny, nx)), r.array((ny, nx)), r.array((ny, nx))];
    let p = r.array((ny, nx));
    let theta = r.array((ny, nx));
    let state = State {
        u: VectorField::from_faces(FaceField { grid, ux, uy }),
        d: DirectorField { grid, d, bc: director_bc, e },
        p: ScalarField::from_values(grid, ScalarBc::NeumannZero, p),
        theta: ScalarField::from_values(grid, ScalarBc::NeumannZero, theta),
        t,
    };
    Ok((state, dt))
}

pub fn read_checkpoint(
    path: impl AsRef<Path>,
    grid: GridSpec<f64>,
    director_bc: DirectorBc,
    e: [f64; 3],
) -> Result<(State<f64>, f64), CheckpointError> {
    decode_checkpoint(&fs::read(path)?, grid, director_bc, e)
}
