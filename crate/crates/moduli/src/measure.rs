//! Measurement handling: the deterministic noise model and the binary field
//! file format.
//!
//! Noise is a superposition of products of cosines whose spatial frequency
//! grows like `1/sqrt(delta)` while the amplitude shrinks like `delta`: the
//! sup-norm of the perturbation vanishes with `delta` but its second
//! derivatives stay O(1), which is exactly the regime the projection-based
//! differentiation is designed for. The perturbation is interpolated at the
//! nodes of the data space, identically on both components.
//!
//! Field files carry a 128-byte structured text header (magic, version, grid,
//! order, continuity, component count) followed by little-endian f64
//! coefficients in lexicographic node order, one component after the other.
//! Only unit-square domains are persisted.

use crate::error::{Error, Result};
use crate::fem::mesh::MeshSpec;
use crate::fem::space::{Continuity, FeSpace, ScalarField, VectorField};
use std::io::{Read, Write};
use std::path::Path;

/// Default number of noise modes per sign.
pub const DEFAULT_NOISE_MODES: usize = 20;

/// A pair of (possibly noisy) displacement measurements with provenance.
#[derive(Clone, Debug)]
pub struct MeasurementSet {
    pub u1: VectorField,
    pub u2: VectorField,
    pub delta: f64,
    pub omega1: f64,
    pub omega2: f64,
}

/// Diagnostics from noise injection.
#[derive(Clone, Copy, Debug)]
pub struct NoiseReport {
    /// Shortest oscillation wavelength `sqrt(delta)` of the noise.
    pub min_wavelength: f64,
    /// Mean spacing between consecutive nodes of the data grid.
    pub node_spacing: f64,
    /// Set when the wavelength falls below twice the node spacing.
    pub aliasing: bool,
}

/// The deterministic perturbation at a point, before scaling by `delta`:
/// `sum_{m=-M..M} (|m|/M) chi((|m|/M) x / sqrt(delta))` with
/// `chi(x) = cos(2 pi x.e1) cos(2 pi x.e2) (e1 + e2)`; both components of
/// `chi` are equal, so a single scalar is returned.
fn noise_profile(x: f64, y: f64, delta: f64, modes: usize) -> f64 {
    let inv_sqrt = 1.0 / delta.sqrt();
    let m_f = modes as f64;
    let mut total = 0.0;
    for m in -(modes as i64)..=(modes as i64) {
        let a = (m.unsigned_abs() as f64) / m_f;
        let phase = 2.0 * std::f64::consts::PI * a * inv_sqrt;
        total += a * (phase * x).cos() * (phase * y).cos();
    }
    total
}

/// Add the deterministic noise of magnitude `delta` with `modes` modes per
/// sign (the paper's `M`, default 20) to a displacement field.
///
/// `delta = 0` returns the field unchanged. The sup-norm of the perturbation
/// is bounded by `(modes + 1) * delta` on each component, attained at the
/// origin.
pub fn add_noise(u: &VectorField, delta: f64, modes: usize) -> Result<(VectorField, NoiseReport)> {
    if delta < 0.0 {
        return Err(Error::InvalidConfig(format!("noise level must be >= 0, got {delta}")));
    }
    if modes < 1 {
        return Err(Error::InvalidConfig("noise needs at least one mode".into()));
    }
    let space = &u.space;
    let node_spacing = space.mesh.hx.min(space.mesh.hy) / space.r as f64;
    if delta == 0.0 {
        return Ok((
            u.clone(),
            NoiseReport { min_wavelength: f64::INFINITY, node_spacing, aliasing: false },
        ));
    }
    let mut out = u.clone();
    let (nx, ny) = (space.nodes_x(), space.nodes_y());
    for gy in 0..ny {
        for gx in 0..nx {
            let (x, y) = space.node_coords(gx, gy);
            let p = delta * noise_profile(x, y, delta, modes);
            let idx = gy * nx + gx;
            out.x[idx] += p;
            out.y[idx] += p;
        }
    }
    let min_wavelength = delta.sqrt();
    Ok((
        out,
        NoiseReport { min_wavelength, node_spacing, aliasing: min_wavelength < 2.0 * node_spacing },
    ))
}

const MAGIC: &str = "MODF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 128;

fn header_string(space: &FeSpace, components: usize) -> Result<Vec<u8>> {
    let dom = space.mesh.domain;
    if dom != crate::fem::mesh::Rect::UNIT {
        return Err(Error::FieldFormat("only unit-square domains are persisted".into()));
    }
    let cont = match space.continuity {
        Continuity::Conforming => "conforming",
        Continuity::Broken => "broken",
    };
    let line = format!(
        "{MAGIC} v{VERSION} nx={} ny={} r={} continuity={cont} components={components}\n",
        space.mesh.nx, space.mesh.ny, space.r
    );
    if line.len() > HEADER_LEN {
        return Err(Error::FieldFormat("header too long".into()));
    }
    let mut h = line.into_bytes();
    h.resize(HEADER_LEN, b' ');
    h[HEADER_LEN - 1] = b'\n';
    Ok(h)
}

fn parse_header(bytes: &[u8]) -> Result<(usize, usize, usize, Continuity, usize)> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::FieldFormat("header is not valid UTF-8".into()))?;
    let mut words = text.split_whitespace();
    let magic = words.next().unwrap_or("");
    if magic != MAGIC {
        return Err(Error::FieldFormat(format!("bad magic {magic:?}")));
    }
    let version = words.next().unwrap_or("");
    if version != format!("v{VERSION}") {
        return Err(Error::FieldFormat(format!("unsupported version {version:?}")));
    }
    let mut nx = None;
    let mut ny = None;
    let mut r = None;
    let mut cont = None;
    let mut comps = None;
    for w in words {
        let (key, value) = w
            .split_once('=')
            .ok_or_else(|| Error::FieldFormat(format!("malformed header field {w:?}")))?;
        match key {
            "nx" => nx = value.parse().ok(),
            "ny" => ny = value.parse().ok(),
            "r" => r = value.parse().ok(),
            "components" => comps = value.parse().ok(),
            "continuity" => {
                cont = match value {
                    "conforming" => Some(Continuity::Conforming),
                    "broken" => Some(Continuity::Broken),
                    _ => None,
                }
            }
            _ => return Err(Error::FieldFormat(format!("unknown header field {key:?}"))),
        }
    }
    match (nx, ny, r, cont, comps) {
        (Some(nx), Some(ny), Some(r), Some(c), Some(k)) => Ok((nx, ny, r, c, k)),
        _ => Err(Error::FieldFormat("incomplete header".into())),
    }
}

fn write_payload(w: &mut impl Write, comps: &[&[f64]]) -> Result<()> {
    for comp in comps {
        for v in *comp {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_payload(bytes: &[u8], n: usize, components: usize) -> Result<Vec<Vec<f64>>> {
    let expected = n * components * 8;
    if bytes.len() != expected {
        return Err(Error::FieldFormat(format!(
            "payload length mismatch: expected {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(components);
    for c in 0..components {
        let mut comp = Vec::with_capacity(n);
        for i in 0..n {
            let off = (c * n + i) * 8;
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&bytes[off..off + 8]);
            comp.push(f64::from_le_bytes(buf));
        }
        out.push(comp);
    }
    Ok(out)
}

/// Write a vector field; bit-exact round trip with [`read_vector_field`].
pub fn write_vector_field(field: &VectorField, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&header_string(&field.space, 2)?)?;
    write_payload(&mut f, &[&field.x, &field.y])?;
    Ok(())
}

/// Write a scalar field.
pub fn write_scalar_field(field: &ScalarField, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&header_string(&field.space, 1)?)?;
    write_payload(&mut f, &[&field.values])?;
    Ok(())
}

fn read_file(path: &Path) -> Result<(FeSpace, Vec<Vec<f64>>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::FieldFormat("file shorter than header".into()));
    }
    let (nx, ny, r, cont, comps) = parse_header(&bytes[..HEADER_LEN])?;
    let mesh = MeshSpec::build(crate::fem::mesh::Rect::UNIT, nx, ny)
        .map_err(|e| Error::FieldFormat(e.to_string()))?;
    let space = FeSpace::new(mesh, r, cont).map_err(|e| Error::FieldFormat(e.to_string()))?;
    let values = read_payload(&bytes[HEADER_LEN..], space.dof_count(), comps)?;
    Ok((space, values))
}

/// Read a vector field written by [`write_vector_field`].
pub fn read_vector_field(path: &Path) -> Result<VectorField> {
    let (space, mut values) = read_file(path)?;
    if values.len() != 2 {
        return Err(Error::FieldFormat(format!(
            "expected 2 components, file has {}",
            values.len()
        )));
    }
    let y = values.pop().unwrap();
    let x = values.pop().unwrap();
    Ok(VectorField { space, x, y })
}

/// Read a scalar field written by [`write_scalar_field`].
pub fn read_scalar_field(path: &Path) -> Result<ScalarField> {
    let (space, mut values) = read_file(path)?;
    if values.len() != 1 {
        return Err(Error::FieldFormat(format!(
            "expected 1 component, file has {}",
            values.len()
        )));
    }
    Ok(ScalarField { space, values: values.pop().unwrap() })
}
