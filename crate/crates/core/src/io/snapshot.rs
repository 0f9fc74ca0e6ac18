//! Binary snapshots: `SDB1`, then little-endian `u32 n`, `f64 L, ν, g, t`,
//! then the physical-space arrays `u₁`, `u₂`, `θ` row-major.

use std::fs;
use std::path::Path;

use crate::dynamics::SimState;
use crate::error::{Error, Result};
use crate::spectral::{leray_project, Grid, PhysParams, SpectralScalar, SpectralVector};

pub const MAGIC: &[u8; 4] = b"SDB1";
const HEADER_LEN: usize = 4 + 4 + 4 * 8;
/// Mean and divergence allowed in a stored state before it is rejected.
pub const SNAPSHOT_TOL: f64 = 1e-8;

pub fn encode_snapshot(state: &SimState, params: &PhysParams) -> Vec<u8> {
    let g = state.grid();
    let n = g.n();
    let mut out = Vec::with_capacity(HEADER_LEN + 3 * n * n * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in [g.box_len(), params.nu, params.g, state.t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for field in [&state.u.u1, &state.u.u2, &state.theta] {
        for v in field.to_physical() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_snapshot(state: &SimState, params: &PhysParams, path: &Path) -> Result<()> {
    fs::write(path, encode_snapshot(state, params))?;
    Ok(())
}

fn f64_at(bytes: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"))
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(SimState, PhysParams)> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile);
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile);
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let box_len = f64_at(bytes, 8);
    let params = PhysParams {
        nu: f64_at(bytes, 16),
        g: f64_at(bytes, 24),
        box_len,
    };
    let t = f64_at(bytes, 32);
    let count = n.checked_mul(n).ok_or(Error::TruncatedFile)?;
    let expected = HEADER_LEN + 3 * count * 8;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile);
    }
    if bytes.len() > expected {
        return Err(Error::InvariantViolation(format!(
            "{} trailing bytes after the arrays",
            bytes.len() - expected
        )));
    }
    params
        .validate()
        .map_err(|e| Error::InvariantViolation(e.to_string()))?;
    if !t.is_finite() {
        return Err(Error::InvariantViolation("non-finite time".into()));
    }
    let grid = Grid::new(n, box_len).map_err(|e| Error::InvariantViolation(e.to_string()))?;
    let mut fields = Vec::with_capacity(3);
    for (k, name) in ["u1", "u2", "theta"].iter().enumerate() {
        let start = HEADER_LEN + k * count * 8;
        let values: Vec<f64> = (0..count).map(|i| f64_at(bytes, start + 8 * i)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation(format!("{name} has non-finite values")));
        }
        let (field, mean) = SpectralScalar::from_physical_with_mean(&values, &grid)?;
        if mean.abs() > SNAPSHOT_TOL {
            return Err(Error::InvariantViolation(format!("{name} has mean {mean:e}")));
        }
        fields.push(field);
    }
    let theta = fields.pop().expect("three fields");
    let u2 = fields.pop().expect("three fields");
    let u1 = fields.pop().expect("three fields");
    let u = SpectralVector::new(u1, u2)?;
    let residual = u.divergence_residual();
    if residual > SNAPSHOT_TOL {
        return Err(Error::InvariantViolation(format!(
            "velocity divergence {residual:e}"
        )));
    }
    let state = SimState::new(leray_project(&u), theta, t)?;
    Ok((state, params))
}

pub fn read_snapshot(path: &Path) -> Result<(SimState, PhysParams)> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    decode_snapshot(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_state, RandomSpec};
    use std::f64::consts::PI;

    fn sample() -> (SimState, PhysParams) {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let p = PhysParams::new(0.1, 2.0, 2.0 * PI).unwrap();
        let spec = RandomSpec { seed: 3, k_peak: 2.0, u_l2: 1.0, theta_l2: 1.0 };
        let mut s = random_state(&g, &spec).unwrap();
        s.t = 0.75;
        (s, p)
    }

    #[test]
    fn round_trip() {
        let (s, p) = sample();
        let (back, bp) = decode_snapshot(&encode_snapshot(&s, &p)).unwrap();
        assert_eq!(bp, p);
        assert_eq!(back.t, 0.75);
        for (a, b) in [(&s.u.u1, &back.u.u1), (&s.u.u2, &back.u.u2), (&s.theta, &back.theta)] {
            let worst = a
                .coeffs()
                .iter()
                .zip(b.coeffs())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(worst < 1e-13, "{worst}");
        }
    }

    #[test]
    fn corrupt_files() {
        let (s, p) = sample();
        let bytes = encode_snapshot(&s, &p);
        assert!(matches!(decode_snapshot(&bytes[..bytes.len() - 1]), Err(Error::TruncatedFile)));
        assert!(matches!(decode_snapshot(&bytes[..10]), Err(Error::TruncatedFile)));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_snapshot(&bad), Err(Error::BadMagic)));
        // add 1e-3 to every θ value
        let mut shifted = bytes.clone();
        let start = HEADER_LEN + 2 * 256 * 8;
        for i in 0..256 {
            let off = start + 8 * i;
            let v = f64_at(&shifted, off) + 1e-3;
            shifted[off..off + 8].copy_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(decode_snapshot(&shifted), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn divergent_velocity_rejected() {
        let (s, p) = sample();
        let mut bytes = encode_snapshot(&s, &p);
        let g = s.grid();
        let bump = SpectralScalar::from_fn(g, |x, _| 0.1 * x.sin()).unwrap().to_physical();
        for (i, b) in bump.iter().enumerate() {
            let off = HEADER_LEN + 8 * i;
            let v = f64_at(&bytes, off) + b;
            bytes[off..off + 8].copy_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(decode_snapshot(&bytes), Err(Error::InvariantViolation(_))));
    }
}
