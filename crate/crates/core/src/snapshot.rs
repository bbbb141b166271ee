//! Binary field snapshots and solver checkpoints.
//!
//! A snapshot is a little-endian header
//! `{magic, version, components, nh, nh, nv, L, ell, representation}` followed
//! by the raw `f64` payload. Physical payloads are ordered `(c, i1, i2, j)`;
//! spectral payloads hold `(re, im)` pairs in the same order with Chebyshev
//! modes in place of nodes. Planar fields use `nv = 0` and `ell = 0`.

use crate::error::{Error, Result};
use crate::field::{Field2D, Field3D};
use crate::geometry::{PlaneGeometry, SlabGeometry};
use crate::regime::RegimeParams;
use rustfft::num_complex::Complex64;
use std::io::{self, Read, Write};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"TSLB";
pub const CHECKPOINT_MAGIC: [u8; 4] = *b"TSCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Physical = 0,
    Spectral = 1,
}

impl Representation {
    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(Self::Physical),
            1 => Ok(Self::Spectral),
            _ => Err(format_error(format!("unknown representation tag {tag}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub components: u32,
    pub nh: u32,
    pub nv: u32,
    pub period: f64,
    pub ell: f64,
    pub representation: Representation,
}

fn format_error(msg: String) -> Error {
    Error::InvalidParameter {
        name: "snapshot",
        reason: msg,
    }
}

fn io_error(e: io::Error) -> Error {
    format_error(e.to_string())
}

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(io_error)
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(io_error)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(io_error)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(io_error)?;
    Ok(f64::from_le_bytes(b))
}

fn get_magic(r: &mut impl Read, want: [u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(io_error)?;
    if m != want {
        return Err(format_error(format!("bad magic {m:?}")));
    }
    let v = get_u32(r)?;
    if v != VERSION {
        return Err(format_error(format!("unsupported version {v}")));
    }
    Ok(())
}

fn write_header(w: &mut impl Write, h: &SnapshotHeader) -> Result<()> {
    w.write_all(&SNAPSHOT_MAGIC).map_err(io_error)?;
    put_u32(w, VERSION)?;
    put_u32(w, h.components)?;
    put_u32(w, h.nh)?;
    put_u32(w, h.nh)?;
    put_u32(w, h.nv)?;
    put_f64(w, h.period)?;
    put_f64(w, h.ell)?;
    put_u32(w, h.representation as u32)
}

pub fn read_header(r: &mut impl Read) -> Result<SnapshotHeader> {
    get_magic(r, SNAPSHOT_MAGIC)?;
    let components = get_u32(r)?;
    let nh = get_u32(r)?;
    let nh2 = get_u32(r)?;
    if nh != nh2 {
        return Err(format_error(format!("non-square grid {nh} x {nh2}")));
    }
    let nv = get_u32(r)?;
    let period = get_f64(r)?;
    let ell = get_f64(r)?;
    let representation = Representation::from_tag(get_u32(r)?)?;
    Ok(SnapshotHeader {
        components,
        nh,
        nv,
        period,
        ell,
        representation,
    })
}

fn write_payload(w: &mut impl Write, data: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * data.len());
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_error)
}

fn read_payload(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf).map_err(io_error)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn complex_payload(s: &[Complex64]) -> Vec<f64> {
    s.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn from_pairs(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

pub fn write_field3d(w: &mut impl Write, f: &Field3D, rep: Representation) -> Result<()> {
    let g = f.geom();
    write_header(
        w,
        &SnapshotHeader {
            components: f.ncomp() as u32,
            nh: g.nh() as u32,
            nv: g.nv() as u32,
            period: g.period(),
            ell: g.ell,
            representation: rep,
        },
    )?;
    match rep {
        Representation::Physical => write_payload(w, f.phys()),
        Representation::Spectral => write_payload(w, &complex_payload(f.spec())),
    }
}

pub fn read_field3d(r: &mut impl Read) -> Result<Field3D> {
    let h = read_header(r)?;
    if h.nv == 0 {
        return Err(format_error("planar snapshot where a slab field was expected".into()));
    }
    let g = SlabGeometry::new(h.period, h.nh as usize, h.nv as usize, h.ell)?;
    let n = h.components as usize * g.plane.npts() * g.nv();
    match h.representation {
        Representation::Physical => Field3D::from_phys(&g, h.components as usize, read_payload(r, n)?),
        Representation::Spectral => Field3D::from_spec(&g, h.components as usize, &from_pairs(&read_payload(r, 2 * n)?)),
    }
}

pub fn write_field2d(w: &mut impl Write, f: &Field2D, rep: Representation) -> Result<()> {
    let p = f.plane();
    write_header(
        w,
        &SnapshotHeader {
            components: f.ncomp() as u32,
            nh: p.nh as u32,
            nv: 0,
            period: p.period,
            ell: 0.0,
            representation: rep,
        },
    )?;
    match rep {
        Representation::Physical => write_payload(w, f.phys()),
        Representation::Spectral => write_payload(w, &complex_payload(f.spec())),
    }
}

pub fn read_field2d(r: &mut impl Read) -> Result<Field2D> {
    let h = read_header(r)?;
    if h.nv != 0 {
        return Err(format_error("slab snapshot where a planar field was expected".into()));
    }
    let p = PlaneGeometry::new(h.period, h.nh as usize)?;
    let n = h.components as usize * p.npts();
    match h.representation {
        Representation::Physical => Field2D::from_phys(&p, h.components as usize, read_payload(r, n)?),
        Representation::Spectral => Field2D::from_spec(&p, h.components as usize, &from_pairs(&read_payload(r, 2 * n)?)),
    }
}

/// Solver state on disk: regime, time, then density and velocity snapshots.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub regime: RegimeParams,
    pub t: f64,
    pub rho: Field3D,
    pub u: Field3D,
}

pub fn write_checkpoint(w: &mut impl Write, c: &Checkpoint) -> Result<()> {
    w.write_all(&CHECKPOINT_MAGIC).map_err(io_error)?;
    put_u32(w, VERSION)?;
    put_u32(w, c.regime.n)?;
    put_f64(w, c.regime.epsilon)?;
    put_f64(w, c.regime.ell)?;
    put_f64(w, c.regime.alpha)?;
    put_f64(w, c.t)?;
    write_field3d(w, &c.rho, Representation::Physical)?;
    write_field3d(w, &c.u, Representation::Physical)
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<Checkpoint> {
    get_magic(r, CHECKPOINT_MAGIC)?;
    let n = get_u32(r)?;
    let epsilon = get_f64(r)?;
    let ell = get_f64(r)?;
    let alpha = get_f64(r)?;
    let t = get_f64(r)?;
    Ok(Checkpoint {
        regime: RegimeParams::new(n, epsilon, ell, alpha)?,
        t,
        rho: read_field3d(r)?,
        u: read_field3d(r)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn slab_roundtrip_both_representations() {
        let g = SlabGeometry::new(2.0 * PI, 8, 5, 0.3).unwrap();
        let f = Field3D::from_fn(&g, 3, |c, x, y, z| c as f64 + x.sin() * y.cos() * (1.0 + z));
        for rep in [Representation::Physical, Representation::Spectral] {
            let mut buf = Vec::new();
            write_field3d(&mut buf, &f, rep).unwrap();
            let back = read_field3d(&mut buf.as_slice()).unwrap();
            for (a, b) in f.phys().iter().zip(back.phys()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let mut buf = Vec::new();
        write_field3d(&mut buf, &f, Representation::Physical).unwrap();
        assert_eq!(&buf[..4], b"TSLB");
        assert_eq!(buf.len(), 4 + 4 * 5 + 16 + 4 + 8 * f.phys().len());
    }

    #[test]
    fn planar_roundtrip_and_kind_check() {
        let p = PlaneGeometry::new(3.0, 8).unwrap();
        let f = Field2D::from_fn(&p, 2, |c, x, y| c as f64 - x * 0.1 + y.sin());
        let mut buf = Vec::new();
        write_field2d(&mut buf, &f, Representation::Physical).unwrap();
        assert_eq!(read_field2d(&mut buf.as_slice()).unwrap().phys(), f.phys());
        assert!(read_field3d(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let g = SlabGeometry::new(2.0 * PI, 8, 5, 0.25).unwrap();
        let c = Checkpoint {
            regime: RegimeParams::new(4, 0.25, 0.25, 0.5).unwrap(),
            t: 0.125,
            rho: Field3D::from_fn(&g, 1, |_, x, _, _| 1.0 + 0.1 * x.cos()),
            u: Field3D::from_fn(&g, 3, |c, _, y, _| if c == 0 { y.sin() } else { 0.0 }),
        };
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &c).unwrap();
        let back = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(back.regime, c.regime);
        assert_eq!(back.t, c.t);
        assert_eq!(back.rho.phys(), c.rho.phys());
        assert_eq!(back.u.phys(), c.u.phys());
        buf[0] = b'X';
        assert!(read_checkpoint(&mut buf.as_slice()).is_err());
    }
}
