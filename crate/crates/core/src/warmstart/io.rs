//! Little-endian binary formats for datasets (`FFDS`) and trained networks
//! (`FFNN`).

use super::dataset::{Dataset, DatasetRecord};
use super::encoding::{ProblemEncoding, ENCODING_DIM};
use super::mlp::{Mlp, Standardizer, TrainingMeta};
use super::poly::{PolyWarmStart, TARGET_DIM};
use super::sample::Environment;
use nalgebra::{DMatrix, DVector};
use std::io::{self, Read, Write};
use thiserror::Error;

pub const DATASET_MAGIC: &[u8; 4] = b"FFDS";
pub const MODEL_MAGIC: &[u8; 4] = b"FFNN";
pub const FORMAT_VERSION: u32 = 1;
/// Values stored per dataset record after the encoding and target: horizon
/// time, environment tag, cost, inner and outer iterations.
const RECORD_META: usize = 5;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic, expected {0:?}")]
    Magic(&'static str),
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("malformed file: {0}")]
    Malformed(String),
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64s<W: Write>(w: &mut W, vs: &[f64]) -> io::Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

fn check_magic<R: Read>(r: &mut R, magic: &'static [u8; 4]) -> Result<(), FormatError> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    if &b != magic {
        return Err(FormatError::Magic(std::str::from_utf8(magic).unwrap_or("?")));
    }
    let v = get_u32(r)?;
    if v != FORMAT_VERSION {
        return Err(FormatError::Version(v));
    }
    Ok(())
}

fn check_end<R: Read>(r: &mut R) -> Result<(), FormatError> {
    let mut b = [0; 1];
    match r.read(&mut b)? {
        0 => Ok(()),
        _ => Err(FormatError::Malformed("trailing bytes".into())),
    }
}

/// Header: magic, version, record count (u64), encoding and target widths
/// (u32). Each record is `20 + 76 + 5` f64 values.
pub fn write_dataset<W: Write>(w: &mut W, records: &[DatasetRecord]) -> io::Result<()> {
    w.write_all(DATASET_MAGIC)?;
    put_u32(w, FORMAT_VERSION)?;
    put_u64(w, records.len() as u64)?;
    put_u32(w, ENCODING_DIM as u32)?;
    put_u32(w, TARGET_DIM as u32)?;
    for rec in records {
        put_f64s(w, &rec.encoding.0)?;
        put_f64s(w, &rec.target.to_vector())?;
        put_f64s(
            w,
            &[
                rec.target.horizon_time,
                rec.env.tag() as f64,
                rec.cost,
                rec.inner_iterations as f64,
                rec.outer_iterations as f64,
            ],
        )?;
    }
    Ok(())
}

pub fn read_dataset<R: Read>(r: &mut R) -> Result<Dataset, FormatError> {
    check_magic(r, DATASET_MAGIC)?;
    let count = get_u64(r)?;
    let (de, dt) = (get_u32(r)? as usize, get_u32(r)? as usize);
    if de != ENCODING_DIM || dt != TARGET_DIM {
        return Err(FormatError::Malformed(format!("record widths {de}/{dt}")));
    }
    let mut records = Vec::new();
    for k in 0..count {
        let v = get_f64s(r, ENCODING_DIM + TARGET_DIM + RECORD_META)?;
        let mut enc = [0.0; ENCODING_DIM];
        enc.copy_from_slice(&v[..ENCODING_DIM]);
        let meta = &v[ENCODING_DIM + TARGET_DIM..];
        let env = Environment::from_tag(meta[1] as u8)
            .filter(|_| meta[1].fract() == 0.0)
            .ok_or_else(|| FormatError::Malformed(format!("record {k}: environment tag {}", meta[1])))?;
        let count_of = |x: f64| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(FormatError::Malformed(format!("record {k}: iteration count {x}")))
            }
        };
        records.push(DatasetRecord {
            encoding: ProblemEncoding(enc),
            target: PolyWarmStart::from_slice(&v[ENCODING_DIM..ENCODING_DIM + TARGET_DIM], meta[0]),
            env,
            cost: meta[2],
            inner_iterations: count_of(meta[3])?,
            outer_iterations: count_of(meta[4])?,
        });
    }
    check_end(r)?;
    Ok(Dataset { records, failures: 0 })
}

/// Header: magic, version, number of layer widths, the widths (u32 each).
/// Then input mean/std, output mean/std, each layer's weights (row-major)
/// and biases, and a trailer with epochs, seed (u64), final loss and the
/// loss trace (u64 length, f64 values).
pub fn write_model<W: Write>(w: &mut W, m: &Mlp) -> io::Result<()> {
    w.write_all(MODEL_MAGIC)?;
    put_u32(w, FORMAT_VERSION)?;
    put_u32(w, m.dims().len() as u32)?;
    for &d in m.dims() {
        put_u32(w, d as u32)?;
    }
    for s in [&m.input_scale, &m.output_scale] {
        put_f64s(w, s.mean.as_slice())?;
        put_f64s(w, s.std.as_slice())?;
    }
    for (wt, b) in m.weights.iter().zip(&m.biases) {
        put_f64s(w, wt.transpose().as_slice())?;
        put_f64s(w, b.as_slice())?;
    }
    put_u64(w, m.meta.epochs as u64)?;
    put_u64(w, m.meta.seed)?;
    put_f64s(w, &[m.meta.final_loss])?;
    put_u64(w, m.meta.loss_trace.len() as u64)?;
    put_f64s(w, &m.meta.loss_trace)
}

pub fn read_model<R: Read>(r: &mut R) -> Result<Mlp, FormatError> {
    check_magic(r, MODEL_MAGIC)?;
    let layers = get_u32(r)? as usize;
    if !(2..=64).contains(&layers) {
        return Err(FormatError::Malformed(format!("{layers} layer widths")));
    }
    let mut dims = Vec::with_capacity(layers);
    for _ in 0..layers {
        let d = get_u32(r)? as usize;
        if d == 0 || d > 1 << 16 {
            return Err(FormatError::Malformed(format!("layer width {d}")));
        }
        dims.push(d);
    }
    let (din, dout) = (dims[0], dims[layers - 1]);
    let mut scale = |n| -> Result<Standardizer, FormatError> {
        Ok(Standardizer {
            mean: DVector::from_vec(get_f64s(r, n)?),
            std: DVector::from_vec(get_f64s(r, n)?),
        })
    };
    let input_scale = scale(din)?;
    let output_scale = scale(dout)?;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for w in dims.windows(2) {
        weights.push(DMatrix::from_row_slice(w[1], w[0], &get_f64s(r, w[0] * w[1])?));
        biases.push(DVector::from_vec(get_f64s(r, w[1])?));
    }
    let epochs = get_u64(r)? as usize;
    let seed = get_u64(r)?;
    let final_loss = get_f64s(r, 1)?[0];
    let n = get_u64(r)?;
    if n > 1 << 32 {
        return Err(FormatError::Malformed(format!("loss trace of length {n}")));
    }
    let loss_trace = get_f64s(r, n as usize)?;
    check_end(r)?;
    let meta = TrainingMeta {
        epochs,
        final_loss,
        seed,
        loss_trace,
    };
    Mlp::from_parts(weights, biases, input_scale, output_scale, meta)
        .ok_or_else(|| FormatError::Malformed("inconsistent layer shapes".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SMatrix;

    fn record(k: usize) -> DatasetRecord {
        DatasetRecord {
            encoding: ProblemEncoding(std::array::from_fn(|i| (i * k) as f64 * 0.5)),
            target: PolyWarmStart {
                alpha: SMatrix::from_fn(|i, j| (i + j + k) as f64),
                beta: SMatrix::from_fn(|i, j| -((i * j + k) as f64)),
                horizon_time: 30.0,
            },
            env: if k % 2 == 0 { Environment::Jem } else { Environment::Granite },
            cost: 1.25 + k as f64,
            inner_iterations: 1000 + k,
            outer_iterations: 7,
        }
    }

    #[test]
    fn dataset_round_trip() {
        let recs: Vec<_> = (0..3).map(record).collect();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &recs).unwrap();
        assert_eq!(&buf[..4], b"FFDS");
        assert_eq!(buf.len(), 4 + 4 + 8 + 4 + 4 + 3 * 8 * (20 + 76 + 5));
        let back = read_dataset(&mut buf.as_slice()).unwrap();
        assert_eq!(back.records, recs);
    }

    #[test]
    fn model_round_trip() {
        let mut m = Mlp::new(&[3, 5, 2], 4);
        m.input_scale.mean[1] = 0.7;
        m.output_scale.std[0] = 3.0;
        m.meta.loss_trace = vec![1.0, 0.5];
        m.meta.epochs = 2;
        m.meta.final_loss = 0.5;
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"FFNN");
        // weights are row-major: first stored weight is W0[0, 1] second
        let off = 4 + 4 + 4 + 3 * 4 + 8 * (2 * 3 + 2 * 2);
        let second = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
        assert_eq!(second, m.weights[0][(0, 1)]);
        assert_eq!(read_model(&mut buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        write_dataset(&mut buf, &[record(1)]).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_dataset(&mut bad.as_slice()), Err(FormatError::Magic(_))));
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(read_dataset(&mut bad.as_slice()), Err(FormatError::Version(9))));
        assert!(matches!(read_dataset(&mut &buf[..buf.len() - 3]), Err(FormatError::Io(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_dataset(&mut long.as_slice()), Err(FormatError::Malformed(_))));
        assert!(matches!(read_model(&mut buf.as_slice()), Err(FormatError::Magic(_))));
    }
}
