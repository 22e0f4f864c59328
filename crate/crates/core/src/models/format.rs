//! Flat binary model container. The byte layout is documented in
//! `docs/model-format.md`; all integers and floats are little-endian.

use std::io::{Read, Write};
use std::sync::Arc;

use super::{ModelError, ModelSpec, Params, Patches, Pooling, ScalarMap, SharingBasis, Variant};
use crate::group::parse_group;

pub const MAGIC: &[u8; 4] = b"EQBM";
pub const VERSION: u16 = 1;

const TAG_SPATIAL: u8 = 0;
const TAG_FREQUENCY: u8 = 1;
const TAG_WEIGHT_SHARE: u8 = 2;
const TAG_LOCAL: u8 = 3;

const BASIS_CIRCULANT: u8 = 0;
const BASIS_DENSE: u8 = 1;

fn pooling_tags(p: Pooling) -> [u8; 3] {
    match p {
        Pooling::Average => [0, 0, 0],
        Pooling::Max => [1, 0, 0],
        Pooling::General { rho, phi } => [2, rho.tag(), phi.tag()],
    }
}

fn u32_of(v: usize) -> Result<[u8; 4], ModelError> {
    u32::try_from(v)
        .map(u32::to_le_bytes)
        .map_err(|_| ModelError::Format(format!("value {v} does not fit in u32")))
}

pub fn write_model<W: Write>(mut out: W, spec: &ModelSpec, params: &Params) -> Result<(), ModelError> {
    params.check(spec)?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(match spec.variant() {
        Variant::Spatial => TAG_SPATIAL,
        Variant::Frequency(_) => TAG_FREQUENCY,
        Variant::WeightShare(_) => TAG_WEIGHT_SHARE,
        Variant::Local(_) => TAG_LOCAL,
    });
    buf.extend_from_slice(&pooling_tags(spec.pooling()));
    buf.push(0); // activation: relu
    let name = spec.group().spec_string();
    let len = u16::try_from(name.len()).map_err(|_| ModelError::Format("group spec too long".into()))?;
    buf.extend_from_slice(&len.to_le_bytes());
    buf.extend_from_slice(name.as_bytes());
    buf.extend_from_slice(&u32_of(spec.c0())?);
    buf.extend_from_slice(&u32_of(spec.c1())?);
    match spec.variant() {
        Variant::Spatial | Variant::Frequency(_) => {}
        Variant::WeightShare(b) => {
            if b.is_circulant() {
                buf.push(BASIS_CIRCULANT);
            } else {
                buf.push(BASIS_DENSE);
                for v in b.raw() {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Variant::Local(p) => {
            buf.extend_from_slice(&u32_of(p.width())?);
            for set in p.sets() {
                for &i in set {
                    buf.extend_from_slice(&u32_of(i)?);
                }
            }
        }
    }
    for v in params.u.iter().chain(&params.filters) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(ModelError::Format(format!(
                "truncated at byte {} (need {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<usize, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ModelError> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn read_model<R: Read>(mut input: R) -> Result<(ModelSpec, Params), ModelError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    let magic = cur.take(4)?;
    if magic != MAGIC {
        return Err(ModelError::Format(format!("bad magic {magic:02x?}")));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(ModelError::Format(format!("unsupported version {version}")));
    }
    let variant_tag = cur.u8()?;
    let [ptag, rho, phi] = [cur.u8()?, cur.u8()?, cur.u8()?];
    let pooling = match ptag {
        0 => Pooling::Average,
        1 => Pooling::Max,
        2 => Pooling::General {
            rho: ScalarMap::from_tag(rho).ok_or_else(|| ModelError::Format(format!("bad rho tag {rho}")))?,
            phi: ScalarMap::from_tag(phi).ok_or_else(|| ModelError::Format(format!("bad phi tag {phi}")))?,
        },
        t => return Err(ModelError::Format(format!("bad pooling tag {t}"))),
    };
    let activation = cur.u8()?;
    if activation != 0 {
        return Err(ModelError::Format(format!("bad activation tag {activation}")));
    }
    let name_len = cur.u16()? as usize;
    let name = std::str::from_utf8(cur.take(name_len)?)
        .map_err(|_| ModelError::Format("group spec is not utf-8".into()))?;
    let group = parse_group(name)?;
    let c0 = cur.u32()?;
    let c1 = cur.u32()?;
    let n = group.order();
    let spec = match variant_tag {
        TAG_SPATIAL => ModelSpec::spatial(group, pooling, c0, c1)?,
        TAG_FREQUENCY => ModelSpec::frequency(group, pooling, c0, c1)?,
        TAG_WEIGHT_SHARE => {
            let basis = match cur.u8()? {
                BASIS_CIRCULANT => SharingBasis::circulant(&group),
                BASIS_DENSE => SharingBasis::from_dense(n, cur.f64s(n * n * n)?)
                    .ok_or_else(|| ModelError::Format("bad dense basis".into()))?,
                t => return Err(ModelError::Format(format!("bad basis tag {t}"))),
            };
            ModelSpec::new(group, Variant::WeightShare(Arc::new(basis)), pooling, c0, c1)?
        }
        TAG_LOCAL => {
            let width = cur.u32()?;
            let sets = (0..n)
                .map(|_| (0..width).map(|_| cur.u32()).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            ModelSpec::new(group, Variant::Local(Arc::new(Patches::new(n, sets)?)), pooling, c0, c1)?
        }
        t => return Err(ModelError::Format(format!("bad variant tag {t}"))),
    };
    let u = cur.f64s(c1)?;
    let filters = cur.f64s(spec.num_filter_params())?;
    if cur.pos != bytes.len() {
        return Err(ModelError::Format(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }
    let params = Params { u, filters };
    params.check(&spec)?;
    Ok((spec, params))
}
