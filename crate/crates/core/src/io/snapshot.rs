//! Self-describing snapshot container: a text header terminated by `end`,
//! then little-endian f64 arrays in declared order.
//!
//! ```text
//! EBSNAP 1
//! t 0.5
//! gamma 2
//! field rho 64 1 1
//! field I 4 2 64
//! end
//! <raw bytes>
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::coefficients::PhysicalConstants;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hydro::FluidState;
use crate::transport::RadiationField;

const MAGIC: &str = "EBSNAP 1";

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotField {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Snapshot {
    /// Scalar metadata; values are written with `{}` (shortest round-trip form).
    pub header: BTreeMap<String, String>,
    pub fields: Vec<SnapshotField>,
}

impl Snapshot {
    pub fn from_state(
        t: f64,
        grid: &Grid,
        constants: &PhysicalConstants,
        fluid: &FluidState,
        radiation: &RadiationField,
    ) -> Self {
        let mut header = BTreeMap::new();
        let shape = grid.shape();
        let (lo, hi) = (grid.lo(), grid.hi());
        header.insert("t".into(), t.to_string());
        header.insert("dim".into(), grid.dim().to_string());
        header.insert("shape".into(), format!("{} {} {}", shape[0], shape[1], shape[2]));
        header.insert("lo".into(), format!("{} {} {}", lo[0], lo[1], lo[2]));
        header.insert("hi".into(), format!("{} {} {}", hi[0], hi[1], hi[2]));
        header.insert("gamma".into(), constants.gamma.to_string());
        header.insert("c".into(), constants.c.to_string());
        header.insert("alpha".into(), constants.alpha.to_string());
        let n = grid.len();
        let fields = vec![
            SnapshotField {
                name: "rho".into(),
                shape: shape.to_vec(),
                data: fluid.rho.clone(),
            },
            SnapshotField {
                name: "u".into(),
                shape: vec![n, 3],
                data: fluid.u.iter().flatten().copied().collect(),
            },
            SnapshotField {
                name: "I".into(),
                shape: vec![radiation.groups, radiation.ordinates, radiation.cells],
                data: radiation.intensities.clone(),
            },
        ];
        Snapshot { header, fields }
    }

    pub fn field(&self, name: &str) -> Option<&SnapshotField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for f in &self.fields {
            if f.shape.iter().product::<usize>() != f.data.len() {
                return Err(Error::Snapshot(format!("field '{}' does not match its shape", f.name)));
            }
            if f.name.contains(char::is_whitespace) {
                return Err(Error::Snapshot(format!("field name '{}' contains whitespace", f.name)));
            }
        }
        writeln!(out, "{MAGIC}")?;
        for (k, v) in &self.header {
            if k == "field" || k == "end" || k.contains(char::is_whitespace) || v.contains('\n') {
                return Err(Error::Snapshot(format!("invalid header entry '{k}'")));
            }
            writeln!(out, "{k} {v}")?;
        }
        for f in &self.fields {
            let dims: Vec<String> = f.shape.iter().map(|d| d.to_string()).collect();
            writeln!(out, "field {} {}", f.name, dims.join(" "))?;
        }
        writeln!(out, "end")?;
        for f in &self.fields {
            let mut buf = Vec::with_capacity(8 * f.data.len());
            for x in &f.data {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut r = BufReader::new(input);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(Error::Snapshot("missing EBSNAP 1 magic line".into()));
        }
        let mut header = BTreeMap::new();
        let mut decl: Vec<(String, Vec<usize>)> = Vec::new();
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Snapshot("header not terminated by 'end'".into()));
            }
            let l = line.trim_end_matches('\n');
            if l == "end" {
                break;
            }
            let (key, rest) = l.split_once(' ').unwrap_or((l, ""));
            if key == "field" {
                let mut parts = rest.split_whitespace();
                let name = parts
                    .next()
                    .ok_or_else(|| Error::Snapshot("field declaration without a name".into()))?;
                let shape = parts
                    .map(|p| p.parse::<usize>().map_err(|_| Error::Snapshot(format!("bad dimension '{p}'"))))
                    .collect::<Result<Vec<_>>>()?;
                decl.push((name.to_string(), shape));
            } else {
                header.insert(key.to_string(), rest.to_string());
            }
        }
        let mut fields = Vec::with_capacity(decl.len());
        for (name, shape) in decl {
            let len: usize = shape.iter().product();
            let mut bytes = vec![0u8; 8 * len];
            r.read_exact(&mut bytes)
                .map_err(|_| Error::Snapshot(format!("truncated data for field '{name}'")))?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            fields.push(SnapshotField { name, shape, data });
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Snapshot(format!("{} trailing bytes after the declared fields", rest.len())));
        }
        Ok(Snapshot { header, fields })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Snapshot::read(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        let mut header = BTreeMap::new();
        header.insert("t".into(), 0.1f64.to_string());
        Snapshot {
            header,
            fields: vec![
                SnapshotField {
                    name: "a".into(),
                    shape: vec![2, 2],
                    data: vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300],
                },
                SnapshotField {
                    name: "b".into(),
                    shape: vec![3],
                    data: vec![0.1, 0.2, 0.3],
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let back = Snapshot::read(&buf[..]).unwrap();
        assert_eq!(back.header, s.header);
        for (a, b) in back.fields.iter().zip(&s.fields) {
            assert_eq!(a.shape, b.shape);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.data), bits(&b.data));
        }
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(matches!(Snapshot::read(&b"nope\n"[..]), Err(Error::Snapshot(_))));
        let mut buf = Vec::new();
        sample().write(&mut buf).unwrap();
        assert!(Snapshot::read(&buf[..buf.len() - 3]).is_err());
        buf.push(0);
        assert!(Snapshot::read(&buf[..]).is_err());
        let mut bad = sample();
        bad.fields[0].shape = vec![5];
        assert!(bad.write(Vec::new()).is_err());
    }
}
