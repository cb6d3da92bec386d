//! Binary field snapshots.
//!
//! Layout: an ASCII header of `key value` lines terminated by a line `end`,
//! followed by `cells × components` little-endian `f64` values in row-major
//! cell order (component fastest).
//!
//! ```text
//! swarmhydro-snapshot 1
//! field rho
//! dim 1
//! n 256 1
//! half_width 4 0
//! domain box            (or: domain ball <radius>)
//! time 0.5
//! components 1
//! end
//! <raw f64 LE data>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{DomainKind, Grid, ScalarField, VectorField};
use crate::scalar::Real;

const MAGIC: &str = "swarmhydro-snapshot 1";

fn write_header<T: Real, W: Write>(
    w: &mut W,
    name: &str,
    grid: &Grid<T>,
    time: T,
    components: usize,
) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "field {name}")?;
    writeln!(w, "dim {}", grid.dim())?;
    writeln!(w, "n {} {}", grid.n(0), grid.n(1))?;
    writeln!(
        w,
        "half_width {} {}",
        grid.half_width(0).to_f64_lossy(),
        grid.half_width(1).to_f64_lossy()
    )?;
    match grid.kind() {
        DomainKind::Box => writeln!(w, "domain box")?,
        DomainKind::Ball { radius } => writeln!(w, "domain ball {}", radius.to_f64_lossy())?,
    }
    writeln!(w, "time {}", time.to_f64_lossy())?;
    writeln!(w, "components {components}")?;
    writeln!(w, "end")?;
    Ok(())
}

pub fn write_scalar<T: Real, W: Write>(
    mut w: W,
    name: &str,
    field: &ScalarField<T>,
    time: T,
) -> Result<()> {
    write_header(&mut w, name, field.grid(), time, 1)?;
    for v in field.values() {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn write_vector<T: Real, W: Write>(
    mut w: W,
    name: &str,
    field: &VectorField<T>,
    time: T,
) -> Result<()> {
    let d = field.grid().dim();
    write_header(&mut w, name, field.grid(), time, d)?;
    for v in field.values() {
        for comp in v.iter().take(d) {
            w.write_all(&comp.to_f64_lossy().to_le_bytes())?;
        }
    }
    Ok(())
}

/// A decoded snapshot file.
#[derive(Clone, Debug)]
pub struct Snapshot<T> {
    pub name: String,
    pub time: T,
    pub grid: Arc<Grid<T>>,
    pub components: usize,
    pub values: Vec<f64>,
}

impl<T: Real> Snapshot<T> {
    pub fn into_scalar(self) -> Result<ScalarField<T>> {
        if self.components != 1 {
            return Err(Error::Snapshot(format!(
                "expected 1 component, found {}",
                self.components
            )));
        }
        ScalarField::new(&self.grid, self.values.into_iter().map(T::lit).collect())
    }

    pub fn into_vector(self) -> Result<VectorField<T>> {
        let d = self.grid.dim();
        if self.components != d {
            return Err(Error::Snapshot(format!(
                "expected {d} components, found {}",
                self.components
            )));
        }
        let values = self
            .values
            .chunks(d)
            .map(|c| {
                let mut v = [T::zero(); 2];
                for (k, x) in c.iter().enumerate() {
                    v[k] = T::lit(*x);
                }
                v
            })
            .collect();
        VectorField::new(&self.grid, values)
    }
}

pub fn read_snapshot<T: Real, R: Read>(r: R) -> Result<Snapshot<T>> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    let mut next_line = |reader: &mut BufReader<R>| -> Result<String> {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Snapshot("unexpected end of header".into()));
        }
        Ok(line.trim_end().to_string())
    };
    if next_line(&mut reader)? != MAGIC {
        return Err(Error::Snapshot("bad magic line".into()));
    }
    let mut name = None;
    let mut dim = None;
    let mut n = None;
    let mut half = None;
    let mut kind = DomainKind::Box;
    let mut time = None;
    let mut components = None;
    loop {
        let l = next_line(&mut reader)?;
        if l == "end" {
            break;
        }
        let mut parts = l.split_whitespace();
        let key = parts.next().unwrap_or("");
        let rest: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<f64> {
            rest.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Snapshot(format!("bad value in line `{l}`")))
        };
        match key {
            "field" => name = rest.first().map(|s| s.to_string()),
            "dim" => dim = Some(num(0)? as usize),
            "n" => n = Some([num(0)? as usize, num(1)? as usize]),
            "half_width" => half = Some([num(0)?, num(1)?]),
            "domain" => {
                kind = match rest.first().copied() {
                    Some("box") => DomainKind::Box,
                    Some("ball") => DomainKind::Ball {
                        radius: T::lit(num(1)?),
                    },
                    _ => return Err(Error::Snapshot(format!("unknown domain `{l}`"))),
                }
            }
            "time" => time = Some(num(0)?),
            "components" => components = Some(num(0)? as usize),
            _ => return Err(Error::Snapshot(format!("unknown header key `{key}`"))),
        }
    }
    let missing = |k: &str| Error::Snapshot(format!("header lacks `{k}`"));
    let dim = dim.ok_or_else(|| missing("dim"))?;
    let n = n.ok_or_else(|| missing("n"))?;
    let half = half.ok_or_else(|| missing("half_width"))?;
    let components = components.ok_or_else(|| missing("components"))?;
    let grid = Grid::with_axes(dim, n, [T::lit(half[0]), T::lit(half[1])], kind)?;
    let count = grid.len() * components;
    let mut bytes = Vec::with_capacity(count * 8);
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Snapshot(format!(
            "expected {} data bytes, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    Ok(Snapshot {
        name: name.ok_or_else(|| missing("field"))?,
        time: T::lit(time.ok_or_else(|| missing("time"))?),
        grid,
        components,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_snapshot_round_trip() {
        let g = Grid::<f64>::new(2, 6, 1.5, DomainKind::Ball { radius: 1.2 }).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] - 0.25 * x[1]);
        let mut buf = Vec::new();
        write_scalar(&mut buf, "rho", &f, 0.75).unwrap();
        let snap = read_snapshot::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(snap.name, "rho");
        assert_eq!(snap.time, 0.75);
        assert_eq!(snap.into_scalar().unwrap(), f);
    }

    #[test]
    fn header_is_text_then_le_doubles() {
        let g = Grid::<f64>::line(4, 1.0).unwrap();
        let f = VectorField::from_fn(&g, |x| [x[0], 0.0]);
        let mut buf = Vec::new();
        write_vector(&mut buf, "mom", &f, 0.0).unwrap();
        let text_end = buf.windows(4).position(|w| w == b"end\n").unwrap() + 4;
        assert_eq!(buf.len() - text_end, 4 * 8);
        let first = f64::from_le_bytes(buf[text_end..text_end + 8].try_into().unwrap());
        assert_eq!(first, -0.75);
    }

    #[test]
    fn truncated_data_is_rejected() {
        let g = Grid::<f64>::line(4, 1.0).unwrap();
        let mut buf = Vec::new();
        write_scalar(&mut buf, "rho", &ScalarField::zeros(&g), 0.0).unwrap();
        buf.pop();
        assert!(read_snapshot::<f64, _>(buf.as_slice()).is_err());
    }
}
