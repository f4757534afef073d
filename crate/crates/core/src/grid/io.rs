//! Field serialisation.
//!
//! Binary layout (little endian): `n: u64, k: u64, R: u64, period: f64`,
//! followed by the `R^n * k` samples as `f64` in node-major order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::real::Real;

use super::field::{PeriodicField, PERIOD};

pub fn write_binary<T: Real, W: Write>(f: &PeriodicField<T>, mut w: W) -> Result<()> {
    w.write_all(&(f.dim() as u64).to_le_bytes())?;
    w.write_all(&(f.components() as u64).to_le_bytes())?;
    w.write_all(&(f.resolution() as u64).to_le_bytes())?;
    w.write_all(&PERIOD.to_le_bytes())?;
    let mut buf = Vec::with_capacity(f.data().len() * 8);
    for &x in f.data() {
        buf.extend_from_slice(&x.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<T: Real, R: Read>(mut r: R) -> Result<PeriodicField<T>> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut r)?) as usize;
    let k = u64::from_le_bytes(next(&mut r)?) as usize;
    let res = u64::from_le_bytes(next(&mut r)?) as usize;
    let period = f64::from_le_bytes(next(&mut r)?);
    if (period - PERIOD).abs() > 1e-12 {
        return Err(Error::InvalidField(format!("period {period} is not 2π")));
    }
    if !(2..=4).contains(&n) || res > 1 << 16 {
        return Err(Error::InvalidField(format!("header n = {n}, R = {res}")));
    }
    let len = res.pow(n as u32) * k;
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    PeriodicField::new(n, k, res, data)
}

/// CSV with columns `x0..x{n-1}, c0..c{k-1}`, one row per node.
pub fn write_csv<T: Real, W: Write>(f: &PeriodicField<T>, mut w: W) -> Result<()> {
    let head: Vec<String> = (0..f.dim()).map(|a| format!("x{a}")).chain((0..f.components()).map(|c| format!("c{c}"))).collect();
    writeln!(w, "{}", head.join(","))?;
    for node in 0..f.nodes() {
        let row: Vec<String> = f.coords(node).iter().chain(f.at(node)).map(|v| format!("{:.17e}", v.as_f64())).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_binary<T: Real>(f: &PeriodicField<T>, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_binary(f, std::io::BufWriter::new(file))
}

pub fn load_binary<T: Real>(path: &std::path::Path) -> Result<PeriodicField<T>> {
    let file = std::fs::File::open(path)?;
    read_binary(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_exact() {
        let f = PeriodicField::<f64>::from_fn(3, 2, 8, |x, o| {
            o[0] = x[0].sin() * x[2];
            o[1] = 1.0 / 3.0 + x[1];
        })
        .unwrap();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * 512 * 2);
        let g: PeriodicField<f64> = read_binary(&buf[..]).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let f = PeriodicField::<f64>::zeros(2, 1, 8).unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("x0,x1,c0"));
        assert_eq!(s.lines().count(), 65);
    }
}
