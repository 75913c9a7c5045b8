//! Text file formats for POI sets and swarm poses.
//!
//! POI files:
//!
//! ```text
//! # seed=7 center=0,0,0 radii=100,100,100
//! x,y,z
//! 1.2345678901234567e1,...
//! ```
//!
//! Pose files are CSV with the header `x,y,z,theta,nu,phi`, one spacecraft per
//! row. Numbers are written with 17 significant digits.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cost::SpacecraftPose;
use crate::error::{Error, Result};
use crate::geometry::Vector3;
use crate::sampling::{PoiSet, UncertaintyEllipsoid};

/// 17 significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_triple(v: Vector3<f64>) -> String {
    format!("{},{},{}", fmt_num(v.x), fmt_num(v.y), fmt_num(v.z))
}

pub fn write_pois<W: Write>(mut w: W, pois: &PoiSet<f64>) -> Result<()> {
    writeln!(
        w,
        "# seed={} center={} radii={}",
        pois.seed,
        fmt_triple(pois.ellipsoid.center),
        fmt_triple(pois.ellipsoid.radii)
    )?;
    writeln!(w, "x,y,z")?;
    for p in &pois.points {
        writeln!(w, "{}", fmt_triple(*p))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_triple(s: &str, line: u64) -> Result<Vector3<f64>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Parse {
            line,
            message: format!("expected three comma-separated numbers, got '{s}'"),
        });
    }
    let mut v = [0.0; 3];
    for (dst, part) in v.iter_mut().zip(parts) {
        *dst = part.trim().parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad number '{part}': {e}"),
        })?;
    }
    Ok(Vector3::from_array(v))
}

#[derive(Deserialize)]
struct PoiRow {
    x: f64,
    y: f64,
    z: f64,
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn read_pois<R: BufRead>(mut r: R) -> Result<PoiSet<f64>> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let body = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing '# seed=… center=… radii=…' header".into(),
        })?;
    let (mut seed, mut center, mut radii) = (None, None, None);
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("seed", v)) => {
                seed = Some(v.parse::<u64>().map_err(|e| Error::Parse {
                    line: 1,
                    message: format!("bad seed: {e}"),
                })?)
            }
            Some(("center", v)) => center = Some(parse_triple(v, 1)?),
            Some(("radii", v)) => radii = Some(parse_triple(v, 1)?),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unknown header field '{field}'"),
                })
            }
        }
    }
    let missing = |name: &str| Error::Parse {
        line: 1,
        message: format!("header lacks {name}"),
    };
    let ellipsoid = UncertaintyEllipsoid::new(
        center.ok_or_else(|| missing("center"))?,
        radii.ok_or_else(|| missing("radii"))?,
    )?;
    let seed = seed.ok_or_else(|| missing("seed"))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut points = Vec::new();
    for row in reader.deserialize::<PoiRow>() {
        let row = row.map_err(|e| {
            // the header comment was consumed before the csv reader started
            match csv_error(e) {
                Error::Parse { line, message } => Error::Parse {
                    line: line + 1,
                    message,
                },
                other => other,
            }
        })?;
        let p = Vector3::new(row.x, row.y, row.z);
        if !p.is_finite() {
            return Err(Error::Parse {
                line: points.len() as u64 + 3,
                message: "non-finite coordinate".into(),
            });
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::Empty("POI file has no points".into()));
    }
    Ok(PoiSet {
        points,
        seed,
        ellipsoid,
    })
}

/// One row of a pose file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub nu: f64,
    pub phi: f64,
}

impl From<&SpacecraftPose<f64>> for PoseRow {
    fn from(p: &SpacecraftPose<f64>) -> Self {
        Self {
            x: p.position.x,
            y: p.position.y,
            z: p.position.z,
            theta: p.theta,
            nu: p.nu,
            phi: p.phi,
        }
    }
}

pub fn read_poses<R: std::io::Read>(r: R) -> Result<Vec<SpacecraftPose<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let expected = ["x", "y", "z", "theta", "nu", "phi"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("pose header must be '{}'", expected.join(",")),
        });
    }
    let mut poses = Vec::new();
    for row in reader.deserialize::<PoseRow>() {
        let row = row.map_err(csv_error)?;
        let vals = [row.x, row.y, row.z, row.theta, row.nu, row.phi];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: poses.len() as u64 + 2,
                message: "non-finite value".into(),
            });
        }
        poses.push(SpacecraftPose::new(
            Vector3::new(row.x, row.y, row.z),
            row.theta,
            row.nu,
            row.phi,
        ));
    }
    if poses.is_empty() {
        return Err(Error::Empty("pose file has no spacecraft".into()));
    }
    Ok(poses)
}

pub fn write_poses<W: Write>(mut w: W, poses: &[SpacecraftPose<f64>]) -> Result<()> {
    writeln!(w, "x,y,z,theta,nu,phi")?;
    for p in poses {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_triple(p.position),
            fmt_num(p.theta),
            fmt_num(p.nu),
            fmt_num(p.phi)
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_pois;

    #[test]
    fn poi_file_roundtrips_bit_exactly() {
        let e =
            UncertaintyEllipsoid::new(Vector3::new(1.0, -2.0, 3.5), Vector3::new(10.0, 20.0, 30.0))
                .unwrap();
        let pois = sample_pois(&e, 100, 77).unwrap();
        let mut buf = Vec::new();
        write_pois(&mut buf, &pois).unwrap();
        let back = read_pois(buf.as_slice()).unwrap();
        assert_eq!(back, pois);
    }

    #[test]
    fn poi_parse_errors_carry_line_numbers() {
        let text = "# seed=1 center=0,0,0 radii=1,1,1\nx,y,z\n0,0,0\n0.1,oops,0\n";
        match read_pois(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(read_pois("x,y,z\n0,0,0\n".as_bytes()).is_err());
        assert!(read_pois("# seed=1 center=0,0,0\nx,y,z\n0,0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn pose_file_roundtrip_and_errors() {
        let poses = vec![
            SpacecraftPose::new(Vector3::new(100.0, 0.5, -3.0), 1.25, 0.3, 0.6),
            SpacecraftPose::new(Vector3::new(-7.0, 1e-3, 2e5), 6.0, 0.3, 0.6),
        ];
        let mut buf = Vec::new();
        write_poses(&mut buf, &poses).unwrap();
        assert_eq!(read_poses(buf.as_slice()).unwrap(), poses);

        let bad = "x,y,z,theta,nu,phi\n1,2,3,0.1,0.2,0.4\n1,2,three,0.1,0.2,0.4\n";
        match read_poses(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_poses("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_poses("x,y,z,theta,nu,phi\n".as_bytes()).is_err());
    }

    #[test]
    fn number_format_has_seventeen_digits() {
        let s = fmt_num(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }
}
