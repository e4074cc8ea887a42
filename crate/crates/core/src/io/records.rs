use crate::error::{Error, Result};
use crate::estimator::AoAEstimate;
use crate::locator::PositionEstimate;

const ESTIMATE_HEADER: &str = "transmitter,angle,residual,method,packets,dispersion";
const POSITION_HEADER: &str = "x,y,residual,beacons";

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub transmitter: String,
    pub estimate: AoAEstimate,
}

pub fn write_estimates(records: &[EstimateRecord]) -> String {
    let mut out = format!("{ESTIMATE_HEADER}\n");
    for r in records {
        let e = &r.estimate;
        let dispersion = e
            .dispersion_deg
            .map(|d| format!("{d:.6}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{:.6},{:.6},{},{},{}\n",
            r.transmitter, e.angle_deg, e.residual_deg, e.method, e.packets, dispersion
        ));
    }
    out
}

pub fn read_estimates(text: &str) -> Result<Vec<EstimateRecord>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h == ESTIMATE_HEADER => {}
        Some((n, h)) => {
            return Err(Error::format(
                n,
                format!("unexpected estimate header {h:?}"),
            ))
        }
        None => return Err(Error::format(0, "missing estimate header")),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::format(
                n,
                format!("expected 6 fields, got {}", f.len()),
            ));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::format(n, format!("bad {what} {s:?}")))
        };
        let estimate = AoAEstimate {
            angle_deg: num(f[1], "angle")?,
            residual_deg: num(f[2], "residual")?,
            method: f[3]
                .parse()
                .map_err(|_| Error::format(n, format!("bad method {:?}", f[3])))?,
            packets: f[4]
                .parse()
                .map_err(|_| Error::format(n, format!("bad packet count {:?}", f[4])))?,
            dispersion_deg: if f[5].is_empty() {
                None
            } else {
                Some(num(f[5], "dispersion")?)
            },
            provenance: Vec::new(),
        };
        out.push(EstimateRecord {
            transmitter: f[0].to_string(),
            estimate,
        });
    }
    Ok(out)
}

pub fn write_positions(estimates: &[PositionEstimate]) -> String {
    let mut out = format!("{POSITION_HEADER}\n");
    for e in estimates {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{}\n",
            e.position.x,
            e.position.y,
            e.residual_deg,
            e.beacons.join(";")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Method;
    use crate::geometry::Point;

    #[test]
    fn estimates_round_trip() {
        let recs = vec![
            EstimateRecord {
                transmitter: "b1".into(),
                estimate: AoAEstimate {
                    angle_deg: 123.25,
                    residual_deg: 0.5,
                    method: Method::Harmonic,
                    packets: 600,
                    dispersion_deg: Some(12.0),
                    provenance: vec![],
                },
            },
            EstimateRecord {
                transmitter: "b2".into(),
                estimate: AoAEstimate {
                    angle_deg: 0.0,
                    residual_deg: 0.0,
                    method: Method::Grid,
                    packets: 1,
                    dispersion_deg: None,
                    provenance: vec![],
                },
            },
        ];
        let text = write_estimates(&recs);
        assert_eq!(read_estimates(&text).unwrap(), recs);
        assert!(text.starts_with("transmitter,angle,residual,method,packets,dispersion\n"));
        assert!(read_estimates("angle\n").is_err());
    }

    #[test]
    fn positions_layout() {
        let text = write_positions(&[PositionEstimate {
            position: Point::new(6.0, 6.5),
            residual_deg: 0.0,
            beacons: vec!["b1".into(), "b2".into()],
        }]);
        assert_eq!(
            text,
            "x,y,residual,beacons\n6.000000,6.500000,0.000000,b1;b2\n"
        );
    }
}
