//! Reading curve tables back from CSV.

use anyhow::{bail, Result};

use manet_core::ensemble::{ConnectivityCurve, CurvePoint};

const CURVE_COLUMNS: [&str; 5] = ["z", "sigma", "eta_mean", "eta_stderr", "realizations"];

/// Value of `key=value` in the `#` comment lines, if present.
pub fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .flat_map(|l| l.trim_start_matches('#').split_whitespace())
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}

/// Parses a curves table written by the `sweep` command. Extra trailing
/// columns are ignored; curves keep their order of first appearance.
pub fn parse_curves(text: &str, origin: &str) -> Result<Vec<ConnectivityCurve>> {
    let mut curves: Vec<ConnectivityCurve> = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if !seen_header {
            if cells.len() < CURVE_COLUMNS.len() || cells[..5] != CURVE_COLUMNS {
                bail!(
                    "{origin}:{n}: expected header starting with {}",
                    CURVE_COLUMNS.join(",")
                );
            }
            seen_header = true;
            continue;
        }
        if cells.len() < 5 {
            bail!(
                "{origin}:{n}: expected at least 5 cells, found {}",
                cells.len()
            );
        }
        let num = |j: usize| -> Result<f64> {
            cells[j].parse::<f64>().map_err(|_| {
                anyhow::anyhow!(
                    "{origin}:{n}: bad {} value {:?}",
                    CURVE_COLUMNS[j],
                    cells[j]
                )
            })
        };
        let z: u32 = cells[0]
            .parse()
            .map_err(|_| anyhow::anyhow!("{origin}:{n}: bad z value {:?}", cells[0]))?;
        let realizations: usize = cells[4]
            .parse()
            .map_err(|_| anyhow::anyhow!("{origin}:{n}: bad realizations value {:?}", cells[4]))?;
        let point = CurvePoint {
            sigma: num(1)?,
            eta_mean: num(2)?,
            eta_stderr: num(3)?,
            realizations,
        };
        match curves.iter_mut().find(|c| c.z == z) {
            Some(c) => c.points.push(point),
            None => curves.push(ConnectivityCurve {
                z,
                points: vec![point],
            }),
        }
    }
    if !seen_header {
        bail!("{origin}: no header row");
    }
    for c in &mut curves {
        c.points.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use manet_core::ensemble::curves_to_csv;

    #[test]
    fn round_trip() {
        let curves = vec![
            ConnectivityCurve::new(
                2,
                vec![
                    CurvePoint {
                        sigma: 0.1,
                        eta_mean: 0.25,
                        eta_stderr: 0.01,
                        realizations: 5,
                    },
                    CurvePoint {
                        sigma: 0.2,
                        eta_mean: 0.75,
                        eta_stderr: 0.0,
                        realizations: 5,
                    },
                ],
            ),
            ConnectivityCurve::new(
                3,
                vec![CurvePoint {
                    sigma: 0.05,
                    eta_mean: 1.0 / 3.0,
                    eta_stderr: 0.02,
                    realizations: 5,
                }],
            ),
        ];
        let text = curves_to_csv(
            &curves,
            &["run config_hash=abc seed=9".into()],
            Some(&|_, s| Some(s)),
        );
        assert_eq!(parse_curves(&text, "c.csv").unwrap(), curves);
        assert_eq!(header_value(&text, "config_hash"), Some("abc"));
        assert_eq!(header_value(&text, "seed"), Some("9"));
        assert_eq!(header_value(&text, "missing"), None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_curves(
            "# c\nz,sigma,eta_mean,eta_stderr,realizations\n2,0.1,x,0,1\n",
            "c.csv",
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "c.csv:3: bad eta_mean value \"x\"");
        assert!(parse_curves("a,b\n", "c.csv")
            .unwrap_err()
            .to_string()
            .starts_with("c.csv:1:"));
    }
}
