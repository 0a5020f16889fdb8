//! CSV ingestion and emission. Headers name each column as `quantity_unit`;
//! output numbers are written with 9 significant digits and `\n` line ends.

use std::io::{Read, Write};
use std::path::Path;

use crate::design::SweepResult;
use crate::dispersion::ModeBranch;
use crate::fit::{DecayHistogram, XYSeries};
use crate::tmm::FieldProfile;
use crate::{Error, Result};

/// Recognised unit suffixes, longest first so `kv_per_m` wins over `per_m`.
pub const UNITS: &[&str] = &[
    "kv_per_m", "per_s", "counts", "arb", "norm", "nm", "pm", "um", "ns", "ps", "us", "hz", "ghz", "mhz",
];

/// Splits `quantity_unit` into its parts.
pub fn split_header(h: &str) -> Result<(String, String)> {
    let h = h.trim();
    UNITS
        .iter()
        .find_map(|u| {
            h.strip_suffix(u)
                .and_then(|q| q.strip_suffix('_'))
                .filter(|q| !q.is_empty())
                .map(|q| (q.to_string(), u.to_string()))
        })
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "column header '{h}' does not end in a unit (expected quantity_unit with unit one of {})",
                UNITS.join(", ")
            ))
        })
}

/// Fixed number of significant digits, plain notation where it stays short.
pub fn fmt_num(x: f64) -> String {
    const SIG: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..SIG).contains(&exp) {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", (SIG - 1) as usize, x);
        let (mant, e) = s.split_once('e').expect("exponent present");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{e}")
    }
}

fn parse_cell(s: &str, row: usize, col: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("row {row}, column {col}: '{s}' is not a number")))
}

/// Two or three numeric columns: x, y and optional y uncertainty.
pub fn read_series<R: Read>(reader: R) -> Result<XYSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if !(2..=3).contains(&headers.len()) {
        return Err(Error::InvalidInput(format!("expected 2 or 3 columns, found {}", headers.len())));
    }
    let units: Vec<(String, String)> = headers.iter().map(split_header).collect::<Result<_>>()?;
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::InvalidInput(format!("row {} has {} fields", i + 1, rec.len())));
        }
        for (j, cell) in rec.iter().enumerate() {
            cols[j].push(parse_cell(cell, i + 1, j + 1)?);
        }
    }
    let y_err = if cols.len() == 3 { cols.pop() } else { None };
    let y = cols.pop().expect("two columns");
    let x = cols.pop().expect("two columns");
    Ok(XYSeries::new(x, y, y_err)?.with_units(&units[0].1, &units[1].1))
}

pub fn read_series_path(path: &Path) -> Result<XYSeries> {
    read_series(std::fs::File::open(path)?)
}

/// Factor converting a time unit to ns.
pub fn time_scale_to_ns(unit: &str) -> Result<f64> {
    match unit {
        "ns" => Ok(1.0),
        "ps" => Ok(1e-3),
        "us" => Ok(1e3),
        other => Err(Error::InvalidInput(format!("time column must be in ns, ps or us, not '{other}'"))),
    }
}

/// Series with x converted to ns.
pub fn to_ns(series: XYSeries) -> Result<XYSeries> {
    let f = time_scale_to_ns(&series.x_unit)?;
    let y_unit = series.y_unit.clone();
    Ok(XYSeries::new(series.x.iter().map(|t| t * f).collect(), series.y, series.y_err)?.with_units("ns", y_unit))
}

/// Decay histogram from a (time, counts) table.
pub fn histogram_from_series(series: XYSeries, irf_sigma_ns: f64, fit_window_start_ns: f64) -> Result<DecayHistogram> {
    let s = to_ns(series)?;
    let counts = s
        .y
        .iter()
        .map(|&c| {
            if c >= 0.0 && c.fract() == 0.0 {
                Ok(c as u64)
            } else {
                Err(Error::InvalidInput(format!("count {c} is not a non-negative integer")))
            }
        })
        .collect::<Result<Vec<u64>>>()?;
    DecayHistogram::new(s.x, counts, irf_sigma_ns, fit_window_start_ns)
}

/// Writes a header and rows of numbers.
pub fn write_table<W: Write>(w: W, headers: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(headers)?;
    for row in rows {
        wtr.write_record(row.iter().map(|v| fmt_num(*v)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Two columns, or three when the series carries errors; the error column
/// is named `<y quantity>_err_<y unit>`.
pub fn series_csv(series: &XYSeries, x_header: &str, y_header: &str) -> Result<String> {
    let mut buf = Vec::new();
    match &series.y_err {
        Some(err) => {
            let (q, u) = split_header(y_header)?;
            let err_header = format!("{q}_err_{u}");
            let rows = (0..series.len()).map(|i| vec![series.x[i], series.y[i], err[i]]);
            write_table(&mut buf, &[x_header, y_header, &err_header], rows)?;
        }
        None => {
            let rows = series.x.iter().zip(&series.y).map(|(x, y)| vec![*x, *y]);
            write_table(&mut buf, &[x_header, y_header], rows)?;
        }
    }
    Ok(String::from_utf8(buf).expect("ascii output"))
}

pub fn histogram_csv(h: &DecayHistogram) -> Result<String> {
    let mut buf = Vec::new();
    let rows = h.time_ns.iter().zip(&h.counts).map(|(t, c)| vec![*t, *c as f64]);
    write_table(&mut buf, &["time_ns", "photons_counts"], rows)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

pub const DISPERSION_HEADER: [&str; 6] = ["L_nm", "branch_id", "lambda_nm", "dlambda_dL", "character", "transverse_order"];

pub fn dispersion_csv(branches: &[ModeBranch]) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        wtr.write_record(DISPERSION_HEADER)?;
        for b in branches {
            for s in &b.samples {
                wtr.write_record([
                    fmt_num(s.air_gap_nm),
                    b.id.to_string(),
                    fmt_num(s.wavelength_nm),
                    fmt_num(s.slope),
                    s.character.label().to_string(),
                    b.transverse_order.to_string(),
                ])?;
            }
        }
        wtr.flush()?;
    }
    Ok(String::from_utf8(buf).expect("ascii output"))
}

pub fn field_profile_csv(p: &FieldProfile) -> Result<String> {
    let mut buf = Vec::new();
    let rows = (0..p.z_nm.len()).map(|i| vec![p.z_nm[i], p.amplitude[i], p.eps_r[i]]);
    write_table(&mut buf, &["z_nm", "amplitude_norm", "eps_r_norm"], rows)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

pub const DESIGN_HEADER: [&str; 20] = [
    "t_d_nm",
    "L_nm",
    "termination_request",
    "status",
    "reason",
    "L_resonant_nm",
    "termination",
    "termination_offset_nm",
    "interface_ratio",
    "waist_source",
    "waist_um",
    "e_vac_kv_per_m",
    "g_per_s",
    "kappa_per_s",
    "kappa_numeric_per_s",
    "f_p_zpl",
    "eta_zpl",
    "q_required",
    "transform_limit_hz",
    "pareto",
];

pub fn design_csv(s: &SweepResult) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        wtr.write_record(DESIGN_HEADER)?;
        for (i, row) in s.rows.iter().enumerate() {
            let req = row.spec.termination.map_or("any", |t| t.label());
            let mut rec = vec![fmt_num(row.spec.t_d_nm), fmt_num(row.spec.l_nm), req.to_string()];
            match &row.point {
                Some(p) => {
                    rec.push("valid".into());
                    rec.push(String::new());
                    rec.push(fmt_num(p.l_resonant_nm));
                    rec.push(p.termination.label().into());
                    rec.push(fmt_num(p.termination_offset_nm));
                    rec.push(fmt_num(p.interface_ratio));
                    rec.push(
                        match p.waist_source {
                            crate::modes::WaistSource::Formula => "formula",
                            crate::modes::WaistSource::Override => "override",
                        }
                        .into(),
                    );
                    for v in [
                        p.waist_um,
                        p.e_vac_kv_per_m,
                        p.g_per_s,
                        p.kappa_per_s,
                        p.kappa_numeric_per_s,
                        p.f_p_zpl,
                        p.eta_zpl,
                        p.q_required,
                        p.transform_limit_hz,
                    ] {
                        rec.push(fmt_num(v));
                    }
                    rec.push(s.pareto.contains(&i).to_string());
                }
                None => {
                    rec.push("invalid".into());
                    rec.push(row.reason.clone().unwrap_or_default());
                    rec.extend(std::iter::repeat_n(String::new(), DESIGN_HEADER.len() - 6));
                    rec.push("false".into());
                }
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
    }
    Ok(String::from_utf8(buf).expect("utf-8 output"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(637.123456789123), "637.123457");
        assert_eq!(fmt_num(0.18), "0.18");
        assert_eq!(fmt_num(5.0636868e10), "5.0636868e10");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(-2.5e-7), "-2.5e-7");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(123456789.0), "123456789");
    }

    #[test]
    fn headers_need_units() {
        assert_eq!(split_header("delta_l_nm").unwrap(), ("delta_l".into(), "nm".into()));
        assert_eq!(split_header("rate_per_s").unwrap(), ("rate".into(), "per_s".into()));
        assert!(split_header("rate").is_err());
        assert!(split_header("nm").is_err());
        let err = read_series("x,y\n1,2\n".as_bytes()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn reads_three_columns() {
        let s = read_series("x_um,rate_per_s,err_per_s\n0,1,0.1\n1,2,0.1\n".as_bytes()).unwrap();
        assert_eq!(s.x, vec![0.0, 1.0]);
        assert_eq!(s.y_err.as_deref(), Some(&[0.1, 0.1][..]));
        assert_eq!(s.x_unit, "um");
    }

    #[test]
    fn malformed_cells_rejected() {
        let err = read_series("x_nm,y_arb\n1,abc\n".as_bytes()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unix_newlines() {
        let s = XYSeries::new(vec![1.0, 2.0], vec![3.0, 4.0], None).unwrap();
        let out = series_csv(&s, "x_nm", "y_arb").unwrap();
        assert_eq!(out, "x_nm,y_arb\n1,3\n2,4\n");
    }
}
