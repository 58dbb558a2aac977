use clap::ValueEnum;
use quartic_dual::Certificate;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

pub const COLUMNS: [&str; 17] = [
    "file",
    "instance_digest",
    "case_label",
    "passed",
    "hessian_class",
    "J_primal",
    "J_dual",
    "gap_rel",
    "dual_stationarity",
    "K",
    "margin_Bstar",
    "margin_Aplus",
    "margin_Aminus",
    "margin_M",
    "lambda_min",
    "lambda_max",
    "violations",
];

/// One certificate flattened into the report columns. Floats use the
/// shortest representation that parses back to the same value; quantities
/// that need a dual point are empty when the solver did not converge.
pub struct Row(Vec<String>);

fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

impl Row {
    pub fn from_certificate(file: &str, cert: &Certificate) -> Self {
        let d = cert.duality.as_ref();
        let m = d.map(|d| &d.membership);
        Row(vec![
            file.to_owned(),
            cert.instance_digest.clone(),
            cert.case_label.as_str().to_owned(),
            cert.passed.to_string(),
            cert.primal.hessian_class.as_str().to_owned(),
            num(cert.primal.value),
            opt(d.map(|d| d.j_dual)),
            opt(d.map(|d| d.gap_rel)),
            opt(d.map(|d| d.dual_stationarity)),
            opt(d.map(|d| d.dual.k)),
            opt(m.map(|m| m.margin_bstar)),
            opt(m.map(|m| m.margin_aplus)),
            opt(m.map(|m| m.margin_aminus)),
            opt(m.map(|m| m.margin_m)),
            num(cert.primal.lambda_min),
            num(cert.primal.lambda_max),
            cert.violations().to_string(),
        ])
    }
}

pub fn render(rows: &[Row], format: Format) -> Result<String, csv::Error> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for row in rows {
                w.write_record(&row.0)?;
            }
            let bytes = w.into_inner().map_err(|e| e.into_error())?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Text => Ok(text_table(rows)),
    }
}

fn text_table(rows: &[Row]) -> String {
    let mut widths: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(&row.0) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let padded: Vec<String> = cells.zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_owned() + "\n"
    };
    let mut out = line(&mut COLUMNS.iter().copied());
    for row in rows {
        out += &line(&mut row.0.iter().map(String::as_str));
    }
    out
}
