//! CSV ingestion: column selection, log transforms, row screening.

use qreff_core::linalg::Mat;
use qreff_core::Dataset;

use crate::CliError;

pub struct IngestConfig {
    pub response: String,
    pub covariates: Vec<String>,
    /// Columns to transform by natural log; rows failing the log domain are
    /// rejected, not errors.
    pub log_columns: Vec<String>,
    pub intercept: bool,
}

pub struct Ingested {
    pub dataset: Dataset,
    pub coefficient_names: Vec<String>,
    pub rows_used: usize,
    pub rows_rejected: usize,
}

pub fn ingest_csv(path: &str, cfg: &IngestConfig) -> Result<Ingested, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {path}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header of {path}: {e}")))?
        .clone();

    let find = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("column '{name}' not found in {path}")))
    };
    let response_idx = find(&cfg.response)?;
    let covariate_idx: Vec<usize> = cfg
        .covariates
        .iter()
        .map(|c| find(c))
        .collect::<Result<_, _>>()?;
    for c in &cfg.log_columns {
        find(c)?;
    }
    let log_response = cfg.log_columns.iter().any(|c| c == &cfg.response);
    let log_covariate: Vec<bool> = cfg
        .covariates
        .iter()
        .map(|c| cfg.log_columns.contains(c))
        .collect();

    let mut y = Vec::new();
    let mut rows = Vec::new();
    let mut rejected = 0usize;
    for (row_number, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::Data(format!("row {}: {e}", row_number + 1)))?;
        let parse = |idx: usize, name: &str| -> Result<f64, CliError> {
            let cell = record.get(idx).unwrap_or("");
            cell.trim().parse::<f64>().map_err(|_| {
                CliError::Data(format!(
                    "row {}, column '{name}': cannot parse '{cell}' as a number",
                    row_number + 1
                ))
            })
        };
        let mut ok = true;
        let mut yv = parse(response_idx, &cfg.response)?;
        if log_response {
            if yv > 0.0 {
                yv = yv.ln();
            } else {
                ok = false;
            }
        }
        let mut xr = Vec::with_capacity(covariate_idx.len() + usize::from(cfg.intercept));
        if cfg.intercept {
            xr.push(1.0);
        }
        for (slot, &idx) in covariate_idx.iter().enumerate() {
            let mut v = parse(idx, &cfg.covariates[slot])?;
            if log_covariate[slot] {
                if v > 0.0 {
                    v = v.ln();
                } else {
                    ok = false;
                }
            }
            xr.push(v);
        }
        if !ok || !yv.is_finite() || xr.iter().any(|v| !v.is_finite()) {
            rejected += 1;
            continue;
        }
        y.push(yv);
        rows.push(xr);
    }
    if y.is_empty() {
        return Err(CliError::Data(format!(
            "no usable rows in {path} ({rejected} rejected)"
        )));
    }

    let rows_used = y.len();
    let p = rows[0].len();
    let mut x = Mat::zeros(rows_used, p);
    for (i, r) in rows.iter().enumerate() {
        x.row_mut(i).copy_from_slice(r);
    }
    let dataset = Dataset::new(y, x).map_err(CliError::from)?;

    let mut coefficient_names = Vec::new();
    if cfg.intercept {
        coefficient_names.push("intercept".to_string());
    }
    coefficient_names.extend(cfg.covariates.iter().cloned());

    Ok(Ingested {
        dataset,
        coefficient_names,
        rows_used,
        rows_rejected: rejected,
    })
}
