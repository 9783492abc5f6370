//! Study CSV ingestion.
//!
//! The header must be exactly `study_id,effect,std_err`. Errors name the
//! 1-based line of the offending record.

use std::io::Read;
use std::path::Path;

use i2bias_core::meta::Study;

use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 3] = ["study_id", "effect", "std_err"];

pub fn read_studies_file(path: &Path) -> CliResult<Vec<Study>> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::invalid(format!("cannot open {}: {e}", path.display())))?;
    read_studies(file)
}

pub fn read_studies<R: Read>(reader: R) -> CliResult<Vec<Study>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let header = rdr
        .headers()
        .map_err(|e| CliError::invalid(format!("line 1: {e}")))?
        .clone();
    let fields: Vec<&str> = header.iter().collect();
    // Tolerate a UTF-8 byte order mark on the first field.
    let first = fields.first().map(|f| f.trim_start_matches('\u{feff}'));
    if fields.len() != HEADER.len() || first != Some(HEADER[0]) || fields[1..] != HEADER[1..] {
        return Err(CliError::invalid(format!(
            "line 1: header must be `{}`, got `{}`",
            HEADER.join(","),
            fields.join(",")
        )));
    }

    let mut studies = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::invalid(format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = &record[0];
        let effect = parse_number(&record[1], "effect", line)?;
        let std_err = parse_number(&record[2], "std_err", line)?;
        if !(std_err > 0.0) {
            return Err(CliError::invalid(format!(
                "line {line}: std_err must be positive, got {}",
                &record[2]
            )));
        }
        let study = Study::new(id, effect, std_err)
            .map_err(|e| CliError::invalid(format!("line {line}: {e}")))?;
        studies.push(study);
    }
    Ok(studies)
}

fn parse_number(text: &str, column: &str, line: u64) -> CliResult<f64> {
    let v: f64 = text.trim().parse().map_err(|_| {
        CliError::invalid(format!("line {line}: {column} is not a number: `{text}`"))
    })?;
    if !v.is_finite() {
        return Err(CliError::invalid(format!(
            "line {line}: {column} must be finite, got `{text}`"
        )));
    }
    Ok(v)
}
