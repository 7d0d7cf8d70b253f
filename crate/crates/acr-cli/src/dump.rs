//! Logit-dump CSV: the interchange format between training and model-free
//! evaluation.
//!
//! Header: `sample_id,label,ood_flag,fused_logit_0..fused_logit_{C}` followed
//! by optional `uni{k}_logit_0..uni{k}_logit_{C-1}` blocks for k = 1..M.
//! There are C+1 fused columns (the trailing one is the outlier class).
//! Labels are in [0, C) or −1 for OOD rows; `ood_flag` is 0 or 1.

use crate::error::{CliError, CliResult};
use acr_core::numerics::Matrix;
use acr_core::AcrError;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct LogitDump {
    pub classes: usize,
    pub sample_ids: Vec<u64>,
    pub labels: Vec<i64>,
    pub ood: Vec<bool>,
    /// `n × (C+1)` fused logits.
    pub fused: Matrix<f64>,
    /// Optional `n × C` unimodal logits per modality.
    pub unimodal: Vec<Matrix<f64>>,
}

impl LogitDump {
    pub fn header(classes: usize, modalities: usize) -> String {
        let mut h = String::from("sample_id,label,ood_flag");
        for j in 0..=classes {
            let _ = write!(h, ",fused_logit_{j}");
        }
        for k in 1..=modalities {
            for j in 0..classes {
                let _ = write!(h, ",uni{k}_logit_{j}");
            }
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::header(self.classes, self.unimodal.len());
        out.push('\n');
        for i in 0..self.labels.len() {
            let _ = write!(
                out,
                "{},{},{}",
                self.sample_ids[i],
                self.labels[i],
                u8::from(self.ood[i])
            );
            for &v in self.fused.row(i) {
                let _ = write!(out, ",{v}");
            }
            for m in &self.unimodal {
                for &v in m.row(i) {
                    let _ = write!(out, ",{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// Parses the CSV text, reporting 1-based line numbers on errors.
    pub fn parse(text: &str) -> Result<Self, AcrError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(AcrError::Parse {
            line: 1,
            message: "empty dump".to_string(),
        })?;
        let (classes, modalities) = parse_header(header)?;
        let expected_fields = 3 + (classes + 1) + modalities * classes;

        let mut sample_ids = Vec::new();
        let mut labels = Vec::new();
        let mut ood = Vec::new();
        let mut fused_rows: Vec<Vec<f64>> = Vec::new();
        let mut uni_rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); modalities];
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let bad = |message: String| AcrError::Parse { line: lineno, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected_fields {
                return Err(bad(format!(
                    "expected {expected_fields} fields, got {}",
                    fields.len()
                )));
            }
            let id: u64 = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad sample_id '{}'", fields[0])))?;
            let label: i64 = fields[1]
                .parse()
                .map_err(|_| bad(format!("bad label '{}'", fields[1])))?;
            if label < -1 || label >= classes as i64 {
                return Err(bad(format!(
                    "label {label} outside [0, {classes}) and not -1"
                )));
            }
            let ood_flag = match fields[2] {
                "0" => false,
                "1" => true,
                other => return Err(bad(format!("bad ood_flag '{other}' (expected 0 or 1)"))),
            };
            if label == -1 && !ood_flag {
                return Err(bad("label -1 requires ood_flag 1".to_string()));
            }
            let mut values = fields[3..].iter().map(|f| {
                f.parse::<f64>()
                    .map_err(|_| bad(format!("bad logit '{f}'")))
            });
            let mut fused = Vec::with_capacity(classes + 1);
            for _ in 0..=classes {
                fused.push(values.next().expect("field count checked")?);
            }
            for uni in uni_rows.iter_mut() {
                let mut row = Vec::with_capacity(classes);
                for _ in 0..classes {
                    row.push(values.next().expect("field count checked")?);
                }
                uni.push(row);
            }
            sample_ids.push(id);
            labels.push(label);
            ood.push(ood_flag);
            fused_rows.push(fused);
        }
        if fused_rows.is_empty() {
            return Err(AcrError::Parse {
                line: 1,
                message: "dump has a header but no rows".to_string(),
            });
        }
        Ok(Self {
            classes,
            sample_ids,
            labels,
            ood,
            fused: Matrix::from_rows(&fused_rows)?,
            unimodal: uni_rows
                .into_iter()
                .map(|rows| Matrix::from_rows(&rows))
                .collect::<Result<_, _>>()?,
        })
    }
}

fn parse_header(header: &str) -> Result<(usize, usize), AcrError> {
    let bad = |message: String| AcrError::Parse { line: 1, message };
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 4 || fields[0] != "sample_id" || fields[1] != "label" || fields[2] != "ood_flag"
    {
        return Err(bad(
            "header must start with sample_id,label,ood_flag,fused_logit_0".to_string(),
        ));
    }
    let mut fused_cols = 0usize;
    let mut i = 3;
    while i < fields.len() && fields[i] == format!("fused_logit_{fused_cols}") {
        fused_cols += 1;
        i += 1;
    }
    if fused_cols < 2 {
        return Err(bad(format!(
            "need at least fused_logit_0 and fused_logit_1, found {fused_cols} fused columns"
        )));
    }
    let classes = fused_cols - 1;
    let mut modalities = 0usize;
    while i < fields.len() {
        let k = modalities + 1;
        for j in 0..classes {
            let expected = format!("uni{k}_logit_{j}");
            match fields.get(i) {
                Some(&f) if f == expected => i += 1,
                other => {
                    return Err(bad(format!(
                        "expected column '{expected}', found {:?}",
                        other.copied().unwrap_or("<end>")
                    )))
                }
            }
        }
        modalities += 1;
    }
    Ok((classes, modalities))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_dump() -> LogitDump {
        LogitDump {
            classes: 2,
            sample_ids: vec![0, 1, 2],
            labels: vec![0, 1, -1],
            ood: vec![false, false, true],
            fused: Matrix::from_rows(&[
                vec![1.5, -0.25, 0.0],
                vec![-1.0, 2.0, 0.125],
                vec![0.1, 0.2, 3.5],
            ])
            .unwrap(),
            unimodal: vec![
                Matrix::from_rows(&[vec![0.5, 0.1], vec![0.0, 1.0], vec![2.0, -2.0]]).unwrap(),
                Matrix::from_rows(&[vec![-0.5, 0.25], vec![0.75, 0.5], vec![1.0, 1.0]]).unwrap(),
            ],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dump = sample_dump();
        let text = dump.to_csv();
        assert!(text.starts_with(
            "sample_id,label,ood_flag,fused_logit_0,fused_logit_1,fused_logit_2,uni1_logit_0,uni1_logit_1,uni2_logit_0,uni2_logit_1\n"
        ));
        let back = LogitDump::parse(&text).unwrap();
        assert_eq!(back, dump);
    }

    #[test]
    fn parses_without_unimodal_blocks() {
        let text = "sample_id,label,ood_flag,fused_logit_0,fused_logit_1,fused_logit_2\n\
                    0,1,0,0.5,1.5,-0.5\n";
        let dump = LogitDump::parse(text).unwrap();
        assert_eq!(dump.classes, 2);
        assert!(dump.unimodal.is_empty());
    }

    #[test]
    fn ragged_row_names_the_line() {
        let text = "sample_id,label,ood_flag,fused_logit_0,fused_logit_1,fused_logit_2\n\
                    0,1,0,0.5,1.5,-0.5\n\
                    1,0,0,0.25,0.75\n";
        match LogitDump::parse(text) {
            Err(AcrError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_inconsistent_ood_label() {
        let text = "sample_id,label,ood_flag,fused_logit_0,fused_logit_1,fused_logit_2\n\
                    0,-1,0,0.5,1.5,-0.5\n";
        assert!(LogitDump::parse(text).is_err());
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(LogitDump::parse("a,b,c\n").is_err());
        assert!(LogitDump::parse("sample_id,label,ood_flag,fused_logit_0\n0,0,0,1.0\n").is_err());
        let swapped = "sample_id,label,ood_flag,fused_logit_0,fused_logit_1,fused_logit_2,uni2_logit_0,uni2_logit_1\n";
        assert!(LogitDump::parse(swapped).is_err());
    }
}
