use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codes::{read_alist, write_alist, CodeError, LinearCode};
use crate::gf2::BitVec;

/// JSON description of a linear code.
///
/// `h_std_path`, when present, is resolved relative to the descriptor file;
/// otherwise the standard parity-check matrix is recomputed from the generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDescriptor {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub generator: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_std_path: Option<String>,
}

impl CodeDescriptor {
    pub fn from_code(code: &LinearCode) -> Self {
        CodeDescriptor {
            name: code.name().to_string(),
            n: code.n(),
            k: code.k(),
            generator: code.generator().iter().map(BitVec::indices).collect(),
            h_std_path: None,
        }
    }

    fn generator_rows(&self) -> Result<Vec<BitVec>, CodeError> {
        if self.generator.len() != self.k {
            return Err(CodeError::InvalidCode(format!(
                "descriptor declares k = {} but lists {} generator rows",
                self.k,
                self.generator.len()
            )));
        }
        self.generator
            .iter()
            .map(|row| {
                if let Some(&bad) = row.iter().find(|&&c| c >= self.n) {
                    return Err(CodeError::InvalidCode(format!("generator index {bad} >= n = {}", self.n)));
                }
                Ok(BitVec::from_indices(self.n, row))
            })
            .collect()
    }

    /// Builds the code without touching the filesystem (ignores `h_std_path`).
    pub fn to_code(&self) -> Result<LinearCode, CodeError> {
        LinearCode::from_generator(self.name.clone(), self.n, self.generator_rows()?)
    }
}

pub fn load_descriptor(path: impl AsRef<Path>) -> Result<LinearCode, CodeError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CodeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let desc: CodeDescriptor = serde_json::from_str(&text)?;
    match &desc.h_std_path {
        None => desc.to_code(),
        Some(rel) => {
            let h_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            let h = read_alist(h_path)?;
            LinearCode::with_parity_check(desc.name.clone(), desc.n, desc.generator_rows()?, h)
        }
    }
}

/// Writes the descriptor; when `h_std_file` is given, `h_std` is written next
/// to it as an alist file and referenced by name.
pub fn save_descriptor(code: &LinearCode, path: impl AsRef<Path>, h_std_file: Option<&str>) -> Result<(), CodeError> {
    let path = path.as_ref();
    let mut desc = CodeDescriptor::from_code(code);
    if let Some(name) = h_std_file {
        write_alist(code.h_std(), path.parent().unwrap_or(Path::new(".")).join(name))?;
        desc.h_std_path = Some(name.to_string());
    }
    let text = serde_json::to_string_pretty(&desc)?;
    fs::write(path, text).map_err(|source| CodeError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::rm_code;

    #[test]
    fn descriptor_round_trip_with_h_std() {
        let dir = tempfile::tempdir().unwrap();
        let code = rm_code(1, 3).unwrap();
        let p = dir.path().join("rm13.json");
        save_descriptor(&code, &p, Some("rm13_h.alist")).unwrap();
        let back = load_descriptor(&p).unwrap();
        assert_eq!(back.h_std(), code.h_std());
        assert_eq!(back.generator(), code.generator());
        assert_eq!(back.name(), "RM(1,3)");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"name":"x","n":2,"k":1,"generator":[[0,1]],"extra":1}"#;
        assert!(serde_json::from_str::<CodeDescriptor>(text).is_err());
    }

    #[test]
    fn k_mismatch_rejected() {
        let d = CodeDescriptor {
            name: "x".into(),
            n: 2,
            k: 2,
            generator: vec![vec![0, 1]],
            h_std_path: None,
        };
        assert!(d.to_code().is_err());
    }
}
