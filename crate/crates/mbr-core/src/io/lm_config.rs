//! Toy model definition files: plain TOML with the vocabulary, the order,
//! the length cap, and the conditional table. Contexts are space-joined
//! symbol names with `<bos>` padding; entries omitted from a conditional
//! get probability zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::toylm::ToyLm;

pub const LM_CONFIG_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LmConfigFile {
    format_version: u32,
    symbols: Vec<String>,
    order: usize,
    max_length: usize,
    conditionals: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Parses a TOML definition into a validated model.
pub fn read_lm_config(contents: &str) -> Result<ToyLm, IoError> {
    let file: LmConfigFile =
        toml::from_str(contents).map_err(|e| IoError::Config(e.to_string()))?;
    if file.format_version != LM_CONFIG_VERSION {
        return Err(IoError::UnsupportedVersion {
            found: file.format_version,
            supported: LM_CONFIG_VERSION,
        });
    }
    ToyLm::new(
        file.symbols,
        file.order,
        file.max_length,
        &file.conditionals,
    )
    .map_err(|e| IoError::Config(e.to_string()))
}

/// Renders a model back to its TOML definition.
pub fn lm_to_toml(lm: &ToyLm) -> String {
    let file = LmConfigFile {
        format_version: LM_CONFIG_VERSION,
        symbols: lm.body_symbols().to_vec(),
        order: lm.order(),
        max_length: lm.max_length(),
        conditionals: lm.named_conditionals(),
    };
    toml::to_string(&file).expect("model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_random_model() {
        let lm = ToyLm::random(3, 5, 42);
        let toml_text = lm_to_toml(&lm);
        let parsed = read_lm_config(&toml_text).unwrap();
        assert_eq!(parsed, lm);
    }

    #[test]
    fn explicit_config_parses() {
        let text = r#"
format_version = 1
symbols = ["a", "b"]
order = 1
max_length = 3

[conditionals."<bos>"]
a = 0.5
b = 0.3
"<eos>" = 0.2

[conditionals.a]
a = 0.1
b = 0.1
"<eos>" = 0.8

[conditionals.b]
b = 0.5
"<eos>" = 0.5
"#;
        let lm = read_lm_config(text).unwrap();
        assert_eq!(lm.order(), 1);
        assert_eq!(lm.max_body_len(), 2);
        let support = lm.enumerate(100).unwrap();
        let mass: f64 = support.iter().map(|(_, lp)| lp.prob()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_version_rejected() {
        let text = r#"
format_version = 9
symbols = ["a"]
order = 1
max_length = 2
[conditionals."<bos>"]
a = 0.5
"<eos>" = 0.5
"#;
        assert!(matches!(
            read_lm_config(text),
            Err(IoError::UnsupportedVersion { found: 9, .. })
        ));
    }

    #[test]
    fn invalid_model_is_a_config_error() {
        let text = r#"
format_version = 1
symbols = ["a"]
order = 1
max_length = 2
[conditionals."<bos>"]
a = 0.7
"<eos>" = 0.7
"#;
        assert!(matches!(read_lm_config(text), Err(IoError::Config(_))));
    }
}
