//! Shipped example configurations.

use crate::config::RunConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct Example {
    pub name: &'static str,
    pub file: &'static str,
    pub text: &'static str,
}

macro_rules! example {
    ($name:literal) => {
        Example { name: $name, file: concat!("configs/", $name, ".toml"), text: include_str!(concat!("../configs/", $name, ".toml")) }
    };
}

pub const EXAMPLES: &[Example] = &[
    example!("straight-strip"),
    example!("straight-tube-3d"),
    example!("bent-strip"),
    example!("gaussian-strip"),
    example!("helical-square"),
    example!("torus-segment-disk"),
    example!("sign-changing-strip"),
    example!("u-bend-strip"),
];

impl Example {
    pub fn config(&self) -> Result<RunConfig> {
        RunConfig::parse(self.text)
    }

    pub fn description(&self) -> String {
        self.config().ok().and_then(|c| c.description).unwrap_or_default()
    }
}

pub fn find(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

/// One line per example: name, relative file, description.
pub fn listing() -> String {
    EXAMPLES.iter().map(|e| format!("{:<22} {:<36} {}\n", e.name, e.file, e.description())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_parses_and_is_named_after_its_file() {
        assert!(EXAMPLES.len() >= 6);
        for e in EXAMPLES {
            let c = e.config().unwrap();
            assert_eq!(c.name.as_deref(), Some(e.name));
            assert!(!e.description().is_empty());
        }
    }

    #[test]
    fn straight_entry_is_marked_as_reference() {
        assert!(find("straight-strip").unwrap().description().contains("reference: no bound state"));
        assert!(listing().lines().count() == EXAMPLES.len());
    }
}
