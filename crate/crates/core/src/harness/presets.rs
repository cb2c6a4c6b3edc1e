//! Bundled experiment suites, `fig1_static` through `fig6_time_varying`.

use crate::error::{Error, Result};

use super::config::{parse_suite, Suite};

pub struct Preset {
    pub name: &'static str,
    pub json: &'static str,
}

macro_rules! preset {
    ($name:literal) => {
        Preset {
            name: $name,
            json: include_str!(concat!("../../presets/", $name, ".json")),
        }
    };
}

pub const PRESETS: [Preset; 6] = [
    preset!("fig1_static"),
    preset!("fig2_equal_gain"),
    preset!("fig3_noisy"),
    preset!("fig4_node_add"),
    preset!("fig5_node_remove"),
    preset!("fig6_time_varying"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Parses the named preset.
pub fn load_preset(name: &str) -> Result<Suite> {
    let p = find(name).ok_or_else(|| Error::config(".", format!("no preset named `{name}`")))?;
    parse_suite(p.json, p.name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_is_named_after_its_file() {
        for p in &PRESETS {
            let s = load_preset(p.name).unwrap();
            assert_eq!(s.name, p.name);
            assert!(s.description.is_some());
        }
        assert!(load_preset("fig9").is_err());
    }
}
