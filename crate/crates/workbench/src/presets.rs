//! Pre-filled profiles offered per tool. Overrides are applied to a copy.

use serde::Serialize;

use rpl_core::lang::{Profile, Tool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProfilePreset {
    pub name: &'static str,
    pub tool: Tool,
    pub profile: Profile,
}

const fn preset(name: &'static str, tool: Tool, efficiency_pct: u32, availability_pct: u32, conc_cases: u32, num_sims: u32) -> ProfilePreset {
    ProfilePreset {
        name,
        tool,
        profile: Profile {
            tool,
            efficiency_pct,
            availability_pct,
            conc_cases,
            num_sims,
            seed: 0,
        },
    }
}

pub const PRESETS: &[ProfilePreset] = &[
    preset("nominal", Tool::Simulate, 100, 100, 1, 10),
    preset("busy season", Tool::Simulate, 100, 100, 4, 20),
    preset("understaffed", Tool::Simulate, 70, 50, 4, 20),
    preset("degraded", Tool::Simulate, 50, 100, 1, 10),
    preset("single case", Tool::Peak, 100, 100, 1, 10),
    preset("two cases", Tool::Peak, 100, 100, 2, 10),
    preset("four cases", Tool::Peak, 100, 100, 4, 10),
    preset("nominal", Tool::Time, 100, 100, 1, 1),
    preset("degraded", Tool::Time, 70, 100, 4, 1),
];

/// First preset of each tool.
pub fn default_for(tool: Tool) -> Profile {
    PRESETS.iter().find(|p| p.tool == tool).map(|p| p.profile).expect("every tool has a preset")
}

pub fn find(tool: Tool, name: &str) -> Option<&'static ProfilePreset> {
    PRESETS.iter().find(|p| p.tool == tool && p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_tool_is_covered_and_valid() {
        for tool in [Tool::Simulate, Tool::Peak, Tool::Time] {
            assert_eq!(default_for(tool).tool, tool);
        }
        for p in PRESETS {
            assert!(p.profile.validate().is_ok(), "{}", p.name);
            assert_eq!(p.profile.tool, p.tool);
        }
    }
}
