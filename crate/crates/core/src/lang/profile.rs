use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tool {
    Simulate,
    Peak,
    Time,
}

impl Tool {
    pub fn as_str(self) -> &'static str {
        match self {
            Tool::Simulate => "simulate",
            Tool::Peak => "peak",
            Tool::Time => "time",
        }
    }
}

impl std::str::FromStr for Tool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulate" => Ok(Tool::Simulate),
            "peak" => Ok(Tool::Peak),
            "time" => Ok(Tool::Time),
            other => Err(format!("unknown tool `{other}`")),
        }
    }
}

/// Parameter bundle driving placeholder substitution, pool reduction and repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Profile {
    pub tool: Tool,
    pub efficiency_pct: u32,
    pub availability_pct: u32,
    pub conc_cases: u32,
    pub num_sims: u32,
    pub seed: u64,
}

impl Default for Profile {
    fn default() -> Self {
        Self {
            tool: Tool::Simulate,
            efficiency_pct: 100,
            availability_pct: 100,
            conc_cases: 1,
            num_sims: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl Profile {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        if self.efficiency_pct < 1 {
            errors.push(FieldError {
                field: "efficiencyPct",
                message: "must be at least 1".into(),
            });
        }
        if self.availability_pct > 100 {
            errors.push(FieldError {
                field: "availabilityPct",
                message: "must be between 0 and 100".into(),
            });
        }
        if self.conc_cases < 1 {
            errors.push(FieldError {
                field: "concCases",
                message: "must be at least 1".into(),
            });
        }
        if self.num_sims < 1 {
            errors.push(FieldError {
                field: "numSims",
                message: "must be at least 1".into(),
            });
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        assert!(Profile::default().validate().is_ok());
    }

    #[test]
    fn reports_every_bad_field() {
        let p = Profile {
            efficiency_pct: 0,
            availability_pct: 101,
            conc_cases: 0,
            num_sims: 0,
            ..Profile::default()
        };
        let fields: Vec<_> = p.validate().unwrap_err().iter().map(|e| e.field).collect();
        assert_eq!(fields, ["efficiencyPct", "availabilityPct", "concCases", "numSims"]);
    }

    #[test]
    fn json_field_names() {
        let json = serde_json::to_string(&Profile::default()).unwrap();
        assert_eq!(
            json,
            r#"{"tool":"simulate","efficiencyPct":100,"availabilityPct":100,"concCases":1,"numSims":1,"seed":0}"#
        );
    }
}
