// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::CodegenError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileIoStyle {
    /// `$fopen(name, "w")` returning a file descriptor.
    Standard,
    /// `$fopen(name)` returning a multichannel descriptor.
    NonstandardIverilog,
}

/// Simulator-specific pieces of an SV testbench.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvDialect {
    pub name: String,
    /// Statement(s) enabling waveform capture. Placeholders: `{tb}` (the
    /// testbench module name) and `{circuit}`.
    pub waveform_command: String,
    pub file_io_style: FileIoStyle,
    pub timescale: String,
}

const PLACEHOLDERS: &[&str] = &["tb", "circuit"];

impl SvDialect {
    pub fn generic() -> SvDialect {
        SvDialect {
            name: "generic".to_string(),
            waveform_command: "$dumpfile(\"{tb}.vcd\"); $dumpvars(0, {tb});".to_string(),
            file_io_style: FileIoStyle::Standard,
            timescale: "1ns/1ps".to_string(),
        }
    }

    pub fn iverilog() -> SvDialect {
        SvDialect {
            name: "iverilog".to_string(),
            file_io_style: FileIoStyle::NonstandardIverilog,
            ..SvDialect::generic()
        }
    }

    pub fn commercial_a() -> SvDialect {
        SvDialect {
            name: "commercial-a".to_string(),
            waveform_command: "$vcdplusfile(\"{tb}.vpd\"); $vcdpluson(0, {tb});".to_string(),
            file_io_style: FileIoStyle::Standard,
            timescale: "1ns/1ps".to_string(),
        }
    }

    pub fn commercial_b() -> SvDialect {
        SvDialect {
            name: "commercial-b".to_string(),
            waveform_command: "$shm_open(\"{tb}.shm\"); $shm_probe({tb}, \"AS\");".to_string(),
            file_io_style: FileIoStyle::Standard,
            timescale: "1ns/1ps".to_string(),
        }
    }

    pub fn builtin(name: &str) -> Option<SvDialect> {
        match name {
            "generic" => Some(SvDialect::generic()),
            "iverilog" => Some(SvDialect::iverilog()),
            "commercial-a" => Some(SvDialect::commercial_a()),
            "commercial-b" => Some(SvDialect::commercial_b()),
            _ => None,
        }
    }

    pub fn builtin_names() -> [&'static str; 4] {
        ["generic", "iverilog", "commercial-a", "commercial-b"]
    }

    /// Load from TOML, or JSON when the text starts with `{`.
    pub fn from_config(text: &str) -> Result<SvDialect, CodegenError> {
        let d: SvDialect = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CodegenError::Dialect(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| CodegenError::Dialect(e.to_string()))?
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), CodegenError> {
        if !crate::circuit::is_identifier(&self.name.replace('-', "_")) {
            return Err(CodegenError::Dialect(format!("bad dialect name `{}`", self.name)));
        }
        let mut rest = self.waveform_command.as_str();
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            let close = after
                .find('}')
                .ok_or_else(|| CodegenError::Dialect("unterminated placeholder".to_string()))?;
            let name = &after[..close];
            if !PLACEHOLDERS.contains(&name) {
                return Err(CodegenError::Dialect(format!("unknown placeholder `{{{name}}}`")));
            }
            rest = &after[close + 1..];
        }
        if self.timescale.contains('\n') {
            return Err(CodegenError::Dialect("timescale must be one line".to_string()));
        }
        Ok(())
    }

    pub fn waveform(&self, tb: &str, circuit: &str) -> String {
        self.waveform_command.replace("{tb}", tb).replace("{circuit}", circuit)
    }
}
