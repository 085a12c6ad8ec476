//! placeholder
pub struct ValidationReport;
