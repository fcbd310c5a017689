#![allow(dead_code)]

pub mod oracle;
pub mod scenario;
pub mod stats;
