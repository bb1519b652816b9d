//! Check suites shared by the unit-style integration tests and the
//! acceptance runner. Each check panics on the first violation.

#![allow(dead_code)]

pub mod gradients;
pub mod suites;
