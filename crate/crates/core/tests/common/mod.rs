#![allow(dead_code)]

pub mod features;
pub mod harness;
pub mod solver;
pub mod toy;
