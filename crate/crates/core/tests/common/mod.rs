#![allow(dead_code)]

pub mod mining;
pub mod tracking;
