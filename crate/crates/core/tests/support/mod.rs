#![allow(dead_code)]

pub mod leaky;
