#![no_std]

extern crate alloc;

pub mod charts;
pub mod expr;
pub mod gauss;
pub mod lie;
pub mod pipeline;
pub mod prior;
pub mod tmg;

mod math;
