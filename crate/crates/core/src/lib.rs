//! Cycle-level simulator of a 16-bit programmable embedded controller with
//! per-module clock gating and an activity-based power model.

pub mod clocking;
pub mod config;
pub mod control;
pub mod isa;
pub mod machine;
pub mod peripherals;
pub mod power;
pub mod reference;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/isa.md")]
    mod isa {}
    #[doc = include_str!("../../../book/src/machine.md")]
    mod machine {}
    #[doc = include_str!("../../../book/src/gating.md")]
    mod gating {}
    #[doc = include_str!("../../../book/src/oscillator.md")]
    mod oscillator {}
    #[doc = include_str!("../../../book/src/power.md")]
    mod power {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
