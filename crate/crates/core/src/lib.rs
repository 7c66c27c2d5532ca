//! Modal analysis and time-domain simulation of small power systems.

pub mod cases;
pub mod dynamics;
pub mod power_flow;
pub mod reports;
pub mod small_signal;
pub mod system_model;
pub mod time_domain;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/case-format.md")]
    mod case_format {}
    #[doc = include_str!("../../../book/src/power-flow.md")]
    mod power_flow {}
    #[doc = include_str!("../../../book/src/dynamic-models.md")]
    mod dynamic_models {}
    #[doc = include_str!("../../../book/src/modal-analysis.md")]
    mod modal_analysis {}
    #[doc = include_str!("../../../book/src/time-domain.md")]
    mod time_domain {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
