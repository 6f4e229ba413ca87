//! Config-driven harness around `fraclevy`: experiment runs with hashed
//! manifests, property suites and plot data.

pub mod config;
pub mod manifest;
pub mod plotdata;
pub mod run;
pub mod table;
pub mod verify;

pub use config::Config;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/levy-models.md")]
    struct LevyModels;
    #[doc = include_str!("../../../book/src/fractional-integrals.md")]
    struct FractionalIntegrals;
    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;
    #[doc = include_str!("../../../book/src/chaos.md")]
    struct Chaos;
    #[doc = include_str!("../../../book/src/skorohod.md")]
    struct Skorohod;
    #[doc = include_str!("../../../book/src/volterra.md")]
    struct Volterra;
    #[doc = include_str!("../../../book/src/sde.md")]
    struct Sde;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
    #[doc = include_str!("../../../book/src/checks.md")]
    struct Checks;
}
