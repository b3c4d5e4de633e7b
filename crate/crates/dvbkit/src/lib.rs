//! Exact verification toolkit for double vector bundles, 2-representations
//! and degree 2 graded Poisson brackets over polynomial charts.

pub mod bundles;
pub mod dvb;
pub mod examples;
pub mod functors;
pub mod gen;
pub mod graded;
pub mod io;
pub mod metric;
pub mod poisson;
pub mod poly;
pub mod report;
pub mod tworep;

/// Chapters of the guide in `book/`, compiled here so their examples run as
/// doctests.
pub mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    pub mod overview {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    pub mod polynomials {}
    #[doc = include_str!("../../../book/src/algebroids.md")]
    pub mod algebroids {}
    #[doc = include_str!("../../../book/src/dvb.md")]
    pub mod dvb {}
    #[doc = include_str!("../../../book/src/representations.md")]
    pub mod representations {}
    #[doc = include_str!("../../../book/src/poisson.md")]
    pub mod poisson {}
    #[doc = include_str!("../../../book/src/functors.md")]
    pub mod functors {}
    #[doc = include_str!("../../../book/src/families.md")]
    pub mod families {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
