//! Listings from the guide in `book/`, run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/exterior.md")]
pub mod exterior {}

#[doc = include_str!("../../../book/src/flows.md")]
pub mod flows {}

#[doc = include_str!("../../../book/src/measure.md")]
pub mod measure {}

#[doc = include_str!("../../../book/src/exponents.md")]
pub mod exponents {}

#[doc = include_str!("../../../book/src/nondiv.md")]
pub mod nondiv {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
