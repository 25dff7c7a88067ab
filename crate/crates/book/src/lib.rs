// mdbook cannot run listings that depend on workspace crates, so each chapter
// is pulled in as the doc comment of an empty module and `cargo test --doc`
// runs its code blocks. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/priors.md")]
pub mod priors {}
#[doc = include_str!("../../../book/src/propriety.md")]
pub mod propriety {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/caveats.md")]
pub mod caveats {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
