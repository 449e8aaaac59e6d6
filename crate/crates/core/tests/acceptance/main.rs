//! Integration suite. `criteria` holds the acceptance criteria; the other
//! modules exercise loaders, the harness, the CLI and the INNO oracle.

mod common;
mod criteria;
