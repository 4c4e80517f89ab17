//! A code review instance: tagged method, reviewer comment, revised method.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewInstance {
    pub id: String,
    /// Method text with one `<START>`/`<END>` pair around the reviewed span.
    pub code: String,
    pub comment: String,
    /// The developer's revision, without tags.
    pub revision: String,
}
