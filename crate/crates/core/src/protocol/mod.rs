//! Messages, transcripts, prompt templates, reply parsing, and upstream
//! digests.

pub mod digest;
pub mod message;
pub mod tagged;
pub mod templates;

pub use digest::{aggregate_messages, query_hash, Digest, DigestEntry, DigestOptions};
pub use message::{Message, MessageKind, RoleTag, RoundVerdict, Transcript};
pub use tagged::{parse_tagged, FieldKind, TagError, TagSpec, TaggedFields};
pub use templates::{render_prompt, slots, TemplateError, TemplateId};
