//! Deposits, their access settings and the file-backed store.

mod blob;
pub mod citation;
mod log;
mod model;
mod store;

pub use blob::{digest_hex, BlobStore, DirBlobs, MemoryBlobs};
pub use log::{read_events, Event, State, StoredEvent, StoredRequest};
pub use model::{
    AccessKind, AccessState, AccessTransition, Depositor, DocumentPart, EprintFilter, EprintId, EprintMetadata,
    EprintRecord, PublicPart, RedactedEprint, SourceKey, VenueKind, VenueRef,
};
pub use store::{DecisionCommit, Store, ACTOR_ADMIN, ACTOR_DEPOSITOR, ACTOR_SCHEDULER};
