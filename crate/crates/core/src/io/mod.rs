//! On-disk formats: weight files, posterior traces and event records.

mod records;
mod weights;

pub use records::{
    read_binary_trace, read_trace, write_binary_trace, write_trace, EventRecord, TraceRecord,
};
pub use weights::{
    decode_container, decode_weights, encode_container, encode_weights, load_model, load_weights, save_weights,
    TensorDescriptor, FORMAT_VERSION, MAGIC,
};
