//! Quantization, entropy coding and the truncatable container format.

pub mod container;
pub mod entropy;
pub mod planes;
pub mod quantizer;

pub use container::{
    read_container, read_header_bytes, section_sizes, write_container, Container, ContainerHeader, LevelPayload,
    StackSource,
};
pub use entropy::{entropy_decode, entropy_encode};
pub use planes::{export_latent_planes, import_latent_planes};
pub use quantizer::{bits_for_qp, QuantizerSpec, DEFAULT_QPS};
