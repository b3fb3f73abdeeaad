//! Model topologies, receptive-field geometry and footprint accounting.

mod config;
mod footprint;
mod receptive;
mod zoo;

pub use config::{InputSpec, LayerSpec, ModelConfig, Shape, CONFIG_SCHEMA_VERSION};
pub use footprint::{count_multiplies, count_parameters, footprint, FootprintReport, LayerFootprint};
pub use receptive::{receptive_field, ReceptiveField};
pub(crate) use receptive::front_geometry;
pub use zoo::{budget, reference_config, Budget, ZOO};

/// Resolves a reference model name or a path to a JSON config.
pub fn resolve_config(name_or_path: &str) -> crate::Result<ModelConfig> {
    match reference_config(name_or_path) {
        Ok(cfg) => Ok(cfg),
        Err(crate::Error::UnknownModel(_)) if std::path::Path::new(name_or_path).exists() => {
            ModelConfig::load(name_or_path)
        }
        Err(e) => Err(e),
    }
}
