//! Differentiable layers and the five classifier families.

mod arch;
mod checkpoint;
mod gru;
mod layers;
mod model;
mod spec;

pub use arch::{analytic_param_count, layer_plan, min_frames, CNN14_CHANNELS, CNN_CHANNELS, TDNN_LAYERS};
pub use checkpoint::{load_model, read_model, save_model, write_model, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gru::{BiGru, GruDirection, GruTrace};
pub use layers::{Conv1d, Conv2d, Dense, Layer, Trace};
pub use model::{build_model, log_softmax, softmax, ForwardPass, Gradients, Model};
pub use spec::{enumerate_variants, full_grid, DepthVariant, Family, ModelSpec, MIN_WIDTH, WIDTH_FACTORS};
