//! The symbolic mapping: label generation, detection losses, heatmap peak
//! decoding, template matching, and the bounded-noise position oracle.

pub mod extract;
pub mod heatmap;
pub mod labels;
pub mod loss;
pub mod template;

pub use extract::{noisy_oracle, DetectorExtractor, Extractor, OracleExtractor};
pub use heatmap::{decode_peaks, Detection, Heatmap, DEFAULT_STRIDE, DEFAULT_TAU};
pub use labels::{create_labels, LabelMap};
pub use loss::{focal_loss, focal_loss_grad, offset_mse, LossError};
pub use template::template_detect;
