//! Parametric eye scene: geometry, gaze targets, glints, and rendering.

mod glint;
mod model;
mod render;
mod targets;
mod texture;
mod trace;

pub use glint::{glint_positions, reflection_point};
pub use model::*;
pub use render::{render, render_layers, render_with, RenderLayers};
pub use targets::{gaze_targets, target_angles};
pub use texture::{fbm2, value_noise};
pub use trace::Material;
pub(crate) use texture::splitmix64;
