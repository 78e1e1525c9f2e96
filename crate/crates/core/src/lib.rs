//! Executable semantics for a small Skia-like 2D drawing command language,
//! a reference rasterizer, and an optimizer whose rewrites are checked by
//! translation validation.
//!
//! The crate is layered bottom-up:
//!
//! * [`color`]: points, premultiplied colors, fills, blends and filters.
//! * [`shape`]: shapes as point predicates.
//! * [`layer`]: layer terms and their denotation as images.
//! * [`command`]: the flat command buffer and its operational semantics.
//! * [`raster`]: a pixel-center rasterizer and AE image diffing.
//! * [`format`]: the skp-lite JSON format; [`corpus`] generates test programs.
//! * [`optimizer`]: the pass harness and the four rewrite passes.
//! * [`validator`]: per-step translation validation of optimizer traces.

pub mod color;
pub mod command;
pub mod corpus;
pub mod format;
pub mod layer;
pub mod optimizer;
pub mod raster;
pub mod shape;
pub mod validator;

pub use color::{BlendMode, Color, Fill, FilterKind, GradientStop, Point};
pub use command::{check_balanced, run, BalanceError, Command, CommandKind, Program};
pub use format::{load_program, save_program, LoadError};
pub use layer::{denote, LayerTerm, Paint};
pub use optimizer::{optimize, OptimizeConfig, PassKind, RewriteTrace};
pub use raster::{image_diff_ae, rasterize, DiffReport, RasterImage};
pub use shape::Shape;
pub use validator::{validate_trace, ValidationConfig, ValidationVerdict};
