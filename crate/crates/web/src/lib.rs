//! In-browser demo. The [`demo`] module holds plain Rust functions that the
//! native tests exercise; the `#[wasm_bindgen]` wrappers below only convert
//! errors for JavaScript.

use wasm_bindgen::prelude::*;

pub mod demo;

pub use demo::Comparison;

/// Rasterizes a skp-lite document to RGBA8 bytes, row-major.
#[wasm_bindgen]
pub fn render(doc: &str, width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    demo::render_rgba(doc, width, height).map_err(|e| JsError::new(&e))
}

/// Optimizes a document and renders it before and after.
#[wasm_bindgen]
pub fn optimize(doc: &str, width: usize, height: usize) -> Result<Comparison, JsError> {
    demo::optimize_and_diff(doc, width, height).map_err(|e| JsError::new(&e))
}

/// Pretty-printed skp-lite text of a named example.
#[wasm_bindgen]
pub fn example(name: &str, seed: u64) -> Result<String, JsError> {
    demo::example(name, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = exampleNames)]
pub fn example_names() -> Vec<String> {
    demo::EXAMPLES.iter().map(|s| s.to_string()).collect()
}
