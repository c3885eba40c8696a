//! Numerical ranges through support functions.

pub mod attain;
pub mod ellipse;
pub mod registry;
pub mod sr;
pub mod support;
pub mod tq;

pub use ellipse::{ellipse_2x2, EllipseParams, FocalEllipse};
pub use support::{support_function, SupportEngine, SupportProfile};
