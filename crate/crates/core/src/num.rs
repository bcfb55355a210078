//! Scalar abstraction for the numeric kernels: f32 or f64.

use num_traits::{Float, FromPrimitive};

pub trait Scalar: Float + FromPrimitive + core::fmt::Debug {}

impl<T> Scalar for T where T: Float + FromPrimitive + core::fmt::Debug {}
