// SPDX-License-Identifier: Apache-2.0

pub mod evaluate;
pub mod extract;
pub mod ground_truth;
pub mod kfold;
pub mod water_edge;
