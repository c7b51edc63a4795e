pub mod curve_filter;
pub mod fsutil;
pub mod gbm;
pub mod message;
pub mod occupancy;
pub mod prep;
pub mod raw_store;
pub mod serving;
pub mod synth;
pub mod time;
pub mod weather;
