pub mod conic;
pub mod convexify;
pub mod gusto;
pub mod kv;
pub mod model;
pub mod bench;
pub mod ocp;
pub mod warmstart;
