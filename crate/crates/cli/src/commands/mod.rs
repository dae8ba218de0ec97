pub mod aggregate;
pub mod evaluate;
pub mod render;
pub mod run;
pub mod synth;
