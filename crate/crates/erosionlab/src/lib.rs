//! erosionlab: a desk-scale simulator for studying model collapse under
//! synthetic-data training, and two self-alignment remedies (DGSA and
//! temperature-driven self-critique) in a tiny token speech world.

pub mod align;
pub mod dgsa;
pub mod diagnostics;
pub mod error;
pub mod lab;
pub mod policy;
pub mod seeding;
pub mod tdsc;
pub mod world;
