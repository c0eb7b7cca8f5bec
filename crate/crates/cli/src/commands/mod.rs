pub mod bench;
pub mod eval;
pub mod generate;
pub mod mb;
pub mod replay;
pub mod select;
