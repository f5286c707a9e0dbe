pub mod barcode;
pub mod bench;
pub mod sweep;
pub mod topologize;
pub mod train;
