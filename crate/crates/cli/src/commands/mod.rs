pub mod classify;
pub mod compare;
pub mod encode;
pub mod train;
