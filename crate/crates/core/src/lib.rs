pub mod channel;
pub mod cli;
pub mod numerics;
pub mod precoder;
pub mod ratio;
pub mod region;
pub mod verify;
