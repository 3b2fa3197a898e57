pub mod lanelet;
pub mod numfmt;
pub mod opendrive;
pub mod orchestrator;
pub mod openscenario;
pub mod eval;
pub mod road;
pub mod roadgen;
pub mod sim;
mod xmlutil;
