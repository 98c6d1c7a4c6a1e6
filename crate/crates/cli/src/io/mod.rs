//! File formats: the PCB binary point-cloud container, CSV readers/writers
//! for fixtures and reports, and the weight snapshot format.

pub mod csv;
pub mod pcb;
pub mod weights;
