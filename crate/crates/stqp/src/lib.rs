pub mod census;
pub mod checks;
pub mod cli;
pub mod io;
pub mod report;
