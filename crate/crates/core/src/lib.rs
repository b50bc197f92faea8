pub mod analysis;
pub mod cli;
pub mod expr;
pub mod fastconv;
pub mod ivp;
pub mod mlf;
pub mod shooting;
