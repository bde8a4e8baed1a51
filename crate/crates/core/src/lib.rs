pub mod harness;
pub mod localize;
pub mod polycore;
pub mod projgeom;
pub mod residue;
pub mod superalg;
pub mod syszero;
