pub mod cartan;
pub mod chernsimons;
pub mod error;
pub mod foliation;
pub mod frames;
pub mod hypgeom;
pub mod numerics;
pub mod renorm;
pub mod surfaces;
