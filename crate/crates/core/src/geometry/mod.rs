//! Surface families, their triangulations and metric quantities.

pub mod io;
pub mod mesh;
pub mod profile;
pub mod spec;

pub use mesh::{build_mesh, build_mesh_with, icosphere, surface_radius, MeshOptions, Point, SurfaceMesh};
pub use profile::{Pchip, Profile};
pub use spec::{polar_azimuth, SurfaceConfig, SurfaceSpec};
