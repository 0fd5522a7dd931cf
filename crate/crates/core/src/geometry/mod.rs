//! Coordinate normalization, rigid landmark alignment, level-set meshing and
//! the surface metrics used for evaluation.

mod asd;
mod centerline;
mod distance;
mod field;
mod marching_cubes;
mod mesh;
mod mesh_sdf;
mod normalize;
mod rigid;

pub use asd::{
    average_surface_distance, average_surface_distance_to_cloud, sample_on_mesh, AsdResult,
    SampleDistance,
};
pub use centerline::{
    centerline, centerline_with_clearance, diameter_profile, profile_from_centerline, Centerline, CenterlineOptions,
    CenterlineStation, DiameterProfile, DiameterStation,
};
pub use distance::{closest_point_on_triangle, point_to_mesh_distance, MeshDistance};
pub use field::{ScalarField, Shifted};
pub use marching_cubes::{case_table, extract_mesh, grid_coordinate};
pub use mesh::{TriangleMesh, Units};
pub use mesh_sdf::MeshSdf;
pub use normalize::{normalize_sequence, physical_distance, NormalizationTransform, NormalizedScan, NormalizedSequence};
pub use rigid::{kabsch_align, rmsd, RigidTransform};
