//! ITER instances, the adaptive adversary and the periodic bicubic hard function.

pub mod bicubic;
pub mod function;
pub mod iter;
pub mod layout;
pub mod params;
pub mod verify;

pub use bicubic::{bicubic_coeffs, CellCoeffs};
pub use function::{eval_hard, hard_oracle, HardBounds, HardFunction};
pub use iter::{
    follow_path, iter_solutions_bruteforce, validate_iter, AdversarialIter, IterInstance, IterSolution,
    SolutionKind, SuccessorOracle,
};
pub use layout::{corner_data, region_label, Arrow, Color, GridCorner, Layout, LineKind, MediumBox, RegionLabel};
pub use params::{derive_params, HardParams};
pub use verify::{cell_catalogue, check_box_group, reflect_x, reflect_y, verify_no_spurious, LowPoint, SpuriousReport};
