//! Fixed inputs shared by the benchmarks.

use cusplab_core::lubrication::FallConfig;
use cusplab_core::CuspGeometry;

pub fn geometry() -> CuspGeometry {
    CuspGeometry::new(0.5, 0.44, 0.43).expect("admissible constants")
}

pub fn square_root_fall() -> FallConfig {
    FallConfig::quasi_static(1.0, 1.0, 1.0, 0.5, 1.0, 10.0)
}
