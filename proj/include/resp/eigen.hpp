#pragma once

// Every dense product goes through the blocked GEMM/GEMV kernels. Eigen's
// coefficient-based path for small products peels unaligned heads off its
// dot products, so its rounding would depend on heap addresses and break
// run-to-run bit reproducibility.
#ifndef EIGEN_GEMM_TO_COEFFBASED_THRESHOLD
#define EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 0
#endif

#include <Eigen/Core>

#if EIGEN_GEMM_TO_COEFFBASED_THRESHOLD != 0
#error "resp requires EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 0; include resp headers before Eigen"
#endif
