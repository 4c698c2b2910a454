#pragma once

#include "warpforge/imaging.hpp"
#include "warpforge/tps_ffd.hpp"

/// Straightforward serial kernels kept as references for the optimized
/// parallel paths. Slow by construction.
namespace warpforge::reference {

/// Per-pixel closed-form TPS displacement.
FlowField tps_eval_flow(const TpsSolution& sol, const Meshgrid& mesh);

/// Per-pixel double sum over the 4x4 neighbourhood with on-the-fly padding.
FlowField ffd_upsample(const FlowField& sparse, int frame_w, int frame_h);

}  // namespace warpforge::reference
