#pragma once

#include <memory>
#include <string>
#include <vector>

#include "warpforge/amoe.hpp"
#include "warpforge/homography.hpp"
#include "warpforge/imaging.hpp"
#include "warpforge/tps_ffd.hpp"

namespace warpforge {

/// AsWritten penalizes edges longer than alpha * W / V; Prose penalizes edges
/// shorter than that minimum length.
enum class IntraMode { AsWritten, Prose };

enum class WarpBackend { Vanilla, Ffd };

struct LossConfig {
    double lambda_H = 1.0;
    double lambda_T = 3.0;
    double w_s = 10.0;
    double w_r = 0.01;
    double lambda_e = 0.1;
    double alpha = 0.5;
    int U = 12;
    int V = 12;
    IntraMode intra_mode = IntraMode::AsWritten;

    /// Throws ContractViolation on negative weights or U, V < 2.
    void validate() const;
};

/// Warped control-lattice vertices, vertex (i, j) at i * (V + 1) + j.
/// width/height are the W, H of the length thresholds.
struct MeshVertices {
    int U = 0;
    int V = 0;
    double width = 0.0;
    double height = 0.0;
    std::vector<Point> vertices;

    Point at(int i, int j) const { return vertices[static_cast<std::size_t>(i) * (V + 1) + j]; }
    static MeshVertices from_grid(const ControlGrid& grid);
    void validate() const;
};

struct LossBreakdown {
    double align_H = 0.0;
    double align_T = 0.0;
    double shape_intra = 0.0;
    double shape_inter = 0.0;
    double reg = 0.0;
    double total = 0.0;
    int skipped_edges = 0;  // zero-length edges in the inter-grid term
};

/// Recomputes total from the parts with the configured weights.
double compose_total(const LossBreakdown& b, const LossConfig& cfg);

struct AlignmentTerms {
    double align_H = 0.0;
    double align_T = 0.0;
};

/// Masked L1 between two backward-warped images: canvas pixel q samples each
/// image at q + origin + flow(q). The mask is the product of both in-bounds
/// indicators; the mean runs over every canvas pixel and over channels.
/// When grad pointers are given they receive d loss / d flow (masks are
/// stop-gradient, sign(0) = 0).
double masked_l1(const Image& ref, const Image& tgt, const FlowField& flow_ref, const FlowField& flow_tgt,
                 Point origin = {}, Exec exec = Exec::Parallel, FlowField* grad_ref = nullptr,
                 FlowField* grad_tgt = nullptr);

/// align_H from the homography flows, align_T from the TPS flows; all rasters
/// share one size.
AlignmentTerms alignment_loss(const Image& ref, const Image& tgt, const FlowField& h_ref, const FlowField& h_tgt,
                              const FlowField& t_ref, const FlowField& t_tgt, Exec exec = Exec::Parallel);

double intra_grid_loss(const MeshVertices& mesh, const LossConfig& cfg);
std::vector<Point> intra_grid_grad(const MeshVertices& mesh, const LossConfig& cfg);

struct InterGridValue {
    double value = 0.0;
    int skipped_edges = 0;
};

InterGridValue inter_grid_loss(const MeshVertices& mesh);
std::vector<Point> inter_grid_grad(const MeshVertices& mesh);

/// Control offsets for both views.
struct ViewOffsets {
    std::vector<Point> ref;
    std::vector<Point> tgt;

    std::size_t size() const { return ref.size() + tgt.size(); }
};

/// Evaluation window of the objective in middle-plane coordinates.
struct ObjectiveWindow {
    int width = 0;
    int height = 0;
    Point origin;
};

/// The complete objective as a function of both views' control offsets.
///
/// Each view has a uniform (U+1) x (V+1) control lattice over the window.
/// Window pixel q samples view v at q + origin + d_v(q), where d_v is the TPS
/// interpolating the view's offsets; the offsets therefore place lattice
/// vertex k at source_k + origin + offset_k in that view's image, and these
/// positions form the view's shape-loss mesh. Evaluators are cached per
/// instance, so repeated evaluation is cheap.
class StitchObjective {
public:
    StitchObjective(Image ref, Image tgt, const MiddlePlane& plane, const FusionWeights& weights, LossConfig cfg,
                    WarpBackend backend, ObjectiveWindow window, Exec exec = Exec::Parallel,
                    TpsEvalOptions vanilla = {});
    ~StitchObjective();
    StitchObjective(StitchObjective&&) noexcept;
    StitchObjective& operator=(StitchObjective&&) noexcept;

    /// Offsets reproducing the middle-plane homographies at every vertex.
    ViewOffsets initial_offsets() const;

    LossBreakdown evaluate(const ViewOffsets& offsets) const;

    /// Value and d total / d offsets.
    LossBreakdown evaluate(const ViewOffsets& offsets, ViewOffsets& grad) const;

    /// TPS flow of one view (0 = ref, 1 = tgt) over the window.
    FlowField tps_flow(int view, const std::vector<Point>& offsets) const;
    const FlowField& homography_flow(int view) const;

    MeshVertices mesh(int view, const std::vector<Point>& offsets) const;

    const ControlGrid& layout() const;
    const ObjectiveWindow& window() const;
    const LossConfig& config() const;

private:
    LossBreakdown run(const ViewOffsets& offsets, ViewOffsets* grad) const;

    struct State;
    std::unique_ptr<State> s_;
};

/// Free-function forms over a prepared objective.
LossBreakdown total_objective(const StitchObjective& objective, const ViewOffsets& offsets);
ViewOffsets objective_grad(const StitchObjective& objective, const ViewOffsets& offsets);

std::string to_string(IntraMode m);
std::string to_string(WarpBackend b);
IntraMode parse_intra_mode(const std::string& s);
WarpBackend parse_backend(const std::string& s);

}  // namespace warpforge
