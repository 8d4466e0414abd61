// geometry.hpp -- the five-patch planar antenna design space and its
// three-channel raster representation.
//
// A design places M rectangular metal patches of fixed size on a substrate;
// the raster encodes, per pixel: sub-pixel boundary coverage in x, in y,
// and a binary interior. Given a patch with corners (x_bl, y_bl), (x_tr,
// y_tr) in pixel units and floors xb = floor(x_bl) etc.:
//
//   x-boundary column xb gets 1 - (x_bl - xb), column xt gets x_tr - xt
//   y-boundary row    yb gets 1 - (y_bl - yb), row    yt gets y_tr - yt
//   interior is 1 on [xb+1, xt-1] x [yb+1, yt-1]
//
// Area outside the substrate is clipped and its boundary is not drawn.
// Overlapping patches act as one conductor: interiors are unioned first
// and boundary values are erased wherever the union interior covers them.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "czp/common.hpp"

namespace czp {

struct PatchSpec {
    double size_x = 0.0, size_y = 0.0;  // mm
    double lx_min = 0.0, lx_max = 0.0;  // bottom-left x range, mm
    double ly_min = 0.0, ly_max = 0.0;  // bottom-left y range, mm
};

struct DesignSpace {
    double substrate_x = 30.0;  // mm
    double substrate_y = 6.0;   // mm
    double thickness = 0.8;     // mm; carried, not modelled by the oracle
    double epsilon_r = 4.4;     // FR-4; carried, not modelled by the oracle
    std::vector<PatchSpec> patches;
    int port_patch = 0;  // the patch whose bottom-left corner is the port

    int patch_count() const { return static_cast<int>(patches.size()); }
};

// The bundled production-derived space: 30 x 6 mm substrate, five patches.
const DesignSpace& five_patch_space();

struct DesignVector {
    std::vector<Eigen::Vector2d> locations;  // bottom-left corners, mm
};

struct Rect {
    double x0, y0, x1, y1;  // mm
};

void validate_design(const DesignSpace& space, const DesignVector& design);
Rect patch_rect(const DesignSpace& space, const DesignVector& design, int patch);
std::vector<Rect> design_rects(const DesignSpace& space, const DesignVector& design);

// Port location: bottom-left corner of the port patch.
Eigen::Vector2d port_position(const DesignSpace& space, const DesignVector& design);

// Uniform sample of every coordinate within its range; deterministic per seed.
DesignVector sample_design(const DesignSpace& space, std::uint64_t seed);

struct AntennaImage {
    int height = 0, width = 0;  // pixels; row 0 is y = 0 (bottom)
    double resolution = 10.0;   // px per mm
    Eigen::MatrixXd x_boundary;
    Eigen::MatrixXd y_boundary;
    Eigen::MatrixXd interior;
};

AntennaImage rasterize(const DesignSpace& space, const DesignVector& design,
                       double resolution = 10.0);
AntennaImage rasterize_rects(const DesignSpace& space, const std::vector<Rect>& rects,
                             double resolution);

struct ChannelStats {
    double min = 0.0, max = 0.0, sum = 0.0;
};

struct ImageStatistics {
    ChannelStats x_boundary, y_boundary, interior;
    double interior_area = 0.0;  // pixel count of the interior channel
};

ImageStatistics image_statistics(const AntennaImage& image);

// Export -----------------------------------------------------------------

// Binary PGM, values rounded to [0,255], top row first.
std::string channel_to_pgm(const Eigen::MatrixXd& channel);
std::string channel_to_csv(const Eigen::MatrixXd& channel);

std::string design_to_json(const DesignVector& design);
DesignVector design_from_json(const std::string& text);

}  // namespace czp
