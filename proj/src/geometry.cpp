#include "czp/geometry.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace czp {

using json = nlohmann::ordered_json;

const DesignSpace& five_patch_space() {
    static const DesignSpace space = [] {
        DesignSpace s;
        s.patches = {
            {0.75, 5.49, 0.0, 10.0, 0.5, 0.5},
            {17.64, 1.7, 0.0, 12.36, 1.0, 4.7},
            {11.38, 3.0, 10.0, 18.62, 1.0, 3.0},
            {18.63, 0.56, 0.0, 11.37, 1.0, 5.44},
            {0.99, 2.43, 10.0, 29.01, -2.0, 3.57},
        };
        s.port_patch = 0;
        return s;
    }();
    return space;
}

void validate_design(const DesignSpace& space, const DesignVector& design) {
    require(static_cast<int>(design.locations.size()) == space.patch_count(),
            Errc::invalid_argument, "design: wrong number of patch locations");
    for (int m = 0; m < space.patch_count(); ++m) {
        const PatchSpec& p = space.patches[static_cast<size_t>(m)];
        const Eigen::Vector2d& l = design.locations[static_cast<size_t>(m)];
        if (!(l.x() >= p.lx_min && l.x() <= p.lx_max && l.y() >= p.ly_min && l.y() <= p.ly_max)) {
            std::ostringstream msg;
            msg << "design: patch " << m + 1 << " location (" << l.x() << ", " << l.y()
                << ") outside ranges [" << p.lx_min << ", " << p.lx_max << "] x [" << p.ly_min
                << ", " << p.ly_max << "]";
            fail(Errc::invalid_argument, msg.str());
        }
    }
}

Rect patch_rect(const DesignSpace& space, const DesignVector& design, int patch) {
    const PatchSpec& p = space.patches[static_cast<size_t>(patch)];
    const Eigen::Vector2d& l = design.locations[static_cast<size_t>(patch)];
    return {l.x(), l.y(), l.x() + p.size_x, l.y() + p.size_y};
}

std::vector<Rect> design_rects(const DesignSpace& space, const DesignVector& design) {
    validate_design(space, design);
    std::vector<Rect> rects;
    rects.reserve(design.locations.size());
    for (int m = 0; m < space.patch_count(); ++m) rects.push_back(patch_rect(space, design, m));
    return rects;
}

Eigen::Vector2d port_position(const DesignSpace& space, const DesignVector& design) {
    validate_design(space, design);
    return design.locations[static_cast<size_t>(space.port_patch)];
}

DesignVector sample_design(const DesignSpace& space, std::uint64_t seed) {
    Rng rng(seed);
    DesignVector d;
    d.locations.reserve(space.patches.size());
    for (const PatchSpec& p : space.patches) {
        const double x = p.lx_min + rng.uniform() * (p.lx_max - p.lx_min);
        const double y = p.ly_min + rng.uniform() * (p.ly_max - p.ly_min);
        d.locations.emplace_back(x, y);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Rasterization

namespace {

struct PixelRect {
    double x_bl, y_bl, x_tr, y_tr;  // pixel units
    int xb, yb, xt, yt;             // floors
};

PixelRect to_pixels(const Rect& r, double res) {
    PixelRect p;
    p.x_bl = r.x0 * res;
    p.y_bl = r.y0 * res;
    p.x_tr = r.x1 * res;
    p.y_tr = r.y1 * res;
    p.xb = static_cast<int>(std::floor(p.x_bl));
    p.yb = static_cast<int>(std::floor(p.y_bl));
    p.xt = static_cast<int>(std::floor(p.x_tr));
    p.yt = static_cast<int>(std::floor(p.y_tr));
    return p;
}

inline bool in_range(int v, int n) { return v >= 0 && v < n; }

}  // namespace

AntennaImage rasterize_rects(const DesignSpace& space, const std::vector<Rect>& rects,
                             double resolution) {
    require(resolution > 0.0, Errc::invalid_argument, "rasterize: resolution must be > 0");
    AntennaImage img;
    img.resolution = resolution;
    img.height = static_cast<int>(std::lround(space.substrate_y * resolution));
    img.width = static_cast<int>(std::lround(space.substrate_x * resolution));
    img.x_boundary = Eigen::MatrixXd::Zero(img.height, img.width);
    img.y_boundary = Eigen::MatrixXd::Zero(img.height, img.width);
    img.interior = Eigen::MatrixXd::Zero(img.height, img.width);

    const int h = img.height, w = img.width;
    for (const Rect& rect : rects) {
        const PixelRect p = to_pixels(rect, resolution);

        // per-patch scratch so the right/top writes overwrite left/bottom on
        // degenerate thin patches, while cross-patch combination stays a max
        Eigen::MatrixXd xb_p = Eigen::MatrixXd::Zero(h, w);
        Eigen::MatrixXd yb_p = Eigen::MatrixXd::Zero(h, w);

        const int row_lo = std::max(p.yb, 0), row_hi = std::min(p.yt, h - 1);
        const int col_lo = std::max(p.xb, 0), col_hi = std::min(p.xt, w - 1);

        if (in_range(p.xb, w))
            for (int r = row_lo; r <= row_hi; ++r) xb_p(r, p.xb) = 1.0 - (p.x_bl - p.xb);
        if (in_range(p.xt, w))
            for (int r = row_lo; r <= row_hi; ++r) xb_p(r, p.xt) = p.x_tr - p.xt;
        if (in_range(p.yb, h))
            for (int c = col_lo; c <= col_hi; ++c) yb_p(p.yb, c) = 1.0 - (p.y_bl - p.yb);
        if (in_range(p.yt, h))
            for (int c = col_lo; c <= col_hi; ++c) yb_p(p.yt, c) = p.y_tr - p.yt;

        img.x_boundary = img.x_boundary.cwiseMax(xb_p);
        img.y_boundary = img.y_boundary.cwiseMax(yb_p);

        // interior bounds come from floors clamped into the image, so a
        // clipped edge removes its boundary column/row and nothing else
        const int xb_cl = std::clamp(p.xb, 0, w - 1), xt_cl = std::clamp(p.xt, 0, w - 1);
        const int yb_cl = std::clamp(p.yb, 0, h - 1), yt_cl = std::clamp(p.yt, 0, h - 1);
        for (int r = yb_cl + 1; r <= yt_cl - 1; ++r)
            for (int c = xb_cl + 1; c <= xt_cl - 1; ++c) img.interior(r, c) = 1.0;
    }

    // merged conductors have no internal boundaries
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (img.interior(r, c) == 1.0) {
                img.x_boundary(r, c) = 0.0;
                img.y_boundary(r, c) = 0.0;
            }
        }
    }
    return img;
}

AntennaImage rasterize(const DesignSpace& space, const DesignVector& design, double resolution) {
    return rasterize_rects(space, design_rects(space, design), resolution);
}

namespace {

ChannelStats channel_stats(const Eigen::MatrixXd& m) {
    return {m.minCoeff(), m.maxCoeff(), m.sum()};
}

}  // namespace

ImageStatistics image_statistics(const AntennaImage& image) {
    ImageStatistics s;
    s.x_boundary = channel_stats(image.x_boundary);
    s.y_boundary = channel_stats(image.y_boundary);
    s.interior = channel_stats(image.interior);
    s.interior_area = image.interior.sum();
    return s;
}

// ---------------------------------------------------------------------------
// Export

std::string channel_to_pgm(const Eigen::MatrixXd& channel) {
    std::ostringstream out;
    out << "P5\n" << channel.cols() << " " << channel.rows() << "\n255\n";
    for (int r = static_cast<int>(channel.rows()) - 1; r >= 0; --r) {
        for (int c = 0; c < channel.cols(); ++c) {
            const double v = std::clamp(channel(r, c), 0.0, 1.0);
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
        }
    }
    return out.str();
}

std::string channel_to_csv(const Eigen::MatrixXd& channel) {
    std::string out;
    char buf[40];
    for (int r = 0; r < channel.rows(); ++r) {
        for (int c = 0; c < channel.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", channel(r, c));
            out += buf;
            out += (c + 1 < channel.cols()) ? ',' : '\n';
        }
    }
    return out;
}

std::string design_to_json(const DesignVector& design) {
    json j;
    json locs = json::array();
    for (const auto& l : design.locations) locs.push_back({l.x(), l.y()});
    j["locations"] = locs;
    return j.dump(2) + "\n";
}

DesignVector design_from_json(const std::string& text) {
    json j = json::parse(text);
    DesignVector d;
    for (const auto& e : j.at("locations"))
        d.locations.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    return d;
}

}  // namespace czp
