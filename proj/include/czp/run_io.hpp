// run_io.hpp -- artifact persistence shared by the command-line tools:
// atomic writes, file fingerprints, run manifests, and a small SVG plot.

#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "czp/common.hpp"

namespace czp {

std::string read_file(const std::string& path);
// write to <path>.tmp then rename, so readers never see partial artifacts
void atomic_write_file(const std::string& path, const std::string& content);
std::string file_hash_hex(const std::string& path);

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::string config_json;  // resolved option values as a JSON object
    std::map<std::string, std::string> inputs;   // path -> content hash
    std::map<std::string, std::string> outputs;  // path -> content hash
    double wall_seconds = 0.0;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
// writes <dir>/manifest.json atomically
void write_manifest(const std::string& dir, const RunManifest& manifest);

// Minimal line plot, one polyline per series.
std::string svg_line_plot(const std::string& title, const Eigen::VectorXd& x,
                          const std::vector<std::pair<std::string, Eigen::VectorXd>>& series);

}  // namespace czp
