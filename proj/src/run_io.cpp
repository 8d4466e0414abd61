#include "czp/run_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace czp {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "read_file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), Errc::io, "atomic_write_file: cannot open " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        require(out.good(), Errc::io, "atomic_write_file: write failed for " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, Errc::io, "atomic_write_file: rename failed for " + path + ": " + ec.message());
}

std::string file_hash_hex(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

std::string manifest_to_json(const RunManifest& manifest) {
    json j;
    j["tool"] = "czp";
    j["version"] = kVersion;
    j["command"] = manifest.command;
    j["argv"] = manifest.argv;
    j["config"] = manifest.config_json.empty() ? json::object() : json::parse(manifest.config_json);
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["wall_seconds"] = manifest.wall_seconds;
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    json j = json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config_json = j.at("config").dump();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.wall_seconds = j.at("wall_seconds").get<double>();
    return m;
}

void write_manifest(const std::string& dir, const RunManifest& manifest) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    atomic_write_file((fs::path(dir) / "manifest.json").string(), manifest_to_json(manifest));
}

std::string svg_line_plot(const std::string& title, const Eigen::VectorXd& x,
                          const std::vector<std::pair<std::string, Eigen::VectorXd>>& series) {
    const int width = 720, height = 400, pad = 48;
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& [name, y] : series) {
        ymin = std::min(ymin, y.minCoeff());
        ymax = std::max(ymax, y.maxCoeff());
    }
    if (!(ymax > ymin)) {
        ymax = ymin + 1.0;
    }
    const double xmin = x.minCoeff(), xmax = x.maxCoeff();
    auto px = [&](double v) { return pad + (v - xmin) / (xmax - xmin) * (width - 2 * pad); };
    auto py = [&](double v) { return height - pad - (v - ymin) / (ymax - ymin) * (height - 2 * pad); };

    static const char* colors[] = {"#c0392b", "#27ae60", "#2980b9", "#8e44ad"};
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
        << "</text>\n";
    out << "<line x1='" << pad << "' y1='" << height - pad << "' x2='" << width - pad << "' y2='"
        << height - pad << "' stroke='black'/>\n";
    out << "<line x1='" << pad << "' y1='" << pad << "' x2='" << pad << "' y2='" << height - pad
        << "' stroke='black'/>\n";
    int si = 0;
    for (const auto& [name, y] : series) {
        out << "<polyline fill='none' stroke='" << colors[si % 4] << "' points='";
        for (int i = 0; i < x.size(); ++i) out << px(x[i]) << "," << py(y[i]) << " ";
        out << "'/>\n";
        out << "<text x='" << width - pad << "' y='" << pad + 16 * si
            << "' text-anchor='end' fill='" << colors[si % 4] << "' font-size='12'>" << name
            << "</text>\n";
        ++si;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace czp
