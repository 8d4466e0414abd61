#include <doctest.h>

#include <filesystem>

#include "czp/run_io.hpp"

using namespace czp;
namespace fs = std::filesystem;

TEST_CASE("atomic writes leave no temp file and hash stably") {
    const std::string path = (fs::temp_directory_path() / "czp_io_test.txt").string();
    atomic_write_file(path, "hello\n");
    CHECK(read_file(path) == "hello\n");
    CHECK(!fs::exists(path + ".tmp"));
    const std::string h1 = file_hash_hex(path);
    atomic_write_file(path, "hello\n");
    CHECK(file_hash_hex(path) == h1);
    atomic_write_file(path, "other\n");
    CHECK(file_hash_hex(path) != h1);
}

TEST_CASE("manifest round trip") {
    RunManifest m;
    m.command = "fit";
    m.argv = {"czp", "fit", "--k", "4"};
    m.config_json = "{\"k\":4,\"seed\":7}";
    m.inputs["resp.csv"] = "abc123";
    m.outputs["model.json"] = "def456";
    m.wall_seconds = 1.25;
    const RunManifest back = manifest_from_json(manifest_to_json(m));
    CHECK(back.command == m.command);
    CHECK(back.argv == m.argv);
    CHECK(back.inputs == m.inputs);
    CHECK(back.outputs == m.outputs);
    CHECK(back.wall_seconds == m.wall_seconds);

    const std::string dir = (fs::temp_directory_path() / "czp_manifest_dir").string();
    write_manifest(dir, m);
    CHECK(fs::exists(fs::path(dir) / "manifest.json"));
}

TEST_CASE("svg plot smoke") {
    Eigen::VectorXd x(3), y(3);
    x << 1, 2, 3;
    y << -1, 0.5, 2;
    const std::string svg = svg_line_plot("test", x, {{"series", y}});
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("polyline") != std::string::npos);
}
