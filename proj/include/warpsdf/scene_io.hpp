#pragma once

#include <string>

#include "warpsdf/scene.hpp"

namespace warpsdf {

// JSON scene description; schema is strict (unknown keys rejected).
Scene load_scene(const std::string& path);
Scene parse_scene(const std::string& json_text);
std::string scene_to_json(const Scene& scene, const std::vector<double>* theta = nullptr);
void save_scene(const std::string& path, const Scene& scene,
                const std::vector<double>* theta = nullptr);

// Little-endian float64 blob with a uint64 length header.
void write_theta(const std::string& path, const std::vector<double>& theta);
std::vector<double> read_theta(const std::string& path);

// Parameter selector strings: plain name, block "name[index]", or a
// numeric index. Returns -1 when unresolved.
int resolve_param(const Scene& scene, const std::string& spec);

} // namespace warpsdf
