#include "warpsdf/scene_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace warpsdf {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const char* what,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError(std::string(what) + ": unknown key '" + it.key() + "'");
    }
}

struct ParamTable {
    // name -> (offset, count)
    std::map<std::string, std::pair<int, int>> blocks;
    std::vector<std::string> names;
    std::vector<double> values;

    int resolve(const json& j, const char* what) const {
        if (j.is_number_integer()) {
            int s = j.get<int>();
            if (s < 0 || s >= int(values.size()))
                throw ConfigError(std::string(what) + ": slot index out of range");
            return s;
        }
        std::string n = j.get<std::string>();
        auto it = blocks.find(n);
        if (it == blocks.end() || it->second.second != 1)
            throw ConfigError(std::string(what) + ": unknown parameter '" + n + "'");
        return it->second.first;
    }
};

ParamRef parse_param_ref(const json& j, const ParamTable& table, const char* what) {
    if (j.is_number()) return ParamRef(j.get<double>());
    if (j.is_object()) {
        check_keys(j, what, {"slot"});
        return ParamRef::slotted(table.resolve(j.at("slot"), what));
    }
    throw ConfigError(std::string(what) + ": expected number or {\"slot\": ...}");
}

void parse_param_ref3(const json& j, const ParamTable& table, const char* what,
                      ParamRef out[3]) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(std::string(what) + ": expected an array of 3 entries");
    for (int k = 0; k < 3; ++k) out[k] = parse_param_ref(j[k], table, what);
}

Vec3d parse_vec3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(std::string(what) + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

SdfNodePtr parse_sdf(const json& j, const ParamTable& table);

std::vector<SdfNodePtr> parse_children(const json& j, const ParamTable& table) {
    if (!j.is_array() || j.size() < 1)
        throw ConfigError("sdf: 'children' must be a non-empty array");
    std::vector<SdfNodePtr> out;
    for (const auto& c : j) out.push_back(parse_sdf(c, table));
    return out;
}

SdfNodePtr parse_sdf(const json& j, const ParamTable& table) {
    std::string type = j.at("type").get<std::string>();
    if (type == "sphere") {
        check_keys(j, "sphere", {"type", "center", "radius"});
        ParamRef c[3];
        parse_param_ref3(j.at("center"), table, "sphere.center", c);
        return make_sphere(c[0], c[1], c[2], parse_param_ref(j.at("radius"), table, "sphere.radius"));
    }
    if (type == "box") {
        check_keys(j, "box", {"type", "center", "half_extents"});
        ParamRef c[3], h[3];
        parse_param_ref3(j.at("center"), table, "box.center", c);
        parse_param_ref3(j.at("half_extents"), table, "box.half_extents", h);
        return make_box(c[0], c[1], c[2], h[0], h[1], h[2]);
    }
    if (type == "torus") {
        check_keys(j, "torus", {"type", "center", "major_radius", "tube_radius"});
        ParamRef c[3];
        parse_param_ref3(j.at("center"), table, "torus.center", c);
        return make_torus(c[0], c[1], c[2],
                          parse_param_ref(j.at("major_radius"), table, "torus.major_radius"),
                          parse_param_ref(j.at("tube_radius"), table, "torus.tube_radius"));
    }
    if (type == "plane") {
        check_keys(j, "plane", {"type", "point", "normal"});
        ParamRef p[3], n[3];
        parse_param_ref3(j.at("point"), table, "plane.point", p);
        parse_param_ref3(j.at("normal"), table, "plane.normal", n);
        return make_plane(p[0], p[1], p[2], n[0], n[1], n[2]);
    }
    if (type == "union" || type == "intersection") {
        check_keys(j, type.c_str(), {"type", "children"});
        return make_combine(type == "union" ? SdfKind::Union : SdfKind::Intersection,
                            parse_children(j.at("children"), table));
    }
    if (type == "smooth_union") {
        check_keys(j, "smooth_union", {"type", "children", "blend"});
        return make_combine(SdfKind::SmoothUnion, parse_children(j.at("children"), table),
                            parse_param_ref(j.at("blend"), table, "smooth_union.blend"));
    }
    if (type == "complement") {
        check_keys(j, "complement", {"type", "child"});
        return make_complement(parse_sdf(j.at("child"), table));
    }
    if (type == "transform") {
        check_keys(j, "transform",
                   {"type", "child", "translate", "scale", "rotate_axis", "rotate_angle_deg"});
        ParamRef t[3] = {ParamRef(0.0), ParamRef(0.0), ParamRef(0.0)};
        if (j.contains("translate")) parse_param_ref3(j.at("translate"), table, "transform.translate", t);
        ParamRef s = j.contains("scale") ? parse_param_ref(j.at("scale"), table, "transform.scale")
                                         : ParamRef(1.0);
        Vec3d axis = j.contains("rotate_axis") ? parse_vec3(j.at("rotate_axis"), "transform.rotate_axis")
                                               : Vec3d{0, 0, 1};
        double angle = j.value("rotate_angle_deg", 0.0) * 3.14159265358979323846 / 180.0;
        return make_transform(parse_sdf(j.at("child"), table), t[0], t[1], t[2], s, axis, angle);
    }
    if (type == "mlp") {
        check_keys(j, "mlp", {"type", "widths", "pe_levels", "skip_layer", "params"});
        std::vector<int> widths = j.value("widths", std::vector<int>{64, 64, 64, 64});
        int pe = j.value("pe_levels", 6);
        int skip = j.value("skip_layer", 2);
        std::string block = j.at("params").get<std::string>();
        auto it = table.blocks.find(block);
        if (it == table.blocks.end())
            throw ConfigError("mlp: unknown parameter block '" + block + "'");
        auto mlp = std::make_shared<MlpSdf>(widths, pe, skip, it->second.first);
        if (mlp->param_count() != it->second.second)
            throw ConfigError("mlp: parameter block '" + block + "' has " +
                              std::to_string(it->second.second) + " slots but the network needs " +
                              std::to_string(mlp->param_count()));
        return make_mlp(std::move(mlp));
    }
    if (type == "empty") {
        check_keys(j, "empty", {"type"});
        return make_empty();
    }
    throw ConfigError("sdf: unknown node type '" + type + "'");
}

json dump_param_ref(const ParamRef& p, const Scene& scene) {
    if (!p.is_slot()) return p.value;
    json o;
    o["slot"] = p.slot < int(scene.param_names.size()) ? json(scene.param_names[p.slot])
                                                       : json(p.slot);
    return o;
}

json dump_param_ref3(const ParamRef p[3], const Scene& scene) {
    return json::array({dump_param_ref(p[0], scene), dump_param_ref(p[1], scene),
                        dump_param_ref(p[2], scene)});
}

json dump_sdf(const SdfNode& n, const Scene& scene) {
    json j;
    switch (n.kind) {
    case SdfKind::Sphere:
        j["type"] = "sphere";
        j["center"] = dump_param_ref3(n.center, scene);
        j["radius"] = dump_param_ref(n.radius, scene);
        break;
    case SdfKind::Box:
        j["type"] = "box";
        j["center"] = dump_param_ref3(n.center, scene);
        j["half_extents"] = dump_param_ref3(n.half, scene);
        break;
    case SdfKind::Torus:
        j["type"] = "torus";
        j["center"] = dump_param_ref3(n.center, scene);
        j["major_radius"] = dump_param_ref(n.radius, scene);
        j["tube_radius"] = dump_param_ref(n.radius2, scene);
        break;
    case SdfKind::Plane:
        j["type"] = "plane";
        j["point"] = dump_param_ref3(n.center, scene);
        j["normal"] = dump_param_ref3(n.normal, scene);
        break;
    case SdfKind::Union:
    case SdfKind::Intersection:
    case SdfKind::SmoothUnion: {
        j["type"] = n.kind == SdfKind::Union ? "union"
                   : n.kind == SdfKind::Intersection ? "intersection" : "smooth_union";
        json c = json::array();
        for (const auto& ch : n.children) c.push_back(dump_sdf(*ch, scene));
        j["children"] = c;
        if (n.kind == SdfKind::SmoothUnion) j["blend"] = dump_param_ref(n.blend, scene);
        break;
    }
    case SdfKind::Complement:
        j["type"] = "complement";
        j["child"] = dump_sdf(*n.children[0], scene);
        break;
    case SdfKind::Transform:
        j["type"] = "transform";
        j["child"] = dump_sdf(*n.children[0], scene);
        j["translate"] = dump_param_ref3(n.center, scene);
        j["scale"] = dump_param_ref(n.scale, scene);
        j["rotate_axis"] = json::array({n.rot_axis.x, n.rot_axis.y, n.rot_axis.z});
        j["rotate_angle_deg"] = n.rot_angle * 180.0 / 3.14159265358979323846;
        break;
    case SdfKind::Mlp: {
        j["type"] = "mlp";
        j["widths"] = n.mlp->hidden;
        j["pe_levels"] = n.mlp->pe_levels;
        j["skip_layer"] = n.mlp->skip_layer;
        // find the covering block name
        std::string block;
        for (size_t i = 0; i < scene.param_names.size(); ++i)
            if (int(i) == n.mlp->slot_offset) {
                block = scene.param_names[i];
                auto b = block.find('[');
                if (b != std::string::npos) block = block.substr(0, b);
            }
        j["params"] = block;
        break;
    }
    case SdfKind::Empty:
        j["type"] = "empty";
        break;
    }
    return j;
}

Camera parse_camera(const json& j) {
    check_keys(j, "camera", {"type", "position", "look_at", "up", "film", "fov_deg"});
    std::string type = j.at("type").get<std::string>();
    Camera::Kind kind;
    if (type == "orthographic")
        kind = Camera::Kind::Orthographic;
    else if (type == "pinhole")
        kind = Camera::Kind::Pinhole;
    else
        throw ConfigError("camera: unknown type '" + type + "'");
    const json& f = j.at("film");
    check_keys(f, "camera.film", {"width", "height", "extent"});
    Film film;
    film.width = f.at("width").get<int>();
    film.height = f.at("height").get<int>();
    film.extent = f.value("extent", 3.0);
    return Camera::look_at(kind, parse_vec3(j.at("position"), "camera.position"),
                           parse_vec3(j.at("look_at"), "camera.look_at"),
                           j.contains("up") ? parse_vec3(j.at("up"), "camera.up") : Vec3d{0, 1, 0},
                           film, j.value("fov_deg", 40.0));
}

Material parse_material(const json& j, const ParamTable& table) {
    check_keys(j, "material", {"flat", "albedo", "ambient", "background", "light"});
    Material m;
    m.flat = j.value("flat", false);
    if (j.contains("albedo")) parse_param_ref3(j.at("albedo"), table, "material.albedo", m.albedo);
    if (j.contains("ambient")) m.ambient = parse_vec3(j.at("ambient"), "material.ambient");
    if (j.contains("background")) m.background = parse_vec3(j.at("background"), "material.background");
    if (j.contains("light")) {
        const json& l = j.at("light");
        check_keys(l, "material.light", {"direction", "intensity"});
        m.light.direction = normalize(parse_vec3(l.at("direction"), "light.direction"));
        if (l.contains("intensity")) m.light.intensity = parse_vec3(l.at("intensity"), "light.intensity");
    }
    return m;
}

} // namespace

Scene parse_scene(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("scene JSON parse error: ") + e.what());
    }
    check_keys(j, "scene", {"name", "bounding_radius", "params", "camera", "material", "sdf"});

    ParamTable table;
    if (j.contains("params")) {
        for (const auto& p : j.at("params")) {
            check_keys(p, "params[]", {"name", "value", "count"});
            std::string name = p.at("name").get<std::string>();
            int count = p.value("count", 1);
            double value = p.value("value", 0.0);
            if (count < 1) throw ConfigError("params: count must be >= 1");
            if (table.blocks.count(name))
                throw ConfigError("params: duplicate name '" + name + "'");
            int offset = int(table.values.size());
            table.blocks[name] = {offset, count};
            for (int i = 0; i < count; ++i) {
                table.values.push_back(value);
                table.names.push_back(count == 1 ? name : name + "[" + std::to_string(i) + "]");
            }
        }
    }

    Scene scene;
    scene.name = j.value("name", "scene");
    scene.bounding_radius = j.value("bounding_radius", 1.0);
    scene.theta0 = table.values;
    scene.param_names = table.names;
    if (j.contains("camera")) scene.camera = parse_camera(j.at("camera"));
    if (j.contains("material")) scene.material = parse_material(j.at("material"), table);
    scene.root = j.contains("sdf") ? parse_sdf(j.at("sdf"), table) : make_empty();
    return scene;
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scene file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

std::string scene_to_json(const Scene& scene, const std::vector<double>* theta) {
    const std::vector<double>& vals = theta ? *theta : scene.theta0;
    json j;
    j["name"] = scene.name;
    j["bounding_radius"] = scene.bounding_radius;

    json params = json::array();
    for (size_t i = 0; i < scene.param_names.size();) {
        const std::string& n = scene.param_names[i];
        auto b = n.find('[');
        if (b == std::string::npos) {
            params.push_back({{"name", n}, {"value", vals[i]}});
            ++i;
        } else {
            std::string block = n.substr(0, b);
            size_t count = 0;
            while (i + count < scene.param_names.size() &&
                   scene.param_names[i + count].rfind(block + "[", 0) == 0)
                ++count;
            params.push_back({{"name", block}, {"count", count}, {"value", 0.0}});
            i += count;
        }
    }
    j["params"] = params;

    json cam;
    cam["type"] = scene.camera.kind == Camera::Kind::Orthographic ? "orthographic" : "pinhole";
    cam["position"] = {scene.camera.pos.x, scene.camera.pos.y, scene.camera.pos.z};
    Vec3d tgt = scene.camera.pos + scene.camera.fwd;
    cam["look_at"] = {tgt.x, tgt.y, tgt.z};
    cam["up"] = {scene.camera.up.x, scene.camera.up.y, scene.camera.up.z};
    cam["film"] = {{"width", scene.camera.film.width},
                   {"height", scene.camera.film.height},
                   {"extent", scene.camera.film.extent}};
    cam["fov_deg"] = scene.camera.fov_deg;
    j["camera"] = cam;

    json mat;
    mat["flat"] = scene.material.flat;
    mat["albedo"] = json::array({dump_param_ref(scene.material.albedo[0], scene),
                                 dump_param_ref(scene.material.albedo[1], scene),
                                 dump_param_ref(scene.material.albedo[2], scene)});
    mat["ambient"] = {scene.material.ambient.x, scene.material.ambient.y, scene.material.ambient.z};
    mat["background"] = {scene.material.background.x, scene.material.background.y,
                         scene.material.background.z};
    mat["light"] = {{"direction",
                     {scene.material.light.direction.x, scene.material.light.direction.y,
                      scene.material.light.direction.z}},
                    {"intensity",
                     {scene.material.light.intensity.x, scene.material.light.intensity.y,
                      scene.material.light.intensity.z}}};
    j["material"] = mat;
    j["sdf"] = dump_sdf(*scene.root, scene);
    return j.dump(2);
}

void save_scene(const std::string& path, const Scene& scene, const std::vector<double>* theta) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write scene file: " + path);
    out << scene_to_json(scene, theta) << "\n";
}

void write_theta(const std::string& path, const std::vector<double>& theta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write theta file: " + path);
    std::uint64_t n = theta.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(theta.data()), std::streamsize(8 * theta.size()));
}

std::vector<double> read_theta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open theta file: " + path);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    std::vector<double> theta(n);
    in.read(reinterpret_cast<char*>(theta.data()), std::streamsize(8 * n));
    if (!in) throw ConfigError("truncated theta file: " + path);
    return theta;
}

int resolve_param(const Scene& scene, const std::string& spec) {
    int byname = scene.param_index(spec);
    if (byname >= 0) return byname;
    try {
        size_t pos = 0;
        int idx = std::stoi(spec, &pos);
        if (pos == spec.size() && idx >= 0 && idx < int(scene.theta0.size())) return idx;
    } catch (...) {
    }
    return -1;
}

} // namespace warpsdf
