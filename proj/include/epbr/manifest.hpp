// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON descriptions of channel sets (manifest) and reference slab scenes.
// Relative paths resolve against the directory of the JSON file.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "epbr/compositor.hpp"
#include "epbr/error.hpp"
#include "epbr/image_io.hpp"
#include "epbr/reference.hpp"

namespace epbr {

using Json = nlohmann::json;

struct ChannelFile {
    std::string path;
    ColorEncoding encoding = ColorEncoding::linear;
    std::optional<int> bit_depth;  // checked against the file when given
};

// Channel names: normal, depth, albedo, rmt (R red, M green, T blue),
// irradiance, and the optional mirror, background and source.
struct Manifest {
    std::map<std::string, ChannelFile> channels;
    CameraModel camera;  // width/height come from the files
    double ior = kDefaultIor;
    double d_px = kDefaultDistancePx;
    std::string notes;
    std::filesystem::path base_dir;

    static constexpr const char* kRequired[] = {"normal", "depth", "albedo", "rmt", "irradiance"};
    static constexpr const char* kOptional[] = {"mirror", "background", "source"};

    bool has(const std::string& name) const { return channels.count(name) != 0; }

    std::string resolve(const std::string& name) const {
        const std::filesystem::path p(channels.at(name).path);
        return (p.is_absolute() ? p : base_dir / p).string();
    }
};

namespace detail {

template <typename T>
T json_get(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("field '") + key + "': " + e.what());
    }
}

inline Rgb json_rgb(const Json& j, const char* what) {
    if (j.is_number()) return Rgb(j.get<double>());
    if (!j.is_array() || j.size() != 3) throw ValidationError(std::string(what) + " must be a number or [r, g, b]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Vec3 json_vec3(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(std::string(what) + " must be [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Json read_json_file(const std::string& path) {
    try {
        return Json::parse(read_file_bytes(path));
    } catch (const Json::parse_error& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline std::optional<int> file_bit_depth(const std::string& bytes) {
    if (bytes.size() > 24 && static_cast<unsigned char>(bytes[0]) == 0x89 && bytes[1] == 'P') return static_cast<unsigned char>(bytes[24]);
    if (bytes.size() > 2 && bytes[0] == 'P') return 32;
    return std::nullopt;
}

inline bool is_png(const std::string& bytes) { return bytes.size() > 8 && static_cast<unsigned char>(bytes[0]) == 0x89; }

}  // namespace detail

inline Manifest parse_manifest(const Json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ValidationError("manifest must be a JSON object");
    Manifest m;
    m.base_dir = base_dir;
    if (!j.contains("channels") || !j["channels"].is_object()) throw ValidationError("manifest needs a 'channels' object");
    for (const auto& [name, spec] : j["channels"].items()) {
        bool known = false;
        for (const char* k : Manifest::kRequired) known |= name == k;
        for (const char* k : Manifest::kOptional) known |= name == k;
        if (!known) throw ValidationError("unknown channel '" + name + "'");
        ChannelFile f;
        if (spec.is_string()) {
            f.path = spec.get<std::string>();
        } else if (spec.is_object()) {
            f.path = detail::json_get<std::string>(spec, "path", "");
            if (spec.contains("encoding")) f.encoding = parse_encoding(spec["encoding"].get<std::string>());
            if (spec.contains("bit_depth")) f.bit_depth = spec["bit_depth"].get<int>();
        } else {
            throw ValidationError("channel '" + name + "' must be a path or an object");
        }
        if (f.path.empty()) throw ValidationError("channel '" + name + "' has no path");
        if (name == "albedo" && !(spec.is_object() && spec.contains("encoding"))) f.encoding = ColorEncoding::srgb;
        m.channels[name] = f;
    }
    for (const char* k : Manifest::kRequired)
        if (!m.has(k)) throw ValidationError(std::string("manifest is missing channel '") + k + "'");

    const Json cam = j.value("camera", Json::object());
    m.camera.vertical_fov_deg = detail::json_get<double>(cam, "fov", 60.0);
    m.camera.near = detail::json_get<double>(cam, "near", 0.1);
    m.camera.far = detail::json_get<double>(cam, "far", 100.0);
    m.ior = detail::json_get<double>(j, "ior", kDefaultIor);
    m.d_px = detail::json_get<double>(j, "d_px", kDefaultDistancePx);
    m.notes = detail::json_get<std::string>(j, "notes", "");
    if (!(m.ior >= 1.0)) throw ValidationError("ior must be >= 1");
    if (!(m.d_px >= 1.0)) throw ValidationError("d_px must be >= 1");
    return m;
}

inline Manifest load_manifest(const std::string& path) {
    return parse_manifest(detail::read_json_file(path), std::filesystem::path(path).parent_path());
}

inline Json to_json(const Manifest& m) {
    Json ch = Json::object();
    for (const auto& [name, f] : m.channels) {
        Json c{{"path", f.path}, {"encoding", std::string(to_string(f.encoding))}};
        if (f.bit_depth) c["bit_depth"] = *f.bit_depth;
        ch[name] = c;
    }
    return {{"channels", ch},
            {"camera", {{"fov", m.camera.vertical_fov_deg}, {"near", m.camera.near}, {"far", m.camera.far}}},
            {"ior", m.ior},
            {"d_px", m.d_px},
            {"notes", m.notes}};
}

// Loads one channel file. PNG normals are stored as (n + 1) / 2.
inline ImagePlane load_channel(const Manifest& m, const std::string& name, std::optional<ImageSize> expected) {
    const ChannelFile& f = m.channels.at(name);
    const std::string path = m.resolve(name);
    const std::string bytes = detail::read_file_bytes(path);
    if (f.bit_depth) {
        const auto actual = detail::file_bit_depth(bytes);
        if (actual != f.bit_depth)
            throw ValidationError("channel '" + name + "': manifest says " + std::to_string(*f.bit_depth) + "-bit, file is " +
                                  (actual ? std::to_string(*actual) : std::string("unknown")) + "-bit");
    }
    ImagePlane img = decode_image(bytes, f.encoding, path);
    if (expected && (img.width() != expected->width || img.height() != expected->height))
        throw ValidationError("channel '" + name + "' is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                              ", expected " + std::to_string(expected->width) + "x" + std::to_string(expected->height));
    if (name == "normal" && detail::is_png(bytes))
        for (float& v : img.data()) v = 2.0f * v - 1.0f;
    return img;
}

inline ChannelSet load_channel_set(const Manifest& m) {
    ChannelSet cs;
    cs.albedo = load_channel(m, "albedo", std::nullopt);
    const ImageSize size{cs.albedo.width(), cs.albedo.height()};
    cs.camera = m.camera;
    cs.camera.width = size.width;
    cs.camera.height = size.height;
    cs.ior = m.ior;
    cs.normal = load_channel(m, "normal", size);
    cs.depth = load_channel(m, "depth", size);
    if (cs.depth.channels() == 3) cs.depth = extract_channel(cs.depth, 0);
    const ImagePlane rmt = load_channel(m, "rmt", size);
    if (rmt.channels() != 3) throw ValidationError("channel 'rmt' must pack R, M, T into three channels");
    cs.roughness = extract_channel(rmt, 0);
    cs.metallic = extract_channel(rmt, 1);
    cs.transparency = extract_channel(rmt, 2);
    cs.irradiance = load_channel(m, "irradiance", size);
    if (m.has("mirror")) cs.mirror = load_channel(m, "mirror", size);
    if (m.has("background")) cs.background = load_channel(m, "background", size);
    cs.validate();
    return cs;
}

// ---------------------------------------------------------------------------
// Reference scenes

inline SlabScene parse_scene(const Json& j, const std::filesystem::path& base_dir) {
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return (fp.is_absolute() ? fp : base_dir / fp).string();
    };
    SlabScene s;
    const Json mat = j.value("material", Json::object());
    try {
        s.material = MaterialSample(mat.contains("albedo") ? detail::json_rgb(mat["albedo"], "albedo") : Rgb(1.0),
                                    detail::json_get<double>(mat, "roughness", 0.5), detail::json_get<double>(mat, "metallic", 0.0),
                                    detail::json_get<double>(mat, "transparency", 0.0), detail::json_get<double>(mat, "ior", kDefaultIor));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("material: ") + e.what());
    }

    const Json env = j.value("environment", Json{{"preset", "sky"}});
    if (env.contains("path")) {
        s.environment = load_image(resolve(env["path"].get<std::string>()), ColorEncoding::linear);
    } else if (env.contains("constant")) {
        s.environment = ImagePlane(8, 4, 3);
        const Rgb c = detail::json_rgb(env["constant"], "environment constant");
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 8; ++x) s.environment.set_rgb(x, y, c);
    } else {
        const std::string preset = detail::json_get<std::string>(env, "preset", "sky");
        if (preset != "sky") throw ValidationError("unknown environment preset '" + preset + "'");
        s.environment = procedural_environment(detail::json_get<int>(env, "width", 256), detail::json_get<int>(env, "height", 128));
    }

    if (j.contains("background")) {
        const Json& bg = j["background"];
        if (bg.contains("path")) s.background = load_image(resolve(bg["path"].get<std::string>()), ColorEncoding::linear);
        else s.background = procedural_background();
        s.background_extent = detail::json_get<double>(bg, "extent", 4.0);
        s.background_distance = detail::json_get<double>(bg, "distance", 1.0);
    }

    const Json cam = j.value("camera", Json::object());
    s.camera.vertical_fov_deg = detail::json_get<double>(cam, "fov", 60.0);
    s.camera.near = detail::json_get<double>(cam, "near", 0.1);
    s.camera.far = detail::json_get<double>(cam, "far", 20.0);
    s.camera.width = detail::json_get<int>(cam, "width", 128);
    s.camera.height = detail::json_get<int>(cam, "height", 128);
    if (cam.contains("eye")) s.pose.eye = detail::json_vec3(cam["eye"], "camera eye");
    if (cam.contains("target")) s.pose.target = detail::json_vec3(cam["target"], "camera target");
    if (cam.contains("up")) s.pose.up = detail::json_vec3(cam["up"], "camera up");
    s.validate();
    return s;
}

inline SlabScene load_scene(const std::string& path) {
    return parse_scene(detail::read_json_file(path), std::filesystem::path(path).parent_path());
}

}  // namespace epbr
