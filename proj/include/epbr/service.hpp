// SPDX-License-Identifier: Apache-2.0
#pragma once

// HTTP compose service. Sessions are directories under a root; each holds a
// copy of the manifest it was opened with and the last edit request. Base
// channels are loaded once and never modified: edits are applied to a copy
// per request, so a compose response depends only on (base, request).
//
//   POST /sessions                     {"manifest_path": p} | {"manifest": {...}, "base_dir": d}
//   GET  /sessions/{id}/channels/{ch}  channel preview PNG
//   POST /sessions/{id}/compose        EditRequest -> PNG, or JSON with layer PNGs
//   GET  /sessions/{id}/manifest       manifest plus the effective edit

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "epbr/compositor.hpp"
#include "epbr/error.hpp"
#include "epbr/image_io.hpp"
#include "epbr/manifest.hpp"
#include "epbr/splitsum_lut.hpp"
#include "epbr/ssrt.hpp"

namespace epbr {

struct MaterialOverride {
    std::optional<Rgb> albedo;
    std::optional<double> roughness;
    std::optional<double> metallic;
    std::optional<double> transparency;

    bool empty() const { return !albedo && !roughness && !metallic && !transparency; }
};

struct MaskedOverride {
    std::string mask_path;  // 1-channel image; 1 applies the override fully, 0 keeps the base
    MaterialOverride values;
};

struct EditRequest {
    MaterialOverride global;
    std::vector<MaskedOverride> masked;
    ToneMapMode tonemap = ToneMapMode::clamp_srgb;
    double exposure = 1.0;
    bool layers = false;
};

namespace detail {

inline MaterialOverride parse_override(const Json& j) {
    MaterialOverride o;
    auto unit = [](const char* name, double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(name) + " must be in [0, 1]");
        return v;
    };
    try {
        if (j.contains("albedo")) {
            const Rgb a = json_rgb(j["albedo"], "albedo");
            unit("albedo", a.r), unit("albedo", a.g), unit("albedo", a.b);
            o.albedo = a;
        }
        if (j.contains("roughness")) o.roughness = unit("roughness", j["roughness"].get<double>());
        if (j.contains("metallic")) o.metallic = unit("metallic", j["metallic"].get<double>());
        if (j.contains("transparency")) o.transparency = unit("transparency", j["transparency"].get<double>());
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("bad override value: ") + e.what());
    }
    return o;
}

inline Json override_json(const MaterialOverride& o) {
    Json j = Json::object();
    if (o.albedo) j["albedo"] = {o.albedo->r, o.albedo->g, o.albedo->b};
    if (o.roughness) j["roughness"] = *o.roughness;
    if (o.metallic) j["metallic"] = *o.metallic;
    if (o.transparency) j["transparency"] = *o.transparency;
    return j;
}

}  // namespace detail

inline EditRequest parse_edit_request(const Json& j) {
    if (!j.is_object()) throw ValidationError("edit request must be a JSON object");
    EditRequest r;
    r.global = detail::parse_override(j.value("overrides", Json::object()));
    if (j.contains("masked")) {
        if (!j["masked"].is_array()) throw ValidationError("'masked' must be an array");
        for (const auto& m : j["masked"]) {
            if (!m.contains("mask") || !m["mask"].is_string()) throw ValidationError("masked override needs a 'mask' path");
            r.masked.push_back({m["mask"].get<std::string>(), detail::parse_override(m)});
        }
    }
    if (j.contains("tonemap")) {
        const Json& t = j["tonemap"];
        if (t.contains("mode")) r.tonemap = parse_tonemap(t["mode"].get<std::string>());
        r.exposure = t.value("exposure", 1.0);
        if (!(r.exposure > 0.0)) throw ValidationError("exposure must be positive");
    }
    r.layers = j.value("layers", false);
    return r;
}

inline Json to_json(const EditRequest& r) {
    Json masked = Json::array();
    for (const auto& m : r.masked) {
        Json e = detail::override_json(m.values);
        e["mask"] = m.mask_path;
        masked.push_back(e);
    }
    return {{"overrides", detail::override_json(r.global)},
            {"masked", masked},
            {"tonemap", {{"mode", r.tonemap == ToneMapMode::clamp_srgb ? "clamp" : "reinhard"}, {"exposure", r.exposure}}},
            {"layers", r.layers}};
}

// Applies overrides to a copy of `base`. Masks are blended linearly.
inline ChannelSet apply_edits(const ChannelSet& base, const EditRequest& req, const std::filesystem::path& mask_dir) {
    ChannelSet cs = base;
    auto apply = [&](const MaterialOverride& o, const ImagePlane* mask) {
        for (int y = 0; y < cs.height(); ++y) {
            for (int x = 0; x < cs.width(); ++x) {
                const double w = mask ? std::clamp(static_cast<double>(mask->at(x, y)), 0.0, 1.0) : 1.0;
                if (w == 0.0) continue;
                auto blend = [w](float& v, double target) { v = static_cast<float>(v + (target - v) * w); };
                if (o.albedo) {
                    blend(cs.albedo.at(x, y, 0), o.albedo->r);
                    blend(cs.albedo.at(x, y, 1), o.albedo->g);
                    blend(cs.albedo.at(x, y, 2), o.albedo->b);
                }
                if (o.roughness) blend(cs.roughness.at(x, y), *o.roughness);
                if (o.metallic) blend(cs.metallic.at(x, y), *o.metallic);
                if (o.transparency) blend(cs.transparency.at(x, y), *o.transparency);
            }
        }
    };
    apply(req.global, nullptr);
    for (const auto& m : req.masked) {
        const std::filesystem::path p(m.mask_path);
        ImagePlane mask = load_image((p.is_absolute() ? p : mask_dir / p).string(), ColorEncoding::linear,
                                     ImageSize{cs.width(), cs.height()});
        if (mask.channels() == 3) mask = extract_channel(mask, 0);
        apply(m.values, &mask);
    }
    return cs;
}

// Mirror layer traced from the base geometry with the diffuse layer as the
// reflected source, holes filled with gray.
inline ImagePlane derive_mirror(const ChannelSet& cs, int workers) {
    const ReflectionLayer layer = trace_reflections(cs.depth, cs.normal, diffuse_layer(cs), cs.camera, SsrtConfig{}, workers);
    return fill_holes(layer);
}

inline std::string base64_encode(const std::string& in) { return httplib::detail::base64_encode(in); }

struct ServiceResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;

    static ServiceResponse json(int status, const Json& j) { return {status, "application/json", j.dump()}; }
    static ServiceResponse error(int status, const std::string& msg) { return json(status, {{"error", msg}}); }
};

class ComposeService {
public:
    struct Session {
        std::string id;
        std::filesystem::path dir;
        Manifest manifest;
        ChannelSet base;
        std::optional<ImagePlane> derived_mirror;
        std::optional<EditRequest> last_edit;
        std::mutex mutex;  // serialises compose requests per session
    };

    ComposeService(std::filesystem::path session_root, SplitSumLut lut, int workers = 0)
        : root_(std::move(session_root)), lut_(std::move(lut)), workers_(workers) {
        std::filesystem::create_directories(root_);
    }

    ServiceResponse create_session(const std::string& body) {
        return guarded([&] {
            const Json req = parse_body(body);
            Manifest manifest;
            if (req.contains("manifest_path")) {
                manifest = load_manifest(req["manifest_path"].get<std::string>());
            } else if (req.contains("manifest")) {
                manifest = parse_manifest(req["manifest"], req.value("base_dir", std::string(".")));
            } else {
                throw ValidationError("body needs 'manifest_path' or 'manifest'");
            }
            auto session = std::make_shared<Session>();
            session->base = load_channel_set(manifest);
            session->manifest = manifest;
            {
                std::lock_guard lock(mutex_);
                session->id = next_id();
                sessions_[session->id] = session;
            }
            session->dir = root_ / session->id;
            std::filesystem::create_directories(session->dir);
            Json saved = to_json(manifest);
            saved["base_dir"] = std::filesystem::absolute(manifest.base_dir).string();
            write_text(session->dir / "manifest.json", saved.dump(2));

            Json channels = Json::array();
            for (const auto& [name, f] : manifest.channels) channels.push_back(name);
            return ServiceResponse::json(201, {{"id", session->id},
                                               {"width", session->base.width()},
                                               {"height", session->base.height()},
                                               {"channels", channels},
                                               {"mirror_derived", !session->base.mirror.has_value()}});
        });
    }

    ServiceResponse channel_preview(const std::string& id, const std::string& name) {
        return guarded([&] {
            auto s = find(id);
            if (!s) return ServiceResponse::error(404, "unknown session '" + id + "'");
            std::lock_guard lock(s->mutex);
            const ChannelSet& cs = s->base;
            ImagePlane img;
            ColorEncoding enc = ColorEncoding::linear;
            if (name == "normal") {
                img = cs.normal;
                for (float& v : img.data()) v = 0.5f * (v + 1.0f);
            } else if (name == "depth") {
                img = cs.depth;
            } else if (name == "albedo") {
                img = cs.albedo;
                enc = ColorEncoding::srgb;
            } else if (name == "rmt") {
                img = ImagePlane(cs.width(), cs.height(), 3);
                for (int y = 0; y < cs.height(); ++y)
                    for (int x = 0; x < cs.width(); ++x)
                        img.set_rgb(x, y, {cs.roughness.at(x, y), cs.metallic.at(x, y), cs.transparency.at(x, y)});
            } else if (name == "roughness") {
                img = cs.roughness;
            } else if (name == "metallic") {
                img = cs.metallic;
            } else if (name == "transparency") {
                img = cs.transparency;
            } else if (name == "irradiance") {
                img = tonemap(cs.irradiance);
            } else if (name == "mirror") {
                img = tonemap(mirror_for(*s));
            } else if (name == "background") {
                img = tonemap(cs.background ? *cs.background : ImagePlane(cs.width(), cs.height(), 3, 1.0f));
            } else {
                return ServiceResponse::error(404, "unknown channel '" + name + "'");
            }
            return ServiceResponse{200, "image/png", encode_image_png(img, enc)};
        });
    }

    ServiceResponse compose(const std::string& id, const std::string& body) {
        return guarded([&] {
            auto s = find(id);
            if (!s) return ServiceResponse::error(404, "unknown session '" + id + "'");
            const EditRequest req = parse_edit_request(body.empty() ? Json::object() : parse_body(body));
            std::lock_guard lock(s->mutex);
            ChannelSet cs = apply_edits(s->base, req, s->manifest.base_dir);
            if (!cs.mirror) cs.mirror = mirror_for(*s);
            ComposeOptions opts;
            opts.d_px = s->manifest.d_px;
            opts.workers = workers_;
            const LayerStack stack = epbr::compose(cs, lut_, opts);
            s->last_edit = req;
            write_text(s->dir / "edit.json", to_json(req).dump(2));

            const std::string png = encode_image_png(tonemap(stack.final_image, req.tonemap, req.exposure), ColorEncoding::linear);
            if (!req.layers) return ServiceResponse{200, "image/png", png};
            auto layer = [&](const ImagePlane& img) {
                return base64_encode(encode_image_png(tonemap(img, req.tonemap, req.exposure), ColorEncoding::linear));
            };
            return ServiceResponse::json(200, {{"image", base64_encode(png)},
                                               {"layers",
                                                {{"diffuse", layer(stack.diffuse)},
                                                 {"specular", layer(stack.specular)},
                                                 {"transmission", layer(stack.transmission)}}}});
        });
    }

    ServiceResponse manifest(const std::string& id) {
        return guarded([&] {
            auto s = find(id);
            if (!s) return ServiceResponse::error(404, "unknown session '" + id + "'");
            std::lock_guard lock(s->mutex);
            Json out{{"id", s->id}, {"manifest", to_json(s->manifest)}};
            const EditRequest req = s->last_edit.value_or(EditRequest{});
            Json effective = detail::override_json(req.global);
            Json rules = Json::array();
            if (req.global.transparency && *req.global.transparency > 0.0) {
                if (req.global.metallic) effective["metallic_requested"] = *req.global.metallic;
                effective["metallic"] = 0.0;
                rules.push_back("metallic is forced to 0 wherever transparency > 0");
            }
            out["edit"] = to_json(req);
            out["effective"] = effective;
            out["rules"] = rules;
            return ServiceResponse::json(200, out);
        });
    }

    // Registers the routes on an httplib server.
    void bind(httplib::Server& server) {
        auto send = [](httplib::Response& res, const ServiceResponse& r) {
            res.status = r.status;
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_content(r.body, r.content_type);
        };
        server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.status = 204;
        });
        server.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, create_session(req.body));
        });
        server.Get(R"(/sessions/([^/]+)/channels/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, channel_preview(req.matches[1], req.matches[2]));
        });
        server.Post(R"(/sessions/([^/]+)/compose)", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, compose(req.matches[1], req.body));
        });
        server.Get(R"(/sessions/([^/]+)/manifest)", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, manifest(req.matches[1]));
        });
    }

private:
    template <typename Fn>
    ServiceResponse guarded(Fn&& fn) {
        try {
            return fn();
        } catch (const ValidationError& e) {
            return ServiceResponse::error(422, e.what());
        } catch (const IoError& e) {
            return ServiceResponse::error(400, e.what());
        } catch (const Json::exception& e) {
            return ServiceResponse::error(400, e.what());
        } catch (const std::exception& e) {
            return ServiceResponse::error(500, e.what());
        }
    }

    static Json parse_body(const std::string& body) {
        try {
            return Json::parse(body);
        } catch (const Json::parse_error& e) {
            throw IoError(std::string("malformed JSON body: ") + e.what());
        }
    }

    static void write_text(const std::filesystem::path& p, const std::string& text) {
        detail::write_file_bytes(p.string(), text);
    }

    std::shared_ptr<Session> find(const std::string& id) {
        std::lock_guard lock(mutex_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    const ImagePlane& mirror_for(Session& s) {
        if (s.base.mirror) return *s.base.mirror;
        if (!s.derived_mirror) s.derived_mirror = derive_mirror(s.base, workers_);
        return *s.derived_mirror;
    }

    std::string next_id() {
        static constexpr char kHex[] = "0123456789abcdef";
        std::string id;
        do {
            id = "s" + std::to_string(++counter_) + "-";
            for (int i = 0; i < 8; ++i) id += kHex[rng_() & 15u];
        } while (sessions_.count(id) || std::filesystem::exists(root_ / id));
        return id;
    }

    std::filesystem::path root_;
    SplitSumLut lut_;
    int workers_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t counter_ = 0;
    std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace epbr
