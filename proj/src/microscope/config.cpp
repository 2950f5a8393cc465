#include <cmath>
#include <set>

#include "mitoforge/error.hpp"
#include "mitoforge/microscope.hpp"

namespace mitoforge {

std::string to_string(MicroscopeKind k) { return k == MicroscopeKind::Confocal ? "confocal" : "widefield"; }

void MicroscopeConfig::validate() const {
    auto fail = [&](const std::string& what) {
        throw ConfigError("microscope", (name.empty() ? std::string("config") : "config '" + name + "'") + ": " + what);
    };
    auto positive = [&](double v, const char* field) {
        if (!std::isfinite(v) || v <= 0) fail(std::string(field) + " must be a positive number");
    };
    positive(emission_wavelength_nm, "emission_wavelength_nm");
    positive(pixel_size_nm, "pixel_size_nm");
    positive(dof_nm, "dof_nm");
    positive(magnification, "magnification");
    if (!std::isfinite(numerical_aperture) || numerical_aperture <= 0 || numerical_aperture >= 2)
        fail("numerical_aperture must lie in (0, 2)");
    if (!std::isfinite(background) || background <= 0) fail("background must be a positive number");
    if (!std::isfinite(sbr_range[0]) || !std::isfinite(sbr_range[1]) || sbr_range[0] < 1 || sbr_range[0] > sbr_range[1])
        fail("sbr_range must satisfy 1 <= low <= high");
}

nlohmann::json to_json(const MicroscopeConfig& c) {
    return {{"name", c.name},
            {"kind", to_string(c.kind)},
            {"emission_wavelength_nm", c.emission_wavelength_nm},
            {"numerical_aperture", c.numerical_aperture},
            {"magnification", c.magnification},
            {"pixel_size_nm", c.pixel_size_nm},
            {"dof_nm", c.dof_nm},
            {"background", c.background},
            {"sbr_range", {c.sbr_range[0], c.sbr_range[1]}}};
}

namespace {

double number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("microscope", "field '" + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

MicroscopeConfig microscope_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("microscope", "microscope config must be an object");
    static const std::set<std::string> known{"preset",        "name",   "kind",       "emission_wavelength_nm",
                                             "numerical_aperture", "magnification", "pixel_size_nm", "dof_nm",
                                             "background",    "sbr_range"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("microscope", "unknown microscope field '" + key + "'");

    MicroscopeConfig c;
    const bool from_preset = j.contains("preset");
    if (from_preset) {
        if (!j["preset"].is_string()) throw ConfigError("microscope", "'preset' must be a string");
        c = preset(j["preset"].get<std::string>());
    } else {
        for (const char* req : {"kind", "emission_wavelength_nm", "numerical_aperture", "magnification",
                                "pixel_size_nm", "dof_nm"})
            if (!j.contains(req)) throw ConfigError("microscope", std::string("missing field '") + req + "'");
    }
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw ConfigError("microscope", "'name' must be a string");
        c.name = j["name"].get<std::string>();
    } else if (!from_preset) {
        c.name = "custom";
    }
    if (j.contains("kind")) {
        const auto k = j["kind"].is_string() ? j["kind"].get<std::string>() : "";
        if (k == "widefield" || k == "epifluorescence") c.kind = MicroscopeKind::Widefield;
        else if (k == "confocal") c.kind = MicroscopeKind::Confocal;
        else throw ConfigError("microscope", "'kind' must be \"widefield\" or \"confocal\"");
    }
    if (j.contains("emission_wavelength_nm")) c.emission_wavelength_nm = number(j["emission_wavelength_nm"], "emission_wavelength_nm");
    if (j.contains("numerical_aperture")) c.numerical_aperture = number(j["numerical_aperture"], "numerical_aperture");
    if (j.contains("magnification")) c.magnification = number(j["magnification"], "magnification");
    if (j.contains("pixel_size_nm")) c.pixel_size_nm = number(j["pixel_size_nm"], "pixel_size_nm");
    if (j.contains("dof_nm")) c.dof_nm = number(j["dof_nm"], "dof_nm");
    if (j.contains("background")) c.background = number(j["background"], "background");
    if (j.contains("sbr_range")) {
        const auto& r = j["sbr_range"];
        if (!r.is_array() || r.size() != 2) throw ConfigError("microscope", "'sbr_range' must be [low, high]");
        c.sbr_range = {number(r[0], "sbr_range"), number(r[1], "sbr_range")};
    }
    c.validate();
    return c;
}

const std::vector<MicroscopeConfig>& presets() {
    static const std::vector<MicroscopeConfig> all{
        {"Con1", MicroscopeKind::Confocal, 600.0, 1.4, 63.0, 70.0, 250.0, 100.0, {2.0, 4.0}},
        {"Epi1", MicroscopeKind::Widefield, 688.0, 1.42, 60.0, 109.0, 500.0, 100.0, {2.0, 4.0}},
        {"Epi2", MicroscopeKind::Widefield, 608.0, 1.4, 60.0, 80.0, 500.0, 100.0, {2.0, 4.0}},
    };
    return all;
}

const MicroscopeConfig& preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw ConfigError("microscope", "unknown preset '" + name + "' (known: Con1, Epi1, Epi2)");
}

double lateral_resolution(const MicroscopeConfig& cfg) {
    const double r = cfg.emission_wavelength_nm / (2.0 * cfg.numerical_aperture);
    return cfg.kind == MicroscopeKind::Confocal ? r / std::sqrt(2.0) : r;
}

PsfSigma psf_sigma(const MicroscopeConfig& cfg) {
    return {lateral_resolution(cfg) / kFwhmPerSigma, cfg.dof_nm / kFwhmPerSigma};
}

double axial_weight(const MicroscopeConfig& cfg, double dz_nm) {
    const double s = psf_sigma(cfg).z;
    return std::exp(-0.5 * dz_nm * dz_nm / (s * s));
}

}  // namespace mitoforge
