#include "vibtomo/inverse/config.hpp"

#include <cmath>
#include <fstream>

#include "vibtomo/error.hpp"

namespace vibtomo::inv {

using nlohmann::json;

double InversionConfig::alpha_u_for(int modes) const {
    if (alpha_u) return *alpha_u;
    return modes >= 10 ? 10.0 : 1.0;
}

Eigen::VectorXd InversionConfig::initial_w(int voxels) const {
    if (w_init_field.size() == 0) return Eigen::VectorXd::Constant(voxels, w_init);
    if (w_init_field.size() != voxels) throw ShapeError("w_init field length does not match voxel count");
    return w_init_field;
}

Eigen::VectorXd InversionConfig::initial_v(int voxels) const {
    if (v_init_field.size() == 0) return Eigen::VectorXd::Constant(voxels, v_init);
    if (v_init_field.size() != voxels) throw ShapeError("v_init field length does not match voxel count");
    return v_init_field;
}

void InversionConfig::validate() const {
    if (alpha_u && !(*alpha_u >= 0.0)) throw ValidationError("alpha_u must be >= 0");
    if (!(alpha_w >= 0.0) || !(alpha_v >= 0.0)) throw ValidationError("alpha_w and alpha_v must be >= 0");
    if (!(eta > 0.0)) throw ValidationError("eta must be > 0");
    if (!(w_bar > 0.0)) throw ValidationError("w_bar must be > 0");
    if (!(w_init > 0.0) || !(v_init > 0.0)) throw ValidationError("initial fields must be positive");
    if ((w_init_field.size() && !(w_init_field.minCoeff() > 0.0)) ||
        (v_init_field.size() && !(v_init_field.minCoeff() > 0.0)))
        throw ValidationError("initial fields must be positive");
    if (!(y_init >= 0.0)) throw ValidationError("y_init must be >= 0");
    if (residual_scale && !(*residual_scale > 0.0)) throw ValidationError("residual_scale must be > 0");
    if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw ValidationError("rel_tol must be > 0");
    if (!(nu >= 0.0 && nu < 0.5)) throw ValidationError("nu must lie in [0, 0.5)");
}

InversionConfig InversionConfig::cube_defaults() { return {}; }

InversionConfig InversionConfig::drum_defaults() {
    InversionConfig c;
    c.alpha_u = 1e12;
    c.alpha_w = 0.1;
    c.alpha_v = 0.1;
    c.eta = 1.0;
    c.w_bar = 1e6;
    c.w_init = 1e6;
    c.v_init = 1e3;
    return c;
}

json config_to_json(const InversionConfig& c) {
    json doc = {{"alpha_w", c.alpha_w},     {"alpha_v", c.alpha_v},
                {"eta", c.eta},             {"w_bar", c.w_bar},
                {"w_init", c.w_init},       {"v_init", c.v_init},
                {"y_init", c.y_init},       {"max_iters", c.max_iters},
                {"rel_tol", c.rel_tol},     {"nu", c.nu},
                {"density_ridge", c.density_ridge}, {"clamp_positive", c.clamp_positive}};
    doc["alpha_u"] = c.alpha_u ? json(*c.alpha_u) : json("auto");
    doc["residual_scale"] = c.residual_scale ? json(*c.residual_scale) : json("auto");
    if (c.w_init_field.size())
        doc["w_init"] = std::vector<double>(c.w_init_field.data(), c.w_init_field.data() + c.w_init_field.size());
    if (c.v_init_field.size())
        doc["v_init"] = std::vector<double>(c.v_init_field.data(), c.v_init_field.data() + c.v_init_field.size());
    return doc;
}

namespace {

void read_auto(const json& doc, const char* key, std::optional<double>& out) {
    if (!doc.contains(key)) return;
    const json& a = doc.at(key);
    if (a.is_string()) {
        if (a.get<std::string>() != "auto")
            throw ValidationError(std::string(key) + " must be a number or \"auto\"");
        out.reset();
    } else {
        out = a.get<double>();
    }
}

void read_init(const json& doc, const char* key, double& scalar, Eigen::VectorXd& field) {
    if (!doc.contains(key)) return;
    const json& j = doc.at(key);
    if (j.is_array()) {
        const auto values = j.get<std::vector<double>>();
        field = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    } else {
        scalar = j.get<double>();
    }
}

}  // namespace

InversionConfig config_from_json(const json& doc) {
    try {
        InversionConfig c;
        const std::string preset = doc.value("preset", "cube");
        if (preset == "drum")
            c = InversionConfig::drum_defaults();
        else if (preset != "cube")
            throw ValidationError("unknown config preset '" + preset + "'");
        read_auto(doc, "alpha_u", c.alpha_u);
        read_auto(doc, "residual_scale", c.residual_scale);
        c.alpha_w = doc.value("alpha_w", c.alpha_w);
        c.alpha_v = doc.value("alpha_v", c.alpha_v);
        c.eta = doc.value("eta", c.eta);
        c.w_bar = doc.value("w_bar", c.w_bar);
        read_init(doc, "w_init", c.w_init, c.w_init_field);
        read_init(doc, "v_init", c.v_init, c.v_init_field);
        c.y_init = doc.value("y_init", c.y_init);
        c.max_iters = doc.value("max_iters", c.max_iters);
        c.rel_tol = doc.value("rel_tol", c.rel_tol);
        c.nu = doc.value("nu", c.nu);
        c.density_ridge = doc.value("density_ridge", c.density_ridge);
        c.clamp_positive = doc.value("clamp_positive", c.clamp_positive);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid inversion config: ") + e.what());
    }
}

InversionConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

}  // namespace vibtomo::inv
