#include "tlab/scenario.hpp"

#include <fstream>
#include <sstream>

#include "tlab/expression.hpp"

namespace tlab {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& msg) {
    throw Error(ErrorCode::config, "scenario: '" + key + "' " + msg);
}

double number(const Json& v, const std::string& key) {
    if (!v.is_number()) bad(key, "must be a number");
    return v.get<double>();
}

double positive(const Json& v, const std::string& key) {
    const double x = number(v, key);
    if (!(x > 0.0)) bad(key, "must be positive");
    return x;
}

Vec2 point(const Json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2) bad(key, "must be a pair [x, y]");
    return {number(v[0], key), number(v[1], key)};
}

Expression expression(const Json& v, const std::string& key) {
    if (v.is_number()) return Expression::constant(v.get<double>());
    if (!v.is_string()) bad(key, "must be a number or an expression string");
    try {
        return Expression::parse(v.get<std::string>());
    } catch (const Error& e) {
        bad(key, e.what());
    }
}

}  // namespace

ScalarField parse_scalar_field(const Json& value, const std::string& key) {
    Expression e = expression(value, key);
    if (e.is_constant()) {
        const double c = e({0.0, 0.0});
        return [c](Vec2) { return c; };
    }
    return [e](Vec2 p) { return e(p); };
}

MatrixField parse_matrix_field(const Json& value, const std::string& key) {
    if (value.is_number()) {
        const Mat2 m = Mat2::identity(value.get<double>());
        return [m](Vec2) { return m; };
    }
    if (value.is_string()) {
        Expression e = expression(value, key);
        return [e](Vec2 p) { return Mat2::identity(e(p)); };
    }
    if (!value.is_array() || value.size() != 2 || !value[0].is_array() || !value[1].is_array() ||
        value[0].size() != 2 || value[1].size() != 2)
        bad(key, "must be a number, an expression or a 2x2 array");
    std::array<Expression, 4> e{expression(value[0][0], key), expression(value[0][1], key),
                                expression(value[1][0], key), expression(value[1][1], key)};
    bool constant = true;
    for (const auto& x : e) constant = constant && x.is_constant();
    if (constant) {
        const Mat2 m{e[0]({0, 0}), e[1]({0, 0}), e[2]({0, 0}), e[3]({0, 0})};
        return [m](Vec2) { return m; };
    }
    return [e](Vec2 p) { return Mat2{e[0](p), e[1](p), e[2](p), e[3](p)}; };
}

Shape parse_shape(const Json& v) {
    if (!v.is_object() || !v.contains("type")) bad("inclusion.shape", "must be an object with a type");
    const std::string type = v["type"].get<std::string>();
    if (type == "disk") {
        if (!v.contains("center") || !v.contains("radius")) bad("inclusion.shape", "disk needs center and radius");
        return Shape::disk(point(v["center"], "inclusion.shape.center"),
                           positive(v["radius"], "inclusion.shape.radius"));
    }
    if (type == "ellipse") {
        if (!v.contains("center") || !v.contains("semi_axes")) bad("inclusion.shape", "ellipse needs center and semi_axes");
        const Vec2 ax = point(v["semi_axes"], "inclusion.shape.semi_axes");
        if (!(ax.x > 0 && ax.y > 0)) bad("inclusion.shape.semi_axes", "must be positive");
        return Shape::ellipse(point(v["center"], "inclusion.shape.center"), ax.x, ax.y,
                              v.contains("angle") ? number(v["angle"], "inclusion.shape.angle") : 0.0);
    }
    if (type == "polygon") {
        if (!v.contains("vertices") || !v["vertices"].is_array() || v["vertices"].size() < 3)
            bad("inclusion.shape.vertices", "needs at least three points");
        std::vector<Vec2> pts;
        for (const auto& q : v["vertices"]) pts.push_back(point(q, "inclusion.shape.vertices"));
        try {
            return Shape::polygon(std::move(pts));
        } catch (const Error& e) {
            bad("inclusion.shape", e.what());
        }
    }
    bad("inclusion.shape.type", "must be disk, ellipse or polygon, got '" + type + "'");
}

unsigned parse_sides(const Json& v) {
    if (v.is_string() && v.get<std::string>() == "all") return all_sides;
    if (v.is_number_unsigned()) {
        const unsigned m = v.get<unsigned>();
        if (m == 0 || m > all_sides) bad("boundary.sides", "mask must be in 1..15");
        return m;
    }
    if (!v.is_array() || v.empty()) bad("boundary.sides", "must be \"all\", a mask or a list of side names");
    unsigned mask = 0;
    for (const auto& s : v) {
        const std::string name = s.is_string() ? s.get<std::string>() : "";
        if (name == "bottom") mask |= side_bottom;
        else if (name == "right") mask |= side_right;
        else if (name == "top") mask |= side_top;
        else if (name == "left") mask |= side_left;
        else bad("boundary.sides", "unknown side '" + name + "'");
    }
    return mask;
}

static void known_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) bad(where.empty() ? "<root>" : where, "must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool found = false;
        for (const char* k : keys) found = found || it.key() == k;
        if (!found) bad(where.empty() ? it.key() : where + "." + it.key(), "is not a known key");
    }
}

Scenario parse_scenario(const Json& doc) {
    if (!doc.is_object()) bad("<root>", "must be an object");
    known_keys(doc, {"version", "name", "comment", "domain", "interface", "A_plus", "A_minus", "lambda0", "M0",
                     "lower_order", "inclusion", "boundary", "source", "exact", "mesh_h"}, "");
    if (!doc.contains("version")) bad("version", "is required");
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != scenario_version)
        bad("version", "must be " + std::to_string(scenario_version));

    Scenario s;
    s.document = doc;
    s.name = doc.value("name", std::string("scenario"));

    if (doc.contains("domain")) {
        const Json& d = doc["domain"];
        if (!d.is_array() || d.size() != 4) bad("domain", "must be [x0, x1, y0, y1]");
        s.domain = {number(d[0], "domain"), number(d[1], "domain"), number(d[2], "domain"), number(d[3], "domain")};
        if (!(s.domain.x1 > s.domain.x0 && s.domain.y1 > s.domain.y0)) bad("domain", "is empty");
    }

    if (doc.contains("interface") && !doc["interface"].is_null()) {
        const Json& j = doc["interface"];
        known_keys(j, {"level", "psi", "d0"}, "interface");
        InterfaceCurve c;
        c.level = number(j.value("level", Json(0.5)), "interface.level");
        if (j.contains("psi")) {
            Expression e = expression(j["psi"], "interface.psi");
            c.offset = [e](double x) { return e(x, 0.0); };
            c.description = e.source();
        }
        if (c.level <= s.domain.y0 || c.level >= s.domain.y1) bad("interface.level", "must lie inside the domain");
        s.interface = c;
        if (j.contains("d0")) s.d0 = positive(j["d0"], "interface.d0");
    }

    if (doc.contains("A_plus")) s.coefficient.plus = parse_matrix_field(doc["A_plus"], "A_plus");
    if (doc.contains("A_minus")) s.coefficient.minus = parse_matrix_field(doc["A_minus"], "A_minus");
    if (doc.contains("lambda0")) {
        s.coefficient.lambda0 = positive(doc["lambda0"], "lambda0");
        if (s.coefficient.lambda0 > 1.0) bad("lambda0", "must lie in (0, 1]");
    }
    if (doc.contains("M0")) s.coefficient.M0 = number(doc["M0"], "M0");

    if (doc.contains("lower_order") && !doc["lower_order"].is_null()) {
        const Json& j = doc["lower_order"];
        known_keys(j, {"W", "V"}, "lower_order");
        LowerOrderTerms lot;
        if (j.contains("W")) {
            if (!j["W"].is_array() || j["W"].size() != 2) bad("lower_order.W", "must be a pair of expressions");
            ScalarField wx = parse_scalar_field(j["W"][0], "lower_order.W");
            ScalarField wy = parse_scalar_field(j["W"][1], "lower_order.W");
            lot.W = [wx, wy](Vec2 p) { return Vec2{wx(p), wy(p)}; };
        }
        if (j.contains("V")) lot.V = parse_scalar_field(j["V"], "lower_order.V");
        s.lower_order = lot;
    }

    if (doc.contains("inclusion") && !doc["inclusion"].is_null()) {
        const Json& j = doc["inclusion"];
        known_keys(j, {"shape", "A_hat", "eta", "zeta", "jump", "d1", "h"}, "inclusion");
        if (!j.contains("shape")) bad("inclusion.shape", "is required");
        InclusionScenario inc;
        inc.shape = parse_shape(j["shape"]);
        if (j.contains("A_hat")) inc.a_hat = parse_matrix_field(j["A_hat"], "inclusion.A_hat");
        if (j.contains("eta")) inc.eta = positive(j["eta"], "inclusion.eta");
        if (j.contains("zeta")) inc.zeta = positive(j["zeta"], "inclusion.zeta");
        const std::string jump = j.value("jump", std::string("raise"));
        if (jump == "raise") inc.jump = JumpType::raise;
        else if (jump == "lower") inc.jump = JumpType::lower;
        else bad("inclusion.jump", "must be raise or lower");
        if (j.contains("d1")) inc.d1 = positive(j["d1"], "inclusion.d1");
        if (j.contains("h")) inc.h = positive(j["h"], "inclusion.h");
        s.inclusion = inc;
    }

    if (!doc.contains("boundary")) bad("boundary", "is required");
    {
        const Json& j = doc["boundary"];
        known_keys(j, {"phi", "sides"}, "boundary");
        if (!j.contains("phi")) bad("boundary.phi", "is required");
        s.boundary.phi = parse_scalar_field(j["phi"], "boundary.phi");
        if (j.contains("sides")) s.boundary.dirichlet_sides = parse_sides(j["sides"]);
    }
    if (doc.contains("source")) s.source = parse_scalar_field(doc["source"], "source");
    if (doc.contains("exact")) s.exact = parse_scalar_field(doc["exact"], "exact");
    if (doc.contains("mesh_h")) s.mesh_h = positive(doc["mesh_h"], "mesh_h");
    return s;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return Json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, "'" + path + "' is not valid JSON: " + e.what());
    }
}

Scenario load_scenario(const std::string& path) { return parse_scenario(read_json_file(path)); }

MeshSpec Scenario::mesh_spec(double h, bool with_inclusion) const {
    MeshSpec m;
    m.domain = domain;
    m.interface = interface;
    if (with_inclusion && inclusion) m.inclusion = inclusion->shape;
    m.h = h;
    return m;
}

Problem Scenario::problem(bool with_inclusion) const {
    Problem p;
    p.coefficient = coefficient;
    p.lower_order = lower_order;
    if (with_inclusion) p.inclusion = inclusion;
    p.source = source;
    p.boundary = boundary;
    return p;
}

}  // namespace tlab
