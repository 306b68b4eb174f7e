#include "tlab/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace tlab {

std::string format_number(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_string(std::string& out, const std::string& s) {
    out += Json(s).dump();
}

void walk(const Json& j, std::string& out, int indent, int level) {
    const auto newline = [&](int lv) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * lv), ' ');
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) { out += "{}"; return; }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                newline(level + 1);
                write_string(out, it.key());
                out += indent < 0 ? ":" : ": ";
                walk(it.value(), out, indent, level + 1);
            }
            newline(level);
            out += '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) { out += "[]"; return; }
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                newline(level + 1);
                walk(v, out, indent, level + 1);
            }
            newline(level);
            out += ']';
            return;
        }
        case Json::value_t::number_float:
            out += format_number(j.get<double>());
            return;
        default:
            out += j.dump();
    }
}

}  // namespace

std::string dump_json(const Json& j) {
    std::string out;
    walk(j, out, -1, 0);
    return out;
}

std::string dump_json_pretty(const Json& j) {
    std::string out;
    walk(j, out, 2, 0);
    out += '\n';
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    if (ec) throw Error(ErrorCode::io, "cannot create '" + target.parent_path().string() + "': " + ec.message());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw Error(ErrorCode::io, "write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::io, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

// Infinite values would otherwise collapse to null, losing the sign.
Json number_or_tag(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double number_from(const Json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw Error(ErrorCode::config, "expected a number");
}

}  // namespace

Json to_json(const VerificationReport& r) {
    Json j;
    j["id"] = r.id;
    j["inequality"] = r.inequality;
    j["lhs"] = r.lhs;
    j["m1"] = r.m1;
    j["m3"] = r.m3;
    j["kappa1"] = r.kappa1;
    j["kappa2"] = r.kappa2;
    j["ratio"] = number_or_tag(r.ratio);
    j["violation_candidate"] = r.violation_candidate;
    j["fitted_constant"] = r.fitted_constant ? Json(*r.fitted_constant) : Json(nullptr);
    j["pass"] = r.pass ? Json(*r.pass) : Json(nullptr);
    j["split"] = r.split;
    j["mesh_h"] = r.mesh_h;
    j["seed"] = r.seed;
    Json params = Json::object();
    for (const auto& [k, v] : r.params) params[k] = number_or_tag(v);
    j["params"] = params;
    return j;
}

Json to_json(const PowerReport& p) {
    Json j;
    j["W0"] = p.W0;
    j["W"] = p.W;
    j["gap"] = p.gap;
    j["normalized_gap"] = p.normalized_gap;
    j["inclusion_energy"] = p.inclusion_energy;
    j["W0_discrepancy"] = p.W0_discrepancy;
    j["W_discrepancy"] = p.W_discrepancy;
    return j;
}

Json to_json(const CarlemanCurve& c) {
    Json j;
    j["pair"] = c.pair;
    j["tau"] = c.tau;
    Json ratio = Json::array();
    for (double r : c.ratio) ratio.push_back(number_or_tag(r));
    j["ratio"] = ratio;
    Json lhs = Json::array(), rhs = Json::array();
    for (const auto& t : c.terms) {
        lhs.push_back(t.lhs);
        rhs.push_back(t.rhs);
    }
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["max_ratio"] = number_or_tag(c.max_ratio);
    j["finite"] = c.finite;
    return j;
}

Json to_json(const SizeBoundsResult& r) {
    Json j;
    j["W0"] = r.W0;
    j["W"] = r.W;
    j["gap"] = r.gap;
    j["normalized_gap"] = r.normalized_gap;
    j["lower"] = r.lower;
    j["upper"] = r.upper;
    j["mode"] = to_string(r.mode);
    j["p"] = r.p;
    j["K1"] = r.K1;
    j["K2"] = r.K2;
    j["true_size"] = r.true_size ? Json(*r.true_size) : Json(nullptr);
    j["contained"] = r.contained ? Json(*r.contained) : Json(nullptr);
    return j;
}

Json to_json(const SizeCalibration& c) {
    Json j;
    j["version"] = 1;
    j["kind"] = "size-calibration";
    j["fingerprint"] = c.fingerprint;
    j["mode"] = to_string(c.mode);
    j["jump"] = c.jump == JumpType::raise ? "raise" : "lower";
    j["K1"] = c.K1;
    j["K2"] = c.K2;
    j["p"] = c.p;
    j["K2_general"] = c.K2_general;
    j["slope"] = c.slope;
    j["intercept"] = c.intercept;
    j["safety"] = c.safety;
    j["fit_ids"] = c.fit_ids;
    j["holdout_ids"] = c.holdout_ids;
    j["excluded"] = c.excluded;
    return j;
}

SizeCalibration size_calibration_from_json(const Json& j) {
    const auto need = [&](const char* key) -> const Json& {
        if (!j.contains(key)) throw Error(ErrorCode::config, std::string("calibration archive lacks '") + key + "'");
        return j[key];
    };
    if (!j.is_object() || j.value("kind", std::string()) != "size-calibration")
        throw Error(ErrorCode::config, "not a size calibration archive");
    SizeCalibration c;
    try {
        c.fingerprint = need("fingerprint").get<std::string>();
        c.mode = size_mode_from_string(need("mode").get<std::string>());
        const std::string jump = need("jump").get<std::string>();
        if (jump != "raise" && jump != "lower") throw Error(ErrorCode::config, "calibration archive has a bad jump type");
        c.jump = jump == "raise" ? JumpType::raise : JumpType::lower;
        c.K1 = number_from(need("K1"));
        c.K2 = number_from(need("K2"));
        c.p = number_from(need("p"));
        c.K2_general = number_from(need("K2_general"));
        c.slope = number_from(need("slope"));
        c.intercept = number_from(need("intercept"));
        c.safety = number_from(need("safety"));
        c.fit_ids = need("fit_ids").get<std::vector<std::string>>();
        c.holdout_ids = need("holdout_ids").get<std::vector<std::string>>();
        c.excluded = need("excluded").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, std::string("calibration archive is malformed: ") + e.what());
    }
    return c;
}

namespace {

std::string csv_number(double v) {
    if (std::isfinite(v)) return format_number(v);
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string summary_csv_header() {
    return "inequality,n_fit,n_holdout,fitted_constant,holdout_pass_rate,max_holdout_ratio\n";
}

std::string summary_csv_row(const CalibrationSet& c) {
    return c.inequality + "," + std::to_string(c.fit.size()) + "," + std::to_string(c.holdout.size()) + "," +
           csv_number(c.constant) + "," + csv_number(c.holdout_pass_rate) + "," +
           csv_number(c.max_holdout_ratio) + "\n";
}

LedgerSummary aggregate_ledgers(const std::vector<std::string>& paths) {
    if (paths.empty()) throw Error(ErrorCode::config, "report needs at least one ledger");
    struct Acc {
        std::vector<double> ratios;
        std::size_t judged = 0, passed = 0;
    };
    std::map<std::string, Acc> acc;
    LedgerSummary s;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::io, "cannot read ledger '" + path + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            ++s.lines;
            try {
                const Json j = Json::parse(line);
                if (!j.is_object() || !j.contains("inequality") || !j.contains("ratio")) {
                    ++s.skipped;
                    continue;
                }
                const std::string name = j["inequality"].get<std::string>();
                const double ratio = number_from(j["ratio"]);
                Acc& a = acc[name];
                a.ratios.push_back(ratio);
                if (j.contains("pass") && j["pass"].is_boolean()) {
                    ++a.judged;
                    if (j["pass"].get<bool>()) ++a.passed;
                }
            } catch (const std::exception&) {
                ++s.skipped;
            }
        }
    }
    for (auto& [name, a] : acc) {
        LedgerRow r;
        r.inequality = name;
        r.count = a.ratios.size();
        std::sort(a.ratios.begin(), a.ratios.end());
        r.min_ratio = a.ratios.front();
        r.max_ratio = a.ratios.back();
        const std::size_t n = a.ratios.size();
        r.median_ratio = n % 2 ? a.ratios[n / 2] : 0.5 * (a.ratios[n / 2 - 1] + a.ratios[n / 2]);
        r.judged = a.judged;
        r.passed = a.passed;
        r.pass_rate = a.judged ? static_cast<double>(a.passed) / static_cast<double>(a.judged)
                               : std::numeric_limits<double>::quiet_NaN();
        s.rows.push_back(r);
    }
    return s;
}

std::string ledger_table(const LedgerSummary& s) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-26s %6s %13s %13s %13s %7s %9s\n", "inequality", "count", "min_ratio",
                  "median_ratio", "max_ratio", "judged", "pass_rate");
    out += buf;
    for (const auto& r : s.rows) {
        char rate[16];
        if (r.judged) std::snprintf(rate, sizeof rate, "%9.4f", r.pass_rate);
        else std::snprintf(rate, sizeof rate, "%9s", "-");
        std::snprintf(buf, sizeof buf, "%-26s %6zu %13.6e %13.6e %13.6e %7zu %s\n", r.inequality.c_str(), r.count,
                      r.min_ratio, r.median_ratio, r.max_ratio, r.judged, rate);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "lines read: %zu, skipped: %zu\n", s.lines, s.skipped);
    out += buf;
    return out;
}

std::string ledger_csv(const LedgerSummary& s) {
    std::string out = "inequality,count,min_ratio,median_ratio,max_ratio,judged,passed,pass_rate\n";
    for (const auto& r : s.rows)
        out += r.inequality + "," + std::to_string(r.count) + "," + csv_number(r.min_ratio) + "," +
               csv_number(r.median_ratio) + "," + csv_number(r.max_ratio) + "," + std::to_string(r.judged) +
               "," + std::to_string(r.passed) + "," + (r.judged ? csv_number(r.pass_rate) : std::string()) + "\n";
    return out;
}

}  // namespace tlab
