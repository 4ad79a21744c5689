#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flow.hpp"
#include "spectral.hpp"

namespace baflow {

using json = nlohmann::ordered_json;

// Shortest round-trip representation.
inline std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline json to_json(const Vec& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json to_json(const Mat& m) {
    json a = json::array();
    for (Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vec(m.row(i).transpose())));
    return a;
}

inline Vec vec_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ValidationError(std::string(what) + ": expected an array");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ValidationError(std::string(what) + ": expected numbers");
        v[Index(i)] = j[i].get<double>();
    }
    return v;
}

inline Mat mat_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ValidationError(std::string(what) + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat m(j.size(), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vec r = vec_from_json(j[i], what);
        if (std::size_t(r.size()) != cols) throw ValidationError(std::string(what) + ": ragged rows");
        m.row(Index(i)) = r.transpose();
    }
    return m;
}

inline json to_json(const BAProblem& p) {
    return json{{"source", to_json(p.source().values())}, {"cost", to_json(p.cost())}, {"beta", p.beta()}};
}

inline BAProblem problem_from_json(const json& j) {
    if (!j.is_object() || !j.contains("source") || !j.contains("cost") || !j.contains("beta"))
        throw ValidationError("BAProblem JSON needs source, cost and beta");
    if (!j["beta"].is_number()) throw ValidationError("BAProblem JSON: beta must be a number");
    return BAProblem(ProbVec(vec_from_json(j["source"], "source")), mat_from_json(j["cost"], "cost"),
                     j["beta"].get<double>());
}

inline json to_json(const SpectrumReport& s) {
    return json{{"eigenvalues", to_json(s.eigenvalues)}, {"gap", s.gap}, {"zero_mode_count", s.zero_mode_count}};
}

inline json to_json(const IntegratorConfig& c) {
    return json{{"dt", c.dt},
                {"t_max", c.t_max},
                {"method", to_string(c.method)},
                {"sample_every", c.sample_every},
                {"renormalize", c.renormalize},
                {"positivity_floor", c.positivity_floor}};
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed JSON in " + path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { line(header); }

    void row(const std::vector<double>& v) {
        std::vector<std::string> s;
        s.reserve(v.size());
        for (double x : v) s.push_back(fmt_num(x));
        line(s);
    }
    std::string str() const { return os_.str(); }

private:
    void line(const std::vector<std::string>& f) {
        if (f.size() != cols_) throw ValidationError("CsvWriter: row width does not match header");
        for (std::size_t i = 0; i < f.size(); ++i) os_ << (i ? "," : "") << f[i];
        os_ << '\n';
    }
    std::size_t cols_;
    std::ostringstream os_;
};

// t, q_0..q_{N-1}, free_energy, dissipation, residual_l1, dist_l1 (nan without a reference)
inline std::string trajectory_csv(const Trajectory& tr) {
    const Index n = tr.states.empty() ? 0 : tr.states.front().dim();
    std::vector<std::string> h{"t"};
    for (Index i = 0; i < n; ++i) h.push_back("q_" + std::to_string(i));
    for (const char* c : {"free_energy", "dissipation", "residual_l1", "dist_l1"}) h.push_back(c);
    CsvWriter w(h);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        std::vector<double> r{tr.times[k]};
        for (Index i = 0; i < n; ++i) r.push_back(tr.states[k][i]);
        r.push_back(tr.free_energy[k]);
        r.push_back(tr.dissipation[k]);
        r.push_back(tr.residual_l1[k]);
        r.push_back(tr.has_ref() ? tr.dist_to_ref_l1[k] : std::nan(""));
        w.row(r);
    }
    return w.str();
}

inline json trajectory_sidecar(const BAProblem& prob, const IntegratorConfig& cfg, const Trajectory& tr) {
    return json{{"problem", to_json(prob)},
                {"config", to_json(cfg)},
                {"samples", tr.size()},
                {"max_free_energy_increase", tr.max_free_energy_increase},
                {"lyapunov_violation", tr.lyapunov_violation}};
}

} // namespace baflow
