#include "mocp/problem_file.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "mocp/poly.hpp"

namespace mocp {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<double> parse_numbers(const std::string& s, int line) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
        // allow comma separators as well as spaces
        if (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (tok.empty()) continue;
        try {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ProblemFileError("expected a number, got '" + tok + "'", line);
        }
    }
    return out;
}

struct RawLine {
    int number;
    std::string text;
};

}  // namespace

LoadedProblem parse_problem_text(const std::string& text) {
    // one pass to strip comments and bucket lines by section
    std::map<std::string, std::vector<RawLine>> sections;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ProblemFileError("unterminated section header", lineno);
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ProblemFileError("empty section name", lineno);
            sections[section];  // remember even if the body stays empty
            continue;
        }
        if (section.empty()) throw ProblemFileError("content before any [section]", lineno);
        sections[section].push_back({lineno, s});
    }

    auto key_values = [&](const std::string& name) {
        std::map<std::string, std::pair<std::string, int>> kv;
        auto it = sections.find(name);
        if (it == sections.end()) return kv;
        for (const RawLine& l : it->second) {
            const size_t eq = l.text.find('=');
            if (eq == std::string::npos)
                throw ProblemFileError("expected key = value in [" + name + "]", l.number);
            const std::string key = trim(l.text.substr(0, eq));
            const std::string val = trim(l.text.substr(eq + 1));
            if (key.empty() || val.empty())
                throw ProblemFileError("empty key or value in [" + name + "]", l.number);
            if (!kv.emplace(key, std::make_pair(val, l.number)).second)
                throw ProblemFileError("duplicate key '" + key + "' in [" + name + "]", l.number);
        }
        return kv;
    };
    auto require = [](std::map<std::string, std::pair<std::string, int>>& kv,
                      const std::string& key, const std::string& where) {
        auto it = kv.find(key);
        if (it == kv.end())
            throw ProblemFileError("missing '" + key + "' in [" + where + "]", 0);
        return it->second;
    };

    // ---- space ----
    auto space_kv = key_values("space");
    if (space_kv.empty()) throw ProblemFileError("missing [space] section", 0);
    const auto states_v = require(space_kv, "states", "space");
    const auto inputs_v = require(space_kv, "inputs", "space");
    int n = 0, m = 0;
    try {
        n = std::stoi(states_v.first);
        m = std::stoi(inputs_v.first);
    } catch (const std::exception&) {
        throw ProblemFileError("states/inputs must be integers", states_v.second);
    }
    if (n < 1 || m < 0) throw ProblemFileError("need states >= 1 and inputs >= 0", states_v.second);
    const VarSpace sp(true, n, m);

    auto poly_of = [&](const std::string& expr, int line) {
        try {
            return parse(expr, sp);
        } catch (const ParseError& e) {
            throw ProblemFileError(std::string("bad polynomial '") + expr + "': " + e.what(), line);
        }
    };

    // ---- dynamics: one "xi' = poly" per state ----
    auto dyn = sections.find("dynamics");
    if (dyn == sections.end()) throw ProblemFileError("missing [dynamics] section", 0);
    std::vector<std::optional<Polynomial>> f(n);
    for (const RawLine& l : dyn->second) {
        const size_t eq = l.text.find('=');
        if (eq == std::string::npos)
            throw ProblemFileError("expected xi' = polynomial", l.number);
        std::string lhs = trim(l.text.substr(0, eq));
        if (lhs.size() < 3 || lhs.front() != 'x' || lhs.back() != '\'')
            throw ProblemFileError("left side must look like x1'", l.number);
        int idx = 0;
        try {
            idx = std::stoi(lhs.substr(1, lhs.size() - 2));
        } catch (const std::exception&) {
            throw ProblemFileError("left side must look like x1'", l.number);
        }
        if (idx < 1 || idx > n) throw ProblemFileError("state index out of range", l.number);
        if (f[idx - 1]) throw ProblemFileError("duplicate dynamics for x" + std::to_string(idx),
                                               l.number);
        f[idx - 1] = poly_of(trim(l.text.substr(eq + 1)), l.number);
    }
    std::vector<Polynomial> f_out;
    for (int i = 0; i < n; ++i) {
        if (!f[i])
            throw ProblemFileError("missing dynamics for x" + std::to_string(i + 1), 0);
        f_out.push_back(std::move(*f[i]));
    }

    // ---- cost ----
    auto cost_kv = key_values("cost");
    if (cost_kv.empty()) throw ProblemFileError("missing [cost] section", 0);
    const auto running_v = require(cost_kv, "running", "cost");
    Polynomial h = poly_of(running_v.first, running_v.second);
    Polynomial H(sp);
    if (auto it = cost_kv.find("terminal"); it != cost_kv.end())
        H = poly_of(it->second.first, it->second.second);

    // ---- constraint sets: "expr >= 0" / "expr <= 0", normalized to >= 0 ----
    auto read_set = [&](const std::string& name) {
        std::vector<Polynomial> gs;
        auto it = sections.find(name);
        if (it == sections.end()) return gs;
        for (const RawLine& l : it->second) {
            size_t pos = l.text.find(">=");
            bool geq = true;
            if (pos == std::string::npos) {
                pos = l.text.find("<=");
                geq = false;
            }
            if (pos == std::string::npos)
                throw ProblemFileError("constraint needs '>= 0' or '<= 0'", l.number);
            const Polynomial lhs = poly_of(trim(l.text.substr(0, pos)), l.number);
            const Polynomial rhs = poly_of(trim(l.text.substr(pos + 2)), l.number);
            gs.push_back(geq ? lhs - rhs : rhs - lhs);
        }
        return gs;
    };
    const std::vector<Polynomial> g_initial = read_set("sets.initial");
    const std::vector<Polynomial> g_traj = read_set("sets.trajectory");
    const std::vector<Polynomial> g_final = read_set("sets.final");

    // ---- horizon ----
    auto hor_kv = key_values("horizon");
    if (hor_kv.empty()) throw ProblemFileError("missing [horizon] section", 0);
    const auto hmode = require(hor_kv, "mode", "horizon");
    Horizon horizon = Horizon::free_time();
    if (hmode.first == "fixed") {
        const auto tv = require(hor_kv, "T", "horizon");
        const std::vector<double> tnum = parse_numbers(tv.first, tv.second);
        if (tnum.size() != 1 || tnum[0] <= 0.0)
            throw ProblemFileError("fixed horizon needs one positive T", tv.second);
        horizon = Horizon::fixed(tnum[0]);
    } else if (hmode.first != "free") {
        throw ProblemFileError("horizon mode must be free or fixed", hmode.second);
    }

    // ---- final state mode ----
    auto fin_kv = key_values("final");
    FinalMode final_mode = FinalMode::free_final;
    std::vector<double> x_T;
    if (!fin_kv.empty()) {
        const auto fmode = require(fin_kv, "mode", "final");
        if (fmode.first == "singleton") {
            final_mode = FinalMode::singleton;
            const auto tv = require(fin_kv, "target", "final");
            x_T = parse_numbers(tv.first, tv.second);
            if (static_cast<int>(x_T.size()) != n)
                throw ProblemFileError("target needs one value per state", tv.second);
        } else if (fmode.first == "constrained") {
            final_mode = FinalMode::constrained;
        } else if (fmode.first != "free") {
            throw ProblemFileError("final mode must be free, singleton, or constrained",
                                   fmode.second);
        }
    }

    // ---- initial measure ----
    auto mu_kv = key_values("initial_measure");
    if (mu_kv.empty()) throw ProblemFileError("missing [initial_measure] section", 0);
    const auto mtype = require(mu_kv, "type", "initial_measure");
    auto point_of = [&](const char* key) {
        const auto v = require(mu_kv, key, "initial_measure");
        std::vector<double> p = parse_numbers(v.first, v.second);
        if (static_cast<int>(p.size()) != n)
            throw ProblemFileError(std::string("'") + key + "' needs one value per state",
                                   v.second);
        return p;
    };
    InitialMeasure initial = InitialMeasure::unknown();
    if (mtype.first == "dirac") {
        initial = InitialMeasure::dirac(point_of("point"));
    } else if (mtype.first == "uniform_box") {
        initial = InitialMeasure::uniform_box(point_of("lo"), point_of("hi"));
    } else if (mtype.first == "uniform_segment") {
        initial = InitialMeasure::uniform_segment(point_of("a"), point_of("b"));
    } else if (mtype.first != "unknown") {
        throw ProblemFileError("initial_measure type must be dirac, uniform_box,"
                               " uniform_segment, or unknown",
                               mtype.second);
    }

    // ---- meta ----
    auto meta_kv = key_values("meta");
    LoadedProblem out{OcpProblem{.space = sp,
                                 .f = std::move(f_out),
                                 .h = std::move(h),
                                 .H = std::move(H),
                                 .C_I = {SetScope::state_only, g_initial},
                                 .C_T = {SetScope::time_state_input, g_traj},
                                 .C_F = {SetScope::state_only, g_final},
                                 .horizon = horizon,
                                 .initial = std::move(initial),
                                 .final_mode = final_mode,
                                 .x_T = std::move(x_T)},
                      {},
                      {}};
    if (auto it = meta_kv.find("name"); it != meta_kv.end()) out.name = it->second.first;
    if (auto it = meta_kv.find("oracle"); it != meta_kv.end()) out.oracle = it->second.first;
    validate(out.problem);
    return out;
}

LoadedProblem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open problem file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem_text(buf.str());
}

}  // namespace mocp
