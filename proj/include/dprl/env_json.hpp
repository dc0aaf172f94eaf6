#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dprl/tabular_mdp.hpp"

namespace dprl {

/// Raised by the environment loader with a field-precise message
/// (JSON pointer-style path plus what was wrong there).
class EnvFormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double require_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw EnvFormatError(path + ": expected a number");
    return j.get<double>();
}

inline int require_int(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw EnvFormatError(path + ": expected an integer");
    return j.get<int>();
}

inline const nlohmann::json& require_array(const nlohmann::json& j, const std::string& path,
                                           std::size_t expected_size) {
    if (!j.is_array()) throw EnvFormatError(path + ": expected an array");
    if (j.size() != expected_size)
        throw EnvFormatError(path + ": expected " + std::to_string(expected_size) +
                             " entries, found " + std::to_string(j.size()));
    return j;
}

}  // namespace detail

/// Parses the environment schema
///   {"S":..,"A":..,"H":..,"P":[h][s][a][s'],"r":[h][s][a],"d1":[s],
///    "reward_kind":"bernoulli"|"deterministic"}
/// and validates every TabularMdp invariant. Errors carry the offending
/// field path (e.g. "P[3][1][0]").
inline TabularMdp load_env_json(const nlohmann::json& root) {
    if (!root.is_object()) throw EnvFormatError("top level: expected a JSON object");
    for (const char* key : {"S", "A", "H", "P", "r", "d1", "reward_kind"})
        if (!root.contains(key))
            throw EnvFormatError(std::string("top level: missing required field \"") + key + "\"");

    const int S = detail::require_int(root["S"], "S");
    const int A = detail::require_int(root["A"], "A");
    const int H = detail::require_int(root["H"], "H");
    if (S < 1) throw EnvFormatError("S: must be >= 1");
    if (A < 1) throw EnvFormatError("A: must be >= 1");
    if (H < 1) throw EnvFormatError("H: must be >= 1");

    const std::string kind_str = root["reward_kind"].is_string()
                                     ? root["reward_kind"].get<std::string>()
                                     : throw EnvFormatError("reward_kind: expected a string");
    RewardKind kind;
    if (kind_str == "bernoulli")
        kind = RewardKind::bernoulli;
    else if (kind_str == "deterministic")
        kind = RewardKind::deterministic;
    else
        throw EnvFormatError("reward_kind: must be \"bernoulli\" or \"deterministic\", got \"" +
                             kind_str + "\"");

    std::vector<double> P;
    P.reserve(static_cast<std::size_t>(H) * S * A * S);
    const auto& jp = detail::require_array(root["P"], "P", H);
    for (int h = 0; h < H; ++h) {
        const std::string ph = "P[" + std::to_string(h) + "]";
        const auto& jh = detail::require_array(jp[h], ph, S);
        for (int s = 0; s < S; ++s) {
            const std::string ps = ph + "[" + std::to_string(s) + "]";
            const auto& js = detail::require_array(jh[s], ps, A);
            for (int a = 0; a < A; ++a) {
                const std::string pa = ps + "[" + std::to_string(a) + "]";
                const auto& ja = detail::require_array(js[a], pa, S);
                double sum = 0.0;
                for (int t = 0; t < S; ++t) {
                    const double v =
                        detail::require_number(ja[t], pa + "[" + std::to_string(t) + "]");
                    if (v < 0.0)
                        throw EnvFormatError(pa + "[" + std::to_string(t) +
                                             "]: negative probability");
                    P.push_back(v);
                    sum += v;
                }
                if (std::abs(sum - 1.0) > kRowSumTol)
                    throw EnvFormatError(pa + ": row sums to " + std::to_string(sum) +
                                         ", expected 1 within 1e-12");
            }
        }
    }

    std::vector<double> r;
    r.reserve(static_cast<std::size_t>(H) * S * A);
    const auto& jr = detail::require_array(root["r"], "r", H);
    for (int h = 0; h < H; ++h) {
        const std::string ph = "r[" + std::to_string(h) + "]";
        const auto& jh = detail::require_array(jr[h], ph, S);
        for (int s = 0; s < S; ++s) {
            const std::string ps = ph + "[" + std::to_string(s) + "]";
            const auto& js = detail::require_array(jh[s], ps, A);
            for (int a = 0; a < A; ++a) {
                const std::string pa = ps + "[" + std::to_string(a) + "]";
                const double v = detail::require_number(js[a], pa);
                if (v < 0.0 || v > 1.0) throw EnvFormatError(pa + ": reward outside [0,1]");
                r.push_back(v);
            }
        }
    }

    std::vector<double> d1;
    const auto& jd = detail::require_array(root["d1"], "d1", S);
    double dsum = 0.0;
    for (int s = 0; s < S; ++s) {
        const double v = detail::require_number(jd[s], "d1[" + std::to_string(s) + "]");
        if (v < 0.0) throw EnvFormatError("d1[" + std::to_string(s) + "]: negative probability");
        d1.push_back(v);
        dsum += v;
    }
    if (std::abs(dsum - 1.0) > kRowSumTol)
        throw EnvFormatError("d1: sums to " + std::to_string(dsum) + ", expected 1 within 1e-12");

    return TabularMdp(S, A, H, std::move(P), std::move(r), std::move(d1), kind);
}

/// Loads an environment from a file; parse errors are reported with the
/// byte position nlohmann::json provides.
inline TabularMdp load_env_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open environment file: " + path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw EnvFormatError(path + ": " + e.what());
    }
    return load_env_json(root);
}

inline nlohmann::json env_to_json(const TabularMdp& mdp) {
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    nlohmann::json jp = nlohmann::json::array();
    nlohmann::json jr = nlohmann::json::array();
    for (int h = 0; h < H; ++h) {
        nlohmann::json ph = nlohmann::json::array(), rh = nlohmann::json::array();
        for (int s = 0; s < S; ++s) {
            nlohmann::json ps = nlohmann::json::array(), rs = nlohmann::json::array();
            for (int a = 0; a < A; ++a) {
                const auto row = mdp.transition_row(h, s, a);
                ps.push_back(std::vector<double>(row.begin(), row.end()));
                rs.push_back(mdp.mean_reward(h, s, a));
            }
            ph.push_back(std::move(ps));
            rh.push_back(std::move(rs));
        }
        jp.push_back(std::move(ph));
        jr.push_back(std::move(rh));
    }
    const auto d1 = mdp.initial_dist();
    return nlohmann::json{
        {"S", S},
        {"A", A},
        {"H", H},
        {"P", std::move(jp)},
        {"r", std::move(jr)},
        {"d1", std::vector<double>(d1.begin(), d1.end())},
        {"reward_kind", mdp.reward_kind() == RewardKind::bernoulli ? "bernoulli" : "deterministic"},
    };
}

}  // namespace dprl
