#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dprl/env_json.hpp"
#include "dprl/planner.hpp"
#include "dprl/riverswim.hpp"
#include "dprl/rng.hpp"

namespace dprl {

enum class ArmKind { ucbvi, none, central, local };

inline std::string arm_kind_name(ArmKind k) {
    switch (k) {
        case ArmKind::ucbvi: return "ucbvi";
        case ArmKind::none: return "none";
        case ArmKind::central: return "jdp";
        case ArmKind::local: return "ldp";
    }
    return "?";
}

/// One experiment arm. Private arms run with the E bound overridden to
/// `e_bound_override` (default 0): the mechanism noise is always injected
/// honestly, but the analytic E makes every E-proportional bonus term
/// exceed H at simulation scale, freezing exploration. Set
/// `analytic_e = true` to run with the documented formula instead.
struct ArmSpec {
    std::string label;
    ArmKind kind = ArmKind::ucbvi;
    double epsilon = 1.0;
    std::optional<double> bonus_scale;          // falls back to the spec default
    std::optional<double> e_bound_override;     // falls back to 0 for private arms
    bool analytic_e = false;
    bool zero_noise = false;

    std::string identity() const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s|eps=%.17g|scale=%.17g|eb=%.17g|an=%d|zn=%d|%s",
                      arm_kind_name(kind), epsilon, bonus_scale.value_or(-1.0),
                      e_bound_override.value_or(-1.0), analytic_e ? 1 : 0, zero_noise ? 1 : 0,
                      label.c_str());
        return buf;
    }
};

struct ExperimentSpec {
    std::string environment = "riverswim";  // builtin name or JSON file path
    int states = 6;
    int horizon = 20;
    std::int64_t episodes = 1000;
    std::vector<ArmSpec> arms;
    int runs = 5;
    std::uint64_t base_seed = 0;
    std::int64_t checkpoint_stride = 0;  // 0 -> max(1, episodes / 500)
    std::string output_dir;
    double beta = 0.1;
    double default_bonus_scale = 0.1;
};

struct ArmAggregate {
    std::string label;
    std::vector<std::int64_t> checkpoints;       // episode numbers, 1-based
    std::vector<double> mean_cumulative;
    std::vector<double> stderr_cumulative;       // ±1 standard error over runs
};

struct ExperimentResult {
    std::vector<std::vector<RegretRecord>> records;  // [arm][run]
    std::vector<ArmAggregate> aggregates;            // [arm]
};

/// Seed for one (arm, run) cell. Depends on the arm's content, not its
/// position in the spec, so permuting arms never changes any trace.
inline std::uint64_t derive_run_seed(std::uint64_t base_seed, const ArmSpec& arm, int run) {
    return mix_seed(mix_seed(base_seed ^ hash_string(arm.identity())) +
                    static_cast<std::uint64_t>(run));
}

inline std::vector<std::int64_t> make_checkpoints(std::int64_t episodes, std::int64_t stride) {
    if (stride <= 0) stride = std::max<std::int64_t>(1, episodes / 500);
    std::vector<std::int64_t> out;
    for (std::int64_t k = stride; k <= episodes; k += stride) out.push_back(k);
    if (out.empty() || out.back() != episodes) out.push_back(episodes);
    return out;
}

inline TabularMdp build_experiment_env(const ExperimentSpec& spec) {
    if (spec.environment == "riverswim")
        return build_riverswim(spec.states, spec.horizon);
    return load_env_file(spec.environment);
}

inline RunConfig arm_run_config(const ExperimentSpec& spec, const ArmSpec& arm, int run) {
    RunConfig rc;
    rc.episodes = spec.episodes;
    rc.beta = spec.beta;
    rc.bonus_scale = arm.bonus_scale.value_or(spec.default_bonus_scale);
    rc.seed = derive_run_seed(spec.base_seed, arm, run);
    rc.epsilon = arm.epsilon;
    rc.zero_noise = arm.zero_noise;
    rc.bonus = BonusKind::bernstein;
    switch (arm.kind) {
        case ArmKind::ucbvi:
            rc.privatizer = PrivatizerKind::none;
            rc.bonus = BonusKind::hoeffding;
            break;
        case ArmKind::none:
            rc.privatizer = PrivatizerKind::none;
            break;
        case ArmKind::central:
            rc.privatizer = PrivatizerKind::central;
            break;
        case ArmKind::local:
            rc.privatizer = PrivatizerKind::local;
            break;
    }
    if (rc.privatizer != PrivatizerKind::none && !arm.analytic_e)
        rc.e_bound_override = arm.e_bound_override.value_or(0.0);
    return rc;
}

inline RegretRecord run_arm_once(const TabularMdp& mdp, const ExperimentSpec& spec,
                                 const ArmSpec& arm, int run) {
    const RunConfig rc = arm_run_config(spec, arm, run);
    RegretRecord rec = arm.kind == ArmKind::ucbvi ? ucbvi_hoeffding_baseline(mdp, rc)
                                                  : dp_ucbvi_run(mdp, rc);
    rec.arm_label = arm.label;
    return rec;
}

inline int harness_thread_budget() {
    if (const char* env = std::getenv("DPRL_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

inline std::string format_sig10(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Writes records in the fixed schema, LF line endings, 10 significant
/// digits. An empty record set produces a header-only file.
inline void emit_csv(const std::vector<const RegretRecord*>& records,
                     const std::vector<int>& run_indices, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot write " + path);
    out << "episode,arm,run,regret,cumulative_regret\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RegretRecord& rec = *records[i];
        for (std::size_t k = 0; k < rec.per_episode_regret.size(); ++k)
            out << (k + 1) << ',' << rec.arm_label << ',' << run_indices[i] << ','
                << detail::format_sig10(rec.per_episode_regret[k]) << ','
                << detail::format_sig10(rec.cumulative[k]) << '\n';
    }
    if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

inline ArmAggregate aggregate_arm(const std::string& label,
                                  const std::vector<RegretRecord>& runs,
                                  const std::vector<std::int64_t>& checkpoints) {
    ArmAggregate agg;
    agg.label = label;
    agg.checkpoints = checkpoints;
    for (std::int64_t k : checkpoints) {
        double mean = 0.0;
        for (const auto& rec : runs) mean += rec.cumulative[k - 1];
        mean /= static_cast<double>(runs.size());
        double var = 0.0;
        for (const auto& rec : runs) {
            const double d = rec.cumulative[k - 1] - mean;
            var += d * d;
        }
        const double stderr_v =
            runs.size() > 1
                ? std::sqrt(var / (static_cast<double>(runs.size()) - 1.0) /
                            static_cast<double>(runs.size()))
                : 0.0;
        agg.mean_cumulative.push_back(mean);
        agg.stderr_cumulative.push_back(stderr_v);
    }
    return agg;
}

inline void emit_aggregate_csv(const std::vector<ArmAggregate>& aggregates,
                               const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_aggregate_csv: cannot write " + path);
    out << "episode,arm,mean_cumulative_regret,stderr_cumulative_regret\n";
    for (const auto& agg : aggregates)
        for (std::size_t i = 0; i < agg.checkpoints.size(); ++i)
            out << agg.checkpoints[i] << ',' << agg.label << ','
                << detail::format_sig10(agg.mean_cumulative[i]) << ','
                << detail::format_sig10(agg.stderr_cumulative[i]) << '\n';
    if (!out) throw std::runtime_error("emit_aggregate_csv: write failed for " + path);
}

/// Figure-style chart: one mean polyline per arm over a shaded ±1
/// standard-error band, legend from arm labels. Self-contained SVG.
inline void emit_svg_chart(const std::vector<ArmAggregate>& aggregates, const std::string& path) {
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    const double width = 880, height = 560;
    const double left = 80, right = width - 200, top = 30, bottom = height - 60;
    double x_max = 1.0, y_max = 0.0;
    for (const auto& agg : aggregates) {
        if (!agg.checkpoints.empty())
            x_max = std::max(x_max, static_cast<double>(agg.checkpoints.back()));
        for (std::size_t i = 0; i < agg.mean_cumulative.size(); ++i)
            y_max = std::max(y_max, agg.mean_cumulative[i] + agg.stderr_cumulative[i]);
    }
    if (y_max <= 0.0) y_max = 1.0;
    auto sx = [&](double k) { return left + (right - left) * (k / x_max); };
    auto sy = [&](double v) { return bottom - (bottom - top) * (v / y_max); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_svg_chart: cannot write " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    // axes and ticks
    out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = x_max * i / 5.0, fy = y_max * i / 5.0;
        out << "<line x1=\"" << sx(fx) << "\" y1=\"" << bottom << "\" x2=\"" << sx(fx)
            << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << sx(fx) << "\" y=\"" << bottom + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">" << detail::format_sig10(fx)
            << "</text>\n"
            << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << left
            << "\" y2=\"" << sy(fy) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << left - 8 << "\" y=\"" << sy(fy) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << detail::format_sig10(fy)
            << "</text>\n";
    }
    out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 15
        << "\" font-size=\"14\" text-anchor=\"middle\">episode</text>\n"
        << "<text x=\"20\" y=\"" << (top + bottom) / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << (top + bottom) / 2 << ")\">cumulative regret</text>\n";

    for (std::size_t arm = 0; arm < aggregates.size(); ++arm) {
        const auto& agg = aggregates[arm];
        const char* color = kColors[arm % (sizeof kColors / sizeof kColors[0])];
        if (agg.checkpoints.empty()) continue;
        out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < agg.checkpoints.size(); ++i)
            out << sx(static_cast<double>(agg.checkpoints[i])) << ','
                << sy(agg.mean_cumulative[i] + agg.stderr_cumulative[i]) << ' ';
        for (std::size_t i = agg.checkpoints.size(); i-- > 0;)
            out << sx(static_cast<double>(agg.checkpoints[i])) << ','
                << sy(std::max(0.0, agg.mean_cumulative[i] - agg.stderr_cumulative[i])) << ' ';
        out << "\"/>\n";
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < agg.checkpoints.size(); ++i)
            out << sx(static_cast<double>(agg.checkpoints[i])) << ','
                << sy(agg.mean_cumulative[i]) << ' ';
        out << "\"/>\n";
        const double ly = top + 20 + 22 * static_cast<double>(arm);
        out << "<line x1=\"" << right + 10 << "\" y1=\"" << ly << "\" x2=\"" << right + 40
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << right + 46 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
            << detail::xml_escape(agg.label) << "</text>\n";
    }
    out << "<text x=\"" << right + 10 << "\" y=\""
        << top + 20 + 22 * static_cast<double>(aggregates.size()) + 4
        << "\" font-size=\"11\">band: &#177;1 standard error</text>\n";
    out << "</svg>\n";
    if (!out) throw std::runtime_error("emit_svg_chart: write failed for " + path);
}

inline std::string sanitize_label(const std::string& label) {
    std::string out;
    for (char c : label)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

/// Executes every arm x run cell (in parallel up to DPRL_THREADS), then
/// writes one CSV per run, the aggregate CSV and the chart. All file
/// output happens after the runs complete, from this thread.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.arms.empty()) throw std::invalid_argument("run_experiment: no arms");
    if (spec.runs < 1) throw std::invalid_argument("run_experiment: runs must be >= 1");
    const TabularMdp mdp = build_experiment_env(spec);

    ExperimentResult result;
    result.records.assign(spec.arms.size(), {});
    for (auto& v : result.records) v.resize(spec.runs);

    struct Job {
        int arm;
        int run;
    };
    std::vector<Job> jobs;
    for (int a = 0; a < static_cast<int>(spec.arms.size()); ++a)
        for (int r = 0; r < spec.runs; ++r) jobs.push_back({a, r});

    const int threads = std::min<int>(harness_thread_budget(), static_cast<int>(jobs.size()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            try {
                result.records[jobs[j].arm][jobs[j].run] =
                    run_arm_once(mdp, spec, spec.arms[jobs[j].arm], jobs[j].run);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    const auto checkpoints = make_checkpoints(spec.episodes, spec.checkpoint_stride);
    for (std::size_t a = 0; a < spec.arms.size(); ++a)
        result.aggregates.push_back(
            aggregate_arm(spec.arms[a].label, result.records[a], checkpoints));

    if (!spec.output_dir.empty()) {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(spec.output_dir, ec);
        if (ec && !fs::is_directory(spec.output_dir))
            throw std::runtime_error("run_experiment: cannot create output dir " +
                                     spec.output_dir);
        for (std::size_t a = 0; a < spec.arms.size(); ++a)
            for (int r = 0; r < spec.runs; ++r) {
                const std::string path = (fs::path(spec.output_dir) /
                                          (sanitize_label(spec.arms[a].label) + "_run" +
                                           std::to_string(r) + ".csv"))
                                             .string();
                emit_csv({&result.records[a][r]}, {r}, path);
            }
        emit_aggregate_csv(result.aggregates,
                           (fs::path(spec.output_dir) / "aggregate.csv").string());
        emit_svg_chart(result.aggregates, (fs::path(spec.output_dir) / "regret.svg").string());
    }
    return result;
}

}  // namespace dprl
