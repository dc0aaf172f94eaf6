// dprl: experiment runner for the private tabular-RL simulation library.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dprl/dprl.hpp"

namespace {

dprl::ArmSpec parse_arm(const std::string& text) {
    dprl::ArmSpec arm;
    std::string head = text, options;
    if (const auto colon = text.find(':'); colon != std::string::npos) {
        head = text.substr(0, colon);
        options = text.substr(colon + 1);
    }
    if (head == "ucbvi")
        arm.kind = dprl::ArmKind::ucbvi;
    else if (head == "none")
        arm.kind = dprl::ArmKind::none;
    else if (head == "jdp")
        arm.kind = dprl::ArmKind::central;
    else if (head == "ldp")
        arm.kind = dprl::ArmKind::local;
    else
        throw CLI::ValidationError("--arm", "unknown arm kind \"" + head +
                                                "\" (expected ucbvi|none|jdp|ldp)");
    arm.label = head;
    std::size_t pos = 0;
    while (pos < options.size()) {
        const auto comma = options.find(',', pos);
        const std::string kv = options.substr(pos, comma - pos);
        pos = comma == std::string::npos ? options.size() : comma + 1;
        if (kv.empty()) continue;
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--arm", "expected key=value, got \"" + kv + "\"");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        try {
            if (key == "eps") {
                arm.epsilon = std::stod(value);
                if (arm.label == head) arm.label = head + "(eps=" + value + ")";
            } else if (key == "scale") {
                arm.bonus_scale = std::stod(value);
            } else if (key == "ebound") {
                if (value == "analytic")
                    arm.analytic_e = true;
                else
                    arm.e_bound_override = std::stod(value);
            } else if (key == "label") {
                arm.label = value;
            } else if (key == "zeronoise") {
                arm.zero_noise = value == "1" || value == "true";
            } else {
                throw CLI::ValidationError("--arm", "unknown arm option \"" + key + "\"");
            }
        } catch (const std::invalid_argument&) {
            throw CLI::ValidationError("--arm", "bad numeric value in \"" + kv + "\"");
        }
    }
    return arm;
}

dprl::ExperimentSpec parse_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--spec", "cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw CLI::ValidationError("--spec", std::string("parse error: ") + e.what());
    }
    dprl::ExperimentSpec spec;
    spec.environment = j.value("environment", spec.environment);
    spec.states = j.value("states", spec.states);
    spec.horizon = j.value("horizon", spec.horizon);
    spec.episodes = j.value("episodes", spec.episodes);
    spec.runs = j.value("runs", spec.runs);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    spec.checkpoint_stride = j.value("checkpoint_stride", spec.checkpoint_stride);
    spec.output_dir = j.value("output_dir", spec.output_dir);
    spec.beta = j.value("beta", spec.beta);
    spec.default_bonus_scale = j.value("bonus_scale", spec.default_bonus_scale);
    if (!j.contains("arms") || !j["arms"].is_array() || j["arms"].empty())
        throw CLI::ValidationError("--spec", "spec must list at least one arm");
    for (const auto& ja : j["arms"]) {
        dprl::ArmSpec arm;
        const std::string kind = ja.value("kind", "ucbvi");
        if (kind == "ucbvi")
            arm.kind = dprl::ArmKind::ucbvi;
        else if (kind == "none")
            arm.kind = dprl::ArmKind::none;
        else if (kind == "jdp" || kind == "central")
            arm.kind = dprl::ArmKind::central;
        else if (kind == "ldp" || kind == "local")
            arm.kind = dprl::ArmKind::local;
        else
            throw CLI::ValidationError("--spec", "unknown arm kind \"" + kind + "\"");
        arm.epsilon = ja.value("epsilon", 1.0);
        arm.label = ja.value("label", kind);
        if (ja.contains("bonus_scale")) arm.bonus_scale = ja["bonus_scale"].get<double>();
        if (ja.contains("e_bound_override"))
            arm.e_bound_override = ja["e_bound_override"].get<double>();
        arm.analytic_e = ja.value("analytic_e", false);
        arm.zero_noise = ja.value("zero_noise", false);
        spec.arms.push_back(std::move(arm));
    }
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dprl: differentially private optimistic value iteration on tabular MDPs"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a multi-arm regret experiment");
    std::string env = "riverswim", out_dir = "results", spec_path;
    int states = 6, horizon = 20, runs = 5;
    std::int64_t episodes = 50000, stride = 0;
    std::uint64_t seed = 7;
    double bonus_scale = 0.1, beta = 0.1;
    std::vector<std::string> arm_texts;
    run->add_option("--env", env, "builtin name (riverswim) or environment JSON path");
    run->add_option("--states", states, "state count for builtin environments");
    run->add_option("--horizon", horizon, "planning horizon H");
    run->add_option("--episodes", episodes, "episodes K per run");
    run->add_option("--arm", arm_texts,
                    "arm spec: ucbvi | none | jdp:eps=1[,scale=..][,ebound=..|analytic]"
                    "[,label=..] | ldp:eps=..");
    run->add_option("--runs", runs, "seeded repetitions per arm");
    run->add_option("--seed", seed, "base seed");
    run->add_option("--bonus-scale", bonus_scale, "default bonus multiplier for all arms");
    run->add_option("--beta", beta, "failure probability");
    run->add_option("--checkpoint-stride", stride, "aggregate thinning (0 = episodes/500)");
    run->add_option("--out", out_dir, "output directory for CSV/SVG");
    run->add_option("--spec", spec_path, "experiment spec as JSON (overrides other options)");

    // validate-env
    auto* validate = app.add_subcommand("validate-env", "check an environment JSON file");
    std::string validate_path;
    validate->add_option("file", validate_path, "environment JSON path")->required();

    // oracle
    auto* oracle = app.add_subcommand("oracle", "print the optimal initial value V*_1(s1)");
    std::string oracle_env = "riverswim";
    int oracle_states = 6, oracle_horizon = 20;
    oracle->add_option("--env", oracle_env, "builtin name (riverswim) or environment JSON path");
    oracle->add_option("--states", oracle_states, "state count for builtin environments");
    oracle->add_option("--horizon", oracle_horizon, "planning horizon H");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            dprl::ExperimentSpec spec;
            if (!spec_path.empty()) {
                spec = parse_spec_file(spec_path);
            } else {
                spec.environment = env;
                spec.states = states;
                spec.horizon = horizon;
                spec.episodes = episodes;
                spec.runs = runs;
                spec.base_seed = seed;
                spec.checkpoint_stride = stride;
                spec.output_dir = out_dir;
                spec.beta = beta;
                spec.default_bonus_scale = bonus_scale;
                if (arm_texts.empty())
                    throw CLI::ValidationError("--arm", "at least one arm is required");
                for (const auto& text : arm_texts) spec.arms.push_back(parse_arm(text));
            }
            const dprl::ExperimentResult result = dprl::run_experiment(spec);
            for (std::size_t a = 0; a < result.aggregates.size(); ++a) {
                const auto& agg = result.aggregates[a];
                std::printf("%-24s final mean cumulative regret %.6g (se %.6g)\n",
                            agg.label.c_str(), agg.mean_cumulative.back(),
                            agg.stderr_cumulative.back());
            }
            if (!spec.output_dir.empty())
                std::printf("wrote per-run CSVs, aggregate.csv and regret.svg to %s\n",
                            spec.output_dir.c_str());
            return 0;
        }
        if (validate->parsed()) {
            try {
                const dprl::TabularMdp mdp = dprl::load_env_file(validate_path);
                std::printf("OK: S=%d A=%d H=%d\n", mdp.num_states(), mdp.num_actions(),
                            mdp.horizon());
                return 0;
            } catch (const std::exception& e) {
                std::fprintf(stderr, "invalid environment: %s\n", e.what());
                return 1;
            }
        }
        if (oracle->parsed()) {
            const dprl::TabularMdp mdp = oracle_env == "riverswim"
                                             ? dprl::build_riverswim(oracle_states, oracle_horizon)
                                             : dprl::load_env_file(oracle_env);
            const dprl::ValueSolution sol = dprl::exact_value_iteration(mdp);
            const std::span<const double> first{sol.v.data(),
                                                static_cast<std::size_t>(sol.S)};
            std::printf("V*_1(s1) = %.10g\n", dprl::initial_value(mdp, first));
            return 0;
        }
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
