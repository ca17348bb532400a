#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "pcqa/errors.hpp"
#include "pcqa/pipeline.hpp"

namespace {

using namespace pcqa::pipeline;
using Command = CommandResult (*)(const PipelineConfig&);

int run(Command command, const std::string& config_path, std::optional<std::uint64_t> seed,
        std::optional<std::string> out) {
    try {
        const auto config = load_config(config_path, seed, out);
        const auto result = command(config);
        std::cout << result.summary.dump(2) << "\n";
        for (const auto& path : result.written) std::cerr << "wrote " << path << "\n";
        return 0;
    } catch (const pcqa::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Comparison-based point cloud quality assessment"};
    app.require_subcommand(1);

    const std::pair<const char*, Command> commands[] = {
        {"gen-pairs", cmd_gen_pairs},         {"plan-schedule", cmd_plan_schedule},
        {"build-anchors", cmd_build_anchors}, {"render-views", cmd_render},
        {"evaluate", cmd_evaluate},           {"metrics", cmd_metrics},
        {"simulate", cmd_simulate},
    };

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    Command selected = nullptr;
    for (const auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_option("--out", out, "override the output directory");
        sub->callback([&selected, fn = fn] { selected = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return run(selected, config_path, seed, out);
}
