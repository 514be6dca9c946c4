#include <tsn/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

namespace {

// "--shrink 1/3" or "--shrink 0.25"; exact in both spellings
tsn::Rat parse_ratio(const std::string& text) {
    if (text.find('/') != std::string::npos) return tsn::Rat(text);
    auto dot = text.find('.');
    if (dot == std::string::npos) return tsn::Rat(text);
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    tsn::Rat denom = 1;
    for (std::size_t i = dot + 1; i < text.size(); ++i) denom *= 10;
    return tsn::Rat(digits) / denom;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"worst-case latency toolkit for TSN networks"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", scheduler, mode, shrink = "1";
    std::int64_t horizon_us = 0, duration_us = 10000;
    std::uint64_t seed = 0;
    bool strict_tqueue = false, seed_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "network/flow/schedule JSON")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--scheduler", scheduler, "override: cbs-tas or cbs-sp")
            ->check(CLI::IsMember({"cbs-tas", "cbs-sp"}));
        return sub;
    };
    auto add_analysis = [&](CLI::App* sub, bool allow_both) {
        std::vector<std::string> modes{"non-preemption", "preemption"};
        if (allow_both) modes.push_back("both");
        sub->add_option("--mode", mode, "override: non-preemption or preemption")
            ->check(CLI::IsMember(modes));
        sub->add_option("--shrink", shrink, "index shrink ratio in (0, 1]");
        sub->add_option("--horizon-us", horizon_us, "analysis horizon in microseconds");
        sub->add_flag("--strict-tqueue", strict_tqueue, "add one max-frame FIFO term per hop");
    };
    auto add_sim = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "simulation seed")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--duration-us", duration_us, "simulated time in microseconds");
    };

    CLI::App* analyze = add_common(app.add_subcommand("analyze", "delay bounds and curves"));
    add_analysis(analyze, true);
    CLI::App* simulate = add_common(app.add_subcommand("simulate", "discrete-event run"));
    add_sim(simulate);
    CLI::App* synth = add_common(app.add_subcommand("synth-gcl", "non-overlapping gate starts"));
    CLI::App* route = add_common(app.add_subcommand("route", "fault-resilient topology"));
    CLI::App* compare = add_common(app.add_subcommand("compare", "bound vs simulation"));
    add_analysis(compare, false);
    add_sim(compare);
    (void)synth;
    (void)route;

    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in.good()) {
            std::cerr << "cannot read " << config_path << "\n";
            return 2;
        }
        tsn::PipelineRequest req;
        req.config = tsn::load_config(nlohmann::json::parse(in));
        req.out_dir = out_dir;
        if (scheduler == "cbs-tas") req.scheduler = tsn::Scheduler::CbsTas;
        if (scheduler == "cbs-sp") req.scheduler = tsn::Scheduler::CbsSp;
        if (mode == "non-preemption") req.mode = tsn::Mode::NonPreemption;
        if (mode == "preemption") req.mode = tsn::Mode::Preemption;
        if (mode == "both") req.both_modes = true;
        req.r_index = parse_ratio(shrink);
        if (horizon_us > 0) req.horizon = tsn::us(horizon_us);
        req.strict_tqueue = strict_tqueue;
        req.seed = seed_given ? seed : req.config.options.seed;
        req.duration = tsn::us(duration_us);
        return tsn::run_pipeline(req, app.get_subcommands().front()->get_name());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
