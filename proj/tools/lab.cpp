// Command-line front end: run suites, single presets, and summarize outputs.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "todalab/experiments.hpp"

namespace {

void print_report(const todalab::RunReport& r) {
    const auto j = r.to_json();
    std::cout << j["status"].get<std::string>() << "  " << r.scenario_id;
    if (!r.ok) std::cout << "  [" << r.failed_stage << "] " << r.cause;
    std::cout << '\n';
    for (const auto& c : r.checks) {
        std::cout << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << c.value
                  << "  tolerance=" << c.tolerance << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solitary-wave stability experiments on Toda and FPU lattices"};
    app.require_subcommand(1);

    std::string config;
    auto* run = app.add_subcommand("run", "Run every scenario of a JSON suite");
    run->add_option("config", config, "Suite file")->required()->check(CLI::ExistingFile);

    std::string name;
    std::vector<std::string> sets;
    std::string out = "out";
    bool list = false;
    auto* sc = app.add_subcommand("scenario", "Run one preset scenario");
    sc->add_option("name", name, "Preset name");
    sc->add_option("--set", sets, "Override as dotted.key=value")->take_all();
    sc->add_option("--out", out, "Output directory (the scenario writes to <out>/<name>)");
    sc->add_flag("--list", list, "List presets");

    std::string dir;
    auto* rep = app.add_subcommand("report", "Summarize report.json files under a directory");
    rep->add_option("dir", dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto res = todalab::run_suite(std::filesystem::path(config));
            for (const auto& r : res.reports) print_report(r);
            std::cout << res.summary.dump(2) << '\n';
            return res.exit_code;
        }
        if (sc->parsed()) {
            if (list || name.empty()) {
                for (const auto& n : todalab::preset_names()) std::cout << n << '\n';
                return name.empty() && !list ? 2 : 0;
            }
            const auto j = todalab::apply_overrides(todalab::preset(name).to_json(), sets);
            const auto s = todalab::Scenario::from_json(j);
            const auto r = todalab::run_scenario(s, std::filesystem::path(out) / s.name);
            print_report(r);
            return (r.passed() != r.expect_fail) ? 0 : 1;
        }
        if (rep->parsed()) {
            const auto summary = todalab::summarize_reports(dir);
            std::cout << summary.dump(2) << '\n';
            const int bad = summary["failed"].get<int>() + summary["xpass"].get<int>();
            return bad == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
