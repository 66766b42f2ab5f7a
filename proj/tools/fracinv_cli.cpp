#include "fracinv/app.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App cli{"Forward and inverse solver for multi-term time-fractional fourth-order problems"};
    cli.require_subcommand(1);

    std::string config;
    std::string out;
    unsigned threads = 0;
    double tol = 0.0;
    bool sabotage = false;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"mlf-eval", "Evaluate a relaxation kernel and its multinomial Mittag-Leffler function over t"},
        {"forward", "Solve the forward problem for a known a(t)"},
        {"inverse", "Recover a(t) from the energy datum and re-solve the forward problem"},
        {"verify", "Run the invariant suites"},
        {"oracle-compare", "Compare the spectral solution with the finite-difference reference"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        auto* sub = cli.add_subcommand(name, help);
        sub->add_option("config", config, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Output directory (overrides output.dir)");
        sub->add_option("--threads", threads, "Worker threads, 0 for all cores");
        sub->add_option("--tol", tol, "Pass threshold for the command's check")->check(CLI::PositiveNumber);
        if (name == "verify")
            sub->add_flag("--sabotage", sabotage, "Inject a typo into the dual basis");
        subs.push_back(sub);
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : fracinv::app::ValidationFailure;
    }

    fracinv::app::CommandOptions opts;
    opts.sabotage = sabotage;
    std::string command;
    for (auto* sub : subs) {
        if (!sub->parsed())
            continue;
        command = sub->get_name();
        if (sub->count("--out") > 0)
            opts.out = out;
        if (sub->count("--threads") > 0)
            opts.threads = threads;
        if (sub->count("--tol") > 0)
            opts.tol = tol;
    }
    return fracinv::app::run(command, config, opts).exit_code;
}
