#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "bslab/cli/commands.hpp"

namespace {

std::string slurp(std::istream& in) { return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bslab: block sequence laboratory"};
    app.require_subcommand(1, 1);

    std::string file = "-", format = "text", out;
    bslab::Nat depth = 0, budget = 0, seed = 0;
    bool strict = false;

    for (const auto& name : bslab::command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("scenario", file, "scenario file, - for stdin")->required();
        sub->add_option("--depth", depth, "inspection depth");
        sub->add_option("--budget", budget, "work budget per stream");
        sub->add_option("--seed", seed, "seed for random constructors");
        sub->add_flag("--strict", strict, "missing oracles abort the run");
        sub->add_option("--format", format, "text or structured")->check(CLI::IsMember({"text", "structured"}));
        sub->add_option("--out", out, "write the report here");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : bslab::kExitParse;
    }

    bslab::CommandOptions opt;
    opt.command = app.get_subcommands().front()->get_name();
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--depth")) opt.depth = depth;
    if (sub->count("--budget")) opt.budget = budget;
    if (sub->count("--seed")) opt.seed = seed;
    opt.strict = strict;
    opt.structured = format == "structured";

    std::string text;
    if (file == "-") {
        text = slurp(std::cin);
    } else {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            std::cerr << "cannot read " << file << "\n";
            return bslab::kExitParse;
        }
        text = slurp(in);
    }

    bslab::CommandResult r = bslab::run_command(text, opt);
    if (out.empty()) {
        std::cout << r.output;
    } else {
        std::ofstream o(out, std::ios::binary);
        if (!o) {
            std::cerr << "cannot write " << out << "\n";
            return bslab::kExitPrecondition;
        }
        o << r.output;
    }
    return r.exit;
}
