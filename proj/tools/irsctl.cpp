// irsctl: benchmarks, forwarder simulation, bug corpus and conformance.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "irs/conformance.hpp"
#include "irs/error.hpp"
#include "irs/harness.hpp"

#ifndef IRS_SOURCE_DIR
#define IRS_SOURCE_DIR "."
#endif

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        irs::fail(irs::Errc::Io, "cannot read " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Prints the report and mirrors it into $IRS_REPORT_DIR/<name>.txt.
int emit(const std::string& name, const std::string& text, bool ok) {
    std::cout << text;
    if (const char* dir = std::getenv("IRS_REPORT_DIR"); dir != nullptr && *dir != '\0') {
        fs::create_directories(dir);
        std::ofstream out(fs::path(dir) / (name + ".txt"), std::ios::binary);
        out << text;
    }
    return ok ? 0 : 1;
}

int run_conformance(const std::string& root, const std::string& manifest_path, const std::string& mutations,
                    bool collect_only) {
    namespace cf = irs::conformance;
    const cf::Codebase code = cf::load_codebase(root);
    if (collect_only) {
        return emit("collect", cf::format_collection(cf::collect(code)), true);
    }
    const std::string mpath = manifest_path.empty() ? (fs::path(root) / "conformance" / "manifest.txt").string()
                                                    : manifest_path;
    const auto manifest = cf::parse_manifest(read_file(mpath));
    const cf::Report report = cf::check(manifest, code);
    std::string text = report.format();
    bool ok = report.pass();
    std::size_t killed = 0;
    std::size_t total = 0;
    if (!mutations.empty() && fs::is_directory(mutations)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(mutations)) {
            if (e.path().extension() == ".mut") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files) {
            const auto outcome = cf::run_mutation(manifest, code, cf::parse_mutation(read_file(f)));
            ++total;
            killed += outcome.killed ? 1 : 0;
            text += std::string(outcome.killed ? "KILLED " : "SURVIVED ") + f.filename().string() + " -- " +
                    outcome.detail + "\n";
        }
        ok = ok && killed == total;
    }
    text += "assertions " + std::to_string(report.results.size()) + "\n";
    text += "failures " + std::to_string(report.failures()) + "\n";
    text += "mutations " + std::to_string(total) + "\n";
    text += "killed " + std::to_string(killed) + "\n";
    text += std::string("result ") + (ok ? "PASS" : "FAIL") + "\n";
    return emit("conformance", text, ok);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"irsctl"};
    app.require_subcommand(1);

    std::uint32_t iters = 1000;
    std::uint32_t pages = 1;
    auto* membench = app.add_subcommand("membench", "map/remap/unmap timing");
    membench->add_option("--iters", iters, "iterations")->check(CLI::PositiveNumber);
    membench->add_option("--pages", pages, "pages per mapping")->check(CLI::PositiveNumber);

    std::string scenario_path;
    bool restricted = false;
    bool unrestricted = false;
    std::optional<std::uint64_t> seed;
    auto* forward = app.add_subcommand("forward", "two-NIC forwarder simulation");
    forward->add_option("--scenario", scenario_path, "injection schedule")->required()->check(CLI::ExistingFile);
    auto* r_flag = forward->add_flag("--restricted", restricted, "in-order buffer recycling");
    forward->add_flag("--unrestricted", unrestricted, "buffer pool recycling")->excludes(r_flag);
    forward->add_option("--seed", seed, "seed for randomized injection");

    auto* bugcorpus = app.add_subcommand("bugcorpus", "replay known driver bugs against the device model");

    std::string root = IRS_SOURCE_DIR;
    std::string manifest;
    std::string mutations;
    bool collect_only = false;
    auto* conformance = app.add_subcommand("conformance", "check the assertion manifest");
    conformance->add_option("--manifest", manifest, "manifest file");
    conformance->add_option("--root", root, "source tree");
    conformance->add_option("--mutations", mutations, "directory of .mut files to run");
    conformance->add_flag("--collect", collect_only, "print the collected markers and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*membench) {
            const auto r = irs::harness::membench(iters, pages);
            return emit("membench", r.text(), r.ok);
        }
        if (*forward) {
            irs::harness::Scenario sc = irs::harness::parse_scenario(read_file(scenario_path));
            if (restricted) {
                sc.restricted = true;
            } else if (unrestricted) {
                sc.restricted = false;
            }
            if (seed) {
                sc.seed = *seed;
            }
            const auto r = irs::harness::forward(sc);
            return emit("forward", r.text(), r.ok);
        }
        if (*bugcorpus) {
            const auto r = irs::harness::bugcorpus();
            return emit("bugcorpus", r.text(), r.ok);
        }
        if (*conformance) {
            if (mutations.empty() && manifest.empty()) {
                mutations = (fs::path(root) / "conformance" / "mutations").string();
            }
            return run_conformance(root, manifest, mutations, collect_only);
        }
    } catch (const irs::Error& e) {
        std::cerr << "error: " << irs::to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    }
    return 0;
}
