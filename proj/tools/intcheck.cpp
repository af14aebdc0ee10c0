// intcheck: integrability checks for Hamiltonian systems given as spec files.
//
//   intcheck check <spec>                   full pipeline, JSON report
//   intcheck flow <spec> --field H --t 10   trajectory CSV
//   intcheck lattice <spec>                 period lattice only
//   intcheck report --schema                JSON Schema of the report
//
// Exit codes: 0 passed, 1 input error, 2 a check failed, 3 inconclusive.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "integ/errors.hpp"
#include "integ/pipeline.hpp"
#include "integ/report.hpp"
#include "integ/spec_file.hpp"

namespace fs = std::filesystem;
using namespace integ;

namespace {

struct Common {
    std::string spec_path;
    cli::Overrides overrides;
    std::string out_dir;
    bool serial = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("spec", c.spec_path, "System spec file")->required();
    sub->add_option("--seed", c.overrides.seed, "Sampling seed (overrides the spec file)");
    sub->add_option("--samples", c.overrides.samples, "Number of sample points");
    sub->add_option("--tol-involution", c.overrides.involution);
    sub->add_option("--tol-closure", c.overrides.closure);
    sub->add_option("--tol-lattice", c.overrides.lattice);
    sub->add_option("--tol-darboux", c.overrides.darboux);
    sub->add_option("--tol-casimir", c.overrides.casimir);
    sub->add_option("--tol-connection", c.overrides.connection);
    sub->add_option("--out", c.out_dir, "Write output files into this directory instead of stdout");
    sub->add_flag("--serial", c.serial, "Disable OpenMP in the sampling kernels");
}

cli::SystemSpec load(const Common& c) {
    auto spec = cli::load_spec(c.spec_path);
    cli::apply_overrides(spec, c.overrides);
    return spec;
}

void emit(const Common& c, const std::string& filename, const std::string& text) {
    if (c.out_dir.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(c.out_dir);
    const fs::path path = fs::path(c.out_dir) / filename;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    std::cerr << "wrote " << path.string() << "\n";
}

std::string stem_of(const cli::SystemSpec& spec) {
    return spec.name.empty() ? fs::path(spec.path).stem().string() : spec.name;
}

int report_outcome(const Common& c, const cli::SystemSpec& spec, const cli::CheckOutcome& outcome,
                   const std::string& suffix) {
    emit(c, stem_of(spec) + suffix, outcome.report.dump(2) + "\n");
    std::cerr << spec.name << ": " << outcome.report.at("status").get<std::string>() << "\n";
    for (const auto& [name, st] : outcome.report.at("stages").items()) {
        std::cerr << "  " << name << ": " << st.at("status").get<std::string>();
        if (st.contains("error")) std::cerr << " (" << st.at("error").get<std::string>() << ")";
        else if (st.contains("reason") && !st.at("reason").get<std::string>().empty())
            std::cerr << " (" << st.at("reason").get<std::string>() << ")";
        std::cerr << "\n";
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical checks of integrability hypotheses for Hamiltonian systems"};
    app.set_version_flag("--version", std::string(cli::kToolVersion));
    app.require_subcommand(1);

    Common check_opts, flow_opts, lattice_opts;
    auto* check = app.add_subcommand("check", "Run the full check pipeline and write a JSON report");
    add_common(check, check_opts);

    auto* flow = app.add_subcommand("flow", "Integrate one Hamiltonian field and write a trajectory CSV");
    add_common(flow, flow_opts);
    std::string field;
    double t = 0;
    flow->add_option("--field", field, "Function or Casimir name")->required();
    flow->add_option("--t", t, "Integration time (may be negative)")->required();

    auto* lattice = app.add_subcommand("lattice", "Detect the period lattice at the base point");
    add_common(lattice, lattice_opts);

    auto* report = app.add_subcommand("report", "Report utilities");
    bool schema = false;
    report->add_flag("--schema", schema, "Print the JSON Schema of the report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitInputError;
    }

    try {
        if (*check) {
            const auto spec = load(check_opts);
            const auto exec = check_opts.serial ? Execution::Serial : Execution::Parallel;
            return report_outcome(check_opts, spec, cli::run_check(spec, exec), ".report.json");
        }
        if (*lattice) {
            const auto spec = load(lattice_opts);
            const auto exec = lattice_opts.serial ? Execution::Serial : Execution::Parallel;
            return report_outcome(lattice_opts, spec, cli::run_lattice(spec, exec), ".lattice.json");
        }
        if (*flow) {
            const auto spec = load(flow_opts);
            const auto traj = cli::run_flow(spec, field, t);
            std::ostringstream csv;
            flows::write_trajectory_csv(csv, traj);
            emit(flow_opts, stem_of(spec) + "." + field + ".csv", csv.str());
            return cli::kExitPassed;
        }
        if (*report) {
            if (!schema) {
                std::cerr << "report: nothing to do (try --schema)\n";
                return cli::kExitInputError;
            }
            std::cout << cli::report_schema();
            return cli::kExitPassed;
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return cli::kExitInputError;
    } catch (const IntegrationError& e) {
        std::cerr << "integration error: " << e.what() << "\n";
        return cli::kExitFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitFailed;
    }
    return cli::kExitInputError;
}
