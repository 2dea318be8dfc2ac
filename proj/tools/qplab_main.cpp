// Command-line front end: one subcommand per experiment, a shared set of
// model/numerics flags, and JSON config documents that flags override.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "qplab/cli.hpp"

namespace {

struct FlagSet {
    std::string config_path;
    std::optional<double> epsilon, x, tol, divisor_floor, e_min, e_max, energy;
    std::optional<int> N, M, K, k_max, grid_points, phases, e_count, jobs;
    std::optional<long> n;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, side;
    std::vector<double> theta, alpha, rho0;
    bool dump_matrix = false, vectors = false;
};

void add_common_flags(CLI::App* cmd, FlagSet& f) {
    cmd->add_option("--config", f.config_path, "JSON config document (flags override it)");
    cmd->add_option("--out", f.out, "artifact directory (default: $QPLAB_OUT/<kind>-seed<seed>)");
    cmd->add_option("--seed", f.seed, "run seed, recorded in the manifest");
    cmd->add_option("--jobs", f.jobs, "worker threads");
    cmd->add_option("--epsilon", f.epsilon, "coupling of the hopping/potential term");
    cmd->add_option("--x", f.x, "phase of the long-range operator");
    cmd->add_option("--theta", f.theta, "phase of the dual operator (one value per dimension)");
    cmd->add_option("--alpha", f.alpha, "frequency vector (default: golden mean)");
    cmd->add_option("--N", f.N, "long-range box radius");
    cmd->add_option("--M", f.M, "dual interval radius");
    cmd->add_option("--K", f.K, "Fourier truncation of conjugacies");
    cmd->add_option("--n", f.n, "cocycle iteration count");
    cmd->add_option("--tol", f.tol, "solver residual target");
    cmd->add_option("--divisor-floor", f.divisor_floor, "small-divisor floor");
    cmd->add_option("--k-max", f.k_max, "resonance scan radius");
    cmd->add_option("--grid-points", f.grid_points, "theta grid (power of two)");
    cmd->add_option("--phases", f.phases, "phase sample count");
    cmd->add_option("--E", f.energy, "single energy (reduce)");
    cmd->add_option("--rho0", f.rho0, "initial exponent guesses (reduce)");
    cmd->add_option("--e-min", f.e_min, "energy sweep start");
    cmd->add_option("--e-max", f.e_max, "energy sweep end");
    cmd->add_option("--e-count", f.e_count, "energy sweep points");
    cmd->add_option("--side", f.side, "spectrum side: long | dual");
    cmd->add_flag("--dump-matrix", f.dump_matrix, "write the assembled matrix as triplets");
    cmd->add_flag("--vectors", f.vectors, "include eigenvector entries in spectrum output");
}

qplab::RunConfig assemble_config(const std::string& kind, const FlagSet& f) {
    qplab::RunConfig cfg;
    if (!f.config_path.empty()) {
        std::ifstream is(f.config_path);
        if (!is) throw std::runtime_error("cannot open config " + f.config_path);
        cfg = qplab::parse_config(nlohmann::json::parse(is), cfg);
    }
    cfg.kind = kind;
    if (f.epsilon) cfg.epsilon = *f.epsilon;
    if (f.x) cfg.x = qplab::wrap_unit(*f.x);
    if (!f.alpha.empty()) cfg.alpha = qplab::Frequency(f.alpha);
    if (!f.theta.empty()) cfg.theta = qplab::wrap_point(f.theta);
    if (f.N) cfg.N = *f.N;
    if (f.M) cfg.M = *f.M;
    if (f.K) cfg.K = *f.K;
    if (f.n) cfg.n = *f.n;
    if (f.tol) cfg.tol = *f.tol;
    if (f.divisor_floor) cfg.divisor_floor = *f.divisor_floor;
    if (f.k_max) cfg.k_max = *f.k_max;
    if (f.grid_points) cfg.grid_points = *f.grid_points;
    if (f.phases) cfg.phases = *f.phases;
    if (f.energy) cfg.energy = *f.energy;
    for (double r : f.rho0) cfg.rho0.push_back(qplab::Complex(r, 0.0));
    if (f.e_min) cfg.sweep.e_min = *f.e_min;
    if (f.e_max) cfg.sweep.e_max = *f.e_max;
    if (f.e_count) cfg.sweep.count = *f.e_count;
    if (f.side) cfg.side = *f.side;
    if (f.out) cfg.output.dir = *f.out;
    if (f.seed) cfg.seed = *f.seed;
    if (f.jobs) cfg.jobs = *f.jobs;
    cfg.output.dump_matrix = cfg.output.dump_matrix || f.dump_matrix;
    cfg.output.vectors = cfg.output.vectors || f.vectors;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for long-range quasi-periodic operators"};
    app.require_subcommand(1);

    std::map<std::string, FlagSet> flags;
    static const std::pair<const char*, const char*> kinds[] = {
        {"spectrum", "diagonalize one truncation and export the eigenpairs"},
        {"le-sweep", "Lyapunov spectrum of the dual cocycle over an energy grid"},
        {"rotation", "fibred rotation number over an energy grid"},
        {"reduce", "Newton reduction of the dual cocycle at one energy"},
        {"rigidity", "end-to-end rigidity experiment"},
        {"ids", "empirical integrated density of states with continuity scan"},
        {"decay", "decay-rate fits for every eigenvector of a truncation"},
        {"duality-compare", "Hausdorff distance between the two truncated spectra"},
        {"selftest", "deterministic smoke suite (eps = 0), byte-stable output"},
    };
    for (auto [name, desc] : kinds) add_common_flags(app.add_subcommand(name, desc), flags[name]);

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto* sub : app.get_subcommands()) {
            qplab::RunConfig cfg = assemble_config(sub->get_name(), flags[sub->get_name()]);
            int code = qplab::dispatch(cfg);
            if (code != 0) return code;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
