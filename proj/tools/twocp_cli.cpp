// Command-line driver: batch orchestration for the two-component plasma
// toolkit. Subcommands: energy-check, sample, zn, digraph, profile, gmc,
// tail. Every run writes a manifest echoing the fully resolved
// configuration; artifacts are written atomically and stamped with
// (seed, config hash, version).
//
// Exit codes: 0 success, 1 numerical failure, 2 usage/validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "twocp/digraph.hpp"
#include "twocp/empirical.hpp"
#include "twocp/energy.hpp"
#include "twocp/geometry.hpp"
#include "twocp/gmc.hpp"
#include "twocp/io.hpp"
#include "twocp/partition.hpp"
#include "twocp/sampler.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace twocp;

namespace {

struct RunContext {
    std::string command;
    std::uint64_t seed = 1;
    fs::path out_dir = "out";
    std::size_t workers = 1;
    json config; // fully resolved option values
    std::vector<std::string> artifacts;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    std::string config_hash() const { return hex64(fnv1a(config.dump())); }

    std::string stamp_comment() const {
        return "# seed=" + std::to_string(seed) + "\n# config_hash=" +
               config_hash() + "\n# version=" + kVersion + "\n";
    }

    json meta() const {
        return json{{"seed", seed},
                    {"config_hash", config_hash()},
                    {"version", kVersion}};
    }

    void write_artifact(const std::string& name, const std::string& body) {
        fs::create_directories(out_dir);
        atomic_write_file(out_dir / name, body);
        artifacts.push_back(name);
    }

    void finish() {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        json manifest{{"command", command},
                      {"version", kVersion},
                      {"seed", seed},
                      {"config", config},
                      {"config_hash", config_hash()},
                      {"artifacts", artifacts},
                      {"workers", workers},
                      {"wall_time_ms", ms}};
        fs::create_directories(out_dir);
        atomic_write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    }
};

// Flags override config-file values: options from the file are injected in
// front of the user's arguments and single-value options take the last
// occurrence.
std::vector<std::string> merge_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") config_path = args[i + 1];
    if (config_path.empty()) return args;
    std::ifstream is(config_path);
    if (!is) throw CLI::ValidationError("--config", "cannot open " + config_path);
    json cfg = json::parse(is);
    if (args.empty()) return args;
    const std::string sub = args[0];
    if (!cfg.contains(sub)) return args;
    std::vector<std::string> merged{sub};
    for (const auto& [key, value] : cfg[sub].items()) {
        merged.push_back("--" + key);
        if (value.is_string())
            merged.push_back(value.get<std::string>());
        else
            merged.push_back(value.dump());
    }
    merged.insert(merged.end(), args.begin() + 1, args.end());
    return merged;
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) s += ',';
        s += cells[i];
    }
    s += '\n';
    return s;
}

SignedConfig random_neutral_config(Rng& rng, std::size_t N) {
    for (;;) {
        std::vector<Point2> p(N), n(N);
        for (auto& a : p) a = {rng.uniform01(), rng.uniform01()};
        for (auto& a : n) a = {rng.uniform01(), rng.uniform01()};
        SignedConfig c(std::move(p), std::move(n));
        if (c.simple()) return c;
    }
}

std::string breakdown_with_meta(const EnergyBreakdown& b, const RunContext& ctx) {
    std::string s = "{\"meta\":" + ctx.meta().dump() + ",";
    const std::string inner = energy_breakdown_json(b);
    s += inner.substr(1); // merge objects
    return s;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_energy_check(RunContext& ctx, const std::string& points_file,
                     std::size_t n_random, std::size_t pairs,
                     const QuadratureBudget& budget) {
    if (!points_file.empty()) {
        std::ifstream is(points_file);
        if (!is) throw std::invalid_argument("cannot open " + points_file);
        const SignedConfig c = read_config_csv(is);
        if (c.total() == 0)
            throw std::invalid_argument("energy-check: empty points file");
        const auto b = energy_identity_check(c, budget);
        const std::string body = breakdown_with_meta(b, ctx) + "\n";
        ctx.write_artifact("energy_check.json", body);
        std::cout << body;
        return (std::abs(b.residual) <= b.quad_error_bound) ? 0 : 1;
    }
    if (n_random == 0)
        throw std::invalid_argument(
            "energy-check: provide --points FILE or --n-random COUNT");
    Rng rng = Rng::stream(ctx.seed, 0xec);
    std::string body = "{\"meta\":" + ctx.meta().dump() + ",\"breakdowns\":[";
    bool all_ok = true;
    double worst_residual = 0.0;
    for (std::size_t i = 0; i < n_random; ++i) {
        const std::size_t N = pairs > 0 ? pairs : 1 + rng.below(10);
        const SignedConfig c = random_neutral_config(rng, N);
        const auto b = energy_identity_check(c, budget);
        if (i) body += ',';
        body += energy_breakdown_json(b);
        all_ok = all_ok && std::abs(b.residual) <= b.quad_error_bound;
        worst_residual = std::max(worst_residual, std::abs(b.residual));
    }
    body += "],\"all_within_bound\":";
    body += all_ok ? "true" : "false";
    body += ",\"max_abs_residual\":" + format_double(worst_residual) + "}\n";
    ctx.write_artifact("energy_check.json", body);
    std::cout << body;
    return all_ok ? 0 : 1;
}

int cmd_sample(RunContext& ctx, const SimParams& params, std::size_t n_samples,
               std::size_t n_chains) {
    const auto runs = run_chains(params, n_chains, n_samples, {}, ctx.workers);
    json meta = ctx.meta();
    meta["params"] = ctx.config;
    const char* kind_names[3] = {"displace", "dipole", "resample"};
    for (std::size_t c = 0; c < runs.size(); ++c) {
        const auto& run = runs[c];
        const std::string suffix =
            n_chains == 1 ? "" : "_" + std::to_string(c);
        std::string csv = ctx.stamp_comment() + "step,W_N\n";
        for (std::size_t i = 0; i < run.energy_trace.size(); ++i) {
            const std::size_t step = params.burn_in + (i + 1) * params.thin;
            csv += csv_line(
                {std::to_string(step), format_double(run.energy_trace[i])});
        }
        ctx.write_artifact("trace" + suffix + ".csv", csv);

        std::ostringstream cfg;
        write_config_csv(cfg, run.final_state.config);
        ctx.write_artifact("final_config" + suffix + ".csv",
                           ctx.stamp_comment() + cfg.str());

        json chain_meta;
        for (int k = 0; k < 3; ++k) {
            chain_meta["proposed"][kind_names[k]] = run.proposed[k];
            chain_meta["accepted"][kind_names[k]] = run.accepted[k];
        }
        chain_meta["ess_energy"] = run.ess_energy;
        meta["chains"].push_back(chain_meta);
    }
    ctx.write_artifact("run_meta.json", meta.dump(2) + "\n");
    std::cout << meta.dump(2) << "\n";
    return 0;
}

int cmd_zn(RunContext& ctx, std::size_t N, double beta, const std::string& method,
           std::size_t n_samples, bool dipole) {
    ZEstimate z;
    if (dipole) {
        z = estimate_dipole_integral(N, beta, n_samples, ctx.seed, ctx.workers);
    } else {
        const ZMethod m =
            method == "direct" ? ZMethod::Direct : ZMethod::Importance;
        if (method != "direct" && method != "importance")
            throw std::invalid_argument("zn: method must be direct|importance");
        z = estimate_log_Z(N, beta, n_samples, m, ctx.seed, ctx.workers);
    }
    // append to the ledger, rewriting atomically
    const fs::path ledger = ctx.out_dir / "zn_ledger.csv";
    std::string body;
    if (fs::exists(ledger)) {
        std::ifstream is(ledger);
        std::stringstream ss;
        ss << is.rdbuf();
        body = ss.str();
    } else {
        body = "N,beta,method,log_Z,std_err,n_samples,seed\n";
    }
    body += csv_line({std::to_string(z.N), format_double(z.beta), z.method,
                      format_double(z.log_Z), format_double(z.std_err),
                      std::to_string(z.n_samples), std::to_string(ctx.seed)});
    ctx.write_artifact("zn_ledger.csv", body);

    json summary = ctx.meta();
    summary["N"] = z.N;
    summary["beta"] = z.beta;
    summary["method"] = z.method;
    summary["log_Z"] = z.log_Z;
    summary["std_err"] = z.std_err;
    summary["n_samples"] = z.n_samples;
    summary["log_K"] = log_K(z.N, z.beta, z.log_Z);
    ctx.write_artifact("zn_summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_digraph(RunContext& ctx, std::size_t M) {
    if (M < 2 || M % 2 != 0)
        throw std::invalid_argument("digraph: --M must be an even integer >= 2");
    std::string csv = ctx.stamp_comment() + "M,K,exact,bound,ratio\n";
    const auto census = enumerate_census(M);
    for (std::size_t K = 1; K <= M / 2; ++K) {
        const double bound = count_bound(M, K);
        const double exact = static_cast<double>(census[K - 1]);
        csv += csv_line({std::to_string(M), std::to_string(K),
                         std::to_string(census[K - 1]), format_double(bound),
                         format_double(exact / bound)});
    }
    ctx.write_artifact("digraph_counts.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_profile(RunContext& ctx, const SimParams& params, std::size_t n_samples,
                double R, std::size_t n_tags, bool iid) {
    std::vector<SignedConfig> trace;
    trace.reserve(n_samples);
    if (iid) {
        Rng rng = Rng::stream(ctx.seed, 0x1d);
        for (std::size_t s = 0; s < n_samples; ++s)
            trace.push_back(random_neutral_config(rng, params.N));
    } else {
        ChainState st = init_chain(params);
        for (std::size_t i = 0; i < params.burn_in; ++i) metropolis_step(st, params);
        for (std::size_t s = 0; s < n_samples; ++s) {
            for (std::size_t t = 0; t < params.thin; ++t) metropolis_step(st, params);
            trace.push_back(st.config);
        }
    }
    const auto prof =
        averaged_window_profile(trace, params.N, R, n_tags, ctx.seed ^ 0x7a67);
    std::string csv =
        ctx.stamp_comment() +
        "R,mean_intensity_plus,mean_intensity_minus,mean_abs_discrepancy,"
        "mean_logr_density,se_intensity_plus,se_intensity_minus,"
        "se_abs_discrepancy,se_logr_density,retained_area_fraction,n_samples\n";
    csv += csv_line({format_double(prof.R), format_double(prof.mean_intensity_plus),
                     format_double(prof.mean_intensity_minus),
                     format_double(prof.mean_abs_discrepancy),
                     format_double(prof.mean_logr_density),
                     format_double(prof.se_intensity_plus),
                     format_double(prof.se_intensity_minus),
                     format_double(prof.se_abs_discrepancy),
                     format_double(prof.se_logr_density),
                     format_double(prof.mean_retained_area_fraction),
                     std::to_string(prof.n_samples)});
    ctx.write_artifact("profile.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_gmc(RunContext& ctx, const GffKernelParams& kp, double beta, int k_max,
            std::size_t grid_n, std::size_t n_draws) {
    const auto table = chaos_moment_table(kp, beta, k_max, grid_n, n_draws, ctx.seed);
    std::string csv = ctx.stamp_comment() + "k,log_moment,std_err\n";
    for (const auto& e : table.entries)
        csv += csv_line({std::to_string(e.k), format_double(e.log_moment),
                         format_double(e.std_err)});
    ctx.write_artifact("moments.csv", csv);
    std::cout << csv;
    return 0;
}

MomentTable read_moment_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("tail: cannot open " + path);
    MomentTable table;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true; // "k,log_moment,std_err"
            continue;
        }
        std::istringstream ss(line);
        std::string k_s, m_s, e_s;
        std::getline(ss, k_s, ',');
        std::getline(ss, m_s, ',');
        std::getline(ss, e_s);
        table.entries.push_back(
            {std::stoi(k_s), std::stod(m_s), e_s.empty() ? 0.0 : std::stod(e_s)});
    }
    table.validate();
    return table;
}

int cmd_tail(RunContext& ctx, const std::string& table_file, double x_min,
             double x_max, std::size_t x_count) {
    const auto table = read_moment_table(table_file);
    std::string csv = ctx.stamp_comment() + "x,k_star,log_prob_bound\n";
    for (std::size_t i = 0; i < x_count; ++i) {
        const double t = x_count == 1 ? 0.0
                                      : static_cast<double>(i) /
                                            static_cast<double>(x_count - 1);
        const double x = x_min * std::pow(x_max / x_min, t);
        const auto [k_star, bound] = tail_bound(table, x);
        csv += csv_line(
            {format_double(x), std::to_string(k_star), format_double(bound)});
    }
    ctx.write_artifact("tail.csv", csv);
    std::cout << csv;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-component plasma toolkit"};
    app.require_subcommand(1);

    RunContext ctx;
    std::string out_dir = "out";
    std::string config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", ctx.seed, "global RNG seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", ctx.workers, "worker threads (results never depend on this)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--config", config_path,
                        "JSON config file; command-line flags override it");
    };

    // energy-check
    auto* ec = app.add_subcommand("energy-check",
                                  "pairwise vs field-quadrature energy identity");
    std::string ec_points;
    std::size_t ec_nrandom = 0, ec_pairs = 0;
    QuadratureBudget budget;
    ec->add_option("--points", ec_points, "CSV file (sign,x,y) with one configuration");
    ec->add_option("--n-random", ec_nrandom, "number of random configurations");
    ec->add_option("--pairs", ec_pairs, "pairs N for random configurations (0 = mixed 1..10)");
    ec->add_option("--target-rel", budget.target_rel, "relative error target");
    ec->add_option("--max-cells", budget.max_cells, "quadrature cell budget");
    ec->add_option("--halfwidth", budget.halfwidth, "integration square half-width override");
    add_common(ec);

    // sample
    auto* sm = app.add_subcommand("sample", "Metropolis chain for the Gibbs measure");
    SimParams sim;
    std::size_t sm_samples = 1000, sm_chains = 1;
    std::vector<double> sm_mix;
    sm->add_option("--N", sim.N, "pairs")->required();
    sm->add_option("--beta", sim.beta, "inverse temperature, beta < 2")->required();
    sm->add_option("--samples", sm_samples, "samples to record");
    sm->add_option("--chains", sm_chains, "independent chains (derived seeds)");
    sm->add_option("--burn-in", sim.burn_in, "burn-in steps");
    sm->add_option("--thin", sim.thin, "steps between samples");
    sm->add_option("--proposal-scale", sim.proposal_scale,
                   "displacement scale (0 = 0.25/sqrt(N))");
    sm->add_option("--mix", sm_mix, "move mix: displace dipole resample")
        ->expected(3);
    add_common(sm);

    // zn
    auto* zn = app.add_subcommand("zn", "partition function estimation");
    std::size_t zn_N = 1, zn_samples = 100000;
    double zn_beta = 1.0;
    std::string zn_method = "importance";
    bool zn_dipole = false;
    zn->add_option("--N", zn_N, "pairs")->required();
    zn->add_option("--beta", zn_beta, "inverse temperature, beta < 2")->required();
    zn->add_option("--method", zn_method, "direct|importance");
    zn->add_option("--samples", zn_samples, "Monte Carlo samples");
    zn->add_flag("--dipole", zn_dipole, "estimate the dipole-only integral instead");
    add_common(zn);

    // digraph
    auto* dg = app.add_subcommand("digraph", "nearest-neighbor digraph counts");
    std::size_t dg_M = 4;
    bool dg_enumerate = false;
    dg->add_flag("--enumerate", dg_enumerate, "exact enumeration (M <= 10)");
    dg->add_option("--M", dg_M, "number of vertices (even)")->required();
    add_common(dg);

    // profile
    auto* pf = app.add_subcommand("profile", "blown-up window statistics");
    SimParams pf_sim;
    std::size_t pf_samples = 200, pf_tags = 64;
    double pf_R = 2.0;
    bool pf_iid = false;
    pf->add_option("--N", pf_sim.N, "pairs")->required();
    pf->add_option("--beta", pf_sim.beta, "inverse temperature, beta < 2");
    pf->add_option("--samples", pf_samples, "trace samples");
    pf->add_option("--burn-in", pf_sim.burn_in, "burn-in steps");
    pf->add_option("--thin", pf_sim.thin, "steps between samples");
    pf->add_option("--R", pf_R, "window side after blow-up");
    pf->add_option("--tags", pf_tags, "tags per sample");
    pf->add_flag("--iid", pf_iid, "i.i.d.-uniform baseline instead of the chain");
    add_common(pf);

    // gmc
    auto* gm = app.add_subcommand("gmc", "chaos moment table from GFF draws");
    GffKernelParams kp;
    double gm_beta = 0.8;
    int gm_kmax = 4;
    std::size_t gm_grid = 64, gm_draws = 10000;
    gm->add_option("--beta", gm_beta, "chaos parameter, beta < sqrt(2)")->required();
    gm->add_option("--r", kp.r, "disk radius (> 2)");
    gm->add_option("--eps", kp.eps, "circle-average radius");
    gm->add_option("--n-angle", kp.n_angle, "angular quadrature order");
    gm->add_option("--grid", gm_grid, "grid resolution per side");
    gm->add_option("--draws", gm_draws, "Gaussian field draws");
    gm->add_option("--kmax", gm_kmax, "largest moment order");
    add_common(gm);

    // tail
    auto* tl = app.add_subcommand("tail", "Chebyshev tail bound scan");
    std::string tl_table;
    double tl_xmin = 2.0, tl_xmax = 20.0;
    std::size_t tl_count = 25;
    tl->add_option("--table", tl_table, "moment table CSV (k,log_moment,std_err)")
        ->required();
    tl->add_option("--x-min", tl_xmin, "scan start");
    tl->add_option("--x-max", tl_xmax, "scan end");
    tl->add_option("--x-count", tl_count, "scan points (1 = single x)");
    add_common(tl);

    std::vector<std::string> args;
    try {
        args = merge_config_args(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::vector<const char*> cargs{argv[0]};
    for (const auto& a : args) cargs.push_back(a.c_str());
    for (auto* sub : {ec, sm, zn, dg, pf, gm, tl})
        for (auto* opt : sub->get_options())
            if (opt->get_expected_min() <= 1)
                opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    ctx.out_dir = out_dir;

    try {
        int rc = 0;
        if (ec->parsed()) {
            ctx.command = "energy-check";
            ctx.config = {{"points", ec_points},    {"n_random", ec_nrandom},
                          {"pairs", ec_pairs},      {"target_rel", budget.target_rel},
                          {"max_cells", budget.max_cells},
                          {"halfwidth", budget.halfwidth},
                          {"seed", ctx.seed}};
            rc = cmd_energy_check(ctx, ec_points, ec_nrandom, ec_pairs, budget);
        } else if (sm->parsed()) {
            ctx.command = "sample";
            if (sm_mix.size() == 3) sim.move_mix = {sm_mix[0], sm_mix[1], sm_mix[2]};
            sim.seed = ctx.seed;
            sim.validate();
            ctx.config = {{"N", sim.N},
                          {"beta", sim.beta},
                          {"samples", sm_samples},
                          {"chains", sm_chains},
                          {"burn_in", sim.burn_in},
                          {"thin", sim.thin},
                          {"proposal_scale", sim.proposal_scale},
                          {"move_mix", sim.move_mix},
                          {"seed", ctx.seed},
                          };
            rc = cmd_sample(ctx, sim, sm_samples, sm_chains);
        } else if (zn->parsed()) {
            ctx.command = "zn";
            ctx.config = {{"N", zn_N},           {"beta", zn_beta},
                          {"method", zn_method}, {"samples", zn_samples},
                          {"dipole", zn_dipole}, {"seed", ctx.seed},
                          };
            rc = cmd_zn(ctx, zn_N, zn_beta, zn_method, zn_samples, zn_dipole);
        } else if (dg->parsed()) {
            ctx.command = "digraph";
            if (!dg_enumerate)
                throw std::invalid_argument("digraph: --enumerate is required");
            ctx.config = {{"M", dg_M}, {"enumerate", dg_enumerate}, {"seed", ctx.seed}};
            rc = cmd_digraph(ctx, dg_M);
        } else if (pf->parsed()) {
            ctx.command = "profile";
            pf_sim.seed = ctx.seed;
            if (!pf_iid) pf_sim.validate();
            ctx.config = {{"N", pf_sim.N},       {"beta", pf_sim.beta},
                          {"samples", pf_samples}, {"burn_in", pf_sim.burn_in},
                          {"thin", pf_sim.thin},   {"R", pf_R},
                          {"tags", pf_tags},       {"iid", pf_iid},
                          {"seed", ctx.seed}};
            rc = cmd_profile(ctx, pf_sim, pf_samples, pf_R, pf_tags, pf_iid);
        } else if (gm->parsed()) {
            ctx.command = "gmc";
            ctx.config = {{"beta", gm_beta}, {"r", kp.r},
                          {"eps", kp.eps},   {"n_angle", kp.n_angle},
                          {"grid", gm_grid}, {"draws", gm_draws},
                          {"kmax", gm_kmax}, {"seed", ctx.seed},
                          };
            rc = cmd_gmc(ctx, kp, gm_beta, gm_kmax, gm_grid, gm_draws);
        } else if (tl->parsed()) {
            ctx.command = "tail";
            ctx.config = {{"table", tl_table},   {"x_min", tl_xmin},
                          {"x_max", tl_xmax},    {"x_count", tl_count},
                          {"seed", ctx.seed}};
            rc = cmd_tail(ctx, tl_table, tl_xmin, tl_xmax, tl_count);
        }
        ctx.finish();
        return rc;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    }
}
