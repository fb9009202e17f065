// seqcurve: sequential ROC/PPV/NPV estimation, asymptotic covariances,
// limit-process simulation, Monte Carlo validation, and group-sequential design.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqcurve/asymptotics.hpp"
#include "seqcurve/config.hpp"
#include "seqcurve/curves.hpp"
#include "seqcurve/empirical.hpp"
#include "seqcurve/gaussian_limits.hpp"
#include "seqcurve/gs_design.hpp"
#include "seqcurve/montecarlo.hpp"
#include "seqcurve/version.hpp"

namespace sc = seqcurve;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = 0;
};

// Distinguishes bad configuration (exit 2) from numeric failure (exit 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_output(const CommonOpts& opts, const sc::Config& cfg,
                          const std::string& subcommand, const std::string& filename,
                          std::uint64_t seed) {
    std::filesystem::create_directories(opts.out_dir);
    const auto path = std::filesystem::path(opts.out_dir) / filename;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# seqcurve " << sc::kVersion << "\n";
    out << "# subcommand: " << subcommand << "\n";
    out << "# config_digest: " << std::hex << cfg.digest() << std::dec << "\n";
    out << "# seed: " << seed << "\n";
    out << std::setprecision(12);
    std::cerr << "writing " << path.string() << "\n";
    return out;
}

sc::Config load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    try {
        return sc::Config::from_file(opts.config_path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

std::uint64_t effective_seed(const CommonOpts& opts, const sc::Config& cfg) {
    if (opts.seed_given) return opts.seed;
    return static_cast<std::uint64_t>(cfg.get_int("seed", 1));
}

std::vector<sc::CovProbe> probes_from_config(const sc::Config& cfg) {
    const auto idx = cfg.get_double_list("probe_index");
    const auto rd = cfg.get_double_list("probe_r_d");
    const auto rdb = cfg.get_double_list("probe_r_dbar");
    if (idx.empty() || idx.size() != rd.size() || idx.size() != rdb.size())
        throw ConfigError("probe_index, probe_r_d, probe_r_dbar must be equal-length lists");
    std::vector<sc::CovProbe> probes;
    for (std::size_t i = 0; i < idx.size(); ++i) probes.push_back({idx[i], rd[i], rdb[i]});
    return probes;
}

std::vector<sc::CovProbe> probes_from_csv(const std::string& path, std::string& kind_out) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open probes file: " + path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<sc::CovProbe> probes;
    kind_out.clear();
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "index,kind,r_D,r_Dbar")
                throw ConfigError(path + ":1: header 'index,kind,r_D,r_Dbar' required");
            continue;
        }
        std::istringstream row(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(row, tok, ',')) cols.push_back(tok);
        if (cols.size() != 4)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 4 columns");
        if (kind_out.empty()) kind_out = cols[1];
        else if (kind_out != cols[1])
            throw ConfigError(path + ":" + std::to_string(lineno) + ": mixed probe kinds");
        try {
            probes.push_back({std::stod(cols[0]), std::stod(cols[2]), std::stod(cols[3])});
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    if (probes.empty()) throw ConfigError(path + ": no probes");
    return probes;
}

void write_matrix_csv(std::ofstream& out, const sc::Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) out << (j ? "," : "") << m(i, j);
        out << "\n";
    }
}

sc::GSDesignSpec design_spec_from_config(const sc::Config& cfg) {
    sc::GSDesignSpec spec;
    spec.rho = cfg.get_double("rho", spec.rho);
    spec.u_npv = cfg.get_double("u_npv", spec.u_npv);
    spec.u_ppv = cfg.get_double("u_ppv", spec.u_ppv);
    spec.npv0 = cfg.get_double("npv0", spec.npv0);
    spec.ppv0 = cfg.get_double("ppv0", spec.ppv0);
    spec.npv1 = cfg.get_double("npv1", spec.npv1);
    spec.ppv1 = cfg.get_double("ppv1", spec.ppv1);
    spec.alpha = cfg.get_double("alpha", spec.alpha);
    spec.power = cfg.get_double("power", spec.power);
    spec.J = static_cast<int>(cfg.get_int("looks", spec.J));
    spec.gamma_e = cfg.get_double("gamma_efficacy", spec.gamma_e);
    spec.gamma_f = cfg.get_double("gamma_futility", spec.gamma_f);
    spec.control_case_ratio = cfg.get_double("control_case_ratio", spec.control_case_ratio);
    const auto frac = cfg.get_double_list("info_fractions");
    if (!frac.empty()) spec.info_fractions = frac;
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

// ---- subcommands ----------------------------------------------------------

int run_curve(const CommonOpts& opts) {
    const sc::Config cfg = load_config(opts);
    sc::MarkerSample sample;
    try {
        sample = sc::load_marker_csv(cfg.require_string("sample_csv"));
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    const std::string kind = cfg.get_string("curve", "roc");
    const sc::Prevalence rho(cfg.get_double("rho", 0.2));
    const sc::SequentialView view{cfg.get_double("r_d", 1.0), cfg.get_double("r_dbar", 1.0)};
    const double lo = cfg.get_double("grid_start", 0.05);
    const double hi = cfg.get_double("grid_stop", 0.95);
    const auto n = static_cast<std::size_t>(cfg.get_int("grid_points", 19));
    if (!(lo > 0.0 && lo < hi && hi < 1.0) || n < 1) throw ConfigError("bad grid");
    auto out = open_output(opts, cfg, "curve", "curve.csv", effective_seed(opts, cfg));
    out << "# curve: " << kind << " (plug-in step-function estimate)\n";
    out << "index,estimate\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (n == 1) ? lo : lo + (hi - lo) * double(i) / double(n - 1);
        double value;
        if (kind == "roc") value = sc::roc_empirical(sample, view, x);
        else if (kind == "roc_inverse") value = sc::roc_inverse_empirical(sample, view, x);
        else if (kind == "ppv_fpf") value = sc::ppv_fpf_empirical(sample, view, rho, x);
        else if (kind == "npv_fpf") value = sc::npv_fpf_empirical(sample, view, rho, x);
        else if (kind == "ppv_pct") value = sc::ppv_pct(sample, view, rho, x);
        else if (kind == "npv_pct") value = sc::npv_pct(sample, view, rho, x);
        else throw ConfigError("unknown curve kind: " + kind);
        out << x << "," << value << "\n";
    }
    return 0;
}

int run_covariance(const CommonOpts& opts) {
    const sc::Config cfg = load_config(opts);
    std::string kind;
    const auto probes = probes_from_csv(cfg.require_string("probes_csv"), kind);
    const sc::BinormalModel model(cfg.get_double("mu_d", 1.0), cfg.get_double("sigma_d", 1.0));
    const double rho = cfg.get_double("rho", 0.2);
    const auto n_d = static_cast<std::size_t>(cfg.get_int("n_d", 200));
    const auto n_dbar = static_cast<std::size_t>(cfg.get_int("n_dbar", 200));
    const sc::StudyShape shape(n_d, n_dbar);
    const std::string scale = cfg.get_string("scale", "estimator");
    const sc::BinormalOracle oracle(model, rho);
    sc::Matrix m;
    if (kind == "fpf" && scale == "process") {
        m = sc::roc_process_cov(oracle, probes, shape.lambda());
    } else if (kind == "fpf") {
        m = sc::roc_estimator_cov(oracle, probes, shape);
    } else if (kind == "fpf_ppv") {
        m = sc::ppv_fpf_cov(oracle, rho, probes, shape);
    } else if (kind == "percentile_ppv") {
        m = sc::ppv_pct_cov(oracle, rho, probes, shape);
    } else if (kind == "percentile_npv") {
        m = sc::npv_pct_cov(oracle, rho, probes, shape);
    } else {
        throw ConfigError("unsupported probe kind/scale: " + kind + "/" + scale);
    }
    auto out = open_output(opts, cfg, "covariance", "covariance.csv", effective_seed(opts, cfg));
    out << "# provenance: closed-form asymptotic covariance\n";
    out << "# model: mu_d=" << model.mu_D << " sigma_d=" << model.sigma_D << " rho=" << rho << "\n";
    out << "# lambda: " << shape.lambda() << " scale: " << scale << " kind: " << kind << "\n";
    write_matrix_csv(out, m);
    return 0;
}

int run_simulate_limits(const CommonOpts& opts) {
    const sc::Config cfg = load_config(opts);
    const std::uint64_t seed = effective_seed(opts, cfg);
    const auto draws = static_cast<std::size_t>(cfg.get_int("draws", 20000));
    const std::string family = cfg.get_string("family", "roc");
    const std::string construction_name = cfg.get_string("construction", "cholesky");
    const auto construction = construction_name == "sheet" ? sc::KieferConstruction::BrownianSheet
                                                           : sc::KieferConstruction::Cholesky;
    std::vector<std::vector<double>> samples(draws);
    std::size_t dim;
    bool jitter = false;
    if (family == "kiefer") {
        sc::GridSpec grid;
        grid.index_grid = cfg.get_double_list("index_grid");
        grid.time_grid = cfg.get_double_list("time_grid");
        const sc::KieferSampler sampler(grid, seed, construction);
        jitter = sampler.jitter_applied();
        dim = grid.index_grid.size() * grid.time_grid.size();
        sc::parallel_for(draws, opts.threads,
                         [&](std::size_t d) { samples[d] = sampler.draw(d).values; });
    } else {
        const auto probes = probes_from_config(cfg);
        const sc::BinormalModel model(cfg.get_double("mu_d", 1.0), cfg.get_double("sigma_d", 1.0));
        const double rho = cfg.get_double("rho", 0.2);
        const double lambda = cfg.get_double("lambda", 1.0);
        const sc::BinormalOracle oracle(model, rho);
        dim = probes.size();
        if (family == "roc") {
            const sc::RocLimitSampler sampler(oracle, probes, lambda, seed);
            jitter = sampler.jitter_applied();
            sc::parallel_for(draws, opts.threads,
                             [&](std::size_t d) { samples[d] = sampler.draw(d).values; });
        } else if (family == "ppv_pct") {
            const sc::PpvPctLimitSampler sampler(oracle, rho, probes, lambda, seed);
            jitter = sampler.jitter_applied();
            sc::parallel_for(draws, opts.threads,
                             [&](std::size_t d) { samples[d] = sampler.draw_ppv(d).values; });
        } else {
            throw ConfigError("unknown family: " + family);
        }
    }
    // summary: empirical covariance with Monte Carlo SEs
    std::vector<double> mean(dim, 0.0);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < dim; ++i) mean[i] += s[i];
    for (auto& v : mean) v /= static_cast<double>(draws);
    sc::Matrix cov(dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i; j < dim; ++j) {
            double acc = 0.0;
            for (const auto& s : samples) acc += (s[i] - mean[i]) * (s[j] - mean[j]);
            cov(i, j) = cov(j, i) = acc / static_cast<double>(draws - 1);
        }
    auto out = open_output(opts, cfg, "simulate-limits", "limit_covariance.csv", seed);
    out << "# provenance: Monte Carlo over " << draws << " draws (" << construction_name << ")\n";
    out << "# jitter_applied: " << (jitter ? "true" : "false") << "\n";
    out << "row,col,covariance,mc_se\n";
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            out << i << "," << j << "," << cov(i, j) << ","
                << std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) /
                             static_cast<double>(draws))
                << "\n";
    return 0;
}

int run_validate_table1(const CommonOpts& opts) {
    const sc::Config cfg = load_config(opts);
    sc::SimScenario scenario;
    scenario.model = sc::BinormalModel(cfg.get_double("mu_d", 1.0), cfg.get_double("sigma_d", 1.0));
    scenario.rho = cfg.get_double("rho", 0.2);
    scenario.n_D = static_cast<std::size_t>(cfg.get_int("n_d", 200));
    scenario.n_Dbar = static_cast<std::size_t>(cfg.get_int("n_dbar", 200));
    scenario.replications = static_cast<std::size_t>(cfg.get_int("reps", 10000));
    scenario.seed = effective_seed(opts, cfg);
    scenario.probes = probes_from_config(cfg);
    const std::string process = cfg.get_string("process", "roc");
    sc::SimReport report;
    if (process == "roc") report = sc::run_table1(scenario, opts.threads);
    else if (process == "ppv_fpf")
        report = sc::run_ppv_validation(scenario, sc::IndexKind::FPF, opts.threads);
    else if (process == "ppv_pct")
        report = sc::run_ppv_validation(scenario, sc::IndexKind::Percentile, opts.threads);
    else throw ConfigError("unknown process: " + process);
    auto out = open_output(opts, cfg, "validate-table1", "table1_report.csv", scenario.seed);
    out << "# provenance: Monte Carlo (" << scenario.replications
        << " replicates) vs closed form; coverage against theoretical-variance normal\n";
    out << "probe,mean,cov5,cov25,cov50,cov75,cov95\n";
    for (std::size_t p = 0; p < scenario.probes.size(); ++p) {
        out << p << "," << report.mean[p];
        for (int c = 0; c < 5; ++c) out << "," << report.coverage[p][c];
        out << "\n";
    }
    out << "# observed covariance (Monte Carlo)\n";
    write_matrix_csv(out, report.observed_cov);
    out << "# theoretical covariance (closed form)\n";
    write_matrix_csv(out, report.theoretical_cov);
    out << "# Monte Carlo SE of each observed entry\n";
    write_matrix_csv(out, report.mc_se);
    return 0;
}

int run_design(const CommonOpts& opts) {
    const sc::Config cfg = load_config(opts);
    const sc::GSDesignSpec spec = design_spec_from_config(cfg);
    const sc::BinormalModel alt =
        sc::calibrate_binormal(spec.rho, spec.u_npv, spec.npv1, spec.u_ppv, spec.ppv1);
    const std::size_t n_fixed = sc::fixed_sample_size(spec);
    const sc::Boundaries bounds = sc::boundaries_from_spending(spec);
    const std::size_t n_max = sc::max_sample_size(spec);
    json j;
    j["schema"] = 1;
    j["n_fixed"] = n_fixed;
    j["n_max"] = n_max;
    j["inflation_factor"] = bounds.inflation;
    j["power_at_n_fixed"] = sc::joint_power(spec, n_fixed);
    j["alternative_model"] = {{"mu_d", alt.mu_D}, {"sigma_d", alt.sigma_D}};
    j["efficacy_z"] = bounds.efficacy;
    j["futility_z"] = bounds.futility;
    j["info_fractions"] = spec.fractions();
    j["convention"] = {
        {"alpha_two_sided", spec.alpha},
        {"null_se", "mean-variance displays, alternative-model densities, null curve values"},
        {"spending", "Hwang-Shih-DeCani"},
        {"gamma_efficacy", spec.gamma_e},
        {"gamma_futility", spec.gamma_f},
        {"futility", "binding"}};
    auto out = open_output(opts, cfg, "design", "design.json", effective_seed(opts, cfg));
    out << j.dump(2) << "\n";
    // human-readable summary
    std::cout << "fixed-sample n_D = " << n_fixed << ", maximum n_D = " << n_max
              << " (inflation " << std::setprecision(5) << bounds.inflation << ")\n";
    std::cout << "look  frac    efficacy  futility\n";
    const auto frac = spec.fractions();
    for (std::size_t k = 0; k < frac.size(); ++k)
        std::cout << std::setw(4) << (k + 1) << "  " << std::fixed << std::setprecision(3)
                  << frac[k] << "  " << std::setw(8) << bounds.efficacy[k] << "  " << std::setw(8)
                  << bounds.futility[k] << "\n";
    std::cout.unsetf(std::ios::fixed);
    return 0;
}

int run_oc_sim(const CommonOpts& opts) {
    const sc::Config cfg = load_config(opts);
    const sc::GSDesignSpec base = design_spec_from_config(cfg);
    const auto reps = static_cast<std::size_t>(cfg.get_int("reps", 10000));
    const std::uint64_t seed = effective_seed(opts, cfg);
    std::vector<int> looks;
    for (double v : cfg.get_double_list("looks_list")) looks.push_back(static_cast<int>(v));
    if (looks.empty()) looks = {1, 2, 3, 4};
    // scenario truth cells: all combinations of null/alternative curve values
    const std::vector<std::pair<double, double>> cells = {{base.npv0, base.ppv0},
                                                          {base.npv1, base.ppv0},
                                                          {base.npv0, base.ppv1},
                                                          {base.npv1, base.ppv1}};
    auto out = open_output(opts, cfg, "oc-sim", "oc_table.csv", seed);
    out << "# provenance: Monte Carlo operating characteristics, " << reps
        << " replicates per cell\n";
    out << "looks,npv_true,ppv_true,p_reject,expected_n_d\n";
    std::uint64_t cell_id = 0;
    for (int j : looks) {
        for (const auto& [npv_true, ppv_true] : cells) {
            sc::GSDesignSpec spec = base;
            spec.J = j;
            const auto oc =
                sc::simulate_oc(spec, npv_true, ppv_true, reps, seed + cell_id, opts.threads);
            out << j << "," << npv_true << "," << ppv_true << "," << oc.p_reject << ","
                << oc.expected_n_D << "\n";
            std::cerr << "J=" << j << " truth=(" << npv_true << "," << ppv_true
                      << "): P(reject)=" << oc.p_reject << " E(n_D)=" << oc.expected_n_D << "\n";
            ++cell_id;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequential ROC/PPV/NPV estimation and group-sequential design"};
    app.require_subcommand(1);
    CommonOpts opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "run configuration file (key = value)");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--threads", opts.threads, "worker threads (0 = SEQCURVE_THREADS or auto)");
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& s) {
                opts.seed = s;
                opts.seed_given = true;
            },
            "seed override");
    };

    int (*handlers[])(const CommonOpts&) = {run_curve,           run_covariance, run_simulate_limits,
                                            run_validate_table1, run_design,     run_oc_sim};
    const char* names[] = {"curve",           "covariance", "simulate-limits",
                           "validate-table1", "design",     "oc-sim"};
    const char* descs[] = {"evaluate an empirical curve on a grid",
                           "closed-form asymptotic covariance matrix",
                           "simulate limit-process draws and summarize covariance",
                           "Monte Carlo validation of the scaled-process limits",
                           "group-sequential design: sizes and boundaries",
                           "simulated operating characteristics grid"};
    std::vector<CLI::App*> subs;
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descs[i]);
        add_common(sub);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        for (int i = 0; i < 6; ++i)
            if (subs[static_cast<std::size_t>(i)]->parsed()) return handlers[i](opts);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
