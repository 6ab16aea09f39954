// mazer: coupled-channel scattering of an ultracold two-level atom
// crossing a single-mode cavity.  Subcommands: eigen, scatter, scan,
// verify, init-config.
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mazer/claimcheck.hpp"
#include "mazer/dressed.hpp"
#include "mazer/modefn.hpp"
#include "mazer/numfmt.hpp"
#include "mazer/scatter.hpp"

namespace {

using mazer::format_double;

constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;
constexpr int kExitClaimFails = 3;

struct Options {
    std::string config_path;
    std::string mode_text = "mesa";
    double g = 1.0;
    double delta = 0.0;
    int n = 0;
    double mass = 0.5;
    double omega = 0.0;
    double L = 10.0;
    double k = 0.5;
    std::string solver = "analytic";
    int slices = 256;
    double grid_step = 0.0;  // 0 = auto (L/2048)
    std::vector<std::string> scans;
    std::string out_path;
    std::uint64_t seed = 12345;
    int jobs = 1;
};

struct ScanAxis {
    std::string var;
    double min = 0.0, max = 0.0;
    int count = 0;
    double at(int i) const { return min + (max - min) * i / (count - 1); }
};

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void apply_config_entry(Options& o, const std::string& key, const std::string& value,
                        int line_no) {
    try {
        if (key == "mode") o.mode_text = value;
        else if (key == "g") o.g = std::stod(value);
        else if (key == "delta") o.delta = std::stod(value);
        else if (key == "n") o.n = std::stoi(value);
        else if (key == "mass") o.mass = std::stod(value);
        else if (key == "omega") o.omega = std::stod(value);
        else if (key == "L") o.L = std::stod(value);
        else if (key == "k") o.k = std::stod(value);
        else if (key == "solver") o.solver = value;
        else if (key == "slices") o.slices = std::stoi(value);
        else if (key == "grid-step") o.grid_step = std::stod(value);
        else if (key == "scan") o.scans.push_back(value);
        else if (key == "out") o.out_path = value;
        else if (key == "seed") o.seed = std::stoull(value);
        else if (key == "jobs") o.jobs = std::stoi(value);
        else
            throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" +
                             key + "'");
    } catch (const std::invalid_argument&) {
        throw UsageError("config line " + std::to_string(line_no) + ": bad value for '" +
                         key + "'");
    } catch (const std::out_of_range&) {
        throw UsageError("config line " + std::to_string(line_no) + ": value out of range for '" +
                         key + "'");
    }
}

void load_config_file(Options& o, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) +
                             ": expected 'key = value'");
        apply_config_entry(o, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
    }
}

ScanAxis parse_scan_spec(const std::string& spec) {
    ScanAxis axis;
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
        if (c == ':') { parts.push_back(cur); cur.clear(); }
        else cur += c;
    }
    parts.push_back(cur);
    if (parts.size() != 4)
        throw UsageError("bad --scan spec '" + spec + "', expected VAR:MIN:MAX:COUNT");
    axis.var = parts[0];
    try {
        axis.min = std::stod(parts[1]);
        axis.max = std::stod(parts[2]);
        axis.count = std::stoi(parts[3]);
    } catch (const std::exception&) {
        throw UsageError("bad numeric field in --scan spec '" + spec + "'");
    }
    if (axis.count < 2) throw UsageError("--scan count must be >= 2 in '" + spec + "'");
    if (!(axis.min < axis.max))
        throw UsageError("--scan requires min < max in '" + spec + "'");
    return axis;
}

bool color_enabled() {
    return std::getenv("MAZER_NO_COLOR") == nullptr && isatty(fileno(stderr));
}

mazer::ManifoldParams make_params(const Options& o) {
    return mazer::ManifoldParams(o.g, o.delta, o.n, o.mass, o.omega);
}

void echo_effective_config(const Options& o, const std::string& command) {
    std::ostringstream s;
    s << "# effective config: command=" << command << " mode=" << o.mode_text
      << " g=" << format_double(o.g) << " delta=" << format_double(o.delta) << " n=" << o.n
      << " mass=" << format_double(o.mass) << " omega=" << format_double(o.omega)
      << " L=" << format_double(o.L) << " k=" << format_double(o.k) << " solver=" << o.solver
      << " slices=" << o.slices << " grid-step=" << format_double(o.grid_step)
      << " seed=" << o.seed << " jobs=" << o.jobs;
    for (const auto& sc : o.scans) s << " scan=" << sc;
    if (!o.out_path.empty()) s << " out=" << o.out_path;
    std::cerr << s.str() << "\n";
}

void write_output(const Options& o, const std::string& payload) {
    if (o.out_path.empty()) {
        std::cout << payload;
        std::cout.flush();
        return;
    }
    std::ofstream out(o.out_path, std::ios::binary);
    if (!out) throw UsageError("cannot open output file '" + o.out_path + "'");
    out << payload;
}

mazer::ScatterResult solve_one(const Options& o, const mazer::ManifoldParams& params,
                               const mazer::ModeExpr& mode, double L, double k) {
    if (o.solver == "analytic") {
        if (!mode.is_mesa())
            throw UsageError("solver 'analytic' supports only the mesa mode");
        return mazer::mesa_scatter(params, L, k);
    }
    mazer::ScatterConfig config(params, mode, L, k);
    config.slices = o.slices;
    config.grid_step = o.grid_step;
    if (o.solver == "bare") return mazer::numeric_scatter_bare(config);
    if (o.solver == "dressed-derived") {
        config.variant = mazer::DressedVariant::Derived;
        return mazer::numeric_scatter_dressed(config);
    }
    if (o.solver == "dressed-literal") {
        config.variant = mazer::DressedVariant::CommentLiteral;
        return mazer::numeric_scatter_dressed(config);
    }
    throw UsageError("unknown solver '" + o.solver +
                     "' (expected analytic, bare, dressed-derived, dressed-literal)");
}

const char* kScatterCsvHeader =
    "k,delta,g,n,mass,L,mode,solver,P_refl_e,P_refl_g,P_trans_e,P_trans_g,P_emission,flux_error";

std::string scatter_csv_row(const Options& o, const mazer::ScatterResult& r,
                            double k, double delta, double L) {
    std::string row;
    row += format_double(k) + "," + format_double(delta) + "," + format_double(o.g) + "," +
           std::to_string(o.n) + "," + format_double(o.mass) + "," + format_double(L) + "," +
           o.mode_text + "," + o.solver + "," + format_double(r.p_refl_e) + "," +
           format_double(r.p_refl_g) + "," + format_double(r.p_trans_e) + "," +
           format_double(r.p_trans_g) + "," + format_double(r.p_emission) + "," +
           format_double(r.flux_error);
    return row;
}

void print_scatter_text(const mazer::ScatterResult& r) {
    const bool color = color_enabled();
    const char* head = color ? "\033[1m" : "";
    const char* reset = color ? "\033[0m" : "";
    std::cerr << head << "# scattering result" << reset << "\n"
              << "#   r_e = " << mazer::format_complex(r.r_e)
              << "   r_g = " << mazer::format_complex(r.r_g) << "\n"
              << "#   t_e = " << mazer::format_complex(r.t_e)
              << "   t_g = " << mazer::format_complex(r.t_g) << "\n"
              << "#   k_e = " << format_double(r.k_e)
              << "   k_g = " << mazer::format_complex(r.k_g) << "\n"
              << "#   P_refl_e = " << format_double(r.p_refl_e)
              << "   P_refl_g = " << format_double(r.p_refl_g) << "\n"
              << "#   P_trans_e = " << format_double(r.p_trans_e)
              << "   P_trans_g = " << format_double(r.p_trans_g) << "\n"
              << "#   P_emission = " << format_double(r.p_emission)
              << "   flux_error = " << format_double(r.flux_error) << "\n";
    for (const auto& w : r.warnings) std::cerr << "#   warning: " << w << "\n";
}

int cmd_scatter(const Options& o) {
    const auto params = make_params(o);
    const auto mode = mazer::ModeExpr::parse(o.mode_text, o.L);
    const auto result = solve_one(o, params, mode, o.L, o.k);
    print_scatter_text(result);
    std::string csv = std::string(kScatterCsvHeader) + "\n" +
                      scatter_csv_row(o, result, o.k, o.delta, o.L) + "\n";
    write_output(o, csv);
    return 0;
}

int cmd_scan(const Options& o) {
    if (o.scans.empty() || o.scans.size() > 2)
        throw UsageError("scan requires one or two --scan VAR:MIN:MAX:COUNT specs");
    std::vector<ScanAxis> axes;
    for (const auto& spec : o.scans) {
        ScanAxis axis = parse_scan_spec(spec);
        if (axis.var != "k" && axis.var != "delta" && axis.var != "L")
            throw UsageError("scan variable must be one of k, delta, L (got '" + axis.var + "')");
        axes.push_back(axis);
    }
    if (axes.size() == 2 && axes[0].var == axes[1].var)
        throw UsageError("the two scan axes must sweep different variables");

    const auto base_params = make_params(o);
    const auto base_mode = mazer::ModeExpr::parse(o.mode_text, o.L);

    const int outer = axes[0].count;
    const int inner = axes.size() == 2 ? axes[1].count : 1;
    const long total = static_cast<long>(outer) * inner;
    std::vector<std::string> rows(total);

    std::atomic<long> next(0);
    std::mutex error_mutex;
    std::string first_error;
    std::atomic<bool> failed(false);

    auto worker = [&]() {
        for (;;) {
            const long idx = next.fetch_add(1);
            if (idx >= total || failed.load()) return;
            const int i = static_cast<int>(idx / inner);
            const int j = static_cast<int>(idx % inner);
            double k = o.k, delta = o.delta, L = o.L;
            auto apply = [&](const ScanAxis& a, int pos) {
                const double v = a.at(pos);
                if (a.var == "k") k = v;
                else if (a.var == "delta") delta = v;
                else L = v;
            };
            apply(axes[0], i);
            if (axes.size() == 2) apply(axes[1], j);
            try {
                mazer::ManifoldParams params(o.g, delta, o.n, o.mass, o.omega);
                const mazer::ModeExpr mode = base_mode.with_length(L);
                const auto result = solve_one(o, params, mode, L, k);
                Options row_opts = o;
                rows[idx] = scatter_csv_row(row_opts, result, k, delta, L);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
                return;
            }
        }
    };

    const int jobs = std::max(1, o.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw mazer::SingularMatching(first_error);

    std::string csv = std::string(kScatterCsvHeader) + "\n";
    for (const auto& row : rows) csv += row + "\n";
    write_output(o, csv);
    return 0;
}

int cmd_eigen(const Options& o) {
    const auto params = make_params(o);
    const auto mode = mazer::ModeExpr::parse(o.mode_text, o.L);

    ScanAxis axis{"z", -0.25 * o.L, 1.25 * o.L, 401};
    if (!o.scans.empty()) {
        if (o.scans.size() > 1)
            throw UsageError("eigen accepts at most one --scan spec (variable z)");
        axis = parse_scan_spec(o.scans[0]);
        if (axis.var != "z")
            throw UsageError("eigen sweeps z; use --scan z:MIN:MAX:COUNT");
    }

    std::string csv = "z,u,du,d2u,lambda,theta,dtheta,d2theta,E_plus,E_minus\n";
    const double nan = std::nan("");
    for (int i = 0; i < axis.count; ++i) {
        const double z = axis.at(i);
        const auto [u, du, d2u] = mode.eval012(z);
        const double lam = mazer::lambda_of(params, u);
        const auto [ep, em] = mazer::eigenvalues(params, u);
        double theta = nan, dth = nan, d2th = nan;
        try {
            theta = mazer::mixing_angle(params, u);
            std::tie(dth, d2th) = mazer::theta_derivatives(params, u, du, d2u);
        } catch (const mazer::DegeneratePoint&) {
            // degenerate rows keep nan in the angle columns
        }
        csv += format_double(z) + "," + format_double(u) + "," + format_double(du) + "," +
               format_double(d2u) + "," + format_double(lam) + "," + format_double(theta) +
               "," + format_double(dth) + "," + format_double(d2th) + "," + format_double(ep) +
               "," + format_double(em) + "\n";
    }
    write_output(o, csv);
    return 0;
}

int cmd_verify(const Options& o) {
    const auto params = make_params(o);
    const auto mode = mazer::ModeExpr::parse(o.mode_text, o.L);
    const auto reports = mazer::run_all_claims(params, mode, o.k, o.L, 10000, o.seed);

    const bool color = color_enabled();
    std::string csv = mazer::claim_csv_header() + "\n";
    bool any_fails = false;
    for (const auto& rep : reports) {
        std::cerr << mazer::to_text(rep, color) << "\n";
        csv += mazer::to_csv_row(rep) + "\n";
        if (rep.verdict.kind == mazer::VerdictKind::Fails) any_fails = true;
    }
    write_output(o, csv);
    return any_fails ? kExitClaimFails : 0;
}

int cmd_init_config(const Options& o) {
    std::string text =
        "# mazer configuration\n"
        "# Units: hbar = 1.  Energies (g, delta, omega) and wavenumbers (k)\n"
        "# are in the natural units of the chosen mass; with the default\n"
        "# mass = 0.5 the kinetic operator is exactly -d^2/dz^2 and lengths\n"
        "# are measured in 1/k units.  delta = omega_o - omega is the\n"
        "# atom-cavity detuning.  Lines are 'key = value'; '#' starts a comment.\n"
        "mode = " + o.mode_text + "\n"
        "g = " + format_double(o.g) + "\n"
        "delta = " + format_double(o.delta) + "\n"
        "n = " + std::to_string(o.n) + "\n"
        "mass = " + format_double(o.mass) + "\n"
        "omega = " + format_double(o.omega) + "\n"
        "L = " + format_double(o.L) + "\n"
        "k = " + format_double(o.k) + "\n"
        "# solver: analytic | bare | dressed-derived | dressed-literal\n"
        "solver = " + o.solver + "\n"
        "slices = " + std::to_string(o.slices) + "\n"
        "# grid-step 0 selects L/2048\n"
        "grid-step = " + format_double(o.grid_step) + "\n"
        "seed = " + std::to_string(o.seed) + "\n"
        "jobs = " + std::to_string(o.jobs) + "\n";
    write_output(o, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options opts;

    // honor --config before the regular parse so flags override file values
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                opts.config_path = argv[i + 1];
            } else if (arg.rfind("--config=", 0) == 0) {
                opts.config_path = arg.substr(9);
            }
        }
        if (!opts.config_path.empty()) load_config_file(opts, opts.config_path);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    CLI::App app{"coupled-channel scattering for an ultracold atom in a single-mode cavity"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "config file (key = value lines)");
        sub->add_option("--mode", opts.mode_text,
                        "mode profile: mesa|sine|sine2|gauss|sech2 or an expression in z, L, pi");
        sub->add_option("--g", opts.g, "atom-field coupling");
        sub->add_option("--delta", opts.delta, "detuning omega_o - omega");
        sub->add_option("--n", opts.n, "photon number of the manifold");
        sub->add_option("--mass", opts.mass, "atomic mass (hbar = 1)");
        sub->add_option("--omega", opts.omega, "cavity frequency (offset only)");
        sub->add_option("--L", opts.L, "cavity length");
        sub->add_option("--k", opts.k, "incident wavenumber");
        sub->add_option("--solver", opts.solver,
                        "analytic | bare | dressed-derived | dressed-literal");
        sub->add_option("--slices", opts.slices, "bare-solver slice count");
        sub->add_option("--grid-step", opts.grid_step, "dressed-solver step (0 = L/2048)");
        sub->add_option("--scan", opts.scans, "sweep spec VAR:MIN:MAX:COUNT (repeatable)");
        sub->add_option("--out", opts.out_path, "output path (default stdout)");
        sub->add_option("--seed", opts.seed, "random seed for claim sampling");
        sub->add_option("--jobs", opts.jobs, "worker threads for scans");
    };

    CLI::App* sub_eigen = app.add_subcommand("eigen", "tabulate the local dressed-state data");
    CLI::App* sub_scatter = app.add_subcommand("scatter", "solve one scattering problem");
    CLI::App* sub_scan = app.add_subcommand("scan", "sweep k, delta and/or L");
    CLI::App* sub_verify = app.add_subcommand("verify", "run all claim checks");
    CLI::App* sub_init = app.add_subcommand("init-config", "write a documented config file");
    for (CLI::App* sub : {sub_eigen, sub_scatter, sub_scan, sub_verify, sub_init})
        add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (sub_scatter->parsed()) {
            echo_effective_config(opts, "scatter");
            return cmd_scatter(opts);
        }
        if (sub_scan->parsed()) {
            echo_effective_config(opts, "scan");
            return cmd_scan(opts);
        }
        if (sub_eigen->parsed()) {
            echo_effective_config(opts, "eigen");
            return cmd_eigen(opts);
        }
        if (sub_verify->parsed()) {
            echo_effective_config(opts, "verify");
            return cmd_verify(opts);
        }
        if (sub_init->parsed()) return cmd_init_config(opts);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const mazer::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    }
    return 0;
}
