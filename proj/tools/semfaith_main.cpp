#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semfaith/info.hpp"
#include "semfaith/io.hpp"
#include "semfaith/oracle.hpp"
#include "semfaith/sep.hpp"
#include "semfaith/sf.hpp"
#include "semfaith/synthetic.hpp"

namespace {

using namespace semfaith;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitSolverFailure = 3;
constexpr int kExitOracleMismatch = 4;

struct GlobalOpts {
    SolverConfig solver;
    std::string units = "bits";
    std::string format = "csv";
    std::string out;
    std::string cache_dir;
    std::uint64_t seed = 17;

    Units parsed_units() const {
        return units == "nats" ? Units::nats : Units::bits;
    }
};

std::string sanitize_id(const std::string& id) {
    std::string out;
    out.reserve(id.size());
    for (char c : id) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                c == '_')
                   ? c
                   : '_';
    }
    return out.empty() ? std::string("triplet") : out;
}

void emit_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw InvalidInput("cannot write output file: " + out_path);
    out << text;
}

int cmd_score(const GlobalOpts& g, const std::string& input,
              const std::string& matrices_dir) {
    std::vector<io::TripletEntry> entries;
    try {
        entries = io::load_triplet_file(input);
    } catch (const SemfaithError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }

    const Units units = g.parsed_units();
    std::vector<io::ReportRow> rows;
    bool any_failed = false;

    for (const auto& entry : entries) {
        const auto& t = entry.triplet;
        if (!entry.findings.empty()) {
            for (const auto& f : entry.findings) {
                std::cerr << "triplet '" << t.id << "': [" << f.field << "] "
                          << f.message << "\n";
            }
            any_failed = true;
            continue;
        }

        std::optional<io::CacheEntry> cached;
        std::string key;
        if (!g.cache_dir.empty()) {
            key = io::cache_key(t, g.solver);
            bool corrupt = false;
            cached = io::cache_load(g.cache_dir, key, &corrupt);
            if (corrupt) {
                std::cerr << "warning: corrupt cache entry " << key
                          << "; recomputing\n";
            }
        }

        try {
            io::ReportRow row;
            io::CacheEntry ce;
            if (cached) {
                ce = *cached;
                row.id = t.id;
                row.h_q = shannon_entropy(t.p_q, units);
                row.h_c = shannon_entropy(t.p_c, units);
                row.h_a = shannon_entropy(t.p_a, units);
                row.s_dot = row.h_a - row.h_c;
                row.d_min = ce.d_min;
                row.f_s = ce.f_s;
                row.sep = nats_to(ce.sep_total, units);
                row.s_m = nats_to(ce.s_medium, units);
                row.naive_sep = nats_to(ce.naive_sep, units);
                row.first_order_sep = nats_to(ce.first_order_sep, units);
                row.outer_iters = ce.outer_iters;
                row.residual = ce.residual;
                row.cache_hit = true;
            } else {
                const SfResult sf = solve_sf(t, g.solver);
                const SepResult sep = solve_sep(sf, t, g.solver);
                row = io::build_report_row(t, sf, sep, units);
                ce.d_min = sf.d_min;
                ce.f_s = sf.f_s;
                ce.outer_iters = sf.outer_iters;
                ce.residual = sf.constraint_residual;
                ce.sep_total = sep.sep_total;
                ce.s_system = sep.s_system;
                ce.s_medium = sep.s_medium;
                ce.d_forward_reverse = sep.d_forward_reverse;
                ce.naive_sep = sep.naive_sep;
                ce.first_order_sep = sep.first_order_sep;
                ce.q_star = sf.q_star.rows();
                ce.a_star = sf.a_star.rows();
                ce.a_reverse = sep.a_reverse.rows();
                if (!g.cache_dir.empty()) {
                    io::cache_store(g.cache_dir, key, ce);
                }
            }
            if (!matrices_dir.empty()) {
                fs::create_directories(matrices_dir);
                SfResult sf_out;
                sf_out.q_star = TransitionMatrix::from_raw(ce.q_star);
                sf_out.a_star = TransitionMatrix::from_raw(ce.a_star);
                SepResult sep_out;
                sep_out.a_reverse = TransitionMatrix::from_raw(ce.a_reverse);
                std::ofstream mf(fs::path(matrices_dir) /
                                 (sanitize_id(t.id) + ".json"));
                mf << io::matrices_json(t.id, sf_out, sep_out);
            }
            rows.push_back(std::move(row));
        } catch (const SemfaithError& e) {
            std::cerr << "triplet '" << t.id << "': " << e.what() << "\n";
            any_failed = true;
        }
    }

    std::ostringstream os;
    if (g.format == "json") {
        os << io::report_json(rows, units);
    } else {
        io::write_report_csv(rows, units, os);
    }
    emit_output(os.str(), g.out);
    return any_failed ? kExitSolverFailure : kExitOk;
}

int cmd_synth(const GlobalOpts& g, const synth::SynthConfig& cfg) {
    synth::StudyReport report;
    try {
        report = synth::run_study(cfg, g.solver);
    } catch (const SemfaithError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }

    const Units units = g.parsed_units();
    const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    fs::create_directories(dir);

    {
        std::ofstream scatter(dir / "scatter.csv");
        io::write_study_scatter_csv(report, units, scatter);
    }
    {
        std::ofstream naive(dir / "naive_curve.csv");
        io::write_study_naive_csv(report, units, naive);
    }
    {
        std::ofstream summary(dir / "summary.json");
        summary << io::study_summary_json(report, cfg, units);
    }
    std::cout << "study: " << report.records.size() << " solved, "
              << report.failures.size() << " failed; outputs in " << dir.string()
              << "\n";
    for (const auto& f : report.failures) {
        std::cerr << "triplet index " << f.index << ": " << f.message << "\n";
    }
    return kExitOk;
}

int cmd_oracle_check(const GlobalOpts& g, const std::string& input,
                     Scalar tol) {
    std::vector<io::TripletEntry> entries;
    try {
        entries = io::load_triplet_file(input);
    } catch (const SemfaithError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }

    for (const auto& entry : entries) {
        if (!entry.findings.empty()) {
            for (const auto& f : entry.findings) {
                std::cerr << "triplet '" << entry.triplet.id << "': [" << f.field
                          << "] " << f.message << "\n";
            }
            return kExitBadInput;
        }
        if (entry.triplet.p_c.size() > 5) {
            std::cerr << "triplet '" << entry.triplet.id << "': N="
                      << entry.triplet.p_c.size()
                      << " exceeds the oracle limit of 5 topics\n";
            return kExitBadInput;
        }
        const Scalar min_entry =
            std::min({entry.triplet.p_q.probs().minCoeff(),
                      entry.triplet.p_c.probs().minCoeff(),
                      entry.triplet.p_a.probs().minCoeff()});
        if (min_entry < 1e-6) {
            std::cerr << "triplet '" << entry.triplet.id
                      << "': marginal entries below 1e-6 cannot be certified "
                         "by the oracles\n";
            return kExitBadInput;
        }
    }

    oracle::OracleConfig ocfg;
    bool all_ok = true;
    std::ostringstream os;
    os << "id,d_min_solver,d_min_oracle,d_min_diff,sep_solver,sep_oracle,"
          "sep_diff,ok\n";
    for (const auto& entry : entries) {
        const auto& t = entry.triplet;
        try {
            const SfResult sf = solve_sf(t, g.solver);
            const SepResult sep = solve_sep(sf, t, g.solver);
            // The oracles see the same smoothed problem the solver solved.
            QcaTriplet ts = t;
            ts.p_q = t.p_q.smoothed(g.solver.epsilon_smooth);
            ts.p_c = t.p_c.smoothed(g.solver.epsilon_smooth);
            ts.p_a = t.p_a.smoothed(g.solver.epsilon_smooth);
            const Scalar d_oracle = ts.p_c.size() == 2
                                        ? oracle::grid_dmin_n2(ts, ocfg)
                                        : oracle::pgd_dmin(ts, ocfg);
            const Scalar sep_oracle =
                oracle::pgd_sep(sf.a_star, ts.p_c, ts.p_a, ocfg);
            const Scalar dd = std::abs(sf.d_min - d_oracle);
            const Scalar ds = std::abs(sep.sep_total - sep_oracle);
            const bool ok = dd <= tol && ds <= tol;
            all_ok = all_ok && ok;
            os << t.id << ',' << io::format_double(sf.d_min) << ','
               << io::format_double(d_oracle) << ',' << io::format_double(dd)
               << ',' << io::format_double(sep.sep_total) << ','
               << io::format_double(sep_oracle) << ',' << io::format_double(ds)
               << ',' << (ok ? "true" : "false") << '\n';
        } catch (const SemfaithError& e) {
            std::cerr << "triplet '" << t.id << "': " << e.what() << "\n";
            all_ok = false;
        }
    }
    emit_output(os.str(), g.out);
    return all_ok ? kExitOk : kExitOracleMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic faithfulness and entropy-production metrics for "
                 "QCA topic distributions"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--tol-outer", g.solver.tol_outer,
                   "objective-change stopping threshold (nats)");
    app.add_option("--tol-inner", g.solver.tol_inner,
                   "fixed-point / dual-ascent stopping threshold");
    app.add_option("--max-iter", g.solver.max_outer_iters,
                   "outer iteration budget");
    app.add_option("--epsilon", g.solver.epsilon_smooth,
                   "probability floor applied before solving");
    app.add_option("--units", g.units, "entropy units: bits|nats")
        ->check(CLI::IsMember({"bits", "nats"}));
    app.add_option("--format", g.format, "report format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", g.out, "output path (score/oracle-check) or directory (synth)");
    app.add_option("--cache", g.cache_dir, "results cache directory");
    app.add_option("--seed", g.seed, "PRNG seed for synth");

    std::string score_input;
    std::string matrices_dir;
    auto* score = app.add_subcommand("score", "score triplets from a JSON file");
    score->add_option("input", score_input, "TripletFile JSON path")->required();
    score->add_option("--emit-matrices", matrices_dir,
                      "write q_star/a_star/a_reverse per triplet to this dir");

    synth::SynthConfig synth_cfg;
    auto* synth_cmd =
        app.add_subcommand("synth", "run the synthetic correlation study");
    synth_cmd->add_option("--n", synth_cfg.n_triplets, "number of triplets");
    synth_cmd->add_option("--topics", synth_cfg.n_topics, "number of topics");
    synth_cmd->add_option("--alpha-q", synth_cfg.alpha_q,
                          "question Dirichlet concentration");
    synth_cmd->add_option("--alpha-c", synth_cfg.alpha_c,
                          "context Dirichlet concentration");
    synth_cmd->add_option("--alpha-a", synth_cfg.alpha_a,
                          "answer Dirichlet concentration");
    synth_cmd->add_option("--coupling", synth_cfg.context_coupling,
                          "context->answer coupling strength in [0,1]");

    std::string oracle_input;
    double oracle_tol = 1e-3;
    auto* oracle_cmd = app.add_subcommand(
        "oracle-check", "compare solver results against the reference oracles");
    oracle_cmd->add_option("input", oracle_input, "TripletFile JSON path")
        ->required();
    oracle_cmd->add_option("--tol", oracle_tol, "agreement tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitBadInput;
    }

    try {
        g.solver.validate();
    } catch (const SemfaithError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }

    try {
        if (score->parsed()) {
            return cmd_score(g, score_input, matrices_dir);
        }
        if (synth_cmd->parsed()) {
            synth_cfg.seed = g.seed;
            return cmd_synth(g, synth_cfg);
        }
        if (oracle_cmd->parsed()) {
            return cmd_oracle_check(g, oracle_input, oracle_tol);
        }
    } catch (const SemfaithError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
