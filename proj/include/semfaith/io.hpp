#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semfaith/sep.hpp"
#include "semfaith/sf.hpp"
#include "semfaith/synthetic.hpp"
#include "semfaith/types.hpp"

namespace semfaith::io {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(Scalar x);

std::string_view units_name(Units u);

/// One parsed triplet plus any content findings (bad sums, negative entries,
/// dimension mismatches). Structural problems in the file throw InvalidInput
/// instead.
struct TripletEntry {
    QcaTriplet triplet;
    std::vector<Finding> findings;
};

std::vector<TripletEntry> parse_triplets(const std::string& json_text);
std::vector<TripletEntry> load_triplet_file(const std::string& path);

/// One tabular report row. Entropy and entropy-production columns carry
/// report units; D_min is always nats.
struct ReportRow {
    std::string id;
    Scalar h_q = 0;
    Scalar h_c = 0;
    Scalar h_a = 0;
    Scalar s_dot = 0;
    Scalar d_min = 0;
    Scalar f_s = 0;
    Scalar sep = 0;
    Scalar s_m = 0;
    Scalar naive_sep = 0;
    Scalar first_order_sep = 0;
    int outer_iters = 0;
    Scalar residual = 0;
    bool cache_hit = false;
};

ReportRow build_report_row(const QcaTriplet& t, const SfResult& sf,
                           const SepResult& sep, Units units);

std::vector<std::string> report_header(Units units);
void write_report_csv(const std::vector<ReportRow>& rows, Units units,
                      std::ostream& os);
std::string report_json(const std::vector<ReportRow>& rows, Units units);
std::vector<ReportRow> parse_report_json(const std::string& text);

/// Per-triplet matrix bundle for --emit-matrices.
std::string matrices_json(const std::string& id, const SfResult& sf,
                          const SepResult& sep);

// --- results cache -------------------------------------------------------

/// Stable content hash over the three distributions, the solver settings and
/// the artifact version. Triplet id and metadata are deliberately excluded.
std::string cache_key(const QcaTriplet& t, const SolverConfig& cfg,
                      std::string_view version = kArtifactVersion);

struct CacheEntry {
    Scalar d_min = 0;
    Scalar f_s = 0;
    int outer_iters = 0;
    Scalar residual = 0;
    Scalar sep_total = 0;
    Scalar s_system = 0;
    Scalar s_medium = 0;
    Scalar d_forward_reverse = 0;
    Scalar naive_sep = 0;
    Scalar first_order_sep = 0;
    Mat q_star;
    Mat a_star;
    Mat a_reverse;
};

void cache_store(const std::string& dir, const std::string& key,
                 const CacheEntry& entry);
/// nullopt on miss or on a corrupt entry (the caller recomputes and
/// overwrites; corruption is reported via `corrupt`).
std::optional<CacheEntry> cache_load(const std::string& dir,
                                     const std::string& key, bool* corrupt);

// --- synthetic study serialization ---------------------------------------

void write_study_scatter_csv(const synth::StudyReport& report, Units units,
                             std::ostream& os);
void write_study_naive_csv(const synth::StudyReport& report, Units units,
                           std::ostream& os);
std::string study_summary_json(const synth::StudyReport& report,
                               const synth::SynthConfig& cfg, Units units);

}  // namespace semfaith::io
