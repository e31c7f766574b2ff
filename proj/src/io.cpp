#include "semfaith/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "semfaith/info.hpp"

namespace semfaith::io {

using nlohmann::json;

std::string format_double(Scalar x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string_view units_name(Units u) {
    return u == Units::bits ? "bits" : "nats";
}

// ---------------------------------------------------------------------------
// Triplet files

namespace {

Vec json_to_vec(const json& arr, const std::string& where) {
    if (!arr.is_array()) {
        throw InvalidInput(where + ": expected an array of numbers");
    }
    Vec v(static_cast<Index>(arr.size()));
    Index k = 0;
    for (const auto& e : arr) {
        if (!e.is_number()) {
            throw InvalidInput(where + ": non-numeric entry");
        }
        v[k++] = e.get<Scalar>();
    }
    return v;
}

std::vector<long long> json_to_counts(const json& arr, const std::string& where) {
    if (!arr.is_array()) {
        throw InvalidInput(where + ": expected an array of integers");
    }
    std::vector<long long> v;
    v.reserve(arr.size());
    for (const auto& e : arr) {
        if (!e.is_number_integer()) {
            throw InvalidInput(where + ": non-integer count");
        }
        v.push_back(e.get<long long>());
    }
    return v;
}

TripletEntry parse_one(const json& obj, size_t ordinal) {
    std::ostringstream wh;
    wh << "triplet #" << ordinal;
    const std::string where = wh.str();
    if (!obj.is_object()) {
        throw InvalidInput(where + ": expected an object");
    }
    if (!obj.contains("id") || !obj["id"].is_string()) {
        throw InvalidInput(where + ": missing string field 'id'");
    }
    if (!obj.contains("n_topics") || !obj["n_topics"].is_number_integer()) {
        throw InvalidInput(where + ": missing integer field 'n_topics'");
    }
    TripletEntry entry;
    entry.triplet.id = obj["id"].get<std::string>();
    const Index n = obj["n_topics"].get<Index>();
    if (n < 1) {
        throw InvalidInput(where + ": n_topics must be positive");
    }

    const auto load_dist = [&](const char* probs_key, const char* counts_key,
                               const char* field) -> TopicDistribution {
        if (obj.contains(probs_key)) {
            Vec v = json_to_vec(obj[probs_key], where + "." + probs_key);
            if (v.size() != n) {
                std::ostringstream os;
                os << "length " << v.size() << " does not match n_topics " << n;
                entry.findings.push_back({field, os.str()});
            }
            return TopicDistribution::from_raw(std::move(v));
        }
        if (obj.contains(counts_key)) {
            auto counts = json_to_counts(obj[counts_key], where + "." + counts_key);
            if (static_cast<Index>(counts.size()) != n) {
                std::ostringstream os;
                os << "length " << counts.size() << " does not match n_topics "
                   << n;
                entry.findings.push_back({field, os.str()});
                return TopicDistribution::from_raw(Vec::Zero(n));
            }
            try {
                return from_cluster_counts(counts, n);
            } catch (const SemfaithError& e) {
                entry.findings.push_back({field, e.what()});
                return TopicDistribution::from_raw(Vec::Zero(n));
            }
        }
        throw InvalidInput(where + ": neither '" + probs_key + "' nor '" +
                           counts_key + "' present");
    };

    entry.triplet.p_q = load_dist("p_q", "counts_q", "p_q");
    entry.triplet.p_c = load_dist("p_c", "counts_c", "p_c");
    entry.triplet.p_a = load_dist("p_a", "counts_a", "p_a");

    if (obj.contains("metadata")) {
        const auto& md = obj["metadata"];
        if (!md.is_object()) {
            throw InvalidInput(where + ": metadata must be a string map");
        }
        for (const auto& [k, v] : md.items()) {
            if (!v.is_string()) {
                throw InvalidInput(where + ": metadata values must be strings");
            }
            entry.triplet.metadata[k] = v.get<std::string>();
        }
    }

    for (auto& f : validate_triplet(entry.triplet)) {
        entry.findings.push_back(std::move(f));
    }
    return entry;
}

}  // namespace

std::vector<TripletEntry> parse_triplets(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
    std::vector<TripletEntry> entries;
    if (doc.is_array()) {
        size_t k = 0;
        for (const auto& obj : doc) entries.push_back(parse_one(obj, k++));
    } else {
        entries.push_back(parse_one(doc, 0));
    }
    return entries;
}

std::vector<TripletEntry> load_triplet_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open triplet file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_triplets(ss.str());
}

// ---------------------------------------------------------------------------
// Report

ReportRow build_report_row(const QcaTriplet& t, const SfResult& sf,
                           const SepResult& sep, Units units) {
    ReportRow row;
    row.id = t.id;
    row.h_q = shannon_entropy(t.p_q, units);
    row.h_c = shannon_entropy(t.p_c, units);
    row.h_a = shannon_entropy(t.p_a, units);
    row.s_dot = row.h_a - row.h_c;
    row.d_min = sf.d_min;  // always nats
    row.f_s = sf.f_s;
    row.sep = nats_to(sep.sep_total, units);
    row.s_m = nats_to(sep.s_medium, units);
    row.naive_sep = nats_to(sep.naive_sep, units);
    row.first_order_sep = nats_to(sep.first_order_sep, units);
    row.outer_iters = sf.outer_iters;
    row.residual = sf.constraint_residual;
    return row;
}

std::vector<std::string> report_header(Units units) {
    const std::string u(units_name(units));
    return {"id",
            "H_Q_" + u,
            "H_C_" + u,
            "H_A_" + u,
            "S_dot_" + u,
            "D_min_nats",
            "F_S",
            "SEP_" + u,
            "S_m_" + u,
            "naive_SEP_" + u,
            "first_order_SEP_" + u,
            "outer_iters",
            "residual",
            "cache_hit"};
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_report_csv(const std::vector<ReportRow>& rows, Units units,
                      std::ostream& os) {
    const auto header = report_header(units);
    for (size_t k = 0; k < header.size(); ++k) {
        os << (k ? "," : "") << header[k];
    }
    os << '\n';
    for (const auto& r : rows) {
        os << csv_escape(r.id) << ',' << format_double(r.h_q) << ','
           << format_double(r.h_c) << ',' << format_double(r.h_a) << ','
           << format_double(r.s_dot) << ',' << format_double(r.d_min) << ','
           << format_double(r.f_s) << ',' << format_double(r.sep) << ','
           << format_double(r.s_m) << ',' << format_double(r.naive_sep) << ','
           << format_double(r.first_order_sep) << ',' << r.outer_iters << ','
           << format_double(r.residual) << ','
           << (r.cache_hit ? "true" : "false") << '\n';
    }
}

std::string report_json(const std::vector<ReportRow>& rows, Units units) {
    json arr = json::array();
    const auto header = report_header(units);
    for (const auto& r : rows) {
        json o;
        o[header[0]] = r.id;
        o[header[1]] = r.h_q;
        o[header[2]] = r.h_c;
        o[header[3]] = r.h_a;
        o[header[4]] = r.s_dot;
        o[header[5]] = r.d_min;
        o[header[6]] = r.f_s;
        o[header[7]] = r.sep;
        o[header[8]] = r.s_m;
        o[header[9]] = r.naive_sep;
        o[header[10]] = r.first_order_sep;
        o[header[11]] = r.outer_iters;
        o[header[12]] = r.residual;
        o[header[13]] = r.cache_hit;
        arr.push_back(std::move(o));
    }
    json doc;
    doc["units"] = std::string(units_name(units));
    doc["rows"] = std::move(arr);
    return doc.dump(2) + "\n";
}

std::vector<ReportRow> parse_report_json(const std::string& text) {
    json doc = json::parse(text);
    const Units units =
        doc.at("units").get<std::string>() == "bits" ? Units::bits : Units::nats;
    const auto header = report_header(units);
    std::vector<ReportRow> rows;
    for (const auto& o : doc.at("rows")) {
        ReportRow r;
        r.id = o.at(header[0]).get<std::string>();
        r.h_q = o.at(header[1]).get<Scalar>();
        r.h_c = o.at(header[2]).get<Scalar>();
        r.h_a = o.at(header[3]).get<Scalar>();
        r.s_dot = o.at(header[4]).get<Scalar>();
        r.d_min = o.at(header[5]).get<Scalar>();
        r.f_s = o.at(header[6]).get<Scalar>();
        r.sep = o.at(header[7]).get<Scalar>();
        r.s_m = o.at(header[8]).get<Scalar>();
        r.naive_sep = o.at(header[9]).get<Scalar>();
        r.first_order_sep = o.at(header[10]).get<Scalar>();
        r.outer_iters = o.at(header[11]).get<int>();
        r.residual = o.at(header[12]).get<Scalar>();
        r.cache_hit = o.at(header[13]).get<bool>();
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat json_to_mat(const json& j) {
    const Index n = static_cast<Index>(j.size());
    Mat m(n, n);
    Index i = 0;
    for (const auto& row : j) {
        if (static_cast<Index>(row.size()) != n) {
            throw InvalidInput("matrix JSON is not square");
        }
        Index jj = 0;
        for (const auto& e : row) m(i, jj++) = e.get<Scalar>();
        ++i;
    }
    return m;
}

}  // namespace

std::string matrices_json(const std::string& id, const SfResult& sf,
                          const SepResult& sep) {
    json doc;
    doc["id"] = id;
    doc["q_star"] = mat_to_json(sf.q_star.rows());
    doc["a_star"] = mat_to_json(sf.a_star.rows());
    doc["a_reverse"] = mat_to_json(sep.a_reverse.rows());
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Cache

namespace {

void fnv_bytes(std::uint64_t& h, const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t k = 0; k < len; ++k) {
        h ^= p[k];
        h *= 0x100000001B3ULL;
    }
}

void fnv_scalar(std::uint64_t& h, Scalar x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    fnv_bytes(h, &bits, sizeof(bits));
}

void fnv_vec(std::uint64_t& h, const Vec& v) {
    const auto n = static_cast<std::int64_t>(v.size());
    fnv_bytes(h, &n, sizeof(n));
    for (Index i = 0; i < v.size(); ++i) fnv_scalar(h, v[i]);
}

}  // namespace

std::string cache_key(const QcaTriplet& t, const SolverConfig& cfg,
                      std::string_view version) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    fnv_bytes(h, version.data(), version.size());
    fnv_vec(h, t.p_q.probs());
    fnv_vec(h, t.p_c.probs());
    fnv_vec(h, t.p_a.probs());
    fnv_scalar(h, cfg.tol_outer);
    fnv_scalar(h, cfg.tol_inner);
    fnv_scalar(h, cfg.epsilon_smooth);
    const std::int64_t iters[2] = {cfg.max_outer_iters, cfg.max_inner_iters};
    fnv_bytes(h, iters, sizeof(iters));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
}

void cache_store(const std::string& dir, const std::string& key,
                 const CacheEntry& entry) {
    std::filesystem::create_directories(dir);
    json doc;
    doc["version"] = std::string(kArtifactVersion);
    doc["d_min"] = entry.d_min;
    doc["f_s"] = entry.f_s;
    doc["outer_iters"] = entry.outer_iters;
    doc["residual"] = entry.residual;
    doc["sep_total"] = entry.sep_total;
    doc["s_system"] = entry.s_system;
    doc["s_medium"] = entry.s_medium;
    doc["d_forward_reverse"] = entry.d_forward_reverse;
    doc["naive_sep"] = entry.naive_sep;
    doc["first_order_sep"] = entry.first_order_sep;
    doc["q_star"] = mat_to_json(entry.q_star);
    doc["a_star"] = mat_to_json(entry.a_star);
    doc["a_reverse"] = mat_to_json(entry.a_reverse);
    std::ofstream out(std::filesystem::path(dir) / (key + ".json"));
    out << doc.dump(2) << "\n";
}

std::optional<CacheEntry> cache_load(const std::string& dir,
                                     const std::string& key, bool* corrupt) {
    if (corrupt) *corrupt = false;
    const auto path = std::filesystem::path(dir) / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        json doc = json::parse(in);
        CacheEntry e;
        e.d_min = doc.at("d_min").get<Scalar>();
        e.f_s = doc.at("f_s").get<Scalar>();
        e.outer_iters = doc.at("outer_iters").get<int>();
        e.residual = doc.at("residual").get<Scalar>();
        e.sep_total = doc.at("sep_total").get<Scalar>();
        e.s_system = doc.at("s_system").get<Scalar>();
        e.s_medium = doc.at("s_medium").get<Scalar>();
        e.d_forward_reverse = doc.at("d_forward_reverse").get<Scalar>();
        e.naive_sep = doc.at("naive_sep").get<Scalar>();
        e.first_order_sep = doc.at("first_order_sep").get<Scalar>();
        e.q_star = json_to_mat(doc.at("q_star"));
        e.a_star = json_to_mat(doc.at("a_star"));
        e.a_reverse = json_to_mat(doc.at("a_reverse"));
        return e;
    } catch (const std::exception&) {
        if (corrupt) *corrupt = true;
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Synthetic study

void write_study_scatter_csv(const synth::StudyReport& report, Units units,
                             std::ostream& os) {
    const std::string u(units_name(units));
    os << "f_s,sep_" << u << ",s_dot_" << u << ",h_q_" << u << ",h_c_" << u
       << ",h_a_" << u << '\n';
    for (const auto& r : report.records) {
        os << format_double(r.f_s) << ',' << format_double(nats_to(r.sep_total, units))
           << ',' << format_double(nats_to(r.s_system, units)) << ','
           << format_double(nats_to(r.h_q, units)) << ','
           << format_double(nats_to(r.h_c, units)) << ','
           << format_double(nats_to(r.h_a, units)) << '\n';
    }
}

void write_study_naive_csv(const synth::StudyReport& report, Units units,
                           std::ostream& os) {
    const std::string u(units_name(units));
    os << "f_s,naive_sep_" << u << '\n';
    for (const auto& [f, v] : report.naive_curve_points) {
        os << format_double(f) << ',' << format_double(nats_to(v, units)) << '\n';
    }
}

std::string study_summary_json(const synth::StudyReport& report,
                               const synth::SynthConfig& cfg, Units units) {
    json doc;
    doc["n_topics"] = cfg.n_topics;
    doc["n_triplets"] = cfg.n_triplets;
    doc["alpha_q"] = cfg.alpha_q;
    doc["alpha_c"] = cfg.alpha_c;
    doc["alpha_a"] = cfg.alpha_a;
    doc["context_coupling"] = cfg.context_coupling;
    doc["seed"] = cfg.seed;
    doc["units"] = std::string(units_name(units));
    doc["solved"] = report.records.size();
    doc["failures"] = report.failures.size();
    if (report.pearson_r) {
        doc["pearson_r"] = *report.pearson_r;
    } else {
        doc["pearson_r"] = nullptr;
    }
    if (report.ols_slope) {
        // slope/intercept relate report-unit sep to unitless f_s
        doc["ols_slope"] = nats_to(*report.ols_slope, units);
        doc["ols_intercept"] = nats_to(*report.ols_intercept, units);
    } else {
        doc["ols_slope"] = nullptr;
        doc["ols_intercept"] = nullptr;
    }
    return doc.dump(2) + "\n";
}

}  // namespace semfaith::io
