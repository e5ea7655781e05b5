#pragma once

// CSV ingestion of crowdsourcing datasets and lossless instance files.
//
// Dataset answers:  header `worker_id,q1,...,qm` (continuous / categorical)
//                   or `worker_id,rank` with permutation strings like `acbd`.
// Dataset truth:    separate file with the same header and one data row.
//
// Instance file (version 1):
//   # proxytd-instance v1
//   # domain=categorical
//   # k=2                     (categorical)   or  # candidates=4  (ranking)
//   worker_id,fault,q1,...,qm (or worker_id,fault,answer for rankings)
//   0,0.45,1,0,...
//   truth,,1,0,...
// Ranking answers are permutation strings, or `p:` followed by one '+'/'-'
// per candidate pair when non-transitive. Reals use 17 significant digits.

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "proxytd/core.hpp"
#include "proxytd/errors.hpp"

namespace proxytd {

inline constexpr int kInstanceFormatVersion = 1;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw parse_error("cannot parse number '" + s + "'", line);
    }
}

inline int parse_int(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw parse_error("cannot parse integer '" + s + "'", line);
    }
}

// 'a'-based permutation string to a ranking; "dcba" -> (3,2,1,0).
inline Ranking parse_rank_string(const std::string& s, std::size_t line) {
    Ranking r;
    for (char ch : s) {
        if (ch < 'a' || ch > 'z') throw parse_error("bad ranking string '" + s + "'", line);
        r.order.push_back(ch - 'a');
    }
    if (r.order.size() < 2 || !is_permutation_of_candidates(r.order))
        throw parse_error("ranking string '" + s + "' is not a permutation", line);
    return r;
}

inline std::string rank_string(const Ranking& r) {
    std::string s;
    for (int c : r.order) s += static_cast<char>('a' + c);
    return s;
}

inline std::string pairwise_string(const PairwiseVector& x) {
    if (is_transitive(x)) return rank_string(from_pairwise(x));
    std::string s = "p:";
    for (auto e : x.entries) s += e > 0 ? '+' : '-';
    return s;
}

inline PairwiseVector parse_pairwise_string(const std::string& s, int candidates, std::size_t line) {
    if (s.rfind("p:", 0) == 0) {
        PairwiseVector x{candidates, {}};
        for (char ch : s.substr(2)) {
            if (ch != '+' && ch != '-') throw parse_error("bad pairwise string '" + s + "'", line);
            x.entries.push_back(ch == '+' ? 1 : -1);
        }
        if (x.entries.size() != pair_count(candidates))
            throw parse_error("pairwise string '" + s + "' has wrong length", line);
        return x;
    }
    const Ranking r = parse_rank_string(s, line);
    if (r.candidates() != candidates) throw parse_error("ranking '" + s + "' has wrong candidate count", line);
    return to_pairwise(r);
}

struct CsvRow {
    std::size_t line;
    std::vector<std::string> cells;
};

struct CsvFile {
    std::map<std::string, std::string> meta;  // "# key=value" comments
    std::vector<std::string> comments;
    std::optional<CsvRow> header;
    std::vector<CsvRow> rows;
};

inline CsvFile read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    CsvFile f;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const auto body = trim(t.substr(1));
            f.comments.push_back(body);
            const auto eq = body.find('=');
            if (eq != std::string::npos) f.meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
            continue;
        }
        if (!f.header) f.header = CsvRow{lineno, split_csv(t)};
        else f.rows.push_back(CsvRow{lineno, split_csv(t)});
    }
    if (!f.header) throw parse_error("missing header row in '" + path + "'", lineno);
    return f;
}

}  // namespace detail

struct DatasetOptions {
    std::optional<std::string> truth_path;
    std::optional<int> k;  // categorical; inferred as max label + 1 (at least 2) when absent
};

struct DatasetFile {
    Domain domain = Domain::categorical;
    int k = 0;           // categorical
    int candidates = 0;  // ranking
    std::vector<std::string> worker_ids;
    Instance instance;
    std::size_t dropped_workers = 0;
    std::vector<std::string> dropped_ids;

    std::size_t workers() const { return instance.workers(); }
    std::size_t width() const { return instance.width(); }
};

// Workers with any empty cell are dropped (counted in dropped_workers); the
// column count never changes.
inline DatasetFile load_dataset(const std::string& path, Domain domain, const DatasetOptions& opt = {}) {
    using namespace detail;
    const CsvFile csv = read_csv(path);
    const auto& header = *csv.header;
    const std::size_t cols = header.cells.size();
    if (cols < 2 || header.cells[0] != "worker_id")
        throw parse_error("header must start with worker_id and name at least one column", header.line);
    if (domain == Domain::ranking && cols != 2) throw parse_error("ranking datasets need header worker_id,rank", header.line);

    DatasetFile ds;
    ds.domain = domain;
    std::vector<CsvRow> kept;
    for (const auto& row : csv.rows) {
        if (row.cells.size() != cols) throw shape_error("row at line " + std::to_string(row.line) + " has " +
                                                        std::to_string(row.cells.size()) + " cells, expected " +
                                                        std::to_string(cols));
        bool missing = false;
        for (std::size_t c = 1; c < cols; ++c) missing |= row.cells[c].empty();
        if (missing) {
            ++ds.dropped_workers;
            ds.dropped_ids.push_back(row.cells[0]);
            continue;
        }
        kept.push_back(row);
    }
    if (kept.empty()) throw io_error("dataset '" + path + "' has no complete worker rows");

    std::optional<CsvRow> truth_row;
    if (opt.truth_path) {
        const CsvFile t = read_csv(*opt.truth_path);
        if (t.header->cells.size() != cols) throw shape_error("truth header does not match answers header");
        if (t.rows.empty()) throw parse_error("truth file has no data row", t.header->line);
        if (t.rows.front().cells.size() != cols) throw shape_error("truth row has wrong number of cells");
        truth_row = t.rows.front();
    }

    for (const auto& row : kept) ds.worker_ids.push_back(row.cells[0]);
    switch (domain) {
        case Domain::continuous: {
            ContinuousData d;
            auto parse = [&](const CsvRow& row) {
                ContinuousAnswer a;
                for (std::size_t c = 1; c < cols; ++c) a.values.push_back(parse_double(row.cells[c], row.line));
                return a;
            };
            for (const auto& row : kept) d.answers.push_back(parse(row));
            if (truth_row) d.truth = parse(*truth_row);
            ds.instance.data = std::move(d);
            break;
        }
        case Domain::categorical: {
            std::vector<std::vector<int>> labels;
            int top = 1;
            auto parse = [&](const CsvRow& row) {
                std::vector<int> l;
                for (std::size_t c = 1; c < cols; ++c) {
                    const int v = parse_int(row.cells[c], row.line);
                    if (v < 0) throw parse_error("negative category label", row.line);
                    top = std::max(top, v);
                    l.push_back(v);
                }
                return l;
            };
            for (const auto& row : kept) labels.push_back(parse(row));
            std::optional<std::vector<int>> truth;
            if (truth_row) truth = parse(*truth_row);
            ds.k = opt.k.value_or(top + 1);
            if (ds.k < 2) throw config_error("categorical datasets need k >= 2");
            if (top >= ds.k) throw shape_error("category label exceeds k - 1");
            CategoricalData d;
            d.k = ds.k;
            for (auto& l : labels) d.answers.push_back(CategoricalAnswer{std::move(l), ds.k});
            if (truth) d.truth = CategoricalAnswer{std::move(*truth), ds.k};
            ds.instance.data = std::move(d);
            break;
        }
        case Domain::ranking: {
            RankingData d;
            for (const auto& row : kept) {
                const Ranking r = parse_rank_string(row.cells[1], row.line);
                if (d.candidates == 0) d.candidates = r.candidates();
                if (r.candidates() != d.candidates) throw shape_error("rankings differ in candidate count");
                d.answers.push_back(to_pairwise(r));
            }
            if (truth_row) {
                const Ranking r = parse_rank_string(truth_row->cells[1], truth_row->line);
                if (r.candidates() != d.candidates) throw shape_error("truth ranking has wrong candidate count");
                d.truth = r;
            }
            ds.candidates = d.candidates;
            ds.instance.data = std::move(d);
            break;
        }
    }
    if (ds.instance.workers() >= 2) validate(ds.instance);
    return ds;
}

// Extra `# key=value` lines written after the format header.
using Provenance = std::vector<std::pair<std::string, std::string>>;

inline void save_instance(const Instance& inst, const std::string& path, const Provenance& provenance = {}) {
    using namespace detail;
    validate(inst);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "# proxytd-instance v" << kInstanceFormatVersion << "\n";
    out << "# domain=" << to_string(inst.domain()) << "\n";
    if (inst.domain() == Domain::categorical) out << "# k=" << inst.categorical().k << "\n";
    if (inst.domain() == Domain::ranking) out << "# candidates=" << inst.ranking().candidates << "\n";
    for (const auto& [k, v] : provenance) out << "# " << k << "=" << v << "\n";

    const std::size_t n = inst.workers();
    auto fault = [&](std::size_t i) { return inst.faults ? format_double((*inst.faults)[i]) : std::string(); };
    switch (inst.domain()) {
        case Domain::continuous: {
            const auto& d = inst.continuous();
            out << "worker_id,fault";
            for (std::size_t j = 0; j < inst.width(); ++j) out << ",q" << j + 1;
            out << "\n";
            auto row = [&](const ContinuousAnswer& a) {
                for (double v : a.values) out << "," << format_double(v);
                out << "\n";
            };
            for (std::size_t i = 0; i < n; ++i) {
                out << i << "," << fault(i);
                row(d.answers[i]);
            }
            if (d.truth) {
                out << "truth,";
                row(*d.truth);
            }
            break;
        }
        case Domain::categorical: {
            const auto& d = inst.categorical();
            out << "worker_id,fault";
            for (std::size_t j = 0; j < inst.width(); ++j) out << ",q" << j + 1;
            out << "\n";
            auto row = [&](const CategoricalAnswer& a) {
                for (int v : a.labels) out << "," << v;
                out << "\n";
            };
            for (std::size_t i = 0; i < n; ++i) {
                out << i << "," << fault(i);
                row(d.answers[i]);
            }
            if (d.truth) {
                out << "truth,";
                row(*d.truth);
            }
            break;
        }
        case Domain::ranking: {
            const auto& d = inst.ranking();
            out << "worker_id,fault,answer\n";
            for (std::size_t i = 0; i < n; ++i) out << i << "," << fault(i) << "," << pairwise_string(d.answers[i]) << "\n";
            if (d.truth) out << "truth,," << rank_string(*d.truth) << "\n";
            break;
        }
    }
    if (!out) throw io_error("failed writing '" + path + "'");
}

struct LoadedInstance {
    Instance instance;
    std::map<std::string, std::string> meta;
};

inline LoadedInstance load_instance_with_meta(const std::string& path) {
    using namespace detail;
    const CsvFile csv = read_csv(path);
    const std::string want = "proxytd-instance v" + std::to_string(kInstanceFormatVersion);
    if (csv.comments.empty() || csv.comments.front().rfind("proxytd-instance", 0) != 0)
        throw format_version_error("'" + path + "' is not a proxytd instance file");
    if (csv.comments.front() != want)
        throw format_version_error("unsupported instance format '" + csv.comments.front() + "', expected '" + want + "'");
    if (!csv.meta.count("domain")) throw parse_error("instance file lacks '# domain='", 1);
    const Domain domain = parse_domain(csv.meta.at("domain"));
    const auto& header = *csv.header;
    const std::size_t cols = header.cells.size();
    if (cols < 3 || header.cells[0] != "worker_id" || header.cells[1] != "fault")
        throw parse_error("instance header must start with worker_id,fault", header.line);

    Instance inst;
    std::vector<double> faults;
    std::size_t with_fault = 0, workers = 0;
    std::optional<CsvRow> truth_row;
    std::vector<const CsvRow*> rows;
    for (const auto& row : csv.rows) {
        if (row.cells.size() != cols) throw parse_error("row has wrong number of cells", row.line);
        if (row.cells[0] == "truth") {
            truth_row = row;
            continue;
        }
        rows.push_back(&row);
        ++workers;
        if (!row.cells[1].empty()) {
            faults.push_back(parse_double(row.cells[1], row.line));
            ++with_fault;
        }
    }
    if (with_fault != 0 && with_fault != workers) throw parse_error("fault column is only partially filled", header.line);
    if (with_fault) inst.faults = std::move(faults);

    switch (domain) {
        case Domain::continuous: {
            ContinuousData d;
            auto parse = [&](const CsvRow& r) {
                ContinuousAnswer a;
                for (std::size_t c = 2; c < cols; ++c) a.values.push_back(parse_double(r.cells[c], r.line));
                return a;
            };
            for (const auto* r : rows) d.answers.push_back(parse(*r));
            if (truth_row) d.truth = parse(*truth_row);
            inst.data = std::move(d);
            break;
        }
        case Domain::categorical: {
            if (!csv.meta.count("k")) throw parse_error("categorical instance lacks '# k='", 1);
            CategoricalData d;
            d.k = parse_int(csv.meta.at("k"), 1);
            auto parse = [&](const CsvRow& r) {
                CategoricalAnswer a{{}, d.k};
                for (std::size_t c = 2; c < cols; ++c) a.labels.push_back(parse_int(r.cells[c], r.line));
                return a;
            };
            for (const auto* r : rows) d.answers.push_back(parse(*r));
            if (truth_row) d.truth = parse(*truth_row);
            inst.data = std::move(d);
            break;
        }
        case Domain::ranking: {
            if (!csv.meta.count("candidates")) throw parse_error("ranking instance lacks '# candidates='", 1);
            RankingData d;
            d.candidates = parse_int(csv.meta.at("candidates"), 1);
            for (const auto* r : rows) d.answers.push_back(parse_pairwise_string(r->cells[2], d.candidates, r->line));
            if (truth_row) d.truth = parse_rank_string(truth_row->cells[2], truth_row->line);
            inst.data = std::move(d);
            break;
        }
    }
    validate(inst);
    return {std::move(inst), csv.meta};
}

inline Instance load_instance(const std::string& path) { return load_instance_with_meta(path).instance; }

}  // namespace proxytd
