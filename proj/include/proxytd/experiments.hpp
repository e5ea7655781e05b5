#pragma once

// Replication harness: for every (n, m) cell draw fresh populations and
// instances, run a method set on each, and summarize errors the way the
// heatmaps and bar charts report them.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "proxytd/dataio.hpp"
#include "proxytd/noisegen.hpp"
#include "proxytd/pipelines.hpp"

namespace proxytd {

inline constexpr double kNegligibleError = 1e-9;
inline constexpr double kTieLow = 0.98;
inline constexpr double kTieHigh = 1.02;
inline constexpr std::size_t kDefaultReplications = 300;

// ---------------------------------------------------------------------------
// Real-data resampling

// Centers every question to mean 0 and scales to variance 1 (population
// variance over workers). Constant questions become all zeros; the truth row
// goes through the same per-question transform.
inline void normalize_questions(ContinuousData& d) {
    if (d.answers.empty()) return;
    const std::size_t n = d.answers.size();
    const std::size_t m = d.answers.front().size();
    for (std::size_t j = 0; j < m; ++j) {
        double mean = 0.0;
        for (const auto& a : d.answers) mean += a.values[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        bool constant = true;
        for (const auto& a : d.answers) {
            const double c = a.values[j] - mean;
            var += c * c;
            constant &= a.values[j] == d.answers.front().values[j];
        }
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        for (auto& a : d.answers) a.values[j] = constant ? 0.0 : (a.values[j] - mean) / sd;
        if (d.truth) d.truth->values[j] = constant ? d.truth->values[j] - mean : (d.truth->values[j] - mean) / sd;
    }
}

// Samples n workers and m questions uniformly with replacement. Ranking
// datasets only resample workers.
inline Instance resample_real_dataset(const DatasetFile& ds, std::size_t n, std::size_t m, Seed seed) {
    const std::size_t workers = ds.instance.workers();
    if (workers == 0 || ds.instance.width() == 0) throw io_error("cannot resample an empty dataset");
    if (n < 2) throw insufficient_workers_error("resampled instance needs n >= 2");
    if (m < 1) throw shape_error("resampled instance needs m >= 1");
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick_worker(0, workers - 1);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = pick_worker(rng);
    if (ds.domain == Domain::ranking) {
        const auto& src = ds.instance.ranking();
        RankingData d{src.candidates, {}, src.truth};
        for (auto r : rows) d.answers.push_back(src.answers[r]);
        return Instance{std::move(d), std::nullopt};
    }
    std::uniform_int_distribution<std::size_t> pick_question(0, ds.instance.width() - 1);
    std::vector<std::size_t> cols(m);
    for (auto& c : cols) c = pick_question(rng);
    if (ds.domain == Domain::continuous) {
        const auto& src = ds.instance.continuous();
        ContinuousData d;
        auto take = [&](const ContinuousAnswer& a) {
            ContinuousAnswer out;
            for (auto c : cols) out.values.push_back(a.values[c]);
            return out;
        };
        for (auto r : rows) d.answers.push_back(take(src.answers[r]));
        if (src.truth) d.truth = take(*src.truth);
        normalize_questions(d);
        return Instance{std::move(d), std::nullopt};
    }
    const auto& src = ds.instance.categorical();
    CategoricalData d;
    d.k = src.k;
    auto take = [&](const CategoricalAnswer& a) {
        CategoricalAnswer out{{}, a.k};
        for (auto c : cols) out.labels.push_back(a.labels[c]);
        return out;
    };
    for (auto r : rows) d.answers.push_back(take(src.answers[r]));
    if (src.truth) d.truth = take(*src.truth);
    return Instance{std::move(d), std::nullopt};
}

// ---------------------------------------------------------------------------
// Configuration

struct MethodEntry {
    std::string label;
    MethodSpec spec;  // spec.seed is replaced per replication
};

struct GridCell {
    std::size_t n = 0;
    std::size_t width = 0;  // m, or c for rankings
};

struct DatasetSource {
    std::string path;
    std::optional<std::string> truth_path;
    Domain domain = Domain::categorical;
    std::optional<int> k;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::optional<NoiseModelSpec> noise;
    std::optional<DatasetSource> dataset;
    std::vector<MethodEntry> methods;
    std::vector<std::pair<std::string, std::string>> compare;  // (a, b): ratio mean(a)/mean(b)
    std::vector<GridCell> grid;
    std::size_t replications = kDefaultReplications;
    Seed seed = 0;
    std::string output = "out";
    unsigned threads = 0;  // 0: hardware concurrency

    Domain domain() const { return noise ? noise->domain() : dataset->domain; }
};

inline std::string default_label(const MethodSpec& s) {
    std::string label = to_string(s.method);
    if (s.rule) label += "[" + to_string(*s.rule) + "]";
    return label;
}

// Parses and validates a config document, collecting every problem before
// throwing a single config_error that lists them all.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    std::vector<std::string> problems;
    ExperimentConfig cfg;
    auto attempt = [&](const std::string& field, auto&& fn) {
        try {
            fn();
        } catch (const nlohmann::json::exception& e) {
            problems.push_back(field + ": " + e.what());
        } catch (const error& e) {
            problems.push_back(field + ": " + e.what());
        }
    };
    if (!j.is_object()) throw config_error("experiment config must be a JSON object");

    attempt("name", [&] {
        if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
    });
    attempt("seed", [&] {
        if (!j.contains("seed") || !j.at("seed").is_number_unsigned()) throw config_error("a non-negative integer seed is required");
        cfg.seed = j.at("seed").get<Seed>();
    });
    attempt("replications", [&] {
        if (j.contains("replications")) {
            if (!j.at("replications").is_number_integer() || j.at("replications").get<long long>() < 1)
                throw config_error("must be an integer >= 1");
            cfg.replications = j.at("replications").get<std::size_t>();
        }
    });
    attempt("output", [&] {
        if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    });
    attempt("threads", [&] {
        if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
    });
    attempt("noise", [&] {
        if (j.contains("noise")) cfg.noise = noise_spec_from_json(j.at("noise"));
    });
    attempt("dataset", [&] {
        if (!j.contains("dataset")) return;
        const auto& d = j.at("dataset");
        DatasetSource src;
        src.path = d.at("path").get<std::string>();
        if (d.contains("truth")) src.truth_path = d.at("truth").get<std::string>();
        src.domain = parse_domain(d.at("domain").get<std::string>());
        if (d.contains("k")) src.k = d.at("k").get<int>();
        cfg.dataset = src;
    });
    if (j.contains("noise") == j.contains("dataset"))
        problems.push_back("source: exactly one of 'noise' or 'dataset' is required");

    attempt("grid", [&] {
        if (!j.contains("grid") || !j.at("grid").is_array() || j.at("grid").empty())
            throw config_error("a non-empty array of [n, m] cells is required");
        for (const auto& c : j.at("grid")) {
            if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer())
                throw config_error("every cell must be [n, m]");
            if (c[0].get<long long>() < 2 || c[1].get<long long>() < 1)
                throw config_error("cells need n >= 2 and m >= 1");
            cfg.grid.push_back(GridCell{c[0].get<std::size_t>(), c[1].get<std::size_t>()});
        }
    });

    std::optional<Domain> domain;
    if (cfg.noise) domain = cfg.noise->domain();
    else if (cfg.dataset) domain = cfg.dataset->domain;
    if (domain == Domain::ranking)
        for (const auto& c : cfg.grid)
            if (c.width > static_cast<std::size_t>(kDefaultKemenyCap) && cfg.noise)
                problems.push_back("grid: ranking cells need c <= " + std::to_string(kDefaultKemenyCap));

    if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty()) {
        problems.push_back("methods: a non-empty array is required");
    } else {
        std::size_t idx = 0;
        for (const auto& mj : j.at("methods")) {
            const std::string field = "methods[" + std::to_string(idx++) + "]";
            attempt(field, [&] {
                MethodEntry e;
                e.spec.method = parse_method(mj.at("method").get<std::string>());
                if (mj.contains("u")) {
                    e.spec.u = mj.at("u").is_string() ? parse_u(mj.at("u").get<std::string>())
                                                      : parse_u(detail::format_double(mj.at("u").get<double>()));
                }
                if (mj.contains("T")) {
                    e.spec.iterations = mj.at("T").get<int>();
                    if (e.spec.iterations < 1) throw config_error("T must be >= 1");
                }
                if (mj.contains("rule")) e.spec.rule = parse_rule(mj.at("rule").get<std::string>());
                if (mj.contains("eps")) e.spec.clamp_eps = mj.at("eps").get<double>();
                e.label = mj.contains("label") ? mj.at("label").get<std::string>() : default_label(e.spec);
                if (domain) {
                    if (!method_fits(e.spec.method, *domain))
                        throw config_error(to_string(e.spec.method) + " does not support the " + to_string(*domain) +
                                           " domain");
                    if (!rule_fits(e.spec.rule_for(*domain), *domain))
                        throw config_error("rule does not fit the " + to_string(*domain) + " domain");
                    if (e.spec.method == Method::oa && cfg.dataset && !cfg.dataset->truth_path)
                        throw config_error("OA on a dataset needs a truth file");
                }
                for (const auto& other : cfg.methods)
                    if (other.label == e.label) throw config_error("duplicate method label '" + e.label + "'");
                cfg.methods.push_back(std::move(e));
            });
        }
    }

    attempt("compare", [&] {
        if (!j.contains("compare")) {
            for (std::size_t i = 1; i < cfg.methods.size(); ++i)
                cfg.compare.emplace_back(cfg.methods[i].label, cfg.methods[0].label);
            return;
        }
        for (const auto& p : j.at("compare")) {
            if (!p.is_array() || p.size() != 2) throw config_error("each comparison must be [method_a, method_b]");
            const auto a = p[0].get<std::string>(), b = p[1].get<std::string>();
            for (const auto& lbl : {a, b})
                if (std::none_of(cfg.methods.begin(), cfg.methods.end(),
                                 [&](const MethodEntry& e) { return e.label == lbl; }))
                    throw config_error("unknown method label '" + lbl + "'");
            cfg.compare.emplace_back(a, b);
        }
    });

    if (!problems.empty()) {
        std::string msg = "invalid experiment config:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw config_error(msg);
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config '" + path + "' is not valid JSON: " + e.what());
    }
    auto cfg = parse_experiment_config(j);
    // Dataset paths are relative to the config file.
    if (cfg.dataset) {
        namespace fs = std::filesystem;
        const fs::path base = fs::path(path).parent_path();
        auto rebase = [&](std::string& p) {
            if (fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
        };
        rebase(cfg.dataset->path);
        if (cfg.dataset->truth_path) rebase(*cfg.dataset->truth_path);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Results

enum class RatioFlag { adv_a, adv_b, tie, negligible };

inline std::string to_string(RatioFlag f) {
    switch (f) {
        case RatioFlag::adv_a: return "adv_a";
        case RatioFlag::adv_b: return "adv_b";
        case RatioFlag::tie: return "tie";
        case RatioFlag::negligible: return "negligible";
    }
    return "unknown";
}

struct MethodStat {
    std::string method;
    double mean_error = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

struct PairRatio {
    std::string method_a, method_b;
    std::optional<double> ratio;  // absent when negligible or the denominator is zero
    RatioFlag flag = RatioFlag::tie;
};

struct CellStat {
    GridCell cell;
    std::vector<MethodStat> methods;
    std::vector<PairRatio> ratios;

    const MethodStat& stat(const std::string& label) const {
        for (const auto& m : methods)
            if (m.method == label) return m;
        throw config_error("no statistics for method '" + label + "'");
    }
    const PairRatio& ratio(const std::string& a, const std::string& b) const {
        for (const auto& r : ratios)
            if (r.method_a == a && r.method_b == b) return r;
        throw config_error("no ratio for '" + a + "' vs '" + b + "'");
    }
};

// One row per (instance, method): the MethodResult CSV schema.
struct RunRow {
    std::string method;
    std::string u;
    int iterations = 0;
    std::string rule;
    std::size_t n = 0;
    std::size_t width = 0;
    double error = 0.0;
    Seed seed = 0;
};

struct ExperimentGrid {
    std::string name;
    Seed master_seed = 0;
    std::vector<CellStat> cells;
    std::vector<RunRow> runs;  // cell-major, then replication, then method
};

inline MethodStat summarize(const std::string& label, const std::vector<double>& errors) {
    MethodStat s{label, 0.0, 0.0, errors.size()};
    if (errors.empty()) return s;
    double sum = 0.0;
    for (double e : errors) sum += e;
    s.mean_error = sum / static_cast<double>(errors.size());
    if (errors.size() > 1) {
        double ss = 0.0;
        for (double e : errors) ss += (e - s.mean_error) * (e - s.mean_error);
        s.stderr_ = std::sqrt(ss / static_cast<double>(errors.size() - 1) / static_cast<double>(errors.size()));
    }
    return s;
}

inline PairRatio compare_errors(const MethodStat& a, const MethodStat& b) {
    PairRatio r{a.method, b.method, std::nullopt, RatioFlag::tie};
    if (a.mean_error < kNegligibleError && b.mean_error < kNegligibleError) {
        r.flag = RatioFlag::negligible;
        return r;
    }
    if (!(b.mean_error > 0.0)) {
        r.flag = RatioFlag::adv_b;
        return r;
    }
    r.ratio = a.mean_error / b.mean_error;
    r.flag = *r.ratio < kTieLow ? RatioFlag::adv_a : (*r.ratio > kTieHigh ? RatioFlag::adv_b : RatioFlag::tie);
    return r;
}

// Seed of replication `rep` in cell `cell`; depends only on the indices.
inline Seed replication_seed(Seed master, std::size_t cell, std::size_t rep) {
    return derive_seed(master, {static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(rep)});
}

inline ExperimentGrid run_grid(const ExperimentConfig& cfg) {
    if (cfg.grid.empty()) throw config_error("experiment grid is empty");
    if (cfg.methods.empty()) throw config_error("experiment has no methods");
    if (cfg.replications < 1) throw config_error("replications must be >= 1");
    if (cfg.noise.has_value() == cfg.dataset.has_value()) throw config_error("exactly one data source is required");

    std::optional<DatasetFile> dataset;
    if (cfg.dataset)
        dataset = load_dataset(cfg.dataset->path, cfg.dataset->domain,
                               DatasetOptions{cfg.dataset->truth_path, cfg.dataset->k});

    const std::size_t cells = cfg.grid.size(), reps = cfg.replications, methods = cfg.methods.size();
    const std::size_t jobs = cells * reps;
    std::vector<double> errors(jobs * methods, 0.0);
    std::vector<Seed> seeds(jobs, 0);
    std::vector<std::string> failures(jobs);

    auto work = [&](std::size_t job) {
        const std::size_t c = job / reps, r = job % reps;
        const Seed inst_seed = replication_seed(cfg.seed, c, r);
        const Seed method_seed = derive_seed(inst_seed, 7);
        seeds[job] = method_seed;
        try {
            Instance inst;
            if (cfg.noise) {
                NoiseModelSpec spec = *cfg.noise;
                spec.width = cfg.grid[c].width;
                inst = generate_instance(spec, cfg.grid[c].n, inst_seed);
            } else {
                inst = resample_real_dataset(*dataset, cfg.grid[c].n, cfg.grid[c].width, inst_seed);
            }
            for (std::size_t m = 0; m < methods; ++m) {
                MethodSpec spec = cfg.methods[m].spec;
                spec.seed = method_seed;
                const auto res = run_method(inst, spec);
                if (!res.error) throw oracle_unavailable_error("instance has no ground truth to score against");
                errors[job * methods + m] = *res.error;
            }
        } catch (const std::exception& e) {
            failures[job] = e.what();
        }
    };

    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
    if (threads <= 1) {
        for (std::size_t j = 0; j < jobs; ++j) work(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t j; (j = next.fetch_add(1)) < jobs;) work(j);
            });
    }
    for (std::size_t j = 0; j < jobs; ++j)
        if (!failures[j].empty())
            throw error("cell " + std::to_string(j / reps) + " replication " + std::to_string(j % reps) +
                        " failed: " + failures[j]);

    ExperimentGrid grid{cfg.name, cfg.seed, {}, {}};
    for (std::size_t c = 0; c < cells; ++c) {
        CellStat cs{cfg.grid[c], {}, {}};
        for (std::size_t m = 0; m < methods; ++m) {
            std::vector<double> e(reps);
            for (std::size_t r = 0; r < reps; ++r) e[r] = errors[(c * reps + r) * methods + m];
            cs.methods.push_back(summarize(cfg.methods[m].label, e));
        }
        for (const auto& [a, b] : cfg.compare) cs.ratios.push_back(compare_errors(cs.stat(a), cs.stat(b)));
        grid.cells.push_back(std::move(cs));
        for (std::size_t r = 0; r < reps; ++r) {
            const std::size_t job = c * reps + r;
            for (std::size_t m = 0; m < methods; ++m) {
                const auto& spec = cfg.methods[m].spec;
                grid.runs.push_back(RunRow{cfg.methods[m].label, spec.u.text(), spec.iterations,
                                           to_string(spec.rule_for(cfg.domain())), cfg.grid[c].n, cfg.grid[c].width,
                                           errors[job * methods + m], seeds[job]});
            }
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Reports

inline void write_report_header(std::ostream& out, const ExperimentGrid& grid) {
    out << "# proxytd-report v1\n";
    out << "# experiment=" << grid.name << "\n";
    out << "# master_seed=" << grid.master_seed << "\n";
    out << "# tie_band=" << kTieLow << "," << kTieHigh << "\n";
    out << "# negligible=" << detail::format_double(kNegligibleError) << "\n";
    out << "# proto_clip_policy=clip\n";
}

// Writes heatmap.csv, bars.csv and runs.csv into `dir` (created if needed).
inline void emit_reports(const ExperimentGrid& grid, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory '" + dir + "': " + ec.message());
    auto open = [&](const std::string& name) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw io_error("cannot write '" + (fs::path(dir) / name).string() + "'");
        write_report_header(out, grid);
        return out;
    };
    using detail::format_double;
    {
        auto out = open("heatmap.csv");
        out << "n,m,method_a,method_b,ratio,flag\n";
        for (const auto& c : grid.cells)
            for (const auto& r : c.ratios)
                out << c.cell.n << "," << c.cell.width << "," << r.method_a << "," << r.method_b << ","
                    << (r.flag == RatioFlag::negligible ? "*" : (r.ratio ? format_double(*r.ratio) : "inf")) << ","
                    << to_string(r.flag) << "\n";
        if (!out) throw io_error("failed writing heatmap.csv");
    }
    {
        auto out = open("bars.csv");
        out << "method,mean_error,stderr,n,m,count\n";
        for (const auto& c : grid.cells)
            for (const auto& s : c.methods)
                out << s.method << "," << format_double(s.mean_error) << "," << format_double(s.stderr_) << ","
                    << c.cell.n << "," << c.cell.width << "," << s.count << "\n";
        if (!out) throw io_error("failed writing bars.csv");
    }
    {
        auto out = open("runs.csv");
        out << "method,u,T,rule,n,m_or_c,error,seed\n";
        for (const auto& r : grid.runs)
            out << r.method << "," << r.u << "," << r.iterations << "," << r.rule << "," << r.n << "," << r.width << ","
                << format_double(r.error) << "," << r.seed << "\n";
        if (!out) throw io_error("failed writing runs.csv");
    }
}

inline std::vector<RunRow> read_runs(const std::string& path) {
    const auto csv = detail::read_csv(path);
    const std::vector<std::string> want{"method", "u", "T", "rule", "n", "m_or_c", "error", "seed"};
    if (csv.header->cells != want) throw parse_error("unexpected runs.csv header", csv.header->line);
    std::vector<RunRow> rows;
    for (const auto& r : csv.rows) {
        if (r.cells.size() != want.size()) throw parse_error("runs.csv row has wrong number of cells", r.line);
        RunRow row;
        row.method = r.cells[0];
        row.u = r.cells[1];
        row.iterations = detail::parse_int(r.cells[2], r.line);
        row.rule = r.cells[3];
        row.n = static_cast<std::size_t>(std::stoull(r.cells[4]));
        row.width = static_cast<std::size_t>(std::stoull(r.cells[5]));
        row.error = detail::parse_double(r.cells[6], r.line);
        row.seed = std::stoull(r.cells[7]);
        rows.push_back(std::move(row));
    }
    return rows;
}

// Rebuilds per-cell method statistics from raw rows, in first-seen order.
inline std::vector<CellStat> cell_stats_from_runs(const std::vector<RunRow>& rows) {
    std::vector<CellStat> cells;
    std::vector<std::vector<std::vector<double>>> errors;
    for (const auto& r : rows) {
        auto cit = std::find_if(cells.begin(), cells.end(),
                                [&](const CellStat& c) { return c.cell.n == r.n && c.cell.width == r.width; });
        if (cit == cells.end()) {
            cells.push_back(CellStat{GridCell{r.n, r.width}, {}, {}});
            errors.emplace_back();
            cit = cells.end() - 1;
        }
        const auto ci = static_cast<std::size_t>(cit - cells.begin());
        auto mit = std::find_if(cit->methods.begin(), cit->methods.end(),
                                [&](const MethodStat& m) { return m.method == r.method; });
        if (mit == cit->methods.end()) {
            cit->methods.push_back(MethodStat{r.method, 0, 0, 0});
            errors[ci].emplace_back();
            mit = cit->methods.end() - 1;
        }
        errors[ci][static_cast<std::size_t>(mit - cit->methods.begin())].push_back(r.error);
    }
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (std::size_t m = 0; m < cells[c].methods.size(); ++m)
            cells[c].methods[m] = summarize(cells[c].methods[m].method, errors[c][m]);
    return cells;
}

}  // namespace proxytd
