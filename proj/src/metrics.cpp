#include "drrg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace drrg {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::string_view kCsvHeader = "run_id,protocol,n,delta,seed,phase,rounds,msgs_sent,msgs_delivered";

// Shortest decimal text that reads back to the same double.
std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s << std::setprecision(17) << v;
    std::string best = s.str();
    for (int p = 1; p < 17; ++p) {
        std::ostringstream t;
        t << std::setprecision(p) << v;
        if (std::stod(t.str()) == v) return t.str();
    }
    return best;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

ojson meter_json(const PhaseMeter& m) {
    ojson j;
    j["rounds"] = m.rounds;
    j["msgs_sent"] = m.messages_sent;
    j["msgs_delivered"] = m.messages_delivered;
    return j;
}

double quantile(const std::vector<double>& sorted, double q) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double ratio(double num, double den) { return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

void write_metrics_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

void write_metrics_csv(std::ostream& out, const RunMetrics& run) {
    for (Phase p : kAllPhases) {
        const auto& m = run.phases[p];
        out << run.run_id << ',' << run.protocol << ',' << run.n << ',' << fmt(run.delta) << ',' << run.seed << ','
            << to_string(p) << ',' << m.rounds << ',' << m.messages_sent << ',' << m.messages_delivered << '\n';
    }
}

void write_metrics_jsonl_header(std::ostream& out, std::string_view timestamp) {
    ojson j;
    j["kind"] = "header";
    j["format"] = "drrg-metrics";
    j["version"] = 1;
    if (!timestamp.empty()) j["timestamp"] = std::string(timestamp);
    out << j.dump() << '\n';
}

void write_metrics_jsonl(std::ostream& out, const RunMetrics& run) {
    ojson j;
    j["kind"] = "run";
    j["run_id"] = run.run_id;
    j["protocol"] = run.protocol;
    j["topology"] = run.topology;
    j["n"] = run.n;
    j["delta"] = run.delta;
    j["seed"] = run.seed;
    j["correct"] = run.correct ? ojson(*run.correct) : ojson(nullptr);
    j["max_relative_error"] =
        run.max_relative_error && std::isfinite(*run.max_relative_error) ? ojson(*run.max_relative_error) : ojson(nullptr);
    ojson phases = ojson::object();
    for (Phase p : kAllPhases) phases[std::string(to_string(p))] = meter_json(run.phases[p]);
    j["phases"] = std::move(phases);
    j["totals"] = meter_json(run.totals());
    out << j.dump() << '\n';
}

std::vector<RunMetrics> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open metrics file");
    return read_metrics(in, path.string());
}

std::vector<RunMetrics> read_metrics(std::istream& in, const std::string& name) {
    std::vector<RunMetrics> runs;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& why) -> std::runtime_error {
        return std::runtime_error(name + ":" + std::to_string(lineno) + ": " + why);
    };
    if (!std::getline(in, line)) throw std::runtime_error(name + ": empty metrics file");
    ++lineno;

    if (line == kCsvHeader) {
        std::map<std::uint64_t, std::size_t> index;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto f = split(line, ',');
            if (f.size() != 9) throw fail("expected 9 columns");
            try {
                const auto id = std::stoull(f[0]);
                auto [it, fresh] = index.emplace(id, runs.size());
                if (fresh) {
                    RunMetrics r;
                    r.run_id = id;
                    r.protocol = f[1];
                    r.n = std::stoull(f[2]);
                    r.delta = std::stod(f[3]);
                    r.seed = std::stoull(f[4]);
                    runs.push_back(std::move(r));
                }
                auto& m = runs[it->second].phases.phases[static_cast<std::size_t>(phase_from_string(f[5]))];
                m.rounds = std::stoull(f[6]);
                m.messages_sent = std::stoull(f[7]);
                m.messages_delivered = std::stoull(f[8]);
            } catch (const std::invalid_argument& e) {
                throw fail(std::string("bad field: ") + e.what());
            } catch (const std::out_of_range&) {
                throw fail("field out of range");
            }
        }
        return runs;
    }

    do {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "header") continue;
            if (kind != "run") throw fail("unknown record kind '" + kind + "'");
            RunMetrics r;
            r.run_id = j.at("run_id").get<std::uint64_t>();
            r.protocol = j.at("protocol").get<std::string>();
            r.topology = j.value("topology", "");
            r.n = j.at("n").get<std::size_t>();
            r.delta = j.at("delta").get<double>();
            r.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("correct") && !j["correct"].is_null()) r.correct = j["correct"].get<bool>();
            if (j.contains("max_relative_error") && !j["max_relative_error"].is_null()) {
                r.max_relative_error = j["max_relative_error"].get<double>();
            }
            for (const auto& [key, m] : j.at("phases").items()) {
                auto& dst = r.phases.phases[static_cast<std::size_t>(phase_from_string(key))];
                dst.rounds = m.at("rounds").get<std::uint64_t>();
                dst.messages_sent = m.at("msgs_sent").get<std::uint64_t>();
                dst.messages_delivered = m.at("msgs_delivered").get<std::uint64_t>();
            }
            runs.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw fail(std::string("malformed record: ") + e.what());
        } catch (const std::invalid_argument& e) {
            throw fail(e.what());
        }
    } while (++lineno, std::getline(in, line));
    return runs;
}

Stat describe(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("describe: empty input");
    // Sorted first, so sums and quantiles do not depend on input order.
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    Stat s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size()));
    s.min = v.front();
    s.max = v.back();
    s.q05 = quantile(v, 0.05);
    s.q25 = quantile(v, 0.25);
    s.median = quantile(v, 0.5);
    s.q75 = quantile(v, 0.75);
    s.q95 = quantile(v, 0.95);
    return s;
}

SweepSummary summarize(std::span<const RunMetrics> runs) {
    if (runs.empty()) throw std::invalid_argument("summarize: no runs");
    std::map<std::pair<std::string, std::size_t>, std::vector<const RunMetrics*>> groups;
    for (const auto& r : runs) groups[{r.protocol, r.n}].push_back(&r);

    SweepSummary out;
    for (auto& [key, members] : groups) {
        std::vector<std::pair<double, double>> rm;
        std::size_t known = 0, correct = 0;
        for (const RunMetrics* r : members) {
            const PhaseMeter t = r->totals();
            rm.emplace_back(static_cast<double>(t.rounds), static_cast<double>(t.messages_sent));
            if (r->correct) {
                ++known;
                if (*r->correct) ++correct;
            }
        }
        std::vector<double> rounds, msgs;
        for (auto [a, b] : rm) {
            rounds.push_back(a);
            msgs.push_back(b);
        }

        SummaryRow row;
        row.protocol = key.first;
        row.n = key.second;
        row.trials = members.size();
        row.rounds = describe(rounds);
        row.messages = describe(msgs);
        if (known > 0) row.correct_rate = static_cast<double>(correct) / static_cast<double>(known);
        const double n = static_cast<double>(row.n);
        row.msgs_per_n_loglog_n = ratio(row.messages.mean, regressor_value(Regressor::NLogLogN, n));
        row.msgs_per_n_log_n = ratio(row.messages.mean, regressor_value(Regressor::NLogN, n));
        row.rounds_per_log_n = ratio(row.rounds.mean, regressor_value(Regressor::LogN, n));
        row.rounds_per_log2_n = ratio(row.rounds.mean, regressor_value(Regressor::LogNSquared, n));
        out.rows.push_back(std::move(row));
    }
    return out;
}

void write_summary_csv(std::ostream& out, const SweepSummary& s) {
    out << "protocol,n,trials";
    for (const char* what : {"rounds", "msgs"}) {
        for (const char* stat : {"mean", "std", "min", "q05", "q25", "median", "q75", "q95", "max"}) {
            out << ',' << what << '_' << stat;
        }
    }
    out << ",correct_rate,msgs_per_n_loglog_n,msgs_per_n_log_n,rounds_per_log_n,rounds_per_log2_n\n";
    for (const auto& r : s.rows) {
        out << r.protocol << ',' << r.n << ',' << r.trials;
        for (const Stat* st : {&r.rounds, &r.messages}) {
            for (double v : {st->mean, st->std, st->min, st->q05, st->q25, st->median, st->q75, st->q95, st->max}) {
                out << ',' << fmt(v);
            }
        }
        out << ',' << (r.correct_rate ? fmt(*r.correct_rate) : std::string()) << ',' << fmt(r.msgs_per_n_loglog_n)
            << ',' << fmt(r.msgs_per_n_log_n) << ',' << fmt(r.rounds_per_log_n) << ',' << fmt(r.rounds_per_log2_n)
            << '\n';
    }
}

std::string_view to_string(Regressor r) {
    switch (r) {
        case Regressor::LogN: return "log2 n";
        case Regressor::LogLogN: return "log2 log2 n";
        case Regressor::LogNSquared: return "(log2 n)^2";
        case Regressor::N: return "n";
        case Regressor::NLogN: return "n log2 n";
        case Regressor::NLogLogN: return "n log2 log2 n";
    }
    return "?";
}

double regressor_value(Regressor r, double n) {
    const double l = std::log2(n);
    switch (r) {
        case Regressor::LogN: return l;
        case Regressor::LogLogN: return std::log2(l);
        case Regressor::LogNSquared: return l * l;
        case Regressor::N: return n;
        case Regressor::NLogN: return n * l;
        case Regressor::NLogLogN: return n * std::log2(l);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

FitResult least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !std::isfinite(sxx)) throw std::invalid_argument("fit: regressor values are degenerate");
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    // Rounding can leave a tiny residual on an exact fit.
    if (syy == 0.0 || ss_res <= 1e-24 * syy) {
        f.r2 = 1.0;
    } else {
        f.r2 = 1.0 - ss_res / syy;
    }
    return f;
}

void check_distinct(std::span<const std::pair<double, double>> points) {
    std::vector<double> ns;
    for (auto [n, y] : points) {
        if (!std::isfinite(y)) throw std::invalid_argument("fit: non-finite y");
        ns.push_back(n);
    }
    std::sort(ns.begin(), ns.end());
    if (std::unique(ns.begin(), ns.end()) - ns.begin() < 3) throw std::invalid_argument("fit: needs at least 3 distinct n");
}

}  // namespace

FitResult fit_growth(std::span<const std::pair<double, double>> points, Regressor r) {
    check_distinct(points);
    std::vector<double> x, y;
    for (auto [n, v] : points) {
        const double g = regressor_value(r, n);
        if (!std::isfinite(g)) throw std::invalid_argument("fit: regressor undefined at n = " + fmt(n));
        x.push_back(g);
        y.push_back(v);
    }
    return least_squares(x, y);
}

FitResult fit_log_power(std::span<const std::pair<double, double>> points) {
    check_distinct(points);
    std::vector<double> x, y;
    for (auto [n, v] : points) {
        if (!(n > 2.0) || !(v > 0.0)) throw std::invalid_argument("power fit needs n > 2 and y > 0");
        x.push_back(std::log(std::log2(n)));
        y.push_back(std::log(v));
    }
    return least_squares(x, y);
}

std::vector<ComparisonRow> comparison_table(const SweepSummary& s, std::string_view reference) {
    std::map<std::size_t, const SummaryRow*> ref;
    for (const auto& r : s.rows) {
        if (r.protocol == reference) ref[r.n] = &r;
    }
    std::vector<ComparisonRow> rows;
    for (const auto& r : s.rows) {
        ComparisonRow c;
        c.protocol = r.protocol;
        c.n = r.n;
        c.rounds_mean = r.rounds.mean;
        c.messages_mean = r.messages.mean;
        if (auto it = ref.find(r.n); it != ref.end()) {
            c.rounds_ratio = ratio(it->second->rounds.mean, r.rounds.mean);
            c.messages_ratio = ratio(it->second->messages.mean, r.messages.mean);
        }
        rows.push_back(std::move(c));
    }
    return rows;
}

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
    out << "protocol,n,rounds_mean,msgs_mean,rounds_ratio,msgs_ratio\n";
    for (const auto& r : rows) {
        out << r.protocol << ',' << r.n << ',' << fmt(r.rounds_mean) << ',' << fmt(r.messages_mean) << ','
            << (r.rounds_ratio ? fmt(*r.rounds_ratio) : std::string()) << ','
            << (r.messages_ratio ? fmt(*r.messages_ratio) : std::string()) << '\n';
    }
}

void print_comparison(std::ostream& out, std::span<const ComparisonRow> rows) {
    out << std::left << std::setw(18) << "protocol" << std::right << std::setw(8) << "n" << std::setw(12) << "rounds"
        << std::setw(14) << "messages" << std::setw(12) << "rounds x" << std::setw(12) << "msgs x" << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(18) << r.protocol << std::right << std::setw(8) << r.n << std::setw(12)
            << std::fixed << std::setprecision(1) << r.rounds_mean << std::setw(14) << r.messages_mean;
        out << std::setprecision(3);
        out << std::setw(12) << (r.rounds_ratio ? fmt(*r.rounds_ratio).substr(0, 6) : "-");
        out << std::setw(12) << (r.messages_ratio ? fmt(*r.messages_ratio).substr(0, 6) : "-") << '\n';
        out.unsetf(std::ios::fixed);
    }
}

}  // namespace drrg
