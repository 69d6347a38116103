#include "zonempc/scenario.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "zonempc/errors.hpp"
#include "zonempc/timeutil.hpp"

namespace zonempc {

namespace {

constexpr const char* kHeader =
    "timestamp,zone,tout_c,tin_c,tin_pred_c,p_w,occ_true,occ_pred,mode";

double parse_double(const std::string& s, long line) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw ParseError("bad numeric field '" + s + "'", line);
    }
    return v;
}

int parse_count(const std::string& s, long line) {
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || v < 0) {
        throw ParseError("bad occupant count '" + s + "'", line);
    }
    return static_cast<int>(v);
}

std::vector<std::string> split_row(const std::string& row) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(row);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!row.empty() && row.back() == ',') out.push_back("");
    return out;
}

} // namespace

ScenarioLog make_log(const std::vector<std::string>& zone_names,
                     std::int64_t start_s, double step_s, long n_steps,
                     const std::string& mode) {
    if (zone_names.empty() || n_steps < 0 || !(step_s > 0.0)) {
        throw std::invalid_argument("make_log: bad shape");
    }
    ScenarioLog log;
    log.start_s = start_s;
    log.step_s = step_s;
    log.mode = mode;
    log.zone_names = zone_names;
    log.tout_c.assign(n_steps, 0.0);
    size_t nz = zone_names.size();
    log.tin_c.assign(nz, std::vector<double>(n_steps, 0.0));
    log.tin_pred_c.assign(nz, std::vector<double>(n_steps, 0.0));
    log.p_w.assign(nz, std::vector<double>(n_steps, 0.0));
    log.occ_true.assign(nz, std::vector<int>(n_steps, 0));
    log.occ_pred.assign(nz, std::vector<double>(n_steps, 0.0));
    return log;
}

void export_csv(const ScenarioLog& log, const std::string& path) {
    size_t nz = log.zone_names.size();
    long n = log.size();
    auto ragged = [&](const auto& cols) {
        if (cols.size() != nz) return true;
        for (const auto& c : cols)
            if (static_cast<long>(c.size()) != n) return true;
        return false;
    };
    if (ragged(log.tin_c) || ragged(log.tin_pred_c) || ragged(log.p_w) ||
        ragged(log.occ_true) || ragged(log.occ_pred)) {
        throw std::invalid_argument("export_csv: ragged log columns");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open scenario CSV for writing", path);
    out << kHeader << "\n";
    char buf[320];
    for (long i = 0; i < n; ++i) {
        std::string ts = format_iso8601(log.time_at(i));
        for (size_t z = 0; z < nz; ++z) {
            std::snprintf(buf, sizeof buf,
                          "%s,%s,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%s\n",
                          ts.c_str(), log.zone_names[z].c_str(), log.tout_c[i],
                          log.tin_c[z][i], log.tin_pred_c[z][i], log.p_w[z][i],
                          log.occ_true[z][i], log.occ_pred[z][i],
                          log.mode.c_str());
            out << buf;
        }
    }
    if (!out.good()) throw IoError("short write on scenario CSV", path);
}

ScenarioLog import_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scenario CSV", path);
    std::string row;
    if (!std::getline(in, row)) {
        throw SchemaError("scenario CSV is empty: " + path);
    }
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row != kHeader) {
        throw SchemaError("scenario CSV has wrong header: " + path);
    }

    struct Row {
        std::int64_t ts;
        std::string zone;
        double tout, tin, tin_pred, p, occ_pred;
        int occ_true;
        std::string mode;
    };
    std::vector<Row> rows;
    long line = 1;
    while (std::getline(in, row)) {
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;
        auto f = split_row(row);
        if (f.size() != 9) {
            throw ParseError("expected 9 fields, got " +
                                 std::to_string(f.size()),
                             line);
        }
        Row r;
        try {
            r.ts = parse_iso8601(f[0]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), line);
        }
        r.zone = f[1];
        r.tout = parse_double(f[2], line);
        r.tin = parse_double(f[3], line);
        r.tin_pred = parse_double(f[4], line);
        r.p = parse_double(f[5], line);
        r.occ_true = parse_count(f[6], line);
        r.occ_pred = parse_double(f[7], line);
        r.mode = f[8];
        rows.push_back(std::move(r));
    }

    ScenarioLog log;
    if (rows.empty()) return log;

    // Zone list = rows sharing the first timestamp, in file order.
    size_t nz = 0;
    while (nz < rows.size() && rows[nz].ts == rows[0].ts) ++nz;
    for (size_t a = 0; a < nz; ++a) {
        for (size_t b = a + 1; b < nz; ++b) {
            if (rows[a].zone == rows[b].zone) {
                throw SchemaError("duplicate zone '" + rows[a].zone +
                                  "' within one step");
            }
        }
    }
    if (rows.size() % nz != 0) {
        throw SchemaError("scenario CSV: incomplete final step group");
    }
    long n = static_cast<long>(rows.size() / nz);
    log.start_s = rows[0].ts;
    log.mode = rows[0].mode;
    for (size_t z = 0; z < nz; ++z) log.zone_names.push_back(rows[z].zone);
    if (n > 1) {
        double step = static_cast<double>(rows[nz].ts - rows[0].ts);
        if (!(step > 0)) throw SchemaError("scenario CSV: non-increasing "
                                           "timestamps");
        log.step_s = step;
    }
    log.tout_c.assign(n, 0.0);
    log.tin_c.assign(nz, std::vector<double>(n, 0.0));
    log.tin_pred_c.assign(nz, std::vector<double>(n, 0.0));
    log.p_w.assign(nz, std::vector<double>(n, 0.0));
    log.occ_true.assign(nz, std::vector<int>(n, 0));
    log.occ_pred.assign(nz, std::vector<double>(n, 0.0));

    for (long i = 0; i < n; ++i) {
        std::int64_t want_ts = log.time_at(i);
        for (size_t z = 0; z < nz; ++z) {
            const Row& r = rows[i * nz + z];
            if (r.ts != want_ts) {
                throw SchemaError("scenario CSV: non-uniform timestamp step "
                                  "at " + format_iso8601(r.ts));
            }
            if (r.zone != log.zone_names[z]) {
                throw SchemaError("scenario CSV: zone order changes at " +
                                  format_iso8601(r.ts));
            }
            if (r.mode != log.mode) {
                throw SchemaError("scenario CSV mixes mode strings");
            }
            if (z == 0) {
                log.tout_c[i] = r.tout;
            } else if (r.tout != log.tout_c[i]) {
                throw SchemaError("scenario CSV: tout_c disagrees across "
                                  "zones at " + format_iso8601(r.ts));
            }
            log.tin_c[z][i] = r.tin;
            log.tin_pred_c[z][i] = r.tin_pred;
            log.p_w[z][i] = r.p;
            log.occ_true[z][i] = r.occ_true;
            log.occ_pred[z][i] = r.occ_pred;
        }
    }
    return log;
}

} // namespace zonempc
