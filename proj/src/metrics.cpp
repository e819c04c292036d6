#include "pinnmeta/metrics.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/format.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <memory>

namespace pinnmeta {

const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> c = {
        "schema", "run_id", "phase", "arm", "task_index", "task", "epoch", "l_pde", "l_data",
        "l_gam", "l_support", "l_query", "field_mse", "status", "wall_ms"};
    return c;
}

std::string csv_header(const std::vector<std::string>& columns) {
    std::string s;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        s += (i ? "," : "") + columns[i];
    }
    return s;
}

std::string csv_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string to_csv(const MetricsRow& r) {
    std::string s = std::to_string(kMetricsSchema);
    auto add = [&](const std::string& cell) {
        s += ',';
        s += cell;
    };
    add(r.run_id);
    add(r.phase);
    add(r.arm);
    add(r.task_index ? std::to_string(*r.task_index) : "");
    add(r.task);
    add(std::to_string(r.epoch));
    add(csv_cell(r.l_pde));
    add(csv_cell(r.l_data));
    add(csv_cell(r.l_gam));
    add(csv_cell(r.l_support));
    add(csv_cell(r.l_query));
    add(csv_cell(r.field_mse));
    add(r.status);
    add(format_double(r.wall_ms));
    return s;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : path_(path), os_(path, std::ios::binary | std::ios::trunc) {
    if (!os_) {
        throw std::runtime_error("cannot write " + path);
    }
    os_ << csv_header(columns) << '\n';
    os_.flush();
}

void CsvWriter::write_line(const std::string& line) {
    const std::lock_guard<std::mutex> lock(mu_);
    os_ << line << '\n';
    os_.flush();
    if (!os_) {
        throw std::runtime_error("write failed on " + path_);
    }
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) {
            return i;
        }
    }
    throw UsageError("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path);
    }
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) {
        throw UsageError(path + ": empty CSV");
    }
    t.columns = split(line, ',');
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        auto cells = split(line, ',');
        if (cells.size() != t.columns.size()) {
            throw UsageError(path + ": row with " + std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(t.columns.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path);
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 unavailable");
    }
    std::array<char, 1 << 16> buf{};
    while (is) {
        is.read(buf.data(), buf.size());
        if (is.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

} // namespace pinnmeta
