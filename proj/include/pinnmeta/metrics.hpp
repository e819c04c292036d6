#pragma once

// Versioned CSV records and run manifests.
//
// Metrics CSV (schema 1), one row per (task, logged epoch):
//   schema,run_id,phase,arm,task_index,task,epoch,l_pde,l_data,l_gam,
//   l_support,l_query,field_mse,status,wall_ms
// Inapplicable cells are empty. Numbers use the shortest round-trip form, so
// reruns produce identical bytes apart from wall_ms.

#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pinnmeta {

inline constexpr int kMetricsSchema = 1;

struct MetricsRow {
    std::string run_id;
    std::string phase; // meta-train | fine-tune | denoise-noisy | denoise-corrected
    std::string arm;
    std::optional<int> task_index;
    std::string task; // task record, empty for batch aggregates
    int epoch = 0;
    std::optional<double> l_pde;
    std::optional<double> l_data;
    std::optional<double> l_gam;
    std::optional<double> l_support;
    std::optional<double> l_query;
    std::optional<double> field_mse;
    std::string status = "ok";
    double wall_ms = 0.0;
};

const std::vector<std::string>& metrics_columns();
std::string csv_header(const std::vector<std::string>& columns);
std::string to_csv(const MetricsRow& row);
std::string csv_cell(const std::optional<double>& v);

// Appends lines to a CSV file; one writer per file, calls serialized.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);
    void write_line(const std::string& line);
    void write(const MetricsRow& row) { write_line(to_csv(row)); }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream os_;
    std::mutex mu_;
};

// Minimal CSV reader for files written by CsvWriter (no quoting).
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    // Index of `column`; throws UsageError naming it when absent.
    std::size_t column(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

} // namespace pinnmeta
