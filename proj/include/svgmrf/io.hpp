#pragma once

#include "svgmrf/estimator.hpp"
#include "svgmrf/eval.hpp"
#include "svgmrf/tuning.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace svgmrf {

/// Shortest text that parses back to the same double.
std::string format_double(double value);

double parse_double(const std::string& text);
long long parse_integer(const std::string& text);

/// Splits on commas and trims surrounding whitespace from every field.
std::vector<std::string> split_csv_line(const std::string& line);

/// Numeric CSV, one matrix row per line. A first line that does not parse as
/// numbers is taken as a header and skipped. Blank lines are ignored.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});

/// Samples of all clusters in one file; the first column holds the cluster
/// id (0-based). Ids must cover 0..K-1.
std::vector<Eigen::MatrixXd> read_clustered_csv(const std::filesystem::path& path);

void write_clustered_csv(const std::filesystem::path& path, const std::vector<Eigen::MatrixXd>& samples);

/// "i,j,value" lines for every nonzero with i <= j, 0-based, sorted.
void write_edge_list(const std::filesystem::path& path, const Eigen::SparseMatrix<double>& m);
void write_edge_list(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Symmetric d x d matrix from an edge list.
Eigen::MatrixXd read_edge_list(const std::filesystem::path& path, Index dimension);

/// Ordered key=value text.
class Manifest {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);

    bool contains(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_integer(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    void write(const std::filesystem::path& path) const;
    static Manifest read(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string join_doubles(const std::vector<double>& values, const std::string& sep);
std::string join_indices(const std::vector<Index>& values, const std::string& sep);
std::vector<std::string> split(const std::string& text, char sep);

/// Plain CSV table; fields are written verbatim.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};

Table read_table_csv(const std::filesystem::path& path);

void write_bic_report(const std::filesystem::path& path, const BicReport& report);

std::string format_optional(const std::optional<double>& value);

}  // namespace svgmrf
