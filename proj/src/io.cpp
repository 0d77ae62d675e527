#include "svgmrf/io.hpp"

#include "svgmrf/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace svgmrf {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    return in;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
    out.close();
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

bool try_parse_row(const std::vector<std::string>& fields, std::vector<double>& row) {
    row.clear();
    for (const auto& f : fields) {
        double v = 0.0;
        const char* end = f.data() + f.size();
        const auto res = std::from_chars(f.data(), end, v);
        if (f.empty() || res.ec != std::errc() || res.ptr != end) {
            return false;
        }
        row.push_back(v);
    }
    return true;
}

std::vector<std::vector<double>> read_numeric_rows(const fs::path& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        if (!try_parse_row(split_csv_line(line), row)) {
            if (first) {
                first = false;
                continue;
            }
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field");
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const char* end = t.data() + t.size();
    const auto res = std::from_chars(t.data(), end, v);
    if (t.empty() || res.ec != std::errc() || res.ptr != end) {
        throw InvalidArgument("not a number: '" + text + "'");
    }
    return v;
}

long long parse_integer(const std::string& text) {
    const std::string t = trim(text);
    long long v = 0;
    const char* end = t.data() + t.size();
    const auto res = std::from_chars(t.data(), end, v);
    if (t.empty() || res.ec != std::errc() || res.ptr != end) {
        throw InvalidArgument("not an integer: '" + text + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(text);
    while (std::getline(ss, field, sep)) {
        out.push_back(trim(field));
    }
    if (!text.empty() && text.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    return split(line, ',');
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
    const auto rows = read_numeric_rows(path);
    if (rows.empty()) {
        throw IoError(path.string() + ": no numeric rows");
    }
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
    }
    return m;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
    std::ofstream out = open_out(path);
    if (!header.empty()) {
        out << join(header, ",") << '\n';
    }
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            out << (c ? "," : "") << format_double(m(r, c));
        }
        out << '\n';
    }
    close_checked(out, path);
}

std::vector<Eigen::MatrixXd> read_clustered_csv(const fs::path& path) {
    const auto rows = read_numeric_rows(path);
    if (rows.empty() || rows.front().size() < 2) {
        throw IoError(path.string() + ": need a cluster column and at least one variable");
    }
    std::map<long long, std::vector<const std::vector<double>*>> groups;
    for (const auto& row : rows) {
        const double id = row.front();
        if (id < 0 || id != std::floor(id)) {
            throw IoError(path.string() + ": cluster ids must be nonnegative integers");
        }
        groups[static_cast<long long>(id)].push_back(&row);
    }
    if (groups.rbegin()->first != static_cast<long long>(groups.size()) - 1) {
        throw IoError(path.string() + ": cluster ids must cover 0..K-1");
    }
    const auto d = static_cast<Index>(rows.front().size() - 1);
    std::vector<Eigen::MatrixXd> out;
    for (const auto& [id, members] : groups) {
        Eigen::MatrixXd x(static_cast<Index>(members.size()), d);
        for (std::size_t r = 0; r < members.size(); ++r) {
            for (Index c = 0; c < d; ++c) {
                x(static_cast<Index>(r), c) = (*members[r])[static_cast<std::size_t>(c + 1)];
            }
        }
        out.push_back(std::move(x));
    }
    return out;
}

void write_clustered_csv(const fs::path& path, const std::vector<Eigen::MatrixXd>& samples) {
    std::ofstream out = open_out(path);
    if (samples.empty()) {
        throw InvalidArgument("no clusters to write");
    }
    out << "cluster";
    for (Index c = 0; c < samples.front().cols(); ++c) {
        out << ",x" << c;
    }
    out << '\n';
    for (std::size_t k = 0; k < samples.size(); ++k) {
        for (Index r = 0; r < samples[k].rows(); ++r) {
            out << k;
            for (Index c = 0; c < samples[k].cols(); ++c) {
                out << ',' << format_double(samples[k](r, c));
            }
            out << '\n';
        }
    }
    close_checked(out, path);
}

void write_edge_list(const fs::path& path, const Eigen::SparseMatrix<double>& m) {
    std::vector<std::tuple<Index, Index, double>> entries;
    for (Index col = 0; col < m.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
            if (it.row() <= it.col() && it.value() != 0.0) {
                entries.emplace_back(it.row(), it.col(), it.value());
            }
        }
    }
    std::sort(entries.begin(), entries.end());
    std::ofstream out = open_out(path);
    out << "i,j,value\n";
    for (const auto& [i, j, v] : entries) {
        out << i << ',' << j << ',' << format_double(v) << '\n';
    }
    close_checked(out, path);
}

void write_edge_list(const fs::path& path, const Eigen::MatrixXd& m) {
    write_edge_list(path, Eigen::SparseMatrix<double>(m.sparseView(0.0, 0.0)));
}

Eigen::MatrixXd read_edge_list(const fs::path& path, Index dimension) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dimension, dimension);
    for (const auto& row : read_numeric_rows(path)) {
        if (row.size() != 3) {
            throw IoError(path.string() + ": edge lines need i,j,value");
        }
        const auto i = static_cast<Index>(row[0]);
        const auto j = static_cast<Index>(row[1]);
        if (i < 0 || j < 0 || i >= dimension || j >= dimension || row[0] != static_cast<double>(i) ||
            row[1] != static_cast<double>(j)) {
            throw IoError(path.string() + ": edge index out of range");
        }
        m(i, j) = m(j, i) = row[2];
    }
    return m;
}

void Manifest::set(const std::string& key, const std::string& value) {
    if (key.empty() || key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
        value.find('\n') != std::string::npos) {
        throw InvalidArgument("manifest keys and values must be single-line and keys cannot contain '='");
    }
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Manifest::set(const std::string& key, double value) {
    set(key, format_double(value));
}

void Manifest::set(const std::string& key, long long value) {
    set(key, std::to_string(value));
}

bool Manifest::contains(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& Manifest::get(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            return v;
        }
    }
    throw IoError("manifest has no key '" + key + "'");
}

double Manifest::get_double(const std::string& key) const {
    return parse_double(get(key));
}

long long Manifest::get_integer(const std::string& key) const {
    return parse_integer(get(key));
}

void Manifest::write(const fs::path& path) const {
    std::ofstream out = open_out(path);
    for (const auto& [k, v] : entries_) {
        out << k << '=' << v << '\n';
    }
    close_checked(out, path);
}

Manifest Manifest::read(const fs::path& path) {
    std::ifstream in = open_in(path);
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw IoError(path.string() + ": manifest line without '='");
        }
        m.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return m;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        out += (i ? sep : "") + parts[i];
    }
    return out;
}

std::string join_doubles(const std::vector<double>& values, const std::string& sep) {
    std::vector<std::string> parts;
    for (const double v : values) {
        parts.push_back(format_double(v));
    }
    return join(parts, sep);
}

std::string join_indices(const std::vector<Index>& values, const std::string& sep) {
    std::vector<std::string> parts;
    for (const Index v : values) {
        parts.push_back(std::to_string(v));
    }
    return join(parts, sep);
}

void write_table_csv(const fs::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out = open_out(path);
    out << join(header, ",") << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw InvalidArgument("table row width does not match the header");
        }
        out << join(row, ",") << '\n';
    }
    close_checked(out, path);
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw IoError("table has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

Table read_table_csv(const fs::path& path) {
    std::ifstream in = open_in(path);
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_csv_line(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header.size()) {
                throw IoError(path.string() + ": row width does not match the header");
            }
            t.rows.push_back(std::move(fields));
        }
    }
    if (first) {
        throw IoError(path.string() + ": empty table");
    }
    return t;
}

std::string format_optional(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string("nan");
}

void write_bic_report(const fs::path& path, const BicReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
        const BicRow& row = report.rows[r];
        std::string df;
        for (std::size_t k = 0; k < row.bic.df.size(); ++k) {
            df += (k == 0 ? "" : ";") + std::to_string(row.bic.df[k]);
        }
        std::string reason = row.bic.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        rows.push_back({format_double(row.c1), format_double(row.c2), format_double(row.c3), format_double(row.mu),
                        format_double(row.gamma), join_doubles(row.nu, ";"),
                        row.bic.valid ? format_double(row.bic.score) : std::string("nan"),
                        row.bic.valid ? "1" : "0", df, reason,
                        r == report.selected ? "1" : "0"});
    }
    write_table_csv(path, {"c1", "c2", "c3", "mu", "gamma", "nu", "bic", "valid", "df", "reason", "selected"}, rows);
}

}  // namespace svgmrf
