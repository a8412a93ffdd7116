#include "evfusion/feature_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace evfusion {

namespace {

std::vector<std::string> split_cells(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::optional<double> parse_number(const std::string& s)
{
    double x = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (!s.empty() && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc() || ptr != end || begin == end) {
        return std::nullopt;
    }
    return x;
}

struct Table {
    std::vector<std::vector<double>> rows;
    /// 1-based file line of each row, for error messages.
    std::vector<std::size_t> lines;
};

Table read_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataFormatError("cannot open " + path.string());
    }
    Table t;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_cells(line);
        std::vector<double> row;
        row.reserve(cells.size());
        bool numeric = true;
        for (const auto& c : cells) {
            const auto x = parse_number(c);
            if (!x) {
                numeric = false;
                break;
            }
            row.push_back(*x);
        }
        if (!numeric) {
            if (t.rows.empty() && line_no == 1) {
                continue;  // header
            }
            std::ostringstream os;
            os << path.string() << ": line " << line_no << " has a non-numeric cell";
            throw DataFormatError(os.str());
        }
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (!std::isfinite(row[j])) {
                std::ostringstream os;
                os << path.string() << ": non-finite value at row " << t.rows.size() << " (line " << line_no
                   << "), column " << j;
                throw DataFormatError(os.str());
            }
        }
        if (t.rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            std::ostringstream os;
            os << path.string() << ": line " << line_no << " has " << row.size() << " columns, expected " << width;
            throw DataFormatError(os.str());
        }
        t.rows.push_back(std::move(row));
        t.lines.push_back(line_no);
    }
    return t;
}

}  // namespace

MultimodalBatch load_feature_csv(const std::vector<std::filesystem::path>& feature_paths,
                                 const std::filesystem::path& label_path, std::size_t classes)
{
    if (feature_paths.empty()) {
        throw DataFormatError("no modality files given");
    }
    const Table labels = read_table(label_path);
    MultimodalBatch batch;
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < labels.rows.size(); ++i) {
        const auto& row = labels.rows[i];
        const double y = row.empty() ? -1.0 : row.front();
        if (row.size() != 1 || y < 0.0 || y != std::floor(y) || (classes > 0 && y >= static_cast<double>(classes))) {
            std::ostringstream os;
            os << label_path.string() << ": unknown label at line " << labels.lines[i]
               << " (expected one integer class id";
            if (classes > 0) {
                os << " in [0, " << classes << ")";
            }
            os << ")";
            throw DataFormatError(os.str());
        }
        batch.labels.push_back(static_cast<std::size_t>(y));
        max_label = std::max(max_label, batch.labels.back());
    }
    batch.classes = classes > 0 ? classes : max_label + 1;
    batch.conflict.assign(batch.labels.size(), false);

    for (const auto& path : feature_paths) {
        const Table t = read_table(path);
        if (t.rows.size() != batch.labels.size()) {
            std::ostringstream os;
            os << "row count mismatch: " << path.string() << " has " << t.rows.size() << " rows but "
               << label_path.string() << " has " << batch.labels.size();
            throw DataFormatError(os.str());
        }
        if (!batch.views.empty() && t.rows.size() != batch.views.front().rows()) {
            std::ostringstream os;
            os << "row count mismatch: " << path.string() << " vs " << feature_paths.front().string();
            throw DataFormatError(os.str());
        }
        const std::size_t cols = t.rows.empty() ? 0 : t.rows.front().size();
        if (cols == 0) {
            throw DataFormatError(path.string() + ": no feature columns");
        }
        Matrix x(t.rows.size(), cols);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            std::copy(t.rows[i].begin(), t.rows[i].end(), x.row(i).begin());
        }
        batch.views.push_back(std::move(x));
    }
    return batch;
}

void write_feature_csv(const MultimodalBatch& batch, const std::filesystem::path& dir, const std::string& prefix)
{
    batch.validate();
    std::filesystem::create_directories(dir);
    const auto open = [&](const std::string& name) {
        std::ofstream out(dir / name);
        if (!out) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        out << std::setprecision(17);
        return out;
    };
    for (std::size_t v = 0; v < batch.view_count(); ++v) {
        auto out = open(prefix + "_view" + std::to_string(v) + ".csv");
        const Matrix& x = batch.views[v];
        for (std::size_t j = 0; j < x.cols(); ++j) {
            out << (j ? "," : "") << 'f' << j;
        }
        out << '\n';
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                out << (j ? "," : "") << x(i, j);
            }
            out << '\n';
        }
    }
    auto labels = open(prefix + "_labels.csv");
    labels << "label\n";
    for (std::size_t y : batch.labels) {
        labels << y << '\n';
    }
    auto flags = open(prefix + "_conflict.csv");
    flags << "conflict\n";
    for (std::size_t i = 0; i < batch.samples(); ++i) {
        flags << (batch.conflict.empty() ? 0 : static_cast<int>(batch.conflict[i])) << '\n';
    }
}

}  // namespace evfusion
