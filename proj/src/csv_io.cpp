#include "npbandit/csv_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "npbandit/errors.hpp"

namespace npbandit::csv {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::vector<std::vector<double>> read_numeric(const std::filesystem::path& path, bool skip_header) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header_pending = skip_header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        std::vector<double> row;
        for (const auto& cell : split(line)) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidArgument(fmt::format("'{}': non-numeric cell '{}'", path.string(), cell));
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_double(double value) { return fmt::format("{}", value); }

}  // namespace npbandit::csv
