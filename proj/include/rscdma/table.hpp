#pragma once

#include <string>
#include <variant>
#include <vector>

namespace rscdma
{

using Cell = std::variant<std::string, double, long long, bool>;

/// Column-ordered record set written as CSV or JSON.
struct Table
{
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

/// Shortest round-trip decimal form; "nan" / "inf" for non-finite values.
std::string format_double(double v);

std::string to_csv(const Table &t);
std::string to_json(const Table &t);

/// Writes `t` to `path` in `format` (csv or json).
void write_table(const Table &t, const std::string &path, const std::string &format);

} // namespace rscdma
