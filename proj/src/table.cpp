#include "rscdma/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rscdma
{

namespace
{

std::string csv_escape(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Cell &c)
{
    if (const auto *s = std::get_if<std::string>(&c))
        return *s;
    if (const auto *d = std::get_if<double>(&c))
        return format_double(*d);
    if (const auto *i = std::get_if<long long>(&c))
        return std::to_string(*i);
    return std::get<bool>(c) ? "true" : "false";
}

} // namespace

void Table::add(std::vector<Cell> row)
{
    if (row.size() != columns.size())
        throw std::logic_error("Table::add: row width does not match the header");
    rows.push_back(std::move(row));
}

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string to_csv(const Table &t)
{
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out += (i ? "," : "") + csv_escape(t.columns[i]);
    out += '\n';
    for (const auto &row : t.rows)
    {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + csv_escape(cell_text(row[i]));
        out += '\n';
    }
    return out;
}

std::string to_json(const Table &t)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto &row : t.rows)
    {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i)
        {
            const Cell &c = row[i];
            if (const auto *d = std::get_if<double>(&c))
                obj[t.columns[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);
            else if (const auto *s = std::get_if<std::string>(&c))
                obj[t.columns[i]] = *s;
            else if (const auto *n = std::get_if<long long>(&c))
                obj[t.columns[i]] = *n;
            else
                obj[t.columns[i]] = std::get<bool>(c);
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

void write_table(const Table &t, const std::string &path, const std::string &format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << (format == "json" ? to_json(t) : to_csv(t));
}

} // namespace rscdma
