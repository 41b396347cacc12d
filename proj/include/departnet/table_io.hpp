#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace departnet {

// Minimal reader for the comma-separated artifact files written by this
// project: a required header, no quoting, one record per line.
class CsvReader {
public:
    CsvReader(std::istream& in, std::vector<std::string> header, std::string what);

    bool next();
    [[nodiscard]] std::string_view field(std::size_t i) const { return fields_.at(i); }
    [[nodiscard]] std::string text(std::size_t i) const { return std::string(field(i)); }
    [[nodiscard]] int as_int(std::size_t i) const;
    [[nodiscard]] double as_double(std::size_t i) const;
    [[nodiscard]] std::optional<double> as_optional_double(std::size_t i) const;
    [[nodiscard]] bool as_bool(std::size_t i) const;
    [[nodiscard]] std::size_t line() const { return line_no_; }

private:
    [[noreturn]] void fail(const std::string& message) const;

    std::istream& in_;
    std::string what_;
    std::size_t columns_;
    std::string line_;
    std::vector<std::string_view> fields_;
    std::size_t line_no_ = 0;
};

// Round-trippable decimal text for a double.
std::string format_double(double value);

}  // namespace departnet
