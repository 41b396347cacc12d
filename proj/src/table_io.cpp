#include "departnet/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <istream>

#include "departnet/core.hpp"

namespace departnet {

CsvReader::CsvReader(std::istream& in, std::vector<std::string> header, std::string what)
    : in_(in), what_(std::move(what)), columns_(header.size()) {
    std::string expected;
    for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
    if (!std::getline(in_, line_)) throw DataError(what_ + ": empty file");
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (line_ != expected) throw DataError(what_ + ": expected header '" + expected + "', found '" + line_ + "'");
}

bool CsvReader::next() {
    while (std::getline(in_, line_)) {
        ++line_no_;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        if (line_.empty()) continue;
        fields_.clear();
        std::string_view view(line_);
        std::size_t start = 0;
        while (true) {
            auto pos = view.find(',', start);
            if (pos == std::string_view::npos) {
                fields_.push_back(view.substr(start));
                break;
            }
            fields_.push_back(view.substr(start, pos - start));
            start = pos + 1;
        }
        if (fields_.size() != columns_)
            fail("expected " + std::to_string(columns_) + " fields, found " + std::to_string(fields_.size()));
        return true;
    }
    return false;
}

void CsvReader::fail(const std::string& message) const {
    throw DataError(what_ + " line " + std::to_string(line_no_) + ": " + message);
}

int CsvReader::as_int(std::size_t i) const {
    auto f = field(i);
    int value = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc{} || ptr != f.data() + f.size()) fail("invalid integer '" + std::string(f) + "'");
    return value;
}

double CsvReader::as_double(std::size_t i) const {
    auto v = as_optional_double(i);
    if (!v) fail("missing number in column " + std::to_string(i));
    return *v;
}

std::optional<double> CsvReader::as_optional_double(std::size_t i) const {
    auto f = field(i);
    if (f.empty()) return std::nullopt;
    std::string copy(f);
    char* end = nullptr;
    const double v = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size()) fail("invalid number '" + copy + "'");
    return v;
}

bool CsvReader::as_bool(std::size_t i) const {
    auto f = field(i);
    if (f == "1" || f == "true") return true;
    if (f == "0" || f == "false") return false;
    fail("invalid flag '" + std::string(f) + "'");
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace departnet
