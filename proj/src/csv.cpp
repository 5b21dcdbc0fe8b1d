#include "thinhomog/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace thinhomog {

Csv::Csv(std::vector<std::string> header) : columns_(header.size()) {
    if (columns_ == 0) throw std::invalid_argument("csv: empty header");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) body_ += ',';
        body_ += header[i];
    }
    body_ += '\n';
}

std::string Csv::num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void Csv::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::invalid_argument("csv: row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) body_ += ',';
        body_ += cells[i];
    }
    body_ += '\n';
    ++rows_;
}

void Csv::add_numeric_row(const std::vector<double>& cells) {
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (double v : cells) text.push_back(num(v));
    add_row(text);
}

void Csv::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("csv: cannot open " + path);
    out << body_;
    if (!out) throw std::runtime_error("csv: write failed for " + path);
}

} // namespace thinhomog
