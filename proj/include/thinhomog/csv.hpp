#pragma once

#include <string>
#include <vector>

namespace thinhomog {

// Deterministic CSV accumulator: 17 significant digits, '\n' endings, no locale.
class Csv {
public:
    explicit Csv(std::vector<std::string> header);

    static std::string num(double v);

    void add_row(const std::vector<std::string>& cells);
    void add_numeric_row(const std::vector<double>& cells);

    std::size_t rows() const { return rows_; }
    const std::string& str() const { return body_; }
    void write(const std::string& path) const;

private:
    std::size_t columns_;
    std::size_t rows_ = 0;
    std::string body_;
};

} // namespace thinhomog
