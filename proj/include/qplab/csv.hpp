#pragma once

// CSV and plain-text exports: comma separators, one header row, reals with
// 17 significant digits, LF line endings.

#include <fstream>
#include <string>
#include <vector>

#include "qplab/lattice.hpp"
#include "qplab/serialize.hpp"

namespace qplab {

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvWriter& cell(double x) { return cell_raw(fmt_real(x)); }
    CsvWriter& cell(int x) { return cell_raw(std::to_string(x)); }
    CsvWriter& cell(long x) { return cell_raw(std::to_string(x)); }
    CsvWriter& cell(const std::string& s) { return cell_raw(s); }
    CsvWriter& endrow() {
        rows_.push_back(current_);
        current_.clear();
        return *this;
    }

    void write(std::ostream& os) const {
        os << join(header_) << "\n";
        for (const auto& r : rows_) os << join(r) << "\n";
    }
    void write_file(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);  // keep LF endings everywhere
        if (!os) throw std::runtime_error("cannot open " + path);
        write(os);
    }

  private:
    CsvWriter& cell_raw(std::string s) {
        current_.push_back(std::move(s));
        return *this;
    }
    static std::string join(const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        return out;
    }
    std::vector<std::string> header_;
    std::vector<std::string> current_;
    std::vector<std::vector<std::string>> rows_;
};

// sparse triplet dump (row, col, re, im), zero entries skipped
inline void write_matrix_triplets(std::ostream& os, const Eigen::MatrixXcd& H) {
    os << "row col re im\n";
    for (Eigen::Index i = 0; i < H.rows(); ++i)
        for (Eigen::Index j = 0; j < H.cols(); ++j) {
            if (H(i, j) == Complex(0)) continue;
            os << i << " " << j << " " << fmt_real(H(i, j).real()) << " "
               << fmt_real(H(i, j).imag()) << "\n";
        }
}

inline CsvWriter eigenpair_csv(const std::vector<EigenPair>& pairs, bool with_vectors = false) {
    std::vector<std::string> header{"E", "residual"};
    if (with_vectors && !pairs.empty())
        for (Eigen::Index i = 0; i < pairs.front().u.size(); ++i) {
            header.push_back("re_u" + std::to_string(i));
            header.push_back("im_u" + std::to_string(i));
        }
    CsvWriter w(std::move(header));
    for (const auto& p : pairs) {
        w.cell(p.E).cell(p.residual);
        if (with_vectors)
            for (Eigen::Index i = 0; i < p.u.size(); ++i)
                w.cell(p.u(i).real()).cell(p.u(i).imag());
        w.endrow();
    }
    return w;
}

inline CsvWriter ids_csv(const EmpiricalIDS& ids) {
    CsvWriter w({"E", "value"});
    for (std::size_t g = 0; g < ids.energies.size(); ++g)
        w.cell(ids.energies[g]).cell(ids.values[g]).endrow();
    return w;
}

}  // namespace qplab
