#pragma once

// Text documents for the core value types and the binary conjugacy
// container. Documents are JSON; reals print with 17 significant digits so
// a write/read cycle is bit-exact. Parsing goes through the type
// constructors, so invariant violations surface as the usual errors.

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "qplab/decaying_symbol.hpp"
#include "qplab/frequency.hpp"
#include "qplab/reduce.hpp"
#include "qplab/trig_poly.hpp"

namespace qplab {

inline std::string fmt_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Minimal JSON emitter that keeps control of number formatting.
class JsonDoc {
  public:
    JsonDoc& key(const std::string& k) {
        comma();
        out_ << '"' << k << "\":";
        pending_ = false;
        return *this;
    }
    JsonDoc& begin_object() { return open('{'); }
    JsonDoc& end_object() { return close('}'); }
    JsonDoc& begin_array() { return open('['); }
    JsonDoc& end_array() { return close(']'); }
    JsonDoc& value(double x) { return token(fmt_real(x)); }
    JsonDoc& value(int x) { return token(std::to_string(x)); }
    JsonDoc& value(long x) { return token(std::to_string(x)); }
    JsonDoc& value(std::uint64_t x) { return token(std::to_string(x)); }
    JsonDoc& value(bool b) { return token(b ? "true" : "false"); }
    JsonDoc& value(const std::string& s) {
        std::string esc;
        for (char c : s) {
            if (c == '"' || c == '\\') esc += '\\';
            esc += c;
        }
        return token("\"" + esc + "\"");
    }
    JsonDoc& value(const char* s) { return value(std::string(s)); }
    // splice a pre-rendered JSON document in value position
    JsonDoc& raw_document(const std::string& json_text) { return token(json_text); }
    std::string str() const { return out_.str(); }

  private:
    JsonDoc& open(char c) {
        comma();
        out_ << c;
        pending_ = false;
        return *this;
    }
    JsonDoc& close(char c) {
        out_ << c;
        pending_ = true;
        return *this;
    }
    JsonDoc& token(const std::string& t) {
        comma();
        out_ << t;
        pending_ = true;
        return *this;
    }
    void comma() {
        if (pending_) out_ << ',';
        pending_ = false;
    }
    std::ostringstream out_;
    bool pending_ = false;
};

inline std::string to_document(const TrigPoly& v) {
    JsonDoc d;
    d.begin_object().key("type").value("trig_poly").key("degree").value(v.degree());
    d.key("coeffs").begin_array();
    for (int k = -v.degree(); k <= v.degree(); ++k) {
        Complex c = v.coeff(k);
        d.begin_array().value(k).value(c.real()).value(c.imag()).end_array();
    }
    d.end_array().end_object();
    return d.str();
}

inline std::string to_document(const DecayingSymbol& w) {
    JsonDoc d;
    d.begin_object().key("type").value("decaying_symbol");
    d.key("dimension").value(w.dimension()).key("radius").value(w.radius());
    d.key("decay_C").value(w.decay_C()).key("decay_c").value(w.decay_c());
    d.key("coeffs").begin_array();
    for (const auto& [k, c] : w.coeffs()) {  // map order is lexicographic in k
        d.begin_array().begin_array();
        for (int ki : k) d.value(ki);
        d.end_array().value(c.real()).value(c.imag()).end_array();
    }
    d.end_array().end_object();
    return d.str();
}

inline std::string to_document(const Frequency& a) {
    JsonDoc d;
    d.begin_object().key("type").value("frequency").key("alpha").begin_array();
    for (int i = 0; i < a.dimension(); ++i) d.value(a[i]);
    d.end_array().end_object();
    return d.str();
}

inline TrigPoly parse_trig_poly(const nlohmann::json& j) {
    if (j.value("type", "") != "trig_poly") throw std::invalid_argument("not a trig_poly document");
    int degree = j.at("degree").get<int>();
    std::vector<Complex> coeffs((std::size_t)(2 * degree + 1), Complex(0));
    for (const auto& row : j.at("coeffs")) {
        int k = row.at(0).get<int>();
        if (std::abs(k) > degree) throw std::invalid_argument("trig_poly: mode beyond degree");
        coeffs[(std::size_t)(k + degree)] = Complex(row.at(1).get<double>(),
                                                    row.at(2).get<double>());
    }
    return TrigPoly(degree, std::move(coeffs));
}

inline DecayingSymbol parse_decaying_symbol(const nlohmann::json& j) {
    if (j.value("type", "") != "decaying_symbol")
        throw std::invalid_argument("not a decaying_symbol document");
    int d = j.at("dimension").get<int>();
    int R = j.at("radius").get<int>();
    DecayingSymbol::CoeffMap m;
    for (const auto& row : j.at("coeffs")) {
        MultiIndex k;
        for (const auto& ki : row.at(0)) k.push_back(ki.get<int>());
        m[k] = Complex(row.at(1).get<double>(), row.at(2).get<double>());
    }
    return DecayingSymbol(d, R, std::move(m), j.value("decay_C", 0.0), j.value("decay_c", 0.0));
}

inline Frequency parse_frequency(const nlohmann::json& j) {
    if (j.value("type", "") != "frequency") throw std::invalid_argument("not a frequency document");
    std::vector<double> a;
    for (const auto& x : j.at("alpha")) a.push_back(x.get<double>());
    return Frequency(std::move(a));
}

// ---- conjugacy container ------------------------------------------------
// Binary layout, little-endian doubles: magic "QPCJ", u32 version, i32
// size, K, d, mode count; per mode d i32 components then size*size (re, im)
// pairs in column-major order; then size (re, im) exponent pairs, residual,
// condition, u8 converged, i32 iterations.

namespace detail {

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw std::runtime_error("conjugacy container: truncated stream");
    return v;
}

}  // namespace detail

inline void write_conjugacy(std::ostream& os, const ConjugacyData& c) {
    os.write("QPCJ", 4);
    detail::put<std::uint32_t>(os, 1);
    const int m = (int)c.rho.size();
    detail::put<std::int32_t>(os, m);
    detail::put<std::int32_t>(os, c.B.truncation());
    detail::put<std::int32_t>(os, c.B.dimension());
    detail::put<std::int32_t>(os, (std::int32_t)c.B.coeffs().size());
    for (const auto& [k, mat] : c.B.coeffs()) {
        for (int ki : k) detail::put<std::int32_t>(os, ki);
        for (int col = 0; col < m; ++col)
            for (int row = 0; row < m; ++row) {
                detail::put<double>(os, mat(row, col).real());
                detail::put<double>(os, mat(row, col).imag());
            }
    }
    for (const auto& r : c.rho) {
        detail::put<double>(os, r.real());
        detail::put<double>(os, r.imag());
    }
    detail::put<double>(os, c.residual);
    detail::put<double>(os, c.condition);
    detail::put<std::uint8_t>(os, c.converged ? 1 : 0);
    detail::put<std::int32_t>(os, c.iterations);
}

inline ConjugacyData read_conjugacy(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "QPCJ")
        throw std::runtime_error("conjugacy container: bad magic");
    if (detail::get<std::uint32_t>(is) != 1)
        throw std::runtime_error("conjugacy container: unknown version");
    int m = detail::get<std::int32_t>(is);
    int K = detail::get<std::int32_t>(is);
    int d = detail::get<std::int32_t>(is);
    int n_modes = detail::get<std::int32_t>(is);
    ConjugacyData c;
    c.B = FourierSeries<Eigen::MatrixXcd>(d, K);
    for (int i = 0; i < n_modes; ++i) {
        MultiIndex k((std::size_t)d);
        for (int a = 0; a < d; ++a) k[(std::size_t)a] = detail::get<std::int32_t>(is);
        Eigen::MatrixXcd mat(m, m);
        for (int col = 0; col < m; ++col)
            for (int row = 0; row < m; ++row) {
                double re = detail::get<double>(is);
                double im = detail::get<double>(is);
                mat(row, col) = Complex(re, im);
            }
        c.B.set(k, std::move(mat));
    }
    c.rho.resize((std::size_t)m);
    for (auto& r : c.rho) {
        double re = detail::get<double>(is);
        double im = detail::get<double>(is);
        r = Complex(re, im);
    }
    c.residual = detail::get<double>(is);
    c.condition = detail::get<double>(is);
    c.converged = detail::get<std::uint8_t>(is) != 0;
    c.iterations = detail::get<std::int32_t>(is);
    return c;
}

inline std::string conjugacy_summary(const ConjugacyData& c) {
    std::ostringstream os;
    os << "conjugacy " << (c.converged ? "converged" : "did not converge") << " after "
       << c.iterations << " iterations\n";
    os << "residual  " << fmt_real(c.residual) << "\n";
    os << "condition " << fmt_real(c.condition) << "\n";
    if (!c.failure.empty()) os << "failure   " << c.failure << "\n";
    os << "exponents (Re rho in [0,1), Im rho):\n";
    for (std::size_t j = 0; j < c.rho.size(); ++j)
        os << "  rho_" << j + 1 << " = " << fmt_real(c.rho[j].real()) << "  "
           << fmt_real(c.rho[j].imag()) << "\n";
    return os.str();
}

}  // namespace qplab
