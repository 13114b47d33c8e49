#pragma once

// Exact rational arithmetic on top of GMP, plus numbers of the form
// q * sqrt(r) with q, r rational.

#include <gmpxx.h>

#include <cctype>
#include <cmath>
#include <compare>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace msdecomp {

using Rational = mpq_class;
using Integer = mpz_class;

/// base^e for any integer exponent (base != 0 when e < 0).
inline Rational rpow(const Rational& base, long e) {
    Integer num, den;
    const unsigned long ue = static_cast<unsigned long>(e < 0 ? -e : e);
    mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), ue);
    mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), ue);
    Rational r;
    if (e >= 0) {
        r = Rational(num, den);
    } else {
        if (num == 0) throw std::domain_error("rpow: zero to a negative power");
        r = Rational(den, num);
    }
    r.canonicalize();
    return r;
}

/// Parses "p/q", an integer, or a plain decimal such as "-0.125" or "1e-3".
/// Decimals are converted exactly (no binary floating point involved).
inline Rational parse_rational(std::string_view text) {
    std::string s(text);
    auto trim = [](std::string& t) {
        while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
        std::size_t i = 0;
        while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
        t.erase(0, i);
    };
    trim(s);
    if (s.empty()) throw std::invalid_argument("empty rational");

    Rational r;
    if (s.find('/') != std::string::npos) {
        if (r.set_str(s, 10) != 0) throw std::invalid_argument("malformed rational: " + s);
        if (r.get_den() == 0) throw std::invalid_argument("zero denominator: " + s);
        r.canonicalize();
        return r;
    }

    std::string mantissa = s;
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
        mantissa = s.substr(0, e);
        const std::string ex = s.substr(e + 1);
        char* end = nullptr;
        exponent = std::strtol(ex.c_str(), &end, 10);
        if (ex.empty() || *end != '\0') throw std::invalid_argument("malformed exponent: " + s);
    }
    std::string digits;
    long frac_digits = 0;
    bool seen_point = false;
    for (std::size_t i = 0; i < mantissa.size(); ++i) {
        const char c = mantissa[i];
        if ((c == '-' || c == '+') && i == 0) {
            if (c == '-') digits.push_back('-');
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            if (seen_point) ++frac_digits;
        } else {
            throw std::invalid_argument("malformed number: " + s);
        }
    }
    if (digits.empty() || digits == "-") throw std::invalid_argument("malformed number: " + s);
    Integer n(digits, 10);
    r = Rational(n) * rpow(Rational(10), exponent - frac_digits);
    r.canonicalize();
    return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(10); }

/// Exact square root of a non-negative rational, when it exists.
inline std::optional<Rational> exact_sqrt(const Rational& r) {
    if (sgn(r) < 0) return std::nullopt;
    if (mpz_perfect_square_p(r.get_num_mpz_t()) == 0 || mpz_perfect_square_p(r.get_den_mpz_t()) == 0)
        return std::nullopt;
    Integer n, d;
    mpz_sqrt(n.get_mpz_t(), r.get_num_mpz_t());
    mpz_sqrt(d.get_mpz_t(), r.get_den_mpz_t());
    Rational s(n, d);
    s.canonicalize();
    return s;
}

/// coef * sqrt(radicand), radicand >= 0. Closed under products and quotients,
/// which is all the sequence-space construction needs.
struct Surd {
    Rational coef{0};
    Rational radicand{1};

    Surd() = default;
    Surd(const Rational& c) : coef(c), radicand(1) {}
    Surd(const Rational& c, const Rational& rad) : coef(c), radicand(rad) {
        if (sgn(radicand) < 0) throw std::domain_error("Surd: negative radicand");
        normalize();
    }

    static Surd sqrt_of(const Rational& r) { return Surd(Rational(1), r); }

    void normalize() {
        if (sgn(coef) == 0 || sgn(radicand) == 0) {
            coef = 0;
            radicand = 1;
            return;
        }
        if (auto s = exact_sqrt(radicand)) {
            coef *= *s;
            radicand = 1;
        }
    }

    int sign() const { return sgn(coef); }
    bool is_zero() const { return sgn(coef) == 0; }
    /// Value squared, with sign: sign(coef) * coef^2 * radicand.
    Rational signed_square() const {
        Rational s = coef * coef * radicand;
        return sign() < 0 ? Rational(-s) : s;
    }
    Rational square() const { return coef * coef * radicand; }
    std::optional<Rational> as_rational() const {
        if (radicand == 1) return coef;
        return std::nullopt;
    }
    Surd abs() const { return Surd(::abs(coef), radicand); }
    double to_double() const { return coef.get_d() * std::sqrt(radicand.get_d()); }

    friend Surd operator*(const Surd& a, const Surd& b) {
        return Surd(a.coef * b.coef, a.radicand * b.radicand);
    }
    friend Surd operator/(const Surd& a, const Surd& b) {
        if (b.is_zero()) throw std::domain_error("Surd: division by zero");
        // a / (c sqrt r) = a * sqrt(r) / (c r)
        return Surd(a.coef / (b.coef * b.radicand), a.radicand * b.radicand);
    }
    friend Surd operator-(const Surd& a) { return Surd(-a.coef, a.radicand); }
    friend bool operator==(const Surd& a, const Surd& b) { return a.signed_square() == b.signed_square(); }
    friend std::strong_ordering operator<=>(const Surd& a, const Surd& b) {
        const int c = cmp(a.signed_square(), b.signed_square());
        return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
    }

    std::string str() const {
        if (radicand == 1) return to_string(coef);
        return to_string(coef) + "*sqrt(" + to_string(radicand) + ")";
    }
};

} // namespace msdecomp
