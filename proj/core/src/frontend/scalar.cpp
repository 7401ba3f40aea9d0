#include "relnn/frontend/scalar.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "relnn/relmodel/relation.hpp"

namespace relnn::frontend {

namespace {

void overflow() { throw FrontendError("integer overflow in constant arithmetic"); }

std::int64_t mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) overflow();
  return r;
}

std::int64_t add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) overflow();
  return r;
}

}  // namespace

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw FrontendError("division by zero in constant arithmetic");
  if (den < 0) {
    num = mul(num, -1);
    den = mul(den, -1);
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational operator+(Rational a, Rational b) {
  return Rational::make(add(mul(a.num, b.den), mul(b.num, a.den)), mul(a.den, b.den));
}
Rational operator-(Rational a, Rational b) { return a + Rational{mul(b.num, -1), b.den}; }
Rational operator*(Rational a, Rational b) { return Rational::make(mul(a.num, b.num), mul(a.den, b.den)); }
Rational operator/(Rational a, Rational b) {
  if (b.num == 0) throw FrontendError("division by zero in constant arithmetic");
  return Rational::make(mul(a.num, b.den), mul(a.den, b.num));
}

std::int64_t Scalar::as_integer(const std::string& what) const {
  if (!is_integer()) throw FrontendError(what + " must be an integer, got " + str());
  return q.num;
}

std::string Scalar::str() const { return exact ? q.str() : rel::format_double(value); }

Scalar apply(char op, const Scalar& a, const Scalar& b) {
  if (a.exact && b.exact) {
    switch (op) {
      case '+': return Scalar::of(a.q + b.q);
      case '-': return Scalar::of(a.q - b.q);
      case '*': return Scalar::of(a.q * b.q);
      case '/': return Scalar::of(a.q / b.q);
      default: break;
    }
  } else {
    switch (op) {
      case '+': return Scalar::of(a.value + b.value);
      case '-': return Scalar::of(a.value - b.value);
      case '*': return Scalar::of(a.value * b.value);
      case '/':
        if (b.value == 0.0) throw FrontendError("division by zero in constant arithmetic");
        return Scalar::of(a.value / b.value);
      default: break;
    }
  }
  throw FrontendError(std::string("operator '") + op + "' is not defined on constants");
}

Scalar negate(const Scalar& a) {
  return a.exact ? Scalar::of(Rational{0, 1} - a.q) : Scalar::of(-a.value);
}

Scalar parse_number(const std::string& text) {
  if (text.find_first_of("eE") != std::string::npos) return Scalar::of(std::strtod(text.c_str(), nullptr));
  const auto dot = text.find('.');
  if (dot == std::string::npos) {
    Rational q{0, 1};
    for (char c : text) q = q * Rational{10, 1} + Rational{c - '0', 1};
    return Scalar::of(q);
  }
  Rational q{0, 1};
  std::int64_t den = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i == dot) continue;
    q = q * Rational{10, 1} + Rational{text[i] - '0', 1};
    if (i > dot) den = mul(den, 10);
  }
  return Scalar::of(q / Rational{den, 1});
}

}  // namespace relnn::frontend
