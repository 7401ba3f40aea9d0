#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace relnn::frontend {

class FrontendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact rational arithmetic over int64; overflow throws.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
  std::string str() const;
};

Rational operator+(Rational a, Rational b);
Rational operator-(Rational a, Rational b);
Rational operator*(Rational a, Rational b);
Rational operator/(Rational a, Rational b);

// A compile-time scalar. Integers and plain decimals stay exact; exponent
// literals and sqrt results are doubles.
struct Scalar {
  bool exact = true;
  Rational q;
  double value = 0.0;

  static Scalar of(Rational q) { return {true, q, q.to_double()}; }
  static Scalar of(double v) { return {false, {}, v}; }
  static Scalar integer(std::int64_t v) { return of(Rational{v, 1}); }

  bool is_integer() const { return exact && q.is_integer(); }
  // Throws unless the value is an exact integer.
  std::int64_t as_integer(const std::string& what) const;
  std::string str() const;
};

Scalar apply(char op, const Scalar& a, const Scalar& b);
Scalar negate(const Scalar& a);

// Number literal text to scalar: "16" and "0.01" are exact, "5e-4" is not.
Scalar parse_number(const std::string& text);

}  // namespace relnn::frontend
