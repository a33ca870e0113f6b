#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nullwave {

enum class Var { u = 0, v = 1, r = 2, t = 3 };

/// Values of the four expression variables at one point. r and t are
/// supplied by the caller from the active background (t = u + v).
struct Vars {
  double u = 0.0;
  double v = 0.0;
  double r = 0.0;
  double t = 0.0;

  double get(Var x) const;
  void set(Var x, double value);
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  /// Zero-based character offset of the error in the input.
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Arithmetic expression over u, v, r, t.
///
/// Grammar, loosest first: + - (left), * / (left), unary -, ^ (left),
/// then numbers, variables, calls sin cos exp log sqrt tanh, and
/// parentheses. A unary minus is also accepted directly after ^, so
/// "r^-2" parses as r^(-2).
class Expression {
 public:
  struct Node;

  Expression();  // the constant 0
  static Expression parse(std::string_view text);
  static Expression constant(double value);

  double evaluate(const Vars& x) const;
  bool uses(Var x) const;
  bool is_constant() const { return uses_mask_ == 0; }

  /// Fully parenthesised form; parse(to_string()) gives the same tree.
  std::string to_string() const;

  /// Structural equality of the syntax trees.
  bool same_tree(const Expression& other) const;

  const std::string& source() const { return source_; }

 private:
  enum class Op : unsigned char {
    kConst, kVar, kNeg, kAdd, kSub, kMul, kDiv, kPow,
    kSin, kCos, kExp, kLog, kSqrt, kTanh
  };
  struct Instr {
    Op op;
    unsigned char var = 0;
    double value = 0.0;
  };

  explicit Expression(std::shared_ptr<const Node> root, std::string source);
  void compile();
  void emit(const Node& n);

  std::shared_ptr<const Node> root_;
  std::string source_;
  std::vector<Instr> program_;
  int max_depth_ = 0;
  unsigned uses_mask_ = 0;
};

}  // namespace nullwave
