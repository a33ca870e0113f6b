#include "nullwave/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace nullwave {

double Vars::get(Var x) const {
  switch (x) {
    case Var::u: return u;
    case Var::v: return v;
    case Var::r: return r;
    case Var::t: return t;
  }
  return 0.0;
}

void Vars::set(Var x, double value) {
  switch (x) {
    case Var::u: u = value; break;
    case Var::v: v = value; break;
    case Var::r: r = value; break;
    case Var::t: t = value; break;
  }
}

enum class Kind { kNumber, kVariable, kNegate, kBinary, kCall };

struct Expression::Node {
  Kind kind;
  double value = 0.0;
  Var var = Var::u;
  char op = 0;            // + - * / ^ for binaries
  std::string function;   // for calls
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

const char* const kFunctions[] = {"sin", "cos", "exp", "log", "sqrt", "tanh"};

bool is_function(const std::string& name) {
  for (const char* f : kFunctions) {
    if (name == f) return true;
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip_space();
    if (pos_ < text_.size()) {
      fail(std::string("unexpected '") + text_[pos_] + "'");
    }
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw ParseError("syntax error at position " + std::to_string(pos_) +
                         ": " + what,
                     pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::kBinary;
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  static NodePtr negate(NodePtr a) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::kNegate;
    n->lhs = std::move(a);
    return n;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) {
        n = binary('+', n, term());
      } else if (accept('-')) {
        n = binary('-', n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) {
        n = binary('*', n, unary());
      } else if (accept('/')) {
        n = binary('/', n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return negate(unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr n = primary();
    while (accept('^')) {
      n = binary('^', n, exponent());
    }
    return n;
  }

  NodePtr exponent() {
    if (accept('-')) return negate(exponent());
    return primary();
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      std::string name(text_.substr(start, pos_ - start));
      if (is_function(name)) {
        if (!accept('(')) fail("expected '(' after " + name);
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::kCall;
        n->function = name;
        n->lhs = expr();
        if (!accept(')')) fail("expected ')'");
        return n;
      }
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::kVariable;
      if (name == "u") {
        n->var = Var::u;
      } else if (name == "v") {
        n->var = Var::v;
      } else if (name == "r") {
        n->var = Var::r;
      } else if (name == "t") {
        n->var = Var::t;
      } else {
        throw ParseError("unknown identifier '" + name + "' at position " +
                             std::to_string(start),
                         start);
      }
      return n;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t k = pos_ + 1;
      if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
      if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
        pos_ = k;
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          ++pos_;
        }
      }
    }
    const std::string lexeme(text_.substr(start, pos_ - start));
    char* end = nullptr;
    const double value = std::strtod(lexeme.c_str(), &end);
    if (end != lexeme.c_str() + lexeme.size()) {
      pos_ = start;
      fail("malformed number '" + lexeme + "'");
    }
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::kNumber;
    n->value = value;
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void print(const Expression::Node& n, std::string& out) {
  switch (n.kind) {
    case Kind::kNumber: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case Kind::kVariable:
      out += "uvrt"[static_cast<int>(n.var)];
      return;
    case Kind::kNegate:
      out += "(-";
      print(*n.lhs, out);
      out += ')';
      return;
    case Kind::kBinary:
      out += '(';
      print(*n.lhs, out);
      out += ' ';
      out += n.op;
      out += ' ';
      print(*n.rhs, out);
      out += ')';
      return;
    case Kind::kCall:
      out += n.function;
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
  }
}

bool same(const Expression::Node& a, const Expression::Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::kNumber:
      return a.value == b.value ||
             (std::isnan(a.value) && std::isnan(b.value));
    case Kind::kVariable:
      return a.var == b.var;
    case Kind::kNegate:
      return same(*a.lhs, *b.lhs);
    case Kind::kBinary:
      return a.op == b.op && same(*a.lhs, *b.lhs) && same(*a.rhs, *b.rhs);
    case Kind::kCall:
      return a.function == b.function && same(*a.lhs, *b.lhs);
  }
  return false;
}

}  // namespace

Expression::Expression() : Expression(nullptr, "0") {}

Expression::Expression(std::shared_ptr<const Node> root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {
  if (!root_) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::kNumber;
    root_ = n;
  }
  compile();
}

Expression Expression::parse(std::string_view text) {
  Parser p(text);
  return Expression(p.parse(), std::string(text));
}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kNumber;
  n->value = value;
  Expression e(n, "");
  e.source_ = e.to_string();
  return e;
}

void Expression::emit(const Node& n) {
  switch (n.kind) {
    case Kind::kNumber:
      program_.push_back({Op::kConst, 0, n.value});
      return;
    case Kind::kVariable:
      program_.push_back({Op::kVar, static_cast<unsigned char>(n.var), 0.0});
      uses_mask_ |= 1u << static_cast<unsigned>(n.var);
      return;
    case Kind::kNegate:
      emit(*n.lhs);
      program_.push_back({Op::kNeg});
      return;
    case Kind::kBinary: {
      emit(*n.lhs);
      emit(*n.rhs);
      Op op = Op::kAdd;
      switch (n.op) {
        case '+': op = Op::kAdd; break;
        case '-': op = Op::kSub; break;
        case '*': op = Op::kMul; break;
        case '/': op = Op::kDiv; break;
        case '^': op = Op::kPow; break;
      }
      program_.push_back({op});
      return;
    }
    case Kind::kCall: {
      emit(*n.lhs);
      Op op = Op::kSin;
      if (n.function == "cos") op = Op::kCos;
      else if (n.function == "exp") op = Op::kExp;
      else if (n.function == "log") op = Op::kLog;
      else if (n.function == "sqrt") op = Op::kSqrt;
      else if (n.function == "tanh") op = Op::kTanh;
      program_.push_back({op});
      return;
    }
  }
}

void Expression::compile() {
  program_.clear();
  uses_mask_ = 0;
  emit(*root_);
  int depth = 0;
  max_depth_ = 0;
  for (const auto& ins : program_) {
    if (ins.op == Op::kConst || ins.op == Op::kVar) {
      ++depth;
    } else if (ins.op >= Op::kAdd && ins.op <= Op::kPow) {
      --depth;
    }
    if (depth > max_depth_) max_depth_ = depth;
  }
}

double Expression::evaluate(const Vars& x) const {
  constexpr int kSmall = 32;
  double small[kSmall];
  std::vector<double> big;
  double* st = small;
  if (max_depth_ > kSmall) {
    big.resize(static_cast<std::size_t>(max_depth_));
    st = big.data();
  }
  const double vars[4] = {x.u, x.v, x.r, x.t};
  int sp = 0;
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::kConst: st[sp++] = ins.value; break;
      case Op::kVar: st[sp++] = vars[ins.var]; break;
      case Op::kNeg: st[sp - 1] = -st[sp - 1]; break;
      case Op::kAdd: --sp; st[sp - 1] += st[sp]; break;
      case Op::kSub: --sp; st[sp - 1] -= st[sp]; break;
      case Op::kMul: --sp; st[sp - 1] *= st[sp]; break;
      case Op::kDiv: --sp; st[sp - 1] /= st[sp]; break;
      case Op::kPow: --sp; st[sp - 1] = std::pow(st[sp - 1], st[sp]); break;
      case Op::kSin: st[sp - 1] = std::sin(st[sp - 1]); break;
      case Op::kCos: st[sp - 1] = std::cos(st[sp - 1]); break;
      case Op::kExp: st[sp - 1] = std::exp(st[sp - 1]); break;
      case Op::kLog: st[sp - 1] = std::log(st[sp - 1]); break;
      case Op::kSqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
      case Op::kTanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
    }
  }
  return st[0];
}

bool Expression::uses(Var x) const {
  return (uses_mask_ >> static_cast<unsigned>(x)) & 1u;
}

std::string Expression::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

bool Expression::same_tree(const Expression& other) const {
  return same(*root_, *other.root_);
}

}  // namespace nullwave
