#include "scf/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "scf/errors.hpp"

namespace scf {

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

ExprPtr make_const(double c) {
  Expr e;
  e.kind = Expr::Kind::constant;
  e.value = c;
  return make(e);
}

ExprPtr make_unary(Expr::Kind k, ExprPtr a) {
  Expr e;
  e.kind = k;
  e.lhs = std::move(a);
  return make(e);
}

ExprPtr make_binary(Expr::Kind k, ExprPtr a, ExprPtr b) {
  Expr e;
  e.kind = k;
  e.lhs = std::move(a);
  e.rhs = std::move(b);
  return make(e);
}

ExprPtr make_call(Expr::Fn f, ExprPtr a) {
  Expr e;
  e.kind = Expr::Kind::call;
  e.fn = f;
  e.lhs = std::move(a);
  return make(e);
}

struct Parser {
  const std::string& src;
  size_t pos = 0;

  explicit Parser(const std::string& s) : src(s) {}

  [[noreturn]] void error(const std::string& what, size_t at) {
    fail(errc::syntax_error,
         what + " at position " + std::to_string(at) + " in \"" + src + "\"");
  }

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool eof() {
    skip_ws();
    return pos >= src.size();
  }

  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  bool accept(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }

  ExprPtr parse() {
    if (eof()) error("empty expression", 0);
    ExprPtr e = sum();
    if (!eof()) error("unexpected trailing input", pos);
    return e;
  }

  ExprPtr sum() {
    ExprPtr e = term();
    while (true) {
      if (accept('+')) {
        e = make_binary(Expr::Kind::add, e, term());
      } else if (accept('-')) {
        e = make_binary(Expr::Kind::sub, e, term());
      } else {
        return e;
      }
    }
  }

  ExprPtr term() {
    ExprPtr e = unary();
    while (true) {
      if (accept('*')) {
        e = make_binary(Expr::Kind::mul, e, unary());
      } else if (accept('/')) {
        e = make_binary(Expr::Kind::div, e, unary());
      } else {
        return e;
      }
    }
  }

  ExprPtr unary() {
    if (accept('-')) return make_unary(Expr::Kind::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  ExprPtr power() {
    ExprPtr base = atom();
    if (accept('^')) {
      // right-associative exponent
      return make_binary(Expr::Kind::pow, base, unary());
    }
    return base;
  }

  ExprPtr atom() {
    skip_ws();
    if (pos >= src.size()) error("unexpected end of input", pos);
    char c = src[pos];

    if (c == '(') {
      size_t open = pos;
      ++pos;
      ExprPtr e = sum();
      if (!accept(')')) error("unclosed parenthesis", open);
      return check_no_juxtaposition(e);
    }

    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();

    error(std::string("unexpected character '") + c + "'", pos);
  }

  ExprPtr number() {
    size_t start = pos;
    double value = 0.0;
    const char* begin = src.data() + pos;
    const char* end = src.data() + src.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) error("malformed number", start);
    pos += static_cast<size_t>(ptr - begin);
    // "2u" style juxtaposition is rejected: a number may not be followed
    // directly by an identifier or '('.
    if (pos < src.size()) {
      char n = src[pos];
      if (std::isalpha(static_cast<unsigned char>(n)) || n == '_' || n == '(')
        error("implicit multiplication is not supported", pos);
    }
    return make_const(value);
  }

  ExprPtr check_no_juxtaposition(ExprPtr e) {
    if (pos < src.size()) {
      char n = src[pos];
      if (std::isalnum(static_cast<unsigned char>(n)) || n == '_' || n == '(')
        error("implicit multiplication is not supported", pos);
    }
    return e;
  }

  ExprPtr identifier() {
    size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    std::string name = src.substr(start, pos - start);

    if (name == "u") {
      Expr e;
      e.kind = Expr::Kind::var_u;
      return check_no_juxtaposition(make(e));
    }
    if (name == "v") {
      Expr e;
      e.kind = Expr::Kind::var_v;
      return check_no_juxtaposition(make(e));
    }
    if (name == "pi") return check_no_juxtaposition(make_const(M_PI));

    Expr::Fn fn;
    if (name == "sin") fn = Expr::Fn::sin;
    else if (name == "cos") fn = Expr::Fn::cos;
    else if (name == "exp") fn = Expr::Fn::exp;
    else if (name == "log") fn = Expr::Fn::log;
    else if (name == "sqrt") fn = Expr::Fn::sqrt;
    else
      fail(errc::unknown_identifier,
           "\"" + name + "\" at position " + std::to_string(start) + " in \"" + src + "\"");

    if (!accept('(')) error("expected '(' after function name", pos);
    ExprPtr arg = sum();
    if (!accept(')')) error("unclosed function argument", pos);
    return check_no_juxtaposition(make_call(fn, arg));
  }
};

const char* fn_name(Expr::Fn f) {
  switch (f) {
    case Expr::Fn::sin: return "sin";
    case Expr::Fn::cos: return "cos";
    case Expr::Fn::exp: return "exp";
    case Expr::Fn::log: return "log";
    case Expr::Fn::sqrt: return "sqrt";
  }
  return "?";
}

/// Exponent subtrees that are integral constants (possibly negated) use
/// exact integer powers, so negative bases stay evaluable.
bool integral_constant(const Expr& e, long* out) {
  if (e.kind == Expr::Kind::neg) {
    if (!integral_constant(*e.lhs, out)) return false;
    *out = -*out;
    return true;
  }
  if (e.kind != Expr::Kind::constant) return false;
  double r = std::round(e.value);
  if (std::abs(e.value - r) > 0.0 || std::abs(r) > 64) return false;
  *out = static_cast<long>(r);
  return true;
}

}  // namespace

ExprPtr parse_expr(const std::string& source) {
  if (source.empty()) fail(errc::syntax_error, "empty expression");
  Parser p(source);
  return p.parse();
}

Jet2 Expr::eval_jet(double u, double v) const {
  Jet2 r;
  switch (kind) {
    case Kind::constant: r = Jet2::constant(value); break;
    case Kind::var_u: r = Jet2::var_u(u); break;
    case Kind::var_v: r = Jet2::var_v(v); break;
    case Kind::neg: r = -lhs->eval_jet(u, v); break;
    case Kind::add: r = lhs->eval_jet(u, v) + rhs->eval_jet(u, v); break;
    case Kind::sub: r = lhs->eval_jet(u, v) - rhs->eval_jet(u, v); break;
    case Kind::mul: r = lhs->eval_jet(u, v) * rhs->eval_jet(u, v); break;
    case Kind::div: r = lhs->eval_jet(u, v) / rhs->eval_jet(u, v); break;
    case Kind::pow: {
      long k = 0;
      if (integral_constant(*rhs, &k)) {
        r = jet_powi(lhs->eval_jet(u, v), k);
      } else {
        r = jet_pow(lhs->eval_jet(u, v), rhs->eval_jet(u, v));
      }
      break;
    }
    case Kind::call: {
      Jet2 a = lhs->eval_jet(u, v);
      switch (fn) {
        case Fn::sin: r = jet_sin(a); break;
        case Fn::cos: r = jet_cos(a); break;
        case Fn::exp: r = jet_exp(a); break;
        case Fn::log: r = jet_log(a); break;
        case Fn::sqrt: r = jet_sqrt(a); break;
      }
      break;
    }
  }
  if (!r.finite())
    fail(errc::domain_error, "non-finite value in \"" + print() + "\" at (" +
                                 std::to_string(u) + ", " + std::to_string(v) + ")");
  return r;
}

std::string Expr::print() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::constant: {
      char buf[32];
      snprintf(buf, sizeof(buf), "%.17g", value);
      os << buf;
      break;
    }
    case Kind::var_u: os << "u"; break;
    case Kind::var_v: os << "v"; break;
    case Kind::neg: os << "(-" << lhs->print() << ")"; break;
    case Kind::add: os << "(" << lhs->print() << " + " << rhs->print() << ")"; break;
    case Kind::sub: os << "(" << lhs->print() << " - " << rhs->print() << ")"; break;
    case Kind::mul: os << "(" << lhs->print() << " * " << rhs->print() << ")"; break;
    case Kind::div: os << "(" << lhs->print() << " / " << rhs->print() << ")"; break;
    case Kind::pow: os << "(" << lhs->print() << " ^ " << rhs->print() << ")"; break;
    case Kind::call: os << fn_name(fn) << "(" << lhs->print() << ")"; break;
  }
  return os.str();
}

bool Expr::same_structure(const Expr& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case Kind::constant: return value == other.value;
    case Kind::var_u:
    case Kind::var_v: return true;
    case Kind::neg: return lhs->same_structure(*other.lhs);
    case Kind::call: return fn == other.fn && lhs->same_structure(*other.lhs);
    default:
      return lhs->same_structure(*other.lhs) && rhs->same_structure(*other.rhs);
  }
}

}  // namespace scf
